//! Hidden Markov baseline allocator.
//!
//! States are {BaseStation, CellularUser, Pair}. Observations are
//! `(application, SINR bucket)` symbols. The allocator walks the state chain
//! to pick a cellular user and draws the pair's SINR from the trained
//! emission table instead of evaluating geometry.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;

use crate::channel::{db_to_linear, linear_to_db, Channel};
use crate::error::{Error, Result};
use crate::metrics::{pair_throughput, IterationResult};
use crate::sbrra::{AllocationDecision, AllocationPolicy, Application, IterationInput, ScenarioState, ShareRecord};
use crate::scalar::Scalar;

/// Walks longer than this leave the pair unserved.
pub const MAX_WALK_STEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HmmState {
    BaseStation,
    CellularUser,
    Pair,
}

impl HmmState {
    pub const ALL: [HmmState; 3] = [HmmState::BaseStation, HmmState::CellularUser, HmmState::Pair];

    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            HmmState::BaseStation => "BaseStation",
            HmmState::CellularUser => "CellularUser",
            HmmState::Pair => "Pair",
        }
    }
}

impl FromStr for HmmState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HmmState::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| Error::Hmm(format!("unknown state `{s}`")))
    }
}

/// SINR buckets of fixed width in dB. The first and last buckets are open
/// ended; each bucket is represented by its midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBuckets<T> {
    pub start_db: T,
    pub width_db: T,
    pub count: usize,
}

impl<T: Scalar> Default for SinrBuckets<T> {
    fn default() -> Self {
        Self { start_db: T::zero(), width_db: T::lit(10.0), count: 8 }
    }
}

impl<T: Scalar> SinrBuckets<T> {
    pub fn bucket_of_db(&self, sinr_db: T) -> usize {
        let raw = ((sinr_db - self.start_db) / self.width_db).floor();
        if !(raw > T::zero()) {
            return 0;
        }
        raw.to_usize().map_or(self.count - 1, |b| b.min(self.count - 1))
    }

    pub fn representative_db(&self, bucket: usize) -> T {
        self.start_db + self.width_db * (T::from_count(bucket) + T::lit(0.5))
    }
}

/// Maps `(application, bucket)` to a dense symbol index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationAlphabet<T> {
    pub buckets: SinrBuckets<T>,
}

impl<T: Scalar> ObservationAlphabet<T> {
    pub fn new(buckets: SinrBuckets<T>) -> Self {
        Self { buckets }
    }

    pub fn len(&self) -> usize {
        Application::ALL.len() * self.buckets.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn symbol(&self, app: Application, bucket: usize) -> usize {
        app.index() * self.buckets.count + bucket
    }

    pub fn decode(&self, symbol: usize) -> (Application, usize) {
        (Application::ALL[symbol / self.buckets.count], symbol % self.buckets.count)
    }

    pub fn observe(&self, app: Application, sinr_linear: T) -> usize {
        self.symbol(app, self.buckets.bucket_of_db(linear_to_db(sinr_linear)))
    }
}

/// Probability model `{π, A, B}` over the three states.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel<T> {
    pub prior: [T; 3],
    pub transition: [[T; 3]; 3],
    /// One row per state over the observation alphabet.
    pub emission: [Vec<T>; 3],
}

const ROW_TOL: f64 = 1e-9;

fn row_sums_to_one<T: Scalar>(row: &[T]) -> bool {
    let s = row.iter().fold(T::zero(), |a, &p| a + p);
    row.iter().all(|&p| p >= T::zero() && p <= T::one()) && (s - T::one()).abs().as_f64() <= ROW_TOL
}

impl<T: Scalar> HmmModel<T> {
    /// Default dynamics: BS-initiated prior, the reference demand/response
    /// transition table, uniform emissions over `n_symbols`.
    pub fn with_default_dynamics(n_symbols: usize) -> Self {
        let l = T::lit;
        Self {
            prior: [T::one(), T::zero(), T::zero()],
            transition: [[l(0.02), l(0.8), l(0.18)], [l(0.19), l(0.01), l(0.8)], [l(0.18), l(0.8), l(0.02)]],
            emission: std::array::from_fn(|_| vec![T::one() / T::from_count(n_symbols); n_symbols]),
        }
    }

    pub fn n_symbols(&self) -> usize {
        self.emission[0].len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.emission.iter().any(|r| r.is_empty() || r.len() != self.n_symbols()) {
            return Err(Error::Hmm("emission rows must be non-empty and equally long".into()));
        }
        let named = std::iter::once(("prior".to_string(), &self.prior[..]))
            .chain(
                HmmState::ALL.iter().map(|s| (format!("transition.{}", s.as_str()), &self.transition[s.index()][..])),
            )
            .chain(HmmState::ALL.iter().map(|s| (format!("emission.{}", s.as_str()), &self.emission[s.index()][..])));
        for (name, row) in named {
            if !row_sums_to_one(row) {
                return Err(Error::Hmm(format!("row {name} is not a probability vector")));
            }
        }
        Ok(())
    }

    /// `π[q₁] · Π a[qₙ, qₙ₊₁]`.
    pub fn path_probability(&self, path: &[HmmState]) -> Result<T> {
        let (first, rest) = path.split_first().ok_or_else(|| Error::Hmm("empty state path".into()))?;
        let mut p = self.prior[first.index()];
        let mut prev = *first;
        for &s in rest {
            p = p * self.transition[prev.index()][s.index()];
            prev = s;
        }
        Ok(p)
    }

    fn emit(&self, s: HmmState, x: usize) -> Result<T> {
        self.emission[s.index()]
            .get(x)
            .copied()
            .ok_or_else(|| Error::Hmm(format!("observation symbol {x} outside alphabet of {}", self.n_symbols())))
    }

    /// `Π P(xₙ | qₙ)`.
    pub fn path_observation_likelihood(&self, path: &[HmmState], obs: &[usize]) -> Result<T> {
        if path.len() != obs.len() {
            return Err(Error::Hmm(format!(
                "path length {} differs from observation length {}",
                path.len(),
                obs.len()
            )));
        }
        path.iter().zip(obs).try_fold(T::one(), |acc, (&s, &x)| Ok(acc * self.emit(s, x)?))
    }

    /// Forward recursion over the trellis.
    pub fn sequence_likelihood(&self, obs: &[usize]) -> Result<T> {
        let (first, rest) = obs.split_first().ok_or_else(|| Error::Hmm("empty observation sequence".into()))?;
        let mut alpha = [T::zero(); 3];
        for s in HmmState::ALL {
            alpha[s.index()] = self.prior[s.index()] * self.emit(s, *first)?;
        }
        for &x in rest {
            let mut next = [T::zero(); 3];
            for to in HmmState::ALL {
                let into = HmmState::ALL
                    .iter()
                    .fold(T::zero(), |acc, from| acc + alpha[from.index()] * self.transition[from.index()][to.index()]);
                next[to.index()] = into * self.emit(to, x)?;
            }
            alpha = next;
        }
        Ok(alpha.iter().fold(T::zero(), |a, &v| a + v))
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, from: HmmState, rng: &mut R) -> HmmState {
        HmmState::ALL[sample_index(&self.transition[from.index()], rng)]
    }

    pub fn sample_emission<R: Rng + ?Sized>(&self, state: HmmState, rng: &mut R) -> usize {
        sample_index(&self.emission[state.index()], rng)
    }

    /// Re-estimates emissions (and optionally `π`, `A`) from state-labelled
    /// sequences by add-one smoothed frequency counts.
    pub fn train(&self, corpus: &[Vec<(HmmState, usize)>], reestimate_dynamics: bool) -> Result<Self> {
        if corpus.iter().all(|seq| seq.is_empty()) {
            return Err(Error::Hmm("empty training set".into()));
        }
        let m = self.n_symbols();
        let mut emit = [vec![1u64; m], vec![1u64; m], vec![1u64; m]];
        let mut prior = [1u64; 3];
        let mut trans = [[1u64; 3]; 3];
        for seq in corpus {
            for (i, &(s, x)) in seq.iter().enumerate() {
                let slot = emit[s.index()]
                    .get_mut(x)
                    .ok_or_else(|| Error::Hmm(format!("training symbol {x} outside alphabet of {m}")))?;
                *slot += 1;
                if i == 0 {
                    prior[s.index()] += 1;
                } else {
                    trans[seq[i - 1].0.index()][s.index()] += 1;
                }
            }
        }
        let normalize = |counts: &[u64]| -> Vec<T> {
            let total = T::from_u64(counts.iter().sum()).unwrap();
            counts.iter().map(|&c| T::from_u64(c).unwrap() / total).collect()
        };
        let mut out = self.clone();
        out.emission = emit.map(|row| normalize(&row));
        if reestimate_dynamics {
            let p = normalize(&prior);
            out.prior = [p[0], p[1], p[2]];
            for (i, row) in trans.iter().enumerate() {
                let r = normalize(row);
                out.transition[i] = [r[0], r[1], r[2]];
            }
        }
        Ok(out)
    }

    /// Header line with state names, then one labelled row per line.
    pub fn to_text(&self) -> String {
        let mut s = String::from("states");
        for st in HmmState::ALL {
            let _ = write!(s, " {}", st.as_str());
        }
        s.push('\n');
        let mut row = |label: &str, vals: &[T]| {
            s.push_str(label);
            for v in vals {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        };
        row("prior", &self.prior);
        for st in HmmState::ALL {
            row(&format!("transition.{}", st.as_str()), &self.transition[st.index()]);
        }
        for st in HmmState::ALL {
            row(&format!("emission.{}", st.as_str()), &self.emission[st.index()]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Hmm("missing header".into()))?;
        let names: Vec<&str> = header.split_whitespace().collect();
        let expected: Vec<&str> = std::iter::once("states").chain(HmmState::ALL.iter().map(|s| s.as_str())).collect();
        if names != expected {
            return Err(Error::Hmm(format!("unexpected header `{header}`")));
        }
        let mut prior = None;
        let mut transition: [Option<[T; 3]>; 3] = [None; 3];
        let mut emission: [Option<Vec<T>>; 3] = [None, None, None];
        for line in lines {
            let mut parts = line.split_whitespace();
            let label = parts.next().unwrap_or_default();
            let vals = parts
                .map(|v| v.parse::<T>().map_err(|_| Error::Hmm(format!("bad probability `{v}` in row {label}"))))
                .collect::<Result<Vec<T>>>()?;
            let triple = |v: &[T]| -> Result<[T; 3]> {
                <[T; 3]>::try_from(v).map_err(|_| Error::Hmm(format!("row {label} needs 3 values")))
            };
            match label.split_once('.') {
                None if label == "prior" => prior = Some(triple(&vals)?),
                Some(("transition", st)) => transition[st.parse::<HmmState>()?.index()] = Some(triple(&vals)?),
                Some(("emission", st)) => emission[st.parse::<HmmState>()?.index()] = Some(vals),
                _ => return Err(Error::Hmm(format!("unknown row label `{label}`"))),
            }
        }
        let missing = |what: &str| Error::Hmm(format!("missing row {what}"));
        let model = Self {
            prior: prior.ok_or_else(|| missing("prior"))?,
            transition: [
                transition[0].ok_or_else(|| missing("transition.BaseStation"))?,
                transition[1].ok_or_else(|| missing("transition.CellularUser"))?,
                transition[2].ok_or_else(|| missing("transition.Pair"))?,
            ],
            emission: {
                let [a, b, c] = emission;
                [
                    a.ok_or_else(|| missing("emission.BaseStation"))?,
                    b.ok_or_else(|| missing("emission.CellularUser"))?,
                    c.ok_or_else(|| missing("emission.Pair"))?,
                ]
            },
        };
        model.validate()?;
        Ok(model)
    }
}

fn sample_index<T: Scalar, R: Rng + ?Sized>(weights: &[T], rng: &mut R) -> usize {
    let total: f64 = weights.iter().map(|w| w.as_f64()).sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w.as_f64();
        if u < acc {
            return i;
        }
    }
    // rounding left u at the top edge: last index with positive weight
    weights.iter().rposition(|w| w.as_f64() > 0.0).unwrap_or(weights.len() - 1)
}

/// Runs one HMM-baseline iteration. Shares are drawn from the ledger so RB
/// accounting matches the SBRRA engine, but no reuse carry is credited and
/// SINR comes from the model, not from geometry.
pub fn hmm_allocate<T: Scalar, R: Rng + ?Sized>(
    mut state: ScenarioState<T>,
    input: IterationInput<'_, T>,
    ch: &Channel<T>,
    policy: &AllocationPolicy,
    model: &HmmModel<T>,
    alphabet: &ObservationAlphabet<T>,
    rng: &mut R,
) -> Result<(IterationResult<T>, ScenarioState<T>)> {
    let dep = input.deployment;
    if input.demands.len() < dep.d() {
        return Err(Error::Contract(format!("{} demands for {} pairs", input.demands.len(), dep.d())));
    }
    if model.n_symbols() != alphabet.len() {
        return Err(Error::Hmm(format!("model has {} symbols, alphabet {}", model.n_symbols(), alphabet.len())));
    }
    let n = state.iteration + 1;
    state.ledger.ensure_slots(dep.c(), n);
    state.ledger.replenish(n);

    let beta = ch.cfg.rb_bandwidth_hz;
    let threshold = ch.cfg.sinr_threshold_linear();
    let p_max = ch.cfg.p_d2d_max_w();
    let mut decisions = Vec::with_capacity(dep.d());
    let mut throughput = vec![T::zero(); dep.d()];
    for (idx, pair) in dep.pairs.iter().enumerate() {
        let app = input.demands[idx];
        let k = policy.rb_demand(app);
        let mut cur = HmmState::BaseStation;
        let mut chosen = None;
        let mut done = false;
        for _ in 0..MAX_WALK_STEPS {
            cur = model.sample_next(cur, rng);
            match cur {
                HmmState::CellularUser if chosen.is_none() => {
                    let capable: Vec<usize> =
                        (0..dep.c()).filter(|&cu| state.ledger.can_share(cu, k, policy.share_rule)).collect();
                    if capable.is_empty() {
                        break;
                    }
                    chosen = Some(capable[rng.random_range(0..capable.len())]);
                }
                HmmState::Pair if chosen.is_some() => {
                    done = true;
                    break;
                }
                _ => {}
            }
        }
        let Some(cu) = chosen.filter(|_| done) else {
            decisions.push(AllocationDecision::unserved(pair.id, app, k));
            continue;
        };
        let pre = state.ledger.share(cu, k, policy.share_rule)?;
        let row = &model.emission[HmmState::Pair.index()];
        let weights: Vec<T> = (0..alphabet.buckets.count).map(|b| row[alphabet.symbol(app, b)]).collect();
        let bucket = sample_index(&weights, rng);
        let sinr = db_to_linear(alphabet.buckets.representative_db(bucket));
        let own = pair_throughput(sinr, k, beta);
        state.ledger.record(
            cu,
            ShareRecord {
                iteration: n,
                pair_id: pair.id,
                k,
                sinr_per_rb: sinr,
                pre_share_holdings: pre,
                reported_bps: own,
            },
        );
        let mut d = AllocationDecision::unserved(pair.id, app, k);
        d.partner = Some(cu);
        d.pre_share_holdings = Some(pre);
        d.tx_power_per_rb_w = p_max / T::from_u32(k).unwrap();
        d.sinr_per_rb = Some(sinr);
        d.feasible = sinr >= threshold;
        d.credited_shares = vec![(n, pair.id)];
        decisions.push(d);
        throughput[idx] = own;
    }

    let result = IterationResult::assemble(n, decisions, throughput.clone(), throughput, false, dep.c())?;
    state.iteration = n;
    state.deployment = Some(dep.clone());
    Ok((result, state))
}

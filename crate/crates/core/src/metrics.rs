//! Throughput, cross-iteration aggregation, MOS and the interference-based
//! complexity figure.

use crate::channel::linear_to_db;
use crate::error::{Error, Result};
use crate::harness::plan::SimulationPlan;
use crate::interference::InterferenceBreakdown;
use crate::sbrra::ledger::ShareRecord;
use crate::sbrra::AllocationDecision;
use crate::scalar::Scalar;

/// Shannon throughput summed over RBs, `Σ β·log2(1 + sinr_rb)`.
pub fn throughput_from_rb_sinrs<T: Scalar>(rb_sinrs: &[T], beta_hz: T) -> T {
    rb_sinrs.iter().fold(T::zero(), |acc, &s| acc + beta_hz * (T::one() + s).log2())
}

/// Throughput of a pair holding `k` RBs with the same SINR on each (flat channel).
pub fn pair_throughput<T: Scalar>(sinr_linear: T, k: u32, beta_hz: T) -> T {
    (0..k).fold(T::zero(), |acc, _| acc + beta_hz * (T::one() + sinr_linear).log2())
}

/// The one place bps become kbps.
pub fn bps_to_kbps<T: Scalar>(bps: T) -> T {
    bps / T::lit(1000.0)
}

/// Mean opinion score from throughput in kbps:
/// `5 − 578 / (1 + ((T + 541.1) / 45.98)²)`. Not clamped; `mos(0) ≈ 0.856`.
pub fn mos<T: Scalar>(throughput_kbps: T) -> Result<T> {
    if !(throughput_kbps >= T::zero()) {
        return Err(Error::Domain(format!("MOS needs a non-negative throughput, got {throughput_kbps}")));
    }
    let x = (throughput_kbps + T::lit(541.1)) / T::lit(45.98);
    Ok(T::lit(5.0) - T::lit(578.0) / (T::one() + x * x))
}

/// Result of aggregating one cellular user's sharing history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate<T> {
    pub total_bps: T,
    /// Index into the history where the unbroken reuse chain starts.
    pub chain_start: usize,
    /// True when an earlier part of the history was cut off by a broken chain.
    pub reset: bool,
}

/// Index of the first record of the reuse chain that ends at the last record.
///
/// The chain links iteration `n` to `n - 1` when the cellular user shared in
/// both and the first share of iteration `n` found at least `r/2` RBs.
pub fn chain_start<T: Scalar>(history: &[ShareRecord<T>], n_rb: u32) -> usize {
    let mut start = 0;
    for i in 1..history.len() {
        let (prev, cur) = (&history[i - 1], &history[i]);
        if cur.iteration == prev.iteration {
            continue;
        }
        let consecutive = cur.iteration == prev.iteration + 1;
        let eligible = 2 * cur.pre_share_holdings >= n_rb;
        if !(consecutive && eligible) {
            start = i;
        }
    }
    start
}

/// Aggregated throughput of a cellular user's reuse chain: the sum over
/// iterations, over the pairs served in each, over their RBs, of
/// `β·log2(1 + SINR)`. Records must be in chronological order.
pub fn aggregate_throughput<T: Scalar>(history: &[ShareRecord<T>], n_rb: u32, beta_hz: T) -> Aggregate<T> {
    let start = chain_start(history, n_rb);
    let total_bps = history[start..]
        .iter()
        .fold(T::zero(), |acc, rec| (0..rec.k).fold(acc, |acc, _| acc + beta_hz * (T::one() + rec.sinr_per_rb).log2()));
    Aggregate { total_bps, chain_start: start, reset: start > 0 }
}

/// Aggregate interference power over the served pairs of one iteration.
pub fn complexity_metric<'a, T: Scalar>(breakdowns: impl IntoIterator<Item = &'a InterferenceBreakdown<T>>) -> T {
    breakdowns.into_iter().fold(T::zero(), |acc, b| acc + b.total_w)
}

/// Outcome of one pair in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome<T> {
    pub decision: AllocationDecision<T>,
    /// Throughput earned on this iteration's RBs alone.
    pub standalone_bps: T,
    /// Reported throughput, including any aggregated reuse chain.
    pub throughput_bps: T,
    pub mos: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationResult<T> {
    pub iteration: u32,
    pub outcomes: Vec<PairOutcome<T>>,
    /// Sum of reported pair throughputs.
    pub iteration_total_bps: T,
    pub unserved: Vec<usize>,
    /// Aggregate interference over served pairs; `None` when the allocator
    /// never evaluated the geometry.
    pub complexity_w: Option<T>,
    pub n_pairs: usize,
    pub n_cellular: usize,
}

impl<T: Scalar> IterationResult<T> {
    pub(crate) fn assemble(
        iteration: u32,
        decisions: Vec<AllocationDecision<T>>,
        standalone: Vec<T>,
        reported: Vec<T>,
        geometric: bool,
        n_cellular: usize,
    ) -> Result<Self> {
        let unserved = decisions.iter().filter(|d| !d.served()).map(|d| d.pair_id).collect();
        let complexity_w = geometric.then(|| complexity_metric(decisions.iter().filter_map(|d| d.breakdown.as_ref())));
        let outcomes = decisions
            .into_iter()
            .zip(standalone.into_iter().zip(reported))
            .map(|(decision, (standalone_bps, throughput_bps))| {
                Ok(PairOutcome { mos: mos(bps_to_kbps(throughput_bps))?, decision, standalone_bps, throughput_bps })
            })
            .collect::<Result<Vec<_>>>()?;
        let iteration_total_bps = outcomes.iter().fold(T::zero(), |acc, o| acc + o.throughput_bps);
        let n_pairs = outcomes.len();
        Ok(Self { iteration, outcomes, iteration_total_bps, unserved, complexity_w, n_pairs, n_cellular })
    }

    pub fn served(&self) -> impl Iterator<Item = &PairOutcome<T>> {
        self.outcomes.iter().filter(|o| o.decision.served())
    }
}

/// Everything a scenario run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport<T> {
    pub plan: SimulationPlan,
    pub iterations: Vec<IterationResult<T>>,
    /// Mean of the iteration totals.
    pub t_system_bps: T,
    /// Mean per-RB SINR over served pairs, dB; `None` if nothing was served.
    pub mean_sinr_db: Option<T>,
    pub mean_mos: Option<T>,
    pub pair_counts: Vec<usize>,
}

impl<T: Scalar> ScenarioReport<T> {
    pub fn summarize(plan: SimulationPlan, iterations: Vec<IterationResult<T>>) -> Self {
        let q = T::from_count(iterations.len().max(1));
        let t_system_bps = iterations.iter().fold(T::zero(), |acc, it| acc + it.iteration_total_bps) / q;
        let served: Vec<_> = iterations.iter().flat_map(|it| it.served()).collect();
        let mean = |vals: Vec<T>| {
            (!vals.is_empty()).then(|| vals.iter().fold(T::zero(), |a, &v| a + v) / T::from_count(vals.len()))
        };
        let mean_sinr_db = mean(served.iter().filter_map(|o| o.decision.sinr_per_rb.map(linear_to_db)).collect());
        let mean_mos = mean(iterations.iter().flat_map(|it| it.outcomes.iter().map(|o| o.mos)).collect());
        let pair_counts = iterations.iter().map(|it| it.n_pairs).collect();
        Self { plan, iterations, t_system_bps, mean_sinr_db, mean_mos, pair_counts }
    }
}

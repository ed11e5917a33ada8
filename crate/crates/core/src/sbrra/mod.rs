//! Sector-based RB allocation.
//!
//! Each iteration the engine tops up starved cellular users, hands every D2D
//! pair the RB count its application needs from the best-gain cellular user
//! that can afford it, evaluates interference and SINR, and credits reuse: a
//! cellular user that keeps sharing in consecutive iterations carries its
//! accumulated throughput forward to the first pair it serves next.

pub mod demand;
pub mod ledger;
pub mod run;

use std::cmp::Ordering;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::interference::{
    bs_interference, cotier_interference, residual_cellular_interference, sinr_per_rb, ActiveTransmitter,
    InterferenceBreakdown,
};
use crate::metrics::{aggregate_throughput, chain_start, pair_throughput, IterationResult};
use crate::scalar::Scalar;
use crate::scenario::{CellularUser, D2DPair, Deployment};

pub use demand::DemandScript;
pub use ledger::{RbLedger, ShareRecord, ShareRule};

/// Application classes in decreasing priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Application {
    /// Non-conversational video.
    A1,
    /// Conversational video.
    A2,
    /// Conversational voice.
    A3,
}

impl Application {
    pub const ALL: [Application; 3] = [Application::A1, Application::A2, Application::A3];

    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Application::A1 => "A1",
            Application::A2 => "A2",
            Application::A3 => "A3",
        }
    }
}

impl std::fmt::Display for Application {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Application {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "A1" | "a1" => Ok(Self::A1),
            "A2" | "a2" => Ok(Self::A2),
            "A3" | "a3" => Ok(Self::A3),
            other => Err(format!("unknown application `{other}`")),
        }
    }
}

/// Knobs of the allocator that are not physical-layer constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AllocationPolicy {
    /// RBs demanded by A2; A1 and A3 are fixed at 5 and 1.
    pub a2_rb: u32,
    pub share_rule: ShareRule,
}

impl Default for AllocationPolicy {
    fn default() -> Self {
        Self { a2_rb: 3, share_rule: ShareRule::RetainOne }
    }
}

impl AllocationPolicy {
    pub fn rb_demand(&self, app: Application) -> u32 {
        match app {
            Application::A1 => 5,
            Application::A2 => self.a2_rb,
            Application::A3 => 1,
        }
    }
}

/// RB count for an application under the default policy.
pub fn rb_demand(app: Application) -> u32 {
    AllocationPolicy::default().rb_demand(app)
}

/// Cellular user ids ordered by gain towards the pair's receiver, best
/// first; equal gains keep ascending id order.
pub fn rank_partners<T: Scalar>(
    pair: &D2DPair<T>,
    cellular: &[CellularUser<T>],
    ch: &Channel<T>,
) -> Result<Vec<usize>> {
    if cellular.is_empty() {
        return Err(Error::NoPartner { pair: pair.id });
    }
    let scored = cellular.iter().map(|cu| Ok((ch.gain(&cu.location, &pair.rx)?, cu.id))).collect::<Result<Vec<_>>>()?;
    Ok(rank_by_gain(scored))
}

/// Sorts `(gain, id)` by gain descending, then id ascending.
pub fn rank_by_gain<T: Scalar>(mut scored: Vec<(T, usize)>) -> Vec<usize> {
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, id)| id).collect()
}

/// Allocation record for one pair in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationDecision<T> {
    pub pair_id: usize,
    pub application: Application,
    pub k: u32,
    /// `None` when no cellular user could afford the demand.
    pub partner: Option<usize>,
    pub pre_share_holdings: Option<u32>,
    /// The partner was also sharing in the previous iteration and the reuse
    /// condition held, so the pair's throughput includes the carried chain.
    pub reused_partner: bool,
    pub tx_power_per_rb_w: T,
    pub sinr_per_rb: Option<T>,
    pub breakdown: Option<InterferenceBreakdown<T>>,
    /// SINR met the configured threshold.
    pub feasible: bool,
    /// `(iteration, pair id)` of every share whose throughput is included in
    /// this pair's reported throughput, oldest first.
    pub credited_shares: Vec<(u32, usize)>,
}

impl<T: Scalar> AllocationDecision<T> {
    pub fn served(&self) -> bool {
        self.partner.is_some()
    }

    pub(crate) fn unserved(pair_id: usize, application: Application, k: u32) -> Self {
        Self {
            pair_id,
            application,
            k,
            partner: None,
            pre_share_holdings: None,
            reused_partner: false,
            tx_power_per_rb_w: T::zero(),
            sinr_per_rb: None,
            breakdown: None,
            feasible: false,
            credited_shares: Vec::new(),
        }
    }
}

/// Engine state carried between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioState<T> {
    /// Last completed iteration (0 before the first).
    pub iteration: u32,
    pub ledger: RbLedger<T>,
    pub deployment: Option<Deployment<T>>,
}

impl<T: Scalar> ScenarioState<T> {
    pub fn new(n_rb: u32) -> Self {
        Self { iteration: 0, ledger: RbLedger::new(n_rb), deployment: None }
    }
}

/// One served pair awaiting link evaluation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Grant {
    pub pair_idx: usize,
    pub partner: usize,
    pub k: u32,
    pub pre: u32,
}

/// Breakdown and per-RB SINR for every grant, with all granted pairs plus
/// `background` transmitting.
pub(crate) fn evaluate_links<T: Scalar>(
    dep: &Deployment<T>,
    grants: &[Grant],
    background: &[ActiveTransmitter<T>],
    ch: &Channel<T>,
    sectored: bool,
) -> Result<Vec<(InterferenceBreakdown<T>, T)>> {
    let active: Vec<ActiveTransmitter<T>> = grants
        .iter()
        .map(|g| ActiveTransmitter { pair: dep.pairs[g.pair_idx], k: g.k })
        .chain(background.iter().copied())
        .collect();
    grants
        .iter()
        .map(|g| {
            let pair = &dep.pairs[g.pair_idx];
            let others: Vec<_> =
                active.iter().filter(|t| !(t.pair.sector == pair.sector && t.pair.id == pair.id)).copied().collect();
            let bd = InterferenceBreakdown::new(
                bs_interference(pair, ch, &dep.sector.apex)?,
                residual_cellular_interference(pair, &dep.cellular[g.partner], g.pre, g.k, ch)?,
                cotier_interference(pair, &others, ch, sectored)?,
            );
            let sinr = sinr_per_rb(pair, g.k, &bd, ch)?;
            Ok((bd, sinr))
        })
        .collect()
}

/// Inputs of one iteration besides the carried state.
#[derive(Debug, Clone, Copy)]
pub struct IterationInput<'a, T> {
    pub deployment: &'a Deployment<T>,
    /// Demanded application per pair slot; must cover every pair.
    pub demands: &'a [Application],
    /// Transmitters outside the simulated sector (neighbouring sectors).
    pub background: &'a [ActiveTransmitter<T>],
}

/// Runs one SBRRA iteration and returns its result with the advanced state.
pub fn allocate_iteration<T: Scalar>(
    mut state: ScenarioState<T>,
    input: IterationInput<'_, T>,
    ch: &Channel<T>,
    policy: &AllocationPolicy,
    sectored: bool,
) -> Result<(IterationResult<T>, ScenarioState<T>)> {
    let dep = input.deployment;
    if input.demands.len() < dep.d() {
        return Err(Error::Contract(format!("{} demands for {} pairs", input.demands.len(), dep.d())));
    }
    let n = state.iteration + 1;
    let n_rb = ch.cfg.n_rb;
    if state.ledger.n_rb() != n_rb {
        return Err(Error::Contract("ledger grant size differs from radio config".into()));
    }
    state.ledger.ensure_slots(dep.c(), n);
    state.ledger.replenish(n);

    let mut decisions = Vec::with_capacity(dep.d());
    let mut grants = Vec::new();
    for (idx, pair) in dep.pairs.iter().enumerate() {
        let app = input.demands[idx];
        let k = policy.rb_demand(app);
        let ranking = match rank_partners(pair, &dep.cellular, ch) {
            Ok(r) => r,
            Err(Error::NoPartner { .. }) => Vec::new(),
            Err(e) => return Err(e),
        };
        let chosen = ranking.into_iter().find(|&cu| state.ledger.can_share(cu, k, policy.share_rule));
        match chosen {
            Some(cu) => {
                let pre = state.ledger.share(cu, k, policy.share_rule)?;
                grants.push(Grant { pair_idx: idx, partner: cu, k, pre });
                let mut d = AllocationDecision::unserved(pair.id, app, k);
                d.partner = Some(cu);
                d.pre_share_holdings = Some(pre);
                decisions.push(d);
            }
            None => decisions.push(AllocationDecision::unserved(pair.id, app, k)),
        }
    }

    let links = evaluate_links(dep, &grants, input.background, ch, sectored)?;
    let beta = ch.cfg.rb_bandwidth_hz;
    let threshold = ch.cfg.sinr_threshold_linear();
    let p_max = ch.cfg.p_d2d_max_w();
    let mut standalone = vec![T::zero(); dep.d()];
    let mut reported = vec![T::zero(); dep.d()];
    for (g, (bd, sinr)) in grants.iter().zip(links) {
        let own = pair_throughput(sinr, g.k, beta);
        let first_this_iteration = state.ledger.history(g.partner).last().is_none_or(|r| r.iteration < n);
        let rec = ShareRecord {
            iteration: n,
            pair_id: dep.pairs[g.pair_idx].id,
            k: g.k,
            sinr_per_rb: sinr,
            pre_share_holdings: g.pre,
            reported_bps: own,
        };
        let mut hist = state.ledger.history(g.partner).to_vec();
        hist.push(rec);
        let start = chain_start(&hist, n_rb);
        let credited = first_this_iteration && hist[start].iteration < n;
        let (total, credited_shares) = if credited {
            let agg = aggregate_throughput(&hist, n_rb, beta);
            (agg.total_bps, hist[agg.chain_start..].iter().map(|r| (r.iteration, r.pair_id)).collect())
        } else {
            (own, vec![(n, rec.pair_id)])
        };
        state.ledger.record(g.partner, ShareRecord { reported_bps: total, ..rec });

        let d = &mut decisions[g.pair_idx];
        d.reused_partner = credited;
        d.tx_power_per_rb_w = p_max / T::from_u32(g.k).unwrap();
        d.sinr_per_rb = Some(sinr);
        d.breakdown = Some(bd);
        d.feasible = sinr >= threshold;
        d.credited_shares = credited_shares;
        standalone[g.pair_idx] = own;
        reported[g.pair_idx] = total;
    }

    let result = IterationResult::assemble(n, decisions, standalone, reported, true, dep.c())?;
    state.iteration = n;
    state.deployment = Some(dep.clone());
    Ok((result, state))
}

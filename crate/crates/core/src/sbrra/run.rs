//! Multi-iteration scenario driver shared by both allocators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{Channel, RadioConfig};
use crate::error::{Error, Result};
use crate::harness::plan::{AllocationMode, SimulationPlan};
use crate::hmm::{hmm_allocate, HmmModel, HmmState, ObservationAlphabet};
use crate::interference::ActiveTransmitter;
use crate::metrics::ScenarioReport;
use crate::sbrra::{
    allocate_iteration, evaluate_links, AllocationPolicy, Application, DemandScript, Grant, IterationInput,
    ScenarioState,
};
use crate::scalar::Scalar;
use crate::scenario::{deploy_users, form_pairs, Deployment, SectorGeometry};

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Deployment = 0,
    Demand = 1,
    HmmSampling = 2,
    HmmTraining = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

pub fn random_application<R: Rng + ?Sized>(rng: &mut R) -> Application {
    Application::ALL[rng.random_range(0..Application::ALL.len())]
}

/// Deployment, demands and neighbouring-sector transmitters of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationDraw<T> {
    pub deployment: Deployment<T>,
    pub demands: Vec<Application>,
    pub background: Vec<ActiveTransmitter<T>>,
}

impl<T: Scalar> IterationDraw<T> {
    pub fn input(&self) -> IterationInput<'_, T> {
        IterationInput { deployment: &self.deployment, demands: &self.demands, background: &self.background }
    }
}

/// Draws a fresh deployment of sector 0 (plus the two neighbouring sectors,
/// if enabled) and one demand per pair slot. A random demand is drawn for
/// every slot even when the script covers it, so scripted and random runs
/// stay aligned on the stream.
pub fn draw_iteration<T: Scalar, R: Rng + ?Sized>(
    cfg: &RadioConfig<T>,
    plan: &SimulationPlan,
    script: Option<&DemandScript>,
    iteration: u32,
    deploy_rng: &mut R,
    demand_rng: &mut R,
) -> Result<IterationDraw<T>> {
    let radius = T::lit(plan.radius_m);
    let sector = SectorGeometry::tri_sector(0, radius)?;
    let users = deploy_users(&sector, plan.n_users, deploy_rng);
    let deployment = form_pairs(&sector, &users, cfg.d0_m);
    let neighbours = if plan.neighbor_sectors {
        (1..3)
            .map(|s| {
                let g = SectorGeometry::tri_sector(s, radius)?;
                let users = deploy_users(&g, plan.n_users, deploy_rng);
                Ok(form_pairs(&g, &users, cfg.d0_m))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let policy = plan.policy();
    let demands = (0..deployment.d())
        .map(|slot| {
            let drawn = random_application(demand_rng);
            script.and_then(|s| s.demand_for(iteration, slot)).unwrap_or(drawn)
        })
        .collect();
    let background = neighbours
        .iter()
        .flat_map(|d| d.pairs.iter())
        .map(|p| ActiveTransmitter { pair: *p, k: policy.rb_demand(random_application(demand_rng)) })
        .collect();
    Ok(IterationDraw { deployment, demands, background })
}

/// Labelled training sequences from geometric warm-up scenarios in which
/// every pair takes a uniformly random RB-capable cellular user. Each grant
/// yields `[(BaseStation, x), (CellularUser, x), (Pair, x)]` where `x` is the
/// `(application, SINR bucket)` symbol of the computed SINR.
pub fn geometric_corpus<T: Scalar>(
    cfg: &RadioConfig<T>,
    plan: &SimulationPlan,
    alphabet: &ObservationAlphabet<T>,
) -> Result<Vec<Vec<(HmmState, usize)>>> {
    let ch = Channel::with_shadow_seed(*cfg, plan.seed);
    let policy = plan.policy();
    let mut rng = stream_rng(plan.seed, Stream::HmmTraining);
    let mut corpus = Vec::new();
    for _ in 0..plan.hmm_warmup_scenarios {
        let mut state: ScenarioState<T> = ScenarioState::new(cfg.n_rb);
        for n in 1..=plan.q {
            let mut demand_rng = ChaCha8Rng::seed_from_u64(rng.random());
            let draw = draw_iteration(cfg, plan, None, n, &mut rng, &mut demand_rng)?;
            let dep = &draw.deployment;
            state.ledger.ensure_slots(dep.c(), n);
            state.ledger.replenish(n);
            let mut grants = Vec::new();
            for (idx, &app) in draw.demands.iter().enumerate() {
                let k = policy.rb_demand(app);
                let capable: Vec<usize> =
                    (0..dep.c()).filter(|&cu| state.ledger.can_share(cu, k, policy.share_rule)).collect();
                if capable.is_empty() {
                    continue;
                }
                let cu = capable[rng.random_range(0..capable.len())];
                let pre = state.ledger.share(cu, k, policy.share_rule)?;
                grants.push(Grant { pair_idx: idx, partner: cu, k, pre });
            }
            let links = evaluate_links(dep, &grants, &draw.background, &ch, plan.sectored)?;
            for (g, (_, sinr)) in grants.iter().zip(links) {
                let x = alphabet.observe(draw.demands[g.pair_idx], sinr);
                corpus.push(HmmState::ALL.iter().map(|&s| (s, x)).collect());
            }
            state.iteration = n;
        }
    }
    Ok(corpus)
}

/// Default dynamics with emissions trained on the geometric warm-up corpus.
pub fn train_baseline<T: Scalar>(cfg: &RadioConfig<T>, plan: &SimulationPlan) -> Result<HmmModel<T>> {
    let alphabet = alphabet_for(plan);
    let corpus = geometric_corpus(cfg, plan, &alphabet)?;
    HmmModel::with_default_dynamics(alphabet.len()).train(&corpus, false)
}

fn alphabet_for<T: Scalar>(plan: &SimulationPlan) -> ObservationAlphabet<T> {
    let b = plan.buckets();
    ObservationAlphabet::new(crate::hmm::SinrBuckets {
        start_db: T::lit(b.start_db),
        width_db: T::lit(b.width_db),
        count: b.count,
    })
}

/// Runs `plan.q` iterations with fresh deployments and a persistent ledger.
/// In HMM mode a missing `model` is trained from geometric warm-up runs.
pub fn run_scenario<T: Scalar>(
    cfg: &RadioConfig<T>,
    plan: &SimulationPlan,
    script: Option<&DemandScript>,
    model: Option<&HmmModel<T>>,
) -> Result<ScenarioReport<T>> {
    if plan.q == 0 {
        return Err(Error::InvalidPlan("q must be at least 1".into()));
    }
    cfg.validate()?;
    let ch = Channel::with_shadow_seed(*cfg, plan.seed);
    let policy: AllocationPolicy = plan.policy();
    let alphabet = alphabet_for(plan);
    let trained;
    let model = match (plan.mode, model) {
        (AllocationMode::Hmm, None) => {
            trained = train_baseline(cfg, plan)?;
            Some(&trained)
        }
        (_, m) => m,
    };

    let mut deploy_rng = stream_rng(plan.seed, Stream::Deployment);
    let mut demand_rng = stream_rng(plan.seed, Stream::Demand);
    let mut hmm_rng = stream_rng(plan.seed, Stream::HmmSampling);
    let mut state = ScenarioState::new(cfg.n_rb);
    let mut iterations = Vec::with_capacity(plan.q as usize);
    for n in 1..=plan.q {
        let draw = draw_iteration(cfg, plan, script, n, &mut deploy_rng, &mut demand_rng)?;
        let (result, next) = match (plan.mode, model) {
            (AllocationMode::Sbrra, _) => allocate_iteration(state, draw.input(), &ch, &policy, plan.sectored)?,
            (AllocationMode::Hmm, Some(m)) => {
                hmm_allocate(state, draw.input(), &ch, &policy, m, &alphabet, &mut hmm_rng)?
            }
            (AllocationMode::Hmm, None) => unreachable!("model trained above"),
        };
        iterations.push(result);
        state = next;
    }
    Ok(ScenarioReport::summarize(plan.clone(), iterations))
}

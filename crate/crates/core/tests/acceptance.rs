//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use d2dsim::channel::{dbm_to_watt, path_loss_db, Channel, RadioConfig};
use d2dsim::harness::{run_preset, Config, Preset, SimulationPlan};
use d2dsim::hmm::{HmmModel, HmmState};
use d2dsim::interference::is_cross_sector_neighbour;
use d2dsim::metrics::{mos, pair_throughput, IterationResult, ScenarioReport};
use d2dsim::sbrra::run::{draw_iteration, run_scenario, stream_rng, Stream};
use d2dsim::sbrra::{
    allocate_iteration, AllocationPolicy, Application, DemandScript, IterationInput, ScenarioState, ShareRule,
};
use d2dsim::scenario::{deploy_users, Deployment, Point, SectorGeometry};
use d2dsim::AllocationMode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn formula_spot_checks() -> Outcome {
    let cfg = RadioConfig::<f64>::default();
    let pl_1k = path_loss_db(1000.0, &cfg).unwrap();
    check(pl_1k == 148.1, format!("path_loss(1000 m) = {pl_1k}"))?;
    let pl_20 = path_loss_db(20.0, &cfg).unwrap();
    check((pl_20 - 80.07).abs() <= 0.01, format!("path_loss(20 m) = {pl_20}"))?;
    let m0 = mos(0.0f64).unwrap();
    check((m0 - 0.856).abs() <= 0.001, format!("mos(0) = {m0}"))?;
    let m4 = mos(563.4f64).unwrap();
    check((m4 - 4.0).abs() <= 0.01, format!("mos(563.4) = {m4}"))?;
    let t = pair_throughput(1.0f64, 1, 180_000.0);
    check(t == 180_000.0, format!("pair_throughput(1, 1, 180 kHz) = {t}"))?;
    Ok(format!("PL(1 km)={pl_1k} PL(20 m)={pl_20:.4} mos(0)={m0:.4} mos(563.4)={m4:.4} T={t}"))
}

fn transition_table() -> Outcome {
    let model: HmmModel<f64> = HmmModel::with_default_dynamics(3);
    for (i, row) in model.transition.iter().enumerate() {
        let s: f64 = row.iter().sum();
        check(s == 1.0, format!("row {i} sums to {s}"))?;
    }
    let n = 100_000usize;
    let critical = ChiSquared::new(2.0).unwrap().inverse_cdf(0.99);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_dev: f64 = 0.0;
    let mut worst_chi: f64 = 0.0;
    for from in HmmState::ALL {
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[model.sample_next(from, &mut rng).index()] += 1;
        }
        let expected = model.transition[from.index()];
        let mut chi = 0.0;
        for to in 0..3 {
            let freq = counts[to] as f64 / n as f64;
            let dev = (freq - expected[to]).abs();
            worst_dev = worst_dev.max(dev);
            check(dev <= 0.01, format!("{}->{to}: freq {freq} vs {}", from.as_str(), expected[to]))?;
            let e = expected[to] * n as f64;
            chi += (counts[to] as f64 - e).powi(2) / e;
        }
        worst_chi = worst_chi.max(chi);
        check(chi < critical, format!("{} row chi-square {chi} >= {critical}", from.as_str()))?;
    }
    Ok(format!("max |freq - p| = {worst_dev:.4}, max chi2 = {worst_chi:.3} < {critical:.3}"))
}

/// Sum over every state path of `π·A-products · B-products`, enumerated
/// explicitly.
fn brute_force_likelihood(prior: &[f64; 3], a: &[[f64; 3]; 3], b: &[Vec<f64>; 3], obs: &[usize]) -> f64 {
    let len = obs.len();
    let mut total = 0.0;
    for code in 0..3usize.pow(len as u32) {
        let mut c = code;
        let path: Vec<usize> = (0..len)
            .map(|_| {
                let s = c % 3;
                c /= 3;
                s
            })
            .collect();
        let mut p = prior[path[0]] * b[path[0]][obs[0]];
        for t in 1..len {
            p *= a[path[t - 1]][path[t]] * b[path[t]][obs[t]];
        }
        total += p;
    }
    total
}

fn likelihood_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = 3;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..100 {
        let mut model: HmmModel<f64> = HmmModel::with_default_dynamics(m);
        for row in model.emission.iter_mut() {
            let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            *row = raw.iter().map(|v| v / s).collect();
        }
        for len in 1..=4u32 {
            for code in 0..(m as u32).pow(len) {
                let mut c = code as usize;
                let obs: Vec<usize> = (0..len)
                    .map(|_| {
                        let x = c % m;
                        c /= m;
                        x
                    })
                    .collect();
                let fwd = model.sequence_likelihood(&obs).unwrap();
                let brute = brute_force_likelihood(&model.prior, &model.transition, &model.emission, &obs);
                let diff = (fwd - brute).abs();
                worst = worst.max(diff);
                check(diff <= 1e-12, format!("sequence {obs:?}: forward {fwd} vs enumeration {brute}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} sequences over 100 emission tables, max |diff| = {worst:e}"))
}

struct OracleAccount {
    holdings: u32,
    /// (iteration, k, sinr, pre-share holdings) per share, in order.
    log: Vec<(u32, u32, f64, u32)>,
}

/// Replays one scenario's allocation logs from scratch: RB holdings,
/// reuse-chain extent and the iteration/pair/RB triple sum behind every
/// reported throughput. Also checks the per-share constraints.
struct ReplayOracle {
    r: u32,
    beta: f64,
    p_max: f64,
    rule: ShareRule,
    accounts: Vec<OracleAccount>,
}

impl ReplayOracle {
    fn new(cfg: &RadioConfig<f64>, rule: ShareRule) -> Self {
        Self {
            r: cfg.n_rb,
            beta: cfg.rb_bandwidth_hz,
            p_max: dbm_to_watt(cfg.p_d2d_max_dbm),
            rule,
            accounts: Vec::new(),
        }
    }

    fn rb_term(&self, sinr: f64) -> f64 {
        self.beta * (1.0 + sinr).log2()
    }

    fn check_iteration(&mut self, res: &IterationResult<f64>, n_cellular: usize) -> Result<usize, String> {
        let n = res.iteration;
        let r = self.r;
        while self.accounts.len() < n_cellular {
            self.accounts.push(OracleAccount { holdings: r, log: Vec::new() });
        }
        for acc in &mut self.accounts {
            if 2 * acc.holdings < r {
                acc.holdings += r;
            }
        }
        let mut total = 0.0;
        let mut verified = 0;
        for o in &res.outcomes {
            let d = &o.decision;
            check(o.mos > 0.85 && o.mos < 5.0, format!("mos {} out of range", o.mos))?;
            total += o.throughput_bps;
            let Some(cu) = d.partner else {
                check(o.throughput_bps == 0.0, "unserved pair reports throughput")?;
                let capable = self.accounts[..n_cellular].iter().any(|a| match self.rule {
                    ShareRule::RetainOne => d.k < a.holdings,
                    ShareRule::GrantBound => d.k < r && d.k <= a.holdings,
                });
                check(!capable, format!("pair {} unserved although a partner could share", d.pair_id))?;
                continue;
            };
            let acc = &mut self.accounts[cu];
            let pre = acc.holdings;
            check(d.pre_share_holdings == Some(pre), format!("pre-share {:?} vs replay {pre}", d.pre_share_holdings))?;
            if self.rule == ShareRule::RetainOne {
                check(d.k >= 1 && d.k < pre, format!("share of {} from {pre} breaks 1 <= k <= holdings - 1", d.k))?;
            }
            let power = d.tx_power_per_rb_w * d.k as f64;
            check(
                (power - self.p_max).abs() <= d.k as f64 * f64::EPSILON * self.p_max,
                format!("per-RB power x k = {power}, max {}", self.p_max),
            )?;
            let sinr = d.sinr_per_rb.ok_or("served pair without SINR")?;
            let first_this_iteration = acc.log.last().is_none_or(|e| e.0 < n);
            acc.holdings -= d.k;
            acc.log.push((n, d.k, sinr, pre));

            // chain start: walk back while the CU shared in the previous
            // iteration and the first share of the later one found >= r/2
            let mut start = n;
            while start > 1 {
                let first_at = acc.log.iter().find(|e| e.0 == start).expect("iteration is in log");
                let shared_before = acc.log.iter().any(|e| e.0 == start - 1);
                if shared_before && 2 * first_at.3 >= r {
                    start -= 1;
                } else {
                    break;
                }
            }
            let credited = first_this_iteration && start < n;
            let terms: Vec<(u32, f64)> = if credited {
                acc.log.iter().filter(|e| e.0 >= start).map(|e| (e.1, e.2)).collect()
            } else {
                vec![(d.k, sinr)]
            };
            let mut expected = 0.0;
            for (k, s) in terms {
                for _ in 0..k {
                    expected += self.beta * (1.0 + s).log2();
                }
            }
            check(
                o.throughput_bps == expected,
                format!("iteration {n} pair {}: reported {} vs replay {expected}", d.pair_id, o.throughput_bps),
            )?;
            check(d.reused_partner == credited, format!("reuse flag {} vs replay {credited}", d.reused_partner))?;
            if d.reused_partner {
                check(2 * pre >= r, "reuse credited below r/2")?;
                check(
                    self.accounts[cu].log.iter().any(|e| e.0 + 1 == n),
                    "reuse credited without a share in the previous iteration",
                )?;
            }
            let own: f64 = (0..d.k).fold(0.0, |a, _| a + self.rb_term(sinr));
            check(o.standalone_bps == own, "standalone throughput mismatch")?;
            verified += 1;
        }
        check(res.iteration_total_bps == total, "iteration total is not the sum of pair throughputs")?;
        Ok(verified)
    }
}

fn random_deployment(rng: &mut ChaCha8Rng, d: usize, c: usize) -> Deployment<f64> {
    let sector = SectorGeometry::tri_sector(0, 500.0).unwrap();
    let tx = deploy_users(&sector, d, rng);
    let pairs = tx
        .into_iter()
        .map(|t| {
            let len = rng.random_range(1.0..20.0);
            let ang = rng.random_range(0.0..std::f64::consts::TAU);
            (t, Point::new(t.x + len * ang.cos(), t.y + len * ang.sin()))
        })
        .collect();
    let cellular = deploy_users(&sector, c, rng);
    Deployment::from_parts(sector, pairs, cellular, 20.0).unwrap()
}

fn replay_scenarios(rule: ShareRule, count: u64, base: u64) -> Result<(usize, usize, usize), String> {
    let cfg = RadioConfig::<f64>::default();
    let ch = Channel::new(cfg);
    let policy = AllocationPolicy { share_rule: rule, ..Default::default() };
    let results: Vec<Result<(usize, usize), String>> = (0..count)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(base + s);
            let q = rng.random_range(1..=5u32);
            let mut state = ScenarioState::new(cfg.n_rb);
            let mut oracle = ReplayOracle::new(&cfg, rule);
            let (mut verified, mut reused) = (0, 0);
            let mut totals = Vec::new();
            for _ in 0..q {
                let d = rng.random_range(1..=4usize);
                let c = rng.random_range(0..=5usize);
                let dep = random_deployment(&mut rng, d, c);
                let demands: Vec<Application> = (0..d).map(|_| Application::ALL[rng.random_range(0..3usize)]).collect();
                let input = IterationInput { deployment: &dep, demands: &demands, background: &[] };
                let (res, next) = allocate_iteration(state, input, &ch, &policy, true).map_err(|e| e.to_string())?;
                check(next.ledger.is_conserved(), "ledger conservation broken")?;
                verified += oracle.check_iteration(&res, c)?;
                reused += res.outcomes.iter().filter(|o| o.decision.reused_partner).count();
                totals.push(res.clone());
                state = next;
            }
            let report = ScenarioReport::summarize(SimulationPlan::default(), totals);
            let mean = report.iterations.iter().map(|i| i.iteration_total_bps).sum::<f64>() / q as f64;
            check(report.t_system_bps == mean, "system throughput is not the mean of iteration totals")?;
            Ok((verified, reused))
        })
        .collect();
    let mut agg = (0, 0, 0);
    for r in results {
        let (v, u) = r?;
        agg.0 += 1;
        agg.1 += v;
        agg.2 += u;
    }
    Ok(agg)
}

fn replay_oracle() -> Outcome {
    let (n, shares, reused) = replay_scenarios(ShareRule::RetainOne, 1000, 10_000)?;
    check(reused > 0, "fuzz never exercised reuse")?;
    let (gn, gshares, greused) = replay_scenarios(ShareRule::GrantBound, 300, 50_000)?;
    Ok(format!(
        "{n} scenarios, {shares} shares ({reused} with carried chains) bit-exact; \
         plus {gn} grant_bound scenarios, {gshares} shares ({greused} carried)"
    ))
}

/// Scripted five-iteration two-pair scenario. Each iteration places the
/// partner each pair should pick 30 m from its receiver and parks the
/// other cellular users far away.
fn worked_example() -> Outcome {
    let cfg = RadioConfig::<f64>::default();
    let ch = Channel::new(cfg);
    let policy = AllocationPolicy { share_rule: ShareRule::GrantBound, ..Default::default() };
    let script = DemandScript::parse("A1,A3\nA1,A1\nA3,A3\nA2,A3\nA2,A3\n").map_err(|e| e.to_string())?;
    // partner (0-based CU index) for (pair 1, pair 2) in each iteration
    let partners = [(0, 0), (1, 2), (3, 1), (4, 3), (4, 3)];
    let sector = SectorGeometry::tri_sector(0, 500.0).unwrap();
    let pairs =
        vec![(Point::new(0.0, 150.0), Point::new(10.0, 150.0)), (Point::new(0.0, 350.0), Point::new(10.0, 350.0))];
    let parking = [
        Point::new(-300.0, 350.0),
        Point::new(300.0, 350.0),
        Point::new(-250.0, 430.0),
        Point::new(250.0, 430.0),
        Point::new(0.0, 490.0),
    ];

    let mut state = ScenarioState::new(cfg.n_rb);
    let mut results = Vec::new();
    for (i, &(p1, p2)) in partners.iter().enumerate() {
        let n = i as u32 + 1;
        let mut cells = parking.to_vec();
        if p1 == p2 {
            cells[p1] = Point::new(10.0, 250.0);
        } else {
            cells[p1] = Point::new(10.0, 180.0);
            cells[p2] = Point::new(10.0, 320.0);
        }
        let dep = Deployment::from_parts(sector, pairs.clone(), cells, 20.0).unwrap();
        let demands: Vec<Application> = (0..2).map(|s| script.demand_for(n, s).unwrap()).collect();
        let input = IterationInput { deployment: &dep, demands: &demands, background: &[] };
        let (res, next) = allocate_iteration(state, input, &ch, &policy, true).map_err(|e| e.to_string())?;
        let got: Vec<Option<usize>> = res.outcomes.iter().map(|o| o.decision.partner).collect();
        check(got == vec![Some(p1), Some(p2)], format!("iteration {n}: partners {got:?}"))?;
        results.push(res);
        state = next;
    }

    // T[(pair, cu, iteration)]: standalone throughput of that share
    let mut t: BTreeMap<(usize, usize, u32), f64> = BTreeMap::new();
    for res in &results {
        for o in &res.outcomes {
            t.insert((o.decision.pair_id + 1, o.decision.partner.unwrap() + 1, res.iteration), o.standalone_bps);
        }
    }
    let term = |j, i, n| t[&(j, i, n)];
    // per pair: list of (pair, cu, iteration) terms, 1-based as written
    let expected: [[Vec<(usize, usize, u32)>; 2]; 5] = [
        [vec![(1, 1, 1)], vec![(2, 1, 1)]],
        [vec![(1, 2, 2)], vec![(2, 3, 2)]],
        [vec![(1, 4, 3)], vec![(1, 2, 2), (2, 2, 3)]],
        [vec![(1, 5, 4)], vec![(1, 4, 3), (2, 4, 4)]],
        [vec![(1, 5, 4), (1, 5, 5)], vec![(1, 4, 3), (2, 4, 4), (2, 4, 5)]],
    ];
    let mut totals = Vec::new();
    for (res, exp) in results.iter().zip(&expected) {
        let n = res.iteration;
        let mut sum_terms = 0.0;
        for (o, terms) in res.outcomes.iter().zip(exp) {
            let credited: Vec<(usize, usize, u32)> = o
                .decision
                .credited_shares
                .iter()
                .map(|&(it, pair)| (pair + 1, t.keys().find(|k| k.0 == pair + 1 && k.2 == it).unwrap().1, it))
                .collect();
            check(&credited == terms, format!("iteration {n} pair {}: terms {credited:?}", o.decision.pair_id + 1))?;
            let value: f64 = terms.iter().map(|&(j, i, m)| term(j, i, m)).sum();
            check(
                (o.throughput_bps - value).abs() <= 1e-9 * value,
                format!("iteration {n} pair {}: {} vs term sum {value}", o.decision.pair_id + 1, o.throughput_bps),
            )?;
            sum_terms += value;
        }
        check(
            (res.iteration_total_bps - sum_terms).abs() <= 1e-9 * sum_terms,
            format!("iteration {n} total {} vs {sum_terms}", res.iteration_total_bps),
        )?;
        totals.push(res.iteration_total_bps);
    }
    let report = ScenarioReport::summarize(SimulationPlan { q: 5, ..Default::default() }, results);
    let avg = totals.iter().sum::<f64>() / 5.0;
    check(report.t_system_bps == avg, "system throughput is not the five-term average")?;
    Ok(format!("all 5 iteration totals decompose into the listed terms; T_system = {:.1} bps", report.t_system_bps))
}

fn pairs_vs_radius() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = Config::default();
    cfg.plan.n_users = 30;
    cfg.plan.replications = 500;
    cfg.plan.radii_m = vec![500.0, 1000.0, 2000.0];
    let files = run_preset(Preset::PairsVsRadius, &cfg, dir.path()).map_err(|e| e.to_string())?;
    let rows = read_csv(&files[1]);
    let means: Vec<f64> = rows.iter().map(|r| r["mean_pairs"].parse().unwrap()).collect();
    let max_500: usize = rows[0]["max_pairs"].parse().unwrap();
    check(means.windows(2).all(|w| w[0] > w[1]), format!("means not strictly decreasing: {means:?}"))?;
    check(max_500 >= 6, format!("max pairs at 500 m = {max_500}"))?;
    Ok(format!("mean pairs {means:.3?} for radii 500/1000/2000 m; max at 500 m = {max_500}"))
}

fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    rdr.records().map(|r| headers.iter().map(String::from).zip(r.unwrap().iter().map(String::from)).collect()).collect()
}

fn sector_invariant() -> Outcome {
    let cfg = RadioConfig::<f64>::default();
    let ch = Channel::new(cfg);
    let plan = SimulationPlan { n_users: 30, ..Default::default() };
    let policy = plan.policy();
    let results: Vec<Result<(bool, bool), String>> = (0..1000u64)
        .into_par_iter()
        .map(|seed| {
            let mut dep_rng = stream_rng(seed, Stream::Deployment);
            let mut dem_rng = stream_rng(seed, Stream::Demand);
            let draw = draw_iteration(&cfg, &plan, None, 1, &mut dep_rng, &mut dem_rng).map_err(|e| e.to_string())?;
            let run = |sectored| {
                allocate_iteration(ScenarioState::new(cfg.n_rb), draw.input(), &ch, &policy, sectored)
                    .map(|r| r.0)
                    .map_err(|e| e.to_string())
            };
            let (s, u) = (run(true)?, run(false)?);
            let (sw, uw) = (s.complexity_w.unwrap(), u.complexity_w.unwrap());
            check(sw <= uw, format!("seed {seed}: sectored {sw} > unsectored {uw}"))?;
            for (a, b) in s.outcomes.iter().zip(&u.outcomes) {
                if let (Some(x), Some(y)) = (a.decision.breakdown, b.decision.breakdown) {
                    check(x.from_cotier_w <= y.from_cotier_w, format!("seed {seed}: per-pair co-tier order broken"))?;
                }
                check(a.mos > 0.85 && a.mos < 5.0 && b.mos > 0.85 && b.mos < 5.0, "mos out of range")?;
                check(
                    a.decision.partner.is_none() || a.decision.k < a.decision.pre_share_holdings.unwrap(),
                    "share breaks 1 <= k <= holdings - 1",
                )?;
            }
            let exposed = s.served().any(|o| {
                let pair = &draw.deployment.pairs[o.decision.pair_id];
                draw.background.iter().any(|t| is_cross_sector_neighbour(pair, &t.pair, cfg.dmax_m))
            });
            if exposed {
                check(sw < uw, format!("seed {seed}: exposed to a neighbour but sectored == unsectored"))?;
            }
            Ok((exposed, sw < uw))
        })
        .collect();
    let mut exposed = 0;
    let mut strict = 0;
    for r in results {
        let (e, s) = r?;
        exposed += e as usize;
        strict += s as usize;
    }
    check(exposed > 0, "no deployment had a cross-sector neighbour; the strict branch went untested")?;
    Ok(format!("1000 deployments: sectored <= unsectored everywhere; {exposed} exposed, {strict} strictly lower"))
}

fn welch_one_sided(a: &[f64], b: &[f64]) -> (f64, f64) {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let se2 = va / na + vb / nb;
    let t = (ma - mb) / se2.sqrt();
    let dof = se2.powi(2) / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let p = 1.0 - StudentsT::new(0.0, 1.0, dof).unwrap().cdf(t);
    (t, p)
}

fn mode_comparison() -> Outcome {
    let cfg = RadioConfig::<f64>::default();
    let base = SimulationPlan { n_users: 30, q: 5, ..Default::default() };
    let runs: Vec<Result<(f64, f64), String>> = (0..100usize)
        .into_par_iter()
        .map(|rep| {
            let plan = SimulationPlan { seed: d2dsim::harness::replication_seed(base.seed, rep), ..base.clone() };
            let s = run_scenario(&cfg, &SimulationPlan { mode: AllocationMode::Sbrra, ..plan.clone() }, None, None);
            let h = run_scenario(&cfg, &SimulationPlan { mode: AllocationMode::Hmm, ..plan }, None, None);
            Ok((s.map_err(|e| e.to_string())?.t_system_bps, h.map_err(|e| e.to_string())?.t_system_bps))
        })
        .collect();
    let (mut s, mut h) = (Vec::new(), Vec::new());
    for r in runs {
        let (a, b) = r?;
        s.push(a);
        h.push(b);
    }
    let (t, p) = welch_one_sided(&s, &h);
    let ms = s.iter().sum::<f64>() / 100.0;
    let mh = h.iter().sum::<f64>() / 100.0;
    check(p < 0.05, format!("mean SBRRA {ms:.0} vs HMM {mh:.0} bps, Welch t = {t:.3}, p = {p:.4}"))?;
    Ok(format!("mean T_system SBRRA {ms:.0} bps vs HMM {mh:.0} bps, Welch t = {t:.2}, one-sided p = {p:.2e}"))
}

fn preset_determinism() -> Outcome {
    let mut cfg = Config::default();
    cfg.plan.replications = 6;
    cfg.plan.q = 3;
    cfg.plan.hmm_warmup_scenarios = 4;
    cfg.plan.n_users_sweep = vec![30, 50];
    let run_all = |threads: usize| -> Result<Vec<Vec<u8>>, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut out = Vec::new();
        for p in Preset::ALL {
            let files = pool.install(|| run_preset(p, &cfg, dir.path())).map_err(|e| e.to_string())?;
            for f in files {
                out.push(std::fs::read(f).map_err(|e| e.to_string())?);
            }
        }
        Ok(out)
    };
    let a = run_all(4)?;
    let b = run_all(4)?;
    let c = run_all(1)?;
    check(a == b, "two parallel invocations differ")?;
    check(a == c, "parallel and sequential outputs differ")?;
    let bytes: usize = a.iter().map(Vec::len).sum();
    Ok(format!("{} files ({bytes} bytes) identical across 2 parallel runs and 1 sequential run", a.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 formula spot checks", formula_spot_checks),
        ("2 transition table integrity", transition_table),
        ("3 likelihood vs path enumeration", likelihood_oracle),
        ("4 cumulative throughput replay", replay_oracle),
        ("5 worked five-iteration example", worked_example),
        ("6 pair count vs radius", pairs_vs_radius),
        ("7 sectored interference invariant", sector_invariant),
        ("8 SBRRA beats HMM", mode_comparison),
        ("9 constraint fuzz", constraint_fuzz),
        ("10 preset determinism", preset_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.2}s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}

/// Constraint checks over full randomized scenarios (both modes, both
/// sector settings), on top of the per-share checks inside the replay and
/// sector fuzz runs.
fn constraint_fuzz() -> Outcome {
    let cfg = RadioConfig::<f64>::default();
    let p_max = dbm_to_watt(cfg.p_d2d_max_dbm);
    let runs: Vec<Result<usize, String>> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let mode = if seed % 2 == 0 { AllocationMode::Sbrra } else { AllocationMode::Hmm };
            let plan = SimulationPlan {
                seed,
                mode,
                sectored: seed % 4 < 2,
                n_users: 10 + (seed as usize % 5) * 10,
                hmm_warmup_scenarios: 3,
                ..Default::default()
            };
            let report = run_scenario(&cfg, &plan, None, None).map_err(|e| e.to_string())?;
            let mut shares = 0;
            for it in &report.iterations {
                for o in &it.outcomes {
                    let d = &o.decision;
                    check(o.mos > 0.85 && o.mos < 5.0, format!("seed {seed}: mos {}", o.mos))?;
                    if let Some(pre) = d.pre_share_holdings {
                        shares += 1;
                        check(d.k >= 1 && d.k < pre, format!("seed {seed}: k {} from holdings {pre}", d.k))?;
                        let sum = d.tx_power_per_rb_w * d.k as f64;
                        check((sum - p_max).abs() <= d.k as f64 * f64::EPSILON * p_max, "power sum off P_max")?;
                        if d.reused_partner {
                            check(2 * pre >= cfg.n_rb, "reuse credited below r/2")?;
                        }
                    }
                }
            }
            Ok(shares)
        })
        .collect();
    let mut shares = 0;
    for r in runs {
        shares += r?;
    }
    Ok(format!("{shares} shares across 200 full scenarios; plus the 1300 replayed and 1000 sector-fuzz scenarios"))
}

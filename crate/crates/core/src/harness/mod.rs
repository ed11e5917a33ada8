//! Experiment presets and CSV emission.
//!
//! Every output file starts with `#` comment lines holding the resolved
//! config and seed, followed by a CSV body. Replications run in parallel but
//! rows are always written in (replication, iteration, pair id) order.

pub mod plan;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::channel::linear_to_db;
use crate::error::{Error, Result};
use crate::metrics::ScenarioReport;
use crate::sbrra::run::{run_scenario, stream_rng, Stream};
use crate::sbrra::{Application, DemandScript};
use crate::scenario::{deploy_users, form_pairs, SectorGeometry};

pub use plan::{load_config, AllocationMode, Config, SimulationPlan};

/// Column order of the per-pair experiment file.
pub const EXPERIMENT_COLUMNS: [&str; 13] = [
    "replication",
    "iteration",
    "pair_id",
    "application",
    "partner_id",
    "k_rb",
    "reused",
    "sinr_db",
    "throughput_bps",
    "mos",
    "served",
    "sectored",
    "mode",
];
pub const RADIUS_COLUMNS: [&str; 4] = ["radius_m", "replication", "n_pairs", "n_cellular"];
pub const COMPLEXITY_COLUMNS: [&str; 6] =
    ["n_users", "replication", "iteration", "n_pairs", "sectored_w", "unsectored_w"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    PairsVsRadius,
    ThroughputVsIterations,
    ModeComparison,
    ComplexityVsPairs,
    MosTable,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::PairsVsRadius,
        Preset::ThroughputVsIterations,
        Preset::ModeComparison,
        Preset::ComplexityVsPairs,
        Preset::MosTable,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::PairsVsRadius => "pairs-vs-radius",
            Preset::ThroughputVsIterations => "throughput-vs-iterations",
            Preset::ModeComparison => "mode-comparison",
            Preset::ComplexityVsPairs => "complexity-vs-pairs",
            Preset::MosTable => "mos-table",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// Seed of replication `rep`.
pub fn replication_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add(rep as u64)
}

/// Mean and two-sided 95% Student-t interval. Fewer than two samples give a
/// degenerate interval at the mean.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, mean, mean);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0).expect("dof >= 1").inverse_cdf(0.975);
    let half = t * (var / n).sqrt();
    (mean, mean - half, mean + half)
}

/// Comment header carrying the resolved config and seed.
pub fn header(cfg: &Config, preset: Preset) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# d2dsim preset {}", preset.name());
    let _ = writeln!(s, "# seed = {}", cfg.plan.seed);
    for line in cfg.to_text().lines() {
        let _ = writeln!(s, "# {line}");
    }
    s
}

/// A CSV record as already-formatted fields.
type Row = Vec<String>;

fn csv_body(columns: &[&str], rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_file(dir: &Path, name: &str, head: &str, columns: &[&str], rows: &[Row]) -> Result<PathBuf> {
    let path = dir.join(name);
    let text = format!("{head}{}", csv_body(columns, rows)?);
    std::fs::write(&path, text).map_err(|source| Error::Output { path: path.clone(), source })?;
    Ok(path)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One experiment-file row per pair per iteration.
pub fn experiment_rows(report: &ScenarioReport<f64>, replication: usize) -> Vec<Row> {
    let plan = &report.plan;
    report
        .iterations
        .iter()
        .flat_map(|it| {
            it.outcomes.iter().map(move |o| {
                let d = &o.decision;
                vec![
                    replication.to_string(),
                    it.iteration.to_string(),
                    d.pair_id.to_string(),
                    d.application.to_string(),
                    opt(d.partner),
                    d.k.to_string(),
                    d.reused_partner.to_string(),
                    opt(d.sinr_per_rb.map(linear_to_db)),
                    o.throughput_bps.to_string(),
                    o.mos.to_string(),
                    d.served().to_string(),
                    plan.sectored.to_string(),
                    plan.mode.as_str().to_string(),
                ]
            })
        })
        .collect()
}

fn replicate<F, R>(plan: &SimulationPlan, f: F) -> Result<Vec<R>>
where
    F: Fn(usize, SimulationPlan) -> Result<R> + Sync,
    R: Send,
{
    (0..plan.replications)
        .into_par_iter()
        .map(|rep| f(rep, SimulationPlan { seed: replication_seed(plan.seed, rep), ..plan.clone() }))
        .collect()
}

fn load_script(plan: &SimulationPlan) -> Result<Option<DemandScript>> {
    plan.demand_script.as_deref().map(DemandScript::from_file).transpose()
}

/// Runs `preset`, writing `<name>.csv` and `<name>_summary.csv` into `out`.
pub fn run_preset(preset: Preset, cfg: &Config, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.radio.validate()?;
    cfg.plan.validate(cfg.radio.n_rb)?;
    std::fs::create_dir_all(out).map_err(|source| Error::Output { path: out.to_path_buf(), source })?;
    let head = header(cfg, preset);
    let name = preset.name();
    let data = format!("{name}.csv");
    let summary = format!("{name}_summary.csv");
    let script = load_script(&cfg.plan)?;
    let script = script.as_ref();
    let radio = &cfg.radio;

    let files = match preset {
        Preset::PairsVsRadius => {
            let mut rows = Vec::new();
            let mut sum_rows = Vec::new();
            for &radius in &cfg.plan.radii_m {
                let counts = replicate(&cfg.plan, |_, p| {
                    let sector = SectorGeometry::tri_sector(0, radius)?;
                    let users = deploy_users(&sector, p.n_users, &mut stream_rng(p.seed, Stream::Deployment));
                    let dep = form_pairs(&sector, &users, radio.d0_m);
                    Ok((dep.d(), dep.c()))
                })?;
                for (rep, (d, c)) in counts.iter().enumerate() {
                    rows.push(vec![radius.to_string(), rep.to_string(), d.to_string(), c.to_string()]);
                }
                let xs: Vec<f64> = counts.iter().map(|c| c.0 as f64).collect();
                let (m, lo, hi) = mean_ci95(&xs);
                let max = counts.iter().map(|c| c.0).max().unwrap_or(0);
                sum_rows.push(vec![
                    radius.to_string(),
                    counts.len().to_string(),
                    m.to_string(),
                    lo.to_string(),
                    hi.to_string(),
                    max.to_string(),
                ]);
            }
            vec![
                write_file(out, &data, &head, &RADIUS_COLUMNS, &rows)?,
                write_file(
                    out,
                    &summary,
                    &head,
                    &["radius_m", "replications", "mean_pairs", "ci95_low", "ci95_high", "max_pairs"],
                    &sum_rows,
                )?,
            ]
        }
        Preset::ThroughputVsIterations | Preset::MosTable => {
            let reports = replicate(&cfg.plan, |_, p| run_scenario(radio, &p, script, None))?;
            let rows: Vec<Row> = reports.iter().enumerate().flat_map(|(rep, r)| experiment_rows(r, rep)).collect();
            let sum_rows = if preset == Preset::ThroughputVsIterations {
                iteration_summary(&reports)
            } else {
                application_summary(&reports)
            };
            let sum_cols: &[&str] = if preset == Preset::ThroughputVsIterations {
                &["iteration", "mean_total_bps", "ci95_low", "ci95_high", "mean_sinr_db", "mean_mos"]
            } else {
                &["application", "served", "mean_throughput_bps", "ci95_low", "ci95_high", "mean_mos"]
            };
            vec![
                write_file(out, &data, &head, &EXPERIMENT_COLUMNS, &rows)?,
                write_file(out, &summary, &head, sum_cols, &sum_rows)?,
            ]
        }
        Preset::ModeComparison => {
            let pairs = replicate(&cfg.plan, |_, p| {
                let sbrra =
                    run_scenario(radio, &SimulationPlan { mode: AllocationMode::Sbrra, ..p.clone() }, script, None)?;
                let hmm = run_scenario(radio, &SimulationPlan { mode: AllocationMode::Hmm, ..p }, script, None)?;
                Ok((sbrra, hmm))
            })?;
            let mut rows = Vec::new();
            for (rep, (a, b)) in pairs.iter().enumerate() {
                rows.extend(experiment_rows(a, rep));
                rows.extend(experiment_rows(b, rep));
            }
            let mut sum_rows = Vec::new();
            for (mode, pick) in [(AllocationMode::Sbrra, 0), (AllocationMode::Hmm, 1)] {
                let reports: Vec<&ScenarioReport<f64>> =
                    pairs.iter().map(|(a, b)| if pick == 0 { a } else { b }).collect();
                let ts: Vec<f64> = reports.iter().map(|r| r.t_system_bps).collect();
                let (m, lo, hi) = mean_ci95(&ts);
                let mos: Vec<f64> = reports.iter().filter_map(|r| r.mean_mos).collect();
                let sinr: Vec<f64> = reports.iter().filter_map(|r| r.mean_sinr_db).collect();
                sum_rows.push(vec![
                    mode.as_str().to_string(),
                    reports.len().to_string(),
                    m.to_string(),
                    lo.to_string(),
                    hi.to_string(),
                    mean_ci95(&sinr).0.to_string(),
                    mean_ci95(&mos).0.to_string(),
                ]);
            }
            vec![
                write_file(out, &data, &head, &EXPERIMENT_COLUMNS, &rows)?,
                write_file(
                    out,
                    &summary,
                    &head,
                    &["mode", "replications", "mean_t_system_bps", "ci95_low", "ci95_high", "mean_sinr_db", "mean_mos"],
                    &sum_rows,
                )?,
            ]
        }
        Preset::ComplexityVsPairs => {
            let mut rows = Vec::new();
            let mut by_pairs: std::collections::BTreeMap<usize, (Vec<f64>, Vec<f64>)> = Default::default();
            for &n_users in &cfg.plan.n_users_sweep {
                let runs = replicate(&cfg.plan, |_, p| {
                    let base = SimulationPlan { n_users, mode: AllocationMode::Sbrra, neighbor_sectors: true, ..p };
                    let s = run_scenario(radio, &SimulationPlan { sectored: true, ..base.clone() }, script, None)?;
                    let u = run_scenario(radio, &SimulationPlan { sectored: false, ..base }, script, None)?;
                    Ok((s, u))
                })?;
                for (rep, (s, u)) in runs.iter().enumerate() {
                    for (a, b) in s.iterations.iter().zip(&u.iterations) {
                        let (sw, uw) = (a.complexity_w.unwrap_or(0.0), b.complexity_w.unwrap_or(0.0));
                        rows.push(vec![
                            n_users.to_string(),
                            rep.to_string(),
                            a.iteration.to_string(),
                            a.n_pairs.to_string(),
                            sw.to_string(),
                            uw.to_string(),
                        ]);
                        let e = by_pairs.entry(a.n_pairs).or_default();
                        e.0.push(sw);
                        e.1.push(uw);
                    }
                }
            }
            let sum_rows: Vec<Row> = by_pairs
                .iter()
                .map(|(n, (s, u))| {
                    vec![n.to_string(), s.len().to_string(), mean_ci95(s).0.to_string(), mean_ci95(u).0.to_string()]
                })
                .collect();
            vec![
                write_file(out, &data, &head, &COMPLEXITY_COLUMNS, &rows)?,
                write_file(
                    out,
                    &summary,
                    &head,
                    &["n_pairs", "samples", "mean_sectored_w", "mean_unsectored_w"],
                    &sum_rows,
                )?,
            ]
        }
    };
    Ok(files)
}

fn iteration_summary(reports: &[ScenarioReport<f64>]) -> Vec<Row> {
    let q = reports.first().map_or(0, |r| r.iterations.len());
    (0..q)
        .map(|i| {
            let totals: Vec<f64> = reports.iter().map(|r| r.iterations[i].iteration_total_bps).collect();
            let (m, lo, hi) = mean_ci95(&totals);
            let served = reports.iter().flat_map(|r| r.iterations[i].served());
            let sinr: Vec<f64> = served.filter_map(|o| o.decision.sinr_per_rb.map(linear_to_db)).collect();
            let mos: Vec<f64> = reports.iter().flat_map(|r| r.iterations[i].outcomes.iter().map(|o| o.mos)).collect();
            vec![
                (i + 1).to_string(),
                m.to_string(),
                lo.to_string(),
                hi.to_string(),
                mean_ci95(&sinr).0.to_string(),
                mean_ci95(&mos).0.to_string(),
            ]
        })
        .collect()
}

fn application_summary(reports: &[ScenarioReport<f64>]) -> Vec<Row> {
    Application::ALL
        .iter()
        .map(|&app| {
            let outcomes: Vec<_> = reports
                .iter()
                .flat_map(|r| r.iterations.iter().flat_map(|it| it.served()))
                .filter(|o| o.decision.application == app)
                .collect();
            let t: Vec<f64> = outcomes.iter().map(|o| o.throughput_bps).collect();
            let mos: Vec<f64> = outcomes.iter().map(|o| o.mos).collect();
            let (m, lo, hi) = mean_ci95(&t);
            vec![
                app.to_string(),
                outcomes.len().to_string(),
                m.to_string(),
                lo.to_string(),
                hi.to_string(),
                mean_ci95(&mos).0.to_string(),
            ]
        })
        .collect()
}

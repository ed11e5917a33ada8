//! Simulation plan and the `key = value` config file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::{BsPowerDivision, RadioConfig};
use crate::error::{Error, Result};
use crate::hmm::SinrBuckets;
use crate::sbrra::{AllocationPolicy, ShareRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AllocationMode {
    #[default]
    Sbrra,
    Hmm,
}

impl AllocationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AllocationMode::Sbrra => "sbrra",
            AllocationMode::Hmm => "hmm",
        }
    }
}

impl FromStr for AllocationMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "sbrra" => Ok(Self::Sbrra),
            "hmm" => Ok(Self::Hmm),
            other => Err(format!("expected sbrra|hmm, got `{other}`")),
        }
    }
}

/// Everything about a run that is not a physical-layer constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    /// Users per sector.
    pub n_users: usize,
    pub radius_m: f64,
    /// Iterations per scenario.
    pub q: u32,
    pub seed: u64,
    pub mode: AllocationMode,
    pub sectored: bool,
    pub demand_script: Option<PathBuf>,
    pub replications: usize,
    pub a2_rb: u32,
    pub share_rule: ShareRule,
    /// Geometric scenarios used to build the HMM training corpus.
    pub hmm_warmup_scenarios: usize,
    pub sinr_bucket_start_db: f64,
    pub sinr_bucket_width_db: f64,
    pub sinr_bucket_count: usize,
    /// Deploy the two neighbouring sectors as background interferers.
    pub neighbor_sectors: bool,
    /// Radius sweep of the pairs-vs-radius preset.
    pub radii_m: Vec<f64>,
    /// User-count sweep of the complexity-vs-pairs preset.
    pub n_users_sweep: Vec<usize>,
}

impl Default for SimulationPlan {
    fn default() -> Self {
        Self {
            n_users: 30,
            radius_m: 500.0,
            q: 5,
            seed: 1,
            mode: AllocationMode::Sbrra,
            sectored: true,
            demand_script: None,
            replications: 100,
            a2_rb: 3,
            share_rule: ShareRule::RetainOne,
            hmm_warmup_scenarios: 20,
            sinr_bucket_start_db: 0.0,
            sinr_bucket_width_db: 10.0,
            sinr_bucket_count: 8,
            neighbor_sectors: true,
            radii_m: vec![500.0, 1000.0, 2000.0],
            n_users_sweep: vec![30, 50, 100],
        }
    }
}

impl SimulationPlan {
    pub fn policy(&self) -> AllocationPolicy {
        AllocationPolicy { a2_rb: self.a2_rb, share_rule: self.share_rule }
    }

    pub fn buckets(&self) -> SinrBuckets<f64> {
        SinrBuckets {
            start_db: self.sinr_bucket_start_db,
            width_db: self.sinr_bucket_width_db,
            count: self.sinr_bucket_count,
        }
    }

    pub fn validate(&self, n_rb: u32) -> Result<()> {
        let range = |key: &str, msg: String| Err(Error::ConfigRange { key: key.into(), msg });
        if self.q == 0 {
            return range("q", "need at least one iteration".into());
        }
        if self.replications == 0 {
            return range("replications", "need at least one replication".into());
        }
        if !(self.radius_m > 0.0 && self.radius_m.is_finite()) {
            return range("radius_m", format!("must be positive, got {}", self.radius_m));
        }
        if self.a2_rb == 0 || self.a2_rb >= n_rb {
            return range("a2_rb", format!("must lie in 1..{n_rb}, got {}", self.a2_rb));
        }
        if n_rb <= 5 {
            return range("n_rb", format!("A1 demands 5 RBs, so n_rb must exceed 5, got {n_rb}"));
        }
        if self.sinr_bucket_count == 0 {
            return range("sinr_bucket_count", "need at least one bucket".into());
        }
        if !(self.sinr_bucket_width_db > 0.0 && self.sinr_bucket_width_db.is_finite()) {
            return range("sinr_bucket_width_db", format!("must be positive, got {}", self.sinr_bucket_width_db));
        }
        if !self.sinr_bucket_start_db.is_finite() {
            return range("sinr_bucket_start_db", "must be finite".into());
        }
        if self.radii_m.iter().any(|r| !(*r > 0.0 && r.is_finite())) || self.radii_m.is_empty() {
            return range("radii_m", "need one or more positive radii".into());
        }
        if self.n_users_sweep.is_empty() {
            return range("n_users_sweep", "need one or more user counts".into());
        }
        Ok(())
    }
}

/// A resolved configuration: radio constants plus the plan.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub radio: RadioConfig<f64>,
    pub plan: SimulationPlan,
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',').map(|s| s.trim().parse::<T>().map_err(|_| format!("bad list element `{}`", s.trim()))).collect()
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl Config {
    /// Parses config text. Relative `demand_script` paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim(), base_dir).map_err(|msg| Error::ConfigParse { line: line_no, msg })?;
        }
        cfg.radio.validate()?;
        cfg.plan.validate(cfg.radio.n_rb)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent())
    }

    fn set(&mut self, key: &str, v: &str, base_dir: Option<&Path>) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse::<T>().map_err(|_| format!("cannot parse `{v}` for {key}"))
        }
        fn flag(key: &str, v: &str) -> std::result::Result<bool, String> {
            match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(format!("expected a boolean for {key}, got `{v}`")),
            }
        }
        let r = &mut self.radio;
        let p = &mut self.plan;
        match key {
            "p_bs_dbm" => r.p_bs_dbm = num(key, v)?,
            "p_cell_max_dbm" => r.p_cell_max_dbm = num(key, v)?,
            "p_d2d_max_dbm" => r.p_d2d_max_dbm = num(key, v)?,
            "noise_dbm" => r.noise_dbm = num(key, v)?,
            "rb_bandwidth_hz" => r.rb_bandwidth_hz = num(key, v)?,
            "n_rb" => r.n_rb = num(key, v)?,
            "d0_m" => r.d0_m = num(key, v)?,
            "dmax_m" => r.dmax_m = num(key, v)?,
            "fc_mhz" => r.fc_mhz = num(key, v)?,
            "sinr_threshold_db" => r.sinr_threshold_db = num(key, v)?,
            "bs_power_division" => r.bs_power_division = v.parse::<BsPowerDivision>()?,
            "shadowing_sigma_db" => r.shadowing_sigma_db = num(key, v)?,
            "n_users" => p.n_users = num(key, v)?,
            "radius_m" => p.radius_m = num(key, v)?,
            "q" => p.q = num(key, v)?,
            "seed" => p.seed = num(key, v)?,
            "mode" => p.mode = v.parse()?,
            "sectored" => p.sectored = flag(key, v)?,
            "demand_script" => {
                p.demand_script = (!v.is_empty()).then(|| match base_dir {
                    Some(dir) if Path::new(v).is_relative() => dir.join(v),
                    _ => PathBuf::from(v),
                })
            }
            "replications" => p.replications = num(key, v)?,
            "a2_rb" => p.a2_rb = num(key, v)?,
            "share_rule" => p.share_rule = v.parse()?,
            "hmm_warmup_scenarios" => p.hmm_warmup_scenarios = num(key, v)?,
            "sinr_bucket_start_db" => p.sinr_bucket_start_db = num(key, v)?,
            "sinr_bucket_width_db" => p.sinr_bucket_width_db = num(key, v)?,
            "sinr_bucket_count" => p.sinr_bucket_count = num(key, v)?,
            "neighbor_sectors" => p.neighbor_sectors = flag(key, v)?,
            "radii_m" => p.radii_m = parse_list(v)?,
            "n_users_sweep" => p.n_users_sweep = parse_list(v)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Every key, one per line, in a fixed order. Parsing the output yields
    /// an identical config.
    pub fn to_text(&self) -> String {
        let r = &self.radio;
        let p = &self.plan;
        let script = p.demand_script.as_ref().map(|s| s.display().to_string()).unwrap_or_default();
        let rows: Vec<(&str, String)> = vec![
            ("p_bs_dbm", r.p_bs_dbm.to_string()),
            ("p_cell_max_dbm", r.p_cell_max_dbm.to_string()),
            ("p_d2d_max_dbm", r.p_d2d_max_dbm.to_string()),
            ("noise_dbm", r.noise_dbm.to_string()),
            ("rb_bandwidth_hz", r.rb_bandwidth_hz.to_string()),
            ("n_rb", r.n_rb.to_string()),
            ("d0_m", r.d0_m.to_string()),
            ("dmax_m", r.dmax_m.to_string()),
            ("fc_mhz", r.fc_mhz.to_string()),
            ("sinr_threshold_db", r.sinr_threshold_db.to_string()),
            ("bs_power_division", r.bs_power_division.as_str().into()),
            ("shadowing_sigma_db", r.shadowing_sigma_db.to_string()),
            ("n_users", p.n_users.to_string()),
            ("radius_m", p.radius_m.to_string()),
            ("q", p.q.to_string()),
            ("seed", p.seed.to_string()),
            ("mode", p.mode.as_str().into()),
            ("sectored", p.sectored.to_string()),
            ("demand_script", script),
            ("replications", p.replications.to_string()),
            ("a2_rb", p.a2_rb.to_string()),
            ("share_rule", p.share_rule.as_str().into()),
            ("hmm_warmup_scenarios", p.hmm_warmup_scenarios.to_string()),
            ("sinr_bucket_start_db", p.sinr_bucket_start_db.to_string()),
            ("sinr_bucket_width_db", p.sinr_bucket_width_db.to_string()),
            ("sinr_bucket_count", p.sinr_bucket_count.to_string()),
            ("neighbor_sectors", p.neighbor_sectors.to_string()),
            ("radii_m", join(&p.radii_m)),
            ("n_users_sweep", join(&p.n_users_sweep)),
        ];
        let mut s = String::new();
        for (k, v) in rows {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Reads a config file; missing keys keep their defaults.
pub fn load_config(path: &Path) -> Result<(RadioConfig<f64>, SimulationPlan)> {
    let c = Config::load(path)?;
    Ok((c.radio, c.plan))
}

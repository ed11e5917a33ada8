//! Path loss, channel gains and power unit conversions.
//!
//! Everything past this module works in linear units (watts, linear gain).
//! dB and dBm only appear in [`RadioConfig`] and in reports.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scenario::{distance, Point};

/// How the BS transmit power enters the interference seen by a D2D receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BsPowerDivision {
    /// Full BS power on the shared RB.
    #[default]
    Literal,
    /// BS power divided evenly over the `n_rb` RBs of a grant.
    PerRb,
}

impl BsPowerDivision {
    pub fn as_str(&self) -> &'static str {
        match self {
            BsPowerDivision::Literal => "literal",
            BsPowerDivision::PerRb => "per_rb",
        }
    }
}

impl std::str::FromStr for BsPowerDivision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "literal" => Ok(Self::Literal),
            "per_rb" => Ok(Self::PerRb),
            other => Err(format!("expected literal|per_rb, got `{other}`")),
        }
    }
}

/// Physical-layer constants. Defaults are the reference LTE-like macro setup
/// (43 dBm BS, 6 RBs of 180 kHz, 20 m pairing distance, 50 m co-tier range).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig<T> {
    pub p_bs_dbm: T,
    pub p_cell_max_dbm: T,
    pub p_d2d_max_dbm: T,
    pub noise_dbm: T,
    pub rb_bandwidth_hz: T,
    /// RBs granted to a cellular user per replenishment (`r`).
    pub n_rb: u32,
    pub d0_m: T,
    pub dmax_m: T,
    pub fc_mhz: T,
    pub sinr_threshold_db: T,
    pub bs_power_division: BsPowerDivision,
    /// Log-normal shadowing standard deviation; 0 disables shadowing.
    pub shadowing_sigma_db: T,
}

impl<T: Scalar> Default for RadioConfig<T> {
    fn default() -> Self {
        Self {
            p_bs_dbm: T::lit(43.0),
            p_cell_max_dbm: T::lit(24.0),
            p_d2d_max_dbm: T::lit(21.0),
            noise_dbm: T::lit(-106.0),
            rb_bandwidth_hz: T::lit(180_000.0),
            n_rb: 6,
            d0_m: T::lit(20.0),
            dmax_m: T::lit(50.0),
            fc_mhz: T::lit(2000.0),
            sinr_threshold_db: T::zero(),
            bs_power_division: BsPowerDivision::Literal,
            shadowing_sigma_db: T::zero(),
        }
    }
}

impl<T: Scalar> RadioConfig<T> {
    /// Checks the config invariants, naming the first offending key.
    pub fn validate(&self) -> Result<()> {
        let range = |key: &str, msg: String| Err(Error::ConfigRange { key: key.to_string(), msg });
        // -inf dBm is allowed for powers: it silences a transmitter.
        for (key, v) in [
            ("p_bs_dbm", self.p_bs_dbm),
            ("p_cell_max_dbm", self.p_cell_max_dbm),
            ("p_d2d_max_dbm", self.p_d2d_max_dbm),
            ("noise_dbm", self.noise_dbm),
        ] {
            if v.is_nan() || v == T::infinity() {
                return range(key, format!("power must be finite or -inf, got {v}"));
            }
        }
        if self.n_rb < 2 {
            return range("n_rb", format!("need at least 2 RBs per grant, got {}", self.n_rb));
        }
        if !(self.rb_bandwidth_hz > T::zero()) || !self.rb_bandwidth_hz.is_finite() {
            return range("rb_bandwidth_hz", format!("must be positive, got {}", self.rb_bandwidth_hz));
        }
        if !(self.d0_m > T::zero()) || !self.d0_m.is_finite() {
            return range("d0_m", format!("must be positive, got {}", self.d0_m));
        }
        if !(self.d0_m < self.dmax_m) || !self.dmax_m.is_finite() {
            return range("dmax_m", format!("must exceed d0_m ({}), got {}", self.d0_m, self.dmax_m));
        }
        if !(self.fc_mhz > T::zero()) || !self.fc_mhz.is_finite() {
            return range("fc_mhz", format!("must be positive, got {}", self.fc_mhz));
        }
        if !self.sinr_threshold_db.is_finite() {
            return range("sinr_threshold_db", format!("must be finite, got {}", self.sinr_threshold_db));
        }
        if !(self.shadowing_sigma_db >= T::zero()) || !self.shadowing_sigma_db.is_finite() {
            return range("shadowing_sigma_db", format!("must be >= 0, got {}", self.shadowing_sigma_db));
        }
        Ok(())
    }

    pub fn noise_w(&self) -> T {
        dbm_to_watt(self.noise_dbm)
    }

    pub fn p_d2d_max_w(&self) -> T {
        dbm_to_watt(self.p_d2d_max_dbm)
    }

    /// Cellular power per RB: the max power split evenly over a grant of `n_rb`.
    pub fn p_cell_per_rb_w(&self) -> T {
        dbm_to_watt(self.p_cell_max_dbm) / T::from_u32(self.n_rb).unwrap()
    }

    pub fn p_bs_effective_w(&self) -> T {
        let p = dbm_to_watt(self.p_bs_dbm);
        match self.bs_power_division {
            BsPowerDivision::Literal => p,
            BsPowerDivision::PerRb => p / T::from_u32(self.n_rb).unwrap(),
        }
    }

    pub fn sinr_threshold_linear(&self) -> T {
        db_to_linear(self.sinr_threshold_db)
    }
}

/// Path loss in dB. Links up to `d0` use the short-range D2D model
/// `40 log10(d_km) + 30 log10(fc_MHz) + 49`; longer ones the macro model
/// `148.1 + 37.6 log10(d_km)`. The two branches are discontinuous at `d0`.
pub fn path_loss_db<T: Scalar>(dist_m: T, cfg: &RadioConfig<T>) -> Result<T> {
    if !(dist_m > T::zero()) {
        return Err(Error::Domain(format!("path loss needs a positive distance, got {dist_m}")));
    }
    let d_km = dist_m / T::lit(1000.0);
    Ok(if dist_m <= cfg.d0_m {
        T::lit(40.0) * d_km.log10() + T::lit(30.0) * cfg.fc_mhz.log10() + T::lit(49.0)
    } else {
        T::lit(148.1) + T::lit(37.6) * d_km.log10()
    })
}

pub fn gain_from_path_loss<T: Scalar>(pl_db: T) -> T {
    T::lit(10.0).powf(-pl_db / T::lit(10.0))
}

pub fn dbm_to_watt<T: Scalar>(p_dbm: T) -> T {
    T::lit(10.0).powf(p_dbm / T::lit(10.0)) / T::lit(1000.0)
}

pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

pub fn linear_to_db<T: Scalar>(lin: T) -> T {
    T::lit(10.0) * lin.log10()
}

/// Deterministic path-loss gain between two points.
pub fn link_gain<T: Scalar>(a: &Point<T>, b: &Point<T>, cfg: &RadioConfig<T>) -> Result<T> {
    Ok(gain_from_path_loss(path_loss_db(distance(a, b), cfg)?))
}

/// Channel used by the allocation engine: path loss plus optional shadowing.
///
/// The shadowing draw is a pure function of the unordered link endpoints and
/// `shadow_seed`, so `gain(a, b) == gain(b, a)` and repeated evaluations agree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel<T> {
    pub cfg: RadioConfig<T>,
    pub shadow_seed: u64,
}

impl<T: Scalar> Channel<T> {
    pub fn new(cfg: RadioConfig<T>) -> Self {
        Self { cfg, shadow_seed: 0 }
    }

    pub fn with_shadow_seed(cfg: RadioConfig<T>, shadow_seed: u64) -> Self {
        Self { cfg, shadow_seed }
    }

    pub fn gain(&self, a: &Point<T>, b: &Point<T>) -> Result<T> {
        let pl = path_loss_db(distance(a, b), &self.cfg)?;
        if self.cfg.shadowing_sigma_db > T::zero() {
            let z: f64 = StandardNormal.sample(&mut ChaCha8Rng::seed_from_u64(self.link_key(a, b)));
            Ok(gain_from_path_loss(pl + self.cfg.shadowing_sigma_db * T::lit(z)))
        } else {
            Ok(gain_from_path_loss(pl))
        }
    }

    fn link_key(&self, a: &Point<T>, b: &Point<T>) -> u64 {
        let bits = |p: &Point<T>| (p.x.as_f64().to_bits(), p.y.as_f64().to_bits());
        let (ka, kb) = (bits(a), bits(b));
        let (lo, hi) = if ka <= kb { (ka, kb) } else { (kb, ka) };
        [lo.0, lo.1, hi.0, hi.1].iter().fold(splitmix64(self.shadow_seed), |h, &w| splitmix64(h ^ w))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

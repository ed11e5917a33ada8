//! Sector geometry, random user drops and distance-gated pair formation.
//!
//! Users are dropped uniformly over the area of a circular sector whose apex
//! is the base station. Pairs are formed by a greedy scan in drop order: the
//! first still-unpaired user within `(0, d0]` of an unpaired user becomes its
//! receiver, and whoever is left over stays a cellular user.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A position in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn midpoint(&self, other: &Self) -> Self {
        let half = T::lit(0.5);
        Self::new((self.x + other.x) * half, (self.y + other.y) * half)
    }

    /// Azimuth of `self` seen from `from`, degrees in `[0, 360)`.
    pub fn azimuth_deg_from(&self, from: &Self) -> T {
        let deg = (self.y - from.y).atan2(self.x - from.x).to_degrees();
        let full = T::lit(360.0);
        let wrapped = deg % full;
        if wrapped < T::zero() {
            wrapped + full
        } else {
            wrapped
        }
    }
}

/// Euclidean distance between two points.
pub fn distance<T: Scalar>(a: &Point<T>, b: &Point<T>) -> T {
    (a.x - b.x).hypot(a.y - b.y)
}

/// A circular sector with the base station at its apex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorGeometry<T> {
    /// Sector index within the cell; pairs inherit it for the sector filter.
    pub index: usize,
    pub radius_m: T,
    pub arc_deg: T,
    /// Azimuth of the sector bisector.
    pub orientation_deg: T,
    pub apex: Point<T>,
}

impl<T: Scalar> SectorGeometry<T> {
    pub fn new(index: usize, radius_m: T, arc_deg: T, orientation_deg: T, apex: Point<T>) -> Result<Self> {
        if !(radius_m > T::zero()) || !radius_m.is_finite() {
            return Err(Error::Geometry(format!("sector radius must be positive, got {radius_m}")));
        }
        if !(arc_deg > T::zero() && arc_deg <= T::lit(360.0)) {
            return Err(Error::Geometry(format!("sector arc must be in (0, 360], got {arc_deg}")));
        }
        Ok(Self { index, radius_m, arc_deg, orientation_deg, apex })
    }

    /// Sector `index` (0, 1 or 2) of a tri-sectored cell centred on the origin.
    /// Sector 0 points north; the others follow counter-clockwise.
    pub fn tri_sector(index: usize, radius_m: T) -> Result<Self> {
        if index > 2 {
            return Err(Error::Geometry(format!("tri-sector index {index} out of range")));
        }
        let orientation = T::lit(90.0 + 120.0 * index as f64);
        Self::new(index, radius_m, T::lit(120.0), orientation, Point::origin())
    }

    /// Signed angular offset from the bisector, degrees in `(-180, 180]`.
    fn offset_from_bisector(&self, p: &Point<T>) -> T {
        let full = T::lit(360.0);
        let half = T::lit(180.0);
        let mut off = (p.azimuth_deg_from(&self.apex) - self.orientation_deg) % full;
        if off > half {
            off = off - full;
        } else if off <= -half {
            off = off + full;
        }
        off
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        let tol = T::lit(1e-9) * self.radius_m.max(T::one());
        let r = distance(p, &self.apex);
        if r > self.radius_m + tol {
            return false;
        }
        if r <= tol || self.arc_deg >= T::lit(360.0) {
            return true;
        }
        self.offset_from_bisector(p).abs() <= self.arc_deg * T::lit(0.5) + T::lit(1e-9)
    }
}

/// Drops `n` users uniformly over the sector area.
///
/// Radius is `R·sqrt(u)` and azimuth is uniform over the arc, which gives a
/// constant areal density. Two uniforms are drawn per user, radius first.
pub fn deploy_users<T: Scalar, R: Rng + ?Sized>(sector: &SectorGeometry<T>, n: usize, rng: &mut R) -> Vec<Point<T>> {
    let start = sector.orientation_deg - sector.arc_deg * T::lit(0.5);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let r = sector.radius_m * T::lit(u).sqrt();
            let theta = (start + sector.arc_deg * T::lit(v)).to_radians();
            Point::new(sector.apex.x + r * theta.cos(), sector.apex.y + r * theta.sin())
        })
        .collect()
}

/// Two proximate users communicating directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D2DPair<T> {
    /// Slot index within its deployment (stable identity across iterations).
    pub id: usize,
    pub tx: Point<T>,
    pub rx: Point<T>,
    pub sector: usize,
}

impl<T: Scalar> D2DPair<T> {
    pub fn length(&self) -> T {
        distance(&self.tx, &self.rx)
    }

    /// Reference point used for the co-tier distance gate.
    pub fn location(&self) -> Point<T> {
        self.tx.midpoint(&self.rx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellularUser<T> {
    pub id: usize,
    pub location: Point<T>,
}

/// One sector's users partitioned into D2D pairs and cellular users.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment<T> {
    pub sector: SectorGeometry<T>,
    pub pairs: Vec<D2DPair<T>>,
    pub cellular: Vec<CellularUser<T>>,
    pub n_total: usize,
}

impl<T: Scalar> Deployment<T> {
    /// Builds a deployment from explicit pair and cellular positions (ids are
    /// assigned by position). Rejects pairs longer than `d0` or of zero length.
    pub fn from_parts(
        sector: SectorGeometry<T>,
        pairs: Vec<(Point<T>, Point<T>)>,
        cellular: Vec<Point<T>>,
        d0: T,
    ) -> Result<Self> {
        let pairs = pairs
            .into_iter()
            .enumerate()
            .map(|(id, (tx, rx))| {
                let len = distance(&tx, &rx);
                if !(len > T::zero() && len <= d0) {
                    return Err(Error::Geometry(format!("pair {id} has length {len}, outside (0, {d0}]")));
                }
                Ok(D2DPair { id, tx, rx, sector: sector.index })
            })
            .collect::<Result<Vec<_>>>()?;
        let cellular: Vec<_> =
            cellular.into_iter().enumerate().map(|(id, location)| CellularUser { id, location }).collect();
        let n_total = 2 * pairs.len() + cellular.len();
        Ok(Self { sector, pairs, cellular, n_total })
    }

    pub fn d(&self) -> usize {
        self.pairs.len()
    }

    pub fn c(&self) -> usize {
        self.cellular.len()
    }
}

/// Greedy pair formation in list order.
pub fn form_pairs<T: Scalar>(sector: &SectorGeometry<T>, users: &[Point<T>], d0: T) -> Deployment<T> {
    let mut taken = vec![false; users.len()];
    let mut pairs = Vec::new();
    for x in 0..users.len() {
        if taken[x] {
            continue;
        }
        for y in (x + 1)..users.len() {
            if taken[y] {
                continue;
            }
            let dist = distance(&users[x], &users[y]);
            if dist <= d0 && dist != T::zero() {
                taken[x] = true;
                taken[y] = true;
                pairs.push(D2DPair { id: pairs.len(), tx: users[x], rx: users[y], sector: sector.index });
                break;
            }
        }
    }
    let cellular = users
        .iter()
        .zip(&taken)
        .filter(|(_, &t)| !t)
        .enumerate()
        .map(|(id, (p, _))| CellularUser { id, location: *p })
        .collect();
    Deployment { sector: *sector, pairs, cellular, n_total: users.len() }
}

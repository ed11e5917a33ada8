//! Interference terms at a D2D receiver and the resulting per-RB SINR.

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scenario::{distance, CellularUser, D2DPair, Point};

/// The three interference sources seen by one D2D receiver, in watts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InterferenceBreakdown<T> {
    pub from_bs_w: T,
    pub from_cellular_residual_w: T,
    pub from_cotier_w: T,
    pub total_w: T,
}

impl<T: Scalar> InterferenceBreakdown<T> {
    pub fn new(from_bs_w: T, from_cellular_residual_w: T, from_cotier_w: T) -> Self {
        Self {
            from_bs_w,
            from_cellular_residual_w,
            from_cotier_w,
            total_w: from_bs_w + from_cellular_residual_w + from_cotier_w,
        }
    }
}

/// Another D2D transmitter active during the iteration, with its RB count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveTransmitter<T> {
    pub pair: D2DPair<T>,
    pub k: u32,
}

pub fn bs_interference<T: Scalar>(pair: &D2DPair<T>, ch: &Channel<T>, bs: &Point<T>) -> Result<T> {
    if distance(&pair.rx, bs) == T::zero() {
        return Err(Error::Domain(format!("receiver of pair {} sits on the base station", pair.id)));
    }
    let p = ch.cfg.p_bs_effective_w();
    if p == T::zero() {
        return Ok(T::zero());
    }
    Ok(p * ch.gain(bs, &pair.rx)?)
}

/// Leakage from the RBs the partner keeps for itself: `(holdings - k_shared)`
/// RBs at the partner's per-RB power through one flat gain.
pub fn residual_cellular_interference<T: Scalar>(
    pair: &D2DPair<T>,
    partner: &CellularUser<T>,
    holdings: u32,
    k_shared: u32,
    ch: &Channel<T>,
) -> Result<T> {
    if k_shared > holdings {
        return Err(Error::Contract(format!(
            "cellular user {} cannot share {k_shared} RBs while holding {holdings}",
            partner.id
        )));
    }
    let residual = holdings - k_shared;
    if residual == 0 {
        return Ok(T::zero());
    }
    let g = ch.gain(&partner.location, &pair.rx)?;
    Ok(T::from_u32(residual).unwrap() * ch.cfg.p_cell_per_rb_w() * g)
}

/// Co-tier interference from other active D2D transmitters whose pair
/// midpoint lies within `dmax_m` of this pair's midpoint. With `sectored`,
/// transmitters from other sectors are ignored.
pub fn cotier_interference<T: Scalar>(
    pair: &D2DPair<T>,
    others: &[ActiveTransmitter<T>],
    ch: &Channel<T>,
    sectored: bool,
) -> Result<T> {
    let here = pair.location();
    let p_max = ch.cfg.p_d2d_max_w();
    let mut sum = T::zero();
    for other in others {
        if sectored && other.pair.sector != pair.sector {
            continue;
        }
        if distance(&other.pair.location(), &here) > ch.cfg.dmax_m {
            continue;
        }
        if other.k == 0 {
            return Err(Error::Contract(format!("interfering pair {} transmits on zero RBs", other.pair.id)));
        }
        let g = ch.gain(&other.pair.tx, &pair.rx)?;
        sum = sum + p_max / T::from_u32(other.k).unwrap() * g;
    }
    Ok(sum)
}

/// Whether `other` would count towards `pair`'s co-tier interference without
/// the sector filter but not with it.
pub fn is_cross_sector_neighbour<T: Scalar>(pair: &D2DPair<T>, other: &D2DPair<T>, dmax_m: T) -> bool {
    other.sector != pair.sector && distance(&other.location(), &pair.location()) <= dmax_m
}

/// SINR on each of the `k_alloc` RBs: the D2D max power is split evenly over
/// the allocated RBs and the channel is flat.
pub fn sinr_per_rb<T: Scalar>(
    pair: &D2DPair<T>,
    k_alloc: u32,
    breakdown: &InterferenceBreakdown<T>,
    ch: &Channel<T>,
) -> Result<T> {
    if k_alloc == 0 {
        return Err(Error::Contract(format!("pair {} allocated zero RBs", pair.id)));
    }
    let signal = ch.cfg.p_d2d_max_w() / T::from_u32(k_alloc).unwrap() * ch.gain(&pair.tx, &pair.rx)?;
    Ok(signal / (ch.cfg.noise_w() + breakdown.total_w))
}

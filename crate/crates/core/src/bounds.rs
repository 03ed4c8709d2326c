//! Closed-form bound calculators: covering numbers, mistake and regret
//! bounds, probability tails for the risk guarantees, and the
//! witness-relative comparator losses the bounds are stated against.
//!
//! Tails are evaluated in natural-log space and clamped to `[0, 1]` on
//! return; at desk scale they are usually vacuous, and the raw log value is
//! kept alongside so nothing overflows or silently saturates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::Example;
use crate::util;

/// Covering-number upper bound for a linear ball, kept in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveringNumber {
    pub ln_value: f64,
}

impl CoveringNumber {
    /// The plain value; `f64::INFINITY` when not representable.
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// `N(B_R, eta) <= (2R/eta + 1)^d`, and exactly 1 when `eta > R`.
/// The boundary `eta = R` uses the formula branch.
pub fn covering_number_bound(radius: f64, eta: f64, d: u32) -> CoveringNumber {
    if eta > radius {
        CoveringNumber { ln_value: 0.0 }
    } else {
        CoveringNumber {
            ln_value: d as f64 * (2.0 * radius / eta + 1.0).ln(),
        }
    }
}

/// Cumulative-loss bound for the AUC-maximization learner:
/// `((sqrt(4R^2 + 2) + sqrt(gamma * M*)) / gamma)^2`. The identical formula
/// serves the finite-buffer variant with the buffered comparator loss.
pub fn oam_mistake_bound(radius: f64, gamma: f64, m_star: f64) -> f64 {
    let root = (4.0 * radius * radius + 2.0).sqrt() + (gamma * m_star).sqrt();
    (root / gamma) * (root / gamma)
}

/// Perceptron mistake bound `((R + sqrt(gamma * D1)) / gamma)^2` where `D1`
/// is the one-norm of the comparator's hinge losses.
pub fn perceptron_mistake_bound(radius: f64, gamma: f64, d1: f64) -> f64 {
    let root = radius + (gamma * d1).sqrt();
    (root / gamma) * (root / gamma)
}

/// Projected-gradient regret bound `G * D * sqrt(T)`. The ranking
/// instantiation has `G = 1/U` and `D = U`, so the bound is `sqrt(T)`.
pub fn ogd_regret_bound(gradient_bound: f64, diameter: f64, horizon: usize) -> f64 {
    gradient_bound * diameter * (horizon as f64).sqrt()
}

/// `|B_t| = min(t - 1, capacity)`: the buffer size in force at round `t`.
pub fn buffer_size_at(t: usize, capacity: Option<usize>) -> usize {
    let prefix = t.saturating_sub(1);
    match capacity {
        Some(cap) => prefix.min(cap),
        None => prefix,
    }
}

/// Which probability-tail formula to evaluate. The buffered variants take
/// the buffer size in force at round `floor(c * n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailVariant {
    /// Ensemble-average tail: `[2N + 1] exp(-(cn - 1) eps^2 / 64 + ln n)`
    /// with covering radius `eps / (16 Lip)`.
    Theorem1,
    /// Selected-hypothesis tail: `2[N + 1] exp(-(cn - 1) eps^2 / 256 + 2 ln n)`
    /// with covering radius `eps / (32 Lip)`.
    Theorem2,
    /// Buffered ensemble-average tail: as `Theorem1` with `cn - 1` replaced
    /// by `|B_cn| - 1`.
    Theorem7 { buffer_at_cn: usize },
    /// Buffered selected-hypothesis tail: factor and exponent as `Theorem2`
    /// but covering radius `eps / (16 Lip)`, with `|B_cn| - 1`.
    Theorem8 { buffer_at_cn: usize },
}

/// A probability tail with its unclamped log value and the finite-sample
/// applicability flag of the underlying argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    /// Clamped to `[0, 1]`.
    pub probability: f64,
    /// Raw natural log of the tail expression.
    pub ln_raw: f64,
    /// Whether `n` meets the variant's "sufficiently large" threshold
    /// (`n > 2 / (eps^2 c^2)` for the full-history variants,
    /// `(1 - c)^2 n >= 1/2` for the buffered ones).
    pub sufficient_n: bool,
}

/// Evaluates the requested risk-tail formula for a linear hypothesis ball
/// of sup-norm radius `hypothesis_sup_radius` in dimension `d`, a loss with
/// Lipschitz constant `lip`, window fraction `c` and accuracy `eps`.
pub fn risk_bound_tail(
    n: usize,
    c: f64,
    eps: f64,
    d: u32,
    hypothesis_sup_radius: f64,
    lip: f64,
    variant: TailVariant,
) -> Result<TailBound> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid("c", "must lie in (0, 1)"));
    }
    if !(eps > 0.0) || !(lip > 0.0) || !(hypothesis_sup_radius > 0.0) || n == 0 {
        return Err(Error::invalid("tail", "parameters must be positive"));
    }
    let nf = n as f64;
    let cn = c * nf;
    let (cover_divisor, exponent_scale, effective_rounds, log_n_mult, doubles_cover) =
        match variant {
            TailVariant::Theorem1 => (16.0, 64.0, cn - 1.0, 1.0, true),
            TailVariant::Theorem2 => (32.0, 256.0, cn - 1.0, 2.0, false),
            TailVariant::Theorem7 { buffer_at_cn } => {
                (16.0, 64.0, buffer_at_cn as f64 - 1.0, 1.0, true)
            }
            TailVariant::Theorem8 { buffer_at_cn } => {
                (16.0, 256.0, buffer_at_cn as f64 - 1.0, 2.0, false)
            }
        };
    let cover = covering_number_bound(hypothesis_sup_radius, eps / (cover_divisor * lip), d);
    // Factor structure: [2N + 1] for the ensemble variants, 2[N + 1] for
    // the selection variants.
    let ln_factor = if doubles_cover {
        util::ln_scaled_plus_one(2.0, cover.ln_value)
    } else {
        2.0f64.ln() + util::ln_scaled_plus_one(1.0, cover.ln_value)
    };
    let ln_raw = ln_factor - effective_rounds * eps * eps / exponent_scale + log_n_mult * nf.ln();
    let sufficient_n = match variant {
        TailVariant::Theorem1 | TailVariant::Theorem2 => nf > 2.0 / (eps * eps * c * c),
        TailVariant::Theorem7 { .. } | TailVariant::Theorem8 { .. } => {
            (1.0 - c) * (1.0 - c) * nf >= 0.5
        }
    };
    Ok(TailBound {
        probability: ln_raw.exp().clamp(0.0, 1.0),
        ln_raw,
        sufficient_n,
    })
}

/// End-to-end tail for the AUC-maximization learner: the selection tail
/// instantiated with the hypothesis ball its iterates provably stay in,
/// `2[(128 R^2 sqrt(5n) / eps + 1)^d + 1] exp(-(cn-1) eps^2 / 256 + 2 ln n)`;
/// a buffered capacity swaps `cn - 1` for `|B_cn| - 1`.
pub fn oam_risk_tail(
    n: usize,
    c: f64,
    eps: f64,
    d: u32,
    feature_radius: f64,
    capacity: Option<usize>,
) -> Result<TailBound> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid("c", "must lie in (0, 1)"));
    }
    if !(eps > 0.0) || !(feature_radius > 0.0) || n == 0 {
        return Err(Error::invalid("tail", "parameters must be positive"));
    }
    let nf = n as f64;
    let ln_cover = d as f64
        * (128.0 * feature_radius * feature_radius * (5.0 * nf).sqrt() / eps + 1.0).ln();
    let ln_factor = 2.0f64.ln() + util::ln_scaled_plus_one(1.0, ln_cover);
    let effective = match capacity {
        Some(_) => buffer_size_at((c * nf).floor() as usize, capacity) as f64 - 1.0,
        None => c * nf - 1.0,
    };
    let ln_raw = ln_factor - effective * eps * eps / 256.0 + 2.0 * nf.ln();
    Ok(TailBound {
        probability: ln_raw.exp().clamp(0.0, 1.0),
        ln_raw,
        sufficient_n: nf > 2.0 / (eps * eps * c * c),
    })
}

/// Hinge loss of the comparator direction on one pair at margin `gamma`:
/// `[gamma - <u, (y_t - y_j)/2 * (x_t - x_j)>]_+` for mixed labels, 0 for
/// equal labels.
fn comparator_pair_hinge(proj_t: f64, proj_j: f64, y_t: i32, y_j: i32, gamma: f64) -> f64 {
    if y_t == y_j {
        0.0
    } else {
        util::pos(gamma - 0.5 * ((y_t - y_j) as f64) * (proj_t - proj_j))
    }
}

/// Cumulative average comparator hinge loss over the full history
/// (`M*`), or over the FIFO buffer contents when a capacity is given
/// (`M_B*`). `u` need not be exactly unit norm; it is used as supplied.
pub fn oam_comparator_loss(
    u: &nalgebra::DVector<f64>,
    gamma: f64,
    stream: &[Example],
    capacity: Option<usize>,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma", "must be > 0"));
    }
    let proj: Vec<f64> = stream
        .iter()
        .map(|z| util::dot(u.as_slice(), z.x.as_slice()))
        .collect();
    let n = stream.len();
    let mut total = 0.0;
    for t in 1..n {
        let window_start = match capacity {
            Some(cap) => t.saturating_sub(cap),
            None => 0,
        };
        let size = t - window_start;
        if size == 0 {
            continue;
        }
        let mut round = 0.0;
        for j in window_start..t {
            round += comparator_pair_hinge(proj[t], proj[j], stream[t].y, stream[j].y, gamma);
        }
        total += round / size as f64;
    }
    Ok(total)
}

/// One-norm of the comparator's per-instance hinge losses at margin
/// `gamma`: `D1 = sum_t [gamma - y_t <u, x_t>]_+`.
pub fn perceptron_hinge_norm(
    u: &nalgebra::DVector<f64>,
    gamma: f64,
    stream: &[Example],
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma", "must be > 0"));
    }
    Ok(stream
        .iter()
        .map(|z| util::pos(gamma - (z.y as f64) * util::dot(u.as_slice(), z.x.as_slice())))
        .sum())
}

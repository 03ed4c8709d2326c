//! Pairwise loss functions.
//!
//! Every shipped loss is of the form `phi(label term, score term)` where the
//! score term is a pairwise ranking score difference or a quadratic form on
//! the pair difference. Each kind documents its range guarantee and the
//! Lipschitz constant of `phi` in its second argument, which the risk-tail
//! calculators consume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Example, Hypothesis, LinearScorer, MetricMatrix};
use crate::util::pos;

/// Identifies a pairwise loss together with its scale parameters.
///
/// `feature_radius` / `hypothesis_radius` are the ball radii the
/// normalization constants are built from; evaluations stay in `[0, 1]` when
/// inputs respect them (for `MetricHinge` the guarantee additionally needs
/// pair distance at most `feature_radius`, the support under which the
/// `1/(2 + U R^2)` scaling was chosen).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LossKind {
    /// 0-1 indicator that a mixed-label pair is ordered incorrectly.
    Misranking,
    /// `min([1 - s t]_+, 1)` with `s = (y1 - y2)/2`; zero on equal labels.
    BoundedHinge,
    /// `[1 - w^T (x1 - x2)(y1 - y2)]_+ / (1 + 4 R U)`.
    NormalizedHinge {
        feature_radius: f64,
        hypothesis_radius: f64,
        /// When set, statistics reporting excludes equal-label pairs, which
        /// otherwise contribute the constant `1/(1 + 4 R U)`. Learner updates
        /// never mask (the constant has zero gradient anyway).
        #[serde(default)]
        mask_equal_labels: bool,
    },
    /// Squared variant of the bounded hinge, clipped to `[0, 1]`:
    /// `min(([1 - s t]_+ / (1 + 4 R U))^2, 1)` with `s = (y1 - y2)/2`.
    /// Available for statistics; no shipped learner optimizes it.
    SquaredPairwise {
        feature_radius: f64,
        hypothesis_radius: f64,
    },
    /// `[1 - y_12 (1 - <A, (x1-x2)(x1-x2)^T>)]_+ / (2 + U R^2)` where
    /// `y_12 = +1` iff the labels agree.
    MetricHinge {
        feature_radius: f64,
        hypothesis_radius: f64,
    },
}

/// Lipschitz constant of a loss in its score argument, when one exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LipschitzBound {
    Constant(f64),
    /// Step losses (misranking) admit no finite constant.
    Unbounded,
}

impl LipschitzBound {
    pub fn constant(self) -> Option<f64> {
        match self {
            LipschitzBound::Constant(c) => Some(c),
            LipschitzBound::Unbounded => None,
        }
    }
}

/// 1 iff `(y1 - y2) * score_diff < 0`. Equal labels and zero score
/// differences count as correctly ranked (strict inequality).
pub fn misranking(y1: i32, y2: i32, score_diff: f64) -> f64 {
    if ((y1 - y2) as f64) * score_diff < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Bounded hinge `min([1 - s t]_+, 1)` for `s != 0`, exactly 0 for `s = 0`.
pub fn bounded_hinge(s: f64, t: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        pos(1.0 - s * t).min(1.0)
    }
}

/// Bounded hinge on a pair under a linear scorer:
/// `bounded_hinge((y_t - y_j)/2, score(x_t) - score(x_j))`.
pub fn oam_pair_loss(h: &LinearScorer, z_t: &Example, z_j: &Example) -> Result<f64> {
    let s_t = h.score(&z_t.x)?;
    let s_j = h.score(&z_j.x)?;
    Ok(bounded_hinge_scores(z_t.y, z_j.y, s_t, s_j))
}

#[inline]
fn bounded_hinge_scores(y1: i32, y2: i32, s1: f64, s2: f64) -> f64 {
    // (y1 - y2)/2 is exact for labels in {-1, +1}.
    bounded_hinge(((y1 - y2) as f64) / 2.0, s1 - s2)
}

fn check_radii(r: f64, u: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::invalid("feature_radius", format!("must be > 0, got {r}")));
    }
    if !(u > 0.0) {
        return Err(Error::invalid(
            "hypothesis_radius",
            format!("must be > 0, got {u}"),
        ));
    }
    Ok(())
}

/// Normalized hinge `[1 - w^T(x1 - x2)(y1 - y2)]_+ / (1 + 4 R U)`, in
/// `[0, 1]` whenever `|w| <= U` and `|x| <= R`. Equal-label pairs are not
/// masked here; they evaluate to the constant `1/(1 + 4 R U)`.
pub fn normalized_hinge(
    h: &LinearScorer,
    z1: &Example,
    z2: &Example,
    feature_radius: f64,
    hypothesis_radius: f64,
) -> Result<f64> {
    check_radii(feature_radius, hypothesis_radius)?;
    let s1 = h.score(&z1.x)?;
    let s2 = h.score(&z2.x)?;
    Ok(normalized_hinge_scores(
        z1.y,
        z2.y,
        s1,
        s2,
        feature_radius,
        hypothesis_radius,
    ))
}

#[inline]
fn normalized_hinge_scores(y1: i32, y2: i32, s1: f64, s2: f64, r: f64, u: f64) -> f64 {
    pos(1.0 - (s1 - s2) * ((y1 - y2) as f64)) / (1.0 + 4.0 * r * u)
}

#[inline]
fn squared_pairwise_scores(y1: i32, y2: i32, s1: f64, s2: f64, r: f64, u: f64) -> f64 {
    let s = ((y1 - y2) as f64) / 2.0;
    if s == 0.0 {
        return 0.0;
    }
    let scaled = pos(1.0 - s * (s1 - s2)) / (1.0 + 4.0 * r * u);
    (scaled * scaled).min(1.0)
}

/// Metric hinge `[1 - y_tj (1 - <A, X_tj>)]_+ / (2 + U R^2)` where
/// `y_tj = +1` iff labels agree and `X_tj` is the outer product of the pair
/// difference. Same-class pairs need squared distance 0 for zero loss;
/// different classes need squared distance at least 2.
pub fn metric_hinge(
    a: &MetricMatrix,
    z_t: &Example,
    z_j: &Example,
    feature_radius: f64,
    hypothesis_radius: f64,
) -> Result<f64> {
    check_radii(feature_radius, hypothesis_radius)?;
    let q = a.quadratic_form(&z_t.x, &z_j.x)?;
    Ok(metric_hinge_form(
        z_t.y,
        z_j.y,
        q,
        feature_radius,
        hypothesis_radius,
    ))
}

#[inline]
pub(crate) fn metric_hinge_form(y1: i32, y2: i32, q: f64, r: f64, u: f64) -> f64 {
    let agree = if y1 == y2 { 1.0 } else { -1.0 };
    pos(1.0 - agree * (1.0 - q)) / (2.0 + u * r * r)
}

impl LossKind {
    /// Rejects non-positive scale parameters.
    pub fn validate(&self) -> Result<()> {
        match *self {
            LossKind::Misranking | LossKind::BoundedHinge => Ok(()),
            LossKind::NormalizedHinge {
                feature_radius,
                hypothesis_radius,
                ..
            }
            | LossKind::SquaredPairwise {
                feature_radius,
                hypothesis_radius,
            }
            | LossKind::MetricHinge {
                feature_radius,
                hypothesis_radius,
            } => check_radii(feature_radius, hypothesis_radius),
        }
    }

    /// True when the loss is convex in the hypothesis, making it eligible
    /// for averaging arguments and the batch comparator oracle.
    pub fn is_convex(&self) -> bool {
        matches!(
            self,
            LossKind::NormalizedHinge { .. } | LossKind::MetricHinge { .. }
        )
    }

    /// True when statistics should skip equal-label pairs for this kind.
    pub fn masks_equal_labels(&self) -> bool {
        matches!(
            self,
            LossKind::NormalizedHinge {
                mask_equal_labels: true,
                ..
            }
        )
    }

    pub fn requires_metric(&self) -> bool {
        matches!(self, LossKind::MetricHinge { .. })
    }

    /// Evaluate on a pair under the given hypothesis.
    pub fn eval(&self, h: &Hypothesis, z1: &Example, z2: &Example) -> Result<f64> {
        match (self, h) {
            (LossKind::MetricHinge { .. }, Hypothesis::Metric(a)) => {
                self.validate()?;
                let q = a.quadratic_form(&z1.x, &z2.x)?;
                Ok(self.eval_metric_form(z1.y, z2.y, q))
            }
            (LossKind::MetricHinge { .. }, Hypothesis::Linear(_)) => Err(Error::LossMismatch),
            (_, Hypothesis::Metric(_)) => Err(Error::LossMismatch),
            (_, Hypothesis::Linear(w)) => {
                let s1 = w.score(&z1.x)?;
                let s2 = w.score(&z2.x)?;
                self.eval_linear_scores(z1.y, z2.y, s1, s2)
            }
        }
    }

    /// Evaluate a linear-hypothesis kind from precomputed scores. Produces
    /// bit-identical results to [`LossKind::eval`] because `eval` routes
    /// through the same kernel.
    pub fn eval_linear_scores(&self, y1: i32, y2: i32, s1: f64, s2: f64) -> Result<f64> {
        self.validate()?;
        match *self {
            LossKind::Misranking => Ok(misranking(y1, y2, s1 - s2)),
            LossKind::BoundedHinge => Ok(bounded_hinge_scores(y1, y2, s1, s2)),
            LossKind::NormalizedHinge {
                feature_radius,
                hypothesis_radius,
                ..
            } => Ok(normalized_hinge_scores(
                y1,
                y2,
                s1,
                s2,
                feature_radius,
                hypothesis_radius,
            )),
            LossKind::SquaredPairwise {
                feature_radius,
                hypothesis_radius,
            } => Ok(squared_pairwise_scores(
                y1,
                y2,
                s1,
                s2,
                feature_radius,
                hypothesis_radius,
            )),
            LossKind::MetricHinge { .. } => Err(Error::LossMismatch),
        }
    }

    /// Evaluate the metric kind from a precomputed quadratic form.
    pub fn eval_metric_form(&self, y1: i32, y2: i32, q: f64) -> f64 {
        match *self {
            LossKind::MetricHinge {
                feature_radius,
                hypothesis_radius,
            } => metric_hinge_form(y1, y2, q, feature_radius, hypothesis_radius),
            _ => panic!("eval_metric_form on a non-metric loss kind"),
        }
    }

    /// Tightest Lipschitz constant of the loss in its score argument on the
    /// stated domain.
    ///
    /// - `BoundedHinge`: label term `(y1-y2)/2` lies in `{-1, 0, 1}`, so 1.
    /// - `NormalizedHinge`: `|y1 - y2| <= 2` over the `1/(1+4RU)` scale.
    /// - `SquaredPairwise`: the unclipped inner hinge is at most `1 + 4RU`
    ///   on the stated support, giving `2 (1 + 4RU) / (1 + 4RU)^2`.
    /// - `MetricHinge`: unit label term over the `1/(2 + U R^2)` scale.
    /// - `Misranking`: a step function, no finite constant.
    pub fn lipschitz(&self) -> LipschitzBound {
        match *self {
            LossKind::Misranking => LipschitzBound::Unbounded,
            LossKind::BoundedHinge => LipschitzBound::Constant(1.0),
            LossKind::NormalizedHinge {
                feature_radius,
                hypothesis_radius,
                ..
            } => LipschitzBound::Constant(2.0 / (1.0 + 4.0 * feature_radius * hypothesis_radius)),
            LossKind::SquaredPairwise {
                feature_radius,
                hypothesis_radius,
            } => {
                let scale = 1.0 + 4.0 * feature_radius * hypothesis_radius;
                LipschitzBound::Constant(2.0 * scale / (scale * scale))
            }
            LossKind::MetricHinge {
                feature_radius,
                hypothesis_radius,
            } => LipschitzBound::Constant(
                1.0 / (2.0 + hypothesis_radius * feature_radius * feature_radius),
            ),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LossKind::Misranking => "misranking",
            LossKind::BoundedHinge => "bounded-hinge",
            LossKind::NormalizedHinge { .. } => "normalized-hinge",
            LossKind::SquaredPairwise { .. } => "squared-pairwise",
            LossKind::MetricHinge { .. } => "metric-hinge",
        };
        f.write_str(s)
    }
}

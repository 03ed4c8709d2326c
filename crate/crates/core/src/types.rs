//! Domain types shared by every other module: examples, hypotheses and traces.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::util;

/// One labeled instance. Binary problems use labels in `{-1, +1}`; metric
/// learning streams carry integer class ids and derive pairwise agreement.
///
/// Labels are stored as integers, not floats, so `(y_t - y_j) / 2` is exact
/// and the zero branch of the bounded hinge fires exactly on equal labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: DVector<f64>,
    pub y: i32,
}

impl Example {
    pub fn new(x: impl Into<Vec<f64>>, y: i32) -> Self {
        Example {
            x: DVector::from_vec(x.into()),
            y,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// True for `{-1, +1}` labels.
    pub fn is_binary(&self) -> bool {
        self.y == 1 || self.y == -1
    }
}

/// Linear scoring hypothesis `w`; ranks `x1` above `x2` when
/// `<w, x1> - <w, x2> > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    pub w: DVector<f64>,
}

impl LinearScorer {
    pub fn zeros(d: usize) -> Self {
        LinearScorer {
            w: DVector::zeros(d),
        }
    }

    pub fn from_vec(w: Vec<f64>) -> Self {
        LinearScorer {
            w: DVector::from_vec(w),
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// `<w, x>`.
    pub fn score(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.w.len() {
            return Err(Error::DimensionMismatch {
                expected: self.w.len(),
                got: x.len(),
            });
        }
        Ok(util::dot(self.w.as_slice(), x.as_slice()))
    }

    pub fn norm(&self) -> f64 {
        util::norm2(self.w.as_slice())
    }
}

/// `<w, x1> - <w, x2>`, the pairwise ranking score. Antisymmetric in the
/// two instances.
pub fn pairwise_score(h: &LinearScorer, x1: &DVector<f64>, x2: &DVector<f64>) -> Result<f64> {
    Ok(h.score(x1)? - h.score(x2)?)
}

/// Symmetric matrix parameterizing a squared Mahalanobis distance
/// `(x1 - x2)^T A (x1 - x2)`. Positive semi-definite after projection.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    mat: DMatrix<f64>,
}

/// Relative asymmetry tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

impl MetricMatrix {
    /// Wraps a symmetric matrix; rejects matrices whose max asymmetry exceeds
    /// `1e-12` relative to the largest entry.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        let mut max_abs = 0.0f64;
        let mut max_asym = 0.0f64;
        for i in 0..mat.nrows() {
            for j in 0..mat.ncols() {
                max_abs = max_abs.max(mat[(i, j)].abs());
                max_asym = max_asym.max((mat[(i, j)] - mat[(j, i)]).abs());
            }
        }
        if max_asym > SYMMETRY_TOL * max_abs.max(1e-300) && max_abs > 0.0 {
            return Err(Error::NotSymmetric {
                asymmetry: max_asym,
            });
        }
        Ok(MetricMatrix { mat })
    }

    pub fn zeros(d: usize) -> Self {
        MetricMatrix {
            mat: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(d: usize) -> Self {
        MetricMatrix {
            mat: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn frobenius_norm(&self) -> f64 {
        util::norm2(self.mat.as_slice())
    }

    /// `<A, (x1-x2)(x1-x2)^T>`, i.e. the raw quadratic form on the pair
    /// difference. No clamping; see [`mahalanobis_sq`] for the clamped form.
    pub fn quadratic_form(&self, x1: &DVector<f64>, x2: &DVector<f64>) -> Result<f64> {
        let d = self.mat.nrows();
        if x1.len() != d || x2.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: if x1.len() != d { x1.len() } else { x2.len() },
            });
        }
        let mut acc = 0.0;
        for i in 0..d {
            let di = x1[i] - x2[i];
            let mut row = 0.0;
            for j in 0..d {
                row += self.mat[(i, j)] * (x1[j] - x2[j]);
            }
            acc += di * row;
        }
        Ok(acc)
    }
}

/// Squared Mahalanobis distance `(x1-x2)^T A (x1-x2)`.
///
/// For a PSD matrix the value is nonnegative up to roundoff; negatives above
/// `-1e-9` are clamped to zero, larger negatives (indefinite input) pass
/// through untouched.
pub fn mahalanobis_sq(a: &MetricMatrix, x1: &DVector<f64>, x2: &DVector<f64>) -> Result<f64> {
    let v = a.quadratic_form(x1, x2)?;
    if v < 0.0 && v >= -1e-9 {
        Ok(0.0)
    } else {
        Ok(v)
    }
}

/// A hypothesis produced by one of the online learners.
#[derive(Debug, Clone, PartialEq)]
pub enum Hypothesis {
    Linear(LinearScorer),
    Metric(MetricMatrix),
}

impl Hypothesis {
    pub fn as_linear(&self) -> Option<&LinearScorer> {
        match self {
            Hypothesis::Linear(s) => Some(s),
            Hypothesis::Metric(_) => None,
        }
    }

    pub fn as_metric(&self) -> Option<&MetricMatrix> {
        match self {
            Hypothesis::Linear(_) => None,
            Hypothesis::Metric(m) => Some(m),
        }
    }
}

/// Which algorithm produced a trace. `NaivePair` is the one-pair-per-round
/// baseline driven by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    OamInfinite,
    OamFinite,
    OgdRankInfinite,
    OgdRankFinite,
    Perceptron,
    MetricOgd,
    NaivePair,
}

impl RunKind {
    pub fn is_buffered(self) -> bool {
        matches!(self, RunKind::OamFinite | RunKind::OgdRankFinite)
    }
}

impl std::fmt::Display for RunKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RunKind::OamInfinite => "oam-infinite",
            RunKind::OamFinite => "oam-finite",
            RunKind::OgdRankInfinite => "ogd-infinite",
            RunKind::OgdRankFinite => "ogd-finite",
            RunKind::Perceptron => "perceptron",
            RunKind::MetricOgd => "metric-ogd",
            RunKind::NaivePair => "naive-pair",
        };
        f.write_str(s)
    }
}

/// Static facts about a run, carried with its trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub kind: RunKind,
    pub n: usize,
    pub dim: usize,
    pub feature_radius: f64,
    pub hypothesis_radius: Option<f64>,
    pub learning_rate: Option<f64>,
    pub horizon: usize,
    pub capacity: Option<usize>,
    pub buffer_seed: Option<u64>,
    pub loss: LossKind,
    /// Statistic-window fraction used when snapshots are stored sparsely.
    pub stat_fraction: f64,
}

/// Per-round record. `stat` is the instantaneous pairwise statistic of the
/// pre-update hypothesis against the pre-insert history (absent on round 1),
/// `loss` is the round's contribution to the learner's cumulative loss and
/// `mistake` is set by the perceptron only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub stat: Option<f64>,
    pub loss: f64,
    pub mistake: Option<bool>,
}

/// Full record of an online run: per-round statistics plus hypothesis
/// snapshots. Snapshot slot `t` holds the hypothesis in force *before* round
/// `t + 1`, i.e. `h_t` with `h_0` the initial hypothesis; slots may be empty
/// under a sparse snapshot policy.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub meta: RunMeta,
    pub rounds: Vec<RoundRecord>,
    pub snapshots: Vec<Option<Hypothesis>>,
    pub final_hypothesis: Hypothesis,
}

impl RunTrace {
    pub fn n(&self) -> usize {
        self.meta.n
    }

    /// `h_t` for `t` in `0..=n`; `None` if the slot was not stored.
    pub fn hypothesis(&self, t: usize) -> Option<&Hypothesis> {
        if t == self.meta.n {
            Some(&self.final_hypothesis)
        } else {
            self.snapshots.get(t).and_then(|s| s.as_ref())
        }
    }

    /// `M_t` for round `t` in `1..=n` (`None` on rounds with empty history).
    pub fn stat(&self, t: usize) -> Option<f64> {
        self.rounds.get(t - 1).and_then(|r| r.stat)
    }

    /// Sum of per-round loss contributions over the whole run.
    pub fn cumulative_loss(&self) -> f64 {
        self.rounds.iter().map(|r| r.loss).sum()
    }

    /// Number of mistakes (perceptron traces).
    pub fn mistake_count(&self) -> usize {
        self.rounds
            .iter()
            .filter(|r| r.mistake == Some(true))
            .count()
    }
}

//! Sample statistics over online runs, the U-statistic suffix risk, the
//! penalized model-selection rule and the averaged hypothesis.
//!
//! Round indexing follows the trace convention: the statistic of round `t`
//! evaluates hypothesis `h_{t-1}` on the incoming example paired with every
//! stored prior example. The aggregate statistic averages rounds
//! `c_n <= t <= n - 1` with `c_n = ceil(c * n)`; round 1 has no statistic,
//! so windows reaching it are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::types::{Example, Hypothesis, LinearScorer, MetricMatrix, RunTrace};

/// Statistic window `{t : c_n <= t <= n - 1}` for a run of length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatWindow {
    pub c: f64,
    pub n: usize,
    pub c_n: usize,
    /// First round in the window (= `c_n`).
    pub start: usize,
    /// Last round in the window (= `n - 1`).
    pub end: usize,
}

/// Builds the statistic window, rejecting fractions outside `(0, 1)`,
/// empty windows and windows that would include the undefined round-1
/// statistic.
pub fn stat_window(c: f64, n: usize) -> Result<StatWindow> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid("c", "must lie in (0, 1)"));
    }
    let c_n = (c * n as f64).ceil() as usize;
    if c_n < 2 || c_n > n.saturating_sub(1) {
        return Err(Error::EmptyWindow { n, c_n });
    }
    Ok(StatWindow {
        c,
        n,
        c_n,
        start: c_n,
        end: n - 1,
    })
}

/// Mean pairwise loss of `h` on `(z_t, z_i)` over the prefix (or buffer
/// snapshot). Loss kinds that mask equal-label pairs average over the
/// unmasked pairs only; a fully masked prefix yields 0.
pub fn instant_stat(
    h: &Hypothesis,
    z_t: &Example,
    prefix: &[Example],
    loss: &LossKind,
) -> Result<f64> {
    if prefix.is_empty() {
        return Err(Error::EmptyHistory);
    }
    loss.validate()?;
    let mask = loss.masks_equal_labels();
    let mut sum = 0.0;
    let mut count = 0usize;
    match h {
        Hypothesis::Linear(w) => {
            let s_t = w.score(&z_t.x)?;
            for z_i in prefix {
                if mask && z_i.y == z_t.y {
                    continue;
                }
                let s_i = w.score(&z_i.x)?;
                sum += loss.eval_linear_scores(z_t.y, z_i.y, s_t, s_i)?;
                count += 1;
            }
        }
        Hypothesis::Metric(a) => {
            if !loss.requires_metric() {
                return Err(Error::LossMismatch);
            }
            for z_i in prefix {
                let q = a.quadratic_form(&z_t.x, &z_i.x)?;
                sum += loss.eval_metric_form(z_t.y, z_i.y, q);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok(sum / count as f64)
}

/// Window mean of the recorded per-round statistics: the aggregate online
/// statistic of the trace (buffered runs aggregate their buffered variant).
pub fn aggregate_stat(trace: &RunTrace, c: f64) -> Result<f64> {
    let window = stat_window(c, trace.n())?;
    let mut sum = 0.0;
    for t in window.start..=window.end {
        let m_t = trace
            .stat(t)
            .ok_or(Error::EmptyWindow { n: trace.n(), c_n: window.c_n })?;
        sum += m_t;
    }
    Ok(sum / (window.end - window.start + 1) as f64)
}

/// Unordered-pair mean of the loss over the sample: the U-statistic
/// empirical risk. Every shipped loss is symmetric under pair swap, so each
/// unordered pair is evaluated once, iterating `i < k` in sample order.
pub fn empirical_pairwise_risk(
    h: &Hypothesis,
    sample: &[Example],
    loss: &LossKind,
) -> Result<f64> {
    let m = sample.len();
    if m < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: m });
    }
    loss.validate()?;
    let mask = loss.masks_equal_labels();
    let mut sum = 0.0;
    let mut count = 0usize;
    match h {
        Hypothesis::Linear(w) => {
            let mut scores = Vec::with_capacity(m);
            for z in sample {
                scores.push(w.score(&z.x)?);
            }
            for i in 0..m {
                for k in (i + 1)..m {
                    if mask && sample[i].y == sample[k].y {
                        continue;
                    }
                    sum +=
                        loss.eval_linear_scores(sample[i].y, sample[k].y, scores[i], scores[k])?;
                    count += 1;
                }
            }
        }
        Hypothesis::Metric(a) => {
            if !loss.requires_metric() {
                return Err(Error::LossMismatch);
            }
            for i in 0..m {
                for k in (i + 1)..m {
                    let q = a.quadratic_form(&sample[i].x, &sample[k].x)?;
                    sum += loss.eval_metric_form(sample[i].y, sample[k].y, q);
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok(sum / count as f64)
}

/// Confidence penalty `sqrt(ln(2 (n - c_n)(n - c_n + 1) / delta) / (x - 1))`
/// added to the suffix risk of a hypothesis evaluated on `x` examples.
pub fn confidence_penalty(x: usize, n: usize, c: f64, delta: f64) -> Result<f64> {
    if x < 2 {
        return Err(Error::invalid("x", "suffix too short: need x >= 2"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid("delta", "must lie in (0, 1]"));
    }
    let window = stat_window(c, n)?;
    let span = (n - window.c_n) as f64;
    let log_term = (2.0 * span * (span + 1.0) / delta).ln();
    Ok((log_term / (x as f64 - 1.0)).sqrt())
}

/// Prescribes `delta = 2 (n - c_n + 1) exp(-(n - c_n) eps^2 / 64)` from a
/// target accuracy, the alternative entry point to a direct `delta`.
pub fn delta_from_epsilon(n: usize, c: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be > 0"));
    }
    let window = stat_window(c, n)?;
    let span = (n - window.c_n) as f64;
    Ok(2.0 * (span + 1.0) * (-span * eps * eps / 64.0).exp())
}

/// One candidate row of the model-selection table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionCandidate {
    /// Hypothesis index `t` (the hypothesis after round `t`).
    pub t: usize,
    /// Suffix empirical risk on the remaining `n - t` examples.
    pub suffix_risk: f64,
    /// Confidence penalty for a suffix of that length.
    pub penalty: f64,
    pub total: f64,
}

/// Outcome of the penalized-risk selection rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub chosen_t: usize,
    pub chosen: Hypothesis,
    /// Penalized risk of the chosen hypothesis (the table minimum).
    pub penalized_risk: f64,
    pub delta: f64,
    pub table: Vec<SelectionCandidate>,
}

/// Selects `argmin over c_n - 1 <= t <= n - 2` of suffix risk plus penalty,
/// breaking ties toward the smallest `t` (largest validation suffix). The
/// sample must be the stream the trace was produced on.
pub fn select_hypothesis(
    trace: &RunTrace,
    sample: &[Example],
    loss: &LossKind,
    c: f64,
    delta: f64,
) -> Result<SelectionResult> {
    let n = trace.n();
    if sample.len() != n {
        return Err(Error::invalid(
            "sample",
            format!("expected the training stream of length {n}, got {}", sample.len()),
        ));
    }
    let window = stat_window(c, n)?;
    let lo = window.c_n - 1;
    let hi = n - 2;
    let mut table = Vec::with_capacity(hi - lo + 1);
    for t in lo..=hi {
        let h = trace.hypothesis(t).ok_or(Error::MissingSnapshot { t })?;
        let suffix_risk = empirical_pairwise_risk(h, &sample[t..], loss)?;
        let penalty = confidence_penalty(n - t, n, c, delta)?;
        table.push(SelectionCandidate {
            t,
            suffix_risk,
            penalty,
            total: suffix_risk + penalty,
        });
    }
    let best = table
        .iter()
        .min_by(|a, b| a.total.partial_cmp(&b.total).expect("finite totals"))
        .expect("non-empty window");
    let chosen = trace
        .hypothesis(best.t)
        .ok_or(Error::MissingSnapshot { t: best.t })?
        .clone();
    Ok(SelectionResult {
        chosen_t: best.t,
        chosen,
        penalized_risk: best.total,
        delta,
        table,
    })
}

/// Coordinate-wise mean of the window hypotheses
/// `h_{c_n - 1}, ..., h_{n - 2}`. The mean of PSD matrices inside the
/// Frobenius ball stays in the set, so no re-projection is applied.
pub fn average_hypothesis(trace: &RunTrace, c: f64) -> Result<Hypothesis> {
    let n = trace.n();
    let window = stat_window(c, n)?;
    let lo = window.c_n - 1;
    let hi = n - 2;
    let count = (hi - lo + 1) as f64;
    let first = trace.hypothesis(lo).ok_or(Error::MissingSnapshot { t: lo })?;
    match first {
        Hypothesis::Linear(_) => {
            let d = trace.meta.dim;
            let mut acc = nalgebra::DVector::zeros(d);
            for t in lo..=hi {
                let h = trace.hypothesis(t).ok_or(Error::MissingSnapshot { t })?;
                let w = h.as_linear().ok_or(Error::NotAverageable)?;
                acc += &w.w;
            }
            Ok(Hypothesis::Linear(LinearScorer { w: acc / count }))
        }
        Hypothesis::Metric(_) => {
            let d = trace.meta.dim;
            let mut acc = nalgebra::DMatrix::zeros(d, d);
            for t in lo..=hi {
                let h = trace.hypothesis(t).ok_or(Error::MissingSnapshot { t })?;
                let a = h.as_metric().ok_or(Error::NotAverageable)?;
                acc += a.matrix();
            }
            Ok(Hypothesis::Metric(MetricMatrix::new(acc / count)?))
        }
    }
}

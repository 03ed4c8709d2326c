//! Ground-truth measurement: AUC, Monte Carlo risk, the batch comparator
//! oracle behind regret checks, and grid cross-checks for low dimensions.
//!
//! The oracle minimizes the cumulative per-round objective a gradient-descent
//! learner faced, over the same feasible set, by projected subgradient
//! descent with diminishing steps. Its value is always attained at a feasible
//! point, so it upper-bounds the true infimum; measured regret is therefore
//! never overstated.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::datagen::{self, GeneratorSpec};
use crate::error::{Error, Result};
use crate::learners::{project_ball, project_psd_ball, LearnerConfig, LearnerKind};
use crate::losses::LossKind;
use crate::selection::empirical_pairwise_risk;
use crate::types::{Example, Hypothesis, LinearScorer, RunTrace};
use crate::util;

/// AUC with half credit for ties: the probability a random positive is
/// scored above a random negative.
pub fn auc(scorer: &LinearScorer, data: &[Example]) -> Result<f64> {
    Ok(auc_detail(scorer, data)?.half_credit)
}

/// AUC under both tie conventions. `half_credit` is the standard value;
/// `ties_unpunished` treats tied mixed pairs as correctly ranked, matching
/// the complement of the misranking risk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AucDetail {
    pub half_credit: f64,
    pub ties_unpunished: f64,
    pub tie_count: usize,
}

pub fn auc_detail(scorer: &LinearScorer, data: &[Example]) -> Result<AucDetail> {
    let mut scores = Vec::with_capacity(data.len());
    for z in data {
        scores.push(scorer.score(&z.x)?);
    }
    let mut concordant = 0usize;
    let mut ties = 0usize;
    let mut positives = 0usize;
    let mut negatives = 0usize;
    for (z, _) in data.iter().zip(&scores) {
        match z.y {
            1 => positives += 1,
            -1 => negatives += 1,
            other => {
                return Err(Error::invalid(
                    "data",
                    format!("AUC needs labels in {{-1, +1}}, got {other}"),
                ))
            }
        }
    }
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    for i in 0..data.len() {
        for k in 0..data.len() {
            if data[i].y == 1 && data[k].y == -1 {
                if scores[i] > scores[k] {
                    concordant += 1;
                } else if scores[i] == scores[k] {
                    ties += 1;
                }
            }
        }
    }
    let total = (positives * negatives) as f64;
    Ok(AucDetail {
        half_credit: (concordant as f64 + 0.5 * ties as f64) / total,
        ties_unpunished: (concordant + ties) as f64 / total,
        tie_count: ties,
    })
}

/// A Monte Carlo risk estimate. The standard error follows the naive
/// convention: sample standard deviation of the per-pair losses divided by
/// the square root of the pair count, treating pairs as independent even
/// though they share examples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub estimate: f64,
    pub samples: usize,
    pub pairs: usize,
    pub std_error: f64,
}

/// Draws `m` fresh examples from the generator (reseeded with `seed`) and
/// returns the pairwise empirical risk of `h` on them.
pub fn monte_carlo_risk(
    h: &Hypothesis,
    spec: &GeneratorSpec,
    m: usize,
    loss: &LossKind,
    seed: u64,
) -> Result<RiskEstimate> {
    if m < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: m });
    }
    let (sample, _) = datagen::generate_with_draw_seed(spec, m, seed)?;
    let estimate = empirical_pairwise_risk(h, &sample, loss)?;
    // Second pass for the spread of the per-pair losses.
    let mask = loss.masks_equal_labels();
    let mut count = 0usize;
    let mut sq_dev = 0.0f64;
    for i in 0..m {
        for k in (i + 1)..m {
            if mask && sample[i].y == sample[k].y {
                continue;
            }
            let v = loss.eval(h, &sample[i], &sample[k])?;
            sq_dev += (v - estimate) * (v - estimate);
            count += 1;
        }
    }
    let std_error = if count > 1 {
        (sq_dev / (count as f64 - 1.0)).sqrt() / (count as f64).sqrt()
    } else {
        0.0
    };
    Ok(RiskEstimate {
        estimate,
        samples: m,
        pairs: count,
        std_error,
    })
}

/// Cumulative online loss of the trace minus the oracle value. Raw value;
/// small negatives can only come from oracle slack and are reported as-is.
pub fn regret(trace: &RunTrace, oracle_value: f64) -> f64 {
    trace.cumulative_loss() - oracle_value
}

// ---------------------------------------------------------------------------
// Fenwick trees for the fast ranking objective
// ---------------------------------------------------------------------------

/// Prefix count + sum over score ranks.
struct PrefixBit {
    counts: Vec<i64>,
    sums: Vec<f64>,
}

impl PrefixBit {
    fn new(len: usize) -> Self {
        PrefixBit {
            counts: vec![0; len + 1],
            sums: vec![0.0; len + 1],
        }
    }

    fn update(&mut self, rank: usize, dc: i64, ds: f64) {
        let mut i = rank + 1;
        while i < self.counts.len() {
            self.counts[i] += dc;
            self.sums[i] += ds;
            i += i & i.wrapping_neg();
        }
    }

    /// Count and sum over ranks `< rank`.
    fn prefix(&self, rank: usize) -> (i64, f64) {
        let mut i = rank;
        let (mut c, mut s) = (0i64, 0.0f64);
        while i > 0 {
            c += self.counts[i];
            s += self.sums[i];
            i -= i & i.wrapping_neg();
        }
        (c, s)
    }
}

/// Range add, point query.
struct RangeBit {
    vals: Vec<f64>,
}

impl RangeBit {
    fn new(len: usize) -> Self {
        RangeBit {
            vals: vec![0.0; len + 1],
        }
    }

    fn add_suffix(&mut self, from_rank: usize, v: f64) {
        let mut i = from_rank + 1;
        while i < self.vals.len() {
            self.vals[i] += v;
            i += i & i.wrapping_neg();
        }
    }

    fn add_range(&mut self, lo: usize, hi_exclusive: usize, v: f64) {
        if lo >= hi_exclusive {
            return;
        }
        self.add_suffix(lo, v);
        if hi_exclusive < self.vals.len() {
            self.add_suffix(hi_exclusive, -v);
        }
    }

    fn point(&self, rank: usize) -> f64 {
        let mut i = rank + 1;
        let mut s = 0.0;
        while i > 0 {
            s += self.vals[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Cumulative objectives
// ---------------------------------------------------------------------------

/// The cumulative normalized-hinge objective a ranking OGD run faces:
/// `F(w) = sum_t (1/m_t) sum_{j in window_t} hinge(w, z_t, z_j)` with the
/// window the full prefix or a FIFO tail. Evaluation plus one subgradient
/// costs `O(n log n)` via per-class order statistics.
pub struct RankObjective<'a> {
    stream: &'a [Example],
    capacity: Option<usize>,
    hinge_scale: f64,
    hypothesis_radius: f64,
    constant: f64,
}

impl<'a> RankObjective<'a> {
    pub fn new(
        stream: &'a [Example],
        capacity: Option<usize>,
        feature_radius: f64,
        hypothesis_radius: f64,
    ) -> Result<Self> {
        if stream.len() < 2 {
            return Err(Error::SampleTooSmall {
                need: 2,
                got: stream.len(),
            });
        }
        if stream.iter().any(|z| !z.is_binary()) {
            return Err(Error::invalid("stream", "labels must lie in {-1, +1}"));
        }
        let hinge_scale = 1.0 + 4.0 * feature_radius * hypothesis_radius;
        // Equal-label pairs contribute the constant hinge value 1 regardless
        // of w; fold them in once.
        let n = stream.len();
        let mut pos_prefix = vec![0usize; n + 1];
        let mut neg_prefix = vec![0usize; n + 1];
        for (i, z) in stream.iter().enumerate() {
            pos_prefix[i + 1] = pos_prefix[i] + usize::from(z.y == 1);
            neg_prefix[i + 1] = neg_prefix[i] + usize::from(z.y == -1);
        }
        let mut constant = 0.0;
        for i in 1..n {
            let lo = capacity.map_or(0, |cap| i.saturating_sub(cap));
            let len = i - lo;
            let same = if stream[i].y == 1 {
                pos_prefix[i] - pos_prefix[lo]
            } else {
                neg_prefix[i] - neg_prefix[lo]
            };
            constant += same as f64 / (len as f64 * hinge_scale);
        }
        Ok(RankObjective {
            stream,
            capacity,
            hinge_scale,
            hypothesis_radius,
            constant,
        })
    }

    fn window_start(&self, i: usize) -> usize {
        self.capacity.map_or(0, |cap| i.saturating_sub(cap))
    }

    /// Objective value and one subgradient at `w`.
    pub fn value_and_subgradient(&self, w: &DVector<f64>) -> (f64, DVector<f64>) {
        let n = self.stream.len();
        let scores: Vec<f64> = self
            .stream
            .iter()
            .map(|z| util::dot(w.as_slice(), z.x.as_slice()))
            .collect();

        // Per-class ranks over this iteration's scores.
        let mut class_sorted: [Vec<(f64, usize)>; 2] = [Vec::new(), Vec::new()];
        for (i, z) in self.stream.iter().enumerate() {
            let c = usize::from(z.y == 1);
            class_sorted[c].push((scores[i], i));
        }
        for side in class_sorted.iter_mut() {
            side.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
        }
        let mut rank_of = vec![0usize; n];
        for side in &class_sorted {
            for (rank, &(_, idx)) in side.iter().enumerate() {
                rank_of[idx] = rank;
            }
        }

        let mut present_bits = [
            PrefixBit::new(class_sorted[0].len()),
            PrefixBit::new(class_sorted[1].len()),
        ];
        let mut coef_bits = [
            RangeBit::new(class_sorted[0].len()),
            RangeBit::new(class_sorted[1].len()),
        ];
        let mut inserted_count = [0i64; 2];
        let mut inserted_sum = [0.0f64; 2];
        let mut base = vec![0.0f64; n];
        let mut coef = vec![0.0f64; n];

        let mut value = self.constant;
        let class_of = |idx: usize| usize::from(self.stream[idx].y == 1);

        for i in 0..n {
            if i >= 1 {
                let j = i - 1;
                let c = class_of(j);
                base[j] = coef_bits[c].point(rank_of[j]);
                present_bits[c].update(rank_of[j], 1, scores[j]);
                inserted_count[c] += 1;
                inserted_sum[c] += scores[j];
                if let Some(cap) = self.capacity {
                    if i > cap {
                        let r = i - 1 - cap;
                        let cr = class_of(r);
                        coef[r] += coef_bits[cr].point(rank_of[r]) - base[r];
                        present_bits[cr].update(rank_of[r], -1, -scores[r]);
                        inserted_count[cr] -= 1;
                        inserted_sum[cr] -= scores[r];
                    }
                }
            }
            if i == 0 {
                continue;
            }
            let len = i - self.window_start(i);
            if len == 0 {
                continue;
            }
            let weight = 1.0 / (len as f64 * self.hinge_scale);
            let y_i = self.stream[i].y;
            let opp = usize::from(y_i != 1);
            let s_i = scores[i];
            if y_i == 1 {
                // Active opposite scores: s_j > s_i - 1/2 (strict).
                let threshold = s_i - 0.5;
                let pos0 = class_sorted[opp].partition_point(|&(sc, _)| sc <= threshold);
                let (pc, ps) = present_bits[opp].prefix(pos0);
                let k = inserted_count[opp] - pc;
                let sum_s = inserted_sum[opp] - ps;
                if k > 0 {
                    value += weight * ((k as f64) * (1.0 - 2.0 * s_i) + 2.0 * sum_s);
                    coef[i] += -2.0 * weight * k as f64;
                    coef_bits[opp].add_range(pos0, class_sorted[opp].len(), 2.0 * weight);
                }
            } else {
                // Active opposite scores: s_j < s_i + 1/2 (strict).
                let threshold = s_i + 0.5;
                let pos1 = class_sorted[opp].partition_point(|&(sc, _)| sc < threshold);
                let (k, sum_s) = present_bits[opp].prefix(pos1);
                if k > 0 {
                    value += weight * ((k as f64) * (1.0 + 2.0 * s_i) - 2.0 * sum_s);
                    coef[i] += 2.0 * weight * k as f64;
                    coef_bits[opp].add_range(0, pos1, -2.0 * weight);
                }
            }
        }
        // Settle coefficients of elements still in the window at the end.
        // Index j was inserted at sweep step j + 1 (so j <= n - 2) and, under
        // a capacity, evicted at step j + 1 + cap if that step was reached.
        for j in 0..n.saturating_sub(1) {
            let still_present = match self.capacity {
                Some(cap) => j + cap >= n - 1,
                None => true,
            };
            if still_present {
                let c = class_of(j);
                coef[j] += coef_bits[c].point(rank_of[j]) - base[j];
            }
        }

        let d = w.len();
        let mut grad = DVector::zeros(d);
        for (i, &c) in coef.iter().enumerate() {
            if c != 0.0 {
                for a in 0..d {
                    grad[a] += c * self.stream[i].x[a];
                }
            }
        }
        (value, grad)
    }

    /// Reference implementation: the literal double loop. Used to validate
    /// the fast path.
    pub fn naive_value_and_subgradient(&self, w: &DVector<f64>) -> (f64, DVector<f64>) {
        let n = self.stream.len();
        let d = w.len();
        let scores: Vec<f64> = self
            .stream
            .iter()
            .map(|z| util::dot(w.as_slice(), z.x.as_slice()))
            .collect();
        let mut value = 0.0;
        let mut grad = DVector::zeros(d);
        for i in 1..n {
            let lo = self.window_start(i);
            let len = i - lo;
            let weight = 1.0 / (len as f64 * self.hinge_scale);
            for j in lo..i {
                let label_diff = (self.stream[i].y - self.stream[j].y) as f64;
                let raw = 1.0 - (scores[i] - scores[j]) * label_diff;
                if raw > 0.0 {
                    value += weight * raw;
                    if label_diff != 0.0 {
                        for a in 0..d {
                            grad[a] -=
                                weight * label_diff * (self.stream[i].x[a] - self.stream[j].x[a]);
                        }
                    }
                }
            }
        }
        (value, grad)
    }

    fn radius(&self) -> f64 {
        self.hypothesis_radius
    }
}

/// The cumulative scaled metric-hinge objective of a metric OGD run.
pub struct MetricObjective<'a> {
    stream: &'a [Example],
    scale: f64,
    hypothesis_radius: f64,
}

impl<'a> MetricObjective<'a> {
    pub fn new(stream: &'a [Example], feature_radius: f64, hypothesis_radius: f64) -> Result<Self> {
        if stream.len() < 2 {
            return Err(Error::SampleTooSmall {
                need: 2,
                got: stream.len(),
            });
        }
        Ok(MetricObjective {
            stream,
            scale: 2.0 + hypothesis_radius * feature_radius * feature_radius,
            hypothesis_radius,
        })
    }

    pub fn value_and_subgradient(&self, a: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let n = self.stream.len();
        let d = a.nrows();
        // q_ij = s_i + s_j - 2 x_i^T (A x_j) with cached products.
        let products: Vec<DVector<f64>> = self.stream.iter().map(|z| a * &z.x).collect();
        let selfq: Vec<f64> = self
            .stream
            .iter()
            .zip(&products)
            .map(|(z, u)| util::dot(z.x.as_slice(), u.as_slice()))
            .collect();
        let mut value = 0.0;
        let mut grad = DMatrix::zeros(d, d);
        for i in 1..n {
            let weight = 1.0 / (i as f64 * self.scale);
            for j in 0..i {
                let cross = util::dot(self.stream[i].x.as_slice(), products[j].as_slice());
                let q = selfq[i] + selfq[j] - 2.0 * cross;
                let agree = if self.stream[i].y == self.stream[j].y {
                    1.0
                } else {
                    -1.0
                };
                let raw = 1.0 - agree * (1.0 - q);
                if raw > 0.0 {
                    value += weight * raw;
                    let c = weight * agree;
                    for r in 0..d {
                        let dr = self.stream[i].x[r] - self.stream[j].x[r];
                        for s in 0..d {
                            grad[(r, s)] += c * dr * (self.stream[i].x[s] - self.stream[j].x[s]);
                        }
                    }
                }
            }
        }
        (value, grad)
    }

    fn radius(&self) -> f64 {
        self.hypothesis_radius
    }
}

// ---------------------------------------------------------------------------
// Projected subgradient minimization
// ---------------------------------------------------------------------------

const ORACLE_ITER_CAP: usize = 200_000;
const STAGNATION_WINDOW: usize = 100;
const STAGNATION_EPS: f64 = 1e-8;

trait OracleProblem {
    type Point: Clone;
    fn value_and_subgradient(&self, p: &Self::Point) -> (f64, Self::Point);
    fn step(&self, p: &Self::Point, g: &Self::Point, eta: f64) -> Self::Point;
    fn grad_norm_sq(&self, g: &Self::Point) -> f64;
}

struct RankProblem<'a, 'b>(&'b RankObjective<'a>);

impl OracleProblem for RankProblem<'_, '_> {
    type Point = DVector<f64>;
    fn value_and_subgradient(&self, p: &Self::Point) -> (f64, Self::Point) {
        self.0.value_and_subgradient(p)
    }
    fn step(&self, p: &Self::Point, g: &Self::Point, eta: f64) -> Self::Point {
        project_ball(&(p - g * eta), self.0.radius())
    }
    fn grad_norm_sq(&self, g: &Self::Point) -> f64 {
        util::dot(g.as_slice(), g.as_slice())
    }
}

struct MetricProblem<'a, 'b>(&'b MetricObjective<'a>);

impl OracleProblem for MetricProblem<'_, '_> {
    type Point = DMatrix<f64>;
    fn value_and_subgradient(&self, p: &Self::Point) -> (f64, Self::Point) {
        self.0.value_and_subgradient(p)
    }
    fn step(&self, p: &Self::Point, g: &Self::Point, eta: f64) -> Self::Point {
        project_psd_ball(&(p - g * eta), self.0.radius())
            .expect("projection of a finite matrix")
            .into_matrix()
    }
    fn grad_norm_sq(&self, g: &Self::Point) -> f64 {
        util::dot(g.as_slice(), g.as_slice())
    }
}

/// Projected subgradient descent with diminishing target-gap steps. Runs
/// until the best objective improves by less than `1e-8` over 100
/// iterations (with the step gap already collapsed) or the iteration cap.
fn minimize<P: OracleProblem>(problem: &P, start: P::Point, cap: usize) -> (P::Point, f64, usize) {
    let mut point = start;
    let (f0, mut grad) = problem.value_and_subgradient(&point);
    let mut best_val = f0;
    let mut best_point = point.clone();
    let mut current_val = f0;
    // Target-gap schedule: aim eta = (f - (best - gap)) / |g|^2, halving the
    // gap whenever a stage fails to make progress proportional to it.
    let mut gap = 0.05 * best_val.abs().max(1.0);
    let gap_floor = 1e-14 * best_val.abs().max(1.0);
    const STAGE: usize = 50;
    let mut stage_start_best = best_val;
    let mut window_start_best = best_val;
    let mut iters = 0usize;
    while iters < cap {
        iters += 1;
        let gnorm2 = problem.grad_norm_sq(&grad);
        if gnorm2 <= 0.0 {
            break;
        }
        let eta = (current_val - (best_val - gap)) / gnorm2;
        point = problem.step(&point, &grad, eta);
        let (f, g) = problem.value_and_subgradient(&point);
        current_val = f;
        grad = g;
        if f < best_val {
            best_val = f;
            best_point = point.clone();
        }
        if iters % STAGE == 0 {
            if stage_start_best - best_val < 0.25 * gap {
                gap *= 0.5;
            }
            stage_start_best = best_val;
        }
        if iters % STAGNATION_WINDOW == 0 {
            if window_start_best - best_val < STAGNATION_EPS && gap <= gap_floor.max(1e-12) {
                break;
            }
            window_start_best = best_val;
        }
        if gap < gap_floor {
            break;
        }
    }
    (best_point, best_val, iters)
}

/// Outcome of the batch comparator oracle.
#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub hypothesis: Hypothesis,
    /// Best objective value across all starts (attained, hence an upper
    /// bound on the infimum).
    pub value: f64,
    /// Best value per start: the zero start followed by the random restarts.
    pub restart_values: Vec<f64>,
    /// Max spread across the restart values: the certified oracle slack.
    pub spread: f64,
    pub iterations: usize,
}

const ORACLE_RESTARTS: usize = 3;
const ORACLE_SEED: u64 = 0x6f7261636c65;

/// Minimizes the cumulative convex objective of a gradient-descent learner
/// over its feasible set: the hindsight comparator for regret. Only the
/// convex-loss kinds are admissible.
pub fn batch_oracle(stream: &[Example], cfg: &LearnerConfig) -> Result<OracleOutcome> {
    match cfg.kind {
        LearnerKind::OamInfinite | LearnerKind::OamFinite | LearnerKind::Perceptron => {
            return Err(Error::NonConvexLoss)
        }
        LearnerKind::OgdRankInfinite | LearnerKind::OgdRankFinite | LearnerKind::MetricOgd => {}
    }
    let u = cfg
        .hypothesis_radius
        .ok_or_else(|| Error::invalid("hypothesis_radius", "oracle needs a feasible ball"))?;
    match cfg.kind {
        LearnerKind::OgdRankInfinite | LearnerKind::OgdRankFinite => {
            if cfg.kind.is_finite_buffer()
                && cfg.buffer_strategy != crate::buffer::BufferStrategy::Fifo
            {
                return Err(Error::invalid(
                    "buffer_strategy",
                    "the buffered oracle objective is defined for FIFO only",
                ));
            }
            let capacity = if cfg.kind.is_finite_buffer() {
                cfg.capacity
            } else {
                None
            };
            let objective = RankObjective::new(stream, capacity, cfg.feature_radius, u)?;
            let problem = RankProblem(&objective);
            let d = stream[0].dim();
            let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
            let mut starts: Vec<DVector<f64>> = vec![DVector::zeros(d)];
            for _ in 0..ORACLE_RESTARTS {
                let raw = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
                starts.push(project_ball(&(raw * u), u));
            }
            let mut best: Option<(DVector<f64>, f64)> = None;
            let mut restart_values = Vec::with_capacity(starts.len());
            let mut total_iters = 0;
            for start in starts {
                let (point, val, iters) = minimize(&problem, start, ORACLE_ITER_CAP);
                total_iters += iters;
                restart_values.push(val);
                if best.as_ref().map_or(true, |(_, b)| val < *b) {
                    best = Some((point, val));
                }
            }
            let (point, value) = best.expect("at least one start");
            let spread = restart_values
                .iter()
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
                - value;
            Ok(OracleOutcome {
                hypothesis: Hypothesis::Linear(LinearScorer { w: point }),
                value,
                restart_values,
                spread,
                iterations: total_iters,
            })
        }
        LearnerKind::MetricOgd => {
            let objective = MetricObjective::new(stream, cfg.feature_radius, u)?;
            let problem = MetricProblem(&objective);
            let d = stream[0].dim();
            let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
            let mut starts: Vec<DMatrix<f64>> = vec![DMatrix::zeros(d, d)];
            for _ in 0..ORACLE_RESTARTS {
                let b = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
                let psd = &b * b.transpose();
                let start = project_psd_ball(&psd, u * rng.gen_range(0.1..1.0))?;
                starts.push(start.into_matrix());
            }
            let mut best: Option<(DMatrix<f64>, f64)> = None;
            let mut restart_values = Vec::with_capacity(starts.len());
            let mut total_iters = 0;
            for start in starts {
                let (point, val, iters) = minimize(&problem, start, ORACLE_ITER_CAP);
                total_iters += iters;
                restart_values.push(val);
                if best.as_ref().map_or(true, |(_, b)| val < *b) {
                    best = Some((point, val));
                }
            }
            let (point, value) = best.expect("at least one start");
            let spread = restart_values
                .iter()
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
                - value;
            Ok(OracleOutcome {
                hypothesis: Hypothesis::Metric(crate::types::MetricMatrix::new(point)?),
                value,
                restart_values,
                spread,
                iterations: total_iters,
            })
        }
        LearnerKind::OamInfinite | LearnerKind::OamFinite | LearnerKind::Perceptron => {
            unreachable!("rejected above")
        }
    }
}

/// Grid-refinement cross-check of the oracle for `d <= 2` (ranking) or
/// `d = 1` (metric). Evaluates the naive objective on a shrinking grid.
pub fn grid_oracle(stream: &[Example], cfg: &LearnerConfig) -> Result<f64> {
    let u = cfg
        .hypothesis_radius
        .ok_or_else(|| Error::invalid("hypothesis_radius", "oracle needs a feasible ball"))?;
    let d = stream[0].dim();
    match cfg.kind {
        LearnerKind::OgdRankInfinite | LearnerKind::OgdRankFinite => {
            if d > 2 {
                return Err(Error::invalid("dim", "grid cross-check supports d <= 2"));
            }
            let capacity = if cfg.kind.is_finite_buffer() {
                cfg.capacity
            } else {
                None
            };
            let objective = RankObjective::new(stream, capacity, cfg.feature_radius, u)?;
            let eval = |w: &DVector<f64>| objective.naive_value_and_subgradient(w).0;
            let mut center = DVector::zeros(d);
            let mut half = u;
            let mut best = eval(&center);
            for _ in 0..12 {
                let steps = 16i32;
                let mut level_best = best;
                let mut level_center = center.clone();
                let mut probe = |w: DVector<f64>| {
                    let p = project_ball(&w, u);
                    let v = eval(&p);
                    if v < level_best {
                        level_best = v;
                        level_center = p;
                    }
                };
                if d == 1 {
                    for i in -steps..=steps {
                        let w = DVector::from_vec(vec![center[0] + half * i as f64 / steps as f64]);
                        probe(w);
                    }
                } else {
                    for i in -steps..=steps {
                        for j in -steps..=steps {
                            let w = DVector::from_vec(vec![
                                center[0] + half * i as f64 / steps as f64,
                                center[1] + half * j as f64 / steps as f64,
                            ]);
                            probe(w);
                        }
                    }
                }
                best = level_best;
                center = level_center;
                half *= 0.25;
            }
            Ok(best)
        }
        LearnerKind::MetricOgd => {
            if d != 1 {
                return Err(Error::invalid("dim", "metric grid cross-check supports d = 1"));
            }
            let objective = MetricObjective::new(stream, cfg.feature_radius, u)?;
            let eval = |a: f64| {
                objective
                    .value_and_subgradient(&DMatrix::from_element(1, 1, a))
                    .0
            };
            let mut center = 0.5 * u;
            let mut half = 0.5 * u;
            let mut best = f64::INFINITY;
            for _ in 0..12 {
                let steps = 64i32;
                let mut level_best = best;
                let mut level_center = center;
                for i in -steps..=steps {
                    let a = (center + half * i as f64 / steps as f64).clamp(0.0, u);
                    let v = eval(a);
                    if v < level_best {
                        level_best = v;
                        level_center = a;
                    }
                }
                best = level_best;
                center = level_center;
                half *= 0.25;
            }
            Ok(best)
        }
        _ => Err(Error::NonConvexLoss),
    }
}

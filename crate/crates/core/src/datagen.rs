//! Seeded synthetic stream generators and dataset CSV I/O.
//!
//! All generators emit features with `|x| <= R` exactly (rescaling the rare
//! boundary violation) and are deterministic given their seed. Margin
//! streams come with the witness direction used to build them, so the
//! mistake-bound comparator losses can be evaluated directly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Example;
use crate::util;

/// Stream family. Margin kinds emit binary labels; clusters emit class ids
/// `0..classes` for metric learning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// Positives and negatives separated along a hidden unit direction so
    /// that every mixed pair has `<u, x+ - x-> >= gamma`.
    SeparableMargin { gamma: f64 },
    /// The separable construction with each label flipped independently
    /// with probability `flip_prob` (from its own random stream, so
    /// `flip_prob = 0` reproduces the separable output bit for bit).
    NoisyMargin { gamma: f64, flip_prob: f64 },
    /// `classes` Gaussian clusters clipped to the feature ball.
    GaussianClusters { classes: usize, spread: f64 },
}

/// Fully seeded generator description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub dim: usize,
    pub feature_radius: f64,
    /// Probability of a positive label (margin kinds; clusters are uniform).
    pub balance: f64,
    pub seed: u64,
}

/// What the generator can certify about its own stream.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Hidden separating direction and the pairwise margin it guarantees
    /// before any label flips.
    Margin { direction: DVector<f64>, gamma: f64 },
    /// Cluster centers indexed by class id.
    Clusters { centers: Vec<DVector<f64>> },
}

impl Witness {
    pub fn margin_direction(&self) -> Option<(&DVector<f64>, f64)> {
        match self {
            Witness::Margin { direction, gamma } => Some((direction, *gamma)),
            Witness::Clusters { .. } => None,
        }
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = util::norm2(v.as_slice());
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

fn uniform_in_ball(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> DVector<f64> {
    let dir = unit_vector(rng, d);
    let r = radius * rng.gen_range(0.0f64..1.0).powf(1.0 / d as f64);
    dir * r
}

/// Rescales onto the ball boundary if the norm exceeds `radius`, repeating
/// until roundoff no longer leaves it above.
fn clamp_to_ball(mut x: DVector<f64>, radius: f64) -> DVector<f64> {
    for _ in 0..8 {
        let norm = util::norm2(x.as_slice());
        if norm <= radius {
            return x;
        }
        x *= radius / norm;
    }
    x * (1.0 - 1e-12)
}

fn validate_spec(spec: &GeneratorSpec) -> Result<()> {
    if spec.dim == 0 {
        return Err(Error::invalid("dim", "must be >= 1"));
    }
    if !(spec.feature_radius > 0.0) {
        return Err(Error::invalid("feature_radius", "must be > 0"));
    }
    if !(0.0..=1.0).contains(&spec.balance) {
        return Err(Error::invalid("balance", "must lie in [0, 1]"));
    }
    match spec.kind {
        GeneratorKind::SeparableMargin { gamma } | GeneratorKind::NoisyMargin { gamma, .. } => {
            if !(gamma > 0.0) {
                return Err(Error::invalid("gamma", "must be > 0"));
            }
            if gamma >= 2.0 * spec.feature_radius {
                return Err(Error::InfeasibleGenerator(format!(
                    "margin {gamma} does not fit in a ball of radius {}",
                    spec.feature_radius
                )));
            }
            if let GeneratorKind::NoisyMargin { flip_prob, .. } = spec.kind {
                if !(0.0..0.5).contains(&flip_prob) {
                    return Err(Error::invalid("flip_prob", "must lie in [0, 0.5)"));
                }
            }
        }
        GeneratorKind::GaussianClusters { classes, spread } => {
            if classes < 2 {
                return Err(Error::invalid("classes", "need at least 2 classes"));
            }
            if !(spread > 0.0) {
                return Err(Error::invalid("spread", "must be > 0"));
            }
        }
    }
    Ok(())
}

/// Draws a point with `|<u, x>| >= gamma/2` by reflecting rejected sides,
/// then orients it to the requested label side.
fn margin_point(
    rng: &mut ChaCha8Rng,
    u: &DVector<f64>,
    d: usize,
    radius: f64,
    gamma: f64,
    positive: bool,
) -> Result<DVector<f64>> {
    for _ in 0..100_000 {
        let x = uniform_in_ball(rng, d, radius);
        let p = util::dot(u.as_slice(), x.as_slice());
        if p.abs() < gamma / 2.0 {
            continue;
        }
        let want_positive_side = positive;
        let x = if (p > 0.0) == want_positive_side {
            x
        } else {
            // Householder reflection across the separating hyperplane keeps
            // the norm and flips the projection sign.
            &x - u * (2.0 * p)
        };
        return Ok(clamp_to_ball(x, radius));
    }
    Err(Error::InfeasibleGenerator(
        "rejection sampling failed to find a margin point".into(),
    ))
}

/// Emits `n` examples according to the spec, together with the generator's
/// witness. Identical spec and `n` reproduce the stream exactly.
pub fn generate(spec: &GeneratorSpec, n: usize) -> Result<(Vec<Example>, Witness)> {
    generate_with_draw_seed(spec, n, spec.seed)
}

/// Like [`generate`], but reseeds only the sample randomness: the hidden
/// structure (separating direction, cluster centers) still comes from
/// `spec.seed`, so different draw seeds index fresh samples from the *same*
/// distribution. Monte Carlo estimation relies on this.
pub fn generate_with_draw_seed(
    spec: &GeneratorSpec,
    n: usize,
    draw_seed: u64,
) -> Result<(Vec<Example>, Witness)> {
    validate_spec(spec)?;
    if n < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: n });
    }
    let d = spec.dim;
    let radius = spec.feature_radius;
    // Stream 2 of the spec seed fixes the distribution's hidden structure;
    // streams 0 and 1 of the draw seed supply per-example randomness.
    let mut structure_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    structure_rng.set_stream(2);
    let mut rng = ChaCha8Rng::seed_from_u64(draw_seed);

    match spec.kind {
        GeneratorKind::SeparableMargin { gamma } | GeneratorKind::NoisyMargin { gamma, .. } => {
            // Label flips consume their own stream so that flip_prob = 0
            // reproduces the separable output exactly.
            let mut flip_rng = ChaCha8Rng::seed_from_u64(draw_seed);
            flip_rng.set_stream(1);
            let flip_prob = match spec.kind {
                GeneratorKind::NoisyMargin { flip_prob, .. } => flip_prob,
                _ => 0.0,
            };
            let u = unit_vector(&mut structure_rng, d);
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let positive = rng.gen_bool(spec.balance);
                let x = margin_point(&mut rng, &u, d, radius, gamma, positive)?;
                let mut y = if positive { 1 } else { -1 };
                if flip_rng.gen_bool(flip_prob) {
                    y = -y;
                }
                out.push(Example { x, y });
            }
            Ok((out, Witness::Margin { direction: u, gamma }))
        }
        GeneratorKind::GaussianClusters { classes, spread } => {
            let centers: Vec<DVector<f64>> = (0..classes)
                .map(|_| uniform_in_ball(&mut structure_rng, d, 0.8 * radius))
                .collect();
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let class = rng.gen_range(0..classes);
                let noise =
                    DVector::from_fn(d, |_, _| spread * rng.sample::<f64, _>(StandardNormal));
                let x = clamp_to_ball(&centers[class] + noise, radius);
                out.push(Example { x, y: class as i32 });
            }
            Ok((out, Witness::Clusters { centers }))
        }
    }
}

/// Writes `label,f1,...,fd` rows; features carry 17 significant digits so
/// the round trip is bit-exact.
pub fn save_csv(data: &[Example], path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    let d = data.first().map(|z| z.dim()).unwrap_or(0);
    let header: Vec<String> = std::iter::once("label".to_string())
        .chain((1..=d).map(|i| format!("f{i}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for z in data {
        write!(out, "{}", z.y)?;
        for v in z.x.iter() {
            write!(out, ",{:.16e}", v)?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a dataset written by [`save_csv`]. A header-only file is an empty
/// dataset; an empty file or a malformed row is an error carrying the line
/// number.
pub fn load_csv(path: &Path) -> Result<Vec<Example>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => {
            return Err(Error::CsvFormat {
                line: 0,
                reason: "empty file".into(),
            })
        }
    };
    let cols = header.split(',').count();
    if cols < 1 || !header.starts_with("label") {
        return Err(Error::CsvFormat {
            line: 1,
            reason: "expected header `label,f1,...,fd`".into(),
        });
    }
    let d = cols - 1;
    let mut out = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let label_field = fields.next().ok_or(Error::CsvFormat {
            line: line_no,
            reason: "missing label".into(),
        })?;
        let y: i32 = label_field.trim().parse().map_err(|e| Error::CsvFormat {
            line: line_no,
            reason: format!("bad label: {e}"),
        })?;
        let mut x = Vec::with_capacity(d);
        for field in fields {
            let v: f64 = field.trim().parse().map_err(|e| Error::CsvFormat {
                line: line_no,
                reason: format!("bad feature: {e}"),
            })?;
            x.push(v);
        }
        if x.len() != d {
            return Err(Error::CsvFormat {
                line: line_no,
                reason: format!("expected {d} features, got {}", x.len()),
            });
        }
        out.push(Example::new(x, y));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds;

    fn margin_spec(seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            kind: GeneratorKind::SeparableMargin { gamma: 0.2 },
            dim: 5,
            feature_radius: 1.0,
            balance: 0.5,
            seed,
        }
    }

    #[test]
    fn separable_streams_have_the_promised_pairwise_margin() {
        for seed in 0..5 {
            let (stream, witness) = generate(&margin_spec(seed), 200).unwrap();
            let (u, gamma) = witness.margin_direction().unwrap();
            for a in &stream {
                for b in &stream {
                    if a.y == 1 && b.y == -1 {
                        let gap = u.dot(&(&a.x - &b.x));
                        assert!(gap >= gamma - 1e-12, "pair margin {gap} < {gamma}");
                    }
                }
            }
        }
    }

    #[test]
    fn all_features_inside_ball() {
        let specs = vec![
            margin_spec(3),
            GeneratorSpec {
                kind: GeneratorKind::GaussianClusters {
                    classes: 3,
                    spread: 0.4,
                },
                dim: 3,
                feature_radius: 1.0,
                balance: 0.5,
                seed: 3,
            },
        ];
        for spec in specs {
            let (stream, _) = generate(&spec, 500).unwrap();
            for z in &stream {
                assert!(crate::util::norm2(z.x.as_slice()) <= spec.feature_radius);
            }
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let (a, _) = generate(&margin_spec(9), 100).unwrap();
        let (b, _) = generate(&margin_spec(9), 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_flip_noisy_equals_separable() {
        let spec = margin_spec(11);
        let noisy = GeneratorSpec {
            kind: GeneratorKind::NoisyMargin {
                gamma: 0.2,
                flip_prob: 0.0,
            },
            ..spec
        };
        let (a, _) = generate(&spec, 150).unwrap();
        let (b, _) = generate(&noisy, 150).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noisy_flips_some_labels() {
        let spec = margin_spec(13);
        let noisy = GeneratorSpec {
            kind: GeneratorKind::NoisyMargin {
                gamma: 0.2,
                flip_prob: 0.2,
            },
            ..spec
        };
        let (a, _) = generate(&spec, 300).unwrap();
        let (b, _) = generate(&noisy, 300).unwrap();
        let flips = a.iter().zip(&b).filter(|(x, y)| x.y != y.y).count();
        assert!(flips > 20 && flips < 120, "unexpected flip count {flips}");
        // Features untouched.
        assert!(a.iter().zip(&b).all(|(x, y)| x.x == y.x));
    }

    #[test]
    fn separable_witness_gives_zero_perceptron_hinge_at_half_margin() {
        let (stream, witness) = generate(&margin_spec(17), 300).unwrap();
        let (u, gamma) = witness.margin_direction().unwrap();
        let d1 = bounds::perceptron_hinge_norm(u, gamma / 2.0, &stream).unwrap();
        assert_eq!(d1, 0.0);
    }

    #[test]
    fn infeasible_margin_rejected() {
        let mut spec = margin_spec(1);
        spec.kind = GeneratorKind::SeparableMargin { gamma: 2.5 };
        assert!(matches!(
            generate(&spec, 10),
            Err(Error::InfeasibleGenerator(_))
        ));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stream.csv");
        let (stream, _) = generate(&margin_spec(23), 100).unwrap();
        save_csv(&stream, &path).unwrap();
        let back = load_csv(&path).unwrap();
        assert_eq!(stream, back);
    }

    #[test]
    fn csv_error_cases() {
        let dir = tempfile::tempdir().unwrap();

        let empty = dir.path().join("empty.csv");
        std::fs::write(&empty, "").unwrap();
        assert!(matches!(
            load_csv(&empty),
            Err(Error::CsvFormat { line: 0, .. })
        ));

        let header_only = dir.path().join("header.csv");
        std::fs::write(&header_only, "label,f1,f2\n").unwrap();
        assert_eq!(load_csv(&header_only).unwrap(), Vec::<Example>::new());

        let bad_row = dir.path().join("bad.csv");
        std::fs::write(&bad_row, "label,f1,f2\n1,0.5,oops\n").unwrap();
        match load_csv(&bad_row) {
            Err(Error::CsvFormat { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected CsvFormat error, got {other:?}"),
        }
    }
}

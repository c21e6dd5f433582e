//! Probes of how the inverse behaves next to a rank `n−1` singular matrix,
//! and what that does to any fixed approximator.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::{map_chunks, stream_rng};
use crate::linalg::{adjugate, det, inverse, Matrix, NormKind};
use crate::mlp::Predictor;

/// `|det|` below this counts as a singular draw.
pub const DET_FLOOR: f64 = 1e-12;
pub const MAX_DIRECTIONS: usize = 10;
const T_START: f64 = 0.1;
const T_MIN: f64 = 1e-12;

/// The exact inverse as a predictor; its error against itself is zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactInverse;

impl Predictor for ExactInverse {
    fn predict(&self, a: &Matrix) -> Result<Matrix> {
        inverse(a)
    }
}

/// Checks `a0` is singular with a nonzero adjugate.
pub fn check_rank_deficit_one(a0: &Matrix) -> Result<Matrix> {
    let n = a0.n();
    let scale = a0.norm(NormKind::LInf).max(1.0);
    let adj = adjugate(a0)?;
    let singular = det(a0).abs() <= 1e-10 * scale.powi(n as i32);
    let adj_nonzero = adj.norm(NormKind::LInf) > 1e-10 * scale.powi(n as i32 - 1);
    if !(singular && adj_nonzero) {
        return Err(Error::RankPreconditionFailed);
    }
    Ok(adj)
}

fn gaussian<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit_direction<R: Rng + ?Sized>(n: usize, norm: NormKind, rng: &mut R) -> Matrix {
    let d = Matrix::from_flat(n, gaussian(n * n, rng)).unwrap();
    let len = d.norm(norm);
    d.scale(1.0 / len)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupRow {
    pub radius: f64,
    /// `min r·‖(a0 + r·D)⁻¹‖` over the sampled unit directions `D`.
    pub min_scaled_norm: f64,
}

/// For each radius, the smallest `r·‖A⁻¹‖` over `A = a0 + r·D` with random
/// unit directions. Every radius reuses the same directions.
pub fn verify_inverse_blowup(
    a0: &Matrix,
    radii: &[f64],
    samples_per_radius: usize,
    norm: NormKind,
    seed: u64,
) -> Result<Vec<BlowupRow>> {
    check_rank_deficit_one(a0)?;
    if radii.iter().any(|&r| !(r > 0.0)) || samples_per_radius == 0 {
        return Err(Error::InvalidArgument("radii must be > 0 and samples >= 1".into()));
    }
    let n = a0.n();
    radii
        .iter()
        .map(|&r| {
            let parts = map_chunks(samples_per_radius, |chunk, range| -> Result<f64> {
                let mut rng = stream_rng(seed, chunk);
                let mut best = f64::INFINITY;
                for _ in range {
                    loop {
                        let a = a0 + &unit_direction(n, norm, &mut rng).scale(r);
                        match inverse(&a) {
                            Ok(inv) => {
                                best = best.min(r * inv.norm(norm));
                                break;
                            }
                            Err(Error::NearSingular { .. }) => continue,
                            Err(e) => return Err(e),
                        }
                    }
                }
                Ok(best)
            });
            let mut best = f64::INFINITY;
            for p in parts {
                best = best.min(p?);
            }
            Ok(BlowupRow {
                radius: r,
                min_scaled_norm: best,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialPoint {
    pub x: Matrix,
    pub t: f64,
    pub error: f64,
    /// Directions tried, including the successful one.
    pub directions: usize,
}

/// Walks toward `a0` along a seeded direction that changes `det` at first
/// order, halving `t` from 0.1, until the predictor's LInf error exceeds
/// `threshold`.
pub fn adversarial_point<P: Predictor + ?Sized>(
    model: &P,
    a0: &Matrix,
    threshold: f64,
    seed: u64,
) -> Result<AdversarialPoint> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "threshold must be > 0, got {threshold}"
        )));
    }
    let adj = check_rank_deficit_one(a0)?;
    let n = a0.n();
    let grad = adj.transpose();
    for attempt in 0..MAX_DIRECTIONS {
        let mut rng = stream_rng(seed, attempt as u64);
        let d = unit_direction(n, NormKind::L2, &mut rng);
        let slope: f64 = grad.as_slice().iter().zip(d.as_slice()).map(|(g, v)| g * v).sum();
        if slope.abs() <= 1e-3 * grad.norm(NormKind::L2) {
            continue;
        }
        let mut t = T_START;
        while t >= T_MIN {
            let x = a0 + &d.scale(t);
            let exact = match inverse(&x) {
                Ok(m) => m,
                Err(Error::NearSingular { .. }) => break,
                Err(e) => return Err(e),
            };
            let error = exact.max_abs_diff(&model.predict(&x)?);
            if error > threshold {
                return Ok(AdversarialPoint {
                    x,
                    t,
                    error,
                    directions: attempt + 1,
                });
            }
            t *= 0.5;
        }
    }
    Err(Error::SearchExhausted {
        directions: MAX_DIRECTIONS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallRow {
    pub eps: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub rejected: usize,
}

/// Draws uniformly from the Frobenius ball of radius `eps` around `a0`,
/// one sample per call, skipping draws with `|det| < DET_FLOOR`.
struct BallSampler {
    n: usize,
}

impl BallSampler {
    fn draw<R: Rng + ?Sized>(&self, a0: &Matrix, eps: f64, rng: &mut R) -> Matrix {
        let nn = self.n * self.n;
        let dir = unit_direction(self.n, NormKind::L2, rng);
        let r = eps * rng.random::<f64>().powf(1.0 / nn as f64);
        a0 + &dir.scale(r)
    }
}

/// `‖Inv(x) − F(x)‖^k`, optionally divided by `‖x‖^kprime`; `None` for a
/// singular draw.
fn contribution<P: Predictor + ?Sized>(
    model: &P,
    x: &Matrix,
    k: f64,
    norm: NormKind,
    kprime: Option<f64>,
) -> Result<Option<f64>> {
    if det(x).abs() < DET_FLOOR {
        return Ok(None);
    }
    let exact = match inverse(x) {
        Ok(m) => m,
        Err(Error::NearSingular { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut v = (&exact - &model.predict(x)?).norm(norm).powf(k);
    if let Some(kp) = kprime {
        v /= x.norm(norm).powf(kp);
    }
    Ok(Some(v))
}

/// Monte Carlo estimate of `E‖Inv(x) − F(x)‖^k` over the ball `B(a0, eps)`
/// for each `eps`, with its standard error. All radii share the same draws
/// up to scaling.
#[allow(clippy::too_many_arguments)]
pub fn expected_error_ball<P: Predictor + ?Sized>(
    model: &P,
    a0: &Matrix,
    eps_list: &[f64],
    k: f64,
    n_samples: usize,
    norm: NormKind,
    seed: u64,
    relative: Option<f64>,
) -> Result<Vec<BallRow>> {
    if !(k > 0.0) || n_samples == 0 {
        return Err(Error::InvalidArgument("need k > 0 and n_samples >= 1".into()));
    }
    if eps_list.iter().any(|&e| !(e > 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "eps values must be positive and decreasing".into(),
        ));
    }
    let sampler = BallSampler { n: a0.n() };
    eps_list
        .iter()
        .map(|&eps| {
            let parts = map_chunks(n_samples, |chunk, range| -> Result<(f64, f64, usize, usize)> {
                let mut rng = stream_rng(seed, chunk);
                let (mut s, mut s2, mut kept, mut rejected) = (0.0, 0.0, 0, 0);
                for _ in range {
                    let x = sampler.draw(a0, eps, &mut rng);
                    match contribution(model, &x, k, norm, relative)? {
                        Some(v) => {
                            s += v;
                            s2 += v * v;
                            kept += 1;
                        }
                        None => rejected += 1,
                    }
                }
                Ok((s, s2, kept, rejected))
            });
            let (mut s, mut s2, mut kept, mut rejected) = (0.0, 0.0, 0usize, 0usize);
            for p in parts {
                let (a, b, c, d) = p?;
                s += a;
                s2 += b;
                kept += c;
                rejected += d;
            }
            let m = kept.max(1) as f64;
            let mean = s / m;
            let var = (s2 / m - mean * mean).max(0.0);
            Ok(BallRow {
                eps,
                estimate: mean,
                std_error: (var / m).sqrt(),
                rejected,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceRow {
    pub n_samples: usize,
    pub estimate: f64,
    pub max_contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub rows: Vec<DivergenceRow>,
    /// The largest single term exceeds half the running sum at the final count.
    pub flagged: bool,
}

/// Running Monte Carlo estimates of `E‖Inv(x) − F(x)‖^k` (L2) over
/// `B(a0, eps)` along a schedule of sample counts. A heavy-tail diagnostic,
/// not a proof of divergence.
pub fn divergence_report<P: Predictor + ?Sized>(
    model: &P,
    a0: &Matrix,
    k: f64,
    eps: f64,
    sample_schedule: &[usize],
    seed: u64,
) -> Result<DivergenceReport> {
    if !(k > 0.0 && eps > 0.0) {
        return Err(Error::InvalidArgument("need k > 0 and eps > 0".into()));
    }
    let mut schedule = sample_schedule.to_vec();
    schedule.sort_unstable();
    let total = schedule.last().copied().unwrap_or(0);
    let sampler = BallSampler { n: a0.n() };
    let parts = map_chunks(total, |chunk, range| -> Result<Vec<f64>> {
        let mut rng = stream_rng(seed, chunk);
        range
            .map(|_| {
                let x = sampler.draw(a0, eps, &mut rng);
                Ok(contribution(model, &x, k, NormKind::L2, None)?.unwrap_or(0.0))
            })
            .collect()
    });
    let mut terms = Vec::with_capacity(total);
    for p in parts {
        terms.extend(p?);
    }
    let mut rows = Vec::with_capacity(schedule.len());
    let (mut sum, mut max, mut i) = (0.0, 0.0f64, 0);
    for &count in &schedule {
        while i < count {
            sum += terms[i];
            max = max.max(terms[i]);
            i += 1;
        }
        rows.push(DivergenceRow {
            n_samples: count,
            estimate: if count == 0 { 0.0 } else { sum / count as f64 },
            max_contribution: max,
        });
    }
    Ok(DivergenceReport {
        flagged: sum > 0.0 && max > 0.5 * sum,
        rows,
    })
}

pub fn blowup_csv(rows: &[BlowupRow]) -> String {
    let mut out = String::from("radius,min_scaled_norm\n");
    for r in rows {
        out.push_str(&format!("{},{:.12e}\n", r.radius, r.min_scaled_norm));
    }
    out
}

pub fn ball_csv(rows: &[BallRow]) -> String {
    let mut out = String::from("eps,estimate,std_error,rejected\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.12e},{:.12e},{}\n",
            r.eps, r.estimate, r.std_error, r.rejected
        ));
    }
    out
}

pub fn divergence_csv(report: &DivergenceReport) -> String {
    let mut out = String::from("n_samples,estimate,max_contribution,flagged\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{:.12e},{:.12e},{}\n",
            r.n_samples,
            r.estimate,
            r.max_contribution,
            u8::from(report.flagged)
        ));
    }
    out
}

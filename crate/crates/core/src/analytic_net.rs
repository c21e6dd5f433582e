//! Exact two-layer ReLU realization of the linearized inverse, built from the
//! identity `x = ReLU(x) − ReLU(−x)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::{map_chunks, stream_rng};
use crate::linalg::{inverse, nearest_singular_distance, Matrix};
use crate::linear_approx::linearize_inverse;
use crate::mlp::{Frame, Layer, MlpModel, Predictor};

/// `n² → 2n² → n²` network with `output = f0 + f1·(A − a0)` exactly.
pub fn build_two_layer(a0: &Matrix) -> Result<MlpModel> {
    let lin = linearize_inverse(a0)?;
    let nn = a0.n() * a0.n();
    let mut hidden = Layer::zeros(nn, 2 * nn);
    let mut out = Layer::zeros(2 * nn, nn);
    for m in 0..nn {
        for (q, &c) in lin.row(m).iter().enumerate() {
            hidden.weights[(2 * m) * nn + q] = c;
            hidden.weights[(2 * m + 1) * nn + q] = -c;
        }
        out.weights[m * 2 * nn + 2 * m] = 1.0;
        out.weights[m * 2 * nn + 2 * m + 1] = -1.0;
        out.bias[m] = lin.f0.as_slice()[m];
    }
    let frame = Frame::new(a0.clone(), Matrix::zeros(a0.n()), 1.0)?;
    MlpModel::new(vec![hidden, out], Some(frame))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub scale: f64,
    pub max_abs_error: f64,
    /// Draws rejected because the inverse precondition failed.
    pub skipped: usize,
}

/// Max entrywise error of the analytic network against the true inverse for
/// offsets uniform in `[−c, c]^{n²}`, one row per scale, largest scale first.
pub fn quadratic_error_sweep(
    a0: &Matrix,
    scales: &[f64],
    samples_per_scale: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let limit = 0.5 * nearest_singular_distance(a0);
    if let Some(&bad) = scales.iter().find(|&&c| !(c >= 0.0 && c < limit)) {
        return Err(Error::InvalidArgument(format!("scale {bad} must lie in [0, {limit})")));
    }
    let net = build_two_layer(a0)?;
    let nn = a0.n() * a0.n();
    let mut rows = Vec::with_capacity(scales.len());
    for (s, &c) in scales.iter().enumerate() {
        let parts = map_chunks(samples_per_scale, |chunk, range| -> Result<(f64, usize)> {
            let mut rng = stream_rng(seed, ((s as u64) << 32) | chunk);
            let mut worst: f64 = 0.0;
            let mut skipped = 0;
            for _ in range {
                let offset: Vec<f64> = (0..nn).map(|_| c * (2.0 * rng.random::<f64>() - 1.0)).collect();
                let a = &Matrix::from_flat(a0.n(), offset)? + a0;
                let exact = match inverse(&a) {
                    Ok(m) => m,
                    Err(Error::NearSingular { .. }) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                worst = worst.max(exact.max_abs_diff(&net.predict(&a)?));
            }
            Ok((worst, skipped))
        });
        let mut row = SweepRow {
            scale: c,
            max_abs_error: 0.0,
            skipped: 0,
        };
        for p in parts {
            let (w, k) = p?;
            row.max_abs_error = row.max_abs_error.max(w);
            row.skipped += k;
        }
        rows.push(row);
    }
    rows.sort_by(|a, b| b.scale.total_cmp(&a.scale));
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("scale,max_abs_error,skipped\n");
    for r in rows {
        out.push_str(&format!("{},{:e},{}\n", r.scale, r.max_abs_error, r.skipped));
    }
    out
}

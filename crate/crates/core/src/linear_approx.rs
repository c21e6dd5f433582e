//! First-order expansion of `A ↦ A⁻¹` around a base matrix.
//!
//! `inv(A₀ + A′) ≈ f0 + Σᵢⱼ f1[·,·,i,j]·A′ᵢⱼ` with `f0 = A₀⁻¹` and
//! `f1[k,l,i,j] = −(A₀⁻¹)ₖᵢ (A₀⁻¹)ⱼₗ`.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{inverse, nearest_singular_distance, Matrix};
use crate::mlp::{Frame, Layer, MlpModel, Predictor};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedInverse {
    pub base: Matrix,
    pub f0: Matrix,
    /// Flat `n⁴` array; entry `(k,l,i,j)` at `((k·n + l)·n + i)·n + j`.
    pub f1: Vec<f64>,
}

pub fn linearize_inverse(a0: &Matrix) -> Result<LinearizedInverse> {
    let inv = inverse(a0)?;
    let n = a0.n();
    let mut f1 = vec![0.0; n * n * n * n];
    for k in 0..n {
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    f1[((k * n + l) * n + i) * n + j] = -inv[(k, i)] * inv[(j, l)];
                }
            }
        }
    }
    Ok(LinearizedInverse {
        base: a0.clone(),
        f0: inv,
        f1,
    })
}

impl LinearizedInverse {
    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn f1_at(&self, k: usize, l: usize, i: usize, j: usize) -> f64 {
        let n = self.n();
        self.f1[((k * n + l) * n + i) * n + j]
    }

    /// Coefficients of output entry `m = k·n + l` over the flattened offset.
    pub fn row(&self, m: usize) -> &[f64] {
        let nn = self.n() * self.n();
        &self.f1[m * nn..(m + 1) * nn]
    }

    /// `f1` as an `n² × n²` Jacobian, row-major.
    pub fn jacobian(&self) -> Vec<Vec<f64>> {
        (0..self.n() * self.n()).map(|m| self.row(m).to_vec()).collect()
    }

    /// Degenerate one-layer model computing `f0 + f1·A′` on offsets from `base`.
    pub fn to_model(&self) -> MlpModel {
        let nn = self.n() * self.n();
        let layer = Layer {
            in_dim: nn,
            out_dim: nn,
            weights: self.f1.clone(),
            bias: self.f0.as_slice().to_vec(),
        };
        let frame = Frame::new(self.base.clone(), Matrix::zeros(self.n()), 1.0).expect("same dims");
        MlpModel::new(vec![layer], Some(frame)).expect("consistent dims")
    }

    /// `{"shape": [n,n,n,n], "data": [...]}`
    pub fn f1_json(&self) -> Value {
        let n = self.n();
        json!({"shape": [n, n, n, n], "data": self.f1})
    }
}

/// `f0 + f1·aprime`
pub fn eval_linear(lin: &LinearizedInverse, aprime: &Matrix) -> Result<Matrix> {
    let n = lin.n();
    if aprime.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: aprime.n(),
        });
    }
    let x = aprime.as_slice();
    let data = (0..n * n)
        .map(|m| lin.f0.as_slice()[m] + lin.row(m).iter().zip(x).map(|(c, v)| c * v).sum::<f64>())
        .collect();
    Matrix::from_flat(n, data)
}

impl Predictor for LinearizedInverse {
    fn predict(&self, a: &Matrix) -> Result<Matrix> {
        if a.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: a.n(),
            });
        }
        eval_linear(self, &(a - &self.base))
    }
}

/// Largest deviation between central differences of the inverse and `f1`.
pub fn finite_diff_check(a0: &Matrix, h: f64) -> Result<f64> {
    let sigma = nearest_singular_distance(a0);
    if !(h > 0.0 && h < 0.1 * sigma) {
        return Err(Error::InvalidArgument(format!(
            "step {h} must lie in (0, {})",
            0.1 * sigma
        )));
    }
    let lin = linearize_inverse(a0)?;
    let n = a0.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut plus = a0.clone();
            plus[(i, j)] += h;
            let mut minus = a0.clone();
            minus[(i, j)] -= h;
            let (ip, im) = (inverse(&plus)?, inverse(&minus)?);
            for k in 0..n {
                for l in 0..n {
                    let fd = (ip[(k, l)] - im[(k, l)]) / (2.0 * h);
                    worst = worst.max((fd - lin.f1_at(k, l, i, j)).abs());
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_base() {
        let lin = linearize_inverse(&Matrix::identity(3)).unwrap();
        for k in 0..3 {
            for l in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let expect = if k == i && j == l { -1.0 } else { 0.0 };
                        assert_eq!(lin.f1_at(k, l, i, j), expect);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_offset_gives_f0_and_linearity() {
        let a0 = Matrix::from_rows(&[&[2., 2.], &[2., 3.]]).unwrap();
        let lin = linearize_inverse(&a0).unwrap();
        assert_eq!(eval_linear(&lin, &Matrix::zeros(2)).unwrap(), lin.f0);
        let e = Matrix::from_rows(&[&[0.003, -0.001], &[0.002, 0.004]]).unwrap();
        let once = &eval_linear(&lin, &e).unwrap() - &lin.f0;
        let twice = &eval_linear(&lin, &e.scale(2.0)).unwrap() - &lin.f0;
        assert!(twice.max_abs_diff(&once.scale(2.0)) < 1e-15);
        assert!(eval_linear(&lin, &Matrix::zeros(3)).is_err());
    }

    #[test]
    fn model_form_matches_eval() {
        let a0 = Matrix::from_rows(&[&[2., 1.], &[0., -1.]]).unwrap();
        let lin = linearize_inverse(&a0).unwrap();
        let a = Matrix::from_rows(&[&[2.004, 0.995], &[0.007, -1.002]]).unwrap();
        let via_model = lin.to_model().predict(&a).unwrap();
        assert!(via_model.max_abs_diff(&lin.predict(&a).unwrap()) < 1e-15);
    }
}

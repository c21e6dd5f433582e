use super::MlpModel;
use crate::error::{Error, Result};
use crate::exec::map_chunks;
use crate::linalg::Matrix;

/// Anything that maps an input matrix to an estimate of its inverse.
pub trait Predictor: Sync {
    fn predict(&self, a: &Matrix) -> Result<Matrix>;
}

impl Predictor for MlpModel {
    fn predict(&self, a: &Matrix) -> Result<Matrix> {
        match &self.frame {
            Some(f) => {
                if a.n() != f.n() {
                    return Err(Error::DimensionMismatch {
                        expected: f.n(),
                        got: a.n(),
                    });
                }
                Ok(f.decode(&self.forward_unchecked(&f.encode(a))))
            }
            None => {
                let y = self.forward(a.as_slice())?;
                Matrix::from_flat(a.n(), y)
            }
        }
    }
}

/// Ignores its input and always returns the same matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPredictor(pub Matrix);

impl Predictor for ConstantPredictor {
    fn predict(&self, _a: &Matrix) -> Result<Matrix> {
        Ok(self.0.clone())
    }
}

/// Mean of `|prediction − label|` over samples and matrix entries.
pub fn avg_abs_error<P: Predictor + ?Sized>(predictor: &P, testset: &[(Matrix, Matrix)]) -> Result<f64> {
    if testset.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let partial = map_chunks(testset.len(), |_, range| -> Result<(f64, usize)> {
        let mut sum = 0.0;
        let mut count = 0;
        for (a, label) in &testset[range] {
            let p = predictor.predict(a)?;
            if p.n() != label.n() {
                return Err(Error::DimensionMismatch {
                    expected: label.n(),
                    got: p.n(),
                });
            }
            sum += p
                .as_slice()
                .iter()
                .zip(label.as_slice())
                .map(|(x, y)| (x - y).abs())
                .sum::<f64>();
            count += label.as_slice().len();
        }
        Ok((sum, count))
    });
    let mut sum = 0.0;
    let mut count = 0;
    for r in partial {
        let (s, c) = r?;
        sum += s;
        count += c;
    }
    Ok(sum / count as f64)
}

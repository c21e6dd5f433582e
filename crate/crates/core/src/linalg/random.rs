use rand::distr::{Distribution, Uniform};
use rand::Rng;

use super::{numerical_rank, Matrix};
use crate::error::{Error, Result};
use crate::exec::stream_rng;

const RANK_ATTEMPTS: usize = 100;
const RANK_TOL: f64 = 1e-10;

/// Matrix with entries uniform in `[lo, hi)`.
pub fn random_uniform<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Matrix {
    let dist = Uniform::new(lo, hi).expect("valid range");
    Matrix::from_flat(n, (0..n * n).map(|_| dist.sample(rng)).collect()).unwrap()
}

/// Seeded `B·C` product with `B: n×rank`, `C: rank×n`, entries uniform in
/// `[-1, 1]`, whose numerical rank is verified to equal `rank`.
pub fn random_rank_deficient(n: usize, rank: usize, seed: u64) -> Result<Matrix> {
    if rank >= n {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} must be below dimension {n}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let dist = Uniform::new_inclusive(-1.0, 1.0).unwrap();
    for _ in 0..RANK_ATTEMPTS {
        let b: Vec<f64> = (0..n * rank).map(|_| dist.sample(&mut rng)).collect();
        let c: Vec<f64> = (0..rank * n).map(|_| dist.sample(&mut rng)).collect();
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = (0..rank).map(|k| b[i * rank + k] * c[k * n + j]).sum();
            }
        }
        if numerical_rank(&m, RANK_TOL) == rank {
            return Ok(m);
        }
    }
    Err(Error::RankConstructionFailed {
        n,
        rank,
        attempts: RANK_ATTEMPTS,
    })
}

//! Training boxes around a center matrix and their distance to the singular
//! set.

mod dataset;
mod grid;
mod presets;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::{map_chunks, stream_rng};
use crate::linalg::{inverse, nearest_singular_distance, Matrix};

pub use dataset::{read_dataset, write_dataset, Dataset};
pub use grid::{emit_meps_slice_2d, emit_meps_surface_3d, slice_csv, surface_csv, SliceCell};
pub use presets::{preset, PRESETS};

/// Per-entry box `[center − c, center + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub center: Matrix,
    pub half_width: f64,
}

/// Boxes with more entries than this get random rather than exhaustive corners.
pub const MAX_EXHAUSTIVE_ENTRIES: usize = 12;
/// ε used to certify a box before sampling from it.
pub const DATASET_EPS: f64 = 1e-3;
/// Samples closer than this to the singular set are redrawn.
pub const REJECT_FLOOR: f64 = 1e-6;
const CERTIFY_BUDGET: usize = 1024;

impl BoxRegion {
    pub fn new(center: Matrix, half_width: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "half width must be > 0, got {half_width}"
            )));
        }
        Ok(BoxRegion { center, half_width })
    }

    pub fn n(&self) -> usize {
        self.center.n()
    }

    pub fn contains(&self, a: &Matrix) -> bool {
        a.n() == self.n()
            && a.as_slice()
                .iter()
                .zip(self.center.as_slice())
                .all(|(x, c)| (x - c).abs() <= self.half_width)
    }

    /// Uniform point of the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Matrix {
        let c = self.half_width;
        let data = self
            .center
            .as_slice()
            .iter()
            .map(|x| x + c * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        Matrix::from_flat(self.n(), data).unwrap()
    }

    fn corner(&self, bits: impl Fn(usize) -> bool) -> Matrix {
        let data = self
            .center
            .as_slice()
            .iter()
            .enumerate()
            .map(|(q, x)| {
                if bits(q) {
                    x + self.half_width
                } else {
                    x - self.half_width
                }
            })
            .collect();
        Matrix::from_flat(self.n(), data).unwrap()
    }

    /// `σ_min(center) − c·n`, a lower bound on the clearance of every point.
    pub fn analytic_lower_bound(&self) -> f64 {
        nearest_singular_distance(&self.center) - self.half_width * self.n() as f64
    }
}

/// Smallest singular value seen over the box corners and `budget` uniform
/// interior samples. An upper bound on the true clearance.
pub fn box_clearance(region: &BoxRegion, budget: usize, seed: u64) -> f64 {
    let nn = region.n() * region.n();
    let corners = if nn <= MAX_EXHAUSTIVE_ENTRIES {
        map_chunks(1 << nn, |_, range| {
            range
                .map(|mask| nearest_singular_distance(&region.corner(|q| mask >> q & 1 == 1)))
                .fold(f64::INFINITY, f64::min)
        })
    } else {
        map_chunks(budget, |chunk, range| {
            let mut rng = stream_rng(seed, (1 << 32) | chunk);
            range
                .map(|_| {
                    let bits: Vec<bool> = (0..nn).map(|_| rng.random()).collect();
                    nearest_singular_distance(&region.corner(|q| bits[q]))
                })
                .fold(f64::INFINITY, f64::min)
        })
    };
    let interior = map_chunks(budget, |chunk, range| {
        let mut rng = stream_rng(seed, chunk);
        range
            .map(|_| nearest_singular_distance(&region.sample(&mut rng)))
            .fold(f64::INFINITY, f64::min)
    });
    corners.into_iter().chain(interior).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certification {
    pub eps: f64,
    pub clearance: f64,
    pub analytic_lower: f64,
    pub certified: bool,
}

/// A box is certified clear of `M_eps` when the sampled clearance exceeds
/// `2·eps` and the analytic lower bound exceeds `eps`.
pub fn certify(region: &BoxRegion, eps: f64, budget: usize, seed: u64) -> Certification {
    let clearance = box_clearance(region, budget, seed);
    let analytic_lower = region.analytic_lower_bound();
    Certification {
        eps,
        clearance,
        analytic_lower,
        certified: clearance > 2.0 * eps && analytic_lower > eps,
    }
}

/// `count` pairs `(A, A⁻¹)` with `A` uniform in a certified box.
pub fn sample_dataset(region: &BoxRegion, count: usize, seed: u64) -> Result<Vec<(Matrix, Matrix)>> {
    let cert = certify(region, DATASET_EPS, CERTIFY_BUDGET, seed);
    if !cert.certified {
        return Err(Error::RegionUnsafe(format!(
            "box is not clear of M_eps for eps={}: sampled clearance {:.3e}, analytic bound {:.3e}",
            DATASET_EPS, cert.clearance, cert.analytic_lower
        )));
    }
    let check_each = cert.analytic_lower < REJECT_FLOOR;
    let parts = map_chunks(count, |chunk, range| -> Result<Vec<(Matrix, Matrix)>> {
        let mut rng = stream_rng(seed, (2 << 32) | chunk);
        let mut out = Vec::with_capacity(range.len());
        while out.len() < range.len() {
            let a = region.sample(&mut rng);
            if check_each && nearest_singular_distance(&a) < REJECT_FLOOR {
                continue;
            }
            match inverse(&a) {
                Ok(inv) => out.push((a, inv)),
                Err(Error::NearSingular { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    });
    let mut all = Vec::with_capacity(count);
    for p in parts {
        all.extend(p?);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first() -> BoxRegion {
        BoxRegion::new(Matrix::from_rows(&[&[2., 2.], &[2., 3.]]).unwrap(), 0.01).unwrap()
    }

    #[test]
    fn clearance_of_first_box() {
        let c = box_clearance(&first(), 256, 1);
        assert!(c > 0.1);
        assert_eq!(c, box_clearance(&first(), 256, 1));
        let singular = BoxRegion::new(Matrix::from_rows(&[&[1., 1.], &[1., 1.]]).unwrap(), 0.01).unwrap();
        assert!(!certify(&singular, 1e-3, 64, 0).certified);
    }

    #[test]
    fn dataset_basics() {
        let set = sample_dataset(&first(), 10, 3).unwrap();
        assert_eq!(set.len(), 10);
        for (a, l) in &set {
            assert!(first().contains(a));
            assert!((a * l).max_abs_diff(&Matrix::identity(2)) <= 1e-9);
        }
        assert!(sample_dataset(&first(), 0, 3).unwrap().is_empty());
        let singular = BoxRegion::new(Matrix::from_rows(&[&[1., 1.], &[1., 1.]]).unwrap(), 0.01).unwrap();
        assert!(matches!(sample_dataset(&singular, 5, 0), Err(Error::RegionUnsafe(_))));
    }
}

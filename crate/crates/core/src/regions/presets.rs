use rand::Rng;

use super::BoxRegion;
use crate::error::{Error, Result};
use crate::exec::stream_rng;
use crate::linalg::Matrix;

pub const PRESETS: &[&str] = &["2x2-first", "2x2-second", "3x3", "16x16"];

const HALF_WIDTH: f64 = 0.01;
const STAND_IN_SEED: u64 = 16;

/// Named dataset boxes. `16x16` is a seeded center with entries in
/// `{−2, …, 2}`, redrawn until its box is comfortably nonsingular.
pub fn preset(name: &str) -> Result<BoxRegion> {
    let center = match name {
        "2x2-first" => Matrix::from_rows(&[&[2., 2.], &[2., 3.]])?,
        "2x2-second" => Matrix::from_rows(&[&[2., 1.], &[0., -1.]])?,
        "3x3" => Matrix::from_rows(&[&[1., 1., 1.], &[1., 2., 3.], &[1., 2., 4.]])?,
        "16x16" => return Ok(stand_in_16()),
        other => {
            return Err(Error::Config(format!(
                "unknown dataset preset `{other}` (known: {})",
                PRESETS.join(", ")
            )))
        }
    };
    BoxRegion::new(center, HALF_WIDTH)
}

fn stand_in_16() -> BoxRegion {
    for attempt in 0.. {
        let mut rng = stream_rng(STAND_IN_SEED, attempt);
        let data = (0..256).map(|_| rng.random_range(-2..=2) as f64).collect();
        let region = BoxRegion::new(Matrix::from_flat(16, data).unwrap(), HALF_WIDTH).unwrap();
        if region.analytic_lower_bound() > 0.01 {
            return region;
        }
    }
    unreachable!()
}

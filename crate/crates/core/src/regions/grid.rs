//! Plot grids of the singular set of 2×2 matrices.

use crate::error::{Error, Result};
use crate::exec::map_indexed;

pub type Entry = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceCell {
    pub x: f64,
    pub y: f64,
    pub det: f64,
    pub in_meps: bool,
}

fn axis(range: (f64, f64), resolution: usize, k: usize) -> f64 {
    if resolution == 1 {
        return range.0;
    }
    range.0 + (range.1 - range.0) * k as f64 / (resolution - 1) as f64
}

fn flat(e: Entry) -> Result<usize> {
    if e.0 > 1 || e.1 > 1 {
        return Err(Error::InvalidArgument(format!("entry {e:?} outside a 2x2 matrix")));
    }
    Ok(e.0 * 2 + e.1)
}

/// Grid over two free entries of a 2×2 matrix with the other two fixed.
/// A cell is in `M_eps` when `|det|/‖∇det‖ < eps` (gradient over the free
/// entries), or when `|det| < eps` where that gradient vanishes, or when
/// `det` is exactly zero. Cells are ordered row by row in `y`, then `x`.
pub fn emit_meps_slice_2d(
    fixed: [(Entry, f64); 2],
    free: [Entry; 2],
    range: (f64, f64),
    resolution: usize,
    eps: f64,
) -> Result<Vec<SliceCell>> {
    let fixed_idx = [flat(fixed[0].0)?, flat(fixed[1].0)?];
    let free_idx = [flat(free[0])?, flat(free[1])?];
    let mut seen = [false; 4];
    for q in fixed_idx.iter().chain(&free_idx) {
        seen[*q] = true;
    }
    if seen.contains(&false) {
        return Err(Error::InvalidArgument(
            "fixed and free entries must cover the matrix".into(),
        ));
    }
    if resolution == 0 || !(range.0 <= range.1) || !(eps >= 0.0) {
        return Err(Error::InvalidArgument(
            "need resolution >= 1, lo <= hi and eps >= 0".into(),
        ));
    }
    let rows = map_indexed(resolution, |iy| {
        let y = axis(range, resolution, iy);
        (0..resolution)
            .map(|ix| {
                let x = axis(range, resolution, ix);
                let mut a = [0.0; 4];
                a[fixed_idx[0]] = fixed[0].1;
                a[fixed_idx[1]] = fixed[1].1;
                a[free_idx[0]] = x;
                a[free_idx[1]] = y;
                let det = a[0] * a[3] - a[1] * a[2];
                let grad = [a[3], -a[2], -a[1], a[0]];
                let g = grad[free_idx[0]].hypot(grad[free_idx[1]]);
                let in_meps = det == 0.0 || if g == 0.0 { det.abs() < eps } else { det.abs() / g < eps };
                SliceCell { x, y, det, in_meps }
            })
            .collect::<Vec<_>>()
    });
    Ok(rows.into_iter().flatten().collect())
}

/// Points `(a12, a21, a22)` on `det = 0` for fixed `a11`, over an
/// `(a12, a21)` grid.
pub fn emit_meps_surface_3d(a11: f64, range: (f64, f64), resolution: usize) -> Result<Vec<[f64; 3]>> {
    if a11 == 0.0 || !a11.is_finite() {
        return Err(Error::InvalidArgument("a11 must be finite and nonzero".into()));
    }
    if resolution == 0 || !(range.0 <= range.1) {
        return Err(Error::InvalidArgument("need resolution >= 1 and lo <= hi".into()));
    }
    let rows = map_indexed(resolution, |i| {
        let a12 = axis(range, resolution, i);
        (0..resolution)
            .map(|j| {
                let a21 = axis(range, resolution, j);
                [a12, a21, a12 * a21 / a11]
            })
            .collect::<Vec<_>>()
    });
    Ok(rows.into_iter().flatten().collect())
}

pub fn slice_csv(cells: &[SliceCell]) -> String {
    let mut out = String::from("x,y,value,in_meps\n");
    for c in cells {
        out.push_str(&format!("{},{},{},{}\n", c.x, c.y, c.det, u8::from(c.in_meps)));
    }
    out
}

pub fn surface_csv(points: &[[f64; 3]]) -> String {
    let mut out = String::from("a12,a21,a22\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p[0], p[1], p[2]));
    }
    out
}

//! Linear regions of one-hidden-layer ReLU networks.
//!
//! On the region where a fixed set of hidden units is active, the network is
//! the affine map `W₂·diag(mask)·W₁·x + W₂·(mask ⊙ b₁) + b₂`. This module
//! samples which regions a box actually hits, enumerates every region that
//! meets the box, and bounds by LP how far each region's map strays from a
//! linearization of the inverse.
//!
//! Maps and patterns live in the model's native coordinates. Gaps are
//! reported in matrix units.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::exec::{map_chunks, stream_rng};
use crate::linalg::Matrix;
use crate::linear_approx::LinearizedInverse;
use crate::lp::BoxLp;
use crate::mlp::{dot, Frame, Layer, MlpModel};
use crate::regions::BoxRegion;

pub const MAX_ENUM_WIDTH: usize = 24;

/// Sign of every hidden unit. Units with a zero weight row and zero bias
/// are marked excluded and never appear in labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActivationPattern {
    pub active: Vec<bool>,
    pub excluded: Vec<bool>,
}

impl ActivationPattern {
    pub fn mask(&self) -> Vec<f64> {
        self.active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect()
    }

    /// Compact `1`/`0` string over the included units.
    pub fn bits(&self) -> String {
        self.active
            .iter()
            .zip(&self.excluded)
            .filter(|(_, &x)| !x)
            .map(|(&a, _)| if a { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for ActivationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .active
            .iter()
            .zip(&self.excluded)
            .enumerate()
            .filter(|(_, (_, &x))| !x)
            .map(|(i, (&a, _))| format!("h{i}{}", if a { ">0" } else { "<0" }))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternFrequency {
    pub pattern: ActivationPattern,
    pub count: usize,
    pub frequency: f64,
}

/// Restriction of the network to one region, in native coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `out_dim × in_dim`, row-major.
    pub coefficients: Vec<f64>,
    pub bias: Vec<f64>,
}

impl AffineMap {
    pub fn row(&self, m: usize) -> &[f64] {
        &self.coefficients[m * self.in_dim..(m + 1) * self.in_dim]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.out_dim).map(|m| self.bias[m] + dot(self.row(m), x)).collect()
    }
}

fn two_layers(model: &MlpModel) -> Result<(&Layer, &Layer)> {
    match model.layers.as_slice() {
        [a, b] => Ok((a, b)),
        _ => Err(Error::InvalidArgument(format!(
            "region analysis needs exactly one hidden layer, model has {}",
            model.layers.len().saturating_sub(1)
        ))),
    }
}

/// Units whose pre-activation is identically zero.
pub fn dead_units(model: &MlpModel) -> Result<Vec<bool>> {
    let (h, _) = two_layers(model)?;
    Ok((0..h.out_dim)
        .map(|u| h.bias[u] == 0.0 && h.row(u).iter().all(|&w| w == 0.0))
        .collect())
}

fn native_frame(model: &MlpModel, n: usize) -> Frame {
    model
        .frame
        .clone()
        .unwrap_or_else(|| Frame::new(Matrix::zeros(n), Matrix::zeros(n), 1.0).unwrap())
}

/// Pattern at native input `x`; a pre-activation of exactly 0 is inactive.
pub fn pattern_at(model: &MlpModel, x: &[f64]) -> Result<ActivationPattern> {
    let (h, _) = two_layers(model)?;
    let mut pre = vec![0.0; h.out_dim];
    h.affine_into(x, &mut pre);
    Ok(ActivationPattern {
        active: pre.iter().map(|&p| p > 0.0).collect(),
        excluded: dead_units(model)?,
    })
}

/// Histogram of patterns over `count` uniform samples of the box, most
/// frequent first.
pub fn sample_patterns(model: &MlpModel, region: &BoxRegion, count: usize, seed: u64) -> Result<Vec<PatternFrequency>> {
    let (h, _) = two_layers(model)?;
    let nn = region.n() * region.n();
    if model.input_dim() != nn {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            got: nn,
        });
    }
    let frame = native_frame(model, region.n());
    let parts = map_chunks(count, |chunk, range| {
        let mut rng = stream_rng(seed, chunk);
        let mut hist: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
        let mut pre = vec![0.0; h.out_dim];
        for _ in range {
            let x = frame.encode(&region.sample(&mut rng));
            h.affine_into(&x, &mut pre);
            *hist.entry(pre.iter().map(|&p| p > 0.0).collect()).or_default() += 1;
        }
        hist
    });
    let mut total: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    for p in parts {
        for (k, v) in p {
            *total.entry(k).or_default() += v;
        }
    }
    let excluded = dead_units(model)?;
    let mut out: Vec<PatternFrequency> = total
        .into_iter()
        .map(|(active, c)| PatternFrequency {
            pattern: ActivationPattern {
                active,
                excluded: excluded.clone(),
            },
            count: c,
            frequency: c as f64 / count as f64,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| b.pattern.cmp(&a.pattern)));
    Ok(out)
}

pub fn affine_map_for_pattern(model: &MlpModel, pattern: &ActivationPattern) -> Result<AffineMap> {
    let (h, o) = two_layers(model)?;
    if pattern.active.len() != h.out_dim {
        return Err(Error::DimensionMismatch {
            expected: h.out_dim,
            got: pattern.active.len(),
        });
    }
    let mask = pattern.mask();
    let mut coefficients = vec![0.0; o.out_dim * h.in_dim];
    let mut bias = o.bias.clone();
    for m in 0..o.out_dim {
        for u in 0..h.out_dim {
            let w = o.weights[m * o.in_dim + u] * mask[u];
            if w == 0.0 {
                continue;
            }
            for (c, hw) in coefficients[m * h.in_dim..(m + 1) * h.in_dim].iter_mut().zip(h.row(u)) {
                *c += w * hw;
            }
            bias[m] += w * h.bias[u];
        }
    }
    Ok(AffineMap {
        in_dim: h.in_dim,
        out_dim: o.out_dim,
        coefficients,
        bias,
    })
}

fn check_dims(map: &AffineMap, lin: &LinearizedInverse) -> Result<()> {
    let nn = lin.n() * lin.n();
    if map.in_dim != nn || map.out_dim != nn {
        return Err(Error::DimensionMismatch {
            expected: nn,
            got: map.in_dim,
        });
    }
    Ok(())
}

/// Largest coefficient difference on output `m`.
pub fn coeff_distance_row(map: &AffineMap, lin: &LinearizedInverse, m: usize) -> Result<f64> {
    check_dims(map, lin)?;
    Ok(map
        .row(m)
        .iter()
        .zip(lin.row(m))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// `max |map coefficient − f1 coefficient|` over all outputs and inputs.
/// Input and output scales of a frame cancel, so native coefficients are
/// already in matrix units.
pub fn coeff_distance(map: &AffineMap, lin: &LinearizedInverse) -> Result<f64> {
    check_dims(map, lin)?;
    (0..map.out_dim).try_fold(0.0, |acc: f64, m| Ok(acc.max(coeff_distance_row(map, lin, m)?)))
}

/// The box in native coordinates, intersected with the pattern's closed
/// halfspaces over the included units in `units`.
fn region_lp(model: &MlpModel, region: &BoxRegion, signs: &[(usize, bool)]) -> Result<BoxLp> {
    let (h, _) = two_layers(model)?;
    let frame = native_frame(model, region.n());
    let c = region.half_width;
    let lower = frame.encode(&region.center.add_scalar(-c));
    let upper = frame.encode(&region.center.add_scalar(c));
    let mut lp = BoxLp::new(lower, upper)?;
    for &(u, active) in signs {
        if active {
            lp.add_ge(h.row(u).to_vec(), -h.bias[u]);
        } else {
            lp.add_le(h.row(u).to_vec(), -h.bias[u]);
        }
    }
    Ok(lp)
}

fn included_signs(pattern: &ActivationPattern) -> Vec<(usize, bool)> {
    pattern
        .active
        .iter()
        .zip(&pattern.excluded)
        .enumerate()
        .filter(|(_, (_, &x))| !x)
        .map(|(u, (&a, _))| (u, a))
        .collect()
}

/// Maximum of `|network output m − linearization output m|` in matrix units
/// over the box intersected with the pattern's closed region.
pub fn max_gap_lp(
    model: &MlpModel,
    pattern: &ActivationPattern,
    region: &BoxRegion,
    lin: &LinearizedInverse,
    output_index: usize,
) -> Result<f64> {
    let map = affine_map_for_pattern(model, pattern)?;
    check_dims(&map, lin)?;
    if output_index >= map.out_dim {
        return Err(Error::InvalidArgument(format!(
            "output index {output_index} out of range"
        )));
    }
    let frame = native_frame(model, region.n());
    let m = output_index;
    let s = frame.scale;
    let objective: Vec<f64> = map.row(m).iter().zip(lin.row(m)).map(|(a, f)| s * (a - f)).collect();
    let shift = &frame.input_center - &lin.base;
    let constant =
        frame.output_center.as_slice()[m] + s * map.bias[m] - lin.f0.as_slice()[m] - dot(lin.row(m), shift.as_slice());
    let lp = region_lp(model, region, &included_signs(pattern))?.with_objective(objective, constant);
    let hi = lp.maximize()?.value;
    let lo = lp.minimize()?.value;
    Ok(hi.max(-lo))
}

/// Every pattern whose closed region meets the box, by depth-first search
/// over unit signs with LP pruning. Active branches are explored first.
pub fn enumerate_nonempty_patterns(model: &MlpModel, region: &BoxRegion) -> Result<Vec<ActivationPattern>> {
    let (h, _) = two_layers(model)?;
    if h.out_dim > MAX_ENUM_WIDTH {
        return Err(Error::WidthCapExceeded {
            width: h.out_dim,
            cap: MAX_ENUM_WIDTH,
        });
    }
    let excluded = dead_units(model)?;
    let units: Vec<usize> = (0..h.out_dim).filter(|&u| !excluded[u]).collect();
    let mut out = Vec::new();
    let mut signs = Vec::with_capacity(units.len());
    dfs(model, region, &units, &mut signs, &mut out)?;
    Ok(out
        .into_iter()
        .map(|s: Vec<(usize, bool)>| {
            let mut active = vec![false; h.out_dim];
            for (u, a) in s {
                active[u] = a;
            }
            ActivationPattern {
                active,
                excluded: excluded.clone(),
            }
        })
        .collect())
}

fn dfs(
    model: &MlpModel,
    region: &BoxRegion,
    units: &[usize],
    signs: &mut Vec<(usize, bool)>,
    out: &mut Vec<Vec<(usize, bool)>>,
) -> Result<()> {
    if !region_lp(model, region, signs)?.is_feasible()? {
        return Ok(());
    }
    if signs.len() == units.len() {
        out.push(signs.clone());
        return Ok(());
    }
    let u = units[signs.len()];
    for active in [true, false] {
        signs.push((u, active));
        dfs(model, region, units, signs, out)?;
        signs.pop();
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub pattern: ActivationPattern,
    pub frequency: f64,
    pub output_index: usize,
    pub coeff_distance: f64,
    pub max_gap: f64,
}

/// One row per (enumerated pattern, output entry), frequencies taken from
/// `sampled` (zero for patterns never hit), most frequent first.
pub fn region_report(
    model: &MlpModel,
    region: &BoxRegion,
    lin: &LinearizedInverse,
    sampled: &[PatternFrequency],
) -> Result<Vec<ReportRow>> {
    let mut patterns: Vec<(ActivationPattern, f64)> = enumerate_nonempty_patterns(model, region)?
        .into_iter()
        .map(|p| {
            let freq = sampled.iter().find(|s| s.pattern == p).map_or(0.0, |s| s.frequency);
            (p, freq)
        })
        .collect();
    patterns.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut rows = Vec::new();
    for (p, freq) in patterns {
        let map = affine_map_for_pattern(model, &p)?;
        for m in 0..model.output_dim() {
            rows.push(ReportRow {
                frequency: freq,
                output_index: m,
                coeff_distance: coeff_distance_row(&map, lin, m)?,
                max_gap: max_gap_lp(model, &p, region, lin, m)?,
                pattern: p.clone(),
            });
        }
    }
    Ok(rows)
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("pattern,frequency,output_index,coeff_distance,max_gap\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.8e},{:.8e}\n",
            r.pattern, r.frequency, r.output_index, r.coeff_distance, r.max_gap
        ));
    }
    out
}

pub fn patterns_csv(hist: &[PatternFrequency]) -> String {
    let mut out = String::from("pattern,count,frequency\n");
    for p in hist {
        out.push_str(&format!("{},{},{}\n", p.pattern, p.count, p.frequency));
    }
    out
}

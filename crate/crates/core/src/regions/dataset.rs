//! Dataset files: `#`-prefixed header lines, a column line, then one record
//! per line holding the flattened input followed by the flattened inverse.
//!
//! ```text
//! # n=2
//! # count=2
//! # seed=7
//! # center=2 2 2 3
//! # half_width=0.01
//! x0,x1,x2,x3,y0,y1,y2,y3
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::BoxRegion;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mlp::{Frame, TrainData};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub region: BoxRegion,
    pub seed: u64,
    pub pairs: Vec<(Matrix, Matrix)>,
}

impl Dataset {
    pub fn to_csv(&self) -> String {
        let n = self.region.n();
        let nn = n * n;
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        writeln!(out, "# n={n}").unwrap();
        writeln!(out, "# count={}", self.pairs.len()).unwrap();
        writeln!(out, "# seed={}", self.seed).unwrap();
        writeln!(out, "# center={}", join(self.region.center.as_slice())).unwrap();
        writeln!(out, "# half_width={}", self.region.half_width).unwrap();
        let cols: Vec<String> = (0..nn)
            .map(|i| format!("x{i}"))
            .chain((0..nn).map(|i| format!("y{i}")))
            .collect();
        writeln!(out, "{}", cols.join(",")).unwrap();
        for (a, l) in &self.pairs {
            let rec: Vec<String> = a.as_slice().iter().chain(l.as_slice()).map(f64::to_string).collect();
            writeln!(out, "{}", rec.join(",")).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut header = std::collections::BTreeMap::new();
        let mut lines = text.lines().enumerate().peekable();
        while let Some((_, l)) = lines.peek() {
            let Some(rest) = l.strip_prefix('#') else { break };
            if let Some((k, v)) = rest.split_once('=') {
                header.insert(k.trim().to_string(), v.trim().to_string());
            }
            lines.next();
        }
        let get = |k: &str| {
            header
                .get(k)
                .ok_or_else(|| Error::schema(format!("header.{k}"), "missing"))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::schema(format!("header.{k}"), "not a number"))
        };
        let n = num("n")? as usize;
        let count = num("count")? as usize;
        let seed: u64 = get("seed")?
            .parse()
            .map_err(|_| Error::schema("header.seed", "not an integer"))?;
        let center: Vec<f64> = get("center")?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::schema("header.center", "not a number")))
            .collect::<Result<_>>()?;
        let center = Matrix::from_flat(n, center).map_err(|e| Error::schema("header.center", e.to_string()))?;
        let region = BoxRegion::new(center, num("half_width")?)?;
        lines.next();
        let nn = n * n;
        let mut pairs = Vec::with_capacity(count);
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::schema(format!("line {}", lineno + 1), "not a number"))
                })
                .collect::<Result<_>>()?;
            if vals.len() != 2 * nn {
                return Err(Error::schema(
                    format!("line {}", lineno + 1),
                    format!("expected {} fields", 2 * nn),
                ));
            }
            pairs.push((
                Matrix::from_flat(n, vals[..nn].to_vec())?,
                Matrix::from_flat(n, vals[nn..].to_vec())?,
            ));
        }
        if pairs.len() != count {
            return Err(Error::schema(
                "header.count",
                format!("declares {count} records, found {}", pairs.len()),
            ));
        }
        Ok(Dataset { region, seed, pairs })
    }

    /// Network-coordinate training pairs under `frame`.
    pub fn to_train_data(&self, frame: &Frame) -> TrainData {
        let nn = self.region.n() * self.region.n();
        let mut d = TrainData::new(nn, nn);
        for (a, l) in &self.pairs {
            d.push(&frame.encode(a), &frame.encode_label(l));
        }
        d
    }
}

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, ds.to_csv())?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    Dataset::from_csv(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::sample_dataset;

    #[test]
    fn csv_round_trip() {
        let region = BoxRegion::new(Matrix::from_rows(&[&[2., 1.], &[0., -1.]]).unwrap(), 0.01).unwrap();
        let ds = Dataset {
            pairs: sample_dataset(&region, 5, 7).unwrap(),
            region,
            seed: 7,
        };
        assert_eq!(Dataset::from_csv(&ds.to_csv()).unwrap(), ds);
        let empty = Dataset { pairs: vec![], ..ds };
        let text = empty.to_csv();
        assert_eq!(text.lines().count(), 6);
        assert_eq!(Dataset::from_csv(&text).unwrap(), empty);
    }
}

//! Dense two-phase simplex with Bland's rule for small box-bounded LPs.
//!
//! Problems have the form
//!
//! ```text
//! maximize   c·x + c0
//! subject to aᵢ·x ≤ bᵢ
//!            lo ≤ x ≤ hi
//! ```
//!
//! The box keeps every problem bounded. Variables are shifted to `z = x − lo`
//! so they are nonnegative, and the upper bounds become ordinary rows.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxLp {
    pub objective: Vec<f64>,
    pub constant: f64,
    /// `(a, b)` meaning `a·x ≤ b`.
    pub rows: Vec<(Vec<f64>, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

impl BoxLp {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite())
        {
            return Err(Error::InvalidArgument("box bounds must be finite with lo <= hi".into()));
        }
        Ok(BoxLp {
            objective: vec![0.0; lower.len()],
            constant: 0.0,
            rows: Vec::new(),
            lower,
            upper,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn add_le(&mut self, a: Vec<f64>, b: f64) {
        assert_eq!(a.len(), self.dim());
        self.rows.push((a, b));
    }

    pub fn add_ge(&mut self, a: Vec<f64>, b: f64) {
        self.add_le(a.into_iter().map(|v| -v).collect(), -b);
    }

    pub fn with_objective(mut self, c: Vec<f64>, c0: f64) -> Self {
        assert_eq!(c.len(), self.dim());
        self.objective = c;
        self.constant = c0;
        self
    }

    pub fn maximize(&self) -> Result<LpSolution> {
        let mut t = Tableau::phase_one(self)?;
        let nv = self.dim();
        let mut cost = vec![0.0; t.ncols];
        cost[..nv].copy_from_slice(&self.objective);
        t.optimize(&cost, t.first_artificial)?;
        let z = t.primal(nv);
        let x: Vec<f64> = z.iter().zip(&self.lower).map(|(z, l)| l + z).collect();
        let value = self.constant + self.objective.iter().zip(&x).map(|(c, x)| c * x).sum::<f64>();
        Ok(LpSolution { value, x })
    }

    pub fn minimize(&self) -> Result<LpSolution> {
        let neg = self
            .clone()
            .with_objective(self.objective.iter().map(|c| -c).collect(), -self.constant);
        let mut s = neg.maximize()?;
        s.value = -s.value;
        Ok(s)
    }

    pub fn is_feasible(&self) -> Result<bool> {
        match Tableau::phase_one(self) {
            Ok(_) => Ok(true),
            Err(Error::EmptyRegion) => Ok(false),
            Err(e) => Err(e),
        }
    }
}

struct Tableau {
    /// `m × (ncols + 1)`; the last column is the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    first_artificial: usize,
}

impl Tableau {
    /// Builds the shifted problem and drives it to a feasible basis, or
    /// returns `EmptyRegion`.
    fn phase_one(lp: &BoxLp) -> Result<Self> {
        let nv = lp.dim();
        let mut rows: Vec<(Vec<f64>, f64)> = lp
            .rows
            .iter()
            .map(|(a, b)| (a.clone(), b - a.iter().zip(&lp.lower).map(|(x, l)| x * l).sum::<f64>()))
            .collect();
        for k in 0..nv {
            let mut e = vec![0.0; nv];
            e[k] = 1.0;
            rows.push((e, lp.upper[k] - lp.lower[k]));
        }
        let m = rows.len();
        let n_art = rows.iter().filter(|(_, r)| *r < 0.0).count();
        let first_artificial = nv + m;
        let ncols = first_artificial + n_art;
        let mut a = vec![vec![0.0; ncols + 1]; m];
        let mut basis = vec![0; m];
        let mut next_art = first_artificial;
        for (i, (coef, rhs)) in rows.iter().enumerate() {
            let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
            for (k, c) in coef.iter().enumerate() {
                a[i][k] = sign * c;
            }
            a[i][nv + i] = sign;
            a[i][ncols] = sign * rhs;
            if *rhs < 0.0 {
                a[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            } else {
                basis[i] = nv + i;
            }
        }
        let mut t = Tableau {
            a,
            basis,
            ncols,
            first_artificial,
        };
        if n_art == 0 {
            return Ok(t);
        }
        let scale = rows.iter().map(|(_, r)| r.abs()).fold(1.0, f64::max);
        let mut cost = vec![0.0; ncols];
        cost[first_artificial..].iter_mut().for_each(|c| *c = -1.0);
        let best = t.optimize(&cost, ncols)?;
        if best < -FEAS_TOL * scale {
            return Err(Error::EmptyRegion);
        }
        t.expel_artificials();
        Ok(t)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c];
        self.a[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost·z` over columns `< allowed`; returns the optimum.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<f64> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed).find(|&j| {
                !self.basis.contains(&j)
                    && cost[j]
                        - self
                            .a
                            .iter()
                            .zip(&self.basis)
                            .map(|(row, &b)| cost[b] * row[j])
                            .sum::<f64>()
                        > PIVOT_TOL
            });
            let Some(c) = entering else {
                return Ok(self
                    .a
                    .iter()
                    .zip(&self.basis)
                    .map(|(row, &b)| cost[b] * row[self.ncols])
                    .sum());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.a.iter().enumerate() {
                if row[c] > PIVOT_TOL {
                    let ratio = row[self.ncols].max(0.0) / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_TOL || (ratio <= lr + PIVOT_TOL && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::InvalidArgument("linear program is unbounded".into()));
            };
            self.pivot(r, c);
        }
        Err(Error::InvalidArgument("simplex pivot limit reached".into()))
    }

    /// Pivots zero-level artificials out of the basis, dropping redundant rows.
    fn expel_artificials(&mut self) {
        let mut i = 0;
        while i < self.a.len() {
            if self.basis[i] >= self.first_artificial {
                match (0..self.first_artificial).find(|&j| self.a[i][j].abs() > PIVOT_TOL) {
                    Some(j) => self.pivot(i, j),
                    None => {
                        self.a.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    fn primal(&self, nv: usize) -> Vec<f64> {
        let mut z = vec![0.0; nv];
        for (row, &b) in self.a.iter().zip(&self.basis) {
            if b < nv {
                z[b] = row[self.ncols];
            }
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_only() {
        let lp = BoxLp::new(vec![-1.0, 2.0], vec![1.0, 5.0])
            .unwrap()
            .with_objective(vec![1.0, -2.0], 0.5);
        let s = lp.maximize().unwrap();
        assert!((s.value - (1.0 - 4.0 + 0.5)).abs() < 1e-12);
        assert!((lp.minimize().unwrap().value - (-1.0 - 10.0 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn halfspace_cuts_corner() {
        // max x + y over [0,1]², x + y ≤ 1.5, x − y ≥ 0.2
        let mut lp = BoxLp::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        lp.add_le(vec![1.0, 1.0], 1.5);
        lp.add_ge(vec![1.0, -1.0], 0.2);
        let lp = lp.with_objective(vec![1.0, 1.0], 0.0);
        assert!((lp.maximize().unwrap().value - 1.5).abs() < 1e-12);
        assert!((lp.minimize().unwrap().value - 0.2).abs() < 1e-12);
    }

    #[test]
    fn infeasible_is_empty_region() {
        let mut lp = BoxLp::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        lp.add_ge(vec![1.0, 1.0], 2.5);
        assert!(matches!(lp.maximize(), Err(Error::EmptyRegion)));
        assert!(!lp.is_feasible().unwrap());
    }

    #[test]
    fn zero_objective_returns_constant() {
        let mut lp = BoxLp::new(vec![-1.0; 3], vec![1.0; 3]).unwrap();
        lp.add_ge(vec![1.0, 0.0, 0.0], 0.5);
        let lp = lp.with_objective(vec![0.0; 3], -0.25);
        assert_eq!(lp.maximize().unwrap().value, -0.25);
    }
}

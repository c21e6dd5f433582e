//! Dense small-matrix arithmetic.
//!
//! Determinants use the Leibniz expansion up to `n = 4` and LU with partial
//! pivoting above that; inverses follow the same split (adjugate over
//! determinant, then LU solves). All norms are vectorized: the matrix is
//! treated as a flat vector of its `n²` entries.

mod random;
mod svd;

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use random::{random_rank_deficient, random_uniform};
pub use svd::{nearest_singular_distance, numerical_rank, singular_values};

/// Largest size the Leibniz expansion is used for.
pub const LEIBNIZ_MAX: usize = 4;

/// Relative floor for the nonsingularity precondition of [`inverse`].
pub const SINGULAR_FLOOR: f64 = 1e-14;

/// Square real matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    L1,
    L2,
    LInf,
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(NormKind::L1),
            "l2" => Ok(NormKind::L2),
            "linf" | "l_inf" | "inf" => Ok(NormKind::LInf),
            other => Err(Error::Config(format!("unknown norm `{other}`"))),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::L1 => "l1",
            NormKind::L2 => "l2",
            NormKind::LInf => "linf",
        })
    }
}

/// Vectorized norm of a flat slice.
pub fn vec_norm(v: &[f64], kind: NormKind) -> f64 {
    match kind {
        NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
        NormKind::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormKind::LInf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

impl Matrix {
    /// Builds an `n×n` matrix from row-major entries.
    pub fn from_flat(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be >= 1".into()));
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Matrix { n, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("rows must form a square matrix".into()));
        }
        Self::from_flat(n, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be >= 1");
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// Adds `s` to every entry.
    pub fn add_scalar(&self, s: f64) -> Self {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|x| x + s).collect(),
        }
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        vec_norm(&self.data, kind)
    }

    /// Copy with row `skip_row` and column `skip_col` removed. Requires `n >= 2`.
    pub fn minor(&self, skip_row: usize, skip_col: usize) -> Self {
        let n = self.n;
        let mut data = Vec::with_capacity((n - 1) * (n - 1));
        for i in (0..n).filter(|&i| i != skip_row) {
            for j in (0..n).filter(|&j| j != skip_col) {
                data.push(self[(i, j)]);
            }
        }
        Matrix { n: n - 1, data }
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Text form: `n` on the first line, then `n` rows of space-separated
    /// values at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for row in self.data.chunks(self.n) {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::schema("matrix", "empty input"))?
            .parse()
            .map_err(|_| Error::schema("matrix.n", "not an integer"))?;
        let mut data = Vec::with_capacity(n * n);
        for (r, line) in lines.enumerate() {
            for tok in line.split_whitespace() {
                data.push(
                    tok.parse::<f64>()
                        .map_err(|_| Error::schema(format!("matrix.rows[{r}]"), format!("bad value `{tok}`")))?,
                );
            }
        }
        Self::from_flat(n, data).map_err(|e| Error::schema("matrix", e.to_string()))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = self.data.chunks(self.n).collect();
        f.debug_struct("Matrix")
            .field("n", &self.n)
            .field("rows", &rows)
            .finish()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        Matrix::from_rows(&refs)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.data.chunks(m.n).map(<[f64]>::to_vec).collect()
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.n, rhs.n);
        Matrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.n, rhs.n);
        Matrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

/// Determinant: Leibniz expansion for `n <= 4`, LU with partial pivoting above.
pub fn det(m: &Matrix) -> f64 {
    if m.n <= LEIBNIZ_MAX {
        det_leibniz(m)
    } else {
        det_lu(m)
    }
}

/// Sum over all permutations of the signed products. Exponential; small `n` only.
pub fn det_leibniz(m: &Matrix) -> f64 {
    let n = m.n;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    // Heap's algorithm; each swap flips the sign.
    let mut c = vec![0usize; n];
    let mut sign = 1.0;
    total += sign * perm_product(m, &perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            total += sign * perm_product(m, &perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    total
}

fn perm_product(m: &Matrix, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| m[(i, j)]).product()
}

/// LU factorization with partial pivoting, `P·A = L·U` packed in one buffer.
struct Lu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    fn new(m: &Matrix) -> Self {
        let n = m.n;
        let mut lu = m.data.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&a, &b| lu[a * n + k].abs().total_cmp(&lu[b * n + k].abs()))
                .unwrap();
            if lu[p * n + k] == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Lu {
            n,
            lu,
            piv,
            sign,
            singular,
        }
    }

    fn det(&self) -> f64 {
        if self.singular {
            return 0.0;
        }
        (0..self.n).map(|i| self.lu[i * self.n + i]).product::<f64>() * self.sign
    }

    /// Solves `A x = e_col` in place into `x`.
    fn solve_unit(&self, col: usize, x: &mut [f64]) {
        let n = self.n;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = if self.piv[i] == col { 1.0 } else { 0.0 };
        }
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
    }
}

pub fn det_lu(m: &Matrix) -> f64 {
    Lu::new(m).det()
}

/// Adjugate: entry `(i, j)` is `(-1)^(i+j)` times the determinant of `m` with
/// row `j` and column `i` removed.
pub fn adjugate(m: &Matrix) -> Result<Matrix> {
    let n = m.n;
    if n < 2 {
        return Err(Error::InvalidArgument("adjugate requires n >= 2".into()));
    }
    let mut adj = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[(i, j)] = sign * det(&m.minor(j, i));
        }
    }
    Ok(adj)
}

fn singular_floor(m: &Matrix) -> f64 {
    SINGULAR_FLOOR * m.norm(NormKind::LInf).powi(m.n as i32).max(1.0)
}

fn check_nonsingular(m: &Matrix, d: f64) -> Result<()> {
    let floor = singular_floor(m);
    if d.abs() > floor {
        Ok(())
    } else {
        Err(Error::NearSingular { det: d, floor })
    }
}

/// Inverse: `Adj(m)/det(m)` for `n <= 4`, LU solves above.
pub fn inverse(m: &Matrix) -> Result<Matrix> {
    if m.n <= LEIBNIZ_MAX {
        inverse_adjugate(m)
    } else {
        inverse_lu(m)
    }
}

pub fn inverse_adjugate(m: &Matrix) -> Result<Matrix> {
    let d = det_leibniz(m);
    check_nonsingular(m, d)?;
    if m.n == 1 {
        return Matrix::from_flat(1, vec![1.0 / d]);
    }
    Ok(adjugate(m)?.scale(1.0 / d))
}

pub fn inverse_lu(m: &Matrix) -> Result<Matrix> {
    let lu = Lu::new(m);
    let d = lu.det();
    check_nonsingular(m, d)?;
    let n = m.n;
    let mut inv = Matrix::zeros(n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        lu.solve_unit(j, &mut col);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

/// `‖m·inv − I‖_LInf`.
pub fn inverse_residual(m: &Matrix, inv: &Matrix) -> f64 {
    (&(m * inv) - &Matrix::identity(m.n)).norm(NormKind::LInf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn det_examples() {
        assert_eq!(det(&Matrix::identity(2)), 1.0);
        assert_eq!(det(&m(&[&[2., 2.], &[2., 3.]])), 2.0);
        assert_relative_eq!(
            det(&m(&[&[1., 1., 1.], &[1., 2., 3.], &[1., 2., 4.]])),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn leibniz_sign_convention() {
        // odd permutation of the identity
        let p = m(&[&[0., 1., 0.], &[1., 0., 0.], &[0., 0., 1.]]);
        assert_eq!(det_leibniz(&p), -1.0);
        assert_eq!(det_lu(&p), -1.0);
    }

    #[test]
    fn adjugate_examples() {
        assert_eq!(adjugate(&Matrix::identity(2)).unwrap(), Matrix::identity(2));
        assert_eq!(
            adjugate(&m(&[&[1., 1.], &[1., 1.]])).unwrap(),
            m(&[&[1., -1.], &[-1., 1.]])
        );
        assert!(matches!(adjugate(&Matrix::identity(1)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn inverse_examples() {
        let inv = inverse(&m(&[&[2., 2.], &[2., 3.]])).unwrap();
        assert_eq!(inv, m(&[&[1.5, -1.], &[-1., 1.]]));
        assert_eq!(inverse(&Matrix::identity(3)).unwrap(), Matrix::identity(3));
        assert!(matches!(
            inverse(&m(&[&[1., 1.], &[1., 1.]])),
            Err(Error::NearSingular { .. })
        ));
        assert_eq!(inverse(&Matrix::identity(1)).unwrap(), Matrix::identity(1));
    }

    #[test]
    fn norm_examples() {
        let a = m(&[&[1., -2.], &[3., -4.]]);
        assert_relative_eq!(Matrix::identity(2).norm(NormKind::L2), 2f64.sqrt());
        assert_eq!(a.norm(NormKind::L1), 10.0);
        assert_eq!(a.norm(NormKind::LInf), 4.0);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let a = m(&[&[0.1, 1.0 / 3.0], &[-2e-300, 12345.678901234567]]);
        assert_eq!(Matrix::from_text(&a.to_text()).unwrap(), a);
        assert!(matches!(Matrix::from_text("2\n1 2\n3"), Err(Error::Schema { .. })));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Matrix::from_flat(2, vec![1.0; 3]).is_err());
        assert!(Matrix::from_flat(0, vec![]).is_err());
        assert!(Matrix::from_flat(1, vec![f64::NAN]).is_err());
    }
}

//! Polynomial Lipschitz bounds.
//!
//! A bound certifies
//!
//! ```text
//! ‖f(x) − f(y)‖ ≤ Σᵢ fᵢ(‖x‖, ‖y‖)·‖x − y‖ⁱ
//! ```
//!
//! with every `fᵢ` a bivariate polynomial with nonnegative coefficients, so
//! each term is monotone in its arguments and bounds can be substituted into
//! each other. All norms are the vectorized L2 norm unless stated otherwise.

mod blocks;
mod falsify;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::NormKind;

pub use blocks::{bound_for_block, chain_bound, Block, Chain};
pub use falsify::{check_bound_numeric, falsification_suite, suite_csv, SuiteRow, SUITE_RANGES};

/// Univariate polynomial, coefficient `k` on `tᵏ`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly(pub Vec<f64>);

impl UniPoly {
    pub fn constant(c: f64) -> Self {
        UniPoly(vec![c])
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.0.is_empty() || other.0.is_empty() {
            return UniPoly(vec![]);
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly(out)
    }

    pub fn pow(&self, k: u32) -> UniPoly {
        (0..k).fold(UniPoly::constant(1.0), |acc, _| acc.mul(self))
    }

    /// `self(inner(t))`
    pub fn compose(&self, inner: &UniPoly) -> UniPoly {
        let mut out = UniPoly(vec![]);
        for (k, c) in self.0.iter().enumerate() {
            out = out.add(&inner.pow(k as u32).scale(*c));
        }
        out
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let mut out = vec![0.0; self.0.len().max(other.0.len())];
        for (i, c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.0.iter().enumerate() {
            out[i] += c;
        }
        UniPoly(out)
    }

    pub fn scale(&self, s: f64) -> UniPoly {
        UniPoly(self.0.iter().map(|c| c * s).collect())
    }
}

/// Bivariate polynomial in `(‖x‖, ‖y‖)`: exponent pair to coefficient.
pub type BiPoly = BTreeMap<(u32, u32), f64>;

fn bi_add_into(acc: &mut BiPoly, p: &BiPoly, s: f64) {
    for (&e, &c) in p {
        if c != 0.0 {
            *acc.entry(e).or_insert(0.0) += s * c;
        }
    }
}

fn bi_mul(a: &BiPoly, b: &BiPoly) -> BiPoly {
    let mut out = BiPoly::new();
    for (&(p1, q1), &c1) in a {
        for (&(p2, q2), &c2) in b {
            *out.entry((p1 + p2, q1 + q2)).or_insert(0.0) += c1 * c2;
        }
    }
    out
}

fn bi_eval(p: &BiPoly, nx: f64, ny: f64) -> f64 {
    p.iter()
        .map(|(&(a, b), &c)| c * nx.powi(a as i32) * ny.powi(b as i32))
        .sum()
}

/// `u(‖x‖)` or `u(‖y‖)` as a bivariate polynomial.
fn bi_from_uni(u: &UniPoly, in_x: bool) -> BiPoly {
    u.0.iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(k, &c)| (if in_x { (k as u32, 0) } else { (0, k as u32) }, c))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyLipBound {
    /// `terms[i]` multiplies `‖x − y‖ⁱ`.
    pub terms: Vec<BiPoly>,
    pub in_norm: NormKind,
    pub out_norm: NormKind,
}

impl PolyLipBound {
    /// Validated bound; the degree is `terms.len() − 1`.
    pub fn new(terms: Vec<BiPoly>, in_norm: NormKind, out_norm: NormKind) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("a bound needs at least one term".into()));
        }
        if terms
            .iter()
            .flat_map(|t| t.values())
            .any(|c| !(c.is_finite() && *c >= 0.0))
        {
            return Err(Error::InvalidArgument(
                "bound coefficients must be finite and >= 0".into(),
            ));
        }
        Ok(PolyLipBound {
            terms,
            in_norm,
            out_norm,
        })
    }

    /// `K·‖x − y‖` in L2.
    pub fn lipschitz(k: f64) -> Self {
        let mut t1 = BiPoly::new();
        t1.insert((0, 0), k);
        Self::new(vec![BiPoly::new(), t1], NormKind::L2, NormKind::L2).expect("K >= 0")
    }

    pub fn degree(&self) -> usize {
        self.terms.len() - 1
    }

    /// Degree-1 constant, if the bound is a plain Lipschitz constant.
    pub fn as_constant(&self) -> Option<f64> {
        let t0_zero = self.terms[0].values().all(|&c| c == 0.0);
        match self.terms.as_slice() {
            [_, t1] if t0_zero && t1.keys().all(|&e| e == (0, 0)) => Some(t1.get(&(0, 0)).copied().unwrap_or(0.0)),
            _ => None,
        }
    }
}

/// `Σᵢ fᵢ(nx, ny)·dⁱ`
pub fn eval_bound(b: &PolyLipBound, nx: f64, ny: f64, d: f64) -> f64 {
    b.terms
        .iter()
        .enumerate()
        .map(|(i, p)| bi_eval(p, nx, ny) * d.powi(i as i32))
        .sum()
}

/// Bound for `f ∘ g`. `g_value_bound(‖x‖)` must dominate `‖g(x)‖`. The norm
/// arguments of `f` are replaced by `g_value_bound` and its distance argument
/// by `g`'s bound, then everything is expanded. The result has degree
/// `n_f·n_g`.
pub fn compose(f: &PolyLipBound, g: &PolyLipBound, g_value_bound: &UniPoly) -> Result<PolyLipBound> {
    if g.out_norm != f.in_norm {
        return Err(Error::NormMismatch);
    }
    if g_value_bound.0.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::InvalidArgument(
            "value bound coefficients must be finite and >= 0".into(),
        ));
    }
    let deg = f.degree() * g.degree();
    let mut out = vec![BiPoly::new(); deg + 1];
    let gx_pows: Vec<BiPoly> = (0..=max_exponent(f, true))
        .map(|k| bi_from_uni(&g_value_bound.pow(k), true))
        .collect();
    let gy_pows: Vec<BiPoly> = (0..=max_exponent(f, false))
        .map(|k| bi_from_uni(&g_value_bound.pow(k), false))
        .collect();
    // powers of G(d) = Σⱼ gⱼ·dʲ, as polynomials in d with BiPoly coefficients
    let mut g_pow: Vec<BiPoly> = vec![[((0, 0), 1.0)].into_iter().collect()];
    for (i, fi) in f.terms.iter().enumerate() {
        if i > 0 {
            g_pow = poly_d_mul(&g_pow, &g.terms);
        }
        if fi.is_empty() {
            continue;
        }
        let mut fi_sub = BiPoly::new();
        for (&(a, b), &c) in fi {
            bi_add_into(&mut fi_sub, &bi_mul(&gx_pows[a as usize], &gy_pows[b as usize]), c);
        }
        for (j, coeff) in g_pow.iter().enumerate() {
            bi_add_into(&mut out[j], &bi_mul(&fi_sub, coeff), 1.0);
        }
    }
    PolyLipBound::new(out, g.in_norm, f.out_norm)
}

fn max_exponent(f: &PolyLipBound, x: bool) -> u32 {
    f.terms
        .iter()
        .flat_map(|t| t.keys())
        .map(|&(a, b)| if x { a } else { b })
        .max()
        .unwrap_or(0)
}

fn poly_d_mul(a: &[BiPoly], b: &[BiPoly]) -> Vec<BiPoly> {
    let mut out = vec![BiPoly::new(); a.len() + b.len() - 1];
    for (i, pa) in a.iter().enumerate() {
        for (j, pb) in b.iter().enumerate() {
            let prod = bi_mul(pa, pb);
            bi_add_into(&mut out[i + j], &prod, 1.0);
        }
    }
    out
}

/// Bound for `x ↦ (f(x), g(x))`: the coefficientwise sum.
pub fn concat(f: &PolyLipBound, g: &PolyLipBound) -> Result<PolyLipBound> {
    if f.in_norm != g.in_norm || f.out_norm != g.out_norm {
        return Err(Error::NormMismatch);
    }
    let mut terms = vec![BiPoly::new(); f.terms.len().max(g.terms.len())];
    for (i, t) in f.terms.iter().enumerate() {
        bi_add_into(&mut terms[i], t, 1.0);
    }
    for (i, t) in g.terms.iter().enumerate() {
        bi_add_into(&mut terms[i], t, 1.0);
    }
    PolyLipBound::new(terms, f.in_norm, f.out_norm)
}

/// Bound for a map whose Jacobian entries are all at most `p(‖z‖)`. By the
/// mean value theorem along the segment, with `‖z‖ ≤ ‖y‖ + ‖x − y‖` and
/// `‖J‖₂ ≤ sqrt(in·out)·max|Jᵢⱼ|`:
/// `‖f(x) − f(y)‖ ≤ sqrt(in·out)·p(‖y‖ + d)·d`.
pub fn from_jacobian_poly(p: &UniPoly, in_dim: usize, out_dim: usize) -> Result<PolyLipBound> {
    if p.0.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::InvalidArgument(
            "Jacobian polynomial coefficients must be >= 0".into(),
        ));
    }
    let agg = ((in_dim * out_dim) as f64).sqrt();
    let mut terms = vec![BiPoly::new(); p.0.len() + 1];
    for (k, &c) in p.0.iter().enumerate() {
        // (ny + d)^k = Σₘ C(k,m)·ny^{k−m}·dᵐ
        let mut binom = 1.0;
        for m in 0..=k {
            if m > 0 {
                binom = binom * (k - m + 1) as f64 / m as f64;
            }
            let v = agg * c * binom;
            if v != 0.0 {
                *terms[m + 1].entry((0, (k - m) as u32)).or_insert(0.0) += v;
            }
        }
    }
    PolyLipBound::new(terms, NormKind::L2, NormKind::L2)
}

/// `‖g(x)‖ ≤ ‖g(0)‖ + Σᵢ gᵢ(‖x‖, 0)·‖x‖ⁱ`, from the bound at the pair `(x, 0)`.
pub fn value_bound_from(g: &PolyLipBound, g_at_zero: f64) -> UniPoly {
    let mut out = UniPoly::constant(g_at_zero);
    for (i, t) in g.terms.iter().enumerate() {
        for (&(a, b), &c) in t {
            if b == 0 {
                let mut mono = vec![0.0; a as usize + i + 1];
                mono[a as usize + i] = c;
                out = out.add(&UniPoly(mono));
            }
        }
    }
    out
}

impl fmt::Display for PolyLipBound {
    /// `[c·‖x‖^a‖y‖^b + …]·d^i + …`, zero terms omitted, exponents ascending.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, t) in self.terms.iter().enumerate() {
            let monos: Vec<String> = t
                .iter()
                .filter(|(_, &c)| c != 0.0)
                .map(|(&(a, b), &c)| format!("{c}·‖x‖^{a}‖y‖^{b}"))
                .collect();
            if !monos.is_empty() {
                parts.push(format!("[{}]·d^{i}", monos.join(" + ")));
            }
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> PolyLipBound {
        let mut t1 = BiPoly::new();
        t1.insert((1, 0), 1.0);
        t1.insert((0, 1), 1.0);
        PolyLipBound::new(vec![BiPoly::new(), t1], NormKind::L2, NormKind::L2).unwrap()
    }

    #[test]
    fn evaluation() {
        assert_eq!(eval_bound(&PolyLipBound::lipschitz(3.0), 5.0, 7.0, 0.5), 1.5);
        assert_eq!(eval_bound(&square(), 2.0, 3.0, 0.5), 2.5);
        let zero = PolyLipBound::new(vec![BiPoly::new(); 3], NormKind::L2, NormKind::L2).unwrap();
        assert_eq!(eval_bound(&zero, 1.0, 2.0, 3.0), 0.0);
    }

    #[test]
    fn constants_multiply_and_add() {
        let k = compose(
            &PolyLipBound::lipschitz(2.0),
            &PolyLipBound::lipschitz(3.0),
            &UniPoly(vec![0.0, 3.0]),
        )
        .unwrap();
        assert_eq!(k.as_constant(), Some(6.0));
        let c = concat(&PolyLipBound::lipschitz(2.0), &PolyLipBound::lipschitz(3.0)).unwrap();
        assert_eq!(c.as_constant(), Some(5.0));
        let z = PolyLipBound::new(vec![BiPoly::new()], NormKind::L2, NormKind::L2).unwrap();
        assert_eq!(concat(&square(), &z).unwrap(), square());
    }

    #[test]
    fn compose_degree_is_product() {
        let s2 = compose(&square(), &square(), &UniPoly(vec![0.0, 0.0, 1.0])).unwrap();
        assert_eq!(s2.degree(), 1);
        let mut t2 = BiPoly::new();
        t2.insert((0, 0), 1.0);
        let quad = PolyLipBound::new(vec![BiPoly::new(), BiPoly::new(), t2], NormKind::L2, NormKind::L2).unwrap();
        let q = compose(&quad, &quad, &UniPoly(vec![1.0])).unwrap();
        assert_eq!(q.degree(), 4);
        let cubic = PolyLipBound::new(vec![BiPoly::new(); 4], NormKind::L2, NormKind::L2).unwrap();
        assert_eq!(compose(&cubic, &quad, &UniPoly(vec![1.0])).unwrap().degree(), 6);
    }

    #[test]
    fn norm_mismatch() {
        let mut l1 = PolyLipBound::lipschitz(1.0);
        l1.out_norm = NormKind::L1;
        assert!(matches!(
            compose(&square(), &l1, &UniPoly(vec![0.0, 1.0])),
            Err(Error::NormMismatch)
        ));
        assert!(matches!(concat(&square(), &l1), Err(Error::NormMismatch)));
    }

    #[test]
    fn jacobian_bounds() {
        assert_eq!(
            from_jacobian_poly(&UniPoly::constant(4.0), 1, 1).unwrap().as_constant(),
            Some(4.0)
        );
        let one = from_jacobian_poly(&UniPoly(vec![1.0, 2.0]), 3, 2).unwrap();
        let two = from_jacobian_poly(&UniPoly(vec![1.0, 2.0]), 3, 4).unwrap();
        let r = eval_bound(&two, 1.0, 2.0, 0.3) / eval_bound(&one, 1.0, 2.0, 0.3);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pretty_print() {
        assert_eq!(square().to_string(), "[1·‖x‖^0‖y‖^1 + 1·‖x‖^1‖y‖^0]·d^1");
        assert_eq!(PolyLipBound::lipschitz(2.5).to_string(), "[2.5·‖x‖^0‖y‖^0]·d^1");
    }
}

use super::{compose, value_bound_from, BiPoly, PolyLipBound};
use crate::error::Result;
use crate::linalg::NormKind;
use crate::mlp::{relu_in_place, Layer};

const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITERS: usize = 10_000;
/// Relative slack added to the power-iteration estimate, which approaches
/// the spectral norm from below.
const POWER_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    FullyConnected(Layer),
    Relu,
    Sigmoid,
    Tanh,
    /// `xᵢ ↦ xᵢⁿ`, `n ≥ 1`.
    ElementwisePower(u32),
    /// `x ↦ x + inner(x)`.
    Residual(Chain),
}

/// Blocks applied left to right to inputs of dimension `in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub in_dim: usize,
    pub blocks: Vec<Block>,
}

impl Block {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Block::FullyConnected(l) => {
                let mut out = vec![0.0; l.out_dim];
                l.affine_into(x, &mut out);
                out
            }
            Block::Relu => {
                let mut v = x.to_vec();
                relu_in_place(&mut v);
                v
            }
            Block::Sigmoid => x.iter().map(|t| 1.0 / (1.0 + (-t).exp())).collect(),
            Block::Tanh => x.iter().map(|t| t.tanh()).collect(),
            Block::ElementwisePower(n) => x.iter().map(|t| t.powi(*n as i32)).collect(),
            Block::Residual(inner) => inner.apply(x).iter().zip(x).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Chain {
    pub fn new(in_dim: usize, blocks: Vec<Block>) -> Self {
        Chain { in_dim, blocks }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.blocks.iter().fold(x.to_vec(), |v, b| b.apply(&v))
    }
}

/// Largest singular value of `W` by power iteration on `WᵀW`.
fn spectral_norm(l: &Layer) -> f64 {
    let mut v = vec![1.0 / (l.in_dim as f64).sqrt(); l.in_dim];
    let mut est = 0.0;
    let mut wv = vec![0.0; l.out_dim];
    for _ in 0..POWER_MAX_ITERS {
        for (r, o) in wv.iter_mut().enumerate() {
            *o = l.row(r).iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let mut next = vec![0.0; l.in_dim];
        for (r, &s) in wv.iter().enumerate() {
            for (n, w) in next.iter_mut().zip(l.row(r)) {
                *n += w * s;
            }
        }
        let len = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len == 0.0 {
            return 0.0;
        }
        let new_est = len.sqrt();
        next.iter_mut().for_each(|x| *x /= len);
        v = next;
        if (new_est - est).abs() <= POWER_TOL * new_est {
            return new_est;
        }
        est = new_est;
    }
    est
}

fn frobenius(l: &Layer) -> f64 {
    l.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
}

fn power_bound(n: u32) -> BiPoly {
    (0..n).map(|i| ((i, n - 1 - i), 1.0)).collect()
}

/// Bound for one block. Residual blocks add the identity's `1·d` to the
/// bound of their inner chain.
pub fn bound_for_block(block: &Block) -> Result<PolyLipBound> {
    match block {
        Block::FullyConnected(l) => {
            let k = (spectral_norm(l) * (1.0 + POWER_SLACK)).min(frobenius(l));
            Ok(PolyLipBound::lipschitz(k))
        }
        Block::Relu | Block::Sigmoid | Block::Tanh => Ok(PolyLipBound::lipschitz(1.0)),
        Block::ElementwisePower(n) => {
            let n = (*n).max(1);
            PolyLipBound::new(vec![BiPoly::new(), power_bound(n)], NormKind::L2, NormKind::L2)
        }
        Block::Residual(inner) => super::concat(&chain_bound(inner)?, &PolyLipBound::lipschitz(1.0)),
    }
}

/// Bound for a whole chain by repeated composition. Each prefix's value
/// bound comes from its own Lipschitz bound and its value at the origin.
pub fn chain_bound(chain: &Chain) -> Result<PolyLipBound> {
    let mut acc = PolyLipBound::lipschitz(1.0);
    let mut at_zero = vec![0.0; chain.in_dim];
    for block in &chain.blocks {
        let value = value_bound_from(&acc, at_zero.iter().map(|x| x * x).sum::<f64>().sqrt());
        acc = compose(&bound_for_block(block)?, &acc, &value)?;
        at_zero = block.apply(&at_zero);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_library() {
        assert_eq!(bound_for_block(&Block::Relu).unwrap().as_constant(), Some(1.0));
        let sq = bound_for_block(&Block::ElementwisePower(2)).unwrap();
        assert_eq!(sq.to_string(), "[1·‖x‖^0‖y‖^1 + 1·‖x‖^1‖y‖^0]·d^1");
        let l = Layer {
            in_dim: 2,
            out_dim: 2,
            weights: vec![3.0, 0.0, 0.0, -2.0],
            bias: vec![0.0, 0.0],
        };
        let k = bound_for_block(&Block::FullyConnected(l.clone()))
            .unwrap()
            .as_constant()
            .unwrap();
        assert!(k >= 3.0 && k <= 3.0 * (1.0 + 1e-5));
        let res = bound_for_block(&Block::Residual(Chain::new(2, vec![Block::FullyConnected(l)]))).unwrap();
        assert!((res.as_constant().unwrap() - k - 1.0).abs() < 1e-12);
    }
}

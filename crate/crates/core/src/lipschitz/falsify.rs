use rand::Rng;

use super::{
    bound_for_block, chain_bound, compose, concat, eval_bound, from_jacobian_poly, Block, Chain, PolyLipBound, UniPoly,
};
use crate::error::Result;
use crate::exec::{map_chunks, stream_rng};
use crate::linalg::vec_norm;
use crate::mlp::Layer;

pub const SUITE_RANGES: [f64; 3] = [1.0, 10.0, 100.0];
const REL_SLACK: f64 = 1e-9;

/// Number of pairs `(x, y)` uniform in `[−range, range]^dim` for which
/// `‖f(x) − f(y)‖` exceeds the bound by more than a relative `1e-9`.
pub fn check_bound_numeric<F>(f: F, dim: usize, bound: &PolyLipBound, n_pairs: usize, range: f64, seed: u64) -> usize
where
    F: Fn(&[f64]) -> Vec<f64> + Sync + Send,
{
    map_chunks(n_pairs, |chunk, r| {
        let mut rng = stream_rng(seed, chunk);
        let mut bad = 0;
        for _ in r {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-range..=range)).collect();
            let y: Vec<f64> = (0..dim).map(|_| rng.random_range(-range..=range)).collect();
            let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let (fx, fy) = (f(&x), f(&y));
            let out: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a - b).collect();
            let actual = vec_norm(&out, bound.out_norm);
            let allowed = eval_bound(
                bound,
                vec_norm(&x, bound.in_norm),
                vec_norm(&y, bound.in_norm),
                vec_norm(&diff, bound.in_norm),
            );
            if actual > allowed * (1.0 + REL_SLACK) {
                bad += 1;
            }
        }
        bad
    })
    .into_iter()
    .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub name: String,
    pub degree: usize,
    pub range: f64,
    pub pairs: usize,
    pub violations: usize,
}

fn seeded_layer(in_dim: usize, out_dim: usize, seed: u64) -> Layer {
    Layer::uniform(in_dim, out_dim, &mut stream_rng(seed, 0))
}

type Case = (
    String,
    usize,
    PolyLipBound,
    Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + Send>,
);

/// Every block bound, a model chain, a residual, a composition, a
/// concatenation and a Jacobian-derived bound, each checked at every range
/// in [`SUITE_RANGES`].
pub fn falsification_suite(n_pairs: usize, seed: u64) -> Result<Vec<SuiteRow>> {
    let fc = seeded_layer(4, 3, seed);
    let model = Chain::new(
        4,
        vec![
            Block::FullyConnected(seeded_layer(4, 8, seed + 1)),
            Block::Relu,
            Block::FullyConnected(seeded_layer(8, 4, seed + 2)),
        ],
    );
    let residual = Block::Residual(Chain::new(
        3,
        vec![Block::FullyConnected(seeded_layer(3, 3, seed + 3)), Block::Tanh],
    ));
    let sq = bound_for_block(&Block::ElementwisePower(2))?;
    let mut cases: Vec<Case> = Vec::new();
    let block = |b: Block, dim: usize| -> Result<Case> {
        let bound = bound_for_block(&b)?;
        let name = format!("block:{}", block_name(&b));
        Ok((name, dim, bound, Box::new(move |x: &[f64]| b.apply(x))))
    };
    cases.push(block(Block::FullyConnected(fc.clone()), 4)?);
    cases.push(block(Block::Relu, 3)?);
    cases.push(block(Block::Sigmoid, 3)?);
    cases.push(block(Block::Tanh, 3)?);
    cases.push(block(Block::ElementwisePower(2), 3)?);
    cases.push(block(Block::ElementwisePower(3), 2)?);
    cases.push(block(residual, 3)?);
    {
        let bound = chain_bound(&model)?;
        let m = model.clone();
        cases.push((
            "chain:fc-relu-fc".into(),
            4,
            bound,
            Box::new(move |x: &[f64]| m.apply(x)),
        ));
    }
    cases.push((
        "compose:square-square".into(),
        1,
        compose(&sq, &sq, &UniPoly(vec![0.0, 0.0, 1.0]))?,
        Box::new(|x: &[f64]| vec![x[0].powi(4)]),
    ));
    {
        let f = fc.clone();
        let bound = concat(&bound_for_block(&Block::FullyConnected(fc.clone()))?, &sq)?;
        cases.push((
            "concat:fc-square".into(),
            4,
            bound,
            Box::new(move |x: &[f64]| {
                let mut out = Block::FullyConnected(f.clone()).apply(x);
                out.extend(x.iter().map(|t| t * t));
                out
            }),
        ));
    }
    cases.push((
        "jacobian:square".into(),
        1,
        from_jacobian_poly(&UniPoly(vec![0.0, 2.0]), 1, 1)?,
        Box::new(|x: &[f64]| vec![x[0] * x[0]]),
    ));
    cases.push((
        "jacobian:sin-pair".into(),
        2,
        from_jacobian_poly(&UniPoly::constant(1.0), 2, 2)?,
        Box::new(|x: &[f64]| vec![x[0].sin(), x[1].cos()]),
    ));

    let mut rows = Vec::new();
    for (ci, (name, dim, bound, f)) in cases.iter().enumerate() {
        for (ri, &range) in SUITE_RANGES.iter().enumerate() {
            let s = seed.wrapping_add(1000 * ci as u64 + ri as u64);
            rows.push(SuiteRow {
                name: name.clone(),
                degree: bound.degree(),
                range,
                pairs: n_pairs,
                violations: check_bound_numeric(f, *dim, bound, n_pairs, range, s),
            });
        }
    }
    Ok(rows)
}

fn block_name(b: &Block) -> String {
    match b {
        Block::FullyConnected(l) => format!("fc{}x{}", l.out_dim, l.in_dim),
        Block::Relu => "relu".into(),
        Block::Sigmoid => "sigmoid".into(),
        Block::Tanh => "tanh".into(),
        Block::ElementwisePower(n) => format!("power{n}"),
        Block::Residual(_) => "residual".into(),
    }
}

pub fn suite_csv(rows: &[SuiteRow]) -> String {
    let mut out = String::from("case,degree,range,pairs,violations\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.name, r.degree, r.range, r.pairs, r.violations
        ));
    }
    out
}

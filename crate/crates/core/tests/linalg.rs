use invlab::exec::stream_rng;
use invlab::linalg::*;
use invlab::Error;
use proptest::prelude::*;

fn m(rows: &[&[f64]]) -> Matrix {
    Matrix::from_rows(rows).unwrap()
}

fn cond(a: &Matrix) -> f64 {
    let s = singular_values(a);
    s[0] / s[s.len() - 1]
}

#[test]
fn determinant_examples() {
    assert_eq!(det(&Matrix::identity(2)), 1.0);
    assert_eq!(det(&m(&[&[2., 2.], &[2., 3.]])), 2.0);
    assert!((det(&m(&[&[1., 1., 1.], &[1., 2., 3.], &[1., 2., 4.]])) - 1.0).abs() < 1e-14);
    // cofactor expansion along the first row
    let a = m(&[&[3., -1., 2.], &[0., 4., 1.], &[5., 2., -2.]]);
    let cof = 3.0 * (4.0 * -2.0 - 1.0 * 2.0) - (-1.0) * (0.0 * -2.0 - 1.0 * 5.0) + 2.0 * (0.0 * 2.0 - 4.0 * 5.0);
    assert!((det(&a) - cof).abs() < 1e-12);
}

#[test]
fn adjugate_examples() {
    assert_eq!(adjugate(&Matrix::identity(2)).unwrap(), Matrix::identity(2));
    assert_eq!(
        adjugate(&m(&[&[1., 1.], &[1., 1.]])).unwrap(),
        m(&[&[1., -1.], &[-1., 1.]])
    );
    assert!(matches!(adjugate(&Matrix::identity(1)), Err(Error::InvalidArgument(_))));
    let mut rng = stream_rng(3, 0);
    for n in 2..=6 {
        let a = random_uniform(n, -1.0, 1.0, &mut rng);
        let adj = adjugate(&a).unwrap();
        let lu = inverse_lu(&a).unwrap().scale(det(&a));
        assert!(adj.max_abs_diff(&lu) <= 1e-10 * adj.norm(NormKind::LInf).max(1.0));
    }
}

#[test]
fn inverse_examples() {
    let inv = inverse(&m(&[&[2., 2.], &[2., 3.]])).unwrap();
    assert!(inv.max_abs_diff(&m(&[&[1.5, -1.], &[-1., 1.]])) < 1e-15);
    assert_eq!(inverse(&Matrix::identity(5)).unwrap(), Matrix::identity(5));
    assert!(matches!(
        inverse(&m(&[&[1., 1.], &[1., 1.]])),
        Err(Error::NearSingular { .. })
    ));
    let mut rng = stream_rng(8, 0);
    let a = loop {
        let a = random_uniform(8, -1.0, 1.0, &mut rng);
        if cond(&a) < 1e3 {
            break a;
        }
    };
    assert!(inverse_residual(&a, &inverse(&a).unwrap()) <= 1e-9);
}

#[test]
fn norm_examples() {
    assert!((Matrix::identity(2).norm(NormKind::L2) - 2f64.sqrt()).abs() < 1e-15);
    let a = m(&[&[1., -2.], &[3., -4.]]);
    assert_eq!(a.norm(NormKind::L1), 10.0);
    assert_eq!(a.norm(NormKind::LInf), 4.0);
}

#[test]
fn rank_deficient_examples() {
    let a = random_rank_deficient(2, 1, 7).unwrap();
    assert!(det(&a).abs() < 1e-14);
    assert!(a.norm(NormKind::LInf) > 0.0);
    let b = random_rank_deficient(3, 2, 7).unwrap();
    assert!(adjugate(&b).unwrap().norm(NormKind::LInf) > 1e-8);
    assert_eq!(numerical_rank(&b, 1e-10), 2);
    assert_eq!(random_rank_deficient(3, 2, 7).unwrap(), b);
    assert!(random_rank_deficient(3, 3, 7).is_err());
}

#[test]
fn nearest_singular_examples() {
    assert!((nearest_singular_distance(&Matrix::identity(4)) - 1.0).abs() < 1e-12);
    assert!(nearest_singular_distance(&m(&[&[1., 1.], &[1., 1.]])) < 1e-12);
    // smallest eigenvalue of AᵀA = [[8,10],[10,13]]
    let (tr, d) = (21.0f64, 8.0 * 13.0 - 100.0);
    let lam = (tr - (tr * tr - 4.0 * d).sqrt()) / 2.0;
    let got = nearest_singular_distance(&m(&[&[2., 2.], &[2., 3.]]));
    assert!((got - lam.sqrt()).abs() < 1e-12, "{got}");
}

#[test]
fn text_round_trip() {
    let mut rng = stream_rng(1, 0);
    let a = random_uniform(3, -1e3, 1e3, &mut rng);
    let text = a.to_text();
    assert!(text.starts_with("3\n"));
    assert_eq!(Matrix::from_text(&text).unwrap(), a);
    assert!(Matrix::from_text("2\n1 2\n3\n").is_err());
}

fn well_conditioned(n: usize, seed: u64) -> Matrix {
    let mut rng = stream_rng(seed, 0);
    loop {
        let a = random_uniform(n, -1.0, 1.0, &mut rng);
        if cond(&a) <= 1e6 {
            return a;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn residual_is_small(n in 1usize..=8, seed in any::<u64>()) {
        let a = well_conditioned(n, seed);
        prop_assert!(inverse_residual(&a, &inverse(&a).unwrap()) <= 1e-9);
    }

    #[test]
    fn adjugate_times_matrix(n in 2usize..=6, seed in any::<u64>()) {
        let a = well_conditioned(n, seed);
        let lhs = &adjugate(&a).unwrap() * &a;
        let rhs = Matrix::identity(n).scale(det(&a));
        let scale = lhs.norm(NormKind::LInf).max(det(&a).abs()).max(1e-300);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn norm_equivalence(n in 1usize..=6, entries in proptest::collection::vec(-1e3f64..1e3, 36)) {
        let a = Matrix::from_flat(n, entries[..n * n].to_vec()).unwrap();
        let (l1, l2, li) = (a.norm(NormKind::L1), a.norm(NormKind::L2), a.norm(NormKind::LInf));
        let slack = 1e-12 * l1.max(1.0);
        prop_assert!(li <= l2 + slack && l2 <= l1 + slack && l1 <= n as f64 * l2 + slack);
    }

    #[test]
    fn leibniz_agrees_with_lu(n in 1usize..=4, seed in any::<u64>()) {
        let a = random_uniform(n, -1.0, 1.0, &mut stream_rng(seed, 0));
        let (x, y) = (det_leibniz(&a), det_lu(&a));
        prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }
}

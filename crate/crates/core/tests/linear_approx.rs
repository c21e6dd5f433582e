use invlab::exec::stream_rng;
use invlab::linalg::{inverse, random_uniform, Matrix, NormKind};
use invlab::linear_approx::*;
use invlab::mlp::Predictor;

fn base() -> Matrix {
    Matrix::from_rows(&[&[2., 2.], &[2., 3.]]).unwrap()
}

const CLOSED_FORM: [[f64; 4]; 4] = [
    [-2.25, 1.5, 1.5, -1.0],
    [1.5, -1.5, -1.0, 1.0],
    [1.5, -1.0, -1.5, 1.0],
    [-1.0, 1.0, 1.0, -1.0],
];

#[test]
fn coefficients_match_closed_table() {
    let lin = linearize_inverse(&base()).unwrap();
    for (m, row) in CLOSED_FORM.iter().enumerate() {
        for (got, want) in lin.row(m).iter().zip(row) {
            assert!((got - want).abs() <= 1e-12);
        }
    }
    assert!(lin.f0.max_abs_diff(&inverse(&base()).unwrap()) < 1e-15);
}

/// ∂/∂x of `N/D` for `[[a,b],[c,d]]⁻¹ = [[d,−b],[−c,a]]/(ad − bc)`.
fn ratio_form_derivative(a: &Matrix) -> [[f64; 4]; 4] {
    let v = a.as_slice();
    let det = v[0] * v[3] - v[1] * v[2];
    let det_grad = [v[3], -v[2], -v[1], v[0]];
    let num = [v[3], -v[1], -v[2], v[0]];
    // ∂num_m/∂x_q
    let num_grad = [[0., 0., 0., 1.], [0., -1., 0., 0.], [0., 0., -1., 0.], [1., 0., 0., 0.]];
    let mut out = [[0.0; 4]; 4];
    for m in 0..4 {
        for q in 0..4 {
            out[m][q] = (num_grad[m][q] * det - num[m] * det_grad[q]) / (det * det);
        }
    }
    out
}

#[test]
fn ratio_form_oracle() {
    let mut rng = stream_rng(5, 0);
    for _ in 0..50 {
        let a = random_uniform(2, -3.0, 3.0, &mut rng);
        let Ok(lin) = linearize_inverse(&a) else { continue };
        let oracle = ratio_form_derivative(&a);
        for m in 0..4 {
            for q in 0..4 {
                let got = lin.row(m)[q];
                assert!((got - oracle[m][q]).abs() <= 1e-9 * oracle[m][q].abs().max(1.0));
            }
        }
    }
}

#[test]
fn identity_base() {
    let lin = linearize_inverse(&Matrix::identity(3)).unwrap();
    for k in 0..3 {
        for l in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let want = if k == i && j == l { -1.0 } else { 0.0 };
                    assert_eq!(lin.f1_at(k, l, i, j), want);
                }
            }
        }
    }
}

#[test]
fn eval_examples() {
    let lin = linearize_inverse(&base()).unwrap();
    assert_eq!(eval_linear(&lin, &Matrix::zeros(2)).unwrap(), lin.f0);
    let e = Matrix::from_rows(&[&[0.01, 0.], &[0., 0.]]).unwrap();
    assert!((eval_linear(&lin, &e).unwrap()[(0, 0)] - (1.5 - 0.0225)).abs() < 1e-15);
    let mut rng = stream_rng(2, 0);
    let e = random_uniform(2, -0.1, 0.1, &mut rng);
    let one = &eval_linear(&lin, &e).unwrap() - &lin.f0;
    let two = &eval_linear(&lin, &e.scale(2.0)).unwrap() - &lin.f0;
    assert!(two.max_abs_diff(&one.scale(2.0)) < 1e-15);
    assert!(eval_linear(&lin, &Matrix::zeros(3)).is_err());
    let a = &base() + &e;
    assert!(lin.predict(&a).unwrap().max_abs_diff(&eval_linear(&lin, &e).unwrap()) < 1e-14);
}

#[test]
fn finite_difference_examples() {
    assert!(finite_diff_check(&base(), 1e-5).unwrap() <= 1e-6);
    assert!(finite_diff_check(&Matrix::identity(2), 1e-5).unwrap() <= 1e-8);
    let a = Matrix::from_rows(&[&[1., 1., 1.], &[1., 2., 3.], &[1., 2., 4.]]).unwrap();
    let (e1, e2) = (
        finite_diff_check(&a, 1e-3).unwrap(),
        finite_diff_check(&a, 5e-4).unwrap(),
    );
    let ratio = e1 / e2;
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    assert!(finite_diff_check(&base(), 1.0).is_err());
}

#[test]
fn transpose_symmetry() {
    let a = Matrix::from_rows(&[&[1., 2., 0.5], &[-1., 3., 1.], &[0., 1., 2.]]).unwrap();
    let (lin, lin_t) = (
        linearize_inverse(&a).unwrap(),
        linearize_inverse(&a.transpose()).unwrap(),
    );
    for k in 0..3 {
        for l in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((lin.f1_at(k, l, i, j) - lin_t.f1_at(l, k, j, i)).abs() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn remainder_is_quadratic() {
    let lin = linearize_inverse(&base()).unwrap();
    let mut rng = stream_rng(6, 0);
    let dirs: Vec<Matrix> = (0..200).map(|_| random_uniform(2, -1.0, 1.0, &mut rng)).collect();
    let fit = |s: f64| {
        dirs.iter()
            .map(|d| {
                let e = d.scale(s);
                let err = inverse(&(&base() + &e))
                    .unwrap()
                    .max_abs_diff(&eval_linear(&lin, &e).unwrap());
                err / e.norm(NormKind::LInf).powi(2)
            })
            .fold(0.0, f64::max)
    };
    let (c1, c2) = (fit(0.02), fit(0.01));
    assert!(c1 > 0.0 && (c1 / c2 - 1.0).abs() < 0.1, "{c1} {c2}");
}

#[test]
fn degenerate_model_and_f1_file() {
    let lin = linearize_inverse(&base()).unwrap();
    let model = lin.to_model();
    assert_eq!(model.hidden_widths(), Vec::<usize>::new());
    let a = Matrix::from_rows(&[&[2.004, 1.997], &[2.001, 3.009]]).unwrap();
    assert!(model.predict(&a).unwrap().max_abs_diff(&lin.predict(&a).unwrap()) < 1e-14);
    let json = lin.f1_json();
    assert_eq!(json["shape"], serde_json::json!([2, 2, 2, 2]));
    let data: Vec<f64> = serde_json::from_value(json["data"].clone()).unwrap();
    assert_eq!(data[0], lin.f1_at(0, 0, 0, 0));
}

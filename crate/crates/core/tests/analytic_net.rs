use invlab::analytic_net::*;
use invlab::exec::stream_rng;
use invlab::linalg::{inverse, Matrix};
use invlab::linear_approx::{eval_linear, linearize_inverse};
use invlab::mlp::{parse_checkpoint, to_checkpoint_json, Predictor};
use rand::Rng;

fn base() -> Matrix {
    Matrix::from_rows(&[&[2., 2.], &[2., 3.]]).unwrap()
}

#[test]
fn construction_shape_and_origin() {
    let net = build_two_layer(&base()).unwrap();
    assert_eq!(net.hidden_widths(), vec![8]);
    assert!(net.layers[0].bias.iter().all(|&b| b == 0.0));
    assert_eq!(net.predict(&base()).unwrap(), inverse(&base()).unwrap());
    let three = Matrix::from_rows(&[&[1., 1., 1.], &[1., 2., 3.], &[1., 2., 4.]]).unwrap();
    assert_eq!(build_two_layer(&three).unwrap().hidden_widths(), vec![18]);
    assert!(build_two_layer(&Matrix::zeros(2)).is_err());
}

#[test]
fn network_equals_linearization() {
    let net = build_two_layer(&base()).unwrap();
    let lin = linearize_inverse(&base()).unwrap();
    let mut rng = stream_rng(10, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-0.5..0.5)).collect();
        let y = net.forward(&x).unwrap();
        let want = eval_linear(&lin, &Matrix::from_flat(2, x).unwrap()).unwrap();
        worst = worst.max(want.max_abs_diff(&Matrix::from_flat(2, y).unwrap()));
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn sweep_is_quadratic() {
    let rows = quadratic_error_sweep(&base(), &[0.005, 0.02, 0.0, 0.01], 20_000, 1).unwrap();
    let scales: Vec<f64> = rows.iter().map(|r| r.scale).collect();
    assert_eq!(scales, vec![0.02, 0.01, 0.005, 0.0]);
    assert_eq!(rows[3].max_abs_error, 0.0);
    for w in rows.windows(2) {
        assert!(w[0].max_abs_error >= w[1].max_abs_error);
    }
    let r1 = rows[0].max_abs_error / rows[1].max_abs_error;
    let r2 = rows[1].max_abs_error / rows[2].max_abs_error;
    assert!((3.0..=5.0).contains(&r1), "{r1}");
    assert!((3.0..=5.0).contains(&r2), "{r2}");
    assert!(rows.iter().all(|r| r.skipped == 0));
    assert!(sweep_csv(&rows).starts_with("scale,max_abs_error,skipped\n"));
    assert!(quadratic_error_sweep(&base(), &[1.0], 10, 1).is_err());
}

#[test]
fn checkpoint_round_trip() {
    let net = build_two_layer(&base()).unwrap();
    let text = serde_json::to_string(&to_checkpoint_json(&net)).unwrap();
    assert_eq!(parse_checkpoint(&text).unwrap(), net);
}

use invlab::limits::*;
use invlab::linalg::{adjugate, inverse, nearest_singular_distance, Matrix, NormKind};
use invlab::mlp::{reference_model, ConstantPredictor};
use invlab::Error;

fn ones() -> Matrix {
    Matrix::from_rows(&[&[1., 1.], &[1., 1.]]).unwrap()
}

#[test]
fn blowup_is_bounded_below() {
    let rows = verify_inverse_blowup(&ones(), &[1e-2, 1e-3, 1e-4], 5000, NormKind::L2, 1).unwrap();
    assert_eq!(rows.len(), 3);
    let vals: Vec<f64> = rows.iter().map(|r| r.min_scaled_norm).collect();
    assert!(vals.iter().all(|&v| v > 0.0));
    let (lo, hi) = vals
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo < 10.0 && lo > 0.1 * hi, "{vals:?}");
    assert_eq!(adjugate(&ones()).unwrap().norm(NormKind::L2), 2.0);
    assert_eq!(
        blowup_csv(&rows),
        blowup_csv(&verify_inverse_blowup(&ones(), &[1e-2, 1e-3, 1e-4], 5000, NormKind::L2, 1).unwrap())
    );
}

#[test]
fn preconditions() {
    assert!(matches!(
        verify_inverse_blowup(&Matrix::zeros(2), &[1e-2], 10, NormKind::L2, 0),
        Err(Error::RankPreconditionFailed)
    ));
    assert!(matches!(
        check_rank_deficit_one(&Matrix::identity(2)),
        Err(Error::RankPreconditionFailed)
    ));
    let three = Matrix::from_rows(&[&[1., 2., 3.], &[2., 4., 6.], &[0., 1., 1.]]).unwrap();
    assert!(check_rank_deficit_one(&three).is_ok());
    assert!(adversarial_point(&ExactInverse, &ones(), 0.0, 0).is_err());
    assert!(expected_error_ball(&ExactInverse, &ones(), &[1e-3, 1e-2], 1.0, 10, NormKind::L2, 0, None).is_err());
}

#[test]
fn adversarial_point_defeats_a_model() {
    let model = reference_model();
    let a = adversarial_point(&model, &ones(), 1e3, 2).unwrap();
    assert!(a.error > 1e3 && nearest_singular_distance(&a.x) > 0.0);
    let b = adversarial_point(&model, &ones(), 1e6, 2).unwrap();
    assert!(b.error > 1e6 && b.t < a.t);
    let err = inverse(&b.x)
        .unwrap()
        .max_abs_diff(&invlab::mlp::Predictor::predict(&model, &b.x).unwrap());
    assert_eq!(err, b.error);
    assert!(matches!(
        adversarial_point(&ExactInverse, &ones(), 1.0, 2),
        Err(Error::SearchExhausted { .. })
    ));
}

#[test]
fn ball_estimates_grow_as_eps_shrinks() {
    let model = ConstantPredictor(Matrix::zeros(2));
    let rows = expected_error_ball(&model, &ones(), &[1e-1, 1e-2, 1e-3], 1.0, 20_000, NormKind::L2, 3, None).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].estimate + 2.0 * w[1].std_error >= w[0].estimate - 2.0 * w[0].std_error);
        assert!(w[1].estimate > w[0].estimate);
    }
    let exact = expected_error_ball(&ExactInverse, &ones(), &[1e-1, 1e-2], 1.0, 2000, NormKind::L2, 3, None).unwrap();
    assert!(exact.iter().all(|r| r.estimate == 0.0));
    let rel = expected_error_ball(&model, &ones(), &[1e-1], 1.0, 20_000, NormKind::L2, 3, Some(1.0)).unwrap();
    // ‖x‖ ≈ ‖a0‖ = 2 on the ball
    assert!((rel[0].estimate * 2.0 / rows[0].estimate - 1.0).abs() < 0.1);
    assert!(ball_csv(&rows).starts_with("eps,estimate,std_error,rejected\n"));
}

#[test]
fn ball_sampling_is_uniform_in_radius() {
    // the radius of a uniform draw from the 4-ball has E[r] = 4/5·eps
    let probe = MeanRadius(ones());
    let rows = expected_error_ball(&probe, &ones(), &[0.5], 1.0, 50_000, NormKind::L2, 4, None).unwrap();
    assert!((rows[0].estimate - 0.4).abs() < 0.005, "{}", rows[0].estimate);
}

struct MeanRadius(Matrix);

impl invlab::mlp::Predictor for MeanRadius {
    fn predict(&self, a: &Matrix) -> invlab::Result<Matrix> {
        // error becomes ‖A − a0‖ exactly
        let inv = inverse(a)?;
        let d = (a - &self.0).norm(NormKind::L2);
        let mut out = inv.clone();
        out[(0, 0)] -= d;
        Ok(out)
    }
}

#[test]
fn divergence_flags() {
    let model = ConstantPredictor(Matrix::zeros(2));
    let schedule = [1000, 10_000, 100_000];
    let heavy = divergence_report(&model, &ones(), 5.0, 1e-2, &schedule, 0).unwrap();
    assert!(heavy.flagged);
    assert_eq!(heavy.rows.len(), 3);
    let light = divergence_report(&model, &ones(), 1.0, 1e-2, &schedule, 0).unwrap();
    assert!(!light.flagged);
    let exact = divergence_report(&ExactInverse, &ones(), 5.0, 1e-2, &schedule, 0).unwrap();
    assert!(!exact.flagged && exact.rows.iter().all(|r| r.estimate == 0.0));
    assert!(divergence_csv(&heavy).starts_with("n_samples,estimate,max_contribution,flagged\n"));
}

#[test]
fn sequential_and_parallel_agree() {
    use invlab::exec::{set_mode, Mode, CHUNK};
    let model = reference_model();
    let run = || expected_error_ball(&model, &ones(), &[1e-2], 1.0, 3 * CHUNK + 17, NormKind::L2, 9, None).unwrap();
    set_mode(Mode::Sequential);
    let seq = run();
    set_mode(Mode::Parallel);
    assert_eq!(run(), seq);
}

use wrist_mrac::adaptive::*;
use wrist_mrac::lti::{realize, LtiSystem, TransferFunction};

fn first_order(dt: f64) -> LtiSystem {
    realize(
        &TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap(),
        dt,
    )
    .unwrap()
}

fn settings(gamma: f64, duration: f64) -> MracSettings {
    MracSettings {
        gamma,
        theta0: 0.0,
        duration,
        blowup_limit: 1e6,
        initial: InitialCondition::Rest,
    }
}

#[test]
fn matched_first_order_gain_converges_to_one() {
    let dt = 1e-4;
    let records = run_mrac(
        &mut first_order(dt),
        &mut first_order(dt),
        &Trajectory::SquareWave {
            amplitude: 1.0,
            period: 10.0,
        },
        &settings(1.0, 50.0),
    )
    .unwrap();
    let last = records.last().unwrap();
    assert!((last.t - 50.0).abs() < 1e-9);
    assert!((last.theta - 1.0).abs() < 1e-2, "theta = {}", last.theta);
}

#[test]
fn doubling_gamma_keeps_the_initial_direction() {
    let dt = 1e-3;
    let run = |gamma| {
        run_mrac(
            &mut first_order(dt),
            &mut first_order(dt),
            &Trajectory::Step { amplitude: 1.0 },
            &settings(gamma, 0.5),
        )
        .unwrap()
    };
    let slow = run(0.5);
    let fast = run(1.0);
    let k = slow.iter().position(|r| r.theta != 0.0).unwrap();
    assert_eq!(slow[k].theta.signum(), fast[k].theta.signum());
    assert!((fast[k].theta - 2.0 * slow[k].theta).abs() < 1e-15);
}

#[test]
fn runaway_gain_reports_divergence_with_partial_records() {
    let dt = 1e-3;
    let mut s = settings(1e9, 10.0);
    s.blowup_limit = 1e3;
    let err = run_mrac(
        &mut first_order(dt),
        &mut first_order(dt),
        &Trajectory::SquareWave {
            amplitude: 1.0,
            period: 1.0,
        },
        &s,
    )
    .unwrap_err();
    match err {
        MracError::Divergence { records, .. } => assert!(!records.is_empty()),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn identical_settings_give_identical_records() {
    let run = || {
        run_mrac(
            &mut first_order(1e-3),
            &mut first_order(1e-3),
            &Trajectory::SquareWave {
                amplitude: 0.3,
                period: 4.0,
            },
            &settings(2.0, 8.0),
        )
        .unwrap()
    };
    assert_eq!(run(), run());
}

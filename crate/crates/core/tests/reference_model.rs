use wrist_mrac::lti::{analytic_step_response, realize, TransferFunction};

fn wrist_reference() -> TransferFunction {
    TransferFunction::new(vec![-4.0], vec![1.0, 3.0, 5.0]).unwrap()
}

#[test]
fn rk4_tracks_closed_form_over_ten_seconds() {
    let tf = wrist_reference();
    let dt = 1e-3;
    let mut sys = realize(&tf, dt).unwrap();
    let y = sys.step_response(1.0, 10_000).unwrap();
    let worst = y
        .iter()
        .enumerate()
        .map(|(k, v)| (v - analytic_step_response(&tf, k as f64 * dt).unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "max deviation {worst:e}");
    assert!((y[10_000] + 0.8).abs() < 1e-4);
}

#[test]
fn halving_the_step_barely_moves_the_samples() {
    let tf = wrist_reference();
    let coarse = realize(&tf, 1e-3)
        .unwrap()
        .step_response(1.0, 5000)
        .unwrap();
    let fine = realize(&tf, 5e-4)
        .unwrap()
        .step_response(1.0, 10_000)
        .unwrap();
    for (k, c) in coarse.iter().enumerate() {
        assert!((c - fine[2 * k]).abs() < 1e-8, "sample {k}");
    }
}

#[test]
fn response_is_linear_in_the_input() {
    let tf = wrist_reference();
    let unit = realize(&tf, 1e-3)
        .unwrap()
        .step_response(1.0, 3000)
        .unwrap();
    let scaled = realize(&tf, 1e-3)
        .unwrap()
        .step_response(-2.5, 3000)
        .unwrap();
    for (a, b) in unit.iter().zip(&scaled) {
        assert!((b + 2.5 * a).abs() <= 1e-14 * (1.0 + a.abs()));
    }
}

#[test]
fn higher_order_realization_reaches_its_dc_gain() {
    // (s + 2) / ((s + 1)(s + 4)(s + 5))
    let tf = TransferFunction::new(vec![1.0, 2.0], vec![1.0, 10.0, 29.0, 20.0]).unwrap();
    let mut sys = realize(&tf, 1e-3).unwrap();
    let y = sys.step_response(1.0, 15_000).unwrap();
    assert!((y[15_000] - 0.1).abs() < 1e-6);
    assert_eq!(y[0], 0.0);
}

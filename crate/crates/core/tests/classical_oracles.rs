//! Cross-checks between the Runge-Kutta integrator and the closed-form
//! driven-oscillator solution.

use shuttlesim::classical::{
    analytic_trajectory, comoving_frame, integrate_trajectory, Trajectory,
};
use shuttlesim::control::{
    make_reference_profile, make_reference_transport, volterra_response, ControlSignal,
    HarmonicTerm, TransportSpec, Waveform, DEFAULT_CONTROL_SAMPLES,
};
use shuttlesim::distortion::{apply_piecewise_model, PiecewiseModel};
use std::f64::consts::PI;

fn max_deviation(a: &Trajectory, b: &Trajectory) -> f64 {
    assert_eq!(a.len(), b.len());
    a.points
        .iter()
        .zip(&b.points)
        .map(|(u, v)| ((u.x - v.x).powi(2) + (u.p - v.p).powi(2)).sqrt())
        .fold(0.0, f64::max)
}

#[test]
fn integrator_matches_closed_form_at_fine_step() {
    let duration = 2.0 * PI;
    let spec = TransportSpec::new(10.0, duration).unwrap();
    let control = make_reference_transport(spec).unwrap();
    let profile = make_reference_profile(spec).unwrap();
    let step = duration / (duration / 1e-3).round();
    let (x0, p0) = (0.7, -0.4);
    let rk = integrate_trajectory(x0, p0, &control, step).unwrap();
    let exact = analytic_trajectory(x0, p0, &profile, step).unwrap();
    let dev = max_deviation(&rk, &exact);
    assert!(dev < 1e-6, "max deviation {dev:.3e}");
}

#[test]
fn integrator_converges_at_fourth_order() {
    let duration = 2.0 * PI;
    let spec = TransportSpec::new(10.0, duration).unwrap();
    let control = make_reference_transport(spec).unwrap();
    let profile = make_reference_profile(spec).unwrap();
    let err_at = |intervals: usize| {
        let step = duration / intervals as f64;
        let rk = integrate_trajectory(0.0, 0.5, &control, step).unwrap();
        let exact = analytic_trajectory(0.0, 0.5, &profile, step).unwrap();
        max_deviation(&rk, &exact)
    };
    let coarse = err_at(128);
    let fine = err_at(256);
    assert!(fine * 8.0 <= coarse, "coarse={coarse:.3e} fine={fine:.3e}");
}

#[test]
fn comoving_loop_closes_on_the_energy_circle() {
    let duration = 2.0 * PI;
    let spec = TransportSpec::new(10.0, duration).unwrap();
    let control = make_reference_transport(spec).unwrap();
    let step = duration / 16384.0;
    for &(x0, p0) in &[(0.0, 0.0), (0.0, 0.5)] {
        let traj = integrate_trajectory(x0, p0, &control, step).unwrap();
        let frame = comoving_frame(&traj, &control).unwrap();
        let first = frame.points[0];
        let last = frame.final_point();
        let e0 = 0.5 * (first.x * first.x + first.p * first.p);
        let e1 = 0.5 * (last.x * last.x + last.p * last.p);
        assert!((e1 - e0).abs() < 1e-4, "(x0,p0)=({x0},{p0}): {e0} vs {e1}");
    }
}

#[test]
fn driven_motion_is_linear_in_the_drive() {
    let duration = 5.0;
    let step = duration / 2048.0;
    let w1 = Waveform {
        offset: 0.4,
        slope: 0.3,
        terms: vec![HarmonicTerm { omega: 2.1, sin_amp: 0.8, cos_amp: 0.0 }],
    };
    let w2 = Waveform {
        offset: -0.2,
        slope: 0.6,
        terms: vec![HarmonicTerm { omega: 0.9, sin_amp: 0.0, cos_amp: 0.5 }],
    };
    let diff = w1.add(&w2.scale(-1.0));
    let (x0, p0) = (0.3, -0.6);
    let t1 = integrate_trajectory(
        x0,
        p0,
        &ControlSignal::closed(w1, duration).unwrap(),
        step,
    )
    .unwrap();
    let t2 = integrate_trajectory(
        x0,
        p0,
        &ControlSignal::closed(w2, duration).unwrap(),
        step,
    )
    .unwrap();
    let td = integrate_trajectory(
        0.0,
        0.0,
        &ControlSignal::closed(diff, duration).unwrap(),
        step,
    )
    .unwrap();
    for i in 0..t1.len() {
        let dx = t1.points[i].x - t2.points[i].x;
        let dp = t1.points[i].p - t2.points[i].p;
        assert!((dx - td.points[i].x).abs() < 1e-9, "i={i}");
        assert!((dp - td.points[i].p).abs() < 1e-9, "i={i}");
    }
}

#[test]
fn staircase_integration_agrees_with_its_forced_response() {
    let duration = 2.0 * PI;
    let spec = TransportSpec::new(10.0, duration).unwrap();
    let reference = make_reference_transport(spec).unwrap();
    let stair =
        apply_piecewise_model(&reference, &PiecewiseModel::new(8, None).unwrap()).unwrap();
    let profile =
        volterra_response(&stair, duration / (DEFAULT_CONTROL_SAMPLES - 1) as f64).unwrap();
    let step = duration / 16384.0;
    let rk = integrate_trajectory(0.0, 0.0, &stair, step).unwrap();
    for pt in rk.points.iter().step_by(64) {
        let want_x = profile.f_at(pt.t);
        let want_p = profile.f1_at(pt.t);
        assert!((pt.x - want_x).abs() < 1e-7, "t={}: {} vs {want_x}", pt.t, pt.x);
        assert!((pt.p - want_p).abs() < 1e-7, "t={}", pt.t);
    }
}

#[test]
fn comoving_frame_rejects_mismatched_spans() {
    let spec = TransportSpec::new(1.0, 2.0 * PI).unwrap();
    let control = make_reference_transport(spec).unwrap();
    let short = ControlSignal::closed(
        Waveform { offset: 0.0, slope: 0.0, terms: vec![] },
        PI,
    )
    .unwrap();
    let traj = integrate_trajectory(0.0, 0.0, &control, 2.0 * PI / 256.0).unwrap();
    assert!(comoving_frame(&traj, &short).is_err());
}

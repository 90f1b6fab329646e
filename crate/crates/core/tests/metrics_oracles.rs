//! Fidelity measures checked against closed-form overlaps and the
//! commensurability physics of each distortion model.

use shuttlesim::control::{
    make_reference_profile, make_reference_transport, volterra_response, ControlSignal,
    TransportSpec, DEFAULT_CONTROL_SAMPLES,
};
use shuttlesim::distortion::{
    apply_derivative_model, apply_fourier_model, apply_piecewise_model, apply_smoothed_piecewise,
    DerivativeModel, FourierModel, PiecewiseModel, SmoothingKernel,
};
use shuttlesim::metrics::{
    instantaneous_ground_fidelity, mixed_state_fidelity, transport_fidelity, MixtureSpec,
};
use shuttlesim::quantum::{analytic_evolve, eigenstate, SpatialGrid, WaveFunction};
use std::f64::consts::PI;

const DISTANCE: f64 = 10.0;

fn default_step(duration: f64) -> f64 {
    duration / (DEFAULT_CONTROL_SAMPLES - 1) as f64
}

/// Final state of eigenstate `n` carried by the given control.
fn evolved_final(control: &ControlSignal, n: usize, points: usize) -> WaveFunction {
    let duration = control.duration();
    let profile = volterra_response(control, default_step(duration)).unwrap();
    let grid = SpatialGrid::for_transport(control, points).unwrap();
    analytic_evolve(n, &profile, duration, grid).unwrap()
}

#[test]
fn perfect_transport_scores_unit_fidelity() {
    let spec = TransportSpec::new(DISTANCE, 2.0 * PI).unwrap();
    let profile = make_reference_profile(spec).unwrap();
    let grid = SpatialGrid::new(-14.0, 24.0, 1024).unwrap();
    for n in [0usize, 1, 5] {
        let final_state = analytic_evolve(n, &profile, spec.duration, grid).unwrap();
        let fid = transport_fidelity(&final_state, n, spec).unwrap();
        assert!(fid >= 1.0 - 1e-10, "n={n}: {fid}");
    }
}

#[test]
fn unevolved_state_scores_the_gaussian_overlap() {
    for (distance, points) in [(1.0, 1024usize), (10.0, 1024)] {
        let spec = TransportSpec::new(distance, 2.0 * PI).unwrap();
        let grid = SpatialGrid::new(-14.0, 24.0, points).unwrap();
        let unmoved = eigenstate(0, grid, 0.0).unwrap();
        let fid = transport_fidelity(&unmoved, 0, spec).unwrap();
        let expected = (-distance * distance / 2.0).exp();
        assert!(
            (fid - expected).abs() <= 1e-6 * expected,
            "distance {distance}: {fid} vs {expected}"
        );
    }
}

#[test]
fn zero_distance_needs_no_transport() {
    let spec = TransportSpec::new(0.0, 2.0 * PI).unwrap();
    let grid = SpatialGrid::new(-16.0, 16.0, 512).unwrap();
    let state = eigenstate(0, grid, 0.0).unwrap();
    assert!((transport_fidelity(&state, 0, spec).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn ground_fidelity_trace_dips_and_recovers() {
    let duration = 2.0 * PI;
    let spec = TransportSpec::new(DISTANCE, duration).unwrap();
    let profile = make_reference_profile(spec).unwrap();
    let control = make_reference_transport(spec).unwrap();
    let grid = SpatialGrid::for_transport(&control, 1024).unwrap();
    let snapshots: Vec<WaveFunction> = (0..=64)
        .map(|i| analytic_evolve(0, &profile, duration * i as f64 / 64.0, grid).unwrap())
        .collect();
    let trace = instantaneous_ground_fidelity(&snapshots, &control).unwrap();
    assert_eq!(trace.points.len(), 65);
    assert!((trace.points[0].1 - 1.0).abs() < 1e-10, "start {}", trace.points[0].1);
    let (dip_time, dip) = trace.minimum().unwrap();
    assert!(dip < 0.99, "no dip: minimum {dip} at {dip_time}");
    assert!(dip_time > 0.0 && dip_time < duration);
    let (_, last) = trace.final_point().unwrap();
    assert!(last >= 1.0 - 1e-6, "no recovery: {last}");
}

#[test]
fn every_model_is_harmless_at_its_commensurate_point() {
    let two_pi = TransportSpec::new(DISTANCE, 2.0 * PI).unwrap();

    for duration in [2.0 * PI, 5.0, 7.3] {
        let spec = TransportSpec::new(DISTANCE, duration).unwrap();
        let control = make_reference_transport(spec).unwrap();
        let warped =
            apply_derivative_model(&control, &DerivativeModel::new(1.0).unwrap()).unwrap();
        let fid = transport_fidelity(&evolved_final(&warped, 0, 1024), 0, spec).unwrap();
        assert!(fid >= 1.0 - 1e-10, "derivative at T={duration}: {fid}");
    }

    for periods in [1u32, 2] {
        let duration = 2.0 * PI * periods as f64;
        let spec = TransportSpec::new(DISTANCE, duration).unwrap();
        let control = make_reference_transport(spec).unwrap();
        let model = PiecewiseModel::new(8, None).unwrap();
        let staircase = apply_piecewise_model(&control, &model).unwrap();
        let fid = transport_fidelity(&evolved_final(&staircase, 0, 1024), 0, spec).unwrap();
        assert!(fid >= 1.0 - 1e-10, "staircase at {periods} periods: {fid}");

        let kernel = SmoothingKernel::default_for(duration, 8);
        let relaxing = PiecewiseModel::new(8, Some(kernel)).unwrap();
        let smoothed = apply_smoothed_piecewise(&control, &relaxing).unwrap();
        let fid = transport_fidelity(&evolved_final(&smoothed, 0, 1024), 0, spec).unwrap();
        assert!(fid >= 1.0 - 1e-4, "smoothed at {periods} periods: {fid}");
    }

    let control = make_reference_transport(two_pi).unwrap();
    let model = FourierModel::seeded(4, PI, 42).unwrap();
    let wobbling = apply_fourier_model(&control, &model).unwrap();
    let fid = transport_fidelity(&evolved_final(&wobbling, 0, 1024), 0, two_pi).unwrap();
    assert!(fid >= 1.0 - 1e-10, "commensurate ripple: {fid}");
}

#[test]
fn mixed_fidelity_is_weight_blind_under_perfect_transport() {
    let spec = TransportSpec::new(DISTANCE, 2.0 * PI).unwrap();
    let profile = make_reference_profile(spec).unwrap();
    let grid = SpatialGrid::new(-14.0, 24.0, 1024).unwrap();
    let finals: Vec<WaveFunction> = (0..2)
        .map(|n| analytic_evolve(n, &profile, spec.duration, grid).unwrap())
        .collect();
    for weights in [vec![0.5, 0.5], vec![0.9, 0.1]] {
        let mixture = MixtureSpec::new(weights.clone()).unwrap();
        let result = mixed_state_fidelity(&mixture, &finals, spec).unwrap();
        assert!(
            (result.fidelity - 1.0).abs() < 1e-8,
            "weights {weights:?}: {}",
            result.fidelity
        );
        assert!(result.leakage < 1e-8, "leakage {}", result.leakage);
    }
}

#[test]
fn single_weight_mixture_reduces_to_the_pure_overlap() {
    let spec = TransportSpec::new(DISTANCE, 3.0 * PI).unwrap();
    let control = make_reference_transport(spec).unwrap();
    let staircase =
        apply_piecewise_model(&control, &PiecewiseModel::new(4, None).unwrap()).unwrap();
    let final_state = evolved_final(&staircase, 0, 1024);
    let pure = transport_fidelity(&final_state, 0, spec).unwrap();
    let mixture = MixtureSpec::new(vec![1.0]).unwrap();
    let mixed = mixed_state_fidelity(&mixture, &[final_state], spec).unwrap();
    assert!(pure < 0.999, "staircase off commensurability should leak: {pure}");
    assert!(
        (mixed.fidelity - pure).abs() < 1e-9,
        "mixed {} vs pure {pure}",
        mixed.fidelity
    );
}

#[test]
fn thermal_mixtures_ride_along_unharmed() {
    let spec = TransportSpec::new(DISTANCE, 2.0 * PI).unwrap();
    let profile = make_reference_profile(spec).unwrap();
    let grid = SpatialGrid::new(-14.0, 24.0, 1024).unwrap();
    let finals: Vec<WaveFunction> = (0..=10)
        .map(|n| analytic_evolve(n, &profile, spec.duration, grid).unwrap())
        .collect();
    let mixture = MixtureSpec::thermal(1.0, 10).unwrap();
    let result = mixed_state_fidelity(&mixture, &finals, spec).unwrap();
    assert!((result.fidelity - 1.0).abs() < 1e-8, "{}", result.fidelity);
    assert!(result.leakage < 1e-8);
}

#[test]
fn state_count_must_match_the_weights() {
    let spec = TransportSpec::new(DISTANCE, 2.0 * PI).unwrap();
    let grid = SpatialGrid::new(-14.0, 24.0, 512).unwrap();
    let lone = eigenstate(0, grid, DISTANCE).unwrap();
    let mixture = MixtureSpec::new(vec![0.5, 0.5]).unwrap();
    assert!(mixed_state_fidelity(&mixture, &[lone], spec).is_err());
}

//! Oracle checks for the control module: frozen closed forms, independent
//! quadrature rules, and exact per-segment algebra for staircase controls.

use shuttlesim::control::{
    commensurate_time, control_from_profile, kinematic_phase, make_reference_profile,
    make_reference_profile_harmonics, make_reference_transport, volterra_response, ControlForm,
    ControlSignal, HarmonicTerm, StepwiseControl, TransportSpec, Waveform,
    DEFAULT_CONTROL_SAMPLES,
};
use std::f64::consts::PI;

fn default_step(duration: f64) -> f64 {
    duration / (DEFAULT_CONTROL_SAMPLES - 1) as f64
}

/// Composite Boole rule, an independent fourth-degree Newton-Cotes check.
fn boole(values: &[f64], step: f64) -> f64 {
    assert_eq!((values.len() - 1) % 4, 0);
    let mut acc = 0.0;
    for chunk in values.windows(5).step_by(4) {
        acc += 7.0 * chunk[0] + 32.0 * chunk[1] + 12.0 * chunk[2] + 32.0 * chunk[3]
            + 7.0 * chunk[4];
    }
    acc * 2.0 * step / 45.0
}

#[test]
fn harmonic_amplitudes_match_independent_linear_solve() {
    // Endpoint slope and jerk conditions for the ramp-plus-two-sines family:
    // 1 + 2.pi.a + 4.pi.b = 0 and a + 8b = 0, solved here by elimination.
    let b = 1.0 / (2.0 * PI * (8.0 - 2.0));
    let a = -8.0 * b;
    assert!((a - (-2.0 / (3.0 * PI))).abs() < 1e-16);
    assert!((b - 1.0 / (12.0 * PI)).abs() < 1e-16);

    let spec = TransportSpec::new(1.0, 5.0).unwrap();
    let profile = make_reference_profile(spec).unwrap();
    let closed = profile.closed.as_ref().unwrap();
    assert!((closed.f.terms[0].sin_amp - a).abs() < 1e-15);
    assert!((closed.f.terms[1].sin_amp - b).abs() < 1e-15);
}

#[test]
fn boundary_suite_all_eight_values() {
    for &duration in &[2.0 * PI, 4.0 * PI, 5.0, 7.3] {
        for &distance in &[0.0, 1.0, 10.0, -3.0] {
            let spec = TransportSpec::new(distance, duration).unwrap();
            let profile = make_reference_profile(spec).unwrap();
            let bc = profile.boundary();
            for (i, r) in bc.residuals(distance).iter().enumerate() {
                assert!(
                    r.abs() < 1e-10,
                    "T={duration} dx={distance} residual[{i}]={r:.3e}"
                );
            }
            assert!(bc.is_perfect(distance, 1e-10));
        }
    }
}

#[test]
fn phase_at_full_period_matches_frozen_closed_form_and_boole_oracle() {
    // For the two-harmonic response at T = 2.pi the accumulated phase comes
    // out in closed form as -5 dx^2 / (12 pi); frozen here for dx = 10.
    let frozen = -125.0 / (3.0 * PI);
    let duration = 2.0 * PI;
    let spec = TransportSpec::new(10.0, duration).unwrap();
    let profile = make_reference_profile(spec).unwrap();
    let closed = profile.closed.as_ref().unwrap();

    let n = 2 * (DEFAULT_CONTROL_SAMPLES - 1) + 1;
    let h = duration / (n - 1) as f64;
    let rate: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 * h;
            let (f, f1, f2) = (closed.f.value(t), closed.f1.value(t), closed.f2.value(t));
            2.0 * f * f2 + f2 * f2 + f1 * f1
        })
        .collect();
    let oracle = boole(&rate, h);
    assert!((oracle - frozen).abs() < 1e-9, "oracle={oracle} frozen={frozen}");

    let phase = kinematic_phase(&profile, duration).unwrap();
    assert!((phase - oracle).abs() < 1e-8, "phase={phase} oracle={oracle}");
    assert_eq!(kinematic_phase(&profile, 0.0).unwrap(), 0.0);
}

#[test]
fn null_control_response_is_null() {
    let control = ControlSignal::closed(
        Waveform { offset: 0.0, slope: 0.0, terms: vec![] },
        2.0 * PI,
    )
    .unwrap();
    let profile = volterra_response(&control, default_step(2.0 * PI)).unwrap();
    for i in 0..profile.len() {
        assert_eq!(profile.f[i], 0.0);
        assert_eq!(profile.f1[i], 0.0);
        assert_eq!(profile.phi[i], 0.0);
    }
}

#[test]
fn constant_control_response_is_one_minus_cosine() {
    let c = 2.5;
    let duration = 7.0;
    let control =
        ControlSignal::closed(Waveform { offset: c, slope: 0.0, terms: vec![] }, duration)
            .unwrap();
    let profile = volterra_response(&control, default_step(duration)).unwrap();
    for (i, t) in profile.times().enumerate() {
        let want = c * (1.0 - t.cos());
        assert!((profile.f[i] - want).abs() < 1e-9, "t={t}");
        assert!((profile.f2[i] + profile.f[i] - c).abs() < 1e-12, "t={t}");
    }
    let back = control_from_profile(&profile).unwrap();
    for i in 0..33 {
        let t = duration * i as f64 / 32.0;
        assert!((back.value(t).unwrap() - c).abs() < 1e-9);
    }
}

#[test]
fn reference_transport_response_matches_reference_profile() {
    for &(distance, duration) in &[(10.0, 2.0 * PI), (1.0, 5.0), (-3.0, 7.3)] {
        let spec = TransportSpec::new(distance, duration).unwrap();
        let control = make_reference_transport(spec).unwrap();
        let profile = volterra_response(&control, default_step(duration)).unwrap();
        let reference = make_reference_profile(spec).unwrap();
        let closed = reference.closed.as_ref().unwrap();
        for (i, t) in profile.times().enumerate() {
            assert!(
                (profile.f[i] - closed.f.value(t)).abs() < 1e-9,
                "T={duration} dx={distance} t={t}"
            );
            assert!((profile.f1[i] - closed.f1.value(t)).abs() < 1e-9);
        }
        assert!(
            (profile.phi[profile.len() - 1] - reference.phi[reference.len() - 1]).abs() < 1e-8
        );
    }
}

#[test]
fn profile_derivative_consistency() {
    let spec = TransportSpec::new(10.0, 2.0 * PI).unwrap();
    let control = make_reference_transport(spec).unwrap();
    let profile = volterra_response(&control, default_step(2.0 * PI)).unwrap();
    let fd = shuttlesim::numeric::derivative(&profile.f, profile.step).unwrap();
    for (i, (a, b)) in fd.iter().zip(&profile.f1).enumerate() {
        assert!((a - b).abs() < 1e-8, "i={i}");
    }
    let fd2 = shuttlesim::numeric::derivative(&profile.f1, profile.step).unwrap();
    for (i, (a, b)) in fd2.iter().zip(&profile.f2).enumerate() {
        assert!((a - b).abs() < 1e-7, "i={i}");
    }
}

#[test]
fn staircase_response_matches_per_segment_algebra() {
    let duration = commensurate_time(1).unwrap();
    let steps = 8usize;
    let levels: Vec<f64> =
        (0..=steps).map(|n| 10.0 * (n as f64 / steps as f64).powi(2)).collect();
    let sc = StepwiseControl::new(levels.clone(), duration, None).unwrap();
    let control = ControlSignal::stepwise(sc);
    let profile = volterra_response(&control, duration / 4096.0).unwrap();

    // Exact convolution of a staircase: each constant segment [a, b] with
    // level v contributes v (cos(t-b') - cos(t-a)) to F, b' = min(b, t).
    let seg = duration / steps as f64;
    let bounds: Vec<(f64, f64, f64)> = (0..=steps)
        .map(|n| {
            let lo = if n == 0 { 0.0 } else { (n as f64 - 0.5) * seg };
            let hi = if n == steps { duration } else { (n as f64 + 0.5) * seg };
            (lo, hi, levels[n])
        })
        .collect();
    let exact_f = |t: f64| {
        bounds
            .iter()
            .filter(|(lo, _, _)| *lo < t)
            .map(|&(lo, hi, v)| v * ((t - hi.min(t)).cos() - (t - lo).cos()))
            .sum::<f64>()
    };
    let exact_f1 = |t: f64| {
        bounds
            .iter()
            .filter(|(lo, _, _)| *lo < t)
            .map(|&(lo, hi, v)| v * ((t - lo).sin() - (t - hi.min(t)).sin()))
            .sum::<f64>()
    };
    for (i, t) in profile.times().enumerate() {
        assert!((profile.f[i] - exact_f(t)).abs() < 1e-10, "t={t}");
        assert!((profile.f1[i] - exact_f1(t)).abs() < 1e-10, "t={t}");
    }
}

#[test]
fn response_is_linear_in_the_control() {
    let duration = 2.0 * PI;
    let step = duration / 512.0;
    let w1 = Waveform {
        offset: 0.3,
        slope: 0.7,
        terms: vec![HarmonicTerm { omega: 1.3, sin_amp: 0.4, cos_amp: -0.2 }],
    };
    let w2 = Waveform {
        offset: -1.1,
        slope: 0.1,
        terms: vec![HarmonicTerm { omega: 2.9, sin_amp: -0.6, cos_amp: 0.5 }],
    };
    let (alpha, beta) = (1.75, -0.4);
    let scale = |w: &Waveform, k: f64| Waveform {
        offset: k * w.offset,
        slope: k * w.slope,
        terms: w
            .terms
            .iter()
            .map(|t| HarmonicTerm {
                omega: t.omega,
                sin_amp: k * t.sin_amp,
                cos_amp: k * t.cos_amp,
            })
            .collect(),
    };
    let combo = scale(&w1, alpha).add(&scale(&w2, beta));

    let p1 = volterra_response(&ControlSignal::closed(w1, duration).unwrap(), step).unwrap();
    let p2 = volterra_response(&ControlSignal::closed(w2, duration).unwrap(), step).unwrap();
    let pc = volterra_response(&ControlSignal::closed(combo, duration).unwrap(), step).unwrap();
    for i in 0..pc.len() {
        let want = alpha * p1.f[i] + beta * p2.f[i];
        assert!((pc.f[i] - want).abs() < 1e-12, "i={i}");
    }
}

#[test]
fn round_trip_profile_to_control_to_profile() {
    let spec = TransportSpec::new(4.0, 5.0).unwrap();
    let profile = make_reference_profile(spec).unwrap();
    let control = control_from_profile(&profile).unwrap();
    assert!(matches!(control.form(), ControlForm::Closed(_)));
    let redone = volterra_response(&control, default_step(5.0)).unwrap();
    for i in 0..redone.len() {
        assert!((redone.f[i] - profile.f[i]).abs() < 1e-9, "i={i}");
    }

    let redone_twice = volterra_response(&control, default_step(5.0)).unwrap();
    assert_eq!(redone.f, redone_twice.f);
    assert_eq!(redone.phi, redone_twice.phi);
}

#[test]
fn generalized_harmonics_meet_the_boundary_conditions() {
    for harmonics in 2..=6 {
        let spec = TransportSpec::new(10.0, 2.0 * PI).unwrap();
        let profile = make_reference_profile_harmonics(spec, harmonics).unwrap();
        assert!(
            profile.boundary().is_perfect(10.0, 1e-9),
            "harmonics={harmonics}"
        );
    }
    assert!(make_reference_profile_harmonics(
        TransportSpec::new(1.0, 5.0).unwrap(),
        1
    )
    .is_err());
}

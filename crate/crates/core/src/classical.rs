//! Classical motion of the trapped particle: x' = p, p' = D(t) - x.
//!
//! Runge-Kutta integration cross-checks the closed-form solution
//! x = x0 cos t + p0 sin t + F(t), and the comoving frame (x - D, p) gives
//! the phase-space picture in which perfect transport closes its loop.

use crate::control::{ControlSignal, ForcedProfile};
use crate::error::{Result, SimError};

/// Default interval count for trajectory grids.
pub const DEFAULT_TRAJECTORY_INTERVALS: usize = 1 << 14;

/// Classical state at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSpacePoint {
    pub x: f64,
    pub p: f64,
    pub t: f64,
}

/// Uniformly sampled phase-space history starting at t = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub points: Vec<PhaseSpacePoint>,
    pub step: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn final_point(&self) -> PhaseSpacePoint {
        *self.points.last().expect("trajectories are never empty")
    }
}

fn resolve_grid(duration: f64, step: f64) -> Result<(usize, f64)> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(SimError::Control(format!("non-positive step {step}")));
    }
    let intervals = (duration / step).round();
    if intervals < 1.0 || (intervals * step - duration).abs() > 1e-9 * duration {
        return Err(SimError::Control(format!(
            "step {step} does not divide duration {duration}"
        )));
    }
    Ok((intervals as usize, duration / intervals))
}

/// Fourth-order Runge-Kutta integration of the driven oscillator from
/// (x0, p0), sampled every `step`.
///
/// Staircase controls are integrated with sub-steps split at the jumps, so
/// no stage ever straddles a discontinuity.
pub fn integrate_trajectory(
    x0: f64,
    p0: f64,
    control: &ControlSignal,
    step: f64,
) -> Result<Trajectory> {
    let duration = control.duration();
    let (intervals, h) = resolve_grid(duration, step)?;
    let breaks = control.breakpoints();

    let mut x = x0;
    let mut p = p0;
    let mut points = Vec::with_capacity(intervals + 1);
    points.push(PhaseSpacePoint { x, p, t: 0.0 });

    for i in 0..intervals {
        let t0 = i as f64 * h;
        let t1 = (i + 1) as f64 * h;
        let first = breaks.partition_point(|&b| b <= t0);
        let mut lo = t0;
        for &b in breaks[first..].iter().take_while(|&&b| b < t1) {
            rk4_span(&mut x, &mut p, lo, b, control)?;
            lo = b;
        }
        rk4_span(&mut x, &mut p, lo, t1, control)?;
        points.push(PhaseSpacePoint { x, p, t: t1 });
    }
    Ok(Trajectory { points, step: h })
}

fn rk4_span(x: &mut f64, p: &mut f64, a: f64, b: f64, control: &ControlSignal) -> Result<()> {
    let h = b - a;
    if h <= 0.0 {
        return Ok(());
    }
    let da = control.value(a)?;
    let dm = control.value(0.5 * (a + b))?;
    let db = control.value_before(b)?;

    let (kx1, kp1) = (*p, da - *x);
    let (kx2, kp2) = (*p + 0.5 * h * kp1, dm - (*x + 0.5 * h * kx1));
    let (kx3, kp3) = (*p + 0.5 * h * kp2, dm - (*x + 0.5 * h * kx2));
    let (kx4, kp4) = (*p + h * kp3, db - (*x + h * kx3));

    *x += h / 6.0 * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
    *p += h / 6.0 * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4);
    Ok(())
}

/// Closed-form solution on a uniform grid: free oscillation about the origin
/// plus the forced response.
pub fn analytic_trajectory(
    x0: f64,
    p0: f64,
    profile: &ForcedProfile,
    step: f64,
) -> Result<Trajectory> {
    let (intervals, h) = resolve_grid(profile.duration, step)?;
    let points = (0..=intervals)
        .map(|i| {
            let t = i as f64 * h;
            let (s, c) = t.sin_cos();
            PhaseSpacePoint {
                x: x0 * c + p0 * s + profile.f_at(t),
                p: -x0 * s + p0 * c + profile.f1_at(t),
                t,
            }
        })
        .collect();
    Ok(Trajectory { points, step: h })
}

/// Shifts positions into the frame of the moving well: (x - D(t), p).
pub fn comoving_frame(trajectory: &Trajectory, control: &ControlSignal) -> Result<Trajectory> {
    if trajectory.is_empty() {
        return Err(SimError::GridMismatch);
    }
    let t_end = trajectory.final_point().t;
    if (t_end - control.duration()).abs() > 1e-9 * control.duration().max(1.0) {
        return Err(SimError::GridMismatch);
    }
    let points = trajectory
        .points
        .iter()
        .map(|pt| {
            Ok(PhaseSpacePoint { x: pt.x - control.value(pt.t)?, p: pt.p, t: pt.t })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { points, step: trajectory.step })
}

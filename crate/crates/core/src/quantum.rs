//! Wavefunctions in the moving well and their evolution.
//!
//! Two independent engines: the closed-form propagator, which translates an
//! eigenstate by F(t) and attaches the accumulated phase, and a Strang-split
//! spectral integrator of the time-dependent Schrodinger equation. Agreement
//! between them validates both.

use crate::control::{kinematic_phase, ControlSignal, ForcedProfile};
use crate::error::{Result, SimError};
use crate::numeric::simpson;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Default spatial resolution.
pub const DEFAULT_GRID_POINTS: usize = 4096;

/// Default time-step count for the spectral engine over one run.
pub const DEFAULT_TIME_INTERVALS: usize = 1 << 16;

/// Highest eigenstate order the Hermite recurrence supports at default grids.
pub const MAX_EIGENSTATE: usize = 60;

/// Margin in oscillator lengths added on both sides of the transport range.
pub const GRID_MARGIN: f64 = 12.0;

const EDGE_TOLERANCE: f64 = 1e-8;
const NORM_TOLERANCE: f64 = 1e-9;
const STEP_NORM_DRIFT: f64 = 1e-10;

/// Uniform spatial grid; x_i = min + i step, the upper edge excluded as the
/// periodic wrap point of the spectral representation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl SpatialGrid {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if !points.is_power_of_two() || points < 256 {
            return Err(SimError::Grid(format!(
                "points must be a power of two of at least 256, got {points}"
            )));
        }
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(SimError::Grid(format!("bad extent [{min}, {max}]")));
        }
        Ok(Self { min, max, points })
    }

    /// Grid wide enough for the whole transport: covers the well center's
    /// full range and the initial origin, plus margin on both sides.
    pub fn for_transport(control: &ControlSignal, points: usize) -> Result<Self> {
        let samples = 4097;
        let duration = control.duration();
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        for i in 0..samples {
            let v = control.value(duration * i as f64 / (samples - 1) as f64)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Self::new(lo.floor() - GRID_MARGIN, hi.ceil() + GRID_MARGIN, points)
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.points as f64
    }

    pub fn position(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step()
    }

    /// Wavenumbers in FFT ordering.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points;
        let dk = 2.0 * std::f64::consts::PI / (self.max - self.min);
        (0..n)
            .map(|j| {
                let j = if j < n / 2 { j as isize } else { j as isize - n as isize };
                j as f64 * dk
            })
            .collect()
    }
}

/// Complex amplitudes on a spatial grid at one instant.
#[derive(Clone, Debug)]
pub struct WaveFunction {
    pub grid: SpatialGrid,
    pub amplitudes: Vec<C64>,
    pub time: f64,
}

impl WaveFunction {
    pub fn norm(&self) -> f64 {
        simpson(&self.density(), self.grid.step())
            .expect("grids hold at least 256 samples")
            .sqrt()
    }

    /// Overlap integral of `self` against `other` on the shared grid.
    pub fn inner(&self, other: &WaveFunction) -> Result<C64> {
        if self.grid != other.grid {
            return Err(SimError::GridMismatch);
        }
        let product: Vec<C64> = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .collect();
        simpson(&product, self.grid.step())
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Checks the state invariants: unit norm and negligible weight at the
    /// grid edges.
    pub fn validate(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(SimError::Unnormalized { norm });
        }
        let edge = self.amplitudes[0]
            .norm()
            .max(self.amplitudes[self.amplitudes.len() - 1].norm());
        if edge > EDGE_TOLERANCE {
            return Err(SimError::BoundaryLeakage { weight: edge });
        }
        Ok(())
    }
}

/// Normalized oscillator eigenstate of order `n` centered at `center`,
/// built by the stable three-term recurrence on Hermite functions.
pub fn eigenstate(n: usize, grid: SpatialGrid, center: f64) -> Result<WaveFunction> {
    if n > MAX_EIGENSTATE {
        return Err(SimError::EigenstateOrder { n, max: MAX_EIGENSTATE });
    }
    let quartic_root_pi = std::f64::consts::PI.powf(-0.25);
    let amplitudes: Vec<C64> = (0..grid.points)
        .map(|i| {
            let xi = grid.position(i) - center;
            let mut prev = quartic_root_pi * (-0.5 * xi * xi).exp();
            if n == 0 {
                return C64::new(prev, 0.0);
            }
            let mut cur = std::f64::consts::SQRT_2 * xi * prev;
            for k in 2..=n {
                let k = k as f64;
                let next = (2.0 / k).sqrt() * xi * cur - ((k - 1.0) / k).sqrt() * prev;
                prev = cur;
                cur = next;
            }
            C64::new(cur, 0.0)
        })
        .collect();
    let psi = WaveFunction { grid, amplitudes, time: 0.0 };
    psi.validate()?;
    Ok(psi)
}

/// Normalized linear combination of states sharing a grid and a time.
pub fn superpose(coefficients: &[C64], states: &[WaveFunction]) -> Result<WaveFunction> {
    if coefficients.len() != states.len() || states.is_empty() {
        return Err(SimError::LengthMismatch { left: coefficients.len(), right: states.len() });
    }
    let first = &states[0];
    let mut amplitudes = vec![C64::new(0.0, 0.0); first.grid.points];
    for (c, state) in coefficients.iter().zip(states) {
        if state.grid != first.grid {
            return Err(SimError::GridMismatch);
        }
        if (state.time - first.time).abs() > 1e-9 {
            return Err(SimError::Control(format!(
                "superposed states live at different times {} and {}",
                first.time, state.time
            )));
        }
        for (a, b) in amplitudes.iter_mut().zip(&state.amplitudes) {
            *a += c * b;
        }
    }
    let out = WaveFunction { grid: first.grid, amplitudes, time: first.time };
    out.validate()?;
    Ok(out)
}

fn plan_pair(points: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (planner.plan_fft_forward(points), planner.plan_fft_inverse(points))
}

/// Rigid spatial translation by `shift`, applied as a phase ramp in the
/// momentum representation; exact for any fractional shift.
pub fn translate(psi: &WaveFunction, shift: f64) -> Result<WaveFunction> {
    let n = psi.grid.points;
    let (fwd, inv) = plan_pair(n);
    let mut buf = psi.amplitudes.clone();
    fwd.process(&mut buf);
    for (b, k) in buf.iter_mut().zip(psi.grid.wavenumbers()) {
        *b *= C64::from_polar(1.0, -k * shift);
    }
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    for b in buf.iter_mut() {
        *b *= scale;
    }
    let out = WaveFunction { grid: psi.grid, amplitudes: buf, time: psi.time };
    out.validate()?;
    Ok(out)
}

/// Closed-form propagation of eigenstate `n` from the origin: the state at
/// time `t` is the initial eigenstate translated by F(t), carrying the
/// momentum boost F'(t) and the accumulated global phase.
pub fn analytic_evolve(
    n: usize,
    profile: &ForcedProfile,
    t: f64,
    grid: SpatialGrid,
) -> Result<WaveFunction> {
    let f = profile.f_at(t);
    let f1 = profile.f1_at(t);
    let phi = kinematic_phase(profile, t)?;
    let energy = n as f64 + 0.5;

    let base = eigenstate(n, grid, 0.0)?;
    let mut moved = translate(&base, f)?;
    let global = -(energy * t + 0.5 * phi);
    for (i, a) in moved.amplitudes.iter_mut().enumerate() {
        *a *= C64::from_polar(1.0, global + f1 * grid.position(i));
    }
    moved.time = t;
    moved.validate()?;
    Ok(moved)
}

/// Strang-split spectral integration of the Schrodinger equation under the
/// given well-center control, returning snapshots at the requested times.
///
/// Each step applies a potential half-step with the well frozen at the
/// step's midpoint time, a full kinetic step in the momentum representation,
/// and the potential half-step again. Steps never straddle a staircase
/// break. Snapshot times must be ascending and inside [psi0.time, t_final].
pub fn numeric_evolve(
    psi0: &WaveFunction,
    control: &ControlSignal,
    t_final: f64,
    dt: f64,
    snapshot_times: &[f64],
) -> Result<Vec<WaveFunction>> {
    psi0.validate()?;
    let start = psi0.time;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SimError::Control(format!("non-positive time step {dt}")));
    }
    if t_final < start {
        return Err(SimError::OutOfDomain { t: t_final, limit: start });
    }
    let slack = 1e-9 * (t_final - start).max(1.0);
    for pair in snapshot_times.windows(2) {
        if pair[1] + slack < pair[0] {
            return Err(SimError::Control("snapshot times must be ascending".into()));
        }
    }
    if let (Some(&first), Some(&last)) = (snapshot_times.first(), snapshot_times.last()) {
        if first < start - slack || last > t_final + slack {
            return Err(SimError::OutOfDomain { t: last.max(first), limit: t_final });
        }
    }

    let grid = psi0.grid;
    let n = grid.points;
    let (fwd, inv) = plan_pair(n);
    let inv_scale = 1.0 / n as f64;
    let wavenumbers = grid.wavenumbers();
    let positions: Vec<f64> = (0..n).map(|i| grid.position(i)).collect();

    let mut events: Vec<f64> = control
        .breakpoints()
        .into_iter()
        .filter(|&b| b > start + slack && b < t_final - slack)
        .chain(snapshot_times.iter().map(|&s| s.clamp(start, t_final)))
        .chain(std::iter::once(t_final))
        .collect();
    events.sort_by(|a, b| a.partial_cmp(b).expect("event times are finite"));

    let mut psi = psi0.amplitudes.clone();
    let mut out = Vec::with_capacity(snapshot_times.len());
    let mut snap_idx = 0;
    let flush = |cur: f64, psi: &Vec<C64>, snap_idx: &mut usize, out: &mut Vec<WaveFunction>| {
        while *snap_idx < snapshot_times.len() && snapshot_times[*snap_idx] <= cur + slack {
            out.push(WaveFunction {
                grid,
                amplitudes: psi.clone(),
                time: snapshot_times[*snap_idx],
            });
            *snap_idx += 1;
        }
    };
    flush(start, &psi, &mut snap_idx, &mut out);

    let mut cur = start;
    let mut norm_prev = {
        let s: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        (s * grid.step()).sqrt()
    };
    let mut kinetic = vec![C64::new(0.0, 0.0); n];
    let mut half_potential = vec![C64::new(0.0, 0.0); n];

    for &event in &events {
        if event > cur + slack {
            let span = event - cur;
            let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for (k, factor) in wavenumbers.iter().zip(kinetic.iter_mut()) {
                *factor = C64::from_polar(1.0, -0.5 * k * k * h);
            }
            for s in 0..steps {
                let midpoint = cur + (s as f64 + 0.5) * h;
                let well = control.value(midpoint)?;
                for (x, factor) in positions.iter().zip(half_potential.iter_mut()) {
                    let dx = x - well;
                    *factor = C64::from_polar(1.0, -0.25 * dx * dx * h);
                }
                for (a, f) in psi.iter_mut().zip(&half_potential) {
                    *a *= f;
                }
                fwd.process(&mut psi);
                for (a, f) in psi.iter_mut().zip(&kinetic) {
                    *a *= f;
                }
                inv.process(&mut psi);
                for (a, f) in psi.iter_mut().zip(&half_potential) {
                    *a *= f * inv_scale;
                }

                let norm = {
                    let sum: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
                    (sum * grid.step()).sqrt()
                };
                if (norm - norm_prev).abs() > STEP_NORM_DRIFT {
                    return Err(SimError::Unnormalized { norm });
                }
                norm_prev = norm;
                let edge = psi[0].norm().max(psi[n - 1].norm());
                if edge > EDGE_TOLERANCE {
                    return Err(SimError::BoundaryLeakage { weight: edge });
                }
            }
            cur = event;
        }
        flush(cur, &psi, &mut snap_idx, &mut out);
    }
    Ok(out)
}

/// Measurable quantities of a state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observable {
    Position,
    Momentum,
    /// Energy of the instantaneous Hamiltonian with the well at this center.
    Energy { well_center: f64 },
}

/// Expectation value over a normalized state; position and potential terms
/// by grid quadrature, momentum terms spectrally.
pub fn expectation(psi: &WaveFunction, observable: Observable) -> Result<f64> {
    psi.validate()?;
    let h = psi.grid.step();
    match observable {
        Observable::Position => {
            let integrand: Vec<f64> = psi
                .amplitudes
                .iter()
                .enumerate()
                .map(|(i, a)| psi.grid.position(i) * a.norm_sqr())
                .collect();
            simpson(&integrand, h)
        }
        Observable::Momentum => Ok(momentum_moments(psi).0),
        Observable::Energy { well_center } => {
            let kinetic = 0.5 * momentum_moments(psi).1;
            let integrand: Vec<f64> = psi
                .amplitudes
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let dx = psi.grid.position(i) - well_center;
                    dx * dx * a.norm_sqr()
                })
                .collect();
            Ok(kinetic + 0.5 * simpson(&integrand, h)?)
        }
    }
}

fn momentum_moments(psi: &WaveFunction) -> (f64, f64) {
    let n = psi.grid.points;
    let (fwd, _) = plan_pair(n);
    let mut buf = psi.amplitudes.clone();
    fwd.process(&mut buf);
    let weight = psi.grid.step() / n as f64;
    let mut first = 0.0;
    let mut second = 0.0;
    for (b, k) in buf.iter().zip(psi.grid.wavenumbers()) {
        let w = b.norm_sqr() * weight;
        first += k * w;
        second += k * k * w;
    }
    (first, second)
}

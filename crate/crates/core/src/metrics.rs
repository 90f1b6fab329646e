//! Fidelity measures for transported states: pure-state overlaps, the
//! instantaneous-ground-state diagnostic, superposition phase fidelity, and
//! Uhlmann fidelity for eigenstate mixtures.

use crate::control::{ControlSignal, TransportSpec};
use crate::error::{Result, SimError};
use crate::quantum::{eigenstate, WaveFunction};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Extra displaced-eigenstate levels kept above the highest mixture order;
/// the leakage check validates the choice on every call.
pub const TRUNCATION_MARGIN: usize = 10;

/// Width of the band above 1 tolerated as quadrature rounding; anything
/// beyond it is treated as a bug, never clamped.
pub const ROUNDING_GUARD: f64 = 1e-12;

const LEAKAGE_LIMIT: f64 = 1e-6;
const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Coherent superposition of eigenstates, coefficient n at index n.
#[derive(Clone, Debug)]
pub struct SuperpositionSpec {
    pub coefficients: Vec<C64>,
}

impl SuperpositionSpec {
    pub fn new(coefficients: Vec<C64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(SimError::Spec("superposition needs coefficients".into()));
        }
        let total: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(SimError::Spec(format!(
                "superposition weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { coefficients })
    }
}

/// Incoherent mixture of eigenstates, weight n at index n.
#[derive(Clone, Debug)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(SimError::Spec("mixture needs weights".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(SimError::Spec(format!("negative mixture weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(SimError::Spec(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Boltzmann weights exp(-n/theta) over orders 0..=max_level.
    pub fn thermal(theta: f64, max_level: usize) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(SimError::Spec(format!("nonpositive temperature {theta}")));
        }
        let raw: Vec<f64> = (0..=max_level).map(|n| (-(n as f64) / theta).exp()).collect();
        let total: f64 = raw.iter().sum();
        Self::new(raw.into_iter().map(|w| w / total).collect())
    }
}

/// Sampled fidelity-versus-time curve.
#[derive(Clone, Debug)]
pub struct FidelityTrace {
    pub points: Vec<(f64, f64)>,
}

impl FidelityTrace {
    /// Point with the smallest fidelity.
    pub fn minimum(&self) -> Option<(f64, f64)> {
        self.points
            .iter()
            .copied()
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("fidelities are finite"))
    }

    pub fn final_point(&self) -> Option<(f64, f64)> {
        self.points.last().copied()
    }
}

/// Mixed-state fidelity together with the share of trace the truncated
/// basis failed to capture.
#[derive(Clone, Copy, Debug)]
pub struct MixedStateFidelity {
    pub fidelity: f64,
    pub leakage: f64,
}

fn guard_fidelity(raw: f64) -> Result<f64> {
    if !raw.is_finite() || !(-ROUNDING_GUARD..=1.0 + ROUNDING_GUARD).contains(&raw) {
        return Err(SimError::FidelityRange { value: raw });
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// Squared overlap of the final state with eigenstate `n` displaced to the
/// transport target.
pub fn transport_fidelity(final_state: &WaveFunction, n: usize, spec: TransportSpec) -> Result<f64> {
    final_state.validate()?;
    let target = eigenstate(n, final_state.grid, spec.distance)?;
    guard_fidelity(target.inner(final_state)?.norm_sqr())
}

/// Squared overlap of each snapshot with the ground state of the well at
/// its instantaneous center.
pub fn instantaneous_ground_fidelity(
    snapshots: &[WaveFunction],
    control: &ControlSignal,
) -> Result<FidelityTrace> {
    let mut points = Vec::with_capacity(snapshots.len());
    for snapshot in snapshots {
        if let Some(&(prev, _)) = points.last() {
            if snapshot.time <= prev {
                return Err(SimError::Control("snapshot times must be ascending".into()));
            }
        }
        let ground = eigenstate(0, snapshot.grid, control.value(snapshot.time)?)?;
        points.push((snapshot.time, guard_fidelity(ground.inner(snapshot)?.norm_sqr())?));
    }
    Ok(FidelityTrace { points })
}

/// Fidelity of a transported superposition against its displaced original
/// under perfect transport: |sum of |c_n|^2 exp(-i n T)|^2. Eigenstate n
/// picks up the relative phase -nT, so the overlap depends only on the
/// weights and T modulo one trap period.
pub fn superposition_fidelity(spec: &SuperpositionSpec, duration: f64) -> f64 {
    let reduced = duration.rem_euclid(2.0 * PI);
    let sum: C64 = spec
        .coefficients
        .iter()
        .enumerate()
        .map(|(n, c)| C64::from_polar(c.norm_sqr(), -(n as f64) * reduced))
        .sum();
    sum.norm_sqr()
}

/// Uhlmann fidelity between the intended mixture, displaced to the target,
/// and the mixture assembled from the evolved eigenstates.
///
/// Both density matrices are projected onto displaced eigenstates up to
/// `TRUNCATION_MARGIN` levels above the mixture; the trace lost to that
/// projection is returned and bounded.
///
/// With the target density diagonal in that basis, tr sqrt(sqrt(r1) r2
/// sqrt(r1)) equals the sum of singular values of sqrt(r1) L for any factor
/// L with L L* = r2, so the fidelity comes from one SVD of the scaled
/// projection matrix and no matrix square root is ever formed.
pub fn mixed_state_fidelity(
    spec: &MixtureSpec,
    finals: &[WaveFunction],
    transport: TransportSpec,
) -> Result<MixedStateFidelity> {
    if finals.len() != spec.weights.len() {
        return Err(SimError::LengthMismatch { left: spec.weights.len(), right: finals.len() });
    }
    let grid = finals[0].grid;
    let basis_size = spec.weights.len() + TRUNCATION_MARGIN;
    let basis: Vec<WaveFunction> = (0..basis_size)
        .map(|j| eigenstate(j, grid, transport.distance))
        .collect::<Result<_>>()?;
    let root_row = |j: usize| spec.weights.get(j).map_or(0.0, |w| w.sqrt());

    let mut factor = DMatrix::<f64>::zeros(2 * basis_size, 2 * spec.weights.len());
    let mut captured = 0.0;
    for (n, (weight, state)) in spec.weights.iter().zip(finals).enumerate() {
        state.validate()?;
        let projection: Vec<C64> = basis
            .iter()
            .map(|b| b.inner(state))
            .collect::<Result<_>>()?;
        captured += weight * projection.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let scale = weight.sqrt();
        for (j, c) in projection.iter().enumerate() {
            let w = root_row(j) * scale;
            factor[(j, 2 * n)] = w * c.re;
            factor[(j + basis_size, 2 * n)] = w * c.im;
            factor[(j, 2 * n + 1)] = -w * c.im;
            factor[(j + basis_size, 2 * n + 1)] = w * c.re;
        }
    }
    let leakage = 1.0 - captured;
    if leakage > LEAKAGE_LIMIT {
        return Err(SimError::TruncationLeakage { leakage });
    }

    let trace_root: f64 = factor.singular_values().iter().sum();
    let fidelity = guard_fidelity((0.5 * trace_root).powi(2))?;
    Ok(MixedStateFidelity { fidelity, leakage })
}

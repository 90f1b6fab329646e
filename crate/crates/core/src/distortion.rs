//! Control distortions mimicking real waveform hardware.
//!
//! Each model is a pure control-to-control transform: a derivative term from
//! a finite driver bandwidth, a staircase from a discrete update rate with
//! optional exponential relaxation, and an additive periodic error from
//! imperfect synthesis.

use crate::control::{
    ControlForm, ControlSignal, HarmonicTerm, SampledControl, StepwiseControl, Waveform,
};
pub use crate::control::{SmoothingKernel, SmoothingShape};
use crate::error::{Result, SimError};
use crate::numeric;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default harmonic count for the additive periodic error.
pub const DEFAULT_FOURIER_HARMONICS: usize = 4;

/// Proximity threshold for flagging an error harmonic resonant with the trap.
pub const RESONANCE_TOLERANCE: f64 = 1e-9;

/// Adds a term proportional to the control's time derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeModel {
    pub alpha: f64,
}

impl DerivativeModel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(SimError::Model(format!("non-finite alpha {alpha}")));
        }
        Ok(Self { alpha })
    }
}

/// Casts the control into N+1 constant segments, optionally relaxing toward
/// each new level with the given kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiecewiseModel {
    pub steps: usize,
    pub smoothing: Option<SmoothingKernel>,
}

impl PiecewiseModel {
    pub fn new(steps: usize, smoothing: Option<SmoothingKernel>) -> Result<Self> {
        if steps < 2 {
            return Err(SimError::Model(format!("need at least 2 steps, got {steps}")));
        }
        Ok(Self { steps, smoothing })
    }
}

/// One harmonic of the additive periodic error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierComponent {
    pub harmonic: usize,
    pub sin_amp: f64,
    pub cos_amp: f64,
}

/// Adds a periodic error g(t), a harmonic series over a fundamental period.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierModel {
    pub components: Vec<FourierComponent>,
    pub period: f64,
}

impl FourierModel {
    pub fn new(components: Vec<FourierComponent>, period: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(SimError::Model("empty component list".into()));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(SimError::Model(format!("non-positive period {period}")));
        }
        for c in &components {
            if c.harmonic < 1 {
                return Err(SimError::Model("harmonic index must be at least 1".into()));
            }
            if !c.sin_amp.is_finite() || !c.cos_amp.is_finite() {
                return Err(SimError::Model("non-finite amplitude".into()));
            }
        }
        Ok(Self { components, period })
    }

    /// Draws sine and cosine amplitudes uniformly from [-1, 1] for harmonics
    /// 1..=`harmonics`, reproducibly for a fixed seed.
    pub fn seeded(harmonics: usize, period: f64, seed: u64) -> Result<Self> {
        if harmonics < 1 {
            return Err(SimError::Model("need at least 1 harmonic".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let components = (1..=harmonics)
            .map(|m| FourierComponent {
                harmonic: m,
                sin_amp: rng.gen_range(-1.0..=1.0),
                cos_amp: rng.gen_range(-1.0..=1.0),
            })
            .collect();
        Self::new(components, period)
    }

    fn error_waveform(&self) -> Waveform {
        let base = 2.0 * std::f64::consts::PI / self.period;
        Waveform {
            offset: 0.0,
            slope: 0.0,
            terms: self
                .components
                .iter()
                .map(|c| HarmonicTerm {
                    omega: base * c.harmonic as f64,
                    sin_amp: c.sin_amp,
                    cos_amp: c.cos_amp,
                })
                .collect(),
        }
    }

    /// Harmonic indices whose frequency sits on the trap frequency, where
    /// the added error drives the oscillator resonantly.
    pub fn resonant_components(&self) -> Vec<usize> {
        let base = 2.0 * std::f64::consts::PI / self.period;
        self.components
            .iter()
            .filter(|c| (base * c.harmonic as f64 - 1.0).abs() < RESONANCE_TOLERANCE)
            .map(|c| c.harmonic)
            .collect()
    }
}

/// Distorts the control to d + alpha d'.
pub fn apply_derivative_model(
    control: &ControlSignal,
    model: &DerivativeModel,
) -> Result<ControlSignal> {
    match control.form() {
        ControlForm::Closed(w) => {
            let distorted = w.add(&w.differentiate().scale(model.alpha));
            ControlSignal::closed(distorted, control.duration())
        }
        ControlForm::Sampled(sc) => {
            let slope = numeric::derivative(&sc.values, sc.step)?;
            let values: Vec<f64> = sc
                .values
                .iter()
                .zip(&slope)
                .map(|(v, s)| v + model.alpha * s)
                .collect();
            Ok(ControlSignal::sampled(SampledControl::new(values, sc.step)?))
        }
        ControlForm::Stepwise(_) => Err(SimError::Model(
            "derivative model needs a differentiable control, not a staircase".into(),
        )),
    }
}

/// Casts the control into its staircase form: constant d(t_n) on the segment
/// centered at t_n = nT/N, half-width segments at both ends.
pub fn apply_piecewise_model(
    control: &ControlSignal,
    model: &PiecewiseModel,
) -> Result<ControlSignal> {
    Ok(ControlSignal::stepwise(staircase_of(control, model.steps, None)?))
}

/// Staircase cast with relaxation: each segment starts at the previous level
/// and decays toward the new one.
pub fn apply_smoothed_piecewise(
    control: &ControlSignal,
    model: &PiecewiseModel,
) -> Result<ControlSignal> {
    let kernel = model
        .smoothing
        .ok_or_else(|| SimError::Model("smoothing kernel missing".into()))?;
    Ok(ControlSignal::stepwise(staircase_of(control, model.steps, Some(kernel))?))
}

fn staircase_of(
    control: &ControlSignal,
    steps: usize,
    relaxation: Option<SmoothingKernel>,
) -> Result<StepwiseControl> {
    if steps < 2 {
        return Err(SimError::Model(format!("need at least 2 steps, got {steps}")));
    }
    let duration = control.duration();
    let levels: Result<Vec<f64>> = (0..=steps)
        .map(|n| control.value(n as f64 * duration / steps as f64))
        .collect();
    StepwiseControl::new(levels?, duration, relaxation)
}

/// Adds the model's periodic error to the control.
pub fn apply_fourier_model(
    control: &ControlSignal,
    model: &FourierModel,
) -> Result<ControlSignal> {
    let g = model.error_waveform();
    match control.form() {
        ControlForm::Closed(w) => ControlSignal::closed(w.add(&g), control.duration()),
        ControlForm::Sampled(sc) => {
            let values: Vec<f64> = sc
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| v + g.value(i as f64 * sc.step))
                .collect();
            Ok(ControlSignal::sampled(SampledControl::new(values, sc.step)?))
        }
        ControlForm::Stepwise(_) => Err(SimError::Model(
            "periodic error on a staircase control is not representable".into(),
        )),
    }
}

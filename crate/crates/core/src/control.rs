//! Well-center controls and their forced response.
//!
//! A control is the trajectory of the trap minimum, d(t) or its distorted
//! counterpart D(t). The forced response F(t) is the sine-kernel convolution
//! of the control; a control moves the particle by Δx and leaves it at rest
//! exactly when F and its derivatives meet the transport boundary values at
//! both ends. Everything is expressed in dimensionless oscillator units, so
//! the trap frequency is 1 and one trap period is 2π.

use crate::error::{Result, SimError};
use crate::numeric;

/// Default number of uniform samples on [0, T] for quadrature grids.
pub const DEFAULT_CONTROL_SAMPLES: usize = 4097;

const DOMAIN_SLACK: f64 = 1e-9;

/// Transport task parameters: move the well center by `distance` in time
/// `duration`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportSpec {
    pub distance: f64,
    pub duration: f64,
}

impl TransportSpec {
    pub fn new(distance: f64, duration: f64) -> Result<Self> {
        if !distance.is_finite() {
            return Err(SimError::Spec(format!("non-finite distance {distance}")));
        }
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(SimError::Spec(format!("non-positive duration {duration}")));
        }
        Ok(Self { distance, duration })
    }
}

/// Duration commensurate with the trap period: k full periods.
pub fn commensurate_time(k: u32) -> Result<f64> {
    if k < 1 {
        return Err(SimError::Spec("commensurate index must be at least 1".into()));
    }
    Ok(2.0 * std::f64::consts::PI * k as f64)
}

/// One harmonic component, A sin(ωt) + B cos(ωt).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicTerm {
    pub omega: f64,
    pub sin_amp: f64,
    pub cos_amp: f64,
}

/// Closed-form control: linear ramp plus harmonic components.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub offset: f64,
    pub slope: f64,
    pub terms: Vec<HarmonicTerm>,
}

impl Waveform {
    pub fn constant(level: f64) -> Waveform {
        Waveform { offset: level, slope: 0.0, terms: Vec::new() }
    }

    pub fn value(&self, t: f64) -> f64 {
        let mut v = self.offset + self.slope * t;
        for term in &self.terms {
            let (s, c) = (term.omega * t).sin_cos();
            v += term.sin_amp * s + term.cos_amp * c;
        }
        v
    }

    /// Term-by-term time derivative; stays in closed form.
    pub fn differentiate(&self) -> Waveform {
        Waveform {
            offset: self.slope,
            slope: 0.0,
            terms: self
                .terms
                .iter()
                .map(|term| HarmonicTerm {
                    omega: term.omega,
                    sin_amp: -term.cos_amp * term.omega,
                    cos_amp: term.sin_amp * term.omega,
                })
                .collect(),
        }
    }

    /// Pointwise scaling by a constant.
    pub fn scale(&self, k: f64) -> Waveform {
        Waveform {
            offset: k * self.offset,
            slope: k * self.slope,
            terms: self
                .terms
                .iter()
                .map(|t| HarmonicTerm {
                    omega: t.omega,
                    sin_amp: k * t.sin_amp,
                    cos_amp: k * t.cos_amp,
                })
                .collect(),
        }
    }

    /// Pointwise sum, merging harmonic terms that share a frequency.
    pub fn add(&self, other: &Waveform) -> Waveform {
        let mut terms = self.terms.clone();
        for term in &other.terms {
            match terms.iter_mut().find(|t| t.omega == term.omega) {
                Some(existing) => {
                    existing.sin_amp += term.sin_amp;
                    existing.cos_amp += term.cos_amp;
                }
                None => terms.push(*term),
            }
        }
        Waveform {
            offset: self.offset + other.offset,
            slope: self.slope + other.slope,
            terms,
        }
    }
}

/// Shape of the relaxation toward a new step level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmoothingShape {
    Exponential,
}

/// Relaxation kernel q(s): q(0) = 1, decreasing, applied over each step of a
/// staircase control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingKernel {
    pub shape: SmoothingShape,
    pub time_constant: f64,
}

impl SmoothingKernel {
    pub fn exponential(time_constant: f64) -> Result<Self> {
        if !(time_constant > 0.0) || !time_constant.is_finite() {
            return Err(SimError::Model(format!(
                "non-positive smoothing time constant {time_constant}"
            )));
        }
        Ok(Self { shape: SmoothingShape::Exponential, time_constant })
    }

    /// Kernel with the hardware-typical time constant T/(8N), fast enough to
    /// settle well within one step.
    pub fn default_for(duration: f64, steps: usize) -> Self {
        Self {
            shape: SmoothingShape::Exponential,
            time_constant: duration / (8.0 * steps as f64),
        }
    }

    pub fn evaluate(&self, s: f64) -> f64 {
        match self.shape {
            SmoothingShape::Exponential => (-s / self.time_constant).exp(),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self.shape {
            SmoothingShape::Exponential => -self.evaluate(s) / self.time_constant,
        }
    }
}

/// Staircase control: constant level d(t_n) on the segment centered at
/// t_n = nT/N, with half-width segments at both ends, optionally relaxing
/// toward each new level.
#[derive(Clone, Debug, PartialEq)]
pub struct StepwiseControl {
    pub levels: Vec<f64>,
    pub steps: usize,
    pub duration: f64,
    pub relaxation: Option<SmoothingKernel>,
}

impl StepwiseControl {
    pub fn new(
        levels: Vec<f64>,
        duration: f64,
        relaxation: Option<SmoothingKernel>,
    ) -> Result<Self> {
        if levels.len() < 3 {
            return Err(SimError::Model(format!(
                "staircase needs at least 2 steps, got {}",
                levels.len().saturating_sub(1)
            )));
        }
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(SimError::Model(format!("non-positive duration {duration}")));
        }
        let steps = levels.len() - 1;
        Ok(Self { levels, steps, duration, relaxation })
    }

    /// Segment boundaries, at half-integer multiples of T/N.
    pub fn breakpoints(&self) -> Vec<f64> {
        let h = self.duration / self.steps as f64;
        (1..=self.steps).map(|n| (n as f64 - 0.5) * h).collect()
    }

    fn segment(&self, t: f64) -> usize {
        // Rounding noise must not flip a break-point evaluation to the left
        // segment, so indices snap right within a tiny slack.
        let slack = DOMAIN_SLACK * self.duration;
        let idx = ((t + slack) * self.steps as f64 / self.duration + 0.5).floor();
        (idx.max(0.0) as usize).min(self.steps)
    }

    fn segment_start(&self, n: usize) -> f64 {
        (n as f64 - 0.5) * self.duration / self.steps as f64
    }

    fn eval_segment(&self, n: usize, t: f64) -> f64 {
        let level = self.levels[n];
        match (&self.relaxation, n) {
            (Some(kernel), n) if n >= 1 => {
                let jump = level - self.levels[n - 1];
                level - kernel.evaluate(t - self.segment_start(n)) * jump
            }
            _ => level,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_segment(self.segment(t), t)
    }

    /// Left-limit value, one segment back when `t` sits exactly on a break.
    pub fn eval_before(&self, t: f64) -> f64 {
        let n = self.segment(t);
        if n >= 1 && (t - self.segment_start(n)).abs() < DOMAIN_SLACK * self.duration {
            self.eval_segment(n - 1, t)
        } else {
            self.eval_segment(n, t)
        }
    }

    /// Within-segment slope, right-continuous at breaks.
    pub fn eval_slope(&self, t: f64) -> f64 {
        let n = self.segment(t);
        match (&self.relaxation, n) {
            (Some(kernel), n) if n >= 1 => {
                let jump = self.levels[n] - self.levels[n - 1];
                -kernel.derivative(t - self.segment_start(n)) * jump
            }
            _ => 0.0,
        }
    }
}

/// Uniformly sampled control on [0, T].
#[derive(Clone, Debug, PartialEq)]
pub struct SampledControl {
    pub values: Vec<f64>,
    pub step: f64,
}

impl SampledControl {
    pub fn new(values: Vec<f64>, step: f64) -> Result<Self> {
        if values.len() < 4 {
            return Err(SimError::Control(format!(
                "sampled control needs at least 4 samples, got {}",
                values.len()
            )));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(SimError::Control(format!("non-positive sample step {step}")));
        }
        Ok(Self { values, step })
    }

    pub fn duration(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn eval(&self, t: f64) -> f64 {
        numeric::interp_cubic(&self.values, self.step, t).expect("validated at construction")
    }
}

/// The representable control families.
#[derive(Clone, Debug, PartialEq)]
pub enum ControlForm {
    Closed(Waveform),
    Stepwise(StepwiseControl),
    Sampled(SampledControl),
}

/// A well-center trajectory on [0, T].
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSignal {
    form: ControlForm,
    duration: f64,
}

impl ControlSignal {
    pub fn closed(waveform: Waveform, duration: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(SimError::Control(format!("non-positive duration {duration}")));
        }
        Ok(Self { form: ControlForm::Closed(waveform), duration })
    }

    pub fn stepwise(staircase: StepwiseControl) -> Self {
        let duration = staircase.duration;
        Self { form: ControlForm::Stepwise(staircase), duration }
    }

    pub fn sampled(samples: SampledControl) -> Self {
        let duration = samples.duration();
        Self { form: ControlForm::Sampled(samples), duration }
    }

    pub fn form(&self) -> &ControlForm {
        &self.form
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    fn clamp_domain(&self, t: f64) -> Result<f64> {
        let slack = DOMAIN_SLACK * self.duration.max(1.0);
        if t < -slack || t > self.duration + slack {
            return Err(SimError::OutOfDomain { t, limit: self.duration });
        }
        Ok(t.clamp(0.0, self.duration))
    }

    /// Well-center position at `t`; right-continuous across staircase breaks.
    pub fn value(&self, t: f64) -> Result<f64> {
        let t = self.clamp_domain(t)?;
        Ok(self.eval(t))
    }

    /// Left-limit value at `t`, for integrators ending a span on a break.
    pub fn value_before(&self, t: f64) -> Result<f64> {
        let t = self.clamp_domain(t)?;
        Ok(match &self.form {
            ControlForm::Stepwise(sc) => sc.eval_before(t),
            _ => self.eval(t),
        })
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        match &self.form {
            ControlForm::Closed(w) => w.value(t),
            ControlForm::Stepwise(sc) => sc.eval(t),
            ControlForm::Sampled(sc) => sc.eval(t),
        }
    }

    /// Interior discontinuity locations; empty for smooth forms.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.form {
            ControlForm::Stepwise(sc) => sc.breakpoints(),
            _ => Vec::new(),
        }
    }
}

/// Forced response of a control: F and its first three derivatives plus the
/// accumulated phase, sampled on a uniform grid, with closed forms kept when
/// the source control had them.
#[derive(Clone, Debug)]
pub struct ForcedProfile {
    pub step: f64,
    pub duration: f64,
    pub f: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
    pub phi: Vec<f64>,
    pub closed: Option<ClosedProfile>,
}

/// Closed-form response family for analytically known controls.
#[derive(Clone, Debug)]
pub struct ClosedProfile {
    pub f: Waveform,
    pub f1: Waveform,
    pub f2: Waveform,
    pub f3: Waveform,
}

/// Endpoint values of F, F′, F″, F‴.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryConditions {
    pub start: [f64; 4],
    pub end: [f64; 4],
}

impl BoundaryConditions {
    /// Deviations from the perfect-transport set: all endpoint values zero
    /// except F(T) = distance.
    pub fn residuals(&self, distance: f64) -> [f64; 8] {
        [
            self.start[0],
            self.start[1],
            self.start[2],
            self.start[3],
            self.end[0] - distance,
            self.end[1],
            self.end[2],
            self.end[3],
        ]
    }

    pub fn is_perfect(&self, distance: f64, tol: f64) -> bool {
        self.residuals(distance).iter().all(|r| r.abs() <= tol)
    }
}

impl ForcedProfile {
    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.f.len()).map(move |i| i as f64 * self.step)
    }

    fn eval_component(&self, sampled: &[f64], pick: impl Fn(&ClosedProfile) -> &Waveform, t: f64) -> f64 {
        match &self.closed {
            Some(c) => pick(c).value(t),
            None => numeric::interp_cubic(sampled, self.step, t).expect("profile grids are valid"),
        }
    }

    pub fn f_at(&self, t: f64) -> f64 {
        self.eval_component(&self.f, |c| &c.f, t)
    }

    pub fn f1_at(&self, t: f64) -> f64 {
        self.eval_component(&self.f1, |c| &c.f1, t)
    }

    pub fn f2_at(&self, t: f64) -> f64 {
        self.eval_component(&self.f2, |c| &c.f2, t)
    }

    pub fn boundary(&self) -> BoundaryConditions {
        let last = self.f.len() - 1;
        match &self.closed {
            Some(c) => BoundaryConditions {
                start: [c.f.value(0.0), c.f1.value(0.0), c.f2.value(0.0), c.f3.value(0.0)],
                end: [
                    c.f.value(self.duration),
                    c.f1.value(self.duration),
                    c.f2.value(self.duration),
                    c.f3.value(self.duration),
                ],
            },
            None => BoundaryConditions {
                start: [self.f[0], self.f1[0], self.f2[0], self.f3[0]],
                end: [self.f[last], self.f1[last], self.f2[last], self.f3[last]],
            },
        }
    }
}

/// Reference transport waveform: the well-center ramp with two sine
/// harmonics tuned so the forced response meets every transport boundary
/// value, for any duration.
pub fn make_reference_transport(spec: TransportSpec) -> Result<ControlSignal> {
    let TransportSpec { distance, duration } = spec;
    TransportSpec::new(distance, duration)?;
    let pi = std::f64::consts::PI;
    let t2 = duration * duration;
    let c1 = 8.0 * pi / (3.0 * t2) - 2.0 / (3.0 * pi);
    let c2 = 1.0 / (12.0 * pi) - 4.0 * pi / (3.0 * t2);
    let waveform = Waveform {
        offset: 0.0,
        slope: distance / duration,
        terms: vec![
            HarmonicTerm { omega: 2.0 * pi / duration, sin_amp: distance * c1, cos_amp: 0.0 },
            HarmonicTerm { omega: 4.0 * pi / duration, sin_amp: distance * c2, cos_amp: 0.0 },
        ],
    };
    ControlSignal::closed(waveform, duration)
}

/// Reference forced response: ramp plus two sine harmonics whose
/// coefficients solve the endpoint conditions exactly.
pub fn make_reference_profile(spec: TransportSpec) -> Result<ForcedProfile> {
    let pi = std::f64::consts::PI;
    let a = -2.0 / (3.0 * pi);
    let b = 1.0 / (12.0 * pi);
    profile_from_harmonic_amplitudes(spec, &[a, b])
}

/// Generalized reference response with `harmonics` sine components.
///
/// The two endpoint conditions that do not hold automatically for the
/// ramp-plus-sines family (zero slope and zero jerk at the ends) leave
/// n − 2 degrees of freedom; the minimum-norm amplitude vector is chosen.
/// `harmonics = 2` reproduces [`make_reference_profile`].
pub fn make_reference_profile_harmonics(
    spec: TransportSpec,
    harmonics: usize,
) -> Result<ForcedProfile> {
    if harmonics < 2 {
        return Err(SimError::Spec(format!(
            "need at least 2 harmonics to meet the endpoint conditions, got {harmonics}"
        )));
    }
    let pi = std::f64::consts::PI;
    let (mut s2, mut s4, mut s6) = (0.0, 0.0, 0.0);
    for j in 1..=harmonics {
        let j2 = (j * j) as f64;
        s2 += j2;
        s4 += j2 * j2;
        s6 += j2 * j2 * j2;
    }
    let det = s2 * s6 - s4 * s4;
    let rhs = -1.0 / (2.0 * pi);
    let u = rhs * s6 / det;
    let v = -rhs * s4 / det;
    let amps: Vec<f64> = (1..=harmonics)
        .map(|j| {
            let jf = j as f64;
            jf * u + jf * jf * jf * v
        })
        .collect();
    profile_from_harmonic_amplitudes(spec, &amps)
}

fn profile_from_harmonic_amplitudes(spec: TransportSpec, amps: &[f64]) -> Result<ForcedProfile> {
    let TransportSpec { distance, duration } = spec;
    TransportSpec::new(distance, duration)?;
    let pi = std::f64::consts::PI;
    let f = Waveform {
        offset: 0.0,
        slope: distance / duration,
        terms: amps
            .iter()
            .enumerate()
            .map(|(i, &a)| HarmonicTerm {
                omega: 2.0 * pi * (i + 1) as f64 / duration,
                sin_amp: distance * a,
                cos_amp: 0.0,
            })
            .collect(),
    };
    let f1 = f.differentiate();
    let f2 = f1.differentiate();
    let f3 = f2.differentiate();

    let n = DEFAULT_CONTROL_SAMPLES;
    let h = duration / (n - 1) as f64;
    let mut sf = vec![0.0; n];
    let mut sf1 = vec![0.0; n];
    let mut sf2 = vec![0.0; n];
    let mut sf3 = vec![0.0; n];
    let mut rate = vec![0.0; n];
    for i in 0..n {
        let t = i as f64 * h;
        sf[i] = f.value(t);
        sf1[i] = f1.value(t);
        sf2[i] = f2.value(t);
        sf3[i] = f3.value(t);
        rate[i] = 2.0 * sf[i] * sf2[i] + sf2[i] * sf2[i] + sf1[i] * sf1[i];
    }
    let phi = numeric::cumulative_integral(&rate, h)?;
    Ok(ForcedProfile {
        step: h,
        duration,
        f: sf,
        f1: sf1,
        f2: sf2,
        f3: sf3,
        phi,
        closed: Some(ClosedProfile { f, f1, f2, f3 }),
    })
}

/// Forced response of an arbitrary control by direct quadrature of the
/// sine-kernel convolution, on a uniform grid of the given step.
///
/// Smooth controls use the sampled-grid rules; staircase controls are
/// integrated interval by interval with splits at the breaks so the jumps
/// cost no accuracy.
pub fn volterra_response(control: &ControlSignal, step: f64) -> Result<ForcedProfile> {
    let duration = control.duration();
    if !(step > 0.0) || !step.is_finite() {
        return Err(SimError::Control(format!("non-positive grid step {step}")));
    }
    let intervals = (duration / step).round();
    if intervals < 4.0 || (intervals * step - duration).abs() > 1e-9 * duration {
        return Err(SimError::Control(format!(
            "grid step {step} does not divide duration {duration}"
        )));
    }
    let n = intervals as usize + 1;
    let h = duration / intervals;

    match control.form() {
        ControlForm::Closed(_) | ControlForm::Sampled(_) => {
            let d: Vec<f64> = (0..n).map(|i| control.eval(i as f64 * h)).collect();
            let dcos: Vec<f64> = d.iter().zip(0..).map(|(v, i)| v * (i as f64 * h).cos()).collect();
            let dsin: Vec<f64> = d.iter().zip(0..).map(|(v, i)| v * (i as f64 * h).sin()).collect();
            let c = numeric::cumulative_integral(&dcos, h)?;
            let s = numeric::cumulative_integral(&dsin, h)?;

            let mut f = vec![0.0; n];
            let mut f1 = vec![0.0; n];
            let mut f2 = vec![0.0; n];
            for i in 0..n {
                let (st, ct) = (i as f64 * h).sin_cos();
                f[i] = st * c[i] - ct * s[i];
                f1[i] = ct * c[i] + st * s[i];
                f2[i] = d[i] - f[i];
            }
            let dprime: Vec<f64> = match control.form() {
                ControlForm::Closed(w) => {
                    let w1 = w.differentiate();
                    (0..n).map(|i| w1.value(i as f64 * h)).collect()
                }
                _ => numeric::derivative(&d, h)?,
            };
            let f3: Vec<f64> = (0..n).map(|i| dprime[i] - f1[i]).collect();
            let rate: Vec<f64> =
                (0..n).map(|i| 2.0 * f[i] * f2[i] + f2[i] * f2[i] + f1[i] * f1[i]).collect();
            let phi = numeric::cumulative_integral(&rate, h)?;
            Ok(ForcedProfile { step: h, duration, f, f1, f2, f3, phi, closed: None })
        }
        ControlForm::Stepwise(sc) => {
            let breaks = sc.breakpoints();
            let dcos = |tau: f64| sc.eval(tau) * tau.cos();
            let dsin = |tau: f64| sc.eval(tau) * tau.sin();

            let mut c = vec![0.0; n];
            let mut s = vec![0.0; n];
            for i in 1..n {
                let (a, b) = ((i - 1) as f64 * h, i as f64 * h);
                c[i] = c[i - 1] + numeric::gauss3_piecewise(&dcos, a, b, &breaks);
                s[i] = s[i - 1] + numeric::gauss3_piecewise(&dsin, a, b, &breaks);
            }

            let mut f = vec![0.0; n];
            let mut f1 = vec![0.0; n];
            let mut f2 = vec![0.0; n];
            let mut f3 = vec![0.0; n];
            for i in 0..n {
                let t = i as f64 * h;
                let (st, ct) = t.sin_cos();
                f[i] = st * c[i] - ct * s[i];
                f1[i] = ct * c[i] + st * s[i];
                f2[i] = sc.eval(t) - f[i];
                f3[i] = sc.eval_slope(t) - f1[i];
            }

            let mut phi = vec![0.0; n];
            for i in 1..n {
                let (a, b) = ((i - 1) as f64 * h, i as f64 * h);
                let (c0, s0) = (c[i - 1], s[i - 1]);
                let rate = |tau: f64| {
                    let cc = c0 + numeric::gauss3_piecewise(&dcos, a, tau, &breaks);
                    let ss = s0 + numeric::gauss3_piecewise(&dsin, a, tau, &breaks);
                    let (st, ct) = tau.sin_cos();
                    let ft = st * cc - ct * ss;
                    let f1t = ct * cc + st * ss;
                    let f2t = sc.eval(tau) - ft;
                    2.0 * ft * f2t + f2t * f2t + f1t * f1t
                };
                phi[i] = phi[i - 1] + numeric::gauss3_piecewise(&rate, a, b, &breaks);
            }
            Ok(ForcedProfile { step: h, duration, f, f1, f2, f3, phi, closed: None })
        }
    }
}

/// Inverts the forced-response relation: the control that produces a given
/// response is D = F″ + F.
pub fn control_from_profile(profile: &ForcedProfile) -> Result<ControlSignal> {
    match &profile.closed {
        Some(c) => ControlSignal::closed(c.f.add(&c.f2), profile.duration),
        None => {
            let values: Vec<f64> =
                profile.f.iter().zip(&profile.f2).map(|(a, b)| a + b).collect();
            Ok(ControlSignal::sampled(SampledControl::new(values, profile.step)?))
        }
    }
}

/// Accumulated phase φ(t) of the forced response, interpolated off the
/// profile's quadrature grid.
pub fn kinematic_phase(profile: &ForcedProfile, t: f64) -> Result<f64> {
    let slack = DOMAIN_SLACK * profile.duration.max(1.0);
    if t < -slack || t > profile.duration + slack {
        return Err(SimError::OutOfDomain { t, limit: profile.duration });
    }
    numeric::interp_cubic(&profile.phi, profile.step, t.clamp(0.0, profile.duration))
}

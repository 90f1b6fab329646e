//! Fixed-grid quadrature, differentiation, and interpolation helpers.
//!
//! Everything here operates on uniformly sampled data and is fourth-order
//! accurate, matching the accuracy budget of the rest of the pipeline.

use crate::error::{Result, SimError};

/// Integrates uniformly sampled values by composite Simpson's rule.
///
/// An odd interval count is closed with a 3/8 tail over the last three
/// intervals. Needs at least four samples.
pub fn simpson<T>(values: &[T], step: f64) -> Result<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = values.len();
    if n < 4 {
        return Err(SimError::LengthMismatch { left: n, right: 4 });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(SimError::Control(format!("nonpositive step {step}")));
    }
    let intervals = n - 1;
    let simpson_end = if intervals.is_multiple_of(2) { n - 1 } else { n - 4 };

    let mut acc = values[0] * 0.0;
    if simpson_end > 0 {
        acc = acc + values[0] * 1.0 + values[simpson_end] * 1.0;
        for (i, v) in values.iter().enumerate().take(simpson_end).skip(1) {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc = acc + *v * w;
        }
        acc = acc * (step / 3.0);
    }
    if simpson_end < n - 1 {
        let tail = (values[n - 4] * 1.0
            + values[n - 3] * 3.0
            + values[n - 2] * 3.0
            + values[n - 1] * 1.0)
            * (3.0 * step / 8.0);
        acc = acc + tail;
    }
    Ok(acc)
}

/// Running integral of uniformly sampled values, anchored to zero at the
/// first sample.
///
/// Even indices carry exact composite Simpson partial sums; odd indices are
/// filled by a cubic interpolatory rule so every entry is fourth order.
pub fn cumulative_integral(values: &[f64], step: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 4 {
        return Err(SimError::LengthMismatch { left: n, right: 4 });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(SimError::Control(format!("nonpositive step {step}")));
    }
    let h = step;
    let mut out = vec![0.0; n];
    out[1] = h / 24.0 * (9.0 * values[0] + 19.0 * values[1] - 5.0 * values[2] + values[3]);
    for i in 2..n {
        if i % 2 == 0 {
            out[i] = out[i - 2] + h / 3.0 * (values[i - 2] + 4.0 * values[i - 1] + values[i]);
        } else {
            out[i] = out[i - 1]
                + h / 24.0
                    * (values[i - 3] - 5.0 * values[i - 2] + 19.0 * values[i - 1]
                        + 9.0 * values[i]);
        }
    }
    Ok(out)
}

/// Fourth-order finite-difference derivative of uniformly sampled values.
///
/// Five-point centered stencils inside, one-sided five-point stencils at the
/// two samples nearest each end. Needs at least five samples.
pub fn derivative(values: &[f64], step: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 5 {
        return Err(SimError::LengthMismatch { left: n, right: 5 });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(SimError::Control(format!("nonpositive step {step}")));
    }
    let d = 12.0 * step;
    let mut out = vec![0.0; n];
    out[0] = (-25.0 * values[0] + 48.0 * values[1] - 36.0 * values[2] + 16.0 * values[3]
        - 3.0 * values[4])
        / d;
    out[1] = (-3.0 * values[0] - 10.0 * values[1] + 18.0 * values[2] - 6.0 * values[3]
        + values[4])
        / d;
    for i in 2..n - 2 {
        out[i] = (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]) / d;
    }
    out[n - 2] = (3.0 * values[n - 1] + 10.0 * values[n - 2] - 18.0 * values[n - 3]
        + 6.0 * values[n - 4]
        - values[n - 5])
        / d;
    out[n - 1] = (25.0 * values[n - 1] - 48.0 * values[n - 2] + 36.0 * values[n - 3]
        - 16.0 * values[n - 4]
        + 3.0 * values[n - 5])
        / d;
    Ok(out)
}

/// Cubic Lagrange interpolation of uniformly sampled values at `t`, where
/// sample `i` sits at `i * step`.
///
/// The four-point window is clamped to the data range, so `t` slightly
/// outside it extrapolates from the nearest window.
pub fn interp_cubic(values: &[f64], step: f64, t: f64) -> Result<f64> {
    let n = values.len();
    if n < 4 {
        return Err(SimError::LengthMismatch { left: n, right: 4 });
    }
    let raw = (t / step).floor() as isize - 1;
    let i0 = raw.clamp(0, n as isize - 4) as usize;
    let s = t / step - i0 as f64;
    let (s0, s1, s2, s3) = (s, s - 1.0, s - 2.0, s - 3.0);
    Ok(values[i0] * (-s1 * s2 * s3 / 6.0)
        + values[i0 + 1] * (s0 * s2 * s3 / 2.0)
        + values[i0 + 2] * (-s0 * s1 * s3 / 2.0)
        + values[i0 + 3] * (s0 * s1 * s2 / 6.0))
}

const GAUSS3_NODE: f64 = 0.774_596_669_241_483_4;
const GAUSS3_W_OUTER: f64 = 5.0 / 9.0;
const GAUSS3_W_CENTER: f64 = 8.0 / 9.0;

/// Three-point Gauss-Legendre quadrature of `f` over `[a, b]`.
///
/// Exact through degree five; the nodes are strictly interior.
pub fn gauss3(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    half * (GAUSS3_W_OUTER * f(mid - half * GAUSS3_NODE)
        + GAUSS3_W_CENTER * f(mid)
        + GAUSS3_W_OUTER * f(mid + half * GAUSS3_NODE))
}

/// Gauss-Legendre quadrature over `[a, b]` split at every listed break
/// strictly inside the interval, so jump discontinuities at the breaks cost
/// no accuracy. `breaks` must be sorted ascending.
pub fn gauss3_piecewise(f: &impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    let first = breaks.partition_point(|&x| x <= a);
    let mut lo = a;
    let mut acc = 0.0;
    for &x in &breaks[first..] {
        if x >= b {
            break;
        }
        acc += gauss3(f, lo, x);
        lo = x;
    }
    acc + gauss3(f, lo, b)
}

//! Adaptive quadrature and the exact single-weight posterior oracle.
//!
//! The oracle integrates the moments of p(w) ∝ Φ(y·w/β)·N(w; m, v) directly,
//! giving an independent route to the numbers the closed-form online update
//! produces for a single active feature. All integration happens on a
//! log-scaled integrand so extreme prior/likelihood mismatches (t down to
//! -40 and beyond) neither underflow nor lose the mass region.

use thiserror::Error;

use crate::model::Label;
use crate::probit::log_normal_cdf;

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not converge (depth limit reached)")]
    NonConvergence,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Recursive adaptive Simpson integration of `f` over `[a, b]` to absolute
/// tolerance `eps`. The interval is pre-split into `panels` equal panels so
/// narrow interior peaks cannot be missed by the first few bisections.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    eps: f64,
    panels: usize,
) -> Result<f64, QuadratureError> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadratureError::InvalidInput(format!(
            "bad interval [{a}, {b}]"
        )));
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let eps_panel = eps / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + h * i as f64;
        let hi = if i + 1 == panels { b } else { lo + h };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        let whole = simpson(flo, fmid, fhi, hi - lo);
        total += adapt(f, lo, hi, flo, fmid, fhi, whole, eps_panel, 0)?;
    }
    Ok(total)
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

const MAX_DEPTH: u32 = 48;

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> Result<f64, QuadratureError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(QuadratureError::NonConvergence);
    }
    let l = adapt(f, a, m, fa, flm, fm, left, eps / 2.0, depth + 1)?;
    let r = adapt(f, m, b, fm, frm, fb, right, eps / 2.0, depth + 1)?;
    Ok(l + r)
}

/// Exact posterior mean and variance of a single Gaussian weight observed
/// through the probit likelihood: p(w) ∝ Φ(y·w/β)·N(w; prior_mean,
/// prior_variance). Serves as the verification oracle for the closed-form
/// update; the two must agree to about 1e-6 relative.
pub fn exact_posterior_moments_1d(
    prior_mean: f64,
    prior_variance: f64,
    beta: f64,
    y: Label,
) -> Result<(f64, f64), QuadratureError> {
    if !(prior_variance.is_finite() && prior_variance > 0.0) {
        return Err(QuadratureError::InvalidInput(format!(
            "prior_variance must be > 0, got {prior_variance}"
        )));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(QuadratureError::InvalidInput(format!(
            "beta must be > 0, got {beta}"
        )));
    }
    if !prior_mean.is_finite() {
        return Err(QuadratureError::InvalidInput(format!(
            "prior_mean must be finite, got {prior_mean}"
        )));
    }
    // Reduce y = -1 to y = +1 by the change of variables w -> -w.
    if y == Label::NoSwitch {
        let (mean, variance) =
            exact_posterior_moments_1d(-prior_mean, prior_variance, beta, Label::Switch)?;
        return Ok((-mean, variance));
    }

    let sd = prior_variance.sqrt();
    let log_density = |w: f64| {
        let z = (w - prior_mean) / sd;
        log_normal_cdf(w / beta) - 0.5 * z * z
    };

    // The posterior mean sits between the prior mean and a likelihood-driven
    // shift bounded by sd·(|t|+1), t = m/√(v+β²). Cover that region plus wide
    // Gaussian tails, then localize the peak with a scan.
    let t = prior_mean / (prior_variance + beta * beta).sqrt();
    let lo = prior_mean - 16.0 * sd;
    let hi = prior_mean + sd * (18.0 + 1.5 * (-t).max(0.0));
    const SCAN: usize = 4000;
    let step = (hi - lo) / SCAN as f64;
    let mut peak_idx = 0;
    let mut peak_log = f64::NEG_INFINITY;
    for i in 0..=SCAN {
        let l = log_density(lo + step * i as f64);
        if l > peak_log {
            peak_log = l;
            peak_idx = i;
        }
    }
    // Walk outward to where the integrand is ~1e-20 of its peak.
    let drop = 46.0;
    let mut a_idx = peak_idx;
    while a_idx > 0 && log_density(lo + step * a_idx as f64) > peak_log - drop {
        a_idx -= 1;
    }
    let mut b_idx = peak_idx;
    while b_idx < SCAN && log_density(lo + step * b_idx as f64) > peak_log - drop {
        b_idx += 1;
    }
    let a = lo + step * a_idx as f64;
    let b = lo + step * b_idx as f64;
    let center = lo + step * peak_idx as f64;
    let width = (b - a).max(step);

    let g = |w: f64| (log_density(w) - peak_log).exp();
    let rel = 1e-11;
    let mass = adaptive_simpson(&g, a, b, rel * width, 64)?;
    let first = adaptive_simpson(&|w: f64| (w - center) * g(w), a, b, rel * width * width, 64)?;
    let mean = center + first / mass;
    let second = adaptive_simpson(
        &|w: f64| (w - mean) * (w - mean) * g(w),
        a,
        b,
        rel * width * width * width,
        64,
    )?;
    let variance = second / mass;
    Ok((mean, variance))
}

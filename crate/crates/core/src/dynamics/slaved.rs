use super::{ModelParams, Stepper, Trajectory};
use crate::spectral::SpectralField;
use crate::{Error, Result};

/// Integrates the noise-free high-mode equation
/// `ḣ = P_h A h + ϱh − P_h N(l + h)` along a prescribed low-mode path.
///
/// `low_path[n]` is `l` at step `n`; the result has one state per entry of
/// `low_path`, starting from `h0`.
pub fn slave_high_modes(
    low_path: &[SpectralField],
    h0: &SpectralField,
    params: &ModelParams,
) -> Result<Trajectory> {
    let basis = params.basis();
    let cutoff = params.low_cutoff();
    if h0.basis() != basis {
        return Err(Error::SizeMismatch {
            expected: basis.mode_count(),
            actual: h0.coeffs().len(),
        });
    }
    if !h0.is_high(cutoff) {
        return Err(Error::WrongModeSpace("high"));
    }
    for l in low_path {
        if l.basis() != basis {
            return Err(Error::SizeMismatch {
                expected: basis.mode_count(),
                actual: l.coeffs().len(),
            });
        }
        if !l.is_low(cutoff) {
            return Err(Error::WrongModeSpace("low"));
        }
    }
    let lo = params.low_len();
    let mut stepper = Stepper::new(params)?;
    let dt = params.dt();
    let modes = basis.mode_count();
    let mut h = h0.clone();
    let mut u = vec![0.0; modes];
    let mut nl = vec![0.0; modes];
    let zero = vec![0.0; modes];
    let mut next = vec![0.0; modes];
    let mut times = Vec::with_capacity(low_path.len());
    let mut states = Vec::with_capacity(low_path.len());
    if !low_path.is_empty() {
        times.push(0.0);
        states.push(h.clone());
    }
    for (n, l) in low_path.iter().enumerate().skip(1) {
        let prev = &low_path[n - 1];
        for ((ui, p), hi) in u.iter_mut().zip(prev.coeffs()).zip(h.coeffs()) {
            *ui = p + hi;
        }
        stepper.nonlinear_into(&u, &mut nl);
        stepper.combine(h.coeffs(), &nl, &zero, &mut next);
        next[..lo].fill(0.0);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepDiverged { step: n - 1 });
        }
        h.coeffs_mut().copy_from_slice(&next);
        debug_assert!(l.is_low(cutoff));
        times.push(n as f64 * dt);
        states.push(h.clone());
    }
    Ok(Trajectory {
        times,
        states,
        noise: None,
    })
}

/// Whether `u = l + h` keeps `|u(t)|² + ∫₀ᵗ|u|² ≤ r + (c1 + 1)t` at every
/// recorded step (trapezoid rule for the integral).
pub fn energy_cap_holds(
    low_path: &[SpectralField],
    high: &Trajectory,
    dt: f64,
    r: f64,
    c1: f64,
) -> bool {
    let mut integral = 0.0;
    let mut prev = None;
    for (n, (l, h)) in low_path.iter().zip(&high.states).enumerate() {
        let e = l.norm_sq() + h.norm_sq();
        if let Some(p) = prev {
            integral += 0.5 * dt * (p + e);
        }
        prev = Some(e);
        if e + integral > r + (c1 + 1.0) * n as f64 * dt {
            return false;
        }
    }
    true
}

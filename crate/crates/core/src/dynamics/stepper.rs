use std::sync::Arc;

use super::{ModelParams, Nonlinearity};
use crate::spectral::{eigenvalue, FftWork, KernelTransform, SpectralBasis, SpectralField};
use crate::{Error, Result};

/// `φ₁(z) = (eᶻ − 1)/z`, continuous at zero.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-12 {
        1.0 + 0.5 * z
    } else {
        z.exp_m1() / z
    }
}

/// Single-threaded stepping context for the exponential Euler-Maruyama
/// scheme
///
/// ```text
/// u_{n+1} = e^{λ dt} u_n + φ₁(λ dt) (ΔW_n − dt N(u_n)),   λ = α_k + ϱ
/// ```
///
/// The linear part is integrated exactly per mode; the nonlinearity `N` is
/// evaluated pseudo-spectrally and held fixed across the step, as is the
/// forcing rate `ΔW/dt`.
pub struct Stepper {
    params: ModelParams,
    decay: Vec<f64>,
    weight: Vec<f64>,
    kernel: Option<KernelTransform>,
    grid: Vec<f64>,
    aux: Vec<f64>,
    conv: Vec<f64>,
    nl: Vec<f64>,
    work: FftWork,
}

impl Stepper {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let basis = params.basis();
        let dt = params.dt();
        let (decay, weight) = basis
            .modes()
            .iter()
            .map(|m| {
                let z = (eigenvalue(m.wavenumber) + params.rho()) * dt;
                (z.exp(), phi1(z))
            })
            .unzip();
        let kernel = match params.nonlinearity() {
            Nonlinearity::Nonlocal(k) => Some(basis.kernel_transform(k.samples())?),
            _ => None,
        };
        Ok(Self {
            params: params.clone(),
            decay,
            weight,
            kernel,
            grid: vec![0.0; basis.grid_size()],
            aux: vec![0.0; basis.grid_size()],
            conv: vec![0.0; basis.grid_size()],
            nl: vec![0.0; basis.mode_count()],
            work: basis.workspace(),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        self.params.basis()
    }

    /// Per-mode `e^{λ dt}`.
    pub fn decay(&self) -> &[f64] {
        &self.decay
    }

    /// Per-mode `φ₁(λ dt)`, the weight applied to `ΔW − dt N`.
    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    /// Galerkin-truncated nonlinearity `N(u)` (`u³`, `u·(G∗u²)` or zero).
    pub fn nonlinear_into(&mut self, u: &[f64], out: &mut [f64]) {
        let basis = Arc::clone(self.params.basis());
        match self.params.nonlinearity() {
            Nonlinearity::Off => out.fill(0.0),
            Nonlinearity::LocalCubic => {
                basis.synthesize(u, &mut self.grid, &mut self.work);
                self.grid.iter_mut().for_each(|v| *v = *v * *v * *v);
                basis.analyze(&self.grid, out, &mut self.work);
            }
            Nonlinearity::Nonlocal(_) => {
                let kernel = self.kernel.as_ref().expect("kernel prepared");
                basis.synthesize(u, &mut self.grid, &mut self.work);
                self.aux
                    .iter_mut()
                    .zip(&self.grid)
                    .for_each(|(a, v)| *a = v * v);
                basis.convolve_into(kernel, &self.aux, &mut self.conv, &mut self.work);
                self.grid
                    .iter_mut()
                    .zip(&self.conv)
                    .for_each(|(v, c)| *v *= c);
                basis.analyze(&self.grid, out, &mut self.work);
            }
        }
    }

    /// `(A + ϱ)u − N(u)`.
    pub fn drift_into(&mut self, u: &[f64], out: &mut [f64]) {
        self.nonlinear_into(u, out);
        let rho = self.params.rho();
        for ((o, &c), m) in out.iter_mut().zip(u).zip(self.params.basis().modes()) {
            *o = (eigenvalue(m.wavenumber) + rho) * c - *o;
        }
    }

    /// The scheme's update given a precomputed nonlinearity.
    pub fn combine(&self, u: &[f64], nl: &[f64], dw: &[f64], out: &mut [f64]) {
        let dt = self.params.dt();
        for i in 0..u.len() {
            out[i] = self.decay[i] * u[i] + self.weight[i] * (dw[i] - dt * nl[i]);
        }
    }

    /// Advances `u` in place by one step with noise increment `dw`.
    pub fn advance(&mut self, u: &mut [f64], dw: &[f64], step: usize) -> Result<()> {
        let mut nl = std::mem::take(&mut self.nl);
        self.nonlinear_into(u, &mut nl);
        let dt = self.params.dt();
        let mut finite = true;
        for i in 0..u.len() {
            u[i] = self.decay[i] * u[i] + self.weight[i] * (dw[i] - dt * nl[i]);
            finite &= u[i].is_finite();
        }
        self.nl = nl;
        if finite {
            Ok(())
        } else {
            Err(Error::StepDiverged { step })
        }
    }
}

/// Galerkin projection of `u·(G∗u²)`.
pub fn nonlocal_term(u: &SpectralField, kernel: &super::KernelSpec) -> Result<SpectralField> {
    let basis = u.basis();
    basis.check_grid(kernel.samples().len())?;
    let params = ModelParams::new(basis, 0.0, Nonlinearity::Nonlocal(kernel.clone()), 1, 1.0)?;
    let mut s = Stepper::new(&params)?;
    let mut out = SpectralField::zeros(basis);
    s.nonlinear_into(u.coeffs(), out.coeffs_mut());
    Ok(out)
}

/// `(A + ϱ)u − N(u)`, Galerkin-truncated.
pub fn evaluate_drift(u: &SpectralField, params: &ModelParams) -> Result<SpectralField> {
    params.basis().check_coeffs(u.coeffs().len())?;
    let mut s = Stepper::new(params)?;
    let mut out = SpectralField::zeros(params.basis());
    s.drift_into(u.coeffs(), out.coeffs_mut());
    Ok(out)
}

/// One step of the scheme from `state` with increment `dw`.
pub fn step(
    state: &SpectralField,
    params: &ModelParams,
    dw: &SpectralField,
) -> Result<SpectralField> {
    params.basis().check_coeffs(state.coeffs().len())?;
    params.basis().check_coeffs(dw.coeffs().len())?;
    let mut s = Stepper::new(params)?;
    let mut next = state.clone();
    s.advance(next.coeffs_mut(), dw.coeffs(), 0)?;
    Ok(next)
}

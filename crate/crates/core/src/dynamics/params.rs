use std::sync::Arc;

use super::KernelSpec;
use crate::spectral::SpectralBasis;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    /// Linear dynamics only; used for closed-form sanity checks.
    Off,
    /// `u³`.
    LocalCubic,
    /// `u·(G∗u²)`.
    Nonlocal(KernelSpec),
}

impl Nonlinearity {
    pub fn kernel(&self) -> Option<&KernelSpec> {
        match self {
            Nonlinearity::Nonlocal(k) => Some(k),
            _ => None,
        }
    }
}

/// Model and discretization parameters shared by every stepping context.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    rho: f64,
    nonlinearity: Nonlinearity,
    low_cutoff: usize,
    dt: f64,
    basis: Arc<SpectralBasis>,
}

impl ModelParams {
    pub fn new(
        basis: &Arc<SpectralBasis>,
        rho: f64,
        nonlinearity: Nonlinearity,
        low_cutoff: usize,
        dt: f64,
    ) -> Result<Self> {
        if !rho.is_finite() {
            return Err(Error::invalid("rho", "must be finite"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("{dt} must be positive")));
        }
        if low_cutoff == 0 || low_cutoff > basis.max_wavenumber() {
            return Err(Error::CutoffOutOfRange {
                cutoff: low_cutoff,
                max: basis.max_wavenumber(),
            });
        }
        if let Nonlinearity::Nonlocal(k) = &nonlinearity {
            basis.check_grid(k.samples().len())?;
        }
        Ok(Self {
            rho,
            nonlinearity,
            low_cutoff,
            dt,
            basis: Arc::clone(basis),
        })
    }

    pub fn local(basis: &Arc<SpectralBasis>, rho: f64, low_cutoff: usize, dt: f64) -> Result<Self> {
        Self::new(basis, rho, Nonlinearity::LocalCubic, low_cutoff, dt)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn low_cutoff(&self) -> usize {
        self.low_cutoff
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    /// Number of real coefficients in the low-mode space.
    pub fn low_len(&self) -> usize {
        2 * self.low_cutoff + 1
    }

    pub fn with_low_cutoff(&self, low_cutoff: usize) -> Result<Self> {
        Self::new(
            &self.basis,
            self.rho,
            self.nonlinearity.clone(),
            low_cutoff,
            self.dt,
        )
    }

    pub fn with_nonlinearity(&self, nonlinearity: Nonlinearity) -> Result<Self> {
        Self::new(
            &self.basis,
            self.rho,
            nonlinearity,
            self.low_cutoff,
            self.dt,
        )
    }

    /// Number of steps of size `dt` spanning `duration`, if it is an integer
    /// multiple (to a relative 1e-9).
    pub fn steps_for(&self, duration: f64) -> Result<usize> {
        let n = duration / self.dt;
        let r = n.round();
        if !(duration >= 0.0) || (n - r).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::invalid(
                "duration",
                format!("{duration} is not a multiple of dt = {}", self.dt),
            ));
        }
        Ok(r as usize)
    }
}

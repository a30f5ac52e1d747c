use std::sync::Arc;

use super::{low_mode_count, SpectralBasis};
use crate::{Error, Result};

/// Real Fourier coefficients of a periodic function on [0, 2π].
///
/// Because the basis is orthonormal, `|u|² = Σ coeffs²` (Parseval).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
    basis: Arc<SpectralBasis>,
}

impl SpectralField {
    pub fn zeros(basis: &Arc<SpectralBasis>) -> Self {
        Self {
            coeffs: vec![0.0; basis.mode_count()],
            basis: Arc::clone(basis),
        }
    }

    pub fn from_coeffs(basis: &Arc<SpectralBasis>, coeffs: Vec<f64>) -> Result<Self> {
        basis.check_coeffs(coeffs.len())?;
        Ok(Self {
            coeffs,
            basis: Arc::clone(basis),
        })
    }

    /// Single basis function scaled by `amplitude`.
    pub fn mode(basis: &Arc<SpectralBasis>, index: usize, amplitude: f64) -> Self {
        let mut f = Self::zeros(basis);
        f.coeffs[index] = amplitude;
        f
    }

    pub fn from_physical(basis: &Arc<SpectralBasis>, grid: &[f64]) -> Result<Self> {
        basis.check_grid(grid.len())?;
        let mut f = Self::zeros(basis);
        let mut work = basis.workspace();
        basis.analyze(grid, &mut f.coeffs, &mut work);
        Ok(f)
    }

    pub fn to_physical(&self) -> Vec<f64> {
        let mut grid = vec![0.0; self.basis.grid_size()];
        let mut work = self.basis.workspace();
        self.basis.synthesize(&self.coeffs, &mut grid, &mut work);
        grid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `∫ u⁴ dx` by grid quadrature, i.e. `|u|⁴_{L⁴}`.
    pub fn l4_pow4(&self) -> f64 {
        let h = self.basis.spacing();
        self.to_physical().iter().map(|v| v.powi(4)).sum::<f64>() * h
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut f = self.clone();
        f.coeffs.iter_mut().for_each(|c| *c *= s);
        f
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut f = self.clone();
        f.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += b);
        f
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut f = self.clone();
        f.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a -= b);
        f
    }

    fn check_cutoff(&self, cutoff: usize) -> Result<usize> {
        let max = self.basis.max_wavenumber();
        if cutoff == 0 || cutoff > max {
            return Err(Error::CutoffOutOfRange { cutoff, max });
        }
        Ok(low_mode_count(cutoff))
    }

    /// Keeps wavenumbers `k ≤ cutoff`.
    pub fn project_low(&self, cutoff: usize) -> Result<Self> {
        let n = self.check_cutoff(cutoff)?;
        let mut f = self.clone();
        f.coeffs[n..].fill(0.0);
        Ok(f)
    }

    /// Keeps wavenumbers `k > cutoff`.
    pub fn project_high(&self, cutoff: usize) -> Result<Self> {
        let n = self.check_cutoff(cutoff)?;
        let mut f = self.clone();
        f.coeffs[..n].fill(0.0);
        Ok(f)
    }

    pub fn is_low(&self, cutoff: usize) -> bool {
        self.coeffs[low_mode_count(cutoff).min(self.coeffs.len())..]
            .iter()
            .all(|&c| c == 0.0)
    }

    pub fn is_high(&self, cutoff: usize) -> bool {
        self.coeffs[..low_mode_count(cutoff).min(self.coeffs.len())]
            .iter()
            .all(|&c| c == 0.0)
    }
}

//! Real Fourier basis on [0, 2π] and the Swift-Hohenberg linear operator.
//!
//! Modes are indexed by wavenumber with a cos/sin parity:
//! index 0 is the constant `1/√(2π)`, index `2k-1` is `cos(kx)/√π` and
//! index `2k` is `sin(kx)/√π`. The low-mode space of cutoff `N` is every
//! mode with wavenumber `k ≤ N`, i.e. the first `2N+1` coefficients.

mod basis;
mod field;

pub use basis::{circular_convolve, FftWork, KernelTransform, Mode, Parity, SpectralBasis};
pub use field::SpectralField;

/// Eigenvalue of `A = -(1+∂ₓₓ)²` on wavenumber `k`: `-(1-k²)²`.
pub fn eigenvalue(k: usize) -> f64 {
    let k2 = (k as f64) * (k as f64);
    -(1.0 - k2) * (1.0 - k2)
}

/// Number of real coefficients spanning the low-mode space of cutoff `n`.
pub const fn low_mode_count(n: usize) -> usize {
    2 * n + 1
}

/// Diagonal spectrum of `A`, one eigenvalue per real mode.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpectrum {
    pub eigenvalues: Vec<f64>,
}

impl OperatorSpectrum {
    pub fn new(basis: &SpectralBasis) -> Self {
        let eigenvalues = basis
            .modes()
            .iter()
            .map(|m| eigenvalue(m.wavenumber))
            .collect();
        Self { eigenvalues }
    }

    /// `⟨Au, u⟩ = Σ α_k u_k²`.
    pub fn quadratic_form(&self, coeffs: &[f64]) -> f64 {
        self.eigenvalues
            .iter()
            .zip(coeffs)
            .map(|(a, c)| a * c * c)
            .sum()
    }
}

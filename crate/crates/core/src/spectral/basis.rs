use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Const,
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mode {
    pub wavenumber: usize,
    pub parity: Parity,
}

/// Real Fourier basis with `2K+1` modes and an `M`-point collocation grid.
///
/// The default grid has at least `4K+1` points, which makes the pseudo-spectral
/// cubic (and `u·(G∗u²)`) exact after truncation back to `K`.
pub struct SpectralBasis {
    max_wavenumber: usize,
    grid_size: usize,
    modes: Vec<Mode>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl fmt::Debug for SpectralBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralBasis")
            .field("max_wavenumber", &self.max_wavenumber)
            .field("grid_size", &self.grid_size)
            .finish()
    }
}

impl PartialEq for SpectralBasis {
    fn eq(&self, other: &Self) -> bool {
        self.max_wavenumber == other.max_wavenumber && self.grid_size == other.grid_size
    }
}

impl SpectralBasis {
    /// Basis with the default dealiased grid: the smallest power of two
    /// holding at least `4K+1` points.
    pub fn new(max_wavenumber: usize) -> Result<Arc<Self>> {
        let grid = (4 * max_wavenumber + 1).next_power_of_two();
        Self::with_grid(max_wavenumber, grid)
    }

    pub fn with_grid(max_wavenumber: usize, grid_size: usize) -> Result<Arc<Self>> {
        if max_wavenumber == 0 {
            return Err(Error::invalid("max_wavenumber", "must be at least 1"));
        }
        let required = 3 * max_wavenumber + 1;
        if grid_size < required {
            return Err(Error::GridTooCoarse {
                grid: grid_size,
                max_wavenumber,
                required,
            });
        }
        let mut modes = Vec::with_capacity(2 * max_wavenumber + 1);
        modes.push(Mode {
            wavenumber: 0,
            parity: Parity::Const,
        });
        for k in 1..=max_wavenumber {
            modes.push(Mode {
                wavenumber: k,
                parity: Parity::Cos,
            });
            modes.push(Mode {
                wavenumber: k,
                parity: Parity::Sin,
            });
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid_size);
        let inverse = planner.plan_fft_inverse(grid_size);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Arc::new(Self {
            max_wavenumber,
            grid_size,
            modes,
            forward,
            inverse,
            scratch_len,
        }))
    }

    pub fn max_wavenumber(&self) -> usize {
        self.max_wavenumber
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode_index(&self, wavenumber: usize, parity: Parity) -> Option<usize> {
        if wavenumber > self.max_wavenumber {
            return None;
        }
        match (wavenumber, parity) {
            (0, Parity::Const) => Some(0),
            (0, _) | (_, Parity::Const) => None,
            (k, Parity::Cos) => Some(2 * k - 1),
            (k, Parity::Sin) => Some(2 * k),
        }
    }

    /// Collocation points `x_j = 2πj/M`.
    pub fn grid_points(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.grid_size).map(|j| j as f64 * h).collect()
    }

    /// Quadrature weight `2π/M`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.grid_size as f64
    }

    pub fn workspace(&self) -> FftWork {
        FftWork {
            buf: vec![Complex64::default(); self.grid_size],
            scratch: vec![Complex64::default(); self.scratch_len],
        }
    }

    pub(crate) fn check_coeffs(&self, len: usize) -> Result<()> {
        if len != self.mode_count() {
            return Err(Error::SizeMismatch {
                expected: self.mode_count(),
                actual: len,
            });
        }
        Ok(())
    }

    pub(crate) fn check_grid(&self, len: usize) -> Result<()> {
        if len != self.grid_size {
            return Err(Error::SizeMismatch {
                expected: self.grid_size,
                actual: len,
            });
        }
        Ok(())
    }

    /// Evaluates the expansion on the grid. Slice lengths are trusted.
    pub fn synthesize(&self, coeffs: &[f64], grid: &mut [f64], work: &mut FftWork) {
        let m = self.grid_size;
        let c0 = 1.0 / (2.0 * PI).sqrt();
        let ck = 0.5 / PI.sqrt();
        let buf = &mut work.buf;
        buf.fill(Complex64::default());
        buf[0] = Complex64::new(coeffs[0] * c0, 0.0);
        for k in 1..=self.max_wavenumber {
            let z = Complex64::new(coeffs[2 * k - 1] * ck, -coeffs[2 * k] * ck);
            buf[k] += z;
            buf[m - k] += z.conj();
        }
        self.inverse.process_with_scratch(buf, &mut work.scratch);
        for (g, z) in grid.iter_mut().zip(buf.iter()) {
            *g = z.re;
        }
    }

    /// Projects grid values onto the basis (exact for band-limited data below
    /// the grid's Nyquist wavenumber, a Galerkin truncation otherwise).
    pub fn analyze(&self, grid: &[f64], coeffs: &mut [f64], work: &mut FftWork) {
        let buf = &mut work.buf;
        for (z, &g) in buf.iter_mut().zip(grid) {
            *z = Complex64::new(g, 0.0);
        }
        self.forward.process_with_scratch(buf, &mut work.scratch);
        self.spectrum_to_coeffs(buf, coeffs);
    }

    fn spectrum_to_coeffs(&self, spectrum: &[Complex64], coeffs: &mut [f64]) {
        let inv_m = 1.0 / self.grid_size as f64;
        let c0 = (2.0 * PI).sqrt() * inv_m;
        let ck = 2.0 * PI.sqrt() * inv_m;
        coeffs[0] = spectrum[0].re * c0;
        for k in 1..=self.max_wavenumber {
            coeffs[2 * k - 1] = spectrum[k].re * ck;
            coeffs[2 * k] = -spectrum[k].im * ck;
        }
    }

    /// Prepares a kernel sampled on the grid for repeated convolution.
    pub fn kernel_transform(&self, kernel: &[f64]) -> Result<KernelTransform> {
        self.check_grid(kernel.len())?;
        let mut work = self.workspace();
        for (z, &g) in work.buf.iter_mut().zip(kernel) {
            *z = Complex64::new(g, 0.0);
        }
        self.forward
            .process_with_scratch(&mut work.buf, &mut work.scratch);
        let scale = self.spacing() / self.grid_size as f64;
        let spectrum = work.buf.iter().map(|z| z * scale).collect();
        Ok(KernelTransform { spectrum })
    }

    /// `out_j = (2π/M) Σᵢ G(x_j − x_i) f(x_i)` via the prepared kernel.
    pub fn convolve_into(
        &self,
        kernel: &KernelTransform,
        f: &[f64],
        out: &mut [f64],
        work: &mut FftWork,
    ) {
        let buf = &mut work.buf;
        for (z, &v) in buf.iter_mut().zip(f) {
            *z = Complex64::new(v, 0.0);
        }
        self.forward.process_with_scratch(buf, &mut work.scratch);
        for (z, g) in buf.iter_mut().zip(&kernel.spectrum) {
            *z *= g;
        }
        self.inverse.process_with_scratch(buf, &mut work.scratch);
        for (o, z) in out.iter_mut().zip(buf.iter()) {
            *o = z.re;
        }
    }
}

/// Reusable FFT buffers; one per stepping context.
#[derive(Debug, Clone)]
pub struct FftWork {
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// DFT of a grid kernel, pre-scaled by the quadrature weight and `1/M`.
#[derive(Debug, Clone)]
pub struct KernelTransform {
    spectrum: Vec<Complex64>,
}

/// Periodic convolution of two grid functions with quadrature weight `2π/M`.
pub fn circular_convolve(kernel: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    if kernel.len() != f.len() {
        return Err(Error::SizeMismatch {
            expected: kernel.len(),
            actual: f.len(),
        });
    }
    let m = f.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut a: Vec<Complex64> = kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut b: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in b.iter_mut().zip(&a) {
        *x *= y;
    }
    inv.process(&mut b);
    let scale = 2.0 * PI / (m as f64 * m as f64);
    Ok(b.iter().map(|z| z.re * scale).collect())
}

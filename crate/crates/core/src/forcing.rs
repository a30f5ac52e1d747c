//! Finite-mode additive noise `W(x,t) = Σ bᵢ eᵢ(x) wᵢ(t)`.
//!
//! Increments come from counter-based streams: a ChaCha key built from
//! `(seed, stream_id)` with the ChaCha stream (nonce) set to the step index,
//! so any `(seed, stream, step)` triple can be regenerated in isolation and
//! parallel ensembles do not depend on scheduling order.

use std::io::{BufRead, Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::spectral::SpectralBasis;
use crate::spectral::SpectralField;
use crate::{Error, Result};

const KEY_TAG: &[u8; 16] = b"shergo-noise-v1\0";

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    coefficients: Vec<f64>,
    forced_cutoff: Option<usize>,
    seed: u64,
    b0: f64,
    b_max: f64,
}

impl NoiseSpec {
    /// `coefficients` are the `bᵢ` in mode-table order. When `forced_cutoff`
    /// is `Some(n)`, every mode with wavenumber `≤ n` must have `bᵢ ≠ 0`.
    pub fn new(
        basis: &SpectralBasis,
        coefficients: Vec<f64>,
        forced_cutoff: Option<usize>,
        seed: u64,
    ) -> Result<Self> {
        basis.check_coeffs(coefficients.len())?;
        if let Some(i) = coefficients.iter().position(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::invalid(
                "noise coefficients",
                format!(
                    "b[{i}] = {} must be finite and nonnegative",
                    coefficients[i]
                ),
            ));
        }
        if let Some(n) = forced_cutoff {
            if n > basis.max_wavenumber() {
                return Err(Error::CutoffOutOfRange {
                    cutoff: n,
                    max: basis.max_wavenumber(),
                });
            }
            if let Some(i) = coefficients[..2 * n + 1].iter().position(|&b| b == 0.0) {
                return Err(Error::invalid(
                    "noise coefficients",
                    format!("mode {i} lies below the forced cutoff {n} but is unforced"),
                ));
            }
        }
        let (b0, b_max) = effective_constants(&coefficients);
        Ok(Self {
            coefficients,
            forced_cutoff,
            seed,
            b0,
            b_max,
        })
    }

    /// Every mode with wavenumber `≤ cutoff` forced with amplitude `amplitude`.
    pub fn uniform(
        basis: &SpectralBasis,
        cutoff: usize,
        amplitude: f64,
        seed: u64,
    ) -> Result<Self> {
        if amplitude <= 0.0 || !amplitude.is_finite() {
            return Err(Error::invalid("noise amplitude", "must be positive"));
        }
        let n = (2 * cutoff + 1).min(basis.mode_count());
        let mut b = vec![0.0; basis.mode_count()];
        b[..n].fill(amplitude);
        Self::new(basis, b, Some(cutoff), seed)
    }

    /// No forcing at all.
    pub fn silent(basis: &SpectralBasis, seed: u64) -> Self {
        Self {
            coefficients: vec![0.0; basis.mode_count()],
            forced_cutoff: None,
            seed,
            b0: 0.0,
            b_max: 0.0,
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn forced_cutoff(&self) -> Option<usize> {
        self.forced_cutoff
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// `B₀ = Σ bᵢ²`.
    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    /// Largest forced wavenumber `N′`, if any mode is forced.
    pub fn highest_forced_wavenumber(&self) -> Option<usize> {
        self.coefficients
            .iter()
            .rposition(|&b| b != 0.0)
            .map(|i| i.div_ceil(2))
    }

    pub fn stream(&self, stream_id: u64) -> NoiseStream<'_> {
        NoiseStream {
            spec: self,
            stream_id,
        }
    }
}

/// `(B₀, b_max)` for a coefficient vector.
pub fn effective_constants(coefficients: &[f64]) -> (f64, f64) {
    let b0 = coefficients.iter().map(|b| b * b).sum();
    let b_max = coefficients.iter().copied().fold(0.0, f64::max);
    (b0, b_max)
}

/// One trajectory's view of the noise.
#[derive(Debug, Clone, Copy)]
pub struct NoiseStream<'a> {
    spec: &'a NoiseSpec,
    stream_id: u64,
}

impl NoiseStream<'_> {
    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn spec(&self) -> &NoiseSpec {
        self.spec
    }

    fn rng(&self, step: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.spec.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream_id.to_le_bytes());
        key[16..].copy_from_slice(KEY_TAG);
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(step);
        rng
    }

    /// Writes the increment `ΔW` for `step` into `out`: coefficient `i` is
    /// `bᵢ √dt Zᵢ` with `Zᵢ` standard normal, zero on unforced modes.
    pub fn increment_into(&self, step: u64, dt: f64, out: &mut [f64]) {
        let mut rng = self.rng(step);
        let sdt = dt.sqrt();
        for (o, &b) in out.iter_mut().zip(&self.spec.coefficients) {
            *o = if b == 0.0 {
                0.0
            } else {
                let z: f64 = StandardNormal.sample(&mut rng);
                b * sdt * z
            };
        }
    }
}

/// Increment of the noise over `[step·dt, (step+1)·dt]` as a field.
pub fn sample_increment(
    basis: &std::sync::Arc<SpectralBasis>,
    spec: &NoiseSpec,
    stream_id: u64,
    step: u64,
    dt: f64,
) -> Result<SpectralField> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let mut f = SpectralField::zeros(basis);
    spec.stream(stream_id)
        .increment_into(step, dt, f.coeffs_mut());
    Ok(f)
}

/// A recorded noise path: `increments[step][mode]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub increments: Vec<Vec<f64>>,
}

const BINARY_MAGIC: &[u8; 4] = b"SHNZ";
const BINARY_VERSION: u32 = 1;

impl NoisePath {
    pub fn record(stream: &NoiseStream<'_>, modes: usize, steps: u64, dt: f64) -> Self {
        let increments = (0..steps)
            .map(|s| {
                let mut v = vec![0.0; modes];
                stream.increment_into(s, dt, &mut v);
                v
            })
            .collect();
        Self { increments }
    }

    /// CSV rows `step,mode,increment`, forced (nonzero) entries only.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,mode,increment")?;
        for (s, row) in self.increments.iter().enumerate() {
            for (m, v) in row.iter().enumerate() {
                if *v != 0.0 {
                    writeln!(w, "{s},{m},{v:.16e}")?;
                }
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, modes: usize) -> Result<Self> {
        let mut increments: Vec<Vec<f64>> = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<noise csv>", e))?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let bad = |reason: &str| Error::Parse {
                what: "noise csv",
                line: i + 1,
                reason: reason.to_string(),
            };
            let mut parts = line.split(',');
            let step: usize = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad("bad step"))?;
            let mode: usize = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad("bad mode"))?;
            let value: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad("bad increment"))?;
            if mode >= modes {
                return Err(bad("mode index out of range"));
            }
            if increments.len() <= step {
                increments.resize(step + 1, vec![0.0; modes]);
            }
            increments[step][mode] = value;
        }
        Ok(Self { increments })
    }

    /// Little-endian binary: magic, version, mode count, step count, then
    /// `steps × modes` f64 values row-major.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let modes = self.increments.first().map_or(0, Vec::len);
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&(modes as u32).to_le_bytes())?;
        w.write_all(&(self.increments.len() as u64).to_le_bytes())?;
        for row in &self.increments {
            for v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let io = |e| Error::io("<noise binary>", e);
        let mut head = [0u8; 20];
        r.read_exact(&mut head).map_err(io)?;
        if &head[..4] != BINARY_MAGIC {
            return Err(Error::Parse {
                what: "noise binary",
                line: 0,
                reason: "bad magic".into(),
            });
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != BINARY_VERSION {
            return Err(Error::Parse {
                what: "noise binary",
                line: 0,
                reason: format!("unsupported version {version}"),
            });
        }
        let modes = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        let steps = u64::from_le_bytes(head[12..20].try_into().unwrap()) as usize;
        let mut increments = Vec::with_capacity(steps);
        let mut buf = [0u8; 8];
        for _ in 0..steps {
            let mut row = Vec::with_capacity(modes);
            for _ in 0..modes {
                r.read_exact(&mut buf).map_err(io)?;
                row.push(f64::from_le_bytes(buf));
            }
            increments.push(row);
        }
        Ok(Self { increments })
    }
}

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{DEFAULT_ALPHA, DEFAULT_EPSILON};
use crate::dynamics::{KernelSpec, ModelParams, MollifierNormalization, Nonlinearity};
use crate::forcing::NoiseSpec;
use crate::spectral::SpectralBasis;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Certify,
    Simulate,
    Slave,
    Couple,
    Ergodicity,
    Kernels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    #[default]
    Local,
    Nonlocal,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    RaisedCosine,
    Mollifier,
    Table,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_k() -> usize {
    32
}
fn default_one() -> usize {
    1
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_slack() -> f64 {
    crate::coupling::DEFAULT_ENERGY_SLACK
}
fn default_level() -> f64 {
    3.0
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// A run description: a flat key-value document. Times are in the
/// nondimensional time of the model; lengths of windows and horizons must
/// be whole multiples of `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,

    #[serde(default = "default_k")]
    pub max_wavenumber: usize,
    /// Collocation points; defaults to the smallest power of two `≥ 4K+1`.
    #[serde(default)]
    pub grid_size: Option<usize>,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub nonlinearity: NonlinearityKind,
    pub low_cutoff: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,

    #[serde(default)]
    pub kernel: KernelKind,
    /// Kernel bounds `b ≤ G ≤ a`.
    #[serde(default)]
    pub kernel_lower: Option<f64>,
    #[serde(default)]
    pub kernel_upper: Option<f64>,
    /// Mollifier half-width `δ₀`.
    #[serde(default)]
    pub kernel_delta: Option<f64>,
    #[serde(default)]
    pub kernel_normalization: MollifierNormalization,
    /// Two-column `x,G(x)` table for `kernel = "table"`.
    #[serde(default)]
    pub kernel_table: Option<PathBuf>,

    /// Highest forced wavenumber; defaults to `low_cutoff`.
    #[serde(default)]
    pub forced_cutoff: Option<usize>,
    /// Uniform noise coefficient on forced modes.
    #[serde(default)]
    pub noise_amplitude: Option<f64>,
    /// Explicit coefficients in mode order; overrides the amplitude.
    #[serde(default)]
    pub noise_coefficients: Option<Vec<f64>>,

    #[serde(default = "default_one")]
    pub ensemble_size: usize,
    #[serde(default)]
    pub horizon: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Steps between stored energy samples.
    #[serde(default)]
    pub energy_stride: Option<usize>,
    /// Steps between recorded trajectory states.
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,

    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_slack")]
    pub energy_slack: f64,
    /// Level `r` of the pathwise energy bound.
    #[serde(default = "default_level")]
    pub deviation_level: f64,
    /// Cap `D`; defaults to `2√R`.
    #[serde(default)]
    pub norm_cap: Option<f64>,
    #[serde(default)]
    pub window_length: Option<f64>,
    #[serde(default)]
    pub window_count: Option<usize>,

    /// `|u₀|` of the first initial condition (direction `cos x`).
    #[serde(default)]
    pub initial_norm: f64,
    /// `|u₀|` of the second initial condition.
    #[serde(default)]
    pub initial_norm_2: Option<f64>,
    /// Fit only times `≥ fit_from`.
    #[serde(default)]
    pub fit_from: Option<f64>,
    /// Fit only times `≤ fit_until`.
    #[serde(default)]
    pub fit_until: Option<f64>,
    /// Random trials per kernel inequality.
    #[serde(default)]
    pub trials: Option<usize>,
}

fn line_of(source: &str, key: &str) -> usize {
    source
        .lines()
        .position(|l| {
            let t = l.trim_start();
            t.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

fn multiple_of(x: f64, dt: f64) -> bool {
    let n = (x / dt).round();
    (n * dt - x).abs() <= 1e-9 * x.abs().max(dt)
}

impl RunConfig {
    /// Parses and validates a TOML document. Errors carry the offending line.
    pub fn from_toml_str(source: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(source).map_err(|e| {
            let line = e.span().map_or(0, |s| {
                source[..s.start.min(source.len())].matches('\n').count() + 1
            });
            Error::Parse {
                what: "config",
                line,
                reason: e.message().to_string(),
            }
        })?;
        cfg.validate().map_err(|(key, reason)| Error::Parse {
            what: "config",
            line: line_of(source, key),
            reason: format!("`{key}`: {reason}"),
        })?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let fail = |k: &'static str, r: &str| Err((k, r.to_string()));
        if self.max_wavenumber == 0 {
            return fail("max_wavenumber", "must be at least 1");
        }
        if let Some(m) = self.grid_size {
            if m < 3 * self.max_wavenumber + 1 {
                return fail("grid_size", "must be at least 3·max_wavenumber + 1");
            }
        }
        if !self.rho.is_finite() {
            return fail("rho", "must be finite");
        }
        if self.low_cutoff == 0 || self.low_cutoff > self.max_wavenumber {
            return fail("low_cutoff", "must lie in 1..=max_wavenumber");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail("dt", "must be positive");
        }
        if !(self.horizon >= 0.0) || !multiple_of(self.horizon, self.dt) {
            return fail("horizon", "must be a nonnegative multiple of dt");
        }
        for &t in &self.snapshot_times {
            if !(t >= 0.0 && t <= self.horizon) || !multiple_of(t, self.dt) {
                return fail(
                    "snapshot_times",
                    "each must be a multiple of dt within the horizon",
                );
            }
        }
        if let (Some(b), Some(a)) = (self.kernel_lower, self.kernel_upper) {
            if a < b {
                return fail(
                    "kernel_upper",
                    "kernel upper bound is below the lower bound",
                );
            }
        }
        if self.kernel_lower.is_some_and(|b| !(b >= 0.0)) {
            return fail("kernel_lower", "must be nonnegative");
        }
        if let Some(d) = self.kernel_delta {
            if !(d > 0.0 && d < std::f64::consts::PI) {
                return fail("kernel_delta", "must lie in (0, π)");
            }
        }
        if self.nonlinearity == NonlinearityKind::Nonlocal {
            match self.kernel {
                KernelKind::RaisedCosine
                    if self.kernel_lower.is_none() || self.kernel_upper.is_none() =>
                {
                    return fail(
                        "kernel",
                        "raised_cosine needs kernel_lower and kernel_upper",
                    );
                }
                KernelKind::Table if self.kernel_table.is_none() => {
                    return fail("kernel_table", "required for kernel = \"table\"");
                }
                _ => {}
            }
        }
        if let Some(n) = self.forced_cutoff {
            if n > self.max_wavenumber {
                return fail("forced_cutoff", "exceeds max_wavenumber");
            }
        }
        if self.noise_amplitude.is_some_and(|a| !(a >= 0.0)) {
            return fail("noise_amplitude", "must be nonnegative");
        }
        if let Some(c) = &self.noise_coefficients {
            if c.len() != 2 * self.max_wavenumber + 1 {
                return fail(
                    "noise_coefficients",
                    "needs one entry per mode (2·max_wavenumber + 1)",
                );
            }
        }
        if self.ensemble_size == 0 {
            return fail("ensemble_size", "must be positive");
        }
        if self.energy_stride == Some(0) {
            return fail("energy_stride", "must be positive");
        }
        if self.record_every == Some(0) {
            return fail("record_every", "must be positive");
        }
        if !(self.alpha > 0.0) {
            return fail("alpha", "must be positive");
        }
        if !(self.epsilon > 0.0) {
            return fail("epsilon", "must be positive");
        }
        if !(self.energy_slack > 0.0) {
            return fail("energy_slack", "must be positive");
        }
        if !(self.deviation_level > 0.0) {
            return fail("deviation_level", "must be positive");
        }
        if self.norm_cap.is_some_and(|d| !(d > 0.0)) {
            return fail("norm_cap", "must be positive");
        }
        if let Some(t) = self.window_length {
            if !(t > 0.0) || !multiple_of(t, self.dt) {
                return fail("window_length", "must be a positive multiple of dt");
            }
        }
        if self.window_count == Some(0) {
            return fail("window_count", "must be positive");
        }
        if !(self.initial_norm >= 0.0) || self.initial_norm_2.is_some_and(|v| !(v >= 0.0)) {
            return fail("initial_norm", "must be nonnegative");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (sorted keys, defaults filled in,
    /// output directory blanked), so formatting and key order do not change it.
    pub fn hash(&self) -> String {
        let mut normalized = self.clone();
        normalized.output_dir = PathBuf::new();
        let value = serde_json::to_value(&normalized).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn basis(&self) -> Result<Arc<SpectralBasis>> {
        match self.grid_size {
            Some(m) => SpectralBasis::with_grid(self.max_wavenumber, m),
            None => SpectralBasis::new(self.max_wavenumber),
        }
    }

    /// Kernel described by the `kernel_*` keys.
    pub fn kernel_spec(&self, basis: &Arc<SpectralBasis>) -> Result<KernelSpec> {
        match self.kernel {
            KernelKind::RaisedCosine => KernelSpec::raised_cosine(
                basis,
                self.kernel_lower.unwrap_or(1.0),
                self.kernel_upper.unwrap_or(1.0),
            ),
            KernelKind::Mollifier => KernelSpec::mollifier(
                basis,
                self.kernel_delta.unwrap_or(0.1),
                self.kernel_normalization,
            ),
            KernelKind::Table => {
                let path = self
                    .kernel_table
                    .as_ref()
                    .ok_or_else(|| Error::Config("kernel_table missing".into()))?;
                let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
                KernelSpec::read_csv(
                    std::io::BufReader::new(f),
                    basis,
                    self.kernel_lower.unwrap_or(0.0),
                    self.kernel_upper.unwrap_or(f64::INFINITY),
                )
            }
        }
    }

    pub fn model(&self, basis: &Arc<SpectralBasis>) -> Result<ModelParams> {
        let nl = match self.nonlinearity {
            NonlinearityKind::Local => Nonlinearity::LocalCubic,
            NonlinearityKind::Off => Nonlinearity::Off,
            NonlinearityKind::Nonlocal => Nonlinearity::Nonlocal(self.kernel_spec(basis)?),
        };
        ModelParams::new(basis, self.rho, nl, self.low_cutoff, self.dt)
    }

    pub fn noise(&self, basis: &Arc<SpectralBasis>) -> Result<NoiseSpec> {
        let cutoff = self.forced_cutoff.unwrap_or(self.low_cutoff);
        match &self.noise_coefficients {
            Some(c) => NoiseSpec::new(basis, c.clone(), None, self.seed),
            None => NoiseSpec::uniform(
                basis,
                cutoff,
                self.noise_amplitude.unwrap_or(1.0),
                self.seed,
            ),
        }
    }
}

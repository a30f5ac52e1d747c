use serde::Serialize;

use crate::spectral::eigenvalue;
use crate::{Error, Result};

/// Default mean-decay rate `α`.
pub const DEFAULT_ALPHA: f64 = 1.0;
/// Default `ε` for the nonnegative-kernel variant.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// The scalar quartic `f(x) = 2c x² − q x⁴ + B₀` on `x ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartic {
    pub c: f64,
    pub q: f64,
    pub b0: f64,
}

impl Quartic {
    pub fn eval(&self, x: f64) -> f64 {
        let x2 = x * x;
        2.0 * self.c * x2 - self.q * x2 * x2 + self.b0
    }

    /// `c²/q + B₀` for `c > 0`, else `B₀`.
    pub fn closed_form_max(&self) -> f64 {
        if self.c > 0.0 {
            self.c * self.c / self.q + self.b0
        } else {
            self.b0
        }
    }

    /// Maximizer location of [`Quartic::closed_form_max`].
    pub fn argmax(&self) -> f64 {
        if self.c > 0.0 {
            (self.c / self.q).sqrt()
        } else {
            0.0
        }
    }

    /// Grid search over `[0, X]` followed by golden-section refinement of
    /// the best bracket.
    pub fn grid_max(&self) -> f64 {
        let reach = if self.c > 0.0 {
            2.0 * self.argmax()
        } else {
            1.0
        };
        let hi = reach.max(1.0);
        let n: usize = 20_000;
        let h = hi / n as f64;
        let (best, _) = (0..=n).map(|i| (i, self.eval(i as f64 * h))).fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
        );
        let mut a = (best.saturating_sub(1)) as f64 * h;
        let mut b = ((best + 1).min(n)) as f64 * h;
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if self.eval(x1) < self.eval(x2) {
                a = x1;
            } else {
                b = x2;
            }
        }
        self.eval(0.5 * (a + b)).max(self.eval(0.0))
    }
}

/// Which energy estimate to maximize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum EnergyModel {
    /// Cubic nonlinearity, quartic coefficient `1/(2π)`.
    Local,
    /// Kernel bounded below by `lower > 0`, quartic coefficient `lower`.
    PositiveKernel { lower: f64 },
    /// Nonnegative kernel, linear coefficient shifted by `ε`.
    NonnegativeKernel { epsilon: f64 },
}

/// The quartic whose maximum is the energy constant `C₁` (or `C̃₁`).
pub fn energy_quartic(rho: f64, b0: f64, b_max: f64, model: EnergyModel) -> Result<Quartic> {
    let base = rho + b_max * b_max + 0.5;
    let (c, q) = match model {
        EnergyModel::Local => (base, 1.0 / (2.0 * std::f64::consts::PI)),
        EnergyModel::PositiveKernel { lower } => {
            if !(lower > 0.0) {
                return Err(Error::invalid("kernel lower bound", "must be positive"));
            }
            (base, lower)
        }
        EnergyModel::NonnegativeKernel { epsilon } => {
            if !(epsilon > 0.0) {
                return Err(Error::invalid("epsilon", "must be positive"));
            }
            (base + epsilon, 1.0 / (2.0 * std::f64::consts::PI))
        }
    };
    Ok(Quartic { c, q, b0 })
}

/// Energy constant `C₁` for the given model.
pub fn energy_certificate(rho: f64, b0: f64, b_max: f64, model: EnergyModel) -> Result<f64> {
    Ok(energy_quartic(rho, b0, b_max, model)?.closed_form_max())
}

/// The quartic whose maximum is `R·α`.
pub fn mean_energy_quartic(rho: f64, b0: f64, alpha: f64) -> Result<Quartic> {
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha", "must be positive"));
    }
    Ok(Quartic {
        c: 0.5 * (2.0 * rho - alpha),
        q: 1.0 / (2.0 * std::f64::consts::PI),
        b0,
    })
}

/// Stationary mean-energy constant `R`.
pub fn mean_energy_bound(rho: f64, b0: f64, alpha: f64) -> Result<f64> {
    Ok(mean_energy_quartic(rho, b0, alpha)?.closed_form_max() / alpha)
}

/// Model variants for the mode-count threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdModel {
    Local,
    PositiveKernel { lower: f64, upper: f64 },
    NonnegativeKernel { upper: f64, epsilon: f64 },
}

/// Offset `X` in the threshold condition `α_N + X < 0`, written in the
/// printed closed form.
fn threshold_offset_formula(rho: f64, b0: f64, b_max: f64, model: ThresholdModel) -> f64 {
    let s = rho + b_max * b_max + 0.5;
    match model {
        ThresholdModel::Local => rho,
        ThresholdModel::PositiveKernel { lower, upper } => {
            rho + upper + 2.5 * upper * (b0 + s * s / lower)
        }
        ThresholdModel::NonnegativeKernel { upper, epsilon } => {
            let t = s + epsilon;
            rho + upper + 2.5 * upper * (b0 + 2.0 * std::f64::consts::PI * t * t)
        }
    }
}

/// The same offset assembled from the maximized energy constant.
fn threshold_offset_spectral(rho: f64, b0: f64, b_max: f64, model: ThresholdModel) -> Result<f64> {
    Ok(match model {
        ThresholdModel::Local => rho,
        ThresholdModel::PositiveKernel { lower, upper } => {
            let c = energy_certificate(rho, b0, b_max, EnergyModel::PositiveKernel { lower })?;
            rho + upper + 2.5 * upper * c
        }
        ThresholdModel::NonnegativeKernel { upper, epsilon } => {
            let c = energy_certificate(rho, b0, b_max, EnergyModel::NonnegativeKernel { epsilon })?;
            rho + upper + 2.5 * upper * c
        }
    })
}

fn validate_threshold(rho: f64, b0: f64, b_max: f64, model: ThresholdModel) -> Result<()> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::invalid("rho", "must be finite and nonnegative"));
    }
    if !(b0 >= 0.0 && b_max >= 0.0) {
        return Err(Error::invalid("noise constants", "must be nonnegative"));
    }
    match model {
        ThresholdModel::Local => {}
        ThresholdModel::PositiveKernel { lower, upper } => {
            if upper < lower {
                return Err(Error::InconsistentKernelBounds { lower, upper });
            }
            if !(lower > 0.0) {
                return Err(Error::invalid("kernel lower bound", "must be positive"));
            }
        }
        ThresholdModel::NonnegativeKernel { upper, epsilon } => {
            if !(upper > 0.0) {
                return Err(Error::invalid("kernel upper bound", "must be positive"));
            }
            if !(epsilon > 0.0) {
                return Err(Error::invalid("epsilon", "must be positive"));
            }
        }
    }
    Ok(())
}

/// Smallest integer strictly above `√(√X + 1)`.
pub fn threshold_by_formula(offset: f64) -> usize {
    (offset.sqrt() + 1.0).sqrt().floor() as usize + 1
}

/// Smallest `N ≥ 1` with `α_N + X < 0`.
pub fn threshold_by_spectrum(offset: f64) -> usize {
    (1..)
        .find(|&n| eigenvalue(n) + offset < 0.0)
        .expect("spectrum unbounded below")
}

/// Mode-count threshold, computed from the closed-form inequality and from
/// the spectrum; the two must agree.
pub fn mode_threshold(rho: f64, b0: f64, b_max: f64, model: ThresholdModel) -> Result<usize> {
    validate_threshold(rho, b0, b_max, model)?;
    let formula = threshold_by_formula(threshold_offset_formula(rho, b0, b_max, model));
    let spectral = threshold_by_spectrum(threshold_offset_spectral(rho, b0, b_max, model)?);
    if formula != spectral {
        return Err(Error::ThresholdMismatch { formula, spectral });
    }
    Ok(formula)
}

/// Inputs for a full certificate report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateInputs {
    pub rho: f64,
    pub b0: f64,
    pub b_max: f64,
    pub alpha: f64,
    pub low_cutoff: usize,
    /// Positive-kernel bounds `b ≤ G ≤ a`; `None` skips that variant.
    pub kernel_bounds: Option<(f64, f64)>,
    /// Upper bound of the nonnegative kernel.
    pub mollifier_upper: Option<f64>,
    pub epsilon: f64,
}

/// Closed-form constants for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificates {
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C1_tilde")]
    pub c1_tilde: Option<f64>,
    #[serde(rename = "C1_nonneg")]
    pub c1_nonneg: Option<f64>,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub threshold_n: usize,
    pub threshold_n_tilde: Option<usize>,
    pub threshold_n_nonneg: Option<usize>,
    /// `−(α_{N+1} + ϱ)` at the configured cutoff.
    pub predicted_contraction: f64,
    /// `−(α_N + ϱ)` at the configured cutoff.
    pub predicted_contraction_at_cutoff: f64,
    /// Largest relative gap between closed-form and grid-search maxima.
    pub grid_check_rel_error: f64,
}

fn rel_gap(q: &Quartic) -> f64 {
    let exact = q.closed_form_max();
    (exact - q.grid_max()).abs() / exact.abs().max(f64::MIN_POSITIVE)
}

impl Certificates {
    pub fn compute(inp: &CertificateInputs) -> Result<Self> {
        let q1 = energy_quartic(inp.rho, inp.b0, inp.b_max, EnergyModel::Local)?;
        let qr = mean_energy_quartic(inp.rho, inp.b0, inp.alpha)?;
        let mut gap = rel_gap(&q1).max(rel_gap(&qr));
        let threshold_n = mode_threshold(inp.rho, inp.b0, inp.b_max, ThresholdModel::Local)?;

        let (c1_tilde, threshold_n_tilde) = match inp.kernel_bounds {
            Some((lower, upper)) => {
                let q = energy_quartic(
                    inp.rho,
                    inp.b0,
                    inp.b_max,
                    EnergyModel::PositiveKernel { lower },
                )?;
                gap = gap.max(rel_gap(&q));
                let n = mode_threshold(
                    inp.rho,
                    inp.b0,
                    inp.b_max,
                    ThresholdModel::PositiveKernel { lower, upper },
                )?;
                (Some(q.closed_form_max()), Some(n))
            }
            None => (None, None),
        };
        let (c1_nonneg, threshold_n_nonneg) = match inp.mollifier_upper {
            Some(upper) => {
                let q = energy_quartic(
                    inp.rho,
                    inp.b0,
                    inp.b_max,
                    EnergyModel::NonnegativeKernel {
                        epsilon: inp.epsilon,
                    },
                )?;
                gap = gap.max(rel_gap(&q));
                let n = mode_threshold(
                    inp.rho,
                    inp.b0,
                    inp.b_max,
                    ThresholdModel::NonnegativeKernel {
                        upper,
                        epsilon: inp.epsilon,
                    },
                )?;
                (Some(q.closed_form_max()), Some(n))
            }
            None => (None, None),
        };
        Ok(Self {
            c1: q1.closed_form_max(),
            c1_tilde,
            c1_nonneg,
            alpha: inp.alpha,
            r: qr.closed_form_max() / inp.alpha,
            threshold_n,
            threshold_n_tilde,
            threshold_n_nonneg,
            predicted_contraction: -(eigenvalue(inp.low_cutoff + 1) + inp.rho),
            predicted_contraction_at_cutoff: -(eigenvalue(inp.low_cutoff) + inp.rho),
            grid_check_rel_error: gap,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Plain grid search, step `h` over `[0, hi]`.
    fn oracle_max(f: impl Fn(f64) -> f64, hi: f64, h: f64) -> f64 {
        let n = (hi / h).round() as usize;
        (0..=n)
            .map(|i| f(i as f64 * h))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn enumerate(offset: f64) -> usize {
        let mut n = 1usize;
        loop {
            let m = (n * n) as f64 - 1.0;
            if m * m > offset {
                return n;
            }
            n += 1;
        }
    }

    #[test]
    fn local_c1_example() {
        let c1 = energy_certificate(1.0, 2.0, 1.0, EnergyModel::Local).unwrap();
        let oracle = oracle_max(|x| 5.0 * x * x - x.powi(4) / (2.0 * PI) + 2.0, 10.0, 1e-4);
        assert!((c1 - oracle).abs() / oracle < 1e-6, "{c1} vs {oracle}");
        assert!((c1 - 41.27).abs() < 0.01);
    }

    #[test]
    fn kernel_c1_example() {
        let c =
            energy_certificate(1.0, 2.0, 1.0, EnergyModel::PositiveKernel { lower: 1.0 }).unwrap();
        let oracle = oracle_max(|x| 5.0 * x * x - x.powi(4) + 2.0, 10.0, 1e-4);
        assert!((c - 8.25).abs() < 1e-12);
        assert!((c - oracle).abs() / oracle < 1e-6);
    }

    #[test]
    fn c1_reduces_to_b0_for_negative_linear_coefficient() {
        let c = energy_certificate(-5.0, 2.0, 1.0, EnergyModel::Local).unwrap();
        assert_eq!(c, 2.0);
    }

    #[test]
    fn positive_kernel_needs_positive_lower_bound() {
        assert!(
            energy_certificate(1.0, 2.0, 1.0, EnergyModel::PositiveKernel { lower: 0.0 }).is_err()
        );
    }

    #[test]
    fn mean_bound_examples() {
        let r = mean_energy_bound(1.0, 2.0, 1.0).unwrap();
        let oracle = oracle_max(|x| x * x - x.powi(4) / (2.0 * PI) + 2.0, 10.0, 1e-4);
        assert!((r - oracle).abs() / oracle < 1e-6);
        assert!((r - 3.5708).abs() < 1e-3);
        assert_eq!(mean_energy_bound(0.5, 2.0, 1.0).unwrap(), 2.0);
        assert_eq!(mean_energy_bound(0.5, 2.0, 4.0).unwrap(), 0.5);
        assert!(mean_energy_bound(1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn local_thresholds() {
        for (rho, n) in [
            (0.0, 2),
            (1.0, 2),
            (8.0, 2),
            (9.0, 3),
            (9.0001, 3),
            (15.0, 3),
            (100.0, 4),
        ] {
            assert_eq!(
                mode_threshold(rho, 0.0, 0.0, ThresholdModel::Local).unwrap(),
                n
            );
            assert_eq!(enumerate(rho), n);
        }
    }

    #[test]
    fn nonlocal_threshold_example() {
        let m = ThresholdModel::PositiveKernel {
            lower: 1.0,
            upper: 1.0,
        };
        assert!((threshold_offset_formula(1.0, 2.0, 1.0, m) - 22.625).abs() < 1e-12);
        assert_eq!(mode_threshold(1.0, 2.0, 1.0, m).unwrap(), 3);
    }

    #[test]
    fn threshold_rejects_bad_inputs() {
        let m = ThresholdModel::PositiveKernel {
            lower: 2.0,
            upper: 1.0,
        };
        assert!(matches!(
            mode_threshold(1.0, 2.0, 1.0, m),
            Err(Error::InconsistentKernelBounds { .. })
        ));
        assert!(mode_threshold(-1.0, 0.0, 0.0, ThresholdModel::Local).is_err());
    }

    #[test]
    fn threshold_paths_agree_on_rho_grid() {
        for i in 0..=200 {
            let rho = 0.5 * i as f64;
            let n = mode_threshold(rho, 0.0, 0.0, ThresholdModel::Local).unwrap();
            assert_eq!(n, enumerate(rho));
            assert!(n >= 2);
        }
    }

    #[test]
    fn report_fields() {
        let c = Certificates::compute(&CertificateInputs {
            rho: 1.0,
            b0: 2.0,
            b_max: 1.0,
            alpha: 1.0,
            low_cutoff: 3,
            kernel_bounds: Some((1.0, 1.0)),
            mollifier_upper: Some(4.5),
            epsilon: 0.1,
        })
        .unwrap();
        assert_eq!(c.threshold_n, 2);
        assert_eq!(c.threshold_n_tilde, Some(3));
        assert!(c.threshold_n_nonneg.unwrap() >= 2);
        assert_eq!(c.predicted_contraction, 224.0);
        assert_eq!(c.predicted_contraction_at_cutoff, 63.0);
        assert!(c.grid_check_rel_error < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closed_form_matches_grid(
            rho in 0.0..20.0f64,
            b0 in 0.0..10.0f64,
            bmax in 0.0..3.0f64,
            lower in 0.05..5.0f64,
            alpha in 0.05..10.0f64,
        ) {
            for q in [
                energy_quartic(rho, b0, bmax, EnergyModel::Local).unwrap(),
                energy_quartic(rho, b0, bmax, EnergyModel::PositiveKernel { lower }).unwrap(),
                mean_energy_quartic(rho, b0, alpha).unwrap(),
            ] {
                let hi = 3.0 * q.argmax().max(1.0);
                let oracle = oracle_max(|x| q.eval(x), hi, hi * 1e-5);
                let exact = q.closed_form_max();
                prop_assert!((exact - oracle).abs() <= 1e-6 * exact.abs().max(1e-300));
                prop_assert!((exact - q.grid_max()).abs() <= 1e-9 * exact.abs().max(1e-300));
            }
        }

        #[test]
        fn kernel_threshold_paths_agree(
            rho in 0.0..10.0f64,
            b0 in 0.0..5.0f64,
            bmax in 0.0..2.0f64,
            lower in 0.1..3.0f64,
            extra in 0.0..3.0f64,
            eps in 0.01..1.0f64,
        ) {
            let upper = lower + extra;
            let pos = ThresholdModel::PositiveKernel { lower, upper };
            let n = mode_threshold(rho, b0, bmax, pos).unwrap();
            prop_assert_eq!(n, enumerate(threshold_offset_formula(rho, b0, bmax, pos)));
            let nn = ThresholdModel::NonnegativeKernel { upper, epsilon: eps };
            let n2 = mode_threshold(rho, b0, bmax, nn).unwrap();
            prop_assert_eq!(n2, enumerate(threshold_offset_formula(rho, b0, bmax, nn)));
        }
    }
}

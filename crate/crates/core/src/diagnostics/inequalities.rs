//! Randomized checks of the kernel product estimates and of the mollifier
//! approximation property, evaluated with grid quadrature.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dynamics::{mollifier_constant, mollifier_samples, KernelSpec, MollifierNormalization};
use crate::spectral::{low_mode_count, KernelTransform, SpectralBasis};
use crate::{Error, Result};

/// Violation count for one inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` observed.
    pub worst_ratio: f64,
}

struct Grid<'a> {
    basis: &'a SpectralBasis,
    kernel: KernelTransform,
    work: crate::spectral::FftWork,
}

impl Grid<'_> {
    fn norm(&self, f: &[f64]) -> f64 {
        (self.basis.spacing() * f.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    fn conv(&mut self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.basis
            .convolve_into(&self.kernel, f, &mut out, &mut self.work);
        out
    }
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn random_field(
    basis: &SpectralBasis,
    range: std::ops::Range<usize>,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let scale: f64 = rng.random_range(0.05..3.0);
    let mut c = vec![0.0; basis.mode_count()];
    let width = (range.len() as f64).sqrt().max(1.0);
    for v in &mut c[range] {
        let z: f64 = rng.sample(StandardNormal);
        *v = scale * z / width;
    }
    let mut g = vec![0.0; basis.grid_size()];
    basis.synthesize(&c, &mut g, &mut basis.workspace());
    g
}

/// Checks the product estimates for `G∗` against random `(l, h¹, h²)` with
/// `l` in the low space of `cutoff` and `h¹, h²` in its complement:
///
/// ```text
/// |2l G∗[l(h¹−h²)]|              ≤ 2a |h¹−h²| |l|²
/// |l G∗[(h¹−h²)(h¹+h²)]|         ≤ a |h¹−h²| |h¹+h²| |l|
/// |(h¹−h²) G∗l²|                 ≤ a |h¹−h²| |l|²
/// |h¹G∗(h¹)² − h²G∗(h²)²|        ≤ a |h¹−h²| (|h¹|² + |h¹+h²| |h²|)
/// 2|h¹G∗(lh¹) − h²G∗(lh²)|       ≤ 2a |h¹−h²| |h¹+h²| |l|
/// |u G∗u²|                       ≤ a |u|³,   u = l + h¹
/// ⟨G∗u², u²⟩                     ≥ b |u|⁴    (only when b > 0)
/// ```
///
/// A trial violates an inequality when `lhs > rhs·(1 + slack) + slack`.
pub fn kernel_inequality_battery(
    basis: &Arc<SpectralBasis>,
    kernel: &KernelSpec,
    cutoff: usize,
    trials: usize,
    seed: u64,
    slack: f64,
) -> Result<Vec<InequalityReport>> {
    basis.check_grid(kernel.samples().len())?;
    if cutoff == 0 || cutoff >= basis.max_wavenumber() {
        return Err(Error::CutoffOutOfRange {
            cutoff,
            max: basis.max_wavenumber() - 1,
        });
    }
    let a = kernel.upper();
    let b = kernel.lower();
    let mut g = Grid {
        basis,
        kernel: basis.kernel_transform(kernel.samples())?,
        work: basis.workspace(),
    };
    let names = [
        "lGl_dh",
        "lG_dh_sh",
        "dh_Gll",
        "hGhh_diff",
        "hGlh_diff",
        "uGuu",
        "coercivity",
    ];
    let mut reports: Vec<InequalityReport> = names
        .iter()
        .map(|n| InequalityReport {
            name: n.to_string(),
            trials: 0,
            violations: 0,
            worst_ratio: 0.0,
        })
        .collect();
    let lo = low_mode_count(cutoff);
    let n = basis.mode_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let l = random_field(basis, 0..lo, &mut rng);
        let h1 = random_field(basis, lo..n, &mut rng);
        let h2 = random_field(basis, lo..n, &mut rng);
        let dh = sub(&h1, &h2);
        let sh = add(&h1, &h2);
        let (nl, ndh, nsh, nh1, nh2) = (
            g.norm(&l),
            g.norm(&dh),
            g.norm(&sh),
            g.norm(&h1),
            g.norm(&h2),
        );
        let u = add(&l, &h1);
        let nu = g.norm(&u);

        let mut pairs = Vec::with_capacity(7);
        let t = g.conv(&mul(&l, &dh));
        pairs.push((2.0 * g.norm(&mul(&l, &t)), 2.0 * a * ndh * nl * nl));
        let t = g.conv(&mul(&dh, &sh));
        pairs.push((g.norm(&mul(&l, &t)), a * ndh * nsh * nl));
        let t = g.conv(&mul(&l, &l));
        pairs.push((g.norm(&mul(&dh, &t)), a * ndh * nl * nl));
        let t1 = g.conv(&mul(&h1, &h1));
        let t2 = g.conv(&mul(&h2, &h2));
        pairs.push((
            g.norm(&sub(&mul(&h1, &t1), &mul(&h2, &t2))),
            a * ndh * nh1 * nh1 + a * ndh * nsh * nh2,
        ));
        let t1 = g.conv(&mul(&l, &h1));
        let t2 = g.conv(&mul(&l, &h2));
        pairs.push((
            2.0 * g.norm(&sub(&mul(&h1, &t1), &mul(&h2, &t2))),
            2.0 * a * ndh * nsh * nl,
        ));
        let u2 = mul(&u, &u);
        let t = g.conv(&u2);
        pairs.push((g.norm(&mul(&u, &t)), a * nu * nu * nu));
        if b > 0.0 {
            let inner = basis.spacing() * t.iter().zip(&u2).map(|(x, y)| x * y).sum::<f64>();
            pairs.push((b * nu.powi(4), inner));
        }

        for (rep, (lhs, rhs)) in reports.iter_mut().zip(pairs) {
            rep.trials += 1;
            if lhs > rhs * (1.0 + slack) + slack {
                rep.violations += 1;
            }
            if rhs > 0.0 {
                rep.worst_ratio = rep.worst_ratio.max(lhs / rhs);
            }
        }
    }
    reports.retain(|r| r.trials > 0);
    Ok(reports)
}

/// Reference bump: `exp(1 − 1/(1 − s²))`, `s = (x − π)/1.5`, peak value 1.
pub fn reference_bump(x: f64) -> f64 {
    let s = (x - std::f64::consts::PI) / 1.5;
    if s.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// One row of the mollifier approximation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MollifierRow {
    pub delta: f64,
    /// `max |J_δ∗f − f|` on the grid.
    pub sup_error: f64,
    /// Largest sample of `J_δ`.
    pub kernel_max: f64,
    /// Bound on the samples, `c/δ²` or `c/(2δ)`.
    pub kernel_bound: f64,
    pub nonnegative: bool,
}

/// Sup-norm error of `J_δ∗f` against the reference bump for each `δ`.
pub fn mollifier_approximation(
    basis: &Arc<SpectralBasis>,
    deltas: &[f64],
    normalization: MollifierNormalization,
) -> Result<Vec<MollifierRow>> {
    let f: Vec<f64> = basis
        .grid_points()
        .into_iter()
        .map(reference_bump)
        .collect();
    let c = mollifier_constant();
    deltas
        .iter()
        .map(|&delta| {
            let j = mollifier_samples(delta, basis, normalization)?;
            let conv = crate::spectral::circular_convolve(&j, &f)?;
            let sup_error = conv
                .iter()
                .zip(&f)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let kernel_bound = match normalization {
                MollifierNormalization::Verbatim => c / (delta * delta),
                MollifierNormalization::UnitMass => c / (2.0 * delta),
            };
            Ok(MollifierRow {
                delta,
                sup_error,
                kernel_max: j.iter().copied().fold(0.0, f64::max),
                kernel_bound,
                nonnegative: j.iter().all(|&v| v >= 0.0),
            })
        })
        .collect()
}

/// Whether the unit-mass mollifier at `delta` approximates the reference
/// bump within `epsilon`; used to validate an `(ε, δ₀)` pair.
pub fn validate_mollifier_pair(
    basis: &Arc<SpectralBasis>,
    delta: f64,
    epsilon: f64,
) -> Result<bool> {
    let row = mollifier_approximation(basis, &[delta], MollifierNormalization::UnitMass)?;
    Ok(row[0].sup_error <= epsilon)
}

/// Counts grid points where `J_δ∗u² < u² − ε` for random smooth `u`
/// built from wavenumbers up to `max_wavenumber`.
pub fn mollifier_lower_bound_violations(
    basis: &Arc<SpectralBasis>,
    delta: f64,
    epsilon: f64,
    normalization: MollifierNormalization,
    max_wavenumber: usize,
    trials: usize,
    seed: u64,
) -> Result<usize> {
    let g = KernelSpec::mollifier(basis, delta, normalization)?;
    let kt = basis.kernel_transform(g.samples())?;
    let mut work = basis.workspace();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = low_mode_count(max_wavenumber.min(basis.max_wavenumber()));
    let mut bad = 0;
    for _ in 0..trials {
        let mut u = random_field(basis, 0..top, &mut rng);
        let peak = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            u.iter_mut().for_each(|v| *v /= peak);
        }
        let u2 = mul(&u, &u);
        let mut conv = vec![0.0; u2.len()];
        basis.convolve_into(&kt, &u2, &mut conv, &mut work);
        if conv.iter().zip(&u2).any(|(c, v)| *c < v - epsilon) {
            bad += 1;
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_raised_cosine() {
        let basis = SpectralBasis::new(15).unwrap();
        let k = KernelSpec::raised_cosine(&basis, 0.4, 1.9).unwrap();
        let reps = kernel_inequality_battery(&basis, &k, 3, 200, 5, 1e-9).unwrap();
        assert_eq!(reps.len(), 7);
        for r in &reps {
            assert_eq!(r.violations, 0, "{r:?}");
            assert!(r.worst_ratio <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn mollifier_error_shrinks() {
        let basis = SpectralBasis::with_grid(8, 4096).unwrap();
        let rows = mollifier_approximation(
            &basis,
            &[0.4, 0.2, 0.1, 0.05],
            MollifierNormalization::UnitMass,
        )
        .unwrap();
        for w in rows.windows(2) {
            assert!(w[1].sup_error <= w[0].sup_error);
        }
        assert!(rows[3].sup_error < 0.01);
        assert!(rows
            .iter()
            .all(|r| r.nonnegative && r.kernel_max <= r.kernel_bound));
        assert!(validate_mollifier_pair(&basis, 0.1, 0.1).unwrap());
        assert!(!validate_mollifier_pair(&basis, 0.4, 1e-4).unwrap());
    }

    #[test]
    fn mollified_square_stays_above() {
        let basis = SpectralBasis::with_grid(8, 1024).unwrap();
        let bad = mollifier_lower_bound_violations(
            &basis,
            0.1,
            0.1,
            MollifierNormalization::UnitMass,
            3,
            200,
            9,
        )
        .unwrap();
        assert_eq!(bad, 0);
    }
}

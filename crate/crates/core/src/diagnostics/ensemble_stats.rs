use serde::Serialize;

use super::distance::bl_distance_1d;
use super::stats::{mean_se, wilson_interval, Proportion, Z95};
use crate::{Error, Result};

/// Name of the panel observable at index 0.
pub const NORM_SQ: &str = "norm_sq";
/// Name of the panel observable at index 1.
pub const L4_POW4: &str = "l4_pow4";

/// Observable panel names: `|u|²`, `∫u⁴`, then the first `2N+1`
/// coefficients.
pub fn panel_names(low_len: usize) -> Vec<String> {
    let mut names = vec![NORM_SQ.to_string(), L4_POW4.to_string()];
    names.extend((0..low_len).map(|i| format!("c{i}")));
    names
}

/// `|u|²` and its running time integral on a uniform grid, per path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    /// `norm_sq[path][i]` at `times[i]`.
    pub norm_sq: Vec<Vec<f64>>,
    /// Trapezoid integral of `|u|²` from 0 to `times[i]`.
    pub integral: Vec<Vec<f64>>,
}

/// Snapshot samples of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub seed: u64,
    pub stream_ids: Vec<u64>,
    pub observables: Vec<String>,
    pub snapshot_times: Vec<f64>,
    /// `snapshots[s][path][observable]`.
    pub snapshots: Vec<Vec<Vec<f64>>>,
    pub initial_norm_sq: Vec<f64>,
    pub energy: Option<EnergySeries>,
}

impl EnsembleStats {
    pub fn sample_count(&self) -> usize {
        self.stream_ids.len()
    }

    fn snapshot_index(&self, t: f64) -> Option<usize> {
        self.snapshot_times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    /// Samples of observable `obs` at snapshot `s`.
    pub fn column(&self, s: usize, obs: usize) -> Vec<f64> {
        self.snapshots[s].iter().map(|p| p[obs]).collect()
    }
}

fn check_aligned(a: &EnsembleStats, b: &EnsembleStats) -> Result<()> {
    if a.snapshot_times.len() != b.snapshot_times.len()
        || a.snapshot_times
            .iter()
            .zip(&b.snapshot_times)
            .any(|(x, y)| (x - y).abs() > 1e-9 * x.abs().max(1.0))
        || a.observables != b.observables
    {
        return Err(Error::SnapshotMismatch);
    }
    Ok(())
}

/// Per-observable BL distances at snapshot time `t`.
pub fn bl_distance_panel(a: &EnsembleStats, b: &EnsembleStats, t: f64) -> Result<Vec<f64>> {
    check_aligned(a, b)?;
    let s = a.snapshot_index(t).ok_or(Error::SnapshotMismatch)?;
    Ok((0..a.observables.len())
        .map(|o| bl_distance_1d(&a.column(s, o), &b.column(s, o)))
        .collect())
}

/// Largest per-observable BL distance at snapshot time `t`; a lower bound
/// for the distance between the laws on the full state space.
pub fn bl_distance(a: &EnsembleStats, b: &EnsembleStats, t: f64) -> Result<f64> {
    Ok(bl_distance_panel(a, b, t)?.into_iter().fold(0.0, f64::max))
}

/// Outcome of the pathwise energy-bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupermartingaleReport {
    pub violations: Proportion,
    /// `e^{−r}`.
    pub nominal: f64,
    pub pass: bool,
}

/// Fraction of paths with `|u(t)|² + ∫₀ᵗ|u|² > |u(0)|² + C₁t + r` at some
/// stored time, against the level `e^{−r}`.
pub fn supermartingale_test(ens: &EnsembleStats, c1: f64, r: f64) -> Result<SupermartingaleReport> {
    let e = ens.energy.as_ref().ok_or(Error::MissingEnergySeries)?;
    let violated = e
        .norm_sq
        .iter()
        .zip(&e.integral)
        .filter(|(ns, int)| {
            let u0 = ns[0];
            ns.iter()
                .zip(int.iter())
                .zip(&e.times)
                .any(|((n, i), t)| n + i > u0 + c1 * t + r)
        })
        .count();
    let p = wilson_interval(violated, e.norm_sq.len(), Z95);
    let nominal = (-r).exp();
    Ok(SupermartingaleReport {
        violations: p,
        nominal,
        pass: p.estimate <= nominal + p.half_width(),
    })
}

/// One snapshot of the mean-energy check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEnergyRow {
    pub time: f64,
    pub mean: f64,
    pub std_err: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Ensemble mean of `|u(t)|²` against `e^{−αt}·mean|u₀|² + R`, with a
/// three-standard-error allowance.
pub fn mean_energy_check(ens: &EnsembleStats, alpha: f64, r: f64) -> Result<Vec<MeanEnergyRow>> {
    let obs = ens
        .observables
        .iter()
        .position(|o| o == NORM_SQ)
        .ok_or(Error::MissingEnergySeries)?;
    let m0 = ens.initial_norm_sq.iter().sum::<f64>() / ens.initial_norm_sq.len().max(1) as f64;
    Ok(ens
        .snapshot_times
        .iter()
        .enumerate()
        .map(|(s, &t)| {
            let (mean, se) = mean_se(&ens.column(s, obs));
            let bound = (-alpha * t).exp() * m0 + r;
            MeanEnergyRow {
                time: t,
                mean,
                std_err: se,
                bound,
                pass: mean <= bound + 3.0 * se,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ens(samples: Vec<Vec<f64>>, times: Vec<f64>) -> EnsembleStats {
        let n = samples[0].len();
        EnsembleStats {
            seed: 0,
            stream_ids: (0..n as u64).collect(),
            observables: vec![NORM_SQ.into()],
            snapshot_times: times,
            snapshots: samples
                .into_iter()
                .map(|s| s.into_iter().map(|v| vec![v]).collect())
                .collect(),
            initial_norm_sq: vec![0.0; n],
            energy: None,
        }
    }

    #[test]
    fn identical_ensembles_have_zero_distance() {
        let a = ens(vec![vec![1.0, 2.0, 3.0]], vec![5.0]);
        assert_eq!(bl_distance(&a, &a.clone(), 5.0).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_snapshots_rejected() {
        let a = ens(vec![vec![1.0]], vec![5.0]);
        let b = ens(vec![vec![1.0]], vec![6.0]);
        assert!(matches!(
            bl_distance(&a, &b, 5.0),
            Err(Error::SnapshotMismatch)
        ));
        assert!(matches!(
            bl_distance(&a, &a, 7.0),
            Err(Error::SnapshotMismatch)
        ));
    }

    #[test]
    fn supermartingale_requires_energy() {
        let a = ens(vec![vec![1.0]], vec![5.0]);
        assert!(matches!(
            supermartingale_test(&a, 1.0, 3.0),
            Err(Error::MissingEnergySeries)
        ));
    }

    #[test]
    fn supermartingale_counts_violations() {
        let mut a = ens(vec![vec![1.0, 1.0]], vec![1.0]);
        a.energy = Some(EnergySeries {
            times: vec![0.0, 1.0],
            norm_sq: vec![vec![1.0, 1.0], vec![1.0, 9.0]],
            integral: vec![vec![0.0, 1.0], vec![0.0, 5.0]],
        });
        let rep = supermartingale_test(&a, 1.0, 3.0).unwrap();
        assert_eq!(rep.violations.successes, 1);
        let rep = supermartingale_test(&a, 1.0, 1e9).unwrap();
        assert_eq!(rep.violations.successes, 0);
        assert!(rep.pass);
    }

    #[test]
    fn mean_energy_rows() {
        let mut a = ens(vec![vec![1.0, 3.0], vec![10.0, 10.0]], vec![1.0, 2.0]);
        a.initial_norm_sq = vec![4.0, 4.0];
        let rows = mean_energy_check(&a, 1.0, 2.0).unwrap();
        assert!(rows[0].pass);
        assert!((rows[0].bound - (4.0 * (-1.0f64).exp() + 2.0)).abs() < 1e-15);
        assert!(!rows[1].pass);
    }
}

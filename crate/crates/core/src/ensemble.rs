//! Monte Carlo ensembles of independent paths and coupled pairs.
//!
//! Path `p` of an ensemble reads noise stream `first_stream + p`, so two
//! ensembles with the same seed share their noise path by path.

use serde::Serialize;

use crate::coupling::{
    label_windows, run_bound_coupling, CouplingOptions, CouplingWindow, GirsanovRecord, SetLabel,
    LOW_GAP_TOLERANCE,
};
use crate::diagnostics::{panel_names, EnergySeries, EnsembleStats};
use crate::dynamics::{ModelParams, Stepper};
use crate::exec::Execution;
use crate::forcing::NoiseSpec;
use crate::spectral::SpectralField;
use crate::{Error, Result};

/// Sampling plan of an ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePlan {
    pub paths: usize,
    pub steps: usize,
    /// Steps at which the observable panel is sampled.
    pub snapshot_steps: Vec<usize>,
    /// Store `|u|²` and its integral every this many steps.
    pub energy_stride: Option<usize>,
    pub first_stream: u64,
}

impl EnsemblePlan {
    fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::invalid("paths", "must be positive"));
        }
        if let Some(&s) = self.snapshot_steps.iter().find(|&&s| s > self.steps) {
            return Err(Error::invalid(
                "snapshot",
                format!("step {s} beyond horizon"),
            ));
        }
        if self.energy_stride == Some(0) {
            return Err(Error::invalid("energy_stride", "must be positive"));
        }
        Ok(())
    }
}

struct PathResult {
    snapshots: Vec<Vec<f64>>,
    norm_sq: Vec<f64>,
    integral: Vec<f64>,
}

fn panel(u: &SpectralField, low_len: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(low_len + 2);
    v.push(u.norm_sq());
    v.push(u.l4_pow4());
    v.extend_from_slice(&u.coeffs()[..low_len]);
    v
}

fn run_path(
    params: &ModelParams,
    noise: &NoiseSpec,
    u0: &SpectralField,
    plan: &EnsemblePlan,
    stream_id: u64,
) -> Result<PathResult> {
    let mut stepper = Stepper::new(params)?;
    let stream = noise.stream(stream_id);
    let dt = params.dt();
    let lo = params.low_len();
    let mut u = u0.clone();
    let mut dw = vec![0.0; u.coeffs().len()];
    let mut snapshots = Vec::with_capacity(plan.snapshot_steps.len());
    let mut next_snap = plan.snapshot_steps.iter().peekable();
    let mut norm_sq = Vec::new();
    let mut integral = Vec::new();
    let mut running = 0.0;
    let mut prev = u.norm_sq();
    if let Some(s) = plan.energy_stride {
        norm_sq.reserve(plan.steps / s + 1);
        integral.reserve(plan.steps / s + 1);
        norm_sq.push(prev);
        integral.push(0.0);
    }
    while next_snap.peek() == Some(&&0) {
        snapshots.push(panel(&u, lo));
        next_snap.next();
    }
    for n in 0..plan.steps {
        stream.increment_into(n as u64, dt, &mut dw);
        stepper
            .advance(u.coeffs_mut(), &dw, n)
            .map_err(|_| Error::PathDiverged {
                seed: noise.seed(),
                stream_id,
                step: n,
            })?;
        let e = u.norm_sq();
        running += 0.5 * dt * (prev + e);
        prev = e;
        if let Some(s) = plan.energy_stride {
            if (n + 1) % s == 0 {
                norm_sq.push(e);
                integral.push(running);
            }
        }
        while next_snap.peek() == Some(&&(n + 1)) {
            snapshots.push(panel(&u, lo));
            next_snap.next();
        }
    }
    Ok(PathResult {
        snapshots,
        norm_sq,
        integral,
    })
}

/// Runs `plan.paths` independent paths from `u0` and collects the
/// observable panel at each snapshot.
pub fn run_ensemble(
    params: &ModelParams,
    noise: &NoiseSpec,
    u0: &SpectralField,
    plan: &EnsemblePlan,
    exec: Execution,
) -> Result<EnsembleStats> {
    plan.validate()?;
    params.basis().check_coeffs(u0.coeffs().len())?;
    let mut snaps = plan.snapshot_steps.clone();
    snaps.sort_unstable();
    let plan = EnsemblePlan {
        snapshot_steps: snaps,
        ..plan.clone()
    };
    let results = exec.map(plan.paths, |p| {
        run_path(params, noise, u0, &plan, plan.first_stream + p as u64)
    })?;
    let dt = params.dt();
    let n_snap = plan.snapshot_steps.len();
    let snapshots = (0..n_snap)
        .map(|s| results.iter().map(|r| r.snapshots[s].clone()).collect())
        .collect();
    let energy = plan.energy_stride.map(|stride| {
        let count = results[0].norm_sq.len();
        EnergySeries {
            times: (0..count).map(|i| (i * stride) as f64 * dt).collect(),
            norm_sq: results.iter().map(|r| r.norm_sq.clone()).collect(),
            integral: results.iter().map(|r| r.integral.clone()).collect(),
        }
    });
    Ok(EnsembleStats {
        seed: noise.seed(),
        stream_ids: (0..plan.paths as u64)
            .map(|p| plan.first_stream + p)
            .collect(),
        observables: panel_names(params.low_len()),
        snapshot_times: plan.snapshot_steps.iter().map(|&s| s as f64 * dt).collect(),
        snapshots,
        initial_norm_sq: vec![u0.norm_sq(); plan.paths],
        energy,
    })
}

/// Per-pair outcome of a coupling ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSummary {
    pub stream_id: u64,
    pub labels: Vec<SetLabel>,
    pub records: Vec<GirsanovRecord>,
    pub boundary_distance: Vec<f64>,
    /// Largest low-mode gap after the first window.
    pub max_bound_gap: f64,
}

impl PairSummary {
    pub fn control_exact(&self) -> bool {
        self.max_bound_gap <= LOW_GAP_TOLERANCE
    }
}

/// Runs `pairs` coupled pairs from `(u01, u02)`, pair `p` on stream
/// `first_stream + p`.
#[allow(clippy::too_many_arguments)]
pub fn run_coupling_ensemble(
    params: &ModelParams,
    noise: &NoiseSpec,
    u01: &SpectralField,
    u02: &SpectralField,
    window: &CouplingWindow,
    pairs: usize,
    first_stream: u64,
    exec: Execution,
) -> Result<Vec<PairSummary>> {
    exec.map(pairs, |p| {
        let stream_id = first_stream + p as u64;
        let pair = run_bound_coupling(
            u01,
            u02,
            params,
            window,
            noise,
            stream_id,
            CouplingOptions::default(),
        )
        .map_err(|e| match e {
            Error::StepDiverged { step } => Error::PathDiverged {
                seed: noise.seed(),
                stream_id,
                step,
            },
            other => other,
        })?;
        let labels = label_windows(&pair, window);
        let max_bound_gap = pair.low_gap[pair.window_steps..]
            .iter()
            .copied()
            .fold(0.0, f64::max);
        Ok(PairSummary {
            stream_id,
            labels,
            records: pair.records,
            boundary_distance: pair.boundary_distance,
            max_bound_gap,
        })
    })
}

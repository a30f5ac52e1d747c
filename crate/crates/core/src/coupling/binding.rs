use std::io::Write;

use serde::Serialize;

use crate::dynamics::{ModelParams, Stepper, Trajectory};
use crate::forcing::NoiseSpec;
use crate::spectral::SpectralField;
use crate::{Error, Result};

/// Window geometry and the thresholds of the coupled-set conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingWindow {
    /// Window length `T`.
    pub length: f64,
    /// Number of windows `k`.
    pub count: usize,
    /// Cap `D` on `|uⁱ(mT)|`.
    pub norm_cap: f64,
    /// Energy slack `r`.
    pub energy_slack: f64,
    /// Energy constant `C₁`.
    pub c1: f64,
}

/// Default energy slack `r`.
pub const DEFAULT_ENERGY_SLACK: f64 = 3.0;

impl CouplingWindow {
    pub fn new(
        length: f64,
        count: usize,
        norm_cap: f64,
        energy_slack: f64,
        c1: f64,
    ) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid("T", "must be positive"));
        }
        if count == 0 {
            return Err(Error::invalid("k", "must be at least one"));
        }
        if !(norm_cap > 0.0) {
            return Err(Error::invalid("D", "must be positive"));
        }
        if !(energy_slack > 0.0) {
            return Err(Error::invalid("r", "must be positive"));
        }
        if !c1.is_finite() {
            return Err(Error::invalid("C1", "must be finite"));
        }
        Ok(Self {
            length,
            count,
            norm_cap,
            energy_slack,
            c1,
        })
    }

    /// `D = 2√R`, `r = 3`.
    pub fn with_defaults(length: f64, count: usize, mean_bound: f64, c1: f64) -> Result<Self> {
        Self::new(
            length,
            count,
            2.0 * mean_bound.sqrt(),
            DEFAULT_ENERGY_SLACK,
            c1,
        )
    }
}

/// Role of a window in the coupling run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowPhase {
    /// Low modes steered from their initial gap onto trajectory 1.
    PreCoupling,
    /// Low modes held equal.
    Bound,
}

/// Girsanov data of one window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GirsanovRecord {
    pub window: usize,
    pub phase: WindowPhase,
    /// `β` per step on the low modes; empty unless paths were recorded.
    pub drift_path: Vec<Vec<f64>>,
    /// Base increments `Δw = ΔW/b` per step on the low modes; empty unless
    /// paths were recorded.
    pub noise_path: Vec<Vec<f64>>,
    pub dt: f64,
    /// `−Σ β·Δw − ½ Σ |β|² dt`.
    pub log_weight: f64,
    /// `Σ |β|² dt`.
    pub drift_energy: f64,
}

impl GirsanovRecord {
    /// Pinsker-type upper-bound proxy `½√(drift energy)` for the total
    /// variation between the shifted and base laws.
    pub fn tv_proxy(&self) -> f64 {
        0.5 * self.drift_energy.sqrt()
    }
}

/// Left-endpoint Itô sum `−Σ β·Δw − ½ Σ |β|² dt`.
pub fn girsanov_log_weight(record: &GirsanovRecord) -> Result<f64> {
    log_weight_of(&record.drift_path, &record.noise_path, record.dt)
}

fn log_weight_of(drift: &[Vec<f64>], noise: &[Vec<f64>], dt: f64) -> Result<f64> {
    if drift.len() != noise.len() {
        return Err(Error::MisalignedPaths(format!(
            "{} drift steps, {} noise steps",
            drift.len(),
            noise.len()
        )));
    }
    let mut g = 0.0;
    for (n, (b, w)) in drift.iter().zip(noise).enumerate() {
        if b.len() != w.len() {
            return Err(Error::MisalignedPaths(format!(
                "step {n}: {} drift modes, {} noise modes",
                b.len(),
                w.len()
            )));
        }
        for (bi, wi) in b.iter().zip(w) {
            g -= bi * wi + 0.5 * bi * bi * dt;
        }
    }
    Ok(g)
}

/// Options for [`run_bound_coupling`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CouplingOptions {
    /// Keep per-step `β` and `Δw` in the Girsanov records.
    pub record_paths: bool,
    /// Store states every this many steps (window boundaries always).
    pub record_every: Option<usize>,
}

/// Two trajectories driven by the binding coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPairTrajectory {
    pub traj1: Trajectory,
    pub traj2: Trajectory,
    pub records: Vec<GirsanovRecord>,
    pub dt: f64,
    pub window_steps: usize,
    /// `|u¹|²` at every step, including step 0.
    pub norm_sq1: Vec<f64>,
    /// `|u²|²` at every step, including step 0.
    pub norm_sq2: Vec<f64>,
    /// `max |P_l u¹ − P_l u²|` at every step.
    pub low_gap: Vec<f64>,
    /// `|u¹ − u²|` at window boundaries `0, T, …, kT`.
    pub boundary_distance: Vec<f64>,
}

impl CoupledPairTrajectory {
    pub fn pre_coupled(&self) -> bool {
        self.records
            .first()
            .is_some_and(|r| r.phase == WindowPhase::PreCoupling)
    }

    pub fn windows(&self) -> usize {
        self.records.len()
    }
}

/// `P_l[N(l + h¹) − N(l + h²)]`, the low-mode drift the binding control
/// cancels.
pub fn binding_drift(
    l: &SpectralField,
    h1: &SpectralField,
    h2: &SpectralField,
    params: &ModelParams,
) -> Result<SpectralField> {
    let basis = params.basis();
    let n = params.low_cutoff();
    for f in [l, h1, h2] {
        basis.check_coeffs(f.coeffs().len())?;
    }
    if !l.is_low(n) {
        return Err(Error::WrongModeSpace("low"));
    }
    if !h1.is_high(n) || !h2.is_high(n) {
        return Err(Error::WrongModeSpace("high"));
    }
    let mut s = Stepper::new(params)?;
    let mut n1 = SpectralField::zeros(basis);
    let mut n2 = SpectralField::zeros(basis);
    s.nonlinear_into(l.add(h1).coeffs(), n1.coeffs_mut());
    s.nonlinear_into(l.add(h2).coeffs(), n2.coeffs_mut());
    n1.sub(&n2).project_low(n)
}

fn check_controllable(params: &ModelParams, spec: &NoiseSpec) -> Result<()> {
    let basis = params.basis();
    basis.check_coeffs(spec.coefficients().len())?;
    for (i, &b) in spec.coefficients()[..params.low_len()].iter().enumerate() {
        if b == 0.0 {
            return Err(Error::UncontrollableMode {
                mode: i,
                wavenumber: basis.modes()[i].wavenumber,
            });
        }
    }
    Ok(())
}

/// Runs trajectory 1 on stream `stream_id` and trajectory 2 on the same
/// increments plus the low-mode control that keeps `P_l u² = P_l u¹`.
///
/// When the initial low modes differ, the first window instead steers
/// `P_l u²` along `P_l u¹ + (1 − t/T)(P_l u²₀ − P_l u¹₀)` and is recorded
/// as [`WindowPhase::PreCoupling`].
pub fn run_bound_coupling(
    u01: &SpectralField,
    u02: &SpectralField,
    params: &ModelParams,
    window: &CouplingWindow,
    spec: &NoiseSpec,
    stream_id: u64,
    options: CouplingOptions,
) -> Result<CoupledPairTrajectory> {
    let basis = params.basis();
    basis.check_coeffs(u01.coeffs().len())?;
    basis.check_coeffs(u02.coeffs().len())?;
    check_controllable(params, spec)?;
    let nt = params.steps_for(window.length)?;
    if nt == 0 {
        return Err(Error::invalid("T", "shorter than one step"));
    }
    let total = nt * window.count;
    let record_every = options.record_every.unwrap_or(nt).max(1);
    let lo = params.low_len();
    let modes = basis.mode_count();
    let dt = params.dt();
    let b = &spec.coefficients()[..lo];

    let mut stepper = Stepper::new(params)?;
    let stream = spec.stream(stream_id);
    let decay = stepper.decay().to_vec();
    let weight = stepper.weight().to_vec();

    let mut u1 = u01.clone();
    let mut u2 = u02.clone();
    let gap0: Vec<f64> = (0..lo).map(|i| u02.coeffs()[i] - u01.coeffs()[i]).collect();
    let pre = gap0.iter().any(|&g| g != 0.0);

    let mut dw = vec![0.0; modes];
    let mut nl1 = vec![0.0; modes];
    let mut nl2 = vec![0.0; modes];
    let mut beta = vec![0.0; lo];

    let low_gap_of = |a: &SpectralField, c: &SpectralField| {
        a.coeffs()[..lo]
            .iter()
            .zip(&c.coeffs()[..lo])
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };

    let mut norm_sq1 = Vec::with_capacity(total + 1);
    let mut norm_sq2 = Vec::with_capacity(total + 1);
    let mut low_gap = Vec::with_capacity(total + 1);
    let mut boundary_distance = vec![u1.sub(&u2).norm()];
    norm_sq1.push(u1.norm_sq());
    norm_sq2.push(u2.norm_sq());
    low_gap.push(low_gap_of(&u1, &u2));
    let mut times = vec![0.0];
    let mut states1 = vec![u1.clone()];
    let mut states2 = vec![u2.clone()];
    let mut records = Vec::with_capacity(window.count);

    for w in 0..window.count {
        let phase = if pre && w == 0 {
            WindowPhase::PreCoupling
        } else {
            WindowPhase::Bound
        };
        let mut rec = GirsanovRecord {
            window: w + 1,
            phase,
            drift_path: Vec::new(),
            noise_path: Vec::new(),
            dt,
            log_weight: 0.0,
            drift_energy: 0.0,
        };
        for s in 0..nt {
            let n = w * nt + s;
            stream.increment_into(n as u64, dt, &mut dw);
            stepper.nonlinear_into(u1.coeffs(), &mut nl1);
            stepper.nonlinear_into(u2.coeffs(), &mut nl2);
            let c1 = u1.coeffs_mut();
            for i in 0..modes {
                c1[i] = decay[i] * c1[i] + weight[i] * (dw[i] - dt * nl1[i]);
            }
            let c2 = u2.coeffs_mut();
            for i in 0..modes {
                c2[i] = decay[i] * c2[i] + weight[i] * (dw[i] - dt * nl2[i]);
            }
            let lag = match phase {
                WindowPhase::PreCoupling => 1.0 - (s + 1) as f64 / nt as f64,
                WindowPhase::Bound => 0.0,
            };
            for i in 0..lo {
                let target = u1.coeffs()[i] + lag * gap0[i];
                let free = u2.coeffs()[i];
                beta[i] = (target - free) / (weight[i] * b[i] * dt);
                u2.coeffs_mut()[i] = target;
            }
            let mut e = 0.0;
            for i in 0..lo {
                let dwi = dw[i] / b[i];
                rec.log_weight -= beta[i] * dwi + 0.5 * beta[i] * beta[i] * dt;
                e += beta[i] * beta[i] * dt;
            }
            rec.drift_energy += e;
            if options.record_paths {
                rec.drift_path.push(beta.clone());
                rec.noise_path.push((0..lo).map(|i| dw[i] / b[i]).collect());
            }
            if !u1.is_finite() || !u2.is_finite() {
                return Err(Error::StepDiverged { step: n });
            }
            norm_sq1.push(u1.norm_sq());
            norm_sq2.push(u2.norm_sq());
            low_gap.push(low_gap_of(&u1, &u2));
            if (n + 1) % record_every == 0 || s + 1 == nt {
                times.push((n + 1) as f64 * dt);
                states1.push(u1.clone());
                states2.push(u2.clone());
            }
        }
        boundary_distance.push(u1.sub(&u2).norm());
        records.push(rec);
    }

    let handle = Some(crate::dynamics::NoiseHandle {
        seed: spec.seed(),
        stream_id,
    });
    Ok(CoupledPairTrajectory {
        traj1: Trajectory {
            times: times.clone(),
            states: states1,
            noise: handle,
        },
        traj2: Trajectory {
            times,
            states: states2,
            noise: handle,
        },
        records,
        dt,
        window_steps: nt,
        norm_sq1,
        norm_sq2,
        low_gap,
        boundary_distance,
    })
}

#[derive(Serialize)]
struct WindowLine<'a> {
    pair: u64,
    window: usize,
    phase: WindowPhase,
    label: &'a super::SetLabel,
    drift_energy: f64,
    log_weight: f64,
    tv_proxy: f64,
    distance_start: f64,
    distance_end: f64,
}

/// One JSON line per window: label, drift energy, log-weight and the state
/// distance at both window boundaries.
pub fn write_pair_jsonl<W: Write>(
    pair_id: u64,
    pair: &CoupledPairTrajectory,
    labels: &[super::SetLabel],
    mut w: W,
) -> Result<()> {
    for (i, (rec, label)) in pair.records.iter().zip(labels).enumerate() {
        let line = WindowLine {
            pair: pair_id,
            window: rec.window,
            phase: rec.phase,
            label,
            drift_energy: rec.drift_energy,
            log_weight: rec.log_weight,
            tv_proxy: rec.tv_proxy(),
            distance_start: pair.boundary_distance[i],
            distance_end: pair.boundary_distance[i + 1],
        };
        serde_json::to_writer(&mut w, &line)?;
        writeln!(w).map_err(|e| Error::io("jsonl", e))?;
    }
    Ok(())
}

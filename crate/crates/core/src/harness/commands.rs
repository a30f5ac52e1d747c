use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Experiment, KernelKind, NonlinearityKind, RunConfig};
use super::manifest::{OutputDir, RunManifest, ARTIFACT_VERSION};
use crate::coupling::{fresh_frequencies, off_table_transitions, CouplingWindow, SetLabel};
use crate::diagnostics::{
    bl_distance_panel, fit_exponential_decay, kernel_inequality_battery, mean_energy_bound,
    mean_energy_check, mollifier_approximation, mollifier_lower_bound_violations,
    supermartingale_test, validate_mollifier_pair, CertificateInputs, Certificates, DecayFit,
    EnsembleStats,
};
use crate::dynamics::{
    energy_cap_holds, mollifier_constant, simulate, slave_high_modes, KernelSpec, ModelParams,
    MollifierNormalization, Trajectory,
};
use crate::ensemble::{run_coupling_ensemble, run_ensemble, EnsemblePlan, PairSummary};
use crate::exec::Execution;
use crate::forcing::NoiseSpec;
use crate::spectral::{SpectralBasis, SpectralField};
use crate::{Error, Result};

/// Slack of the kernel inequality battery.
pub const BATTERY_SLACK: f64 = 1e-9;
/// Mollifier widths tabulated by the `kernels` experiment.
pub const MOLLIFIER_DELTAS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
const MOLLIFIER_GRID: usize = 4096;
const GRID_CHECK_TOL: f64 = 1e-6;
const DEFAULT_TRIALS: usize = 1000;
const DEFAULT_SAMPLES: usize = 1000;

/// Result of one experiment.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// `None` when the experiment only reports.
    pub pass: Option<bool>,
    pub report: Value,
    pub manifest: RunManifest,
}

/// Runs the experiment named in `cfg`, writing into `cfg.output_dir`.
pub fn run_experiment(cfg: &RunConfig, workers: Option<usize>) -> Result<RunOutcome> {
    let exec = Execution::from_workers(workers);
    let start = Instant::now();
    let mut out = OutputDir::create(&cfg.output_dir)?;
    let (pass, report, stream_ids) = match cfg.experiment {
        Experiment::Certify => cmd_certify(cfg, &mut out)?,
        Experiment::Simulate => cmd_simulate(cfg, exec, &mut out)?,
        Experiment::Slave => cmd_slave(cfg, &mut out)?,
        Experiment::Couple => cmd_couple(cfg, exec, &mut out)?,
        Experiment::Ergodicity => cmd_ergodicity(cfg, exec, &mut out)?,
        Experiment::Kernels => cmd_kernels(cfg, &mut out)?,
    };
    let report = json!({ "pass": pass, "report": report });
    out.write_json("report.json", &report)?;
    let manifest = out.finish(RunManifest {
        artifact_version: ARTIFACT_VERSION.to_string(),
        experiment: serde_json::to_value(cfg.experiment)?
            .as_str()
            .unwrap_or_default()
            .to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        stream_ids,
        workers,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        files: Vec::new(),
        config: serde_json::to_value(cfg)?,
    })?;
    Ok(RunOutcome {
        pass,
        report,
        manifest,
    })
}

type Step = (Option<bool>, Value, Vec<u64>);

fn push_row(buf: &mut String, vals: &[f64]) {
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            buf.push(',');
        }
        let _ = write!(buf, "{v:.16e}");
    }
    buf.push('\n');
}

fn initial_state(basis: &Arc<SpectralBasis>, norm: f64) -> SpectralField {
    SpectralField::mode(basis, 1, norm)
}

fn ensemble_streams(n: usize) -> Vec<u64> {
    (0..n as u64).collect()
}

fn mollifier_upper(cfg: &RunConfig) -> f64 {
    let delta = cfg.kernel_delta.unwrap_or(0.1);
    let c = mollifier_constant();
    match cfg.kernel_normalization {
        MollifierNormalization::Verbatim => c / (delta * delta),
        MollifierNormalization::UnitMass => c / (2.0 * delta),
    }
}

/// Model parameters; a mollifier kernel is only used once its `(ε, δ)`
/// pair passes the approximation check.
fn checked_model(cfg: &RunConfig, basis: &Arc<SpectralBasis>) -> Result<ModelParams> {
    if cfg.nonlinearity == NonlinearityKind::Nonlocal && cfg.kernel == KernelKind::Mollifier {
        let delta = cfg.kernel_delta.unwrap_or(0.1);
        let fine = SpectralBasis::with_grid(8, MOLLIFIER_GRID)?;
        if !validate_mollifier_pair(&fine, delta, cfg.epsilon)? {
            return Err(Error::Config(format!(
                "mollifier width {delta} does not approximate within epsilon = {}",
                cfg.epsilon
            )));
        }
    }
    cfg.model(basis)
}

fn certificates(cfg: &RunConfig, noise: &NoiseSpec) -> Result<Certificates> {
    Certificates::compute(&CertificateInputs {
        rho: cfg.rho,
        b0: noise.b0(),
        b_max: noise.b_max(),
        alpha: cfg.alpha,
        low_cutoff: cfg.low_cutoff,
        kernel_bounds: Some((
            cfg.kernel_lower.unwrap_or(1.0),
            cfg.kernel_upper.unwrap_or(1.0),
        )),
        mollifier_upper: Some(mollifier_upper(cfg)),
        epsilon: cfg.epsilon,
    })
}

/// Energy constant and mode threshold of the configured model.
fn model_constants(cfg: &RunConfig, cert: &Certificates) -> (f64, usize) {
    match (cfg.nonlinearity, cfg.kernel) {
        (NonlinearityKind::Nonlocal, KernelKind::Mollifier) => (
            cert.c1_nonneg.unwrap_or(cert.c1),
            cert.threshold_n_nonneg.unwrap_or(cert.threshold_n),
        ),
        (NonlinearityKind::Nonlocal, _) => (
            cert.c1_tilde.unwrap_or(cert.c1),
            cert.threshold_n_tilde.unwrap_or(cert.threshold_n),
        ),
        _ => (cert.c1, cert.threshold_n),
    }
}

fn cmd_certify(cfg: &RunConfig, out: &mut OutputDir) -> Result<Step> {
    let basis = cfg.basis()?;
    let noise = cfg.noise(&basis)?;
    let cert = certificates(cfg, &noise)?;
    let pair_basis = SpectralBasis::with_grid(8, MOLLIFIER_GRID)?;
    let delta = cfg.kernel_delta.unwrap_or(0.1);
    let pair_valid = validate_mollifier_pair(&pair_basis, delta, cfg.epsilon)?;
    let report = json!({
        "inputs": {
            "rho": cfg.rho,
            "b0": noise.b0(),
            "b_max": noise.b_max(),
            "low_cutoff": cfg.low_cutoff,
            "kernel_lower": cfg.kernel_lower.unwrap_or(1.0),
            "kernel_upper": cfg.kernel_upper.unwrap_or(1.0),
            "mollifier_upper": mollifier_upper(cfg),
            "mollifier_delta": delta,
            "epsilon": cfg.epsilon,
        },
        "certificates": cert,
        "mollifier_pair_valid": pair_valid,
        "cutoff_meets_threshold": cfg.low_cutoff >= model_constants(cfg, &cert).1,
    });
    out.write_json("certificates.json", &report)?;
    Ok((
        Some(cert.grid_check_rel_error < GRID_CHECK_TOL),
        report,
        Vec::new(),
    ))
}

fn snapshot_steps(cfg: &RunConfig, params: &ModelParams) -> Result<Vec<usize>> {
    let mut steps = cfg
        .snapshot_times
        .iter()
        .map(|&t| params.steps_for(t))
        .collect::<Result<Vec<_>>>()?;
    if steps.is_empty() {
        steps.push(params.steps_for(cfg.horizon)?);
    }
    steps.sort_unstable();
    steps.dedup();
    Ok(steps)
}

fn snapshots_csv(ens: &EnsembleStats) -> String {
    let mut buf = String::from("time,stream");
    for o in &ens.observables {
        buf.push(',');
        buf.push_str(o);
    }
    buf.push('\n');
    for (s, t) in ens.snapshot_times.iter().enumerate() {
        for (p, row) in ens.snapshots[s].iter().enumerate() {
            let _ = write!(buf, "{t:.16e},{}", ens.stream_ids[p]);
            for v in row {
                let _ = write!(buf, ",{v:.16e}");
            }
            buf.push('\n');
        }
    }
    buf
}

fn cmd_simulate(cfg: &RunConfig, exec: Execution, out: &mut OutputDir) -> Result<Step> {
    let basis = cfg.basis()?;
    let params = checked_model(cfg, &basis)?;
    let noise = cfg.noise(&basis)?;
    let steps = params.steps_for(cfg.horizon)?;
    let u0 = initial_state(&basis, cfg.initial_norm);
    let plan = EnsemblePlan {
        paths: cfg.ensemble_size,
        steps,
        snapshot_steps: snapshot_steps(cfg, &params)?,
        energy_stride: Some(
            cfg.energy_stride
                .unwrap_or((steps / DEFAULT_SAMPLES).max(1)),
        ),
        first_stream: 0,
    };
    let ens = run_ensemble(&params, &noise, &u0, &plan, exec)?;

    let record_every = cfg.record_every.unwrap_or((steps / DEFAULT_SAMPLES).max(1));
    let traj = simulate(&params, &noise, 0, &u0, steps, record_every)?;
    let mut buf = Vec::new();
    traj.write_csv(&mut buf)
        .map_err(|e| Error::io("trajectory.csv", e))?;
    out.write("trajectory.csv", &buf)?;
    out.write("snapshots.csv", snapshots_csv(&ens).as_bytes())?;

    let cert = certificates(cfg, &noise)?;
    let (c1, threshold) = model_constants(cfg, &cert);
    let r_bound = mean_energy_bound(cfg.rho, noise.b0(), cfg.alpha)?;
    let rows = mean_energy_check(&ens, cfg.alpha, r_bound)?;
    let mut energy = String::from("time,mean,std_err,bound,pass\n");
    for r in &rows {
        let _ = writeln!(
            energy,
            "{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.time, r.mean, r.std_err, r.bound, r.pass as u8
        );
    }
    out.write("energy.csv", energy.as_bytes())?;
    let sm = supermartingale_test(&ens, c1, cfg.deviation_level)?;
    let report = json!({
        "C1": c1,
        "R": r_bound,
        "threshold_n": threshold,
        "level": cfg.deviation_level,
        "supermartingale": sm,
        "mean_energy": rows,
    });
    out.write_json("supermartingale.json", &report)?;
    let pass = sm.pass && rows.iter().all(|r| r.pass);
    Ok((Some(pass), report, ensemble_streams(cfg.ensemble_size)))
}

/// Random high-mode field with norm at most one.
fn random_high(
    basis: &Arc<SpectralBasis>,
    cutoff_len: usize,
    rng: &mut ChaCha8Rng,
) -> SpectralField {
    let mut h = SpectralField::zeros(basis);
    for v in &mut h.coeffs_mut()[cutoff_len..] {
        *v = rng.sample(StandardNormal);
    }
    let n = h.norm();
    let target: f64 = rng.random_range(0.1..=1.0);
    if n > 0.0 {
        h = h.scaled(target / n);
    }
    h
}

fn fit_window(cfg: &RunConfig, series: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let from = cfg.fit_from.unwrap_or(0.0);
    let until = cfg.fit_until.unwrap_or(f64::INFINITY);
    series
        .iter()
        .copied()
        .filter(|&(t, v)| t >= from && t <= until && v > f64::MIN_POSITIVE && v.is_finite())
        .collect()
}

fn fit_json(fit: &Option<DecayFit>) -> Value {
    match fit {
        Some(f) => json!({
            "rate": f.rate,
            "slope": f.slope(),
            "prefactor": f.prefactor,
            "r_squared": f.goodness,
            "window": [f.window.0, f.window.1],
        }),
        None => Value::Null,
    }
}

fn cmd_slave(cfg: &RunConfig, out: &mut OutputDir) -> Result<Step> {
    let basis = cfg.basis()?;
    let params = checked_model(cfg, &basis)?;
    let noise = cfg.noise(&basis)?;
    let steps = params.steps_for(cfg.horizon)?;
    let u0 = initial_state(&basis, cfg.initial_norm);
    let forced = simulate(&params, &noise, 0, &u0, steps, 1)?;
    let low: Vec<SpectralField> = forced
        .states
        .iter()
        .map(|u| u.project_low(cfg.low_cutoff))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::MAX);
    let lo = params.low_len();
    let h1 = random_high(&basis, lo, &mut rng);
    let h2 = random_high(&basis, lo, &mut rng);
    let t1 = slave_high_modes(&low, &h1, &params)?;
    let t2 = slave_high_modes(&low, &h2, &params)?;

    let cert = certificates(cfg, &noise)?;
    let (c1, threshold) = model_constants(cfg, &cert);
    let capped = match cfg.nonlinearity {
        NonlinearityKind::Nonlocal => {
            let r = u0.norm_sq() + cfg.deviation_level + 1.0;
            Some(
                energy_cap_holds(&low, &t1, params.dt(), r, c1)
                    && energy_cap_holds(&low, &t2, params.dt(), r, c1),
            )
        }
        _ => None,
    };

    let series = gap_series(&t1, &t2);
    let stride = cfg.record_every.unwrap_or((steps / DEFAULT_SAMPLES).max(1));
    let mut buf = String::from("time,gap_sq,norm_sq_1,norm_sq_2\n");
    for (i, &(t, g)) in series.iter().enumerate() {
        if i % stride == 0 || i + 1 == series.len() {
            let v = [t, g, t1.states[i].norm_sq(), t2.states[i].norm_sq()];
            push_row(&mut buf, &v);
        }
    }
    out.write("slave.csv", buf.as_bytes())?;

    let fit = fit_exponential_decay(&fit_window(cfg, &series)).ok();
    let predicted = cert.predicted_contraction;
    let above = cfg.low_cutoff >= threshold;
    let report = json!({
        "fit": fit_json(&fit),
        "predicted_contraction": predicted,
        "predicted_contraction_sq": 2.0 * predicted,
        "threshold_n": threshold,
        "above_threshold": above,
        "energy_cap_holds": capped,
        "initial_high_norms": [h1.norm(), h2.norm()],
    });
    out.write_json("fit.json", &report)?;
    let pass = if above && capped != Some(false) {
        Some(fit.is_some_and(|f| f.rate > 0.0))
    } else {
        None
    };
    Ok((pass, report, vec![0]))
}

fn gap_series(a: &Trajectory, b: &Trajectory) -> Vec<(f64, f64)> {
    a.times
        .iter()
        .zip(a.states.iter().zip(&b.states))
        .map(|(&t, (x, y))| (t, x.sub(y).norm_sq()))
        .collect()
}

#[derive(Serialize)]
struct PairLine {
    pair: u64,
    window: usize,
    label: SetLabel,
    drift_energy: f64,
    log_weight: f64,
    tv_proxy: f64,
    distance_start: f64,
    distance_end: f64,
    max_bound_gap: f64,
}

fn pairs_jsonl(pairs: &[PairSummary]) -> Result<String> {
    let mut buf = String::new();
    for p in pairs {
        for (i, (rec, label)) in p.records.iter().zip(&p.labels).enumerate() {
            let line = PairLine {
                pair: p.stream_id,
                window: rec.window,
                label: *label,
                drift_energy: rec.drift_energy,
                log_weight: rec.log_weight,
                tv_proxy: rec.tv_proxy(),
                distance_start: p.boundary_distance[i],
                distance_end: p.boundary_distance[i + 1],
                max_bound_gap: p.max_bound_gap,
            };
            buf.push_str(&serde_json::to_string(&line)?);
            buf.push('\n');
        }
    }
    Ok(buf)
}

fn cmd_couple(cfg: &RunConfig, exec: Execution, out: &mut OutputDir) -> Result<Step> {
    let basis = cfg.basis()?;
    let params = checked_model(cfg, &basis)?;
    let noise = cfg.noise(&basis)?;
    let cert = certificates(cfg, &noise)?;
    let (c1, threshold) = model_constants(cfg, &cert);
    let length = cfg.window_length.unwrap_or(1.0);
    let count = cfg.window_count.unwrap_or(8);
    let window = CouplingWindow::new(
        length,
        count,
        cfg.norm_cap.unwrap_or(2.0 * cert.r.sqrt()),
        cfg.energy_slack,
        c1,
    )?;
    let u1 = initial_state(&basis, cfg.initial_norm);
    let u2 = initial_state(&basis, cfg.initial_norm_2.unwrap_or(0.0));
    let pairs = run_coupling_ensemble(
        &params,
        &noise,
        &u1,
        &u2,
        &window,
        cfg.ensemble_size,
        0,
        exec,
    )?;
    out.write("pairs.jsonl", pairs_jsonl(&pairs)?.as_bytes())?;

    let labels: Vec<Vec<SetLabel>> = pairs.iter().map(|p| p.labels.clone()).collect();
    let freq = fresh_frequencies(&labels);
    let mut buf = String::from("k,successes,trials,estimate,lower,upper\n");
    for f in &freq {
        let p = f.frequency;
        let _ = writeln!(
            buf,
            "{},{},{},{:.16e},{:.16e},{:.16e}",
            f.k, p.successes, p.trials, p.estimate, p.lower, p.upper
        );
    }
    out.write("frequencies.csv", buf.as_bytes())?;

    let series: Vec<(f64, f64)> = freq
        .iter()
        .filter(|f| f.k >= 2 && f.frequency.estimate > 0.0)
        .map(|f| (f.k as f64, f.frequency.estimate))
        .collect();
    let fit = fit_exponential_decay(&series).ok();
    let off_table = off_table_transitions(&labels);
    let exact = pairs.iter().all(PairSummary::control_exact);
    let max_gap = pairs.iter().map(|p| p.max_bound_gap).fold(0.0, f64::max);
    let report = json!({
        "pairs": pairs.len(),
        "threshold_n": threshold,
        "window_length": length,
        "window_count": count,
        "norm_cap": window.norm_cap,
        "control_exact": exact,
        "max_bound_gap": max_gap,
        "off_table_transitions": off_table,
        "frequencies": freq,
        "fit": fit_json(&fit),
    });
    out.write_json("couple.json", &report)?;
    let mut pass = exact && off_table == 0;
    if cfg.ensemble_size >= 100 && cfg.low_cutoff >= threshold {
        if let Some(f) = &fit {
            pass &= f.slope() < 0.0;
        }
    }
    Ok((Some(pass), report, ensemble_streams(cfg.ensemble_size)))
}

fn cmd_ergodicity(cfg: &RunConfig, exec: Execution, out: &mut OutputDir) -> Result<Step> {
    let basis = cfg.basis()?;
    let params = checked_model(cfg, &basis)?;
    let noise = cfg.noise(&basis)?;
    let steps = params.steps_for(cfg.horizon)?;
    let second = cfg
        .initial_norm_2
        .ok_or_else(|| Error::Config("ergodicity needs initial_norm_2".into()))?;
    let plan = EnsemblePlan {
        paths: cfg.ensemble_size,
        steps,
        snapshot_steps: snapshot_steps(cfg, &params)?,
        energy_stride: None,
        first_stream: 0,
    };
    let a = run_ensemble(
        &params,
        &noise,
        &initial_state(&basis, cfg.initial_norm),
        &plan,
        exec,
    )?;
    let b = run_ensemble(&params, &noise, &initial_state(&basis, second), &plan, exec)?;

    let mut buf = String::from("time,distance");
    for o in &a.observables {
        let _ = write!(buf, ",{o}");
    }
    buf.push('\n');
    let mut series = Vec::with_capacity(a.snapshot_times.len());
    for &t in &a.snapshot_times {
        let panel = bl_distance_panel(&a, &b, t)?;
        let d = panel.iter().copied().fold(0.0, f64::max);
        let mut row = vec![t, d];
        row.extend_from_slice(&panel);
        push_row(&mut buf, &row);
        series.push((t, d));
    }
    out.write("distances.csv", buf.as_bytes())?;

    let all_zero = series.iter().all(|&(_, d)| d == 0.0);
    let fitted: Vec<(f64, f64)> = fit_window(cfg, &series)
        .into_iter()
        .filter(|&(t, _)| t > 0.0)
        .collect();
    let fit = fit_exponential_decay(&fitted).ok();
    let decreasing = fitted.windows(2).all(|w| w[1].1 <= w[0].1);
    let cert = certificates(cfg, &noise)?;
    let threshold = model_constants(cfg, &cert).1;
    let report = json!({
        "distances": series,
        "all_zero": all_zero,
        "decreasing": decreasing,
        "fit": fit_json(&fit),
        "threshold_n": threshold,
    });
    out.write_json("fit.json", &report)?;
    let pass = if all_zero {
        Some(true)
    } else if cfg.low_cutoff >= threshold {
        Some(fit.is_some_and(|f| f.slope() < 0.0))
    } else {
        None
    };
    Ok((pass, report, ensemble_streams(cfg.ensemble_size)))
}

fn cmd_kernels(cfg: &RunConfig, out: &mut OutputDir) -> Result<Step> {
    let basis = cfg.basis()?;
    let trials = cfg.trials.unwrap_or(DEFAULT_TRIALS);
    let kernel = cfg.kernel_spec(&basis)?;
    let mut buf = Vec::new();
    kernel
        .write_csv(&basis, &mut buf)
        .map_err(|e| Error::io("kernel.csv", e))?;
    out.write("kernel.csv", &buf)?;
    let battery = kernel_inequality_battery(
        &basis,
        &kernel,
        cfg.low_cutoff,
        trials,
        cfg.seed,
        BATTERY_SLACK,
    )?;

    let delta = cfg.kernel_delta.unwrap_or(0.1);
    let moll = KernelSpec::mollifier(&basis, delta, cfg.kernel_normalization)?;
    let moll_battery = kernel_inequality_battery(
        &basis,
        &moll,
        cfg.low_cutoff,
        trials,
        cfg.seed,
        BATTERY_SLACK,
    )?;

    let fine = SpectralBasis::with_grid(cfg.max_wavenumber, MOLLIFIER_GRID.max(basis.grid_size()))?;
    let unit = mollifier_approximation(&fine, &MOLLIFIER_DELTAS, MollifierNormalization::UnitMass)?;
    let verbatim =
        mollifier_approximation(&fine, &MOLLIFIER_DELTAS, MollifierNormalization::Verbatim)?;
    let mut table =
        String::from("normalization,delta,sup_error,kernel_max,kernel_bound,nonnegative\n");
    for (name, rows) in [("unit_mass", &unit), ("verbatim", &verbatim)] {
        for r in rows.iter() {
            let _ = writeln!(
                table,
                "{name},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.delta, r.sup_error, r.kernel_max, r.kernel_bound, r.nonnegative as u8
            );
        }
    }
    out.write("mollifier.csv", table.as_bytes())?;
    let monotone = unit.windows(2).all(|w| w[1].sup_error <= w[0].sup_error);
    let pair_valid = validate_mollifier_pair(&fine, delta, cfg.epsilon)?;
    let lower_violations = mollifier_lower_bound_violations(
        &basis,
        delta,
        cfg.epsilon,
        cfg.kernel_normalization,
        cfg.low_cutoff,
        trials,
        cfg.seed,
    )?;
    let battery_clean = battery.iter().all(|r| r.violations == 0);
    let report = json!({
        "kernel": {
            "lower": kernel.lower(),
            "upper": kernel.upper(),
            "battery": battery,
        },
        "mollifier": {
            "delta": delta,
            "normalization": cfg.kernel_normalization,
            "battery": moll_battery,
            "unit_mass_monotone": monotone,
            "pair_valid": pair_valid,
            "lower_bound_violations": lower_violations,
        },
    });
    out.write_json("kernels.json", &report)?;
    let pass = battery_clean && monotone;
    Ok((Some(pass), report, Vec::new()))
}

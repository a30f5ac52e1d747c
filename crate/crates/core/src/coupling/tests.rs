use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dynamics::ModelParams;
use crate::forcing::NoiseSpec;
use crate::spectral::{low_mode_count, SpectralBasis, SpectralField};
use crate::Error;

fn setup(k: usize, n: usize, amp: f64) -> (Arc<SpectralBasis>, ModelParams, NoiseSpec) {
    let basis = SpectralBasis::new(k).unwrap();
    let params = ModelParams::local(&basis, 1.0, n, 1e-3).unwrap();
    let spec = NoiseSpec::uniform(&basis, n, amp, 17).unwrap();
    (basis, params, spec)
}

fn random_in(
    basis: &Arc<SpectralBasis>,
    range: std::ops::Range<usize>,
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> SpectralField {
    let mut f = SpectralField::zeros(basis);
    for c in &mut f.coeffs_mut()[range] {
        *c = scale * rng.random_range(-1.0..1.0);
    }
    f
}

fn window(count: usize) -> CouplingWindow {
    CouplingWindow::new(0.1, count, 10.0, 3.0, 44.0).unwrap()
}

#[test]
fn window_validation() {
    assert!(CouplingWindow::new(0.0, 1, 1.0, 1.0, 1.0).is_err());
    assert!(CouplingWindow::new(1.0, 1, 0.0, 1.0, 1.0).is_err());
    assert!(CouplingWindow::new(1.0, 1, 1.0, -1.0, 1.0).is_err());
    let w = CouplingWindow::with_defaults(1.0, 4, 4.0, 10.0).unwrap();
    assert_eq!(w.norm_cap, 4.0);
    assert_eq!(w.energy_slack, 3.0);
}

#[test]
fn identical_start_gives_identical_paths() {
    let (basis, params, spec) = setup(8, 2, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u0 = random_in(&basis, 0..basis.mode_count(), 0.2, &mut rng);
    let pair = run_bound_coupling(
        &u0,
        &u0,
        &params,
        &window(3),
        &spec,
        4,
        CouplingOptions::default(),
    )
    .unwrap();
    assert_eq!(pair.traj1, pair.traj2);
    for r in &pair.records {
        assert_eq!(r.drift_energy, 0.0);
        assert_eq!(r.log_weight, 0.0);
        assert_eq!(r.phase, WindowPhase::Bound);
    }
    let labels = label_windows(&pair, &window(3));
    assert_eq!(labels, vec![SetLabel::Coupled { m: 0 }; 3]);
}

#[test]
fn unforced_low_mode_is_rejected() {
    let (basis, params, _) = setup(8, 2, 0.5);
    let spec = NoiseSpec::uniform(&basis, 1, 0.5, 1).unwrap();
    let u0 = SpectralField::zeros(&basis);
    let err = run_bound_coupling(
        &u0,
        &u0,
        &params,
        &window(1),
        &spec,
        0,
        CouplingOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(
        err,
        Error::UncontrollableMode {
            mode: 3,
            wavenumber: 2
        }
    ));
}

#[test]
fn control_is_exact_after_synchronization() {
    let (basis, params, spec) = setup(8, 2, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u1 = random_in(&basis, 0..basis.mode_count(), 0.5, &mut rng);
    let u2 = random_in(&basis, 0..basis.mode_count(), 0.5, &mut rng);
    let opts = CouplingOptions {
        record_paths: true,
        record_every: Some(10),
    };
    let pair = run_bound_coupling(&u1, &u2, &params, &window(4), &spec, 9, opts).unwrap();
    assert!(pair.pre_coupled());
    let nt = pair.window_steps;
    assert!(pair.low_gap[0] > 0.0);
    assert!(pair.low_gap[nt..].iter().all(|&g| g <= LOW_GAP_TOLERANCE));
    for rec in &pair.records {
        let g = girsanov_log_weight(rec).unwrap();
        assert!((g - rec.log_weight).abs() <= 1e-9 * (1.0 + g.abs()));
        assert!(rec.drift_energy >= 0.0 && rec.log_weight.is_finite());
    }
    assert_eq!(pair.records[0].phase, WindowPhase::PreCoupling);
    assert_eq!(pair.traj1.times.len(), 4 * nt / 10 + 1);
    let labels = label_windows(&pair, &window(4));
    assert_eq!(labels[0], SetLabel::PreCoupling);
    assert!(labels[1..].iter().all(|l| *l != SetLabel::PreCoupling));
}

#[test]
fn equal_low_modes_stay_equal() {
    let (basis, params, spec) = setup(8, 2, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let l = random_in(&basis, 0..5, 0.5, &mut rng);
    let u1 = l.add(&random_in(&basis, 5..17, 0.5, &mut rng));
    let u2 = l.add(&random_in(&basis, 5..17, 0.5, &mut rng));
    let pair = run_bound_coupling(
        &u1,
        &u2,
        &params,
        &window(5),
        &spec,
        3,
        CouplingOptions::default(),
    )
    .unwrap();
    assert!(!pair.pre_coupled());
    assert!(pair.low_gap.iter().all(|&g| g == 0.0));
    let d = &pair.boundary_distance;
    assert!(d.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn binding_drift_cases() {
    let (basis, params, _) = setup(8, 2, 0.5);
    let lo = low_mode_count(2);
    let n = basis.mode_count();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let l = random_in(&basis, 0..lo, 1.0, &mut rng);
    let h1 = random_in(&basis, lo..n, 1.0, &mut rng);
    let h2 = random_in(&basis, lo..n, 1.0, &mut rng);
    let zero = binding_drift(&l, &h1, &h1, &params).unwrap();
    assert!(zero.coeffs().iter().all(|&c| c == 0.0));

    // l = 0: P_l(h¹³ − h²³) by direct projection on a fine grid.
    let b = binding_drift(&SpectralField::zeros(&basis), &h1, &h2, &params).unwrap();
    let fine = SpectralBasis::with_grid(8, 512).unwrap();
    let xs = fine.grid_points();
    let f1 = SpectralField::from_coeffs(&fine, h1.coeffs().to_vec())
        .unwrap()
        .to_physical();
    let f2 = SpectralField::from_coeffs(&fine, h2.coeffs().to_vec())
        .unwrap()
        .to_physical();
    let w = fine.spacing();
    for (i, m) in fine.modes()[..lo].iter().enumerate() {
        let e = |x: f64| match (m.wavenumber, i) {
            (0, _) => 1.0 / (2.0 * std::f64::consts::PI).sqrt(),
            (k, i) if i % 2 == 1 => (k as f64 * x).cos() / std::f64::consts::PI.sqrt(),
            (k, _) => (k as f64 * x).sin() / std::f64::consts::PI.sqrt(),
        };
        let proj: f64 = xs
            .iter()
            .zip(f1.iter().zip(&f2))
            .map(|(&x, (a, c))| (a.powi(3) - c.powi(3)) * e(x))
            .sum::<f64>()
            * w;
        assert!((b.coeffs()[i] - proj).abs() < 1e-10, "mode {i}");
    }

    assert!(matches!(
        binding_drift(&h1, &h1, &h2, &params),
        Err(Error::WrongModeSpace("low"))
    ));
    assert!(matches!(
        binding_drift(&l, &l, &h2, &params),
        Err(Error::WrongModeSpace("high"))
    ));
}

#[test]
fn binding_drift_bound() {
    let (basis, params, _) = setup(8, 2, 0.5);
    let lo = low_mode_count(2);
    let n = basis.mode_count();
    let fine = SpectralBasis::with_grid(8, 1024).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let s = rng.random_range(0.1..3.0);
        let l = random_in(&basis, 0..lo, s, &mut rng);
        let h1 = random_in(&basis, lo..n, s, &mut rng);
        let h2 = random_in(&basis, lo..n, s, &mut rng);
        let b = binding_drift(&l, &h1, &h2, &params).unwrap();
        let on_fine = |f: &SpectralField| {
            SpectralField::from_coeffs(&fine, f.coeffs().to_vec())
                .unwrap()
                .to_physical()
        };
        let u1 = on_fine(&l.add(&h1));
        let u2 = on_fine(&l.add(&h2));
        let sup = u1
            .iter()
            .zip(&u2)
            .map(|(a, c)| (a * a + a * c + c * c).abs())
            .fold(0.0, f64::max);
        let rho = h1.sub(&h2).norm_sq();
        assert!(b.norm_sq() <= rho * sup * sup * (1.0 + 1e-9));
    }
}

#[test]
fn log_weight_hand_computation() {
    let rec = GirsanovRecord {
        window: 1,
        phase: WindowPhase::Bound,
        drift_path: vec![vec![0.5]; 4],
        noise_path: vec![vec![0.1], vec![-0.2], vec![0.3], vec![0.05]],
        dt: 0.25,
        log_weight: 0.0,
        drift_energy: 0.0,
    };
    // −0.5·(0.1 − 0.2 + 0.3 + 0.05) − ½·0.25·(4·0.25) = −0.125 − 0.125.
    assert!((girsanov_log_weight(&rec).unwrap() + 0.25).abs() < 1e-15);
    let zero = GirsanovRecord {
        drift_path: vec![vec![0.0]; 4],
        ..rec.clone()
    };
    assert_eq!(girsanov_log_weight(&zero).unwrap(), 0.0);
    let bad = GirsanovRecord {
        drift_path: vec![vec![0.5]; 3],
        ..rec.clone()
    };
    assert!(matches!(
        girsanov_log_weight(&bad),
        Err(Error::MisalignedPaths(_))
    ));
    let bad = GirsanovRecord {
        noise_path: vec![vec![0.1, 0.0]; 4],
        ..rec
    };
    assert!(matches!(
        girsanov_log_weight(&bad),
        Err(Error::MisalignedPaths(_))
    ));
}

#[test]
fn inflated_norm_falls_outside() {
    let (basis, params, spec) = setup(8, 2, 0.5);
    let u0 = SpectralField::mode(&basis, 5, 0.1);
    let mut pair = run_bound_coupling(
        &u0,
        &u0,
        &params,
        &window(3),
        &spec,
        0,
        CouplingOptions::default(),
    )
    .unwrap();
    let nt = pair.window_steps;
    for v in &mut pair.norm_sq1[2 * nt - 5..=2 * nt] {
        *v = 1e6;
    }
    let labels = label_windows(&pair, &window(3));
    assert_eq!(labels[0], SetLabel::Coupled { m: 0 });
    assert_eq!(labels[1], SetLabel::Remainder);
    assert_eq!(labels[2], SetLabel::Coupled { m: 3 });
    assert!(labels[1].is_fresh(2) && labels[2].is_fresh(3));
    assert_eq!(
        classify_window(&pair, 0, 2, &window(3)),
        SetLabel::Remainder
    );
    assert_eq!(
        classify_window(&pair, 0, 1, &window(3)),
        SetLabel::Coupled { m: 0 }
    );
}

#[test]
fn frequency_and_transition_tables() {
    let rows = vec![
        vec![
            SetLabel::PreCoupling,
            SetLabel::Remainder,
            SetLabel::Coupled { m: 3 },
        ],
        vec![
            SetLabel::PreCoupling,
            SetLabel::Coupled { m: 1 },
            SetLabel::Coupled { m: 1 },
        ],
        vec![
            SetLabel::PreCoupling,
            SetLabel::Coupled { m: 2 },
            SetLabel::Coupled { m: 3 },
        ],
    ];
    let f = fresh_frequencies(&rows);
    assert_eq!(f[0].frequency.successes, 0);
    assert_eq!(f[1].frequency.successes, 2);
    assert_eq!(f[2].frequency.successes, 2);
    assert_eq!(off_table_transitions(&rows), 0);
    let bad = vec![vec![
        SetLabel::Coupled { m: 0 },
        SetLabel::Coupled { m: 1 },
        SetLabel::Coupled { m: 1 },
    ]];
    assert_eq!(off_table_transitions(&bad), 1);
}

#[test]
fn jsonl_lines_per_window() {
    let (basis, params, spec) = setup(8, 2, 0.5);
    let u0 = SpectralField::zeros(&basis);
    let pair = run_bound_coupling(
        &u0,
        &u0,
        &params,
        &window(3),
        &spec,
        0,
        CouplingOptions::default(),
    )
    .unwrap();
    let labels = label_windows(&pair, &window(3));
    let mut out = Vec::new();
    write_pair_jsonl(7, &pair, &labels, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let v: serde_json::Value = serde_json::from_str(lines[2]).unwrap();
    assert_eq!(v["pair"], 7);
    assert_eq!(v["window"], 3);
    assert_eq!(v["label"]["set"], "coupled");
}

use serde::Serialize;

use super::{CoupledPairTrajectory, CouplingWindow};
use crate::diagnostics::{wilson_interval, Proportion, Z95};

/// Low-mode agreement tolerance of the coupled-set condition.
pub const LOW_GAP_TOLERANCE: f64 = 1e-10;

/// Classification of a pair on `[0, kT]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "set")]
pub enum SetLabel {
    /// Member of `S(m, k)`: `m` is the earliest window start from which
    /// the coupled-set conditions hold up to `kT`.
    Coupled { m: usize },
    /// Member of `R(k)`.
    Remainder,
    /// First window of a run whose low modes started apart.
    PreCoupling,
}

impl SetLabel {
    /// Whether the pair lies in `R(k) ∪ S(k, k)`.
    pub fn is_fresh(&self, k: usize) -> bool {
        match *self {
            SetLabel::Remainder => true,
            SetLabel::Coupled { m } => m == k,
            SetLabel::PreCoupling => false,
        }
    }
}

/// Membership of the pair in `S₀(m, k)`: low modes agree on `[mT, kT]`,
/// `|uⁱ(mT)| ≤ D`, and `|uⁱ(t)|² + ∫_{mT}^t |uⁱ|² ≤ r + (C₁ + 1)(t − mT)`
/// at every step of `[mT, kT]`. Square integrability and continuity hold
/// for every finite Galerkin trajectory.
pub fn in_coupled_set(
    pair: &CoupledPairTrajectory,
    m: usize,
    k: usize,
    window: &CouplingWindow,
) -> bool {
    let nt = pair.window_steps;
    let (start, end) = (m * nt, k * nt);
    if m > k || end >= pair.norm_sq1.len() {
        return false;
    }
    if pair.low_gap[start..=end]
        .iter()
        .any(|&g| g > LOW_GAP_TOLERANCE)
    {
        return false;
    }
    let cap = window.norm_cap * window.norm_cap;
    if pair.norm_sq1[start] > cap || pair.norm_sq2[start] > cap {
        return false;
    }
    let dt = pair.dt;
    let growth = window.c1 + 1.0;
    for ns in [&pair.norm_sq1, &pair.norm_sq2] {
        let mut integral = 0.0;
        for n in start..=end {
            if n > start {
                integral += 0.5 * dt * (ns[n - 1] + ns[n]);
            }
            if ns[n] + integral > window.energy_slack + growth * (n - start) as f64 * dt {
                return false;
            }
        }
    }
    true
}

/// `S(m, k)` membership when `S₀(m, k)` holds, else `R(k)`.
pub fn classify_window(
    pair: &CoupledPairTrajectory,
    m: usize,
    k: usize,
    window: &CouplingWindow,
) -> SetLabel {
    if in_coupled_set(pair, m, k, window) {
        SetLabel::Coupled { m }
    } else {
        SetLabel::Remainder
    }
}

/// Label for every `k = 1, …, count`: the smallest `m` with the pair in
/// `S₀(m, k)`, else `R(k)`; the first window of a pre-coupled run is
/// labeled as such.
pub fn label_windows(pair: &CoupledPairTrajectory, window: &CouplingWindow) -> Vec<SetLabel> {
    (1..=pair.windows())
        .map(|k| {
            if k == 1 && pair.pre_coupled() {
                return SetLabel::PreCoupling;
            }
            (0..=k)
                .find(|&m| in_coupled_set(pair, m, k, window))
                .map_or(SetLabel::Remainder, |m| SetLabel::Coupled { m })
        })
        .collect()
}

/// Frequency of `R(k) ∪ S(k, k)` at one `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreshFrequency {
    pub k: usize,
    pub frequency: Proportion,
}

/// Per-`k` frequency of `R(k) ∪ S(k, k)` over an ensemble of label rows.
pub fn fresh_frequencies(labels: &[Vec<SetLabel>]) -> Vec<FreshFrequency> {
    let windows = labels.iter().map(Vec::len).max().unwrap_or(0);
    (1..=windows)
        .map(|k| {
            let hits = labels
                .iter()
                .filter(|row| row.get(k - 1).is_some_and(|l| l.is_fresh(k)))
                .count();
            FreshFrequency {
                k,
                frequency: wilson_interval(hits, labels.len(), Z95),
            }
        })
        .collect()
}

/// Transitions from `S(m, k−1)` that land outside `S(m, k) ∪ R(k) ∪
/// S(k, k)`.
pub fn off_table_transitions(labels: &[Vec<SetLabel>]) -> usize {
    labels
        .iter()
        .map(|row| {
            row.windows(2)
                .enumerate()
                .filter(|(i, w)| {
                    let k = i + 2;
                    match (w[0], w[1]) {
                        (SetLabel::Coupled { m }, next) => {
                            next != SetLabel::Coupled { m } && !next.is_fresh(k)
                        }
                        _ => false,
                    }
                })
                .count()
        })
        .sum()
}

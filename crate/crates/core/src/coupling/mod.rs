//! Binding coupling of two solutions, its Girsanov weight, and the
//! coupled-set classification of trajectory pairs.

mod binding;
mod sets;
#[cfg(test)]
mod tests;

pub use binding::{
    binding_drift, girsanov_log_weight, run_bound_coupling, write_pair_jsonl,
    CoupledPairTrajectory, CouplingOptions, CouplingWindow, GirsanovRecord, WindowPhase,
    DEFAULT_ENERGY_SLACK,
};
pub use sets::{
    classify_window, fresh_frequencies, in_coupled_set, label_windows, off_table_transitions,
    FreshFrequency, SetLabel, LOW_GAP_TOLERANCE,
};

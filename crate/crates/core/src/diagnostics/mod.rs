//! Closed-form certificates, ensemble statistics, distribution distances and
//! decay fits.

mod certificates;
mod distance;
mod ensemble_stats;
mod fit;
mod inequalities;
mod stats;

pub use certificates::{
    energy_certificate, energy_quartic, mean_energy_bound, mean_energy_quartic, mode_threshold,
    threshold_by_formula, threshold_by_spectrum, CertificateInputs, Certificates, EnergyModel,
    Quartic, ThresholdModel, DEFAULT_ALPHA, DEFAULT_EPSILON,
};
pub use distance::bl_distance_1d;
pub use ensemble_stats::{
    bl_distance, bl_distance_panel, mean_energy_check, panel_names, supermartingale_test,
    EnergySeries, EnsembleStats, MeanEnergyRow, SupermartingaleReport, L4_POW4, NORM_SQ,
};
pub use fit::{fit_exponential_decay, linear_regression, DecayFit};
pub use inequalities::{
    kernel_inequality_battery, mollifier_approximation, mollifier_lower_bound_violations,
    reference_bump, validate_mollifier_pair, InequalityReport, MollifierRow,
};
pub use stats::{mean_se, wilson_interval, Proportion, Z95};

//! Time integration of the local and nonlocal models, their kernels, and the
//! slaved high-mode flow.

mod kernel;
mod params;
mod slaved;
mod stepper;
mod trajectory;

pub use kernel::{
    mollifier_constant, mollifier_profile, mollifier_samples, KernelFamily, KernelSpec,
    MollifierNormalization,
};
pub use params::{ModelParams, Nonlinearity};
pub use slaved::{energy_cap_holds, slave_high_modes};
pub use stepper::{evaluate_drift, nonlocal_term, phi1, step, Stepper};
pub use trajectory::{simulate, NoiseHandle, Trajectory};

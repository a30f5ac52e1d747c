use std::io::Write;

use serde::Serialize;

use super::{ModelParams, Stepper};
use crate::forcing::NoiseSpec;
use crate::spectral::SpectralField;
use crate::Result;

/// Which noise stream drove a trajectory, so it can be replayed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NoiseHandle {
    pub seed: u64,
    pub stream_id: u64,
}

/// States recorded on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub noise: Option<NoiseHandle>,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    times: &'a [f64],
    norm_sq: Vec<f64>,
    noise: Option<NoiseHandle>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&SpectralField> {
        self.states.last()
    }

    pub fn norm_sq_series(&self) -> Vec<f64> {
        self.states.iter().map(SpectralField::norm_sq).collect()
    }

    /// CSV with header `time,c0,c1,...`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let modes = self.states.first().map_or(0, |s| s.coeffs().len());
        write!(w, "time")?;
        for i in 0..modes {
            write!(w, ",c{i}")?;
        }
        writeln!(w)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for c in s.coeffs() {
                write!(w, ",{c:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// JSON summary with the norm time series.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::to_value(Summary {
            times: &self.times,
            norm_sq: self.norm_sq_series(),
            noise: self.noise,
        })
        .expect("summary serializes")
    }
}

/// Integrates `steps` steps from `u0`, recording every `record_every` steps
/// (the initial state is always recorded).
pub fn simulate(
    params: &ModelParams,
    noise: &NoiseSpec,
    stream_id: u64,
    u0: &SpectralField,
    steps: usize,
    record_every: usize,
) -> Result<Trajectory> {
    params.basis().check_coeffs(u0.coeffs().len())?;
    let record_every = record_every.max(1);
    let mut stepper = Stepper::new(params)?;
    let stream = noise.stream(stream_id);
    let dt = params.dt();
    let mut u = u0.clone();
    let mut dw = vec![0.0; u.coeffs().len()];
    let mut times = vec![0.0];
    let mut states = vec![u.clone()];
    for n in 0..steps {
        stream.increment_into(n as u64, dt, &mut dw);
        stepper.advance(u.coeffs_mut(), &dw, n)?;
        if (n + 1) % record_every == 0 {
            times.push((n + 1) as f64 * dt);
            states.push(u.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        noise: Some(NoiseHandle {
            seed: noise.seed(),
            stream_id,
        }),
    })
}

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use crate::spectral::SpectralBasis;
use crate::{Error, Result};

/// How the mollifier `J_δ` is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierNormalization {
    /// `J_δ(x) = δ⁻² J(x/δ)` with `c` normalizing the half-integral of `J`;
    /// total mass `2/δ`.
    #[default]
    Verbatim,
    /// `J(x/δ) / (2δ)`, total mass one.
    UnitMass,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// `0 < b ≤ G ≤ a` everywhere.
    BoundedPositive,
    /// Compactly supported bump of half-width `delta`.
    Mollifier {
        delta: f64,
        normalization: MollifierNormalization,
    },
    /// Tabulated kernel with `0 ≤ b ≤ G ≤ a`.
    Custom,
}

/// Kernel `G` of the nonlocal term, sampled on a basis grid, with its bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    samples: Vec<f64>,
    lower: f64,
    upper: f64,
}

fn check_bounds(samples: &[f64], lower: f64, upper: f64) -> Result<()> {
    if !(lower <= upper) {
        return Err(Error::InconsistentKernelBounds { lower, upper });
    }
    for (index, &value) in samples.iter().enumerate() {
        if !(value >= lower && value <= upper) {
            return Err(Error::KernelOutOfBounds {
                index,
                value,
                lower,
                upper,
            });
        }
    }
    Ok(())
}

impl KernelSpec {
    pub fn bounded_positive(samples: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::InconsistentKernelBounds { lower, upper });
        }
        if !(lower > 0.0) {
            return Err(Error::invalid("kernel lower bound", "must be positive"));
        }
        check_bounds(&samples, lower, upper)?;
        Ok(Self {
            family: KernelFamily::BoundedPositive,
            samples,
            lower,
            upper,
        })
    }

    /// `G(x) = b + (a − b)(1 + cos x)/2`, spanning exactly `[b, a]`.
    pub fn raised_cosine(basis: &SpectralBasis, lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::InconsistentKernelBounds { lower, upper });
        }
        let samples = basis
            .grid_points()
            .iter()
            .map(|x| (lower + (upper - lower) * 0.5 * (1.0 + x.cos())).clamp(lower, upper))
            .collect();
        Self::bounded_positive(samples, lower, upper)
    }

    pub fn custom(samples: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= 0.0) {
            return Err(Error::invalid("kernel lower bound", "must be nonnegative"));
        }
        check_bounds(&samples, lower, upper)?;
        Ok(Self {
            family: KernelFamily::Custom,
            samples,
            lower,
            upper,
        })
    }

    pub fn mollifier(
        basis: &SpectralBasis,
        delta: f64,
        normalization: MollifierNormalization,
    ) -> Result<Self> {
        let samples = mollifier_samples(delta, basis, normalization)?;
        let upper = mollifier_upper_bound(delta, normalization);
        Ok(Self {
            family: KernelFamily::Mollifier {
                delta,
                normalization,
            },
            samples,
            lower: 0.0,
            upper,
        })
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Lower bound `b`.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// Upper bound `a`.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Reads a two-column `x,G(x)` table. The abscissae must be the basis grid.
    pub fn read_csv<R: BufRead>(
        r: R,
        basis: &SpectralBasis,
        lower: f64,
        upper: f64,
    ) -> Result<Self> {
        let grid = basis.grid_points();
        let mut samples = Vec::with_capacity(grid.len());
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<kernel csv>", e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| Error::Parse {
                what: "kernel csv",
                line: i + 1,
                reason,
            };
            let mut cols = line.split(',').map(str::trim);
            let (Some(xs), Some(gs)) = (cols.next(), cols.next()) else {
                return Err(bad("expected two columns".into()));
            };
            let (Ok(x), Ok(g)) = (xs.parse::<f64>(), gs.parse::<f64>()) else {
                if samples.is_empty() && i == 0 {
                    continue; // header
                }
                return Err(bad(format!("cannot parse `{line}`")));
            };
            let j = samples.len();
            if j >= grid.len() || (x - grid[j]).abs() > 1e-9 {
                return Err(bad(format!("abscissa {x} does not match grid point {j}")));
            }
            samples.push(g);
        }
        basis.check_grid(samples.len())?;
        if lower > 0.0 {
            Self::bounded_positive(samples, lower, upper)
        } else {
            Self::custom(samples, lower, upper)
        }
    }

    pub fn write_csv<W: Write>(&self, basis: &SpectralBasis, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,G")?;
        for (x, g) in basis.grid_points().iter().zip(&self.samples) {
            writeln!(w, "{x:.16e},{g:.16e}")?;
        }
        Ok(())
    }
}

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// `c = (∫₀¹ exp(−1/(1−x²)) dx)⁻¹`, by composite Simpson on 2¹⁶ panels.
pub fn mollifier_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let n = 1usize << 16;
        let h = 1.0 / n as f64;
        let mut s = bump(0.0) + bump(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * bump(i as f64 * h);
        }
        1.0 / (s * h / 3.0)
    })
}

/// Unscaled bump `J(x)`; the support is `|x| < 1`.
pub fn mollifier_profile(x: f64) -> f64 {
    mollifier_constant() * bump(x)
}

fn mollifier_upper_bound(delta: f64, normalization: MollifierNormalization) -> f64 {
    let c = mollifier_constant();
    match normalization {
        MollifierNormalization::Verbatim => c / (delta * delta),
        MollifierNormalization::UnitMass => c / (2.0 * delta),
    }
}

/// Samples `J_δ` on the periodic grid, wrapping `x` into `(−π, π]`.
pub fn mollifier_samples(
    delta: f64,
    basis: &SpectralBasis,
    normalization: MollifierNormalization,
) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta < PI) {
        return Err(Error::invalid("delta", format!("{delta} outside (0, π)")));
    }
    let scale = match normalization {
        MollifierNormalization::Verbatim => 1.0 / (delta * delta),
        MollifierNormalization::UnitMass => 0.5 / delta,
    };
    Ok(basis
        .grid_points()
        .iter()
        .map(|&x| {
            let y = if x > PI { x - 2.0 * PI } else { x };
            scale * mollifier_profile(y / delta)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Midpoint rule with a million cells, independent of the Simpson path.
    fn midpoint_half_integral() -> f64 {
        let n = 1_000_000;
        let h = 1.0 / n as f64;
        (0..n).map(|i| bump((i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn normalizing_constant() {
        let half = midpoint_half_integral();
        assert!((half - 0.2220).abs() < 5e-5, "{half}");
        let c = mollifier_constant();
        assert!((c - 1.0 / half).abs() < 1e-9 * c);
        assert!((c - 4.504).abs() < 1e-3, "{c}");
    }

    #[test]
    fn support_and_mass() {
        let basis = SpectralBasis::with_grid(32, 4096).unwrap();
        for delta in [0.1, 0.4, 1.0, 2.5] {
            let s = mollifier_samples(delta, &basis, MollifierNormalization::Verbatim).unwrap();
            for (x, g) in basis.grid_points().iter().zip(&s) {
                let y = if *x > PI { x - 2.0 * PI } else { *x };
                if y.abs() >= delta {
                    assert_eq!(*g, 0.0);
                }
                assert!(*g >= 0.0 && *g <= mollifier_constant() / (delta * delta));
            }
            let mass: f64 = s.iter().sum::<f64>() * basis.spacing();
            assert!(
                (mass - 2.0 / delta).abs() < 1e-6 * (2.0 / delta),
                "{delta}: {mass}"
            );
            let u = mollifier_samples(delta, &basis, MollifierNormalization::UnitMass).unwrap();
            let mass: f64 = u.iter().sum::<f64>() * basis.spacing();
            assert!((mass - 1.0).abs() < 1e-6);
            let m = s.len();
            for j in 1..m {
                assert!((s[j] - s[m - j]).abs() <= 1e-12 * s[j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn rejects_bad_delta_and_bounds() {
        let basis = SpectralBasis::new(4).unwrap();
        assert!(mollifier_samples(0.0, &basis, Default::default()).is_err());
        assert!(mollifier_samples(4.0, &basis, Default::default()).is_err());
        assert!(matches!(
            KernelSpec::raised_cosine(&basis, 2.0, 1.0),
            Err(Error::InconsistentKernelBounds { .. })
        ));
        assert!(KernelSpec::bounded_positive(vec![0.5; 32], 1.0, 2.0).is_err());
        assert!(KernelSpec::bounded_positive(vec![1.0; 32], 0.0, 2.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let basis = SpectralBasis::new(4).unwrap();
        let k = KernelSpec::raised_cosine(&basis, 0.5, 2.0).unwrap();
        let mut out = Vec::new();
        k.write_csv(&basis, &mut out).unwrap();
        let back = KernelSpec::read_csv(out.as_slice(), &basis, 0.5, 2.0).unwrap();
        assert_eq!(back.samples(), k.samples());
        let shifted = String::from_utf8(out)
            .unwrap()
            .replacen("0.0000000000000000e0,", "0.1,", 1);
        assert!(KernelSpec::read_csv(shifted.as_bytes(), &basis, 0.5, 2.0).is_err());
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::rng::RngState;
use crate::scalar::Real;

use super::DiscreteMeasure;

/// Attaches the density `f` (sampled at the support points) to `m`.
///
/// Weights are left untouched; `f` rides alongside so that signed densities
/// survive into the extension transform and the `L²(μ)` norm.
pub fn density_apply<T: Real>(
    m: &DiscreteMeasure<T>,
    f: impl Fn(Vec3<T>) -> T,
) -> Result<DiscreteMeasure<T>> {
    let values: Vec<T> = m.points().iter().map(|&p| f(p)).collect();
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteDensity { index });
    }
    let mut out = m.clone();
    out.set_density(values);
    Ok(out)
}

/// Named densities used by the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityFamily {
    /// `f ≡ 1`.
    One,
    /// `f(p) = p · e₃`.
    CoordZ,
    /// Independent fair ±1 signs, one per point, from a seeded stream.
    RandomSign,
}

impl DensityFamily {
    pub fn name(self) -> &'static str {
        match self {
            DensityFamily::One => "one",
            DensityFamily::CoordZ => "coord-z",
            DensityFamily::RandomSign => "random-sign",
        }
    }

    /// Attaches this density to `m`. `seed` is used by `random-sign` only.
    pub fn apply<T: Real>(self, m: &DiscreteMeasure<T>, seed: u64) -> Result<DiscreteMeasure<T>> {
        match self {
            DensityFamily::One => density_apply(m, |_| T::one()),
            DensityFamily::CoordZ => density_apply(m, |p| p.z),
            DensityFamily::RandomSign => {
                let mut rng = RngState::new(seed);
                let signs: Vec<T> = (0..m.len())
                    .map(|_| if rng.next_u64() >> 63 == 0 { T::one() } else { -T::one() })
                    .collect();
                let mut out = m.clone();
                out.set_density(signs);
                Ok(out)
            }
        }
    }
}

impl fmt::Display for DensityFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DensityFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" => Ok(DensityFamily::One),
            "coord-z" => Ok(DensityFamily::CoordZ),
            "random-sign" => Ok(DensityFamily::RandomSign),
            other => Err(Error::InvalidArgument(format!(
                "unknown density `{other}` (expected one, coord-z or random-sign)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::build_sphere_measure;

    #[test]
    fn constant_density() {
        let m = build_sphere_measure::<f64>(50).unwrap();
        let d = density_apply(&m, |_| 1.0).unwrap();
        assert!(d.density().unwrap().iter().all(|&v| v == 1.0));
        assert_eq!(d.weights(), m.weights());
    }

    #[test]
    fn coord_z_second_moment() {
        // ∫ z² dσ / 4π = 1/3 on the unit sphere.
        let m = build_sphere_measure::<f64>(4000).unwrap();
        let d = DensityFamily::CoordZ.apply(&m, 0).unwrap();
        let v = d.density_l2_sq();
        assert!((v - 1.0 / 3.0).abs() < 0.02 / 3.0, "{v}");
    }

    #[test]
    fn rejects_non_finite() {
        let m = build_sphere_measure::<f64>(20).unwrap();
        let r = density_apply(&m, |p| if p.z > 0.9 { f64::NAN } else { 0.0 });
        assert!(matches!(r, Err(Error::NonFiniteDensity { index: 0 })));
    }

    #[test]
    fn random_signs_are_balanced_and_seeded() {
        let m = build_sphere_measure::<f64>(2000).unwrap();
        let a = DensityFamily::RandomSign.apply(&m, 3).unwrap();
        let b = DensityFamily::RandomSign.apply(&m, 3).unwrap();
        assert_eq!(a.density(), b.density());
        let s: f64 = a.density().unwrap().iter().sum();
        assert!(s.abs() < 200.0);
        assert!((a.density_l2_sq() - 1.0).abs() < 1e-12);
    }
}

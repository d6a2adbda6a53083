//! Slow, independent references for the fast paths.

use serde::{Deserialize, Serialize};

use crate::annulus::AnnulusQuery;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::measure::{fibonacci_sphere, within_neighborhood, DiscreteMeasure, FractalSpec, LatticePoint};
use crate::scalar::{CompensatedSum, Real};

/// Fast value against its reference, with the tolerance that decides `pass`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub fast_value: f64,
    pub oracle_value: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub tolerance: f64,
    /// Whether `tolerance` bounds the absolute or the relative difference.
    pub relative: bool,
    pub pass: bool,
}

impl OracleReport {
    pub fn absolute(name: impl Into<String>, fast: f64, oracle: f64, tolerance: f64) -> Self {
        Self::build(name.into(), fast, oracle, tolerance, false)
    }

    pub fn relative(name: impl Into<String>, fast: f64, oracle: f64, tolerance: f64) -> Self {
        Self::build(name.into(), fast, oracle, tolerance, true)
    }

    fn build(name: String, fast: f64, oracle: f64, tolerance: f64, relative: bool) -> Self {
        let abs_diff = (fast - oracle).abs();
        let rel_diff = if oracle == 0.0 {
            if abs_diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            abs_diff / oracle.abs()
        };
        let pass = if relative { rel_diff <= tolerance } else { abs_diff <= tolerance };
        Self {
            name,
            fast_value: fast,
            oracle_value: oracle,
            abs_diff,
            rel_diff,
            tolerance,
            relative,
            pass,
        }
    }
}

/// Points above which the quadratic loop is refused.
pub const BRUTE_FORCE_LIMIT: usize = 10_000;

/// `A(t, ε)` by a plain loop over ordered pairs `i ≠ j`, row-major and
/// compensated.
pub fn brute_force_annulus<T: Real>(m: &DiscreteMeasure<T>, q: &AnnulusQuery<T>) -> Result<T> {
    if m.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "brute force is limited to {BRUTE_FORCE_LIMIT} points, got {}",
            m.len()
        )));
    }
    let (lo2, hi2) = q.bounds_sq();
    let pts = m.points();
    let ws = m.weights();
    let mut total = CompensatedSum::new();
    for i in 0..pts.len() {
        let mut row = CompensatedSum::new();
        for j in 0..pts.len() {
            if j == i {
                continue;
            }
            let d2 = pts[i].dist_sq(pts[j]);
            if d2 >= lo2 && d2 <= hi2 {
                row.add(ws[j]);
            }
        }
        total.add(ws[i] * row.value());
    }
    Ok(total.value())
}

/// `∫ e^{−2πi x·ξ} dσ(x)` over the unit sphere (mass `4π`) by an equal-weight
/// sum over `n` Fibonacci nodes. Returns the real part; the imaginary part
/// vanishes by symmetry up to quadrature error.
pub fn quadrature_sphere_ft(xi: Vec3<f64>, n: usize) -> Result<f64> {
    if n < 1000 {
        return Err(Error::InvalidArgument(format!("quadrature needs at least 1000 nodes, got {n}")));
    }
    let w = 4.0 * std::f64::consts::PI / n as f64;
    let s: CompensatedSum<f64> = fibonacci_sphere::<f64>(n)
        .into_iter()
        .map(|x| w * (std::f64::consts::TAU * x.dot(xi)).cos())
        .collect();
    Ok(s.value())
}

/// Finest-stage lattice centers of `spec` by direct enumeration: every
/// lattice point of the last stage is tested against every lattice point of
/// each coarser stage. Lexicographic order.
pub fn exhaustive_fractal_scan(spec: &FractalSpec) -> Result<Vec<LatticePoint>> {
    spec.validate()?;
    if spec.stage > 2 {
        return Err(Error::InvalidArgument(format!(
            "exhaustive scan supports stages 1 and 2, got {}",
            spec.stage
        )));
    }
    let lattice = |q: u64| -> Vec<LatticePoint> {
        let n = q as i64;
        let mut out = Vec::with_capacity(((n + 1) * (n + 1) * (n + 1)) as usize);
        for x in 0..=n {
            for y in 0..=n {
                for z in 0..=n {
                    out.push([x, y, z]);
                }
            }
        }
        out
    };
    let k = spec.stage;
    let qk = spec.q(k);
    let coarse: Vec<(u64, f64, Vec<LatticePoint>)> = (1..k)
        .map(|i| (spec.q(i), spec.radius(i), lattice(spec.q(i))))
        .collect();
    Ok(lattice(qk)
        .into_iter()
        .filter(|&a| {
            coarse
                .iter()
                .all(|(qi, ri, pts)| pts.iter().any(|&b| within_neighborhood(a, qk, b, *qi, *ri)))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::{annulus_measure, build_spatial_index};
    use crate::measure::{build_atomic_measure, build_fractal_measure};
    use crate::oscillatory::sphere_surface_ft;
    use crate::rng::RngState;

    #[test]
    fn reports_decide_pass() {
        assert!(OracleReport::absolute("a", 1.0, 1.0 + 1e-13, 1e-12).pass);
        assert!(!OracleReport::absolute("a", 1.0, 1.1, 1e-12).pass);
        assert!(OracleReport::relative("r", 1.05, 1.0, 0.1).pass);
        assert!(OracleReport::relative("z", 0.0, 0.0, 0.0).pass);
    }

    #[test]
    fn brute_force_small_cases() {
        let m = build_atomic_measure(&[(Vec3::zero(), 0.5), (Vec3::new(1.0, 0.0, 0.0), 0.5)]).unwrap();
        assert_eq!(brute_force_annulus(&m, &AnnulusQuery::new(1.0, 0.01).unwrap()).unwrap(), 0.5);
        assert_eq!(brute_force_annulus(&m, &AnnulusQuery::new(2.0, 0.01).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn brute_force_matches_index() {
        let mut rng = RngState::new(17);
        let atoms: Vec<(Vec3<f64>, f64)> = (0..400)
            .map(|_| (Vec3::new(rng.uniform(), rng.uniform(), rng.uniform()), rng.uniform()))
            .collect();
        let m = build_atomic_measure(&atoms).unwrap();
        for _ in 0..10 {
            let q = AnnulusQuery::new(0.05 + rng.uniform(), 0.01 + 0.3 * rng.uniform()).unwrap();
            let idx = build_spatial_index(&m, 0.07).unwrap();
            let a = annulus_measure(&m, &q, &idx);
            let b = brute_force_annulus(&m, &q).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn quadrature_against_closed_form() {
        assert!((quadrature_sphere_ft(Vec3::zero(), 1000).unwrap() - 4.0 * std::f64::consts::PI).abs() < 1e-9);
        let xi = Vec3::new(0.0, 3.0, 0.0);
        let q = quadrature_sphere_ft(xi, 10_000).unwrap();
        assert!((q - sphere_surface_ft(xi)).abs() < 1e-3);
        assert!(quadrature_sphere_ft(xi, 999).is_err());
    }

    #[test]
    fn scan_counts() {
        assert_eq!(exhaustive_fractal_scan(&FractalSpec::new(2.0, 1)).unwrap().len(), 27);
        assert_eq!(exhaustive_fractal_scan(&FractalSpec::new(3.0, 1)).unwrap().len(), 27);
        assert!(exhaustive_fractal_scan(&FractalSpec::new(2.0, 3)).is_err());
    }

    #[test]
    fn scan_equals_builder_at_stage_two() {
        for s in [1.5, 2.0, 2.5, 3.0] {
            let spec = FractalSpec::new(s, 2);
            let scan = exhaustive_fractal_scan(&spec).unwrap();
            let built = build_fractal_measure::<f64>(&spec).unwrap();
            assert_eq!(scan, built.centers, "s = {s}");
        }
    }
}

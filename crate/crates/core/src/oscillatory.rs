//! Extension transform of a weighted point cloud, the sphere's Fourier
//! transform, and the mollified Plancherel check linking the frequency-side
//! pairing to the physical pair sum.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annulus::{annulus_measure, AnnulusQuery, CellIndex};
use crate::error::{Error, Result};
use crate::geometry::{Rotation, Vec3};
use crate::measure::DiscreteMeasure;
use crate::rng::RngState;
use crate::scalar::{CompensatedSum, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionSample<T> {
    pub x: Vec3<T>,
    pub theta: Rotation<T>,
    pub value: Complex<T>,
}

/// `Σ_j f(p_j) w_j exp(−2πi x·(θ p_j))`.
///
/// The phase is evaluated as `(θᵀx)·p_j`, so only `x` is rotated.
pub fn extension_transform<T: Real>(m: &DiscreteMeasure<T>, theta: &Rotation<T>, x: Vec3<T>) -> Complex<T> {
    let y = theta.inverse().apply(x);
    let two_pi = T::TAU();
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for (j, (&p, &w)) in m.points().iter().zip(m.weights()).enumerate() {
        let c = w * m.density_at(j);
        let (s, co) = (two_pi * y.dot(p)).sin_cos();
        re.add(c * co);
        im.add(-(c * s));
    }
    Complex::new(re.value(), im.value())
}

/// Evaluates the transform at every `(θ, x)` pair of the two lists.
pub fn extension_samples<T: Real>(
    m: &DiscreteMeasure<T>,
    thetas: &[Rotation<T>],
    xs: &[Vec3<T>],
) -> Vec<ExtensionSample<T>> {
    thetas
        .par_iter()
        .flat_map_iter(|th| {
            xs.iter().map(move |&x| ExtensionSample {
                x,
                theta: *th,
                value: extension_transform(m, th, x),
            })
        })
        .collect()
}

/// `sin(2πr)/(2πr)`, the transform of the normalized unit-sphere measure at
/// radius `r`. Uses the Taylor series below `r = 1e-4`.
pub fn sphere_ft_normalized<T: Real>(r: T) -> T {
    let r = r.abs();
    let u = T::TAU() * r;
    if r < T::of(1e-4) {
        let u2 = u * u;
        T::one() - u2 / T::of(6.0) + u2 * u2 / T::of(120.0)
    } else {
        u.sin() / u
    }
}

/// Transform of the (unnormalized, mass `4π`) unit-sphere surface measure:
/// `2 sin(2π|ξ|)/|ξ|`, with the value `4π` at the origin.
pub fn sphere_surface_ft<T: Real>(xi: Vec3<T>) -> T {
    T::of(4.0) * T::PI() * sphere_ft_normalized(xi.norm())
}

/// Gaussian mollifier `φ_δ(x) = δ⁻³ exp(−π|x|²/δ²)` (transform
/// `exp(−πδ²|ξ|²)`) and the frequency-side Monte Carlo parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub delta: f64,
    pub freq_cutoff: f64,
    pub mc_samples: usize,
}

impl MollifierSpec {
    pub fn new(delta: f64, freq_cutoff: f64, mc_samples: usize) -> Result<Self> {
        let s = Self {
            delta,
            freq_cutoff,
            mc_samples,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.freq_cutoff >= 5.0 / self.delta) {
            return Err(Error::InvalidArgument(format!(
                "frequency cutoff {} is below 5/delta = {}",
                self.freq_cutoff,
                5.0 / self.delta
            )));
        }
        if self.mc_samples < 2 {
            return Err(Error::InvalidArgument("need at least 2 Monte Carlo samples".into()));
        }
        Ok(())
    }
}

/// `(ρ_t ∗ φ_δ)(r)`: the normalized radius-`t` sphere measure smoothed by the
/// Gaussian mollifier, at distance `r` from the origin.
///
/// Closed form `δ⁻¹ (e^{−π(r−t)²/δ²} − e^{−π(r+t)²/δ²}) / (4π r t)`.
pub fn smoothed_shell_density(r: f64, t: f64, delta: f64) -> f64 {
    let r = r.abs();
    let d2 = delta * delta;
    let a = 2.0 * std::f64::consts::PI * r * t / d2;
    if a < 1e-6 {
        let base = (-std::f64::consts::PI * (r * r + t * t) / d2).exp() / (d2 * delta);
        base * (1.0 + a * a / 6.0)
    } else {
        let near = (-std::f64::consts::PI * (r - t) * (r - t) / d2).exp();
        near * (-(-2.0 * a).exp_m1()) / (4.0 * std::f64::consts::PI * r * t * delta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub t: f64,
    pub delta: f64,
    /// `Σ_{i,j} w_i w_j (ρ_t ∗ φ_δ)(|p_i − p_j|)`.
    pub physical: f64,
    /// Monte Carlo estimate of `∫_{|ξ|≤Ξ} σ̂(tξ) |μ̂(ξ)|² e^{−πδ²|ξ|²} dξ`.
    pub frequency: f64,
    pub stderr: f64,
    pub rel_diff: f64,
    /// Standard error above half the estimate.
    pub inconclusive: bool,
}

const MC_BLOCKS: usize = 64;
/// Share of frequency draws taken from the damping Gaussian; the rest use
/// the log-uniform radial law.
const GAUSSIAN_SHARE: f64 = 0.5;
const RADIAL_FLOOR: f64 = 1e-3;

/// Importance law for the frequency integral: an equal mixture of the
/// damping Gaussian `N(0, (2πδ²)⁻¹ I)` and a law with uniform direction and
/// log-uniform radius on `[10⁻³, Ξ]`.
///
/// The radial component matches the `|ξ|⁻¹` envelope of the integrand, which
/// the Gaussian alone undersamples near the origin.
#[derive(Clone, Copy, Debug)]
struct FrequencyLaw {
    sigma: f64,
    gauss_norm: f64,
    pi_d2: f64,
    log_span: f64,
    cutoff: f64,
}

impl FrequencyLaw {
    fn new(spec: &MollifierSpec) -> Self {
        let d = spec.delta;
        Self {
            sigma: 1.0 / (d * std::f64::consts::TAU.sqrt()),
            gauss_norm: d * d * d,
            pi_d2: std::f64::consts::PI * d * d,
            log_span: (spec.freq_cutoff / RADIAL_FLOOR).ln(),
            cutoff: spec.freq_cutoff,
        }
    }

    fn draw(&self, rng: &mut RngState) -> [f64; 3] {
        if rng.uniform() < GAUSSIAN_SHARE {
            [rng.normal() * self.sigma, rng.normal() * self.sigma, rng.normal() * self.sigma]
        } else {
            let dir = loop {
                let v = [rng.normal(), rng.normal(), rng.normal()];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if n > 0.0 {
                    break v.map(|c| c / n);
                }
            };
            let r = RADIAL_FLOOR * (self.log_span * rng.uniform()).exp();
            dir.map(|c| c * r)
        }
    }

    /// Mixture density at radius `r`.
    fn density(&self, r: f64) -> f64 {
        let gauss = self.gauss_norm * (-self.pi_d2 * r * r).exp();
        let radial = if (RADIAL_FLOOR..=self.cutoff).contains(&r) {
            1.0 / (4.0 * std::f64::consts::PI * r * r * r * self.log_span)
        } else {
            0.0
        };
        GAUSSIAN_SHARE * gauss + (1.0 - GAUSSIAN_SHARE) * radial
    }

    /// `e^{−πδ²|ξ|²}`.
    fn damping(&self, r: f64) -> f64 {
        (-self.pi_d2 * r * r).exp()
    }
}

/// Both sides of the mollified pairing for the measure `m` (weights only;
/// any attached density is ignored).
///
/// The frequency side is importance-sampled in `64` fixed blocks on
/// jump-ahead substreams of `rng`; block partials merge in block order.
pub fn mollified_identity_check<T: Real>(
    m: &DiscreteMeasure<T>,
    t: f64,
    spec: &MollifierSpec,
    rng: &RngState,
) -> Result<IdentityCheck> {
    spec.validate()?;
    if !(0.5..=2.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t must lie in [0.5, 2], got {t}")));
    }
    let pts: Vec<[f64; 3]> = m.points().iter().map(|p| p.cast::<f64>().to_array()).collect();
    let ws: Vec<f64> = m.weights().iter().map(|w| w.to_f64_lossy()).collect();
    let physical = physical_side(&pts, &ws, t, spec.delta);

    let law = FrequencyLaw::new(spec);
    let streams = rng.split(MC_BLOCKS);
    let per_block = spec.mc_samples / MC_BLOCKS;
    let extra = spec.mc_samples % MC_BLOCKS;
    let partials: Vec<(CompensatedSum<f64>, CompensatedSum<f64>)> = streams
        .into_par_iter()
        .enumerate()
        .map(|(b, mut s)| {
            let count = per_block + usize::from(b < extra);
            let mut sum = CompensatedSum::new();
            let mut sq = CompensatedSum::new();
            for _ in 0..count {
                let xi = law.draw(&mut s);
                let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
                let v = if r <= law.cutoff {
                    sphere_ft_normalized(t * r) * power_spectrum(&pts, &ws, xi) * law.damping(r) / law.density(r)
                } else {
                    0.0
                };
                sum.add(v);
                sq.add(v * v);
            }
            (sum, sq)
        })
        .collect();
    let mut sum = CompensatedSum::new();
    let mut sq = CompensatedSum::new();
    for (a, b) in &partials {
        sum.merge(a);
        sq.merge(b);
    }
    let n = spec.mc_samples as f64;
    let mean = sum.value() / n;
    let var = ((sq.value() / n - mean * mean) * n / (n - 1.0)).max(0.0);
    let stderr = (var / n).sqrt();
    Ok(IdentityCheck {
        t,
        delta: spec.delta,
        physical,
        frequency: mean,
        stderr,
        rel_diff: (mean - physical).abs() / physical.abs().max(f64::MIN_POSITIVE),
        inconclusive: stderr > 0.5 * mean.abs(),
    })
}

/// `|Σ_j w_j e^{−2πi p_j·ξ}|²`.
fn power_spectrum(pts: &[[f64; 3]], ws: &[f64], xi: [f64; 3]) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let (mut re, mut im) = (0.0, 0.0);
    for (p, &w) in pts.iter().zip(ws) {
        let (s, c) = (two_pi * (p[0] * xi[0] + p[1] * xi[1] + p[2] * xi[2])).sin_cos();
        re += w * c;
        im -= w * s;
    }
    re * re + im * im
}

fn physical_side(pts: &[[f64; 3]], ws: &[f64], t: f64, delta: f64) -> f64 {
    let diag = smoothed_shell_density(0.0, t, delta);
    let rows: Vec<usize> = (0..pts.len()).collect();
    let partials: Vec<CompensatedSum<f64>> = rows
        .par_chunks(64)
        .map(|chunk| {
            let mut acc = CompensatedSum::new();
            for &i in chunk {
                let p = pts[i];
                let mut row = CompensatedSum::new();
                for j in (i + 1)..pts.len() {
                    let q = pts[j];
                    let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
                    row.add(ws[j] * smoothed_shell_density(d, t, delta));
                }
                acc.add(2.0 * ws[i] * row.value());
                acc.add(ws[i] * ws[i] * diag);
            }
            acc
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// `A(t, ε)/ε`, the finite-`ε` stand-in for the averaged self-convolution at
/// radius `t`.
pub fn averaged_convolution_value<T: Real>(m: &DiscreteMeasure<T>, t: T, eps: T, idx: &CellIndex<T>) -> Result<T> {
    let q = AnnulusQuery::new(t, eps)?;
    Ok(annulus_measure(m, &q, idx) / eps)
}

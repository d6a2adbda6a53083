//! Finite stages of the Cantor-type set built from lattice neighborhoods.
//!
//! For an integer `q`, `E_q` is the `q^{-d/s}`-neighborhood (Euclidean
//! balls) of the scaled lattice `q⁻¹(ℤ^d ∩ [0, q]^d)`. Stage `k` of the
//! construction is `E_{q_1} ∩ … ∩ E_{q_k}`. Lattice points are stored as
//! integer coordinates at their own stage so membership tests are exact up
//! to one rounding of the radius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::rng::RngState;
use crate::scalar::Real;

use super::{DiscreteMeasure, MeasureMeta};

/// Integer coordinates `a ∈ {0, …, q}³` of the lattice point `a / q`.
pub type LatticePoint = [i64; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractalSpec {
    /// Ambient dimension. Only 3 is supported.
    pub d: usize,
    /// Target Hausdorff dimension, `0 < s ≤ d`; `s = d` is the degenerate
    /// full cover.
    pub s: f64,
    pub q_sequence: Vec<u64>,
    pub stage: usize,
    /// Number of points spread uniformly over the surviving finest-stage
    /// neighborhoods. Zero places one atom at each surviving lattice center.
    #[serde(default)]
    pub fill: usize,
    /// Seed of the fill sampler.
    #[serde(default)]
    pub seed: u64,
}

/// Smallest admissible sequence: `q_1 = 2`, `q_{i+1} = q_i^i + 1`,
/// i.e. `2, 3, 10, 1001, …`.
pub fn canonical_q_sequence(len: usize) -> Vec<u64> {
    let mut q = Vec::with_capacity(len);
    for i in 0..len {
        if i == 0 {
            q.push(2);
        } else {
            let prev: u64 = q[i - 1];
            q.push(prev.saturating_pow(i as u32).saturating_add(1));
        }
    }
    q
}

impl FractalSpec {
    /// Spec with the canonical q-sequence and no fill.
    pub fn new(s: f64, stage: usize) -> Self {
        Self {
            d: 3,
            s,
            q_sequence: canonical_q_sequence(stage.max(1)),
            stage,
            fill: 0,
            seed: 0,
        }
    }

    pub fn with_fill(mut self, fill: usize, seed: u64) -> Self {
        self.fill = fill;
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidFractalSpec(msg));
        if self.d != 3 {
            return bad(format!("only d = 3 is supported, got {}", self.d));
        }
        if !(self.s > 0.0 && self.s <= self.d as f64) {
            return bad(format!("s must lie in (0, {}], got {}", self.d, self.s));
        }
        if self.stage == 0 || self.stage > 3 {
            return bad(format!("stage must be 1, 2 or 3, got {}", self.stage));
        }
        if self.q_sequence.len() < self.stage {
            return bad(format!(
                "stage {} needs {} q values, got {}",
                self.stage,
                self.stage,
                self.q_sequence.len()
            ));
        }
        if self.q_sequence[0] != 2 {
            return bad(format!("q_1 must be 2, got {}", self.q_sequence[0]));
        }
        for i in 1..self.q_sequence.len() {
            let prev = self.q_sequence[i - 1] as u128;
            let bound = prev.saturating_pow(i as u32);
            if (self.q_sequence[i] as u128) <= bound {
                return bad(format!(
                    "q_{} = {} must exceed q_{}^{} = {bound}",
                    i + 1,
                    self.q_sequence[i],
                    i,
                    i
                ));
            }
        }
        Ok(())
    }

    /// `q_i` for 1-based stage `i`.
    pub fn q(&self, stage: usize) -> u64 {
        self.q_sequence[stage - 1]
    }

    /// Neighborhood radius `q^{-d/s}` at 1-based stage `i`.
    pub fn radius(&self, stage: usize) -> f64 {
        (self.q(stage) as f64).powf(-(self.d as f64) / self.s)
    }
}

/// Whether the point `a / q_fine` lies within `radius` of the lattice point
/// `b / q_coarse`.
///
/// The squared distance is `Σ (a_c q_coarse − b_c q_fine)² / (q_fine q_coarse)²`;
/// the numerator is an exact integer. Builder and oracle share this predicate
/// so boundary ties resolve identically.
pub fn within_neighborhood(a: LatticePoint, q_fine: u64, b: LatticePoint, q_coarse: u64, radius: f64) -> bool {
    let (qf, qc) = (q_fine as i128, q_coarse as i128);
    let num: i128 = (0..3)
        .map(|c| {
            let diff = a[c] as i128 * qc - b[c] as i128 * qf;
            diff * diff
        })
        .sum();
    let scale = (q_fine as f64) * (q_coarse as f64);
    (num as f64) <= radius * radius * scale * scale
}

/// Position `a / q` of a lattice point.
pub fn lattice_point_position<T: Real>(a: LatticePoint, q: u64) -> Vec3<T> {
    let qq = T::of(q as f64);
    Vec3::new(
        T::of(a[0] as f64) / qq,
        T::of(a[1] as f64) / qq,
        T::of(a[2] as f64) / qq,
    )
}

/// Nearest point of `{0, …, q_coarse}³ / q_coarse` to `a / q_fine`,
/// coordinatewise (the lattice box is a product set).
fn nearest_coarse(a: LatticePoint, q_fine: u64, q_coarse: u64) -> LatticePoint {
    let (qf, qc) = (q_fine as i128, q_coarse as i128);
    a.map(|ac| {
        // round(ac * qc / qf), halves rounded up; either neighbor of a tie is
        // equally close.
        let b = (2 * ac as i128 * qc + qf).div_euclid(2 * qf);
        b.clamp(0, qc) as i64
    })
}

/// Lattice points of stage `k` lying in every coarser neighborhood, in
/// lexicographic order.
fn survivors_at(spec: &FractalSpec, k: usize) -> Vec<LatticePoint> {
    let q = spec.q(k);
    let n = q as i64;
    let mut out = Vec::new();
    for x in 0..=n {
        for y in 0..=n {
            for z in 0..=n {
                let a = [x, y, z];
                let keep = (1..k).all(|i| {
                    let qi = spec.q(i);
                    within_neighborhood(a, q, nearest_coarse(a, q, qi), qi, spec.radius(i))
                });
                if keep {
                    out.push(a);
                }
            }
        }
    }
    out
}

/// Finest-stage measure plus the lattice centers it was built from.
#[derive(Clone, Debug)]
pub struct FractalMeasure<T> {
    pub measure: DiscreteMeasure<T>,
    /// Surviving finest-stage lattice points, lexicographic.
    pub centers: Vec<LatticePoint>,
    /// Finest-stage `q`.
    pub q: u64,
    /// Finest-stage neighborhood radius.
    pub radius: f64,
}

/// Realizes stage `spec.stage` of the construction.
///
/// With `fill = 0` the measure is one equal atom per surviving finest-stage
/// lattice center. With `fill > 0` it is `fill` equal atoms drawn uniformly
/// from the union of the surviving finest-stage balls intersected with all
/// coarser neighborhoods (uniform on the union: points covered by `m` balls
/// are kept with probability `1/m`).
pub fn build_fractal_measure<T: Real>(spec: &FractalSpec) -> Result<FractalMeasure<T>> {
    spec.validate()?;
    let mut centers = Vec::new();
    for k in 1..=spec.stage {
        centers = survivors_at(spec, k);
        if centers.is_empty() {
            return Err(Error::EmptyFractalStage { stage: k });
        }
    }
    let k = spec.stage;
    let q = spec.q(k);
    let radius = spec.radius(k);

    let mut meta = MeasureMeta::new("fractal")
        .param("d", spec.d)
        .param("s", spec.s)
        .param("q_sequence", spec.q_sequence[..k].to_vec())
        .param("stage", k)
        .param("fill", spec.fill)
        .param("seed", spec.seed)
        .param("neighborhood", "euclidean-ball")
        .param("centers", centers.len());

    let points: Vec<Vec3<T>> = if spec.fill == 0 {
        meta = meta.with_resolution(1.0 / q as f64);
        centers.iter().map(|&a| lattice_point_position(a, q)).collect()
    } else {
        let pts = fill_neighborhoods(spec, &centers)?;
        let mean_spacing = (pts.len() as f64).powf(-1.0 / 3.0) * radius;
        meta = meta.with_resolution(mean_spacing);
        pts.into_iter().map(|p| p.cast()).collect()
    };
    let weights = vec![T::one(); points.len()];
    let measure = DiscreteMeasure::normalized(points, weights, meta)?;
    Ok(FractalMeasure {
        measure,
        centers,
        q,
        radius,
    })
}

/// Number of finest-stage balls (around surviving centers) containing `p`.
fn cover_count(p: Vec3<f64>, centers: &std::collections::HashSet<LatticePoint>, q: u64, radius: f64) -> usize {
    let qf = q as f64;
    let reach = (radius * qf).ceil() as i64 + 1;
    let base = [p.x, p.y, p.z].map(|c| (c * qf).round() as i64);
    let r2 = radius * radius;
    let mut count = 0;
    for dx in -reach..=reach {
        for dy in -reach..=reach {
            for dz in -reach..=reach {
                let a = [base[0] + dx, base[1] + dy, base[2] + dz];
                if centers.contains(&a) && p.dist_sq(lattice_point_position(a, q)) <= r2 {
                    count += 1;
                }
            }
        }
    }
    count
}

fn in_coarse_neighborhoods(spec: &FractalSpec, p: Vec3<f64>) -> bool {
    (1..spec.stage).all(|i| {
        let qi = spec.q(i);
        let qf = qi as f64;
        let b = [p.x, p.y, p.z].map(|c| (c * qf).round().clamp(0.0, qf) as i64);
        p.dist_sq(lattice_point_position(b, qi)) <= spec.radius(i) * spec.radius(i)
    })
}

fn fill_neighborhoods(spec: &FractalSpec, centers: &[LatticePoint]) -> Result<Vec<Vec3<f64>>> {
    let q = spec.q(spec.stage);
    let radius = spec.radius(spec.stage);
    let set: std::collections::HashSet<LatticePoint> = centers.iter().copied().collect();
    let mut rng = RngState::new(spec.seed);
    let mut out = Vec::with_capacity(spec.fill);
    let max_attempts = spec.fill.saturating_mul(10_000).max(1_000_000);
    let mut attempts = 0usize;
    while out.len() < spec.fill {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::EmptyFractalStage { stage: spec.stage });
        }
        let c = centers[rng.below(centers.len() as u64) as usize];
        let center = lattice_point_position::<f64>(c, q);
        let offset = loop {
            let v = Vec3::new(
                2.0 * rng.uniform() - 1.0,
                2.0 * rng.uniform() - 1.0,
                2.0 * rng.uniform() - 1.0,
            );
            if v.norm_sq() <= 1.0 {
                break v.scale(radius);
            }
        };
        let p = center + offset;
        let m = cover_count(p, &set, q, radius).max(1);
        if m > 1 && rng.uniform() * m as f64 >= 1.0 {
            continue;
        }
        if in_coarse_neighborhoods(spec, p) {
            out.push(p);
        }
    }
    Ok(out)
}

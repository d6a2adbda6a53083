//! Weighted point clouds approximating the measures under study, and the
//! builders that produce them.

mod builders;
mod density;
mod fractal;
pub mod io;
mod profile;

pub use builders::{build_atomic_measure, build_graph_measure, build_sphere_measure, fibonacci_sphere, w11_norm_estimate};
pub use density::{density_apply, DensityFamily};
pub use fractal::{
    build_fractal_measure, canonical_q_sequence, lattice_point_position, within_neighborhood,
    FractalMeasure, FractalSpec, LatticePoint,
};
pub use profile::{ProfileKind, SurfaceProfile};
pub use io::{load_measure, save_measure, MeasureSidecar};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Rotation, Vec3};
use crate::scalar::{compensated_sum, Real};

/// Provenance attached to every measure.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasureMeta {
    /// Builder that produced the measure (`graph`, `sphere`, `fractal`, ...).
    pub builder: String,
    /// Builder parameters, as given.
    pub params: serde_json::Map<String, serde_json::Value>,
    /// Characteristic mesh spacing, when the measure discretizes a continuum.
    pub resolution: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MeasureMeta {
    pub fn new(builder: &str) -> Self {
        Self {
            builder: builder.to_string(),
            ..Default::default()
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn with_resolution(mut self, h: f64) -> Self {
        self.resolution = Some(h);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }
}

/// Finite weighted point cloud `μ = Σ w_j δ_{p_j}`, optionally carrying a
/// density `f` sampled at the points (the `f` of `f dμ`).
#[derive(Clone, Debug)]
pub struct DiscreteMeasure<T> {
    points: Vec<Vec3<T>>,
    weights: Vec<T>,
    mass: T,
    meta: MeasureMeta,
    density: Option<Vec<T>>,
}

impl<T: Real> DiscreteMeasure<T> {
    /// Takes weights as given; `mass` is their compensated sum.
    pub fn new(points: Vec<Vec3<T>>, weights: Vec<T>, meta: MeasureMeta) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("measure needs at least one point".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("point {i} is not finite")));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= T::zero())) {
            return Err(Error::InvalidArgument(format!(
                "weight {i} is negative or not finite"
            )));
        }
        let mass = compensated_sum(weights.iter().copied());
        Ok(Self {
            points,
            weights,
            mass,
            meta,
            density: None,
        })
    }

    /// Rescales the weights to total mass one.
    pub fn normalized(points: Vec<Vec3<T>>, weights: Vec<T>, meta: MeasureMeta) -> Result<Self> {
        let total = compensated_sum(weights.iter().copied());
        if !(total > T::zero()) {
            return Err(Error::ZeroMass);
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self::new(points, weights, meta)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn meta(&self) -> &MeasureMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut MeasureMeta {
        &mut self.meta
    }

    /// Attached density values, one per point.
    pub fn density(&self) -> Option<&[T]> {
        self.density.as_deref()
    }

    /// Density value at point `j`; an absent density reads as `f ≡ 1`.
    #[inline]
    pub fn density_at(&self, j: usize) -> T {
        self.density.as_ref().map_or(T::one(), |d| d[j])
    }

    pub(crate) fn set_density(&mut self, values: Vec<T>) {
        debug_assert_eq!(values.len(), self.points.len());
        self.density = Some(values);
    }

    /// `‖f‖²_{L²(μ)} = Σ w_j |f(p_j)|²`.
    pub fn density_l2_sq(&self) -> T {
        compensated_sum(
            self.weights
                .iter()
                .enumerate()
                .map(|(j, &w)| {
                    let f = self.density_at(j);
                    w * f * f
                }),
        )
    }

    /// `Σ w_j |f(p_j)|`, the bound on every extension value.
    pub fn density_l1(&self) -> T {
        compensated_sum(
            self.weights
                .iter()
                .enumerate()
                .map(|(j, &w)| w * self.density_at(j).abs()),
        )
    }

    /// Pushforward under one rotation; density and meta travel along.
    pub fn rotated(&self, r: &Rotation<T>) -> Self {
        let m = r.matrix();
        Self {
            points: self
                .points
                .iter()
                .map(|&p| crate::geometry::apply_matrix(&m, p))
                .collect(),
            weights: self.weights.clone(),
            mass: self.mass,
            meta: self.meta.clone(),
            density: self.density.clone(),
        }
    }

    pub fn centroid(&self) -> Vec3<T> {
        let mut c = [T::zero(); 3];
        for (p, &w) in self.points.iter().zip(&self.weights) {
            c[0] += w * p.x;
            c[1] += w * p.y;
            c[2] += w * p.z;
        }
        Vec3::new(c[0] / self.mass, c[1] / self.mass, c[2] / self.mass)
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec3<T>, Vec3<T>) {
        let mut lo = self.points[0];
        let mut hi = self.points[0];
        for p in &self.points[1..] {
            lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
        (lo, hi)
    }

    /// Diagonal of the bounding box; an upper bound on the support diameter.
    pub fn diameter_bound(&self) -> T {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn cast<U: Real>(&self) -> DiscreteMeasure<U> {
        DiscreteMeasure {
            points: self.points.iter().map(|p| p.cast()).collect(),
            weights: self.weights.iter().map(|w| U::of(w.to_f64_lossy())).collect(),
            mass: U::of(self.mass.to_f64_lossy()),
            meta: self.meta.clone(),
            density: self
                .density
                .as_ref()
                .map(|d| d.iter().map(|v| U::of(v.to_f64_lossy())).collect()),
        }
    }
}

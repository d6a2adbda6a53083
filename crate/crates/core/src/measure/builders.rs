use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::{CompensatedSum, Real};

use super::{DiscreteMeasure, MeasureMeta, SurfaceProfile};

/// Midpoint nodes of the `n × n` grid over `[-r, r]²` that fall inside the
/// closed disk of radius `r`, row-major in `(y1, y2)`.
///
/// Nodes sit at half-cell offsets, so for even `n` none of them is the
/// origin.
pub(crate) fn disk_nodes<T: Real>(radius: T, n: usize) -> (Vec<[T; 2]>, T) {
    let h = T::of(2.0) * radius / T::of_usize(n);
    let half = T::of(0.5);
    let r2 = radius * radius;
    let coord = |k: usize| -radius + (T::of_usize(k) + half) * h;
    let mut nodes = Vec::with_capacity(n * n);
    for a in 0..n {
        let y1 = coord(a);
        for b in 0..n {
            let y2 = coord(b);
            if y1 * y1 + y2 * y2 <= r2 {
                nodes.push([y1, y2]);
            }
        }
    }
    (nodes, h)
}

/// Measure on the graph `{(y, G(y)) : |y| ≤ radius}`.
///
/// Nodes are the midpoints of an `n × n` grid over the profile's disk. Each
/// node carries the base-plane area of its cell, then weights are normalized
/// to total mass one, so the measure is the pushforward of normalized planar
/// Lebesgue measure on the disk.
pub fn build_graph_measure<T: Real>(profile: &SurfaceProfile<T>, n: usize) -> Result<DiscreteMeasure<T>> {
    if n < 8 {
        return Err(Error::InvalidArgument(format!(
            "graph measure needs n >= 8, got {n}"
        )));
    }
    let (nodes, h) = disk_nodes(profile.radius(), n);
    let mut points = Vec::with_capacity(nodes.len());
    for [y1, y2] in nodes {
        let z = profile.evaluate(y1, y2);
        if !z.is_finite() {
            return Err(Error::NonFiniteProfile {
                profile: profile.name().to_string(),
                y1: y1.to_f64_lossy(),
                y2: y2.to_f64_lossy(),
            });
        }
        points.push(Vec3::new(y1, y2, z));
    }
    let weights = vec![h * h; points.len()];
    let meta = MeasureMeta::new("graph")
        .param("profile", profile.name())
        .param("n", n)
        .param("radius", profile.radius().to_f64_lossy())
        .with_resolution(h.to_f64_lossy())
        .note("weights: base-plane cell area, normalized to mass 1");
    DiscreteMeasure::normalized(points, weights, meta)
}

/// Midpoint-rule estimate of `∫_{|y| ≤ radius} |∇G(y)| dy` on an `n × n`
/// grid. Half-cell offsets keep the nodes off an isolated singularity at
/// the origin when `n` is even.
pub fn w11_norm_estimate<T: Real>(profile: &SurfaceProfile<T>, n: usize) -> Result<T> {
    if n < 32 {
        return Err(Error::InvalidArgument(format!(
            "gradient integral needs n >= 32, got {n}"
        )));
    }
    let (nodes, h) = disk_nodes(profile.radius(), n);
    let mut acc = CompensatedSum::new();
    for [y1, y2] in nodes {
        let g = profile
            .gradient(y1, y2)
            .filter(|g| g[0].is_finite() && g[1].is_finite())
            .ok_or_else(|| Error::NonFiniteGradient {
                profile: profile.name().to_string(),
                y1: y1.to_f64_lossy(),
                y2: y2.to_f64_lossy(),
            })?;
        acc.add(g[0].hypot(g[1]));
    }
    Ok(acc.value() * h * h)
}

/// `n` near-equal-area points on the unit sphere (Fibonacci lattice),
/// weights `1/n`.
///
/// Point `i` has height `z = 1 - 2(i + 1/2)/n` and azimuth
/// `π(1 + √5)(i + 1/2)`.
pub fn build_sphere_measure<T: Real>(n: usize) -> Result<DiscreteMeasure<T>> {
    if n < 12 {
        return Err(Error::InvalidArgument(format!(
            "sphere measure needs n >= 12, got {n}"
        )));
    }
    let points = fibonacci_sphere::<T>(n);
    let weights = vec![T::one() / T::of_usize(n); n];
    let spacing = (4.0 * std::f64::consts::PI / n as f64).sqrt();
    let meta = MeasureMeta::new("sphere")
        .param("n", n)
        .with_resolution(spacing);
    DiscreteMeasure::new(points, weights, meta)
}

/// `n` near-uniform unit vectors on the golden-angle spiral.
pub fn fibonacci_sphere<T: Real>(n: usize) -> Vec<Vec3<T>> {
    let nn = T::of_usize(n);
    let two = T::of(2.0);
    let half = T::of(0.5);
    let turn = T::PI() * (T::one() + T::of(5.0).sqrt());
    (0..n)
        .map(|i| {
            let u = T::of_usize(i) + half;
            let z = T::one() - two * u / nn;
            let rho = (T::one() - z * z).max(T::zero()).sqrt();
            let (s, c) = (turn * u).sin_cos();
            Vec3::new(rho * c, rho * s, z)
        })
        .collect()
}

/// Exactly the given atoms, normalized to mass one.
pub fn build_atomic_measure<T: Real>(atoms: &[(Vec3<T>, T)]) -> Result<DiscreteMeasure<T>> {
    if atoms.is_empty() {
        return Err(Error::InvalidArgument("no atoms given".into()));
    }
    if let Some(i) = atoms.iter().position(|(_, w)| !(*w >= T::zero() && w.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "atom {i} has a negative or non-finite weight"
        )));
    }
    let points = atoms.iter().map(|(p, _)| *p).collect();
    let weights = atoms.iter().map(|(_, w)| *w).collect();
    let meta = MeasureMeta::new("atoms").param("count", atoms.len());
    DiscreteMeasure::normalized(points, weights, meta)
}

//! Weighted annulus pair measure
//! `A(t, ε) = μ×μ{(u, v) : t ≤ |u − v| ≤ t(1 + ε)}` over a cell-list index.
//!
//! Ordered pairs are counted (the product-measure convention), the diagonal
//! drops out because `t > 0`, and membership is decided on squared
//! distances: `t² ≤ |u − v|² ≤ (t(1 + ε))²`. The indexed and brute-force
//! paths share that predicate.
//!
//! Summation order is fixed: occupied cells in lexicographic order, for each
//! cell the stencil offsets in lexicographic order, and every
//! `(cell, offset)` block is folded into a compensated accumulator. Parallel
//! runs split the cell list into fixed chunks and merge chunk totals in
//! order, so results do not depend on the thread count.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::measure::DiscreteMeasure;
use crate::scalar::{CompensatedSum, Real};

/// `(t, ε)`: inner radius and relative width of the shell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusQuery<T> {
    pub t: T,
    pub eps: T,
}

impl<T: Real> AnnulusQuery<T> {
    pub fn new(t: T, eps: T) -> Result<Self> {
        if !(t > T::zero() && t.is_finite()) || !(eps > T::zero() && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "annulus query needs t > 0 and eps > 0, got t = {t}, eps = {eps}"
            )));
        }
        Ok(Self { t, eps })
    }

    pub fn outer(&self) -> T {
        self.t * (T::one() + self.eps)
    }

    /// Squared inner and outer radii.
    #[inline]
    pub fn bounds_sq(&self) -> (T, T) {
        let o = self.outer();
        (self.t * self.t, o * o)
    }
}

#[inline(always)]
pub(crate) fn in_shell<T: Real>(d2: T, lo2: T, hi2: T) -> bool {
    (d2 >= lo2) & (d2 <= hi2)
}

/// Uniform grid of cubic cells of side `h`; every point sits in exactly one
/// cell. Points are stored cell by cell (structure of arrays) with their
/// original indices.
#[derive(Clone, Debug)]
pub struct CellIndex<T> {
    h: T,
    origin: Vec3<T>,
    keys: Vec<[i64; 3]>,
    ranges: Vec<(usize, usize)>,
    lookup: HashMap<[i64; 3], usize>,
    xs: Vec<T>,
    ys: Vec<T>,
    zs: Vec<T>,
    ws: Vec<T>,
    ids: Vec<usize>,
}

/// Builds a cell index of side `h` covering the bounding box of `m`.
pub fn build_spatial_index<T: Real>(m: &DiscreteMeasure<T>, h: T) -> Result<CellIndex<T>> {
    if !(h > T::zero() && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "cell size must be positive, got {h}"
        )));
    }
    // Half a cell below the bounding box, so lattice-aligned clouds with
    // spacing h sit at cell centers instead of on cell faces.
    let (lo, _) = m.bounding_box();
    let half = h / T::of(2.0);
    let origin = Vec3::new(lo.x - half, lo.y - half, lo.z - half);
    let key_of = |p: Vec3<T>| -> [i64; 3] {
        [
            ((p.x - origin.x) / h).floor().to_i64().unwrap_or(i64::MAX),
            ((p.y - origin.y) / h).floor().to_i64().unwrap_or(i64::MAX),
            ((p.z - origin.z) / h).floor().to_i64().unwrap_or(i64::MAX),
        ]
    };
    #[allow(unused_mut)]
    let mut order: Vec<(usize, [i64; 3])> = m
        .points()
        .iter()
        .enumerate()
        .map(|(i, &p)| (i, key_of(p)))
        .collect();
    #[cfg(feature = "fault-injection")]
    if order.len() > 1 {
        // Drop the last point: every query touching it now disagrees with the
        // brute-force oracle.
        order.pop();
    }
    order.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));

    let n = order.len();
    let mut idx = CellIndex {
        h,
        origin,
        keys: Vec::new(),
        ranges: Vec::new(),
        lookup: HashMap::new(),
        xs: Vec::with_capacity(n),
        ys: Vec::with_capacity(n),
        zs: Vec::with_capacity(n),
        ws: Vec::with_capacity(n),
        ids: Vec::with_capacity(n),
    };
    let pts = m.points();
    let wts = m.weights();
    for (slot, &(i, key)) in order.iter().enumerate() {
        if idx.keys.last() != Some(&key) {
            if let Some(r) = idx.ranges.last_mut() {
                r.1 = slot;
            }
            idx.lookup.insert(key, idx.keys.len());
            idx.keys.push(key);
            idx.ranges.push((slot, n));
        }
        idx.xs.push(pts[i].x);
        idx.ys.push(pts[i].y);
        idx.zs.push(pts[i].z);
        idx.ws.push(wts[i]);
        idx.ids.push(i);
    }
    Ok(idx)
}

impl<T: Real> CellIndex<T> {
    pub fn cell_size(&self) -> T {
        self.h
    }

    pub fn occupied_cells(&self) -> usize {
        self.keys.len()
    }

    pub fn indexed_points(&self) -> usize {
        self.ids.len()
    }

    /// Number of points in each occupied cell, in cell order.
    pub fn cell_occupancy(&self) -> Vec<usize> {
        self.ranges.iter().map(|r| r.1 - r.0).collect()
    }

    fn key_of(&self, p: Vec3<T>) -> [i64; 3] {
        let o = self.origin;
        let h = self.h;
        [
            ((p.x - o.x) / h).floor().to_i64().unwrap_or(i64::MAX),
            ((p.y - o.y) / h).floor().to_i64().unwrap_or(i64::MAX),
            ((p.z - o.z) / h).floor().to_i64().unwrap_or(i64::MAX),
        ]
    }

    /// Original indices of all points within distance `r` of `p` (closed
    /// ball), ascending.
    pub fn ball_neighbors(&self, p: Vec3<T>, r: T) -> Vec<usize> {
        let reach = (r / self.h).ceil().to_i64().unwrap_or(0) + 1;
        let base = self.key_of(p);
        let r2 = r * r;
        let mut out = Vec::new();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    let key = [base[0] + dx, base[1] + dy, base[2] + dz];
                    if let Some(&c) = self.lookup.get(&key) {
                        let (s, e) = self.ranges[c];
                        for k in s..e {
                            let q = Vec3::new(self.xs[k], self.ys[k], self.zs[k]);
                            if q.dist_sq(p) <= r2 {
                                out.push(self.ids[k]);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Distance from point `i` (original index) to its nearest other point,
    /// by expanding rings of cells.
    fn nearest_neighbor_distance(&self, p: Vec3<T>, self_id: usize) -> Option<T> {
        let base = self.key_of(p);
        let mut best = T::infinity();
        let max_ring = 1 << 20;
        let mut ring: i64 = 0;
        while ring < max_ring {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        let key = [base[0] + dx, base[1] + dy, base[2] + dz];
                        if let Some(&c) = self.lookup.get(&key) {
                            let (s, e) = self.ranges[c];
                            for k in s..e {
                                if self.ids[k] == self_id {
                                    continue;
                                }
                                let q = Vec3::new(self.xs[k], self.ys[k], self.zs[k]);
                                best = best.min(q.dist_sq(p));
                            }
                        }
                    }
                }
            }
            // Points in ring r+1 are at least r·h away.
            let floor = T::of(ring as f64) * self.h;
            if best.is_finite() && floor * floor >= best {
                return Some(best.sqrt());
            }
            ring += 1;
        }
        best.is_finite().then(|| best.sqrt())
    }
}

/// Whether cells at integer offset `o` can hold a pair at distance in
/// `[t, t(1+ε)]`.
fn offset_admissible<T: Real>(h: T, lo2: T, hi2: T, o: [i64; 3]) -> bool {
    let (mut dmin2, mut dmax2) = (T::zero(), T::zero());
    for c in o {
        let a = T::of(c.unsigned_abs() as f64);
        let lo = (a - T::one()).max(T::zero()) * h;
        let hi = (a + T::one()) * h;
        dmin2 += lo * lo;
        dmax2 += hi * hi;
    }
    dmin2 <= hi2 && dmax2 >= lo2
}

#[inline]
fn lex_positive(o: [i64; 3]) -> bool {
    o[0] > 0 || (o[0] == 0 && (o[1] > 0 || (o[1] == 0 && o[2] > 0)))
}

/// Admissible offsets in the lexicographically positive half, in
/// lexicographic order.
fn half_stencil<T: Real>(h: T, q: &AnnulusQuery<T>) -> Vec<[i64; 3]> {
    let (lo2, hi2) = q.bounds_sq();
    let reach = (q.outer() / h).ceil().to_i64().unwrap_or(0) + 1;
    let mut out = Vec::new();
    for dx in 0..=reach {
        for dy in -reach..=reach {
            for dz in -reach..=reach {
                let o = [dx, dy, dz];
                if lex_positive(o) && offset_admissible(h, lo2, hi2, o) {
                    out.push(o);
                }
            }
        }
    }
    out
}

/// Stencil size above which scanning the occupied-cell list directly is
/// cheaper than probing every offset.
fn stencil_too_large<T: Real>(h: T, q: &AnnulusQuery<T>, occupied: usize) -> bool {
    let reach = (q.outer() / h).ceil().to_f64_lossy() + 1.0;
    let offsets = (2.0 * reach + 1.0).powi(3) / 2.0;
    offsets > 4.0 * occupied as f64
}

/// `Σ_j w_j [p_j in shell around (x, y, z)]` over one cell slice, with four
/// independent partial sums so the loop vectorizes.
#[inline]
#[allow(clippy::too_many_arguments)]
fn shell_row_sum<T: Real>(xi: T, yi: T, zi: T, xs: &[T], ys: &[T], zs: &[T], ws: &[T], lo2: T, hi2: T) -> T {
    let mut acc = [T::zero(); 4];
    let n = xs.len();
    let full = n - n % 4;
    let mut j = 0;
    while j < full {
        for l in 0..4 {
            let dx = xi - xs[j + l];
            let dy = yi - ys[j + l];
            let dz = zi - zs[j + l];
            let d2 = dx * dx + dy * dy + dz * dz;
            acc[l] += ws[j + l].masked(in_shell(d2, lo2, hi2));
        }
        j += 4;
    }
    for k in full..n {
        let dx = xi - xs[k];
        let dy = yi - ys[k];
        let dz = zi - zs[k];
        let d2 = dx * dx + dy * dy + dz * dz;
        acc[0] += ws[k].masked(in_shell(d2, lo2, hi2));
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

const CELL_CHUNK: usize = 64;

/// `Σ_{i ∈ A} w_i Σ_{j ∈ B} w_j [|p_i − p_j| in shell]`, with `j > i`
/// when `A = B`.
#[inline]
fn block_sum<T: Real>(idx: &CellIndex<T>, a: usize, b: usize, lo2: T, hi2: T) -> T {
    let (sa, ea) = idx.ranges[a];
    let (sb, eb) = idx.ranges[b];
    let mut block = T::zero();
    for i in sa..ea {
        let start = if a == b { i + 1 } else { sb };
        let row = shell_row_sum(
            idx.xs[i],
            idx.ys[i],
            idx.zs[i],
            &idx.xs[start..eb],
            &idx.ys[start..eb],
            &idx.zs[start..eb],
            &idx.ws[start..eb],
            lo2,
            hi2,
        );
        block += idx.ws[i] * row;
    }
    block
}

/// `A(t, ε)` for the measure indexed by `idx`.
///
/// Unordered cell pairs are visited once and doubled. Neighbor cells come
/// from the offset stencil, or, when the stencil outnumbers the occupied
/// cells, from a scan of the (sorted) occupied-cell list.
pub fn annulus_measure<T: Real>(m: &DiscreteMeasure<T>, q: &AnnulusQuery<T>, idx: &CellIndex<T>) -> T {
    debug_assert!(cfg!(feature = "fault-injection") || idx.indexed_points() == m.len());
    let (lo2, hi2) = q.bounds_sq();
    let h = idx.h;
    let same_cell = offset_admissible(h, lo2, hi2, [0, 0, 0]);
    let scan_cells = stencil_too_large(h, q, idx.keys.len());
    let stencil = if scan_cells { Vec::new() } else { half_stencil(h, q) };
    let two = T::of(2.0);

    let chunk_total = |chunk: &[usize]| -> CompensatedSum<T> {
        let mut acc = CompensatedSum::new();
        for &a in chunk {
            let key = idx.keys[a];
            if same_cell {
                acc.add(two * block_sum(idx, a, a, lo2, hi2));
            }
            if scan_cells {
                // Keys are sorted, so later cells are exactly the
                // lexicographically positive offsets.
                for b in (a + 1)..idx.keys.len() {
                    let kb = idx.keys[b];
                    let o = [kb[0] - key[0], kb[1] - key[1], kb[2] - key[2]];
                    if offset_admissible(h, lo2, hi2, o) {
                        acc.add(two * block_sum(idx, a, b, lo2, hi2));
                    }
                }
            } else {
                for o in &stencil {
                    let nk = [key[0] + o[0], key[1] + o[1], key[2] + o[2]];
                    if let Some(&b) = idx.lookup.get(&nk) {
                        acc.add(two * block_sum(idx, a, b, lo2, hi2));
                    }
                }
            }
        }
        acc
    };

    let cells: Vec<usize> = (0..idx.keys.len()).collect();
    let partials: Vec<CompensatedSum<T>> = cells.par_chunks(CELL_CHUNK).map(chunk_total).collect();
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// Cell size used by the convenience entry points: `t(1 + ε)/16`.
///
/// Cells that small let the stencil skip most pairs far from the shell;
/// the occupied-cell scan keeps sparse clouds cheap.
pub fn default_cell_size<T: Real>(q: &AnnulusQuery<T>) -> T {
    q.outer() / T::of(16.0)
}

/// Builds the default index for `q` and evaluates `A(t, ε)`.
pub fn annulus_measure_auto<T: Real>(m: &DiscreteMeasure<T>, q: &AnnulusQuery<T>) -> Result<T> {
    let idx = build_spatial_index(m, default_cell_size(q))?;
    Ok(annulus_measure(m, q, &idx))
}

/// Result of scanning `A(t, ε)/ε` over a grid of radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupRatio {
    pub eps: f64,
    pub t_values: Vec<f64>,
    pub ratios: Vec<f64>,
    pub sup: f64,
    pub argmax_t: f64,
}

/// `max_{t ∈ t_grid} A(t, ε)/ε`.
///
/// Each radius gets its own index at the default cell size.
pub fn sup_annulus_ratio<T: Real>(m: &DiscreteMeasure<T>, t_grid: &[T], eps: T) -> Result<SupRatio> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty t grid".into()));
    }
    let mut ratios = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let q = AnnulusQuery::new(t, eps)?;
        ratios.push((annulus_measure_auto(m, &q)? / eps).to_f64_lossy());
    }
    let (k, sup) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best });
    Ok(SupRatio {
        eps: eps.to_f64_lossy(),
        t_values: t_grid.iter().map(|t| t.to_f64_lossy()).collect(),
        ratios,
        sup,
        argmax_t: t_grid[k].to_f64_lossy(),
    })
}

/// `count` equally spaced radii on `[t_min, t_max]`.
pub fn linear_t_grid(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![t_min],
        _ => (0..count)
            .map(|k| t_min + (t_max - t_min) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// `2^{-lo}, 2^{-lo-1}, …, 2^{-hi}`.
pub fn dyadic_eps(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(-k)).collect()
}

/// Least-squares fit of `log A = slope · log ε + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub eps_values: Vec<f64>,
    pub a_values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

/// Fits a power law to `(ε, A)` pairs.
pub fn fit_power_law(eps_values: &[f64], a_values: &[f64]) -> Result<ScalingFit> {
    if eps_values.len() != a_values.len() || eps_values.len() < 2 {
        return Err(Error::InvalidArgument(
            "power-law fit needs at least two (eps, A) pairs".into(),
        ));
    }
    if eps_values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("eps values must be strictly decreasing".into()));
    }
    if let Some(k) = a_values.iter().position(|&a| !(a > 0.0)) {
        return Err(Error::EmptyAnnulus { eps: eps_values[k] });
    }
    let xs: Vec<f64> = eps_values.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = a_values.iter().map(|a| a.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ScalingFit {
        eps_values: eps_values.to_vec(),
        a_values: a_values.to_vec(),
        slope,
        intercept,
        residual,
    })
}

/// Slope of `log A(t, ε)` against `log ε` over `eps_list`.
///
/// A slope near one is the `A ≲ ε` behavior; a slope near zero means mass
/// sits on a sphere of radius `t` around some atom.
pub fn scaling_exponent<T: Real>(m: &DiscreteMeasure<T>, t: T, eps_list: &[T]) -> Result<ScalingFit> {
    if eps_list.is_empty() {
        return Err(Error::InvalidArgument("empty eps list".into()));
    }
    let eps_max = eps_list.iter().copied().fold(T::zero(), T::max);
    let idx = build_spatial_index(m, default_cell_size(&AnnulusQuery::new(t, eps_max)?))?;
    let mut a = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        a.push(annulus_measure(m, &AnnulusQuery::new(t, eps)?, &idx).to_f64_lossy());
    }
    let eps: Vec<f64> = eps_list.iter().map(|e| e.to_f64_lossy()).collect();
    fit_power_law(&eps, &a)
}

/// Median nearest-neighbor distance; zero for a single point.
pub fn median_nn_distance<T: Real>(m: &DiscreteMeasure<T>) -> Result<T> {
    if m.len() < 2 {
        return Ok(T::zero());
    }
    let (lo, hi) = m.bounding_box();
    let ext = (hi - lo).to_array().into_iter().fold(T::zero(), T::max);
    let per_axis = T::of((m.len() as f64).cbrt().ceil());
    let h = if ext > T::zero() { ext / per_axis } else { T::one() };
    let idx = build_spatial_index(m, h)?;
    let mut d: Vec<f64> = m
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, &p)| idx.nearest_neighbor_distance(p, i).map_or(0.0, |v| v.to_f64_lossy()))
        .collect();
    d.sort_by(f64::total_cmp);
    Ok(T::of(d[d.len() / 2]))
}

/// Discretization floor: shells thinner than `4 ×` the median
/// nearest-neighbor distance resolve the point lattice rather than the
/// measure. Atomic measures are their own object and have no floor.
pub fn discretization_floor<T: Real>(m: &DiscreteMeasure<T>) -> Result<T> {
    if m.meta().builder == "atoms" {
        return Ok(T::zero());
    }
    Ok(T::of(4.0) * median_nn_distance(m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_atomic_measure, build_sphere_measure, MeasureMeta};
    use crate::rng::RngState;

    fn random_cloud(n: usize, seed: u64) -> DiscreteMeasure<f64> {
        let mut rng = RngState::new(seed);
        let pts = (0..n)
            .map(|_| Vec3::new(rng.uniform(), rng.uniform(), rng.uniform()).scale(2.0))
            .collect();
        let w = (0..n).map(|_| 0.5 + rng.uniform()).collect();
        DiscreteMeasure::normalized(pts, w, MeasureMeta::new("random")).unwrap()
    }

    fn brute(m: &DiscreteMeasure<f64>, q: &AnnulusQuery<f64>) -> f64 {
        let (lo2, hi2) = q.bounds_sq();
        let p = m.points();
        let w = m.weights();
        let mut acc = CompensatedSum::new();
        for i in 0..p.len() {
            let mut row = 0.0;
            for j in 0..p.len() {
                if i != j && in_shell(p[i].dist_sq(p[j]), lo2, hi2) {
                    row += w[j];
                }
            }
            acc.add(w[i] * row);
        }
        acc.value()
    }

    #[test]
    fn single_point_single_cell() {
        let m = build_atomic_measure(&[(Vec3::new(0.3, 0.2, 0.1), 1.0)]).unwrap();
        let idx = build_spatial_index(&m, 0.1).unwrap();
        assert_eq!(idx.occupied_cells(), 1);
    }

    #[test]
    fn grid_points_one_per_cell() {
        let mut atoms = Vec::new();
        for a in 0..10 {
            for b in 0..10 {
                for c in 0..10 {
                    atoms.push((Vec3::new(a as f64 + 0.5, b as f64 + 0.5, c as f64 + 0.5).scale(0.1), 1.0));
                }
            }
        }
        let m = build_atomic_measure(&atoms).unwrap();
        let idx = build_spatial_index(&m, 0.1).unwrap();
        assert_eq!(idx.occupied_cells(), 1000);
        assert!(idx.cell_occupancy().iter().all(|&c| c == 1));
    }

    #[test]
    fn rejects_nonpositive_cell_size() {
        let m = random_cloud(10, 1);
        assert!(build_spatial_index(&m, 0.0).is_err());
        assert!(build_spatial_index(&m, -1.0).is_err());
    }

    #[test]
    fn ball_queries_match_brute_force() {
        let m = random_cloud(2000, 2);
        let idx = build_spatial_index(&m, 0.17).unwrap();
        let mut rng = RngState::new(3);
        for _ in 0..30 {
            let c = Vec3::new(rng.uniform(), rng.uniform(), rng.uniform()).scale(2.0);
            let r = 0.05 + 0.4 * rng.uniform();
            let expect: Vec<usize> = (0..m.len())
                .filter(|&j| m.points()[j].dist_sq(c) <= r * r)
                .collect();
            assert_eq!(idx.ball_neighbors(c, r), expect);
        }
    }

    #[test]
    fn two_atoms_hand_enumeration() {
        let m = build_atomic_measure(&[(Vec3::zero(), 1.0), (Vec3::e1(), 1.0)]).unwrap();
        let q = AnnulusQuery::new(0.9, 0.2).unwrap();
        assert_eq!(annulus_measure_auto(&m, &q).unwrap(), 0.5);
        let q = AnnulusQuery::new(2.0, 0.2).unwrap();
        assert_eq!(annulus_measure_auto(&m, &q).unwrap(), 0.0);
    }

    #[test]
    fn indexed_matches_brute_force_for_many_cell_sizes() {
        let m = random_cloud(600, 5);
        let mut rng = RngState::new(6);
        for _ in 0..20 {
            let q = AnnulusQuery::new(0.1 + 1.5 * rng.uniform(), 0.01 + 0.5 * rng.uniform()).unwrap();
            let expect = brute(&m, &q);
            for h in [0.05, 0.13, default_cell_size(&q), 1.0, 5.0] {
                let idx = build_spatial_index(&m, h).unwrap();
                let got = annulus_measure(&m, &q, &idx);
                assert!((got - expect).abs() <= 1e-12, "h={h}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn sphere_annulus_against_distance_law() {
        // ∫₁^{1.1} r/2 dr = (2ε + ε²)/4 at ε = 0.1.
        let m = build_sphere_measure::<f64>(4000).unwrap();
        let q = AnnulusQuery::new(1.0, 0.1).unwrap();
        let a = annulus_measure_auto(&m, &q).unwrap();
        let exact = 0.0525;
        assert!((a - exact).abs() < 0.05 * exact, "{a}");
    }

    #[test]
    fn monotone_in_eps_and_bounded() {
        let m = random_cloud(500, 8);
        let mut prev = 0.0;
        for k in 1..30 {
            let a = annulus_measure_auto(&m, &AnnulusQuery::new(0.7, 0.02 * k as f64).unwrap()).unwrap();
            assert!(a >= prev);
            assert!((0.0..=1.0).contains(&a));
            prev = a;
        }
    }

    #[test]
    fn adjacent_shells_add_up() {
        let m = random_cloud(800, 9);
        let (t, e1, e2) = (0.6, 0.05, 0.08);
        let inner = annulus_measure_auto(&m, &AnnulusQuery::new(t, e1).unwrap()).unwrap();
        let outer = annulus_measure_auto(&m, &AnnulusQuery::new(t * (1.0 + e1), e2).unwrap()).unwrap();
        let whole = annulus_measure_auto(
            &m,
            &AnnulusQuery::new(t, (1.0 + e1) * (1.0 + e2) - 1.0).unwrap(),
        )
        .unwrap();
        assert!((inner + outer - whole).abs() < 1e-12);
    }

    #[test]
    fn power_law_fit_exact() {
        let eps = dyadic_eps(4, 8);
        let a: Vec<f64> = eps.iter().map(|e| 0.37 * e).collect();
        let fit = fit_power_law(&eps, &a).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!((fit.intercept - 0.37f64.ln()).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn two_atoms_have_flat_scaling() {
        let m = build_atomic_measure(&[(Vec3::zero(), 1.0), (Vec3::e1(), 1.0)]).unwrap();
        let fit = scaling_exponent(&m, 1.0, &dyadic_eps(4, 8)).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn empty_annulus_is_reported() {
        let m = build_atomic_measure(&[(Vec3::zero(), 1.0), (Vec3::e1(), 1.0)]).unwrap();
        let r = scaling_exponent(&m, 1.5, &dyadic_eps(4, 6));
        assert!(matches!(r, Err(Error::EmptyAnnulus { eps }) if eps == 1.0 / 16.0));
    }

    #[test]
    fn fit_rejects_increasing_eps() {
        assert!(fit_power_law(&[0.1, 0.2], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sup_ratio_two_atoms() {
        let m = build_atomic_measure(&[(Vec3::zero(), 1.0), (Vec3::e1(), 1.0)]).unwrap();
        let eps = 2f64.powi(-6);
        let s = sup_annulus_ratio(&m, &[0.5, 0.75, 1.0, 1.25], eps).unwrap();
        assert_eq!(s.sup, 32.0);
        assert_eq!(s.argmax_t, 1.0);
        assert!(sup_annulus_ratio(&m, &[], eps).is_err());
    }

    #[test]
    fn sphere_sup_ratio_against_distance_law() {
        // A(t, ε)/ε = (min(t(1+ε), 2)² − t²)/(4ε) for the uniform sphere.
        let eps = 2f64.powi(-6);
        let grid = linear_t_grid(0.5, 2.0, 7);
        let exact: Vec<f64> = grid
            .iter()
            .map(|&t| ((t * (1.0 + eps)).min(2.0).powi(2) - (t * t).min(4.0)).max(0.0) / (4.0 * eps))
            .collect();
        let best = exact.iter().copied().fold(0.0, f64::max);
        assert!((best - 1.5432).abs() < 1e-4);
        let m = build_sphere_measure::<f64>(4000).unwrap();
        let s = sup_annulus_ratio(&m, &grid, eps).unwrap();
        assert_eq!(s.argmax_t, 1.75);
        assert!((s.sup - best).abs() < 0.05 * best, "{} vs {best}", s.sup);
    }

    #[test]
    fn median_nn_of_grid() {
        let mut atoms = Vec::new();
        for a in 0..6 {
            for b in 0..6 {
                atoms.push((Vec3::new(a as f64 * 0.25, b as f64 * 0.25, 0.0), 1.0));
            }
        }
        let m = build_atomic_measure(&atoms).unwrap();
        assert!((median_nn_distance(&m).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(discretization_floor(&m).unwrap(), 0.0);
    }

    #[test]
    fn single_precision_matches_double() {
        let m = random_cloud(400, 12);
        let m32 = m.cast::<f32>();
        let q = AnnulusQuery::new(0.8, 0.1).unwrap();
        let a64 = annulus_measure_auto(&m, &q).unwrap();
        let a32 = annulus_measure_auto(&m32, &AnnulusQuery::new(0.8f32, 0.1).unwrap()).unwrap();
        assert!((a64 - a32 as f64).abs() < 1e-3);
    }
}

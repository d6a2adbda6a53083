//! Mixed `L⁴(L²(SO(3)))` norm of the extension transform on a truncated
//! cube, the restriction ratio against `‖f‖_{L²(μ)}`, and discrete Riesz
//! energies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_haar_rotations, Rotation};
use crate::measure::DiscreteMeasure;
use crate::rng::RngState;
use crate::scalar::{CompensatedSum, Real};

/// Midpoint grid on `[−R, R]³` with `n` nodes per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "R")]
    pub r: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(r: f64, n: usize) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid half-width must be positive, got {r}")));
        }
        if n < 8 {
            return Err(Error::InvalidArgument(format!("grid needs at least 8 nodes per axis, got {n}")));
        }
        Ok(Self { r, n })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.r / self.n as f64
    }

    /// Cell volume `(2R/n)³`.
    pub fn weight(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Node coordinates along one axis: `−R + (k + ½)·2R/n`.
    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|k| -self.r + (k as f64 + 0.5) * h).collect()
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { r: 8.0, n: 48 }
    }
}

/// Per-node rotation average `(1/M) Σ_θ |f̂μ_θ(x)|²`, laid out `[a][b][c]`
/// with `c` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl NodeField {
    pub fn at(&self, a: usize, b: usize, c: usize) -> f64 {
        let n = self.grid.n;
        self.values[(a * n + b) * n + c]
    }

    /// `(Σ_x weight · S(x)²)^{1/4}`, summed node-major.
    pub fn l4_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|&v| v * v).collect::<CompensatedSum<f64>>().value();
        (self.grid.weight() * s).powf(0.25)
    }
}

/// Extension transform on every grid node for every rotation, reduced to the
/// rotation average of `|·|²`.
///
/// For one rotation the phase `x·θp_j` splits into three axis factors, so
/// `F(x_a, x_b, x_c) = Σ_j X_a[j] · (c_j Y_b[j] Z_c[j])` with per-axis phase
/// tables. For real densities `F(−x) = conj F(x)` and the grid is symmetric
/// under `k ↦ n−1−k`, so only slabs `c ≤ n−1−c` are evaluated and mirrored.
pub fn mixed_norm_field<T: Real>(m: &DiscreteMeasure<T>, grid: &GridSpec, thetas: &[Rotation<T>]) -> NodeField {
    let n = grid.n;
    let np = m.len();
    let axis = grid.axis();
    let coef: Vec<f64> = (0..np)
        .map(|j| m.weights()[j].to_f64_lossy() * m.density_at(j).to_f64_lossy())
        .collect();
    let half = n.div_ceil(2);
    let mut acc = vec![0.0f64; n * n * half];

    for th in thetas {
        let mat = th.matrix();
        let rotated: Vec<[f64; 3]> = m
            .points()
            .iter()
            .map(|p| {
                let q = crate::geometry::apply_matrix(&mat, *p);
                [q.x.to_f64_lossy(), q.y.to_f64_lossy(), q.z.to_f64_lossy()]
            })
            .collect();
        let table = |dim: usize| -> (Vec<f64>, Vec<f64>) {
            let mut re = vec![0.0; n * np];
            let mut im = vec![0.0; n * np];
            for (k, &xk) in axis.iter().enumerate() {
                for (j, q) in rotated.iter().enumerate() {
                    let (s, c) = (std::f64::consts::TAU * xk * q[dim]).sin_cos();
                    re[k * np + j] = c;
                    im[k * np + j] = -s;
                }
            }
            (re, im)
        };
        let (xr, xi) = table(0);
        let (yr, yi) = table(1);
        let (zr, zi) = table(2);

        // One work item per (c, b): builds T_j and sweeps all a.
        let rows: Vec<Vec<f64>> = (0..half * n)
            .into_par_iter()
            .map(|cb| {
                let (c, b) = (cb / n, cb % n);
                let mut tr = vec![0.0; np];
                let mut ti = vec![0.0; np];
                let (yr, yi) = (&yr[b * np..(b + 1) * np], &yi[b * np..(b + 1) * np]);
                let (zr, zi) = (&zr[c * np..(c + 1) * np], &zi[c * np..(c + 1) * np]);
                for j in 0..np {
                    let pr = yr[j] * zr[j] - yi[j] * zi[j];
                    let pi = yr[j] * zi[j] + yi[j] * zr[j];
                    tr[j] = coef[j] * pr;
                    ti[j] = coef[j] * pi;
                }
                (0..n)
                    .map(|a| {
                        let (fr, fi) = complex_dot(&xr[a * np..(a + 1) * np], &xi[a * np..(a + 1) * np], &tr, &ti);
                        fr * fr + fi * fi
                    })
                    .collect()
            })
            .collect();
        for (cb, row) in rows.iter().enumerate() {
            let (c, b) = (cb / n, cb % n);
            for (a, v) in row.iter().enumerate() {
                acc[(c * n + b) * n + a] += v;
            }
        }
    }

    let inv_m = 1.0 / thetas.len() as f64;
    let mut values = vec![0.0; n * n * n];
    for c in 0..half {
        for b in 0..n {
            for a in 0..n {
                let v = acc[(c * n + b) * n + a] * inv_m;
                values[(a * n + b) * n + c] = v;
                values[((n - 1 - a) * n + (n - 1 - b)) * n + (n - 1 - c)] = v;
            }
        }
    }
    NodeField { grid: *grid, values }
}

/// `Σ_j (xr + i·xi)_j (tr + i·ti)_j` with four independent lanes.
#[inline]
fn complex_dot(xr: &[f64], xi: &[f64], tr: &[f64], ti: &[f64]) -> (f64, f64) {
    let len = xr.len();
    let body = len - len % 4;
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let mut j = 0;
    while j < body {
        for l in 0..4 {
            let k = j + l;
            re[l] += xr[k] * tr[k] - xi[k] * ti[k];
            im[l] += xr[k] * ti[k] + xi[k] * tr[k];
        }
        j += 4;
    }
    for k in body..len {
        re[0] += xr[k] * tr[k] - xi[k] * ti[k];
        im[0] += xr[k] * ti[k] + xi[k] * tr[k];
    }
    ((re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3]))
}

fn check_rotations(count: usize) -> Result<()> {
    if count < 16 {
        return Err(Error::InvalidArgument(format!("need at least 16 rotations, got {count}")));
    }
    Ok(())
}

/// Left side of the main estimate on the truncated cube, with `rotations`
/// Haar samples drawn from `rng` and shared by every node.
pub fn mixed_norm_lhs<T: Real>(m: &DiscreteMeasure<T>, grid: &GridSpec, rotations: usize, rng: &mut RngState) -> Result<f64> {
    check_rotations(rotations)?;
    let thetas = sample_haar_rotations::<T>(rng, rotations);
    Ok(mixed_norm_field(m, grid, &thetas).l4_norm())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedNormReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub grid: GridSpec,
    pub rotations: usize,
    pub seed: u64,
}

/// `mixed_norm_lhs / ‖f‖_{L²(μ)}` with the rotations drawn from a fresh
/// stream seeded by `seed`.
pub fn restriction_ratio<T: Real>(m: &DiscreteMeasure<T>, grid: &GridSpec, rotations: usize, seed: u64) -> Result<MixedNormReport> {
    restriction_ratio_with_field(m, grid, rotations, seed).map(|(r, _)| r)
}

/// As [`restriction_ratio`], also returning the per-node field.
pub fn restriction_ratio_with_field<T: Real>(
    m: &DiscreteMeasure<T>,
    grid: &GridSpec,
    rotations: usize,
    seed: u64,
) -> Result<(MixedNormReport, NodeField)> {
    check_rotations(rotations)?;
    let rhs = m.density_l2_sq().to_f64_lossy().sqrt();
    if rhs == 0.0 {
        return Err(Error::ZeroDensityNorm);
    }
    let thetas = sample_haar_rotations::<T>(&mut RngState::new(seed), rotations);
    let field = mixed_norm_field(m, grid, &thetas);
    let lhs = field.l4_norm();
    Ok((
        MixedNormReport {
            lhs,
            rhs,
            ratio: lhs / rhs,
            grid: *grid,
            rotations,
            seed,
        },
        field,
    ))
}

/// Discrete Riesz energy `Σ_{i≠j} w_i w_j |p_i − p_j|^{−s}`.
pub fn riesz_energy<T: Real>(m: &DiscreteMeasure<T>, s_exp: f64) -> Result<f64> {
    if !(s_exp > 0.0 && s_exp.is_finite()) {
        return Err(Error::InvalidArgument(format!("energy exponent must be positive, got {s_exp}")));
    }
    let pts: Vec<[f64; 3]> = m.points().iter().map(|p| p.cast::<f64>().to_array()).collect();
    let ws: Vec<f64> = m.weights().iter().map(|w| w.to_f64_lossy()).collect();
    let half_s = -0.5 * s_exp;
    let rows: Vec<usize> = (0..pts.len()).collect();
    let partials: Vec<Result<CompensatedSum<f64>>> = rows
        .par_chunks(64)
        .map(|chunk| {
            let mut acc = CompensatedSum::new();
            for &i in chunk {
                let p = pts[i];
                let mut row = CompensatedSum::new();
                for j in (i + 1)..pts.len() {
                    let q = pts[j];
                    let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                    if d2 == 0.0 {
                        return Err(Error::CoincidentPoints { i, j });
                    }
                    row.add(ws[j] * d2.powf(half_s));
                }
                acc.add(2.0 * ws[i] * row.value());
            }
            Ok(acc)
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in partials {
        total.merge(&p?);
    }
    Ok(total.value())
}

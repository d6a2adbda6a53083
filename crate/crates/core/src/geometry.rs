//! Points in three dimensions, rotations as unit quaternions and Haar
//! sampling of SO(3).

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn e1() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn e2() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn e3() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist_sq(self, o: Self) -> T {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        let dz = self.z - o.z;
        dx * dx + dy * dy + dz * dz
    }

    #[inline]
    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > T::zero() && n.is_finite()).then(|| self.scale(n.recip()))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(
            U::of(self.x.to_f64_lossy()),
            U::of(self.y.to_f64_lossy()),
            U::of(self.z.to_f64_lossy()),
        )
    }
}

impl<T: Real> From<[T; 3]> for Vec3<T> {
    fn from(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

/// Element of SO(3) stored as a unit quaternion `(w, x, y, z)`.
///
/// `q` and `-q` describe the same rotation; no sign convention is imposed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation<T> {
    q: [T; 4],
}

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        Self {
            q: [T::one(), T::zero(), T::zero(), T::zero()],
        }
    }

    /// Normalizes an arbitrary non-zero 4-vector.
    pub fn from_quaternion(q: [T; 4]) -> Option<Self> {
        let n = q.iter().fold(T::zero(), |a, &c| a + c * c).sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return None;
        }
        Some(Self {
            q: q.map(|c| c / n),
        })
    }

    /// Rotation by `angle` radians about `axis` (right-hand rule).
    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Option<Self> {
        let a = axis.normalized()?;
        let half = angle / T::of(2.0);
        let (s, c) = half.sin_cos();
        Self::from_quaternion([c, a.x * s, a.y * s, a.z * s])
    }

    pub fn quaternion(&self) -> [T; 4] {
        self.q
    }

    pub fn inverse(&self) -> Self {
        let [w, x, y, z] = self.q;
        Self { q: [w, -x, -y, -z] }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let [a, b, c, d] = self.q;
        let [e, f, g, h] = other.q;
        let q = [
            a * e - b * f - c * g - d * h,
            a * f + b * e + c * h - d * g,
            a * g - b * h + c * e + d * f,
            a * h + b * g - c * f + d * e,
        ];
        // Renormalize so long products keep |q| = 1 to rounding.
        Self::from_quaternion(q).expect("product of unit quaternions is non-zero")
    }

    /// Row-major 3×3 matrix of the rotation.
    pub fn matrix(&self) -> [[T; 3]; 3] {
        let [w, x, y, z] = self.q;
        let two = T::of(2.0);
        let one = T::one();
        [
            [
                one - two * (y * y + z * z),
                two * (x * y - w * z),
                two * (x * z + w * y),
            ],
            [
                two * (x * y + w * z),
                one - two * (x * x + z * z),
                two * (y * z - w * x),
            ],
            [
                two * (x * z - w * y),
                two * (y * z + w * x),
                one - two * (x * x + y * y),
            ],
        ]
    }

    /// `θp`.
    #[inline]
    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        apply_matrix(&self.matrix(), p)
    }
}

#[inline]
pub fn apply_matrix<T: Real>(m: &[[T; 3]; 3], p: Vec3<T>) -> Vec3<T> {
    Vec3::new(
        m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
        m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
        m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
    )
}

/// `θp`; free-function form of [`Rotation::apply`].
pub fn apply_rotation<T: Real>(r: &Rotation<T>, p: Vec3<T>) -> Vec3<T> {
    r.apply(p)
}

/// Haar-distributed rotation: a 4-vector of independent standard normals,
/// normalized. The Gaussian is invariant under O(4), so the normalized
/// quaternion is uniform on S³ and its rotation is Haar on SO(3).
pub fn sample_haar_rotation<T: Real>(rng: &mut RngState) -> Rotation<T> {
    loop {
        let q = [rng.normal(), rng.normal(), rng.normal(), rng.normal()];
        let n2: f64 = q.iter().map(|c| c * c).sum();
        if n2 > 1e-300 {
            let n = n2.sqrt();
            let q = q.map(|c| T::of(c / n));
            if let Some(r) = Rotation::from_quaternion(q) {
                return r;
            }
        }
    }
}

/// `count` Haar rotations drawn in order from `rng`.
pub fn sample_haar_rotations<T: Real>(rng: &mut RngState, count: usize) -> Vec<Rotation<T>> {
    (0..count).map(|_| sample_haar_rotation(rng)).collect()
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and the uniform distribution on `[-1, 1]`.
pub fn ks_distance_uniform_pm1(samples: &mut [f64]) -> f64 {
    ks_distance(samples, |z| ((z + 1.0) / 2.0).clamp(0.0, 1.0))
}

/// KS distance between the empirical CDF of `samples` and `cdf`.
/// Sorts `samples` in place.
pub fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let f = cdf(z);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (hi - f).max(f - lo)
        })
        .fold(0.0, f64::max)
}

/// KS distance between the law of the z-coordinate of `θv` (θ Haar) and
/// Uniform[-1, 1], from `samples` draws.
///
/// If the pushforward of Haar measure under `θ ↦ θv` is the uniform measure
/// on S², then by Archimedes' hat-box theorem that z-coordinate is uniform
/// on `[-1, 1]`; small values certify that the rotation-fibre mass is
/// constant in the target direction.
pub fn pushforward_uniformity_stat<T: Real>(
    samples: usize,
    v: Vec3<T>,
    rng: &mut RngState,
) -> Result<f64> {
    pushforward_uniformity_stat_with(samples, v, || sample_haar_rotation(rng))
}

/// Same statistic with an arbitrary rotation source, so a broken sampler can
/// be shown to fail.
pub fn pushforward_uniformity_stat_with<T: Real>(
    samples: usize,
    v: Vec3<T>,
    mut sampler: impl FnMut() -> Rotation<T>,
) -> Result<f64> {
    if samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "pushforward statistic needs at least 100 samples, got {samples}"
        )));
    }
    let norm = v.norm().to_f64_lossy();
    if !((norm - 1.0).abs() <= 1e-9) {
        return Err(Error::NotUnit { norm });
    }
    let mut zs: Vec<f64> = (0..samples)
        .map(|_| sampler().apply(v).z.to_f64_lossy())
        .collect();
    Ok(ks_distance_uniform_pm1(&mut zs))
}

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scalar::Real;

/// The built-in graphing functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// `G ≡ 0`.
    Flat,
    /// `G = |y|²`.
    Paraboloid,
    /// `G = |y|`: Lipschitz, not differentiable at the origin.
    Cone,
    /// `G = |y|^{1/2}`: integrable gradient, unbounded near the origin.
    Sqrt,
    /// `G = exp(-1/|y|²)`, `G(0) = 0`: vanishes to infinite order at the origin.
    FlatBump,
    /// Upper cap of the sphere of radius 2, shifted so the rim of the unit
    /// disk sits at height 0.
    SphereCap,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 6] = [
        ProfileKind::Flat,
        ProfileKind::Paraboloid,
        ProfileKind::Cone,
        ProfileKind::Sqrt,
        ProfileKind::FlatBump,
        ProfileKind::SphereCap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Flat => "flat",
            ProfileKind::Paraboloid => "paraboloid",
            ProfileKind::Cone => "cone",
            ProfileKind::Sqrt => "sqrt",
            ProfileKind::FlatBump => "flat-bump",
            ProfileKind::SphereCap => "sphere-cap",
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProfileKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown profile `{s}` (expected one of flat, paraboloid, cone, sqrt, flat-bump, sphere-cap)"
                ))
            })
    }
}

const CAP_RADIUS: f64 = 2.0;

type EvalFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;
type GradFn<T> = Arc<dyn Fn(T, T) -> Option<[T; 2]> + Send + Sync>;

/// Graphing function `G` over the disk `|y| ≤ radius`, with pointwise
/// gradient access. `gradient` returns `None` at declared singular points.
#[derive(Clone)]
pub struct SurfaceProfile<T> {
    name: String,
    radius: T,
    eval: EvalFn<T>,
    grad: GradFn<T>,
    singular: Vec<[T; 2]>,
}

impl<T: Real> fmt::Debug for SurfaceProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurfaceProfile")
            .field("name", &self.name)
            .field("radius", &self.radius)
            .field("singular", &self.singular)
            .finish()
    }
}

impl<T: Real> SurfaceProfile<T> {
    /// Built-in profile on the unit disk.
    pub fn builtin(kind: ProfileKind) -> Self {
        Self::builtin_with_radius(kind, T::one())
    }

    pub fn builtin_with_radius(kind: ProfileKind, radius: T) -> Self {
        let origin = vec![[T::zero(), T::zero()]];
        let two = T::of(2.0);
        let (eval, grad, singular): (EvalFn<T>, GradFn<T>, Vec<[T; 2]>) = match kind {
            ProfileKind::Flat => (
                Arc::new(|_, _| T::zero()),
                Arc::new(|_, _| Some([T::zero(), T::zero()])),
                vec![],
            ),
            ProfileKind::Paraboloid => (
                Arc::new(|a: T, b: T| a * a + b * b),
                Arc::new(move |a: T, b: T| Some([two * a, two * b])),
                vec![],
            ),
            ProfileKind::Cone => (
                Arc::new(|a: T, b: T| a.hypot(b)),
                Arc::new(|a: T, b: T| {
                    let r = a.hypot(b);
                    (r > T::zero()).then(|| [a / r, b / r])
                }),
                origin,
            ),
            ProfileKind::Sqrt => (
                Arc::new(|a: T, b: T| a.hypot(b).sqrt()),
                Arc::new(move |a: T, b: T| {
                    let r = a.hypot(b);
                    // ∇|y|^{1/2} = y / (2 |y|^{3/2})
                    (r > T::zero()).then(|| {
                        let s = two * r * r.sqrt();
                        [a / s, b / s]
                    })
                }),
                origin,
            ),
            ProfileKind::FlatBump => (
                Arc::new(|a: T, b: T| {
                    let r2 = a * a + b * b;
                    if r2 > T::zero() {
                        (-r2.recip()).exp()
                    } else {
                        T::zero()
                    }
                }),
                Arc::new(move |a: T, b: T| {
                    let r2 = a * a + b * b;
                    if r2 > T::zero() {
                        let c = (-r2.recip()).exp() * two / (r2 * r2);
                        Some([c * a, c * b])
                    } else {
                        Some([T::zero(), T::zero()])
                    }
                }),
                vec![],
            ),
            ProfileKind::SphereCap => {
                let big = T::of(CAP_RADIUS);
                let rim = (big * big - radius * radius).sqrt();
                (
                    Arc::new(move |a: T, b: T| (big * big - a * a - b * b).sqrt() - rim),
                    Arc::new(move |a: T, b: T| {
                        let h = (big * big - a * a - b * b).sqrt();
                        (h > T::zero()).then(|| [-a / h, -b / h])
                    }),
                    vec![],
                )
            }
        };
        Self {
            name: kind.name().to_string(),
            radius,
            eval,
            grad,
            singular,
        }
    }

    /// Arbitrary profile; `gradient` may return `None` at singular points.
    pub fn custom(
        name: impl Into<String>,
        radius: T,
        evaluate: impl Fn(T, T) -> T + Send + Sync + 'static,
        gradient: impl Fn(T, T) -> Option<[T; 2]> + Send + Sync + 'static,
        singular: Vec<[T; 2]>,
    ) -> Self {
        Self {
            name: name.into(),
            radius,
            eval: Arc::new(evaluate),
            grad: Arc::new(gradient),
            singular,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn singular_points(&self) -> &[[T; 2]] {
        &self.singular
    }

    #[inline]
    pub fn evaluate(&self, y1: T, y2: T) -> T {
        (self.eval)(y1, y2)
    }

    #[inline]
    pub fn gradient(&self, y1: T, y2: T) -> Option<[T; 2]> {
        (self.grad)(y1, y2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(p: &SurfaceProfile<f64>, a: f64, b: f64) -> [f64; 2] {
        let h = 1e-6;
        [
            (p.evaluate(a + h, b) - p.evaluate(a - h, b)) / (2.0 * h),
            (p.evaluate(a, b + h) - p.evaluate(a, b - h)) / (2.0 * h),
        ]
    }

    #[test]
    fn gradients_match_finite_differences() {
        for kind in ProfileKind::ALL {
            let p = SurfaceProfile::<f64>::builtin(kind);
            for &(a, b) in &[(0.3, -0.2), (-0.55, 0.41), (0.05, 0.7)] {
                let g = p.gradient(a, b).unwrap();
                let fd = fd_gradient(&p, a, b);
                for k in 0..2 {
                    assert!((g[k] - fd[k]).abs() < 1e-6, "{kind} {a} {b}: {g:?} vs {fd:?}");
                }
            }
        }
    }

    #[test]
    fn singular_profiles_refuse_origin_gradient() {
        for kind in [ProfileKind::Cone, ProfileKind::Sqrt] {
            let p = SurfaceProfile::<f64>::builtin(kind);
            assert!(p.gradient(0.0, 0.0).is_none());
            assert_eq!(p.singular_points().len(), 1);
        }
        let bump = SurfaceProfile::<f64>::builtin(ProfileKind::FlatBump);
        assert_eq!(bump.evaluate(0.0, 0.0), 0.0);
        assert_eq!(bump.gradient(0.0, 0.0), Some([0.0, 0.0]));
    }

    #[test]
    fn sphere_cap_rim_at_zero() {
        let p = SurfaceProfile::<f64>::builtin(ProfileKind::SphereCap);
        assert!(p.evaluate(1.0, 0.0).abs() < 1e-15);
        assert!(p.evaluate(0.0, 0.0) > 0.0);
    }

    #[test]
    fn parse_names() {
        for kind in ProfileKind::ALL {
            assert_eq!(kind.name().parse::<ProfileKind>().unwrap(), kind);
        }
        assert!("wobbly".parse::<ProfileKind>().is_err());
    }
}

//! The acceptance suite as library code, shared by the `verify` command and
//! the test harness.
//!
//! Reports carry values and verdicts only (no timings), so two runs with the
//! same settings serialize to identical bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::annulus::{
    annulus_measure_auto, build_spatial_index, dyadic_eps, linear_t_grid, scaling_exponent,
    sup_annulus_ratio, AnnulusQuery,
};
use crate::error::Result;
use crate::geometry::{pushforward_uniformity_stat, Vec3};
use crate::measure::{
    build_atomic_measure, build_fractal_measure, build_graph_measure, build_sphere_measure, w11_norm_estimate,
    FractalSpec, ProfileKind, SurfaceProfile,
};
use crate::norms::{restriction_ratio, riesz_energy, GridSpec};
use crate::oracle::{brute_force_annulus, exhaustive_fractal_scan, quadrature_sphere_ft, OracleReport};
use crate::oscillatory::{averaged_convolution_value, mollified_identity_check, sphere_surface_ft, MollifierSpec};
use crate::rng::RngState;

/// Knobs of the suite. Defaults are the acceptance settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifySettings {
    pub seed: u64,
    /// Nodes per axis of the mixed-norm grid.
    pub grid_n: usize,
    pub rotations: usize,
    pub mc_samples: usize,
    /// Points spread over the surviving fractal neighborhoods.
    pub fractal_fill: usize,
    /// Run the suite a second time on a different thread count and compare.
    pub repeat: bool,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            seed: 20240611,
            grid_n: 48,
            rotations: 128,
            mc_samples: 200_000,
            fractal_fill: 4096,
            repeat: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub status: Status,
    pub summary: String,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<OracleReport>,
}

impl CriterionResult {
    fn new(id: u8, name: &str) -> Self {
        Self {
            id,
            name: name.to_string(),
            status: Status::Pass,
            summary: String::new(),
            metrics: BTreeMap::new(),
            checks: Vec::new(),
        }
    }

    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    fn check(&mut self, r: OracleReport) {
        self.checks.push(r);
    }

    /// Pass iff every check passes, unless already marked otherwise.
    fn finish(mut self, summary: String) -> Self {
        if self.status == Status::Pass && !self.checks.iter().all(|c| c.pass) {
            self.status = Status::Fail;
        }
        self.summary = summary;
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// One-line verdict, e.g. `[PASS] 4 annulus-scaling-lipschitz: ...`.
    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        };
        format!("[{tag}] {:>2} {}: {}", self.id, self.name, self.summary)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub version: String,
    pub settings: VerifySettings,
    pub criteria: Vec<CriterionResult>,
    pub all_pass: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn failed(&self) -> Vec<&CriterionResult> {
        self.criteria.iter().filter(|c| !c.passed()).collect()
    }
}

/// Criterion ids in suite order.
pub const CRITERIA: [u8; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

/// Runs one criterion. Id 11 runs the whole suite twice.
pub fn run_criterion(id: u8, s: &VerifySettings) -> Result<CriterionResult> {
    match id {
        1 => index_oracle_equivalence(s),
        2 => haar_uniformity(s),
        3 => stationary_phase(s),
        4 => annulus_scaling(4, "annulus-scaling-lipschitz", ProfileKind::Paraboloid),
        5 => annulus_scaling(5, "annulus-scaling-sobolev", ProfileKind::Sqrt),
        6 => counterexample(),
        7 => fractal_condition(s),
        8 => energy_dichotomy(s),
        9 => mollified_identity(s),
        10 => refinement_stability(s),
        11 => determinism(s),
        other => Err(crate::error::Error::InvalidArgument(format!("no criterion {other}"))),
    }
}

const NAMES: [&str; 11] = [
    "index-oracle-equivalence",
    "haar-uniformity",
    "stationary-phase-decay",
    "annulus-scaling-lipschitz",
    "annulus-scaling-sobolev",
    "counterexample-detection",
    "fractal-condition",
    "energy-dichotomy",
    "mollified-plancherel",
    "refinement-stability",
    "determinism",
];

/// Like [`run_criterion`], but a computation error becomes a failed result.
pub fn run_or_fail(id: u8, s: &VerifySettings) -> Result<CriterionResult> {
    if !CRITERIA.contains(&id) {
        return run_criterion(id, s);
    }
    Ok(run_criterion(id, s).unwrap_or_else(|e| {
        let mut c = CriterionResult::new(id, NAMES[id as usize - 1]);
        c.status = Status::Fail;
        c.summary = format!("error: {e}");
        c
    }))
}

/// Criteria 1 through 10, in order.
pub fn run_core(s: &VerifySettings) -> Result<Vec<CriterionResult>> {
    CRITERIA[..10].iter().map(|&id| run_or_fail(id, s)).collect()
}

/// The full suite.
pub fn run_verify(s: &VerifySettings) -> Result<VerifyReport> {
    run_verify_with(s, |_| {})
}

/// The full suite, calling `progress` after each criterion.
pub fn run_verify_with(s: &VerifySettings, mut progress: impl FnMut(&CriterionResult)) -> Result<VerifyReport> {
    let mut criteria = Vec::with_capacity(11);
    for &id in &CRITERIA[..10] {
        let c = run_or_fail(id, s)?;
        progress(&c);
        criteria.push(c);
    }
    if s.repeat {
        let c = determinism_against(s, &criteria)?;
        progress(&c);
        criteria.push(c);
    }
    let all_pass = criteria.iter().all(|c| c.passed());
    Ok(VerifyReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        settings: s.clone(),
        criteria,
        all_pass,
    })
}

fn stream(s: &VerifySettings, criterion: u64) -> RngState {
    RngState::new(s.seed).substream(criterion)
}

fn index_oracle_equivalence(s: &VerifySettings) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(1, "index-oracle-equivalence");
    let mut rng = stream(s, 1);
    let atoms: Vec<(Vec3<f64>, f64)> = (0..2000)
        .map(|_| {
            let p = Vec3::new(rng.uniform(), rng.uniform(), rng.uniform());
            (p, 0.5 + rng.uniform())
        })
        .collect();
    let m = build_atomic_measure(&atoms)?;
    let mut worst = 0.0f64;
    for k in 0..50 {
        let t = 0.02 + 0.98 * rng.uniform();
        let eps = 0.005 + 0.5 * rng.uniform();
        let q = AnnulusQuery::new(t, eps)?;
        let fast = annulus_measure_auto(&m, &q)?;
        let slow = brute_force_annulus(&m, &q)?;
        let r = OracleReport::absolute(format!("query-{k}"), fast, slow, 1e-12);
        worst = worst.max(r.abs_diff);
        if !r.pass || k == 0 {
            c.check(r);
        }
    }
    c.metric("max_abs_diff", worst);
    c.check(OracleReport::absolute("max-abs-diff", worst, 0.0, 1e-12));
    Ok(c.finish(format!("50 queries on 2000 points, max |diff| = {worst:.3e} (tol 1e-12)")))
}

fn haar_uniformity(s: &VerifySettings) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(2, "haar-uniformity");
    let samples = 20_000;
    let bound = 2.0 / (samples as f64).sqrt();
    let r3 = 1.0 / 3f64.sqrt();
    let mut rng = stream(s, 2);
    let mut parts = Vec::new();
    for (name, v) in [("e3", Vec3::e3()), ("diagonal", Vec3::new(r3, r3, r3))] {
        let ks = pushforward_uniformity_stat::<f64>(samples, v, &mut rng)?;
        c.metric(&format!("ks_{name}"), ks);
        c.check(OracleReport::absolute(format!("ks-{name}"), ks, 0.0, bound));
        parts.push(format!("{name} {ks:.4}"));
    }
    Ok(c.finish(format!("KS {} (bound {bound:.4})", parts.join(", "))))
}

fn stationary_phase(s: &VerifySettings) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(3, "stationary-phase-decay");
    let mut rng = stream(s, 3);
    let mut sup = 0.0f64;
    for k in 0..200 {
        let r = 5.0 * 10f64.powf(k as f64 / 199.0);
        let dir = random_direction(&mut rng);
        sup = sup.max(sphere_surface_ft(dir.scale(r)).abs() * r);
    }
    c.metric("sup_decay", sup);
    c.check(OracleReport::absolute("sup-decay-bound", sup.max(2.0), 2.0, 1e-9));
    let mut worst = 0.0f64;
    for k in 0..=50 {
        let xi = random_direction(&mut rng).scale(0.1 * k as f64);
        let q = quadrature_sphere_ft(xi, 10_000)?;
        worst = worst.max((q - sphere_surface_ft(xi)).abs());
    }
    c.metric("max_quadrature_diff", worst);
    c.check(OracleReport::absolute("quadrature-max-diff", worst, 0.0, 1e-3));
    Ok(c.finish(format!(
        "sup |σ̂|·|ξ| = {sup:.10} (≤ 2 + 1e-9), quadrature max diff {worst:.2e} (tol 1e-3)"
    )))
}

fn random_direction(rng: &mut RngState) -> Vec3<f64> {
    loop {
        let v = Vec3::new(rng.normal(), rng.normal(), rng.normal());
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

fn slope_window(c: &mut CriterionResult, name: &str, slope: f64) {
    let inside = (0.85..=1.15).contains(&slope);
    c.metric(&format!("{name}_slope"), slope);
    c.check(OracleReport {
        pass: inside,
        ..OracleReport::absolute(format!("{name}-slope"), slope, 1.0, 0.15)
    });
}

fn annulus_scaling(id: u8, name: &str, kind: ProfileKind) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(id, name);
    let profile = SurfaceProfile::<f64>::builtin(kind);
    let m = build_graph_measure(&profile, 300)?;
    let fit = scaling_exponent(&m, 1.0, &dyadic_eps(4, 8))?;
    slope_window(&mut c, kind.name(), fit.slope);
    let mut summary = format!("{} slope {:.4} in [0.85, 1.15]", kind.name(), fit.slope);
    if kind == ProfileKind::Sqrt {
        let w = w11_norm_estimate(&profile, 300)?;
        let exact = 2.0 * std::f64::consts::PI / 3.0;
        c.metric("w11_norm", w);
        c.check(OracleReport::relative("w11-norm", w, exact, 0.03));
        summary.push_str(&format!(", W¹₁ norm {w:.4} vs 2π/3 (3%)"));
    }
    Ok(c.finish(summary))
}

fn counterexample() -> Result<CriterionResult> {
    let mut c = CriterionResult::new(6, "counterexample-detection");
    let m = build_atomic_measure(&[(Vec3::zero(), 0.5), (Vec3::new(1.0, 0.0, 0.0), 0.5)])?;
    let fit = scaling_exponent(&m, 1.0, &dyadic_eps(4, 8))?;
    c.metric("slope", fit.slope);
    c.check(OracleReport {
        pass: fit.slope < 0.1,
        ..OracleReport::absolute("two-atom-slope", fit.slope, 0.0, 0.1)
    });
    let idx = build_spatial_index(&m, 0.25)?;
    let coarse = averaged_convolution_value(&m, 1.0, 1.0 / 16.0, &idx)?;
    let fine = averaged_convolution_value(&m, 1.0, 1.0 / 256.0, &idx)?;
    let growth = fine / coarse;
    c.metric("growth", growth);
    c.check(OracleReport {
        pass: growth >= 8.0,
        ..OracleReport::absolute("divergence-growth", growth, 16.0, 8.0)
    });
    Ok(c.finish(format!("slope {:.3e} (< 0.1), A/ε growth {growth:.2}× (≥ 8×)", fit.slope)))
}

fn fractal_condition(s: &VerifySettings) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(7, "fractal-condition");
    let spec = FractalSpec::new(2.0, 2).with_fill(s.fractal_fill, s.seed);
    let f = build_fractal_measure::<f64>(&spec)?;
    let grid = linear_t_grid(0.25, 1.5, 26);
    let mut sups = Vec::new();
    for (k, eps) in dyadic_eps(4, 7).into_iter().enumerate() {
        let r = sup_annulus_ratio(&f.measure, &grid, eps)?;
        c.metric(&format!("sup_eps_2^-{}", k + 4), r.sup);
        sups.push(r.sup);
    }
    let hi = sups.iter().copied().fold(0.0, f64::max);
    let lo = sups.iter().copied().fold(f64::INFINITY, f64::min);
    let factor = hi / lo;
    c.metric("variation_factor", factor);
    c.check(OracleReport {
        pass: factor < 4.0,
        ..OracleReport::absolute("sup-variation", factor, 1.0, 3.0)
    });
    let scan = exhaustive_fractal_scan(&FractalSpec::new(2.0, 2))?;
    let same = scan == f.centers;
    c.metric("centers", f.centers.len() as f64);
    c.check(OracleReport {
        pass: same,
        ..OracleReport::absolute("support-set", f.centers.len() as f64, scan.len() as f64, 0.0)
    });
    Ok(c.finish(format!(
        "sup A/ε varies by {factor:.3}× (< 4), support {} centers {} the exhaustive scan",
        f.centers.len(),
        if same { "equals" } else { "differs from" }
    )))
}

fn energy_dichotomy(s: &VerifySettings) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(8, "energy-dichotomy");
    let s1000 = build_sphere_measure::<f64>(1000)?;
    let s4000 = build_sphere_measure::<f64>(4000)?;
    let e15 = riesz_energy(&s4000, 1.5)?;
    c.metric("sphere_energy_1.5", e15);
    c.check(OracleReport::relative("sphere-energy-1.5", e15, 2f64.sqrt(), 0.03));

    let e2_small = riesz_energy(&s1000, 2.0)?;
    let e2_big = riesz_energy(&s4000, 2.0)?;
    let growth = e2_big / e2_small;
    c.metric("sphere_energy_2_n1000", e2_small);
    c.metric("sphere_energy_2_n4000", e2_big);
    c.check(OracleReport {
        pass: growth > 1.1,
        ..OracleReport::absolute("sphere-critical-growth", growth, 1.1, 0.0)
    });

    let mut growths = Vec::new();
    for dim in [1.5, 2.5] {
        let stage = |k| build_fractal_measure::<f64>(&FractalSpec::new(dim, k).with_fill(s.fractal_fill, s.seed));
        let g = riesz_energy(&stage(2)?.measure, 2.0)? / riesz_energy(&stage(1)?.measure, 2.0)?;
        c.metric(&format!("fractal_growth_s{dim}"), g);
        growths.push(g);
    }
    c.check(OracleReport {
        pass: growths[1] < growths[0],
        ..OracleReport::absolute("fractal-threshold", growths[1], growths[0], 0.0)
    });
    Ok(c.finish(format!(
        "sphere I_1.5 = {e15:.4} vs √2 (3%), I_2 growth {:.1}% (> 10%), fractal growth s=2.5 {:.3} vs s=1.5 {:.3}",
        (growth - 1.0) * 100.0,
        growths[1],
        growths[0]
    )))
}

fn mollified_identity(s: &VerifySettings) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(9, "mollified-plancherel");
    let m = build_sphere_measure::<f64>(2000)?;
    let spec = MollifierSpec::new(0.05, 100.0, s.mc_samples)?;
    let r = mollified_identity_check(&m, 1.0, &spec, &stream(s, 9))?;
    c.metric("physical", r.physical);
    c.metric("frequency", r.frequency);
    c.metric("stderr", r.stderr);
    c.check(OracleReport::relative("frequency-vs-physical", r.frequency, r.physical, 0.10));
    if r.inconclusive {
        c.status = Status::Inconclusive;
    }
    Ok(c.finish(format!(
        "physical {:.6}, frequency {:.6} ± {:.1e}, rel diff {:.2}% (tol 10%)",
        r.physical,
        r.frequency,
        r.stderr,
        r.rel_diff * 100.0
    )))
}

/// Graph resolutions (nodes per axis) standing in for `n = 400, 1600` points.
pub const GRAPH_REFINEMENTS: [usize; 2] = [20, 40];
pub const SPHERE_REFINEMENTS: [usize; 2] = [400, 1600];

fn refinement_stability(s: &VerifySettings) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(10, "refinement-stability");
    let grid = GridSpec::new(8.0, s.grid_n)?;
    let mut parts = Vec::new();
    let surfaces: [(&str, [usize; 2]); 2] = [("sphere", SPHERE_REFINEMENTS), ("flat-bump", GRAPH_REFINEMENTS)];
    for (name, sizes) in surfaces {
        let mut ratios = Vec::new();
        for n in sizes {
            let m = if name == "sphere" {
                build_sphere_measure::<f64>(n)?
            } else {
                build_graph_measure(&SurfaceProfile::builtin(ProfileKind::FlatBump), n)?
            };
            let r = restriction_ratio(&m, &grid, s.rotations, s.seed)?;
            c.metric(&format!("{name}_ratio_n{n}"), r.ratio);
            ratios.push(r.ratio);
        }
        let spread = ratios[0].max(ratios[1]) / ratios[0].min(ratios[1]);
        c.metric(&format!("{name}_spread"), spread);
        c.check(OracleReport {
            pass: spread <= 1.25,
            ..OracleReport::relative(format!("{name}-refinement"), ratios[1], ratios[0], 0.25)
        });
        parts.push(format!("{name} {:.4} → {:.4} ({:.1}%)", ratios[0], ratios[1], (spread - 1.0) * 100.0));
    }
    Ok(c.finish(format!("{} (within 25%)", parts.join(", "))))
}

fn determinism(s: &VerifySettings) -> Result<CriterionResult> {
    let first = run_core(s)?;
    determinism_against(s, &first)
}

/// Re-runs criteria 1 to 10 on a pool with a different thread count and
/// compares the serialized results byte for byte.
fn determinism_against(s: &VerifySettings, first: &[CriterionResult]) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(11, "determinism");
    let threads = if rayon::current_num_threads() == 1 { 2 } else { 1 };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::error::Error::InvalidArgument(e.to_string()))?;
    let second = pool.install(|| run_core(s))?;
    let a = serde_json::to_string(first)?;
    let b = serde_json::to_string(&second)?;
    let same = a == b;
    c.metric("bytes", a.len() as f64);
    if !same {
        c.status = Status::Fail;
    }
    Ok(c.finish(format!(
        "second run on {threads} thread(s): reports {}",
        if same { "bitwise identical" } else { "differ" }
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_criteria_pass() {
        let s = VerifySettings::default();
        for id in [2, 3, 6] {
            let c = run_criterion(id, &s).unwrap();
            assert!(c.passed(), "{}", c.line());
        }
    }

    #[test]
    fn unknown_criterion() {
        assert!(run_criterion(12, &VerifySettings::default()).is_err());
    }

    #[test]
    fn lines_name_the_criterion() {
        let c = run_criterion(6, &VerifySettings::default()).unwrap();
        assert!(c.line().starts_with("[PASS]  6 counterexample-detection:"));
    }
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use avgrestrict::annulus::{
    annulus_measure, build_spatial_index, default_cell_size, discretization_floor, fit_power_law, linear_t_grid,
    AnnulusQuery, ScalingFit,
};
use avgrestrict::measure::io::format_f64;
use avgrestrict::measure::{
    build_atomic_measure, build_fractal_measure, build_graph_measure, build_sphere_measure, save_measure,
    FractalSpec, SurfaceProfile,
};
use avgrestrict::norms::{restriction_ratio_with_field, riesz_energy};
use avgrestrict::oscillatory::{mollified_identity_check, MollifierSpec};
use avgrestrict::verify::{run_verify_with, VerifySettings};
use avgrestrict::{DiscreteMeasure, RngState, Vec3};

use crate::config::{ExperimentConfig, MeasureConfig};
use crate::manifest::RunManifest;

/// How a command that ran to completion ended.
#[derive(Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    CriterionFailure,
}

pub fn build_measure(cfg: &ExperimentConfig) -> Result<DiscreteMeasure> {
    let seed = cfg.seed()?;
    let mc = cfg.measure()?;
    let m = match mc {
        MeasureConfig::Graph { profile, n } => build_graph_measure(&SurfaceProfile::builtin(*profile), *n)
            .with_context(|| format!("building graph measure (profile {profile}, n {n})"))?,
        MeasureConfig::Sphere { n } => {
            build_sphere_measure(*n).with_context(|| format!("building sphere measure (n {n})"))?
        }
        MeasureConfig::Fractal { .. } => {
            let spec = mc.fractal_spec(seed).expect("fractal config");
            build_fractal_measure::<f64>(&spec)
                .with_context(|| format!("building fractal measure (s {}, stage {})", spec.s, spec.stage))?
                .measure
        }
        MeasureConfig::Atoms { atoms } => {
            let atoms: Vec<(Vec3, f64)> = atoms.iter().map(|a| (Vec3::new(a[0], a[1], a[2]), a[3])).collect();
            build_atomic_measure(&atoms).context("building atomic measure")?
        }
    };
    Ok(m)
}

fn prepare(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

pub fn measure(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut manifest = RunManifest::start("measure", cfg);
    let m = build_measure(cfg)?;
    let dir = prepare(cfg)?;
    let (csv_path, json_path) = save_measure(&m, &dir, "measure")?;
    println!("{} points, mass {}", m.len(), format_f64(m.mass()));
    manifest.output(csv_path);
    manifest.output(json_path);
    manifest.finish(&dir)?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct AnnulusFit {
    t: f64,
    /// Rows kept in the fit.
    used: usize,
    /// Rows flagged below the discretization floor.
    excluded: usize,
    fit: Option<ScalingFit>,
}

#[derive(Serialize)]
struct AnnulusSummary {
    floor: f64,
    fits: Vec<AnnulusFit>,
}

pub fn annulus(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut manifest = RunManifest::start("annulus", cfg);
    let ac = cfg.annulus.as_ref().context("config has no `annulus` section")?;
    if ac.eps.is_empty() {
        bail!("`annulus.eps` is empty");
    }
    let m = build_measure(cfg)?;
    let dir = prepare(cfg)?;
    let mut eps = ac.eps.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    let floor = discretization_floor(&m)?;

    let csv_path = dir.join("annulus.csv");
    let mut w = csv_writer(&csv_path)?;
    w.write_record(["t", "eps", "A", "A_over_eps", "below_floor"])?;
    let mut fits = Vec::new();
    for t in linear_t_grid(ac.t_min, ac.t_max, ac.t_count) {
        let idx = build_spatial_index(&m, default_cell_size(&AnnulusQuery::new(t, eps[0])?))?;
        let (mut fe, mut fa) = (Vec::new(), Vec::new());
        let mut excluded = 0;
        for &e in &eps {
            let a = annulus_measure(&m, &AnnulusQuery::new(t, e)?, &idx);
            let below = t * e < floor;
            if below {
                excluded += 1;
                eprintln!(
                    "warning: t = {t}, eps = {e}: shell width {} is below the discretization floor {floor}; row excluded from the fit",
                    t * e
                );
            } else if a > 0.0 {
                fe.push(e);
                fa.push(a);
            }
            w.write_record([
                format_f64(t),
                format_f64(e),
                format_f64(a),
                format_f64(a / e),
                below.to_string(),
            ])?;
        }
        let fit = if fe.len() >= 2 { Some(fit_power_law(&fe, &fa)?) } else { None };
        match &fit {
            Some(f) => println!("t = {t}: slope {:.6} over {} eps values", f.slope, fe.len()),
            None => println!("t = {t}: too few usable rows for a fit"),
        }
        fits.push(AnnulusFit {
            t,
            used: fe.len(),
            excluded,
            fit,
        });
    }
    w.flush()?;
    drop(w);
    let fit_path = dir.join("scaling_fit.json");
    write_json(&fit_path, &AnnulusSummary { floor, fits })?;
    manifest.output(csv_path);
    manifest.output(fit_path);
    manifest.finish(&dir)?;
    Ok(Outcome::Success)
}

pub fn mixed_norm(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut manifest = RunManifest::start("mixed-norm", cfg);
    let seed = cfg.seed()?;
    let m = cfg.density().apply(&build_measure(cfg)?, seed)?;
    let grid = cfg.grid()?;
    let dir = prepare(cfg)?;
    let (report, field) = restriction_ratio_with_field(&m, &grid, cfg.rotations(), seed)?;
    let report_path = dir.join("mixed_norm.json");
    write_json(&report_path, &report)?;

    let nodes_path = dir.join("mixed_norm_nodes.csv");
    let mut w = csv_writer(&nodes_path)?;
    w.write_record(["x", "y", "z", "inner_l2"])?;
    let axis = grid.axis();
    for (a, &x) in axis.iter().enumerate() {
        for (b, &y) in axis.iter().enumerate() {
            for (c, &z) in axis.iter().enumerate() {
                w.write_record([
                    format_f64(x),
                    format_f64(y),
                    format_f64(z),
                    format_f64(field.at(a, b, c).sqrt()),
                ])?;
            }
        }
    }
    w.flush()?;
    println!(
        "lhs {:.6}, rhs {:.6}, ratio {:.6} (R {}, n {}, M {})",
        report.lhs,
        report.rhs,
        report.ratio,
        grid.r,
        grid.n,
        report.rotations
    );
    manifest.output(report_path);
    manifest.output(nodes_path);
    manifest.finish(&dir)?;
    Ok(Outcome::Success)
}

/// Stage-`k` over stage-`k−1` energy ratio at exponent 2 for a fractal spec.
fn fractal_growth(spec: &FractalSpec, s_exp: f64) -> Result<f64> {
    let fine = build_fractal_measure::<f64>(spec)?;
    let coarse = build_fractal_measure::<f64>(&FractalSpec {
        stage: spec.stage - 1,
        ..spec.clone()
    })?;
    Ok(riesz_energy(&fine.measure, s_exp)? / riesz_energy(&coarse.measure, s_exp)?)
}

pub fn energy(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut manifest = RunManifest::start("energy", cfg);
    let seed = cfg.seed()?;
    let m = build_measure(cfg)?;
    let dir = prepare(cfg)?;
    let exps = cfg.energy.clone().unwrap_or_default().s_exp;
    let path = dir.join("energy.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["s_exp", "energy"])?;
    for &s in &exps {
        let e = riesz_energy(&m, s)?;
        println!("s_exp {s}: energy {e:.6}");
        w.write_record([format_f64(s), format_f64(e)])?;
    }
    w.flush()?;
    manifest.output(path);

    // Dimension threshold: stage growth at the critical exponent for the
    // configured dimension and for one dimension on each side of it.
    if let Some(spec) = cfg.measure()?.fractal_spec(seed) {
        if spec.stage >= 2 {
            let path = dir.join("energy_threshold.csv");
            let mut w = csv_writer(&path)?;
            w.write_record(["s", "stage", "growth_at_s_exp_2"])?;
            let mut dims = vec![1.5, spec.s, 2.5];
            dims.sort_by(f64::total_cmp);
            dims.dedup();
            for dim in dims {
                let g = fractal_growth(&FractalSpec { s: dim, ..spec.clone() }, 2.0)?;
                println!("fractal s {dim}: stage {} → {} energy growth {g:.6}", spec.stage - 1, spec.stage);
                w.write_record([format_f64(dim), spec.stage.to_string(), format_f64(g)])?;
            }
            w.flush()?;
            manifest.output(path);
        }
    }
    manifest.finish(&dir)?;
    Ok(Outcome::Success)
}

pub fn identity_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut manifest = RunManifest::start("identity-check", cfg);
    let seed = cfg.seed()?;
    let m = build_measure(cfg)?;
    let ic = cfg.identity.clone().unwrap_or_default();
    let spec = MollifierSpec::new(ic.delta, ic.freq_cutoff, ic.mc_samples)?;
    let dir = prepare(cfg)?;
    let r = mollified_identity_check(&m, ic.t, &spec, &RngState::new(seed))?;
    let path = dir.join("identity.json");
    write_json(&path, &r)?;
    println!(
        "physical {:.6}, frequency {:.6} ± {:.2e}, rel diff {:.3}%{}",
        r.physical,
        r.frequency,
        r.stderr,
        r.rel_diff * 100.0,
        if r.inconclusive { " (inconclusive)" } else { "" }
    );
    manifest.output(path);
    manifest.finish(&dir)?;
    Ok(Outcome::Success)
}

pub fn verify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut manifest = RunManifest::start("verify", cfg);
    let seed = cfg.seed()?;
    let settings = VerifySettings {
        seed,
        ..cfg.verify.clone().unwrap_or_default()
    };
    let dir = prepare(cfg)?;
    let report = run_verify_with(&settings, |c| {
        println!("{}", c.line());
        let _ = std::io::stdout().flush();
    })?;
    let path = dir.join("verify.json");
    std::fs::write(&path, report.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
    manifest.output(path);
    manifest.finish(&dir)?;
    let failed = report.failed();
    if failed.is_empty() {
        println!("all {} criteria pass", report.criteria.len());
        Ok(Outcome::Success)
    } else {
        let names: Vec<String> = failed.iter().map(|c| format!("{} {}", c.id, c.name)).collect();
        println!("failed: {}", names.join(", "));
        Ok(Outcome::CriterionFailure)
    }
}

//! Experiment configuration: one JSON file, overridable from the command
//! line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use avgrestrict::measure::{DensityFamily, FractalSpec, ProfileKind};
use avgrestrict::norms::GridSpec;
use avgrestrict::verify::VerifySettings;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureConfig {
    Graph {
        profile: ProfileKind,
        n: usize,
    },
    Fractal {
        #[serde(default = "default_d")]
        d: usize,
        s: f64,
        stage: usize,
        #[serde(default)]
        q_sequence: Option<Vec<u64>>,
        #[serde(default)]
        fill: usize,
    },
    Sphere {
        n: usize,
    },
    /// Rows of `[x, y, z, w]`.
    Atoms {
        atoms: Vec<[f64; 4]>,
    },
}

fn default_d() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusConfig {
    pub t_min: f64,
    pub t_max: f64,
    #[serde(default = "one")]
    pub t_count: usize,
    pub eps: Vec<f64>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub s_exp: Vec<f64>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            s_exp: vec![0.5, 1.0, 1.5, 2.0, 2.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityConfig {
    pub t: f64,
    pub delta: f64,
    pub freq_cutoff: f64,
    pub mc_samples: usize,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            t: 1.0,
            delta: 0.05,
            freq_cutoff: 100.0,
            mc_samples: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub measure: Option<MeasureConfig>,
    #[serde(default)]
    pub annulus: Option<AnnulusConfig>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub rotations: Option<usize>,
    #[serde(default)]
    pub density: Option<DensityFamily>,
    #[serde(default)]
    pub energy: Option<EnergyConfig>,
    #[serde(default)]
    pub identity: Option<IdentityConfig>,
    #[serde(default)]
    pub verify: Option<VerifySettings>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn empty() -> Self {
        serde_json::from_str("{}").expect("empty config parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn seed(&self) -> Result<u64> {
        match self.seed {
            Some(s) => Ok(s),
            None => bail!("no seed given: set `seed` in the config or pass --seed"),
        }
    }

    pub fn measure(&self) -> Result<&MeasureConfig> {
        self.measure.as_ref().context("config has no `measure` section")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let g = self.grid.unwrap_or_default();
        Ok(GridSpec::new(g.r, g.n)?)
    }

    pub fn rotations(&self) -> usize {
        self.rotations.unwrap_or(128)
    }

    pub fn density(&self) -> DensityFamily {
        self.density.unwrap_or(DensityFamily::One)
    }

    /// Canonical JSON (object keys sorted) of the effective config.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("value serializes")
    }

    /// SHA-256 of [`Self::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl MeasureConfig {
    pub fn fractal_spec(&self, seed: u64) -> Option<FractalSpec> {
        match self {
            MeasureConfig::Fractal {
                d,
                s,
                stage,
                q_sequence,
                fill,
            } => {
                let mut spec = FractalSpec::new(*s, *stage).with_fill(*fill, seed);
                spec.d = *d;
                if let Some(q) = q_sequence {
                    spec.q_sequence = q.clone();
                }
                Some(spec)
            }
            _ => None,
        }
    }
}

//! TOML experiment configuration.
//!
//! Every table rejects unknown keys. The only thing the environment may
//! change is the output directory (`SKEWPROD_OUT_DIR`).

use std::path::PathBuf;

use serde::Deserialize;
use skewprod::fiber::{default_pld_knots, ModelSpec};
use skewprod::itinerary::Direction;

pub const OUT_DIR_ENV: &str = "SKEWPROD_OUT_DIR";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub mme: Option<MmeConfig>,
    pub lyapunov: Option<LyapunovConfig>,
    pub periodic_scan: Option<PeriodicScanConfig>,
    pub fundamental_domains: Option<FundamentalDomainsConfig>,
    pub boundary_approx: Option<BoundaryApproxConfig>,
    pub connect: Option<ConnectConfig>,
    pub density: Option<DensityConfig>,
    pub reduce_word: Option<ReduceWordConfig>,
    pub walk_stats: Option<WalkStatsConfig>,
    pub occupation: Option<OccupationConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Pld { knots: Option<Vec<[f64; 2]>>, free_knot: Option<usize> },
    Mobius { beta: f64 },
    Arctan,
    Quartic { a: f64 },
    Glued { knots: Option<Vec<[f64; 2]>>, free_knot: Option<usize>, width: f64 },
}

impl ModelConfig {
    pub fn spec(&self) -> ModelSpec {
        match self {
            ModelConfig::Pld { knots, free_knot } => ModelSpec::Pld {
                knots: knots.clone().unwrap_or_else(default_pld_knots),
                free_knot: free_knot.unwrap_or(2),
            },
            ModelConfig::Mobius { beta } => ModelSpec::Mobius { beta: *beta },
            ModelConfig::Arctan => ModelSpec::Arctan,
            ModelConfig::Quartic { a } => ModelSpec::Quartic { a: *a },
            ModelConfig::Glued { knots, free_knot, width } => ModelSpec::Glued {
                knots: knots.clone().unwrap_or_else(default_pld_knots),
                free_knot: free_knot.unwrap_or(2),
                width: *width,
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_out_dir() }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("skewprod-out")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmeConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for MmeConfig {
    fn default() -> Self {
        MmeConfig { samples: 1_000_000, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum EngineChoice {
    Direct,
    Lifted,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    /// base word, repeated periodically
    pub word: String,
    pub x0: f64,
    pub n: usize,
    #[serde(default = "default_engine")]
    pub engine: EngineChoice,
}

fn default_engine() -> EngineChoice {
    EngineChoice::Direct
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicScanConfig {
    pub max_period: usize,
    /// boundary width for the exponent-vs-middle-mass check
    pub delta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FundamentalDomainsConfig {
    pub eps0: f64,
    pub n_hint: Option<usize>,
    /// points near which periodic orbits are synthesised
    #[serde(default)]
    pub points: Vec<f64>,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_radius() -> f64 {
    0.05
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryApproxConfig {
    pub delta: f64,
    pub n: Vec<usize>,
    pub target: String,
    #[serde(default = "default_true")]
    pub periodic: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKind {
    Expanding,
    Contracting,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectConfig {
    pub from: f64,
    pub to: f64,
    pub class: OrbitKind,
    #[serde(default = "default_radius")]
    pub radius: f64,
    pub budget: usize,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
}

fn default_eps0() -> f64 {
    0.01
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub x0: f64,
    pub mesh: f64,
    pub budget: usize,
    #[serde(default = "default_direction")]
    pub direction: Direction,
}

fn default_direction() -> Direction {
    Direction::Forward
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceWordConfig {
    #[serde(default)]
    pub words: Vec<String>,
    pub x: f64,
    pub random_words: usize,
    pub max_len: usize,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkStatsConfig {
    pub seed: u64,
    pub gaps: usize,
    pub vplus_steps: usize,
    pub ks_samples: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub count: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupationConfig {
    pub eps: f64,
    pub n: Vec<usize>,
    pub seeds: u64,
    pub x0: Option<f64>,
    pub particles: Option<ParticleConfig>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Output directory, with the environment override applied.
    pub fn out_dir(&self) -> PathBuf {
        std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| self.output.dir.clone())
    }
}

/// The table a command needs, or an error naming it.
pub fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, String> {
    s.as_ref().ok_or_else(|| format!("missing table [{name}] in config"))
}

/// Range checks shared by several commands.
pub fn check_open_unit(name: &str, v: f64, hi: f64) -> Result<(), String> {
    if v > 0.0 && v < hi {
        Ok(())
    } else {
        Err(format!("`{name}` = {v} must lie in (0, {hi})"))
    }
}

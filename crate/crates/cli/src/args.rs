//! Argument surface of the `nbv` binary.
//!
//! Every subcommand shares the same configuration flags; per key, a command
//! line flag beats the `--config` file, which beats the built-in default.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nbv_core::{EnergyWeights, IncidenceSign, Metric, RunConfig};

use crate::commands::Failure;

#[derive(Parser)]
#[command(name = "nbv", version, about = "Next-best-view planning over posed images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Score per-facet photo-consistency and write a heat-mapped mesh
    Pri(PriArgs),
    /// Rank candidate poses by how much a new view would help
    Nbv(NbvArgs),
    /// Run the synthetic closed loop and write its dataset
    Simulate(SimulateArgs),
    /// Render one view of a synthetic scene
    Render(RenderArgs),
}

#[derive(Args)]
pub struct PriArgs {
    /// Mesh to score: ASCII OBJ, or ASCII / binary little-endian PLY
    #[arg(long, value_name = "PATH")]
    pub mesh: PathBuf,
    /// Camera file (JSON)
    #[arg(long, value_name = "PATH")]
    pub cameras: PathBuf,
    /// Directory holding one image per camera id: <id>.pgm, .png, or .ppm
    #[arg(long, value_name = "DIR")]
    pub images: PathBuf,
    /// Where to write pri.json and pri_colored.ply
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args)]
pub struct NbvArgs {
    /// Mesh to score: ASCII OBJ, or ASCII / binary little-endian PLY
    #[arg(long, value_name = "PATH")]
    pub mesh: PathBuf,
    /// Existing cameras (JSON)
    #[arg(long, value_name = "PATH")]
    pub cameras: PathBuf,
    /// Directory holding one image per existing camera id
    #[arg(long, value_name = "DIR")]
    pub images: PathBuf,
    /// Candidate poses to rank (JSON, same schema as --cameras)
    #[arg(long, value_name = "PATH")]
    pub candidates: PathBuf,
    /// Where to write nbv.json
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Scene file (JSON); defaults to the built-in dented-sphere demo
    #[arg(long, value_name = "PATH")]
    pub scene: Option<PathBuf>,
    /// Closed-loop view selections to run
    #[arg(long, default_value_t = 5)]
    pub iterations: usize,
    /// Ring cameras acquired before the first selection
    #[arg(long, default_value_t = 3)]
    pub initial_views: usize,
    /// Where to write the dataset and iteration log
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args)]
pub struct RenderArgs {
    /// Scene file (JSON)
    #[arg(long, value_name = "PATH")]
    pub scene: PathBuf,
    /// Camera file (JSON); defaults to the scene's candidate ring
    #[arg(long, value_name = "PATH")]
    pub cameras: Option<PathBuf>,
    /// Which camera to render; required when several are available
    #[arg(long, value_name = "ID")]
    pub camera_id: Option<String>,
    /// Output image path (.pgm or .png)
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Planner knobs accepted by every subcommand.
#[derive(Args)]
pub struct ConfigArgs {
    /// Configuration file (TOML or JSON); present keys override defaults
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Patch similarity metric: ssd or ncc
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<Metric>,
    /// How many worst facets to target
    #[arg(long)]
    pub k: Option<usize>,
    /// Energy weights for occlusion, focus, parallax, incidence
    #[arg(long, value_name = "M1,M2,M3,M4", value_parser = parse_weights)]
    pub weights: Option<EnergyWeights>,
    /// Concentration of the incidence-angle preference
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Minimum useful baseline-to-height ratio
    #[arg(long)]
    pub delta: Option<f64>,
    /// Score a term takes when its condition fails (negative)
    #[arg(long, allow_hyphen_values = true)]
    pub penalty: Option<f64>,
    /// How the incidence term enters the score: reward or cost
    #[arg(long, value_parser = parse_incidence_sign)]
    pub incidence_sign: Option<IncidenceSign>,
    /// Seed for procedural textures in the simulator
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to every core
    #[arg(long)]
    pub threads: Option<usize>,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse()
}

fn parse_incidence_sign(s: &str) -> Result<IncidenceSign, String> {
    s.parse()
}

fn parse_weights(s: &str) -> Result<EnergyWeights, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected four comma-separated weights, got {}", parts.len()));
    }
    let mut values = [0.0f64; 4];
    for (value, part) in values.iter_mut().zip(&parts) {
        *value = part
            .trim()
            .parse()
            .map_err(|e| format!("bad weight {:?}: {e}", part.trim()))?;
    }
    Ok(EnergyWeights { mu1: values[0], mu2: values[1], mu3: values[2], mu4: values[3] })
}

impl ConfigArgs {
    /// Builds the run configuration: defaults, then the `--config` file,
    /// then individual flags. Validates the result.
    pub fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path).map_err(Failure::input)?;
        }
        if let Some(v) = self.metric {
            config.metric = v;
        }
        if let Some(v) = self.k {
            config.k = v;
        }
        if let Some(v) = self.weights {
            config.weights = v;
        }
        if let Some(v) = self.kappa {
            config.params.kappa = v;
        }
        if let Some(v) = self.delta {
            config.params.delta = v;
        }
        if let Some(v) = self.penalty {
            config.params.penalty = v;
        }
        if let Some(v) = self.incidence_sign {
            config.incidence_sign = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if self.threads.is_some() {
            config.threads = self.threads;
        }
        config.validate().map_err(Failure::input)?;
        Ok(config)
    }
}

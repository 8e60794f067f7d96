//! `mmchan` command-line front end: scene generation, tracing, dataset
//! construction, beam-selection export and artifact validation.
//!
//! Exit codes: 0 success, 1 failure (including validation failures), 2 usage
//! error. Diagnostics go to stderr; data only to the declared outputs.

mod commands;
pub mod manifest;
pub mod pool;
pub mod progress;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use manifest::{FileRecord, RunManifest};

/// Default output directory when `--out-dir` is not given.
pub const OUT_DIR_ENV: &str = "MMCHAN_OUT_DIR";
pub const RUN_MANIFEST_FILE: &str = "run.json";

#[derive(Debug, Parser)]
#[command(
    name = "mmchan",
    version,
    about = "Geometric mmWave / massive-MIMO channel dataset generator"
)]
pub struct Cli {
    /// Suppress progress lines.
    #[arg(long, global = true)]
    pub quiet: bool,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a scene file.
    Scene(SceneArgs),
    /// Trace every active (BS, user) pair into per-BS ray files.
    Trace(TraceArgs),
    /// Build channel matrices from ray files into dataset shards.
    Build(BuildArgs),
    /// Compute beam-selection features and labels from a dataset.
    Beams(BeamsArgs),
    /// Check an artifact and report violations.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    O1,
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    #[arg(long, value_enum, default_value = "o1")]
    pub preset: Preset,
    /// Scene overrides as key=value lines.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output scene file (default: scene.json in the output directory).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Dataset parameters; flags override `--config` and use the same names as
/// the keys.
#[derive(Debug, Args, Default)]
pub struct ParamArgs {
    /// Parameter file with key=value lines.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long = "active_BS", value_name = "IDS")]
    pub active_bs: Option<String>,
    #[arg(long = "active_user_first", value_name = "ROW")]
    pub active_user_first: Option<String>,
    #[arg(long = "active_user_last", value_name = "ROW")]
    pub active_user_last: Option<String>,
    #[arg(long = "num_ant_x")]
    pub num_ant_x: Option<String>,
    #[arg(long = "num_ant_y")]
    pub num_ant_y: Option<String>,
    #[arg(long = "num_ant_z")]
    pub num_ant_z: Option<String>,
    #[arg(long = "ant_spacing", value_name = "WAVELENGTHS")]
    pub ant_spacing: Option<String>,
    #[arg(long = "bandwidth", value_name = "GHZ")]
    pub bandwidth: Option<String>,
    #[arg(long = "num_OFDM")]
    pub num_ofdm: Option<String>,
    #[arg(long = "OFDM_sampling_factor")]
    pub ofdm_sampling_factor: Option<String>,
    #[arg(long = "OFDM_limit")]
    pub ofdm_limit: Option<String>,
    #[arg(long = "num_paths")]
    pub num_paths: Option<String>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long, value_name = "FILE")]
    pub scene: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Trace every user of the scene instead of the active rows.
    #[arg(long)]
    pub all_users: bool,
    #[arg(long, default_value_t = mmchan_core::tracer::DEFAULT_MAX_REFLECTIONS)]
    pub max_reflections: usize,
    #[arg(long, default_value_t = mmchan_core::tracer::MAX_RECORDED_PATHS)]
    pub max_paths: usize,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    Binary,
    Csv,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long, value_name = "FILE")]
    pub scene: PathBuf,
    /// Directory holding bs<ID>.dmrf ray files.
    #[arg(long, value_name = "DIR")]
    pub rays: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value = "binary")]
    pub format: DataFormat,
    /// Users per work batch.
    #[arg(long, default_value_t = 256)]
    pub chunk: usize,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BeamsArgs {
    /// Binary dataset directory written by `build`.
    #[arg(long, value_name = "DIR")]
    pub dataset: PathBuf,
    /// Linear SNR.
    #[arg(long, default_value_t = mmchan_core::beams::DEFAULT_SNR)]
    pub snr: f64,
    /// DFT oversampling per array axis.
    #[arg(long, default_value_t = 1)]
    pub oversampling: u32,
    /// Use conjugate beamforming (fᴴh) instead of the transpose product.
    #[arg(long)]
    pub conjugate: bool,
    #[arg(long, value_enum, default_value = "binary")]
    pub format: DataFormat,
    #[arg(long, default_value_t = 256)]
    pub chunk: usize,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Scene, ray file, shard, feature/label file, or export directory.
    pub path: PathBuf,
    /// Write a JSON report here.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}

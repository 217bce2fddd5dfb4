//! Command-line front end for the pillar-lens simulator.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::config::{default_output_dir, ConfigError, RawConfig, RunConfig};
use crate::manifest::{RunInfo, RunManifest, MANIFEST_FILE, SUMMARY_FILE};
use crate::output::to_json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

const LOCK_FILE: &str = ".pillar-lens.lock";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] pillar_lens::Error),
    #[error("output directory {0} is in use by another run")]
    Busy(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for bad input, 2 for failures during computation or output.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Busy(_) => EXIT_VALIDATION,
            CliError::Model(e) if e.is_validation() => EXIT_VALIDATION,
            CliError::Model(_) | CliError::Io { .. } => EXIT_NUMERICAL,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(name = "pillar-lens", version, about = "Design and analyse aspheric micro-lenses on micro-pillar sources")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration key (repeatable), e.g. `--set grid.N=256`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Output directory [default: $PILLAR_LENS_OUT or ./pillar-lens-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0, global = true)]
    pub workers: usize,
    /// Skip bulk outputs such as far-field maps.
    #[arg(long, global = true)]
    pub summary_only: bool,
    /// Lens base radius (µm).
    #[arg(long = "R", global = true)]
    pub radius: Option<f64>,
    /// Conic constant.
    #[arg(long = "k", global = true, allow_hyphen_values = true)]
    pub conic: Option<f64>,
    /// Quartic coefficient (µm⁻³).
    #[arg(long = "k4", global = true, allow_hyphen_values = true)]
    pub k4: Option<f64>,
    /// Rows in the profile table.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Simulate the bare pillar without a lens.
    #[arg(long, global = true)]
    pub bare: bool,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sag table of the lens surface.
    Profile,
    /// One design: summary and far-field map.
    Simulate,
    /// Sweep the quartic coefficient at fixed radius and conic.
    #[command(name = "sweep-k4")]
    SweepK4,
    /// Best quartic coefficient for each conic constant.
    #[command(name = "sweep-k")]
    SweepK,
    /// Optimal quartic coefficient across radii with a scaling fit.
    Family,
    /// Design a lens matched to the configured fibre.
    #[command(name = "match-fiber")]
    MatchFiber,
    /// Coupling versus lateral lens offset.
    #[command(name = "tolerance-offset")]
    ToleranceOffset,
    /// Coupling versus lens height error.
    #[command(name = "tolerance-height")]
    ToleranceHeight,
    /// Re-run the command recorded in a manifest.
    Rerun {
        manifest: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Simulate => "simulate",
            Command::SweepK4 => "sweep-k4",
            Command::SweepK => "sweep-k",
            Command::Family => "family",
            Command::MatchFiber => "match-fiber",
            Command::ToleranceOffset => "tolerance-offset",
            Command::ToleranceHeight => "tolerance-height",
            Command::Rerun { .. } => "rerun",
        }
    }
}

/// Resolve defaults, file, `--set` and typed flags, in rising precedence.
pub fn resolve_config(common: &CommonArgs, base: RawConfig) -> Result<RunConfig, CliError> {
    let mut raw = base;
    if let Some(path) = &common.config {
        raw.apply_file(path)?;
    }
    raw.apply_overrides(&common.set)?;
    let typed = [
        ("lens.R", common.radius.map(|v| v.to_string())),
        ("lens.k", common.conic.map(|v| v.to_string())),
        ("lens.k4", common.k4.map(|v| v.to_string())),
        ("profile.samples", common.samples.map(|v| v.to_string())),
        ("lens.bare", common.bare.then(|| "true".to_string())),
    ];
    for (key, value) in typed {
        if let Some(v) = value {
            raw.set(key, &v)?;
        }
    }
    let out = common.out.clone().unwrap_or_else(default_output_dir);
    Ok(RunConfig::from_raw(raw, out, common.workers, common.summary_only)?)
}

/// Holds the output directory for the lifetime of a run.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(LOCK_FILE);
        match std::fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                use std::io::Write;
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Busy(dir.display().to_string())),
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

/// Files are written to a staging directory and moved into place only
/// when every artifact is complete, so a failed run leaves nothing behind.
fn publish(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    let staging = dir.join(format!(".staging-{}", std::process::id()));
    let result = (|| {
        std::fs::create_dir_all(&staging).map_err(io_err(&staging))?;
        for (name, contents) in files {
            let p = staging.join(name);
            std::fs::write(&p, contents).map_err(io_err(&p))?;
        }
        for (name, _) in files {
            let from = staging.join(name);
            let to = dir.join(name);
            std::fs::rename(&from, &to).map_err(io_err(&to))?;
        }
        Ok(())
    })();
    let _ = std::fs::remove_dir_all(&staging);
    if result.is_err() {
        for (name, _) in files {
            let _ = std::fs::remove_file(dir.join(name));
        }
    }
    result
}

/// Run one command with a resolved configuration and write its artifacts.
pub fn execute(command: &str, cfg: &RunConfig) -> Result<RunManifest, CliError> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let _lock = DirLock::acquire(&cfg.output_dir)?;
    let outcome = pillar_lens::par::with_workers(cfg.workers, || commands::run(command, cfg))?;
    let mut files = outcome.files;
    let mut artifacts: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    artifacts.push(SUMMARY_FILE.into());
    artifacts.push(MANIFEST_FILE.into());
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: cfg.raw.entries().clone(),
        artifacts,
        summary: outcome.summary.clone(),
        run: RunInfo {
            started_unix: started,
            duration_s: clock.elapsed().as_secs_f64(),
            workers: if cfg.workers == 0 { pillar_lens::par::available_workers() } else { cfg.workers },
            output_dir: cfg.output_dir.display().to_string(),
        },
    };
    files.push((SUMMARY_FILE.into(), to_json(&outcome.summary)));
    files.push((MANIFEST_FILE.into(), to_json(&manifest)));
    publish(&cfg.output_dir, &files)?;
    Ok(manifest)
}

fn run_cli(cli: Cli) -> Result<RunManifest, CliError> {
    match &cli.command {
        Command::Rerun { manifest } => {
            let old = RunManifest::load(manifest).map_err(CliError::Usage)?;
            if !commands::COMMANDS.contains(&old.command.as_str()) {
                return Err(CliError::Usage(format!("manifest names unknown command `{}`", old.command)));
            }
            let mut base = RawConfig::default();
            for (k, v) in &old.config {
                base.set(k, v)?;
            }
            let cfg = resolve_config(&cli.common, base)?;
            execute(&old.command, &cfg)
        }
        other => {
            let cfg = resolve_config(&cli.common, RawConfig::default())?;
            execute(other.name(), &cfg)
        }
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.common.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run_cli(cli) {
        Ok(m) => {
            println!("{}", serde_json::to_string_pretty(&m.summary).unwrap_or_default());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

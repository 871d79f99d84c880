//! Command-line interface.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{bundled_fallback, parse_threshold_override, RunConfig, Thresholds, DEFAULT_TOP_N};
use crate::datamodel::load_meta;
use crate::ensemble::{Algorithm, DEFAULT_EXP3_GAMMA};
use crate::error::{Error, Result};
use crate::feedback::FallbackMode;
use crate::onception::CombinerMode;
use crate::strategies::{DEFAULT_LAMBDA, DEFAULT_MAX_N, DEFAULT_P_RANDOM};

#[derive(Debug, Parser)]
#[command(name = "onception", version, about = "Stream-based active learning over an online MT ensemble")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write result files.
    Run(RunArgs),
    /// Load a dataset and report its size and human-score coverage.
    Validate {
        #[arg(long, env = "ONCEPTION_DATA")]
        dataset: PathBuf,
        /// Also check a feature file against the dataset.
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Write a synthetic dataset and feature file.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        segments: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Dataset directory.
    #[arg(long, env = "ONCEPTION_DATA")]
    pub dataset: PathBuf,
    /// JSON-lines feature file.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// ewaf or exp3.
    #[arg(long)]
    pub algo: Algorithm,
    /// A strategy name, onception, onception-no-density, onception-no-density-tdiff or baseline.
    #[arg(long)]
    pub strategy: CombinerMode,
    /// zero, avg or oracle. Defaults to the bundled choice for the language pair.
    #[arg(long)]
    pub fallback: Option<FallbackMode>,
    /// Threshold table (strategy,lang_pair,algo,threshold). Defaults to the bundled table.
    #[arg(long)]
    pub threshold_file: Option<PathBuf>,
    /// Per-strategy override, e.g. DivJac=0.5. Repeatable.
    #[arg(long = "threshold", value_name = "KIND=VALUE")]
    pub thresholds: Vec<String>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    pub top_n: usize,
    #[arg(long, default_value_t = DEFAULT_EXP3_GAMMA)]
    pub exp3_gamma: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_N)]
    pub ngram_max: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = DEFAULT_P_RANDOM)]
    pub p_random: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl RunArgs {
    /// Resolves defaults that depend on the dataset's language pair.
    pub fn into_config(self) -> Result<RunConfig> {
        let meta = load_meta(&self.dataset)?;
        let mut thresholds = match &self.threshold_file {
            Some(path) => Thresholds::load(path, &meta.lang_pair, self.algo)?,
            None => Thresholds::bundled(&meta.lang_pair, self.algo)?,
        };
        for t in &self.thresholds {
            let (kind, value) = parse_threshold_override(t)?;
            thresholds.set(kind, value);
        }
        let fallback = match self.fallback {
            Some(f) => f,
            None => bundled_fallback(&meta.lang_pair, self.algo)?.ok_or_else(|| {
                Error::Config(format!("no bundled fallback for {}; pass --fallback", meta.lang_pair))
            })?,
        };
        let cfg = RunConfig {
            dataset: self.dataset,
            features: self.features,
            out: Some(self.out),
            algo: self.algo,
            fallback,
            combiner: self.strategy,
            thresholds,
            seed: self.seed,
            exp3_gamma: self.exp3_gamma,
            max_n: self.ngram_max,
            lambda: self.lambda,
            p_random: self.p_random,
            top_n: self.top_n,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `run` arguments (without the subcommand) into a configuration.
/// Usage problems come back as [`Error::Config`] holding clap's message.
pub fn parse_cli<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    #[derive(Parser)]
    #[command(name = "onception run")]
    struct RunOnly {
        #[command(flatten)]
        args: RunArgs,
    }
    let parsed = RunOnly::try_parse_from(argv).map_err(|e| Error::Config(e.render().to_string()))?;
    parsed.args.into_config()
}

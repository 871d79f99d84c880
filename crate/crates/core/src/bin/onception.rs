use std::process::ExitCode;

use clap::Parser;

use onception::cli::{Cli, Command};
use onception::datamodel::{load_dataset, load_feature_store, validate_dataset, write_dataset, write_feature_store};
use onception::output::write_results;
use onception::sim::run_experiment;
use onception::synthetic::{generate, SyntheticSpec};
use onception::Result;

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.into_config()?;
            let out = run_experiment(&cfg)?;
            let dir = cfg.out.clone().unwrap_or_else(|| "results".into());
            write_results(&out, &dir)?;
            let last = out.records.last();
            println!(
                "{} segments, {} queries, final overlap_top{} {}, final tau {}",
                out.records.len(),
                out.queries(),
                out.top_n,
                last.map_or(0.0, |r| r.overlap_top_n),
                last.map_or(0.0, |r| r.kendall_tau),
            );
            println!("results written to {}", dir.display());
        }
        Command::Validate { dataset, features } => {
            let ds = load_dataset(&dataset)?;
            let report = validate_dataset(&ds);
            println!("lang_pair: {}", ds.lang_pair);
            println!("segments:  {}", report.segments);
            println!("systems:   {}", report.systems);
            println!("coverage:  {}", report.percent());
            if let Some(path) = features {
                let fs = load_feature_store(&path, &ds)?;
                println!("features:  ok ({} records)", fs.records().len());
            }
        }
        Command::Synth { out, segments, seed } => {
            let syn = generate(&SyntheticSpec::five_systems(segments, seed))?;
            write_dataset(&syn.dataset, &out)?;
            write_feature_store(&syn.features, out.join("features.jsonl"))?;
            println!("wrote {} segments to {}", segments, out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

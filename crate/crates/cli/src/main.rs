//! `depthpair`: builds aligned, masked, augmented depth denoising datasets
//! from paired LQ/HQ captures and scores depth predictions on them.
//!
//! Any config value can be overridden as `--section.key value` (or
//! `--section.key=value`); values are parsed as TOML, falling back to a string.

mod commands;
mod config;
mod error;
mod io;
mod progress;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use depthpair::dataset::Split;
use depthpair::metrics::MseDomain;

use commands::Ctx;
use config::{parse_value, Method, Overrides, PipelineConfig};
use error::{CliError, CliResult};
use progress::Reporter;

#[derive(Parser)]
#[command(name = "depthpair", version, about = "Paired RGB-D depth denoising dataset toolkit")]
struct Cli {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset root (paths.dataset).
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Seed for augmentation, splitting and synthetic data (TOML integers stop at 2^63 - 1).
    #[arg(long, global = true, value_parser = clap::value_parser!(i64).range(0..))]
    seed: Option<i64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Validate config and inputs without writing anything.
    #[arg(long, global = true)]
    dry_run: bool,
    /// One JSON object per line on stdout instead of human-readable progress.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a raw synthetic dataset with correspondences and a config.
    Synth {
        #[arg(long)]
        tuples: Option<usize>,
    },
    /// Estimate the HQ→LQ extrinsic from point correspondences.
    Calibrate {
        #[arg(long)]
        correspondences: Option<PathBuf>,
        /// Output path (paths.calibration).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Reproject the HQ frames of raw tuples onto the LQ grid.
    Align,
    /// Compute object masks for aligned tuples.
    Mask,
    /// Add rigidly moved copies of every masked tuple.
    Augment {
        #[arg(long)]
        k: Option<u32>,
    },
    /// Assign train/val/test by source tuple.
    Split,
    /// Run a classical filter over the LQ depth of masked tuples.
    Denoise {
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Output directory (paths.predictions).
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        split: Option<Split>,
    },
    /// Score prediction rasters against the HQ targets.
    Evaluate {
        /// Directory of <id>.dfd predictions (paths.predictions).
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        split: Option<Split>,
        #[arg(long)]
        mse_domain: Option<MseDomain>,
        /// Report directory (paths.reports).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the trainer file listing.
    Export,
    /// calibrate, align, mask, augment, split and export in one go.
    Pipeline,
}

/// Pulls `--a.b value` / `--a.b=value` pairs out of the argument list.
fn take_dotted(args: Vec<String>) -> CliResult<(Vec<String>, Overrides)> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--").filter(|f| f.split('=').next().is_some_and(|k| k.contains('.'))) else {
            rest.push(arg);
            continue;
        };
        let (key, raw) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage(format!("--{flag} needs a value")))?;
                (flag.to_string(), v)
            }
        };
        overrides.push((key, parse_value(&raw)));
    }
    Ok((rest, overrides))
}

fn path_value(p: PathBuf) -> toml::Value {
    toml::Value::String(p.to_string_lossy().into_owned())
}

fn flag_overrides(cli: &Cli) -> Overrides {
    let mut o = Overrides::new();
    let s = |v: &str| toml::Value::String(v.to_string());
    if let Some(d) = &cli.dataset {
        o.push(("paths.dataset".into(), path_value(d.clone())));
    }
    if let Some(seed) = cli.seed {
        o.push(("seed".into(), toml::Value::Integer(seed)));
    }
    if let Some(w) = cli.workers {
        o.push(("workers".into(), toml::Value::Integer(w as i64)));
    }
    match &cli.command {
        Command::Synth { tuples: Some(n) } => o.push(("synth.tuples".into(), toml::Value::Integer(*n as i64))),
        Command::Calibrate { correspondences, output } => {
            if let Some(c) = correspondences {
                o.push(("paths.correspondences".into(), path_value(c.clone())));
            }
            if let Some(out) = output {
                o.push(("paths.calibration".into(), path_value(out.clone())));
            }
        }
        Command::Augment { k: Some(k) } => o.push(("augment.k".into(), toml::Value::Integer(*k as i64))),
        Command::Denoise { method, output, split } => {
            if let Some(m) = method {
                o.push(("denoise.method".into(), s(m.as_str())));
            }
            if let Some(out) = output {
                o.push(("paths.predictions".into(), path_value(out.clone())));
            }
            if let Some(sp) = split {
                o.push(("denoise.split".into(), s(sp.as_str())));
            }
        }
        Command::Evaluate {
            predictions,
            split,
            mse_domain,
            output,
        } => {
            if let Some(p) = predictions {
                o.push(("paths.predictions".into(), path_value(p.clone())));
            }
            if let Some(sp) = split {
                o.push(("metrics.split".into(), s(sp.as_str())));
            }
            if let Some(d) = mse_domain {
                let name = match d {
                    MseDomain::Mask => "mask",
                    MseDomain::Full => "full",
                };
                o.push(("metrics.mse_domain".into(), s(name)));
            }
            if let Some(out) = output {
                o.push(("paths.reports".into(), path_value(out.clone())));
            }
        }
        _ => {}
    }
    o
}

fn execute(cli: Cli, dotted: Overrides) -> CliResult<()> {
    let mut overrides = dotted;
    overrides.extend(flag_overrides(&cli));
    let cfg = PipelineConfig::load(cli.config.as_deref(), &overrides)?;
    cfg.validate_general()?;
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
    }
    let ctx = Ctx::new(cfg, cli.dry_run, Reporter::new(cli.json));
    let (name, f): (&str, fn(&Ctx) -> CliResult<serde_json::Value>) = match cli.command {
        Command::Synth { .. } => ("synth", commands::synth),
        Command::Calibrate { .. } => ("calibrate", commands::calibrate),
        Command::Align => ("align", commands::align),
        Command::Mask => ("mask", commands::mask),
        Command::Augment { .. } => ("augment", commands::augment),
        Command::Split => ("split", commands::split),
        Command::Denoise { .. } => ("denoise", commands::denoise),
        Command::Evaluate { .. } => ("evaluate", commands::evaluate),
        Command::Export => ("export", commands::export),
        Command::Pipeline => ("pipeline", commands::pipeline),
    };
    commands::run(&ctx, name, f)?;
    Ok(())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let json_mode = args.iter().any(|a| a == "--json");
    let result = take_dotted(args).and_then(|(rest, dotted)| match Cli::try_parse_from(rest) {
        Ok(cli) => execute(cli, dotted),
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            Ok(())
        }
        Err(e) => {
            let _ = e.print();
            Err(CliError::Usage(e.kind().to_string()))
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            if json_mode {
                println!("{}", json!({ "event": "error", "message": e.to_string(), "exit_code": code }));
            }
            if !matches!(e, CliError::Usage(_)) {
                eprintln!("error: {e}");
            }
            ExitCode::from(code as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_flags_are_extracted() {
        let args = ["depthpair", "--masking.eps_m", "0.03", "mask", "--augment.k=5", "--json"]
            .map(String::from)
            .to_vec();
        let (rest, o) = take_dotted(args).unwrap();
        assert_eq!(rest, vec!["depthpair", "mask", "--json"]);
        assert_eq!(o[0], ("masking.eps_m".to_string(), toml::Value::Float(0.03)));
        assert_eq!(o[1], ("augment.k".to_string(), toml::Value::Integer(5)));
    }

    #[test]
    fn dotted_flag_needs_value() {
        let args = ["depthpair", "mask", "--masking.eps_m"].map(String::from).to_vec();
        assert!(matches!(take_dotted(args), Err(CliError::Usage(_))));
    }
}

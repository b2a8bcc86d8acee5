//! Subcommand implementations. Each returns a JSON summary that goes into the
//! run record and the final progress event.

mod build;
mod prepare;
mod score;

use rayon::prelude::*;
use serde_json::{json, Value};

use depthpair::dataset::{Dataset, ManifestEntry};

use crate::config::PipelineConfig;
use crate::error::CliResult;
use crate::progress::Reporter;
use crate::record::{write_record, Timer};

pub use build::{augment, export, mask, split};
pub use prepare::{align, calibrate, synth};
pub use score::{denoise, evaluate};

pub struct Ctx {
    pub cfg: PipelineConfig,
    pub hash: String,
    pub dry_run: bool,
    pub out: Reporter,
}

impl Ctx {
    pub fn new(cfg: PipelineConfig, dry_run: bool, out: Reporter) -> Self {
        Self {
            hash: cfg.hash(),
            cfg,
            dry_run,
            out,
        }
    }

    pub fn open_dataset(&self) -> CliResult<Dataset> {
        let ds = Dataset::open(&self.cfg.paths.dataset)?;
        ds.validate()?;
        Ok(ds)
    }

    pub fn save(&self, ds: &mut Dataset) -> CliResult<()> {
        ds.manifest.config_hash = Some(self.hash.clone());
        ds.save_manifest()?;
        Ok(())
    }
}

/// Runs one subcommand with start/done events and, unless dry, a run record.
pub fn run(ctx: &Ctx, name: &str, f: impl FnOnce(&Ctx) -> CliResult<Value>) -> CliResult<Value> {
    let timer = Timer::start();
    ctx.out.emit(
        "start",
        json!({ "command": name, "dry_run": ctx.dry_run, "config_hash": ctx.hash }),
        || format!("{name}: start{}", if ctx.dry_run { " (dry run)" } else { "" }),
    );
    let summary = f(ctx)?;
    if !ctx.dry_run {
        write_record(&ctx.cfg.paths.dataset, name, &ctx.hash, ctx.cfg.seed, &summary, &timer)?;
    }
    ctx.out.emit("done", json!({ "command": name, "summary": summary }), || {
        format!("{name}: done {summary}")
    });
    Ok(summary)
}

/// Applies `job` to every id in parallel and collects the results in id order.
fn per_tuple<T: Send>(
    ctx: &Ctx,
    command: &str,
    ids: &[String],
    job: impl Fn(&str) -> CliResult<T> + Sync,
) -> Vec<CliResult<T>> {
    ids.par_iter()
        .map(|id| {
            let r = job(id);
            ctx.out.tuple(command, id, if r.is_ok() { "ok" } else { "failed" });
            r
        })
        .collect()
}

/// Records the successful entries in id order, saves the manifest, then
/// surfaces the first failure.
fn merge(ctx: &Ctx, ds: &mut Dataset, results: Vec<CliResult<ManifestEntry>>) -> CliResult<usize> {
    let mut first_err = None;
    let mut n = 0;
    for r in results {
        match r {
            Ok(entry) => {
                ds.manifest.upsert(entry);
                n += 1;
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    ctx.save(ds)?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(n),
    }
}

/// calibrate (when correspondences are configured), align, mask, augment, split, export.
pub fn pipeline(ctx: &Ctx) -> CliResult<Value> {
    ctx.cfg.masking.validate()?;
    ctx.cfg.augment_policy().validate()?;
    ctx.cfg.split.validate()?;
    let mut steps = serde_json::Map::new();
    if ctx.cfg.paths.correspondences.is_some() {
        steps.insert("calibrate".into(), run(ctx, "calibrate", calibrate)?);
    }
    steps.insert("align".into(), run(ctx, "align", align)?);
    if ctx.dry_run {
        return Ok(Value::Object(steps));
    }
    steps.insert("mask".into(), run(ctx, "mask", mask)?);
    steps.insert("augment".into(), run(ctx, "augment", augment)?);
    steps.insert("split".into(), run(ctx, "split", split)?);
    steps.insert("export".into(), run(ctx, "export", export)?);
    Ok(Value::Object(steps))
}

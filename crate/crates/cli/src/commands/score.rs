use serde_json::{json, Value};

use depthpair::baselines::{bilateral, rolling_guidance};
use depthpair::dataset::raster;
use depthpair::metrics::{evaluate_split, prediction_path, EvalOptions};

use super::{per_tuple, Ctx};
use crate::config::Method;
use crate::error::{CliError, CliResult};
use crate::io::{create_dir, write_text};

/// Filters the LQ depth of every masked tuple and writes `<predictions>/<id>.dfd`.
pub fn denoise(ctx: &Ctx) -> CliResult<Value> {
    ctx.cfg.validate_denoise()?;
    let ds = ctx.open_dataset()?;
    let split = ctx.cfg.denoise.split;
    if split.is_some() && ds.manifest.split.is_none() {
        return Err(CliError::Config("dataset has not been split yet".into()));
    }
    let ids: Vec<String> = ds
        .manifest
        .tuples
        .iter()
        .filter(|e| e.state.masked && split.is_none_or(|s| e.split == Some(s)))
        .map(|e| e.id.clone())
        .collect();
    let method = ctx.cfg.denoise.method;
    if ctx.dry_run {
        return Ok(json!({ "method": method.as_str(), "to_filter": ids.len() }));
    }
    let out_dir = ctx.cfg.predictions_dir();
    create_dir(&out_dir)?;
    let results = per_tuple(ctx, "denoise", &ids, |id| {
        let t = ds.read_tuple(id)?;
        let mask = t.mask.as_ref().expect("masked tuples carry a mask");
        let filtered = match method {
            Method::Bilateral => bilateral(&t.depth_lq, mask, &ctx.cfg.denoise.bilateral)?,
            Method::Rgf => rolling_guidance(&t.depth_lq, mask, &ctx.cfg.denoise.rgf)?,
        };
        raster::write_dfd(&prediction_path(&out_dir, id), &filtered)?;
        Ok(())
    });
    let n = results.len();
    results.into_iter().collect::<CliResult<Vec<()>>>()?;
    Ok(json!({ "method": method.as_str(), "filtered": n }))
}

/// Scores `<predictions>/<id>.dfd` against the HQ targets; writes JSON and CSV reports.
pub fn evaluate(ctx: &Ctx) -> CliResult<Value> {
    ctx.cfg.validate_metrics()?;
    let ds = ctx.open_dataset()?;
    let pred_dir = ctx.cfg.predictions_dir();
    if !pred_dir.is_dir() {
        return Err(depthpair::Error::Integrity {
            path: pred_dir,
            reason: "predictions directory does not exist".into(),
        }
        .into());
    }
    let split = ctx.cfg.metrics.split;
    let opts = EvalOptions {
        mse_domain: ctx.cfg.metrics.mse_domain,
    };
    if ctx.dry_run {
        return Ok(json!({ "split": split }));
    }
    let report = evaluate_split(&ds, split, &pred_dir, &ctx.cfg.metrics.bins, &opts)?;
    let stem = match split {
        Some(s) => format!("evaluate_{s}"),
        None => "evaluate".to_string(),
    };
    let dir = ctx.cfg.reports_dir();
    write_text(&dir.join(format!("{stem}.json")), &report.to_json())?;
    write_text(&dir.join(format!("{stem}.csv")), &report.to_csv()?)?;
    let agg = &report.aggregate;
    Ok(json!({
        "split": split,
        "tuples": report.tuples.len(),
        "missing_predictions": report.missing_predictions.len(),
        "excluded_empty": report.excluded_empty.len(),
        "input_l1_median": agg.input.l1.median,
        "prediction_l1_median": agg.prediction.l1.median,
        "it_ot_median": agg.it_ot.median,
        "it_ot_of_means": agg.it_ot_of_means,
    }))
}

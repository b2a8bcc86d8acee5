use std::path::PathBuf;

use serde_json::{json, Value};

use depthpair::calibration::{align_tuple, solve_extrinsic, CalibrationResult, CorrespondenceSet};
use depthpair::dataset::{raster, write_tuple, Dataset, ManifestEntry, MANIFEST};
use depthpair::synthetic::Rig;

use super::{merge, per_tuple, Ctx};
use crate::config::{Paths, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::io::{create_dir, write_text};

pub const SYNTH_CONFIG: &str = "synth.toml";
pub const SYNTH_CORRESPONDENCES: &str = "correspondences.csv";

/// Raw tuples of random tabletop scenes from the standard simulated rig, plus
/// matching correspondences, true object masks and a ready-to-use config.
pub fn synth(ctx: &Ctx) -> CliResult<Value> {
    let cfg = &ctx.cfg;
    let root = &cfg.paths.dataset;
    if root.join(MANIFEST).exists() {
        return Err(CliError::Config(format!(
            "{} already holds a dataset; choose an empty paths.dataset",
            root.display()
        )));
    }
    let rig = Rig::standard();
    let summary = json!({ "tuples": cfg.synth.tuples, "correspondences": cfg.synth.correspondences });
    if ctx.dry_run {
        return Ok(summary);
    }
    let captures = rig.fixture_set(cfg.synth.tuples, cfg.seed)?;
    let mut ds = Dataset::create(root, &rig.intr_lq, &rig.intr_hq)?;
    let truth_dir = root.join("truth");
    create_dir(&truth_dir)?;
    let ids: Vec<String> = captures.iter().map(|c| c.tuple.id.clone()).collect();
    let results = per_tuple(ctx, "synth", &ids, |id| {
        let c = captures.iter().find(|c| c.tuple.id == id).expect("id from captures");
        write_tuple(root, &c.tuple)?;
        raster::write_mask_png(&truth_dir.join(format!("{id}.png")), &c.truth)?;
        Ok(ManifestEntry::for_tuple(&c.tuple))
    });
    merge(ctx, &mut ds, results)?;

    let corr = rig.correspondences(cfg.synth.correspondences, cfg.synth.correspondence_noise_m, cfg.seed)?;
    corr.save_csv(&root.join(SYNTH_CORRESPONDENCES))?;

    let generated = PipelineConfig {
        paths: Paths {
            dataset: PathBuf::from("."),
            correspondences: Some(PathBuf::from(SYNTH_CORRESPONDENCES)),
            ..Paths::default()
        },
        masking: rig.mask_params(),
        workers: None,
        ..cfg.clone()
    };
    write_text(&root.join(SYNTH_CONFIG), &generated.to_toml())?;
    Ok(summary)
}

/// Correspondences to the HQ→LQ extrinsic, saved as calibration JSON.
pub fn calibrate(ctx: &Ctx) -> CliResult<Value> {
    let cfg = &ctx.cfg;
    let path = cfg
        .paths
        .correspondences
        .as_ref()
        .ok_or_else(|| CliError::Config("paths.correspondences is not set".into()))?;
    let corr = CorrespondenceSet::load_csv(path)?;
    let result = solve_extrinsic(&corr)?;
    let t = &result.transform;
    let summary = json!({
        "pairs": corr.len(),
        "rms_residual_m": result.rms_residual_m,
        "rotation_deg": t.rotation_angle().to_degrees(),
        "translation_m": [t.translation().x, t.translation().y, t.translation().z],
    });
    if ctx.dry_run {
        return Ok(summary);
    }
    let out = cfg.calibration_path();
    if let Some(parent) = out.parent() {
        create_dir(parent)?;
    }
    result.save(&out)?;
    let root = &cfg.paths.dataset;
    if root.join(MANIFEST).exists() {
        if let Ok(rel) = out.strip_prefix(root) {
            let mut ds = Dataset::open(root)?;
            ds.manifest.calibration = Some(rel.to_string_lossy().into_owned());
            ctx.save(&mut ds)?;
        }
    }
    Ok(summary)
}

/// Moves the HQ frames of every raw tuple onto the LQ grid.
pub fn align(ctx: &Ctx) -> CliResult<Value> {
    let mut ds = ctx.open_dataset()?;
    let (intr_lq, intr_hq) = ctx.cfg.intrinsics(&ds)?;
    let calib_path = ctx.cfg.calibration_path();
    // A dry pipeline run has not written the calibration yet.
    let pending = ctx.dry_run && ctx.cfg.paths.correspondences.is_some() && !calib_path.exists();
    let t_ex = if pending {
        None
    } else {
        Some(CalibrationResult::load(&calib_path)?.transform)
    };
    let ids: Vec<String> = ds
        .manifest
        .tuples
        .iter()
        .filter(|e| !e.state.aligned)
        .map(|e| e.id.clone())
        .collect();
    let skipped = ds.manifest.tuples.len() - ids.len();
    if ctx.dry_run {
        return Ok(json!({ "to_align": ids.len(), "already_aligned": skipped }));
    }
    let t_ex = t_ex.expect("loaded outside dry runs");
    let results = per_tuple(ctx, "align", &ids, |id| {
        let raw = ds.read_tuple(id)?;
        let aligned = align_tuple(&raw, &t_ex, &intr_lq, &intr_hq)?;
        write_tuple(ds.root(), &aligned)?;
        Ok(ManifestEntry::for_tuple(&aligned))
    });
    let n = merge(ctx, &mut ds, results)?;
    Ok(json!({ "aligned": n, "already_aligned": skipped }))
}

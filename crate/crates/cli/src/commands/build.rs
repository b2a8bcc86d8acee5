use std::collections::BTreeSet;

use serde_json::{json, Value};

use depthpair::augmentation::augment_tuple;
use depthpair::dataset::{export_listing, split_dataset, write_tuple, ManifestEntry, Split, EXPORT};
use depthpair::masking::mask_tuple;

use super::{merge, per_tuple, Ctx};
use crate::error::CliResult;
use crate::io::write_text;

/// Masks every aligned original tuple that has no mask yet.
pub fn mask(ctx: &Ctx) -> CliResult<Value> {
    ctx.cfg.masking.validate()?;
    let mut ds = ctx.open_dataset()?;
    let (intr_lq, _) = ctx.cfg.intrinsics(&ds)?;
    let ids: Vec<String> = ds
        .manifest
        .tuples
        .iter()
        .filter(|e| e.state.aligned && !e.state.masked)
        .map(|e| e.id.clone())
        .collect();
    if ctx.dry_run {
        return Ok(json!({ "to_mask": ids.len() }));
    }
    let params = &ctx.cfg.masking;
    let results = per_tuple(ctx, "mask", &ids, |id| {
        let masked = mask_tuple(&ds.read_tuple(id)?, &intr_lq, params)?;
        write_tuple(ds.root(), &masked)?;
        Ok(ManifestEntry::for_tuple(&masked))
    });
    let n = merge(ctx, &mut ds, results)?;
    let empty = ds.manifest.tuples.iter().filter(|e| ids.contains(&e.id) && e.mask_empty).count();
    Ok(json!({ "masked": n, "empty_masks": empty }))
}

/// Replaces the augmented copies of every masked original tuple.
///
/// A source's random stream is keyed by its position among all original
/// tuples sorted by id, so results do not depend on scheduling.
pub fn augment(ctx: &Ctx) -> CliResult<Value> {
    let policy = ctx.cfg.augment_policy();
    policy.validate()?;
    let mut ds = ctx.open_dataset()?;
    let (intr_lq, _) = ctx.cfg.intrinsics(&ds)?;
    let jobs: Vec<(u64, String)> = ds
        .manifest
        .tuples
        .iter()
        .filter(|e| e.aug_index == 0)
        .enumerate()
        .filter(|(_, e)| e.state.masked && !e.mask_empty)
        .map(|(i, e)| (i as u64, e.id.clone()))
        .collect();
    let sources: BTreeSet<&str> = jobs.iter().map(|(_, id)| id.as_str()).collect();
    let stale: Vec<String> = ds
        .manifest
        .tuples
        .iter()
        .filter(|e| e.aug_index > 0 && sources.contains(e.source_id.as_str()))
        .map(|e| e.id.clone())
        .collect();
    if ctx.dry_run {
        return Ok(json!({ "sources": jobs.len(), "copies_to_replace": stale.len(), "k": policy.k }));
    }
    for id in &stale {
        ds.delete_tuple(id)?;
    }
    ctx.save(&mut ds)?;

    let ids: Vec<String> = jobs.iter().map(|(_, id)| id.clone()).collect();
    let results = per_tuple(ctx, "augment", &ids, |id| {
        let index = jobs.iter().find(|(_, j)| j == id).expect("job id").0;
        let out = augment_tuple(&ds.read_tuple(id)?, &policy, &intr_lq, index)?;
        let mut entries = Vec::new();
        for copy in out.tuples.iter().skip(1) {
            write_tuple(ds.root(), copy)?;
            entries.push(ManifestEntry::for_tuple(copy));
        }
        Ok((entries, out.dropped))
    });

    let mut dropped = 0;
    let mut flat = Vec::new();
    for r in results {
        match r {
            Ok((entries, d)) => {
                dropped += d;
                flat.extend(entries.into_iter().map(Ok));
            }
            Err(e) => flat.push(Err(e)),
        }
    }
    let written = merge(ctx, &mut ds, flat)?;
    Ok(json!({
        "sources": jobs.len(),
        "copies": written,
        "dropped": dropped,
        "tuples_total": ds.manifest.tuples.len(),
    }))
}

/// Assigns train/val/test by source tuple.
pub fn split(ctx: &Ctx) -> CliResult<Value> {
    ctx.cfg.split.validate()?;
    let mut ds = ctx.open_dataset()?;
    if ctx.dry_run {
        return Ok(json!({ "tuples": ds.manifest.tuples.len() }));
    }
    split_dataset(&mut ds.manifest, ctx.cfg.split, ctx.cfg.seed)?;
    ctx.save(&mut ds)?;
    let count = |s: Split, sources: bool| {
        ds.manifest
            .tuples
            .iter()
            .filter(|e| e.split == Some(s) && (!sources || e.aug_index == 0))
            .count()
    };
    let summary: serde_json::Map<String, Value> = Split::ALL
        .iter()
        .map(|s| (s.to_string(), json!({ "tuples": count(*s, false), "sources": count(*s, true) })))
        .collect();
    Ok(Value::Object(summary))
}

/// Writes the trainer listing `export.json`.
pub fn export(ctx: &Ctx) -> CliResult<Value> {
    let ds = ctx.open_dataset()?;
    let listing = export_listing(&ds.manifest)?;
    let summary: serde_json::Map<String, Value> = listing
        .splits
        .iter()
        .map(|(s, v)| (s.to_string(), json!(v.len())))
        .chain([
            ("skipped_empty_mask".to_string(), json!(listing.skipped_empty_mask)),
            ("skipped_unmasked".to_string(), json!(listing.skipped_unmasked)),
        ])
        .collect();
    if !ctx.dry_run {
        let text = serde_json::to_string_pretty(&listing).expect("listing serializes") + "\n";
        write_text(&ds.root().join(EXPORT), &text)?;
    }
    Ok(Value::Object(summary))
}

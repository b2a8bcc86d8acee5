use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::manifest::DatasetManifest;
use super::split::Split;
use super::tuple::{COLOR_LQ, DEPTH_HQ, DEPTH_LQ, MASK};
use super::FORMAT_VERSION;
use crate::error::{Error, Result};

pub const EXPORT: &str = "export.json";

/// Trainer-facing file listing for one tuple. Paths are relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportEntry {
    pub id: String,
    pub source_id: String,
    pub aug_index: u32,
    pub color: String,
    pub depth_input: String,
    pub depth_target: String,
    pub mask: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportListing {
    pub format_version: u32,
    pub intrinsics_lq: String,
    pub depth_units: String,
    pub splits: BTreeMap<Split, Vec<ExportEntry>>,
    /// Masked tuples left out because their mask is empty.
    pub skipped_empty_mask: usize,
    /// Tuples left out because they were never masked.
    pub skipped_unmasked: usize,
}

/// Lists every masked, non-empty tuple by split.
pub fn export_listing(manifest: &DatasetManifest) -> Result<ExportListing> {
    if manifest.split.is_none() {
        return Err(Error::config("dataset has no split assignment; run split first"));
    }
    let mut splits: BTreeMap<Split, Vec<ExportEntry>> =
        Split::ALL.iter().map(|s| (*s, Vec::new())).collect();
    let (mut skipped_empty_mask, mut skipped_unmasked) = (0, 0);
    for e in &manifest.tuples {
        if !e.state.masked {
            skipped_unmasked += 1;
            continue;
        }
        if e.mask_empty {
            skipped_empty_mask += 1;
            continue;
        }
        let split = e
            .split
            .ok_or_else(|| Error::config(format!("tuple {} has no split", e.id)))?;
        let dir = format!("tuples/{}", e.id);
        splits.get_mut(&split).expect("all splits present").push(ExportEntry {
            id: e.id.clone(),
            source_id: e.source_id.clone(),
            aug_index: e.aug_index,
            color: format!("{dir}/{COLOR_LQ}"),
            depth_input: format!("{dir}/{DEPTH_LQ}"),
            depth_target: format!("{dir}/{DEPTH_HQ}"),
            mask: format!("{dir}/{MASK}"),
        });
    }
    Ok(ExportListing {
        format_version: FORMAT_VERSION,
        intrinsics_lq: manifest.intrinsics.lq.clone(),
        depth_units: "stored units; multiply by intrinsics d_scale for meters".into(),
        splits,
        skipped_empty_mask,
        skipped_unmasked,
    })
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::raster::{
    read_color_png, read_dfd, read_mask_png, write_color_png, write_dfd, write_mask_png,
};
use super::FORMAT_VERSION;
use crate::error::{Error, Result};
use crate::geometry::{ColorFrame, DepthFrame, Mask, RigidTransform};

pub const COLOR_LQ: &str = "color_lq.png";
pub const DEPTH_LQ: &str = "depth_lq.dfd";
pub const COLOR_HQ: &str = "color_hq.png";
pub const DEPTH_HQ: &str = "depth_hq.dfd";
pub const MASK: &str = "mask.png";
pub const META: &str = "meta.json";

/// Processing stage flags. `masked` implies `aligned`; `augmented` implies `masked`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleState {
    pub aligned: bool,
    pub masked: bool,
    pub augmented: bool,
}

impl TupleState {
    pub fn is_consistent(&self) -> bool {
        (!self.masked || self.aligned) && (!self.augmented || self.masked)
    }

    pub fn label(&self) -> &'static str {
        match (self.aligned, self.masked, self.augmented) {
            (_, _, true) => "augmented",
            (_, true, _) => "masked",
            (true, _, _) => "aligned",
            _ => "raw",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: String,
    /// 0 for the captured tuple, 1..=K for its augmented copies.
    pub aug_index: u32,
    pub t_rand: Option<RigidTransform>,
}

impl Provenance {
    pub fn original(source_id: impl Into<String>) -> Self {
        Self {
            source_id: source_id.into(),
            aug_index: 0,
            t_rand: None,
        }
    }
}

/// One paired capture. Once aligned, the HQ frames live on the LQ grid.
#[derive(Debug, Clone)]
pub struct FrameTuple {
    pub id: String,
    pub color_lq: ColorFrame,
    pub depth_lq: DepthFrame,
    pub color_hq: ColorFrame,
    pub depth_hq: DepthFrame,
    pub mask: Option<Mask>,
    pub state: TupleState,
    /// Set when masking produced no object pixels.
    pub mask_empty: bool,
    pub provenance: Provenance,
}

impl FrameTuple {
    pub fn raw(
        id: impl Into<String>,
        color_lq: ColorFrame,
        depth_lq: DepthFrame,
        color_hq: ColorFrame,
        depth_hq: DepthFrame,
    ) -> Result<Self> {
        let id = id.into();
        validate_id(&id)?;
        if color_lq.dims() != depth_lq.dims() || color_hq.dims() != depth_hq.dims() {
            return Err(Error::config(format!(
                "tuple {id}: color and depth sizes differ within a camera"
            )));
        }
        Ok(Self {
            provenance: Provenance::original(id.clone()),
            id,
            color_lq,
            depth_lq,
            color_hq,
            depth_hq,
            mask: None,
            state: TupleState::default(),
            mask_empty: false,
        })
    }

    /// Bitwise equality of every field.
    pub fn bit_eq(&self, other: &FrameTuple) -> bool {
        self.id == other.id
            && self.color_lq == other.color_lq
            && self.depth_lq.bit_eq(&other.depth_lq)
            && self.color_hq == other.color_hq
            && self.depth_hq.bit_eq(&other.depth_hq)
            && self.mask == other.mask
            && self.state == other.state
            && self.mask_empty == other.mask_empty
            && self.provenance == other.provenance
    }

    pub fn files(&self) -> Vec<&'static str> {
        let mut files = vec![COLOR_LQ, DEPTH_LQ, COLOR_HQ, DEPTH_HQ];
        if self.mask.is_some() {
            files.push(MASK);
        }
        files.push(META);
        files
    }
}

pub(crate) fn validate_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !id.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(Error::config(format!(
            "tuple id {id:?} must be non-empty ASCII alphanumerics, '_', '-' or '.'"
        )))
    }
}

#[derive(Serialize, Deserialize)]
struct TupleMeta {
    format_version: u32,
    id: String,
    state: TupleState,
    mask_empty: bool,
    has_mask: bool,
    provenance: Provenance,
}

pub fn tuple_dir(root: &Path, id: &str) -> PathBuf {
    root.join("tuples").join(id)
}

/// Writes all tuple files into a scratch directory, then swaps it in.
pub fn write_tuple(root: &Path, tuple: &FrameTuple) -> Result<()> {
    validate_id(&tuple.id)?;
    if !tuple.state.is_consistent() {
        return Err(Error::config(format!(
            "tuple {} has inconsistent state {:?}",
            tuple.id, tuple.state
        )));
    }
    let final_dir = tuple_dir(root, &tuple.id);
    let parent = final_dir.parent().expect("tuples dir");
    std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    let scratch = parent.join(format!(".{}.partial", tuple.id));
    if scratch.exists() {
        std::fs::remove_dir_all(&scratch).map_err(|e| Error::io(&scratch, e))?;
    }
    std::fs::create_dir(&scratch).map_err(|e| Error::io(&scratch, e))?;

    write_color_png(&scratch.join(COLOR_LQ), &tuple.color_lq)?;
    write_dfd(&scratch.join(DEPTH_LQ), &tuple.depth_lq)?;
    write_color_png(&scratch.join(COLOR_HQ), &tuple.color_hq)?;
    write_dfd(&scratch.join(DEPTH_HQ), &tuple.depth_hq)?;
    if let Some(mask) = &tuple.mask {
        write_mask_png(&scratch.join(MASK), mask)?;
    }
    let meta = TupleMeta {
        format_version: FORMAT_VERSION,
        id: tuple.id.clone(),
        state: tuple.state,
        mask_empty: tuple.mask_empty,
        has_mask: tuple.mask.is_some(),
        provenance: tuple.provenance.clone(),
    };
    let meta_path = scratch.join(META);
    let text = serde_json::to_string_pretty(&meta).expect("meta serialize") + "\n";
    std::fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;

    if final_dir.exists() {
        std::fs::remove_dir_all(&final_dir).map_err(|e| Error::io(&final_dir, e))?;
    }
    std::fs::rename(&scratch, &final_dir).map_err(|e| Error::io(&final_dir, e))
}

pub fn read_tuple(root: &Path, id: &str) -> Result<FrameTuple> {
    validate_id(id)?;
    let dir = tuple_dir(root, id);
    let meta_path = dir.join(META);
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::integrity(&meta_path, e))?;
    let meta: TupleMeta =
        serde_json::from_str(&text).map_err(|e| Error::integrity(&meta_path, e))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Migration {
            found: meta.format_version,
            expected: FORMAT_VERSION,
        });
    }
    if meta.id != id {
        return Err(Error::integrity(
            &meta_path,
            format!("meta names tuple {:?}, expected {id:?}", meta.id),
        ));
    }
    let mask = if meta.has_mask {
        Some(read_mask_png(&dir.join(MASK))?)
    } else {
        None
    };
    let tuple = FrameTuple {
        id: meta.id,
        color_lq: read_color_png(&dir.join(COLOR_LQ))?,
        depth_lq: read_dfd(&dir.join(DEPTH_LQ))?,
        color_hq: read_color_png(&dir.join(COLOR_HQ))?,
        depth_hq: read_dfd(&dir.join(DEPTH_HQ))?,
        mask,
        state: meta.state,
        mask_empty: meta.mask_empty,
        provenance: meta.provenance,
    };
    if tuple.color_lq.dims() != tuple.depth_lq.dims() {
        return Err(Error::integrity(&dir, "LQ color and depth sizes differ"));
    }
    if tuple.state.aligned && tuple.depth_hq.dims() != tuple.depth_lq.dims() {
        return Err(Error::integrity(&dir, "aligned HQ frames are not on the LQ grid"));
    }
    if let Some(m) = &tuple.mask {
        if m.dims() != tuple.depth_lq.dims() {
            return Err(Error::integrity(dir.join(MASK), "mask size differs from LQ frames"));
        }
    }
    Ok(tuple)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_path_safe() {
        assert!(validate_id("t0001_a03").is_ok());
        assert!(validate_id("").is_err());
        assert!(validate_id("../x").is_err());
        assert!(validate_id(".hidden").is_err());
        assert!(validate_id("a/b").is_err());
    }

    #[test]
    fn state_consistency() {
        let s = TupleState {
            aligned: false,
            masked: true,
            augmented: false,
        };
        assert!(!s.is_consistent());
        assert_eq!(TupleState::default().label(), "raw");
    }
}

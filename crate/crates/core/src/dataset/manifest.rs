use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::split::{Split, SplitFractions};
use super::tuple::{self, FrameTuple, TupleState};
use super::FORMAT_VERSION;
use crate::error::{Error, Result};
use crate::geometry::Intrinsics;

pub const MANIFEST: &str = "manifest.json";
pub const INTRINSICS_LQ: &str = "intrinsics/lq.json";
pub const INTRINSICS_HQ: &str = "intrinsics/hq.json";
pub const CALIBRATION: &str = "calibration.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub source_id: String,
    pub aug_index: u32,
    pub state: TupleState,
    pub mask_empty: bool,
    /// Paths relative to the dataset root.
    pub files: Vec<String>,
    pub split: Option<Split>,
}

impl ManifestEntry {
    pub fn for_tuple(tuple: &FrameTuple) -> Self {
        let dir = format!("tuples/{}", tuple.id);
        Self {
            id: tuple.id.clone(),
            source_id: tuple.provenance.source_id.clone(),
            aug_index: tuple.provenance.aug_index,
            state: tuple.state,
            mask_empty: tuple.mask_empty,
            files: tuple.files().iter().map(|f| format!("{dir}/{f}")).collect(),
            split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicsRefs {
    pub lq: String,
    pub hq: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub fractions: SplitFractions,
    pub seed: u64,
}

/// Versioned index of a dataset directory. Entries are kept sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub n: usize,
    pub intrinsics: IntrinsicsRefs,
    pub calibration: Option<String>,
    pub config_hash: Option<String>,
    pub split: Option<SplitInfo>,
    pub tuples: Vec<ManifestEntry>,
}

impl Default for DatasetManifest {
    fn default() -> Self {
        Self {
            format_version: FORMAT_VERSION,
            n: 0,
            intrinsics: IntrinsicsRefs {
                lq: INTRINSICS_LQ.into(),
                hq: INTRINSICS_HQ.into(),
            },
            calibration: None,
            config_hash: None,
            split: None,
            tuples: Vec::new(),
        }
    }
}

impl DatasetManifest {
    pub fn entry(&self, id: &str) -> Option<&ManifestEntry> {
        self.tuples
            .binary_search_by(|e| e.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.tuples[i])
    }

    /// Inserts or replaces the entry for `entry.id`, keeping the split assignment
    /// of a replaced entry.
    pub fn upsert(&mut self, mut entry: ManifestEntry) {
        match self.tuples.binary_search_by(|e| e.id.cmp(&entry.id)) {
            Ok(i) => {
                if entry.split.is_none() {
                    entry.split = self.tuples[i].split;
                }
                self.tuples[i] = entry;
            }
            Err(i) => self.tuples.insert(i, entry),
        }
        self.n = self.tuples.len();
    }

    pub fn remove(&mut self, id: &str) -> Option<ManifestEntry> {
        let i = self.tuples.binary_search_by(|e| e.id.as_str().cmp(id)).ok()?;
        let e = self.tuples.remove(i);
        self.n = self.tuples.len();
        Some(e)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.tuples.iter().map(|e| e.id.as_str())
    }

    /// Structural checks that need no filesystem access.
    pub fn validate_structure(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Migration {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let mut seen = BTreeSet::new();
        for e in &self.tuples {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::config(format!("duplicate tuple id {:?}", e.id)));
            }
            tuple::validate_id(&e.id)?;
            if !e.state.is_consistent() {
                return Err(Error::config(format!("tuple {} has inconsistent state", e.id)));
            }
        }
        if self.n != self.tuples.len() {
            return Err(Error::config(format!(
                "manifest declares n = {} but lists {} tuples",
                self.n,
                self.tuples.len()
            )));
        }
        if let Some(split) = &self.split {
            split.fractions.validate()?;
        }
        Ok(())
    }
}

/// A dataset directory together with its manifest.
#[derive(Debug, Clone)]
pub struct Dataset {
    root: PathBuf,
    pub manifest: DatasetManifest,
}

impl Dataset {
    /// Creates the directory skeleton and writes both intrinsics files.
    pub fn create(root: &Path, intr_lq: &Intrinsics, intr_hq: &Intrinsics) -> Result<Self> {
        let intr_dir = root.join("intrinsics");
        std::fs::create_dir_all(&intr_dir).map_err(|e| Error::io(&intr_dir, e))?;
        std::fs::create_dir_all(root.join("tuples")).map_err(|e| Error::io(root, e))?;
        intr_lq.save(&root.join(INTRINSICS_LQ))?;
        intr_hq.save(&root.join(INTRINSICS_HQ))?;
        let ds = Self {
            root: root.to_path_buf(),
            manifest: DatasetManifest::default(),
        };
        ds.save_manifest()?;
        Ok(ds)
    }

    pub fn open(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::integrity(&path, e))?;
        let raw: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::integrity(&path, e))?;
        let version = raw.get("format_version").and_then(|v| v.as_u64());
        match version {
            Some(v) if v == FORMAT_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::Migration {
                    found: v as u32,
                    expected: FORMAT_VERSION,
                })
            }
            None => return Err(Error::integrity(&path, "missing format_version")),
        }
        let manifest: DatasetManifest =
            serde_json::from_value(raw).map_err(|e| Error::integrity(&path, e))?;
        // A malformed manifest on disk is a data problem, not a parameter problem.
        manifest.validate_structure().map_err(|e| match e {
            Error::Config(reason) => Error::integrity(&path, reason),
            other => other,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn save_manifest(&self) -> Result<()> {
        self.manifest.validate_structure()?;
        let path = self.root.join(MANIFEST);
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serialize") + "\n";
        let tmp = self.root.join(".manifest.json.partial");
        std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    pub fn intrinsics_lq(&self) -> Result<Intrinsics> {
        Intrinsics::load(&self.root.join(&self.manifest.intrinsics.lq))
    }

    pub fn intrinsics_hq(&self) -> Result<Intrinsics> {
        Intrinsics::load(&self.root.join(&self.manifest.intrinsics.hq))
    }

    /// Writes the tuple files and records the tuple in the in-memory manifest.
    pub fn write_tuple(&mut self, tuple: &FrameTuple) -> Result<()> {
        tuple::write_tuple(&self.root, tuple)?;
        self.manifest.upsert(ManifestEntry::for_tuple(tuple));
        Ok(())
    }

    pub fn read_tuple(&self, id: &str) -> Result<FrameTuple> {
        let entry = self
            .manifest
            .entry(id)
            .ok_or_else(|| Error::config(format!("unknown tuple id {id:?}")))?;
        let t = tuple::read_tuple(&self.root, id)?;
        if t.state != entry.state {
            return Err(Error::integrity(
                tuple::tuple_dir(&self.root, id),
                format!(
                    "stored state {} disagrees with manifest state {}",
                    t.state.label(),
                    entry.state.label()
                ),
            ));
        }
        Ok(t)
    }

    /// Removes a tuple from disk and from the manifest.
    pub fn delete_tuple(&mut self, id: &str) -> Result<()> {
        let dir = tuple::tuple_dir(&self.root, id);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        self.manifest.remove(id);
        Ok(())
    }

    /// Full validation: manifest structure plus existence of every referenced file.
    pub fn validate(&self) -> Result<()> {
        self.manifest.validate_structure()?;
        let mut referenced = vec![
            self.manifest.intrinsics.lq.clone(),
            self.manifest.intrinsics.hq.clone(),
        ];
        referenced.extend(self.manifest.calibration.iter().cloned());
        for e in &self.manifest.tuples {
            referenced.extend(e.files.iter().cloned());
        }
        for rel in referenced {
            let p = self.root.join(&rel);
            if !p.is_file() {
                return Err(Error::integrity(p, "referenced file is missing"));
            }
        }
        Ok(())
    }
}

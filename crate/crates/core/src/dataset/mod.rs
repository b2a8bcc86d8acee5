//! Dataset directory model: tuple storage, manifest, splits and trainer export.
//!
//! ```text
//! <root>/manifest.json
//! <root>/intrinsics/{lq,hq}.json
//! <root>/calibration.json
//! <root>/tuples/<id>/{color_lq.png,depth_lq.dfd,color_hq.png,depth_hq.dfd,mask.png,meta.json}
//! ```

mod export;
mod manifest;
pub mod raster;
mod split;
mod tuple;

pub use export::{export_listing, ExportEntry, ExportListing, EXPORT};
pub use manifest::{
    Dataset, DatasetManifest, IntrinsicsRefs, ManifestEntry, SplitInfo, CALIBRATION,
    INTRINSICS_HQ, INTRINSICS_LQ, MANIFEST,
};
pub use split::{split_counts, split_dataset, Split, SplitFractions};
pub use tuple::{
    read_tuple, tuple_dir, write_tuple, FrameTuple, Provenance, TupleState, COLOR_HQ, COLOR_LQ,
    DEPTH_HQ, DEPTH_LQ, MASK, META,
};

pub const FORMAT_VERSION: u32 = 1;

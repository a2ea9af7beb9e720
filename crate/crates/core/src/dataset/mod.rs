//! On-disk formats: meshes, point sets, depth images, JSON manifests and
//! report files.

mod formats;
mod manifest;
mod report;

use std::path::Path;

pub use formats::{
    read_depth_png, read_mask_png, read_mesh, read_points, write_depth_png, write_mask_png, write_mesh, write_points,
};
pub use manifest::{
    load_ground_truth, load_ground_truth_with, load_predictions, manifest_path, write_ground_truth, write_predictions,
    GroundTruthSample, Hypothesis, Prediction, PredictionSet, SequenceFrame, SequenceManifest, GROUND_TRUTH_FILE,
    PREDICTIONS_FILE,
};
pub use report::{
    category_columns, write_best_worst_csv, write_json_report, write_precision_csv, write_records_csv, write_sweep_csv,
    write_table1, write_table2, MethodReport,
};

use crate::error::Result;
use crate::geometry::Category;

/// Converts a third-party dataset layout into ground-truth samples. The
/// built-in [`NativeAdapter`] reads this crate's manifest; adapters for
/// other layouts (for example per-scene pose files with a shared mesh
/// directory) implement the same trait.
pub trait DatasetAdapter {
    fn name(&self) -> &str;

    fn load(&self, root: &Path, categories: &[Category]) -> Result<Vec<GroundTruthSample>>;
}

/// Reads `ground_truth.json`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NativeAdapter;

impl DatasetAdapter for NativeAdapter {
    fn name(&self) -> &str {
        "native"
    }

    fn load(&self, root: &Path, categories: &[Category]) -> Result<Vec<GroundTruthSample>> {
        load_ground_truth_with(root, categories)
    }
}

//! JSON manifests for ground truth, predictions and annotation sequences.
//!
//! Relative file references resolve against the directory holding the
//! manifest. Poses are 16 numbers, a row-major 4×4 matrix in meters.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::formats::{read_depth_png, read_mask_png, read_mesh, read_points};
use crate::annotation::{AnnotationInput, AnnotationParams, DepthFrame, Intrinsics};
use crate::box_metrics::Box3;
use crate::error::{Error, Result};
use crate::geometry::{Category, CategoryTable, RigidTransform, TriangleMesh};
use crate::shape_metrics::Shape;

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const PREDICTIONS_FILE: &str = "predictions.json";

/// A manifest given either as the file itself or as its directory.
pub fn manifest_path(root: &Path, default_name: &str) -> PathBuf {
    if root.is_dir() {
        root.join(default_name)
    } else {
        root.to_path_buf()
    }
}

fn base_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Field accessor that names the sample and field in every error.
struct Entry<'a> {
    id: String,
    obj: &'a Map<String, Value>,
}

impl<'a> Entry<'a> {
    fn new(value: &'a Value, index: usize) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::manifest(format!("#{index}"), "", "entry is not an object"))?;
        let id = match obj.get("sample_id") {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(_) => return Err(Error::manifest(format!("#{index}"), "sample_id", "must be a non-empty string")),
            None => return Err(Error::manifest(format!("#{index}"), "sample_id", "missing")),
        };
        Ok(Self { id, obj })
    }

    fn optional<T: DeserializeOwned>(&self, field: &str) -> Result<Option<T>> {
        match self.obj.get(field) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => T::deserialize(v)
                .map(Some)
                .map_err(|e| Error::manifest(&self.id, field, e.to_string())),
        }
    }

    fn required<T: DeserializeOwned>(&self, field: &str) -> Result<T> {
        self.optional(field)?
            .ok_or_else(|| Error::manifest(&self.id, field, "missing"))
    }

    fn pose(&self, field: &str) -> Result<RigidTransform> {
        let values: Vec<f64> = self.required(field)?;
        RigidTransform::from_row_major(&values).map_err(|e| Error::manifest(&self.id, field, e.to_string()))
    }

    fn file(&self, field: &str, base: &Path) -> Result<Option<(PathBuf, PathBuf)>> {
        let Some(rel) = self.optional::<PathBuf>(field)? else {
            return Ok(None);
        };
        let abs = base.join(&rel);
        if !abs.is_file() {
            return Err(Error::manifest(
                &self.id,
                field,
                format!("file {} does not exist", abs.display()),
            ));
        }
        Ok(Some((rel, abs)))
    }

    fn wrap(&self, field: &str, e: Error) -> Error {
        Error::manifest(&self.id, field, e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthSample {
    pub sample_id: String,
    pub category: Category,
    /// Mesh reference as written in the manifest.
    pub mesh_path: PathBuf,
    pub mesh: TriangleMesh,
    /// Object → world (camera) pose.
    pub pose: RigidTransform,
    pub depth: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub intrinsics: Option<Intrinsics>,
}

#[derive(Serialize)]
struct GroundTruthEntryOut<'a> {
    sample_id: &'a str,
    category: &'a str,
    mesh: &'a Path,
    pose: [f64; 16],
    #[serde(skip_serializing_if = "Option::is_none")]
    depth: Option<&'a Path>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mask: Option<&'a Path>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intrinsics: Option<&'a Intrinsics>,
}

#[derive(Serialize)]
struct GroundTruthOut<'a> {
    categories: Vec<&'a Category>,
    samples: Vec<GroundTruthEntryOut<'a>>,
}

fn categories_from(doc: &Value, path: &Path, overrides: &[Category]) -> Result<CategoryTable> {
    let mut table = CategoryTable::default();
    if let Some(cats) = doc.get("categories") {
        let cats: Vec<Category> =
            Vec::deserialize(cats).map_err(|e| Error::format(path, format!("categories: {e}")))?;
        for c in cats {
            table.insert(c).map_err(|e| Error::format(path, e.to_string()))?;
        }
    }
    for c in overrides {
        table.insert(c.clone())?;
    }
    Ok(table)
}

fn entries<'a>(doc: &'a Value, path: &Path, key: &str) -> Result<&'a Vec<Value>> {
    doc.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::format(path, format!("top-level `{key}` array is missing")))
}

/// Loads and validates the ground-truth manifest under `root` (a directory
/// holding `ground_truth.json`, or the manifest file). Samples come back
/// sorted by `sample_id`.
pub fn load_ground_truth(root: &Path) -> Result<Vec<GroundTruthSample>> {
    load_ground_truth_with(root, &[])
}

/// [`load_ground_truth`] with category settings that take precedence over
/// the built-ins and over the manifest's own `categories` list.
pub fn load_ground_truth_with(root: &Path, overrides: &[Category]) -> Result<Vec<GroundTruthSample>> {
    let path = manifest_path(root, GROUND_TRUTH_FILE);
    let doc = read_json(&path)?;
    let base = base_dir(&path);
    let table = categories_from(&doc, &path, overrides)?;
    let raw = entries(&doc, &path, "samples")?;

    let loaded: Vec<Result<GroundTruthSample>> = raw
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let e = Entry::new(v, i)?;
            let category: String = e.required("category")?;
            let pose = e.pose("pose")?;
            let (mesh_path, mesh_abs) = e
                .file("mesh", &base)?
                .ok_or_else(|| Error::manifest(&e.id, "mesh", "missing"))?;
            let mesh = read_mesh(&mesh_abs).map_err(|err| e.wrap("mesh", err))?;
            let intrinsics: Option<Intrinsics> = e.optional("intrinsics")?;
            if let Some(k) = &intrinsics {
                k.validate().map_err(|err| e.wrap("intrinsics", err))?;
            }
            Ok(GroundTruthSample {
                sample_id: e.id.clone(),
                category: table.get(&category),
                mesh_path,
                mesh,
                pose,
                depth: e.file("depth", &base)?.map(|f| f.0),
                mask: e.file("mask", &base)?.map(|f| f.0),
                intrinsics,
            })
        })
        .collect();
    let mut samples = loaded.into_iter().collect::<Result<Vec<_>>>()?;
    samples.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    if let Some(w) = samples.windows(2).find(|w| w[0].sample_id == w[1].sample_id) {
        return Err(Error::DuplicateSample(w[0].sample_id.clone()));
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(samples)
}

/// Writes a ground-truth manifest. Mesh, depth and mask references are
/// written as stored, so they must be valid relative to `path`'s directory.
pub fn write_ground_truth(path: &Path, samples: &[GroundTruthSample]) -> Result<()> {
    let mut seen = BTreeSet::new();
    let mut categories = Vec::new();
    for s in samples {
        if seen.insert(s.category.name.as_str()) {
            categories.push(&s.category);
        }
    }
    categories.sort_by(|a, b| a.name.cmp(&b.name));
    let doc = GroundTruthOut {
        categories,
        samples: samples
            .iter()
            .map(|s| GroundTruthEntryOut {
                sample_id: &s.sample_id,
                category: &s.category.name,
                mesh: &s.mesh_path,
                pose: s.pose.to_row_major(),
                depth: s.depth.as_deref(),
                mask: s.mask.as_deref(),
                intrinsics: s.intrinsics.as_ref(),
            })
            .collect(),
    };
    write_json(path, &doc)
}

/// One pose and shape estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub pose: RigidTransform,
    pub shape: Shape,
    pub shape_path: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub sample_id: String,
    /// At least one; the first is the method's primary answer.
    pub hypotheses: Vec<Hypothesis>,
}

/// A method's predictions joined to the ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSet {
    pub method: String,
    /// In ground-truth order; `None` where the method has no prediction.
    pub predictions: Vec<Option<Prediction>>,
    /// Ground-truth samples without a prediction.
    pub missing: Vec<String>,
}

impl PredictionSet {
    pub fn max_hypotheses(&self) -> usize {
        self.predictions
            .iter()
            .flatten()
            .map(|p| p.hypotheses.len())
            .max()
            .unwrap_or(0)
    }
}

fn hypothesis(e: &Entry<'_>, obj: &Map<String, Value>, field_prefix: &str, base: &Path) -> Result<Hypothesis> {
    let sub = Entry { id: e.id.clone(), obj };
    let name = |f: &str| format!("{field_prefix}{f}");
    let values: Vec<f64> = sub.required("pose").map_err(|_| Error::manifest(&e.id, name("pose"), "missing or malformed"))?;
    let pose = RigidTransform::from_row_major(&values).map_err(|err| Error::manifest(&e.id, name("pose"), err.to_string()))?;
    let mesh = sub.file("mesh", base).map_err(|err| relabel(err, &name("mesh")))?;
    let points = sub.file("points", base).map_err(|err| relabel(err, &name("points")))?;
    let (shape, shape_path) = match (mesh, points) {
        (Some((rel, abs)), None) => (Shape::Mesh(read_mesh(&abs).map_err(|err| sub.wrap(&name("mesh"), err))?), rel),
        (None, Some((rel, abs))) => (
            Shape::Points(read_points(&abs).map_err(|err| sub.wrap(&name("points"), err))?),
            rel,
        ),
        (Some(_), Some(_)) => return Err(Error::manifest(&e.id, name("mesh"), "give either `mesh` or `points`, not both")),
        (None, None) => return Err(Error::manifest(&e.id, name("mesh"), "missing (or `points`)")),
    };
    Ok(Hypothesis { pose, shape, shape_path })
}

fn relabel(err: Error, field: &str) -> Error {
    match err {
        Error::Manifest { sample_id, message, .. } => Error::Manifest {
            sample_id,
            field: field.to_string(),
            message,
        },
        other => other,
    }
}

/// Loads `predictions.json` under `root` and joins it to `gt`. Every
/// ground-truth sample without a prediction is listed in `missing`.
pub fn load_predictions(root: &Path, gt: &[GroundTruthSample]) -> Result<PredictionSet> {
    let path = manifest_path(root, PREDICTIONS_FILE);
    let doc = read_json(&path)?;
    let base = base_dir(&path);
    let method = match doc.get("method") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => return Err(Error::format(&path, "`method` must be a non-empty string")),
        None => base
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("method")
            .to_string(),
    };
    let raw = entries(&doc, &path, "predictions")?;
    let loaded: Vec<Result<Prediction>> = raw
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let e = Entry::new(v, i)?;
            let hypotheses = match e.obj.get("hypotheses") {
                Some(Value::Array(list)) => {
                    if e.obj.contains_key("pose") {
                        return Err(Error::manifest(&e.id, "pose", "give either `pose` or `hypotheses`, not both"));
                    }
                    if list.is_empty() {
                        return Err(Error::EmptyHypotheses(e.id.clone()));
                    }
                    list.iter()
                        .enumerate()
                        .map(|(k, h)| {
                            let obj = h
                                .as_object()
                                .ok_or_else(|| Error::manifest(&e.id, format!("hypotheses[{k}]"), "not an object"))?;
                            hypothesis(&e, obj, &format!("hypotheses[{k}]."), &base)
                        })
                        .collect::<Result<Vec<_>>>()?
                }
                Some(_) => return Err(Error::manifest(&e.id, "hypotheses", "must be an array")),
                None => vec![hypothesis(&e, e.obj, "", &base)?],
            };
            Ok(Prediction {
                sample_id: e.id.clone(),
                hypotheses,
            })
        })
        .collect();
    let mut by_id = std::collections::BTreeMap::new();
    for p in loaded {
        let p = p?;
        if by_id.contains_key(&p.sample_id) {
            return Err(Error::DuplicateSample(p.sample_id));
        }
        by_id.insert(p.sample_id.clone(), p);
    }
    let mut predictions = Vec::with_capacity(gt.len());
    let mut missing = Vec::new();
    for s in gt {
        let p = by_id.remove(&s.sample_id);
        if p.is_none() {
            missing.push(s.sample_id.clone());
        }
        predictions.push(p);
    }
    if let Some(extra) = by_id.into_keys().next() {
        return Err(Error::UnknownSample(extra));
    }
    if !missing.is_empty() {
        log::warn!("{method}: {} sample(s) have no prediction", missing.len());
    }
    Ok(PredictionSet {
        method,
        predictions,
        missing,
    })
}

#[derive(Serialize)]
struct PredictionEntryOut<'a> {
    sample_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pose: Option<[f64; 16]>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    shape: Option<ShapeRef<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hypotheses: Option<Vec<HypothesisOut<'a>>>,
}

#[derive(Serialize)]
enum ShapeRef<'a> {
    #[serde(rename = "mesh")]
    Mesh(&'a Path),
    #[serde(rename = "points")]
    Points(&'a Path),
}

#[derive(Serialize)]
struct HypothesisOut<'a> {
    pose: [f64; 16],
    #[serde(flatten)]
    shape: ShapeRef<'a>,
}

fn shape_ref(h: &Hypothesis) -> ShapeRef<'_> {
    match h.shape {
        Shape::Mesh(_) => ShapeRef::Mesh(&h.shape_path),
        Shape::Points(_) => ShapeRef::Points(&h.shape_path),
    }
}

/// Writes a predictions manifest (shape references as stored).
pub fn write_predictions(path: &Path, method: &str, predictions: &[Prediction]) -> Result<()> {
    let entries: Vec<PredictionEntryOut<'_>> = predictions
        .iter()
        .map(|p| match p.hypotheses.as_slice() {
            [h] => PredictionEntryOut {
                sample_id: &p.sample_id,
                pose: Some(h.pose.to_row_major()),
                shape: Some(shape_ref(h)),
                hypotheses: None,
            },
            hs => PredictionEntryOut {
                sample_id: &p.sample_id,
                pose: None,
                shape: None,
                hypotheses: Some(
                    hs.iter()
                        .map(|h| HypothesisOut {
                            pose: h.pose.to_row_major(),
                            shape: shape_ref(h),
                        })
                        .collect(),
                ),
            },
        })
        .collect();
    write_json(
        path,
        &serde_json::json!({ "method": method, "predictions": entries }),
    )
}

/// One frame of an annotation sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceFrame {
    pub depth: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
    /// World → camera.
    pub camera_pose: [f64; 16],
    /// Object → camera seed for this frame; defaults to
    /// `camera_pose · object_pose`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_pose: Option<[f64; 16]>,
}

/// Input of the annotation pipeline for one object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub sample_id: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry_axis: Option<[f64; 3]>,
    pub intrinsics: Intrinsics,
    /// Seed box in the object frame.
    #[serde(rename = "box")]
    pub seed_box: Box3,
    /// Object → world seed pose.
    pub object_pose: [f64; 16],
    pub frames: Vec<SequenceFrame>,
    #[serde(default)]
    pub params: AnnotationParams,
}

impl SequenceManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let doc = read_json(path)?;
        serde_json::from_value(doc).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn category(&self, table: &CategoryTable) -> Result<Category> {
        match self.symmetry_axis {
            Some(axis) => Category::symmetric(&self.category, axis.into()),
            None => Ok(table.get(&self.category)),
        }
    }

    /// Reads every frame's depth (and mask) relative to `base` and builds
    /// the pipeline input.
    pub fn load_input(&self, base: &Path, table: &CategoryTable) -> Result<AnnotationInput> {
        let pose_err = |field: String| move |e: Error| Error::manifest(&self.sample_id, field.clone(), e.to_string());
        let object_pose = RigidTransform::from_row_major(&self.object_pose).map_err(pose_err("object_pose".into()))?;
        let loaded: Vec<Result<(DepthFrame, RigidTransform)>> = self
            .frames
            .par_iter()
            .enumerate()
            .map(|(i, f)| {
                let field = |name: &str| format!("frames[{i}].{name}");
                let camera_pose = RigidTransform::from_row_major(&f.camera_pose).map_err(pose_err(field("camera_pose")))?;
                let seed = match &f.seed_pose {
                    Some(p) => RigidTransform::from_row_major(p).map_err(pose_err(field("seed_pose")))?,
                    None => camera_pose * object_pose,
                };
                let depth = read_depth_png(&base.join(&f.depth)).map_err(pose_err(field("depth")))?;
                let mask = match &f.mask {
                    Some(m) => {
                        let (w, h, mask) = read_mask_png(&base.join(m)).map_err(pose_err(field("mask")))?;
                        if (w, h) != (depth.width(), depth.height()) {
                            return Err(Error::manifest(&self.sample_id, field("mask"), "size differs from depth"));
                        }
                        Some(mask)
                    }
                    None => None,
                };
                let frame = DepthFrame::new(depth, self.intrinsics, mask, camera_pose).map_err(pose_err(field("depth")))?;
                Ok((frame, seed))
            })
            .collect();
        let (frames, seed_poses) = loaded.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
        Ok(AnnotationInput {
            frames,
            seed_poses,
            seed_box: self.seed_box,
            category: self.category(table)?,
        })
    }
}

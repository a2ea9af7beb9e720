//! Per-sample correctness, dataset precision, threshold sweeps and
//! best/worst-of-N hypothesis precision.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Category;
use crate::shape_metrics::{Frame, DEFAULT_FSCORE_DELTA};

/// Conjunction of thresholds; a record is correct when every present
/// threshold holds. Comparisons are inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    /// Maximum rotation error, degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rotation: Option<f64>,
    /// Maximum translation error, meters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_translation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_iou: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_fscore: Option<f64>,
    /// Distance threshold of the F-score, meters.
    #[serde(default = "default_delta")]
    pub fscore_delta: f64,
}

fn default_delta() -> f64 {
    DEFAULT_FSCORE_DELTA
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        Self {
            max_rotation: None,
            max_translation: None,
            min_iou: None,
            min_fscore: None,
            fscore_delta: DEFAULT_FSCORE_DELTA,
        }
    }
}

/// Name of the preset holding the four REAL275 table rows.
pub const REAL275_SUITE: &str = "real275-suite";

impl ThresholdSpec {
    /// Pose-only spec: rotation in degrees, translation in meters.
    pub fn pose(max_rotation_deg: f64, max_translation_m: f64) -> Self {
        Self {
            max_rotation: Some(max_rotation_deg),
            max_translation: Some(max_translation_m),
            ..Self::default()
        }
    }

    pub fn with_fscore(mut self, min_fscore: f64) -> Self {
        self.min_fscore = Some(min_fscore);
        self
    }

    pub fn with_iou(mut self, min_iou: f64) -> Self {
        self.min_iou = Some(min_iou);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidThreshold(format!("{what} = {v}")));
        if self.max_rotation.is_none()
            && self.max_translation.is_none()
            && self.min_iou.is_none()
            && self.min_fscore.is_none()
        {
            return Err(Error::InvalidThreshold("no threshold given".into()));
        }
        if let Some(r) = self.max_rotation {
            if !(0.0..=180.0).contains(&r) {
                return bad("max_rotation", r);
            }
        }
        if let Some(t) = self.max_translation {
            if !(t >= 0.0 && t.is_finite()) {
                return bad("max_translation", t);
            }
        }
        if let Some(i) = self.min_iou {
            if !(0.0..=1.0).contains(&i) {
                return bad("min_iou", i);
            }
        }
        if let Some(f) = self.min_fscore {
            if !(0.0..=1.0).contains(&f) {
                return bad("min_fscore", f);
            }
        }
        if !(self.fscore_delta > 0.0 && self.fscore_delta.is_finite()) {
            return bad("fscore_delta", self.fscore_delta);
        }
        Ok(())
    }

    /// Every threshold of `self` and `other`.
    pub fn and(&self, other: &ThresholdSpec) -> ThresholdSpec {
        let tighter_max = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        let tighter_min = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        };
        ThresholdSpec {
            max_rotation: tighter_max(self.max_rotation, other.max_rotation),
            max_translation: tighter_max(self.max_translation, other.max_translation),
            min_iou: tighter_min(self.min_iou, other.min_iou),
            min_fscore: tighter_min(self.min_fscore, other.min_fscore),
            fscore_delta: self.fscore_delta,
        }
    }

    /// Row label in the style of the published tables, e.g. `10°,2cm,0.6`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if let Some(r) = self.max_rotation {
            parts.push(format!("{}°", r));
        }
        if let Some(t) = self.max_translation {
            parts.push(format!("{}cm", round_label(t * 100.0)));
        }
        if let Some(i) = self.min_iou {
            parts.push(format!("IoU{}", i));
        }
        if let Some(f) = self.min_fscore {
            if self.fscore_delta == DEFAULT_FSCORE_DELTA {
                parts.push(format!("{}", f));
            } else {
                parts.push(format!("F{}cm={}", round_label(self.fscore_delta * 100.0), f));
            }
        }
        parts.join(",")
    }

    /// Named presets. `real275-suite` holds the four table rows
    /// (10°, 2 cm), (5°, 1 cm), (10°, 2 cm, F ≥ 0.6), (5°, 1 cm, F ≥ 0.8).
    pub fn preset(name: &str) -> Result<Vec<ThresholdSpec>> {
        match name {
            REAL275_SUITE => Ok(vec![
                ThresholdSpec::pose(10.0, 0.02),
                ThresholdSpec::pose(5.0, 0.01),
                ThresholdSpec::pose(10.0, 0.02).with_fscore(0.6),
                ThresholdSpec::pose(5.0, 0.01).with_fscore(0.8),
            ]),
            "real275-category" => Ok(vec![ThresholdSpec::pose(10.0, 0.02).with_fscore(0.6)]),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (available: {REAL275_SUITE}, real275-category)"
            ))),
        }
    }
}

// 2cm rather than 2.0000000000000004cm
fn round_label(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// Bookkeeping attached to every record so reports can be reproduced.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub seed: u64,
    pub frame: Frame,
    pub samples: usize,
    pub fscore_delta: f64,
    #[serde(default)]
    pub hypothesis: usize,
}

/// Metric values for one (ground truth, prediction) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub sample_id: String,
    pub category: Category,
    /// Degrees.
    pub rotation_error: f64,
    /// Meters.
    pub translation_error: f64,
    pub iou: Option<f64>,
    pub fscore: Option<f64>,
    pub chamfer: Option<f64>,
    /// True when the method produced no prediction for this sample.
    #[serde(default)]
    pub failed: bool,
    pub metadata: RecordMetadata,
}

impl EvaluationRecord {
    /// Record for a sample the method produced nothing for. Every metric is
    /// NaN, so it classifies as incorrect under any spec.
    pub fn failure(sample_id: impl Into<String>, category: Category, metadata: RecordMetadata) -> Self {
        Self {
            sample_id: sample_id.into(),
            category,
            rotation_error: f64::NAN,
            translation_error: f64::NAN,
            iou: Some(f64::NAN),
            fscore: Some(f64::NAN),
            chamfer: Some(f64::NAN),
            failed: true,
            metadata,
        }
    }

    pub fn has_nan(&self) -> bool {
        self.rotation_error.is_nan()
            || self.translation_error.is_nan()
            || self.iou.is_some_and(f64::is_nan)
            || self.fscore.is_some_and(f64::is_nan)
    }
}

/// Whether the record satisfies every threshold of `spec`. NaN metrics never
/// satisfy a threshold.
pub fn classify(record: &EvaluationRecord, spec: &ThresholdSpec) -> Result<bool> {
    let missing = |metric: &str| Error::IncompleteRecord {
        sample_id: record.sample_id.clone(),
        metric: metric.to_string(),
    };
    let mut ok = true;
    if let Some(max) = spec.max_rotation {
        ok &= record.rotation_error <= max;
    }
    if let Some(max) = spec.max_translation {
        ok &= record.translation_error <= max;
    }
    if let Some(min) = spec.min_iou {
        ok &= record.iou.ok_or_else(|| missing("iou"))? >= min;
    }
    if let Some(min) = spec.min_fscore {
        let f = record.fscore.ok_or_else(|| missing("fscore"))?;
        if !record.failed && record.metadata.fscore_delta != spec.fscore_delta {
            return Err(missing(&format!(
                "fscore at delta {} m (record has delta {} m)",
                spec.fscore_delta, record.metadata.fscore_delta
            )));
        }
        ok &= f >= min;
    }
    Ok(ok)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryPrecision {
    pub n: usize,
    pub correct: usize,
    pub precision: f64,
}

/// Precision of one spec over a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub spec: ThresholdSpec,
    pub n: usize,
    pub correct: usize,
    pub overall: f64,
    pub per_category: BTreeMap<String, CategoryPrecision>,
    /// Samples without a prediction (counted as incorrect).
    pub failures: usize,
    /// Records with a NaN metric (counted as incorrect).
    pub nan_records: usize,
}

/// Fraction of records that classify as correct, overall and per category.
pub fn precision(records: &[EvaluationRecord], spec: &ThresholdSpec) -> Result<PrecisionReport> {
    spec.validate()?;
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut correct = 0;
    let mut per_category: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut failures = 0;
    let mut nan_records = 0;
    for r in records {
        let ok = classify(r, spec)?;
        let entry = per_category.entry(r.category.name.clone()).or_default();
        entry.0 += 1;
        if ok {
            correct += 1;
            entry.1 += 1;
        }
        failures += r.failed as usize;
        nan_records += (!r.failed && r.has_nan()) as usize;
    }
    if nan_records > 0 {
        log::warn!("{nan_records} record(s) carry NaN metrics and count as incorrect");
    }
    Ok(PrecisionReport {
        spec: spec.clone(),
        n: records.len(),
        correct,
        overall: correct as f64 / records.len() as f64,
        per_category: per_category
            .into_iter()
            .map(|(name, (n, c))| {
                (
                    name,
                    CategoryPrecision {
                        n,
                        correct: c,
                        precision: c as f64 / n as f64,
                    },
                )
            })
            .collect(),
        failures,
        nan_records,
    })
}

/// One precision row per spec.
pub fn precision_table(records: &[EvaluationRecord], specs: &[ThresholdSpec]) -> Result<Vec<PrecisionReport>> {
    specs.iter().map(|s| precision(records, s)).collect()
}

/// Metric swept by [`sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Maximum translation error, meters.
    Translation,
    /// Maximum rotation error, degrees.
    Rotation,
    /// Minimum F-score at the records' distance threshold.
    Fscore,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 3] = [SweepAxis::Translation, SweepAxis::Rotation, SweepAxis::Fscore];

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Translation => "translation",
            SweepAxis::Rotation => "rotation",
            SweepAxis::Fscore => "fscore",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown axis `{s}` (valid axes: translation, rotation, fscore)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub precision: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

/// Precision under a single-threshold spec for every grid value.
pub fn sweep(records: &[EvaluationRecord], axis: SweepAxis, grid: &[f64]) -> Result<SweepCurve> {
    let delta = records
        .iter()
        .find(|r| !r.failed)
        .map(|r| r.metadata.fscore_delta)
        .unwrap_or(DEFAULT_FSCORE_DELTA);
    let points = grid
        .iter()
        .map(|&threshold| {
            let mut spec = ThresholdSpec {
                fscore_delta: delta,
                ..ThresholdSpec::default()
            };
            match axis {
                SweepAxis::Translation => spec.max_translation = Some(threshold),
                SweepAxis::Rotation => spec.max_rotation = Some(threshold),
                SweepAxis::Fscore => spec.min_fscore = Some(threshold),
            }
            Ok(SweepPoint {
                threshold,
                precision: precision(records, &spec)?.overall,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepCurve { axis, points })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestWorst {
    pub n: usize,
    pub best: f64,
    pub worst: f64,
}

/// Precision when a sample counts as correct if any (best) or every (worst)
/// one of its hypotheses is correct.
pub fn best_worst_of_n(hypotheses: &[Vec<EvaluationRecord>], spec: &ThresholdSpec) -> Result<BestWorst> {
    spec.validate()?;
    if hypotheses.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (mut best, mut worst) = (0usize, 0usize);
    for (i, set) in hypotheses.iter().enumerate() {
        let Some(first) = set.first() else {
            return Err(Error::EmptyHypotheses(format!("#{i}")));
        };
        debug_assert!(set.iter().all(|r| r.sample_id == first.sample_id));
        let outcomes = set.iter().map(|r| classify(r, spec)).collect::<Result<Vec<_>>>()?;
        best += outcomes.iter().any(|&c| c) as usize;
        worst += outcomes.iter().all(|&c| c) as usize;
    }
    let n = hypotheses.len();
    Ok(BestWorst {
        n,
        best: best as f64 / n as f64,
        worst: worst as f64 / n as f64,
    })
}

//! Per-sample metric computation over a dataset.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{EvaluationRecord, RecordMetadata};
use crate::box_metrics::{aabb_of, iou_obb_symmetric, DEFAULT_SYMMETRY_STEPS};
use crate::dataset::{GroundTruthSample, Hypothesis, PredictionSet};
use crate::error::{Error, Result};
use crate::geometry::{rotation_error_symmetric, translation_error, Category, RigidTransform, TriangleMesh};
use crate::sampling::DEFAULT_SAMPLES;
use crate::shape_metrics::{evaluate_reconstruction, Frame, Shape, DEFAULT_FSCORE_DELTA};

/// Settings shared by every sample of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub frame: Frame,
    pub samples: usize,
    pub seed: u64,
    pub fscore_delta: f64,
    /// Coarse azimuth grid of the symmetric IoU search.
    pub symmetry_steps: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            frame: Frame::World,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            fscore_delta: DEFAULT_FSCORE_DELTA,
            symmetry_steps: DEFAULT_SYMMETRY_STEPS,
        }
    }
}

impl EvalSettings {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if !(self.fscore_delta > 0.0 && self.fscore_delta.is_finite()) {
            return Err(Error::InvalidThreshold(format!(
                "F-score delta must be positive, got {}",
                self.fscore_delta
            )));
        }
        if self.symmetry_steps == 0 {
            return Err(Error::Config("symmetry_steps must be at least 1".into()));
        }
        Ok(())
    }

    fn metadata(&self, hypothesis: usize) -> RecordMetadata {
        RecordMetadata {
            seed: self.seed,
            frame: self.frame,
            samples: self.samples,
            fscore_delta: self.fscore_delta,
            hypothesis,
        }
    }
}

/// Every metric of one estimate. Rotation error and IoU ignore rotations
/// about the symmetry axis for symmetric categories. Boxes are the tight
/// object-frame boxes of the two shapes.
pub fn evaluate_pair(
    sample_id: &str,
    category: &Category,
    gt: (&TriangleMesh, &RigidTransform),
    pred: (&Shape, &RigidTransform),
    settings: &EvalSettings,
    hypothesis: usize,
) -> Result<EvaluationRecord> {
    let (gt_mesh, gt_pose) = gt;
    let (pred_shape, pred_pose) = pred;
    let gt_box = aabb_of(gt_mesh)?;
    let pred_box = aabb_of(pred_shape.vertices())?;
    let shape = evaluate_reconstruction(
        &Shape::Mesh(gt_mesh.clone()),
        gt_pose,
        pred_shape,
        pred_pose,
        settings.fscore_delta,
        settings.frame,
        settings.samples,
        settings.seed,
    )?;
    Ok(EvaluationRecord {
        sample_id: sample_id.to_string(),
        category: category.clone(),
        rotation_error: rotation_error_symmetric(gt_pose, pred_pose, category),
        translation_error: translation_error(gt_pose, pred_pose),
        iou: Some(iou_obb_symmetric(
            &gt_box,
            gt_pose,
            &pred_box,
            pred_pose,
            category,
            settings.symmetry_steps,
        )),
        fscore: Some(shape.score.fscore),
        chamfer: Some(shape.chamfer),
        failed: false,
        metadata: settings.metadata(hypothesis),
    })
}

/// [`evaluate_pair`] for a dataset sample. A hypothesis whose metrics
/// cannot be computed (for example a zero-area predicted mesh) becomes a
/// record with NaN metrics, which counts as incorrect.
pub fn evaluate_sample(
    gt: &GroundTruthSample,
    hyp: &Hypothesis,
    settings: &EvalSettings,
    hypothesis: usize,
) -> EvaluationRecord {
    let result = evaluate_pair(
        &gt.sample_id,
        &gt.category,
        (&gt.mesh, &gt.pose),
        (&hyp.shape, &hyp.pose),
        settings,
        hypothesis,
    );
    result.unwrap_or_else(|e| {
        warn!("{} hypothesis {hypothesis}: {e}; scored as NaN", gt.sample_id);
        let mut r = EvaluationRecord::failure(&gt.sample_id, gt.category.clone(), settings.metadata(hypothesis));
        r.failed = false;
        r
    })
}

/// Records of one method over the dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodEvaluation {
    pub method: String,
    /// Primary (first) hypothesis per sample, in ground-truth order.
    pub records: Vec<EvaluationRecord>,
    /// All hypotheses per sample when any sample has more than one.
    pub hypotheses: Option<Vec<Vec<EvaluationRecord>>>,
    pub missing: Vec<String>,
}

/// Scores every sample (in parallel). Samples without a prediction get a
/// failure record.
pub fn evaluate_method(gt: &[GroundTruthSample], preds: &PredictionSet, settings: &EvalSettings) -> Result<MethodEvaluation> {
    settings.validate()?;
    if gt.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if preds.predictions.len() != gt.len() {
        return Err(Error::Config(format!(
            "{} predictions joined to {} ground-truth samples",
            preds.predictions.len(),
            gt.len()
        )));
    }
    let per_sample: Vec<Vec<EvaluationRecord>> = gt
        .par_iter()
        .zip(preds.predictions.par_iter())
        .map(|(s, p)| match p {
            Some(p) => p
                .hypotheses
                .iter()
                .enumerate()
                .map(|(k, h)| evaluate_sample(s, h, settings, k))
                .collect(),
            None => vec![EvaluationRecord::failure(&s.sample_id, s.category.clone(), settings.metadata(0))],
        })
        .collect();
    let records = per_sample.iter().map(|h| h[0].clone()).collect();
    let hypotheses = (preds.max_hypotheses() > 1).then_some(per_sample);
    Ok(MethodEvaluation {
        method: preds.method.clone(),
        records,
        hypotheses,
        missing: preds.missing.clone(),
    })
}

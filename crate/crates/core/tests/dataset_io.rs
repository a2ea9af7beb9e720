use std::fs;
use std::path::{Path, PathBuf};

use catpose::aggregation::{best_worst_of_n, precision, ThresholdSpec};
use catpose::dataset::{
    load_ground_truth, load_predictions, write_ground_truth, write_mesh, DatasetAdapter, NativeAdapter,
};
use catpose::evaluation::{evaluate_method, EvalSettings};
use catpose::synthetic;
use catpose::Error;
use nalgebra::Vector3;
use serde_json::json;

fn synthetic_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic")
}

fn settings() -> EvalSettings {
    EvalSettings {
        samples: 2000,
        ..EvalSettings::default()
    }
}

const IDENTITY: [f64; 16] = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0, 0.0, 1.0];

#[test]
fn synthetic_fixture_has_six_categories() {
    let gt = load_ground_truth(&synthetic_root()).unwrap();
    let cats: Vec<_> = gt.iter().map(|s| s.category.name.as_str()).collect();
    assert_eq!(cats, ["bottle", "bowl", "camera", "can", "laptop", "mug"]);
    assert!(gt.windows(2).all(|w| w[0].sample_id < w[1].sample_id));
    assert!(gt[0].category.symmetric && !gt[2].category.symmetric);
    // the manifest file itself is accepted as the root
    let again = NativeAdapter.load(&synthetic_root().join("ground_truth.json"), &[]).unwrap();
    assert_eq!(again.len(), 6);
}

#[test]
fn missing_mesh_is_reported_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let doc = json!({"samples": [{"sample_id": "a", "category": "mug", "mesh": "nowhere.ply", "pose": IDENTITY}]});
    fs::write(dir.path().join("ground_truth.json"), doc.to_string()).unwrap();
    let err = load_ground_truth(dir.path()).unwrap_err().to_string();
    assert!(err.contains("nowhere.ply"), "{err}");
}

#[test]
fn malformed_pose_names_sample_and_field() {
    let dir = tempfile::tempdir().unwrap();
    write_mesh(&dir.path().join("m.ply"), &synthetic::box_mesh(Vector3::repeat(0.05))).unwrap();
    let doc = json!({"samples": [{"sample_id": "bad_one", "category": "mug", "mesh": "m.ply", "pose": [1.0, 2.0]}]});
    fs::write(dir.path().join("ground_truth.json"), doc.to_string()).unwrap();
    let err = load_ground_truth(dir.path()).unwrap_err().to_string();
    assert!(err.contains("bad_one") && err.contains("pose"), "{err}");
}

#[test]
fn duplicate_ground_truth_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_mesh(&dir.path().join("m.ply"), &synthetic::box_mesh(Vector3::repeat(0.05))).unwrap();
    let s = json!({"sample_id": "a", "category": "mug", "mesh": "m.ply", "pose": IDENTITY});
    fs::write(dir.path().join("ground_truth.json"), json!({"samples": [s, s]}).to_string()).unwrap();
    assert!(matches!(load_ground_truth(dir.path()), Err(Error::DuplicateSample(_))));
}

#[test]
fn sequence_layout_of_75_samples() {
    // 3 categories × 5 sequences × 5 frames
    let dir = tempfile::tempdir().unwrap();
    let mut samples = Vec::new();
    for cat in ["bottle", "mug", "laptop"] {
        for seq in 0..5 {
            let mesh = format!("{cat}_{seq}/mesh.ply");
            fs::create_dir_all(dir.path().join(format!("{cat}_{seq}"))).unwrap();
            write_mesh(&dir.path().join(&mesh), &synthetic::box_mesh(Vector3::new(0.03, 0.05, 0.02 + 0.01 * seq as f64))).unwrap();
            for frame in 0..5 {
                let mut pose = IDENTITY;
                pose[3] = 0.01 * frame as f64;
                samples.push(json!({"sample_id": format!("{cat}_{seq}_{frame}"), "category": cat, "mesh": mesh, "pose": pose}));
            }
        }
    }
    fs::write(dir.path().join("ground_truth.json"), json!({"samples": samples}).to_string()).unwrap();
    let gt = load_ground_truth(dir.path()).unwrap();
    assert_eq!(gt.len(), 75);
    assert_eq!(gt.iter().filter(|s| s.category.name == "mug").count(), 25);
}

#[test]
fn ground_truth_round_trips() {
    let gt = load_ground_truth(&synthetic_root()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    // keep mesh references valid from the new location
    let moved: Vec<_> = gt
        .iter()
        .cloned()
        .map(|mut s| {
            s.mesh_path = synthetic_root().join(&s.mesh_path);
            s
        })
        .collect();
    write_ground_truth(&dir.path().join("ground_truth.json"), &moved).unwrap();
    let back = load_ground_truth(dir.path()).unwrap();
    for (a, b) in moved.iter().zip(&back) {
        assert_eq!(a.sample_id, b.sample_id);
        assert_eq!(a.category, b.category);
        assert_eq!(a.pose.to_row_major(), b.pose.to_row_major());
        assert_eq!(a.mesh, b.mesh);
    }
}

#[test]
fn identity_predictions_score_one_under_every_preset() {
    let gt = load_ground_truth(&synthetic_root()).unwrap();
    let preds = load_predictions(&synthetic_root().join("identity"), &gt).unwrap();
    let eval = evaluate_method(&gt, &preds, &settings()).unwrap();
    for preset in ["real275-suite", "real275-category"] {
        for spec in ThresholdSpec::preset(preset).unwrap() {
            assert_eq!(precision(&eval.records, &spec).unwrap().overall, 1.0, "{}", spec.label());
        }
    }
}

#[test]
fn missing_prediction_counts_as_one_failure() {
    let gt = load_ground_truth(&synthetic_root()).unwrap();
    let preds = load_predictions(&synthetic_root().join("partial"), &gt).unwrap();
    assert_eq!(preds.missing, ["syn_000"]);
    let eval = evaluate_method(&gt, &preds, &settings()).unwrap();
    let p = precision(&eval.records, &ThresholdSpec::pose(10.0, 0.02)).unwrap();
    assert_eq!((p.n, p.failures, p.correct), (6, 1, 5));
}

#[test]
fn unknown_prediction_id_is_rejected() {
    let gt = load_ground_truth(&synthetic_root()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mesh = synthetic_root().join("../meshes/mug.ply");
    let doc = json!({"predictions": [{"sample_id": "ghost", "pose": IDENTITY, "mesh": mesh}]});
    fs::write(dir.path().join("predictions.json"), doc.to_string()).unwrap();
    assert!(matches!(load_predictions(dir.path(), &gt), Err(Error::UnknownSample(_))));
}

#[test]
fn three_hypotheses_route_to_best_worst() {
    let gt = load_ground_truth(&synthetic_root()).unwrap();
    let preds = load_predictions(&synthetic_root().join("multi"), &gt).unwrap();
    assert_eq!(preds.max_hypotheses(), 3);
    let eval = evaluate_method(&gt, &preds, &settings()).unwrap();
    let hyps = eval.hypotheses.as_ref().expect("multi-hypothesis path");
    assert!(hyps.iter().all(|h| h.len() == 3));
    // hypotheses: exact, 8°/1 cm, 30°/5 cm
    let bw = best_worst_of_n(hyps, &ThresholdSpec::pose(10.0, 0.02)).unwrap();
    assert_eq!((bw.best, bw.worst), (1.0, 0.0));

    let single = load_predictions(&synthetic_root().join("identity"), &gt).unwrap();
    assert!(evaluate_method(&gt, &single, &settings()).unwrap().hypotheses.is_none());
}

#[test]
fn point_set_predictions_are_accepted() {
    let gt = load_ground_truth(&synthetic_root()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let pts = catpose::sampling::sample_surface(&gt[0].mesh, 3000, 9).unwrap();
    catpose::dataset::write_points(&dir.path().join("cloud.xyz"), &pts).unwrap();
    let doc = json!({"method": "points", "predictions": [{"sample_id": gt[0].sample_id, "pose": gt[0].pose.to_row_major(), "points": "cloud.xyz"}]});
    fs::write(dir.path().join("predictions.json"), doc.to_string()).unwrap();
    let preds = load_predictions(dir.path(), &gt).unwrap();
    assert_eq!(preds.missing.len(), 5);
    let eval = evaluate_method(&gt, &preds, &settings()).unwrap();
    assert!(eval.records[0].fscore.unwrap() > 0.9);
}

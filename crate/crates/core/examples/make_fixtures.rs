//! Regenerates the bundled fixtures under `fixtures/` (or the directory
//! given as the first argument). Output is deterministic.
//!
//!     cargo run --example make_fixtures

use std::fs;
use std::path::{Path, PathBuf};

use catpose::aggregation::{classify, ThresholdSpec};
use catpose::annotation::AnnotationParams;
use catpose::dataset::{
    load_ground_truth, load_predictions, write_depth_png, write_ground_truth, write_mesh, write_predictions,
    GroundTruthSample, Hypothesis, Prediction, SequenceFrame, SequenceManifest,
};
use catpose::evaluation::{evaluate_method, EvalSettings};
use catpose::geometry::{Category, RigidTransform, TriangleMesh};
use catpose::shape_metrics::Shape;
use catpose::synthetic;
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn meshes() -> Vec<(&'static str, TriangleMesh)> {
    let scaled = |m: TriangleMesh, s: f64| {
        TriangleMesh::new(m.vertices().iter().map(|p| p * s).collect(), m.faces().to_vec()).unwrap()
    };
    vec![
        ("bottle", synthetic::cylinder(0.03, 0.20, 48)),
        ("bowl", synthetic::cylinder(0.06, 0.05, 64)),
        ("camera", synthetic::box_mesh(Vector3::new(0.05, 0.035, 0.03))),
        ("can", synthetic::cylinder(0.033, 0.12, 48)),
        ("laptop", synthetic::box_mesh(Vector3::new(0.06, 0.005, 0.045))),
        ("mug", synthetic::mug(true)),
        ("mug_no_handle", synthetic::mug(false)),
        ("camera_large", scaled(synthetic::box_mesh(Vector3::new(0.05, 0.035, 0.03)), 1.6)),
        ("laptop_small", scaled(synthetic::box_mesh(Vector3::new(0.06, 0.005, 0.045)), 0.5)),
    ]
}

fn mesh_ref(name: &str) -> PathBuf {
    PathBuf::from(format!("../meshes/{name}.ply"))
}

fn load(root: &Path, name: &str) -> TriangleMesh {
    catpose::dataset::read_mesh(&root.join("meshes").join(format!("{name}.ply"))).unwrap()
}

fn sample(root: &Path, id: &str, category: &str, pose: RigidTransform) -> GroundTruthSample {
    GroundTruthSample {
        sample_id: id.to_string(),
        category: Category::builtin(category),
        mesh_path: mesh_ref(category),
        mesh: load(root, category),
        pose,
        depth: None,
        mask: None,
        intrinsics: None,
    }
}

fn hyp(root: &Path, mesh: &str, pose: RigidTransform) -> Hypothesis {
    Hypothesis {
        pose,
        shape: Shape::Mesh(load(root, mesh)),
        shape_path: mesh_ref(mesh),
    }
}

/// `pose` followed by a rotation about `axis` (object frame) and a shift
/// along `dir` (camera frame).
fn perturb(pose: &RigidTransform, axis: [f64; 3], deg: f64, dir: [f64; 3], meters: f64) -> RigidTransform {
    let shift = Vector3::from(dir).normalize() * meters;
    RigidTransform::from_translation(shift) * *pose * RigidTransform::from_axis_angle(&Vector3::from(axis), deg.to_radians())
}

fn write_synthetic(root: &Path) {
    let dir = root.join("synthetic");
    fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gt: Vec<GroundTruthSample> = ["bottle", "bowl", "camera", "can", "laptop", "mug"]
        .iter()
        .enumerate()
        .map(|(i, cat)| {
            let pose = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 0.8)) * synthetic::random_pose(&mut rng, 0.2);
            sample(root, &format!("syn_{i:03}"), cat, pose)
        })
        .collect();
    write_ground_truth(&dir.join("ground_truth.json"), &gt).unwrap();

    let copy = |s: &GroundTruthSample| hyp(root, &s.category.name, s.pose);
    let write = |name: &str, preds: Vec<Prediction>| {
        let d = dir.join(name);
        fs::create_dir_all(&d).unwrap();
        // shape references resolve against the method directory
        let preds = preds
            .into_iter()
            .map(|mut p| {
                for h in &mut p.hypotheses {
                    h.shape_path = PathBuf::from("..").join(&h.shape_path);
                }
                p
            })
            .collect::<Vec<_>>();
        write_predictions(&d.join("predictions.json"), name, &preds).unwrap();
    };
    write(
        "identity",
        gt.iter()
            .map(|s| Prediction {
                sample_id: s.sample_id.clone(),
                hypotheses: vec![copy(s)],
            })
            .collect(),
    );
    write(
        "partial",
        gt.iter()
            .skip(1)
            .map(|s| Prediction {
                sample_id: s.sample_id.clone(),
                hypotheses: vec![copy(s)],
            })
            .collect(),
    );
    let offsets = [(2.0, 0.004), (7.0, 0.015), (12.0, 0.01), (3.0, 0.03), (4.0, 0.008), (0.5, 0.001)];
    write(
        "noisy",
        gt.iter()
            .zip(offsets)
            .map(|(s, (deg, m))| Prediction {
                sample_id: s.sample_id.clone(),
                hypotheses: vec![hyp(root, &s.category.name, perturb(&s.pose, [1.0, 0.0, 0.0], deg, [1.0, 1.0, 0.0], m))],
            })
            .collect(),
    );
    write(
        "multi",
        gt.iter()
            .map(|s| Prediction {
                sample_id: s.sample_id.clone(),
                hypotheses: [(0.0, 0.0), (8.0, 0.01), (30.0, 0.05)]
                    .iter()
                    .map(|&(deg, m)| hyp(root, &s.category.name, perturb(&s.pose, [0.0, 0.0, 1.0], deg, [0.0, 1.0, 0.0], m)))
                    .collect(),
            })
            .collect(),
    );
}

/// 20 samples; the `counted` method is correct under (10°, 2 cm, F ≥ 0.6)
/// on exactly the 7 marked `true`.
fn counted_design() -> Vec<(&'static str, &'static str, [f64; 3], f64, f64, Option<&'static str>, bool)> {
    // (category, prediction mesh, rotation axis, degrees, meters, mesh override, correct)
    vec![
        ("mug", "mug", [1.0, 0.0, 0.0], 3.0, 0.005, None, true),
        ("camera", "camera", [0.0, 1.0, 0.0], 0.0, 0.0, None, true),
        ("laptop", "laptop", [0.0, 0.0, 1.0], 3.0, 0.004, None, true),
        ("can", "can", [0.0, 1.0, 0.0], 90.0, 0.004, None, true),
        ("bottle", "bottle", [1.0, 0.0, 0.0], 2.0, 0.003, None, true),
        ("mug", "mug", [0.0, 1.0, 0.0], 1.0, 0.001, None, true),
        ("camera", "camera", [0.0, 1.0, 0.0], 4.0, 0.008, None, true),
        ("mug", "mug", [1.0, 0.0, 0.0], 15.0, 0.005, None, false),
        ("mug", "mug", [1.0, 0.0, 0.0], 2.0, 0.03, None, false),
        ("camera", "camera", [1.0, 0.0, 0.0], 0.0, 0.0, Some("camera_large"), false),
        ("laptop", "laptop", [0.0, 0.0, 1.0], 12.0, 0.0, None, false),
        ("laptop", "laptop", [0.0, 0.0, 1.0], 0.0, 0.025, None, false),
        ("can", "can", [1.0, 0.0, 0.0], 20.0, 0.0, None, false),
        ("bottle", "bottle", [1.0, 0.0, 0.0], 0.0, 0.0, Some("bowl"), false),
        ("mug", "mug", [1.0, 0.0, 0.0], 0.0, 0.0, Some("-"), false),
        ("camera", "camera", [0.0, 1.0, 0.0], 45.0, 0.0, None, false),
        ("can", "can", [1.0, 0.0, 0.0], 5.0, 0.021, None, false),
        ("bottle", "bottle", [0.0, 0.0, 1.0], 11.0, 0.0, None, false),
        ("mug", "mug", [0.0, 1.0, 0.0], 180.0, 0.0, None, false),
        ("laptop", "laptop", [1.0, 0.0, 0.0], 0.0, 0.0, Some("laptop_small"), false),
    ]
}

fn write_counted(root: &Path) {
    let dir = root.join("counted");
    fs::create_dir_all(dir.join("method")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let design = counted_design();
    let gt: Vec<GroundTruthSample> = design
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let pose = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 0.8)) * synthetic::random_pose(&mut rng, 0.2);
            sample(root, &format!("cnt_{i:03}"), d.0, pose)
        })
        .collect();
    write_ground_truth(&dir.join("ground_truth.json"), &gt).unwrap();
    let preds: Vec<Prediction> = gt
        .iter()
        .zip(&design)
        .filter(|(_, d)| d.5 != Some("-"))
        .map(|(s, d)| {
            let mesh = d.5.unwrap_or(d.1);
            let mut h = hyp(root, mesh, perturb(&s.pose, d.2, d.3, [0.3, -1.0, 0.2], d.4));
            h.shape_path = PathBuf::from("..").join(h.shape_path);
            Prediction {
                sample_id: s.sample_id.clone(),
                hypotheses: vec![h],
            }
        })
        .collect();
    write_predictions(&dir.join("method/predictions.json"), "counted", &preds).unwrap();

    // the design has to hold at the sample counts the tests use
    let gt = load_ground_truth(&dir).unwrap();
    let set = load_predictions(&dir.join("method"), &gt).unwrap();
    let spec = ThresholdSpec::pose(10.0, 0.02).with_fscore(0.6);
    for samples in [2000, 10_000] {
        let settings = EvalSettings {
            samples,
            ..EvalSettings::default()
        };
        let eval = evaluate_method(&gt, &set, &settings).unwrap();
        for (r, d) in eval.records.iter().zip(&design) {
            let ok = classify(r, &spec).unwrap();
            assert_eq!(
                ok, d.6,
                "{} ({}): rot {} trans {} F {:?}",
                r.sample_id, d.0, r.rotation_error, r.translation_error, r.fscore
            );
        }
    }
}

fn write_cube_sequence(root: &Path) {
    let dir = root.join("cube_sequence");
    fs::create_dir_all(&dir).unwrap();
    let scene = synthetic::cube_scene();
    let frames = scene
        .frames
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let name = format!("depth_{k:03}.png");
            write_depth_png(&dir.join(&name), &f.depth).unwrap();
            SequenceFrame {
                depth: name.into(),
                mask: None,
                camera_pose: f.camera_pose.to_row_major(),
                seed_pose: None,
            }
        })
        .collect();
    let manifest = SequenceManifest {
        sample_id: "cube".into(),
        category: "cube".into(),
        symmetry_axis: None,
        intrinsics: scene.intrinsics,
        seed_box: scene.seed_box,
        object_pose: scene.object_pose.to_row_major(),
        frames,
        params: AnnotationParams {
            carve_margin: 0.002,
            ..AnnotationParams::default()
        },
    };
    manifest.write(&dir.join("sequence.json")).unwrap();
}

fn main() {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    fs::create_dir_all(root.join("meshes")).unwrap();
    for (name, mesh) in meshes() {
        write_mesh(&root.join("meshes").join(format!("{name}.ply")), &mesh).unwrap();
    }
    write_synthetic(&root);
    write_counted(&root);
    write_cube_sequence(&root);
    println!("fixtures written to {}", root.display());
}

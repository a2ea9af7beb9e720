//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use catpose::aggregation::{
    best_worst_of_n, classify, precision, EvaluationRecord, RecordMetadata, ThresholdSpec,
};
use catpose::annotation::{annotate_sequence, voxel_carve, AnnotationInput, AnnotationParams};
use catpose::box_metrics::{iou_obb, Box3};
use catpose::cli::{cmd_evaluate, CliOverrides, RunConfig};
use catpose::evaluation::{evaluate_pair, EvalSettings};
use catpose::geometry::{
    rotation_error, translation_error, Category, RigidTransform, TriangleMesh,
    BUILTIN_CATEGORIES,
};
use catpose::sampling::convergence_study;
use catpose::shape_metrics::{Frame, Shape, DEFAULT_FSCORE_DELTA};
use catpose::synthetic;
use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn within(elapsed: Duration, limit_s: u64) -> Check {
    if elapsed.as_secs_f64() < limit_s as f64 {
        Ok(format!("{:.1}s", elapsed.as_secs_f64()))
    } else {
        Err(format!("took {:.1}s (limit {limit_s}s)", elapsed.as_secs_f64()))
    }
}

fn random_mesh(rng: &mut ChaCha8Rng) -> TriangleMesh {
    let mut r = |lo: f64, hi: f64| rng.random_range(lo..hi);
    match r(0.0, 5.0) as usize {
        0 => synthetic::box_mesh(Vector3::new(r(0.01, 0.08), r(0.01, 0.08), r(0.01, 0.08))),
        1 => synthetic::cylinder(r(0.02, 0.06), r(0.05, 0.2), 32),
        2 => synthetic::uv_sphere(r(0.02, 0.06), 12, 24),
        3 => synthetic::torus(r(0.03, 0.05), r(0.005, 0.015), 24, 12),
        _ => synthetic::mug(true),
    }
}

fn identity_suite() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let settings = EvalSettings::default();
    for i in 0..50 {
        let mesh = random_mesh(&mut rng);
        let pose = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 1.0)) * synthetic::random_pose(&mut rng, 0.3);
        let cat = Category::builtin(BUILTIN_CATEGORIES[i % BUILTIN_CATEGORIES.len()]);
        let r = evaluate_pair(
            &format!("id_{i}"),
            &cat,
            (&mesh, &pose),
            (&Shape::Mesh(mesh.clone()), &pose),
            &settings,
            0,
        )
        .map_err(|e| format!("fixture {i}: {e}"))?;
        let iou = r.iou.unwrap();
        let f = r.fscore.unwrap();
        if r.translation_error != 0.0 || r.rotation_error != 0.0 || (iou - 1.0).abs() > 1e-9 || f != 1.0 {
            return Err(format!(
                "fixture {i} ({}): d {} δ {} IoU {iou} F {f}",
                cat.name, r.translation_error, r.rotation_error
            ));
        }
    }
    within(start.elapsed(), 30).map(|t| format!("50 fixtures exact, {t}"))
}

/// Fraction-of-volume estimate: uniform samples inside `a`, counted inside `b`.
fn monte_carlo_iou(a: &Box3, pa: &RigidTransform, b: &Box3, pb: &RigidTransform, n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let to_b = pb.inverse() * *pa;
    let (c, h) = (a.center(), a.half_extents());
    let mut inside = 0usize;
    for _ in 0..n {
        let p = Point3::new(
            c.x + h.x * rng.random_range(-1.0..1.0),
            c.y + h.y * rng.random_range(-1.0..1.0),
            c.z + h.z * rng.random_range(-1.0..1.0),
        );
        inside += b.contains(&to_b.transform_point(&p)) as usize;
    }
    let inter = a.volume() * inside as f64 / n as f64;
    inter / (a.volume() + b.volume() - inter)
}

fn iou_exactness() -> Check {
    let unit = Box3::centered(Vector3::repeat(1.0)).unwrap();
    let id = RigidTransform::identity();
    let offset = iou_obb(&unit, &id, &unit, &RigidTransform::from_translation(Vector3::new(0.5, 0.0, 0.0)));
    if (offset - 1.0 / 3.0).abs() > 1e-9 {
        return Err(format!("offset cubes {offset}"));
    }
    let turned = iou_obb(&unit, &id, &unit, &RigidTransform::from_axis_angle(&Vector3::z(), FRAC_PI_4));
    // octagon of area 2(√2−1) over two unit squares
    let octagon = 2.0 * (2f64.sqrt() - 1.0);
    let expected = octagon / (2.0 - octagon);
    if (turned - expected).abs() > 1e-6 {
        return Err(format!("45° cubes {turned} vs {expected}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut overlapping) = (0.0f64, 0);
    for i in 0..100 {
        // extents 2 to 30 cm, centers at most 20 cm apart
        let mut ext = || Vector3::new(rng.random_range(0.02..0.3), rng.random_range(0.02..0.3), rng.random_range(0.02..0.3));
        let a = Box3::centered(ext()).unwrap();
        let b = Box3::centered(ext()).unwrap();
        let pa = synthetic::random_pose(&mut rng, 0.2 / 12f64.sqrt());
        let pb = synthetic::random_pose(&mut rng, 0.2 / 12f64.sqrt());
        let exact = iou_obb(&a, &pa, &b, &pb);
        overlapping += (exact > 0.0) as usize;
        let mc = monte_carlo_iou(&a, &pa, &b, &pb, 1_000_000, &mut rng);
        let err = (exact - mc).abs();
        worst = worst.max(err);
        if err > 5e-3 {
            return Err(format!("pair {i}: exact {exact} vs Monte-Carlo {mc}"));
        }
    }
    Ok(format!(
        "1/3 and 1/√2 exact; 100 random pairs ({overlapping} overlapping), max |exact − MC| = {worst:.1e}"
    ))
}

fn convergence() -> Check {
    let start = Instant::now();
    let mug = synthetic::mug(true);
    let counts = [100, 316, 1000, 3162, 5000, 10_000, 31_623, 100_000];
    let rows = convergence_study(&mug, &mug, &counts, DEFAULT_FSCORE_DELTA, 0).map_err(|e| e.to_string())?;
    let ratio = rows[0].chamfer_m / rows.last().unwrap().chamfer_m;
    if ratio < 5.0 {
        return Err(format!("CD ratio {ratio:.2}"));
    }
    if let Some(r) = rows.iter().find(|r| r.n_samples >= 5000 && r.fscore != 1.0) {
        return Err(format!("F = {} at n = {}", r.fscore, r.n_samples));
    }
    within(start.elapsed(), 120).map(|t| {
        format!(
            "CD {:.5} m → {:.5} m (ratio {ratio:.1}), F = 1 for n ≥ 5000, {t}",
            rows[0].chamfer_m,
            rows.last().unwrap().chamfer_m
        )
    })
}

fn synthetic_record(rng: &mut ChaCha8Rng, sample: usize, hyp: usize) -> EvaluationRecord {
    EvaluationRecord {
        sample_id: format!("s{sample:02}"),
        category: Category::builtin(BUILTIN_CATEGORIES[sample % 6]),
        rotation_error: rng.random_range(0.0..20.0),
        translation_error: rng.random_range(0.0..0.04),
        iou: None,
        fscore: Some(rng.random_range(0.3..1.0)),
        chamfer: None,
        failed: false,
        metadata: RecordMetadata {
            seed: 0,
            frame: Frame::World,
            samples: 10_000,
            fscore_delta: DEFAULT_FSCORE_DELTA,
            hypothesis: hyp,
        },
    }
}

fn aggregation() -> Check {
    let text = fs::read_to_string(fixtures().join("records_20.json")).map_err(|e| e.to_string())?;
    let records: Vec<EvaluationRecord> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let spec = ThresholdSpec::pose(10.0, 0.02).with_fscore(0.6);
    let p = precision(&records, &spec).map_err(|e| e.to_string())?;
    if records.len() != 20 || p.correct != 7 || p.overall != 0.35 {
        return Err(format!("{} of {} correct, precision {}", p.correct, p.n, p.overall));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let hyps: Vec<Vec<EvaluationRecord>> =
        (0..10).map(|s| (0..3).map(|h| synthetic_record(&mut rng, s, h)).collect()).collect();
    for spec in ThresholdSpec::preset("real275-suite").unwrap() {
        let bw = best_worst_of_n(&hyps, &spec).map_err(|e| e.to_string())?;
        // every way of picking one hypothesis per sample
        let (mut best, mut worst) = (0usize, usize::MAX);
        for choice in 0..3usize.pow(10) {
            let mut c = choice;
            let mut correct = 0;
            for set in &hyps {
                correct += classify(&set[c % 3], &spec).unwrap() as usize;
                c /= 3;
            }
            best = best.max(correct);
            worst = worst.min(correct);
        }
        if bw.best != best as f64 / 10.0 || bw.worst != worst as f64 / 10.0 {
            return Err(format!(
                "{}: best/worst {}/{} vs enumeration {}/{}",
                spec.label(),
                bw.best,
                bw.worst,
                best,
                worst
            ));
        }
    }
    Ok("20-record fixture 7/20 = 0.35; best/worst of 3 matches 3^10 enumeration".into())
}

fn symmetry() -> Check {
    let specs = ThresholdSpec::preset("real275-suite").unwrap();
    let settings = EvalSettings {
        samples: 5000,
        ..EvalSettings::default()
    };
    let meshes = [
        ("bottle", synthetic::cylinder(0.03, 0.2, 48)),
        ("bowl", synthetic::cylinder(0.06, 0.05, 64)),
        ("can", synthetic::cylinder(0.033, 0.12, 48)),
    ];
    let perturbations: [(f64, f64); 6] = [(0.0, 0.0), (3.0, 0.004), (7.0, 0.015), (12.0, 0.008), (2.0, 0.03), (40.0, 0.1)];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut max_rot, mut max_iou) = (0.0f64, 0.0f64);
    let mut checked = 0;
    for (name, mesh) in &meshes {
        let cat = Category::builtin(name);
        let shape = Shape::Mesh(mesh.clone());
        for &(deg, m) in &perturbations {
            let gt = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 0.8)) * synthetic::random_pose(&mut rng, 0.2);
            let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let dir = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let pred = RigidTransform::from_translation(dir.normalize() * m)
                * gt
                * RigidTransform::from_axis_angle(&axis, deg.to_radians());
            let base = evaluate_pair(name, &cat, (mesh, &gt), (&shape, &pred), &settings, 0).map_err(|e| e.to_string())?;
            for k in 1..12 {
                let spin = RigidTransform::from_axis_angle(&Vector3::y(), k as f64 * 30.0f64.to_radians() + 0.1);
                let gt_spun = gt * spin;
                let r = evaluate_pair(name, &cat, (mesh, &gt_spun), (&shape, &pred), &settings, 0)
                    .map_err(|e| e.to_string())?;
                let d_rot = (r.rotation_error - base.rotation_error).abs();
                let d_iou = (r.iou.unwrap() - base.iou.unwrap()).abs();
                max_rot = max_rot.max(d_rot);
                max_iou = max_iou.max(d_iou);
                if d_rot >= 1e-6 || d_iou >= 1e-3 {
                    return Err(format!("{name} {deg}°/{m} m spin {k}: Δδ {d_rot:.2e}, ΔIoU {d_iou:.2e}"));
                }
                for spec in &specs {
                    if classify(&r, spec).unwrap() != classify(&base, spec).unwrap() {
                        return Err(format!("{name} {deg}°/{m} m spin {k}: {} flipped", spec.label()));
                    }
                }
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{checked} spun poses, max Δδ {max_rot:.1e}°, max ΔIoU {max_iou:.1e}, no flips under {} presets",
        specs.len()
    ))
}

fn annotation() -> Check {
    let start = Instant::now();
    let scene = synthetic::cube_scene();
    let truth = scene.box_poses();
    let mut seeds = truth.clone();
    let nudge = RigidTransform::from_axis_angle(&Vector3::new(0.3, -1.0, 0.5), 5f64.to_radians())
        * RigidTransform::from_translation(Vector3::new(0.02, 0.0, 0.0));
    seeds[3] = seeds[3] * nudge;
    let params = AnnotationParams::default();
    if params.voxel_size != 0.005 {
        return Err(format!("voxel size {}", params.voxel_size));
    }
    let input = AnnotationInput {
        frames: scene.frames.clone(),
        seed_poses: seeds,
        seed_box: scene.seed_box,
        category: Category::new("cube"),
    };
    let out = annotate_sequence(&input, &params).map_err(|e| e.to_string())?;

    let (mut rot, mut trans) = (0.0f64, 0.0f64);
    for (p, t) in out.box_poses.iter().zip(&truth) {
        rot = rot.max(rotation_error(p, t));
        trans = trans.max(translation_error(p, t));
    }
    if rot > 0.5 || trans > 0.002 {
        return Err(format!("ICP off by {rot:.3}° / {:.2} mm", trans * 1e3));
    }

    let grid = voxel_carve(&scene.seed_box, &out.box_poses, &scene.frames, params.voxel_size, params.carve_margin)
        .map_err(|e| e.to_string())?;
    let [nx, ny, nz] = grid.dims();
    let half = synthetic::CUBE_HALF_EDGE;
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let c = grid.voxel_center(i, j, k);
                if c.coords.amax() < half && !grid.is_occupied(i, j, k) {
                    return Err(format!("voxel ({i},{j},{k}) inside the cube was carved"));
                }
            }
        }
    }

    let b = out.tight_box;
    let off = (b.min().coords + Vector3::repeat(half))
        .abs()
        .sup(&(b.max().coords - Vector3::repeat(half)).abs())
        .amax();
    if off > params.voxel_size {
        return Err(format!("tight box off by {:.2} mm", off * 1e3));
    }
    within(start.elapsed(), 60).map(|t| {
        format!(
            "cube kept by carving, box within {:.2} mm, ICP {rot:.3}° / {:.2} mm, {t}",
            off * 1e3,
            trans * 1e3
        )
    })
}

fn evaluate_into(out: &Path) -> catpose::Result<Vec<PathBuf>> {
    let root = fixtures().join("synthetic");
    let cfg = RunConfig::resolve(CliOverrides {
        gt: Some(root.clone()),
        pred: ["identity", "noisy", "partial", "multi"].iter().map(|m| root.join(m)).collect(),
        samples: Some(2000),
        out: Some(out.to_path_buf()),
        ..CliOverrides::default()
    })?;
    Ok(cmd_evaluate(&cfg)?.1.files)
}

fn read_csv(path: &Path) -> std::result::Result<(Vec<String>, Vec<Vec<String>>), String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let header = rdr.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| e.to_string())?;
    Ok((header, rows))
}

fn report_schemas() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    evaluate_into(dir.path()).map_err(|e| e.to_string())?;
    let methods = ["identity", "noisy", "partial", "multi"];
    let labels: Vec<String> = ThresholdSpec::preset("real275-suite").unwrap().iter().map(|s| s.label()).collect();
    let unit = |v: &str| v.parse::<f64>().is_ok_and(|x| (0.0..=1.0).contains(&x));

    let (header, rows) = read_csv(&dir.path().join("table1.csv"))?;
    let mut want = vec!["thresholds".to_string()];
    want.extend(methods.iter().map(|m| m.to_string()));
    if header != want {
        return Err(format!("table1 header {header:?}"));
    }
    if rows.iter().map(|r| r[0].clone()).collect::<Vec<_>>() != labels || !rows.iter().all(|r| r[1..].iter().all(|v| unit(v))) {
        return Err(format!("table1 rows {rows:?}"));
    }

    let (header, rows) = read_csv(&dir.path().join("table2.csv"))?;
    let mut want = vec!["method".to_string(), "thresholds".to_string()];
    want.extend(BUILTIN_CATEGORIES.iter().map(|c| c.to_string()));
    if header != want {
        return Err(format!("table2 header {header:?}"));
    }
    let mut expected_rows = Vec::new();
    for m in methods {
        for l in &labels {
            expected_rows.push((m.to_string(), l.clone()));
        }
    }
    let got: Vec<(String, String)> = rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    if got != expected_rows || !rows.iter().all(|r| r[2..].iter().all(|v| unit(v))) {
        return Err(format!("table2 rows {rows:?}"));
    }
    Ok(format!("table1 {}×{}, table2 {}×{} on the synthetic fixture", labels.len(), methods.len(), got.len(), BUILTIN_CATEGORIES.len()))
}

fn snapshot(files: &[PathBuf]) -> BTreeMap<String, Vec<u8>> {
    files
        .iter()
        .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), fs::read(f).unwrap()))
        .collect()
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = dir.path().join("a");
    let first = snapshot(&evaluate_into(&a).map_err(|e| e.to_string())?);
    let second = snapshot(&evaluate_into(&a).map_err(|e| e.to_string())?);
    let elsewhere = snapshot(&evaluate_into(&dir.path().join("b")).map_err(|e| e.to_string())?);
    for (name, bytes) in &first {
        if second.get(name) != Some(bytes) || elsewhere.get(name) != Some(bytes) {
            return Err(format!("{name} differs between runs"));
        }
    }
    if first.len() != second.len() || first.len() != elsewhere.len() {
        return Err("different file sets".into());
    }
    Ok(format!("{} report files byte-identical over 3 runs", first.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("metric identity suite", identity_suite),
        ("OBB IoU exactness", iou_exactness),
        ("sampling convergence", convergence),
        ("precision aggregation", aggregation),
        ("symmetry protocol", symmetry),
        ("annotation pipeline", annotation),
        ("report table schemas", report_schemas),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

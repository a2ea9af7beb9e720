//! Batch workflows behind the `catpose` binary: evaluate, sweep, annotate
//! and convergence. Each command validates its whole configuration and
//! finishes all computation before it writes any file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::aggregation::{best_worst_of_n, precision_table, sweep, SweepAxis, SweepCurve, ThresholdSpec, REAL275_SUITE};
use crate::annotation::annotate_sequence;
use crate::dataset::{
    load_ground_truth_with, load_predictions, read_mesh, write_best_worst_csv, write_json_report, write_mesh,
    write_points, write_precision_csv, write_records_csv, write_sweep_csv, write_table1, write_table2,
    GroundTruthSample, MethodReport, SequenceManifest, GROUND_TRUTH_FILE,
};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_method, EvalSettings, MethodEvaluation};
use crate::geometry::{Category, CategoryTable};
use crate::sampling::{convergence_study, log_spaced_counts, write_convergence_csv, ConvergenceRow};
use crate::shape_metrics::{Frame, DEFAULT_FSCORE_DELTA};

pub const TOOLKIT: &str = "catpose";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Keys accepted in the TOML configuration file. Every key is optional;
/// command-line flags take precedence.
///
/// ```toml
/// gt = "data/synthetic"
/// pred = ["data/synthetic/method_a"]
/// preset = "real275-suite"
/// frame = "world"
/// samples = 10000
/// seed = 0
/// fscore_delta = 0.01
/// symmetry_steps = 36
/// out = "out"
///
/// [[thresholds]]          # replaces the preset when present
/// max_rotation = 10.0
/// max_translation = 0.02
/// min_fscore = 0.6
///
/// [[categories]]          # overrides the built-in symmetry table
/// name = "mug"
/// symmetric = false
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub gt: Option<PathBuf>,
    #[serde(default)]
    pub pred: Vec<PathBuf>,
    pub preset: Option<String>,
    #[serde(default)]
    pub thresholds: Vec<ThresholdSpec>,
    pub frame: Option<Frame>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub fscore_delta: Option<f64>,
    pub symmetry_steps: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub categories: Vec<Category>,
}

impl FileConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

/// Values given on the command line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CliOverrides {
    pub gt: Option<PathBuf>,
    pub pred: Vec<PathBuf>,
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub frame: Option<Frame>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// A fully validated evaluation run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub gt: PathBuf,
    pub pred: Vec<PathBuf>,
    /// Preset name, or `custom` for thresholds from the config file.
    pub preset: String,
    pub thresholds: Vec<ThresholdSpec>,
    pub settings: EvalSettings,
    pub categories: Vec<Category>,
    pub out: PathBuf,
}

impl RunConfig {
    /// Merges the config file (if any) with command-line values and
    /// validates the result. Nothing is computed or written.
    pub fn resolve(cli: CliOverrides) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => FileConfig::read(p)?,
            None => FileConfig::default(),
        };
        let gt = cli
            .gt
            .or(file.gt)
            .ok_or_else(|| Error::Config("no ground-truth root (--gt)".into()))?;
        let pred = if cli.pred.is_empty() { file.pred } else { cli.pred };
        if pred.is_empty() {
            return Err(Error::Config("no predictions root (--pred)".into()));
        }
        let out = cli
            .out
            .or(file.out)
            .ok_or_else(|| Error::Config("no output directory (--out)".into()))?;
        let settings = EvalSettings {
            frame: cli.frame.or(file.frame).unwrap_or_default(),
            samples: cli.samples.or(file.samples).unwrap_or(EvalSettings::default().samples),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            fscore_delta: file.fscore_delta.unwrap_or(DEFAULT_FSCORE_DELTA),
            symmetry_steps: file.symmetry_steps.unwrap_or(EvalSettings::default().symmetry_steps),
        };
        settings.validate()?;

        let (preset, mut thresholds) = match (cli.preset, file.thresholds.is_empty()) {
            (Some(name), _) => (name.clone(), ThresholdSpec::preset(&name)?),
            (None, false) => ("custom".to_string(), file.thresholds),
            (None, true) => {
                let name = file.preset.unwrap_or_else(|| REAL275_SUITE.to_string());
                (name.clone(), ThresholdSpec::preset(&name)?)
            }
        };
        // the run-level delta is the one records are computed with
        for t in &mut thresholds {
            t.fscore_delta = settings.fscore_delta;
            t.validate()?;
        }
        for c in &file.categories {
            c.validate()?;
        }
        for p in std::iter::once(&gt).chain(&pred) {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(Self {
            gt,
            pred,
            preset,
            thresholds,
            settings,
            categories: file.categories,
            out,
        })
    }

    pub fn category_table(&self) -> Result<CategoryTable> {
        let mut table = CategoryTable::default();
        for c in &self.categories {
            table.insert(c.clone())?;
        }
        Ok(table)
    }
}

/// Characters other than letters, digits, `-`, `_` and `.` become `_`.
pub fn file_stem(method: &str) -> String {
    method
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

struct LoadedRun {
    gt: Vec<GroundTruthSample>,
    methods: Vec<MethodEvaluation>,
}

fn load_and_score(cfg: &RunConfig) -> Result<LoadedRun> {
    let gt = load_ground_truth_with(&cfg.gt, &cfg.categories)?;
    info!("{} ground-truth samples", gt.len());
    let sets = cfg
        .pred
        .iter()
        .map(|p| load_predictions(p, &gt))
        .collect::<Result<Vec<_>>>()?;
    let mut seen = std::collections::BTreeSet::new();
    for s in &sets {
        if !seen.insert(file_stem(&s.method)) {
            return Err(Error::Config(format!("two prediction sets are named `{}`", s.method)));
        }
    }
    let methods = sets
        .iter()
        .map(|s| {
            info!("scoring {}", s.method);
            evaluate_method(&gt, s, &cfg.settings)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LoadedRun { gt, methods })
}

#[derive(Serialize)]
struct ReportConfig<'a> {
    gt: String,
    pred: Vec<String>,
    preset: &'a str,
    thresholds: Vec<LabeledSpec<'a>>,
    settings: &'a EvalSettings,
    categories: Vec<Category>,
}

#[derive(Serialize)]
struct LabeledSpec<'a> {
    label: String,
    #[serde(flatten)]
    spec: &'a ThresholdSpec,
}

#[derive(Serialize)]
struct DatasetSummary {
    samples: usize,
    per_category: BTreeMap<String, usize>,
}

#[derive(Serialize)]
struct RunReport<'a> {
    toolkit: &'static str,
    version: &'static str,
    config: ReportConfig<'a>,
    dataset: DatasetSummary,
    methods: &'a [MethodReport],
}

fn report_config<'a>(cfg: &'a RunConfig, gt: &[GroundTruthSample]) -> ReportConfig<'a> {
    let mut used: BTreeMap<String, Category> = BTreeMap::new();
    for s in gt {
        used.entry(s.category.name.clone()).or_insert_with(|| s.category.clone());
    }
    ReportConfig {
        gt: cfg.gt.display().to_string(),
        pred: cfg.pred.iter().map(|p| p.display().to_string()).collect(),
        preset: &cfg.preset,
        thresholds: cfg
            .thresholds
            .iter()
            .map(|spec| LabeledSpec { label: spec.label(), spec })
            .collect(),
        settings: &cfg.settings,
        categories: used.into_values().collect(),
    }
}

fn dataset_summary(gt: &[GroundTruthSample]) -> DatasetSummary {
    let mut per_category = BTreeMap::new();
    for s in gt {
        *per_category.entry(s.category.name.clone()).or_insert(0) += 1;
    }
    DatasetSummary {
        samples: gt.len(),
        per_category,
    }
}

/// Written files of a command, in write order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
}

impl Outputs {
    fn push(&mut self, path: PathBuf) -> &Path {
        self.files.push(path);
        self.files.last().unwrap()
    }
}

fn create_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

/// Scores every prediction set and writes `table1.csv`, `table2.csv`,
/// `precision_<method>.csv`, `records_<method>.csv`,
/// `best_worst_<method>.csv` (multi-hypothesis methods only) and
/// `report.json`.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<(Vec<MethodReport>, Outputs)> {
    let run = load_and_score(cfg)?;
    let reports = run
        .methods
        .iter()
        .map(|m| {
            let best_worst = match &m.hypotheses {
                Some(h) => Some(cfg.thresholds.iter().map(|s| best_worst_of_n(h, s)).collect::<Result<Vec<_>>>()?),
                None => None,
            };
            Ok(MethodReport {
                method: m.method.clone(),
                missing: m.missing.clone(),
                precision: precision_table(&m.records, &cfg.thresholds)?,
                best_worst,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    create_out_dir(&cfg.out)?;
    let mut outputs = Outputs::default();
    write_table1(outputs.push(cfg.out.join("table1.csv")), &cfg.thresholds, &reports)?;
    write_table2(outputs.push(cfg.out.join("table2.csv")), &reports)?;
    for (report, eval) in reports.iter().zip(&run.methods) {
        let stem = file_stem(&report.method);
        write_precision_csv(outputs.push(cfg.out.join(format!("precision_{stem}.csv"))), report)?;
        let records: Vec<_> = match &eval.hypotheses {
            Some(h) => h.iter().flatten().cloned().collect(),
            None => eval.records.clone(),
        };
        write_records_csv(outputs.push(cfg.out.join(format!("records_{stem}.csv"))), &records)?;
        if let Some(bw) = &report.best_worst {
            write_best_worst_csv(outputs.push(cfg.out.join(format!("best_worst_{stem}.csv"))), &cfg.thresholds, bw)?;
        }
    }
    let doc = RunReport {
        toolkit: TOOLKIT,
        version: VERSION,
        config: report_config(cfg, &run.gt),
        dataset: dataset_summary(&run.gt),
        methods: &reports,
    };
    write_json_report(outputs.push(cfg.out.join("report.json")), &doc)?;
    Ok((reports, outputs))
}

/// Parses `start:stop:step` (inclusive of `stop` up to rounding) or a comma
/// separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::Config(format!("grid `{text}`: {m}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number")));
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0 && step.is_finite()) || !(stop >= start) {
                return Err(bad("need start ≤ stop and step > 0".into()));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // 0.1 * 3 prints as 0.30000000000000004 otherwise
            (0..count)
                .map(|i| ((start + step * i as f64) * 1e9).round() / 1e9)
                .collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad("expected start:stop:step or a comma list".into())),
    };
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
        return Err(bad("empty or non-finite".into()));
    }
    Ok(grid)
}

/// Precision of every method along one threshold axis, written to
/// `sweep_<axis>.csv`.
pub fn cmd_sweep(cfg: &RunConfig, axis: SweepAxis, grid: &[f64]) -> Result<(Vec<(String, SweepCurve)>, Outputs)> {
    let run = load_and_score(cfg)?;
    let curves = run
        .methods
        .iter()
        .map(|m| Ok((m.method.clone(), sweep(&m.records, axis, grid)?)))
        .collect::<Result<Vec<_>>>()?;
    create_out_dir(&cfg.out)?;
    let mut outputs = Outputs::default();
    write_sweep_csv(outputs.push(cfg.out.join(format!("sweep_{}.csv", axis.name()))), &curves)?;
    Ok((curves, outputs))
}

#[derive(Serialize)]
struct AnnotationReport<'a> {
    toolkit: &'static str,
    version: &'static str,
    sample_id: &'a str,
    category: &'a Category,
    tight_box: &'a crate::box_metrics::Box3,
    box_poses: Vec<[f64; 16]>,
    diagnostics: &'a crate::annotation::AnnotationDiagnostics,
}

/// Runs the annotation pipeline on a sequence manifest and writes
/// `mesh.ply`, `points.ply`, `annotation.json` (box, refined poses and
/// per-stage diagnostics) and `ground_truth.json` with one sample per frame.
pub fn cmd_annotate(sequence: &Path, out: &Path, categories: &[Category]) -> Result<(crate::annotation::Annotation, Outputs)> {
    let manifest = SequenceManifest::read(sequence)?;
    let mut table = CategoryTable::default();
    for c in categories {
        table.insert(c.clone())?;
    }
    let base = sequence.parent().map(Path::to_path_buf).unwrap_or_default();
    let input = manifest.load_input(&base, &table)?;
    let annotation = annotate_sequence(&input, &manifest.params)?;
    info!(
        "{}: {} points, {} voxels occupied, mesh {} faces",
        manifest.sample_id,
        annotation.diagnostics.accumulated_points,
        annotation.diagnostics.voxels_occupied,
        annotation.diagnostics.mesh_faces
    );

    create_out_dir(out)?;
    let mut outputs = Outputs::default();
    write_mesh(outputs.push(out.join("mesh.ply")), &annotation.mesh)?;
    write_points(outputs.push(out.join("points.ply")), &annotation.points)?;
    let report = AnnotationReport {
        toolkit: TOOLKIT,
        version: VERSION,
        sample_id: &manifest.sample_id,
        category: &input.category,
        tight_box: &annotation.tight_box,
        box_poses: annotation.box_poses.iter().map(|p| p.to_row_major()).collect(),
        diagnostics: &annotation.diagnostics,
    };
    write_json_report(outputs.push(out.join("annotation.json")), &report)?;
    let samples: Vec<GroundTruthSample> = annotation
        .box_poses
        .iter()
        .enumerate()
        .map(|(k, pose)| GroundTruthSample {
            sample_id: format!("{}_{k:03}", manifest.sample_id),
            category: input.category.clone(),
            mesh_path: "mesh.ply".into(),
            mesh: annotation.mesh.clone(),
            pose: *pose,
            depth: None,
            mask: None,
            intrinsics: Some(manifest.intrinsics),
        })
        .collect();
    crate::dataset::write_ground_truth(outputs.push(out.join(GROUND_TRUTH_FILE)), &samples)?;
    Ok((annotation, outputs))
}

/// Sample counts for [`cmd_convergence`]: an explicit list, or `count`
/// log-spaced values between `lo` and `hi`.
pub fn convergence_counts(list: Option<&str>, lo: usize, hi: usize, count: usize) -> Result<Vec<usize>> {
    match list {
        Some(text) => {
            let counts = text
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .ok()
                        .filter(|&n| n > 0)
                        .ok_or_else(|| Error::Config(format!("bad sample count `{s}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(counts)
        }
        None => {
            if lo == 0 || hi < lo {
                return Err(Error::Config(format!("bad sample range {lo}..{hi}")));
            }
            Ok(log_spaced_counts(lo, hi, count))
        }
    }
}

/// Chamfer distance and F-score versus sample count, written to
/// `convergence.csv`.
pub fn cmd_convergence(
    gt_mesh: &Path,
    pred_mesh: &Path,
    counts: &[usize],
    delta: f64,
    seed: u64,
    out: &Path,
) -> Result<(Vec<ConvergenceRow>, Outputs)> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidThreshold(format!("F-score delta must be positive, got {delta}")));
    }
    let gt = read_mesh(gt_mesh)?;
    let pred = read_mesh(pred_mesh)?;
    let rows = convergence_study(&gt, &pred, counts, delta, seed)?;
    create_out_dir(out)?;
    let mut outputs = Outputs::default();
    let path = outputs.push(out.join("convergence.csv")).to_path_buf();
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_convergence_csv(&rows, std::io::BufWriter::new(file))?;
    Ok((rows, outputs))
}

//! Threshold-based precision over a set of records, a sweep, and
//! best/worst-of-n over multiple hypotheses.
//!
//!     cargo run --example precision_report

use std::fs;
use std::path::Path;

use catpose::aggregation::{best_worst_of_n, precision, sweep, EvaluationRecord, SweepAxis, ThresholdSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/records_20.json");
    let records: Vec<EvaluationRecord> = serde_json::from_str(&fs::read_to_string(path)?)?;

    for spec in ThresholdSpec::preset("real275-suite")? {
        let p = precision(&records, &spec)?;
        println!("{:<14} {}/{} = {}", spec.label(), p.correct, p.n, p.overall);
        for (cat, c) in &p.per_category {
            println!("    {cat:<8} {}/{}", c.correct, c.n);
        }
    }

    let curve = sweep(&records, SweepAxis::Rotation, &[2.0, 5.0, 10.0, 20.0, 45.0])?;
    for pt in &curve.points {
        println!("rotation ≤ {:>4}°: {:.2}", pt.threshold, pt.precision);
    }

    // each sample twice: as recorded, and with the translation doubled
    let pairs: Vec<Vec<EvaluationRecord>> = records
        .iter()
        .map(|r| {
            let mut worse = r.clone();
            worse.translation_error *= 2.0;
            worse.metadata.hypothesis = 1;
            vec![r.clone(), worse]
        })
        .collect();
    let bw = best_worst_of_n(&pairs, &ThresholdSpec::pose(10.0, 0.02))?;
    println!("best-of-2 {:.2}, worst-of-2 {:.2}", bw.best, bw.worst);
    Ok(())
}

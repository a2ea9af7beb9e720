//! Loads the bundled synthetic dataset, scores two prediction sets and
//! writes the report tables to a temporary directory.
//!
//!     cargo run --release --example evaluate_dataset

use std::path::Path;

use catpose::cli::{cmd_evaluate, CliOverrides, RunConfig};

fn main() -> catpose::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic");
    let out = std::env::temp_dir().join("catpose_evaluate_dataset");
    let cfg = RunConfig::resolve(CliOverrides {
        gt: Some(root.clone()),
        pred: vec![root.join("identity"), root.join("noisy")],
        samples: Some(5000),
        out: Some(out.clone()),
        ..CliOverrides::default()
    })?;
    let (reports, outputs) = cmd_evaluate(&cfg)?;
    for r in &reports {
        println!("{} (missing {})", r.method, r.missing.len());
        for p in &r.precision {
            println!("    {:<14} {:.3}", p.spec.label(), p.overall);
        }
    }
    for f in &outputs.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

//! How chamfer distance and F-score depend on the number of surface samples,
//! for a mug with and without its handle.
//!
//!     cargo run --release --example convergence

use catpose::sampling::{convergence_study, log_spaced_counts};
use catpose::shape_metrics::DEFAULT_FSCORE_DELTA;
use catpose::synthetic;

fn main() -> catpose::Result<()> {
    let with = synthetic::mug(true);
    let without = synthetic::mug(false);
    let counts = log_spaced_counts(100, 100_000, 7);
    let same = convergence_study(&with, &with, &counts, DEFAULT_FSCORE_DELTA, 0)?;
    let diff = convergence_study(&with, &without, &counts, DEFAULT_FSCORE_DELTA, 0)?;
    println!("{:>7} {:>12} {:>12} {:>8} {:>8}", "n", "CD same", "CD handle", "F same", "F handle");
    for (s, d) in same.iter().zip(&diff) {
        println!(
            "{:>7} {:>12.6} {:>12.6} {:>8.4} {:>8.4}",
            s.n_samples, s.chamfer_m, d.chamfer_m, s.fscore, d.fscore
        );
    }
    Ok(())
}

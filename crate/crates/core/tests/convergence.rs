use catpose::sampling::{convergence_study, log_spaced_counts};
use catpose::shape_metrics::DEFAULT_FSCORE_DELTA;
use catpose::synthetic;

#[test]
fn chamfer_gap_depends_on_sampling_but_fscore_gap_does_not() {
    let with = synthetic::mug(true);
    let without = synthetic::mug(false);
    let counts = [100, 1000, 3162, 10_000, 31_623];
    let same = convergence_study(&with, &with, &counts, DEFAULT_FSCORE_DELTA, 0).unwrap();
    let diff = convergence_study(&with, &without, &counts, DEFAULT_FSCORE_DELTA, 0).unwrap();

    // sparse sampling hides the missing handle in the chamfer distance
    let ratio: Vec<f64> = same.iter().zip(&diff).map(|(s, d)| d.chamfer_m / s.chamfer_m).collect();
    assert!(ratio[0] < 1.5, "{ratio:?}");
    assert!(ratio[4] > 2.0 * ratio[0], "{ratio:?}");

    // the F-score gap settles once the surfaces are sampled densely enough
    let f: Vec<f64> = diff[2..].iter().map(|r| r.fscore).collect();
    let spread = f.iter().cloned().fold(f64::MIN, f64::max) - f.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 0.005, "{f:?}");
    assert!(f.iter().all(|&x| x < 0.99));
}

#[test]
fn rows_follow_the_requested_counts() {
    let mug = synthetic::mug(true);
    let counts = log_spaced_counts(100, 100_000, 10);
    assert_eq!(counts.first(), Some(&100));
    assert_eq!(counts.last(), Some(&100_000));
    assert!(counts.windows(2).all(|w| w[0] < w[1]));
    let rows = convergence_study(&mug, &mug, &[500, 200], DEFAULT_FSCORE_DELTA, 1).unwrap();
    assert_eq!(rows.iter().map(|r| r.n_samples).collect::<Vec<_>>(), [500, 200]);
    let again = convergence_study(&mug, &mug, &[500, 200], DEFAULT_FSCORE_DELTA, 1).unwrap();
    assert_eq!(rows, again);
}

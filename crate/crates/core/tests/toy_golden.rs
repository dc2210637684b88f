use std::path::PathBuf;

use schedbound_core::simulate::{comparison_table, toy_comparison, TOY_SEED};

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/toy_comparison.csv")
}

#[test]
fn toy_trajectories_match_golden() {
    let csv = comparison_table(&toy_comparison(TOY_SEED).unwrap()).to_csv_string().unwrap();
    let path = golden_path();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &csv).unwrap();
    }
    let golden = std::fs::read_to_string(&path).expect("golden file; regenerate with UPDATE_GOLDEN=1");
    assert!(csv == golden, "toy trajectories differ from {}", path.display());
}

#[test]
fn toy_runs_are_reproducible() {
    let a = comparison_table(&toy_comparison(TOY_SEED).unwrap()).to_csv_string().unwrap();
    let b = comparison_table(&toy_comparison(TOY_SEED).unwrap()).to_csv_string().unwrap();
    assert_eq!(a, b);
}

#[test]
fn subgradients_stay_large() {
    let runs = toy_comparison(TOY_SEED).unwrap();
    let problem = schedbound_core::simulate::generate_problem(20, 2, TOY_SEED).unwrap();
    let mut norms: Vec<f64> = problem
        .a
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    norms.sort_by(f64::total_cmp);
    let median = 0.5 * (norms[9] + norms[10]);
    for run in &runs {
        let late = &run.record.grad_norms[200..];
        let min = late.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.1 * median, "{}: {min}", run.name);
    }
}

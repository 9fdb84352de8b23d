mod common;

use bogoliubov::verify::{check_decay, verify_state, VerifyOptions};
use bogoliubov::{minimize, CheckStatus, SolverConfig, State, StateFile};
use common::*;
use proptest::prelude::*;

#[test]
fn flagship_suite_passes_on_the_reference_minimizer() {
    let model = reference_model();
    let r = minimize(&model, 1.0, &SolverConfig::default()).unwrap();
    let report = verify_state(&r.state, &model, 1.0, &VerifyOptions::default());
    for c in &report.checks {
        assert_eq!(c.status, CheckStatus::Pass, "{c:?}");
    }
    assert!(report.passed);
    let decay = report.get("decay").unwrap();
    assert!(decay.value <= -3.5);
    // the suite is a pure function of its inputs
    assert_eq!(report, verify_state(&r.state, &model, 1.0, &VerifyOptions::default()));
}

#[test]
fn suite_on_the_exponential_minimizer() {
    let grid = bogoliubov::build_grid(1024, 12.0, bogoliubov::GridScheme::Clustered, 1.0).unwrap();
    let model = bogoliubov::Model::new(bogoliubov::PotentialSpec::exponential(1.0, 1.0).unwrap(), grid);
    let r = minimize(&model, 1.0, &SolverConfig::default()).unwrap();
    assert!(r.converged);
    let report = verify_state(&r.state, &model, 1.0, &VerifyOptions::default());
    assert!(report.passed, "{}", report.table());
}

#[test]
fn slow_tail_fails_decay() {
    let model = reference_model();
    let gamma: Vec<f64> = model.grid().nodes().iter().map(|p| 1.0 / (1.0 + p * p)).collect();
    let s = State::new(gamma, vec![0.0; 1024], 1.0).unwrap();
    let rec = check_decay(&s, &model, 1.0, -3.5);
    assert_eq!(rec.status, CheckStatus::Fail);
    assert!((rec.value + 2.0).abs() < 0.2);
}

#[test]
fn written_minimizer_reads_back_identically() {
    let model = gaussian_model(256, 10.0);
    let r = minimize(&model, 1.0, &SolverConfig::default()).unwrap();
    let text = StateFile::from_state(&r.state, model.grid(), 1.0, vec!["solver run".into()]).render();
    let back = StateFile::parse(&text).unwrap();
    back.check_grid(model.grid()).unwrap();
    assert_eq!(back.render(), text);
    // reading projects alpha back onto the domain, which moves it by at most rounding
    let s = back.state().unwrap();
    assert_eq!(s.gamma(), r.state.gamma());
    assert_eq!(s.rho0(), r.state.rho0());
    for (a, b) in s.alpha().iter().zip(r.state.alpha()) {
        assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.abs());
    }
}

proptest! {
    #[test]
    fn state_file_round_trip(
        alpha in prop::collection::vec(-1e3..1e3f64, 16..40),
        rho0 in 0.0..10.0f64,
        mu in -5.0..5.0f64,
    ) {
        let n = alpha.len();
        let grid = bogoliubov::build_grid(n.max(16), 7.0, bogoliubov::GridScheme::UniformTrapezoid, 1.0).unwrap();
        let mut alpha = alpha;
        alpha.resize(grid.len(), 0.0);
        let s = State::pure(alpha, rho0).unwrap();
        let file = StateFile::from_state(&s, &grid, mu, vec![]);
        let back = StateFile::parse(&file.render()).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.state().unwrap(), s);
    }
}

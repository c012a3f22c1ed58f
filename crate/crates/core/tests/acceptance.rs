//! Acceptance suite: one test per criterion, one printed line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see every line,
//! or use the `nvcool acceptance` subcommand for the same report.

use once_cell::sync::Lazy;

use nvcool::acceptance::{run_all, CriterionOutcome};

static OUTCOMES: Lazy<Vec<CriterionOutcome>> = Lazy::new(run_all);

fn assert_criterion(id: usize) {
    let outcome = OUTCOMES
        .iter()
        .find(|o| o.id == id)
        .unwrap_or_else(|| panic!("criterion {id} missing from the report"));
    println!("{}", outcome.line());
    assert!(outcome.passed, "{}", outcome.line());
}

#[test]
fn criterion_01_photon_number_anchor() {
    assert_criterion(1);
}

#[test]
fn criterion_02_cooling_photon_drop() {
    assert_criterion(2);
}

#[test]
fn criterion_03_noise_model_anchor() {
    assert_criterion(3);
}

#[test]
fn criterion_04_inversion_consistency() {
    assert_criterion(4);
}

#[test]
fn criterion_05_simulated_2ms_depth() {
    assert_criterion(5);
}

#[test]
fn criterion_06_simulated_10ms_plateau() {
    assert_criterion(6);
}

#[test]
fn criterion_07_post_pulse_recovery() {
    assert_criterion(7);
}

#[test]
fn criterion_08_population_conservation() {
    assert_criterion(8);
}

#[test]
fn criterion_09_no_masing() {
    assert_criterion(9);
}

#[test]
fn criterion_10_integrator_oracles() {
    assert_criterion(10);
}

#[test]
fn criterion_11_boltzmann_fractions() {
    assert_criterion(11);
}

#[test]
fn criterion_12_coupling_coefficient_oracle() {
    assert_criterion(12);
}

#[test]
fn criterion_13_tolerance_robustness() {
    assert_criterion(13);
}

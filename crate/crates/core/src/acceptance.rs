//! End-to-end acceptance harness.
//!
//! Every criterion is evaluated at its stated tolerance against the builtin
//! scenarios and reference values. Outcomes report measured vs expected so a
//! failed criterion documents exactly what the build produced. The same
//! checks back the `acceptance` integration test target and the CLI
//! `acceptance` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ScenarioConfig;
use crate::constants::PhysicalConstants;
use crate::coupling::einstein_b;
use crate::dynamics::{boltzmann_initial_state, simulate_with, SimulationResult, SolverSettings};
use crate::integrator::{integrate, IvpProblem};
use crate::model::{CavityMode, SimulationSetup};
use crate::noise::{
    invert_noise_power_reduction, noise_power_reduction, photons_from_temperature, NoiseChainParams,
};
use crate::scenario::builtin_scenario;
use crate::signal::fit_decay_time;

/// Result of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: usize,
    pub label: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:2}. {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.label,
            self.detail
        )
    }
}

const F_MODE: f64 = 2.872e9;

struct SharedRuns {
    fig3_setup: SimulationSetup,
    fig3: SimulationResult,
    fig4: SimulationResult,
    fig3_tight: SimulationResult,
    fig4_tight: SimulationResult,
    noise: NoiseChainParams,
}

fn shared_runs() -> SharedRuns {
    let fig3_cfg: ScenarioConfig = builtin_scenario("fig3").expect("builtin");
    let fig4_cfg: ScenarioConfig = builtin_scenario("fig4").expect("builtin");
    let solver = SolverSettings::default();
    let tight = SolverSettings {
        rtol: solver.rtol / 10.0,
        ..solver
    };
    SharedRuns {
        fig3: simulate_with(&fig3_cfg.setup, &solver).expect("fig3 simulation"),
        fig4: simulate_with(&fig4_cfg.setup, &solver).expect("fig4 simulation"),
        fig3_tight: simulate_with(&fig3_cfg.setup, &tight).expect("fig3 tight simulation"),
        fig4_tight: simulate_with(&fig4_cfg.setup, &tight).expect("fig4 tight simulation"),
        fig3_setup: fig3_cfg.setup,
        noise: fig4_cfg.noise,
    }
}

fn check(id: usize, label: &'static str, passed: bool, detail: String) -> CriterionOutcome {
    CriterionOutcome {
        id,
        label,
        passed,
        detail,
    }
}

fn criterion_1() -> CriterionOutcome {
    let q = photons_from_temperature(290.0, F_MODE);
    check(
        1,
        "photon-number anchor at 290 K",
        (q - 2103.0).abs() <= 0.5,
        format!("measured {q:.4} photons, expected 2103 +/- 0.5"),
    )
}

fn criterion_2() -> CriterionOutcome {
    let q = photons_from_temperature(192.0, F_MODE);
    check(
        2,
        "cooled photon number at 192 K",
        (q - 1392.0).abs() <= 1.0,
        format!("measured {q:.4} photons, expected 1392 +/- 1"),
    )
}

fn criterion_3(noise: &NoiseChainParams) -> CriterionOutcome {
    let dp = noise_power_reduction(192.0, noise);
    check(
        3,
        "noise-model reduction at 192 K",
        (dp - -1.9).abs() <= 0.05,
        format!("measured {dp:.4} dB, expected -1.9 +/- 0.05 dB"),
    )
}

fn criterion_4(noise: &NoiseChainParams) -> CriterionOutcome {
    let t_headline = match invert_noise_power_reduction(-1.9, noise) {
        Ok(t) => t,
        Err(e) => {
            return check(
                4,
                "noise-model inversion",
                false,
                format!("inversion failed: {e}"),
            )
        }
    };
    let anchor_ok = (t_headline - 192.0).abs() <= 2.0;

    // Round trip over the monotone inversion domain. The forward map is
    // non-monotone below ~11 K (see the noise module tests), so temperatures
    // are drawn from [12, 290] K where the inverse is unique.
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e76_636f_6f6c);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..100 {
        let t: f64 = rng.gen_range(12.0..=290.0);
        match invert_noise_power_reduction(noise_power_reduction(t, noise), noise) {
            Ok(back) => {
                let err = (back - t).abs();
                worst = worst.max(err);
                if err > 1e-6 {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    check(
        4,
        "inversion consistency",
        anchor_ok && failures == 0,
        format!(
            "invert(-1.9 dB) = {t_headline:.3} K (expected 192 +/- 2); round trip over 100 random T in [12, 290] K: worst |dT| = {worst:.2e} K (tolerance 1e-6)"
        ),
    )
}

fn min_t_mode(result: &SimulationResult) -> (f64, f64) {
    crate::signal::cooling_depth(&result.t_mode_trace)
}

fn criterion_5(runs: &SharedRuns) -> CriterionOutcome {
    let (min_t, at) = min_t_mode(&runs.fig3);
    check(
        5,
        "simulated 2 ms cooling depth",
        (min_t - 192.0).abs() <= 5.0,
        format!(
            "measured min T_mode = {min_t:.2} K at t = {:.3} ms, expected 192 +/- 5 K",
            at * 1e3
        ),
    )
}

fn plateau_stats(result: &SimulationResult, from: f64, to: f64) -> (f64, f64) {
    let values: Vec<f64> = result
        .times
        .iter()
        .zip(&result.t_mode_trace.values)
        .filter(|(t, _)| **t >= from - 1e-12 && **t <= to + 1e-12)
        .map(|(_, v)| *v)
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().cloned().fold(f64::INFINITY, f64::min);
    (mean, spread)
}

fn criterion_6(runs: &SharedRuns) -> CriterionOutcome {
    let (mean, spread) = plateau_stats(&runs.fig4, 5e-3, 10e-3);
    check(
        6,
        "simulated 10 ms plateau",
        (mean - 188.0).abs() <= 5.0 && spread < 2.0,
        format!(
            "plateau over final 5 ms of the pulse: mean {mean:.2} K (expected 188 +/- 5 K), variation {spread:.2} K (< 2 K)"
        ),
    )
}

fn fitted_recovery_tau(result: &SimulationResult) -> Result<f64, crate::signal::SignalError> {
    fit_decay_time(&result.t_mode_trace, 2e-3)
}

fn criterion_7(runs: &SharedRuns) -> CriterionOutcome {
    match fitted_recovery_tau(&runs.fig3) {
        Ok(tau) => check(
            7,
            "post-pulse recovery time",
            (8e-3..=14e-3).contains(&tau),
            format!(
                "fitted tau = {:.2} ms, expected within [8, 14] ms",
                tau * 1e3
            ),
        ),
        Err(e) => check(
            7,
            "post-pulse recovery time",
            false,
            format!("fit failed: {e}"),
        ),
    }
}

fn criterion_8(runs: &SharedRuns) -> CriterionOutcome {
    let n_total = runs.fig3_setup.n_total;
    let d3 = runs.fig3.max_conservation_drift(n_total);
    let d4 = runs.fig4.max_conservation_drift(n_total);
    let worst = d3.max(d4);
    check(
        8,
        "population conservation",
        worst < 1e-6,
        format!("max |sum N - N_T|/N_T = {worst:.2e} over both scenarios (tolerance 1e-6)"),
    )
}

fn criterion_9(runs: &SharedRuns) -> CriterionOutcome {
    let excess = |r: &SimulationResult| {
        let q0 = r.states[0].q;
        r.states
            .iter()
            .map(|s| s.q - q0)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let worst = excess(&runs.fig3).max(excess(&runs.fig4));
    check(
        9,
        "no masing (photon ceiling)",
        worst <= 1.0,
        format!("max q(t) - q(0) = {worst:.3} photons over both scenarios (tolerance +1)"),
    )
}

fn criterion_10() -> CriterionOutcome {
    let rtol = 1e-8;

    // analytic exponential
    let exp_problem = IvpProblem {
        rhs: |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0],
        t_span: (0.0, 1.0),
        y0: vec![1.0],
        rtol,
        atol: vec![1e-12],
    };
    let exp_err = match integrate(&exp_problem, &[1.0]) {
        Ok(out) => ((out[0][0] - (-1.0f64).exp()) / (-1.0f64).exp()).abs(),
        Err(e) => {
            return check(
                10,
                "integrator oracle suite",
                false,
                format!("exponential failed: {e}"),
            )
        }
    };

    // stiff 2x2, eigenvalues {-1, -1e6}; closed form via eigendecomposition
    let stiff_problem = IvpProblem {
        rhs: |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[0] + (1.0 - 1e6) * y[1];
            dy[1] = -1e6 * y[1];
        },
        t_span: (0.0, 1.0),
        y0: vec![2.0, 1.0],
        rtol,
        atol: vec![1e-12, 1e-12],
    };
    let stiff_err = match integrate(&stiff_problem, &[1.0]) {
        Ok(out) => {
            let exact = (-1.0f64).exp();
            ((out[0][0] - exact) / exact).abs()
        }
        Err(e) => {
            return check(
                10,
                "integrator oracle suite",
                false,
                format!("stiff system failed: {e}"),
            )
        }
    };

    // tolerance-halving monotonicity across the whole suite
    let mut exp_errors = Vec::new();
    let mut stiff_errors = Vec::new();
    let mut r = 1e-5;
    while r >= 1e-9 {
        let exp_p = IvpProblem {
            rhs: |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0],
            t_span: (0.0, 1.0),
            y0: vec![1.0],
            rtol: r,
            atol: vec![r * 1e-4],
        };
        let stiff_p = IvpProblem {
            rhs: |_t: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = -y[0] + (1.0 - 1e6) * y[1];
                dy[1] = -1e6 * y[1];
            },
            t_span: (0.0, 1.0),
            y0: vec![2.0, 1.0],
            rtol: r,
            atol: vec![r * 1e-4, r * 1e-4],
        };
        match (integrate(&exp_p, &[1.0]), integrate(&stiff_p, &[1.0])) {
            (Ok(a), Ok(b)) => {
                exp_errors.push((a[0][0] - (-1.0f64).exp()).abs());
                stiff_errors.push((b[0][0] - (-1.0f64).exp()).abs());
            }
            (Err(e), _) | (_, Err(e)) => {
                return check(
                    10,
                    "integrator oracle suite",
                    false,
                    format!("sweep failed: {e}"),
                )
            }
        }
        r *= 0.5;
    }
    let monotone = exp_errors.windows(2).all(|w| w[1] <= w[0] + 1e-15)
        && stiff_errors.windows(2).all(|w| w[1] <= w[0] + 1e-15);

    check(
        10,
        "integrator oracle suite",
        exp_err <= 10.0 * rtol && stiff_err <= 10.0 * rtol && monotone,
        format!(
            "exponential rel err {exp_err:.2e}, stiff rel err {stiff_err:.2e} (tolerance {:.0e}), halving monotone on both problems: {monotone}",
            10.0 * rtol
        ),
    )
}

fn criterion_11() -> CriterionOutcome {
    let setup = SimulationSetup::default();
    let s = boltzmann_initial_state(&setup);
    let f0 = (s.n0 / setup.n_total * 1e4).round() / 1e4;
    let f1 = (s.n1 / setup.n_total * 1e4).round() / 1e4;
    let f2 = (s.n2 / setup.n_total * 1e4).round() / 1e4;
    check(
        11,
        "Boltzmann initial fractions",
        (f0, f1, f2) == (0.3334, 0.3333, 0.3333),
        format!("rounded fractions ({f0}, {f1}, {f2}), expected (0.3334, 0.3333, 0.3333)"),
    )
}

fn criterion_12() -> CriterionOutcome {
    let c = PhysicalConstants::codata();
    let b = einstein_b(
        &crate::coupling::CouplingParams::default(),
        &CavityMode::default(),
        &c,
    );
    // independent arithmetic route, grouped differently
    let gamma = std::f64::consts::TAU * 28e9;
    let oracle =
        (c.mu_0 / (2.0 * 8.4e-8)) * (gamma * gamma) * (c.h * 2.872e9) * (3e-6 * 0.5 * 0.018);
    let rel = ((b - oracle) / oracle).abs();
    check(
        12,
        "coupling-coefficient oracle",
        rel <= 1e-12,
        format!("B = {b:.6e} /s/photon vs independent evaluation {oracle:.6e}, rel diff {rel:.2e} (tolerance 1e-12)"),
    )
}

fn criterion_13(runs: &SharedRuns) -> CriterionOutcome {
    let (min3, _) = min_t_mode(&runs.fig3);
    let (min3t, _) = min_t_mode(&runs.fig3_tight);
    let (mean4, spread4) = plateau_stats(&runs.fig4_tight, 5e-3, 10e-3);
    let tau = fitted_recovery_tau(&runs.fig3_tight);

    let c5 = (min3t - 192.0).abs() <= 5.0;
    let c6 = (mean4 - 188.0).abs() <= 5.0 && spread4 < 2.0;
    let (c7, tau_detail) = match &tau {
        Ok(t) => ((8e-3..=14e-3).contains(t), format!("{:.2} ms", t * 1e3)),
        Err(e) => (false, format!("fit failed: {e}")),
    };
    let shift = (min3t - min3).abs();
    check(
        13,
        "robustness under 10x tighter rtol",
        c5 && c6 && c7 && shift < 1.0,
        format!(
            "at rtol/10: min T_mode {min3t:.2} K (shift {shift:.3} K, must stay < 1 K), plateau {mean4:.2} K (variation {spread4:.2} K), tau {tau_detail}; criteria 5-7 in-band: {c5}/{c6}/{c7}"
        ),
    )
}

/// Runs every acceptance criterion and returns the outcomes in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    let runs = shared_runs();
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(&runs.noise),
        criterion_4(&runs.noise),
        criterion_5(&runs),
        criterion_6(&runs),
        criterion_7(&runs),
        criterion_8(&runs),
        criterion_9(&runs),
        criterion_10(),
        criterion_11(),
        criterion_12(),
        criterion_13(&runs),
    ]
}

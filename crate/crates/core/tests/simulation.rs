//! Integration tests for full simulation behavior: invariants that need real
//! runs rather than unit-level checks.

use nvcool::dynamics::{simulate, simulate_with, SolverSettings};
use nvcool::model::{setup_with_pulse, SimulationSetup};
use nvcool::scenario::builtin_scenario;
use nvcool::signal::cooling_depth;

fn fig3_setup() -> SimulationSetup {
    builtin_scenario("fig3").unwrap().setup
}

#[test]
fn pumped_run_cools_and_recovers_monotonically() {
    let result = simulate(&fig3_setup()).unwrap();
    let (min_t, t_at) = cooling_depth(&result.t_mode_trace);
    assert!(min_t < 210.0, "expected deep cooling, got {min_t}");
    assert!(
        (t_at - 2e-3).abs() < 2e-4,
        "coldest point should sit at the pulse end"
    );

    // q recovers toward its initial value monotonically after the pulse
    // (within a small numerical ripple)
    let start = result.times.iter().position(|&t| t >= 2e-3).unwrap();
    let q0 = result.states[0].q;
    let mut prev = f64::NEG_INFINITY;
    for s in &result.states[start..] {
        assert!(s.q >= prev - 1e-6, "q not monotone during recovery");
        assert!(s.q <= q0 + 1.0, "q overshot its initial value");
        prev = s.q;
    }
    // recovered to within a photon of the starting occupation by the end
    let q_end = result.states.last().unwrap().q;
    assert!((q_end - q0).abs() < 1.0, "q_end = {q_end}, q0 = {q0}");
}

#[test]
fn photon_floor_holds_during_pumping() {
    let result = simulate(&fig3_setup()).unwrap();
    let q_initial = result.states[0].q;
    for s in &result.states {
        assert!(
            s.q <= q_initial + 1e-6,
            "photon number rose above the initial occupation"
        );
    }
}

#[test]
fn populations_stay_nonnegative_within_tolerance() {
    let solver = SolverSettings::default();
    let result = simulate_with(&fig3_setup(), &solver).unwrap();
    for s in &result.states {
        for v in s.to_array() {
            assert!(
                v >= -solver.atol_population,
                "component went below -atol: {v}"
            );
        }
    }
}

#[test]
fn conservation_holds_across_scenarios() {
    for name in ["fig3", "fig4"] {
        let setup = builtin_scenario(name).unwrap().setup;
        let result = simulate(&setup).unwrap();
        let drift = result.max_conservation_drift(setup.n_total);
        assert!(drift < 1e-6, "{name}: drift {drift}");
    }
}

#[test]
fn stiff_horizon_completes_at_tight_tolerance() {
    // full rate-constant spread over a 12 ms horizon at rtol 1e-8
    let setup = setup_with_pulse(0.0, 2e-3, 2.0, 12e-3);
    let result = simulate(&setup).unwrap();
    assert_eq!(result.times.len(), 1201);
    assert!(result.states.iter().all(|s| s.q.is_finite()));
}

#[test]
fn tightening_tolerance_barely_moves_the_answer() {
    let setup = fig3_setup();
    let base = simulate_with(&setup, &SolverSettings::default()).unwrap();
    let tight = simulate_with(
        &setup,
        &SolverSettings {
            rtol: 1e-9,
            ..SolverSettings::default()
        },
    )
    .unwrap();
    let (min_base, _) = cooling_depth(&base.t_mode_trace);
    let (min_tight, _) = cooling_depth(&tight.t_mode_trace);
    assert!(
        (min_base - min_tight).abs() < 1.0,
        "min T_mode moved {} K under 10x tighter rtol",
        (min_base - min_tight).abs()
    );
}

#[test]
fn longer_pulse_cools_deeper_and_holds() {
    let fig3 = simulate(&fig3_setup()).unwrap();
    let fig4 = simulate(&builtin_scenario("fig4").unwrap().setup).unwrap();
    let (min3, _) = cooling_depth(&fig3.t_mode_trace);
    let (min4, _) = cooling_depth(&fig4.t_mode_trace);
    assert!(min4 < min3, "10 ms pulse should reach deeper than 2 ms");

    // plateau: final 5 ms of the pulse varies by less than 2 K
    let window: Vec<f64> = fig4
        .times
        .iter()
        .zip(&fig4.t_mode_trace.values)
        .filter(|(t, _)| **t >= 5e-3 && **t <= 10e-3)
        .map(|(_, v)| *v)
        .collect();
    let spread = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - window.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 2.0, "plateau variation {spread}");
}

#[test]
fn doubled_pump_power_cools_deeper() {
    let base = simulate(&fig3_setup()).unwrap();
    let mut strong = fig3_setup();
    strong.pump.profile = nvcool::photophysics::PowerProfile::square_pulse(0.0, 2e-3, 4.0);
    let strong_result = simulate(&strong).unwrap();
    let (min_base, _) = cooling_depth(&base.t_mode_trace);
    let (min_strong, _) = cooling_depth(&strong_result.t_mode_trace);
    assert!(min_strong < min_base);
}

#[test]
fn sensitivity_smoke_tests_for_miskeyed_constants() {
    // gamma_02 entered 10x too large destroys the recovery-time agreement
    let mut fast_relax = fig3_setup();
    fast_relax.params.rates.gamma_02 *= 10.0;
    let fast = simulate(&fast_relax).unwrap();
    let tau_fast = nvcool::signal::fit_decay_time(&fast.t_mode_trace, 2e-3).unwrap();
    let base = simulate(&fig3_setup()).unwrap();
    let tau_base = nvcool::signal::fit_decay_time(&base.t_mode_trace, 2e-3).unwrap();
    assert!(
        tau_fast < 0.3 * tau_base,
        "tau must collapse when gamma_02 is 10x too large"
    );

    // unity LNA gain destroys the noise-reduction anchor
    let flat = nvcool::noise::NoiseChainParams {
        g_lna: 1.0,
        ..Default::default()
    };
    let dp = nvcool::noise::noise_power_reduction(192.0, &flat);
    assert!(
        (dp - -1.9).abs() > 0.05,
        "dP(192 K) must leave tolerance when G_LNA = 1"
    );
}

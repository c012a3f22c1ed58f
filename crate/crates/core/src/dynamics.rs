//! Assembly and integration of the coupled spin/photon rate equations.
//!
//! The eight coupled equations track the seven NV⁻ level populations
//! (triplet ground |0⟩,|1⟩,|2⟩, optical excited |3⟩,|4⟩,|5⟩, metastable
//! singlet |S⟩) and the thermal photon number q of the cavity mode. Optical
//! pumping enters through ξ(t); the mode couples to the |0⟩↔|2⟩ pair through
//! the stimulated rate W₀₂ = B·q; the photon equation relaxes q toward the
//! ambient bath occupation (k_B/h·f)·T₀ at the cavity loss rate.
//!
//! The seven population derivatives cancel pairwise, so ΣN is conserved
//! identically and any drift measures integrator error.

use thiserror::Error;

use crate::constants::PhysicalConstants;
use crate::coupling::einstein_b;
use crate::integrator::{integrate, IntegratorError, IvpProblem};
use crate::model::{validate_setup, SimulationSetup, SpinPhotonState, Violation};
use crate::noise::{photons_from_temperature, temperature_from_photons};
use crate::photophysics::{pump_rate_per_watt, PhotophysicsError};
use crate::signal::Trace;

/// Solver tolerances for the rate-equation integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative tolerance.
    pub rtol: f64,
    /// Absolute tolerance for the seven population components (counts).
    pub atol_population: f64,
    /// Absolute tolerance for the photon number.
    pub atol_photon: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol_population: 1e-6,
            atol_photon: 1e-5,
        }
    }
}

impl SolverSettings {
    fn atol_vector(&self) -> Vec<f64> {
        let mut v = vec![self.atol_population; 8];
        v[7] = self.atol_photon;
        v
    }
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("setup validation failed: {}", format_violations(.0))]
    Validation(Vec<Violation>),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Photophysics(#[from] PhotophysicsError),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Everything the right-hand side needs, precomputed once per run.
#[derive(Debug, Clone, Copy)]
struct RateCoefficients {
    gamma_02: f64,
    k_sp: f64,
    k_s0: f64,
    k_s2: f64,
    k_3s: f64,
    k_5s: f64,
    /// Einstein B coefficient (s⁻¹ per photon).
    b: f64,
    /// Cavity loss rate κ (s⁻¹).
    kappa: f64,
    /// Bath photon number (k_B/h·f)·T₀ of the photon equation.
    q_bath: f64,
}

impl RateCoefficients {
    fn from_setup(setup: &SimulationSetup, b: f64) -> Self {
        let constants = PhysicalConstants::codata();
        let r = &setup.params.rates;
        let c = &setup.params.cavity;
        Self {
            gamma_02: r.gamma_02,
            k_sp: r.k_sp,
            k_s0: r.k_s0,
            k_s2: r.k_s2,
            k_3s: r.k_3s,
            k_5s: r.k_5s,
            b,
            kappa: c.loss_rate(),
            q_bath: constants.k_b / (constants.h * c.f_mode) * c.t0,
        }
    }

    /// The eight coupled right-hand sides for pumping rate `xi`.
    fn rhs(&self, xi: f64, y: &[f64], dy: &mut [f64]) {
        let (n0, n1, n2, n3, n4, n5, ns, q) = (y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7]);
        let g = self.gamma_02;
        let bq = self.b * q;
        dy[0] = -(xi + 2.0 * g + bq) * n0
            + g * n1
            + (g + bq) * n2
            + (xi + self.k_sp) * n3
            + self.k_s0 * ns;
        dy[1] = g * n0 - (xi + g) * n1 + (xi + self.k_sp) * n4 + self.k_s2 * ns;
        dy[2] = (g + bq) * n0 - (xi + g + bq) * n2 + (xi + self.k_sp) * n5 + self.k_s2 * ns;
        dy[3] = xi * n0 - (xi + self.k_sp + self.k_3s) * n3;
        dy[4] = xi * n1 - (xi + self.k_sp + self.k_5s) * n4;
        dy[5] = xi * n2 - (xi + self.k_sp + self.k_5s) * n5;
        dy[6] = self.k_3s * n3 + self.k_5s * (n4 + n5) - (self.k_s0 + 2.0 * self.k_s2) * ns;
        dy[7] = -self.kappa * (q - self.q_bath) + bq * (n2 - n0);
    }
}

/// The eight time derivatives of the state at time `t` for coupling
/// coefficient `b`, with ξ(t) evaluated from the setup's pump configuration.
pub fn derivatives(
    state: &SpinPhotonState,
    t: f64,
    setup: &SimulationSetup,
    b: f64,
) -> Result<[f64; 8], DynamicsError> {
    let constants = PhysicalConstants::codata();
    let per_watt = pump_rate_per_watt(&setup.pump, &constants)?;
    let xi = per_watt * setup.pump.profile.power_at(t);
    let coeffs = RateCoefficients::from_setup(setup, b);
    let y = state.to_array();
    let mut dy = [0.0; 8];
    coeffs.rhs(xi, &y, &mut dy);
    Ok(dy)
}

/// Initial state before pumping: |0⟩,|1⟩,|2⟩ populated by Boltzmann weights
/// at T₀ across the zero-field splitting (|1⟩,|2⟩ degenerate), all excited
/// levels empty, and the mode at its thermal photon number.
pub fn boltzmann_initial_state(setup: &SimulationSetup) -> SpinPhotonState {
    let constants = PhysicalConstants::codata();
    let c = &setup.params.cavity;
    let w = (-constants.h * c.f_mode / (constants.k_b * c.t0)).exp();
    let z = 1.0 + 2.0 * w;
    let n0 = setup.n_total / z;
    let n_upper = setup.n_total * w / z;
    SpinPhotonState {
        n0,
        n1: n_upper,
        n2: n_upper,
        n3: 0.0,
        n4: 0.0,
        n5: 0.0,
        ns: 0.0,
        q: photons_from_temperature(c.t0, c.f_mode),
    }
}

fn integrate_window(
    coeffs: &RateCoefficients,
    xi: f64,
    y0: [f64; 8],
    t_span: (f64, f64),
    samples: &[f64],
    solver: &SolverSettings,
) -> Result<Vec<Vec<f64>>, IntegratorError> {
    let problem = IvpProblem {
        rhs: move |_t: f64, y: &[f64], dy: &mut [f64]| coeffs.rhs(xi, y, dy),
        t_span,
        y0: y0.to_vec(),
        rtol: solver.rtol,
        atol: solver.atol_vector(),
    };
    integrate(&problem, samples)
}

/// Evolves the state for `setup.equilibration_time` with the pump off, so the
/// weak spin–photon coupling settles before t = 0. Identity when the
/// equilibration time is zero.
pub fn equilibrate(
    state: &SpinPhotonState,
    setup: &SimulationSetup,
    b: f64,
) -> Result<SpinPhotonState, DynamicsError> {
    equilibrate_with(state, setup, b, &SolverSettings::default())
}

/// [`equilibrate`] with explicit solver settings.
pub fn equilibrate_with(
    state: &SpinPhotonState,
    setup: &SimulationSetup,
    b: f64,
    solver: &SolverSettings,
) -> Result<SpinPhotonState, DynamicsError> {
    if setup.equilibration_time == 0.0 {
        return Ok(*state);
    }
    let coeffs = RateCoefficients::from_setup(setup, b);
    let t_end = setup.equilibration_time;
    let out = integrate_window(
        &coeffs,
        0.0,
        state.to_array(),
        (0.0, t_end),
        &[t_end],
        solver,
    )?;
    let last = &out[out.len() - 1];
    let mut arr = [0.0; 8];
    arr.copy_from_slice(last);
    Ok(SpinPhotonState::from_array(arr))
}

/// Result of one simulation run. All traces share the uniform sample grid.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    /// Sample times (s), starting at 0.
    pub times: Vec<f64>,
    /// Full state at each sample time.
    pub states: Vec<SpinPhotonState>,
    /// Mode temperature (K) from the photon number at each sample.
    pub t_mode_trace: Trace,
    /// Instantaneous pump power (W) at each sample.
    pub pulse_trace: Trace,
}

impl SimulationResult {
    /// Largest relative population-conservation drift over all samples.
    pub fn max_conservation_drift(&self, n_total: f64) -> f64 {
        self.states
            .iter()
            .map(|s| ((s.total_population() - n_total) / n_total).abs())
            .fold(0.0, f64::max)
    }

    /// The photon-number trace as a [`Trace`].
    pub fn q_trace(&self) -> Trace {
        Trace {
            t0: self.times[0],
            dt: self.t_mode_trace.dt,
            values: self.states.iter().map(|s| s.q).collect(),
            label: "q_photons".to_string(),
        }
    }
}

/// Runs the full pipeline: Boltzmann initial state, equilibration with the
/// pump off, then the pumped integration over `[0, t_end]`, split at every
/// pump-profile edge so each window has a constant pumping rate.
pub fn simulate(setup: &SimulationSetup) -> Result<SimulationResult, DynamicsError> {
    simulate_with(setup, &SolverSettings::default())
}

/// [`simulate`] with explicit solver settings.
pub fn simulate_with(
    setup: &SimulationSetup,
    solver: &SolverSettings,
) -> Result<SimulationResult, DynamicsError> {
    let violations = validate_setup(setup);
    if !violations.is_empty() {
        return Err(DynamicsError::Validation(violations));
    }

    let constants = PhysicalConstants::codata();
    let b = einstein_b(&setup.coupling, &setup.params.cavity, &constants);
    let per_watt = pump_rate_per_watt(&setup.pump, &constants)?;
    let coeffs = RateCoefficients::from_setup(setup, b);

    let initial = boltzmann_initial_state(setup);
    let equilibrated = equilibrate_with(&initial, setup, b, solver)?;

    // Uniform output grid.
    let n_samples = (setup.t_end / setup.output_dt + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=n_samples)
        .map(|k| k as f64 * setup.output_dt)
        .collect();

    // Windows of constant pump power: split at every profile edge in (0, t_end).
    let mut edges: Vec<f64> = vec![0.0];
    edges.extend(
        setup
            .pump
            .profile
            .edges()
            .into_iter()
            .filter(|&e| e > 0.0 && e < setup.t_end),
    );
    edges.push(setup.t_end);
    edges.dedup();

    let mut states: Vec<SpinPhotonState> = Vec::with_capacity(times.len());
    states.push(equilibrated);

    let mut y = equilibrated.to_array();
    let mut sample_idx = 1; // times[0] = 0 already recorded
    for window in edges.windows(2) {
        let (w0, w1) = (window[0], window[1]);
        // constant power inside the window; probe at the midpoint
        let power = setup.pump.profile.power_at(0.5 * (w0 + w1));
        let xi = per_watt * power;

        let mut window_samples: Vec<f64> = Vec::new();
        while sample_idx < times.len() && times[sample_idx] <= w1 + 1e-12 * setup.t_end {
            window_samples.push(times[sample_idx].min(w1));
            sample_idx += 1;
        }
        let needs_endpoint = window_samples.last().is_none_or(|&t| t < w1);
        if needs_endpoint {
            window_samples.push(w1);
        }

        let out = integrate_window(&coeffs, xi, y, (w0, w1), &window_samples, solver)?;
        let n_grid = window_samples.len() - usize::from(needs_endpoint);
        for row in out.iter().take(n_grid) {
            let mut arr = [0.0; 8];
            arr.copy_from_slice(row);
            states.push(SpinPhotonState::from_array(arr));
        }
        let last = &out[out.len() - 1];
        y.copy_from_slice(last);
    }

    debug_assert_eq!(states.len(), times.len());

    let f_mode = setup.params.cavity.f_mode;
    let t_mode_trace = Trace {
        t0: 0.0,
        dt: setup.output_dt,
        values: states
            .iter()
            .map(|s| temperature_from_photons(s.q, f_mode))
            .collect(),
        label: "t_mode_K".to_string(),
    };
    let pulse_trace = Trace {
        t0: 0.0,
        dt: setup.output_dt,
        values: times
            .iter()
            .map(|&t| setup.pump.profile.power_at(t))
            .collect(),
        label: "pulse_W".to_string(),
    };

    Ok(SimulationResult {
        times,
        states,
        t_mode_trace,
        pulse_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::setup_with_pulse;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn boltzmann_fractions_match_rounded_values() {
        let setup = SimulationSetup::default();
        let s = boltzmann_initial_state(&setup);
        let nt = setup.n_total;
        assert_relative_eq!(s.n0 / nt, 0.3334389618, max_relative = 1e-8);
        assert_relative_eq!(s.n1 / nt, 0.3332805191, max_relative = 1e-8);
        assert_eq!(s.n1, s.n2);
        // rounded to 4 decimal places: 0.3334, 0.3333, 0.3333
        assert_eq!((s.n0 / nt * 1e4).round() / 1e4, 0.3334);
        assert_eq!((s.n1 / nt * 1e4).round() / 1e4, 0.3333);
        assert_eq!(s.n3, 0.0);
        assert_eq!(s.ns, 0.0);
        // q = 2103 at 290 K
        assert_relative_eq!(s.q, 2103.476204567503, max_relative = 1e-10);
        assert_eq!(s.q.round(), 2103.0);
    }

    #[test]
    fn boltzmann_high_temperature_limit() {
        let mut setup = SimulationSetup::default();
        setup.params.cavity.t0 = 1e12;
        let s = boltzmann_initial_state(&setup);
        assert_relative_eq!(s.n0, setup.n_total / 3.0, max_relative = 1e-9);
        assert_relative_eq!(s.n1, setup.n_total / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn equilibrium_photon_fixed_point() {
        // At the Rayleigh-Jeans bath occupation with xi = 0 and B = 0, all
        // derivatives vanish except the population relaxation terms, which
        // vanish too when N0 = N1 = N2.
        let setup = SimulationSetup::default();
        let constants = PhysicalConstants::codata();
        let c = &setup.params.cavity;
        let q_rj = constants.k_b * c.t0 / (constants.h * c.f_mode);
        let nt = setup.n_total;
        let state = SpinPhotonState {
            n0: nt / 3.0,
            n1: nt / 3.0,
            n2: nt / 3.0,
            n3: 0.0,
            n4: 0.0,
            n5: 0.0,
            ns: 0.0,
            q: q_rj,
        };
        let dy = derivatives(&state, 0.0, &setup, 0.0).unwrap();
        for (i, d) in dy.iter().enumerate() {
            let scale = if i == 7 {
                q_rj * c.loss_rate()
            } else {
                nt * setup.params.rates.k_sp
            };
            assert!(d.abs() <= 1e-12 * scale, "component {i} derivative {d}");
        }
        // With the Planck q instead, the only nonzero derivative is q's,
        // relaxing toward the Rayleigh-Jeans value.
        let planck = SpinPhotonState {
            q: photons_from_temperature(c.t0, c.f_mode),
            ..state
        };
        let dy = derivatives(&planck, 0.0, &setup, 0.0).unwrap();
        let expected = c.loss_rate() * (q_rj - planck.q);
        assert_relative_eq!(dy[7], expected, max_relative = 1e-9);
    }

    #[test]
    fn single_level_decay_terms() {
        let mut setup = SimulationSetup::default();
        setup.params.rates.gamma_02 = 0.0;
        let x = 1e10;
        let state = SpinPhotonState {
            n0: 0.0,
            n1: 0.0,
            n2: 0.0,
            n3: x,
            n4: 0.0,
            n5: 0.0,
            ns: 0.0,
            q: 0.0,
        };
        let r = setup.params.rates;
        let dy = derivatives(&state, 0.0, &setup, 0.0).unwrap();
        assert_relative_eq!(dy[3], -(r.k_sp + r.k_3s) * x, max_relative = 1e-12);
        assert_relative_eq!(dy[0], r.k_sp * x, max_relative = 1e-12);
        assert_relative_eq!(dy[6], r.k_3s * x, max_relative = 1e-12);
        assert_eq!(dy[1], 0.0);
        assert_eq!(dy[2], 0.0);
    }

    #[test]
    fn equilibrate_zero_time_is_identity() {
        let setup = SimulationSetup {
            equilibration_time: 0.0,
            ..SimulationSetup::default()
        };
        let s = boltzmann_initial_state(&setup);
        let out = equilibrate(&s, &setup, 1.19e-8).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn equilibrate_with_no_coupling_stays_close() {
        // The Boltzmann start differs from the rate-equation fixed point
        // (equal thirds) by ~1e-4 of N_T, so a 1 ms settle moves populations
        // by a few 1e-5 of N_T even with B = 0.
        let setup = SimulationSetup::default();
        let s = boltzmann_initial_state(&setup);
        let out = equilibrate(&s, &setup, 0.0).unwrap();
        for (a, b) in s.to_array().iter().zip(out.to_array().iter()) {
            assert!((a - b).abs() <= 1e-4 * setup.n_total);
        }
    }

    #[test]
    fn equilibrate_default_perturbation_is_small() {
        let setup = SimulationSetup::default();
        let constants = PhysicalConstants::codata();
        let b = einstein_b(&setup.coupling, &setup.params.cavity, &constants);
        let s = boltzmann_initial_state(&setup);
        let out = equilibrate(&s, &setup, b).unwrap();
        assert!((out.n0 - s.n0).abs() / setup.n_total < 1e-3);
        // photon number settles toward the Rayleigh-Jeans bath value
        assert!(out.q > s.q);
        assert!(out.q < s.q + 1.0);
    }

    #[test]
    fn simulate_rejects_invalid_setup() {
        let mut setup = SimulationSetup::default();
        setup.params.cavity.q0 = -1.0;
        match simulate(&setup) {
            Err(DynamicsError::Validation(v)) => assert_eq!(v[0].field, "cavity.q0"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn zero_power_trace_stays_at_ambient() {
        let setup = SimulationSetup {
            t_end: 6e-3,
            ..SimulationSetup::default()
        };
        let result = simulate(&setup).unwrap();
        for v in &result.t_mode_trace.values {
            assert!((v - 290.0).abs() < 0.1, "T_mode = {v}");
        }
        assert!(result.pulse_trace.values.iter().all(|&p| p == 0.0));
        assert!(result.max_conservation_drift(setup.n_total) < 1e-6);
    }

    #[test]
    fn grid_and_traces_are_consistent() {
        let setup = setup_with_pulse(0.0, 2e-3, 2.0, 6e-3);
        let result = simulate(&setup).unwrap();
        assert_eq!(result.times.len(), 601);
        assert_eq!(result.states.len(), result.times.len());
        assert_eq!(result.t_mode_trace.values.len(), result.times.len());
        assert_eq!(result.pulse_trace.values.len(), result.times.len());
        assert_eq!(result.times[1], 1e-5);
        // pulse column reflects the profile (right-continuous)
        assert_eq!(result.pulse_trace.values[0], 2.0);
        assert_eq!(result.pulse_trace.values[100], 2.0);
        assert_eq!(result.pulse_trace.values[199], 2.0);
        assert_eq!(result.pulse_trace.values[201], 0.0);
        assert_eq!(result.pulse_trace.values[300], 0.0);
    }

    proptest! {
        /// Population derivatives cancel identically for any state.
        #[test]
        fn population_derivatives_sum_to_zero(
            n in prop::collection::vec(0.0..1e15f64, 7),
            q in 0.0..1e4f64,
            xi_power in 0.0..4.0f64,
        ) {
            let mut setup = SimulationSetup::default();
            setup.pump.profile = crate::photophysics::PowerProfile::square_pulse(0.0, 1.0, xi_power);
            let state = SpinPhotonState {
                n0: n[0], n1: n[1], n2: n[2], n3: n[3], n4: n[4], n5: n[5], ns: n[6], q,
            };
            let dy = derivatives(&state, 0.5, &setup, 1.19e-8).unwrap();
            let sum: f64 = dy[..7].iter().sum();
            let flux: f64 = dy[..7].iter().map(|d| d.abs()).sum::<f64>().max(1.0);
            prop_assert!(sum.abs() <= 1e-12 * flux, "sum = {} flux = {}", sum, flux);
        }
    }
}

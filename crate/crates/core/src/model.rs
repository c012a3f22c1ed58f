//! Domain types shared by every other module, plus parameter validation.
//!
//! All types are immutable value objects after construction and safe to share
//! between threads. Populations are continuous real numbers: the dynamics are
//! deterministic mean-field rate equations, not stochastic jump processes.

use std::f64::consts::TAU;
use std::fmt;

use crate::coupling::CouplingParams;
use crate::photophysics::PumpConfig;

/// Relaxation and intersystem-crossing rate constants (all s⁻¹).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConstants {
    /// Spin-lattice relaxation rate between |0⟩ and each of |1⟩, |2⟩.
    pub gamma_02: f64,
    /// Spontaneous emission rate of the optical excited states.
    pub k_sp: f64,
    /// ISC rate |S⟩ → |0⟩.
    pub k_s0: f64,
    /// ISC rate |S⟩ → |1⟩ and |S⟩ → |2⟩ (each).
    pub k_s2: f64,
    /// ISC rate |3⟩ → |S⟩.
    pub k_3s: f64,
    /// ISC rate |4⟩ → |S⟩ and |5⟩ → |S⟩ (each).
    pub k_5s: f64,
}

impl Default for RateConstants {
    fn default() -> Self {
        Self {
            gamma_02: 1.0 / 0.012,
            k_sp: 6.6e7,
            k_s0: 1.0e6,
            k_s2: 7.3e5,
            k_3s: 7.9e6,
            k_5s: 5.3e7,
        }
    }
}

/// Microwave cavity mode parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityMode {
    /// Mode frequency (Hz).
    pub f_mode: f64,
    /// Unloaded quality factor.
    pub q0: f64,
    /// External (coupling) quality factor.
    pub q_ex: f64,
    /// Ambient temperature of the cavity (K).
    pub t0: f64,
}

impl CavityMode {
    /// Angular mode frequency ω = 2π·f_mode (rad/s).
    pub fn omega(&self) -> f64 {
        TAU * self.f_mode
    }

    /// Total photon loss rate κ = ω·(1/Q₀ + 1/Q_ex) (s⁻¹).
    pub fn loss_rate(&self) -> f64 {
        self.omega() * (1.0 / self.q0 + 1.0 / self.q_ex)
    }
}

impl Default for CavityMode {
    fn default() -> Self {
        // Critically coupled: Q0 = Qex = 2 * loaded Q of 2900.
        Self {
            f_mode: 2.872e9,
            q0: 5800.0,
            q_ex: 5800.0,
            t0: 290.0,
        }
    }
}

/// Rate constants plus cavity mode: everything the rate equations need besides
/// the pump and the coupling coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModelParameters {
    pub rates: RateConstants,
    pub cavity: CavityMode,
}

/// The 8-component dynamical state: seven level populations and the thermal
/// photon number of the mode.
///
/// The flat-vector ordering is fixed as `(N0, N1, N2, N3, N4, N5, NS, q)`
/// everywhere in this crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinPhotonState {
    pub n0: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
    pub n5: f64,
    pub ns: f64,
    /// Thermal photon number of the cavity mode.
    pub q: f64,
}

impl SpinPhotonState {
    /// State as the fixed-order flat vector.
    pub fn to_array(self) -> [f64; 8] {
        [
            self.n0, self.n1, self.n2, self.n3, self.n4, self.n5, self.ns, self.q,
        ]
    }

    /// State from the fixed-order flat vector.
    pub fn from_array(v: [f64; 8]) -> Self {
        Self {
            n0: v[0],
            n1: v[1],
            n2: v[2],
            n3: v[3],
            n4: v[4],
            n5: v[5],
            ns: v[6],
            q: v[7],
        }
    }

    /// Sum of all seven level populations.
    pub fn total_population(&self) -> f64 {
        self.n0 + self.n1 + self.n2 + self.n3 + self.n4 + self.n5 + self.ns
    }
}

/// Everything needed to run one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSetup {
    pub params: ModelParameters,
    pub pump: PumpConfig,
    pub coupling: CouplingParams,
    /// Total number of participating spins N_T.
    pub n_total: f64,
    /// Unpumped settling time before t = 0 (s).
    pub equilibration_time: f64,
    /// Simulated horizon after t = 0 (s).
    pub t_end: f64,
    /// Output sampling interval (s).
    pub output_dt: f64,
}

impl Default for SimulationSetup {
    fn default() -> Self {
        Self {
            params: ModelParameters::default(),
            pump: PumpConfig::default(),
            coupling: CouplingParams::default(),
            n_total: 0.72e15,
            equilibration_time: 1e-3,
            t_end: 12e-3,
            output_dt: 1e-5,
        }
    }
}

/// A single violated invariant, reported as data rather than an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Name of the offending field, dotted path from the setup root.
    pub field: String,
    pub reason: String,
}

impl Violation {
    fn new(field: &str, reason: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

fn require(out: &mut Vec<Violation>, field: &str, ok: bool, reason: &str, got: f64) {
    if !ok {
        out.push(Violation::new(field, format!("{reason} (got {got})")));
    }
}

/// Checks every invariant of a [`SimulationSetup`] and returns all violations.
///
/// The returned list is empty iff the setup is valid. Violations are data, not
/// errors: callers decide whether to abort.
pub fn validate_setup(setup: &SimulationSetup) -> Vec<Violation> {
    let mut v = Vec::new();

    let r = &setup.params.rates;
    for (field, value) in [
        ("rates.gamma_02", r.gamma_02),
        ("rates.k_sp", r.k_sp),
        ("rates.k_s0", r.k_s0),
        ("rates.k_s2", r.k_s2),
        ("rates.k_3s", r.k_3s),
        ("rates.k_5s", r.k_5s),
    ] {
        require(
            &mut v,
            field,
            value.is_finite() && value >= 0.0,
            "rate must be finite and >= 0",
            value,
        );
    }

    let c = &setup.params.cavity;
    require(
        &mut v,
        "cavity.f_mode",
        c.f_mode.is_finite() && c.f_mode > 0.0,
        "mode frequency must be positive",
        c.f_mode,
    );
    require(
        &mut v,
        "cavity.q0",
        c.q0.is_finite() && c.q0 > 0.0,
        "unloaded Q must be positive",
        c.q0,
    );
    require(
        &mut v,
        "cavity.q_ex",
        c.q_ex.is_finite() && c.q_ex > 0.0,
        "external Q must be positive",
        c.q_ex,
    );
    require(
        &mut v,
        "cavity.t0",
        c.t0.is_finite() && c.t0 > 0.0,
        "ambient temperature must be positive",
        c.t0,
    );

    let cp = &setup.coupling;
    require(
        &mut v,
        "coupling.gamma_gyro",
        cp.gamma_gyro.is_finite() && cp.gamma_gyro > 0.0,
        "gyromagnetic ratio must be positive",
        cp.gamma_gyro,
    );
    require(
        &mut v,
        "coupling.t2_star",
        cp.t2_star.is_finite() && cp.t2_star > 0.0,
        "T2* must be positive",
        cp.t2_star,
    );
    require(
        &mut v,
        "coupling.sigma_sq",
        cp.sigma_sq.is_finite() && cp.sigma_sq > 0.0 && cp.sigma_sq <= 1.0,
        "matrix element must be in (0, 1]",
        cp.sigma_sq,
    );
    require(
        &mut v,
        "coupling.eta_fill",
        cp.eta_fill.is_finite() && cp.eta_fill > 0.0 && cp.eta_fill <= 1.0,
        "filling factor must be in (0, 1]",
        cp.eta_fill,
    );
    require(
        &mut v,
        "coupling.v_mode",
        cp.v_mode.is_finite() && cp.v_mode > 0.0,
        "mode volume must be positive",
        cp.v_mode,
    );

    let p = &setup.pump;
    require(
        &mut v,
        "pump.wavelength",
        p.wavelength.is_finite() && p.wavelength > 0.0,
        "pump wavelength must be positive",
        p.wavelength,
    );
    require(
        &mut v,
        "pump.cross_section",
        p.cross_section.is_finite() && p.cross_section > 0.0,
        "absorption cross-section must be positive",
        p.cross_section,
    );
    require(
        &mut v,
        "pump.beam_area",
        p.beam_area.is_finite() && p.beam_area > 0.0,
        "beam area must be positive",
        p.beam_area,
    );
    require(
        &mut v,
        "pump.path_length_l",
        p.path_length_l.is_finite() && p.path_length_l > 0.0,
        "traversed thickness must be positive",
        p.path_length_l,
    );

    let s = &p.sample;
    require(
        &mut v,
        "sample.path_length_L",
        s.path_length_l.is_finite() && s.path_length_l > 0.0,
        "absorbance path length must be positive",
        s.path_length_l,
    );
    require(
        &mut v,
        "sample.n_sample",
        s.n_sample.is_finite() && s.n_sample >= 1.0,
        "refractive index must be >= 1",
        s.n_sample,
    );
    require(
        &mut v,
        "sample.n_ambient",
        s.n_ambient.is_finite() && s.n_ambient >= 1.0,
        "refractive index must be >= 1",
        s.n_ambient,
    );
    require(
        &mut v,
        "sample.alpha_pump",
        s.alpha_pump.is_finite() && s.alpha_pump >= 0.0,
        "absorption coefficient must be >= 0",
        s.alpha_pump,
    );

    let mut prev_end = f64::NEG_INFINITY;
    for (i, seg) in p.profile.segments.iter().enumerate() {
        let field = format!("pump.profile.segments[{i}]");
        if !(seg.start.is_finite() && seg.end.is_finite() && seg.end > seg.start) {
            v.push(Violation::new(
                &field,
                format!(
                    "segment must have end > start (got [{}, {}])",
                    seg.start, seg.end
                ),
            ));
        }
        if !(seg.power.is_finite() && seg.power >= 0.0) {
            v.push(Violation::new(
                &field,
                format!("segment power must be finite and >= 0 (got {})", seg.power),
            ));
        }
        if seg.start < prev_end {
            v.push(Violation::new(
                &field,
                "segments must be time-ordered and non-overlapping".to_string(),
            ));
        }
        prev_end = seg.end;
    }

    require(
        &mut v,
        "n_total",
        setup.n_total.is_finite() && setup.n_total > 0.0,
        "total spin count must be positive",
        setup.n_total,
    );
    require(
        &mut v,
        "equilibration_time",
        setup.equilibration_time.is_finite() && setup.equilibration_time >= 0.0,
        "equilibration time must be >= 0",
        setup.equilibration_time,
    );
    require(
        &mut v,
        "t_end",
        setup.t_end.is_finite() && setup.t_end > 0.0,
        "simulation horizon must be positive",
        setup.t_end,
    );
    require(
        &mut v,
        "output_dt",
        setup.output_dt.is_finite() && setup.output_dt > 0.0 && setup.output_dt <= setup.t_end,
        "sampling interval must be positive and <= t_end",
        setup.output_dt,
    );

    v
}

/// Convenience: the default parameter set with a square pump pulse.
pub fn setup_with_pulse(start: f64, width: f64, power: f64, t_end: f64) -> SimulationSetup {
    let mut setup = SimulationSetup {
        t_end,
        ..SimulationSetup::default()
    };
    setup.pump.profile = crate::photophysics::PowerProfile::square_pulse(start, width, power);
    setup
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_pass_validation() {
        let setup = SimulationSetup::default();
        let violations = validate_setup(&setup);
        assert!(
            violations.is_empty(),
            "unexpected violations: {violations:?}"
        );
    }

    #[test]
    fn default_setup_with_pulse_passes() {
        let setup = setup_with_pulse(0.0, 2e-3, 2.0, 12e-3);
        assert!(validate_setup(&setup).is_empty());
    }

    #[test]
    fn zero_q0_is_reported() {
        let mut setup = SimulationSetup::default();
        setup.params.cavity.q0 = 0.0;
        let violations = validate_setup(&setup);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].field, "cavity.q0");
    }

    #[test]
    fn output_dt_longer_than_horizon_is_reported() {
        let setup = SimulationSetup {
            output_dt: 1.0,
            t_end: 0.5,
            ..SimulationSetup::default()
        };
        let violations = validate_setup(&setup);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].field, "output_dt");
    }

    #[test]
    fn overlapping_segments_are_reported() {
        let mut setup = SimulationSetup::default();
        setup.pump.profile.segments = vec![
            crate::photophysics::PowerSegment {
                start: 0.0,
                end: 2.0,
                power: 1.0,
            },
            crate::photophysics::PowerSegment {
                start: 1.0,
                end: 3.0,
                power: 1.0,
            },
        ];
        let violations = validate_setup(&setup);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].field.contains("segments[1]"));
    }

    #[test]
    fn cavity_derived_quantities() {
        let c = CavityMode::default();
        assert!((c.omega() - TAU * 2.872e9).abs() < 1.0);
        // omega/2900 for the critically coupled default
        assert!((c.loss_rate() - 6.222520069730955e6).abs() < 1e-3);
    }

    #[test]
    fn state_array_round_trip() {
        let s = SpinPhotonState {
            n0: 1.0,
            n1: 2.0,
            n2: 3.0,
            n3: 4.0,
            n4: 5.0,
            n5: 6.0,
            ns: 7.0,
            q: 8.0,
        };
        assert_eq!(SpinPhotonState::from_array(s.to_array()), s);
        assert_eq!(s.total_population(), 28.0);
    }
}

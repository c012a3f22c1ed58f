//! Scenario configuration: `key = value` documents with dotted section paths.
//!
//! Grammar, one statement per line:
//!
//! ```text
//! # comment to end of line
//! cavity.f_mode = 2.872e9
//! pump.pulse.width = 0.002
//! outputs = t_mode,delta_p,pulse,q
//! ```
//!
//! Unknown keys are rejected with their line number; duplicate keys are an
//! error; every override is type-checked against the defaults. Keys under
//! `meta.` are accepted and ignored so run manifests parse back unchanged.

use std::collections::BTreeSet;

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::SolverSettings;
use crate::model::{validate_setup, SimulationSetup, Violation};
use crate::noise::NoiseChainParams;
use crate::photophysics::{PowerProfile, PowerSegment};

/// One requested output column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    N0,
    N1,
    N2,
    N3,
    N4,
    N5,
    Ns,
    Q,
    TMode,
    DeltaP,
    Pulse,
}

impl OutputKind {
    pub const ALL: [OutputKind; 11] = [
        OutputKind::N0,
        OutputKind::N1,
        OutputKind::N2,
        OutputKind::N3,
        OutputKind::N4,
        OutputKind::N5,
        OutputKind::Ns,
        OutputKind::Q,
        OutputKind::TMode,
        OutputKind::DeltaP,
        OutputKind::Pulse,
    ];

    /// Short name used in `outputs = ...` lists.
    pub fn name(&self) -> &'static str {
        match self {
            OutputKind::N0 => "n0",
            OutputKind::N1 => "n1",
            OutputKind::N2 => "n2",
            OutputKind::N3 => "n3",
            OutputKind::N4 => "n4",
            OutputKind::N5 => "n5",
            OutputKind::Ns => "ns",
            OutputKind::Q => "q",
            OutputKind::TMode => "t_mode",
            OutputKind::DeltaP => "delta_p",
            OutputKind::Pulse => "pulse",
        }
    }

    /// CSV column header with unit suffix.
    pub fn column_header(&self) -> &'static str {
        match self {
            OutputKind::N0 => "n0_count",
            OutputKind::N1 => "n1_count",
            OutputKind::N2 => "n2_count",
            OutputKind::N3 => "n3_count",
            OutputKind::N4 => "n4_count",
            OutputKind::N5 => "n5_count",
            OutputKind::Ns => "ns_count",
            OutputKind::Q => "q_photons",
            OutputKind::TMode => "t_mode_K",
            OutputKind::DeltaP => "delta_p_dB",
            OutputKind::Pulse => "pulse_W",
        }
    }

    pub fn parse(name: &str) -> Option<OutputKind> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// A fully resolved scenario: defaults plus overrides, validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub setup: SimulationSetup,
    pub noise: NoiseChainParams,
    pub solver: SolverSettings,
    pub outputs: Vec<OutputKind>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "default".to_string(),
            setup: SimulationSetup::default(),
            noise: NoiseChainParams::default(),
            solver: SolverSettings::default(),
            outputs: vec![
                OutputKind::TMode,
                OutputKind::DeltaP,
                OutputKind::Pulse,
                OutputKind::Q,
            ],
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    InvalidValue {
        line: usize,
        key: String,
        message: String,
    },
    #[error("line {line}: `pump.segments` conflicts with `pump.pulse.*`")]
    ConflictingPulseKeys { line: usize },
    #[error("setup validation failed: {}", format_violations(.0))]
    Validation(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

struct PulseOverride {
    start: f64,
    width: f64,
    power: f64,
    touched: bool,
    line: usize,
}

/// Parses a config document into a validated [`ScenarioConfig`].
///
/// An empty document yields the full default scenario. The single-pulse
/// shorthand `pump.pulse.{start,width,power}` defaults to a 2 W pulse at
/// t = 0 that is off until a positive width is set.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut pulse = PulseOverride {
        start: 0.0,
        width: 0.0,
        power: 2.0,
        touched: false,
        line: 0,
    };
    let mut segments_override: Option<(usize, Vec<PowerSegment>)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let without_comment = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = without_comment.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key_raw, value_raw)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: line_no,
                text: line.to_string(),
            });
        };
        let key = key_raw.trim();
        let value = value_raw.trim();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line: line_no,
                text: line.to_string(),
            });
        }
        if key.starts_with("meta.") {
            continue; // manifest metadata, ignored on the way back in
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::DuplicateKey {
                line: line_no,
                key: key.to_string(),
            });
        }

        let parse_f64 = |v: &str| -> Result<f64, ConfigError> {
            v.parse::<f64>().map_err(|e| ConfigError::InvalidValue {
                line: line_no,
                key: key.to_string(),
                message: e.to_string(),
            })
        };

        match key {
            "name" => cfg.name = value.to_string(),

            "rates.gamma_02" => cfg.setup.params.rates.gamma_02 = parse_f64(value)?,
            "rates.k_sp" => cfg.setup.params.rates.k_sp = parse_f64(value)?,
            "rates.k_s0" => cfg.setup.params.rates.k_s0 = parse_f64(value)?,
            "rates.k_s2" => cfg.setup.params.rates.k_s2 = parse_f64(value)?,
            "rates.k_3s" => cfg.setup.params.rates.k_3s = parse_f64(value)?,
            "rates.k_5s" => cfg.setup.params.rates.k_5s = parse_f64(value)?,

            "cavity.f_mode" => cfg.setup.params.cavity.f_mode = parse_f64(value)?,
            "cavity.q0" => cfg.setup.params.cavity.q0 = parse_f64(value)?,
            "cavity.q_ex" => cfg.setup.params.cavity.q_ex = parse_f64(value)?,
            "cavity.t0" => cfg.setup.params.cavity.t0 = parse_f64(value)?,

            "coupling.gamma_gyro" => cfg.setup.coupling.gamma_gyro = parse_f64(value)?,
            "coupling.t2_star" => cfg.setup.coupling.t2_star = parse_f64(value)?,
            "coupling.sigma_sq" => cfg.setup.coupling.sigma_sq = parse_f64(value)?,
            "coupling.eta_fill" => cfg.setup.coupling.eta_fill = parse_f64(value)?,
            "coupling.v_mode" => cfg.setup.coupling.v_mode = parse_f64(value)?,

            "pump.wavelength" => cfg.setup.pump.wavelength = parse_f64(value)?,
            "pump.cross_section" => cfg.setup.pump.cross_section = parse_f64(value)?,
            "pump.beam_area" => cfg.setup.pump.beam_area = parse_f64(value)?,
            "pump.path_length_l" => cfg.setup.pump.path_length_l = parse_f64(value)?,

            "sample.path_length" => cfg.setup.pump.sample.path_length_l = parse_f64(value)?,
            "sample.n_sample" => cfg.setup.pump.sample.n_sample = parse_f64(value)?,
            "sample.n_ambient" => cfg.setup.pump.sample.n_ambient = parse_f64(value)?,
            "sample.alpha_pump" => cfg.setup.pump.sample.alpha_pump = parse_f64(value)?,

            "pump.pulse.start" => {
                pulse.start = parse_f64(value)?;
                pulse.touched = true;
                pulse.line = line_no;
            }
            "pump.pulse.width" => {
                pulse.width = parse_f64(value)?;
                pulse.touched = true;
                pulse.line = line_no;
            }
            "pump.pulse.power" => {
                pulse.power = parse_f64(value)?;
                pulse.touched = true;
                pulse.line = line_no;
            }
            "pump.segments" => {
                let mut segs = Vec::new();
                for part in value.split(',') {
                    let fields: Vec<&str> = part.split(':').collect();
                    if fields.len() != 3 {
                        return Err(ConfigError::InvalidValue {
                            line: line_no,
                            key: key.to_string(),
                            message: format!("segment `{part}` must be start:end:power"),
                        });
                    }
                    let seg = PowerSegment {
                        start: parse_f64(fields[0])?,
                        end: parse_f64(fields[1])?,
                        power: parse_f64(fields[2])?,
                    };
                    segs.push(seg);
                }
                segments_override = Some((line_no, segs));
            }

            "sim.n_total" => cfg.setup.n_total = parse_f64(value)?,
            "sim.equilibration_time" => cfg.setup.equilibration_time = parse_f64(value)?,
            "sim.t_end" => cfg.setup.t_end = parse_f64(value)?,
            "sim.output_dt" => cfg.setup.output_dt = parse_f64(value)?,

            "solver.rtol" => cfg.solver.rtol = parse_f64(value)?,
            "solver.atol_population" => cfg.solver.atol_population = parse_f64(value)?,
            "solver.atol_photon" => cfg.solver.atol_photon = parse_f64(value)?,

            "noise.g_lna" => cfg.noise.g_lna = parse_f64(value)?,
            "noise.t_min" => cfg.noise.t_min = parse_f64(value)?,
            "noise.r_n" => cfg.noise.r_n = parse_f64(value)?,
            "noise.gamma_opt_re" => {
                cfg.noise.gamma_opt = Complex64::new(parse_f64(value)?, cfg.noise.gamma_opt.im)
            }
            "noise.gamma_opt_im" => {
                cfg.noise.gamma_opt = Complex64::new(cfg.noise.gamma_opt.re, parse_f64(value)?)
            }
            "noise.t_image" => cfg.noise.t_image = parse_f64(value)?,
            "noise.t_rec" => cfg.noise.t_rec = parse_f64(value)?,
            "noise.z0" => cfg.noise.z0 = parse_f64(value)?,
            "noise.t0" => cfg.noise.t0 = parse_f64(value)?,
            "noise.t_mode_initial" => cfg.noise.t_mode_initial = parse_f64(value)?,
            "noise.gamma_c_initial_re" => {
                cfg.noise.gamma_c_initial =
                    Complex64::new(parse_f64(value)?, cfg.noise.gamma_c_initial.im)
            }
            "noise.gamma_c_initial_im" => {
                cfg.noise.gamma_c_initial =
                    Complex64::new(cfg.noise.gamma_c_initial.re, parse_f64(value)?)
            }

            "outputs" => {
                let mut outputs = Vec::new();
                for part in value.split(',') {
                    let name = part.trim();
                    let Some(kind) = OutputKind::parse(name) else {
                        return Err(ConfigError::InvalidValue {
                            line: line_no,
                            key: key.to_string(),
                            message: format!(
                                "unknown output `{name}` (known: {})",
                                OutputKind::ALL.map(|k| k.name()).join(", ")
                            ),
                        });
                    };
                    if !outputs.contains(&kind) {
                        outputs.push(kind);
                    }
                }
                cfg.outputs = outputs;
            }

            _ => {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: key.to_string(),
                })
            }
        }
    }

    match (segments_override, pulse.touched) {
        (Some((line, _)), true) => return Err(ConfigError::ConflictingPulseKeys { line }),
        (Some((_, segs)), false) => cfg.setup.pump.profile = PowerProfile { segments: segs },
        (None, true) if pulse.width > 0.0 => {
            cfg.setup.pump.profile =
                PowerProfile::square_pulse(pulse.start, pulse.width, pulse.power);
        }
        _ => {}
    }

    let violations = validate_setup(&cfg.setup);
    if !violations.is_empty() {
        return Err(ConfigError::Validation(violations));
    }
    Ok(cfg)
}

/// Serializes every resolved parameter of a scenario in the config grammar.
/// Extra `meta.` lines carry run provenance; the parser ignores them, so a
/// manifest round-trips to an equivalent config.
pub fn manifest_text(cfg: &ScenarioConfig, meta: &[(String, String)]) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };

    push("name", cfg.name.clone());

    let r = &cfg.setup.params.rates;
    push("rates.gamma_02", format!("{}", r.gamma_02));
    push("rates.k_sp", format!("{}", r.k_sp));
    push("rates.k_s0", format!("{}", r.k_s0));
    push("rates.k_s2", format!("{}", r.k_s2));
    push("rates.k_3s", format!("{}", r.k_3s));
    push("rates.k_5s", format!("{}", r.k_5s));

    let c = &cfg.setup.params.cavity;
    push("cavity.f_mode", format!("{}", c.f_mode));
    push("cavity.q0", format!("{}", c.q0));
    push("cavity.q_ex", format!("{}", c.q_ex));
    push("cavity.t0", format!("{}", c.t0));

    let cp = &cfg.setup.coupling;
    push("coupling.gamma_gyro", format!("{}", cp.gamma_gyro));
    push("coupling.t2_star", format!("{}", cp.t2_star));
    push("coupling.sigma_sq", format!("{}", cp.sigma_sq));
    push("coupling.eta_fill", format!("{}", cp.eta_fill));
    push("coupling.v_mode", format!("{}", cp.v_mode));

    let p = &cfg.setup.pump;
    push("pump.wavelength", format!("{}", p.wavelength));
    push("pump.cross_section", format!("{}", p.cross_section));
    push("pump.beam_area", format!("{}", p.beam_area));
    push("pump.path_length_l", format!("{}", p.path_length_l));
    push("sample.path_length", format!("{}", p.sample.path_length_l));
    push("sample.n_sample", format!("{}", p.sample.n_sample));
    push("sample.n_ambient", format!("{}", p.sample.n_ambient));
    push("sample.alpha_pump", format!("{}", p.sample.alpha_pump));
    if !p.profile.segments.is_empty() {
        let segs: Vec<String> = p
            .profile
            .segments
            .iter()
            .map(|s| format!("{}:{}:{}", s.start, s.end, s.power))
            .collect();
        push("pump.segments", segs.join(","));
    }

    push("sim.n_total", format!("{}", cfg.setup.n_total));
    push(
        "sim.equilibration_time",
        format!("{}", cfg.setup.equilibration_time),
    );
    push("sim.t_end", format!("{}", cfg.setup.t_end));
    push("sim.output_dt", format!("{}", cfg.setup.output_dt));

    push("solver.rtol", format!("{}", cfg.solver.rtol));
    push(
        "solver.atol_population",
        format!("{}", cfg.solver.atol_population),
    );
    push("solver.atol_photon", format!("{}", cfg.solver.atol_photon));

    let n = &cfg.noise;
    push("noise.g_lna", format!("{}", n.g_lna));
    push("noise.t_min", format!("{}", n.t_min));
    push("noise.r_n", format!("{}", n.r_n));
    push("noise.gamma_opt_re", format!("{}", n.gamma_opt.re));
    push("noise.gamma_opt_im", format!("{}", n.gamma_opt.im));
    push("noise.t_image", format!("{}", n.t_image));
    push("noise.t_rec", format!("{}", n.t_rec));
    push("noise.z0", format!("{}", n.z0));
    push("noise.t0", format!("{}", n.t0));
    push("noise.t_mode_initial", format!("{}", n.t_mode_initial));
    push(
        "noise.gamma_c_initial_re",
        format!("{}", n.gamma_c_initial.re),
    );
    push(
        "noise.gamma_c_initial_im",
        format!("{}", n.gamma_c_initial.im),
    );

    let outs: Vec<&str> = cfg.outputs.iter().map(|k| k.name()).collect();
    push("outputs", outs.join(","));

    for (k, v) in meta {
        push(&format!("meta.{k}"), v.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default_scenario() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        let cfg = parse_config("# only a comment\n\n").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
    }

    #[test]
    fn pulse_width_override_builds_the_long_pulse_scenario() {
        let cfg = parse_config("pump.pulse.width = 0.010\n").unwrap();
        assert_eq!(
            cfg.setup.pump.profile,
            PowerProfile::square_pulse(0.0, 0.010, 2.0)
        );
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("Q_loaded = 2900\n").unwrap_err();
        match err {
            ConfigError::UnknownKey { line, key } => {
                assert_eq!(line, 1);
                assert_eq!(key, "Q_loaded");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let err = parse_config("cavity.q0 = 1\ncavity.q0 = 2\n").unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { line: 2, .. }));
    }

    #[test]
    fn type_errors_carry_position() {
        let err = parse_config("cavity.q0 = not_a_number\n").unwrap_err();
        assert!(matches!(err, ConfigError::InvalidValue { line: 1, .. }));
        let err = parse_config("just a line\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
    }

    #[test]
    fn validation_runs_after_overrides() {
        let err = parse_config("cavity.q0 = 0\n").unwrap_err();
        match err {
            ConfigError::Validation(v) => assert_eq!(v[0].field, "cavity.q0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn segments_and_pulse_conflict() {
        let err =
            parse_config("pump.pulse.width = 0.002\npump.segments = 0:0.001:2\n").unwrap_err();
        assert!(matches!(err, ConfigError::ConflictingPulseKeys { .. }));
    }

    #[test]
    fn segments_parse() {
        let cfg = parse_config("pump.segments = 0:0.002:2,0.004:0.006:1.5\n").unwrap();
        assert_eq!(cfg.setup.pump.profile.segments.len(), 2);
        assert_eq!(cfg.setup.pump.profile.segments[1].power, 1.5);
    }

    #[test]
    fn outputs_list_parses_and_rejects() {
        let cfg = parse_config("outputs = q,t_mode\n").unwrap();
        assert_eq!(cfg.outputs, vec![OutputKind::Q, OutputKind::TMode]);
        assert!(parse_config("outputs = bogus\n").is_err());
    }

    #[test]
    fn inline_comments_are_stripped() {
        let cfg = parse_config("cavity.t0 = 295.0 # warm lab\n").unwrap();
        assert_eq!(cfg.setup.params.cavity.t0, 295.0);
    }

    #[test]
    fn manifest_round_trips() {
        let mut cfg = ScenarioConfig {
            name: "fig3".to_string(),
            ..ScenarioConfig::default()
        };
        cfg.setup.pump.profile = PowerProfile::square_pulse(0.0, 2e-3, 2.0);
        cfg.setup.t_end = 32e-3;
        let text = manifest_text(&cfg, &[("version".to_string(), "0.1.0".to_string())]);
        let back = parse_config(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn noise_overrides_apply() {
        let cfg = parse_config("noise.g_lna = 1.0\nnoise.gamma_opt_re = -0.2\n").unwrap();
        assert_eq!(cfg.noise.g_lna, 1.0);
        assert_eq!(cfg.noise.gamma_opt.re, -0.2);
        assert_eq!(cfg.noise.gamma_opt.im, 0.189);
    }
}

//! Named-scenario execution: builtin scenarios, CSV export, run manifests.
//!
//! Output contract per run: one CSV named `<scenario>.csv` whose first column
//! is `time_s` followed by one column per requested output (headers carry
//! unit suffixes), plus `<scenario>.manifest` holding every resolved
//! parameter in the config grammar so the run is exactly reproducible. Data
//! paths contain no wall-clock or randomness; identical configs produce
//! byte-identical CSV files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{manifest_text, OutputKind, ScenarioConfig};
use crate::dynamics::{simulate_with, DynamicsError, SimulationResult};
use crate::noise::noise_power_reduction;
use crate::photophysics::PowerProfile;
use crate::signal::{median_filter, SignalError, Trace};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("unknown scenario `{0}` (builtins: {})", builtin_names().join(", "))]
    UnknownScenario(String),
}

/// Builtin scenario names.
pub fn builtin_names() -> Vec<&'static str> {
    vec!["default", "fig3", "fig4", "trepr-sweep"]
}

/// The nine interrogation frequencies of the mode-frequency sweep (Hz).
/// Chosen as a 1 MHz comb spanning the zero-field resonance cluster.
pub fn sweep_frequencies() -> [f64; 9] {
    [
        2.865e9, 2.866e9, 2.867e9, 2.868e9, 2.869e9, 2.870e9, 2.871e9, 2.872e9, 2.873e9,
    ]
}

/// Resolves a builtin scenario by name. `trepr-sweep` members are resolved
/// through [`sweep_members`] instead.
pub fn builtin_scenario(name: &str) -> Option<ScenarioConfig> {
    match name {
        "default" => Some(ScenarioConfig::default()),
        "fig3" => {
            let mut cfg = ScenarioConfig {
                name: "fig3".to_string(),
                ..ScenarioConfig::default()
            };
            cfg.setup.pump.profile = PowerProfile::square_pulse(0.0, 2e-3, 2.0);
            cfg.setup.t_end = 32e-3;
            Some(cfg)
        }
        "fig4" => {
            let mut cfg = ScenarioConfig {
                name: "fig4".to_string(),
                ..ScenarioConfig::default()
            };
            cfg.setup.pump.profile = PowerProfile::square_pulse(0.0, 10e-3, 2.0);
            cfg.setup.t_end = 30e-3;
            Some(cfg)
        }
        _ => None,
    }
}

/// Member scenarios of the mode-frequency sweep: the 2 ms pulse scenario
/// rerun at each interrogation frequency.
pub fn sweep_members() -> Vec<ScenarioConfig> {
    sweep_frequencies()
        .iter()
        .map(|&f| {
            let mut cfg = builtin_scenario("fig3").expect("fig3 is builtin");
            cfg.name = format!("trepr-{:.0}MHz", f / 1e6);
            cfg.setup.params.cavity.f_mode = f;
            cfg.setup.t_end = 12e-3;
            cfg
        })
        .collect()
}

/// Options shared by scenario runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Median-filter window applied to the `t_mode` and `delta_p` columns
    /// for visual comparison with filtered measured traces; 0 disables.
    pub median_window: usize,
}

/// What one run produced, for reporting.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub name: String,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    /// Coldest mode temperature and its time.
    pub min_t_mode: (f64, f64),
    /// Deepest noise-power reduction (dB).
    pub min_delta_p: f64,
    pub wall_time_s: f64,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), ScenarioError> {
    fs::write(path, contents).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Pointwise ΔP (dB) of a mode-temperature trace against the configured
/// receiver baseline.
pub fn delta_p_trace(t_mode: &Trace, noise: &crate::noise::NoiseChainParams) -> Trace {
    Trace {
        t0: t_mode.t0,
        dt: t_mode.dt,
        values: t_mode
            .values
            .iter()
            .map(|&t| noise_power_reduction(t, noise))
            .collect(),
        label: "delta_p_dB".to_string(),
    }
}

fn column_values(
    kind: OutputKind,
    result: &SimulationResult,
    t_mode: &Trace,
    delta_p: &Trace,
) -> Vec<f64> {
    match kind {
        OutputKind::N0 => result.states.iter().map(|s| s.n0).collect(),
        OutputKind::N1 => result.states.iter().map(|s| s.n1).collect(),
        OutputKind::N2 => result.states.iter().map(|s| s.n2).collect(),
        OutputKind::N3 => result.states.iter().map(|s| s.n3).collect(),
        OutputKind::N4 => result.states.iter().map(|s| s.n4).collect(),
        OutputKind::N5 => result.states.iter().map(|s| s.n5).collect(),
        OutputKind::Ns => result.states.iter().map(|s| s.ns).collect(),
        OutputKind::Q => result.states.iter().map(|s| s.q).collect(),
        OutputKind::TMode => t_mode.values.clone(),
        OutputKind::DeltaP => delta_p.values.clone(),
        OutputKind::Pulse => result.pulse_trace.values.clone(),
    }
}

/// Runs one scenario end to end and writes its CSV and manifest into
/// `outdir` (created if needed).
pub fn run_scenario(
    cfg: &ScenarioConfig,
    outdir: &Path,
    opts: &RunOptions,
) -> Result<RunSummary, ScenarioError> {
    let started = Instant::now();
    let result = simulate_with(&cfg.setup, &cfg.solver)?;
    write_artifacts(cfg, result, outdir, opts, started)
}

/// Renders the output columns and writes `<name>.csv` + `<name>.manifest`.
fn write_artifacts(
    cfg: &ScenarioConfig,
    result: SimulationResult,
    outdir: &Path,
    opts: &RunOptions,
    started: Instant,
) -> Result<RunSummary, ScenarioError> {
    fs::create_dir_all(outdir).map_err(|source| ScenarioError::Io {
        path: outdir.to_path_buf(),
        source,
    })?;

    let mut t_mode = result.t_mode_trace.clone();
    let mut delta_p = delta_p_trace(&t_mode, &cfg.noise);
    if opts.median_window > 0 {
        t_mode = median_filter(&t_mode, opts.median_window)?;
        delta_p = median_filter(&delta_p, opts.median_window)?;
    }

    let columns: Vec<(OutputKind, Vec<f64>)> = cfg
        .outputs
        .iter()
        .map(|&k| (k, column_values(k, &result, &t_mode, &delta_p)))
        .collect();

    let mut csv = Vec::new();
    {
        let headers: Vec<&str> = columns.iter().map(|(k, _)| k.column_header()).collect();
        writeln!(&mut csv, "time_s,{}", headers.join(",")).expect("vec write");
        for (i, &t) in result.times.iter().enumerate() {
            write!(&mut csv, "{t:.9e}").expect("vec write");
            for (_, values) in &columns {
                write!(&mut csv, ",{:.9e}", values[i]).expect("vec write");
            }
            csv.push(b'\n');
        }
    }
    let csv_path = outdir.join(format!("{}.csv", cfg.name));
    write_file(&csv_path, &csv)?;

    let wall_time_s = started.elapsed().as_secs_f64();
    let meta = vec![
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("wall_time_s".to_string(), format!("{wall_time_s:.3}")),
        (
            "median_window".to_string(),
            format!("{}", opts.median_window),
        ),
    ];
    let manifest_path = outdir.join(format!("{}.manifest", cfg.name));
    write_file(&manifest_path, manifest_text(cfg, &meta).as_bytes())?;

    let min_t = crate::signal::cooling_depth(&t_mode);
    let min_dp = delta_p.values.iter().cloned().fold(f64::INFINITY, f64::min);

    Ok(RunSummary {
        name: cfg.name.clone(),
        csv_path,
        manifest_path,
        min_t_mode: min_t,
        min_delta_p: min_dp,
        wall_time_s,
    })
}

/// Runs the mode-frequency sweep: members simulate concurrently, outputs are
/// written serially in frequency order, and a summary CSV collects the
/// per-frequency cooling depths.
pub fn run_sweep(outdir: &Path, opts: &RunOptions) -> Result<Vec<RunSummary>, ScenarioError> {
    let members = sweep_members();
    let results: Vec<Result<(ScenarioConfig, SimulationResult, Instant), ScenarioError>> = members
        .into_par_iter()
        .map(|cfg| {
            let started = Instant::now();
            let result = simulate_with(&cfg.setup, &cfg.solver)?;
            Ok((cfg, result, started))
        })
        .collect();

    let mut summaries = Vec::with_capacity(results.len());
    for r in results {
        let (cfg, result, started) = r?;
        summaries.push(write_artifacts(&cfg, result, outdir, opts, started)?);
    }

    let mut csv = String::from("f_mode_Hz,min_t_mode_K,min_delta_p_dB\n");
    for (f, s) in sweep_frequencies().iter().zip(&summaries) {
        csv.push_str(&format!(
            "{:.9e},{:.9e},{:.9e}\n",
            f, s.min_t_mode.0, s.min_delta_p
        ));
    }
    write_file(&outdir.join("trepr-sweep_summary.csv"), csv.as_bytes())?;
    Ok(summaries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn builtin_fig_scenarios_resolve() {
        let fig3 = builtin_scenario("fig3").unwrap();
        assert_eq!(fig3.setup.pump.profile.segments[0].end, 2e-3);
        let fig4 = builtin_scenario("fig4").unwrap();
        assert_eq!(fig4.setup.pump.profile.segments[0].end, 10e-3);
        assert!(builtin_scenario("nope").is_none());
    }

    #[test]
    fn builtin_manifests_round_trip() {
        for name in ["default", "fig3", "fig4"] {
            let cfg = builtin_scenario(name).unwrap();
            let text = manifest_text(&cfg, &[("wall_time_s".to_string(), "1.0".to_string())]);
            let back = parse_config(&text).unwrap();
            assert_eq!(back, cfg, "manifest round trip failed for {name}");
        }
        for cfg in sweep_members() {
            let text = manifest_text(&cfg, &[]);
            assert_eq!(parse_config(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn sweep_covers_nine_frequencies() {
        let f = sweep_frequencies();
        assert_eq!(f.len(), 9);
        assert!(f.contains(&2.867e9));
        assert!(f.contains(&2.870e9));
        assert!(f.contains(&2.872e9));
        assert_eq!(sweep_members().len(), 9);
    }
}

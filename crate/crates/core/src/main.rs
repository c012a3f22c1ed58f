//! Command-line driver: scenario runs, acceptance harness, trace utilities.
//!
//! Exit codes: 0 success, 1 validation/parse/usage error, 2 numerical
//! failure, 3 acceptance failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nvcool::config::{parse_config, ScenarioConfig};
use nvcool::dynamics::DynamicsError;
use nvcool::noise::apply_inversion_to_trace;
use nvcool::photophysics::{convert_absorbance_table, OpticalSample};
use nvcool::scenario::{
    builtin_names, builtin_scenario, run_scenario, run_sweep, RunOptions, ScenarioError,
};
use nvcool::signal::{median_filter, read_trace_csv, write_trace_csv};

#[derive(Parser)]
#[command(
    name = "nvcool",
    version,
    about = "Microwave mode cooling simulator for optically hyperpolarized NV\u{207b} diamond"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (builtin by name, or from a config file) and write CSV + manifest.
    Run(RunArgs),
    /// Run the acceptance harness: one pass/fail line per criterion.
    Acceptance,
    /// Convert a measured noise-power trace (dB) into a mode-temperature trace.
    Invert(InvertArgs),
    /// Median-filter a trace CSV.
    Filter(FilterArgs),
    /// Convert a two-column absorbance table into absorption coefficients.
    Spectrum(SpectrumArgs),
    /// Compute the filling factor and mode volume from exported |H|² samples.
    Fieldmap(FieldmapArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Builtin scenario name.
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// Config file in the `key = value` grammar.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    outdir: PathBuf,
    /// Override the solver relative tolerance.
    #[arg(long)]
    rtol: Option<f64>,
    /// Override the population absolute tolerance.
    #[arg(long)]
    atol_population: Option<f64>,
    /// Override the photon-number absolute tolerance.
    #[arg(long)]
    atol_photon: Option<f64>,
    /// Median-filter window for the t_mode/delta_p columns (odd; 0 disables).
    #[arg(long, default_value_t = 0)]
    median_window: usize,
}

#[derive(Args)]
struct InvertArgs {
    /// Input delta-P trace CSV (time_s, value in dB).
    #[arg(long)]
    input: PathBuf,
    /// Output mode-temperature trace CSV.
    #[arg(long)]
    output: PathBuf,
    /// Optional config file supplying receiver-chain overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Median-filter window applied before inversion (odd; 0 disables).
    #[arg(long, default_value_t = 0)]
    median_window: usize,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Median window (odd).
    #[arg(long, default_value_t = 81)]
    window: usize,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Two-column table: wavelength_nm absorbance ('#' comments allowed).
    #[arg(long)]
    input: PathBuf,
    /// Output CSV of wavelength_nm, alpha_per_m.
    #[arg(long)]
    output: PathBuf,
    /// Absorbance path length (m).
    #[arg(long, default_value_t = 0.0015)]
    path_length: f64,
    /// Sample refractive index.
    #[arg(long, default_value_t = 2.42)]
    n_sample: f64,
    /// Ambient refractive index.
    #[arg(long, default_value_t = 1.0)]
    n_ambient: f64,
}

#[derive(Args)]
struct FieldmapArgs {
    /// Three-column table: h2_value cell_volume_m3 excited_flag ('#' comments).
    #[arg(long)]
    input: PathBuf,
}

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_ACCEPTANCE: u8 = 3;

fn fail(code: u8, message: String) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn scenario_exit_code(err: &ScenarioError) -> u8 {
    match err {
        ScenarioError::Dynamics(DynamicsError::Validation(_)) => EXIT_USAGE,
        ScenarioError::Dynamics(_) => EXIT_NUMERICAL,
        ScenarioError::Signal(_) => EXIT_NUMERICAL,
        ScenarioError::Io { .. } | ScenarioError::UnknownScenario(_) => EXIT_USAGE,
    }
}

fn load_config(path: &PathBuf) -> Result<ScenarioConfig, ExitCode> {
    let text = fs::read_to_string(path)
        .map_err(|e| fail(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let opts = RunOptions {
        median_window: args.median_window,
    };

    let mut configs: Vec<ScenarioConfig> = Vec::new();
    let mut sweep = false;
    match (&args.scenario, &args.config) {
        (Some(name), None) => {
            if name == "trepr-sweep" {
                sweep = true;
            } else if let Some(cfg) = builtin_scenario(name) {
                configs.push(cfg);
            } else {
                return fail(
                    EXIT_USAGE,
                    format!(
                        "unknown scenario `{name}` (builtins: {})",
                        builtin_names().join(", ")
                    ),
                );
            }
        }
        (None, Some(path)) => match load_config(path) {
            Ok(cfg) => configs.push(cfg),
            Err(code) => return code,
        },
        (None, None) => configs.push(ScenarioConfig::default()),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    }

    if sweep {
        match run_sweep(&args.outdir, &opts) {
            Ok(summaries) => {
                for s in &summaries {
                    println!(
                        "{}: min T_mode = {:.2} K at {:.3} ms, min dP = {:.3} dB -> {}",
                        s.name,
                        s.min_t_mode.0,
                        s.min_t_mode.1 * 1e3,
                        s.min_delta_p,
                        s.csv_path.display()
                    );
                }
                println!(
                    "sweep summary -> {}",
                    args.outdir.join("trepr-sweep_summary.csv").display()
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(scenario_exit_code(&e), e.to_string()),
        }
    } else {
        let mut cfg = configs.remove(0);
        if let Some(r) = args.rtol {
            cfg.solver.rtol = r;
        }
        if let Some(a) = args.atol_population {
            cfg.solver.atol_population = a;
        }
        if let Some(a) = args.atol_photon {
            cfg.solver.atol_photon = a;
        }
        match run_scenario(&cfg, &args.outdir, &opts) {
            Ok(s) => {
                println!(
                    "{}: min T_mode = {:.2} K at {:.3} ms, min dP = {:.3} dB ({:.2} s)",
                    s.name,
                    s.min_t_mode.0,
                    s.min_t_mode.1 * 1e3,
                    s.min_delta_p,
                    s.wall_time_s
                );
                println!("wrote {}", s.csv_path.display());
                println!("wrote {}", s.manifest_path.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(scenario_exit_code(&e), e.to_string()),
        }
    }
}

fn cmd_acceptance() -> ExitCode {
    let outcomes = nvcool::acceptance::run_all();
    let mut failures = 0;
    for o in &outcomes {
        println!("{}", o.line());
        if !o.passed {
            failures += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        outcomes.len() - failures,
        outcomes.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ACCEPTANCE)
    }
}

fn cmd_invert(args: InvertArgs) -> ExitCode {
    let noise = match &args.config {
        Some(path) => match load_config(path) {
            Ok(cfg) => cfg.noise,
            Err(code) => return code,
        },
        None => Default::default(),
    };
    let text = match fs::read_to_string(&args.input) {
        Ok(t) => t,
        Err(e) => {
            return fail(
                EXIT_USAGE,
                format!("cannot read {}: {e}", args.input.display()),
            )
        }
    };
    let mut trace = match read_trace_csv(&text) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", args.input.display())),
    };
    if args.median_window > 0 {
        trace = match median_filter(&trace, args.median_window) {
            Ok(t) => t,
            Err(e) => return fail(EXIT_USAGE, e.to_string()),
        };
    }
    match apply_inversion_to_trace(&trace, &noise) {
        Ok((out, clamped)) => {
            if clamped > 0 {
                eprintln!("note: clamped {clamped} samples above 0 dB to the baseline");
            }
            let mut buf = Vec::new();
            if let Err(e) = write_trace_csv(&out, &mut buf) {
                return fail(EXIT_NUMERICAL, e.to_string());
            }
            if let Err(e) = fs::write(&args.output, buf) {
                return fail(
                    EXIT_USAGE,
                    format!("cannot write {}: {e}", args.output.display()),
                );
            }
            println!("wrote {}", args.output.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_NUMERICAL, e.to_string()),
    }
}

fn cmd_filter(args: FilterArgs) -> ExitCode {
    let text = match fs::read_to_string(&args.input) {
        Ok(t) => t,
        Err(e) => {
            return fail(
                EXIT_USAGE,
                format!("cannot read {}: {e}", args.input.display()),
            )
        }
    };
    let trace = match read_trace_csv(&text) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", args.input.display())),
    };
    match median_filter(&trace, args.window) {
        Ok(out) => {
            let mut buf = Vec::new();
            if let Err(e) = write_trace_csv(&out, &mut buf) {
                return fail(EXIT_NUMERICAL, e.to_string());
            }
            if let Err(e) = fs::write(&args.output, buf) {
                return fail(
                    EXIT_USAGE,
                    format!("cannot write {}: {e}", args.output.display()),
                );
            }
            println!("wrote {}", args.output.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_USAGE, e.to_string()),
    }
}

fn cmd_spectrum(args: SpectrumArgs) -> ExitCode {
    let sample = OpticalSample {
        path_length_l: args.path_length,
        n_sample: args.n_sample,
        n_ambient: args.n_ambient,
        alpha_pump: 0.0,
    };
    let text = match fs::read_to_string(&args.input) {
        Ok(t) => t,
        Err(e) => {
            return fail(
                EXIT_USAGE,
                format!("cannot read {}: {e}", args.input.display()),
            )
        }
    };
    match convert_absorbance_table(&text, &sample) {
        Ok(rows) => {
            let mut out = String::from("wavelength_nm,alpha_per_m\n");
            for (wl, alpha) in rows {
                out.push_str(&format!("{wl:.9e},{alpha:.9e}\n"));
            }
            if let Err(e) = fs::write(&args.output, out) {
                return fail(
                    EXIT_USAGE,
                    format!("cannot write {}: {e}", args.output.display()),
                );
            }
            println!("wrote {}", args.output.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_USAGE, e.to_string()),
    }
}

fn cmd_fieldmap(args: FieldmapArgs) -> ExitCode {
    let text = match fs::read_to_string(&args.input) {
        Ok(t) => t,
        Err(e) => {
            return fail(
                EXIT_USAGE,
                format!("cannot read {}: {e}", args.input.display()),
            )
        }
    };
    let map = match nvcool::coupling::FieldMap::parse(&text) {
        Ok(m) => m,
        Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", args.input.display())),
    };
    match (
        nvcool::coupling::filling_factor(&map),
        nvcool::coupling::mode_volume(&map),
    ) {
        (Ok(eta), Ok(v)) => {
            println!("cells = {}", map.cells.len());
            println!("eta_fill = {eta:.9e}");
            println!("v_mode_m3 = {v:.9e}");
            ExitCode::SUCCESS
        }
        (Err(e), _) | (_, Err(e)) => fail(EXIT_NUMERICAL, e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Acceptance => cmd_acceptance(),
        Command::Invert(args) => cmd_invert(args),
        Command::Filter(args) => cmd_filter(args),
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Fieldmap(args) => cmd_fieldmap(args),
    }
}

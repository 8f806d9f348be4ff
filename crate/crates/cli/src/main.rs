//! Scenario-driven command line for the periodic-array scattering solver.
//!
//! Subcommands:
//!   solve     run one scenario, write report.csv + spectrum.csv
//!   sweep     sweep k₁ or the window size, write sweep.csv
//!   field     write a total-field grid over the plateau region
//!   diagnose  quasi-periodicity and radiation diagnostics
//!
//! Scenarios come from built-in presets (`--scenario kite|crystal`) or a flat
//! key = value file (`--config`); individual keys can be overridden on the
//! command line with `--set key=value`. Exit code is nonzero on any
//! validation or solver failure.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use wgf2d::scenario::{
    self, diagnose, field_export, parse_scenario, run, serialize_scenario, sweep, Formulation,
    Polarization, Scenario, SweepAxis,
};

#[derive(Parser)]
#[command(name = "wgf2d", about = "Planewave scattering by periodic arrays of penetrable obstacles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Built-in scenario preset.
    #[arg(long, value_parser = ["kite", "crystal"])]
    scenario: Option<String>,
    /// Flat key = value scenario file (see README for keys).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Exterior wavenumber (kite preset).
    #[arg(long)]
    k1: Option<f64>,
    /// Frequency in cm⁻¹ (crystal preset).
    #[arg(long)]
    frequency: Option<f64>,
    /// Polarization for the crystal preset.
    #[arg(long, value_parser = ["te", "tm"], default_value = "te")]
    polarization: String,
    /// Window size in wavelengths.
    #[arg(long)]
    a_lambda: Option<f64>,
    /// Formulation: with or without the radiation-condition correction.
    #[arg(long, value_parser = ["naive", "corrected"])]
    formulation: Option<String>,
    /// Key overrides in the scenario-file syntax, e.g. --set ppw=12.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory for CSV bundles.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble, solve and post-process one scenario.
    Solve(ScenarioArgs),
    /// Sweep the exterior wavenumber or the window size.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Sweep axis.
        #[arg(long, value_parser = ["k1", "window"])]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Also solve the naive formulation at every point.
        #[arg(long)]
        compare_naive: bool,
    },
    /// Export the total field on a plateau grid.
    Field {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 120)]
        nx: usize,
        #[arg(long, default_value_t = 240)]
        ny: usize,
    },
    /// Quasi-periodicity mismatch and radiation residuals.
    Diagnose(ScenarioArgs),
    /// Print the resolved scenario in the config-file format.
    Show(ScenarioArgs),
}

fn build_scenario(args: &ScenarioArgs) -> Result<Scenario, String> {
    let mut s = if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        parse_scenario(&text).map_err(|e| e.to_string())?
    } else {
        let preset = args.scenario.as_deref().unwrap_or("kite");
        match preset {
            "kite" => Scenario::kite(args.k1.unwrap_or(10.68), args.a_lambda.unwrap_or(20.0)),
            "crystal" => {
                let pol = if args.polarization == "tm" { Polarization::Tm } else { Polarization::Te };
                Scenario::crystal(args.frequency.unwrap_or(10000.0), pol, args.a_lambda.unwrap_or(20.0))
            }
            other => return Err(format!("unknown scenario '{other}'")),
        }
    };
    if let Some(k1) = args.k1 {
        let ratio = s.k2 / s.k1;
        s.k1 = k1;
        if s.geometry == scenario::GeometryChoice::Crystal {
            s.k2 = ratio * k1;
        }
    }
    if let Some(a) = args.a_lambda {
        s.a_lambda = a;
    }
    if let Some(f) = &args.formulation {
        s.formulation = if f == "naive" { Formulation::Naive } else { Formulation::Corrected };
    }
    if !args.overrides.is_empty() {
        let mut text = serialize_scenario(&s);
        for kv in &args.overrides {
            text.push_str(kv);
            text.push('\n');
        }
        s = parse_scenario(&text).map_err(|e| e.to_string())?;
    }
    if let Some(out) = &args.out {
        s.out_dir = Some(out.clone());
    }
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Solve(args) => {
            let s = build_scenario(&args)?;
            let (summary, _, spectrum) = run(&s).map_err(|e| e.to_string())?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}: {} unknowns, {} iterations, residual {:.3e}",
                summary.name, summary.unknowns, summary.iterations, summary.residual
            );
            println!(
                "error_eb = {:.6e}  R = {:.8}  T = {:.8}  (R+T−1 = {:+.3e})",
                spectrum.energy_balance_error,
                spectrum.reflectance,
                spectrum.transmittance,
                spectrum.reflectance + spectrum.transmittance - 1.0
            );
            Ok(())
        }
        Command::Sweep { scenario: args, axis, values, compare_naive } => {
            if values.is_empty() {
                return Err("sweep needs --values".into());
            }
            let s = build_scenario(&args)?;
            let axis = if axis == "k1" { SweepAxis::K1 } else { SweepAxis::WindowLambda };
            let rows = sweep(&s, axis, &values, compare_naive).map_err(|e| e.to_string())?;
            let mut failures = 0;
            for r in &rows {
                match (r.error_eb, &r.failure) {
                    (Some(e), _) => println!(
                        "{:>12.6}  error_eb {:.3e}  R {:.6}  T {:.6}  iters {}",
                        r.value,
                        e,
                        r.reflectance.unwrap_or(f64::NAN),
                        r.transmittance.unwrap_or(f64::NAN),
                        r.iterations
                    ),
                    (None, Some(msg)) => {
                        failures += 1;
                        println!("{:>12.6}  FAILED: {msg}", r.value);
                    }
                    _ => unreachable!(),
                }
            }
            if failures > 0 {
                Err(format!("{failures} sweep points failed"))
            } else {
                Ok(())
            }
        }
        Command::Field { scenario: args, nx, ny } => {
            let s = build_scenario(&args)?;
            if s.out_dir.is_none() {
                return Err("field export needs --out".into());
            }
            field_export(&s, nx, ny).map_err(|e| e.to_string())?;
            println!("field grid written to {}", s.out_dir.unwrap().display());
            Ok(())
        }
        Command::Diagnose(args) => {
            let s = build_scenario(&args)?;
            let d = diagnose(&s).map_err(|e| e.to_string())?;
            println!("qp mismatch: left {:.4e}, right {:.4e}", d.qp_left, d.qp_right);
            for (n, ep, em) in &d.radiation {
                println!("radiation n = {n:+}: above {ep:.4e}, below {em:.4e}");
            }
            Ok(())
        }
        Command::Show(args) => {
            let s = build_scenario(&args)?;
            print!("{}", serialize_scenario(&s));
            Ok(())
        }
    }
}

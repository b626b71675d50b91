//! Command-line front end: matched-pair ROC experiments in, deterministic
//! CSV tables and SVG panels out.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use spade_core::sim::{sweep, Scenario};
use spade_core::eval;

mod output;
mod scenario_file;
mod svg;
mod verify;

use output::CurveRecord;

const EXIT_OK: u8 = 0;
const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "spade",
    about = "Subpixel target detectors on multivariate-t backgrounds: \
             matched-pair ROC experiments and self checks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a matched-pair sweep and write ROC/summary tables
    Run(RunArgs),
    /// Run the oracle-equivalence and invariant checks
    Verify,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["scenario", "preset"])))]
struct RunArgs {
    /// Scenario file: one `key = value` per line
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,

    /// Built-in experiment preset
    #[arg(long, value_parser = ["fig1", "fig2"])]
    preset: Option<String>,

    /// Background scalings to sweep (comma separated); defaults to the
    /// scenario's single beta, or 0.3..1.0 for presets
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    beta: Option<Vec<f64>>,

    /// Matched pairs per trial
    #[arg(long, value_name = "INT")]
    n_pairs: Option<usize>,

    /// Trials per beta
    #[arg(long, value_name = "INT")]
    trials: Option<usize>,

    /// Base generator seed
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,

    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// What to write
    #[arg(long, value_parser = ["csv", "svg", "both"], default_value = "csv")]
    format: String,

    /// Detectors to score (comma separated identifiers)
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    detectors: Option<Vec<String>>,

    /// Refine the two-parameter detectors under the nonnegative-abundance
    /// constraint
    #[arg(long)]
    constrained_alpha: bool,

    /// Log-scale the false-alarm axis in SVG panels
    #[arg(long)]
    log_pfa: bool,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => ExitCode::from(cmd_run(&args)),
        Command::Verify => ExitCode::from(if verify::cmd_verify() == 0 {
            EXIT_OK
        } else {
            EXIT_VERIFY_FAILED
        }),
    }
}

fn config_error(msg: &str) -> u8 {
    eprintln!("error: {msg}");
    EXIT_CONFIG
}

fn cmd_run(args: &RunArgs) -> u8 {
    // Resolve the scenario source, then layer flag overrides on top.
    let mut scenario = match (&args.scenario, args.preset.as_deref()) {
        (Some(path), None) => {
            let text = match std::fs::read_to_string(path) {
                Ok(text) => text,
                Err(e) => return config_error(&format!("cannot read {}: {e}", path.display())),
            };
            match scenario_file::parse_scenario(&text) {
                Ok(s) => s,
                Err(e) => return config_error(&format!("{}: {e}", path.display())),
            }
        }
        (None, Some("fig1")) => Scenario::fig1(),
        (None, Some("fig2")) => Scenario::fig2(),
        _ => return config_error("exactly one of --scenario or --preset is required"),
    };
    if let Some(n) = args.n_pairs {
        scenario.n_pairs = n;
    }
    if let Some(t) = args.trials {
        scenario.n_trials = t;
    }
    if let Some(s) = args.seed {
        scenario.seed = s;
    }
    if let Some(list) = &args.detectors {
        match scenario_file::parse_detectors(&list.join(",")) {
            Ok(dets) => scenario.detectors = dets,
            Err(e) => return config_error(&e),
        }
    }
    scenario.constrain_alpha = args.constrained_alpha;

    let betas: Vec<f64> = match &args.beta {
        Some(list) => list.clone(),
        // Presets sweep the full panel grid; files default to their own beta.
        None if args.preset.is_some() => vec![0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
        None => vec![scenario.beta],
    };
    if let Err(e) = scenario.validate() {
        return config_error(&e.to_string());
    }

    let points = match sweep(&scenario, &betas) {
        Ok(points) => points,
        Err(
            e @ (spade_core::Error::InvalidScenario(_)
            | spade_core::Error::BadBeta(_)
            | spade_core::Error::EmptySweep
            | spade_core::Error::UnknownDetector(_)),
        ) => return config_error(&e.to_string()),
        Err(e) => {
            eprintln!("numerical failure: {e}");
            return EXIT_NUMERICAL;
        }
    };

    // Reduce scores to curves, flagging non-finite scores with their pixel.
    let mut records = Vec::new();
    for point in &points {
        for trial in &point.trials {
            for ds in &trial.per_detector {
                for (which, scores) in [("H0", &ds.h0), ("H1", &ds.h1)] {
                    if let Some(idx) = scores.iter().position(|s| !s.is_finite()) {
                        eprintln!(
                            "numerical failure: non-finite {which} score \
                             (detector {}, beta {}, trial {}, pair {idx})",
                            ds.detector, point.beta, trial.trial
                        );
                        return EXIT_NUMERICAL;
                    }
                }
                let curve = match eval::roc(&ds.h0, &ds.h1) {
                    Ok(curve) => curve,
                    Err(e) => {
                        eprintln!("numerical failure: {e}");
                        return EXIT_NUMERICAL;
                    }
                };
                records.push(CurveRecord {
                    detector: ds.detector,
                    beta: point.beta,
                    trial: trial.trial,
                    curve,
                });
            }
        }
    }

    if let Err(e) = std::fs::create_dir_all(&args.out) {
        return config_error(&format!("cannot create {}: {e}", args.out.display()));
    }
    let write = |name: &str, text: &str| -> Result<(), u8> {
        let path = args.out.join(name);
        std::fs::write(&path, text).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            EXIT_CONFIG
        })
    };

    let result = (|| -> Result<(), u8> {
        if args.format == "csv" || args.format == "both" {
            write("roc.csv", &output::roc_csv(&records))?;
            write("summary.csv", &output::summary_csv(&records))?;
        }
        if args.format == "svg" || args.format == "both" {
            for point in &points {
                let panel: Vec<&CurveRecord> =
                    records.iter().filter(|r| r.beta == point.beta).collect();
                let name = format!("roc-beta-{}.svg", point.beta);
                write(&name, &svg::roc_panel(point.beta, &panel, args.log_pfa))?;
            }
        }
        Ok(())
    })();
    match result {
        Ok(()) => {
            report_outputs(&args.out, &args.format, points.len());
            EXIT_OK
        }
        Err(code) => code,
    }
}

fn report_outputs(out: &Path, format: &str, n_betas: usize) {
    match format {
        "csv" => println!("wrote roc.csv and summary.csv to {}", out.display()),
        "svg" => println!("wrote {n_betas} ROC panels to {}", out.display()),
        _ => println!(
            "wrote roc.csv, summary.csv, and {n_betas} ROC panels to {}",
            out.display()
        ),
    }
}

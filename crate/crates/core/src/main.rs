use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cavcond::config::SweepConfig;
use cavcond::harness::{
    basis_csv, run_cavity_sweep, run_convergence, run_multiwell, run_spectrum, run_tau_sweep, with_workers,
    Model, ModelSpec, RunReport,
};
use cavcond::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cavcond", version, about = "Dark vertical conductance of cavity-embedded heterostructures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Polariton branches along the cavity axis.
    Spectrum(RunArgs),
    /// G, G_NI and G/G0 along the cavity axis.
    SweepCavity(RunArgs),
    /// One cavity curve per Drude scattering time.
    SweepTau(RunArgs),
    /// Normalized cavity curves for equally spaced multiple wells.
    Multiwell(RunArgs),
    /// Convergence of G in the number of subbands.
    Converge(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for sweep points.
    #[arg(long, env = "CAVCOND_WORKERS")]
    workers: Option<usize>,
    /// Also write z, V(z) and the wavefunctions.
    #[arg(long)]
    dump_basis: bool,
    /// Also write the transition catalog.
    #[arg(long)]
    dump_catalog: bool,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else if matches!(e, Error::Io(_)) {
        1
    } else {
        EXIT_CONFIG
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Error> {
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn dumps(config: &SweepConfig, args: &RunArgs, multiwell: bool) -> Result<(), Error> {
    if !(args.dump_basis || args.dump_catalog) {
        return Ok(());
    }
    let specs: Vec<(String, ModelSpec)> = if multiwell {
        config
            .sweep
            .axis
            .points()
            .iter()
            .map(|n| (format!("_nqw{}", *n as usize), ModelSpec::multiwell(config, *n as usize)))
            .collect()
    } else {
        vec![(String::new(), ModelSpec::from_config(config))]
    };
    for (suffix, spec) in specs {
        let model = Model::build(&spec)?;
        if args.dump_basis {
            write(&args.out, &format!("basis{suffix}.csv"), &basis_csv(&model.basis))?;
        }
        if args.dump_catalog {
            write(&args.out, &format!("catalog{suffix}.csv"), &model.catalog.to_csv())?;
        }
    }
    Ok(())
}

type Runner = fn(&SweepConfig) -> cavcond::Result<RunReport>;

fn run(command: &Command) -> Result<RunReport, Error> {
    let (args, name, f): (&RunArgs, &str, Runner) = match command {
        Command::Spectrum(a) => (a, "spectrum", run_spectrum),
        Command::SweepCavity(a) => (a, "sweep_cavity", run_cavity_sweep),
        Command::SweepTau(a) => (a, "sweep_tau", run_tau_sweep),
        Command::Multiwell(a) => (a, "multiwell", run_multiwell),
        Command::Converge(a) => (a, "converge", run_convergence),
    };
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::config(args.config.display().to_string(), e.to_string()))?;
    let config = SweepConfig::from_json(&text)?;
    std::fs::create_dir_all(&args.out)?;
    let report = with_workers(args.workers, || f(&config))??;
    write(&args.out, &format!("{name}.csv"), &report.csv)?;
    write(&args.out, "report.json", &report.to_json())?;
    with_workers(args.workers, || dumps(&config, args, matches!(command, Command::Multiwell(_))))??;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(report) => {
            eprintln!(
                "{}: {} points, {} failed, setup {:.2} s, sweep {:.2} s",
                report.command,
                report.points.len(),
                report.n_failed,
                report.timings.setup_s,
                report.timings.sweep_s
            );
            if let Some(n) = report.converged_at {
                eprintln!("converged at {n} subbands");
            }
            if report.all_failed() {
                ExitCode::from(EXIT_NUMERICAL)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

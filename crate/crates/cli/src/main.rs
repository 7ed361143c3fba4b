use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use padyn::generator::{random_instance, random_negative_instance, Bounds};
use padyn::harness::{run, Command, ExitStatus, RunOptions, DEFAULT_TOL};
use padyn::report::write_atomic;

#[derive(Parser, Debug)]
#[command(name = "padyn", version, about = "Partial actions, enveloping actions and partial crossed products on finite models")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// System description (JSON).
    #[arg(long)]
    system: Option<PathBuf>,
    /// Name of the first action.
    #[arg(long)]
    alpha: Option<String>,
    /// Name of the second action.
    #[arg(long)]
    beta: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock time in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse and validate a system; with --alpha and --beta also test commutation.
    Validate(Common),
    /// Enveloping action of --alpha and its round trip.
    Globalize(Common),
    /// Orbits of --alpha; with --beta also the action of --beta on them.
    Orbits(Common),
    /// Partial crossed product of --alpha, or of --beta on the orbits of --alpha.
    CrossedProduct(Common),
    /// Partial crossed product of --alpha as a corner of the enveloping one.
    EnvelopingMorita(Common),
    /// Symmetric imprimitivity pipeline for --alpha and --beta.
    Imprimitivity(Common),
    /// Run the pipeline on many generated instances.
    Stress {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Bounds as points,group,fiber.
        #[arg(long, default_value = "8,4,2")]
        bounds: Bounds,
    },
    /// Emit a generated system description.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "8,4,2")]
        bounds: Bounds,
        /// Emit a rejected, non-commuting subset instead.
        #[arg(long)]
        negative: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), ExitCode> {
    match out {
        Some(path) => write_atomic(path, text).map_err(|e| {
            eprintln!("padyn: cannot write {}: {e}", path.display());
            ExitCode::from(ExitStatus::InvalidInput.code() as u8)
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generate(seed: u64, bounds: Bounds, negative: bool, out: Option<&PathBuf>) -> ExitCode {
    let inst = if negative {
        match random_negative_instance(seed, bounds) {
            Ok(Some(i)) => i,
            Ok(None) => {
                eprintln!("padyn: no rejected subset found for seed {seed}");
                return ExitCode::from(ExitStatus::VerdictFalse.code() as u8);
            }
            Err(e) => {
                eprintln!("padyn: {e}");
                return ExitCode::from(ExitStatus::InvalidInput.code() as u8);
            }
        }
    } else {
        match random_instance(seed, bounds) {
            Ok(i) => i,
            Err(e) => {
                eprintln!("padyn: {e}");
                return ExitCode::from(ExitStatus::InvalidInput.code() as u8);
            }
        }
    };
    if let Some(notice) = &inst.notice {
        eprintln!("padyn: {notice}");
    }
    match emit(&inst.description().to_json(), out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, count, bounds) = match cli.command {
        Cmd::Generate { seed, bounds, negative, out } => return generate(seed, bounds, negative, out.as_ref()),
        Cmd::Validate(c) => (Command::Validate, c, None, None),
        Cmd::Globalize(c) => (Command::Globalize, c, None, None),
        Cmd::Orbits(c) => (Command::Orbits, c, None, None),
        Cmd::CrossedProduct(c) => (Command::CrossedProduct, c, None, None),
        Cmd::EnvelopingMorita(c) => (Command::EnvelopingMorita, c, None, None),
        Cmd::Imprimitivity(c) => (Command::Imprimitivity, c, None, None),
        Cmd::Stress { common, count, bounds } => (Command::Stress, common, Some(count), Some(bounds)),
    };
    let defaults = RunOptions::default();
    let opts = RunOptions {
        system: common.system,
        alpha: common.alpha,
        beta: common.beta,
        tol: common.tol,
        seed: common.seed,
        count: count.unwrap_or(defaults.count),
        bounds: bounds.unwrap_or(defaults.bounds),
        timing: common.timing,
    };
    let report = match std::panic::catch_unwind(|| run(command, &opts)) {
        Ok(r) => r,
        Err(_) => {
            eprintln!("padyn: internal failure in {command}");
            return ExitCode::from(ExitStatus::Internal.code() as u8);
        }
    };
    if let Err(code) = emit(&report.to_canonical_json(), common.out.as_ref()) {
        return code;
    }
    match &report.failure {
        Some(f) => {
            eprintln!("padyn {command}: {} ({} at stage {})", f.message, f.kind, f.stage);
            for w in f.witnesses.iter().skip(1) {
                eprintln!("  {w}");
            }
        }
        None => eprintln!("padyn {command}: verdict {}", report.verdict),
    }
    ExitCode::from(report.exit_code as u8)
}

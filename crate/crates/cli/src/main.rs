//! Command-line front end: derive, run, channels, validate.
//!
//! Exit codes: 0 success, 1 runtime abort, 2 invalid input.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lagca::engine::init::{build_simulation, derive_model, SetupError};
use lagca::engine::run;
use lagca::interaction::{enumerate_channels, parse_type, Equivalence, RuleTable};
use lagca::output::{write_run_files, write_snapshots, RunRecord};
use lagca::scenario::{load_scenario, validate_scenario, LoadedScenario, Severity};
use lagca::stencil::{compile_stencil, select_family, SchrodingerMode};

#[derive(Parser, Debug)]
#[command(name = "lagca", version, about = "Lagrangian-driven cellular automaton")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the equation of motion and its update schedule.
    Derive { scenario: PathBuf },
    /// Simulate a scenario.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        ticks: Option<u64>,
        #[arg(long)]
        snapshot_every: Option<u64>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<SchrodingerMode>,
        #[arg(long)]
        allow_unstable: bool,
        /// Directory for snapshots.csv, plot.csv, events.csv and
        /// record.toml. Without it snapshots go to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the interaction channels of two particle types.
    Channels {
        type1: String,
        type2: String,
        #[arg(long, default_value = "qed")]
        rules: String,
        #[arg(long, default_value = "vertex-partition", value_parser = parse_equivalence)]
        equivalence: Equivalence,
    },
    /// Check a scenario and print its diagnostics.
    Validate { scenario: PathBuf },
}

fn parse_mode(s: &str) -> Result<SchrodingerMode, String> {
    SchrodingerMode::parse(s).ok_or_else(|| format!("expected `literal` or `corrected`, got `{s}`"))
}

fn parse_equivalence(s: &str) -> Result<Equivalence, String> {
    Equivalence::parse(s).ok_or_else(|| format!("expected `vertex-partition` or `rule-binding`, got `{s}`"))
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

type Outcome = Result<(), Failure>;

fn invalid(e: impl ToString) -> Failure {
    Failure::Invalid(e.to_string())
}

fn load(path: &Path) -> Result<LoadedScenario, Failure> {
    let loaded = load_scenario(path).map_err(invalid)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded)
}

fn cmd_derive(path: &Path) -> Outcome {
    let loaded = load(path)?;
    let s = &loaded.scenario;
    let eom = derive_model(s).map_err(|e| invalid(format!("{}: {e}", loaded.provenance.locate(s.model.key()))))?;
    let family = select_family(&eom).map_err(invalid)?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{eom}");
    let _ = writeln!(out, "family: {family}");
    match compile_stencil(&eom, &s.constant_values()) {
        Ok(p) => {
            for (n, step) in p.steps.iter().enumerate() {
                let _ = writeln!(out, "step {}: {step}", n + 1);
            }
        }
        Err(e) => eprintln!("warning: schedule not bound: {e}"),
    }
    Ok(())
}

fn cmd_validate(path: &Path) -> Outcome {
    let loaded = load(path)?;
    let s = &loaded.scenario;
    let eom = derive_model(s).map_err(|e| invalid(format!("{}: {e}", loaded.provenance.locate(s.model.key()))))?;
    let program = compile_stencil(&eom, &s.constant_values()).ok();
    let diags = validate_scenario(s, &loaded.provenance, &eom, program.as_ref());
    for d in &diags {
        eprintln!("{d}");
    }
    let errors = diags.iter().filter(|d| d.severity == Severity::Error).count();
    if errors > 0 {
        return Err(Failure::Invalid(format!("{errors} error(s)")));
    }
    println!("ok");
    Ok(())
}

struct RunFlags {
    seed: Option<u64>,
    ticks: Option<u64>,
    snapshot_every: Option<u64>,
    mode: Option<SchrodingerMode>,
    allow_unstable: bool,
    out: Option<PathBuf>,
}

fn cmd_run(path: &Path, flags: RunFlags) -> Outcome {
    let mut loaded = load(path)?;
    let s = &mut loaded.scenario;
    let mut overrides = Vec::new();
    if let Some(seed) = flags.seed {
        s.run.seed = seed;
        overrides.push(("seed".to_string(), seed.to_string()));
    }
    if let Some(t) = flags.ticks {
        s.run.ticks = Some(t);
        overrides.push(("ticks".to_string(), t.to_string()));
    }
    if let Some(n) = flags.snapshot_every {
        s.run.snapshot_every = n;
        overrides.push(("snapshot_every".to_string(), n.to_string()));
    }
    if let Some(m) = flags.mode {
        s.run.mode = m;
        overrides.push(("mode".to_string(), m.name().to_string()));
    }
    if flags.allow_unstable {
        s.run.allow_unstable = true;
        overrides.push(("allow_unstable".to_string(), "true".to_string()));
    }

    let mut sim = match build_simulation(s, &loaded.provenance) {
        Ok(sim) => sim,
        Err(SetupError::Invalid(diags)) => {
            for d in &diags {
                eprintln!("{d}");
            }
            return Err(Failure::Invalid(format!("{} error(s)", diags.len())));
        }
        Err(e) => return Err(invalid(e)),
    };
    for w in &sim.warnings {
        eprintln!("{w}");
    }
    let mut record = RunRecord::start(&loaded.digest, s, &sim);
    record.overrides = overrides;
    let outcome = run(&sim.engine, &mut sim.state, sim.stop, sim.cadence).map_err(|e| Failure::Runtime(e.to_string()))?;
    record.finish(outcome, &sim.state);
    match flags.out {
        Some(dir) => {
            write_run_files(&record, &dir).map_err(|e| Failure::Runtime(e.to_string()))?;
            eprintln!(
                "{} ticks, {} snapshots, {} interactions written to {}",
                record.final_tick,
                record.snapshots.len(),
                record.events.len(),
                dir.display()
            );
        }
        None => write_snapshots(&record.snapshots, std::io::stdout().lock()).map_err(|e| Failure::Runtime(e.to_string()))?,
    }
    Ok(())
}

fn cmd_channels(t1: &str, t2: &str, rules: &str, equivalence: Equivalence) -> Outcome {
    let a = parse_type(t1).map_err(invalid)?;
    let b = parse_type(t2).map_err(invalid)?;
    let table = RuleTable::by_name(rules, 1.0).ok_or_else(|| invalid(format!("unknown rule table `{rules}`")))?;
    let channels = enumerate_channels((a, b), &table, equivalence);
    let mut out = std::io::stdout().lock();
    if channels.is_empty() {
        let _ = writeln!(out, "no channels");
    }
    for c in &channels {
        let _ = writeln!(out, "{c}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Derive { scenario } => cmd_derive(&scenario),
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Channels {
            type1,
            type2,
            rules,
            equivalence,
        } => cmd_channels(&type1, &type2, &rules, equivalence),
        Command::Run {
            scenario,
            seed,
            ticks,
            snapshot_every,
            mode,
            allow_unstable,
            out,
        } => cmd_run(
            &scenario,
            RunFlags {
                seed,
                ticks,
                snapshot_every,
                mode,
                allow_unstable,
                out,
            },
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

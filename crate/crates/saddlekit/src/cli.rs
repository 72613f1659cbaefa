//! Command-line front end. Exit codes: 0 success, 1 config error, 2 solver
//! error, 3 failed certification (some inequality slack below −1e-8).
//! Errors are also emitted as structured JSON diagnostics on stderr and,
//! when the output directory is known, as `error.json`.

use clap::{Parser, Subcommand};

use crate::bench::{execute, ExperimentConfig, Scenario};
use crate::error::Error;

#[derive(Parser, Debug)]
#[command(name = "saddlekit", version, about = "Saddle-point solver benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct CommonArgs {
    /// Path to the experiment config JSON.
    #[arg(long)]
    config: String,
    /// Override the config's output directory.
    #[arg(long)]
    out_dir: Option<String>,
    /// Restrict emission to one format ("csv" or "json").
    #[arg(long)]
    format: Option<String>,
    /// Also emit SVG plots.
    #[arg(long)]
    svg: bool,
    /// Override the run/generator seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute a single run and emit its trace and gap certificate.
    Run(CommonArgs),
    /// Sweep iteration budgets and fit the empirical convergence rate.
    Rates(CommonArgs),
    /// Evaluate the per-iteration inequality suites.
    Certify(CommonArgs),
    /// Compare the minimization algorithms on one instance.
    Compare(CommonArgs),
    /// Demonstrate multi-block divergence and its primal-dual repair.
    Divergence(CommonArgs),
    /// Emit only the gap certificate of a run.
    Gap(CommonArgs),
}

fn expected_scenario(cmd: &Command) -> Scenario {
    match cmd {
        Command::Run(_) => Scenario::Single,
        Command::Rates(_) => Scenario::Rates,
        Command::Certify(_) => Scenario::Certify,
        Command::Compare(_) => Scenario::Compare,
        Command::Divergence(_) => Scenario::Divergence,
        Command::Gap(_) => Scenario::Gap,
    }
}

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Run(a)
        | Command::Rates(a)
        | Command::Certify(a)
        | Command::Compare(a)
        | Command::Divergence(a)
        | Command::Gap(a) => a,
    }
}

fn diagnostic(kind: &str, message: &str, out_dir: Option<&str>) {
    let body = serde_json::json!({
        "error": { "kind": kind, "message": message }
    });
    eprintln!("{body}");
    if let Some(dir) = out_dir {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(
                std::path::Path::new(dir).join("error.json"),
                serde_json::to_string_pretty(&body).expect("diagnostic json"),
            );
        }
    }
}

fn classify(err: &Error) -> (&'static str, i32) {
    match err {
        Error::Config(_) | Error::Io(_) => ("config", 1),
        _ => ("solver", 2),
    }
}

/// Parses the argument list and executes the selected scenario.
pub fn cli_dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version by "erroring" with the text
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            diagnostic("config", &e.to_string(), None);
            return 1;
        }
    };
    let args = common(&cli.command);
    let body = match std::fs::read_to_string(&args.config) {
        Ok(b) => b,
        Err(e) => {
            diagnostic(
                "config",
                &format!("reading {}: {e}", args.config),
                args.out_dir.as_deref(),
            );
            return 1;
        }
    };
    let mut config = match ExperimentConfig::from_json(&body) {
        Ok(c) => c,
        Err(e) => {
            diagnostic("config", &e.to_string(), args.out_dir.as_deref());
            return 1;
        }
    };
    let scenario = expected_scenario(&cli.command);
    if config.scenario != scenario {
        // the subcommand wins: a config written for one scenario can be
        // replayed under another as long as it validates
        config.scenario = scenario;
        if let Err(e) = config.validate() {
            diagnostic("config", &e.to_string(), args.out_dir.as_deref());
            return 1;
        }
    }
    if let Some(dir) = &args.out_dir {
        config.output.dir = dir.clone();
    }
    if args.svg {
        config.output.svg = true;
    }
    if let Some(fmt) = &args.format {
        match fmt.as_str() {
            "csv" => {
                config.output.csv = true;
                config.output.json = false;
            }
            "json" => {
                config.output.csv = false;
                config.output.json = true;
            }
            other => {
                diagnostic(
                    "config",
                    &format!("unknown format {other:?} (expected csv or json)"),
                    args.out_dir.as_deref(),
                );
                return 1;
            }
        }
    }
    if let Some(seed) = args.seed {
        crate::bench::override_seed(&mut config, seed);
    }
    match execute(&config) {
        Ok(report) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report.summary).expect("summary json")
            );
            report.exit_code
        }
        Err(e) => {
            let (kind, code) = classify(&e);
            diagnostic(kind, &e.to_string(), Some(config.output.dir.as_str()));
            code
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use efd_cli::{
    parse_config, run_experiment, CliError, Command, EXIT_IO, EXIT_OK, EXIT_VALIDATION,
    OUTPUT_DIR_ENV,
};

#[derive(Parser)]
#[command(
    name = "efd",
    version,
    about = "Expected forwarding delay: model, simulators and city experiment"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form segment expectations, one row per sweep point
    Analytics(Opts),
    /// Monte Carlo segment traversals
    Segment(Opts),
    /// Grid city packet delivery, EFD against VADD routing
    City(Opts),
    /// Model-versus-simulation checks; exits 1 if any fails
    Validate(Opts),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct Opts {
    /// Flat key = value file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Any config key, repeatable: --set key=value
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Parameter grid, repeatable: name=a,b,c or name=a..b:step
    #[arg(long, value_name = "NAME=VALUES")]
    sweep: Vec<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    lambda_r: Option<String>,
    #[arg(long)]
    arrival_rate: Option<String>,
    #[arg(long)]
    range_r: Option<String>,
    #[arg(long)]
    v_min: Option<String>,
    #[arg(long)]
    v_max: Option<String>,
    #[arg(long)]
    speed: Option<String>,
    #[arg(long)]
    hop_delay: Option<String>,
    #[arg(long)]
    segment_length: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Seed list: 1,2,3 or 1..5
    #[arg(long)]
    seeds: Option<String>,
    /// bidirectional, one-directional or both
    #[arg(long)]
    mode: Option<String>,
    /// frozen or moving
    #[arg(long)]
    kinematics: Option<String>,
    #[arg(long)]
    n_vehicles: Option<String>,
    #[arg(long)]
    packets: Option<String>,
    #[arg(long)]
    ttl: Option<String>,
    /// efd, vadd or both
    #[arg(long)]
    metric: Option<String>,
    /// full or quick
    #[arg(long)]
    plan: Option<String>,
    #[arg(long)]
    output: Option<String>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
}

impl Opts {
    fn assignments(&self) -> Result<Vec<(String, String, String)>, CliError> {
        let named = [
            ("lambda", &self.lambda),
            ("lambda_r", &self.lambda_r),
            ("arrival_rate", &self.arrival_rate),
            ("range_r", &self.range_r),
            ("v_min", &self.v_min),
            ("v_max", &self.v_max),
            ("speed", &self.speed),
            ("hop_delay", &self.hop_delay),
            ("segment_length", &self.segment_length),
            ("trials", &self.trials),
            ("seeds", &self.seeds),
            ("mode", &self.mode),
            ("kinematics", &self.kinematics),
            ("n_vehicles", &self.n_vehicles),
            ("packets", &self.packets),
            ("ttl", &self.ttl),
            ("metric", &self.metric),
            ("plan", &self.plan),
            ("output", &self.output),
            ("format", &self.format),
        ];
        let mut out: Vec<(String, String, String)> = named
            .iter()
            .filter_map(|(k, v)| {
                v.as_ref()
                    .map(|v| (k.replace('_', "-"), k.to_string(), v.clone()))
            })
            .collect();
        for s in &self.sweep {
            out.push(("sweep".into(), "sweep".into(), s.clone()));
        }
        for s in &self.set {
            let (k, v) = s.split_once('=').ok_or_else(|| {
                CliError::Config(format!("flag --set: expected KEY=VALUE, got `{s}`"))
            })?;
            out.push(("set".into(), k.trim().to_string(), v.to_string()));
        }
        Ok(out)
    }
}

fn run(command: Command, opts: &Opts) -> Result<i32, CliError> {
    let text = match &opts.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
            CliError::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?),
        None => None,
    };
    let config = parse_config(command, text.as_deref(), &opts.assignments()?)?;
    let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    let outcome = run_experiment(&config, env_dir.as_deref())?;
    for c in &outcome.checks {
        println!(
            "[{}] criterion {} {}: observed {} expected {} ({})",
            if c.passed { "pass" } else { "FAIL" },
            c.criterion,
            c.name,
            c.observed,
            c.expected,
            c.rule
        );
    }
    for f in &outcome.data_files {
        println!("wrote {}", f.display());
    }
    println!("wrote {}", outcome.meta_file.display());
    if outcome.failed > 0 {
        eprintln!(
            "{} of {} checks failed",
            outcome.failed,
            outcome.checks.len()
        );
        return Ok(EXIT_VALIDATION);
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match &cli.command {
        Cmd::Analytics(o) => (Command::Analytics, o),
        Cmd::Segment(o) => (Command::Segment, o),
        Cmd::City(o) => (Command::City, o),
        Cmd::Validate(o) => (Command::Validate, o),
    };
    let code = match run(command, opts) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    debug_assert!(code <= EXIT_IO);
    ExitCode::from(code as u8)
}

mod clifford;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anholkit::scenario::{error_json, grid, run, GridSpec, Report, RunOptions, Scenario};
use anholkit::verify::{self, Criterion};
use anholkit::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use output::{checks_csv, Sink};

#[derive(Parser, Debug)]
#[command(name = "anholkit", version, about = "Nonlinear connections, d-connections and Clifford d-algebras on bundles")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Scenario file (`-` for stdin).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Multiplies every check tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Overrides the sampler seed (and seeds the built-in suites).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Leave wall-clock timing out of reports.
    #[arg(long, global = true)]
    no_timing: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a scenario and its checks at every point.
    Analyze,
    /// Sample fields of a scenario over a coordinate grid.
    Grid {
        /// Grid specification (axes, base point, fields) as JSON.
        #[arg(long)]
        grid: PathBuf,
    },
    /// Run the built-in acceptance criteria.
    Verify {
        /// `all`, `geometry`, `clifford`, `tooling` or a criterion number.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Clifford algebra tools.
    Clifford {
        #[command(subcommand)]
        command: clifford::CliffordCommand,
    },
}

const DEFAULT_SEED: u64 = 7;

fn read_input(path: Option<&PathBuf>) -> Result<String> {
    let path = path.ok_or_else(|| Error::Scenario("--input is required".into()))?;
    let text = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    };
    text.map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))
}

fn run_options(g: &Global) -> Result<RunOptions> {
    if !(g.tolerance_scale.is_finite() && g.tolerance_scale > 0.0) {
        return Err(Error::Scenario("--tolerance-scale must be positive".into()));
    }
    Ok(RunOptions { jobs: g.jobs, tolerance_scale: g.tolerance_scale, seed: g.seed, timing: !g.no_timing })
}

fn analyze(g: &Global, sink: &Sink) -> Result<i32> {
    let scenario = Scenario::from_json(&read_input(g.input.as_ref())?)?;
    let report: Report = run(&scenario, &run_options(g)?)?;
    match g.format.unwrap_or(Format::Json) {
        Format::Json => sink.json(&report.to_json())?,
        Format::Csv => sink.text(&checks_csv(&report.checks)?)?,
    }
    Ok(if report.pass { 0 } else { 1 })
}

fn grid_command(g: &Global, spec_path: &PathBuf, sink: &Sink) -> Result<i32> {
    let scenario = Scenario::from_json(&read_input(g.input.as_ref())?)?;
    let spec_text = std::fs::read_to_string(spec_path).map_err(|e| Error::Scenario(format!("cannot read {}: {e}", spec_path.display())))?;
    let spec: GridSpec = serde_json::from_str(&spec_text).map_err(|e| Error::Scenario(format!("invalid grid spec: {e}")))?;
    let table = grid(&scenario, &spec, g.jobs)?;
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => sink.json(&table.to_json())?,
        Format::Csv => sink.text(&output::table_csv(&table.header, &table.rows)?)?,
    }
    Ok(0)
}

fn verify_command(g: &Global, suite: &str, sink: &Sink) -> Result<i32> {
    let seed = g.seed.unwrap_or(DEFAULT_SEED);
    let ids = verify::suite_members(suite)?;
    let mut results: Vec<Criterion> = Vec::new();
    for id in ids {
        let c = verify::criterion(id, seed)?;
        log::info!("{}", c.summary_line());
        results.push(c);
    }
    let pass = results.iter().all(Criterion::pass);
    match g.format {
        Some(Format::Json) => sink.json(&serde_json::json!({
            "suite": suite,
            "seed": seed,
            "pass": pass,
            "criteria": results.iter().map(Criterion::to_json).collect::<Vec<_>>(),
        }))?,
        Some(Format::Csv) => {
            let rows: Vec<Vec<String>> = results
                .iter()
                .flat_map(|c| {
                    c.checks.iter().map(move |r| {
                        vec![
                            c.id.to_string(),
                            c.title.to_string(),
                            r.name.clone(),
                            anholkit::report::num_text(r.max_residual),
                            anholkit::report::num_text(r.tolerance),
                            r.pass.to_string(),
                        ]
                    })
                })
                .collect();
            let header = ["criterion", "title", "check", "max_residual", "tolerance", "pass"].map(String::from).to_vec();
            sink.text(&output::table_csv(&header, &rows)?)?
        }
        None => {
            let mut text: String = results.iter().map(|c| c.summary_line() + "\n").collect();
            text.push_str(&format!("{} of {} criteria passed\n", results.iter().filter(|c| c.pass()).count(), results.len()));
            sink.text(&text)?
        }
    }
    Ok(if pass { 0 } else { 1 })
}

fn dispatch(cli: &Cli, sink: &Sink) -> Result<i32> {
    match &cli.command {
        Command::Analyze => analyze(&cli.global, sink),
        Command::Grid { grid } => grid_command(&cli.global, grid, sink),
        Command::Verify { suite } => verify_command(&cli.global, suite, sink),
        Command::Clifford { command } => clifford::run(command, cli.global.seed.unwrap_or(DEFAULT_SEED), sink),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ANHOLKIT_LOG", "warn")).init();
    let cli = Cli::parse();
    let sink = Sink::new(cli.global.output.clone());
    let code = match dispatch(&cli, &sink) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            let body = serde_json::to_string_pretty(&error_json(&e)).unwrap_or_default();
            println!("{body}");
            2
        }
    };
    ExitCode::from(code as u8)
}

//! `coexist` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use coexist_core::contract::{design_bundle, utility_matrix, PairContext};

use crate::config::{parse_epsilons, parse_sweep, ScenarioConfig, SchemeSelector};
use crate::error::SimResult;
use crate::experiment::{run_oracle, run_records};
use crate::output::write_csv;

#[derive(Debug, Parser)]
#[command(name = "coexist", version, about = "URLLC/eMBB coexistence scheduler experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a seeded sweep and write result rows as CSV.
    Run(RunArgs),
    /// Compare the heuristic with brute force on random tiny instances.
    Oracle(OracleArgs),
    /// Write the contract bundle and its utility matrix as CSV.
    BundleDump(ConfigArgs),
    /// Parse and check a scenario file.
    ValidateConfig(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Scenario TOML; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = ["contract", "puncture", "nourllc", "all"])]
    pub scheme: Option<String>,
    /// Number of seeds per sweep point.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// URLLC user counts as `a:b:step`.
    #[arg(long)]
    pub sweep_urllc: Option<String>,
    /// Comma-separated error targets.
    #[arg(long)]
    pub sweep_epsilon: Option<String>,
    /// eMBB TTIs per run.
    #[arg(long)]
    pub ttis: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub instances: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load(path: Option<&Path>) -> SimResult<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::default()),
    }
}

fn sink(out: Option<&Path>) -> SimResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(args: &RunArgs) -> SimResult<()> {
    let mut cfg = load(args.config.as_deref())?;
    if let Some(s) = &args.scheme {
        cfg.sim.scheme = s.parse::<SchemeSelector>()?;
    }
    if let Some(n) = args.seeds {
        cfg.sim.seeds = n;
    }
    if let Some(s) = &args.sweep_urllc {
        cfg.sim.sweep_urllc = parse_sweep(s)?;
    }
    if let Some(s) = &args.sweep_epsilon {
        cfg.sim.sweep_epsilon = parse_epsilons(s)?;
    }
    if let Some(t) = args.ttis {
        cfg.sim.ttis = t;
    }
    let out = run_records(&cfg)?;
    write_csv(&out.rows(), sink(args.out.as_deref())?)?;
    eprintln!("{} rows in {:.2} s", out.records.len(), out.elapsed.as_secs_f64());
    Ok(())
}

fn oracle(args: &OracleArgs) -> SimResult<bool> {
    let cfg = load(args.config.as_deref())?;
    let rows = run_oracle(&cfg, args.instances, args.seed)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink(args.out.as_deref())?);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let dominance = rows.iter().filter(|r| !r.dominated).count();
    let ordering = rows.iter().filter(|r| !r.contract_ge_puncture).count();
    eprintln!(
        "{} instances: {dominance} dominance violations, {ordering} contract < puncture",
        rows.len()
    );
    Ok(dominance == 0 && ordering == 0)
}

fn bundle_dump(args: &ConfigArgs) -> SimResult<()> {
    let cfg = load(args.config.as_deref())?;
    let ladder = cfg.ladder()?;
    let sc = cfg.scheduler_config(cfg.radio.error_target);
    let bundle = design_bundle(
        &ladder,
        &PairContext {
            required_rate: sc.required_rate(),
            rate_step: sc.rate_step,
            pricing: sc.pricing,
        },
    )?;
    let matrix = utility_matrix(&bundle, &ladder);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink(args.out.as_deref())?);
    let mut header: Vec<String> = ["tier", "type", "outer_radius_m", "promised_rate_bps", "price", "incentive"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=ladder.len()).map(|j| format!("utility_item_{j}")));
    w.write_record(&header)?;
    for (i, item) in bundle.items().iter().enumerate() {
        let mut rec = vec![
            (i + 1).to_string(),
            item.type_value.to_string(),
            ladder.tier_radii()[i].to_string(),
            item.promised_rate.to_string(),
            item.price.to_string(),
            item.incentive.to_string(),
        ];
        rec.extend(matrix[i].iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn validate_config(args: &ConfigArgs) -> SimResult<()> {
    let cfg = load(args.config.as_deref())?;
    let text = cfg.to_toml_string()?;
    let mut out = sink(args.out.as_deref())?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    eprintln!("config ok");
    Ok(())
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 on a
/// runtime failure (or oracle violations), 2 on usage errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::Oracle(a) => oracle(a),
        Command::BundleDump(a) => bundle_dump(a).map(|_| true),
        Command::ValidateConfig(a) => validate_config(a).map(|_| true),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

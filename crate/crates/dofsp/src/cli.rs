//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use dofsp_core::analysis::Setting;
use dofsp_core::randomness::seeded;
use dofsp_core::{run_protocol, Mutation, ProtocolConfig, Topology};

use crate::audit_report;
use crate::error::{CliError, Result};
use crate::fixtures;
use crate::instance_file::{InstanceFile, Scenario};
use crate::peq;
use crate::report::RunReport;

#[derive(Debug, Parser)]
#[command(name = "dofsp", version, about = "Private optimization over intersected feasible sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one protocol on an instance file or bundled example.
    Run {
        /// Path, or a bundled example name (example1, example2, example3).
        #[arg(long)]
        instance: String,
        /// Named scenario inside the instance file.
        #[arg(long)]
        scenario: Option<String>,
        /// two-party, ring, star or a naive-* baseline; defaults to the scenario's.
        #[arg(long)]
        topology: Option<String>,
        /// Required unless the instance file carries one.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mutate: Option<String>,
        /// Override the protocol's field with this prime.
        #[arg(long)]
        field: Option<u32>,
        /// Include the full transcript in JSON output.
        #[arg(long)]
        transcript: bool,
        /// Assert internal protocol invariants while running.
        #[arg(long)]
        debug_checks: bool,
    },
    /// Cost-equality probability table as CSV.
    Peq {
        #[arg(long, default_value = "ring")]
        topology: String,
        /// e.g. `K=10;tau=2,4..10;M=1..4`; an empty string gives no rows.
        #[arg(long)]
        grid: Option<String>,
        /// Monte Carlo trials per cell; 0 skips Monte Carlo.
        #[arg(long, default_value_t = 0)]
        trials: u64,
        /// Required when trials > 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive privacy and reliability audits on the small-instance suite.
    Audit {
        /// dofsp, naive, or one topology name.
        #[arg(long, default_value = "dofsp")]
        protocol: String,
        #[arg(long)]
        mutate: Option<String>,
        /// Succeed only if a leader leak is found.
        #[arg(long)]
        expect_leak: bool,
        /// Seeds sampling when a check exceeds the enumeration budget.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run every scenario of the bundled examples (or one file) and
    /// compare with the recorded expectations.
    VerifyExamples {
        #[arg(long)]
        instance: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn parse_topology(s: &str) -> Result<Topology> {
    Topology::parse(&s.replace('_', "-")).ok_or_else(|| CliError::Usage(format!("unknown topology {s:?}")))
}

fn parse_mutation(s: Option<&str>) -> Result<Option<Mutation>> {
    s.map(|s| {
        Mutation::parse(&s.replace('_', "-")).ok_or_else(|| CliError::Usage(format!("unknown mutation {s:?}")))
    })
    .transpose()
}

fn setting_of(t: Topology) -> Result<Setting> {
    match t {
        Topology::TwoParty => Ok(Setting::TwoParty),
        Topology::Ring => Ok(Setting::Ring),
        Topology::Star => Ok(Setting::Star),
        t => Err(CliError::Usage(format!("no probability table for {}", t.name()))),
    }
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs one scenario (or the base instance when `scenario` is `None`).
pub fn run_report(
    file: &InstanceFile,
    scenario: Option<&Scenario>,
    topology: Option<Topology>,
    seed: Option<u64>,
    config: &ProtocolConfig,
    with_transcript: bool,
) -> Result<RunReport> {
    let inst = match scenario {
        Some(s) => file.scenario_instance(s)?,
        None => file.instance()?,
    };
    let topology = match (topology, scenario) {
        (Some(t), _) => t,
        (None, Some(s)) => parse_topology(&s.topology)?,
        (None, None) => return Err(CliError::Usage("--topology is required without --scenario".into())),
    };
    let seed = seed
        .or(file.seed)
        .ok_or_else(|| CliError::Usage("--seed is required (the instance file has none)".into()))?;
    let mut config = config.clone();
    if config.field.is_none() {
        config.field = scenario.and_then(|s| s.field);
    }
    let out = run_protocol(topology, &inst, &config, &mut seeded(seed))?;
    let mut report = RunReport::new(&inst, &out, seed, with_transcript)?;
    report.instance = file.name.clone();
    report.scenario = scenario.map(|s| s.name.clone());
    Ok(report)
}

/// Differences between a scenario's expectations and its report.
pub fn mismatches(scenario: &Scenario, r: &RunReport) -> Vec<String> {
    let e = &scenario.expect;
    let mut bad = Vec::new();
    let mut check = |what: &str, want: Option<String>, got: String| {
        if let Some(w) = want {
            if w != got {
                bad.push(format!("{what}: expected {w}, got {got}"));
            }
        }
    };
    check("solution", e.solution.as_ref().map(|s| format!("{s:?}")), format!("{:?}", r.solution));
    check("stopping_round", e.stopping_round.map(|v| v.to_string()), r.stopping_round.to_string());
    check("download", e.download.map(|v| v.to_string()), r.download.to_string());
    check("upload", e.upload.map(|v| v.to_string()), r.upload.to_string());
    check("total", e.total.map(|v| v.to_string()), r.total.to_string());
    check("round_costs", e.round_costs.as_ref().map(|v| format!("{v:?}")), format!("{:?}", r.round_costs));
    check("naive_cost", e.naive_cost.map(|v| v.to_string()), r.naive_cost.to_string());
    bad
}

fn verify(files: &[InstanceFile], stdout: &mut String) -> Result<bool> {
    let mut ok = true;
    for f in files {
        let name = f.name.as_deref().unwrap_or("instance");
        for s in &f.scenarios {
            let report = run_report(f, Some(s), None, None, &ProtocolConfig::checked(), false)?;
            let bad = mismatches(s, &report);
            if bad.is_empty() {
                stdout.push_str(&format!("PASS {name}/{}\n", s.name));
            } else {
                ok = false;
                stdout.push_str(&format!("FAIL {name}/{}: {}\n", s.name, bad.join("; ")));
            }
        }
    }
    Ok(ok)
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Run {
            instance,
            scenario,
            topology,
            seed,
            format,
            out,
            mutate,
            field,
            transcript,
            debug_checks,
        } => {
            let file = InstanceFile::load(&instance)?;
            let scenario = scenario.as_deref().map(|s| file.scenario(s)).transpose()?;
            let topology = topology.as_deref().map(parse_topology).transpose()?;
            let config = ProtocolConfig {
                field,
                mutation: parse_mutation(mutate.as_deref())?,
                check_invariants: debug_checks,
            };
            let report = run_report(&file, scenario, topology, seed, &config, transcript)?;
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&report)? + "\n",
                Format::Csv => report.to_csv()?,
            };
            emit(&out, &text, stdout)
        }
        Command::Peq { topology, grid, trials, seed, out } => {
            let setting = setting_of(parse_topology(&topology)?)?;
            let seed = match (trials, seed) {
                (0, s) => s.unwrap_or(0),
                (_, Some(s)) => s,
                (_, None) => return Err(CliError::Usage("--seed is required with --trials".into())),
            };
            let grid = match grid {
                Some(g) => peq::Grid::parse(&g, setting)?,
                None => peq::Grid::defaults(setting),
            };
            let rows = peq::table(&grid.cells(setting)?, trials, seed, true)?;
            emit(&out, &peq::to_csv(&rows)?, stdout)
        }
        Command::Audit { protocol, mutate, expect_leak, seed, out } => {
            let budget = audit_report::budget_from_env()?;
            let report = audit_report::run(&protocol, parse_mutation(mutate.as_deref())?, expect_leak, seed, budget)?;
            emit(&out, &(serde_json::to_string_pretty(&report)? + "\n"), stdout)?;
            if report.success() {
                Ok(())
            } else if expect_leak {
                Err(CliError::CheckFailed("expected a leader leak, none found".into()))
            } else {
                Err(CliError::CheckFailed("audit failed".into()))
            }
        }
        Command::VerifyExamples { instance, out } => {
            let files = match instance {
                Some(i) => vec![InstanceFile::load(&i)?],
                None => fixtures::ALL
                    .iter()
                    .map(|(_, t)| InstanceFile::parse(t))
                    .collect::<Result<Vec<_>>>()?,
            };
            let mut text = String::new();
            let ok = verify(&files, &mut text)?;
            emit(&out, &text, stdout)?;
            if ok {
                Ok(())
            } else {
                Err(CliError::CheckFailed("example mismatch".into()))
            }
        }
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

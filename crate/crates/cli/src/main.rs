// SPDX-License-Identifier: Apache-2.0
//! `adder-leak` command-line driver.
//!
//! Data goes to files under `--out` or to stdout; progress goes to stderr
//! (`RUST_LOG=info` by default). Failures print one line,
//! `error: <kind>: <message>`, and exit nonzero.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adder_leak::analysis::{
    build_roc, entropy_records, histogram, pair_distances, summarize_entropy,
};
use adder_leak::experiment::{self, io, ExperimentConfig};
use adder_leak::netlist::AdderKind;
use adder_leak::timedsim::{run_trace_multi, CapturedTrace, Trial};
use adder_leak::variation::{population_to_json, sample_population};
use adder_leak::{Error, Exec, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "adder-leak",
    version,
    about = "Chip identifiability of overscaled adders"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the gate-level netlist of an adder as JSON.
    GenNetlist(Shared),
    /// Sample a chip population and write its arc delays as JSON.
    SamplePop(Shared),
    /// Find the clock periods that hit the target error rates.
    Calibrate(Shared),
    /// Trace every chip and trial at one clock period.
    Trace(Shared),
    /// Matching distances, ROC and entropy of a traces CSV.
    Analyze {
        #[command(flatten)]
        shared: Shared,
        /// traces.csv produced by `trace` or `run`
        traces: PathBuf,
    },
    /// Full pipeline: calibrate, trace, analyze, report.
    Run(Shared),
    /// AUC of every adder at every target rate.
    CompareRates(Shared),
}

#[derive(Args, Clone, Debug, Default)]
struct Shared {
    /// Adder style(s): rca, cla, hca (comma-separated).
    #[arg(long, value_delimiter = ',')]
    adder: Vec<AdderKind>,
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    chips: Option<u32>,
    /// Vectors per identification trace.
    #[arg(long)]
    vectors: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Target error rate(s), comma-separated.
    #[arg(long, value_delimiter = ',')]
    target_error: Vec<f64>,
    /// Clock period for `trace`.
    #[arg(long)]
    period_ps: Option<f64>,
    /// Key-value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run on one thread.
    #[arg(long)]
    serial: bool,
}

impl Shared {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if !self.adder.is_empty() {
            c.adders = self.adder.clone();
        }
        if !self.target_error.is_empty() {
            c.target_error_rates = self.target_error.clone();
        }
        c.width = self.width.unwrap_or(c.width);
        c.n_chips = self.chips.unwrap_or(c.n_chips);
        c.n_vectors = self.vectors.unwrap_or(c.n_vectors);
        c.seed = self.seed.unwrap_or(c.seed);
        if let Some(out) = &self.out {
            c.out_dir = out.clone();
        }
        if self.serial {
            c.exec = Exec::Serial;
        }
        c.validate()?;
        Ok(c)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes `text` to `<out>/<name>` when `--out` is given, else to stdout.
fn emit(shared: &Shared, name: &str, text: &str) -> Result<()> {
    match &shared.out {
        Some(dir) => {
            create_dir(dir)?;
            write_text(&dir.join(name), text)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gen_netlist(shared: &Shared) -> Result<()> {
    let c = shared.config()?;
    for &kind in &c.adders {
        let mut text = kind.build(c.width)?.to_json()?;
        text.push('\n');
        emit(shared, &format!("{}{}.json", kind.name(), c.width), &text)?;
    }
    Ok(())
}

fn sample_pop(shared: &Shared) -> Result<()> {
    let c = shared.config()?;
    for &kind in &c.adders {
        let netlist = kind.build(c.width)?;
        let seed = experiment::population_seed(&c, kind);
        let chips = sample_population(&c.model, &netlist, c.n_chips, seed, c.exec)?;
        let mut text = population_to_json(seed, &c.model, &chips)?;
        text.push('\n');
        emit(
            shared,
            &format!("{}{}-population.json", kind.name(), c.width),
            &text,
        )?;
    }
    Ok(())
}

fn calibrate(shared: &Shared) -> Result<()> {
    let c = shared.config()?;
    let mut points = Vec::new();
    for &kind in &c.adders {
        points.extend(experiment::calibrate_adder(&c, kind)?);
    }
    let mut text = serde_json::to_string_pretty(&points).map_err(Error::from)?;
    text.push('\n');
    emit(shared, "operating_points.json", &text)
}

fn trace(shared: &Shared) -> Result<()> {
    let c = shared.config()?;
    let period = shared
        .period_ps
        .ok_or_else(|| Error::InvalidParameter("trace needs --period-ps".into()))?;
    let [kind] = c.adders[..] else {
        return Err(Error::InvalidParameter(
            "trace takes exactly one --adder".into(),
        ));
    };
    let netlist = kind.build(c.width)?;
    let chips = sample_population(
        &c.model,
        &netlist,
        c.n_chips,
        experiment::population_seed(&c, kind),
        c.exec,
    )?;
    let vectors = experiment::identification_vectors(&c);
    let noise_seed = experiment::identification_noise_seed(&c, kind);
    let trials = c.trials_per_chip;
    let traces = c
        .exec
        .map_range(chips.len() * trials as usize, |j| {
            let trial = Trial {
                id: j as u32 % trials,
                noise_seed,
            };
            run_trace_multi(
                &netlist,
                &chips[j / trials as usize],
                &c.model,
                &vectors,
                &[period],
                c.prev_state_policy,
                trial,
            )
            .map(|mut t| t.remove(0))
        })
        .into_iter()
        .collect::<Result<Vec<CapturedTrace>>>()?;
    let path = c.out_dir.join("traces.csv");
    create_dir(&c.out_dir)?;
    io::write_traces_csv(&path, &traces, c.width)?;
    let errors: usize = traces.iter().map(CapturedTrace::error_count).sum();
    println!(
        "{{\"traces\":{},\"vectors\":{},\"error_rate\":{}}}",
        traces.len(),
        vectors.len(),
        errors as f64 / (traces.len() * vectors.len()) as f64
    );
    Ok(())
}

fn analyze(shared: &Shared, path: &Path) -> Result<()> {
    let c = shared.config()?;
    let traces = io::read_traces_csv(path)?;
    let width = c.width;
    let out = &c.out_dir;
    create_dir(out)?;
    let first_trials: Vec<CapturedTrace> = {
        let min_trial = traces.iter().map(|t| t.trial_id).min().unwrap_or(0);
        traces
            .iter()
            .filter(|t| t.trial_id == min_trial)
            .cloned()
            .collect()
    };
    let records = entropy_records(&first_trials)?;
    let entropy = summarize_entropy(&records, &first_trials)?;
    io::write_entropy_csv(&out.join("entropy.csv"), &records, width)?;
    let mut report = serde_json::json!({ "traces": traces.len(), "entropy": entropy });
    let (within, between) = pair_distances(&traces, c.trials_per_chip as usize, Exec::Serial)?;
    if between.is_empty() {
        report["note"] = "identification skipped: insufficient population".into();
    } else {
        let roc = build_roc(&within, &between)?;
        io::write_histogram_csv(&out.join("histogram.csv"), &histogram(&within, &between))?;
        io::write_roc_csv(&out.join("roc.csv"), &roc)?;
        report["auc"] = roc.auc.into();
    }
    println!("{report}");
    Ok(())
}

fn run(shared: &Shared) -> Result<()> {
    let c = shared.config()?;
    let report = experiment::run_experiment(&c)?;
    print!("{}", experiment::render_summary(&report));
    Ok(())
}

fn compare_rates(shared: &Shared) -> Result<()> {
    let c = shared.config()?;
    let rows = experiment::compare_error_rates(&c)?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "adder,error_rate,auc");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.adder, r.error_rate, r.auc);
    }
    Ok(())
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error: usage: {}", one_line(first));
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::GenNetlist(s) => gen_netlist(s),
        Command::SamplePop(s) => sample_pop(s),
        Command::Calibrate(s) => calibrate(s),
        Command::Trace(s) => trace(s),
        Command::Analyze { shared, traces } => analyze(shared, traces),
        Command::Run(s) => run(s),
        Command::CompareRates(s) => compare_rates(s),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}

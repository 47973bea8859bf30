// SPDX-License-Identifier: Apache-2.0
//! End-to-end experiment: calibrate each adder to the target error rates,
//! trace a population at those periods, and write the identifiability
//! artifacts.
//!
//! Layout under `out_dir`:
//!
//! ```text
//! report.json  summary.txt  auc_by_rate.csv
//! <adder>/<rate>/operating_point.json traces.csv histogram.csv roc.csv entropy.csv
//! .cache/calibration-<sha256>.json
//! ```

pub mod config;
pub mod io;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::{info, warn};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{build_roc, entropy_study, histogram, pair_distances, EntropySummary};
use crate::calibration::{ErrorProfile, OperatingPoint};
use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::netlist::{AdderInput, AdderKind, Netlist, OutputWord};
use crate::seed::{self, Domain};
use crate::timedsim::{capture_stream, CapturedTrace, TraceEntry, Trial};
use crate::variation::{sample_population, ChipInstance, DelayModel};

pub use config::ExperimentConfig;
pub use io::AucRow;

/// Uniform random `width`-bit operand pairs with carry-in 0.
pub fn generate_vectors(n: usize, width: u32, seed: u64) -> Vec<AdderInput> {
    let mut rng = seed::stream(seed, Domain::Vectors, &[width as u64]);
    let mask = if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    };
    (0..n)
        .map(|_| AdderInput::new(rng.random::<u64>() & mask, rng.random::<u64>() & mask))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub within_pairs: usize,
    pub between_pairs: usize,
    pub mean_within_distance: f64,
    pub mean_between_distance: f64,
    pub auc: f64,
    pub histogram_file: String,
    pub roc_file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub target_error_rate: f64,
    /// Relative to the output directory.
    pub directory: String,
    pub operating_point: Option<OperatingPoint>,
    /// Error rate observed over all identification traces.
    pub trace_error_rate: Option<f64>,
    pub identification: Option<IdentificationResult>,
    pub entropy: Option<EntropySummary>,
    pub entropy_file: Option<String>,
    pub traces_file: Option<String>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPathStats {
    pub nominal_ps: f64,
    pub min_ps: f64,
    pub mean_ps: f64,
    pub max_ps: f64,
    pub coefficient_of_variation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdderReport {
    pub adder: AdderKind,
    pub gates: usize,
    pub arcs: usize,
    pub population_seed: u64,
    pub critical_path: CriticalPathStats,
    pub rates: Vec<RateReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub adders: Vec<AdderReport>,
    pub auc_table: Vec<AucRow>,
    /// True when some operating point could not be produced.
    pub partial: bool,
}

impl ExperimentReport {
    pub fn rate(&self, adder: AdderKind, target: f64) -> Option<&RateReport> {
        self.adders
            .iter()
            .find(|a| a.adder == adder)?
            .rates
            .iter()
            .find(|r| r.target_error_rate == target)
    }

    pub fn auc(&self, adder: AdderKind, target: f64) -> Option<f64> {
        self.rate(adder, target)?
            .identification
            .as_ref()
            .map(|i| i.auc)
    }
}

/// Directory name of one target rate.
pub fn rate_dir_name(rate: f64) -> String {
    format!("{rate}")
}

fn kind_index(kind: AdderKind) -> u64 {
    AdderKind::ALL
        .iter()
        .position(|&k| k == kind)
        .expect("kind is listed") as u64
}

pub fn population_seed(config: &ExperimentConfig, kind: AdderKind) -> u64 {
    seed::derive(config.seed, Domain::Population, &[kind_index(kind)])
}

/// Vectors the identification traces use.
pub fn identification_vectors(config: &ExperimentConfig) -> Vec<AdderInput> {
    generate_vectors(
        config.n_vectors,
        config.width,
        seed::derive(config.seed, Domain::Identification, &[0]),
    )
}

/// Noise seed of the identification traces of one adder.
pub fn identification_noise_seed(config: &ExperimentConfig, kind: AdderKind) -> u64 {
    seed::derive(config.seed, Domain::Identification, &[kind_index(kind), 1])
}

#[derive(Serialize)]
struct CalibrationKey<'a> {
    netlist: &'a Netlist,
    model: &'a DelayModel,
    population_seed: u64,
    chips: u32,
    vectors: usize,
    vector_seed: u64,
    noise_seed: u64,
    targets: &'a [f64],
    tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct CachedPoint {
    target: f64,
    period_ps: f64,
    rate: f64,
}

/// Target rate and its (period, measured rate), or why it failed.
type Calibrated = (f64, Result<(f64, f64)>);

fn cache_path(out: &Path, key: &CalibrationKey) -> Result<std::path::PathBuf> {
    let digest = Sha256::digest(serde_json::to_vec(key)?);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(out.join(".cache").join(format!("calibration-{hex}.json")))
}

fn calibrate_all(
    config: &ExperimentConfig,
    kind: AdderKind,
    netlist: &Netlist,
    population: &[ChipInstance],
    pop_seed: u64,
) -> Result<Vec<Calibrated>> {
    let kind = kind_index(kind);
    let chips = config.calibration_chip_count();
    let vector_seed = seed::derive(config.seed, Domain::Calibration, &[0]);
    let noise_seed = seed::derive(config.seed, Domain::Calibration, &[kind, 1]);
    let key = CalibrationKey {
        netlist,
        model: &config.model,
        population_seed: pop_seed,
        chips,
        vectors: config.calibration_vectors,
        vector_seed,
        noise_seed,
        targets: &config.target_error_rates,
        tolerance: config.calibration_tolerance,
    };
    let path = cache_path(&config.out_dir, &key)?;
    if path.exists() {
        match io::read_json::<Vec<CachedPoint>>(&path) {
            Ok(points) if points.len() == config.target_error_rates.len() => {
                info!(
                    "{}: calibration reused from {}",
                    netlist.name,
                    path.display()
                );
                return Ok(points
                    .into_iter()
                    .map(|p| (p.target, Ok((p.period_ps, p.rate))))
                    .collect());
            }
            _ => warn!(
                "{}: ignoring unreadable calibration cache {}",
                netlist.name,
                path.display()
            ),
        }
    }

    let vectors = generate_vectors(config.calibration_vectors, config.width, vector_seed);
    info!(
        "{}: measuring error profile on {} chips x {} vectors",
        netlist.name, chips, config.calibration_vectors
    );
    let profile = ErrorProfile::measure(
        netlist,
        &population[..chips as usize],
        &config.model,
        &vectors,
        true,
        noise_seed,
        config.exec,
    )?;
    let points: Vec<Calibrated> = config
        .target_error_rates
        .iter()
        .map(|&target| {
            (
                target,
                profile.calibrate(target, config.calibration_tolerance),
            )
        })
        .collect();
    // failures are not cached, so a rerun reports them again
    let cached: Option<Vec<CachedPoint>> = points
        .iter()
        .map(|(target, r)| {
            r.as_ref().ok().map(|&(period_ps, rate)| CachedPoint {
                target: *target,
                period_ps,
                rate,
            })
        })
        .collect();
    if let Some(cached) = cached {
        fs::create_dir_all(path.parent().expect("cache file has a parent"))
            .map_err(|e| Error::io(&path, e))?;
        io::write_json(&path, &cached)?;
    }
    Ok(points)
}

/// Calibrates one adder to every target rate of `config`, exactly as
/// [`run_experiment`] does (same population, vectors, noise and cache).
pub fn calibrate_adder(config: &ExperimentConfig, kind: AdderKind) -> Result<Vec<OperatingPoint>> {
    config.validate()?;
    let netlist = kind.build(config.width)?;
    let pop_seed = population_seed(config, kind);
    let population = sample_population(
        &config.model,
        &netlist,
        config.n_chips,
        pop_seed,
        config.exec,
    )?;
    calibrate_all(config, kind, &netlist, &population, pop_seed)?
        .into_iter()
        .map(|(target, outcome)| {
            let (period, rate) = outcome
                .map_err(|e| e.context(format!("calibrating {kind} to error rate {target}")))?;
            Ok(OperatingPoint {
                adder: kind.name().to_string(),
                clock_period_ps: period,
                measured_error_rate: rate,
                target_error_rate: target,
                calibration_vectors: config.calibration_vectors as u64,
                population_seed: pop_seed,
            })
        })
        .collect()
}

fn critical_path_stats(
    netlist: &Netlist,
    model: &DelayModel,
    population: &[ChipInstance],
) -> Result<CriticalPathStats> {
    let paths = population
        .iter()
        .map(|c| netlist.critical_path_delay(c))
        .collect::<Result<Vec<f64>>>()?;
    let n = paths.len() as f64;
    let mean = paths.iter().sum::<f64>() / n;
    let var = paths.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
    Ok(CriticalPathStats {
        nominal_ps: netlist.critical_path_delay(&model.nominal_chip(netlist))?,
        min_ps: paths.iter().copied().fold(f64::INFINITY, f64::min),
        mean_ps: mean,
        max_ps: paths.iter().copied().fold(0.0, f64::max),
        coefficient_of_variation: if mean > 0.0 { var.sqrt() / mean } else { 0.0 },
    })
}

/// Captures `vectors` on every (chip, trial) at every period. Result is
/// indexed `[job][period][vector]` with job = chip index * trials + trial.
fn capture_jobs(
    config: &ExperimentConfig,
    netlist: &Netlist,
    population: &[ChipInstance],
    vectors: &[AdderInput],
    periods: &[f64],
    trials: u32,
    noise_seed: u64,
) -> Result<Vec<Vec<Vec<OutputWord>>>> {
    let jobs = population.len() * trials as usize;
    config
        .exec
        .map_range(jobs, |j| {
            let chip = &population[j / trials as usize];
            let trial = Trial {
                id: (j % trials as usize) as u32,
                noise_seed,
            };
            capture_stream(
                netlist,
                chip,
                &config.model,
                vectors,
                periods,
                config.prev_state_policy,
                trial,
            )
        })
        .into_iter()
        .collect()
}

fn write_report_files(config: &ExperimentConfig, report: &ExperimentReport) -> Result<()> {
    let out = &config.out_dir;
    io::write_json(&out.join("report.json"), report)?;
    io::write_auc_csv(&out.join("auc_by_rate.csv"), &report.auc_table)?;
    let path = out.join("summary.txt");
    fs::write(&path, render_summary(report)).map_err(|e| Error::io(&path, e))
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

/// Plain-text tables of operating points, entropy and AUC.
pub fn render_summary(report: &ExperimentReport) -> String {
    let c = &report.config;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "width {}  chips {}  vectors {}  trials {}  entropy vectors {}  seed {}",
        c.width, c.n_chips, c.n_vectors, c.trials_per_chip, c.entropy_vectors, c.seed
    );
    let _ = writeln!(
        s,
        "process sigma {}  noise sigma {}  policy {:?}",
        c.model.process_sigma_frac, c.model.noise_sigma_frac, c.prev_state_policy
    );
    if report.partial {
        let _ = writeln!(s, "PARTIAL: some operating points are missing");
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "adder  crit_path_ps  cp_min    cp_max    cp_cv");
    for a in &report.adders {
        let cp = &a.critical_path;
        let _ = writeln!(
            s,
            "{:<6} {:<13.1} {:<9.1} {:<9.1} {:.4}",
            a.adder.name(),
            cp.nominal_ps,
            cp.min_ps,
            cp.max_ps,
            cp.coefficient_of_variation
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "adder  target  period_ps  calib_rate  trace_rate  auc     mean_entropy  deterministic  err_chip_frac"
    );
    for a in &report.adders {
        for r in &a.rates {
            let op = r.operating_point.as_ref();
            let e = r.entropy.as_ref();
            let _ = writeln!(
                s,
                "{:<6} {:<7} {:<10} {:<11} {:<11} {:<7} {:<13} {:<14} {}",
                a.adder.name(),
                r.target_error_rate,
                opt(op.map(|o| o.clock_period_ps), 2),
                opt(op.map(|o| o.measured_error_rate), 4),
                opt(r.trace_error_rate, 4),
                opt(r.identification.as_ref().map(|i| i.auc), 4),
                opt(e.map(|e| e.mean_entropy), 5),
                opt(e.map(|e| e.pct_deterministic_vectors), 4),
                opt(e.map(|e| e.mean_error_chip_fraction), 4),
            );
            for note in &r.notes {
                let _ = writeln!(s, "       note: {note}");
            }
        }
    }
    s
}

fn run_adder(
    config: &ExperimentConfig,
    kind: AdderKind,
    first_error: &mut Option<Error>,
) -> Result<AdderReport> {
    let netlist = kind.build(config.width)?;
    let pop_seed = population_seed(config, kind);
    info!(
        "{kind}: {} gates, sampling {} chips",
        netlist.gates.len(),
        config.n_chips
    );
    let population = sample_population(
        &config.model,
        &netlist,
        config.n_chips,
        pop_seed,
        config.exec,
    )?;
    let critical_path = critical_path_stats(&netlist, &config.model, &population)?;

    let points = calibrate_all(config, kind, &netlist, &population, pop_seed)?;
    let mut rates = Vec::with_capacity(points.len());
    for (target, outcome) in points {
        let mut notes = Vec::new();
        let operating_point = match outcome {
            Ok((period, rate)) => Some(OperatingPoint {
                adder: kind.name().to_string(),
                clock_period_ps: period,
                measured_error_rate: rate,
                target_error_rate: target,
                calibration_vectors: config.calibration_vectors as u64,
                population_seed: pop_seed,
            }),
            Err(e) => {
                warn!("{kind} @ {target}: {e}");
                notes.push(format!("calibration failed: {e}"));
                if first_error.is_none() {
                    *first_error =
                        Some(e.context(format!("calibrating {kind} to error rate {target}")));
                }
                None
            }
        };
        rates.push(RateReport {
            target_error_rate: target,
            directory: format!("{}/{}", kind.name(), rate_dir_name(target)),
            operating_point,
            trace_error_rate: None,
            identification: None,
            entropy: None,
            entropy_file: None,
            traces_file: None,
            notes,
        });
    }

    let live: Vec<usize> = (0..rates.len())
        .filter(|&i| rates[i].operating_point.is_some())
        .collect();
    for &i in &live {
        let dir = config.out_dir.join(&rates[i].directory);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        io::write_json(
            &dir.join("operating_point.json"),
            rates[i].operating_point.as_ref().expect("live"),
        )?;
    }
    if live.is_empty() {
        return Ok(AdderReport {
            adder: kind,
            gates: netlist.gates.len(),
            arcs: netlist.arc_count(),
            population_seed: pop_seed,
            critical_path,
            rates,
        });
    }
    let periods: Vec<f64> = live
        .iter()
        .map(|&i| {
            rates[i]
                .operating_point
                .as_ref()
                .expect("live")
                .clock_period_ps
        })
        .collect();

    // identification
    let id_vectors = identification_vectors(config);
    let id_golden = netlist.eval_adder_many(&id_vectors)?;
    let id_noise = identification_noise_seed(config, kind);
    info!(
        "{kind}: tracing {} chips x {} trials x {} vectors at {} periods",
        config.n_chips,
        config.trials_per_chip,
        config.n_vectors,
        periods.len()
    );
    let mut id_words = capture_jobs(
        config,
        &netlist,
        &population,
        &id_vectors,
        &periods,
        config.trials_per_chip,
        id_noise,
    )?;
    let trials = config.trials_per_chip as usize;
    for (slot, &i) in live.iter().enumerate() {
        let traces: Vec<CapturedTrace> = id_words
            .iter_mut()
            .enumerate()
            .map(|(j, per_period)| CapturedTrace {
                chip_id: population[j / trials].chip_id,
                trial_id: (j % trials) as u32,
                entries: id_vectors
                    .iter()
                    .zip(std::mem::take(&mut per_period[slot]))
                    .zip(&id_golden)
                    .map(|((&input, captured), &golden)| TraceEntry {
                        input,
                        captured,
                        golden,
                    })
                    .collect(),
            })
            .collect();
        let rate = &mut rates[i];
        let dir = config.out_dir.join(&rate.directory);
        let errors: usize = traces.iter().map(CapturedTrace::error_count).sum();
        rate.trace_error_rate = Some(errors as f64 / (traces.len() * config.n_vectors) as f64);
        if config.write_traces {
            io::write_traces_csv(&dir.join("traces.csv"), &traces, config.width)?;
            rate.traces_file = Some(format!("{}/traces.csv", rate.directory));
        }
        if config.n_chips < 2 {
            rate.notes.push(
                "identification skipped: insufficient population (need at least 2 chips)".into(),
            );
        } else if trials < 2 {
            rate.notes.push(
                "identification skipped: insufficient trials (need at least 2 per chip)".into(),
            );
        } else {
            let (within, between) = pair_distances(&traces, trials, Exec::Serial)?;
            let roc = build_roc(&within, &between)?;
            io::write_histogram_csv(&dir.join("histogram.csv"), &histogram(&within, &between))?;
            io::write_roc_csv(&dir.join("roc.csv"), &roc)?;
            let mean = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len() as f64;
            rate.identification = Some(IdentificationResult {
                within_pairs: within.len(),
                between_pairs: between.len(),
                mean_within_distance: mean(&within),
                mean_between_distance: mean(&between),
                auc: roc.auc,
                histogram_file: format!("{}/histogram.csv", rate.directory),
                roc_file: format!("{}/roc.csv", rate.directory),
            });
            info!("{kind} @ {}: AUC {:.4}", rate.target_error_rate, roc.auc);
        }
    }
    drop(id_words);

    // entropy: one noisy trial per chip on its own vector set
    let en_vectors = generate_vectors(
        config.entropy_vectors,
        config.width,
        seed::derive(config.seed, Domain::Entropy, &[0]),
    );
    let en_golden = netlist.eval_adder_many(&en_vectors)?;
    let en_noise = seed::derive(config.seed, Domain::Entropy, &[kind_index(kind), 1]);
    info!(
        "{kind}: entropy study on {} vectors",
        config.entropy_vectors
    );
    let en_words = capture_jobs(
        config,
        &netlist,
        &population,
        &en_vectors,
        &periods,
        1,
        en_noise,
    )?;
    for (slot, &i) in live.iter().enumerate() {
        let columns: Vec<&[OutputWord]> = en_words
            .iter()
            .map(|per_period| per_period[slot].as_slice())
            .collect();
        let (records, summary) = entropy_study(&en_vectors, &en_golden, &columns)?;
        let rate = &mut rates[i];
        io::write_entropy_csv(
            &config.out_dir.join(&rate.directory).join("entropy.csv"),
            &records,
            config.width,
        )?;
        rate.entropy_file = Some(format!("{}/entropy.csv", rate.directory));
        rate.entropy = Some(summary);
    }

    Ok(AdderReport {
        adder: kind,
        gates: netlist.gates.len(),
        arcs: netlist.arc_count(),
        population_seed: pop_seed,
        critical_path,
        rates,
    })
}

/// Runs the whole pipeline and writes every artifact. If an operating point
/// cannot be calibrated, the remaining work still runs, the report is
/// written with `partial = true`, and the first calibration error is
/// returned.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let out = &config.out_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut first_error = None;
    let mut adders = Vec::new();
    for &kind in &config.adders {
        adders.push(run_adder(config, kind, &mut first_error)?);
    }
    let auc_table = adders
        .iter()
        .flat_map(|a| {
            a.rates.iter().filter_map(move |r| {
                r.identification.as_ref().map(|i| AucRow {
                    adder: a.adder.name().to_string(),
                    error_rate: r.target_error_rate,
                    auc: i.auc,
                })
            })
        })
        .collect();
    let report = ExperimentReport {
        config: config.clone(),
        adders,
        auc_table,
        partial: first_error.is_some(),
    };
    write_report_files(config, &report)?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// AUC per adder and target rate. Needs at least two target rates.
pub fn compare_error_rates(config: &ExperimentConfig) -> Result<Vec<AucRow>> {
    if config.target_error_rates.len() < 2 {
        return Err(invalid("≥ 2 rates required"));
    }
    Ok(run_experiment(config)?.auc_table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            adders: vec![AdderKind::Rca],
            width: 8,
            n_chips: 6,
            n_vectors: 300,
            trials_per_chip: 2,
            target_error_rates: vec![0.05, 0.1],
            entropy_vectors: 200,
            calibration_vectors: 400,
            calibration_tolerance: 0.01,
            out_dir: dir.to_path_buf(),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn vectors_are_deterministic_and_in_range() {
        assert_eq!(generate_vectors(50, 12, 9), generate_vectors(50, 12, 9));
        assert_ne!(generate_vectors(50, 12, 9), generate_vectors(50, 12, 10));
        let one = generate_vectors(1, 5, 3);
        assert_eq!(one.len(), 1);
        assert!(one[0].a < 32 && one[0].b < 32 && !one[0].cin);
    }

    #[test]
    fn bit_frequencies_are_balanced() {
        let v = generate_vectors(200_000, 32, 1);
        for bit in 0..32 {
            let ones = v.iter().filter(|x| x.a >> bit & 1 == 1).count() as f64 / v.len() as f64;
            assert!((0.49..=0.51).contains(&ones), "bit {bit}: {ones}");
        }
    }

    #[test]
    fn small_pipeline_writes_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_experiment(&small(dir.path())).unwrap();
        assert!(!report.partial);
        assert_eq!(report.auc_table.len(), 2);
        for rate in &report.adders[0].rates {
            let id = rate.identification.as_ref().unwrap();
            assert_eq!((id.within_pairs, id.between_pairs), (6, 15));
            for f in [&id.histogram_file, &id.roc_file] {
                assert!(dir.path().join(f).is_file(), "{f}");
            }
            let roc = io::read_roc_csv(&dir.path().join(&id.roc_file)).unwrap();
            assert_eq!(roc.auc, id.auc);
            let traces =
                io::read_traces_csv(&dir.path().join(rate.traces_file.as_ref().unwrap())).unwrap();
            assert_eq!(traces.len(), 12);
            let entropy =
                io::read_entropy_csv(&dir.path().join(rate.entropy_file.as_ref().unwrap()))
                    .unwrap();
            assert_eq!(entropy.len(), 200);
        }
        let back: ExperimentReport = io::read_json(&dir.path().join("report.json")).unwrap();
        assert_eq!(back.adders, report.adders);
        assert!(fs::read_to_string(dir.path().join("summary.txt"))
            .unwrap()
            .contains("rca"));
        assert_eq!(
            io::read_auc_csv(&dir.path().join("auc_by_rate.csv")).unwrap(),
            report.auc_table
        );
    }

    #[test]
    fn single_chip_skips_identification() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(dir.path());
        c.n_chips = 1;
        c.target_error_rates = vec![0.1];
        let report = run_experiment(&c).unwrap();
        let rate = &report.adders[0].rates[0];
        assert!(rate.identification.is_none());
        assert!(rate
            .notes
            .iter()
            .any(|n| n.contains("insufficient population")));
        let e = rate.entropy.as_ref().unwrap();
        assert_eq!((e.mean_entropy, e.pct_deterministic_vectors), (0.0, 1.0));
    }

    #[test]
    fn unreachable_rate_is_reported_as_partial() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(dir.path());
        // even the shortest period leaves some outputs unchanged
        c.target_error_rates = vec![0.05, 0.9999];
        c.calibration_tolerance = 0.0001;
        let err = run_experiment(&c).unwrap_err();
        assert_eq!(err.kind(), "calibration-failure");
        assert!(err.to_string().contains("0.9999"), "{err}");
        let back: ExperimentReport = io::read_json(&dir.path().join("report.json")).unwrap();
        assert!(back.partial);
        assert!(back.adders[0].rates[0].identification.is_some());
        assert!(back.adders[0].rates[1].operating_point.is_none());
    }

    #[test]
    fn compare_requires_two_rates() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(dir.path());
        c.target_error_rates = vec![0.05];
        assert!(compare_error_rates(&c)
            .unwrap_err()
            .to_string()
            .contains("≥ 2 rates required"));
    }

    #[test]
    fn calibration_cache_is_reused() {
        let dir = tempfile::tempdir().unwrap();
        let c = small(dir.path());
        let first = run_experiment(&c).unwrap();
        let cache: Vec<_> = fs::read_dir(dir.path().join(".cache")).unwrap().collect();
        assert_eq!(cache.len(), 1);
        let second = run_experiment(&c).unwrap();
        assert_eq!(first, second);
    }
}

// SPDX-License-Identifier: Apache-2.0
//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Every key maps to one field;
//! unknown or repeated keys are errors.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::netlist::{AdderKind, GateKind};
use crate::timedsim::PrevStatePolicy;
use crate::variation::DelayModel;

/// Keys accepted in a config file, in documentation order.
pub const KEYS: &[&str] = &[
    "adder",
    "width",
    "n_chips",
    "n_vectors",
    "trials_per_chip",
    "target_error_rates",
    "entropy_vectors",
    "calibration_vectors",
    "calibration_chips",
    "calibration_tolerance",
    "seed",
    "out_dir",
    "nominal_inv_ps",
    "nominal_and2_ps",
    "nominal_or2_ps",
    "nominal_xor2_ps",
    "process_sigma_frac",
    "noise_sigma_frac",
    "min_delay_ps",
    "prev_state_policy",
    "write_traces",
    "parallel",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub adders: Vec<AdderKind>,
    pub width: u32,
    pub n_chips: u32,
    pub n_vectors: usize,
    pub trials_per_chip: u32,
    pub target_error_rates: Vec<f64>,
    /// Vectors applied (one noisy trial per chip) for the entropy study.
    pub entropy_vectors: usize,
    pub calibration_vectors: usize,
    /// Chips used for calibration; the first ones of the population.
    /// Zero means all.
    pub calibration_chips: u32,
    pub calibration_tolerance: f64,
    pub model: DelayModel,
    pub seed: u64,
    pub prev_state_policy: PrevStatePolicy,
    pub write_traces: bool,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            adders: vec![AdderKind::Rca],
            width: 32,
            n_chips: 50,
            n_vectors: 40_000,
            trials_per_chip: 2,
            target_error_rates: vec![0.01, 0.02, 0.05],
            entropy_vectors: 200_000,
            calibration_vectors: 20_000,
            calibration_chips: 0,
            calibration_tolerance: 0.001,
            model: DelayModel::default(),
            seed: 1,
            prev_state_policy: PrevStatePolicy::Sequential,
            write_traces: true,
            out_dir: PathBuf::from("out"),
            exec: Exec::Parallel,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| invalid(format!("{key}: cannot parse '{value}': {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(invalid(format!(
            "{key}: expected true or false, got '{value}'"
        ))),
    }
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

impl ExperimentConfig {
    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "adder" => self.adders = parse_list(value, str::parse)?,
            "width" => self.width = parse_num(key, value)?,
            "n_chips" => self.n_chips = parse_num(key, value)?,
            "n_vectors" => self.n_vectors = parse_num(key, value)?,
            "trials_per_chip" => self.trials_per_chip = parse_num(key, value)?,
            "target_error_rates" => {
                self.target_error_rates = parse_list(value, |s| parse_num(key, s))?
            }
            "entropy_vectors" => self.entropy_vectors = parse_num(key, value)?,
            "calibration_vectors" => self.calibration_vectors = parse_num(key, value)?,
            "calibration_chips" => self.calibration_chips = parse_num(key, value)?,
            "calibration_tolerance" => self.calibration_tolerance = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "nominal_inv_ps" => {
                self.model
                    .nominal_ps
                    .insert(GateKind::Inv, parse_num(key, value)?);
            }
            "nominal_and2_ps" => {
                self.model
                    .nominal_ps
                    .insert(GateKind::And2, parse_num(key, value)?);
            }
            "nominal_or2_ps" => {
                self.model
                    .nominal_ps
                    .insert(GateKind::Or2, parse_num(key, value)?);
            }
            "nominal_xor2_ps" => {
                self.model
                    .nominal_ps
                    .insert(GateKind::Xor2, parse_num(key, value)?);
            }
            "process_sigma_frac" => self.model.process_sigma_frac = parse_num(key, value)?,
            "noise_sigma_frac" => self.model.noise_sigma_frac = parse_num(key, value)?,
            "min_delay_ps" => self.model.min_delay_ps = parse_num(key, value)?,
            "prev_state_policy" => {
                self.prev_state_policy = match value {
                    "sequential" => PrevStatePolicy::Sequential,
                    "fixed-zero" => PrevStatePolicy::FixedZero,
                    _ => {
                        return Err(invalid(format!(
                            "{key}: expected sequential or fixed-zero, got '{value}'"
                        )))
                    }
                }
            }
            "write_traces" => self.write_traces = parse_bool(key, value)?,
            "parallel" => {
                self.exec = if parse_bool(key, value)? {
                    Exec::Parallel
                } else {
                    Exec::Serial
                };
            }
            _ => return Err(invalid(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Config {
                path: origin.to_string(),
                line: idx + 1,
                msg,
            };
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(format!("expected 'key = value', got '{line}'")));
            };
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(err(format!("duplicate key '{key}'")));
            }
            config.set(key, value).map_err(|e| err(e.to_string()))?;
            seen.push(key.to_string());
        }
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.adders.is_empty() {
            return Err(invalid("no adder selected"));
        }
        for adder in &self.adders {
            adder
                .build(self.width)
                .map_err(|e| e.context(format!("adder {adder}")))?;
        }
        for (name, count) in [
            ("n_chips", self.n_chips as usize),
            ("n_vectors", self.n_vectors),
            ("trials_per_chip", self.trials_per_chip as usize),
            ("entropy_vectors", self.entropy_vectors),
            ("calibration_vectors", self.calibration_vectors),
        ] {
            if count == 0 {
                return Err(invalid(format!("{name} must be >= 1")));
            }
        }
        if self.target_error_rates.is_empty() {
            return Err(invalid("no target error rates"));
        }
        if let Some(r) = self
            .target_error_rates
            .iter()
            .find(|&&r| !(r > 0.0 && r < 1.0))
        {
            return Err(invalid(format!("target error rate {r} outside (0, 1)")));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.calibration_tolerance > 0.0) {
            return Err(invalid("calibration_tolerance must be > 0"));
        }
        self.model.validate()
    }

    pub fn calibration_chip_count(&self) -> u32 {
        match self.calibration_chips {
            0 => self.n_chips,
            n => n.min(self.n_chips),
        }
    }
}

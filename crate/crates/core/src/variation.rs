// SPDX-License-Identifier: Apache-2.0
//! Statistical delay model: per-arc process variation fixed at manufacture,
//! plus fresh per-evaluation noise.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::netlist::{GateKind, Netlist};
use crate::seed::{self, Domain};

/// Sampled delays are quantized to 1e-6 ps so that the 6-digit JSON export
/// reproduces them exactly.
const DELAY_SCALE: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayModel {
    /// Nominal delay of every input arc of a gate kind, in ps.
    pub nominal_ps: BTreeMap<GateKind, f64>,
    pub process_sigma_frac: f64,
    pub noise_sigma_frac: f64,
    pub min_delay_ps: f64,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel {
            nominal_ps: BTreeMap::from([
                (GateKind::Inv, 10.0),
                (GateKind::And2, 15.0),
                (GateKind::Or2, 15.0),
                (GateKind::Xor2, 25.0),
            ]),
            process_sigma_frac: 0.30,
            noise_sigma_frac: 0.10,
            min_delay_ps: 0.1,
        }
    }
}

impl DelayModel {
    pub fn validate(&self) -> Result<()> {
        for kind in GateKind::ALL {
            match self.nominal_ps.get(&kind) {
                Some(&d) if d > 0.0 && d.is_finite() => {}
                Some(d) => {
                    return Err(invalid(format!(
                        "nominal delay of {kind:?} must be > 0, got {d}"
                    )))
                }
                None => return Err(invalid(format!("no nominal delay for {kind:?}"))),
            }
        }
        if !(self.process_sigma_frac >= 0.0 && self.process_sigma_frac.is_finite()) {
            return Err(invalid(format!(
                "process_sigma_frac must be >= 0, got {}",
                self.process_sigma_frac
            )));
        }
        if !(self.noise_sigma_frac >= 0.0 && self.noise_sigma_frac.is_finite()) {
            return Err(invalid(format!(
                "noise_sigma_frac must be >= 0, got {}",
                self.noise_sigma_frac
            )));
        }
        if !(self.min_delay_ps > 0.0 && self.min_delay_ps.is_finite()) {
            return Err(invalid(format!(
                "min_delay_ps must be > 0, got {}",
                self.min_delay_ps
            )));
        }
        Ok(())
    }

    pub fn nominal(&self, kind: GateKind) -> f64 {
        self.nominal_ps[&kind]
    }

    pub fn without_noise(&self) -> Self {
        DelayModel {
            noise_sigma_frac: 0.0,
            ..self.clone()
        }
    }

    /// Nominal delay of every arc of `netlist`, in arc order.
    pub fn arc_nominals(&self, netlist: &Netlist) -> Vec<f64> {
        netlist
            .arc_kinds()
            .into_iter()
            .map(|k| self.nominal(k))
            .collect()
    }

    /// A chip whose arcs all sit at their nominal delays.
    pub fn nominal_chip(&self, netlist: &Netlist) -> ChipInstance {
        ChipInstance::from_delays(0, self.arc_nominals(netlist))
    }
}

/// One manufactured chip: a delay for every (gate, input pin) arc.
#[derive(Clone, Debug, PartialEq)]
pub struct ChipInstance {
    pub chip_id: u32,
    arc_delays_ps: Vec<f64>,
}

impl ChipInstance {
    /// Wraps explicit delays, e.g. for directed tests. No positivity floor
    /// is applied.
    pub fn from_delays(chip_id: u32, arc_delays_ps: Vec<f64>) -> Self {
        ChipInstance {
            chip_id,
            arc_delays_ps,
        }
    }

    pub fn arc_delays_ps(&self) -> &[f64] {
        &self.arc_delays_ps
    }

    pub fn arc_delays_mut(&mut self) -> &mut [f64] {
        &mut self.arc_delays_ps
    }
}

fn quantize(d: f64) -> f64 {
    // k / 1e6 is correctly rounded, i.e. the same double a decimal parse yields
    (d * DELAY_SCALE).round() / DELAY_SCALE
}

/// Samples one chip. Each arc draws from its own counter-based stream keyed
/// by `(seed, chip_id, gate, pin)`.
pub fn sample_chip(model: &DelayModel, netlist: &Netlist, seed: u64, chip_id: u32) -> ChipInstance {
    let mut delays = Vec::with_capacity(netlist.arc_count());
    for gate in &netlist.gates {
        let nominal = model.nominal(gate.kind);
        let sigma = model.process_sigma_frac * nominal;
        for pin in 0..gate.inputs.len() {
            let d = if sigma > 0.0 {
                let z: f64 = seed::stream(
                    seed,
                    Domain::Process,
                    &[chip_id as u64, gate.id as u64, pin as u64],
                )
                .sample(StandardNormal);
                quantize(nominal + sigma * z).max(model.min_delay_ps)
            } else {
                nominal
            };
            delays.push(d);
        }
    }
    ChipInstance::from_delays(chip_id, delays)
}

pub fn sample_population(
    model: &DelayModel,
    netlist: &Netlist,
    n_chips: u32,
    seed: u64,
    exec: Exec,
) -> Result<Vec<ChipInstance>> {
    model.validate()?;
    if n_chips == 0 {
        return Err(invalid("population needs at least one chip"));
    }
    Ok(exec.map_range(n_chips as usize, |id| {
        sample_chip(model, netlist, seed, id as u32)
    }))
}

/// Per-evaluation noise generator for one netlist.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    sigmas: Vec<f64>,
    min_delay_ps: f64,
}

impl NoiseSource {
    pub fn new(model: &DelayModel, netlist: &Netlist) -> Self {
        NoiseSource {
            sigmas: model
                .arc_nominals(netlist)
                .into_iter()
                .map(|n| n * model.noise_sigma_frac)
                .collect(),
            min_delay_ps: model.min_delay_ps,
        }
    }

    pub fn is_silent(&self) -> bool {
        self.sigmas.iter().all(|&s| s == 0.0)
    }

    /// Writes `chip + noise` into `out`; the noise stream is selected by
    /// `eval_seed` and drawn in arc order.
    pub fn apply_into(&self, chip: &ChipInstance, eval_seed: u64, out: &mut Vec<f64>) {
        out.clear();
        if self.is_silent() {
            out.extend_from_slice(chip.arc_delays_ps());
            return;
        }
        let mut rng = seed::stream(eval_seed, Domain::Noise, &[]);
        out.extend(
            chip.arc_delays_ps()
                .iter()
                .zip(&self.sigmas)
                .map(|(&d, &sigma)| {
                    let z: f64 = rng.sample(StandardNormal);
                    (d + sigma * z).max(self.min_delay_ps)
                }),
        );
    }
}

/// Seed for the noise of one evaluation (chip, trial, vector).
pub fn eval_seed(root: u64, chip_id: u32, trial_id: u32, vector_index: u64) -> u64 {
    seed::derive(
        root,
        Domain::Noise,
        &[chip_id as u64, trial_id as u64, vector_index],
    )
}

/// Effective arc delays for one evaluation. The chip itself is unchanged.
pub fn apply_noise(
    chip: &ChipInstance,
    model: &DelayModel,
    netlist: &Netlist,
    trial_seed: u64,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(chip.arc_delays_ps().len());
    NoiseSource::new(model, netlist).apply_into(chip, trial_seed, &mut out);
    out
}

#[derive(Serialize, Deserialize)]
struct ChipRecord {
    chip_id: u32,
    arc_delays: Vec<Box<RawValue>>,
}

#[derive(Serialize, Deserialize)]
struct PopulationDoc {
    seed: u64,
    model: DelayModel,
    chips: Vec<ChipRecord>,
}

/// Population export: `{seed, model, chips: [{chip_id, arc_delays}]}`, delays
/// in ps with six fractional digits.
pub fn population_to_json(seed: u64, model: &DelayModel, chips: &[ChipInstance]) -> Result<String> {
    let chips = chips
        .iter()
        .map(|chip| {
            let arc_delays = chip
                .arc_delays_ps()
                .iter()
                .map(|d| RawValue::from_string(format!("{d:.6}")))
                .collect::<Result<_, _>>()?;
            Ok(ChipRecord {
                chip_id: chip.chip_id,
                arc_delays,
            })
        })
        .collect::<Result<_>>()?;
    let doc = PopulationDoc {
        seed,
        model: model.clone(),
        chips,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn population_from_json(text: &str) -> Result<(u64, DelayModel, Vec<ChipInstance>)> {
    let doc: PopulationDoc = serde_json::from_str(text)?;
    doc.model.validate()?;
    let chips = doc
        .chips
        .into_iter()
        .map(|rec| {
            let delays = rec
                .arc_delays
                .iter()
                .map(|raw| serde_json::from_str::<f64>(raw.get()))
                .collect::<Result<_, _>>()?;
            Ok(ChipInstance::from_delays(rec.chip_id, delays))
        })
        .collect::<Result<_>>()?;
    Ok((doc.seed, doc.model, chips))
}

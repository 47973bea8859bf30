// SPDX-License-Identifier: Apache-2.0
//! Error-rate measurement and clock-period calibration.
//!
//! With calibration vectors and noise seeds held fixed, the error rate is a
//! deterministic step function of the clock period. An [`ErrorProfile`]
//! records, for every (chip, vector) evaluation, the period intervals in
//! which the captured word is wrong, so each binary-search probe is a count
//! instead of a new simulation. [`measure_error_rate`] is the direct route
//! and the two agree exactly.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::netlist::{AdderInput, Netlist};
use crate::timedsim::{run_trace_multi, settle, PrevStatePolicy, Simulator, Trial};
use crate::variation::{eval_seed, ChipInstance, DelayModel, NoiseSource};

/// Trial id used for calibration evaluations.
pub const CALIBRATION_TRIAL: u32 = u32::MAX;

/// Bracket width at which the period search stops, in ps.
pub const MIN_BRACKET_PS: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub adder: String,
    pub clock_period_ps: f64,
    pub measured_error_rate: f64,
    pub target_error_rate: f64,
    pub calibration_vectors: u64,
    pub population_seed: u64,
}

fn check_inputs(population: &[ChipInstance], vectors: &[AdderInput]) -> Result<()> {
    if population.is_empty() {
        return Err(invalid("population is empty"));
    }
    if vectors.is_empty() {
        return Err(invalid("no calibration vectors"));
    }
    Ok(())
}

fn model_for(model: &DelayModel, noise_enabled: bool) -> DelayModel {
    if noise_enabled {
        model.clone()
    } else {
        model.without_noise()
    }
}

/// Fraction of (chip, vector) evaluations whose captured word differs from
/// the golden sum, using sequential trace semantics on every chip.
#[allow(clippy::too_many_arguments)]
pub fn measure_error_rate(
    netlist: &Netlist,
    population: &[ChipInstance],
    model: &DelayModel,
    vectors: &[AdderInput],
    period_ps: f64,
    noise_enabled: bool,
    seed: u64,
    exec: Exec,
) -> Result<f64> {
    check_inputs(population, vectors)?;
    let model = model_for(model, noise_enabled);
    let trial = Trial {
        id: CALIBRATION_TRIAL,
        noise_seed: seed,
    };
    let errors = exec.map(population, |chip| {
        run_trace_multi(
            netlist,
            chip,
            &model,
            vectors,
            &[period_ps],
            PrevStatePolicy::Sequential,
            trial,
        )
        .map(|traces| traces[0].error_count())
    });
    let total = errors.into_iter().sum::<Result<usize>>()?;
    Ok(total as f64 / (population.len() * vectors.len()) as f64)
}

/// Period-independent record of where every evaluation is wrong.
#[derive(Clone, Debug)]
pub struct ErrorProfile {
    /// Half-open-on-the-left intervals `(lo, hi]` of periods at which one
    /// evaluation captures a wrong word.
    intervals: Vec<(f64, f64)>,
    evaluations: u64,
    min_arc_delay_ps: f64,
    max_critical_path_ps: f64,
}

impl ErrorProfile {
    pub fn measure(
        netlist: &Netlist,
        population: &[ChipInstance],
        model: &DelayModel,
        vectors: &[AdderInput],
        noise_enabled: bool,
        seed: u64,
        exec: Exec,
    ) -> Result<Self> {
        check_inputs(population, vectors)?;
        let model = model_for(model, noise_enabled);
        model.validate()?;
        let order = netlist.topo_order()?;
        let noise = NoiseSource::new(&model, netlist);
        let bits: Vec<Vec<bool>> = vectors.iter().map(|v| netlist.adder_bits(v)).collect();
        let golden: Vec<u128> = vectors.iter().map(|v| v.golden(netlist.width)).collect();

        let per_chip = exec.map(population, |chip| -> Result<Vec<(f64, f64)>> {
            let mut sim = Simulator::new(netlist)?;
            let mut state = settle(netlist, &vec![false; netlist.primary_inputs.len()])?;
            let mut delays = Vec::with_capacity(netlist.arc_count());
            let mut out = Vec::new();
            for (k, input_bits) in bits.iter().enumerate() {
                noise.apply_into(
                    chip,
                    eval_seed(seed, chip.chip_id, CALIBRATION_TRIAL, k as u64),
                    &mut delays,
                );
                let good = golden[k];
                let mut start = 0.0;
                let mut wrong_since: Option<f64> = None;
                sim.propagate(&delays, &mut state, input_bits, |t, word| {
                    // `word` holds for periods in (start, t]
                    match (word != good, wrong_since) {
                        (true, None) => wrong_since = Some(start),
                        (false, Some(lo)) => {
                            out.push((lo, start));
                            wrong_since = None;
                        }
                        _ => {}
                    }
                    start = t;
                });
                if let Some(lo) = wrong_since {
                    // the settled word is golden, so this cannot happen
                    out.push((lo, f64::INFINITY));
                }
            }
            Ok(out)
        });

        let mut intervals = Vec::new();
        for chunk in per_chip {
            intervals.extend(chunk?);
        }
        let min_arc_delay_ps = population
            .iter()
            .flat_map(|c| c.arc_delays_ps().iter().copied())
            .fold(f64::INFINITY, f64::min);
        let max_critical_path_ps = population
            .iter()
            .map(|c| netlist.longest_path(c.arc_delays_ps(), &order))
            .fold(0.0, f64::max);
        Ok(ErrorProfile {
            intervals,
            evaluations: (population.len() * vectors.len()) as u64,
            min_arc_delay_ps,
            max_critical_path_ps,
        })
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn error_rate(&self, period_ps: f64) -> f64 {
        let wrong = self
            .intervals
            .iter()
            .filter(|&&(lo, hi)| lo < period_ps && period_ps <= hi)
            .count();
        wrong as f64 / self.evaluations as f64
    }

    /// Search bracket: shortest arc delay up to 1.1x the slowest chip's
    /// static critical path.
    pub fn bracket(&self) -> (f64, f64) {
        (self.min_arc_delay_ps, 1.1 * self.max_critical_path_ps)
    }

    /// Binary search on the period. Stops once the measured rate is within
    /// `tolerance` of `target` or the bracket is narrower than
    /// [`MIN_BRACKET_PS`], and returns the visited period closest to target.
    pub fn calibrate(&self, target: f64, tolerance: f64) -> Result<(f64, f64)> {
        if !(target > 0.0 && target < 1.0) {
            return Err(invalid(format!(
                "target error rate must be in (0, 1), got {target}"
            )));
        }
        // also rejects NaN
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(tolerance > 0.0) {
            return Err(invalid(format!("tolerance must be > 0, got {tolerance}")));
        }
        let (mut lo, mut hi) = self.bracket();
        let (rate_lo, rate_hi) = (self.error_rate(lo), self.error_rate(hi));
        let unreachable = || Error::Calibration {
            target,
            min_rate: rate_hi,
            max_rate: rate_lo,
            low_ps: lo,
            high_ps: hi,
        };
        if rate_lo < target - tolerance || rate_hi > target + tolerance {
            return Err(unreachable());
        }

        let mut visited = vec![(lo, rate_lo), (hi, rate_hi)];
        while hi - lo >= MIN_BRACKET_PS {
            let mid = 0.5 * (lo + hi);
            let rate = self.error_rate(mid);
            visited.push((mid, rate));
            if (rate - target).abs() <= tolerance {
                break;
            }
            if rate > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // first of equally close candidates wins
        let best = visited
            .iter()
            .copied()
            .reduce(|best, cand| {
                if (cand.1 - target).abs() < (best.1 - target).abs() {
                    cand
                } else {
                    best
                }
            })
            .expect("visited is non-empty");
        Ok(best)
    }
}

/// Calibrates one target rate from scratch. Use [`ErrorProfile`] directly to
/// calibrate several targets off one set of simulations.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_period(
    netlist: &Netlist,
    population: &[ChipInstance],
    model: &DelayModel,
    vectors: &[AdderInput],
    target: f64,
    tolerance: f64,
    seed: u64,
    population_seed: u64,
    exec: Exec,
) -> Result<OperatingPoint> {
    let profile = ErrorProfile::measure(netlist, population, model, vectors, true, seed, exec)?;
    let (period, rate) = profile.calibrate(target, tolerance)?;
    Ok(OperatingPoint {
        adder: netlist.name.clone(),
        clock_period_ps: period,
        measured_error_rate: rate,
        target_error_rate: target,
        calibration_vectors: vectors.len() as u64,
        population_seed,
    })
}

// SPDX-License-Identifier: Apache-2.0
//! Event-driven timed simulation with clock-edge capture.
//!
//! Delays live on arcs. A gate sees each input through its own arc, so the
//! gate output at time `t` is `f(in_0(t - d_0), in_1(t - d_1))` (pure
//! transport delay, glitches included). When a net changes at `t`, every
//! fanout pin receives the new value at `t + d_arc`; the gate is
//! re-evaluated at that instant and its output net changes immediately if
//! the result differs from the net's current value.
//!
//! Inputs switch at `t = 0` from a settled previous state. A capture at
//! period `T` sees every event with time strictly below `T`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::netlist::{eval_in_order, AdderInput, GateId, GateKind, Netlist, OutputWord};
use crate::variation::{eval_seed, ChipInstance, DelayModel, NoiseSource};

/// Values of every net plus the time each last changed.
#[derive(Clone, Debug, PartialEq)]
pub struct NetState {
    values: Vec<bool>,
    last_event_ps: Vec<f64>,
    settled: bool,
}

impl NetState {
    /// Wraps externally supplied net values. The state counts as settled only
    /// if every gate output agrees with its inputs.
    pub fn from_values(netlist: &Netlist, values: Vec<bool>) -> Result<Self> {
        if values.len() != netlist.net_count as usize {
            return Err(invalid(format!(
                "{} net values for a netlist with {} nets",
                values.len(),
                netlist.net_count
            )));
        }
        let settled = netlist.gates.iter().all(|g| {
            let a = values[g.inputs[0] as usize];
            let b = g.inputs.get(1).is_some_and(|&n| values[n as usize]);
            values[g.output as usize] == g.kind.eval(a, b)
        });
        Ok(NetState {
            last_event_ps: vec![f64::NEG_INFINITY; values.len()],
            values,
            settled,
        })
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn last_event_ps(&self) -> &[f64] {
        &self.last_event_ps
    }

    pub fn is_settled(&self) -> bool {
        self.settled
    }

    pub fn outputs(&self, netlist: &Netlist) -> OutputWord {
        netlist.pack_outputs(&self.values)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrevStatePolicy {
    /// Each vector starts from the settled state of the previous one.
    #[default]
    Sequential,
    /// Each vector starts from the settled all-zero input state.
    FixedZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptureConfig {
    pub clock_period_ps: f64,
    pub prev_state_policy: PrevStatePolicy,
}

impl CaptureConfig {
    pub fn new(clock_period_ps: f64) -> Self {
        CaptureConfig {
            clock_period_ps,
            prev_state_policy: PrevStatePolicy::Sequential,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_period(self.clock_period_ps)
    }
}

fn check_period(t: f64) -> Result<()> {
    if t > 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(invalid(format!("clock period must be > 0 ps, got {t}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub input: AdderInput,
    pub captured: OutputWord,
    pub golden: OutputWord,
}

impl TraceEntry {
    pub fn is_error(&self) -> bool {
        self.captured != self.golden
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CapturedTrace {
    pub chip_id: u32,
    pub trial_id: u32,
    pub entries: Vec<TraceEntry>,
}

impl CapturedTrace {
    pub fn error_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_error()).count()
    }
}

/// Zero-delay settled state for an input assignment.
pub fn settle(netlist: &Netlist, inputs: &[bool]) -> Result<NetState> {
    let values = netlist.eval_nets(inputs)?;
    Ok(NetState {
        last_event_ps: vec![f64::NEG_INFINITY; values.len()],
        values,
        settled: true,
    })
}

#[derive(Clone, Copy, Debug)]
struct Event {
    time: f64,
    net: u32,
    seq: u64,
    gate: u32,
    pin: u8,
    value: bool,
}

impl Event {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.net.cmp(&other.net))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // BinaryHeap is a max-heap; reverse for earliest-first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Netlist compiled for repeated timed evaluation, with reusable scratch
/// buffers. One simulator per worker thread.
#[derive(Clone, Debug)]
pub struct Simulator<'n> {
    netlist: &'n Netlist,
    kinds: Vec<GateKind>,
    gate_out: Vec<u32>,
    arc_offset: Vec<u32>,
    fanout_start: Vec<u32>,
    fanout: Vec<(u32, u8)>,
    po_mask: Vec<OutputWord>,
    pins: Vec<[bool; 2]>,
    order: Vec<GateId>,
    scratch: Vec<bool>,
    queue: BinaryHeap<Event>,
    seq: u64,
    processed: u64,
}

impl<'n> Simulator<'n> {
    pub fn new(netlist: &'n Netlist) -> Result<Self> {
        netlist.validate()?;
        if netlist.primary_outputs.len() > OutputWord::BITS as usize {
            return Err(invalid("more primary outputs than an output word holds"));
        }
        let n = netlist.net_count as usize;
        let offsets = netlist.arc_offsets();
        let mut fanout_lists: Vec<Vec<(u32, u8)>> = vec![Vec::new(); n];
        for gate in &netlist.gates {
            for (pin, &net) in gate.inputs.iter().enumerate() {
                fanout_lists[net as usize].push((gate.id, pin as u8));
            }
        }
        let mut fanout_start = Vec::with_capacity(n + 1);
        let mut fanout = Vec::new();
        for list in fanout_lists {
            fanout_start.push(fanout.len() as u32);
            fanout.extend(list);
        }
        fanout_start.push(fanout.len() as u32);
        let mut po_mask = vec![0; n];
        for (bit, &net) in netlist.primary_outputs.iter().enumerate() {
            po_mask[net as usize] |= 1 << bit;
        }
        Ok(Simulator {
            netlist,
            kinds: netlist.gates.iter().map(|g| g.kind).collect(),
            gate_out: netlist.gates.iter().map(|g| g.output).collect(),
            arc_offset: offsets.iter().map(|&o| o as u32).collect(),
            fanout_start,
            fanout,
            po_mask,
            pins: vec![[false; 2]; netlist.gates.len()],
            order: netlist.topo_order()?,
            scratch: Vec::new(),
            queue: BinaryHeap::new(),
            seq: 0,
            processed: 0,
        })
    }

    pub fn netlist(&self) -> &'n Netlist {
        self.netlist
    }

    /// Events processed since construction.
    pub fn events_processed(&self) -> u64 {
        self.processed
    }

    /// Applies `inputs` at `t = 0` on top of the settled `state` and drains
    /// the event queue, leaving `state` settled on the new vector.
    ///
    /// `observe(t, word)` is called each time simulated time is about to
    /// advance past the events processed so far: `word` is the output word
    /// a capture at any period in `(previous t, t]` would see. The final
    /// call has `t = +inf`.
    pub fn propagate<F>(
        &mut self,
        delays: &[f64],
        state: &mut NetState,
        inputs: &[bool],
        observe: F,
    ) where
        F: FnMut(f64, OutputWord),
    {
        self.run(delays, state, inputs, f64::INFINITY, observe);
    }

    /// Event loop. Once time passes `horizon` the queue is dropped and
    /// `state` jumps to the zero-delay settled values of `inputs`; nets that
    /// change in that jump get an unknown (NaN) last-event time.
    fn run<F>(
        &mut self,
        delays: &[f64],
        state: &mut NetState,
        inputs: &[bool],
        horizon: f64,
        mut observe: F,
    ) where
        F: FnMut(f64, OutputWord),
    {
        debug_assert_eq!(delays.len() as u32, *self.arc_offset.last().unwrap());
        debug_assert!(state.settled);
        let netlist = self.netlist;
        for (gate, pins) in netlist.gates.iter().zip(self.pins.iter_mut()) {
            pins[0] = state.values[gate.inputs[0] as usize];
            pins[1] = gate
                .inputs
                .get(1)
                .is_some_and(|&n| state.values[n as usize]);
        }
        let mut word = netlist.pack_outputs(&state.values);
        self.queue.clear();

        for (&net, &bit) in netlist.primary_inputs.iter().zip(inputs) {
            if state.values[net as usize] != bit {
                self.set_net(delays, state, &mut word, net, bit, 0.0);
            }
        }

        let mut now = 0.0;
        while let Some(ev) = self.queue.pop() {
            if ev.time > now {
                observe(ev.time, word);
                now = ev.time;
                if now > horizon {
                    self.queue.clear();
                    self.jump_to_settled(state, inputs);
                    return;
                }
            }
            self.processed += 1;
            let gate = ev.gate as usize;
            self.pins[gate][ev.pin as usize] = ev.value;
            let [a, b] = self.pins[gate];
            let out = self.kinds[gate].eval(a, b);
            let net = self.gate_out[gate];
            if state.values[net as usize] != out {
                self.set_net(delays, state, &mut word, net, out, ev.time);
            }
        }
        observe(f64::INFINITY, word);
        state.settled = true;
    }

    fn jump_to_settled(&mut self, state: &mut NetState, inputs: &[bool]) {
        let mut values = std::mem::take(&mut self.scratch);
        values.clone_from(&state.values);
        for (&net, &bit) in self.netlist.primary_inputs.iter().zip(inputs) {
            values[net as usize] = bit;
        }
        eval_in_order(&self.netlist.gates, &self.order, &mut values);
        for (n, (old, &new)) in state.values.iter_mut().zip(&values).enumerate() {
            if *old != new {
                *old = new;
                state.last_event_ps[n] = f64::NAN;
            }
        }
        state.settled = true;
        self.scratch = values;
    }

    #[inline]
    fn set_net(
        &mut self,
        delays: &[f64],
        state: &mut NetState,
        word: &mut OutputWord,
        net: u32,
        value: bool,
        t: f64,
    ) {
        let n = net as usize;
        state.values[n] = value;
        state.last_event_ps[n] = t;
        *word ^= self.po_mask[n];
        let (lo, hi) = (
            self.fanout_start[n] as usize,
            self.fanout_start[n + 1] as usize,
        );
        for &(gate, pin) in &self.fanout[lo..hi] {
            let arc = self.arc_offset[gate as usize] as usize + pin as usize;
            self.seq += 1;
            self.queue.push(Event {
                time: t + delays[arc],
                net: self.gate_out[gate as usize],
                seq: self.seq,
                gate,
                pin,
                value,
            });
        }
    }

    /// [`capture_many`](Self::capture_many) that stops simulating after the
    /// last period. Captured words and the settled net values are the same;
    /// only the last-event times of late nets are lost.
    pub fn capture_many_truncated(
        &mut self,
        delays: &[f64],
        state: &mut NetState,
        inputs: &[bool],
        periods: &[f64],
        captured: &mut Vec<OutputWord>,
    ) {
        debug_assert!(periods.windows(2).all(|w| w[0] <= w[1]));
        captured.clear();
        let horizon = periods.last().copied().unwrap_or(0.0);
        self.run(delays, state, inputs, horizon, |t, word| {
            while captured.len() < periods.len() && periods[captured.len()] <= t {
                captured.push(word);
            }
        });
    }

    /// Captures the output word at each of `periods` (ascending) in a single
    /// propagation.
    pub fn capture_many(
        &mut self,
        delays: &[f64],
        state: &mut NetState,
        inputs: &[bool],
        periods: &[f64],
        captured: &mut Vec<OutputWord>,
    ) {
        debug_assert!(periods.windows(2).all(|w| w[0] <= w[1]));
        captured.clear();
        self.propagate(delays, state, inputs, |t, word| {
            while captured.len() < periods.len() && periods[captured.len()] <= t {
                captured.push(word);
            }
        });
    }
}

/// Captures one vector at `cfg.clock_period_ps`. Returns the captured word
/// and the fully settled state for the next vector.
pub fn simulate_capture(
    netlist: &Netlist,
    delays: &[f64],
    prev_state: &NetState,
    inputs: &[bool],
    cfg: &CaptureConfig,
) -> Result<(OutputWord, NetState)> {
    cfg.validate()?;
    if !prev_state.settled || prev_state.values.len() != netlist.net_count as usize {
        return Err(Error::ContractViolation(
            "previous net state is not settled".into(),
        ));
    }
    if inputs.len() != netlist.primary_inputs.len() {
        return Err(invalid(format!(
            "assignment has {} bits, netlist has {} primary inputs",
            inputs.len(),
            netlist.primary_inputs.len()
        )));
    }
    if delays.len() != netlist.arc_count() {
        return Err(invalid(format!(
            "{} delays for {} arcs",
            delays.len(),
            netlist.arc_count()
        )));
    }
    let mut sim = Simulator::new(netlist)?;
    let mut state = prev_state.clone();
    let mut captured = Vec::with_capacity(1);
    sim.capture_many(
        delays,
        &mut state,
        inputs,
        &[cfg.clock_period_ps],
        &mut captured,
    );
    Ok((captured[0], state))
}

/// Identifies one noisy run of a chip: the trial id and the root seed its
/// per-vector noise is derived from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trial {
    pub id: u32,
    pub noise_seed: u64,
}

/// Runs a vector stream on one chip and returns, for each period in
/// `periods` (any order), the captured word of every vector. Noise is drawn
/// once per vector, so all periods see the same physical evaluation.
pub fn capture_stream(
    netlist: &Netlist,
    chip: &ChipInstance,
    model: &DelayModel,
    vectors: &[AdderInput],
    periods: &[f64],
    policy: PrevStatePolicy,
    trial: Trial,
) -> Result<Vec<Vec<OutputWord>>> {
    if vectors.is_empty() {
        return Err(invalid("trace needs at least one vector"));
    }
    for &t in periods {
        check_period(t)?;
    }
    if chip.arc_delays_ps().len() != netlist.arc_count() {
        return Err(invalid(format!(
            "chip has {} arc delays, netlist has {} arcs",
            chip.arc_delays_ps().len(),
            netlist.arc_count()
        )));
    }
    // capture in ascending order, report in caller order
    let mut order: Vec<usize> = (0..periods.len()).collect();
    order.sort_by(|&i, &j| periods[i].total_cmp(&periods[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| periods[i]).collect();

    let mut sim = Simulator::new(netlist)?;
    let noise = NoiseSource::new(model, netlist);
    let zero = settle(netlist, &vec![false; netlist.primary_inputs.len()])?;
    let mut state = zero.clone();
    let mut delays = Vec::with_capacity(netlist.arc_count());
    let mut captured = Vec::with_capacity(periods.len());
    let mut words: Vec<Vec<OutputWord>> = periods
        .iter()
        .map(|_| Vec::with_capacity(vectors.len()))
        .collect();

    for (k, input) in vectors.iter().enumerate() {
        if policy == PrevStatePolicy::FixedZero {
            state.clone_from(&zero);
        }
        noise.apply_into(
            chip,
            eval_seed(trial.noise_seed, chip.chip_id, trial.id, k as u64),
            &mut delays,
        );
        let bits = netlist.adder_bits(input);
        sim.capture_many_truncated(&delays, &mut state, &bits, &sorted, &mut captured);
        for (slot, &idx) in order.iter().enumerate() {
            words[idx].push(captured[slot]);
        }
    }
    Ok(words)
}

/// [`capture_stream`] packaged as one [`CapturedTrace`] per period, with
/// golden words from zero-delay evaluation.
pub fn run_trace_multi(
    netlist: &Netlist,
    chip: &ChipInstance,
    model: &DelayModel,
    vectors: &[AdderInput],
    periods: &[f64],
    policy: PrevStatePolicy,
    trial: Trial,
) -> Result<Vec<CapturedTrace>> {
    let words = capture_stream(netlist, chip, model, vectors, periods, policy, trial)?;
    let golden = netlist.eval_adder_many(vectors)?;
    Ok(words
        .into_iter()
        .map(|captured| CapturedTrace {
            chip_id: chip.chip_id,
            trial_id: trial.id,
            entries: vectors
                .iter()
                .zip(captured)
                .zip(&golden)
                .map(|((&input, captured), &golden)| TraceEntry {
                    input,
                    captured,
                    golden,
                })
                .collect(),
        })
        .collect())
}

/// Runs a vector stream on one chip at `cfg.clock_period_ps`.
pub fn run_trace(
    netlist: &Netlist,
    chip: &ChipInstance,
    model: &DelayModel,
    vectors: &[AdderInput],
    cfg: &CaptureConfig,
    trial: Trial,
) -> Result<CapturedTrace> {
    cfg.validate()?;
    let mut traces = run_trace_multi(
        netlist,
        chip,
        model,
        vectors,
        &[cfg.clock_period_ps],
        cfg.prev_state_policy,
        trial,
    )?;
    Ok(traces.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{build_cla, build_hca, build_rca, AdderKind};
    use crate::variation::{apply_noise, sample_chip};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(netlist: &Netlist, a: u64, b: u64) -> Vec<bool> {
        netlist.adder_bits(&AdderInput::new(a, b))
    }

    #[test]
    fn settle_matches_functional() {
        let rca = build_rca(8).unwrap();
        let s = settle(&rca, &bits(&rca, 0xFE, 0x01)).unwrap();
        assert_eq!(s.outputs(&rca), 0xFF);
        assert!(s.is_settled());
        assert!(s.last_event_ps().iter().all(|&t| t == f64::NEG_INFINITY));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in AdderKind::ALL {
            let netlist = kind.build(32).unwrap();
            for _ in 0..1000 {
                let x = AdderInput::new(rng.random::<u32>() as u64, rng.random::<u32>() as u64);
                let b = netlist.adder_bits(&x);
                assert_eq!(
                    settle(&netlist, &b).unwrap().values(),
                    netlist.eval_nets(&b).unwrap().as_slice()
                );
            }
        }
    }

    #[test]
    fn huge_period_captures_golden() {
        let rca = build_rca(8).unwrap();
        let model = DelayModel::default();
        let chip = sample_chip(&model, &rca, 1, 0);
        let prev = settle(&rca, &bits(&rca, 0xFE, 0x01)).unwrap();
        let (word, next) = simulate_capture(
            &rca,
            chip.arc_delays_ps(),
            &prev,
            &bits(&rca, 0xFF, 0x01),
            &CaptureConfig::new(1e6),
        )
        .unwrap();
        assert_eq!(word, 0x100);
        assert_eq!(next.outputs(&rca), 0x100);
        assert!(next.is_settled());
    }

    #[test]
    fn tiny_period_sees_previous_outputs() {
        // brute force over every pair of full-adder input vectors
        let fa = build_rca(1).unwrap();
        let delays = vec![1.0; fa.arc_count()];
        let cfg = CaptureConfig::new(0.05);
        for prev in 0..8u32 {
            for next in 0..8u32 {
                let pb: Vec<bool> = (0..3).map(|i| prev >> i & 1 == 1).collect();
                let nb: Vec<bool> = (0..3).map(|i| next >> i & 1 == 1).collect();
                let p = settle(&fa, &pb).unwrap();
                let (word, after) = simulate_capture(&fa, &delays, &p, &nb, &cfg).unwrap();
                assert_eq!(word, p.outputs(&fa));
                assert_eq!(after.outputs(&fa), fa.eval_functional(&nb).unwrap());
            }
        }
    }

    #[test]
    fn unsettled_state_is_a_contract_violation() {
        let fa = build_rca(1).unwrap();
        let mut values = fa.eval_nets(&[true, false, false]).unwrap();
        let out = fa.primary_outputs[0] as usize;
        values[out] = !values[out];
        let broken = NetState::from_values(&fa, values).unwrap();
        assert!(!broken.is_settled());
        let err = simulate_capture(
            &fa,
            &[1.0; 10],
            &broken,
            &[true, true, false],
            &CaptureConfig::new(5.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)));

        let good = settle(&fa, &[false; 3]).unwrap();
        assert!(
            simulate_capture(&fa, &[1.0; 10], &good, &[true; 3], &CaptureConfig::new(0.0)).is_err()
        );
    }

    /// Hand trace of the full adder with unit arc delays, 000 -> 111 (a, b, cin).
    ///
    /// t=0: a, b, cin rise. t=1: p = a^b stays 0 (both pins flip together);
    /// s = p^cin rises; t = p&cin stays 0; g = a&b rises. t=2: cout = t|g
    /// rises. So with T = 2.5 the capture holds sum=1 and cout=1.
    /// Swapping to 001 -> 110 needs three gate levels for cout.
    #[test]
    fn unit_delay_full_adder_event_trace() {
        let fa = build_rca(1).unwrap();
        let delays = vec![1.0; fa.arc_count()];
        let zero = settle(&fa, &[false; 3]).unwrap();
        let (word, _) = simulate_capture(
            &fa,
            &delays,
            &zero,
            &[true, true, true],
            &CaptureConfig::new(2.5),
        )
        .unwrap();
        assert_eq!(word, 0b11);
        let (word, _) = simulate_capture(
            &fa,
            &delays,
            &zero,
            &[true, true, true],
            &CaptureConfig::new(1.5),
        )
        .unwrap();
        assert_eq!(word, 0b01, "cout arrives at 2 ps");

        // a=1, b=0, cin: 0 -> 1. p=1 already; s falls at 1, t rises at 1, cout rises at 2.
        let prev = settle(&fa, &[true, false, false]).unwrap();
        let (word, _) = simulate_capture(
            &fa,
            &delays,
            &prev,
            &[true, false, true],
            &CaptureConfig::new(2.5),
        )
        .unwrap();
        assert_eq!(word, 0b10);
        // a rises with b=0, cin=1: p rises at 1, s falls at 2, t rises at 2, cout rises at 3.
        let prev = settle(&fa, &[false, false, true]).unwrap();
        let (word, _) = simulate_capture(
            &fa,
            &delays,
            &prev,
            &[true, false, true],
            &CaptureConfig::new(2.5),
        )
        .unwrap();
        assert_eq!(word, 0b00, "sum fell at 2 ps, cout rises only at 3 ps");
        let (word, _) = simulate_capture(
            &fa,
            &delays,
            &prev,
            &[true, false, true],
            &CaptureConfig::new(3.0),
        )
        .unwrap();
        assert_eq!(word, 0b00, "events exactly at T are missed");
        let (word, _) = simulate_capture(
            &fa,
            &delays,
            &prev,
            &[true, false, true],
            &CaptureConfig::new(3.01),
        )
        .unwrap();
        assert_eq!(word, 0b10);
    }

    #[test]
    fn run_trace_is_golden_without_overscaling() {
        let model = DelayModel {
            process_sigma_frac: 0.0,
            noise_sigma_frac: 0.0,
            ..DelayModel::default()
        };
        let cla = build_cla(16).unwrap();
        let chip = model.nominal_chip(&cla);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let vectors: Vec<AdderInput> = (0..200)
            .map(|_| AdderInput::new(rng.random::<u16>() as u64, rng.random::<u16>() as u64))
            .collect();
        let trace = run_trace(
            &cla,
            &chip,
            &model,
            &vectors,
            &CaptureConfig::new(1e5),
            Trial {
                id: 0,
                noise_seed: 1,
            },
        )
        .unwrap();
        assert_eq!(trace.entries.len(), 200);
        assert_eq!(trace.error_count(), 0);
        assert!(trace
            .entries
            .iter()
            .zip(&vectors)
            .all(|(e, v)| e.input == *v));
    }

    #[test]
    fn run_trace_determinism_and_multi_period_consistency() {
        let model = DelayModel::default();
        let hca = build_hca(16).unwrap();
        let chip = sample_chip(&model, &hca, 8, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let vectors: Vec<AdderInput> = (0..300)
            .map(|_| AdderInput::new(rng.random::<u16>() as u64, rng.random::<u16>() as u64))
            .collect();
        let trial = Trial {
            id: 1,
            noise_seed: 77,
        };
        let periods = [120.0, 60.0, 90.0];
        let multi = run_trace_multi(
            &hca,
            &chip,
            &model,
            &vectors,
            &periods,
            PrevStatePolicy::Sequential,
            trial,
        )
        .unwrap();
        for (i, &t) in periods.iter().enumerate() {
            let single =
                run_trace(&hca, &chip, &model, &vectors, &CaptureConfig::new(t), trial).unwrap();
            assert_eq!(single, multi[i]);
            assert_eq!(
                single,
                run_trace(&hca, &chip, &model, &vectors, &CaptureConfig::new(t), trial).unwrap()
            );
        }
        assert!(multi[1].error_count() >= multi[0].error_count());
        assert!(run_trace(&hca, &chip, &model, &[], &CaptureConfig::new(1.0), trial).is_err());
    }

    #[test]
    fn truncated_capture_matches_full_propagation() {
        let model = DelayModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for kind in AdderKind::ALL {
            let nl = kind.build(16).unwrap();
            let chip = sample_chip(&model, &nl, 4, 0);
            let cp = nl.critical_path_delay(&chip).unwrap();
            let periods = [0.2 * cp, 0.35 * cp, 0.5 * cp];
            let mut full_sim = Simulator::new(&nl).unwrap();
            let mut cut_sim = Simulator::new(&nl).unwrap();
            let zero = settle(&nl, &vec![false; nl.primary_inputs.len()]).unwrap();
            let (mut full, mut cut) = (zero.clone(), zero);
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for k in 0..400u64 {
                let delays = apply_noise(&chip, &model, &nl, k);
                let input = bits(&nl, rng.random::<u16>() as u64, rng.random::<u16>() as u64);
                full_sim.capture_many(&delays, &mut full, &input, &periods, &mut a);
                cut_sim.capture_many_truncated(&delays, &mut cut, &input, &periods, &mut b);
                assert_eq!(a, b, "{kind} vector {k}");
                assert_eq!(full.values(), cut.values());
                assert!(cut.is_settled());
            }
            assert!(cut_sim.events_processed() < full_sim.events_processed());
        }
    }

    #[test]
    fn fixed_zero_policy_restarts_from_zero() {
        let model = DelayModel {
            process_sigma_frac: 0.0,
            noise_sigma_frac: 0.0,
            ..DelayModel::default()
        };
        let rca = build_rca(8).unwrap();
        let chip = model.nominal_chip(&rca);
        let vectors = [AdderInput::new(0xFF, 0x01), AdderInput::new(0xFF, 0x01)];
        let cfg = CaptureConfig {
            clock_period_ps: 60.0,
            prev_state_policy: PrevStatePolicy::FixedZero,
        };
        let t = run_trace(
            &rca,
            &chip,
            &model,
            &vectors,
            &cfg,
            Trial {
                id: 0,
                noise_seed: 0,
            },
        )
        .unwrap();
        assert_eq!(t.entries[0].captured, t.entries[1].captured);
        assert!(t.entries[0].is_error());
        let seq = run_trace(
            &rca,
            &chip,
            &model,
            &vectors,
            &CaptureConfig::new(60.0),
            Trial {
                id: 0,
                noise_seed: 0,
            },
        )
        .unwrap();
        // repeating a vector from its own settled state is always correct
        assert!(!seq.entries[1].is_error());
    }
}

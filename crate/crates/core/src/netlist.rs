// SPDX-License-Identifier: Apache-2.0
//! Gate-level combinational netlists and the three adder generators.
//!
//! Nets are dense `u32` ids. Primary inputs are ordered operand `a`
//! LSB-first, then operand `b`, then carry-in when the adder has one.
//! Primary outputs are the sum bits LSB-first followed by carry-out.
//!
//! Every gate input pin is a timing arc. Arcs are numbered gate by gate in
//! pin order; [`Netlist::arc_offsets`] gives the first arc of each gate.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::variation::ChipInstance;

pub type NetId = u32;
pub type GateId = u32;

/// Captured or golden adder output, sum bits LSB-first with carry-out on top.
pub type OutputWord = u128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Inv,
    And2,
    Or2,
    Xor2,
}

impl GateKind {
    pub const ALL: [GateKind; 4] = [GateKind::Inv, GateKind::And2, GateKind::Or2, GateKind::Xor2];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Inv => 1,
            GateKind::And2 | GateKind::Or2 | GateKind::Xor2 => 2,
        }
    }

    /// Evaluates the gate; `b` is ignored for `Inv`.
    #[inline]
    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            GateKind::Inv => !a,
            GateKind::And2 => a & b,
            GateKind::Or2 => a | b,
            GateKind::Xor2 => a ^ b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub id: GateId,
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdderKind {
    Rca,
    Cla,
    Hca,
}

impl AdderKind {
    pub const ALL: [AdderKind; 3] = [AdderKind::Rca, AdderKind::Cla, AdderKind::Hca];

    pub fn name(self) -> &'static str {
        match self {
            AdderKind::Rca => "rca",
            AdderKind::Cla => "cla",
            AdderKind::Hca => "hca",
        }
    }

    pub fn build(self, width: u32) -> Result<Netlist> {
        match self {
            AdderKind::Rca => build_rca(width),
            AdderKind::Cla => build_cla(width),
            AdderKind::Hca => build_hca(width),
        }
    }

    pub fn has_carry_in(self) -> bool {
        !matches!(self, AdderKind::Hca)
    }
}

impl fmt::Display for AdderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rca" => Ok(AdderKind::Rca),
            "cla" => Ok(AdderKind::Cla),
            "hca" => Ok(AdderKind::Hca),
            other => Err(invalid(format!(
                "unknown adder '{other}' (expected rca, cla or hca)"
            ))),
        }
    }
}

/// One adder evaluation: operands plus carry-in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdderInput {
    pub a: u64,
    pub b: u64,
    pub cin: bool,
}

impl AdderInput {
    pub fn new(a: u64, b: u64) -> Self {
        AdderInput { a, b, cin: false }
    }

    /// Integer sum, carry-out at bit `width`.
    pub fn golden(&self, width: u32) -> OutputWord {
        let mask = word_mask(width);
        (self.a as u128 & mask) + (self.b as u128 & mask) + self.cin as u128
    }
}

pub(crate) fn word_mask(width: u32) -> u128 {
    (1u128 << width) - 1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Netlist {
    pub name: String,
    pub width: u32,
    pub net_count: u32,
    pub primary_inputs: Vec<NetId>,
    pub primary_outputs: Vec<NetId>,
    pub gates: Vec<Gate>,
}

impl Netlist {
    /// Checks arity, single-driver, dense ids, output count and acyclicity.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::MalformedNetlist(msg));
        let n = self.net_count as usize;
        let mut driver: Vec<Option<&'static str>> = vec![None; n];
        for &pi in &self.primary_inputs {
            let Some(slot) = driver.get_mut(pi as usize) else {
                return bad(format!("primary input net {pi} out of range"));
            };
            if slot.is_some() {
                return bad(format!("net {pi} listed twice as primary input"));
            }
            *slot = Some("input");
        }
        for (idx, gate) in self.gates.iter().enumerate() {
            if gate.id as usize != idx {
                return bad(format!("gate at position {idx} has id {}", gate.id));
            }
            if gate.inputs.len() != gate.kind.arity() {
                return bad(format!(
                    "gate {} ({:?}) has {} inputs",
                    gate.id,
                    gate.kind,
                    gate.inputs.len()
                ));
            }
            if let Some(&net) = gate.inputs.iter().find(|&&net| net >= self.net_count) {
                return bad(format!("gate {} reads net {net} out of range", gate.id));
            }
            let Some(slot) = driver.get_mut(gate.output as usize) else {
                return bad(format!(
                    "gate {} drives net {} out of range",
                    gate.id, gate.output
                ));
            };
            if let Some(prev) = slot {
                return bad(format!(
                    "net {} has multiple drivers (gate {} and {prev})",
                    gate.output, gate.id
                ));
            }
            *slot = Some("gate");
        }
        if let Some(net) = driver.iter().position(Option::is_none) {
            return bad(format!("net {net} is neither a primary input nor driven"));
        }
        if let Some(&po) = self
            .primary_outputs
            .iter()
            .find(|&&po| po >= self.net_count)
        {
            return bad(format!("primary output net {po} out of range"));
        }
        if self.primary_outputs.len() != self.width as usize + 1 {
            return bad(format!(
                "{} primary outputs for width {} (expected width + 1)",
                self.primary_outputs.len(),
                self.width
            ));
        }
        self.topo_order().map(|_| ())
    }

    /// Kahn's algorithm; ready gates are released in ascending id order.
    pub fn topo_order(&self) -> Result<Vec<GateId>> {
        let n = self.net_count as usize;
        let mut driven_by = vec![u32::MAX; n];
        for gate in &self.gates {
            if let Some(slot) = driven_by.get_mut(gate.output as usize) {
                *slot = gate.id;
            }
        }
        let mut pending = vec![0usize; self.gates.len()];
        let mut fanout: Vec<Vec<GateId>> = vec![Vec::new(); self.gates.len()];
        for gate in &self.gates {
            for &net in &gate.inputs {
                let src = driven_by.get(net as usize).copied().unwrap_or(u32::MAX);
                if src != u32::MAX {
                    pending[gate.id as usize] += 1;
                    fanout[src as usize].push(gate.id);
                }
            }
        }
        let mut ready: VecDeque<GateId> = self
            .gates
            .iter()
            .filter(|g| pending[g.id as usize] == 0)
            .map(|g| g.id)
            .collect();
        let mut order = Vec::with_capacity(self.gates.len());
        while let Some(id) = ready.pop_front() {
            order.push(id);
            for &next in &fanout[id as usize] {
                pending[next as usize] -= 1;
                if pending[next as usize] == 0 {
                    ready.push_back(next);
                }
            }
        }
        if order.len() != self.gates.len() {
            let stuck = pending.iter().position(|&p| p > 0).unwrap_or(0);
            return Err(Error::MalformedNetlist(format!(
                "combinational cycle through gate {stuck}"
            )));
        }
        Ok(order)
    }

    pub fn arc_count(&self) -> usize {
        self.gates.iter().map(|g| g.inputs.len()).sum()
    }

    /// First arc index of each gate, plus a trailing total.
    pub fn arc_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.gates.len() + 1);
        let mut acc = 0;
        for gate in &self.gates {
            offsets.push(acc);
            acc += gate.inputs.len();
        }
        offsets.push(acc);
        offsets
    }

    /// Gate kind of every arc, in arc order.
    pub fn arc_kinds(&self) -> Vec<GateKind> {
        self.gates
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.kind, g.inputs.len()))
            .collect()
    }

    pub fn has_carry_in(&self) -> bool {
        self.primary_inputs.len() == 2 * self.width as usize + 1
    }

    /// Zero-delay evaluation of every net.
    pub fn eval_nets(&self, inputs: &[bool]) -> Result<Vec<bool>> {
        if inputs.len() != self.primary_inputs.len() {
            return Err(invalid(format!(
                "assignment has {} bits, netlist has {} primary inputs",
                inputs.len(),
                self.primary_inputs.len()
            )));
        }
        let order = self.topo_order()?;
        let mut values = vec![false; self.net_count as usize];
        for (&net, &bit) in self.primary_inputs.iter().zip(inputs) {
            values[net as usize] = bit;
        }
        eval_in_order(&self.gates, &order, &mut values);
        Ok(values)
    }

    /// [`eval_functional`](Self::eval_functional) over many adder inputs,
    /// sorting the gates once.
    pub fn eval_adder_many(&self, inputs: &[AdderInput]) -> Result<Vec<OutputWord>> {
        let order = self.topo_order()?;
        let mut values = vec![false; self.net_count as usize];
        inputs
            .iter()
            .map(|input| {
                let bits = self.adder_bits(input);
                if bits.len() != self.primary_inputs.len() {
                    return Err(invalid("netlist is not an adder of its declared width"));
                }
                for (&net, bit) in self.primary_inputs.iter().zip(bits) {
                    values[net as usize] = bit;
                }
                eval_in_order(&self.gates, &order, &mut values);
                Ok(self.pack_outputs(&values))
            })
            .collect()
    }

    /// Zero-delay evaluation; returns primary outputs packed LSB-first.
    pub fn eval_functional(&self, inputs: &[bool]) -> Result<OutputWord> {
        let values = self.eval_nets(inputs)?;
        Ok(self.pack_outputs(&values))
    }

    pub fn pack_outputs(&self, values: &[bool]) -> OutputWord {
        self.primary_outputs
            .iter()
            .enumerate()
            .fold(0, |w, (i, &net)| w | ((values[net as usize] as u128) << i))
    }

    /// Expands an adder operand triple into a primary-input assignment.
    pub fn adder_bits(&self, input: &AdderInput) -> Vec<bool> {
        let w = self.width as usize;
        let mut bits = Vec::with_capacity(self.primary_inputs.len());
        bits.extend((0..w).map(|i| (input.a >> i) & 1 == 1));
        bits.extend((0..w).map(|i| (input.b >> i) & 1 == 1));
        if self.has_carry_in() {
            bits.push(input.cin);
        }
        bits
    }

    /// Longest arc-weighted input-to-output path (static, no false paths).
    pub fn critical_path_delay(&self, chip: &ChipInstance) -> Result<f64> {
        let delays = chip.arc_delays_ps();
        if delays.len() != self.arc_count() {
            return Err(invalid(format!(
                "chip has {} arc delays, netlist has {} arcs",
                delays.len(),
                self.arc_count()
            )));
        }
        Ok(self.longest_path(delays, &self.topo_order()?))
    }

    pub(crate) fn longest_path(&self, delays: &[f64], order: &[GateId]) -> f64 {
        let offsets = self.arc_offsets();
        let mut arrival = vec![0.0f64; self.net_count as usize];
        for &id in order {
            let gate = &self.gates[id as usize];
            let base = offsets[id as usize];
            let t = gate
                .inputs
                .iter()
                .enumerate()
                .map(|(pin, &net)| arrival[net as usize] + delays[base + pin])
                .fold(0.0, f64::max);
            arrival[gate.output as usize] = t;
        }
        self.primary_outputs
            .iter()
            .map(|&net| arrival[net as usize])
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let netlist: Netlist = serde_json::from_str(text)?;
        netlist.validate()?;
        Ok(netlist)
    }
}

pub(crate) fn eval_in_order(gates: &[Gate], order: &[GateId], values: &mut [bool]) {
    for &id in order {
        let gate = &gates[id as usize];
        let a = values[gate.inputs[0] as usize];
        let b = gate.inputs.get(1).is_some_and(|&n| values[n as usize]);
        values[gate.output as usize] = gate.kind.eval(a, b);
    }
}

pub fn topo_order(netlist: &Netlist) -> Result<Vec<GateId>> {
    netlist.topo_order()
}

pub fn eval_functional(netlist: &Netlist, inputs: &[bool]) -> Result<OutputWord> {
    netlist.eval_functional(inputs)
}

pub fn critical_path_delay(netlist: &Netlist, chip: &ChipInstance) -> Result<f64> {
    netlist.critical_path_delay(chip)
}

/// Incremental netlist construction. Gate output nets are allocated on
/// demand; `finish` drops logic that reaches no primary output and
/// renumbers nets densely (inputs first, then gate outputs in gate order).
struct Builder {
    net_count: u32,
    gates: Vec<(GateKind, Vec<NetId>, NetId)>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            net_count: 0,
            gates: Vec::new(),
        }
    }

    fn input(&mut self) -> NetId {
        let net = self.net_count;
        self.net_count += 1;
        net
    }

    fn gate(&mut self, kind: GateKind, inputs: &[NetId]) -> NetId {
        debug_assert_eq!(inputs.len(), kind.arity());
        let out = self.net_count;
        self.net_count += 1;
        self.gates.push((kind, inputs.to_vec(), out));
        out
    }

    fn and(&mut self, a: NetId, b: NetId) -> NetId {
        self.gate(GateKind::And2, &[a, b])
    }

    fn or(&mut self, a: NetId, b: NetId) -> NetId {
        self.gate(GateKind::Or2, &[a, b])
    }

    fn xor(&mut self, a: NetId, b: NetId) -> NetId {
        self.gate(GateKind::Xor2, &[a, b])
    }

    /// Balanced reduction tree, pairing neighbours level by level.
    fn tree(&mut self, kind: GateKind, nets: &[NetId]) -> NetId {
        assert!(!nets.is_empty());
        let mut level = nets.to_vec();
        while level.len() > 1 {
            level = level
                .chunks(2)
                .map(|pair| match *pair {
                    [a, b] => self.gate(kind, &[a, b]),
                    [a] => a,
                    _ => unreachable!(),
                })
                .collect();
        }
        level[0]
    }

    fn finish(self, name: &str, width: u32, inputs: Vec<NetId>, outputs: Vec<NetId>) -> Netlist {
        let mut consumers = vec![0usize; self.net_count as usize];
        for &net in &outputs {
            consumers[net as usize] += 1;
        }
        for (_, ins, _) in &self.gates {
            for &net in ins {
                consumers[net as usize] += 1;
            }
        }
        let mut live = vec![true; self.gates.len()];
        for idx in (0..self.gates.len()).rev() {
            let (_, ins, out) = &self.gates[idx];
            if consumers[*out as usize] == 0 {
                live[idx] = false;
                for &net in ins {
                    consumers[net as usize] -= 1;
                }
            }
        }

        let mut remap = BTreeMap::new();
        for &net in &inputs {
            let next = remap.len() as NetId;
            remap.insert(net, next);
        }
        for (idx, (_, _, out)) in self.gates.iter().enumerate() {
            if live[idx] {
                let next = remap.len() as NetId;
                remap.insert(*out, next);
            }
        }
        let gates = self
            .gates
            .iter()
            .zip(&live)
            .filter(|(_, &alive)| alive)
            .enumerate()
            .map(|(id, ((kind, ins, out), _))| Gate {
                id: id as GateId,
                kind: *kind,
                inputs: ins.iter().map(|n| remap[n]).collect(),
                output: remap[out],
            })
            .collect();
        let netlist = Netlist {
            name: name.to_string(),
            width,
            net_count: remap.len() as u32,
            primary_inputs: inputs.iter().map(|n| remap[n]).collect(),
            primary_outputs: outputs.iter().map(|n| remap[n]).collect(),
            gates,
        };
        debug_assert!(netlist.validate().is_ok());
        netlist
    }
}

fn operand_inputs(
    b: &mut Builder,
    width: u32,
    carry_in: bool,
) -> (Vec<NetId>, Vec<NetId>, Option<NetId>) {
    let a: Vec<_> = (0..width).map(|_| b.input()).collect();
    let bb: Vec<_> = (0..width).map(|_| b.input()).collect();
    let cin = carry_in.then(|| b.input());
    (a, bb, cin)
}

const MAX_WIDTH: u32 = 64;

/// Ripple-carry adder of five-gate full adders: `p = a^b`, `s = p^c`,
/// `t = p&c`, `g = a&b`, `cout = t|g`, in that gate order per bit.
pub fn build_rca(width: u32) -> Result<Netlist> {
    if width == 0 || width > MAX_WIDTH {
        return Err(invalid(format!(
            "rca width must be in 1..={MAX_WIDTH}, got {width}"
        )));
    }
    let mut b = Builder::new();
    let (a, bb, cin) = operand_inputs(&mut b, width, true);
    let mut carry = cin.expect("rca has carry-in");
    let mut outputs = Vec::with_capacity(width as usize + 1);
    for i in 0..width as usize {
        let p = b.xor(a[i], bb[i]);
        let s = b.xor(p, carry);
        let t = b.and(p, carry);
        let g = b.and(a[i], bb[i]);
        carry = b.or(t, g);
        outputs.push(s);
    }
    outputs.push(carry);
    let mut inputs = a;
    inputs.extend(bb);
    inputs.push(cin.unwrap());
    Ok(b.finish("rca", width, inputs, outputs))
}

/// Carry-lookahead adder built from 4-bit blocks rippled together.
///
/// Within a block the carry into bit `k` is the two-level sum of products
/// `g[k-1] | p[k-1]g[k-2] | ... | p[k-1..0]c0`. The terms that do not depend
/// on the block carry-in are OR-ed first, so `c0` reaches each carry through
/// one AND and one OR.
pub fn build_cla(width: u32) -> Result<Netlist> {
    if width < 4 || !width.is_multiple_of(4) || width > MAX_WIDTH {
        return Err(invalid(format!(
            "cla width must be a positive multiple of 4 up to {MAX_WIDTH}, got {width}"
        )));
    }
    let mut b = Builder::new();
    let (a, bb, cin) = operand_inputs(&mut b, width, true);
    let mut block_cin = cin.expect("cla has carry-in");
    let mut outputs = Vec::with_capacity(width as usize + 1);
    for block in 0..(width as usize / 4) {
        let bits = block * 4..block * 4 + 4;
        let p: Vec<_> = bits.clone().map(|i| b.xor(a[i], bb[i])).collect();
        let g: Vec<_> = bits.map(|i| b.and(a[i], bb[i])).collect();
        let mut carries = vec![block_cin];
        for k in 1..=4 {
            let terms: Vec<NetId> = (0..k)
                .map(|j| {
                    let mut factors: Vec<NetId> = p[j + 1..k].to_vec();
                    factors.push(g[j]);
                    b.tree(GateKind::And2, &factors)
                })
                .collect();
            let generate = b.tree(GateKind::Or2, &terms);
            let propagate = b.tree(GateKind::And2, &p[..k]);
            let through = b.and(propagate, block_cin);
            carries.push(b.or(generate, through));
        }
        for i in 0..4 {
            outputs.push(b.xor(p[i], carries[i]));
        }
        block_cin = carries[4];
    }
    outputs.push(block_cin);
    let mut inputs = a;
    inputs.extend(bb);
    inputs.push(cin.unwrap());
    Ok(b.finish("cla", width, inputs, outputs))
}

/// Han-Carlson parallel-prefix adder (carry-in tied to 0).
///
/// Odd bit positions (0-based) first absorb their even neighbour, then run a
/// Kogge-Stone tree among themselves with spans 2, 4, ...; together that is
/// `log2(width)` prefix stages. A last stage combines every even position
/// with the full prefix of the odd position below it.
pub fn build_hca(width: u32) -> Result<Netlist> {
    if !(4..=MAX_WIDTH).contains(&width) || !width.is_power_of_two() {
        return Err(invalid(format!(
            "hca width must be a power of two in 4..={MAX_WIDTH}, got {width}"
        )));
    }
    let n = width as usize;
    let mut b = Builder::new();
    let (a, bb, _) = operand_inputs(&mut b, width, false);
    let p: Vec<_> = (0..n).map(|i| b.xor(a[i], bb[i])).collect();
    let g: Vec<_> = (0..n).map(|i| b.and(a[i], bb[i])).collect();

    // (G, P) of the group ending at each position.
    let mut gen = g.clone();
    let mut prop = p.clone();
    let combine = |b: &mut Builder, hi: (NetId, NetId), lo: (NetId, NetId)| {
        let t = b.and(hi.1, lo.0);
        (b.or(hi.0, t), b.and(hi.1, lo.1))
    };

    for i in (1..n).step_by(2) {
        (gen[i], prop[i]) = combine(&mut b, (g[i], p[i]), (g[i - 1], p[i - 1]));
    }
    let mut span = 2;
    while span < n {
        let prev = (gen.clone(), prop.clone());
        for i in (1..n).step_by(2).filter(|&i| i >= span) {
            (gen[i], prop[i]) = combine(
                &mut b,
                (prev.0[i], prev.1[i]),
                (prev.0[i - span], prev.1[i - span]),
            );
        }
        span *= 2;
    }
    for i in (2..n).step_by(2) {
        let t = b.and(p[i], gen[i - 1]);
        gen[i] = b.or(g[i], t);
    }

    let mut outputs = Vec::with_capacity(n + 1);
    outputs.push(p[0]);
    for i in 1..n {
        outputs.push(b.xor(p[i], gen[i - 1]));
    }
    outputs.push(gen[n - 1]);
    let mut inputs = a;
    inputs.extend(bb);
    Ok(b.finish("hca", width, inputs, outputs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variation::ChipInstance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn add_all(netlist: &Netlist, x: AdderInput) -> OutputWord {
        netlist.eval_functional(&netlist.adder_bits(&x)).unwrap()
    }

    #[test]
    fn rca_gate_count_and_full_adder_truth_table() {
        let fa = build_rca(1).unwrap();
        assert_eq!(fa.gates.len(), 5);
        for bits in 0..8u64 {
            let x = AdderInput {
                a: bits & 1,
                b: (bits >> 1) & 1,
                cin: bits & 4 != 0,
            };
            assert_eq!(add_all(&fa, x), (x.a + x.b + x.cin as u64) as u128);
        }
        assert_eq!(build_rca(32).unwrap().gates.len(), 160);
    }

    #[test]
    fn rca8_full_carry_propagation() {
        let rca = build_rca(8).unwrap();
        assert_eq!(add_all(&rca, AdderInput::new(0xFF, 0x01)), 0x100);
    }

    #[test]
    fn rejects_bad_widths() {
        assert!(matches!(build_rca(0), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_cla(6), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_cla(0), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_hca(12), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_hca(2), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_hca(128), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn cla4_exhaustive() {
        let cla = build_cla(4).unwrap();
        for v in 0..512u64 {
            let x = AdderInput {
                a: v & 0xF,
                b: (v >> 4) & 0xF,
                cin: v & 0x100 != 0,
            };
            assert_eq!(add_all(&cla, x), x.golden(4));
        }
    }

    #[test]
    fn hca8_exhaustive() {
        let hca = build_hca(8).unwrap();
        for a in 0..256u64 {
            for bv in 0..256u64 {
                let x = AdderInput::new(a, bv);
                assert_eq!(add_all(&hca, x), x.golden(8), "{a}+{bv}");
            }
        }
    }

    #[test]
    fn spot_values() {
        let rca = build_rca(32).unwrap();
        let cla = build_cla(32).unwrap();
        let hca = build_hca(32).unwrap();
        assert_eq!(add_all(&rca, AdderInput::new(7, 8)), 15);
        assert_eq!(add_all(&cla, AdderInput::new(0, 0)), 0);
        assert_eq!(add_all(&cla, AdderInput::new(1 << 31, 1 << 31)), 1 << 32);
        assert_eq!(add_all(&hca, AdderInput::new(0xFFFF_FFFF, 1)), 1 << 32);
    }

    #[test]
    fn batch_evaluation_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for kind in AdderKind::ALL {
            let nl = kind.build(16).unwrap();
            let inputs: Vec<AdderInput> = (0..200)
                .map(|_| AdderInput {
                    a: rng.random::<u16>() as u64,
                    b: rng.random::<u16>() as u64,
                    cin: nl.has_carry_in() && rng.random(),
                })
                .collect();
            let single: Vec<OutputWord> = inputs
                .iter()
                .map(|x| nl.eval_functional(&nl.adder_bits(x)).unwrap())
                .collect();
            assert_eq!(nl.eval_adder_many(&inputs).unwrap(), single);
        }
    }

    #[test]
    fn topo_order_edge_cases() {
        let fa = build_rca(1).unwrap();
        let order = fa.topo_order().unwrap();
        let pos = |id: GateId| order.iter().position(|&g| g == id).unwrap();
        // gate 0 is a^b, gate 1 is p^cin
        assert!(pos(0) < pos(1));

        let empty = Netlist {
            name: "empty".into(),
            width: 0,
            net_count: 1,
            primary_inputs: vec![0],
            primary_outputs: vec![0],
            gates: vec![],
        };
        assert!(empty.topo_order().unwrap().is_empty());
    }

    #[test]
    fn detects_cycles_and_multiple_drivers() {
        let cyclic = Netlist {
            name: "loop".into(),
            width: 0,
            net_count: 3,
            primary_inputs: vec![0],
            primary_outputs: vec![2],
            gates: vec![
                Gate {
                    id: 0,
                    kind: GateKind::And2,
                    inputs: vec![0, 2],
                    output: 1,
                },
                Gate {
                    id: 1,
                    kind: GateKind::Inv,
                    inputs: vec![1],
                    output: 2,
                },
            ],
        };
        assert!(matches!(
            cyclic.topo_order(),
            Err(Error::MalformedNetlist(_))
        ));
        assert!(cyclic.validate().is_err());

        let mut doubled = build_rca(1).unwrap();
        doubled.gates[1].output = doubled.gates[0].output;
        assert!(matches!(
            doubled.validate(),
            Err(Error::MalformedNetlist(_))
        ));

        let mut arity = build_rca(1).unwrap();
        arity.gates[0].inputs.pop();
        assert!(arity.validate().is_err());
    }

    #[test]
    fn eval_rejects_short_assignment() {
        let rca = build_rca(4).unwrap();
        assert!(matches!(
            rca.eval_functional(&[true; 3]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn unit_delay_critical_path_of_full_adder() {
        let fa = build_rca(1).unwrap();
        let ones = ChipInstance::from_delays(0, vec![1.0; fa.arc_count()]);
        assert_eq!(fa.critical_path_delay(&ones).unwrap(), 3.0);
        let zeros = ChipInstance::from_delays(0, vec![0.0; fa.arc_count()]);
        assert_eq!(fa.critical_path_delay(&zeros).unwrap(), 0.0);
        let short = ChipInstance::from_delays(0, vec![1.0; 3]);
        assert!(fa.critical_path_delay(&short).is_err());
    }

    #[test]
    fn json_round_trip() {
        for kind in AdderKind::ALL {
            let netlist = kind.build(8).unwrap();
            let text = netlist.to_json().unwrap();
            assert_eq!(Netlist::from_json(&text).unwrap(), netlist);
        }
        let text = build_rca(1).unwrap().to_json().unwrap();
        assert!(text.contains("\"XOR2\""));
    }

    #[test]
    fn netlists_are_pruned_and_valid() {
        for w in [4, 8, 16, 32, 64] {
            for kind in AdderKind::ALL {
                let netlist = kind.build(w).unwrap();
                netlist.validate().unwrap();
                // every gate output is consumed somewhere
                let mut used = vec![false; netlist.net_count as usize];
                netlist
                    .primary_outputs
                    .iter()
                    .for_each(|&n| used[n as usize] = true);
                netlist
                    .gates
                    .iter()
                    .flat_map(|g| &g.inputs)
                    .for_each(|&n| used[n as usize] = true);
                assert!(
                    netlist.gates.iter().all(|g| used[g.output as usize]),
                    "{kind} {w}"
                );
            }
        }
    }
}

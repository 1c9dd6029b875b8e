//! Classical reversible-gate engine over one molecule's bit ladder.
//!
//! A [`Register`] holds a line of computation bits and, optionally, a
//! parallel line of rapidly relaxing reset bits. Gates act on computation
//! bits only; [`Gate::Reset`] swaps a run of computation bits with their
//! reset-row neighbours, which re-thermalize immediately.
//!
//! Bits are `false` for `0` and `true` for `1`. A bit at bias `ε` reads `1`
//! with probability `δ = (1 − ε)/2`.

pub mod schedule;
pub mod sliced;

use std::fmt;
use std::str::FromStr;

use bitvec::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::Bias;

pub use schedule::{Instruction, Schedule};

/// Where a bit came from. Simulation metadata only; physical pulses never
/// read it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    /// Freshly reset to the heat-bath bias (level 0).
    Fresh,
    /// Kept after compressing a pair of level `j − 1` bits.
    PurifiedTo(u8),
    /// Adjusted bit of an unequal pair, or anything derived from a bit of
    /// the wrong level.
    Dirty,
    /// Parity bit of a compressed pair.
    Supervisor,
}

impl Provenance {
    pub fn level(self) -> Option<u8> {
        match self {
            Provenance::Fresh => Some(0),
            Provenance::PurifiedTo(j) => Some(j),
            Provenance::Dirty | Provenance::Supervisor => None,
        }
    }

    pub fn at_level(level: u8) -> Self {
        if level == 0 {
            Provenance::Fresh
        } else {
            Provenance::PurifiedTo(level)
        }
    }

    /// Tag of a CNOT control after the gate: a pair of equal-level bits whose
    /// target now reads 0 promotes the control one level, anything else
    /// leaves it dirty.
    pub fn after_compression(control: Provenance, target: Provenance, target_bit: bool) -> Self {
        match (control.level(), target.level()) {
            (Some(a), Some(b)) if a == b && !target_bit => a.checked_add(1).map_or(Provenance::Dirty, Provenance::PurifiedTo),
            _ => Provenance::Dirty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    /// `target ^= control`.
    Cnot { control: usize, target: usize },
    Swap { a: usize, b: usize },
    /// Exchange `a` and `b` iff `zero_control` reads 0.
    ZcSwap { zero_control: usize, a: usize, b: usize },
    /// Swap `len` computation bits starting at `start` with the reset row.
    Reset { start: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Cnot,
    Swap,
    ZcSwap,
    Reset,
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Cnot { .. } => GateKind::Cnot,
            Gate::Swap { .. } => GateKind::Swap,
            Gate::ZcSwap { .. } => GateKind::ZcSwap,
            Gate::Reset { .. } => GateKind::Reset,
        }
    }

    /// Highest computation-row index the gate touches.
    pub fn max_index(&self) -> usize {
        match *self {
            Gate::Cnot { control, target } => control.max(target),
            Gate::Swap { a, b } => a.max(b),
            Gate::ZcSwap { zero_control, a, b } => zero_control.max(a).max(b),
            Gate::Reset { start, len } => (start + len).saturating_sub(1),
        }
    }

    pub fn is_reversible(&self) -> bool {
        !matches!(self, Gate::Reset { .. })
    }

    /// Checks operand ranges, distinctness and adjacency for a register of
    /// `n` computation bits.
    pub fn check(&self, n: usize, adjacency: Adjacency) -> Result<(), GateError> {
        let operands: &[usize] = match self {
            Gate::Cnot { control, target } => &[*control, *target],
            Gate::Swap { a, b } => &[*a, *b],
            Gate::ZcSwap { zero_control, a, b } => &[*zero_control, *a, *b],
            Gate::Reset { start, len } => {
                if *len == 0 {
                    return Err(GateError::EmptyReset { gate: *self });
                }
                return match start.checked_add(*len) {
                    Some(end) if end <= n => Ok(()),
                    _ => Err(GateError::IndexOutOfRange { gate: *self, n }),
                };
            }
        };
        if operands.iter().any(|&i| i >= n) {
            return Err(GateError::IndexOutOfRange { gate: *self, n });
        }
        let mut sorted = operands.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(GateError::DuplicateOperand { gate: *self });
        }
        if let Adjacency::Strict { distance } = adjacency {
            if let Some(gap) = sorted.windows(2).map(|w| w[1] - w[0]).find(|&g| g > distance) {
                return Err(GateError::NotAdjacent { gate: *self, gap, distance });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Cnot { control, target } => write!(f, "CNOT {control} {target}"),
            Gate::Swap { a, b } => write!(f, "SWAP {a} {b}"),
            Gate::ZcSwap { zero_control, a, b } => write!(f, "ZCSWAP {zero_control} {a} {b}"),
            Gate::Reset { start, len } => write!(f, "RESET {start} {len}"),
        }
    }
}

impl FromStr for Gate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut tokens = s.split_whitespace();
        let name = tokens.next().ok_or_else(|| "empty gate".to_string())?;
        let args = tokens
            .map(|t| t.parse::<usize>().map_err(|e| format!("bad operand {t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        let arity = |k: usize| {
            if args.len() == k {
                Ok(())
            } else {
                Err(format!("{name} takes {k} operands, got {}", args.len()))
            }
        };
        match name {
            "CNOT" => arity(2).map(|_| Gate::Cnot { control: args[0], target: args[1] }),
            "SWAP" => arity(2).map(|_| Gate::Swap { a: args[0], b: args[1] }),
            "ZCSWAP" => arity(3).map(|_| Gate::ZcSwap {
                zero_control: args[0],
                a: args[1],
                b: args[2],
            }),
            "RESET" => arity(2).map(|_| Gate::Reset { start: args[0], len: args[1] }),
            other => Err(format!("unknown gate {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GateError {
    #[error("{gate}: operand out of range for {n} bits")]
    IndexOutOfRange { gate: Gate, n: usize },
    #[error("{gate}: operands must be distinct")]
    DuplicateOperand { gate: Gate },
    #[error("{gate}: gap {gap} exceeds neighbour distance {distance}")]
    NotAdjacent { gate: Gate, gap: usize, distance: usize },
    #[error("{gate}: reset of zero bits")]
    EmptyReset { gate: Gate },
}

/// Connectivity constraint on multi-bit gates. Under `Strict`, the sorted
/// operand positions of every gate may be at most `distance` apart pairwise
/// consecutively. Resets act between the two rows and are never constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Adjacency {
    Strict { distance: usize },
    Unconstrained,
}

impl Default for Adjacency {
    fn default() -> Self {
        Adjacency::Strict { distance: 1 }
    }
}

/// Time-step cost per gate kind. A reset of any width is one parallel step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCosts {
    pub cnot: u64,
    pub swap: u64,
    pub zcswap: u64,
    pub reset: u64,
}

impl Default for GateCosts {
    fn default() -> Self {
        GateCosts {
            cnot: 1,
            swap: 1,
            zcswap: 1,
            reset: 1,
        }
    }
}

impl GateCosts {
    pub fn with_zcswap(zcswap: u64) -> Self {
        GateCosts {
            zcswap,
            ..Self::default()
        }
    }

    pub fn cost(&self, kind: GateKind) -> u64 {
        match kind {
            GateKind::Cnot => self.cnot,
            GateKind::Swap => self.swap,
            GateKind::ZcSwap => self.zcswap,
            GateKind::Reset => self.reset,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepCounter {
    steps: u64,
    costs: GateCosts,
}

impl StepCounter {
    pub fn new(costs: GateCosts) -> Self {
        StepCounter { steps: 0, costs }
    }

    pub fn charge(&mut self, kind: GateKind) {
        self.steps += self.costs.cost(kind);
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn costs(&self) -> GateCosts {
        self.costs
    }
}

/// One molecule: computation row, optional reset row, provenance tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Register {
    comp: BitVec<u64, Lsb0>,
    rrtr: Option<BitVec<u64, Lsb0>>,
    provenance: Option<Vec<Provenance>>,
    epsilon0: Bias,
}

/// Draws one bit at bias `epsilon`: `true` (a `1`) with probability `δ`.
#[inline]
pub fn sample_bit<R: Rng + ?Sized>(rng: &mut R, epsilon: Bias) -> bool {
    rng.random_bool(epsilon.delta())
}

/// Fresh molecule of `n` ladder columns at thermal equilibrium. Computation
/// bits are drawn first, then the reset row, each in index order.
pub fn new_register<R: Rng + ?Sized>(n: usize, epsilon0: Bias, rng: &mut R) -> Register {
    assert!(n >= 1, "register needs at least one bit");
    let comp: BitVec<u64, Lsb0> = (0..n).map(|_| sample_bit(rng, epsilon0)).collect();
    let rrtr: BitVec<u64, Lsb0> = (0..n).map(|_| sample_bit(rng, epsilon0)).collect();
    Register {
        comp,
        rrtr: Some(rrtr),
        provenance: Some(vec![Provenance::Fresh; n]),
        epsilon0,
    }
}

impl Register {
    /// Register with the given computation bits, no reset row and all tags
    /// `Fresh`. Resets draw directly from the heat bath.
    pub fn from_bits(bits: &[bool], epsilon0: Bias) -> Self {
        Register {
            comp: bits.iter().copied().collect(),
            rrtr: None,
            provenance: Some(vec![Provenance::Fresh; bits.len()]),
            epsilon0,
        }
    }

    pub fn len(&self) -> usize {
        self.comp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comp.is_empty()
    }

    pub fn epsilon0(&self) -> Bias {
        self.epsilon0
    }

    pub fn bit(&self, i: usize) -> bool {
        self.comp[i]
    }

    pub fn bits(&self) -> Vec<bool> {
        self.comp.iter().by_vals().collect()
    }

    pub fn set_bit(&mut self, i: usize, value: bool) {
        self.comp.set(i, value);
    }

    pub fn rrtr_bits(&self) -> Option<Vec<bool>> {
        self.rrtr.as_ref().map(|r| r.iter().by_vals().collect())
    }

    pub fn count_zeros(&self) -> usize {
        self.comp.count_zeros()
    }

    pub fn provenance(&self) -> Option<&[Provenance]> {
        self.provenance.as_deref()
    }

    pub fn set_provenance(&mut self, i: usize, tag: Provenance) {
        if let Some(p) = self.provenance.as_mut() {
            p[i] = tag;
        }
    }

    pub fn disable_tracking(&mut self) {
        self.provenance = None;
    }

    pub fn is_tracking(&self) -> bool {
        self.provenance.is_some()
    }

    fn swap_positions(&mut self, a: usize, b: usize) {
        self.comp.swap(a, b);
        if let Some(p) = self.provenance.as_mut() {
            p.swap(a, b);
        }
    }
}

/// Validates `g` against the register and applies it.
pub fn apply_gate<R: Rng + ?Sized>(
    r: &mut Register,
    g: &Gate,
    counter: &mut StepCounter,
    adjacency: Adjacency,
    rng: &mut R,
) -> Result<(), GateError> {
    g.check(r.len(), adjacency)?;
    apply_unchecked(r, g, rng);
    counter.charge(g.kind());
    Ok(())
}

fn apply_unchecked<R: Rng + ?Sized>(r: &mut Register, g: &Gate, rng: &mut R) {
    match *g {
        Gate::Cnot { control, target } => {
            let t = r.comp[target] ^ r.comp[control];
            r.comp.set(target, t);
            if let Some(p) = r.provenance.as_mut() {
                p[control] = Provenance::after_compression(p[control], p[target], t);
                p[target] = Provenance::Supervisor;
            }
        }
        Gate::Swap { a, b } => r.swap_positions(a, b),
        Gate::ZcSwap { zero_control, a, b } => {
            if !r.comp[zero_control] {
                r.swap_positions(a, b);
            }
        }
        Gate::Reset { start, len } => {
            for i in start..start + len {
                let incoming = match r.rrtr.as_mut() {
                    Some(row) => {
                        let v = row[i];
                        row.set(i, sample_bit(rng, r.epsilon0));
                        v
                    }
                    None => sample_bit(rng, r.epsilon0),
                };
                r.comp.set(i, incoming);
            }
            if let Some(p) = r.provenance.as_mut() {
                p[start..start + len].fill(Provenance::Fresh);
            }
        }
    }
}

/// Runs every gate of `s` in order. Stops at the first invalid gate.
pub fn run_schedule<R: Rng + ?Sized>(
    r: &mut Register,
    s: &Schedule,
    counter: &mut StepCounter,
    adjacency: Adjacency,
    rng: &mut R,
) -> Result<(), GateError> {
    for g in s.gates() {
        apply_gate(r, g, counter, adjacency, rng)?;
    }
    Ok(())
}

/// A gate that failed validation, by its position among the schedule's gates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub gate_index: usize,
    pub gate: Gate,
    pub reason: String,
}

/// Checks every gate of `s` for a register of `n` bits without executing.
pub fn validate_schedule(s: &Schedule, n: usize, adjacency: Adjacency) -> Result<(), Vec<Violation>> {
    let violations: Vec<Violation> = s
        .gates()
        .enumerate()
        .filter_map(|(gate_index, g)| {
            g.check(n, adjacency).err().map(|e| Violation {
                gate_index,
                gate: *g,
                reason: e.to_string(),
            })
        })
        .collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

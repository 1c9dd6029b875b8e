//! Bit-sliced execution: up to 64 molecules per machine word.
//!
//! Position `i` of the ladder is one `u64` per row, bit `k` belonging to
//! lane (molecule) `k`. Every gate becomes a handful of word operations, so a
//! schedule costs the same for 64 molecules as for one. Each lane owns its
//! random stream and consumes it in exactly the order [`super::new_register`]
//! and [`super::apply_gate`] would, so lane `k` is bit-identical to a scalar
//! run on the same stream.
//!
//! Provenance tags are stored in `TAG_PLANES` bit planes per position:
//! plane 0 flags "is a level", planes 1.. hold the level in binary. Non-level
//! tags use plane 1 to distinguish supervisors (1) from dirty bits (0).

use rand::Rng;

use super::{sample_bit, Gate, Provenance};
use crate::analytic::Bias;

pub const LANES: usize = 64;
const LEVEL_BITS: usize = 4;
const TAG_PLANES: usize = 1 + LEVEL_BITS;

/// Highest provenance level representable in the sliced tag planes.
pub const MAX_TRACKED_LEVEL: u8 = (1 << LEVEL_BITS) - 1;

type Tag = [u64; TAG_PLANES];

const FRESH: Tag = [!0, 0, 0, 0, 0];
const SUPERVISOR: Tag = [0, !0, 0, 0, 0];

/// 64 molecules sharing one ladder geometry.
#[derive(Debug, Clone)]
pub struct LaneBatch<R> {
    comp: Vec<u64>,
    rrtr: Vec<u64>,
    tags: Vec<Tag>,
    rngs: Vec<R>,
    epsilon0: Bias,
}

impl<R: Rng> LaneBatch<R> {
    /// Draws `n` columns for each lane from its own stream: computation row
    /// first, then reset row.
    pub fn new(n: usize, epsilon0: Bias, mut rngs: Vec<R>) -> Self {
        assert!(!rngs.is_empty() && rngs.len() <= LANES, "1..=64 lanes");
        assert!(n >= 1, "register needs at least one bit");
        let mut comp = vec![0u64; n];
        let mut rrtr = vec![0u64; n];
        for (lane, rng) in rngs.iter_mut().enumerate() {
            for word in comp.iter_mut() {
                *word |= u64::from(sample_bit(rng, epsilon0)) << lane;
            }
            for word in rrtr.iter_mut() {
                *word |= u64::from(sample_bit(rng, epsilon0)) << lane;
            }
        }
        LaneBatch {
            comp,
            rrtr,
            tags: vec![FRESH; n],
            rngs,
            epsilon0,
        }
    }

    pub fn lanes(&self) -> usize {
        self.rngs.len()
    }

    pub fn len(&self) -> usize {
        self.comp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comp.is_empty()
    }

    /// Bit mask of the populated lanes.
    pub fn active_mask(&self) -> u64 {
        if self.lanes() == LANES {
            !0
        } else {
            (1u64 << self.lanes()) - 1
        }
    }

    /// Applies a gate to every lane. The gate must already be valid for the
    /// geometry; slice indexing panics otherwise.
    pub fn apply(&mut self, gate: &Gate) {
        match *gate {
            Gate::Cnot { control, target } => {
                let t = self.comp[target] ^ self.comp[control];
                self.comp[target] = t;
                let c_tag = self.tags[control];
                let t_tag = self.tags[target];
                let mut ok = c_tag[0] & t_tag[0] & !t;
                for p in 1..TAG_PLANES {
                    ok &= !(c_tag[p] ^ t_tag[p]);
                }
                let mut promoted = [0u64; TAG_PLANES];
                promoted[0] = ok;
                let mut carry = ok;
                for p in 1..TAG_PLANES {
                    promoted[p] = (c_tag[p] ^ carry) & ok;
                    carry &= c_tag[p];
                }
                // A carry out of the top plane would alias level 0.
                promoted[0] &= !carry;
                self.tags[control] = promoted;
                self.tags[target] = SUPERVISOR;
            }
            Gate::Swap { a, b } => {
                self.comp.swap(a, b);
                self.tags.swap(a, b);
            }
            Gate::ZcSwap { zero_control, a, b } => {
                let mask = !self.comp[zero_control];
                let d = (self.comp[a] ^ self.comp[b]) & mask;
                self.comp[a] ^= d;
                self.comp[b] ^= d;
                for p in 0..TAG_PLANES {
                    let d = (self.tags[a][p] ^ self.tags[b][p]) & mask;
                    self.tags[a][p] ^= d;
                    self.tags[b][p] ^= d;
                }
            }
            Gate::Reset { start, len } => {
                for i in start..start + len {
                    self.comp[i] = self.rrtr[i];
                    let mut fresh = 0u64;
                    for (lane, rng) in self.rngs.iter_mut().enumerate() {
                        fresh |= u64::from(sample_bit(rng, self.epsilon0)) << lane;
                    }
                    self.rrtr[i] = fresh;
                    self.tags[i] = FRESH;
                }
            }
        }
    }

    /// Lanes whose bit at `i` reads 0.
    pub fn zero_mask(&self, i: usize) -> u64 {
        !self.comp[i] & self.active_mask()
    }

    /// Lanes whose tag at `i` is exactly `level`.
    pub fn level_mask(&self, i: usize, level: u8) -> u64 {
        let tag = &self.tags[i];
        let mut mask = tag[0];
        for p in 1..TAG_PLANES {
            let bit = (level >> (p - 1)) & 1 == 1;
            mask &= if bit { tag[p] } else { !tag[p] };
        }
        mask & self.active_mask()
    }

    pub fn bit(&self, i: usize, lane: usize) -> bool {
        (self.comp[i] >> lane) & 1 == 1
    }

    pub fn provenance(&self, i: usize, lane: usize) -> Provenance {
        let plane = |p: usize| (self.tags[i][p] >> lane) & 1 == 1;
        if plane(0) {
            let level = (1..TAG_PLANES).fold(0u8, |acc, p| acc | (u8::from(plane(p)) << (p - 1)));
            Provenance::at_level(level)
        } else if plane(1) {
            Provenance::Supervisor
        } else {
            Provenance::Dirty
        }
    }

    pub fn lane_bits(&self, lane: usize) -> Vec<bool> {
        (0..self.len()).map(|i| self.bit(i, lane)).collect()
    }

    pub fn lane_provenance(&self, lane: usize) -> Vec<Provenance> {
        (0..self.len()).map(|i| self.provenance(i, lane)).collect()
    }
}

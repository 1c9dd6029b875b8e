//! Pairwise compression of a block of `m` bits, compiled to a fixed,
//! data-independent gate schedule.
//!
//! Pair `k` of the block is processed in three moves. A CNOT writes the
//! pair's parity into the right bit, which becomes the supervisor. The
//! supervisor then walks left to the push target, each step a zero-controlled
//! swap that drags the adjusted bit along when the parity reads 0, followed by
//! a plain swap of the supervisor. Finally the supervisor walks right and
//! parks next to the previously parked supervisors.
//!
//! Afterwards the region `[nu0, nu + m)` holds every purified bit as a
//! contiguous prefix starting at `nu0`, most recently purified first, then the
//! dirty adjusted bits in pair order, then the `m/2` supervisors in reverse
//! pair order.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuit::{apply_gate, Adjacency, Gate, GateCosts, Provenance, Register, Schedule, StepCounter};
use crate::{Error, Result};

/// A compiled compression block together with its geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledBcs {
    pub m: usize,
    pub nu: usize,
    pub nu0: usize,
    pub schedule: Schedule,
}

impl CompiledBcs {
    pub fn supervisor_region(&self) -> Range<usize> {
        self.nu + self.m / 2..self.nu + self.m
    }

    pub fn span(&self) -> Range<usize> {
        self.nu0..self.nu + self.m
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BcsOutcome {
    /// Length of the purified prefix starting at `nu0`.
    pub purified_count: usize,
    pub purified_positions: Range<usize>,
    pub supervisor_region: Range<usize>,
    pub steps_used: u64,
}

fn check_geometry(m: usize, nu: usize, nu0: usize) -> Result<()> {
    if m == 0 || m % 2 != 0 {
        return Err(Error::Compile(format!("block size must be even and positive, got {m}")));
    }
    if nu0 > nu {
        return Err(Error::Compile(format!("push target {nu0} lies right of block start {nu}")));
    }
    if nu.checked_add(m).is_none() {
        return Err(Error::Compile("block end overflows".into()));
    }
    Ok(())
}

/// Compiles one compression of the block `[nu, nu + m)` pushing purified bits
/// to `nu0`.
pub fn compile_bcs(m: usize, nu: usize, nu0: usize) -> Result<CompiledBcs> {
    check_geometry(m, nu, nu0)?;
    let mut schedule = Schedule::new();
    schedule.phase(format!("BCS 0->1 nu={nu} nu0={nu0}"));
    emit_bcs(&mut schedule, m, nu, nu0);
    Ok(CompiledBcs { m, nu, nu0, schedule })
}

/// Appends the gates of one compression to `s`. Geometry must be valid.
pub(crate) fn emit_bcs(s: &mut Schedule, m: usize, nu: usize, nu0: usize) {
    debug_assert!(check_geometry(m, nu, nu0).is_ok());
    for k in 0..m / 2 {
        // Earlier pairs left their adjusted bits in [nu0, nu + k) and their
        // supervisors in [nu + m - k, nu + m); this pair now sits at nu + k.
        let adjusted = nu + k;
        let mut sup = adjusted + 1;
        s.push(Gate::Cnot { control: adjusted, target: sup });
        if adjusted > nu0 {
            loop {
                s.push(Gate::ZcSwap { zero_control: sup, a: sup - 2, b: sup - 1 });
                if sup - 2 == nu0 {
                    break;
                }
                s.push(Gate::Swap { a: sup - 1, b: sup });
                sup -= 1;
            }
        }
        let park = nu + m - k - 1;
        while sup < park {
            s.push(Gate::Swap { a: sup, b: sup + 1 });
            sup += 1;
        }
    }
}

/// Number of `level`-tagged bits in `range`.
pub(crate) fn count_level(tags: &[Provenance], range: Range<usize>, level: u8) -> usize {
    tags[range].iter().filter(|t| t.level() == Some(level)).count()
}

/// Executes a compiled compression on `r` and reports the purified prefix.
pub fn run_bcs(r: &mut Register, bcs: &CompiledBcs) -> Result<BcsOutcome> {
    if r.len() < bcs.nu + bcs.m {
        return Err(Error::Geometry(format!(
            "block [{}, {}) does not fit a register of {} bits",
            bcs.nu,
            bcs.nu + bcs.m,
            r.len()
        )));
    }
    if !r.is_tracking() {
        return Err(Error::Geometry("provenance tracking is disabled".into()));
    }
    // Compression contains no resets, so the stream is never drawn from.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut counter = StepCounter::new(GateCosts::default());
    for g in bcs.schedule.gates() {
        apply_gate(r, g, &mut counter, Adjacency::default(), &mut rng)?;
    }
    let tags = r.provenance().expect("tracking checked above");
    let purified_count = tags[bcs.nu0..bcs.nu + bcs.m]
        .iter()
        .take_while(|t| matches!(t, Provenance::PurifiedTo(_)))
        .count();
    Ok(BcsOutcome {
        purified_count,
        purified_positions: bcs.nu0..bcs.nu0 + purified_count,
        supervisor_region: bcs.supervisor_region(),
        steps_used: counter.steps(),
    })
}

/// Straight-line compression without a gate model.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReferenceBcs {
    /// Kept bits, each new one placed at the head.
    pub purified: Vec<bool>,
    /// Adjusted bits of unequal pairs, in pair order.
    pub dirty: Vec<bool>,
    /// Pair parities, in pair order.
    pub supervisors: Vec<bool>,
}

pub fn reference_bcs(bits: &[bool]) -> Result<ReferenceBcs> {
    if bits.len() % 2 != 0 {
        return Err(Error::InvalidArgument(format!("odd number of bits: {}", bits.len())));
    }
    let mut out = ReferenceBcs::default();
    for pair in bits.chunks_exact(2) {
        let (adjusted, other) = (pair[0], pair[1]);
        let parity = adjusted ^ other;
        if parity {
            out.dirty.push(adjusted);
        } else {
            out.purified.insert(0, adjusted);
        }
        out.supervisors.push(parity);
    }
    Ok(out)
}

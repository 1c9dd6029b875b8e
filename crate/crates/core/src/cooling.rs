//! The recursive cooling scheduler.
//!
//! `M_0` resets `m` bits from the reset row. `M_j` at offset `mu` runs
//! `M_{j-1}` at `mu + d·m/2` followed by one compression of that block pushing
//! to `mu`, for `d = 0..ℓ`, then truncates to its first `m` bits. The
//! truncation issues no gates; the simulator only records how many
//! correctly purified bits it found there.

use std::ops::Range;

use rand::Rng;
use serde::Serialize;

use crate::analytic::{Bias, CoolingPlan};
use crate::circuit::sliced::{LaneBatch, LANES, MAX_TRACKED_LEVEL};
use crate::circuit::{apply_gate, Adjacency, Gate, GateCosts, GateKind, Register, Schedule, StepCounter};
use crate::compression::{count_level, emit_bcs};
use crate::{Error, Result};

/// Largest schedule the compiler will materialize.
pub const MAX_COMPILED_GATES: u64 = 40_000_000;

/// A point in the schedule where a truncation's purified length is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Probe {
    /// Number of gates executed before the sample is taken.
    pub after_gates: usize,
    pub truncation: usize,
    /// 1-based compression round inside the truncation's block.
    pub round: usize,
}

/// One logical CUT of the schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruncationSpec {
    /// Bias level the kept bits should carry.
    pub level: usize,
    pub mu: usize,
    /// Truncations feeding each round, in depth order. Empty at level 1.
    pub children: Vec<usize>,
}

/// A compiled cooling schedule and the bookkeeping needed to score runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledCooling {
    pub plan: CoolingPlan,
    /// Register size the schedule addresses exactly.
    pub n: usize,
    pub schedule: Schedule,
    /// Ordered by `after_gates`.
    pub probes: Vec<Probe>,
    /// In the order their CUTs happen.
    pub truncations: Vec<TruncationSpec>,
}

impl CompiledCooling {
    pub fn reset_count(&self) -> usize {
        self.schedule.count_kind(GateKind::Reset)
    }

    pub fn steps(&self) -> u64 {
        self.schedule.step_count(&GateCosts::default())
    }

    /// Positions holding the output bits.
    pub fn output_range(&self) -> Range<usize> {
        0..self.plan.m
    }
}

fn bcs_gate_count(m: usize, nu: usize, nu0: usize) -> u64 {
    let mut total = 0u64;
    for k in 0..m / 2 {
        let adjusted = nu + k;
        let gap = adjusted - nu0;
        let park = nu + m - k - 1;
        let sup = if gap > 0 { nu0 + 2 } else { adjusted + 1 };
        total += 1 + if gap > 0 { 2 * gap as u64 - 1 } else { 0 } + (park.saturating_sub(sup)) as u64;
    }
    total
}

/// Gate count of `M_j` without building it.
fn cooling_gate_count(m: usize, ell: usize, j: usize) -> u64 {
    if j == 0 {
        return 1;
    }
    let child = cooling_gate_count(m, ell, j - 1);
    (0..ell).fold(0u64, |acc, d| {
        acc.saturating_add(child)
            .saturating_add(bcs_gate_count(m, d * m / 2, 0))
    })
}

struct Compiler {
    m: usize,
    ell: usize,
    schedule: Schedule,
    gates: usize,
    probes: Vec<Probe>,
    truncations: Vec<TruncationSpec>,
}

impl Compiler {
    fn push(&mut self, g: Gate) {
        self.schedule.push(g);
        self.gates += 1;
    }

    /// Emits `M_j` at `mu`; returns its truncation id for `j > 0`.
    fn cooling(&mut self, j: usize, mu: usize) -> Option<usize> {
        if j == 0 {
            self.push(Gate::Reset { start: mu, len: self.m });
            return None;
        }
        let half = self.m / 2;
        let first_probe = self.probes.len();
        let mut children = Vec::new();
        for depth in 0..self.ell {
            let off = mu + depth * half;
            self.schedule.phase(format!("M{j} depth={depth} mu={mu}"));
            children.extend(self.cooling(j - 1, off));
            self.schedule.phase(format!("BCS {}->{j} nu={off} nu0={mu}", j - 1));
            let before = self.schedule.items().len();
            emit_bcs(&mut self.schedule, self.m, off, mu);
            self.gates += self.schedule.items().len() - before;
            self.probes.push(Probe {
                after_gates: self.gates,
                truncation: usize::MAX,
                round: depth + 1,
            });
        }
        self.schedule.phase(format!("CUT {j} mu={mu}"));
        let id = self.truncations.len();
        self.truncations.push(TruncationSpec { level: j, mu, children });
        // Children pushed their own probes in between; only ours are unset.
        for p in &mut self.probes[first_probe..] {
            if p.truncation == usize::MAX {
                p.truncation = id;
            }
        }
        Some(id)
    }
}

/// Compiles the full cooling schedule `M_{j_f}` at offset 0.
pub fn compile_cooling(plan: &CoolingPlan) -> Result<CompiledCooling> {
    let n = plan.required_input_bits()?;
    if plan.j_final > MAX_TRACKED_LEVEL as usize {
        return Err(Error::Compile(format!(
            "at most {MAX_TRACKED_LEVEL} purification rounds can be tracked, got {}",
            plan.j_final
        )));
    }
    let predicted = cooling_gate_count(plan.m, plan.ell, plan.j_final);
    if predicted > MAX_COMPILED_GATES {
        return Err(Error::Compile(format!(
            "schedule would hold {predicted} gates, limit is {MAX_COMPILED_GATES}"
        )));
    }
    let mut c = Compiler {
        m: plan.m,
        ell: plan.ell,
        schedule: Schedule::new(),
        gates: 0,
        probes: Vec::new(),
        truncations: Vec::new(),
    };
    c.cooling(plan.j_final, 0);
    debug_assert_eq!(c.gates as u64, predicted);
    Ok(CompiledCooling {
        plan: *plan,
        n,
        schedule: c.schedule,
        probes: c.probes,
        truncations: c.truncations,
    })
}

/// Checks that a register can host `compiled`.
pub fn check_register(r: &Register, compiled: &CompiledCooling) -> Result<()> {
    if r.len() < compiled.n {
        return Err(Error::Geometry(format!(
            "schedule needs {} bits, register has {}",
            compiled.n,
            r.len()
        )));
    }
    if !r.is_tracking() {
        return Err(Error::Geometry("provenance tracking is disabled".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruncationRecord {
    pub index: usize,
    pub level: usize,
    pub mu: usize,
    pub required: usize,
    /// Correctly purified bits in the written part of the block after each
    /// compression round.
    pub round_lengths: Vec<usize>,
    /// Correctly purified bits among the first `required` positions.
    pub length: usize,
    pub success: bool,
}

impl TruncationRecord {
    pub fn shortfall(&self) -> usize {
        self.required - self.length
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoolingRun {
    pub plan: CoolingPlan,
    pub truncation_log: Vec<TruncationRecord>,
    pub success: bool,
    pub output_bits: Vec<bool>,
    pub steps_used: u64,
}

fn empty_log(compiled: &CompiledCooling) -> Vec<TruncationRecord> {
    compiled
        .truncations
        .iter()
        .enumerate()
        .map(|(index, t)| TruncationRecord {
            index,
            level: t.level,
            mu: t.mu,
            required: compiled.plan.m,
            round_lengths: Vec::with_capacity(compiled.plan.ell),
            length: 0,
            success: false,
        })
        .collect()
}

fn finish_record(rec: &mut TruncationRecord) {
    rec.success = rec.length >= rec.required;
}

/// Runs `compiled` on one molecule, sampling every truncation.
pub fn run_cooling<R: Rng + ?Sized>(r: &mut Register, compiled: &CompiledCooling, rng: &mut R) -> Result<CoolingRun> {
    check_register(r, compiled)?;
    let mut log = empty_log(compiled);
    let half = compiled.plan.m / 2;
    let mut counter = StepCounter::new(GateCosts::default());
    let mut probes = compiled.probes.iter().peekable();
    for (i, g) in compiled.schedule.gates().enumerate() {
        apply_gate(r, g, &mut counter, Adjacency::default(), rng)?;
        while let Some(p) = probes.next_if(|p| p.after_gates == i + 1) {
            let spec = &compiled.truncations[p.truncation];
            let tags = r.provenance().expect("tracking checked");
            let level = spec.level as u8;
            let rec = &mut log[p.truncation];
            rec.round_lengths.push(count_level(tags, spec.mu..spec.mu + p.round * half, level));
            if p.round == compiled.plan.ell {
                rec.length = count_level(tags, spec.mu..spec.mu + rec.required, level);
            }
        }
    }
    log.iter_mut().for_each(finish_record);
    Ok(CoolingRun {
        plan: compiled.plan,
        success: log.iter().all(|t| t.success),
        truncation_log: log,
        output_bits: r.bits()[compiled.output_range()].to_vec(),
        steps_used: counter.steps(),
    })
}

/// `⟨𝓛⟩` after `k` compression rounds of blocks at bias `e_prev`.
pub fn expected_length_after_round(e_prev: Bias, m: usize, k: usize) -> f64 {
    assert!(k >= 1, "rounds are counted from 1");
    k as f64 * (1.0 + e_prev.epsilon().powi(2)) / 4.0 * m as f64
}

/// Per-lane results of one bit-sliced batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRun {
    pub lanes: usize,
    /// `round_lengths[t][k][lane]`.
    pub round_lengths: Vec<Vec<[u32; LANES]>>,
    /// `lengths[t][lane]`: purified bits among the first `m` of the block.
    pub lengths: Vec<[u32; LANES]>,
    /// Lanes meeting each truncation's requirement.
    pub truncation_success: Vec<u64>,
    pub success: u64,
    /// Output rows, one word per position.
    pub output: Vec<u64>,
}

fn lane_level_counts<R: Rng>(batch: &LaneBatch<R>, range: Range<usize>, level: u8) -> [u32; LANES] {
    let mut counts = [0u32; LANES];
    for i in range {
        let mut bits = batch.level_mask(i, level);
        while bits != 0 {
            counts[bits.trailing_zeros() as usize] += 1;
            bits &= bits - 1;
        }
    }
    counts
}

/// Runs `compiled` on up to 64 molecules at once, one stream per lane.
pub fn run_cooling_batch<R: Rng>(compiled: &CompiledCooling, rngs: Vec<R>) -> BatchRun {
    let plan = compiled.plan;
    let half = plan.m / 2;
    let mut batch = LaneBatch::new(compiled.n, plan.epsilon0, rngs);
    let mut round_lengths = vec![Vec::with_capacity(plan.ell); compiled.truncations.len()];
    let mut lengths = vec![[0u32; LANES]; compiled.truncations.len()];
    let mut probes = compiled.probes.iter().peekable();
    for (i, g) in compiled.schedule.gates().enumerate() {
        batch.apply(g);
        while let Some(p) = probes.next_if(|p| p.after_gates == i + 1) {
            let spec = &compiled.truncations[p.truncation];
            let level = spec.level as u8;
            round_lengths[p.truncation].push(lane_level_counts(&batch, spec.mu..spec.mu + p.round * half, level));
            if p.round == plan.ell {
                lengths[p.truncation] = lane_level_counts(&batch, spec.mu..spec.mu + plan.m, level);
            }
        }
    }
    let active = batch.active_mask();
    let truncation_success: Vec<u64> = lengths
        .iter()
        .map(|len| {
            (0..batch.lanes())
                .filter(|&lane| len[lane] as usize >= plan.m)
                .fold(0u64, |acc, lane| acc | 1 << lane)
        })
        .collect();
    let success = truncation_success.iter().fold(active, |acc, s| acc & s);
    let output = (0..plan.m)
        .map(|i| (0..batch.lanes()).fold(0u64, |acc, lane| acc | u64::from(batch.bit(i, lane)) << lane))
        .collect();
    BatchRun {
        lanes: batch.lanes(),
        round_lengths,
        lengths,
        truncation_success,
        success,
        output,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{truncation_count, DEFAULT_ELL};
    use crate::circuit::{new_register, validate_schedule, Instruction};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plan(eps: f64, m: usize, ell: usize, jf: usize) -> CoolingPlan {
        CoolingPlan::new(Bias::new(eps).unwrap(), m, ell, jf).unwrap()
    }

    fn stream(seed: u64, index: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(index);
        r
    }

    #[test]
    fn level_zero_is_one_reset() {
        let c = compile_cooling(&plan(0.1, 4, 5, 0)).unwrap();
        assert_eq!(c.schedule.to_text(), "RESET 0 4\n");
        assert!(c.truncations.is_empty());
        let mut rng = stream(3, 0);
        let mut r = new_register(c.n, plan(0.1, 4, 5, 0).epsilon0, &mut rng);
        let run = run_cooling(&mut r, &c, &mut rng).unwrap();
        assert!(run.success);
        assert_eq!(run.steps_used, 1);
    }

    #[test]
    fn one_level_unrolls_over_half_block_offsets() {
        let c = compile_cooling(&plan(0.1, 4, 4, 1)).unwrap();
        let resets: Vec<_> = c
            .schedule
            .gates()
            .filter_map(|g| match *g {
                Gate::Reset { start, len } => Some((start, len)),
                _ => None,
            })
            .collect();
        assert_eq!(resets, vec![(0, 4), (2, 4), (4, 4), (6, 4)]);
        let phases: Vec<_> = c.schedule.phases().filter(|p| p.starts_with("BCS")).collect();
        assert_eq!(
            phases,
            vec!["BCS 0->1 nu=0 nu0=0", "BCS 0->1 nu=2 nu0=0", "BCS 0->1 nu=4 nu0=0", "BCS 0->1 nu=6 nu0=0"]
        );
        // each reset is immediately followed by its block's compression
        let mut expect_reset = true;
        for item in c.schedule.items() {
            if let Instruction::Gate(g) = item {
                if expect_reset {
                    assert_eq!(g.kind(), GateKind::Reset);
                    expect_reset = false;
                } else if g.kind() == GateKind::Reset {
                    panic!("two resets without compression");
                }
            } else if let Instruction::Phase(p) = item {
                if p.starts_with("M1") {
                    expect_reset = true;
                }
            }
        }
        assert_eq!(c.n, 10);
        assert_eq!(c.schedule.max_index(), Some(9));
    }

    #[test]
    fn resets_space_and_steps_across_grid() {
        for m in [4, 8, 20] {
            for ell in [4, 5, 6] {
                for jf in [1, 2, 3] {
                    let p = plan(0.1, m, ell, jf);
                    let c = compile_cooling(&p).unwrap();
                    assert_eq!(c.reset_count(), ell.pow(jf as u32), "{m} {ell} {jf}");
                    assert_eq!(c.schedule.max_index(), Some(p.required_input_bits().unwrap() - 1));
                    assert!(c.steps() <= p.step_bound().unwrap(), "{m} {ell} {jf}: {}", c.steps());
                    assert_eq!(c.truncations.len() as u64, truncation_count(ell, jf).unwrap());
                    assert_eq!(c.probes.len(), c.truncations.len() * ell);
                    assert!(validate_schedule(&c.schedule, c.n, Adjacency::default()).is_ok());
                }
            }
        }
    }

    #[test]
    fn gate_count_prediction_is_exact() {
        for (m, ell, jf) in [(2, 4, 1), (6, 5, 2), (20, 5, 3), (8, 6, 1)] {
            let c = compile_cooling(&plan(0.2, m, ell, jf)).unwrap();
            assert_eq!(c.schedule.gate_count() as u64, cooling_gate_count(m, ell, jf));
        }
    }

    #[test]
    fn first_child_block_matches_lower_level() {
        for (m, ell, jf) in [(4, 4, 2), (8, 5, 2), (4, 5, 3)] {
            let high = compile_cooling(&plan(0.1, m, ell, jf)).unwrap();
            let low = compile_cooling(&plan(0.1, m, ell, jf - 1)).unwrap();
            let low_gates: Vec<_> = low.schedule.gates().collect();
            let prefix: Vec<_> = high.schedule.gates().take(low_gates.len()).collect();
            assert_eq!(prefix, low_gates);
            // the next gate starts the first compression of the top level
            let next = high.schedule.gates().nth(low_gates.len()).unwrap();
            assert_eq!(*next, Gate::Cnot { control: 0, target: 1 });
        }
    }

    #[test]
    fn truncations_follow_cut_order() {
        let c = compile_cooling(&plan(0.1, 4, 5, 3)).unwrap();
        assert_eq!(c.truncations.len(), 31);
        assert_eq!(c.reset_count(), 125);
        let top = c.truncations.last().unwrap();
        assert_eq!((top.level, top.mu, top.children.len()), (3, 0, 5));
        for (id, t) in c.truncations.iter().enumerate() {
            assert!(t.children.iter().all(|&ch| ch < id));
            let expected = if t.level == 1 { 0 } else { 5 };
            assert_eq!(t.children.len(), expected);
        }
        assert!(c.probes.windows(2).all(|w| w[0].after_gates <= w[1].after_gates));
        let cuts = c.schedule.phases().filter(|p| p.starts_with("CUT")).count();
        assert_eq!(cuts, 31);
    }

    #[test]
    fn pure_input_always_succeeds() {
        let p = plan(1.0, 8, DEFAULT_ELL, 2);
        let c = compile_cooling(&p).unwrap();
        let mut rng = stream(1, 0);
        let mut r = new_register(c.n, p.epsilon0, &mut rng);
        let run = run_cooling(&mut r, &c, &mut rng).unwrap();
        assert!(run.success);
        assert!(run.output_bits.iter().all(|&b| !b));
        assert_eq!(run.truncation_log.len(), 6);
        for t in &run.truncation_log {
            let expected: Vec<usize> = (1..=DEFAULT_ELL).map(|k| k * 4).collect();
            assert_eq!(t.round_lengths, expected);
            assert_eq!(t.length, 8);
        }
        assert_eq!(run.steps_used, c.steps());
    }

    #[test]
    fn success_flag_recomputes_from_log() {
        let p = plan(0.3, 8, 4, 2);
        let c = compile_cooling(&p).unwrap();
        let mut seen = [false; 2];
        for i in 0..200 {
            let mut rng = stream(11, i);
            let mut r = new_register(c.n, p.epsilon0, &mut rng);
            let run = run_cooling(&mut r, &c, &mut rng).unwrap();
            assert_eq!(run.success, run.truncation_log.iter().all(|t| t.length >= t.required));
            assert!(run.truncation_log.iter().all(|t| t.round_lengths.len() == 4));
            seen[usize::from(run.success)] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn geometry_errors() {
        let p = plan(0.1, 4, 4, 1);
        let c = compile_cooling(&p).unwrap();
        let mut rng = stream(0, 0);
        let mut small = new_register(c.n - 1, p.epsilon0, &mut rng);
        assert!(matches!(run_cooling(&mut small, &c, &mut rng), Err(Error::Geometry(_))));
        let mut untracked = new_register(c.n, p.epsilon0, &mut rng);
        untracked.disable_tracking();
        assert!(matches!(run_cooling(&mut untracked, &c, &mut rng), Err(Error::Geometry(_))));
        assert!(matches!(compile_cooling(&plan(0.01, 50, 5, 7)), Err(Error::Compile(_))));
        assert!(matches!(compile_cooling(&plan(0.5, 2, 4, 16)), Err(Error::Compile(_))));
    }

    #[test]
    fn batch_lanes_match_scalar_runs() {
        let p = plan(0.2, 8, 5, 2);
        let c = compile_cooling(&p).unwrap();
        let lanes = 37;
        let batch = run_cooling_batch(&c, (0..lanes).map(|k| stream(99, k)).collect());
        for lane in 0..lanes as usize {
            let mut rng = stream(99, lane as u64);
            let mut r = new_register(c.n, p.epsilon0, &mut rng);
            let run = run_cooling(&mut r, &c, &mut rng).unwrap();
            assert_eq!(run.success, (batch.success >> lane) & 1 == 1);
            for (t, rec) in run.truncation_log.iter().enumerate() {
                let lens: Vec<usize> = batch.round_lengths[t].iter().map(|r| r[lane] as usize).collect();
                assert_eq!(lens, rec.round_lengths);
                assert_eq!(batch.lengths[t][lane] as usize, rec.length);
                assert_eq!(rec.success, (batch.truncation_success[t] >> lane) & 1 == 1);
            }
            let out: Vec<bool> = batch.output.iter().map(|w| (w >> lane) & 1 == 1).collect();
            assert_eq!(out, run.output_bits);
        }
    }

    #[test]
    fn expected_lengths() {
        assert_eq!(expected_length_after_round(Bias::ZERO, 20, 4), 20.0);
        approx::assert_relative_eq!(
            expected_length_after_round(Bias::new(0.1).unwrap(), 50, 5),
            63.125,
            epsilon = 1e-12
        );
        assert_eq!(expected_length_after_round(Bias::ONE, 30, 2), 30.0);
    }
}

//! Seeded Monte Carlo over many molecules sharing one pulse sequence.
//!
//! Molecule `i` of a run seeded with `s` draws from ChaCha8 seeded with `s`
//! on stream `i`, so every molecule's randomness is fixed by `(s, i)` alone.
//! Molecules are processed 64 at a time on a bit-sliced register and the
//! per-batch tallies are plain integer sums, so the result does not depend on
//! how batches are spread over threads.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{expected_keep_fraction, Bias, CoolingPlan};
use crate::circuit::sliced::LANES;
use crate::circuit::{new_register, Register};
use crate::cooling::{compile_cooling, expected_length_after_round, run_cooling_batch, BatchRun, CompiledCooling};
use crate::{Error, Result};

/// Random stream of molecule `index` in a run seeded with `seed`.
pub fn molecule_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Thermal molecule of `n` columns drawn from the stream of `(seed, index)`.
pub fn sample_molecule(n: usize, epsilon0: Bias, seed: u64, index: u64) -> Register {
    new_register(n, epsilon0, &mut molecule_stream(seed, index))
}

#[derive(Debug, Clone, PartialEq)]
struct Tally {
    molecules: u64,
    zeros: Vec<u64>,
    success: u64,
    success_zeros: Vec<u64>,
    length_sum: Vec<u64>,
    truncation_success: Vec<u64>,
    /// Per truncation and round: molecules whose inputs all succeeded, and
    /// the sum of their lengths.
    cond_count: Vec<Vec<u64>>,
    cond_sum: Vec<Vec<u64>>,
    shortfall: BTreeMap<usize, u64>,
}

impl Tally {
    fn zero(compiled: &CompiledCooling) -> Self {
        let m = compiled.plan.m;
        let t = compiled.truncations.len();
        let ell = compiled.plan.ell;
        Tally {
            molecules: 0,
            zeros: vec![0; m],
            success: 0,
            success_zeros: vec![0; m],
            length_sum: vec![0; t],
            truncation_success: vec![0; t],
            cond_count: vec![vec![0; ell]; t],
            cond_sum: vec![vec![0; ell]; t],
            shortfall: BTreeMap::new(),
        }
    }

    fn from_batch(compiled: &CompiledCooling, run: &BatchRun) -> Self {
        let mut t = Tally::zero(compiled);
        let active = if run.lanes == LANES { !0 } else { (1u64 << run.lanes) - 1 };
        let m = compiled.plan.m;
        t.molecules = run.lanes as u64;
        t.success = u64::from(run.success.count_ones());
        for (i, word) in run.output.iter().enumerate() {
            t.zeros[i] = u64::from((!word & active).count_ones());
            t.success_zeros[i] = u64::from((!word & run.success).count_ones());
        }
        for (idx, spec) in compiled.truncations.iter().enumerate() {
            t.truncation_success[idx] = u64::from(run.truncation_success[idx].count_ones());
            let lengths = &run.lengths[idx];
            for &len in &lengths[..run.lanes] {
                t.length_sum[idx] += u64::from(len);
                *t.shortfall.entry(m - len as usize).or_default() += 1;
            }
            let mut inputs_ok = active;
            for (k, counts) in run.round_lengths[idx].iter().enumerate() {
                if let Some(&child) = spec.children.get(k) {
                    inputs_ok &= run.truncation_success[child];
                }
                t.cond_count[idx][k] = u64::from(inputs_ok.count_ones());
                t.cond_sum[idx][k] = (0..run.lanes)
                    .filter(|&lane| (inputs_ok >> lane) & 1 == 1)
                    .map(|lane| u64::from(counts[lane]))
                    .sum();
            }
        }
        t
    }

    fn merge(mut self, other: Tally) -> Self {
        fn add(a: &mut [u64], b: &[u64]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.molecules += other.molecules;
        self.success += other.success;
        add(&mut self.zeros, &other.zeros);
        add(&mut self.success_zeros, &other.success_zeros);
        add(&mut self.length_sum, &other.length_sum);
        add(&mut self.truncation_success, &other.truncation_success);
        for (a, b) in self.cond_count.iter_mut().zip(&other.cond_count) {
            add(a, b);
        }
        for (a, b) in self.cond_sum.iter_mut().zip(&other.cond_sum) {
            add(a, b);
        }
        for (k, v) in other.shortfall {
            *self.shortfall.entry(k).or_default() += v;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundStats {
    pub round: usize,
    /// Molecules whose inputs to this round all met their requirement.
    pub conditioned_count: u64,
    pub conditioned_sum: u64,
    pub mean_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationStats {
    pub index: usize,
    pub level: usize,
    pub mu: usize,
    pub success_count: u64,
    pub mean_length: f64,
    pub rounds: Vec<RoundStats>,
}

/// Output statistics restricted to molecules whose every truncation succeeded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionedBias {
    pub per_position_zero_freq: Vec<f64>,
    pub per_position_bias: Vec<f64>,
    pub pooled_bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub num_molecules: u64,
    pub seed: u64,
    pub plan: CoolingPlan,
    pub per_position_zero_freq: Vec<f64>,
    pub empirical_bias: Vec<f64>,
    pub pooled_bias: f64,
    pub success_count: u64,
    pub success_rate: f64,
    pub success_conditioned: Option<ConditionedBias>,
    /// `m − 𝓛` over every truncation of every molecule.
    pub truncation_shortfall_histogram: BTreeMap<usize, u64>,
    /// Mean `𝓛` per truncation, over all molecules.
    pub mean_purified_lengths: Vec<f64>,
    pub truncations: Vec<TruncationStats>,
}

fn bias_of(zero_freq: f64) -> f64 {
    2.0 * zero_freq - 1.0
}

impl EnsembleStats {
    fn from_tally(compiled: &CompiledCooling, seed: u64, t: Tally) -> Self {
        let n = t.molecules as f64;
        let m = compiled.plan.m;
        let freq: Vec<f64> = t.zeros.iter().map(|&z| z as f64 / n).collect();
        let pooled = bias_of(t.zeros.iter().sum::<u64>() as f64 / (n * m as f64));
        let success_conditioned = (t.success > 0).then(|| {
            let s = t.success as f64;
            let f: Vec<f64> = t.success_zeros.iter().map(|&z| z as f64 / s).collect();
            ConditionedBias {
                per_position_bias: f.iter().map(|&x| bias_of(x)).collect(),
                per_position_zero_freq: f,
                pooled_bias: bias_of(t.success_zeros.iter().sum::<u64>() as f64 / (s * m as f64)),
            }
        });
        let mean_purified_lengths: Vec<f64> = t.length_sum.iter().map(|&s| s as f64 / n).collect();
        let truncations = compiled
            .truncations
            .iter()
            .enumerate()
            .map(|(idx, spec)| TruncationStats {
                index: idx,
                level: spec.level,
                mu: spec.mu,
                success_count: t.truncation_success[idx],
                mean_length: mean_purified_lengths[idx],
                rounds: (0..compiled.plan.ell)
                    .map(|k| {
                        let count = t.cond_count[idx][k];
                        let sum = t.cond_sum[idx][k];
                        RoundStats {
                            round: k + 1,
                            conditioned_count: count,
                            conditioned_sum: sum,
                            mean_length: (count > 0).then(|| sum as f64 / count as f64),
                        }
                    })
                    .collect(),
            })
            .collect();
        EnsembleStats {
            num_molecules: t.molecules,
            seed,
            plan: compiled.plan,
            empirical_bias: freq.iter().map(|&x| bias_of(x)).collect(),
            per_position_zero_freq: freq,
            pooled_bias: pooled,
            success_count: t.success,
            success_rate: t.success as f64 / n,
            success_conditioned,
            truncation_shortfall_histogram: t.shortfall,
            mean_purified_lengths,
            truncations,
        }
    }
}

/// Compiles `plan` and runs `num_molecules` molecules on the global pool.
pub fn run_ensemble(plan: &CoolingPlan, num_molecules: u64, seed: u64) -> Result<EnsembleStats> {
    let compiled = compile_cooling(plan)?;
    simulate(&compiled, num_molecules, seed, None)
}

/// Runs an already compiled schedule. `threads = None` uses the global pool;
/// the result is the same for any thread count.
pub fn simulate(
    compiled: &CompiledCooling,
    num_molecules: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<EnsembleStats> {
    if num_molecules == 0 {
        return Err(Error::InvalidArgument("at least one molecule is required".into()));
    }
    let batches = num_molecules.div_ceil(LANES as u64);
    let work = || {
        (0..batches)
            .into_par_iter()
            .map(|b| {
                let first = b * LANES as u64;
                let last = (first + LANES as u64).min(num_molecules);
                let streams = (first..last).map(|i| molecule_stream(seed, i)).collect();
                Tally::from_batch(compiled, &run_cooling_batch(compiled, streams))
            })
            .reduce(|| Tally::zero(compiled), Tally::merge)
    };
    let tally = match threads {
        None => work(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work),
    };
    Ok(EnsembleStats::from_tally(compiled, seed, tally))
}

/// Standard score of an observed value; zero spread scores exact agreement as
/// 0 and anything else as infinite.
fn z_score(observed: f64, expected: f64, sigma: f64) -> f64 {
    let diff = observed - expected;
    if sigma > 0.0 {
        diff / sigma
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasDeviation {
    pub expected: f64,
    pub pooled_observed: f64,
    pub pooled_sigma: f64,
    pub pooled_z: f64,
    pub per_position_z: Vec<f64>,
    pub max_abs_position_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessDeviation {
    pub observed_rate: f64,
    pub lower_bound: f64,
    pub vacuous: bool,
    pub sigma: f64,
    pub z: f64,
    /// Not significantly below the bound at 4σ, one-sided.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthDeviation {
    pub level: usize,
    pub round: usize,
    pub samples: u64,
    pub observed_mean: f64,
    pub expected_mean: f64,
    pub sigma: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    /// Against the final scheduled bias, successful molecules only. Absent
    /// when no molecule succeeded.
    pub bias: Option<BiasDeviation>,
    pub success: SuccessDeviation,
    pub lengths: Vec<LengthDeviation>,
}

impl DeviationReport {
    pub fn max_abs_length_z(&self) -> f64 {
        self.lengths.iter().map(|l| l.z.abs()).fold(0.0, f64::max)
    }

    /// Every score within `k` standard deviations and the success rate
    /// consistent with its bound.
    pub fn within(&self, k: f64) -> bool {
        let bias_ok = self
            .bias
            .as_ref()
            .is_none_or(|b| b.pooled_z.abs() <= k && b.max_abs_position_z <= k);
        bias_ok && self.success.consistent && self.max_abs_length_z() <= k
    }
}

/// Compares ensemble statistics with the closed-form predictions for `plan`.
pub fn compare_to_analytic(stats: &EnsembleStats, plan: &CoolingPlan) -> Result<DeviationReport> {
    let schedule = plan.bias_schedule();
    let target = *schedule.last().expect("non-empty");
    let p = target.zero_probability();
    let m = plan.m as f64;

    let bias = stats.success_conditioned.as_ref().map(|c| {
        let s = stats.success_count as f64;
        let sigma_pos = 2.0 * (p * (1.0 - p) / s).sqrt();
        let sigma_pooled = 2.0 * (p * (1.0 - p) / (s * m)).sqrt();
        let per_position_z: Vec<f64> = c
            .per_position_bias
            .iter()
            .map(|&b| z_score(b, target.epsilon(), sigma_pos))
            .collect();
        BiasDeviation {
            expected: target.epsilon(),
            pooled_observed: c.pooled_bias,
            pooled_sigma: sigma_pooled,
            pooled_z: z_score(c.pooled_bias, target.epsilon(), sigma_pooled),
            max_abs_position_z: per_position_z.iter().map(|z| z.abs()).fold(0.0, f64::max),
            per_position_z,
        }
    });

    let bound = plan.success_lower_bound()?;
    let n = stats.num_molecules as f64;
    let b = bound.probability;
    let sigma = (b * (1.0 - b) / n).sqrt();
    let z = z_score(stats.success_rate, b, sigma);
    let success = SuccessDeviation {
        observed_rate: stats.success_rate,
        lower_bound: b,
        vacuous: bound.vacuous,
        sigma,
        z,
        consistent: z >= -4.0,
    };

    // Pool truncations of the same level: their inputs are disjoint draws.
    let mut pooled: BTreeMap<(usize, usize), (u64, u64)> = BTreeMap::new();
    for t in &stats.truncations {
        for r in &t.rounds {
            let e = pooled.entry((t.level, r.round)).or_default();
            e.0 += r.conditioned_count;
            e.1 += r.conditioned_sum;
        }
    }
    let lengths = pooled
        .into_iter()
        .filter(|(_, (count, _))| *count > 0)
        .map(|((level, round), (count, sum))| {
            let e_prev = schedule[level - 1];
            let q = expected_keep_fraction(e_prev) * 2.0;
            let pairs = (round * plan.m / 2) as f64;
            let sigma = (pairs * q * (1.0 - q) / count as f64).sqrt();
            let expected = expected_length_after_round(e_prev, plan.m, round);
            let observed = sum as f64 / count as f64;
            LengthDeviation {
                level,
                round,
                samples: count,
                observed_mean: observed,
                expected_mean: expected,
                sigma,
                z: z_score(observed, expected, sigma),
            }
        })
        .collect();

    Ok(DeviationReport { bias, success, lengths })
}

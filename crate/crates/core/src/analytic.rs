//! Closed-form quantities of heat-bath algorithmic cooling.
//!
//! Everything here is a pure function of its inputs. The central scalar is
//! the polarization [`Bias`] `ε`: a bit reads `0` with probability
//! `(1 + ε) / 2`, and `δ = (1 − ε) / 2` is its error probability.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Signals below this are marked "unfeasible" in the feasibility table.
pub const UNFEASIBLE_THRESHOLD: f64 = 1e-12;

/// `min_rounds` gives up after this many compression rounds.
pub const MAX_ROUNDS: usize = 64;

/// Default cooling depth.
pub const DEFAULT_ELL: usize = 5;

/// Initial biases and round counts of the feasibility table grid.
pub const TABLE_GRID: [(f64, [usize; 3]); 2] = [(0.1, [0, 3, 4]), (0.01, [0, 6, 7])];

/// Register sizes reported by the feasibility table.
pub const TABLE_SIZES: [usize; 3] = [20, 50, 200];

/// Polarization bias of a single spin, `0 ≤ ε ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Bias(f64);

impl Bias {
    pub const ZERO: Bias = Bias(0.0);
    pub const ONE: Bias = Bias(1.0);

    pub fn new(epsilon: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&epsilon) {
            Ok(Bias(epsilon))
        } else {
            Err(Error::InvalidBias(epsilon))
        }
    }

    /// Bias whose error probability is `delta`.
    pub fn from_delta(delta: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&delta) {
            return Err(Error::InvalidProbability(delta));
        }
        Bias::new(1.0 - 2.0 * delta)
    }

    #[inline]
    pub fn epsilon(self) -> f64 {
        self.0
    }

    /// Error probability `(1 − ε) / 2`, the probability of reading `1`.
    #[inline]
    pub fn delta(self) -> f64 {
        (1.0 - self.0) / 2.0
    }

    /// Probability of reading `0`.
    #[inline]
    pub fn zero_probability(self) -> f64 {
        (1.0 + self.0) / 2.0
    }
}

impl TryFrom<f64> for Bias {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Bias::new(value)
    }
}

impl From<Bias> for f64 {
    fn from(b: Bias) -> f64 {
        b.0
    }
}

impl fmt::Display for Bias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Binary entropy `H(P)` in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// Bias of the kept bit after one pairwise compression: `2ε / (1 + ε²)`.
pub fn next_bias(e: Bias) -> Bias {
    let eps = e.epsilon();
    // 2ε ≤ 1 + ε² always; the clamp only absorbs rounding at ε ≈ 1.
    Bias((2.0 * eps / (1.0 + eps * eps)).min(1.0))
}

/// `[ε₀, ε₁, …, ε_{j_final}]`.
pub fn bias_schedule(epsilon0: Bias, j_final: usize) -> Vec<Bias> {
    std::iter::successors(Some(epsilon0), |&e| Some(next_bias(e)))
        .take(j_final + 1)
        .collect()
}

/// Smallest number of compression rounds lifting `epsilon0` to at least
/// `epsilon_des`.
pub fn min_rounds(epsilon0: Bias, epsilon_des: f64) -> Result<usize> {
    let start = epsilon0.epsilon();
    if !(start > 0.0 && start < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "initial bias must lie strictly between 0 and 1, got {start}"
        )));
    }
    let unreachable = Error::UnreachableTarget {
        start,
        target: epsilon_des,
        max_rounds: MAX_ROUNDS,
    };
    if epsilon_des >= 1.0 || epsilon_des.is_nan() {
        return Err(unreachable);
    }
    let mut e = epsilon0;
    for j in 0..=MAX_ROUNDS {
        if e.epsilon() >= epsilon_des {
            return Ok(j);
        }
        e = next_bias(e);
    }
    Err(unreachable)
}

/// Expected fraction of input bits that survive one compression as
/// purified bits: `(1 + ε²) / 4`.
pub fn expected_keep_fraction(e: Bias) -> f64 {
    (1.0 + e.epsilon() * e.epsilon()) / 4.0
}

/// Entropy-preserving upper bound on the number of purified bits extractable
/// from `n` bits at bias `epsilon0`: `n · (1 − H(1/2 + ε₀/2))`.
pub fn shannon_yield(n: usize, epsilon0: Bias) -> f64 {
    let h = binary_entropy(epsilon0.zero_probability()).expect("zero probability lies in [0, 1]");
    n as f64 * (1.0 - h)
}

/// Expected purified-bit count after `j_final` reset-free compression rounds
/// starting from `n0` bits: `n₀ · Π_{j < j_final} (1 + ε_j²) / 4`.
pub fn bcs_cascade_yield(n0: usize, epsilon0: Bias, j_final: usize) -> f64 {
    bias_schedule(epsilon0, j_final)
        .iter()
        .take(j_final)
        .fold(n0 as f64, |n, &e| n * expected_keep_fraction(e))
}

/// Weight of the pure state in the `n`-spin pseudo-pure state:
/// `((1 + ε)^n − 1) / (2^n − 1)`.
///
/// Evaluated in log space as
/// `exp(a − b) · expm1(−a) / expm1(−b)` with `a = n·ln(1 + ε)` and
/// `b = n·ln 2`, so it neither overflows nor cancels for large `n`.
pub fn pps_signal(e: Bias, n: usize) -> f64 {
    assert!(n >= 1, "pseudo-pure state needs at least one spin");
    let a = n as f64 * e.epsilon().ln_1p();
    let b = n as f64 * std::f64::consts::LN_2;
    if a == b {
        return 1.0;
    }
    ((a - b).exp() * (-a).exp_m1() / (-b).exp_m1()).clamp(0.0, 1.0)
}

/// The `(1 − δ)^n` scaling form of the signal.
pub fn pps_signal_from_error(delta: f64, n: usize) -> f64 {
    (n as f64 * (-delta).ln_1p()).exp()
}

/// Pseudo-pure state as `pure_weight·|0…0⟩⟨0…0| + mixed_weight·I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpsDecomposition {
    pub pure_weight: f64,
    pub mixed_weight: f64,
}

pub fn pps_decompose(e: Bias, n: usize) -> PpsDecomposition {
    let p = pps_signal(e, n);
    PpsDecomposition {
        pure_weight: p,
        mixed_weight: 1.0 - p,
    }
}

/// Parameters of a full cooling run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingPlan {
    pub epsilon0: Bias,
    /// Output bits; blocks of this size are compressed.
    pub m: usize,
    /// Cooling depth: repetitions of `M_{j-1}` + compression per level.
    pub ell: usize,
    pub j_final: usize,
}

impl CoolingPlan {
    pub fn new(epsilon0: Bias, m: usize, ell: usize, j_final: usize) -> Result<Self> {
        if m == 0 || m % 2 != 0 {
            return Err(Error::InvalidPlan(format!("m must be even and positive, got {m}")));
        }
        if ell < 4 {
            return Err(Error::InvalidPlan(format!("cooling depth must be at least 4, got {ell}")));
        }
        Ok(CoolingPlan {
            epsilon0,
            m,
            ell,
            j_final,
        })
    }

    pub fn bias_schedule(&self) -> Vec<Bias> {
        bias_schedule(self.epsilon0, self.j_final)
    }

    pub fn final_bias(&self) -> Bias {
        *self.bias_schedule().last().expect("schedule is never empty")
    }

    pub fn required_input_bits(&self) -> Result<usize> {
        required_input_bits(self)
    }

    pub fn step_bound(&self) -> Result<u64> {
        step_bound(self)
    }

    pub fn success_lower_bound(&self) -> Result<SuccessBound> {
        success_lower_bound(self)
    }

    /// At depth 4 the Chernoff exponent vanishes and the success bound says nothing.
    pub fn vacuous_success_bound(&self) -> bool {
        self.ell <= 4 && self.j_final > 0
    }

    pub fn summary(&self) -> Result<PlanSummary> {
        let schedule = self.bias_schedule();
        let final_bias = *schedule.last().expect("schedule is never empty");
        Ok(PlanSummary {
            epsilon0: self.epsilon0.epsilon(),
            m: self.m,
            ell: self.ell,
            j_final: self.j_final,
            bias_schedule: schedule.iter().map(|b| b.epsilon()).collect(),
            epsilon_final: final_bias.epsilon(),
            delta_final: final_bias.delta(),
            n_required: self.required_input_bits()?,
            step_bound: self.step_bound()?,
            truncation_count: truncation_count(self.ell, self.j_final)?,
            success_lower_bound: self.success_lower_bound()?,
            shannon_yield: shannon_yield(self.required_input_bits()?, self.epsilon0),
            pps_signal: pps_signal(final_bias, self.m),
        })
    }
}

/// Derived quantities of a [`CoolingPlan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub epsilon0: f64,
    pub m: usize,
    pub ell: usize,
    pub j_final: usize,
    pub bias_schedule: Vec<f64>,
    pub epsilon_final: f64,
    pub delta_final: f64,
    pub n_required: usize,
    pub step_bound: u64,
    pub truncation_count: u64,
    pub success_lower_bound: SuccessBound,
    pub shannon_yield: f64,
    pub pps_signal: f64,
}

/// `N_{j_f} = ((ℓ − 1)/2 · j_f + 1) · m`.
pub fn required_input_bits(plan: &CoolingPlan) -> Result<usize> {
    let overflow = || Error::Overflow("required input bits");
    // m is even, so (ℓ − 1)·m/2 is an integer.
    let per_round = (plan.ell - 1).checked_mul(plan.m / 2).ok_or_else(overflow)?;
    per_round
        .checked_mul(plan.j_final)
        .and_then(|x| x.checked_add(plan.m))
        .ok_or_else(overflow)
}

/// Upper bound `m² · ℓ^{j_f + 1}` on the number of time steps.
pub fn step_bound(plan: &CoolingPlan) -> Result<u64> {
    let overflow = || Error::Overflow("step bound");
    let m = u64::try_from(plan.m).map_err(|_| overflow())?;
    let ell = u64::try_from(plan.ell).map_err(|_| overflow())?;
    let exp = u32::try_from(plan.j_final + 1).map_err(|_| overflow())?;
    m.checked_mul(m)
        .and_then(|m2| ell.checked_pow(exp).and_then(|p| m2.checked_mul(p)))
        .ok_or_else(overflow)
}

/// Number of truncations whose joint success the conservative bound demands:
/// `C_{j_f} = (ℓ^{j_f} − 1)/(ℓ − 1)`. Zero when `j_final = 0`.
pub fn truncation_count(ell: usize, j_final: usize) -> Result<u64> {
    if ell < 2 {
        return Err(Error::InvalidArgument(format!("cooling depth must be at least 2, got {ell}")));
    }
    let ell = ell as u64;
    let mut total = 0u64;
    let mut power = 1u64;
    for k in 0..j_final {
        total = total.checked_add(power).ok_or(Error::Overflow("truncation count"))?;
        if k + 1 < j_final {
            power = power.checked_mul(ell).ok_or(Error::Overflow("truncation count"))?;
        }
    }
    Ok(total)
}

/// A probability bound that may be vacuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffBound {
    pub probability: f64,
    pub vacuous: bool,
}

/// Bound `exp(−(ℓ − 4)² m / (8ℓ))` on the probability that one truncation
/// ends with fewer than `m` purified bits.
pub fn chernoff_failure(ell: usize, m: usize) -> ChernoffBound {
    if ell <= 4 {
        return ChernoffBound {
            probability: 1.0,
            vacuous: true,
        };
    }
    let l = ell as f64;
    ChernoffBound {
        probability: (-(l - 4.0).powi(2) * m as f64 / (8.0 * l)).exp(),
        vacuous: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessBound {
    pub probability: f64,
    pub vacuous: bool,
}

/// `(1 − chernoff_failure(ℓ, m))^{C_{j_f}}`.
pub fn success_lower_bound(plan: &CoolingPlan) -> Result<SuccessBound> {
    let truncations = truncation_count(plan.ell, plan.j_final)?;
    if truncations == 0 {
        return Ok(SuccessBound {
            probability: 1.0,
            vacuous: false,
        });
    }
    let failure = chernoff_failure(plan.ell, plan.m);
    if failure.vacuous {
        return Ok(SuccessBound {
            probability: 0.0,
            vacuous: true,
        });
    }
    Ok(SuccessBound {
        probability: (truncations as f64 * (-failure.probability).ln_1p()).exp(),
        vacuous: false,
    })
}

/// Signal of an `m`-bit register in the feasibility table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalCell {
    pub m: usize,
    pub p: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityRow {
    pub epsilon0: f64,
    pub j_final: usize,
    pub epsilon_final: f64,
    pub delta_final: f64,
    pub p_for_m: Vec<SignalCell>,
}

/// Feasibility grid: for each `(ε₀, j_f)` the final bias, its error
/// probability and the signal `(1 − δ_f)^m` for `m ∈ {20, 50, 200}`, with
/// cells below `threshold` marked unfeasible.
pub fn feasibility_table(threshold: f64) -> Vec<FeasibilityRow> {
    TABLE_GRID
        .iter()
        .flat_map(|&(eps0, rounds)| rounds.into_iter().map(move |j| (eps0, j)))
        .map(|(eps0, j_final)| {
            let final_bias = *bias_schedule(Bias(eps0), j_final).last().expect("non-empty");
            let delta = final_bias.delta();
            FeasibilityRow {
                epsilon0: eps0,
                j_final,
                epsilon_final: final_bias.epsilon(),
                delta_final: delta,
                p_for_m: TABLE_SIZES
                    .iter()
                    .map(|&m| {
                        let p = pps_signal_from_error(delta, m);
                        SignalCell {
                            m,
                            p,
                            feasible: p >= threshold,
                        }
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Rounds `x` to `digits` significant figures.
pub fn round_to_sig_figs(x: f64, digits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits as i32 - 1 - magnitude);
    (x * scale).round() / scale
}

/// The three time scales of a physical implementation, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    pub t_switch: f64,
    pub t_rrtr: f64,
    pub t_comput: f64,
    /// How much smaller "much smaller than" has to be.
    pub margin: f64,
}

impl TimingModel {
    pub const DEFAULT_MARGIN: f64 = 1.0;

    pub fn new(t_switch: f64, t_rrtr: f64, t_comput: f64, margin: f64) -> Result<Self> {
        for (name, v) in [("t_switch", t_switch), ("t_rrtr", t_rrtr), ("t_comput", t_comput)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(margin >= 1.0 && margin.is_finite()) {
            return Err(Error::InvalidArgument(format!("margin must be at least 1, got {margin}")));
        }
        Ok(TimingModel {
            t_switch,
            t_rrtr,
            t_comput,
            margin,
        })
    }
}

/// One `lhs ≤ rhs` timing requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingCheck {
    pub name: String,
    pub description: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub timing: TimingModel,
    pub step_bound: u64,
    pub checks: Vec<TimingCheck>,
    pub all_pass: bool,
}

/// Checks that the cooling run can complete before the computation bits
/// relax, that reset bits re-thermalize between uses, and the implied ratio
/// of the two relaxation times.
pub fn timing_feasibility(t: &TimingModel, plan: &CoolingPlan) -> Result<TimingReport> {
    let steps = step_bound(plan)?;
    let m2 = (plan.m as f64).powi(2);
    let check = |name: &str, description: String, lhs: f64, rhs: f64| TimingCheck {
        name: name.to_string(),
        description,
        lhs,
        rhs,
        pass: lhs <= rhs,
    };
    let resets_per_run = steps as f64 / m2;
    let checks = vec![
        check(
            "completion",
            format!("{steps} steps x t_switch x margin <= t_comput"),
            steps as f64 * t.t_switch * t.margin,
            t.t_comput,
        ),
        check(
            "rrtr_ready",
            format!("t_rrtr x margin <= {} x t_switch", plan.m * plan.m),
            t.t_rrtr * t.margin,
            m2 * t.t_switch,
        ),
        check(
            "relaxation_ratio",
            format!("{resets_per_run} x t_rrtr x margin <= t_comput"),
            resets_per_run * t.t_rrtr * t.margin,
            t.t_comput,
        ),
    ];
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(TimingReport {
        timing: *t,
        step_bound: steps,
        checks,
        all_pass,
    })
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use algocool::analytic::{
    bias_schedule, round_to_sig_figs, shannon_yield, success_lower_bound, CoolingPlan, UNFEASIBLE_THRESHOLD,
};
use algocool::circuit::{new_register, GateCosts, Provenance};
use algocool::compression::{compile_bcs, reference_bcs, run_bcs};
use algocool::cooling::{compile_cooling, run_cooling};
use algocool::ensemble::{compare_to_analytic, molecule_stream, run_ensemble};
use algocool::{cli, Bias, Register};
use num_rational::Ratio;

type Outcome = Result<String, String>;

fn bias(x: f64) -> Bias {
    Bias::new(x).unwrap()
}

fn plan(eps: f64, m: usize, ell: usize, jf: usize) -> CoolingPlan {
    CoolingPlan::new(bias(eps), m, ell, jf).unwrap()
}

fn cli_output(args: &[&str]) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["algocool"];
    full.extend_from_slice(args);
    match cli::run(full, &mut out, &mut err) {
        0 => Ok(out),
        code => Err(format!("exit {code}: {}", String::from_utf8_lossy(&err))),
    }
}

/// A displayed value and the number of significant figures shown.
#[derive(Clone, Copy)]
struct Shown(f64, u32);

/// A `p` cell: a number, or below the feasibility threshold.
#[derive(Clone, Copy)]
enum Cell {
    P(Shown),
    Unfeasible,
}

use Cell::{Unfeasible, P};

/// (ε₀, j_f, ε_f, δ_f, p at m = 20, 50, 200) as published.
const REFERENCE_TABLE: [(f64, u64, Shown, Shown, [Cell; 3]); 6] = [
    (0.1, 0, Shown(0.1, 1), Shown(0.45, 2), [P(Shown(6.4e-6, 2)), Unfeasible, Unfeasible]),
    (0.1, 3, Shown(0.666, 3), Shown(0.1672, 4), [P(Shown(2.6e-2, 2)), P(Shown(1.1e-4, 2)), Unfeasible]),
    (0.1, 4, Shown(0.922, 3), Shown(0.0388, 3), [P(Shown(4.5e-1, 2)), P(Shown(1.3e-1, 2)), P(Shown(3.7e-4, 2))]),
    (0.01, 0, Shown(0.01, 1), Shown(0.495, 3), [P(Shown(1.2e-6, 2)), Unfeasible, Unfeasible]),
    (0.01, 6, Shown(0.565, 3), Shown(0.2175, 4), [P(Shown(7.4e-3, 2)), P(Shown(4.7e-6, 2)), Unfeasible]),
    (0.01, 7, Shown(0.856, 3), Shown(0.0718, 3), [P(Shown(2.2e-1, 2)), P(Shown(2.4e-2, 2)), P(Shown(3.4e-7, 2))]),
];

fn matches_shown(value: f64, shown: Shown) -> bool {
    let rounded = round_to_sig_figs(value, shown.1);
    (rounded - shown.0).abs() <= 1e-9 * shown.0.abs()
}

fn feasibility_table_reproduction() -> Outcome {
    let start = Instant::now();
    let raw = cli_output(&["table", "--format", "json"])?;
    let elapsed = start.elapsed();
    let doc: serde_json::Value = serde_json::from_slice(&raw).map_err(|e| e.to_string())?;
    let rows = doc["rows"].as_array().ok_or("no rows")?;
    if doc["threshold"].as_f64() != Some(UNFEASIBLE_THRESHOLD) || rows.len() != REFERENCE_TABLE.len() {
        return Err(format!("unexpected table shape: {} rows", rows.len()));
    }
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for (row, (eps0, jf, eps_f, delta_f, cells)) in rows.iter().zip(REFERENCE_TABLE) {
        let label = format!("eps0={eps0} jf={jf}");
        if row["epsilon0"].as_f64() != Some(eps0) || row["j_final"].as_u64() != Some(jf) {
            return Err(format!("row order differs at {label}"));
        }
        for (name, key, shown) in [("eps_f", "epsilon_final", eps_f), ("delta_f", "delta_final", delta_f)] {
            let v = row[key].as_f64().ok_or("missing number")?;
            checked += 1;
            if !matches_shown(v, shown) {
                mismatches.push(format!("{label} {name}: computed {v:.6} shows as {}, published {}", round_to_sig_figs(v, shown.1), shown.0));
            }
        }
        for (cell, expected) in row["p_for_m"].as_array().ok_or("missing cells")?.iter().zip(cells) {
            let m = cell["m"].as_u64().unwrap_or(0);
            let p = cell["p"].as_f64().ok_or("missing p")?;
            let feasible = cell["feasible"].as_bool().ok_or("missing flag")?;
            checked += 1;
            match expected {
                Unfeasible if feasible => mismatches.push(format!("{label} m={m}: p={p:.3e} should be unfeasible")),
                P(_) if !feasible => mismatches.push(format!("{label} m={m}: p={p:.3e} marked unfeasible")),
                P(shown) if !matches_shown(p, shown) => mismatches.push(format!(
                    "{label} m={m}: computed {p:.5e} shows as {:.1e}, published {:.1e}",
                    round_to_sig_figs(p, shown.1),
                    shown.0
                )),
                _ => {}
            }
        }
    }
    if elapsed >= Duration::from_secs(1) {
        mismatches.push(format!("runtime {elapsed:?}"));
    }
    if mismatches.is_empty() {
        Ok(format!("{checked} cells match, {elapsed:?}"))
    } else {
        Err(format!("{} of {checked} cells differ: {}", mismatches.len(), mismatches.join("; ")))
    }
}

fn bias_recursion() -> Outcome {
    let a = bias_schedule(bias(0.1), 4)[4].epsilon();
    let b = bias_schedule(bias(0.01), 7)[7].epsilon();
    let ok = matches_shown(a, Shown(0.922, 3)) && matches_shown(b, Shown(0.856, 3));
    let detail = format!("eps_4(0.1) = {a:.6}, eps_7(0.01) = {b:.6}");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn resource_formulas() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for (p, n, bound) in [(plan(0.1, 50, 5, 3), 350, 1_562_500u64), (plan(0.01, 20, 5, 6), 260, 31_250_000)] {
        let raw = cli_output(&[
            "plan",
            "--epsilon0",
            &p.epsilon0.epsilon().to_string(),
            "--m",
            &p.m.to_string(),
            "--ell",
            &p.ell.to_string(),
            "--jf",
            &p.j_final.to_string(),
            "--format",
            "json",
        ])?;
        let doc: serde_json::Value = serde_json::from_slice(&raw).map_err(|e| e.to_string())?;
        let got_n = doc["plan"]["n_required"].as_u64();
        let got_bound = doc["plan"]["step_bound"].as_u64();
        ok &= got_n == Some(n) && got_bound == Some(bound);
        detail.push(format!("m={} jf={}: n={got_n:?} steps<={got_bound:?}", p.m, p.j_final));
    }
    if ok {
        Ok(detail.join(", "))
    } else {
        Err(detail.join(", "))
    }
}

/// Within half a unit of the second significant figure of `claimed`.
fn agrees_to_two_figures(value: f64, claimed: f64) -> bool {
    let unit = 10f64.powf(claimed.abs().log10().floor() - 1.0);
    (value - claimed).abs() <= 0.5 * unit
}

fn success_bounds() -> Outcome {
    let six = success_lower_bound(&plan(0.1, 50, 6, 3)).map_err(|e| e.to_string())?;
    let five = success_lower_bound(&plan(0.1, 50, 5, 3)).map_err(|e| e.to_string())?;
    let ok = !six.vacuous
        && !five.vacuous
        && six.probability > 0.51
        && five.probability > 2.85e-5
        && agrees_to_two_figures(six.probability, 0.51)
        && agrees_to_two_figures(five.probability, 2.85e-5);
    let detail = format!("ell=6: {:.6}, ell=5: {:.6e}", six.probability, five.probability);
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut inputs = 0u64;
    let mut mismatches = 0u64;
    for m in (2..=16).step_by(2) {
        let bcs = compile_bcs(m, 0, 0).map_err(|e| e.to_string())?;
        for word in 0..(1u32 << m) {
            let input: Vec<bool> = (0..m).map(|i| (word >> i) & 1 == 1).collect();
            let expected = reference_bcs(&input).map_err(|e| e.to_string())?;
            let mut r = Register::from_bits(&input, Bias::ONE);
            let out = run_bcs(&mut r, &bcs).map_err(|e| e.to_string())?;
            let bits = r.bits();
            let k = expected.purified.len();
            let mut sup = expected.supervisors.clone();
            sup.reverse();
            let same = out.purified_count == k
                && bits[..k] == expected.purified[..]
                && bits[k..m / 2] == expected.dirty[..]
                && bits[m / 2..] == sup[..]
                && r.provenance().unwrap()[..k].iter().all(|&t| t == Provenance::PurifiedTo(1));
            inputs += 1;
            mismatches += u64::from(!same);
        }
    }
    let elapsed = start.elapsed();
    let detail = format!("{inputs} inputs, {mismatches} mismatches, {elapsed:?}");
    if mismatches == 0 && elapsed < Duration::from_secs(60) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exact_pair_law() -> Outcome {
    type Q = Ratio<i128>;
    let one = Q::from_integer(1);
    let two = Q::from_integer(2);
    let bcs = compile_bcs(2, 0, 0).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    let mut ok = true;
    for eps in [Q::from_integer(0), Q::new(1, 10), Q::new(1, 2), one] {
        let p = [(one + eps) / two, (one - eps) / two];
        let (mut keep, mut kept_zero) = (Q::from_integer(0), Q::from_integer(0));
        for word in 0..4usize {
            let input = [word & 1 == 1, word & 2 == 2];
            let prob = p[usize::from(input[0])] * p[usize::from(input[1])];
            let mut r = Register::from_bits(&input, Bias::ONE);
            if run_bcs(&mut r, &bcs).map_err(|e| e.to_string())?.purified_count == 1 {
                keep += prob;
                if !r.bit(0) {
                    kept_zero += prob;
                }
            }
        }
        let kept_bias = (kept_zero - (keep - kept_zero)) / keep;
        ok &= kept_bias == two * eps / (one + eps * eps) && keep == (one + eps * eps) / two;
        detail.push(format!("eps={eps}: bias {kept_bias}, keep {keep}"));
    }
    if ok {
        Ok(detail.join(", "))
    } else {
        Err(detail.join(", "))
    }
}

fn step_bounds() -> Outcome {
    for m in (2..=256).step_by(2) {
        let steps = compile_bcs(m, 0, 0).map_err(|e| e.to_string())?.schedule.step_count(&GateCosts::default());
        if steps >= (m * m) as u64 {
            return Err(format!("compression of {m} bits takes {steps} steps"));
        }
    }
    let mut worst: f64 = 0.0;
    for m in [4, 8, 20] {
        for ell in [4, 5, 6] {
            for jf in [1, 2, 3] {
                let p = plan(0.1, m, ell, jf);
                let c = compile_cooling(&p).map_err(|e| e.to_string())?;
                let bound = p.step_bound().map_err(|e| e.to_string())?;
                if c.steps() > bound {
                    return Err(format!("m={m} ell={ell} jf={jf}: {} > {bound}", c.steps()));
                }
                worst = worst.max(c.steps() as f64 / bound as f64);
            }
        }
    }
    Ok(format!("compression < m^2 up to m=256; cooling uses at most {:.3} of its bound", worst))
}

fn monte_carlo_bias() -> Outcome {
    let start = Instant::now();
    let p = plan(0.1, 20, 5, 2);
    let n = 100_000;
    let stats = run_ensemble(&p, n, 20_240_101).map_err(|e| e.to_string())?;
    let report = compare_to_analytic(&stats, &p).map_err(|e| e.to_string())?;
    let b = report.bias.ok_or("no successful molecule")?;
    let bias_ok = b.pooled_z.abs() <= 3.0;

    let q = plan(0.1, 20, 6, 2);
    let stats6 = run_ensemble(&q, n, 20_240_102).map_err(|e| e.to_string())?;
    let report6 = compare_to_analytic(&stats6, &q).map_err(|e| e.to_string())?;
    let s = &report6.success;
    let success_ok = !s.vacuous && s.observed_rate >= s.lower_bound - 4.0 * s.sigma;
    let elapsed = start.elapsed();
    let detail = format!(
        "conditioned bias {:.5} vs {:.5} (z = {:.2}, {} successes); ell=6 success {:.4} vs bound {:.4}; {elapsed:?}",
        b.pooled_observed, b.expected, b.pooled_z, stats.success_count, s.observed_rate, s.lower_bound
    );
    if bias_ok && success_ok && elapsed < Duration::from_secs(300) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn beyond_shannon() -> Outcome {
    let a = shannon_yield(140, bias(0.1));
    let b = shannon_yield(350, bias(0.1));
    let detail = format!("20 vs {a:.4}, 50 vs {b:.4}");
    if 20.0 > a && 50.0 > b {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let base = ["simulate", "--m", "20", "--ell", "5", "--jf", "2", "--molecules", "5000", "--seed", "42", "--format", "json"];
    let mut one = base.to_vec();
    one.extend(["--threads", "1"]);
    let mut four = base.to_vec();
    four.extend(["--threads", "4"]);
    let a = cli_output(&one)?;
    let b = cli_output(&four)?;
    if a == b {
        Ok(format!("{} identical bytes", a.len()))
    } else {
        Err("outputs differ between thread counts".into())
    }
}

fn structural_counts() -> Outcome {
    let p = plan(0.1, 20, 5, 3);
    let c = compile_cooling(&p).map_err(|e| e.to_string())?;
    let mut rng = molecule_stream(5, 0);
    let mut r = new_register(c.n, p.epsilon0, &mut rng);
    let run = run_cooling(&mut r, &c, &mut rng).map_err(|e| e.to_string())?;
    let detail = format!("{} resets, {} truncations logged", c.reset_count(), run.truncation_log.len());
    if c.reset_count() == 125 && run.truncation_log.len() == 31 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("feasibility table reproduction", feasibility_table_reproduction),
        ("bias recursion", bias_recursion),
        ("resource formulas", resource_formulas),
        ("success bounds", success_bounds),
        ("oracle equivalence", oracle_equivalence),
        ("exact pair law", exact_pair_law),
        ("step bounds", step_bounds),
        ("monte carlo bias and success rate", monte_carlo_bias),
        ("beyond-shannon certificate", beyond_shannon),
        ("determinism across threads", determinism),
        ("structural counts", structural_counts),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! The `algocool` command line.
//!
//! Every subcommand takes the same flags; values not given on the command
//! line come from a flat `key = value` config file (`--config` or the
//! `ALGOCOOL_CONFIG` environment variable), then from built-in defaults.
//!
//! Exit codes: 0 on success, 1 when the computation could not be carried out,
//! 2 for usage errors, 3 when `--strict` is set and a verdict failed.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytic::{
    feasibility_table, min_rounds, round_to_sig_figs, timing_feasibility, Bias, CoolingPlan, FeasibilityRow,
    PlanSummary, TimingModel, UNFEASIBLE_THRESHOLD,
};
use crate::cooling::compile_cooling;
use crate::ensemble::{compare_to_analytic, simulate, DeviationReport, EnsembleStats};

pub const SCHEMA_VERSION: u32 = 1;
pub const CONFIG_ENV: &str = "ALGOCOOL_CONFIG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERDICT: i32 = 3;

/// Verdict threshold for `simulate --strict`.
const STRICT_SIGMA: f64 = 4.0;

#[derive(Debug, Parser)]
#[command(name = "algocool", version, about = "Heat-bath algorithmic cooling calculator and simulator")]
pub struct Cli {
    /// Flat key = value file supplying defaults for any flag.
    #[arg(long, env = CONFIG_ENV, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Final bias, error probability and pseudo-pure signal per (ε₀, j_f).
    Table(Flags),
    /// Resource and success estimates for one cooling plan.
    Plan(Flags),
    /// Compile the cooling schedule to the text gate format.
    Compile(Flags),
    /// Run a seeded ensemble and compare with the closed forms.
    Simulate(Flags),
    /// Check switching and relaxation times against the plan's step bound.
    Feasibility(Flags),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long)]
    pub epsilon0: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long, conflicts_with = "epsilon_des")]
    pub jf: Option<usize>,
    /// Target bias; the number of rounds is the smallest that reaches it.
    #[arg(long)]
    pub epsilon_des: Option<f64>,
    #[arg(long)]
    pub molecules: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for `simulate`; never changes results.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with a distinct code when a verdict fails.
    #[arg(long)]
    pub strict: bool,
    /// Signals below this are marked unfeasible.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Factor by which "much smaller" timing relations must hold.
    #[arg(long)]
    pub margin: Option<f64>,
    /// Gate switching time, seconds.
    #[arg(long)]
    pub t_switch: Option<f64>,
    /// Reset-bit relaxation time, seconds.
    #[arg(long)]
    pub t_rrtr: Option<f64>,
    /// Computation-bit relaxation time, seconds.
    #[arg(long)]
    pub t_comput: Option<f64>,
}

/// Fully resolved parameters of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub epsilon0: f64,
    pub m: usize,
    pub ell: usize,
    pub jf: Option<usize>,
    pub epsilon_des: Option<f64>,
    pub molecules: u64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub strict: bool,
    pub threshold: f64,
    pub margin: f64,
    pub t_switch: f64,
    pub t_rrtr: f64,
    pub t_comput: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            epsilon0: 0.1,
            m: 50,
            ell: 5,
            jf: None,
            epsilon_des: None,
            molecules: 10_000,
            seed: 0,
            threads: None,
            format: Format::Text,
            out: None,
            strict: false,
            threshold: UNFEASIBLE_THRESHOLD,
            margin: TimingModel::DEFAULT_MARGIN,
            t_switch: 1e-5,
            t_rrtr: 1e-3,
            t_comput: 10.0,
        }
    }
}

const DEFAULT_JF: usize = 3;

/// Parses a flat config file: one `key = value` per line, `#` comments.
/// Dashes and underscores in keys are interchangeable.
pub fn parse_config(text: &str) -> anyhow::Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key = value", idx + 1))?;
        map.insert(key.trim().replace('-', "_"), value.trim().to_string());
    }
    Ok(map)
}

fn take<T: std::str::FromStr>(map: &mut BTreeMap<String, String>, key: &str) -> anyhow::Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    map.remove(key)
        .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key {key}: {e} ({v:?})")))
        .transpose()
}

impl RunConfig {
    /// Layers `flags` over `config` over the defaults.
    pub fn resolve(flags: &Flags, mut config: BTreeMap<String, String>) -> anyhow::Result<Self> {
        let d = RunConfig::default();
        let format = match config.remove("format") {
            Some(v) => Some(Format::from_str(&v, true).map_err(|e| anyhow!("config key format: {e}"))?),
            None => None,
        };
        let from_file = RunConfig {
            epsilon0: take(&mut config, "epsilon0")?.unwrap_or(d.epsilon0),
            m: take(&mut config, "m")?.unwrap_or(d.m),
            ell: take(&mut config, "ell")?.unwrap_or(d.ell),
            jf: take(&mut config, "jf")?,
            epsilon_des: take(&mut config, "epsilon_des")?,
            molecules: take(&mut config, "molecules")?.unwrap_or(d.molecules),
            seed: take(&mut config, "seed")?.unwrap_or(d.seed),
            threads: take(&mut config, "threads")?,
            format: format.unwrap_or(d.format),
            out: take::<PathBuf>(&mut config, "out")?,
            strict: take(&mut config, "strict")?.unwrap_or(d.strict),
            threshold: take(&mut config, "threshold")?.unwrap_or(d.threshold),
            margin: take(&mut config, "margin")?.unwrap_or(d.margin),
            t_switch: take(&mut config, "t_switch")?.unwrap_or(d.t_switch),
            t_rrtr: take(&mut config, "t_rrtr")?.unwrap_or(d.t_rrtr),
            t_comput: take(&mut config, "t_comput")?.unwrap_or(d.t_comput),
        };
        if let Some(key) = config.keys().next() {
            bail!("unknown config key {key}");
        }
        // A round count on the command line overrides a target from the file
        // and vice versa.
        let (jf, epsilon_des) = match (flags.jf, flags.epsilon_des) {
            (Some(j), _) => (Some(j), None),
            (None, Some(e)) => (None, Some(e)),
            (None, None) => (from_file.jf, from_file.epsilon_des),
        };
        Ok(RunConfig {
            epsilon0: flags.epsilon0.unwrap_or(from_file.epsilon0),
            m: flags.m.unwrap_or(from_file.m),
            ell: flags.ell.unwrap_or(from_file.ell),
            jf,
            epsilon_des,
            molecules: flags.molecules.unwrap_or(from_file.molecules),
            seed: flags.seed.unwrap_or(from_file.seed),
            threads: flags.threads.or(from_file.threads),
            format: flags.format.unwrap_or(from_file.format),
            out: flags.out.clone().or(from_file.out),
            strict: flags.strict || from_file.strict,
            threshold: flags.threshold.unwrap_or(from_file.threshold),
            margin: flags.margin.unwrap_or(from_file.margin),
            t_switch: flags.t_switch.unwrap_or(from_file.t_switch),
            t_rrtr: flags.t_rrtr.unwrap_or(from_file.t_rrtr),
            t_comput: flags.t_comput.unwrap_or(from_file.t_comput),
        })
    }

    fn bias(&self) -> anyhow::Result<Bias> {
        Ok(Bias::new(self.epsilon0)?)
    }

    /// Number of rounds, from `--jf` or derived from `--epsilon-des`.
    fn rounds(&self) -> anyhow::Result<usize> {
        match (self.jf, self.epsilon_des) {
            (Some(j), _) => Ok(j),
            (None, Some(target)) => Ok(min_rounds(self.bias()?, target)?),
            (None, None) => Ok(DEFAULT_JF),
        }
    }

    fn plan(&self) -> anyhow::Result<CoolingPlan> {
        Ok(CoolingPlan::new(self.bias()?, self.m, self.ell, self.rounds()?)?)
    }

    fn timing(&self) -> anyhow::Result<TimingModel> {
        Ok(TimingModel::new(self.t_switch, self.t_rrtr, self.t_comput, self.margin)?)
    }
}

/// Output of one subcommand: the rendered report and whether its verdicts
/// held.
struct Rendered {
    body: String,
    verdict_ok: bool,
    warnings: Vec<String>,
}

impl Rendered {
    fn ok(body: String) -> Self {
        Rendered {
            body,
            verdict_ok: true,
            warnings: Vec::new(),
        }
    }
}

/// Decimal text for a number, identical in JSON and CSV.
fn num(x: f64) -> String {
    serde_json::to_string(&x).expect("serializing a float cannot fail")
}

fn json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

#[derive(Serialize)]
struct TableDoc<'a> {
    schema_version: u32,
    command: &'static str,
    threshold: f64,
    rows: &'a [FeasibilityRow],
}

fn cmd_table(cfg: &RunConfig) -> anyhow::Result<Rendered> {
    if !(cfg.threshold > 0.0) {
        bail!("threshold must be positive, got {}", cfg.threshold);
    }
    let rows = feasibility_table(cfg.threshold);
    let body = match cfg.format {
        Format::Json => json(&TableDoc {
            schema_version: SCHEMA_VERSION,
            command: "table",
            threshold: cfg.threshold,
            rows: &rows,
        })?,
        Format::Csv => {
            let mut header = vec!["epsilon0", "j_final", "epsilon_final", "delta_final"];
            let sizes: Vec<String> = rows[0].p_for_m.iter().map(|c| format!("p_m{}", c.m)).collect();
            header.extend(sizes.iter().map(String::as_str));
            let data = rows
                .iter()
                .map(|r| {
                    let mut v = vec![num(r.epsilon0), r.j_final.to_string(), num(r.epsilon_final), num(r.delta_final)];
                    v.extend(
                        r.p_for_m
                            .iter()
                            .map(|c| if c.feasible { num(c.p) } else { "unfeasible".to_string() }),
                    );
                    v
                })
                .collect();
            csv_text(&header, data)?
        }
        Format::Text => {
            let mut s = format!("{:>6} {:>3} {:>8} {:>8}", "eps0", "jf", "eps_f", "delta_f");
            for c in &rows[0].p_for_m {
                s += &format!(" {:>11}", format!("p(m={})", c.m));
            }
            s.push('\n');
            for r in &rows {
                s += &format!(
                    "{:>6} {:>3} {:>8} {:>8}",
                    r.epsilon0,
                    r.j_final,
                    round_to_sig_figs(r.epsilon_final, 3),
                    round_to_sig_figs(r.delta_final, 4)
                );
                for c in &r.p_for_m {
                    let cell = if c.feasible { format!("{:.1e}", c.p) } else { "unfeasible".into() };
                    s += &format!(" {cell:>11}");
                }
                s.push('\n');
            }
            s
        }
    };
    Ok(Rendered::ok(body))
}

fn vacuous_warning(plan: &CoolingPlan) -> Vec<String> {
    if plan.vacuous_success_bound() {
        vec![format!("cooling depth {} gives a vacuous success bound", plan.ell)]
    } else {
        Vec::new()
    }
}

#[derive(Serialize)]
struct PlanDoc<'a> {
    schema_version: u32,
    command: &'static str,
    plan: &'a PlanSummary,
    warnings: &'a [String],
}

fn cmd_plan(cfg: &RunConfig) -> anyhow::Result<Rendered> {
    let eps = cfg.epsilon0;
    if !(eps > 0.0 && eps < 1.0) {
        bail!("epsilon0 must lie strictly between 0 and 1, got {eps}");
    }
    let plan = cfg.plan()?;
    let summary = plan.summary()?;
    let warnings = vacuous_warning(&plan);
    let schedule = summary.bias_schedule.iter().map(|&b| num(b)).collect::<Vec<_>>();
    let body = match cfg.format {
        Format::Json => json(&PlanDoc {
            schema_version: SCHEMA_VERSION,
            command: "plan",
            plan: &summary,
            warnings: &warnings,
        })?,
        Format::Csv => csv_text(
            &[
                "epsilon0",
                "m",
                "ell",
                "j_final",
                "epsilon_final",
                "delta_final",
                "n_required",
                "step_bound",
                "truncation_count",
                "success_lower_bound",
                "success_bound_vacuous",
                "shannon_yield",
                "pps_signal",
                "bias_schedule",
            ],
            vec![vec![
                num(summary.epsilon0),
                summary.m.to_string(),
                summary.ell.to_string(),
                summary.j_final.to_string(),
                num(summary.epsilon_final),
                num(summary.delta_final),
                summary.n_required.to_string(),
                summary.step_bound.to_string(),
                summary.truncation_count.to_string(),
                num(summary.success_lower_bound.probability),
                summary.success_lower_bound.vacuous.to_string(),
                num(summary.shannon_yield),
                num(summary.pps_signal),
                schedule.join(";"),
            ]],
        )?,
        Format::Text => {
            let bound = &summary.success_lower_bound;
            let bound_text = if bound.vacuous {
                "vacuous".to_string()
            } else {
                format!("{:.6e}", bound.probability)
            };
            format!(
                "epsilon0            {}\nm                   {}\nell                 {}\nj_final             {}\n\
                 bias schedule       {}\nepsilon_final       {}\ndelta_final         {}\n\
                 input bits          {}\nstep bound          {}\ntruncations         {}\n\
                 success >=          {}\nshannon yield       {:.6}\npps signal          {:.6e}\n",
                summary.epsilon0,
                summary.m,
                summary.ell,
                summary.j_final,
                schedule.join(" "),
                num(summary.epsilon_final),
                num(summary.delta_final),
                summary.n_required,
                summary.step_bound,
                summary.truncation_count,
                bound_text,
                summary.shannon_yield,
                summary.pps_signal,
            )
        }
    };
    Ok(Rendered {
        body,
        verdict_ok: true,
        warnings,
    })
}

#[derive(Serialize)]
struct CompileDoc {
    schema_version: u32,
    command: &'static str,
    n: usize,
    gates: usize,
    steps: u64,
    resets: usize,
    truncations: usize,
    step_bound: u64,
    within_bound: bool,
    out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<String>,
}

fn cmd_compile(cfg: &RunConfig) -> anyhow::Result<Rendered> {
    let plan = cfg.plan()?;
    let compiled = compile_cooling(&plan)?;
    let text = compiled.schedule.to_text();
    let doc = CompileDoc {
        schema_version: SCHEMA_VERSION,
        command: "compile",
        n: compiled.n,
        gates: compiled.schedule.gate_count(),
        steps: compiled.steps(),
        resets: compiled.reset_count(),
        truncations: compiled.truncations.len(),
        step_bound: plan.step_bound()?,
        within_bound: compiled.steps() <= plan.step_bound()?,
        out: cfg.out.clone(),
        schedule: None,
    };
    if let Some(path) = &cfg.out {
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    let summary_lines = format!(
        "bits {}\ngates {}\nsteps {}\nresets {}\ntruncations {}\nstep bound {}\n",
        doc.n, doc.gates, doc.steps, doc.resets, doc.truncations, doc.step_bound
    );
    let body = match cfg.format {
        Format::Json => {
            let with_schedule = CompileDoc {
                schedule: cfg.out.is_none().then(|| text.clone()),
                ..doc
            };
            json(&with_schedule)?
        }
        Format::Csv => csv_text(
            &["n", "gates", "steps", "resets", "truncations", "step_bound", "within_bound"],
            vec![vec![
                doc.n.to_string(),
                doc.gates.to_string(),
                doc.steps.to_string(),
                doc.resets.to_string(),
                doc.truncations.to_string(),
                doc.step_bound.to_string(),
                doc.within_bound.to_string(),
            ]],
        )?,
        // Without a file the schedule goes to stdout; the summary becomes
        // comment lines so the output still parses as a schedule.
        Format::Text if cfg.out.is_none() => {
            let comments: String = summary_lines.lines().map(|l| format!("# {l}\n")).collect();
            text + &comments
        }
        Format::Text => summary_lines,
    };
    Ok(Rendered {
        body,
        verdict_ok: doc.within_bound,
        warnings: vacuous_warning(&plan),
    })
}

#[derive(Serialize)]
struct SimulateDoc<'a> {
    schema_version: u32,
    command: &'static str,
    stats: &'a EnsembleStats,
    deviation: &'a DeviationReport,
}

fn cmd_simulate(cfg: &RunConfig) -> anyhow::Result<Rendered> {
    let plan = cfg.plan()?;
    if cfg.molecules == 0 {
        bail!("molecules must be at least 1");
    }
    if cfg.threads == Some(0) {
        bail!("threads must be at least 1");
    }
    let compiled = compile_cooling(&plan)?;
    let stats = simulate(&compiled, cfg.molecules, cfg.seed, cfg.threads)?;
    let report = compare_to_analytic(&stats, &plan)?;
    let verdict_ok = report.within(STRICT_SIGMA);
    let position_z = report.bias.as_ref().map(|b| b.per_position_z.clone());
    let body = match cfg.format {
        Format::Json => json(&SimulateDoc {
            schema_version: SCHEMA_VERSION,
            command: "simulate",
            stats: &stats,
            deviation: &report,
        })?,
        Format::Csv => {
            let rows = (0..plan.m)
                .map(|i| {
                    let cond = stats.success_conditioned.as_ref();
                    vec![
                        i.to_string(),
                        num(stats.per_position_zero_freq[i]),
                        num(stats.empirical_bias[i]),
                        cond.map_or(String::new(), |c| num(c.per_position_bias[i])),
                        position_z.as_ref().map_or(String::new(), |z| num(z[i])),
                    ]
                })
                .collect();
            csv_text(&["position", "zero_freq", "bias", "conditioned_bias", "z"], rows)?
        }
        Format::Text => {
            let mut s = format!(
                "molecules           {}\nseed                {}\nsuccess             {} ({:.6})\nsuccess bound       {}\n",
                stats.num_molecules,
                stats.seed,
                stats.success_count,
                stats.success_rate,
                if report.success.vacuous {
                    "vacuous".to_string()
                } else {
                    format!("{:.6e} (z = {:.2})", report.success.lower_bound, report.success.z)
                },
            );
            s += &format!("output bias         {:.6} (all molecules)\n", stats.pooled_bias);
            match &report.bias {
                Some(b) => {
                    s += &format!(
                        "conditioned bias    {:.6} expected {:.6} (z = {:.2}, worst position |z| = {:.2})\n",
                        b.pooled_observed, b.expected, b.pooled_z, b.max_abs_position_z
                    )
                }
                None => s += "conditioned bias    no successful molecules\n",
            }
            for l in &report.lengths {
                s += &format!(
                    "level {} round {}     mean length {:.4} expected {:.4} (n = {}, z = {:.2})\n",
                    l.level, l.round, l.observed_mean, l.expected_mean, l.samples, l.z
                );
            }
            s
        }
    };
    Ok(Rendered {
        body,
        verdict_ok,
        warnings: vacuous_warning(&plan),
    })
}

#[derive(Serialize)]
struct FeasibilityDoc<'a> {
    schema_version: u32,
    command: &'static str,
    plan: &'a CoolingPlan,
    report: &'a crate::analytic::TimingReport,
}

fn cmd_feasibility(cfg: &RunConfig) -> anyhow::Result<Rendered> {
    let plan = cfg.plan()?;
    let timing = cfg.timing()?;
    let report = timing_feasibility(&timing, &plan)?;
    let body = match cfg.format {
        Format::Json => json(&FeasibilityDoc {
            schema_version: SCHEMA_VERSION,
            command: "feasibility",
            plan: &plan,
            report: &report,
        })?,
        Format::Csv => csv_text(
            &["check", "lhs", "rhs", "pass"],
            report
                .checks
                .iter()
                .map(|c| vec![c.name.clone(), num(c.lhs), num(c.rhs), c.pass.to_string()])
                .collect(),
        )?,
        Format::Text => {
            let mut s = format!("step bound {}\n", report.step_bound);
            for c in &report.checks {
                s += &format!(
                    "{} {:<17} {:.4e} <= {:.4e}  ({})\n",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.lhs,
                    c.rhs,
                    c.description
                );
            }
            s += if report.all_pass { "feasible\n" } else { "not feasible\n" };
            s
        }
    };
    Ok(Rendered {
        body,
        verdict_ok: report.all_pass,
        warnings: Vec::new(),
    })
}

fn load_config(path: Option<&Path>) -> anyhow::Result<BTreeMap<String, String>> {
    match path {
        None => Ok(BTreeMap::new()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            parse_config(&text).with_context(|| format!("in {}", p.display()))
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let (flags, run): (&Flags, fn(&RunConfig) -> anyhow::Result<Rendered>) = match &cli.command {
        Command::Table(f) => (f, cmd_table),
        Command::Plan(f) => (f, cmd_plan),
        Command::Compile(f) => (f, cmd_compile),
        Command::Simulate(f) => (f, cmd_simulate),
        Command::Feasibility(f) => (f, cmd_feasibility),
    };
    let cfg = RunConfig::resolve(flags, load_config(cli.config.as_deref())?)?;
    let rendered = run(&cfg)?;
    for w in &rendered.warnings {
        writeln!(err, "warning: {w}")?;
    }
    match (&cli.command, &cfg.out) {
        (Command::Compile(_), _) | (_, None) => out.write_all(rendered.body.as_bytes())?,
        (_, Some(path)) => fs::write(path, &rendered.body).with_context(|| format!("writing {}", path.display()))?,
    }
    out.flush()?;
    Ok(if cfg.strict && !rendered.verdict_ok {
        EXIT_VERDICT
    } else {
        EXIT_OK
    })
}

/// Parses `args` (program name first) and runs the subcommand, writing the
/// report to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(rendered.as_bytes());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_FAILURE
        }
    }
}

//! The `finpop` command line.
//!
//! Exit codes: 0 success, 2 validation failure, 3 no matching plan,
//! 4 enumeration size guard exceeded.

mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::inference::{assure, assure_with_plan, posterior_general, posterior_psp};
use crate::oracle::{
    enumerate_conditional_with_limit, psp_vs_mixture_report_with_limit, simulate_conditional,
    SimConfig, DEFAULT_ENUMERATION_LIMIT,
};
use crate::plans::{
    elicit_delta, marginal_accept_general, marginal_accept_psp, quality_threshold_k, PlanTable,
    SamplingPlan, DEFAULT_ELICIT_FACTOR,
};
use crate::prior::{LotFrame, Prior};

pub use output::{fmt_prob, round_sig, Format, OutputEnvelope, Rendered, SCHEMA_VERSION};

pub const PLAN_TABLE_ENV: &str = "FINPOP_PLAN_TABLE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NO_PLAN: i32 = 3;
pub const EXIT_COST_GUARD: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "finpop",
    version,
    about = "Posterior assurance for attribute counts in finite lots sampled without replacement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pr{A = 0 | evidence} and optionally Pr{A <= k | evidence}.
    Assure(AssureArgs),
    /// Full posterior table over A = 0..N.
    Posterior(PosteriorArgs),
    /// Look up a sampling plan and derive the binomial prior from its AQL.
    Plan(PlanArgs),
    /// Assurance figures for several priors on the same evidence.
    Compare(CompareArgs),
    /// Distribution of A among accepted lots, by simulation or enumeration.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct FrameArgs {
    /// Lot size N.
    #[arg(long)]
    population: u64,
    /// Sample size n.
    #[arg(long)]
    sample: u64,
    /// Attribute-bearing items found in the sample.
    #[arg(long)]
    observed: u64,
}

impl FrameArgs {
    fn frame(&self) -> Result<LotFrame> {
        LotFrame::new(self.population, self.sample, self.observed)
    }
}

#[derive(Debug, Args)]
struct AssureArgs {
    #[command(flatten)]
    frame: FrameArgs,
    /// Prior as inline JSON or @path (JSON, or a one-column CSV for tabulated masses).
    #[arg(long)]
    prior: String,
    /// Also report Pr(A <= k | data).
    #[arg(long)]
    k: Option<u64>,
    /// Acceptance number; adds the prior-predictive acceptance probability.
    #[arg(long)]
    ac: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct PosteriorArgs {
    #[command(flatten)]
    frame: FrameArgs,
    #[arg(long)]
    prior: String,
    /// Omit entries below this mass from the printed table.
    #[arg(long)]
    tail_trim: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// Plan table CSV (lot_min,lot_max,aql,n,ac); defaults to the built-in table.
    #[arg(long, env = PLAN_TABLE_ENV)]
    table: Option<PathBuf>,
    /// Lot size N.
    #[arg(long)]
    lot_size: u64,
    /// AQL as a fraction, e.g. 0.001 for 0.10%.
    #[arg(long)]
    aql: f64,
    /// delta = factor * AQL.
    #[arg(long, default_value_t = DEFAULT_ELICIT_FACTOR)]
    elicit_factor: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    frame: FrameArgs,
    /// Prior specs (each inline JSON or @path), or one JSON array of specs.
    #[arg(long, num_args = 1.., required = true)]
    priors: Vec<String>,
    /// Also report Pr(A <= k | data) for each prior.
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Lot size N.
    #[arg(long)]
    population: u64,
    /// Plan sample size n.
    #[arg(long)]
    sample: u64,
    /// Plan acceptance number.
    #[arg(long, default_value_t = 0)]
    ac: u64,
    #[arg(long)]
    prior: String,
    /// Monte Carlo lots to draw.
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exact enumeration instead of Monte Carlo.
    #[arg(long)]
    exact: bool,
    /// Mixture component treated as the good-lot state.
    #[arg(long, default_value_t = 0)]
    good_index: usize,
    /// Largest population accepted for exact enumeration.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
    enumeration_limit: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = writeln!(
                    err,
                    "{}",
                    rendered.lines().next().unwrap_or("invalid arguments")
                );
            }
            return if code == 0 { EXIT_OK } else { EXIT_VALIDATION };
        }
    };

    let (format, result) = match &cli.command {
        Command::Assure(a) => (a.format, cmd_assure(a)),
        Command::Posterior(a) => (a.format, cmd_posterior(a)),
        Command::Plan(a) => (a.format, cmd_plan(a)),
        Command::Compare(a) => (a.format, cmd_compare(a)),
        Command::Simulate(a) => (a.format, cmd_simulate(a)),
    };
    match result {
        Ok(rendered) => {
            for w in &rendered.envelope.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            match rendered.write(format, out) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_VALIDATION
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoPlan { .. } => EXIT_NO_PLAN,
        Error::CostGuard { .. } => EXIT_COST_GUARD,
        _ => EXIT_VALIDATION,
    }
}

/// Resolves a prior argument: inline JSON, `@file.json`, or `@file.csv`.
pub fn parse_prior(spec: &str) -> Result<Prior> {
    let Some(path) = spec.strip_prefix('@') else {
        return prior_from_json(spec);
    };
    let path = Path::new(path);
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let file = std::fs::File::open(path)?;
    if is_csv {
        Prior::tabulated_from_csv(file)
    } else {
        let text = std::io::read_to_string(file)?;
        prior_from_json(&text)
    }
}

fn prior_from_json(text: &str) -> Result<Prior> {
    serde_json::from_str(text).map_err(|e| Error::InvalidPrior(format!("prior JSON: {e}")))
}

fn frame_inputs(frame: &LotFrame, prior: &Prior) -> Value {
    json!({
        "population": frame.population,
        "sample": frame.sample,
        "observed": frame.observed,
        "prior": prior,
    })
}

fn opt_prob(v: Option<f64>) -> String {
    v.map(fmt_prob).unwrap_or_default()
}

fn cmd_assure(args: &AssureArgs) -> Result<Rendered> {
    let frame = args.frame.frame()?;
    let prior = parse_prior(&args.prior)?;
    let report = match args.ac {
        Some(ac) => assure_with_plan(
            &prior,
            &frame,
            args.k,
            &SamplingPlan::new(frame.sample, ac)?,
        )?,
        None => assure(&prior, &frame, args.k)?,
    };
    let mut inputs = frame_inputs(&frame, &prior);
    inputs["k"] = json!(args.k);
    inputs["ac"] = json!(args.ac);
    let result = json!({
        "p_zero": report.p_zero,
        "p_at_most_k": report.p_at_most_k,
        "k": report.k,
        "marginal_accept": report.marginal_accept,
        "engine": report.engine,
    });
    let row = vec![
        fmt_prob(report.p_zero),
        opt_prob(report.p_at_most_k),
        report.k.map(|k| k.to_string()).unwrap_or_default(),
        opt_prob(report.marginal_accept),
        report.engine.as_str().to_string(),
    ];
    Ok(Rendered::new("assure", inputs, result).csv(
        ["p_zero", "p_at_most_k", "k", "marginal_accept", "engine"],
        vec![row],
    ))
}

fn cmd_posterior(args: &PosteriorArgs) -> Result<Rendered> {
    let frame = args.frame.frame()?;
    let prior = parse_prior(&args.prior)?;
    if let Some(eps) = args.tail_trim {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Domain(format!(
                "tail trim must be a nonnegative number, got {eps}"
            )));
        }
    }
    let table = match &prior {
        Prior::BinomialPsp { delta } => posterior_psp(&frame, *delta)?,
        _ => posterior_general(&prior, &frame)?,
    };
    let trim = args.tail_trim.unwrap_or(0.0);
    let shown: Vec<(usize, f64)> = table
        .mass
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, m)| args.tail_trim.is_none() || *m >= trim)
        .collect();
    let total: f64 = table.mass.iter().sum();
    let mut inputs = frame_inputs(&frame, &prior);
    inputs["tail_trim"] = json!(args.tail_trim);
    let result = json!({
        "engine": table.engine,
        "total_mass": total,
        "entries_shown": shown.len(),
        "table": shown.iter().map(|(a, m)| json!({"A": a, "mass": m})).collect::<Vec<_>>(),
    });
    let rows = shown
        .iter()
        .map(|(a, m)| vec![a.to_string(), fmt_prob(*m)])
        .collect();
    Ok(Rendered::new("posterior", inputs, result).csv(["A", "mass"], rows))
}

fn cmd_plan(args: &PlanArgs) -> Result<Rendered> {
    let (table, source) = match &args.table {
        Some(path) => (PlanTable::from_path(path)?, path.display().to_string()),
        None => (PlanTable::builtin(), "builtin".to_string()),
    };
    let plan = table.lookup(args.lot_size, args.aql)?.clone();
    let delta = elicit_delta(args.aql, args.elicit_factor)?;
    let k = quality_threshold_k(args.lot_size, args.aql)?;
    let prior = Prior::binomial_psp(delta)?;
    let marginal = if plan.ac == 0 {
        marginal_accept_psp(plan.n, delta)?
    } else {
        marginal_accept_general(&prior, args.lot_size, &plan)?
    };
    let inputs = json!({
        "table": source,
        "lot_size": args.lot_size,
        "aql": args.aql,
        "elicit_factor": args.elicit_factor,
    });
    let result = json!({
        "n": plan.n,
        "ac": plan.ac,
        "lot_range": plan.lot_range,
        "delta": delta,
        "k": k,
        "marginal_accept": marginal,
    });
    let row = vec![
        plan.n.to_string(),
        plan.ac.to_string(),
        fmt_prob(delta),
        k.to_string(),
        fmt_prob(marginal),
    ];
    Ok(Rendered::new("plan", inputs, result)
        .csv(["n", "ac", "delta", "k", "marginal_accept"], vec![row]))
}

fn parse_prior_list(specs: &[String]) -> Result<Vec<Prior>> {
    if let [single] = specs {
        if single.trim_start().starts_with('[') {
            return serde_json::from_str(single)
                .map_err(|e| Error::InvalidPrior(format!("prior list JSON: {e}")));
        }
    }
    specs.iter().map(|s| parse_prior(s)).collect()
}

fn cmd_compare(args: &CompareArgs) -> Result<Rendered> {
    let frame = args.frame.frame()?;
    let priors = parse_prior_list(&args.priors)?;
    let reports = priors
        .iter()
        .map(|p| assure(p, &frame, args.k))
        .collect::<Result<Vec<_>>>()?;
    let base = &reports[0];
    let ratio = |num: f64, den: f64| (den > 0.0).then(|| num / den);

    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for r in &reports {
        let zero_ratio = ratio(r.p_zero, base.p_zero);
        let k_ratio = match (r.p_at_most_k, base.p_at_most_k) {
            (Some(a), Some(b)) => ratio(a, b),
            _ => None,
        };
        entries.push(json!({
            "prior": r.prior,
            "engine": r.engine,
            "p_zero": r.p_zero,
            "p_at_most_k": r.p_at_most_k,
            "p_zero_ratio": zero_ratio,
            "p_at_most_k_ratio": k_ratio,
        }));
        rows.push(vec![
            r.prior.kind().to_string(),
            r.engine.as_str().to_string(),
            fmt_prob(r.p_zero),
            opt_prob(r.p_at_most_k),
            opt_prob(zero_ratio),
            opt_prob(k_ratio),
        ]);
    }
    let inputs = json!({
        "population": frame.population,
        "sample": frame.sample,
        "observed": frame.observed,
        "priors": priors,
        "k": args.k,
    });
    let mut rendered = Rendered::new("compare", inputs, json!({ "rows": entries })).csv(
        [
            "prior",
            "engine",
            "p_zero",
            "p_at_most_k",
            "p_zero_ratio",
            "p_at_most_k_ratio",
        ],
        rows,
    );
    if base.p_zero == 0.0 {
        rendered.warn("first prior has p_zero = 0; p_zero ratios omitted");
    }
    Ok(rendered)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Rendered> {
    let prior = parse_prior(&args.prior)?;
    let plan = SamplingPlan::new(args.sample, args.ac)?;
    let population = args.population;
    let mut warnings = Vec::new();

    let inputs = json!({
        "population": population,
        "sample": args.sample,
        "ac": args.ac,
        "prior": prior,
        "trials": (!args.exact).then_some(args.trials),
        "seed": (!args.exact).then_some(args.seed),
        "exact": args.exact,
        "good_index": args.good_index,
    });

    let (mut result, conditional) = if args.exact {
        let conditional =
            enumerate_conditional_with_limit(&prior, population, &plan, args.enumeration_limit)?;
        let rate = marginal_accept_general(&prior, population, &plan)?;
        let result = json!({
            "mode": "exact",
            "acceptance_rate": rate,
            "conditional": conditional,
        });
        (result, conditional)
    } else {
        let config = SimConfig {
            trials: args.trials,
            seed: args.seed,
            prior: prior.clone(),
            population,
            plan: plan.clone(),
        };
        let sim = simulate_conditional(&config)?;
        if sim.is_empty() {
            warnings.push("no lot was accepted; the conditional distribution is empty".to_string());
        }
        let rate = sim.acceptance_rate();
        let se = (rate * (1.0 - rate) / sim.total as f64).sqrt();
        let conditional = sim.frequencies();
        let result = json!({
            "mode": "monte-carlo",
            "acceptance_rate": rate,
            "acceptance_rate_se": se,
            "accepted": sim.accepted,
            "total": sim.total,
            "empty": sim.is_empty(),
            "conditional": conditional,
            "counts": sim.counts,
            "component_counts": sim.component_counts,
        });
        (result, conditional)
    };

    let mut header = vec!["A".to_string(), "probability".to_string()];
    let mut columns = vec![conditional];
    if matches!(prior, Prior::Mixed { .. }) {
        if population <= args.enumeration_limit {
            let report = psp_vs_mixture_report_with_limit(
                &prior,
                args.good_index,
                population,
                &plan,
                args.enumeration_limit,
            )?;
            header.extend(["psp_a0", "mixture_exact", "good_exact"].map(String::from));
            columns.push(report.psp_posteriors[0].mass.clone());
            columns.push(report.mixture_conditional.clone());
            columns.push(report.good_conditional.clone());
            result["comparison"] = json!({
                "good_index": report.good_index,
                "component_weights": report.component_weights,
                "tv_psp_vs_mixture": report.tv_psp_vs_mixture,
                "tv_psp_vs_good": report.tv_psp_vs_good,
                "tv_good_vs_mixture": report.tv_good_vs_mixture,
                "psp_posteriors": report.psp_posteriors.iter().map(|t| json!({
                    "observed": t.frame.observed,
                    "mass": t.mass,
                })).collect::<Vec<_>>(),
                "mixture_conditional": report.mixture_conditional,
                "good_conditional": report.good_conditional,
            });
        } else {
            warnings.push(format!(
                "population {population} exceeds enumeration limit {}; mixture comparison skipped",
                args.enumeration_limit
            ));
        }
    }

    let rows = (0..=population as usize)
        .map(|a| {
            std::iter::once(a.to_string())
                .chain(columns.iter().map(|c| fmt_prob(c[a])))
                .collect()
        })
        .collect();
    let mut rendered = Rendered::new("simulate", inputs, result).csv(header, rows);
    for w in warnings {
        rendered.warn(w);
    }
    Ok(rendered)
}

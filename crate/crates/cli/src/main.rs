//! Command-line front-end: run policy simulations, compute the exact-rational
//! dynamic-program lower bound, reproduce the ratio-curve CSV, emit the bound
//! table, and estimate Markov-chain statistics. Every subcommand is
//! deterministic given its full flag set (including the seed) and writes CSV
//! with stable headers to stdout or `--out`.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;

use hiring_core::analysis;
use hiring_core::dp;
use hiring_core::markov::{self, ChainSpec, Family};
use hiring_core::policies::{two_concurrent, PolicySpec};
use hiring_core::{run_batch, Distribution, Error};

#[derive(Parser)]
#[command(name = "hiring", about = "Online hiring-over-time simulator and bound checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a policy against a cost distribution and report paired
    /// policy/optimum statistics.
    Simulate(SimulateArgs),
    /// Exact-rational dynamic program: the optimal-online cost table and its
    /// lower-bound ratio.
    Dp(DpArgs),
    /// Ratio curves on a log-spaced horizon grid: Monte Carlo halving-policy
    /// ratio, exact DP ratio, and the analytic lower-bound curve.
    Figure4(Figure4Args),
    /// Re-evaluate every analytic bound and constant chain.
    Bounds(BoundsArgs),
    /// Simulate a hiring-count Markov chain and compare against closed forms.
    Markov(MarkovArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Tier {
    Smoke,
    Standard,
    Full,
}

impl Tier {
    /// Largest DP horizon allowed without the full tier.
    fn dp_cap(self) -> u64 {
        match self {
            Tier::Smoke => 128,
            Tier::Standard => 2_000,
            Tier::Full => u64::MAX,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON file with the same keys as the flags; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Policy name: alg1..alg5 or dp.
    #[arg(long)]
    policy: Option<String>,
    /// Distribution: uniform01 | exp:RATE | pareto:SHAPE,SCALE.
    #[arg(long)]
    dist: Option<String>,
    /// Horizon(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Threshold scale for the halving policy (alg2).
    #[arg(long)]
    c: Option<f64>,
    /// Waiting multiplier for the sampling policy (alg4).
    #[arg(long)]
    lambda: Option<u64>,
    /// Bill only the in-horizon part of each contract.
    #[arg(long)]
    truncate_at_n: bool,
    /// Hide the horizon from the policy.
    #[arg(long)]
    unknown_n: bool,
    /// Wrap the policy so at most two contracts ever overlap.
    #[arg(long)]
    two_concurrent: bool,
}

#[derive(Args)]
struct DpArgs {
    #[arg(long)]
    n: u64,
    /// Emit the ratio for every horizon up to n as CSV.
    #[arg(long)]
    curve: bool,
    /// Denominator bound exponent for downward rounding (denominators <= 2^D).
    #[arg(long)]
    denominator_bound: Option<u32>,
    #[arg(long, value_enum, default_value = "standard")]
    tier: Tier,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Figure4Args {
    #[arg(long)]
    n_max: u64,
    /// Replications for the Monte Carlo ratio column.
    #[arg(long, default_value_t = 10_000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "standard")]
    tier: Tier,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MarkovArgs {
    /// Chain family: the birth-death hiring chain or the two-track variant.
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = 1_000_000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    match s.to_ascii_lowercase().as_str() {
        "mhat" | "m_hat" | "m" => Ok(Family::MHat),
        "nhat" | "n_hat" | "n" => Ok(Family::NHat),
        other => Err(format!("unknown family '{other}' (expected mhat or nhat)")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Dp(a) => cmd_dp(a),
        Command::Figure4(a) => cmd_figure4(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Markov(a) => cmd_markov(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::CoverageViolation { .. } => 3,
        Error::ResourceLimit(_) | Error::StepLimit(_) => 4,
        _ => 2,
    }
}

fn write_output(out: Option<&PathBuf>, body: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, body)
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .map_err(|e| Error::InvalidInput(format!("stdout: {e}")))
        }
    }
}

fn parse_dist(spec: &str) -> Result<Distribution, Error> {
    let lower = spec.to_ascii_lowercase();
    if lower == "uniform01" || lower == "uniform" {
        return Ok(Distribution::uniform01());
    }
    if let Some(rate) = lower.strip_prefix("exp:").or_else(|| lower.strip_prefix("exponential:")) {
        let rate: f64 = rate
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad exponential rate '{rate}'")))?;
        return Distribution::exponential(rate);
    }
    if let Some(params) = lower.strip_prefix("pareto:") {
        let parts: Vec<&str> = params.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::InvalidInput(format!(
                "pareto needs shape,scale, got '{params}'"
            )));
        }
        let shape: f64 = parts[0]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad pareto shape '{}'", parts[0])))?;
        let scale: f64 = parts[1]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad pareto scale '{}'", parts[1])))?;
        return Distribution::pareto(shape, scale);
    }
    Err(Error::InvalidInput(format!("unknown distribution '{spec}'")))
}

/// Fold config-file values into unset flags.
fn merge_config(args: &mut SimulateArgs) -> Result<(), Error> {
    let Some(path) = &args.config else { return Ok(()) };
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("bad JSON config: {e}")))?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::InvalidInput("config root must be an object".into()))?;
    let bad = |key: &str| Error::InvalidInput(format!("bad config value for '{key}'"));

    for (key, value) in obj {
        match key.as_str() {
            "policy" => {
                if args.policy.is_none() {
                    args.policy = Some(value.as_str().ok_or_else(|| bad(key))?.to_string());
                }
            }
            "dist" => {
                if args.dist.is_none() {
                    args.dist = Some(value.as_str().ok_or_else(|| bad(key))?.to_string());
                }
            }
            "n" => {
                if args.n.is_empty() {
                    match value {
                        serde_json::Value::Number(x) => {
                            args.n = vec![x.as_u64().ok_or_else(|| bad(key))?]
                        }
                        serde_json::Value::Array(xs) => {
                            args.n = xs
                                .iter()
                                .map(|x| x.as_u64().ok_or_else(|| bad(key)))
                                .collect::<Result<_, _>>()?
                        }
                        _ => return Err(bad(key)),
                    }
                }
            }
            "reps" => {
                if args.reps.is_none() {
                    args.reps = Some(value.as_u64().ok_or_else(|| bad(key))?);
                }
            }
            "seed" => {
                if args.seed.is_none() {
                    args.seed = Some(value.as_u64().ok_or_else(|| bad(key))?);
                }
            }
            "out" => {
                if args.out.is_none() {
                    args.out = Some(PathBuf::from(value.as_str().ok_or_else(|| bad(key))?));
                }
            }
            "c" => {
                if args.c.is_none() {
                    args.c = Some(value.as_f64().ok_or_else(|| bad(key))?);
                }
            }
            "lambda" => {
                if args.lambda.is_none() {
                    args.lambda = Some(value.as_u64().ok_or_else(|| bad(key))?);
                }
            }
            "truncate_at_n" => args.truncate_at_n |= value.as_bool().ok_or_else(|| bad(key))?,
            "unknown_n" => args.unknown_n |= value.as_bool().ok_or_else(|| bad(key))?,
            "two_concurrent" => args.two_concurrent |= value.as_bool().ok_or_else(|| bad(key))?,
            other => return Err(Error::InvalidInput(format!("unknown config key '{other}'"))),
        }
    }
    Ok(())
}

fn cmd_simulate(mut args: SimulateArgs) -> Result<(), Error> {
    merge_config(&mut args)?;
    let policy_name = args
        .policy
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("--policy is required".into()))?;
    let spec = PolicySpec::from_name(policy_name, args.c, args.lambda)?;
    let dist = parse_dist(args.dist.as_deref().unwrap_or("uniform01"))?;
    if args.n.is_empty() {
        return Err(Error::InvalidInput("--n is required".into()));
    }
    let reps = args.reps.unwrap_or(1_000);
    let seed = args.seed.unwrap_or(0);
    if args.n.iter().any(|&n| n == 0) || reps == 0 {
        return Err(Error::InvalidInput("n and reps must be positive".into()));
    }
    if args.two_concurrent && !spec.supports_wrapper() {
        return Err(Error::InvalidInput(format!(
            "policy {} does not support the two-concurrent wrapper",
            spec.name()
        )));
    }

    let mut body = String::from(
        "policy,n,dist,reps,seed,mean_cost,stderr,opt_mean,opt_stderr,ratio,max_concurrency,mean_hires\n",
    );
    for &n in &args.n {
        let horizon = if args.unknown_n { None } else { Some(n) };
        let factory = spec.factory(horizon, &dist)?;
        let make = || {
            let base = factory.make();
            if args.two_concurrent {
                two_concurrent(base)
            } else {
                base
            }
        };
        let report = run_batch(make, &dist, n, reps, seed, args.truncate_at_n)?;
        body.push_str(&format!(
            "{},{},{},{},{},{:.10},{},{:.10},{},{:.10},{},{:.6}\n",
            spec.name(),
            n,
            dist.label(),
            reps,
            seed,
            report.mean_cost,
            fmt_opt(report.stderr_cost),
            report.mean_opt,
            fmt_opt(report.stderr_opt),
            report.ratio_of_means,
            report.max_concurrency,
            report.mean_hires,
        ));
    }
    write_output(args.out.as_ref(), &body)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.10}")).unwrap_or_default()
}

fn check_dp_cap(n: u64, tier: Tier) -> Result<(), Error> {
    if n > tier.dp_cap() {
        return Err(Error::ResourceLimit(format!(
            "horizon {n} exceeds the {} tier cap {}; pass --tier full",
            match tier {
                Tier::Smoke => "smoke",
                Tier::Standard => "standard",
                Tier::Full => "full",
            },
            tier.dp_cap()
        )));
    }
    Ok(())
}

fn cmd_dp(args: DpArgs) -> Result<(), Error> {
    if args.n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    check_dp_cap(args.n, args.tier)?;
    let bits = args.denominator_bound.unwrap_or_else(dp::default_denominator_bound);
    let table = dp::compute_table(args.n, bits, false)?;
    let mut body = String::new();
    if args.curve {
        body.push_str("n,cost,opt,ratio\n");
        for i in 1..=args.n {
            let cost = table.first_column()[i as usize - 1].to_f64().unwrap();
            let opt = analysis::opt_uniform(i);
            body.push_str(&format!("{},{:.10},{:.10},{:.10}\n", i, cost, opt, dp::ratio_at(&table, i)));
        }
    } else {
        let value = table.value();
        body.push_str(&format!(
            "C({}, 0) = {} = {:.10}\nH_{} - 1 = {:.10}\nratio = {:.10}\n",
            args.n,
            value,
            value.to_f64().unwrap(),
            args.n + 1,
            analysis::opt_uniform(args.n),
            dp::lower_bound_ratio(&table),
        ));
    }
    write_output(args.out.as_ref(), &body)
}

fn cmd_figure4(args: Figure4Args) -> Result<(), Error> {
    // The analytic lower-bound curve crosses the DP ratio from above around
    // n = 20; the grid starts past the crossover so the lower-bound relation
    // holds at every emitted row.
    if args.n_max < 24 {
        return Err(Error::InvalidInput("n_max must be at least 24".into()));
    }
    check_dp_cap(args.n_max, args.tier)?;
    let table = dp::compute_table(args.n_max, dp::default_denominator_bound(), false)?;
    let dist = Distribution::uniform01();
    let spec = PolicySpec::Alg2 { c: PolicySpec::DEFAULT_C };

    // Log-spaced grid from 24 to n_max, deduplicated after rounding.
    let mut grid: Vec<u64> = Vec::new();
    let points = 25usize;
    for i in 0..=points {
        let n = (24.0 * (args.n_max as f64 / 24.0).powf(i as f64 / points as f64)).round() as u64;
        if grid.last() != Some(&n) {
            grid.push(n);
        }
    }

    let mut body = String::from("n,alg2_ratio,dp_ratio,gm_lower\n");
    for &n in &grid {
        let factory = spec.factory(Some(n), &dist)?;
        let report = run_batch(|| factory.make(), &dist, n, args.reps, args.seed, false)?;
        body.push_str(&format!(
            "{},{:.10},{:.10},{:.10}\n",
            n,
            report.ratio_of_means,
            dp::ratio_at(&table, n),
            analysis::gilbert_mosteller_lower_curve(n),
        ));
    }
    write_output(args.out.as_ref(), &body)
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), Error> {
    let mut reports = analysis::verify_ratio_constants();
    for (label, d) in [
        ("uniform01", Distribution::uniform01()),
        ("exp(1)", Distribution::exponential(1.0)?),
    ] {
        let hi = d.quantile(1.0 - 1e-9)?;
        let grid: Vec<f64> = (0..=400).map(|i| hi * i as f64 / 400.0).collect();
        let mut r = analysis::g_monotone_check(&d, &grid);
        r.name = format!("{}[{}]", r.name, label);
        reports.push(r);
    }
    for n in [9u64, 17, 64] {
        let k = (n as f64).log2().ceil() as u32 - 2;
        for r in 1..=k {
            reports.push(analysis::alpha_band_check(r, n)?);
        }
    }

    let mut body = String::from("name,n,value,bound,satisfied\n");
    for r in &reports {
        body.push_str(&format!(
            "{},{},{:.10},{:.10},{}\n",
            r.name,
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            r.value,
            r.bound,
            r.satisfied,
        ));
    }
    write_output(args.out.as_ref(), &body)
}

fn cmd_markov(args: MarkovArgs) -> Result<(), Error> {
    let spec = ChainSpec::new(args.family, args.p, args.k)?;
    let stats = markov::simulate_chain(spec, args.reps, args.seed)?;
    let k = args.k as usize;

    // `reference_kind` says how to read the reference column: `exact` rows
    // carry a closed-form expectation (sigmas = deviation in standard errors),
    // `upper_bound` rows an analytic bound the simulated mean must stay under.
    let mut body = String::from("quantity,reference,reference_kind,simulated,stderr,sigmas\n");
    let mut exact = |name: String, expected: f64, est: &markov::Estimate| {
        body.push_str(&format!(
            "{},{:.10},exact,{:.10},{:.10},{:.4}\n",
            name,
            expected,
            est.mean,
            est.stderr,
            est.sigmas_from(expected),
        ));
    };
    match args.family {
        Family::MHat => {
            let visits = markov::mhat_visits(args.p, args.k)?;
            for (j, est) in stats.visits.iter().enumerate() {
                exact(format!("visits_{j}"), visits[j], est);
            }
            let hitting = markov::mhat_hitting_time(args.p, args.k, 0)?;
            exact("total_transitions".into(), hitting, &stats.total_transitions);
        }
        Family::NHat => {
            let (h, _, _) = markov::nhat_ab_transitions(args.p, args.k)?;
            exact(
                "ab_transitions".into(),
                h,
                stats.ab_transitions.as_ref().expect("nhat tracks a->b"),
            );
            exact("visits_b{k}".replace("{k}", &k.to_string()), 1.0, &stats.visits[2 * k + 1]);
            let (bj_bound, visit_bound) = markov::nhat_bj_transitions(args.p)?;
            let mut bound = |name: String, value: f64, est: &markov::Estimate| {
                body.push_str(&format!(
                    "{},{:.10},upper_bound,{:.10},{:.10},\n",
                    name, value, est.mean, est.stderr,
                ));
            };
            // Visits to non-absorbing B-states obey the analytic cap; the
            // per-state remaining-transition profiles have no per-replication
            // statistic, so B-level quantities are reported against bounds.
            for j in 0..k {
                bound(format!("visits_b{j}"), visit_bound, &stats.visits[k + 1 + j]);
            }
            let bj = stats.bj_to_a.as_ref().expect("nhat tracks b->a per level");
            for (j, est) in bj.iter().enumerate() {
                bound(format!("bj_to_a_{j}"), bj_bound, est);
            }
        }
    }
    write_output(args.out.as_ref(), &body)
}

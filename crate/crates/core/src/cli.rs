//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use genetic_drift::algorithm::{Algorithm, RunConfig, TrackedBits, UpdateRule};
use genetic_drift::experiments::persist::{partial_path, write_run_records, write_table};
use genetic_drift::experiments::{
    balanced_k, border_census, bstep_frequency_experiment, bstep_table, clt_diagnostic,
    coupon_collector_experiment, default_budget, hitting_table, hitting_time_experiment,
    runtime_sweep_to_files, CouponConfig, HittingConfig, HittingMode, SweepConfig,
};
use genetic_drift::verify::verify_bounds;
use genetic_drift::{run, Error, OneMax};

#[derive(Debug, Parser)]
#[command(
    name = "genetic-drift",
    version,
    about = "cGA and MMAS on OneMax: runs, sweeps and bound checks",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single run; prints a one-line summary.
    Run(RunArgs),
    /// Runtime sweep over n and update strength.
    Sweep(SweepArgs),
    /// Border census at a fixed checkpoint.
    Census(CensusArgs),
    /// b-step frequency with all marginals frozen at 1/2.
    BstepFreq(BstepArgs),
    /// Single-bit hitting times.
    HittingTime(HittingArgs),
    /// Normality of the rescaled cGA random walk.
    Clt(CltArgs),
    /// Recovery time with some bits starting at the lower border.
    Coupon(CouponArgs),
    /// Analytical bounds against exact oracles.
    VerifyBounds(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Base seed; chosen from the clock and printed if omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub algo: Option<Algorithm>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "K", conflicts_with = "rho")]
    pub k: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Iteration budget (default 100 n ln n).
    #[arg(long)]
    pub budget: Option<u64>,
    /// Run-record output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// none, all or sample:<k>.
    #[arg(long, default_value = "none")]
    pub tracked: TrackedBits,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub algo: Option<Algorithm>,
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long = "K", value_delimiter = ',', conflicts_with = "rho")]
    pub k: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Data CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary CSV (default: <out>.summary.csv).
    #[arg(long)]
    pub summary_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Continue from an existing <out>.partial.
    #[arg(long)]
    pub resume: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    #[arg(long)]
    pub algo: Option<Algorithm>,
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long = "K", value_delimiter = ',', conflicts_with = "rho")]
    pub k: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Iterations per run (default ceil(n ln n) per n).
    #[arg(long)]
    pub checkpoint: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BstepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [17usize, 65, 257])]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct HittingArgs {
    /// rw-only or full-algo.
    #[arg(long, default_value = "rw-only")]
    pub mode: HittingMode,
    #[arg(long, default_value = "cga")]
    pub algo: Algorithm,
    #[arg(long = "K", conflicts_with = "rho")]
    pub k: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Signed target displacement.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub s: f64,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    pub start: f64,
    /// Stop once min(p, 1 - p) <= border.
    #[arg(long)]
    pub border: Option<f64>,
    /// Problem size in full-algo mode.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CltArgs {
    #[arg(long = "K", default_value_t = 100)]
    pub k: u64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CouponArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Bits starting at the lower border.
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    #[arg(long, default_value = "cga")]
    pub algo: Algorithm,
    /// Default ceil(sqrt(n) ln n).
    #[arg(long = "K", conflicts_with = "rho")]
    pub k: Option<f64>,
    /// Default 1 / ceil(sqrt(n) ln n).
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Comma-separated families to run.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub common: Common,
}

/// Splices `--config` file entries into `args` right after the subcommand,
/// so that explicit flags, which come later, override them.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let path = strs.iter().enumerate().find_map(|(i, a)| {
        a.strip_prefix("--config=")
            .map(str::to_string)
            .or_else(|| (a == "--config").then(|| strs.get(i + 1).cloned()).flatten())
    });
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let table: toml::Table = text.parse().map_err(|e| format!("config {path}: {e}"))?;
    let given_strength = strs.iter().any(|a| a.starts_with("--K") || a.starts_with("--rho"));
    let mut extra = Vec::new();
    for (key, value) in table {
        if key == "config" || (given_strength && (key == "K" || key == "rho")) {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            toml::Value::Boolean(true) => extra.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(scalar).collect::<Result<_, _>>()?;
                extra.push(format!("{flag}={}", joined.join(",")));
            }
            other => extra.push(format!("{flag}={}", scalar(&other)?)),
        }
    }
    let sub = strs.iter().skip(1).position(|a| !a.starts_with('-')).map_or(1, |p| p + 2);
    let mut out = args;
    let tail = out.split_off(sub.min(out.len()));
    out.extend(extra.into_iter().map(OsString::from));
    out.extend(tail);
    Ok(out)
}

fn scalar(v: &toml::Value) -> Result<String, String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        other => Err(format!("unsupported config value {other}")),
    }
}

/// Usage error for subcommand `sub`: prints usage and exits with status 2.
fn usage_error(sub: &str, msg: impl std::fmt::Display) -> ! {
    let mut cmd = Cli::command();
    cmd.build();
    let mut sc = cmd.find_subcommand_mut(sub).expect("known subcommand").clone();
    sc.error(ErrorKind::InvalidValue, msg).exit()
}

enum Failure {
    Usage(String),
    Runtime(Error),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Domain(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn seed_or_pick(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64);
        eprintln!("seed: {s}");
        s
    })
}

/// Fails early when `path` cannot be created.
fn check_writable(path: &Path) -> Result<(), Failure> {
    let probe = partial_path(path);
    let existed = probe.exists();
    match File::options().create(true).append(true).open(&probe) {
        Ok(_) => {
            if !existed {
                let _ = fs::remove_file(&probe);
            }
            Ok(())
        }
        Err(e) => Err(Failure::Runtime(Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot write {}: {e}", path.display()),
        )))),
    }
}

fn single_rule(algo: Algorithm, k: Option<f64>, rho: Option<f64>) -> Result<UpdateRule, Failure> {
    match (algo, k, rho) {
        (Algorithm::Cga, Some(k), None) => Ok(UpdateRule::cga(k)?),
        (Algorithm::Mmas, None, Some(rho)) => Ok(UpdateRule::mmas(rho)?),
        (Algorithm::Cga, None, _) => Err(Failure::Usage("cga needs --K".into())),
        (Algorithm::Mmas, _, None) => Err(Failure::Usage("mmas needs --rho".into())),
        (Algorithm::Cga, Some(_), Some(_)) | (Algorithm::Mmas, Some(_), Some(_)) => {
            Err(Failure::Usage("--K and --rho are mutually exclusive".into()))
        }
    }
}

fn strengths(algo: Algorithm, k: &[f64], rho: &[f64]) -> Result<Vec<f64>, Failure> {
    match algo {
        Algorithm::Cga if !rho.is_empty() => Err(Failure::Usage("cga takes --K, not --rho".into())),
        Algorithm::Mmas if !k.is_empty() => Err(Failure::Usage("mmas takes --rho, not --K".into())),
        Algorithm::Cga if k.is_empty() => Err(Failure::Usage("cga needs --K".into())),
        Algorithm::Mmas if rho.is_empty() => Err(Failure::Usage("mmas needs --rho".into())),
        Algorithm::Cga => k
            .iter()
            .map(|&k| {
                UpdateRule::cga(k)?;
                Ok(1.0 / k)
            })
            .collect(),
        Algorithm::Mmas => Ok(rho.to_vec()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    use std::io::Write;
    // a closed pipe (`| head`) is not an error worth a panic
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn cmd_run(a: RunArgs) -> CmdResult {
    let algo = a.algo.ok_or_else(|| Failure::Usage("--algo is required".into()))?;
    let n = a.n.ok_or_else(|| Failure::Usage("--n is required".into()))?;
    let rule = single_rule(algo, a.k, a.rho)?;
    let mut cfg = RunConfig::new(n, rule, a.budget.unwrap_or_else(|| default_budget(n)));
    cfg.tracked = a.tracked;
    cfg.initial_model()?;
    if cfg.budget == 0 {
        return Err(Failure::Usage("budget must be at least 1".into()));
    }
    if let Some(out) = &a.out {
        check_writable(out)?;
    }
    let seed = seed_or_pick(a.common.seed);
    let r = run(&cfg, seed, &OneMax)?;
    if let Some(out) = &a.out {
        write_run_records(out, std::slice::from_ref(&r))?;
    }
    let param = match rule {
        UpdateRule::Cga { k } => format!("K={k}"),
        UpdateRule::Mmas { rho } => format!("rho={rho}"),
    };
    let outcome = match r.iterations {
        Some(t) => format!("optimum after {t} iterations ({} evaluations)", r.evaluations),
        None => format!("censored after {} iterations", r.iterations_run),
    };
    println!(
        "{algo} n={n} {param} seed={seed}: {outcome}, lower-border hits {}, upper-border hits {}",
        r.lower_border_hits, r.upper_border_hits
    );
    Ok(())
}

fn default_summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.csv"))
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    let algo = a.algo.ok_or_else(|| Failure::Usage("--algo is required".into()))?;
    if a.n.is_empty() {
        return Err(Failure::Usage("--n is required".into()));
    }
    let out = a.out.ok_or_else(|| Failure::Usage("--out is required".into()))?;
    let mut cfg = SweepConfig::new(algo, a.n, strengths(algo, &a.k, &a.rho)?, a.trials);
    cfg.budget = a.budget;
    cfg.jobs = a.jobs;
    cfg.validate()?;
    let summary_out = a.summary_out.unwrap_or_else(|| default_summary_path(&out));
    if !a.resume {
        check_writable(&out)?;
    }
    check_writable(&summary_out)?;
    cfg.base_seed = seed_or_pick(a.common.seed);
    let data = runtime_sweep_to_files(&cfg, &out, &summary_out, a.resume, |done, total| {
        eprintln!("progress: {done}/{total} runs");
    })?;
    println!(
        "wrote {} rows to {} and summary to {}",
        data.rows.len(),
        out.display(),
        summary_out.display()
    );
    Ok(())
}

fn cmd_census(a: CensusArgs) -> CmdResult {
    let algo = a.algo.ok_or_else(|| Failure::Usage("--algo is required".into()))?;
    if a.n.is_empty() {
        return Err(Failure::Usage("--n is required".into()));
    }
    let strengths = strengths(algo, &a.k, &a.rho)?;
    let mut base = SweepConfig::new(algo, a.n.clone(), strengths.clone(), a.trials);
    base.tracked_bits = TrackedBits::All;
    base.jobs = a.jobs;
    base.validate()?;
    if a.checkpoint == Some(0) {
        return Err(Failure::Usage("checkpoint must be at least 1".into()));
    }
    if let Some(out) = &a.out {
        check_writable(out)?;
    }
    let seed = seed_or_pick(a.common.seed);
    let mut table = None;
    for (idx, &n) in a.n.iter().enumerate() {
        let checkpoint = a.checkpoint.unwrap_or_else(|| (n as f64 * (n as f64).ln()).ceil() as u64);
        let mut cfg = base.clone();
        cfg.n_values = vec![n];
        cfg.base_seed = seed.wrapping_add((idx * strengths.len() * a.trials) as u64);
        let res = border_census(&cfg, checkpoint)?;
        for (cell, &s) in strengths.iter().enumerate() {
            let hits: Vec<usize> = res.lower_hits()[cell * a.trials..(cell + 1) * a.trials].to_vec();
            let mean = hits.iter().sum::<usize>() as f64 / hits.len() as f64;
            println!(
                "{algo} n={n} strength={s} checkpoint={checkpoint}: lower-border bits mean {mean:.2}, min {}, max {}",
                hits.iter().min().unwrap_or(&0),
                hits.iter().max().unwrap_or(&0)
            );
        }
        match &mut table {
            None => table = Some(res.table),
            Some(t) => t.rows.extend(res.table.rows),
        }
    }
    if let (Some(out), Some(t)) = (&a.out, &table) {
        write_table(out, t)?;
    }
    Ok(())
}

fn cmd_bstep(a: BstepArgs) -> CmdResult {
    if let Some(out) = &a.out {
        check_writable(out)?;
    }
    let seed = seed_or_pick(a.common.seed);
    let rows = bstep_frequency_experiment(&a.n, a.trials, seed, a.jobs)?;
    for r in &rows {
        println!(
            "n={}: empirical {:.6} (se {:.6}), exact {:.6}, ratio {:.4}",
            r.n,
            r.empirical,
            r.se,
            r.exact,
            r.empirical / r.exact
        );
    }
    if let Some(out) = &a.out {
        write_table(out, &bstep_table(&rows))?;
    }
    Ok(())
}

fn cmd_hitting(a: HittingArgs) -> CmdResult {
    let param = match (a.algo, a.k, a.rho) {
        (Algorithm::Cga, Some(k), None) => k,
        (Algorithm::Mmas, None, Some(rho)) => rho,
        _ => return Err(Failure::Usage("cga needs --K, mmas needs --rho".into())),
    };
    let mut cfg = HittingConfig::new(a.mode, a.algo, param, a.s, a.alpha, a.trials);
    cfg.budget = a.budget;
    cfg.start = a.start;
    cfg.border = a.border;
    cfg.n = a.n;
    cfg.jobs = a.jobs;
    cfg.validate()?;
    if let Some(out) = &a.out {
        check_writable(out)?;
    }
    cfg.base_seed = seed_or_pick(a.common.seed);
    let res = hitting_time_experiment(&cfg)?;
    if let Some(out) = &a.out {
        write_table(out, &hitting_table(&cfg, &res.samples))?;
    }
    let s = &res.summary;
    if a.json {
        print_json(s);
    } else {
        println!(
            "window {:.3}: P(not bridged or border) = {:.4} (se {:.4}), bound {:.4}; P(bridged in window) = {:.4}, \
             first-statement formula {:.3e}; mean T {:.2} (sd {:.2}), censored {}",
            s.window,
            s.not_bridged,
            s.not_bridged_se,
            s.bound,
            s.bridged,
            s.first_statement,
            s.mean_t,
            s.sd_t,
            s.censored
        );
    }
    Ok(())
}

fn cmd_clt(a: CltArgs) -> CmdResult {
    let seed = seed_or_pick(a.common.seed);
    let s = clt_diagnostic(a.k, a.steps, a.trials, seed, a.jobs)?;
    if a.json {
        print_json(&s);
    } else {
        println!(
            "K={} steps={} trials={}: KS distance {:.4}, mean {:.4}, sd {:.4}{}",
            s.k,
            s.steps,
            s.trials,
            s.ks_distance,
            s.mean,
            s.sd,
            if s.low_confidence { " (low confidence: fewer than 100 trials)" } else { "" }
        );
    }
    Ok(())
}

fn cmd_coupon(a: CouponArgs) -> CmdResult {
    let k = balanced_k(a.n);
    let rule = match (a.algo, a.k, a.rho) {
        (Algorithm::Cga, k_flag, None) => UpdateRule::cga(k_flag.unwrap_or(k))?,
        (Algorithm::Mmas, None, rho) => UpdateRule::mmas(rho.unwrap_or(1.0 / k))?,
        _ => return Err(Failure::Usage("cga takes --K, mmas takes --rho".into())),
    };
    let cfg = CouponConfig {
        n: a.n,
        m: a.m,
        rule,
        trials: a.trials,
        budget: a.budget,
        base_seed: seed_or_pick(a.common.seed),
        jobs: a.jobs,
    };
    let s = coupon_collector_experiment(&cfg)?;
    if a.json {
        print_json(&s);
    } else {
        let claim = match (s.threshold, s.at_least_threshold) {
            (Some(t), Some(f)) => format!("threshold {t:.2}: reached in {:.1}% of trials", 100.0 * f),
            _ => "no threshold for m < 2".to_string(),
        };
        println!(
            "n={} m={}: mean {:.1}, median {:.1}, censored {}; {claim}",
            s.n, s.m, s.mean, s.median, s.censored
        );
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let seed = seed_or_pick(a.common.seed);
    let checks = verify_bounds(&a.only, seed)?;
    if a.json {
        print_json(&checks);
    } else {
        for c in &checks {
            println!(
                "{} {:<14} {:<48} value {:<14.6e} reference {:.6e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.family,
                c.name,
                c.value,
                c.reference
            );
        }
    }
    if checks.iter().all(|c| c.pass) {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

/// Runs the parsed command and returns the process exit status.
pub fn dispatch(cli: Cli) -> i32 {
    let (name, result) = match cli.command {
        Command::Run(a) => ("run", cmd_run(a)),
        Command::Sweep(a) => ("sweep", cmd_sweep(a)),
        Command::Census(a) => ("census", cmd_census(a)),
        Command::BstepFreq(a) => ("bstep-freq", cmd_bstep(a)),
        Command::HittingTime(a) => ("hitting-time", cmd_hitting(a)),
        Command::Clt(a) => ("clt", cmd_clt(a)),
        Command::Coupon(a) => ("coupon", cmd_coupon(a)),
        Command::VerifyBounds(a) => ("verify-bounds", cmd_verify(a)),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => usage_error(name, msg),
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(Failure::Checks) => 1,
    }
}

//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;

use crate::channel::{log_likelihood, substream, transmit, Bsc};
use crate::error::{Error, Result};
use crate::exponents::{
    emit_curve, jml_lb_exponent, random_coding_exponent, CurveKind, ExponentCurve,
};
use crate::harness::{
    self, preset, CurveRequest, ExperimentConfig, Policy, Preset, SchedulePoint, SpcDecoder,
};
use crate::numerics::{gv_distance, gv_inverse};
use crate::policy_adaptive::Posterior;
use crate::policy_block::{
    gen_random_codebook, gen_spc_codebook, jml_decode, ml_decode, sc_decode,
};
use crate::target::{merge, quantize, quantized_cost, split};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SELFTEST: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "uepq", version, about = "Noisy 20 questions over a BSC")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample analytic error-exponent curves to CSV.
    Exponents(ExponentsArgs),
    /// Run a Monte Carlo comparison of querying policies.
    Simulate(SimulateArgs),
    /// Generate a codebook and write it in the hex dump format.
    Codebook(CodebookArgs),
    /// Run the fast invariant checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct ExponentsArgs {
    #[arg(long, conflicts_with = "kind")]
    pub preset: Option<String>,
    /// Curve name, e.g. Er, Eq_spc, E_MSBs_SC, E_MSBs_JML_LB.
    #[arg(long, required_unless_present = "preset")]
    pub kind: Option<String>,
    #[arg(long, default_value_t = 0.3)]
    pub eps: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub r2: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// Output file for `--kind` (stdout if absent), directory for `--preset`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub policy: Vec<Policy>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, conflicts_with_all = ["k1", "k2"])]
    pub k: Option<u32>,
    #[arg(long, requires = "k2")]
    pub k1: Option<u32>,
    #[arg(long, requires = "k1")]
    pub k2: Option<u32>,
    /// Number of queries; a comma-separated list gives a schedule.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub decoder: Option<SpcDecoder>,
    #[arg(long)]
    pub fixed_codebook: bool,
    /// Worker threads; defaults to `UEPQ_THREADS` or the machine.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CodebookArgs {
    /// `rc` or `spc`.
    #[arg(long, default_value = "rc")]
    pub policy: Policy,
    #[arg(long, conflicts_with_all = ["k1", "k2"])]
    pub k: Option<u32>,
    #[arg(long)]
    pub k1: Option<u32>,
    #[arg(long)]
    pub k2: Option<u32>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => EXIT_IO,
                _ => EXIT_CONFIG,
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Exponents(args) => cmd_exponents(&args).map(|_| EXIT_OK),
        Command::Simulate(args) => cmd_simulate(&args).map(|_| EXIT_OK),
        Command::Codebook(args) => cmd_codebook(&args).map(|_| EXIT_OK),
        Command::Selftest => {
            let report = run_selftest();
            for check in &report {
                println!(
                    "{} {}{}",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    if check.detail.is_empty() {
                        String::new()
                    } else {
                        format!(" ({})", check.detail)
                    }
                );
            }
            Ok(if report.iter().all(|c| c.passed) {
                EXIT_OK
            } else {
                EXIT_SELFTEST
            })
        }
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_curve<W: Write>(mut out: W, curve: &ExponentCurve, grid: usize) -> Result<()> {
    writeln!(
        out,
        "# uepq {} curve={} eps={} grid={grid}",
        env!("CARGO_PKG_VERSION"),
        curve.label,
        curve.channel_eps
    )?;
    for note in &curve.notes {
        writeln!(out, "# note: {note}")?;
    }
    curve.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn report_curve(curve: &ExponentCurve, dest: &str) {
    let (first, last) = (curve.points.first(), curve.points.last());
    if let (Some(a), Some(b)) = (first, last) {
        eprintln!(
            "{} (eps = {}): {} points on R in [{:.6e}, {:.6e}] -> {dest}",
            curve.label,
            curve.channel_eps,
            curve.points.len(),
            a.rate,
            b.rate
        );
    }
    for note in &curve.notes {
        eprintln!("  note: {note}");
    }
}

pub fn cmd_exponents(args: &ExponentsArgs) -> Result<Vec<PathBuf>> {
    if let Some(name) = &args.preset {
        let Preset::Curves(requests) = preset(name)? else {
            return Err(Error::Config(format!(
                "preset {name:?} is a simulation; use `simulate --preset {name}`"
            )));
        };
        let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        let mut written = Vec::new();
        for CurveRequest { kind, eps, grid } in requests {
            let grid = args.grid.unwrap_or(grid);
            let curve = emit_curve(kind, eps, grid)?;
            let path = dir.join(format!("{name}_{}.csv", kind.name()));
            write_curve(BufWriter::new(File::create(&path)?), &curve, grid)?;
            report_curve(&curve, &path.display().to_string());
            written.push(path);
        }
        return Ok(written);
    }
    let name = args
        .kind
        .as_deref()
        .ok_or_else(|| Error::Config("either --preset or --kind is required".into()))?;
    let kind = CurveKind::from_parts(name, args.alpha, args.r2)?;
    let grid = args.grid.unwrap_or(100);
    let curve = emit_curve(kind, args.eps, grid)?;
    write_curve(open_output(args.out.as_deref())?, &curve, grid)?;
    let dest = args
        .out
        .as_ref()
        .map_or_else(|| "stdout".to_string(), |p| p.display().to_string());
    report_curve(&curve, &dest);
    Ok(args.out.iter().cloned().collect())
}

/// Resolves the experiment configuration from a preset, a JSON file or flags,
/// with explicit flags overriding the base.
pub fn resolve_simulation(args: &SimulateArgs) -> Result<ExperimentConfig> {
    let mut cfg = if let Some(name) = &args.preset {
        match preset(name)? {
            Preset::Experiment(cfg) => cfg,
            Preset::Curves(_) => {
                return Err(Error::Config(format!(
                    "preset {name:?} is a curve set; use `exponents --preset {name}`"
                )))
            }
        }
    } else if let Some(path) = &args.config {
        serde_json::from_reader(io::BufReader::new(File::open(path)?))?
    } else {
        if args.policy.is_empty() {
            return Err(Error::Config(
                "policy: --policy is required without --preset or --config".into(),
            ));
        }
        if args.n.is_empty() {
            return Err(Error::Config(
                "points: --n is required without --preset or --config".into(),
            ));
        }
        let (k1, k2) = match (args.k, args.k1, args.k2) {
            (Some(k), _, _) if args.policy.contains(&Policy::Spc) => (k - k / 2, k / 2),
            (Some(k), _, _) => (k, 0),
            (None, Some(k1), Some(k2)) => (k1, k2),
            _ => return Err(Error::Config("points: --k or --k1/--k2 is required".into())),
        };
        ExperimentConfig {
            policies: args.policy.clone(),
            eps: 0.3,
            alpha: 0.1,
            points: args
                .n
                .iter()
                .map(|&n| SchedulePoint { n, k1, k2 })
                .collect(),
            trials: 1000,
            seed: 1,
            decoder: SpcDecoder::Sc,
            fixed_codebook: false,
        }
    };
    if args.preset.is_some() || args.config.is_some() {
        if !args.policy.is_empty() {
            cfg.policies = args.policy.clone();
        }
        if args.k.is_some() || args.k1.is_some() || !args.n.is_empty() {
            return Err(Error::Config(
                "points: --k/--k1/--k2/--n cannot override a preset or config schedule".into(),
            ));
        }
    }
    if let Some(eps) = args.eps {
        cfg.eps = eps;
    }
    if let Some(alpha) = args.alpha {
        cfg.alpha = alpha;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(decoder) = args.decoder {
        cfg.decoder = decoder;
    }
    if args.fixed_codebook {
        cfg.fixed_codebook = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = resolve_simulation(args)?;
    let threads = args.threads.or_else(harness::threads_from_env);
    let stats = harness::run_experiment_with_threads(&cfg, threads)?;
    let mut out = open_output(args.out.as_deref())?;
    harness::write_csv(&mut out, &cfg, &stats)?;
    out.flush()?;
    Ok(())
}

pub fn cmd_codebook(args: &CodebookArgs) -> Result<()> {
    let mut out = open_output(args.out.as_deref())?;
    match args.policy {
        Policy::Rc => {
            let k = args
                .k
                .ok_or_else(|| Error::Config("k: --k is required for a random codebook".into()))?;
            gen_random_codebook(k, args.n, args.seed)?.write_dump(&mut out)?;
        }
        Policy::Spc => {
            let (k1, k2) = match (args.k1, args.k2) {
                (Some(k1), Some(k2)) => (k1, k2),
                _ => {
                    return Err(Error::Config(
                        "k1/k2: --k1 and --k2 are required for a superposition codebook".into(),
                    ))
                }
            };
            gen_spc_codebook(k1, k2, args.n, args.alpha, args.seed)?.write_dump(&mut out)?;
        }
        other => {
            return Err(Error::Config(format!(
                "policy: {other} has no codebook; use rc or spc"
            )))
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<std::result::Result<(), String>>) -> SelfCheck {
    let (passed, detail) = match outcome {
        Ok(Ok(())) => (true, String::new()),
        Ok(Err(why)) => (false, why),
        Err(e) => (false, e.to_string()),
    };
    SelfCheck {
        name,
        passed,
        detail,
    }
}

fn ensure(cond: bool, why: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why())
    }
}

/// The fast invariant suite behind `uepq selftest`.
pub fn run_selftest() -> Vec<SelfCheck> {
    vec![
        check("gv_round_trip", selftest_gv()),
        check("jml_bound_equals_random_coding", selftest_jml()),
        check("split_merge_round_trip", selftest_split()),
        check("quantized_cost_identity", selftest_quantized_cost()),
        check("ml_decoder_matches_likelihood", selftest_ml()),
        check("jml_decoder_matches_likelihood", selftest_jml_decoder()),
        check("sc_first_stage_nearest_cloud", selftest_sc()),
        check("posterior_normalized", selftest_posterior()),
        check("thread_count_determinism", selftest_determinism()),
    ]
}

type Check = Result<std::result::Result<(), String>>;

fn selftest_gv() -> Check {
    for i in 0..=40 {
        let r = std::f64::consts::LN_2 * i as f64 / 41.0;
        let g = gv_distance(r)?;
        let back = gv_inverse(g);
        if (back - r).abs() > 1e-9 {
            return Ok(Err(format!("R = {r}: inverse gives {back}")));
        }
    }
    Ok(Ok(()))
}

fn selftest_jml() -> Check {
    for eps in [0.1, 0.3, 0.45] {
        let cap = crate::numerics::capacity(eps);
        for i in 0..10 {
            for j in 0..10 {
                let (r1, r2) = (cap * i as f64 / 20.0, cap * j as f64 / 20.0);
                let a = jml_lb_exponent(r1, r2, eps)?;
                let b = random_coding_exponent(r1 + r2, eps)?;
                if (a - b).abs() > 1e-10 {
                    return Ok(Err(format!("eps {eps}, ({r1}, {r2}): {a} vs {b}")));
                }
            }
        }
    }
    Ok(Ok(()))
}

fn selftest_split() -> Check {
    let mut rng = substream(11, &[1]);
    for _ in 0..1000 {
        let (k1, k2) = (rng.gen_range(1..=12), rng.gen_range(0..=12));
        let m = rng.gen_range(0..1u64 << (k1 + k2));
        let back = merge(split(m, k1, k2)?);
        if back != m {
            return Ok(Err(format!("{m} with ({k1}, {k2}) became {back}")));
        }
    }
    Ok(Ok(()))
}

fn selftest_quantized_cost() -> Check {
    let mut rng = substream(11, &[2]);
    for _ in 0..1000 {
        let k = rng.gen_range(1..=12);
        let x: f64 = rng.gen();
        let target = quantize(x, k)?;
        if x == target.interval_start() {
            continue;
        }
        let m_hat = rng.gen_range(0..1u64 << k);
        let x_hat = crate::target::finite_resolution_estimate(m_hat, k)?;
        let d = target.message.abs_diff(m_hat) as f64;
        let want = d * d * 4f64.powi(-(k as i32));
        let got = quantized_cost(x, x_hat, k);
        if (got - want).abs() > 1e-15 {
            return Ok(Err(format!(
                "x = {x}, k = {k}, m_hat = {m_hat}: {got} vs {want}"
            )));
        }
    }
    Ok(Ok(()))
}

fn selftest_ml() -> Check {
    let ch = Bsc::new(0.2)?;
    for trial in 0..30 {
        let mut rng = substream(11, &[3, trial]);
        let cb = gen_random_codebook(4, 24, trial)?;
        let y = transmit(&cb.row(rng.gen_range(0..16)), &ch, &mut rng);
        let mut best = (0, f64::NEG_INFINITY);
        for m in 0..16 {
            let ll = log_likelihood(&y, &cb.row(m), &ch)?;
            if ll > best.1 {
                best = (m, ll);
            }
        }
        let got = ml_decode(&y, &cb)?;
        if got != best.0 {
            return Ok(Err(format!(
                "trial {trial}: decoded {got}, exhaustive {}",
                best.0
            )));
        }
    }
    Ok(Ok(()))
}

fn selftest_jml_decoder() -> Check {
    let ch = Bsc::new(0.2)?;
    for trial in 0..30 {
        let mut rng = substream(11, &[4, trial]);
        let cb = gen_spc_codebook(2, 2, 24, 0.2, trial)?;
        let y = transmit(
            &cb.codeword_parts(rng.gen_range(0..4), rng.gen_range(0..4)),
            &ch,
            &mut rng,
        );
        let mut best = ((0, 0), f64::NEG_INFINITY);
        for m1 in 0..4 {
            for m2 in 0..4 {
                let ll = log_likelihood(&y, &cb.codeword_parts(m1, m2), &ch)?;
                if ll > best.1 {
                    best = ((m1, m2), ll);
                }
            }
        }
        let got = jml_decode(&y, &cb)?;
        if got != best.0 {
            return Ok(Err(format!(
                "trial {trial}: decoded {got:?}, exhaustive {:?}",
                best.0
            )));
        }
    }
    Ok(Ok(()))
}

fn selftest_sc() -> Check {
    let ch = Bsc::new(0.2)?;
    for trial in 0..30 {
        let mut rng = substream(11, &[5, trial]);
        let cb = gen_spc_codebook(3, 2, 24, 0.1, trial)?;
        let y = transmit(
            &cb.codeword_parts(rng.gen_range(0..8), rng.gen_range(0..4)),
            &ch,
            &mut rng,
        );
        let mut best = (0, f64::NEG_INFINITY);
        for m1 in 0..8 {
            let ll = log_likelihood(&y, &cb.cloud(m1), &ch)?;
            if ll > best.1 {
                best = (m1, ll);
            }
        }
        let (got, _) = sc_decode(&y, &cb)?;
        if got != best.0 {
            return Ok(Err(format!(
                "trial {trial}: cloud {got}, exhaustive {}",
                best.0
            )));
        }
    }
    Ok(Ok(()))
}

fn selftest_posterior() -> Check {
    let ch = Bsc::new(0.3)?;
    let mut rng = substream(11, &[6]);
    let mut p = Posterior::uniform(6)?;
    for _ in 0..200 {
        let q = crate::policy_adaptive::bz_select_query(&p, &mut rng);
        p.update(q, rng.gen(), &ch)?;
        let total: f64 = p.masses().iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Ok(Err(format!("total mass {total}")));
        }
    }
    Ok(Ok(()))
}

fn selftest_determinism() -> Check {
    let cfg = ExperimentConfig {
        policies: vec![Policy::Bz, Policy::Rc, Policy::Spc, Policy::Repetition],
        eps: 0.25,
        alpha: 0.1,
        points: vec![SchedulePoint {
            n: 30,
            k1: 3,
            k2: 2,
        }],
        trials: 50,
        seed: 3,
        decoder: SpcDecoder::Sc,
        fixed_codebook: false,
    };
    let a = harness::run_experiment_with_threads(&cfg, Some(1))?;
    let b = harness::run_experiment_with_threads(&cfg, Some(3))?;
    Ok(ensure(a == b, || {
        "results differ between 1 and 3 workers".into()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes() {
        for c in run_selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn flags_build_a_config() {
        let cli = Cli::try_parse_from([
            "uepq", "simulate", "--policy", "rc,spc", "--k", "7", "--n", "40,50", "--eps", "0.2",
        ])
        .unwrap();
        let Command::Simulate(args) = cli.command else {
            panic!("simulate");
        };
        let cfg = resolve_simulation(&args).unwrap();
        assert_eq!(cfg.points.len(), 2);
        assert_eq!((cfg.points[0].k1, cfg.points[0].k2), (4, 3));
        assert_eq!(cfg.eps, 0.2);
    }

    #[test]
    fn preset_overrides() {
        let cli =
            Cli::try_parse_from(["uepq", "simulate", "--preset", "fig8", "--seed", "7"]).unwrap();
        let Command::Simulate(args) = cli.command else {
            panic!("simulate");
        };
        let cfg = resolve_simulation(&args).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.points.len(), 5);
    }

    #[test]
    fn bad_flags_exit_with_config_code() {
        assert_eq!(
            main_with_args(["uepq", "simulate", "--policy", "nope"]),
            EXIT_CONFIG
        );
        assert_eq!(
            main_with_args(["uepq", "exponents", "--kind", "Er", "--eps", "0.7"]),
            EXIT_CONFIG
        );
        assert_eq!(
            main_with_args(["uepq", "exponents", "--preset", "fig8"]),
            EXIT_CONFIG
        );
    }
}

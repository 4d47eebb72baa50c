//! Seeded Monte Carlo comparison of the querying policies.
//!
//! Every trial owns two random substreams keyed by the master seed: one
//! shared by all policies for drawing `x` (so policies are compared on the
//! same targets), and one private to the policy for codebooks and channel
//! noise. Trials run in parallel and are reduced in trial order, so output is
//! bit-identical for any worker count.

use std::f64::consts::LN_2;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{substream, transmit, Bsc, SimRng};
use crate::error::{Error, Result};
use crate::exponents::CurveKind;
use crate::numerics::{c2, capacity};
use crate::policy_adaptive::{bz_run, MAX_POSTERIOR_BITS};
use crate::policy_block::{
    jml_decode, marginal_ml_m1_decode, ml_decode, sc_decode, spc_message, RandomCodebook,
    SuperpositionCodebook, MAX_CODEBOOK_BITS, MAX_MARGINAL_BITS,
};
use crate::policy_repetition::{allocate, repetition_run};
use crate::target::{
    decoding_distance, finite_resolution_estimate, quantize, quantized_cost, squared_cost, MAX_BITS,
};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "UEPQ_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Bz,
    Repetition,
    Rc,
    Spc,
}

impl Policy {
    /// Stable id mixed into the random substream key.
    fn stream_id(self) -> u64 {
        match self {
            Policy::Bz => 1,
            Policy::Repetition => 2,
            Policy::Rc => 3,
            Policy::Spc => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Policy::Bz => "bz",
            Policy::Repetition => "repetition",
            Policy::Rc => "rc",
            Policy::Spc => "spc",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bz" | "bisection" => Ok(Policy::Bz),
            "repetition" | "rep" => Ok(Policy::Repetition),
            "rc" | "random" => Ok(Policy::Rc),
            "spc" | "superposition" => Ok(Policy::Spc),
            _ => Err(Error::Config(format!("unknown policy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpcDecoder {
    #[default]
    Sc,
    Jml,
    Marginal,
}

impl FromStr for SpcDecoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sc" => Ok(SpcDecoder::Sc),
            "jml" => Ok(SpcDecoder::Jml),
            "marginal" => Ok(SpcDecoder::Marginal),
            _ => Err(Error::Config(format!("unknown decoder {s:?}"))),
        }
    }
}

/// One simulation point: `n` queries resolving `k1 + k2` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub n: usize,
    pub k1: u32,
    pub k2: u32,
}

impl SchedulePoint {
    pub fn k(&self) -> u32 {
        self.k1 + self.k2
    }
}

fn default_alpha() -> f64 {
    0.1
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub policies: Vec<Policy>,
    pub eps: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub points: Vec<SchedulePoint>,
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub decoder: SpcDecoder,
    /// Reuse one codebook per (policy, point) instead of a fresh draw per trial.
    #[serde(default)]
    pub fixed_codebook: bool,
}

impl ExperimentConfig {
    /// Checks the configuration, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::Config(format!("{field}: {why}")));
        if self.policies.is_empty() {
            return bad("policies", "at least one policy is required".into());
        }
        if !(0.0..0.5).contains(&self.eps) {
            return bad("eps", format!("{} is outside [0, 1/2)", self.eps));
        }
        if self.policies.contains(&Policy::Spc) && !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return bad("alpha", format!("{} is outside (0, 1/2]", self.alpha));
        }
        if self.trials == 0 {
            return bad("trials", "must be at least 1".into());
        }
        if self.points.is_empty() {
            return bad("points", "the N schedule is empty".into());
        }
        for (i, p) in self.points.iter().enumerate() {
            let field = format!("points[{i}]");
            if p.n == 0 {
                return bad(&field, "n must be positive".into());
            }
            if p.k() == 0 || p.k() > MAX_BITS {
                return bad(&field, format!("k1 + k2 must be in 1..={MAX_BITS}"));
            }
            for &policy in &self.policies {
                let why = match policy {
                    Policy::Bz if p.k() > MAX_POSTERIOR_BITS => {
                        Some(format!("bz supports at most {MAX_POSTERIOR_BITS} bits"))
                    }
                    Policy::Repetition if p.n < p.k() as usize => Some(format!(
                        "repetition needs n >= k, got n = {} < {}",
                        p.n,
                        p.k()
                    )),
                    Policy::Repetition if self.eps == 0.0 => {
                        Some("repetition allocation needs eps > 0".into())
                    }
                    Policy::Rc | Policy::Spc if p.k() > MAX_CODEBOOK_BITS => Some(format!(
                        "codebooks support at most {MAX_CODEBOOK_BITS} bits"
                    )),
                    Policy::Spc if p.k1 == 0 || p.k2 == 0 => {
                        Some("spc needs k1 >= 1 and k2 >= 1".into())
                    }
                    Policy::Spc
                        if self.decoder == SpcDecoder::Marginal && p.k2 > MAX_MARGINAL_BITS =>
                    {
                        Some(format!(
                            "marginal decoding supports k2 <= {MAX_MARGINAL_BITS}"
                        ))
                    }
                    _ => None,
                };
                if let Some(why) = why {
                    return bad(&field, format!("{policy}: {why}"));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub x: f64,
    pub message: u64,
    pub decoded: u64,
    pub distance: u64,
    pub quantized_cost: f64,
    pub squared_cost: f64,
    pub m1_correct: bool,
    pub m2_correct: bool,
}

/// Sample mean with standard error `sd / sqrt(count)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(samples: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = samples.into_iter().collect();
        let count = values.len();
        if count == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        if count == 1 {
            return Estimate { mean, stderr: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64;
        Estimate {
            mean,
            stderr: (var / count as f64).sqrt(),
        }
    }

    fn from_flags(flags: impl IntoIterator<Item = bool>) -> Self {
        Estimate::from_samples(flags.into_iter().map(|f| f as u8 as f64))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateStats {
    pub policy: Policy,
    pub n: usize,
    pub k1: u32,
    pub k2: u32,
    pub trials: usize,
    pub quantized_cost: Estimate,
    pub squared_cost: Estimate,
    pub block_error: Estimate,
    pub m1_error: Estimate,
    /// Over the trials whose MSB part was decoded correctly.
    pub m2_error_given_m1: Estimate,
}

impl AggregateStats {
    pub fn from_records(policy: Policy, point: SchedulePoint, records: &[TrialRecord]) -> Self {
        AggregateStats {
            policy,
            n: point.n,
            k1: point.k1,
            k2: point.k2,
            trials: records.len(),
            quantized_cost: Estimate::from_samples(records.iter().map(|r| r.quantized_cost)),
            squared_cost: Estimate::from_samples(records.iter().map(|r| r.squared_cost)),
            block_error: Estimate::from_flags(records.iter().map(|r| r.decoded != r.message)),
            m1_error: Estimate::from_flags(records.iter().map(|r| !r.m1_correct)),
            m2_error_given_m1: Estimate::from_flags(
                records
                    .iter()
                    .filter(|r| r.m1_correct)
                    .map(|r| !r.m2_correct),
            ),
        }
    }
}

pub const CSV_HEADER: &str = "policy,N,k1,k2,eps,alpha,mean_cq,se_cq,mean_mse,se_mse,p_block_err,p_m1_err,p_m2_err_given_m1,trials,seed";

/// Writes a provenance comment, the header, and one row per aggregate.
pub fn write_csv<W: Write>(
    mut out: W,
    cfg: &ExperimentConfig,
    stats: &[AggregateStats],
) -> Result<()> {
    writeln!(
        out,
        "# uepq {} seed={} config={}",
        env!("CARGO_PKG_VERSION"),
        cfg.seed,
        serde_json::to_string(cfg)?
    )?;
    writeln!(out, "{CSV_HEADER}")?;
    for s in stats {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{},{}",
            s.policy,
            s.n,
            s.k1,
            s.k2,
            cfg.eps,
            cfg.alpha,
            s.quantized_cost.mean,
            s.quantized_cost.stderr,
            s.squared_cost.mean,
            s.squared_cost.stderr,
            s.block_error.mean,
            s.m1_error.mean,
            s.m2_error_given_m1.mean,
            s.trials,
            cfg.seed
        )?;
    }
    Ok(())
}

/// Worker count from `UEPQ_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
}

/// Tag for the shared target stream.
const TARGET_STREAM: u64 = 0;
/// Trial-index slot used for the fixed codebook.
const FIXED_CODEBOOK_SLOT: u64 = u64::MAX;

enum SharedCodebook {
    None,
    Rc(RandomCodebook),
    Spc(SuperpositionCodebook),
}

struct PointRunner<'a> {
    cfg: &'a ExperimentConfig,
    ch: Bsc,
    policy: Policy,
    point: SchedulePoint,
    shared: SharedCodebook,
}

impl PointRunner<'_> {
    fn stream(&self, id: u64, trial: u64) -> SimRng {
        let p = self.point;
        substream(
            self.cfg.seed,
            &[id, p.n as u64, p.k1 as u64, p.k2 as u64, trial],
        )
    }

    fn trial(&self, trial: usize) -> Result<TrialRecord> {
        let p = self.point;
        let k = p.k();
        let x: f64 = self.stream(TARGET_STREAM, trial as u64).gen();
        let message = quantize(x, k)?.message;
        let mut rng = self.stream(self.policy.stream_id(), trial as u64);
        let decoded = match self.policy {
            Policy::Bz => bz_run(x, k, p.n, &self.ch, &mut rng)?,
            Policy::Repetition => {
                let plan = allocate(p.n, k, self.ch.eps())?;
                repetition_run(x, &plan, &self.ch, &mut rng)?
            }
            Policy::Rc => {
                let fresh;
                let cb = match &self.shared {
                    SharedCodebook::Rc(cb) => cb,
                    _ => {
                        fresh = RandomCodebook::generate(k, p.n, &mut rng)?;
                        &fresh
                    }
                };
                let y = transmit(&cb.row(message), &self.ch, &mut rng);
                ml_decode(&y, cb)?
            }
            Policy::Spc => {
                let fresh;
                let cb = match &self.shared {
                    SharedCodebook::Spc(cb) => cb,
                    _ => {
                        fresh = SuperpositionCodebook::generate(
                            p.k1,
                            p.k2,
                            p.n,
                            self.cfg.alpha,
                            &mut rng,
                        )?;
                        &fresh
                    }
                };
                let (m1, m2) = (message >> p.k2, message & ((1 << p.k2) - 1));
                let y = transmit(&cb.codeword_parts(m1, m2), &self.ch, &mut rng);
                let (d1, d2) = match self.cfg.decoder {
                    SpcDecoder::Sc => sc_decode(&y, cb)?,
                    SpcDecoder::Jml => jml_decode(&y, cb)?,
                    SpcDecoder::Marginal => {
                        // the LSB part is then read off by cancelling the decided cloud
                        let d1 = marginal_ml_m1_decode(&y, cb, &self.ch)?;
                        let cloud = cb.cloud(d1);
                        let d2 = (0..1u64 << p.k2)
                            .min_by_key(|&m2| y.distance_to_xor(&cloud, &cb.satellite(m2)))
                            .unwrap_or(0);
                        (d1, d2)
                    }
                };
                spc_message(cb, d1, d2)
            }
        };
        let x_hat = finite_resolution_estimate(decoded, k)?;
        let mask2 = (1u64 << p.k2) - 1;
        Ok(TrialRecord {
            trial,
            x,
            message,
            decoded,
            distance: decoding_distance(message, decoded),
            quantized_cost: quantized_cost(x, x_hat, k),
            squared_cost: squared_cost(x, x_hat),
            m1_correct: message >> p.k2 == decoded >> p.k2,
            m2_correct: message & mask2 == decoded & mask2,
        })
    }
}

/// Runs every trial of one (policy, point) pair, in trial order.
pub fn run_point(
    cfg: &ExperimentConfig,
    policy: Policy,
    point: SchedulePoint,
) -> Result<Vec<TrialRecord>> {
    let ch = Bsc::new(cfg.eps)?;
    let mut runner = PointRunner {
        cfg,
        ch,
        policy,
        point,
        shared: SharedCodebook::None,
    };
    if cfg.fixed_codebook {
        let mut rng = runner.stream(policy.stream_id(), FIXED_CODEBOOK_SLOT);
        runner.shared = match policy {
            Policy::Rc => {
                SharedCodebook::Rc(RandomCodebook::generate(point.k(), point.n, &mut rng)?)
            }
            Policy::Spc => SharedCodebook::Spc(SuperpositionCodebook::generate(
                point.k1, point.k2, point.n, cfg.alpha, &mut rng,
            )?),
            _ => SharedCodebook::None,
        };
    }
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| runner.trial(t))
        .collect()
}

/// Runs the whole experiment on `threads` workers (or the machine default).
/// Results are ordered by point, then by policy as listed in the config.
pub fn run_experiment_with_threads(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<Vec<AggregateStats>> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        let mut stats = Vec::new();
        for &point in &cfg.points {
            for &policy in &cfg.policies {
                let records = run_point(cfg, policy, point)?;
                stats.push(AggregateStats::from_records(policy, point, &records));
            }
        }
        Ok(stats)
    })
}

/// [`run_experiment_with_threads`] with the worker cap from `UEPQ_THREADS`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<AggregateStats>> {
    run_experiment_with_threads(cfg, threads_from_env())
}

/// Repetition policy at `n` queries with the best resolution among
/// `k = ceil(c sqrt(n))`, `c` in `{0.5, 1, 2}`, judged by mean squared cost.
pub fn best_repetition_mse(
    n: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<(u32, AggregateStats)> {
    let mut best: Option<(u32, AggregateStats)> = None;
    for c in [0.5, 1.0, 2.0] {
        let k = ((c * (n as f64).sqrt()).ceil() as u32).clamp(1, MAX_BITS);
        if k as usize > n {
            continue;
        }
        let cfg = ExperimentConfig {
            policies: vec![Policy::Repetition],
            eps,
            alpha: default_alpha(),
            points: vec![SchedulePoint { n, k1: k, k2: 0 }],
            trials,
            seed,
            decoder: SpcDecoder::Sc,
            fixed_codebook: false,
        };
        let stats = run_experiment(&cfg)?.remove(0);
        if best
            .as_ref()
            .is_none_or(|(_, b)| stats.squared_cost.mean < b.squared_cost.mean)
        {
            best = Some((k, stats));
        }
    }
    best.ok_or_else(|| Error::Config(format!("no feasible resolution for n = {n}")))
}

/// A request for one analytic curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRequest {
    pub kind: CurveKind,
    pub eps: f64,
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Experiment(ExperimentConfig),
    Curves(Vec<CurveRequest>),
}

pub const PRESET_NAMES: [&str; 6] = [
    "fig8",
    "fig9",
    "exponent_fig5",
    "exponent_fig6",
    "exponent_fig7",
    "exponent_fig10",
];

/// Block length for the target rates: the smallest `N` with
/// `k_i ln 2 / N <= R_i` for both parts.
pub fn block_length_for_rates(k1: u32, k2: u32, r1: f64, r2: f64) -> usize {
    let n1 = (k1 as f64 * LN_2 / r1).ceil();
    let n2 = (k2 as f64 * LN_2 / r2).ceil();
    n1.max(n2) as usize
}

/// `(R1, R2) = (0.5 (C - R2), 0.9 C2(alpha))`.
pub fn fig8_rates(eps: f64, alpha: f64) -> (f64, f64) {
    let r2 = 0.9 * c2(alpha, eps);
    (0.5 * (capacity(eps) - r2), r2)
}

pub const FIG8_PAIRS: [(u32, u32); 5] = [(5, 4), (6, 5), (6, 6), (7, 7), (8, 8)];
/// Roughly geometric (E-series) schedule between 40 and 220 queries.
pub const FIG9_SCHEDULE: [usize; 9] = [40, 50, 63, 80, 100, 126, 160, 200, 220];

const CURVE_GRID: usize = 200;

pub fn preset(name: &str) -> Result<Preset> {
    let curves = |eps: f64, kinds: Vec<CurveKind>| {
        Preset::Curves(
            kinds
                .into_iter()
                .map(|kind| CurveRequest {
                    kind,
                    eps,
                    grid: CURVE_GRID,
                })
                .collect(),
        )
    };
    Ok(match name {
        "fig8" => {
            let (eps, alpha) = (0.3, 0.1);
            let (r1, r2) = fig8_rates(eps, alpha);
            Preset::Experiment(ExperimentConfig {
                policies: vec![Policy::Rc, Policy::Spc],
                eps,
                alpha,
                points: FIG8_PAIRS
                    .iter()
                    .map(|&(k1, k2)| SchedulePoint {
                        n: block_length_for_rates(k1, k2, r1, r2),
                        k1,
                        k2,
                    })
                    .collect(),
                trials: 3000,
                seed: default_seed(),
                decoder: SpcDecoder::Marginal,
                fixed_codebook: false,
            })
        }
        "fig9" => Preset::Experiment(ExperimentConfig {
            policies: vec![Policy::Rc, Policy::Spc, Policy::Bz],
            eps: 0.3,
            alpha: 0.1,
            points: FIG9_SCHEDULE
                .iter()
                .map(|&n| SchedulePoint { n, k1: 6, k2: 6 })
                .collect(),
            trials: 3000,
            seed: default_seed(),
            decoder: SpcDecoder::Marginal,
            fixed_codebook: false,
        }),
        "exponent_fig5" | "fig5" => {
            let (eps, alpha) = (0.45, 0.11);
            curves(
                eps,
                vec![
                    CurveKind::MsbsJmlLb { r2: c2(alpha, eps) },
                    CurveKind::MsbsSc { alpha },
                ],
            )
        }
        "exponent_fig6" | "fig6" => {
            let (eps, alpha) = (0.45, 0.11);
            curves(
                eps,
                vec![
                    CurveKind::MsbsJmlLb {
                        r2: 2.0 * c2(alpha, eps) / 3.0,
                    },
                    CurveKind::MsbsSc { alpha },
                ],
            )
        }
        "exponent_fig7" | "fig7" => {
            curves(0.45, vec![CurveKind::RandomCoding, CurveKind::QuantizedSpc])
        }
        "exponent_fig10" | "fig10" => {
            let (eps, alpha) = (0.45, 0.11);
            curves(
                eps,
                vec![
                    CurveKind::MsbsJmlLb { r2: c2(alpha, eps) },
                    CurveKind::MsbsSc { alpha },
                    CurveKind::TwiceRate,
                ],
            )
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown preset {name:?}; expected one of {}",
                PRESET_NAMES.join(", ")
            )))
        }
    })
}

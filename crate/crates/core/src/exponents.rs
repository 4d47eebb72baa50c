//! Analytic error-exponent curves for random and superposition block codes
//! on a BSC, plus the quantized-MSE exponents built from them.
//!
//! All rates and exponents are in nats per query.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{c2, capacity, e0_half, gv_distance, kl_bernoulli, r_crit, star, Nats};

/// Slack allowed when a rate lands just past a domain endpoint through
/// floating-point residue.
const RATE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPoint {
    pub rate: Nats,
    pub exponent: Nats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentCurve {
    pub channel_eps: f64,
    pub label: String,
    pub points: Vec<ExponentPoint>,
    /// Domain and clamping remarks for the user.
    pub notes: Vec<String>,
}

impl ExponentCurve {
    /// Writes `rate_nats,exponent_nats` rows with 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "rate_nats,exponent_nats")?;
        for p in &self.points {
            writeln!(out, "{:.11e},{:.11e}", p.rate, p.exponent)?;
        }
        Ok(())
    }
}

fn clamp_rate(op: &'static str, r: f64, hi: f64) -> Result<f64> {
    if !r.is_finite() || r < -RATE_SLACK || r > hi + RATE_SLACK {
        return Err(Error::domain(op, format!("rate {r} is outside [0, {hi}]")));
    }
    Ok(r.clamp(0.0, hi))
}

fn check_eps(op: &'static str, eps: f64) -> Result<()> {
    if (0.0..=0.5).contains(&eps) {
        Ok(())
    } else {
        Err(Error::domain(
            op,
            format!("crossover {eps} is outside [0, 1/2]"),
        ))
    }
}

/// Random-coding exponent `E_r(R)` of BSC(eps) with uniform inputs:
/// the straight line `E_0(1/2, eps) - R` below the critical rate, the
/// sphere-packing form `D_B(gamma_GV(R) || eps)` above it.
pub fn random_coding_exponent(r: Nats, eps: f64) -> Result<Nats> {
    check_eps("random_coding_exponent", eps)?;
    let r = clamp_rate("random_coding_exponent", r, capacity(eps))?;
    rc_exponent_unchecked(r, eps)
}

fn rc_exponent_unchecked(r: Nats, eps: f64) -> Result<Nats> {
    if r < r_crit(eps) {
        Ok((e0_half(eps) - r).max(0.0))
    } else {
        kl_bernoulli(gv_distance(r)?, eps)
    }
}

/// Approximation of `E_r` for a very noisy channel of
/// capacity `c`.
pub fn very_noisy_rc_approx(r: Nats, c: Nats) -> Nats {
    if r < c / 4.0 {
        c / 2.0 - r
    } else {
        let d = c.sqrt() - r.max(0.0).sqrt();
        d * d
    }
}

/// Exponent of the cloud-center (MSB) error under successive-cancellation
/// decoding: the satellite plus channel noise acts as BSC(alpha * eps), so
/// this is the random-coding exponent of that channel, defined for
/// `0 <= r1 <= C - C2(alpha)`.
pub fn msbs_sc_exponent(r1: Nats, alpha: f64, eps: f64) -> Result<Nats> {
    check_eps("msbs_sc_exponent", eps)?;
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::domain(
            "msbs_sc_exponent",
            format!("alpha {alpha} is outside [0, 1/2]"),
        ));
    }
    let effective = star(alpha, eps);
    // C - C2(alpha) = ln 2 - H_B(alpha * eps) = capacity of the effective BSC.
    let r1 = clamp_rate("msbs_sc_exponent", r1, capacity(effective))?;
    rc_exponent_unchecked(r1, effective)
}

/// Gallager function of the satellite code seen through BSC(eps):
/// `-ln sum_y [sum_v p_V(v) p(y|v)^(1/(1+rho))]^(1+rho)` with `V ~ Bernoulli(alpha)`.
pub fn satellite_gallager_f0(rho: f64, alpha: f64, eps: f64) -> f64 {
    let s = 1.0 / (1.0 + rho);
    let pv = [1.0 - alpha, alpha];
    let total: f64 = (0..2)
        .map(|y| {
            let inner: f64 = (0..2)
                .map(|v| {
                    let p = if y == v { 1.0 - eps } else { eps };
                    if p == 0.0 {
                        0.0
                    } else {
                        pv[v] * p.powf(s)
                    }
                })
                .sum();
            inner.powf(1.0 + rho)
        })
        .sum();
    -total.ln()
}

const RHO_GRID: usize = 64;
const RHO_TOL: f64 = 1e-10;

/// Lower bound on the satellite (LSB) exponent given a correct cloud
/// decision: `max_{0 <= rho <= 1} [F0(rho, alpha) - rho r2]`, floored at 0.
pub fn lsbs_sc_exponent(r2: Nats, alpha: f64, eps: f64) -> Nats {
    let objective = |rho: f64| satellite_gallager_f0(rho, alpha, eps) - rho * r2;
    let step = 1.0 / (RHO_GRID - 1) as f64;
    let (best_i, _) = (0..RHO_GRID).map(|i| (i, objective(i as f64 * step))).fold(
        (0, f64::NEG_INFINITY),
        |acc, cur| if cur.1 > acc.1 { cur } else { acc },
    );
    let lo = best_i.saturating_sub(1) as f64 * step;
    let hi = ((best_i + 1).min(RHO_GRID - 1)) as f64 * step;
    let rho = golden_section_max(objective, lo, hi, RHO_TOL);
    let value = objective(rho).max(objective(lo)).max(objective(hi));
    value.max(0.0)
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Achievable MSB exponent of a superposition code under joint ML decoding
/// at rates `(r1, r2)`.
pub fn jml_lb_exponent(r1: Nats, r2: Nats, eps: f64) -> Result<Nats> {
    check_eps("jml_lb_exponent", eps)?;
    let cap = capacity(eps);
    if r1 < -RATE_SLACK || r2 < -RATE_SLACK || r1 + r2 > cap + RATE_SLACK {
        return Err(Error::domain(
            "jml_lb_exponent",
            format!("rates ({r1}, {r2}) exceed capacity {cap}"),
        ));
    }
    let (r1, r2) = (r1.max(0.0), r2.max(0.0));
    let total = (r1 + r2).min(cap);
    if r1 < (r_crit(eps) - r2).max(0.0) {
        Ok((e0_half(eps) - r2 - r1).max(0.0))
    } else {
        kl_bernoulli(gv_distance(total)?, eps)
    }
}

/// Interval `(E_0(1/2, eps)/3, C)` on which the superposition quantized-MSE
/// exponent is defined.
pub fn spc_rate_domain(eps: f64) -> (Nats, Nats) {
    (e0_half(eps) / 3.0, capacity(eps))
}

const ALPHA_MAX_ITER: usize = 200;

/// The satellite bias balancing the MSB exponent against twice the MSB rate:
/// the `alpha` in `(0, 1/2)` with `r = C2(alpha) + E_0(1/2, alpha * eps) / 3`.
pub fn spc_alpha_star(r: Nats, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain(
            "spc_alpha_star",
            format!("crossover {eps} is outside (0, 1/2)"),
        ));
    }
    let (lo_rate, hi_rate) = spc_rate_domain(eps);
    if !(r > lo_rate && r < hi_rate) {
        return Err(Error::domain(
            "spc_alpha_star",
            format!("rate {r} is outside ({lo_rate}, {hi_rate})"),
        ));
    }
    // Increasing in alpha, from E_0/3 - r at 0 to C - r at 1/2.
    let balance = |alpha: f64| c2(alpha, eps) + e0_half(star(alpha, eps)) / 3.0 - r;
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..ALPHA_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = balance(mid);
        if g == 0.0 {
            return Ok(mid);
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Operating point of the superposition code that attains
/// [`spc_quantized_mse_exponent`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpcOperatingPoint {
    pub alpha: f64,
    pub r1: Nats,
    pub r2: Nats,
    pub exponent: Nats,
}

pub fn spc_operating_point(r: Nats, eps: f64) -> Result<SpcOperatingPoint> {
    let alpha = spc_alpha_star(r, eps)?;
    let r2 = c2(alpha, eps);
    let r1 = r - r2;
    let exponent = msbs_sc_exponent(r1, alpha, eps)?;
    Ok(SpcOperatingPoint {
        alpha,
        r1,
        r2,
        exponent,
    })
}

/// Achievable quantized-MSE exponent of superposition coding with SC
/// decoding, `E_MSBs,SC(R - C2(alpha*), alpha*)`.
pub fn spc_quantized_mse_exponent(r: Nats, eps: f64) -> Result<Nats> {
    Ok(spc_operating_point(r, eps)?.exponent)
}

/// Best point of the joint `(R2, alpha)` trade-off
/// `min{E_MSBs,SC(R - R2, alpha), E_LSBs,SC(R2, alpha) + 2(R - R2)}` over
/// the supplied grids. Returns `(value, alpha, r2)`.
///
/// Only the `R2 = C2(alpha)` slice is needed for the closed form; this
/// sweep explores non-saturating `R2 < C2(alpha)` as well.
pub fn spc_joint_tradeoff(
    r: Nats,
    eps: f64,
    alphas: &[f64],
    r2_fractions: &[f64],
) -> Option<(Nats, f64, Nats)> {
    let mut best: Option<(Nats, f64, Nats)> = None;
    for &alpha in alphas {
        let cap2 = c2(alpha, eps);
        for &frac in r2_fractions {
            let r2 = frac * cap2;
            let r1 = r - r2;
            let Ok(msb) = msbs_sc_exponent(r1, alpha, eps) else {
                continue;
            };
            let value = msb.min(lsbs_sc_exponent(r2, alpha, eps) + 2.0 * r1);
            if best.is_none_or(|b| value > b.0) {
                best = Some((value, alpha, r2));
            }
        }
    }
    best
}

/// `E_MSE = min{E_q, 2R}`: the estimator resolution caps the MSE exponent.
pub fn mse_exponent_from_q(eq: Nats, r: Nats) -> Nats {
    eq.min(2.0 * r)
}

/// Lower bound on the quantized-MSE exponent of the grid bisection policy.
pub fn bz_exponent_lb(r: Nats, eps: f64) -> Nats {
    (e0_half(eps) - r).max(0.0)
}

/// The curves [`emit_curve`] can sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    RandomCoding,
    VeryNoisyApprox,
    MsbsSc {
        alpha: f64,
    },
    LsbsSc {
        alpha: f64,
    },
    MsbsJmlLb {
        r2: Nats,
    },
    QuantizedSpc,
    MseRandomCoding,
    MseSpc,
    Bisection,
    /// The line `2R`, the exponent of the finite-resolution estimation error.
    TwiceRate,
}

impl CurveKind {
    /// Builds a kind from its name and the optional `alpha` / `r2` parameters,
    /// rejecting parameters the kind does not take.
    pub fn from_parts(name: &str, alpha: Option<f64>, r2: Option<f64>) -> Result<Self> {
        let base: CurveKind = name.parse()?;
        let needs_alpha = matches!(base, CurveKind::MsbsSc { .. } | CurveKind::LsbsSc { .. });
        let needs_r2 = matches!(base, CurveKind::MsbsJmlLb { .. });
        match (needs_alpha, alpha) {
            (true, None) => return Err(Error::Config(format!("curve {name} requires --alpha"))),
            (false, Some(_)) => {
                return Err(Error::Config(format!("curve {name} does not take --alpha")))
            }
            _ => {}
        }
        match (needs_r2, r2) {
            (true, None) => return Err(Error::Config(format!("curve {name} requires --r2"))),
            (false, Some(_)) => {
                return Err(Error::Config(format!("curve {name} does not take --r2")))
            }
            _ => {}
        }
        Ok(match base {
            CurveKind::MsbsSc { .. } => CurveKind::MsbsSc {
                alpha: alpha.unwrap_or_default(),
            },
            CurveKind::LsbsSc { .. } => CurveKind::LsbsSc {
                alpha: alpha.unwrap_or_default(),
            },
            CurveKind::MsbsJmlLb { .. } => CurveKind::MsbsJmlLb {
                r2: r2.unwrap_or_default(),
            },
            other => other,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            CurveKind::RandomCoding => "E_r",
            CurveKind::VeryNoisyApprox => "E_r_very_noisy",
            CurveKind::MsbsSc { .. } => "E_MSBs_SC",
            CurveKind::LsbsSc { .. } => "E_LSBs_SC",
            CurveKind::MsbsJmlLb { .. } => "E_MSBs_JML_LB",
            CurveKind::QuantizedSpc => "E_q_spc",
            CurveKind::MseRandomCoding => "E_MSE_rc",
            CurveKind::MseSpc => "E_MSE_spc",
            CurveKind::Bisection => "E_q_bz",
            CurveKind::TwiceRate => "2R",
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ',' | '.'))
            .collect::<String>()
            .to_ascii_lowercase();
        let key = key.strip_prefix('e').unwrap_or(&key);
        Ok(match key {
            "r" | "rc" => CurveKind::RandomCoding,
            "rverynoisy" | "rapprox" => CurveKind::VeryNoisyApprox,
            "msbssc" => CurveKind::MsbsSc { alpha: 0.0 },
            "lsbssc" => CurveKind::LsbsSc { alpha: 0.0 },
            "msbsjmllb" | "msbsjml" | "jmllb" => CurveKind::MsbsJmlLb { r2: 0.0 },
            "qspc" => CurveKind::QuantizedSpc,
            "mserc" => CurveKind::MseRandomCoding,
            "msespc" => CurveKind::MseSpc,
            "qbz" | "bz" => CurveKind::Bisection,
            "2r" | "twicerate" => CurveKind::TwiceRate,
            _ => return Err(Error::Config(format!("unknown curve kind {s:?}"))),
        })
    }
}

enum Domain {
    Closed(f64, f64),
    Open(f64, f64),
}

/// Samples a curve on a uniform rate grid of `grid` points spanning its
/// domain. Closed domains include both endpoints; open domains place the
/// points strictly inside.
pub fn emit_curve(kind: CurveKind, eps: f64, grid: usize) -> Result<ExponentCurve> {
    if grid < 2 {
        return Err(Error::Config(format!(
            "grid must be at least 2, got {grid}"
        )));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Config(format!(
            "eps must lie in (0, 1/2), got {eps}"
        )));
    }
    let cap = capacity(eps);
    let mut notes = Vec::new();
    let domain = match kind {
        CurveKind::RandomCoding
        | CurveKind::VeryNoisyApprox
        | CurveKind::MseRandomCoding
        | CurveKind::TwiceRate => Domain::Closed(0.0, cap),
        CurveKind::MsbsSc { alpha } | CurveKind::LsbsSc { alpha } => {
            if !(alpha > 0.0 && alpha < 0.5) {
                return Err(Error::Config(format!(
                    "alpha must lie in (0, 1/2), got {alpha}"
                )));
            }
            match kind {
                CurveKind::MsbsSc { .. } => Domain::Closed(0.0, cap - c2(alpha, eps)),
                _ => Domain::Closed(0.0, c2(alpha, eps)),
            }
        }
        CurveKind::MsbsJmlLb { r2 } => {
            if !(0.0..cap).contains(&r2) {
                return Err(Error::Config(format!(
                    "r2 must lie in [0, {cap}), got {r2}"
                )));
            }
            Domain::Closed(0.0, cap - r2)
        }
        CurveKind::QuantizedSpc | CurveKind::MseSpc => {
            let (lo, hi) = spc_rate_domain(eps);
            notes.push(format!(
                "defined on the open interval ({lo:.6e}, {hi:.6e}); below the left end the random-coding exponent applies"
            ));
            Domain::Open(lo, hi)
        }
        CurveKind::Bisection => Domain::Closed(0.0, e0_half(eps)),
    };
    let rates: Vec<f64> = match domain {
        Domain::Closed(lo, hi) => (0..grid)
            .map(|j| lo + (hi - lo) * j as f64 / (grid - 1) as f64)
            .collect(),
        Domain::Open(lo, hi) => (0..grid)
            .map(|j| lo + (hi - lo) * (j + 1) as f64 / (grid + 1) as f64)
            .collect(),
    };
    let points = rates
        .into_iter()
        .map(|rate| {
            let exponent = match kind {
                CurveKind::RandomCoding => random_coding_exponent(rate, eps)?,
                CurveKind::VeryNoisyApprox => very_noisy_rc_approx(rate, cap),
                CurveKind::MsbsSc { alpha } => msbs_sc_exponent(rate, alpha, eps)?,
                CurveKind::LsbsSc { alpha } => lsbs_sc_exponent(rate, alpha, eps),
                CurveKind::MsbsJmlLb { r2 } => jml_lb_exponent(rate, r2, eps)?,
                CurveKind::QuantizedSpc => spc_quantized_mse_exponent(rate, eps)?,
                CurveKind::MseRandomCoding => {
                    mse_exponent_from_q(random_coding_exponent(rate, eps)?, rate)
                }
                CurveKind::MseSpc => {
                    mse_exponent_from_q(spc_quantized_mse_exponent(rate, eps)?, rate)
                }
                CurveKind::Bisection => bz_exponent_lb(rate, eps),
                CurveKind::TwiceRate => 2.0 * rate,
            };
            Ok(ExponentPoint { rate, exponent })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExponentCurve {
        channel_eps: eps,
        label: kind.name().to_string(),
        points,
        notes,
    })
}

//! Scalar information measures for Bernoulli sources and the BSC.
//!
//! Everything is in nats. `0 ln 0` is taken as 0.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates, entropies, divergences and exponents, in nats.
pub type Nats = f64;

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(
                "Probability::new",
                format!("{value} is not in [0, 1]"),
            ))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// `x ln x` with the convention `0 ln 0 = 0`.
fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `a ln(a / b)` with `0 ln(0 / b) = 0`. Caller guarantees `b > 0` when `a > 0`.
fn xlnxy(a: f64, b: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else {
        a * (a / b).ln()
    }
}

/// Binary entropy `H_B(a)`.
pub fn binary_entropy(a: f64) -> Nats {
    -xlnx(a) - xlnx(1.0 - a)
}

/// Divergence `D_B(a || b)` between Bernoulli(a) and Bernoulli(b).
///
/// Infinite divergences (`b` in `{0, 1}` with `a != b`) are reported as
/// domain errors so optimizers built on top stay total.
pub fn kl_bernoulli(a: f64, b: f64) -> Result<Nats> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(Error::domain(
            "kl_bernoulli",
            format!("arguments ({a}, {b}) must lie in [0, 1]"),
        ));
    }
    if (b == 0.0 && a != 0.0) || (b == 1.0 && a != 1.0) {
        return Err(Error::domain(
            "kl_bernoulli",
            format!("D({a} || {b}) is infinite"),
        ));
    }
    Ok((xlnxy(a, b) + xlnxy(1.0 - a, 1.0 - b)).max(0.0))
}

/// The binary convolution `a * e = a(1 - e) + (1 - a)e`: the crossover of
/// BSC(a) followed by BSC(e).
pub fn star(a: f64, e: f64) -> f64 {
    a * (1.0 - e) + (1.0 - a) * e
}

const GV_TOL: f64 = 1e-12;
const GV_MAX_ITER: usize = 200;

/// Normalized Gilbert-Varshamov distance: the `g` in `[0, 1/2]` with
/// `D_B(g || 1/2) = r`.
pub fn gv_distance(r: Nats) -> Result<f64> {
    if !(0.0..=LN_2).contains(&r) {
        return Err(Error::domain(
            "gv_distance",
            format!("rate {r} is outside [0, ln 2]"),
        ));
    }
    if r == 0.0 {
        return Ok(0.5);
    }
    if r == LN_2 {
        return Ok(0.0);
    }
    // D_B(g || 1/2) = ln 2 - H_B(g) is strictly decreasing on [0, 1/2].
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..GV_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if gv_inverse(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < GV_TOL {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inverse of [`gv_distance`]: `D_B(g || 1/2) = ln 2 - H_B(g)`.
pub fn gv_inverse(g: f64) -> Nats {
    (LN_2 - binary_entropy(g)).max(0.0)
}

/// Capacity of BSC(eps).
pub fn capacity(eps: f64) -> Nats {
    (LN_2 - binary_entropy(eps)).max(0.0)
}

/// Gallager's `E_0(1, .)` for the uniform input on BSC(eps):
/// `-ln(1/2 + sqrt(eps (1 - eps)))`.
pub fn e0_half(eps: f64) -> Nats {
    (-(0.5 + (eps * (1.0 - eps)).sqrt()).ln()).max(0.0)
}

/// `sqrt(eps) / (sqrt(eps) + sqrt(1 - eps))`.
pub fn gamma_crit(eps: f64) -> f64 {
    let (s, t) = (eps.sqrt(), (1.0 - eps).sqrt());
    s / (s + t)
}

/// Critical rate of BSC(eps), where the random-coding exponent leaves its
/// straight-line segment.
pub fn r_crit(eps: f64) -> Nats {
    gv_inverse(gamma_crit(eps))
}

/// Rate available to the satellite message of a superposition code with
/// satellite bias `alpha`: `H_B(alpha * eps) - H_B(eps)`.
pub fn c2(alpha: f64, eps: f64) -> Nats {
    (binary_entropy(star(alpha, eps)) - binary_entropy(eps)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!(close(binary_entropy(0.5), LN_2, 1e-15));
        // 40-digit evaluation: 0.6108643020548934630...
        assert!(close(binary_entropy(0.3), 0.610_864_302_054_893_5, 1e-14));
    }

    #[test]
    fn divergence_values() {
        assert_eq!(kl_bernoulli(0.3, 0.3).unwrap(), 0.0);
        assert!(close(
            kl_bernoulli(0.5, 0.25).unwrap(),
            0.143_841_036_225_890_46,
            1e-14
        ));
        assert!(close(kl_bernoulli(0.0, 0.5).unwrap(), LN_2, 1e-15));
        assert!(kl_bernoulli(0.2, 0.0).is_err());
        assert!(kl_bernoulli(0.2, 1.0).is_err());
        assert_eq!(kl_bernoulli(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(kl_bernoulli(1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn star_values() {
        assert_eq!(star(0.0, 0.27), 0.27);
        assert_eq!(star(0.5, 0.13), 0.5);
        assert!(close(star(0.1, 0.3), 0.34, 1e-15));
        assert_eq!(star(0.1, 0.3), star(0.3, 0.1));
    }

    #[test]
    fn gv_values() {
        assert_eq!(gv_distance(0.0).unwrap(), 0.5);
        assert_eq!(gv_distance(LN_2).unwrap(), 0.0);
        let g = gv_distance(0.2).unwrap();
        assert!((kl_bernoulli(g, 0.5).unwrap() - 0.2).abs() < 1e-10);
        assert!(gv_distance(-1e-3).is_err());
        assert!(gv_distance(0.7).is_err());
        assert_eq!(gv_inverse(0.5), 0.0);
        assert!(close(gv_inverse(0.0), LN_2, 1e-15));
        for r in [0.05, 0.2, 0.5] {
            assert!((gv_inverse(gv_distance(r).unwrap()) - r).abs() < 1e-10);
        }
    }

    #[test]
    fn channel_quantities() {
        assert!(close(capacity(0.0), LN_2, 1e-15));
        assert_eq!(capacity(0.5), 0.0);
        assert!(close(capacity(0.3), 0.082_282_878_505_051_85, 1e-14));
        assert_eq!(e0_half(0.5), 0.0);
        assert!(close(e0_half(0.0), LN_2, 1e-15));
        assert!(close(e0_half(0.45), 0.002_509_427_427_610_096, 1e-15));
        assert!(close(r_crit(0.45), 0.001_256_815_955_085_553, 1e-13));
        assert!(r_crit(0.5 - 1e-9) < 1e-12);
        for eps in [0.1, 0.3, 0.45] {
            assert!(r_crit(eps) < capacity(eps));
        }
    }

    #[test]
    fn c2_values() {
        assert_eq!(c2(0.0, 0.3), 0.0);
        assert!(close(c2(0.5, 0.3), capacity(0.3), 1e-15));
        assert!(close(c2(0.1, 0.3), 0.030_171_175_826_262_173, 1e-14));
    }

    #[test]
    fn entropy_shape_on_grid() {
        let n = 1000;
        let h: Vec<f64> = (0..=n)
            .map(|i| binary_entropy(i as f64 / n as f64))
            .collect();
        for i in 0..=n {
            assert!(h[i] <= LN_2 + 1e-15);
            assert!(close(h[i], h[n - i], 1e-14));
        }
        for i in 1..n {
            // midpoint concavity
            assert!(2.0 * h[i] >= h[i - 1] + h[i + 1] - 1e-14);
        }
    }

    #[test]
    fn divergence_nonnegative_on_grid() {
        let n = 60;
        for i in 0..=n {
            for j in 1..n {
                let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
                let d = kl_bernoulli(a, b).unwrap();
                if i == j {
                    assert!(d < 1e-15);
                } else {
                    assert!(d > 0.0);
                }
            }
        }
    }

    #[test]
    fn c2_increasing_and_e0_below_capacity() {
        for eps in [0.05, 0.2, 0.3, 0.45] {
            let mut prev = c2(1e-4, eps);
            for i in 2..500 {
                let cur = c2(i as f64 * 1e-3, eps);
                assert!(cur > prev);
                prev = cur;
            }
        }
        for i in 1..500 {
            let eps = i as f64 / 1000.0;
            assert!(e0_half(eps) < capacity(eps));
        }
    }

    #[test]
    fn probability_newtype() {
        assert!(Probability::new(0.3).is_ok());
        assert!(Probability::new(-0.1).is_err());
        assert!(Probability::new(1.5).is_err());
        let p: Probability = serde_json::from_str("0.25").unwrap();
        assert_eq!(p.value(), 0.25);
        assert!(serde_json::from_str::<Probability>("2.0").is_err());
    }
}

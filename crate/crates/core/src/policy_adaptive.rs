//! Adaptive querying: bisection restricted to the `2^k` grid of thresholds.
//!
//! The player keeps a posterior over the `2^k` cells `I_m` and asks whether
//! `x >= t 2^-k` for a threshold next to the posterior median. The
//! threshold is drawn between the two grid points bracketing the median,
//! with weights that make the expected mass of the queried region exactly
//! one half.

use rand::Rng;

use crate::channel::{transmit_bit, Bsc};
use crate::error::{Error, Result};
use crate::target::{cell_width, quantize};

/// Normalization tolerance accepted by [`Posterior::from_masses`].
const NORM_TOL: f64 = 1e-12;

/// Largest resolution the dense posterior supports.
pub const MAX_POSTERIOR_BITS: u32 = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    k: u32,
    mass: Vec<f64>,
}

impl Posterior {
    pub fn uniform(k: u32) -> Result<Self> {
        check_resolution(k)?;
        let cells = 1usize << k;
        Ok(Posterior {
            k,
            mass: vec![1.0 / cells as f64; cells],
        })
    }

    /// Takes a mass vector of length `2^k` summing to one.
    pub fn from_masses(mass: Vec<f64>) -> Result<Self> {
        let cells = mass.len();
        if cells < 2 || !cells.is_power_of_two() {
            return Err(Error::domain(
                "Posterior::from_masses",
                format!("length {cells} is not a power of two >= 2"),
            ));
        }
        let k = cells.trailing_zeros();
        check_resolution(k)?;
        if mass
            .iter()
            .any(|&p| p.is_nan() || p < 0.0 || !p.is_finite())
        {
            return Err(Error::domain(
                "Posterior::from_masses",
                "negative or non-finite mass",
            ));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(
                "Posterior::from_masses",
                format!("masses sum to {total}"),
            ));
        }
        Ok(Posterior { k, mass })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn cells(&self) -> usize {
        self.mass.len()
    }

    /// Representative point of cell `m`.
    pub fn midpoint(&self, m: usize) -> f64 {
        (m as f64 + 0.5) * cell_width(self.k)
    }

    /// `P(X >= t 2^-k)` for every threshold `t = 0..=2^k`.
    fn right_tails(&self) -> Vec<f64> {
        let mut tails = vec![0.0; self.mass.len() + 1];
        for m in (0..self.mass.len()).rev() {
            tails[m] = tails[m + 1] + self.mass[m];
        }
        tails
    }

    /// Bayes update after observing answer `y` to query `q`.
    pub fn update(&mut self, q: ThresholdQuery, y: bool, ch: &Bsc) -> Result<()> {
        self.update_with_crossover(q, y, ch.eps())
    }

    /// Bayes update for an arbitrary crossover in `[0, 1]`.
    pub fn update_with_crossover(&mut self, q: ThresholdQuery, y: bool, eps: f64) -> Result<()> {
        let (inside, outside) = if y {
            (1.0 - eps, eps)
        } else {
            (eps, 1.0 - eps)
        };
        let t = q.threshold_index.min(self.mass.len());
        for (m, p) in self.mass.iter_mut().enumerate() {
            *p *= if m >= t { inside } else { outside };
        }
        let total: f64 = self.mass.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::domain("Posterior::update", "posterior vanished"));
        }
        self.mass.iter_mut().for_each(|p| *p /= total);
        Ok(())
    }
}

fn check_resolution(k: u32) -> Result<()> {
    if k == 0 || k > MAX_POSTERIOR_BITS {
        return Err(Error::resource(
            "Posterior",
            format!("resolution {k} must be in 1..={MAX_POSTERIOR_BITS}"),
        ));
    }
    Ok(())
}

/// The question "is `x >= t 2^-k`?", i.e. the region `[t 2^-k, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdQuery {
    pub threshold_index: usize,
}

impl ThresholdQuery {
    /// Whether cell `m` lies in the queried region.
    pub fn contains_cell(&self, m: u64) -> bool {
        m as usize >= self.threshold_index
    }
}

/// Picks a grid threshold next to the posterior median.
///
/// With `t` the cell holding the median (`T(t) >= 1/2 > T(t+1)`, `T` the
/// right-tail mass), threshold `t` is chosen with probability
/// `(1/2 - T(t+1)) / (T(t) - T(t+1))` and `t + 1` otherwise, so the expected
/// right-tail mass is one half.
pub fn bz_select_query<R: Rng + ?Sized>(p: &Posterior, rng: &mut R) -> ThresholdQuery {
    let tails = p.right_tails();
    let cells = p.cells();
    let t = (0..cells).rev().find(|&t| tails[t] >= 0.5).unwrap_or(0);
    let (upper, lower) = (tails[t], tails[t + 1]);
    let weight = if upper > lower {
        ((0.5 - lower) / (upper - lower)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let u: f64 = rng.gen();
    ThresholdQuery {
        threshold_index: if u < weight { t } else { t + 1 },
    }
}

/// Bayes update returning a fresh posterior.
pub fn bz_update(p: &Posterior, q: ThresholdQuery, y: bool, ch: &Bsc) -> Result<Posterior> {
    let mut next = p.clone();
    next.update(q, y, ch)?;
    Ok(next)
}

/// MAP cell; ties go to the smallest index.
pub fn bz_estimate(p: &Posterior) -> u64 {
    let mut best = 0;
    for (m, &v) in p.mass.iter().enumerate() {
        if v > p.mass[best] {
            best = m;
        }
    }
    best as u64
}

/// Plays `n_queries` rounds of grid bisection against an oracle holding `x`
/// and returns the MAP message.
///
/// Same query rule and random draws as [`bz_select_query`] followed by
/// [`Posterior::update`], on an unnormalized posterior: each answer rescales
/// only one side of the threshold by `(1 - eps) / eps`.
pub fn bz_run<R: Rng + ?Sized>(
    x: f64,
    k: u32,
    n_queries: usize,
    ch: &Bsc,
    rng: &mut R,
) -> Result<u64> {
    let message = quantize(x, k)?.message;
    let eps = ch.eps();
    if eps == 0.0 {
        let mut posterior = Posterior::uniform(k)?;
        for _ in 0..n_queries {
            let q = bz_select_query(&posterior, rng);
            let answer = transmit_bit(q.contains_cell(message), ch, rng);
            posterior.update(q, answer, ch)?;
        }
        return Ok(bz_estimate(&posterior));
    }
    let ratio = (1.0 - eps) / eps;
    let mut mass = Posterior::uniform(k)?.mass;
    let mut total = 1.0;
    for step in 0..n_queries {
        let half = 0.5 * total;
        let (mut t, mut upper, mut lower) = (0, total, 0.0);
        let mut tail = 0.0;
        for m in (0..mass.len()).rev() {
            let next = tail + mass[m];
            if next >= half {
                (t, upper, lower) = (m, next, tail);
                break;
            }
            tail = next;
        }
        let weight = if upper > lower {
            ((half - lower) / (upper - lower)).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let u: f64 = rng.gen();
        let (threshold, region) = if u < weight {
            (t, upper)
        } else {
            (t + 1, lower)
        };
        let answer = transmit_bit(message as usize >= threshold, ch, rng);
        let boosted = if answer {
            &mut mass[threshold..]
        } else {
            &mut mass[..threshold]
        };
        boosted.iter_mut().for_each(|p| *p *= ratio);
        total = if answer {
            total + region * (ratio - 1.0)
        } else {
            region + (total - region) * ratio
        };
        if step % 16 == 15 || total.is_nan() || total >= 1e200 {
            total = mass.iter().sum();
            mass.iter_mut().for_each(|p| *p /= total);
            total = 1.0;
        }
    }
    let mut best = 0;
    for (m, &v) in mass.iter().enumerate() {
        if v > mass[best] {
            best = m;
        }
    }
    Ok(best as u64)
}

/// Expected one-step reduction of the posterior variance of `X` when the
/// question is `Z = 1(X in region)` and the answer passes through BSC(eps):
///
/// `(1-2e)^2 b^2 (A - m)^2 / (e(1-e) + (1-2e)^2 b(1-b))`
///
/// with `b = P(Z = 0)`, `A = E[X | Z = 0]` and `m = E[X]`, cell midpoints
/// standing in for `X`. Returns 0 when `b` is 0 or 1.
pub fn variance_reduction(p: &Posterior, region: &[bool], eps: f64) -> Result<f64> {
    if region.len() != p.cells() {
        return Err(Error::LengthMismatch {
            left: region.len(),
            right: p.cells(),
        });
    }
    let mut beta = 0.0;
    let mut outside_moment = 0.0;
    let mut mean = 0.0;
    for (m, (&mass, &inside)) in p.mass.iter().zip(region).enumerate() {
        let x = p.midpoint(m);
        mean += mass * x;
        if !inside {
            beta += mass;
            outside_moment += mass * x;
        }
    }
    if beta <= 0.0 || beta >= 1.0 {
        return Ok(0.0);
    }
    let conditional = outside_moment / beta;
    let contrast = (1.0 - 2.0 * eps).powi(2);
    let spread = conditional - mean;
    Ok(contrast * beta * beta * spread * spread
        / (eps * (1.0 - eps) + contrast * beta * (1.0 - beta)))
}

//! Quantization of the target value, message indexing and the two costs.

use crate::error::{Error, Result};

/// Largest supported resolution. Messages are `u64` and `x * 2^k` must be
/// exact in an `f64`.
pub const MAX_BITS: u32 = 52;

/// The hidden value together with its first `k` dyadic bits.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    pub x: f64,
    pub k: u32,
    /// `B_1..B_k`, most significant first.
    pub bits: Vec<bool>,
    pub message: u64,
}

impl TargetState {
    /// Left end of the message interval `I_M`.
    pub fn interval_start(&self) -> f64 {
        self.message as f64 * cell_width(self.k)
    }
}

fn check_bits(op: &'static str, k: u32) -> Result<()> {
    if k == 0 || k > MAX_BITS {
        return Err(Error::domain(
            op,
            format!("resolution {k} must be in 1..={MAX_BITS}"),
        ));
    }
    Ok(())
}

/// `2^-k`.
pub fn cell_width(k: u32) -> f64 {
    (-(k as f64)).exp2()
}

/// Bits of message `m` at resolution `k`, MSB first.
pub fn message_bits(m: u64, k: u32) -> Vec<bool> {
    (0..k).rev().map(|i| (m >> i) & 1 == 1).collect()
}

/// Message index of a bit vector, MSB first.
pub fn bits_to_message(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |m, &b| (m << 1) | b as u64)
}

pub fn quantize(x: f64, k: u32) -> Result<TargetState> {
    check_bits("quantize", k)?;
    if !(0.0..1.0).contains(&x) {
        return Err(Error::domain(
            "quantize",
            format!("x = {x} is outside [0, 1)"),
        ));
    }
    // scaling by a power of two is exact
    let message = (x * (k as f64).exp2()).floor() as u64;
    Ok(TargetState {
        x,
        k,
        bits: message_bits(message, k),
        message,
    })
}

/// Midpoint of the interval of message `m_hat`.
pub fn finite_resolution_estimate(m_hat: u64, k: u32) -> Result<f64> {
    check_bits("finite_resolution_estimate", k)?;
    if m_hat >> k != 0 {
        return Err(Error::domain(
            "finite_resolution_estimate",
            format!("message {m_hat} does not fit in {k} bits"),
        ));
    }
    Ok((m_hat as f64 + 0.5) * cell_width(k))
}

pub fn decoding_distance(m: u64, m_hat: u64) -> u64 {
    m.abs_diff(m_hat)
}

/// Stepwise squared error at resolution `2^-k`: `(d 2^-k)^2` where `d` is
/// the integer with `(d - 1/2) 2^-k < |x - x_hat| <= (d + 1/2) 2^-k`.
pub fn quantized_cost(x: f64, x_hat: f64, k: u32) -> f64 {
    let scaled = (x - x_hat).abs() * (k as f64).exp2();
    let d = (scaled - 0.5).ceil().max(0.0);
    let step = d * cell_width(k);
    step * step
}

pub fn squared_cost(x: f64, x_hat: f64) -> f64 {
    (x - x_hat) * (x - x_hat)
}

/// A message split into its `k1` most significant bits and `k2` least
/// significant bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMessage {
    pub k1: u32,
    pub k2: u32,
    pub m1: u64,
    pub m2: u64,
}

pub fn split(m: u64, k1: u32, k2: u32) -> Result<SplitMessage> {
    check_bits("split", k1 + k2)?;
    if m >> (k1 + k2) != 0 {
        return Err(Error::domain(
            "split",
            format!("message {m} does not fit in {} bits", k1 + k2),
        ));
    }
    Ok(SplitMessage {
        k1,
        k2,
        m1: m >> k2,
        m2: m & ((1u64 << k2) - 1),
    })
}

pub fn merge(sm: SplitMessage) -> u64 {
    (sm.m1 << sm.k2) | sm.m2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantize_examples() {
        let t = quantize(0.0, 3).unwrap();
        assert_eq!(t.bits, vec![false; 3]);
        assert_eq!(t.message, 0);
        let t = quantize(0.5, 1).unwrap();
        assert_eq!(t.bits, vec![true]);
        assert_eq!(t.message, 1);
        let t = quantize(0.8125, 4).unwrap();
        assert_eq!(t.bits, vec![true, true, false, true]);
        assert_eq!(t.message, 13);
        assert!(quantize(1.0, 3).is_err());
        assert!(quantize(-0.1, 3).is_err());
        assert!(quantize(0.3, 0).is_err());
    }

    #[test]
    fn estimator_examples() {
        assert_eq!(finite_resolution_estimate(0, 1).unwrap(), 0.25);
        assert_eq!(finite_resolution_estimate(7, 3).unwrap(), 1.0 - 1.0 / 16.0);
        assert_eq!(finite_resolution_estimate(5, 3).unwrap(), 0.6875);
        assert!(finite_resolution_estimate(8, 3).is_err());
    }

    #[test]
    fn costs() {
        assert_eq!(decoding_distance(4, 4), 0);
        assert_eq!(decoding_distance(0, 15), 15);
        assert_eq!(decoding_distance(13, 9), 4);
        assert_eq!(quantized_cost(0.4, 0.4, 5), 0.0);
        assert_eq!(quantized_cost(0.5, 0.25, 3), 1.0 / 16.0);
        // half-open binning: |x - x_hat| = 2^-k / 2 still counts as d = 0
        assert_eq!(quantized_cost(0.0625, 0.0, 3), 0.0);
        assert_eq!(quantized_cost(0.0626, 0.0, 3), 1.0 / 64.0);
        assert_eq!(squared_cost(0.3, 0.3), 0.0);
        assert_eq!(squared_cost(0.0, 1.0), 1.0);
        assert!((squared_cost(0.3, 0.55) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn split_examples() {
        assert_eq!(split(0, 3, 3).unwrap().m1, 0);
        let s = split(2, 1, 1).unwrap();
        assert_eq!((s.m1, s.m2), (1, 0));
        let s = split(22, 2, 3).unwrap();
        assert_eq!((s.m1, s.m2), (2, 6));
        assert_eq!(merge(s), 22);
        assert!(split(32, 2, 3).is_err());
    }

    proptest! {
        #[test]
        fn quantize_round_trips(x in 0.0f64..1.0, k in 1u32..=20) {
            let t = quantize(x, k).unwrap();
            prop_assert_eq!(bits_to_message(&t.bits), t.message);
            prop_assert!(t.interval_start() <= x);
            prop_assert!(x < t.interval_start() + cell_width(k));
        }

        #[test]
        fn split_merge_round_trip(k1 in 1u32..=10, k2 in 1u32..=10, raw in any::<u64>()) {
            let m = raw % (1u64 << (k1 + k2));
            let s = split(m, k1, k2).unwrap();
            prop_assert!(s.m1 < 1 << k1 && s.m2 < 1 << k2);
            prop_assert_eq!(merge(s), m);
        }

        #[test]
        fn quantized_cost_matches_distance(x in 0.0f64..1.0, k in 1u32..=20, raw in any::<u64>()) {
            let m_hat = raw % (1u64 << k);
            let t = quantize(x, k).unwrap();
            let x_hat = finite_resolution_estimate(m_hat, k).unwrap();
            let d = decoding_distance(t.message, m_hat) as f64;
            prop_assume!(x != t.interval_start());
            prop_assert_eq!(quantized_cost(x, x_hat, k), d * d * cell_width(k) * cell_width(k));
        }
    }
}

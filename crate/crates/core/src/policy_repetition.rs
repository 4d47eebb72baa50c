//! Non-adaptive repetition querying with unequal error protection.
//!
//! Bit `B_i` is asked `N_i` times and decided by majority vote. More
//! significant bits get more repetitions.

use rand::Rng;

use crate::channel::{transmit_bit, Bsc};
use crate::error::{Error, Result};
use crate::numerics::kl_bernoulli;
use crate::target::{bits_to_message, quantize};

/// Repetition counts `N_1..N_k`, MSB first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepetitionPlan {
    allocations: Vec<usize>,
}

impl RepetitionPlan {
    pub fn new(allocations: Vec<usize>) -> Result<Self> {
        if allocations.is_empty() || allocations.contains(&0) {
            return Err(Error::domain(
                "RepetitionPlan::new",
                "every bit needs at least one repetition",
            ));
        }
        Ok(RepetitionPlan { allocations })
    }

    pub fn allocations(&self) -> &[usize] {
        &self.allocations
    }

    pub fn k(&self) -> u32 {
        self.allocations.len() as u32
    }

    pub fn total(&self) -> usize {
        self.allocations.iter().sum()
    }
}

/// Greedy allocation of `n` queries over `k` bits.
///
/// Starts from one repetition per bit and hands out the remaining queries one
/// at a time to the bit whose term `4^-(i-1) exp(-N_i D_B(1/2 || eps))` is
/// largest, which is the bit whose extra repetition lowers the weighted
/// Chernoff bound the most. Ties go to the more significant bit.
pub fn allocate(n: usize, k: u32, eps: f64) -> Result<RepetitionPlan> {
    if k == 0 || n < k as usize {
        return Err(Error::domain(
            "allocate",
            format!("need n >= k >= 1, got n = {n}, k = {k}"),
        ));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain(
            "allocate",
            format!("crossover {eps} is outside (0, 1/2)"),
        ));
    }
    let d = kl_bernoulli(0.5, eps)?;
    let weight_log = |i: usize| -2.0 * std::f64::consts::LN_2 * i as f64;
    let mut alloc = vec![1usize; k as usize];
    for _ in k as usize..n {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, &ni) in alloc.iter().enumerate() {
            let score = weight_log(i) - ni as f64 * d;
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        alloc[best] += 1;
    }
    RepetitionPlan::new(alloc)
}

/// Majority vote: 1 iff strictly more ones than zeros.
pub fn majority_decode(votes: impl IntoIterator<Item = bool>) -> bool {
    let balance: i64 = votes.into_iter().map(|v| if v { 1 } else { -1 }).sum();
    balance > 0
}

/// Asks every bit of `x` its planned number of times and majority-decodes.
pub fn repetition_run<R: Rng + ?Sized>(
    x: f64,
    plan: &RepetitionPlan,
    ch: &Bsc,
    rng: &mut R,
) -> Result<u64> {
    let target = quantize(x, plan.k())?;
    let decoded: Vec<bool> = target
        .bits
        .iter()
        .zip(plan.allocations())
        .map(|(&bit, &reps)| majority_decode((0..reps).map(|_| transmit_bit(bit, ch, rng))))
        .collect();
    Ok(bits_to_message(&decoded))
}

/// Bracket on the majority-vote bit-error probability after `n_i`
/// repetitions: `exp(-1/(3n))/sqrt(2 pi n) e^{-n D}` below and `e^{-n D}`
/// above, `D = D_B(1/2 || eps)`.
pub fn repetition_bit_error_bounds(n_i: usize, eps: f64) -> Result<(f64, f64)> {
    if n_i == 0 {
        return Err(Error::domain(
            "repetition_bit_error_bounds",
            "n_i must be positive",
        ));
    }
    let n = n_i as f64;
    let upper = (-n * kl_bernoulli(0.5, eps)?).exp();
    let lower = (-1.0 / (3.0 * n)).exp() / (2.0 * std::f64::consts::PI * n).sqrt() * upper;
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::substream;

    #[test]
    fn single_bit_gets_everything() {
        assert_eq!(allocate(37, 1, 0.3).unwrap().allocations(), &[37]);
        assert!(allocate(3, 4, 0.3).is_err());
        assert!(allocate(3, 0, 0.3).is_err());
    }

    #[test]
    fn allocation_sums_and_decreases() {
        for (n, k) in [(100, 5), (100, 9), (400, 7), (1000, 12)] {
            let plan = allocate(n, k, 0.3).unwrap();
            assert_eq!(plan.total(), n);
            for w in plan.allocations().windows(2) {
                assert!(w[0] >= w[1], "{:?}", plan.allocations());
            }
            assert_eq!(plan, allocate(n, k, 0.3).unwrap());
        }
    }

    #[test]
    fn allocation_is_nearly_linear() {
        let plan = allocate(400, 7, 0.3).unwrap();
        let ys: Vec<f64> = plan.allocations().iter().map(|&v| v as f64).collect();
        assert!(ys.iter().all(|&y| y > 1.0));
        let n = ys.len() as f64;
        let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        let worst = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - (my + slope * (x - mx))).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 2.0, "{:?} deviates by {worst}", plan.allocations());
    }

    #[test]
    fn majority_examples() {
        assert!(majority_decode([true, true, false]));
        assert!(!majority_decode([true, false]));
        assert!(majority_decode([
            false, false, true, true, true, true, false
        ]));
    }

    #[test]
    fn noiseless_recovery() {
        let ch = Bsc::new(0.0).unwrap();
        let plan = allocate(30, 6, 0.3).unwrap();
        let mut rng = substream(8, &[]);
        for _ in 0..100 {
            let x: f64 = rng.gen();
            let m = quantize(x, 6).unwrap().message;
            assert_eq!(repetition_run(x, &plan, &ch, &mut rng).unwrap(), m);
        }
    }

    #[test]
    fn bounds_at_one_repetition() {
        let eps: f64 = 0.3;
        let (lo, up) = repetition_bit_error_bounds(1, eps).unwrap();
        assert!((up - 2.0 * (eps * (1.0 - eps)).sqrt()).abs() < 1e-15);
        assert!(lo < up);
        for n in 1..=1000 {
            for eps in [0.05, 0.1, 0.2, 0.3, 0.4, 0.45, 0.49] {
                let (lo, up) = repetition_bit_error_bounds(n, eps).unwrap();
                assert!(lo <= up);
            }
        }
    }
}

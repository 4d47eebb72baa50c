//! Binary symmetric channel, packed bit blocks and seeded random substreams.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Random stream used by every simulation in the crate.
pub type SimRng = ChaCha8Rng;

/// BSC with crossover `eps` in `[0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bsc {
    eps: f64,
}

impl Bsc {
    pub fn new(eps: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&eps) {
            return Err(Error::domain(
                "Bsc::new",
                format!("crossover {eps} is outside [0, 1/2)"),
            ));
        }
        Ok(Bsc { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// A fixed-length binary word packed into 64-bit limbs. Bits past `len` are
/// kept at zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitBlock {
    words: Vec<u64>,
    len: usize,
}

fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitBlock {
    pub fn zeros(len: usize) -> Self {
        BitBlock {
            words: vec![0; word_count(len)],
            len,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut block = BitBlock::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            block.set(i, b);
        }
        block
    }

    /// I.i.d. fair bits.
    pub fn random_uniform<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut block = BitBlock {
            words: (0..word_count(len)).map(|_| rng.next_u64()).collect(),
            len,
        };
        block.clear_tail();
        block
    }

    /// I.i.d. Bernoulli(`p`) bits.
    pub fn random_bernoulli<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Self {
        let mut block = BitBlock::zeros(len);
        if p <= 0.0 {
            return block;
        }
        for i in 0..len {
            if rng.gen::<f64>() < p {
                block.set(i, true);
            }
        }
        block
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn xor(&self, other: &BitBlock) -> BitBlock {
        assert_eq!(self.len, other.len, "xor of blocks with different lengths");
        BitBlock {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
            len: self.len,
        }
    }

    /// Hamming distance without the length check, for hot decoding loops.
    #[inline]
    pub(crate) fn distance_unchecked(&self, other: &BitBlock) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Distance between `self` and `a ^ b`, without materializing the XOR.
    #[inline]
    pub(crate) fn distance_to_xor(&self, a: &BitBlock, b: &BitBlock) -> usize {
        self.words
            .iter()
            .zip(&a.words)
            .zip(&b.words)
            .map(|((y, u), v)| (y ^ u ^ v).count_ones() as usize)
            .sum()
    }

    /// Lower-case hex, reading bits `0, 1, 2, ...` left to right four at a
    /// time (the first bit is the high bit of the first digit). The last
    /// digit is zero-padded.
    pub fn to_hex(&self) -> String {
        (0..self.len.div_ceil(4))
            .map(|d| {
                let nibble = (0..4).fold(0u32, |acc, j| {
                    let i = 4 * d + j;
                    (acc << 1) | (i < self.len && self.get(i)) as u32
                });
                char::from_digit(nibble, 16).unwrap_or('0')
            })
            .collect()
    }

    /// Inverse of [`BitBlock::to_hex`].
    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let hex = hex.trim();
        if hex.len() != len.div_ceil(4) {
            return Err(Error::LengthMismatch {
                left: hex.len() * 4,
                right: len,
            });
        }
        let mut block = BitBlock::zeros(len);
        for (d, c) in hex.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| Error::domain("BitBlock::from_hex", format!("bad digit {c:?}")))?;
            for j in 0..4 {
                let i = 4 * d + j;
                let bit = (nibble >> (3 - j)) & 1 == 1;
                if i < len {
                    block.set(i, bit);
                } else if bit {
                    return Err(Error::domain("BitBlock::from_hex", "nonzero padding"));
                }
            }
        }
        Ok(block)
    }
}

pub fn hamming(a: &BitBlock, b: &BitBlock) -> Result<usize> {
    if a.len != b.len {
        return Err(Error::LengthMismatch {
            left: a.len,
            right: b.len,
        });
    }
    Ok(a.distance_unchecked(b))
}

/// Passes `block` through the channel, flipping each bit independently with
/// probability `eps`.
pub fn transmit<R: Rng + ?Sized>(block: &BitBlock, ch: &Bsc, rng: &mut R) -> BitBlock {
    if ch.eps == 0.0 {
        return block.clone();
    }
    block.xor(&BitBlock::random_bernoulli(block.len, ch.eps, rng))
}

/// Sends a single bit through the channel.
pub fn transmit_bit<R: Rng + ?Sized>(bit: bool, ch: &Bsc, rng: &mut R) -> bool {
    let flip = ch.eps > 0.0 && rng.gen::<f64>() < ch.eps;
    bit ^ flip
}

/// `ln p^N(y | z) = d ln eps + (N - d) ln(1 - eps)`.
pub fn log_likelihood(y: &BitBlock, z: &BitBlock, ch: &Bsc) -> Result<f64> {
    let d = hamming(y, z)?;
    if ch.eps == 0.0 && d > 0 {
        return Err(Error::domain(
            "log_likelihood",
            "zero-probability output on a noiseless channel",
        ));
    }
    let n = y.len();
    let agree = (n - d) as f64 * (1.0 - ch.eps).ln();
    if d == 0 {
        Ok(agree)
    } else {
        Ok(d as f64 * ch.eps.ln() + agree)
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// An independent ChaCha8 stream keyed by `master` and a list of tags
/// (policy id, block length, trial index, ...).
///
/// The 256-bit key is built by chaining SplitMix64 over the master seed and
/// tags, so a given `(master, tags)` always yields the same stream no matter
/// which thread draws it or in what order.
pub fn substream(master: u64, tags: &[u64]) -> SimRng {
    let mut state = mix64(master);
    for &t in tags {
        state = mix64(state ^ mix64(t));
    }
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_mut(8).enumerate() {
        state = mix64(state.wrapping_add(i as u64));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    SimRng::from_seed(seed)
}

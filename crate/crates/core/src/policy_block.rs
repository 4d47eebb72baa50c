//! Non-adaptive block querying.
//!
//! Query `i` asks whether `x` lies in the union of the cells `I_m` whose
//! codeword has a one in position `i`, so the oracle's answers spell out the
//! codeword of the true message. Two codebook ensembles are provided: i.i.d.
//! fair bits (equal protection), and superposition codes where each codeword
//! is a fair cloud center XOR a sparse Bernoulli(alpha) satellite (the cloud
//! index carries the most significant bits).

use std::io::{BufRead, Write};

use rand::{Rng, RngCore};

use crate::channel::{substream, BitBlock, Bsc};
use crate::error::{Error, Result};
use crate::target::{merge, SplitMessage};

/// Largest total message size a codebook may hold.
pub const MAX_CODEBOOK_BITS: u32 = 20;
/// Largest satellite count the marginal ML decoder sums over.
pub const MAX_MARGINAL_BITS: u32 = 12;

/// `2^bits` rows of `n` bits each, stored contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
struct RowStore {
    rows: usize,
    n: usize,
    stride: usize,
    words: Vec<u64>,
}

impl RowStore {
    fn uniform<R: RngCore + ?Sized>(rows: usize, n: usize, rng: &mut R) -> Self {
        let stride = n.div_ceil(64);
        let tail = match n % 64 {
            0 => u64::MAX,
            rem => (1u64 << rem) - 1,
        };
        let mut words = vec![0u64; rows * stride];
        for row in words.chunks_mut(stride) {
            for w in row.iter_mut() {
                *w = rng.next_u64();
            }
            if let Some(last) = row.last_mut() {
                *last &= tail;
            }
        }
        RowStore {
            rows,
            n,
            stride,
            words,
        }
    }

    fn bernoulli<R: Rng + ?Sized>(rows: usize, n: usize, p: f64, rng: &mut R) -> Self {
        let stride = n.div_ceil(64);
        let mut words = Vec::with_capacity(rows * stride);
        for _ in 0..rows {
            words.extend_from_slice(BitBlock::random_bernoulli(n, p, rng).words());
        }
        RowStore {
            rows,
            n,
            stride,
            words,
        }
    }

    fn from_blocks(blocks: &[BitBlock], n: usize) -> Self {
        let stride = n.div_ceil(64);
        let mut words = Vec::with_capacity(blocks.len() * stride);
        for b in blocks {
            words.extend_from_slice(b.words());
        }
        RowStore {
            rows: blocks.len(),
            n,
            stride,
            words,
        }
    }

    #[inline]
    fn row(&self, m: usize) -> &[u64] {
        &self.words[m * self.stride..(m + 1) * self.stride]
    }

    fn block(&self, m: usize) -> BitBlock {
        let mut b = BitBlock::zeros(self.n);
        for i in 0..self.n {
            b.set(i, self.bit(m, i));
        }
        b
    }

    #[inline]
    fn bit(&self, m: usize, i: usize) -> bool {
        (self.row(m)[i / 64] >> (i % 64)) & 1 == 1
    }

    /// Index of the nearest row to `y` (smallest index on ties) and its distance.
    fn nearest(&self, y: &[u64]) -> (usize, usize) {
        let mut best = (0, usize::MAX);
        for m in 0..self.rows {
            let d = distance(self.row(m), y);
            if d < best.1 {
                best = (m, d);
            }
        }
        best
    }
}

#[inline]
fn distance(a: &[u64], b: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum()
}

#[inline]
fn distance3(a: &[u64], b: &[u64], c: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), z)| (x ^ y ^ z).count_ones() as usize)
        .sum()
}

fn check_len(y: &BitBlock, n: usize) -> Result<()> {
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: n,
        });
    }
    Ok(())
}

/// Common view of the two codebook families.
pub trait Codebook {
    /// Total message bits.
    fn k(&self) -> u32;
    /// Block length.
    fn n(&self) -> usize;
    /// Bit `i` of the codeword for message `m`.
    fn bit(&self, m: u64, i: usize) -> bool;
    fn codeword(&self, m: u64) -> BitBlock;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomCodebook {
    k: u32,
    seed: Option<u64>,
    rows: RowStore,
}

fn guard_bits(op: &'static str, bits: u32, n: usize) -> Result<()> {
    if bits > MAX_CODEBOOK_BITS {
        return Err(Error::resource(
            op,
            format!("{bits} message bits exceeds the cap of {MAX_CODEBOOK_BITS}"),
        ));
    }
    if n == 0 {
        return Err(Error::domain(op, "block length must be positive"));
    }
    Ok(())
}

impl RandomCodebook {
    /// Draws a codebook from an existing stream.
    pub fn generate<R: RngCore + ?Sized>(k: u32, n: usize, rng: &mut R) -> Result<Self> {
        guard_bits("gen_random_codebook", k, n)?;
        if k == 0 {
            return Err(Error::domain("gen_random_codebook", "k must be positive"));
        }
        Ok(RandomCodebook {
            k,
            seed: None,
            rows: RowStore::uniform(1 << k, n, rng),
        })
    }

    pub fn from_rows(rows: &[BitBlock]) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.len());
        if rows.len() < 2 || !rows.len().is_power_of_two() {
            return Err(Error::domain(
                "RandomCodebook::from_rows",
                "row count must be 2^k, k >= 1",
            ));
        }
        let k = rows.len().trailing_zeros();
        guard_bits("RandomCodebook::from_rows", k, n)?;
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: n,
            });
        }
        Ok(RandomCodebook {
            k,
            seed: None,
            rows: RowStore::from_blocks(rows, n),
        })
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn row(&self, m: u64) -> BitBlock {
        self.rows.block(m as usize)
    }

    /// Header `k 0 n 0.5 seed`, then one hex row per codeword.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let seed = self.seed.map_or("-".to_string(), |s| s.to_string());
        writeln!(out, "{} 0 {} 0.5 {}", self.k, self.rows.n, seed)?;
        for m in 0..self.rows.rows {
            writeln!(out, "{}", self.rows.block(m).to_hex())?;
        }
        Ok(())
    }
}

impl Codebook for RandomCodebook {
    fn k(&self) -> u32 {
        self.k
    }

    fn n(&self) -> usize {
        self.rows.n
    }

    fn bit(&self, m: u64, i: usize) -> bool {
        self.rows.bit(m as usize, i)
    }

    fn codeword(&self, m: u64) -> BitBlock {
        self.rows.block(m as usize)
    }
}

/// Codebook of i.i.d. fair bits, reproducible from `seed`.
pub fn gen_random_codebook(k: u32, n: usize, seed: u64) -> Result<RandomCodebook> {
    let mut cb = RandomCodebook::generate(k, n, &mut substream(seed, &[]))?;
    cb.seed = Some(seed);
    Ok(cb)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionCodebook {
    k1: u32,
    k2: u32,
    alpha: f64,
    seed: Option<u64>,
    clouds: RowStore,
    satellites: RowStore,
}

impl SuperpositionCodebook {
    pub fn generate<R: Rng + ?Sized>(
        k1: u32,
        k2: u32,
        n: usize,
        alpha: f64,
        rng: &mut R,
    ) -> Result<Self> {
        guard_bits("gen_spc_codebook", k1 + k2, n)?;
        if k1 == 0 || k2 == 0 {
            return Err(Error::domain(
                "gen_spc_codebook",
                "k1 and k2 must be positive",
            ));
        }
        if !(alpha > 0.0 && alpha <= 0.5) {
            return Err(Error::domain(
                "gen_spc_codebook",
                format!("alpha {alpha} is outside (0, 1/2]"),
            ));
        }
        let clouds = RowStore::uniform(1 << k1, n, rng);
        let satellites = RowStore::bernoulli(1 << k2, n, alpha, rng);
        Ok(SuperpositionCodebook {
            k1,
            k2,
            alpha,
            seed: None,
            clouds,
            satellites,
        })
    }

    /// Builds a codebook from explicit clouds and satellites (any positive
    /// power-of-two counts, `k2 = 0` allowed).
    pub fn from_parts(clouds: &[BitBlock], satellites: &[BitBlock], alpha: f64) -> Result<Self> {
        let n = clouds.first().map_or(0, |r| r.len());
        for rows in [clouds, satellites] {
            if rows.is_empty() || !rows.len().is_power_of_two() {
                return Err(Error::domain(
                    "SuperpositionCodebook::from_parts",
                    "row counts must be powers of two",
                ));
            }
            if let Some(bad) = rows.iter().find(|r| r.len() != n) {
                return Err(Error::LengthMismatch {
                    left: bad.len(),
                    right: n,
                });
            }
        }
        let (k1, k2) = (
            clouds.len().trailing_zeros(),
            satellites.len().trailing_zeros(),
        );
        guard_bits("SuperpositionCodebook::from_parts", k1 + k2, n)?;
        Ok(SuperpositionCodebook {
            k1,
            k2,
            alpha,
            seed: None,
            clouds: RowStore::from_blocks(clouds, n),
            satellites: RowStore::from_blocks(satellites, n),
        })
    }

    pub fn k1(&self) -> u32 {
        self.k1
    }

    pub fn k2(&self) -> u32 {
        self.k2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn cloud(&self, m1: u64) -> BitBlock {
        self.clouds.block(m1 as usize)
    }

    pub fn satellite(&self, m2: u64) -> BitBlock {
        self.satellites.block(m2 as usize)
    }

    /// `cloud(m1) XOR satellite(m2)`.
    pub fn codeword_parts(&self, m1: u64, m2: u64) -> BitBlock {
        self.cloud(m1).xor(&self.satellite(m2))
    }

    /// Header `k1 k2 n alpha seed`, then the cloud rows followed by the
    /// satellite rows, one hex row each.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let seed = self.seed.map_or("-".to_string(), |s| s.to_string());
        writeln!(
            out,
            "{} {} {} {} {}",
            self.k1, self.k2, self.clouds.n, self.alpha, seed
        )?;
        for m in 0..self.clouds.rows {
            writeln!(out, "{}", self.clouds.block(m).to_hex())?;
        }
        for m in 0..self.satellites.rows {
            writeln!(out, "{}", self.satellites.block(m).to_hex())?;
        }
        Ok(())
    }

    /// Parses the format written by [`SuperpositionCodebook::write_dump`].
    pub fn read_dump<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty codebook dump".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Config(format!("bad codebook header {header:?}")));
        }
        let parse_err = |what: &str| Error::Config(format!("bad {what} in header {header:?}"));
        let k1: u32 = fields[0].parse().map_err(|_| parse_err("k1"))?;
        let k2: u32 = fields[1].parse().map_err(|_| parse_err("k2"))?;
        let n: usize = fields[2].parse().map_err(|_| parse_err("n"))?;
        let alpha: f64 = fields[3].parse().map_err(|_| parse_err("alpha"))?;
        let seed: Option<u64> = match fields[4] {
            "-" => None,
            s => Some(s.parse().map_err(|_| parse_err("seed"))?),
        };
        guard_bits("read_dump", k1 + k2, n)?;
        let mut read_rows = |count: usize| -> Result<Vec<BitBlock>> {
            (0..count)
                .map(|_| {
                    let line = lines
                        .next()
                        .ok_or_else(|| Error::Config("codebook dump is truncated".into()))??;
                    BitBlock::from_hex(&line, n)
                })
                .collect()
        };
        let clouds = read_rows(1 << k1)?;
        let satellites = read_rows(1 << k2)?;
        let mut cb = SuperpositionCodebook::from_parts(&clouds, &satellites, alpha)?;
        cb.seed = seed;
        Ok(cb)
    }
}

impl Codebook for SuperpositionCodebook {
    fn k(&self) -> u32 {
        self.k1 + self.k2
    }

    fn n(&self) -> usize {
        self.clouds.n
    }

    fn bit(&self, m: u64, i: usize) -> bool {
        let (m1, m2) = (m >> self.k2, m & ((1 << self.k2) - 1));
        self.clouds.bit(m1 as usize, i) ^ self.satellites.bit(m2 as usize, i)
    }

    fn codeword(&self, m: u64) -> BitBlock {
        let m2_mask = (1u64 << self.k2) - 1;
        self.codeword_parts(m >> self.k2, m & m2_mask)
    }
}

/// Superposition codebook reproducible from `seed`.
pub fn gen_spc_codebook(
    k1: u32,
    k2: u32,
    n: usize,
    alpha: f64,
    seed: u64,
) -> Result<SuperpositionCodebook> {
    let mut cb = SuperpositionCodebook::generate(k1, k2, n, alpha, &mut substream(seed, &[]))?;
    cb.seed = Some(seed);
    Ok(cb)
}

/// Minimum-distance (= ML for eps < 1/2) decoding of a random code.
pub fn ml_decode(y: &BitBlock, cb: &RandomCodebook) -> Result<u64> {
    check_len(y, cb.rows.n)?;
    Ok(cb.rows.nearest(y.words()).0 as u64)
}

/// Joint minimum-distance decoding over every `(m1, m2)`; ties go to the
/// lexicographically smallest pair.
pub fn jml_decode(y: &BitBlock, cb: &SuperpositionCodebook) -> Result<(u64, u64)> {
    check_len(y, cb.n())?;
    let yw = y.words();
    let mut best = (0, 0, usize::MAX);
    for m1 in 0..cb.clouds.rows {
        let u = cb.clouds.row(m1);
        for m2 in 0..cb.satellites.rows {
            let d = distance3(yw, u, cb.satellites.row(m2));
            if d < best.2 {
                best = (m1, m2, d);
            }
        }
    }
    Ok((best.0 as u64, best.1 as u64))
}

/// Successive cancellation: nearest cloud to `y`, then nearest satellite to
/// `y XOR cloud`.
pub fn sc_decode(y: &BitBlock, cb: &SuperpositionCodebook) -> Result<(u64, u64)> {
    check_len(y, cb.n())?;
    let (m1, _) = cb.clouds.nearest(y.words());
    let residual: Vec<u64> = y
        .words()
        .iter()
        .zip(cb.clouds.row(m1))
        .map(|(a, b)| a ^ b)
        .collect();
    let (m2, _) = cb.satellites.nearest(&residual);
    Ok((m1 as u64, m2 as u64))
}

/// Exact ML decision for the cloud index: maximizes
/// `sum_{m2} p^N(y | cloud(m1) XOR satellite(m2))`, evaluated in log space.
pub fn marginal_ml_m1_decode(y: &BitBlock, cb: &SuperpositionCodebook, ch: &Bsc) -> Result<u64> {
    check_len(y, cb.n())?;
    if cb.k2 > MAX_MARGINAL_BITS {
        return Err(Error::resource(
            "marginal_ml_m1_decode",
            format!(
                "{} satellite bits exceeds the cap of {MAX_MARGINAL_BITS}",
                cb.k2
            ),
        ));
    }
    let n = cb.n();
    let eps = ch.eps();
    let log_lik = |d: usize| -> f64 {
        if eps == 0.0 {
            if d == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            d as f64 * eps.ln() + (n - d) as f64 * (1.0 - eps).ln()
        }
    };
    let yw = y.words();
    let mut terms = vec![0.0; cb.satellites.rows];
    let mut best = (0usize, f64::NEG_INFINITY);
    for m1 in 0..cb.clouds.rows {
        let u = cb.clouds.row(m1);
        for (m2, t) in terms.iter_mut().enumerate() {
            *t = log_lik(distance3(yw, u, cb.satellites.row(m2)));
        }
        let score = log_sum_exp(&terms);
        if score > best.1 {
            best = (m1, score);
        }
    }
    Ok(best.0 as u64)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// Column `i` of a codebook seen as the set of messages in query region `Q_i`.
#[derive(Debug, Clone, Copy)]
pub struct QueryRegionView<'a, C: Codebook + ?Sized> {
    codebook: &'a C,
    column: usize,
}

impl<C: Codebook + ?Sized> QueryRegionView<'_, C> {
    pub fn column(&self) -> usize {
        self.column
    }

    /// Whether the oracle answers 1 to query `i` when the message is `m`.
    pub fn contains(&self, m: u64) -> bool {
        self.codebook.bit(m, self.column)
    }

    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        (0..1u64 << self.codebook.k()).filter(move |&m| self.contains(m))
    }
}

pub fn query_region<C: Codebook + ?Sized>(cb: &C, i: usize) -> Result<QueryRegionView<'_, C>> {
    if i >= cb.n() {
        return Err(Error::domain(
            "query_region",
            format!("query {i} is beyond block length {}", cb.n()),
        ));
    }
    Ok(QueryRegionView {
        codebook: cb,
        column: i,
    })
}

/// Message index of a split pair in a superposition codebook.
pub fn spc_message(cb: &SuperpositionCodebook, m1: u64, m2: u64) -> u64 {
    merge(SplitMessage {
        k1: cb.k1,
        k2: cb.k2,
        m1,
        m2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{hamming, log_likelihood, transmit};

    #[test]
    fn random_codebook_reproducible_and_balanced() {
        let a = gen_random_codebook(10, 200, 42).unwrap();
        assert_eq!(a, gen_random_codebook(10, 200, 42).unwrap());
        assert_ne!(a, gen_random_codebook(10, 200, 43).unwrap());
        for i in 0..200 {
            let ones = (0..1024).filter(|&m| a.bit(m, i)).count() as f64 / 1024.0;
            assert!((ones - 0.5).abs() < 0.06, "column {i}: {ones}");
        }
        assert!(gen_random_codebook(21, 10, 0).is_err());
        assert!(gen_random_codebook(0, 10, 0).is_err());
    }

    #[test]
    fn region_is_the_column() {
        let cb = gen_random_codebook(5, 40, 3).unwrap();
        for i in [0, 17, 39] {
            let q = query_region(&cb, i).unwrap();
            for m in 0..32 {
                assert_eq!(q.contains(m), cb.row(m).get(i));
            }
        }
        assert!(query_region(&cb, 40).is_err());
    }

    #[test]
    fn spc_structure() {
        let (n, alpha) = (400, 0.1);
        let cb = gen_spc_codebook(3, 4, n, alpha, 9).unwrap();
        let spread = 4.0 * (n as f64 * alpha * (1.0 - alpha)).sqrt();
        for m2 in 0..16 {
            let w = cb.satellite(m2).weight() as f64;
            assert!((w - n as f64 * alpha).abs() <= spread);
        }
        for (m1, m2) in [(0, 0), (5, 11), (7, 15)] {
            let z = cb.codeword_parts(m1, m2);
            assert_eq!(
                hamming(&z, &cb.cloud(m1)).unwrap(),
                cb.satellite(m2).weight()
            );
            assert_eq!(cb.codeword(spc_message(&cb, m1, m2)), z);
        }
        assert!(gen_spc_codebook(3, 4, n, 0.0, 1).is_err());
        assert!(gen_spc_codebook(3, 4, n, 0.6, 1).is_err());
        assert!(gen_spc_codebook(12, 9, n, 0.1, 1).is_err());
    }

    #[test]
    fn half_alpha_looks_like_random_code() {
        let (n, cb) = (256, gen_spc_codebook(3, 3, 256, 0.5, 5).unwrap());
        let mut total = 0.0;
        let mut pairs = 0.0;
        for a in 0..64 {
            for b in (a + 1)..64 {
                total += hamming(&cb.codeword(a), &cb.codeword(b)).unwrap() as f64;
                pairs += 1.0;
            }
        }
        let mean = total / pairs;
        assert!((mean - n as f64 / 2.0).abs() < 4.0, "{mean}");
    }

    #[test]
    fn spc_region_fractions() {
        let (alpha, k2) = (0.2, 10);
        let cb = gen_spc_codebook(2, k2, 64, alpha, 12).unwrap();
        let tol = 4.0 * (alpha * (1.0 - alpha) / (1 << k2) as f64).sqrt();
        for i in 0..64 {
            let q = query_region(&cb, i).unwrap();
            for m1 in 0..4u64 {
                let included = (0..1u64 << k2)
                    .filter(|&m2| q.contains(spc_message(&cb, m1, m2)))
                    .count() as f64
                    / (1 << k2) as f64;
                let expect = if cb.cloud(m1).get(i) {
                    1.0 - alpha
                } else {
                    alpha
                };
                assert!((included - expect).abs() <= tol, "{included} vs {expect}");
            }
        }
    }

    #[test]
    fn noiseless_decoding() {
        let cb = gen_random_codebook(6, 64, 1).unwrap();
        for m in 0..64 {
            assert_eq!(ml_decode(&cb.row(m), &cb).unwrap(), m);
        }
        let spc = gen_spc_codebook(3, 3, 64, 0.2, 2).unwrap();
        for (a, b) in [(0, 0), (3, 5), (7, 7)] {
            let z = spc.codeword_parts(a, b);
            assert_eq!(jml_decode(&z, &spc).unwrap(), (a, b));
            assert_eq!(sc_decode(&z, &spc).unwrap(), (a, b));
        }
        assert!(ml_decode(&BitBlock::zeros(10), &cb).is_err());
    }

    #[test]
    fn sc_exact_with_empty_satellites() {
        let mut rng = substream(3, &[]);
        let clouds: Vec<BitBlock> = (0..8)
            .map(|_| BitBlock::random_uniform(50, &mut rng))
            .collect();
        let sats = vec![BitBlock::zeros(50); 4];
        let cb = SuperpositionCodebook::from_parts(&clouds, &sats, 0.1).unwrap();
        for m1 in 0..8 {
            assert_eq!(sc_decode(&cb.cloud(m1), &cb).unwrap(), (m1, 0));
        }
    }

    #[test]
    fn marginal_with_single_satellite_is_cloud_ml() {
        let mut rng = substream(13, &[]);
        let ch = Bsc::new(0.2).unwrap();
        for _ in 0..50 {
            let clouds: Vec<BitBlock> = (0..16)
                .map(|_| BitBlock::random_uniform(40, &mut rng))
                .collect();
            let sat = vec![BitBlock::random_bernoulli(40, 0.1, &mut rng)];
            let cb = SuperpositionCodebook::from_parts(&clouds, &sat, 0.1).unwrap();
            let y = transmit(&cb.codeword_parts(3, 0), &ch, &mut rng);
            assert_eq!(
                marginal_ml_m1_decode(&y, &cb, &ch).unwrap(),
                jml_decode(&y, &cb).unwrap().0
            );
        }
    }

    #[test]
    fn marginal_matches_direct_probability_sum() {
        let mut rng = substream(14, &[]);
        let ch = Bsc::new(0.25).unwrap();
        for _ in 0..100 {
            let cb = SuperpositionCodebook::generate(3, 3, 24, 0.15, &mut rng).unwrap();
            let y = transmit(
                &cb.codeword_parts(rng.gen_range(0..8), rng.gen_range(0..8)),
                &ch,
                &mut rng,
            );
            let mut best = (0, f64::NEG_INFINITY);
            for m1 in 0..8 {
                let p: f64 = (0..8)
                    .map(|m2| {
                        log_likelihood(&y, &cb.codeword_parts(m1, m2), &ch)
                            .unwrap()
                            .exp()
                    })
                    .sum();
                if p > best.1 {
                    best = (m1, p);
                }
            }
            assert_eq!(marginal_ml_m1_decode(&y, &cb, &ch).unwrap(), best.0);
        }
    }

    #[test]
    fn marginal_guard() {
        let cb = gen_spc_codebook(1, 13, 16, 0.1, 0).unwrap();
        let ch = Bsc::new(0.1).unwrap();
        assert!(marginal_ml_m1_decode(&BitBlock::zeros(16), &cb, &ch).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let cb = gen_spc_codebook(2, 3, 37, 0.125, 77).unwrap();
        let mut buf = Vec::new();
        cb.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("2 3 37 0.125 77\n"));
        assert_eq!(text.lines().count(), 1 + 4 + 8);
        let back = SuperpositionCodebook::read_dump(&buf[..]).unwrap();
        assert_eq!(back, cb);
        let rc = gen_random_codebook(2, 9, 5).unwrap();
        let mut buf = Vec::new();
        rc.write_dump(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("2 0 9 0.5 5\n"));
    }
}

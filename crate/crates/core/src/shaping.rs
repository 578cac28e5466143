//! Nonlinear (n_s, k_s) shaping codes built from the lowest-weight
//! n_s-tuples, with exact soft-in soft-out MAP decoding in both directions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::llr::{saturate, LLR_MAX};

/// Largest codeword length accepted without an explicit override.
pub const MAX_NS: usize = 20;
/// Largest message length accepted without an explicit override.
pub const MAX_KS: usize = 10;

const HARD_MAX_NS: usize = 31;
const HARD_MAX_KS: usize = 16;

/// Number of ones in the lowest-weight codebook of `2^k` distinct
/// `n`-tuples. Independent of which tuples of the heaviest weight are used.
pub fn codebook_ones(n: usize, k: usize) -> u64 {
    let mut need = 1u64 << k;
    let mut ones = 0u64;
    let mut w = 0;
    while need > 0 {
        let take = binomial(n as u64, w as u64).min(need);
        ones += take * w as u64;
        need -= take;
        w += 1;
    }
    ones
}

/// Zero probability of a codeword bit of the `(n, k)` lowest-weight code.
pub fn shaping_p0(n: usize, k: usize) -> f64 {
    1.0 - codebook_ones(n, k) as f64 / (n as f64 * (1u64 << k) as f64)
}

/// All `n`-bit words of weight `w` in ascending order.
fn words_of_weight(n: usize, w: usize) -> Vec<u32> {
    if w == 0 {
        return vec![0];
    }
    let limit = 1u64 << n;
    let mut out = Vec::with_capacity(binomial(n as u64, w as u64) as usize);
    let mut v: u64 = (1 << w) - 1;
    while v < limit {
        out.push(v as u32);
        let t = v | (v - 1);
        v = (t + 1) | (((!t & (t + 1)) - 1) >> (v.trailing_zeros() + 1));
    }
    out
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// A shaping codebook. Message `i` (read MSB first as `k_s` bits) maps to
/// `codebook[i]`, whose bit `j` is bit `n_s - 1 - j` of the stored word.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapingCode {
    n_s: usize,
    k_s: usize,
    codebook: Vec<u32>,
    message_of: std::collections::HashMap<u32, usize>,
    column_weights: Vec<usize>,
    p0: f64,
}

/// Builds the `(n_s, k_s)` shaping code within the default complexity bound.
pub fn build_shaping_code(n_s: usize, k_s: usize, seed: u64) -> Result<ShapingCode> {
    ShapingCode::build(n_s, k_s, seed, false)
}

impl ShapingCode {
    /// Builds the code: every tuple lighter than the heaviest weight `w`,
    /// then weight-`w` tuples chosen greedily to keep column weights
    /// balanced, ties broken in a seeded random order.
    pub fn build(n_s: usize, k_s: usize, seed: u64, allow_large: bool) -> Result<Self> {
        if k_s == 0 || k_s >= n_s {
            return Err(Error::ShapingCode(format!(
                "need 0 < k_s < n_s, got ({n_s}, {k_s})"
            )));
        }
        let (max_n, max_k) = if allow_large {
            (HARD_MAX_NS, HARD_MAX_KS)
        } else {
            (MAX_NS, MAX_KS)
        };
        if n_s > max_n || k_s > max_k {
            return Err(Error::ShapingCode(format!(
                "({n_s}, {k_s}) exceeds the bound n_s <= {max_n}, k_s <= {max_k}"
            )));
        }
        let size = 1usize << k_s;
        let mut w = 0usize;
        let mut below = 0usize;
        while below + (binomial(n_s as u64, w as u64) as usize) < size {
            below += binomial(n_s as u64, w as u64) as usize;
            w += 1;
        }
        let by_weight: Vec<Vec<u32>> = (0..=w).map(|wt| words_of_weight(n_s, wt)).collect();
        let mut codebook: Vec<u32> = Vec::with_capacity(size);
        for list in &by_weight[..w] {
            codebook.extend_from_slice(list);
        }
        let mut column_weights = vec![0usize; n_s];
        let add = |word: u32, cw: &mut [usize]| {
            for (j, c) in cw.iter_mut().enumerate() {
                *c += ((word >> (n_s - 1 - j)) & 1) as usize;
            }
        };
        for &word in &codebook {
            add(word, &mut column_weights);
        }
        let need = size - codebook.len();
        let mut candidates = by_weight[w].clone();
        if need == candidates.len() {
            for &word in &candidates {
                add(word, &mut column_weights);
            }
            codebook.extend_from_slice(&candidates);
        } else {
            candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut used = vec![false; candidates.len()];
            for _ in 0..need {
                let mut best: Option<(usize, (usize, usize))> = None;
                for (i, &word) in candidates.iter().enumerate() {
                    if used[i] {
                        continue;
                    }
                    let mut max_w = 0;
                    let mut sum_w = 0;
                    for (j, &c) in column_weights.iter().enumerate() {
                        if (word >> (n_s - 1 - j)) & 1 == 1 {
                            max_w = max_w.max(c);
                            sum_w += c;
                        }
                    }
                    let key = (max_w, sum_w);
                    if best.is_none_or(|(_, k)| key < k) {
                        best = Some((i, key));
                    }
                }
                let (i, _) = best.expect("enough weight-w candidates");
                used[i] = true;
                add(candidates[i], &mut column_weights);
                codebook.push(candidates[i]);
            }
        }
        let message_of = codebook.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let ones: usize = column_weights.iter().sum();
        let p0 = 1.0 - ones as f64 / (n_s * size) as f64;
        Ok(ShapingCode {
            n_s,
            k_s,
            codebook,
            message_of,
            column_weights,
            p0,
        })
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn k_s(&self) -> usize {
        self.k_s
    }

    pub fn rate(&self) -> f64 {
        self.k_s as f64 / self.n_s as f64
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn column_weights(&self) -> &[usize] {
        &self.column_weights
    }

    /// Stored codewords in message order.
    pub fn codewords(&self) -> &[u32] {
        &self.codebook
    }

    #[inline]
    pub fn codeword_bit(&self, message: usize, j: usize) -> u8 {
        ((self.codebook[message] >> (self.n_s - 1 - j)) & 1) as u8
    }

    #[inline]
    pub fn message_bit(&self, message: usize, j: usize) -> u8 {
        ((message >> (self.k_s - 1 - j)) & 1) as u8
    }

    /// Codeword bits of the given message bits.
    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.k_s {
            return Err(Error::Length {
                what: "shaping message",
                expected: self.k_s,
                got: message.len(),
            });
        }
        let idx = message
            .iter()
            .fold(0usize, |a, &b| (a << 1) | (b & 1) as usize);
        Ok((0..self.n_s).map(|j| self.codeword_bit(idx, j)).collect())
    }

    /// Message bits of a codeword, if it belongs to the code.
    pub fn message_of(&self, codeword: &[u8]) -> Option<Vec<u8>> {
        if codeword.len() != self.n_s {
            return None;
        }
        let word = codeword
            .iter()
            .fold(0u32, |a, &b| (a << 1) | (b & 1) as u32);
        let idx = *self.message_of.get(&word)?;
        Some((0..self.k_s).map(|j| self.message_bit(idx, j)).collect())
    }

    /// Encodes a stream of `L·k_s` message bits into `L·n_s` codeword bits.
    pub fn encode_blocks(&self, messages: &[u8]) -> Result<Vec<u8>> {
        if !messages.len().is_multiple_of(self.k_s) {
            return Err(Error::Length {
                what: "shaping message stream",
                expected: messages.len().div_ceil(self.k_s) * self.k_s,
                got: messages.len(),
            });
        }
        let mut out = Vec::with_capacity(messages.len() / self.k_s * self.n_s);
        for block in messages.chunks(self.k_s) {
            out.extend(self.encode(block)?);
        }
        Ok(out)
    }

    /// Extrinsic LLRs on the message bits of one block (`n_s` codeword
    /// priors, `k_s` message priors). Output `k` never depends on `la_d[k]`.
    pub fn decode_message(&self, la_c: &[f64], la_d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k_s];
        self.siso(
            la_c,
            la_d,
            Direction::Message,
            &mut out,
            &mut Scratch::default(),
        );
        out
    }

    /// Extrinsic LLRs on the codeword bits of one block. Output `k` never
    /// depends on `la_c[k]`.
    pub fn decode_codeword(&self, la_c: &[f64], la_d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_s];
        self.siso(
            la_c,
            la_d,
            Direction::Codeword,
            &mut out,
            &mut Scratch::default(),
        );
        out
    }

    /// [`decode_message`](Self::decode_message) over `L` consecutive blocks.
    pub fn decode_message_blocks(&self, la_c: &[f64], la_d: &[f64]) -> Vec<f64> {
        self.blocks(la_c, la_d, Direction::Message)
    }

    /// [`decode_codeword`](Self::decode_codeword) over `L` consecutive blocks.
    pub fn decode_codeword_blocks(&self, la_c: &[f64], la_d: &[f64]) -> Vec<f64> {
        self.blocks(la_c, la_d, Direction::Codeword)
    }

    fn blocks(&self, la_c: &[f64], la_d: &[f64], dir: Direction) -> Vec<f64> {
        let blocks = la_c.len() / self.n_s;
        assert_eq!(blocks * self.n_s, la_c.len(), "codeword LLR stream length");
        assert_eq!(blocks * self.k_s, la_d.len(), "message LLR stream length");
        let width = match dir {
            Direction::Message => self.k_s,
            Direction::Codeword => self.n_s,
        };
        let mut out = vec![0.0; blocks * width];
        let mut scratch = Scratch::default();
        for (b, chunk) in out.chunks_mut(width).enumerate() {
            self.siso(
                &la_c[b * self.n_s..(b + 1) * self.n_s],
                &la_d[b * self.k_s..(b + 1) * self.k_s],
                dir,
                chunk,
                &mut scratch,
            );
        }
        out
    }

    fn siso(&self, la_c: &[f64], la_d: &[f64], dir: Direction, out: &mut [f64], s: &mut Scratch) {
        assert_eq!(la_c.len(), self.n_s);
        assert_eq!(la_d.len(), self.k_s);
        let size = self.codebook.len();
        // `fixed` holds the metric of the bits not being marginalized; the
        // marginalized side keeps per-bit half-LLR weights for exclusion.
        let (fix_len, var_len) = match dir {
            Direction::Message => (self.n_s, self.k_s),
            Direction::Codeword => (self.k_s, self.n_s),
        };
        let (fix_llr, var_llr) = match dir {
            Direction::Message => (la_c, la_d),
            Direction::Codeword => (la_d, la_c),
        };
        let fix_half: Vec<f64> = fix_llr.iter().map(|&l| 0.5 * saturate(l)).collect();
        let var_half: Vec<f64> = var_llr.iter().map(|&l| 0.5 * saturate(l)).collect();
        let bit = |i: usize, j: usize, fixed_side: bool| -> u8 {
            match (dir, fixed_side) {
                (Direction::Message, true) | (Direction::Codeword, false) => {
                    self.codeword_bit(i, j)
                }
                _ => self.message_bit(i, j),
            }
        };
        s.fixed.clear();
        s.terms.clear();
        s.terms.resize(size * var_len, 0.0);
        for i in 0..size {
            let f: f64 = (0..fix_len)
                .map(|j| {
                    if bit(i, j, true) == 0 {
                        fix_half[j]
                    } else {
                        -fix_half[j]
                    }
                })
                .sum();
            s.fixed.push(f);
            let row = &mut s.terms[i * var_len..(i + 1) * var_len];
            for (j, t) in row.iter_mut().enumerate() {
                *t = if bit(i, j, false) == 0 {
                    var_half[j]
                } else {
                    -var_half[j]
                };
            }
        }
        s.metric.resize(size, 0.0);
        s.bits.resize(size, 0);
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..size {
                let row = &s.terms[i * var_len..(i + 1) * var_len];
                let excl: f64 = row[..k].iter().sum::<f64>() + row[k + 1..].iter().sum::<f64>();
                s.metric[i] = s.fixed[i] + excl;
                s.bits[i] = bit(i, k, false);
            }
            let num = lse_where(&s.metric, &s.bits, 0);
            let den = lse_where(&s.metric, &s.bits, 1);
            *o = (num - den).clamp(-LLR_MAX, LLR_MAX);
        }
    }

    /// Text export: a header line with the parameters and one codeword per
    /// line in message order.
    pub fn to_text(&self) -> String {
        let mut out = format!("# n_s={} k_s={} p0={}\n", self.n_s, self.k_s, self.p0);
        for &c in &self.codebook {
            out.push_str(&format!("{:0width$b}\n", c, width = self.n_s));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Direction {
    Message,
    Codeword,
}

#[derive(Default)]
struct Scratch {
    fixed: Vec<f64>,
    terms: Vec<f64>,
    metric: Vec<f64>,
    bits: Vec<u8>,
}

fn lse_where(metric: &[f64], bits: &[u8], want: u8) -> f64 {
    let max = metric
        .iter()
        .zip(bits)
        .filter(|(_, &b)| b == want)
        .map(|(&m, _)| m)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = metric
        .iter()
        .zip(bits)
        .filter(|(_, &b)| b == want)
        .map(|(&m, _)| (m - max).exp())
        .sum();
    max + sum.ln()
}

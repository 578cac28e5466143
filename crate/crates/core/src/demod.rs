//! Symbol-by-symbol MAP demapper with a priori feedback.

use num_complex::Complex64;

use crate::constellation::{label_bit, Constellation, ShapingStrategy};
use crate::llr::{saturate, LLR_MAX};

/// Exact log-MAP or the max-log approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DemapMode {
    #[default]
    Exact,
    MaxLog,
}

/// One received sample with its noise density and the a priori LLRs of the
/// symbol's label bits.
#[derive(Debug, Clone, Copy)]
pub struct DemapInput<'a> {
    pub y: Complex64,
    pub n0: f64,
    pub la: &'a [f64],
}

/// Extrinsic LLRs of the `m` label bits of one received sample.
pub fn demap_symbol(c: &Constellation, input: &DemapInput, mode: DemapMode) -> Vec<f64> {
    let d = Demapper::new(c, mode);
    let mut out = vec![0.0; c.bits_per_symbol()];
    d.demap_into(input.y, input.n0, input.la, &mut out);
    out
}

/// A priori LLRs for the first pass: `ln(p0 / (1 - p0))` on shaping bit
/// positions, zero elsewhere.
pub fn initial_priors(c: &Constellation, strategy: &ShapingStrategy) -> Vec<f64> {
    let mut la = vec![0.0; c.bits_per_symbol()];
    if strategy.g > 0 {
        let prior = (strategy.p0 / (1.0 - strategy.p0)).ln();
        for &p in &strategy.bit_positions {
            la[p] = prior;
        }
    }
    la
}

/// Demapper bound to one constellation; reusable across samples.
#[derive(Debug, Clone)]
pub struct Demapper {
    points: Vec<Complex64>,
    m: usize,
    bits: Vec<u8>,
    mode: DemapMode,
}

impl Demapper {
    pub fn new(c: &Constellation, mode: DemapMode) -> Self {
        let m = c.bits_per_symbol();
        let order = c.order();
        let mut bits = Vec::with_capacity(order * m);
        for l in 0..order {
            for p in 0..m {
                bits.push(label_bit(l, p, m));
            }
        }
        Demapper {
            points: c.points().to_vec(),
            m,
            bits,
            mode,
        }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.m
    }

    pub fn mode(&self) -> DemapMode {
        self.mode
    }

    /// Demaps a block of samples; `la` and `out` hold `m` LLRs per sample.
    pub fn demap_block(&self, ys: &[Complex64], n0: f64, la: &[f64], out: &mut [f64]) {
        let m = self.m;
        assert_eq!(la.len(), ys.len() * m);
        assert_eq!(out.len(), ys.len() * m);
        for (i, &y) in ys.iter().enumerate() {
            self.demap_into(y, n0, &la[i * m..(i + 1) * m], &mut out[i * m..(i + 1) * m]);
        }
    }

    /// Extrinsic LLRs for one sample. `out[k]` never depends on `la[k]`.
    pub fn demap_into(&self, y: Complex64, n0: f64, la: &[f64], out: &mut [f64]) {
        let m = self.m;
        debug_assert_eq!(la.len(), m);
        let mut half = [0.0f64; 16];
        for (h, &l) in half.iter_mut().zip(la) {
            *h = 0.5 * saturate(l);
        }
        let order = self.points.len();
        let mut metric = [0.0f64; 64];
        let metric = if order <= 64 {
            &mut metric[..order]
        } else {
            return self.demap_log_domain(y, n0, &half[..m], out, &mut vec![0.0; order]);
        };
        let mut dmax = f64::NEG_INFINITY;
        for (d, x) in metric.iter_mut().zip(&self.points) {
            *d = -(y - x).norm_sqr() / n0;
            dmax = dmax.max(*d);
        }
        if self.mode == DemapMode::MaxLog || m > 16 {
            return self.demap_log_domain_with(metric, &half[..m], out);
        }
        // Linear domain: channel weights relative to the best point times
        // per-bit prior factors, with bit k's factor left out.
        let mut e = [[0.0f64; 2]; 16];
        for (ek, &h) in e.iter_mut().zip(&half[..m]) {
            *ek = [h.exp(), (-h).exp()];
        }
        let mut num = [0.0f64; 16];
        let mut den = [0.0f64; 16];
        let mut prefix = [0.0f64; 17];
        for (x, &d) in metric.iter().enumerate() {
            let w = (d - dmax).exp();
            if w == 0.0 {
                continue;
            }
            let b = &self.bits[x * m..(x + 1) * m];
            prefix[0] = w;
            for n in 0..m {
                prefix[n + 1] = prefix[n] * e[n][b[n] as usize];
            }
            let mut suffix = 1.0;
            for k in (0..m).rev() {
                let t = prefix[k] * suffix;
                if b[k] == 0 {
                    num[k] += t;
                } else {
                    den[k] += t;
                }
                suffix *= e[k][b[k] as usize];
            }
        }
        let mut fallback = false;
        for k in 0..m {
            let (a, b) = (num[k], den[k]);
            if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
                out[k] = (a.ln() - b.ln()).clamp(-LLR_MAX, LLR_MAX);
            } else {
                fallback = true;
            }
        }
        if fallback {
            self.demap_log_domain_with(metric, &half[..m], out);
        }
    }

    fn demap_log_domain(
        &self,
        y: Complex64,
        n0: f64,
        half: &[f64],
        out: &mut [f64],
        metric: &mut [f64],
    ) {
        for (d, x) in metric.iter_mut().zip(&self.points) {
            *d = -(y - x).norm_sqr() / n0;
        }
        self.demap_log_domain_with(metric, half, out)
    }

    fn demap_log_domain_with(&self, metric: &[f64], half: &[f64], out: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            let mut best = [f64::NEG_INFINITY; 2];
            for (x, &d) in metric.iter().enumerate() {
                let b = &self.bits[x * m..(x + 1) * m];
                let mut t = d;
                for n in (0..m).filter(|&n| n != k) {
                    t += if b[n] == 0 { half[n] } else { -half[n] };
                }
                let s = b[k] as usize;
                best[s] = best[s].max(t);
            }
            let mut acc = [0.0f64; 2];
            if self.mode == DemapMode::Exact {
                for (x, &d) in metric.iter().enumerate() {
                    let b = &self.bits[x * m..(x + 1) * m];
                    let mut t = d;
                    for n in (0..m).filter(|&n| n != k) {
                        t += if b[n] == 0 { half[n] } else { -half[n] };
                    }
                    let s = b[k] as usize;
                    acc[s] += (t - best[s]).exp();
                }
            } else {
                acc = [1.0, 1.0];
            }
            let l = (best[0] + acc[0].ln()) - (best[1] + acc[1].ln());
            out[k] = if l.is_nan() {
                0.0
            } else {
                l.clamp(-LLR_MAX, LLR_MAX)
            };
        }
    }
}

//! Transmit chain and iterative receiver: LDPC encoding, bit interleaving,
//! shaping encoding, APSK mapping, and the BICM-ID loop that iterates
//! between demapper, shaping decoder and LDPC decoder.

mod campaign;
mod receiver;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constellation::Constellation;
use crate::demod::{DemapMode, Demapper};
use crate::error::{Error, Result};
use crate::ldpc::{LdpcCode, Structure, Tanner};
use crate::shaping::ShapingCode;

pub use campaign::{ber_campaign, ber_crossing, CampaignPoint, Crossing, StopRule};
pub use receiver::{receive, receive_traced, FrameResult};

/// Overall rate in bits per symbol, `R_c (m + g (R_s - 1))`.
pub fn overall_rate(rc: f64, rs: f64, m: usize, g: usize) -> f64 {
    assert!(rc > 0.0 && rc <= 1.0 && rs > 0.0 && rs <= 1.0 && g < m);
    rc * (m as f64 + g as f64 * (rs - 1.0))
}

/// Block lengths of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLengths {
    /// LDPC codeword and message lengths.
    pub n_c: usize,
    pub k_c: usize,
    /// Bits per symbol and shaping bits per symbol.
    pub m: usize,
    pub g: usize,
    /// Shaping blocks per frame and the shaping message/codeword totals.
    pub l: usize,
    pub k_s: usize,
    pub n_s: usize,
    /// Symbols per frame.
    pub n: usize,
}

impl FrameLengths {
    /// Derives the frame layout. With shaping, the number of shaping blocks
    /// `L` solves `N_s / (N_c - K_s) = g / (m - g)` and must be an integer.
    pub fn new(
        n_c: usize,
        k_c: usize,
        m: usize,
        g: usize,
        code: Option<(usize, usize)>,
    ) -> Result<Self> {
        if g >= m || k_c == 0 || k_c >= n_c {
            return Err(Error::Config(format!(
                "invalid lengths: N_c = {n_c}, K_c = {k_c}, m = {m}, g = {g}"
            )));
        }
        let (l, k_s, n_s) = match (g, code) {
            (0, None) => (0, 0, 0),
            (0, Some(_)) => return Err(Error::Config("shaping code given with g = 0".into())),
            (_, None) => return Err(Error::Config(format!("g = {g} needs a shaping code"))),
            (_, Some((ns, ks))) => {
                let denom = ns * (m - g) + g * ks;
                if !(g * n_c).is_multiple_of(denom) {
                    return Err(Error::Config(format!(
                        "N_c = {n_c} does not split into whole ({ns},{ks}) blocks: \
                         g N_c must be a multiple of {denom}"
                    )));
                }
                let l = g * n_c / denom;
                (l, l * ks, l * ns)
            }
        };
        let n = if g == 0 {
            if !n_c.is_multiple_of(m) {
                return Err(Error::Config(format!(
                    "N_c = {n_c} is not a multiple of m = {m}"
                )));
            }
            n_c / m
        } else {
            if n_s % g != 0 {
                return Err(Error::Config(format!(
                    "N_s = {n_s} is not a multiple of g = {g}"
                )));
            }
            n_s / g
        };
        if n_c - k_s + n_s != n * m {
            return Err(Error::Config("frame does not fill whole symbols".into()));
        }
        Ok(FrameLengths {
            n_c,
            k_c,
            m,
            g,
            l,
            k_s,
            n_s,
            n,
        })
    }

    /// Information bits per symbol, `K_c / N`.
    pub fn rate(&self) -> f64 {
        self.k_c as f64 / self.n as f64
    }

    /// Smallest LDPC length at or above `target` that yields whole shaping
    /// blocks and whole symbols.
    pub fn fit_codeword_length(
        target: usize,
        m: usize,
        g: usize,
        code: Option<(usize, usize)>,
    ) -> usize {
        (target..target + 64 * m * 64)
            .find(|&n_c| FrameLengths::new(n_c, 1, m, g, code).is_ok())
            .expect("a valid length within the search window")
    }
}

/// A seeded uniform random permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<u32>,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<u32> = (0..len as u32).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Interleaver { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// `out[i] = input[perm[i]]`.
    pub fn interleave<T: Copy>(&self, input: &[T], out: &mut [T]) {
        assert_eq!(input.len(), self.perm.len());
        for (o, &p) in out.iter_mut().zip(&self.perm) {
            *o = input[p as usize];
        }
    }

    /// Inverse of [`interleave`](Self::interleave).
    pub fn deinterleave<T: Copy>(&self, input: &[T], out: &mut [T]) {
        assert_eq!(input.len(), self.perm.len());
        for (&x, &p) in input.iter().zip(&self.perm) {
            out[p as usize] = x;
        }
    }
}

/// Receiver schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    /// Iteration limit. With feedback this counts global iterations,
    /// without feedback LDPC iterations.
    pub max_iters: usize,
    /// LDPC sweeps per global iteration.
    pub ldpc_per_global: usize,
    /// Feed decoder extrinsics back to the demapper (BICM-ID). When off the
    /// demapper and shaping decoder run once (BICM).
    pub feedback: bool,
    /// Add the static shaping prior `ln(p0/p1)` to the fed-back shaping-bit
    /// LLRs after the first iteration.
    pub static_prior: bool,
    pub demap_mode: DemapMode,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            max_iters: 100,
            ldpc_per_global: 1,
            feedback: true,
            static_prior: false,
            demap_mode: DemapMode::Exact,
        }
    }
}

/// Everything needed to transmit and receive frames.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    constellation: Constellation,
    shaping: Option<ShapingCode>,
    ldpc: LdpcCode,
    tanner: Tanner,
    demapper: Demapper,
    pi1: Interleaver,
    pi2: Interleaver,
    lengths: FrameLengths,
    unshaped_positions: Vec<usize>,
    schedule: Schedule,
    interleaver_seed: u64,
}

impl SystemConfig {
    /// Checks cross-module consistency (shaping bits vs code, p0 vs code
    /// bias, length divisibility, encodability) and precomputes the
    /// interleavers from `interleaver_seed`.
    pub fn new(
        constellation: Constellation,
        shaping: Option<ShapingCode>,
        ldpc: LdpcCode,
        schedule: Schedule,
        interleaver_seed: u64,
    ) -> Result<Self> {
        let strategy = constellation.strategy().clone();
        let m = constellation.bits_per_symbol();
        if let Some(code) = &shaping {
            if (code.p0() - strategy.p0).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "constellation shaped for p0 = {} but the ({}, {}) code has p0 = {}",
                    strategy.p0,
                    code.n_s(),
                    code.k_s(),
                    code.p0()
                )));
            }
        }
        if ldpc.structure() != Structure::Eira {
            return Err(Error::Config(
                "the LDPC code has no systematic encoder (eIRA structure required)".into(),
            ));
        }
        if schedule.max_iters == 0 || schedule.ldpc_per_global == 0 {
            return Err(Error::Config("iteration limits must be positive".into()));
        }
        let lengths = FrameLengths::new(
            ldpc.n(),
            ldpc.k(),
            m,
            strategy.g,
            shaping.as_ref().map(|c| (c.n_s(), c.k_s())),
        )?;
        let unshaped_positions = (0..m)
            .filter(|p| !strategy.bit_positions.contains(p))
            .collect();
        Ok(SystemConfig {
            demapper: Demapper::new(&constellation, schedule.demap_mode),
            tanner: Tanner::new(&ldpc),
            pi1: Interleaver::new(lengths.n_c, interleaver_seed),
            pi2: Interleaver::new(lengths.n_s, interleaver_seed ^ 0x9e37_79b9_7f4a_7c15),
            constellation,
            shaping,
            ldpc,
            lengths,
            unshaped_positions,
            schedule,
            interleaver_seed,
        })
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn shaping(&self) -> Option<&ShapingCode> {
        self.shaping.as_ref()
    }

    pub fn ldpc(&self) -> &LdpcCode {
        &self.ldpc
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// Replaces the receiver schedule.
    pub fn set_schedule(&mut self, schedule: Schedule) -> Result<()> {
        if schedule.max_iters == 0 || schedule.ldpc_per_global == 0 {
            return Err(Error::Config("iteration limits must be positive".into()));
        }
        self.demapper = Demapper::new(&self.constellation, schedule.demap_mode);
        self.schedule = schedule;
        Ok(())
    }

    pub fn interleaver_seed(&self) -> u64 {
        self.interleaver_seed
    }

    pub fn lengths(&self) -> &FrameLengths {
        &self.lengths
    }

    /// Information bits per symbol.
    pub fn rate(&self) -> f64 {
        self.lengths.rate()
    }

    pub(crate) fn tanner(&self) -> &Tanner {
        &self.tanner
    }

    pub(crate) fn demapper(&self) -> &Demapper {
        &self.demapper
    }

    /// Codeword interleaver.
    pub fn pi1(&self) -> &Interleaver {
        &self.pi1
    }

    /// Shaping-codeword interleaver.
    pub fn pi2(&self) -> &Interleaver {
        &self.pi2
    }

    /// Scatters per-symbol shaped and unshaped streams into label order.
    pub(crate) fn combine<T: Copy>(&self, s1: &[T], s2: &[T], z: &mut [T]) {
        let FrameLengths { m, g, n, .. } = self.lengths;
        let positions = &self.constellation.strategy().bit_positions;
        for t in 0..n {
            let sym = &mut z[t * m..(t + 1) * m];
            for (i, &p) in positions.iter().enumerate() {
                sym[p] = s1[t * g + i];
            }
            for (i, &p) in self.unshaped_positions.iter().enumerate() {
                sym[p] = s2[t * (m - g) + i];
            }
        }
    }

    /// Inverse of [`combine`](Self::combine).
    pub(crate) fn separate<T: Copy>(&self, z: &[T], s1: &mut [T], s2: &mut [T]) {
        let FrameLengths { m, g, n, .. } = self.lengths;
        let positions = &self.constellation.strategy().bit_positions;
        for t in 0..n {
            let sym = &z[t * m..(t + 1) * m];
            for (i, &p) in positions.iter().enumerate() {
                s1[t * g + i] = sym[p];
            }
            for (i, &p) in self.unshaped_positions.iter().enumerate() {
                s2[t * (m - g) + i] = sym[p];
            }
        }
    }
}

/// All intermediate streams of one transmitted frame.
#[derive(Debug, Clone)]
pub struct TxFrame {
    pub info: Vec<u8>,
    /// LDPC codeword `u`.
    pub codeword: Vec<u8>,
    /// Interleaved codeword `v`, split into shaping message `d` and `s2`.
    pub v: Vec<u8>,
    /// Shaping codewords `c` and their interleaved form `s1`.
    pub c: Vec<u8>,
    pub s1: Vec<u8>,
    pub labels: Vec<usize>,
    pub symbols: Vec<Complex64>,
}

/// Maps `K_c` information bits to `N` symbols.
pub fn transmit(cfg: &SystemConfig, info: &[u8]) -> Result<TxFrame> {
    let len = cfg.lengths;
    if info.len() != len.k_c {
        return Err(Error::Length {
            what: "information bits",
            expected: len.k_c,
            got: info.len(),
        });
    }
    let codeword = cfg.ldpc.encode(info)?;
    let mut v = vec![0u8; len.n_c];
    cfg.pi1.interleave(&codeword, &mut v);
    let (d, s2) = v.split_at(len.k_s);
    let c = match &cfg.shaping {
        Some(code) => code.encode_blocks(d)?,
        None => Vec::new(),
    };
    let mut s1 = vec![0u8; len.n_s];
    cfg.pi2.interleave(&c, &mut s1);
    let mut z = vec![0u8; len.n * len.m];
    cfg.combine(&s1, s2, &mut z);
    let labels: Vec<usize> = z
        .chunks(len.m)
        .map(|b| b.iter().fold(0usize, |a, &x| (a << 1) | x as usize))
        .collect();
    let symbols = labels.iter().map(|&l| cfg.constellation.point(l)).collect();
    Ok(TxFrame {
        info: info.to_vec(),
        codeword,
        v,
        c,
        s1,
        labels,
        symbols,
    })
}

/// Transmits uniformly random information bits drawn from `rng`.
pub fn transmit_random<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> TxFrame {
    let info: Vec<u8> = (0..cfg.lengths.k_c)
        .map(|_| rng.random_range(0..2u8))
        .collect();
    transmit(cfg, &info).expect("lengths match the configuration")
}

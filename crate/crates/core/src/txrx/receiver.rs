use num_complex::Complex64;

use super::SystemConfig;
use crate::demod::initial_priors;
use crate::ldpc::{decode_iteration, DecoderState};
use crate::llr::{hard, mutual_information};

/// Outcome of decoding one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    /// Hard decisions on the `K_c` systematic bits.
    pub decoded: Vec<u8>,
    /// Iterations run: global iterations with feedback, LDPC iterations
    /// without.
    pub iterations: usize,
    /// Whether the syndrome check passed.
    pub converged: bool,
    /// Errors against the transmitted bits, when known.
    pub bit_errors: usize,
    /// Mutual information between the LDPC extrinsic output and the
    /// transmitted codeword after each iteration, when traced.
    pub mi_trace: Vec<f64>,
}

/// Decodes one frame of received samples at noise density `n0`.
pub fn receive(cfg: &SystemConfig, y: &[Complex64], n0: f64) -> FrameResult {
    run(cfg, y, n0, None, None)
}

/// As [`receive`], counting errors against `info` and recording the
/// extrinsic mutual information against `codeword` per iteration.
pub fn receive_traced(
    cfg: &SystemConfig,
    y: &[Complex64],
    n0: f64,
    info: &[u8],
    codeword: Option<&[u8]>,
) -> FrameResult {
    run(cfg, y, n0, Some(info), codeword)
}

fn run(
    cfg: &SystemConfig,
    y: &[Complex64],
    n0: f64,
    info: Option<&[u8]>,
    codeword: Option<&[u8]>,
) -> FrameResult {
    let len = *cfg.lengths();
    let sched = *cfg.schedule();
    assert_eq!(y.len(), len.n, "received frame length");
    let prior = initial_priors(cfg.constellation(), &cfg.constellation().strategy().clone());
    let shaped_prior = cfg
        .constellation()
        .strategy()
        .bit_positions
        .first()
        .map_or(0.0, |&p| prior[p]);

    let mut la_s1 = vec![shaped_prior; len.n_s];
    let mut la_s2 = vec![0.0; len.n_c - len.k_s];
    let mut la_d = vec![0.0; len.k_s];
    let mut la_z = vec![0.0; len.n * len.m];
    let mut le_z = vec![0.0; len.n * len.m];
    let mut le_s1 = vec![0.0; len.n_s];
    let mut le_s2 = vec![0.0; len.n_c - len.k_s];
    let mut la_c = vec![0.0; len.n_s];
    let mut le_v = vec![0.0; len.n_c];
    let mut la_u = vec![0.0; len.n_c];
    let mut le_u = vec![0.0; len.n_c];
    let mut la_v = vec![0.0; len.n_c];
    let mut state = DecoderState::new(cfg.tanner());
    let mut mi_trace = Vec::new();

    // Demapper and shaping decoder: channel samples and priors on z to
    // extrinsic LLRs on the LDPC codeword.
    let mut detect =
        |la_s1: &[f64], la_s2: &[f64], la_d: &[f64], la_c: &mut [f64], la_u: &mut [f64]| {
            cfg.combine(la_s1, la_s2, &mut la_z);
            cfg.demapper().demap_block(y, n0, &la_z, &mut le_z);
            cfg.separate(&le_z, &mut le_s1, &mut le_s2);
            let le_d = match cfg.shaping() {
                Some(code) => {
                    cfg.pi2().deinterleave(&le_s1, la_c);
                    code.decode_message_blocks(la_c, la_d)
                }
                None => Vec::new(),
            };
            le_v[..len.k_s].copy_from_slice(&le_d);
            le_v[len.k_s..].copy_from_slice(&le_s2);
            cfg.pi1().deinterleave(&le_v, la_u);
        };

    let mut iterations = sched.max_iters;
    let mut converged = false;
    if sched.feedback {
        for it in 1..=sched.max_iters {
            detect(&la_s1, &la_s2, &la_d, &mut la_c, &mut la_u);
            let mut ok = false;
            for _ in 0..sched.ldpc_per_global {
                ok = decode_iteration(cfg.tanner(), &la_u, &mut state, &mut le_u);
                if ok {
                    break;
                }
            }
            if let Some(cw) = codeword {
                mi_trace.push(mutual_information(&le_u, cw));
            }
            if ok {
                iterations = it;
                converged = true;
                break;
            }
            cfg.pi1().interleave(&le_u, &mut la_v);
            la_d.copy_from_slice(&la_v[..len.k_s]);
            la_s2.copy_from_slice(&la_v[len.k_s..]);
            if let Some(code) = cfg.shaping() {
                let le_c = code.decode_codeword_blocks(&la_c, &la_d);
                cfg.pi2().interleave(&le_c, &mut la_s1);
                if sched.static_prior {
                    la_s1.iter_mut().for_each(|l| *l += shaped_prior);
                }
            }
        }
    } else {
        detect(&la_s1, &la_s2, &la_d, &mut la_c, &mut la_u);
        for it in 1..=sched.max_iters {
            let ok = decode_iteration(cfg.tanner(), &la_u, &mut state, &mut le_u);
            if let Some(cw) = codeword {
                mi_trace.push(mutual_information(&le_u, cw));
            }
            if ok {
                iterations = it;
                converged = true;
                break;
            }
        }
    }
    let decoded: Vec<u8> = (0..len.k_c).map(|j| hard(la_u[j] + le_u[j])).collect();
    let bit_errors = info.map_or(0, |b| {
        b.iter().zip(&decoded).filter(|(a, b)| a != b).count()
    });
    FrameResult {
        decoded,
        iterations,
        converged,
        bit_errors,
        mi_trace,
    }
}

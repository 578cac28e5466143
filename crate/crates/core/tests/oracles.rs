//! Brute-force oracles and extrinsic-exclusion properties for the three
//! soft-in soft-out blocks of the receiver.

use proptest::prelude::*;
use shapsk::constellation::{label_bit, permitted_gammas};
use shapsk::ldpc::{decode_iteration, DecoderState, Tanner};
use shapsk::llr::saturate;
use shapsk::*;

const TOL: f64 = 1e-9;

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn llr_of(zero: &[f64], one: &[f64]) -> f64 {
    saturate(log_sum_exp(zero) - log_sum_exp(one))
}

/// Extrinsic LLRs by enumerating every label.
fn brute_demap(c: &Constellation, y: Complex64, n0: f64, la: &[f64]) -> Vec<f64> {
    let m = c.bits_per_symbol();
    (0..m)
        .map(|k| {
            let (mut zero, mut one) = (Vec::new(), Vec::new());
            for (x, p) in c.points().iter().enumerate() {
                let mut metric = -(y - p).norm_sqr() / n0;
                for (j, &l) in la.iter().enumerate() {
                    if j != k {
                        let l = saturate(l);
                        metric += if label_bit(x, j, m) == 0 {
                            0.5 * l
                        } else {
                            -0.5 * l
                        };
                    }
                }
                if label_bit(x, k, m) == 0 {
                    zero.push(metric);
                } else {
                    one.push(metric);
                }
            }
            llr_of(&zero, &one)
        })
        .collect()
}

fn bits_of(v: usize, width: usize) -> Vec<u8> {
    (0..width)
        .map(|j| ((v >> (width - 1 - j)) & 1) as u8)
        .collect()
}

fn half_metric(bits: &[u8], llrs: &[f64], skip: Option<usize>) -> f64 {
    bits.iter()
        .zip(llrs)
        .enumerate()
        .filter(|(j, _)| Some(*j) != skip)
        .map(|(_, (&b, &l))| if b == 0 { 0.5 * l } else { -0.5 * l })
        .sum()
}

/// Message and codeword extrinsics by enumerating the codebook through the
/// public encoder.
fn brute_shaping(code: &ShapingCode, la_c: &[f64], la_d: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (n, k) = (code.n_s(), code.k_s());
    let book: Vec<(Vec<u8>, Vec<u8>)> = (0..1usize << k)
        .map(|v| {
            let d = bits_of(v, k);
            let c = code.encode(&d).unwrap();
            (d, c)
        })
        .collect();
    let marginal = |pos: usize, message_side: bool| {
        let (mut zero, mut one) = (Vec::new(), Vec::new());
        for (d, c) in &book {
            let (bit, metric) = if message_side {
                (
                    d[pos],
                    half_metric(c, la_c, None) + half_metric(d, la_d, Some(pos)),
                )
            } else {
                (
                    c[pos],
                    half_metric(c, la_c, Some(pos)) + half_metric(d, la_d, None),
                )
            };
            if bit == 0 {
                zero.push(metric);
            } else {
                one.push(metric);
            }
        }
        llr_of(&zero, &one)
    };
    (
        (0..k).map(|j| marginal(j, true)).collect(),
        (0..n).map(|j| marginal(j, false)).collect(),
    )
}

fn apsk(order: usize, gamma_idx: usize) -> Constellation {
    let gammas = permitted_gammas(order);
    let gamma = &gammas[gamma_idx % gammas.len()];
    build_apsk(order, gamma, &LabelMap::bundled(order, 0).unwrap(), false).unwrap()
}

fn small_code() -> LdpcCode {
    let d =
        DegreeDistribution::new(vec![2, 3, 6], vec![1.0 / 3.0, 5.0 / 9.0, 1.0 / 9.0], 9).unwrap();
    build_eira(60, 40, &d, 7).unwrap()
}

/// Textbook flooding sum-product with explicit edge lists.
struct Reference {
    rows: Vec<Vec<usize>>,
    c2v: Vec<Vec<f64>>,
}

impl Reference {
    fn new(code: &LdpcCode) -> Self {
        let rows: Vec<Vec<usize>> = code
            .rows()
            .iter()
            .map(|r| r.iter().map(|&c| c as usize).collect())
            .collect();
        let c2v = rows.iter().map(|r| vec![0.0; r.len()]).collect();
        Reference { rows, c2v }
    }

    fn sweep(&mut self, la: &[f64]) -> Vec<f64> {
        let mut total = la.to_vec();
        for (row, msgs) in self.rows.iter().zip(&self.c2v) {
            for (&c, &m) in row.iter().zip(msgs) {
                total[c] += m;
            }
        }
        let mut le = vec![0.0; la.len()];
        for (row, msgs) in self.rows.iter().zip(self.c2v.iter_mut()) {
            let v2c: Vec<f64> = row
                .iter()
                .zip(msgs.iter())
                .map(|(&c, &m)| total[c] - m)
                .collect();
            for (e, &c) in row.iter().enumerate() {
                let p: f64 = v2c
                    .iter()
                    .enumerate()
                    .filter(|(f, _)| *f != e)
                    .map(|(_, &x)| (0.5 * x).tanh())
                    .product();
                msgs[e] = 2.0 * p.atanh();
                le[c] += msgs[e];
            }
        }
        le
    }
}

fn llr_vec(len: usize, bound: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-bound..bound, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn demapper_matches_enumeration(
        order in prop::sample::select(vec![16usize, 32]),
        gamma_idx in 0usize..6,
        label in 0usize..32,
        noise in (-1.0f64..1.0, -1.0f64..1.0),
        n0 in 0.02f64..2.0,
        la in llr_vec(5, 12.0),
        max_log_check in any::<bool>(),
    ) {
        let c = apsk(order, gamma_idx);
        let m = c.bits_per_symbol();
        let y = c.point(label % order) + Complex64::new(noise.0, noise.1) * n0.sqrt();
        let la = &la[..m];
        let got = demap_symbol(&c, &DemapInput { y, n0, la }, DemapMode::Exact);
        let want = brute_demap(&c, y, n0, la);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= TOL, "got {g} want {w}");
        }
        if max_log_check {
            let approx = demap_symbol(&c, &DemapInput { y, n0, la }, DemapMode::MaxLog);
            for (a, w) in approx.iter().zip(&want) {
                prop_assert!(a.is_finite() && (a - w).abs() <= 1.0 + 0.05 * w.abs());
            }
        }
    }

    #[test]
    fn demapper_output_excludes_own_prior(
        label in 0usize..32,
        noise in (-1.0f64..1.0, -1.0f64..1.0),
        la in llr_vec(5, 10.0),
        k in 0usize..5,
        delta in -20.0f64..20.0,
    ) {
        let c = apsk(32, 2);
        let y = c.point(label) + Complex64::new(noise.0, noise.1) * 0.3;
        let base = demap_symbol(&c, &DemapInput { y, n0: 0.2, la: &la }, DemapMode::Exact);
        let mut moved = la.clone();
        moved[k] += delta;
        let out = demap_symbol(&c, &DemapInput { y, n0: 0.2, la: &moved }, DemapMode::Exact);
        prop_assert!((base[k] - out[k]).abs() <= TOL);
    }

    #[test]
    fn shaping_decoder_matches_enumeration(
        nk in prop::sample::select(vec![(4usize, 2usize), (3, 2), (5, 3), (6, 4), (9, 7), (7, 3)]),
        seed in 0u64..4,
        la_c in llr_vec(9, 15.0),
        la_d in llr_vec(7, 15.0),
    ) {
        let code = build_shaping_code(nk.0, nk.1, seed).unwrap();
        let la_c = &la_c[..nk.0];
        let la_d = &la_d[..nk.1];
        let (want_d, want_c) = brute_shaping(&code, la_c, la_d);
        let got_d = code.decode_message(la_c, la_d);
        let got_c = code.decode_codeword(la_c, la_d);
        for (g, w) in got_d.iter().zip(&want_d).chain(got_c.iter().zip(&want_c)) {
            prop_assert!((g - w).abs() <= TOL, "got {g} want {w}");
        }
    }

    #[test]
    fn shaping_outputs_exclude_own_priors(
        la_c in llr_vec(4, 10.0),
        la_d in llr_vec(2, 10.0),
        j in 0usize..4,
        delta in -20.0f64..20.0,
    ) {
        let code = build_shaping_code(4, 2, 0).unwrap();
        let mut c2 = la_c.clone();
        c2[j] += delta;
        prop_assert!((code.decode_codeword(&la_c, &la_d)[j] - code.decode_codeword(&c2, &la_d)[j]).abs() <= TOL);
        let mut d2 = la_d.clone();
        d2[j % 2] += delta;
        prop_assert!(
            (code.decode_message(&la_c, &la_d)[j % 2] - code.decode_message(&la_c, &d2)[j % 2]).abs() <= TOL
        );
    }

    #[test]
    fn ldpc_sweeps_match_reference(la in llr_vec(60, 3.0)) {
        let code = small_code();
        let tanner = Tanner::new(&code);
        let mut state = DecoderState::new(&tanner);
        let mut reference = Reference::new(&code);
        let mut le = vec![0.0; 60];
        for _ in 0..5 {
            decode_iteration(&tanner, &la, &mut state, &mut le);
            let want = reference.sweep(&la);
            for (g, w) in le.iter().zip(&want) {
                prop_assert!((g - w).abs() <= 1e-7 * w.abs().max(1.0), "got {g} want {w}");
            }
        }
    }

    #[test]
    fn ldpc_extrinsic_excludes_own_input(
        la in llr_vec(60, 4.0),
        j in 0usize..60,
        delta in -15.0f64..15.0,
        warm in 0usize..4,
    ) {
        let code = small_code();
        let tanner = Tanner::new(&code);
        let mut state = DecoderState::new(&tanner);
        let mut le = vec![0.0; 60];
        for _ in 0..warm {
            decode_iteration(&tanner, &la, &mut state, &mut le);
        }
        let mut other = state.clone();
        let mut moved = la.clone();
        moved[j] += delta;
        let mut le_moved = vec![0.0; 60];
        decode_iteration(&tanner, &la, &mut state, &mut le);
        decode_iteration(&tanner, &moved, &mut other, &mut le_moved);
        prop_assert_eq!(le[j], le_moved[j]);
        // Every message into `j` is unchanged, all others may move.
        let mut e = 0;
        for row in code.rows() {
            for &c in row {
                if c as usize == j {
                    prop_assert_eq!(state.check_messages()[e], other.check_messages()[e]);
                }
                e += 1;
            }
        }
    }
}

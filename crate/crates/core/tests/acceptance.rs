//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use gauss_quad::GaussHermite;
use shapsk::constellation::{label_bit, GAMMA_32};
use shapsk::exitlab::{detector_characteristic, DetectorModel};
use shapsk::infotheory::{
    joint_optimize, p0_grid, required_ebn0, GridP0, JointOptimization, JointOptions, RateMethod,
};
use shapsk::ldpc::DegreeDistribution;
use shapsk::presets::{self, System};
use shapsk::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn shaped_32(g: usize, gamma: &[f64], p0: f64) -> Constellation {
    let base = build_apsk(32, gamma, &LabelMap::bundled(32, g).unwrap(), false).unwrap();
    base.with_strategy(&ShapingStrategy::default_for(32, g, p0).unwrap())
        .unwrap()
}

fn shaping_code_bias() -> Outcome {
    let t = Instant::now();
    let p: Vec<f64> = [(4, 2), (3, 2), (11, 10)]
        .iter()
        .map(|&(n, k)| build_shaping_code(n, k, 0).unwrap().p0())
        .collect();
    let elapsed = t.elapsed();
    let last = 1.0 - 4246.0 / 11264.0;
    let pass = p[0] == 0.8125
        && p[1] == 0.75
        && (p[2] - last).abs() <= 1e-4
        && (p[2] - 0.6230).abs() <= 1e-4
        && elapsed < Duration::from_secs(1);
    outcome(
        pass,
        format!(
            "p0 = {:?} in {elapsed:.1?}; (11,10) vs 1 - 4246/11264 = {last:.6}",
            p
        ),
    )
}

fn rate_equation() -> Outcome {
    let cases = [
        (3.0 / 5.0, 1.0, 0, (3u64, 5u64), (1u64, 1u64)),
        (2.0 / 3.0, 0.5, 1, (2, 3), (1, 2)),
        (9.0 / 14.0, 2.0 / 3.0, 1, (9, 14), (2, 3)),
    ];
    let mut detail = Vec::new();
    let mut pass = true;
    for (rc, rs, g, (cn, cd), (sn, sd)) in cases {
        let r = overall_rate(rc, rs, 5, g);
        // Exact check in integers: R = cn/cd * (5 + g (sn/sd - 1)).
        let num = cn * (5 * sd + g as u64 * sn - g as u64 * sd);
        let den = cd * sd;
        pass &= num == 3 * den && (r - 3.0).abs() <= 4.0 * f64::EPSILON;
        detail.push(format!("{cn}/{cd},{sn}/{sd},g={g} -> {r}"));
    }
    outcome(pass, detail.join("; "))
}

fn degree_tables() -> Outcome {
    let tables = [
        (presets::optimized_3_5(), [0.182, 0.473, 0.345], 3.0 / 5.0),
        (presets::optimized_2_3(), [0.200, 0.546, 0.254], 2.0 / 3.0),
        (presets::optimized_9_14(), [0.200, 0.469, 0.331], 9.0 / 14.0),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (dist, printed, rc) in &tables {
        let b = dist.edge_fractions();
        let dev = b
            .iter()
            .zip(printed)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        pass &= dev <= 0.001;
        detail.push(format!(
            "{:?}: b = [{:.4}, {:.4}, {:.4}] max dev {dev:.4}, sum a d = {:.3} vs dc (1 - Rc) = {:.3}",
            dist.dv,
            b[0],
            b[1],
            b[2],
            dist.mean_dv(),
            dist.dc as f64 * (1.0 - rc)
        ));
    }
    let balance = presets::optimized_3_5().mean_dv();
    pass &= (balance - 11.0 * 0.4).abs() <= 1e-12;
    detail.push(format!("rate 3/5 balance {balance} = 11 * 0.4"));
    outcome(pass, detail.join("; "))
}

fn capacity_thresholds() -> Outcome {
    let t = Instant::now();
    let gamma = GAMMA_32[2];
    let uniform = build_apsk(32, &gamma, &LabelMap::bundled(32, 0).unwrap(), false).unwrap();
    let method = RateMethod::default();
    let cases = [
        ("uniform", uniform, 4.029),
        ("p0=0.8125", shaped_32(1, &gamma, 0.8125), 3.829),
        ("p0=0.75", shaped_32(1, &gamma, 0.75), 3.789),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, c, want) in cases {
        let got = required_ebn0(c.points(), c.pmf(), 3.0, method).unwrap();
        pass &= (got - want).abs() <= 0.05;
        detail.push(format!("{name} {got:.3} dB (reference {want})"));
    }
    let elapsed = t.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    detail.push(format!("{elapsed:.1?}"));
    outcome(pass, detail.join("; "))
}

fn grid_range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

fn grid_index(grid: &[GridP0], p0: f64) -> usize {
    grid.iter()
        .enumerate()
        .min_by(|a, b| (a.1.p0 - p0).abs().total_cmp(&(b.1.p0 - p0).abs()))
        .unwrap()
        .0
}

fn optimize(order: usize, g: usize) -> JointOptimization {
    let grid = match order {
        16 => grid_range(4.0, 16.0, 0.1),
        _ => grid_range(6.0, 18.0, 0.1),
    };
    joint_optimize(order, g, &grid, &p0_grid(), &JointOptions::default()).unwrap()
}

fn table_one(o16: &JointOptimization, o32: &JointOptimization) -> Outcome {
    let grid = p0_grid();
    let b16 = &o16.best;
    let b32 = &o32.best;
    let near16 = grid_index(&grid, b16.p0).abs_diff(grid_index(&grid, 0.688)) <= 1;
    let near32 = grid_index(&grid, b32.p0).abs_diff(grid_index(&grid, 0.716)) <= 1;
    let pass = (b16.gain_db - 0.322).abs() <= 0.05
        && (b16.rate - 2.95).abs() <= 0.1
        && near16
        && b16.gamma == [2.57]
        && (b32.gain_db - 0.265).abs() <= 0.05
        && near32;
    outcome(
        pass,
        format!(
            "16/g2 gain {:.3} dB at R {:.3}, p0 {:.4}, gamma {:?}; 32/g1 gain {:.3} dB at R {:.3}, p0 {:.4}, gamma {:?}",
            b16.gain_db, b16.rate, b16.p0, b16.gamma, b32.gain_db, b32.rate, b32.p0, b32.gamma
        ),
    )
}

fn g_ordering(g1: &JointOptimization) -> Outcome {
    let g2 = optimize(32, 2);
    let g3 = optimize(32, 3);
    let (a, b, c) = (g1.best.gain_db, g2.best.gain_db, g3.best.gain_db);
    outcome(
        c > a && a > b,
        format!("gain g=3 {c:.3} dB, g=1 {a:.3} dB, g=2 {b:.3} dB"),
    )
}

fn papr() -> Outcome {
    let map = LabelMap::bundled(16, 2).unwrap();
    let shaped = build_apsk(16, &[2.57], &map, false)
        .unwrap()
        .with_strategy(&ShapingStrategy::default_for(16, 2, 0.6875).unwrap())
        .unwrap();
    let uniform = build_apsk(16, &[3.15], &LabelMap::bundled(16, 0).unwrap(), false).unwrap();
    let s = papr_db(shaped.points(), shaped.pmf());
    let u = papr_db(uniform.points(), uniform.pmf());
    outcome(
        (s - 1.98).abs() <= 0.02 && (u - 1.11).abs() <= 0.02,
        format!("shaped 16-APSK g=2 p0=0.6875 gamma 2.57: {s:.3} dB (reference 1.98); uniform gamma 3.15: {u:.3} dB (reference 1.11)"),
    )
}

fn oracle_equivalence() -> Outcome {
    // The property tests in tests/oracles.rs hold the full 256-case runs;
    // this criterion repeats a fixed-seed sample so the suite is standalone.
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let order = if i % 2 == 0 { 16 } else { 32 };
        let gammas = shapsk::constellation::permitted_gammas(order);
        let gamma = &gammas[i % gammas.len()];
        let c = build_apsk(order, gamma, &LabelMap::bundled(order, 0).unwrap(), false).unwrap();
        let m = c.bits_per_symbol();
        let n0: f64 = rng.random_range(0.02..2.0);
        let y = c.point(rng.random_range(0..order))
            + Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * n0.sqrt();
        let la: Vec<f64> = (0..m).map(|_| rng.random_range(-12.0..12.0)).collect();
        let got = demap_symbol(&c, &DemapInput { y, n0, la: &la }, DemapMode::Exact);
        for k in 0..m {
            let (mut zero, mut one) = (Vec::new(), Vec::new());
            for (x, p) in c.points().iter().enumerate() {
                let mut metric = -(y - p).norm_sqr() / n0;
                for j in (0..m).filter(|&j| j != k) {
                    metric += if label_bit(x, j, m) == 0 { 0.5 } else { -0.5 } * la[j];
                }
                if label_bit(x, k, m) == 0 {
                    zero.push(metric);
                } else {
                    one.push(metric);
                }
            }
            let want = llr::saturate(llr::log_sum_exp(&zero) - llr::log_sum_exp(&one));
            worst = worst.max((got[k] - want).abs());
        }
    }
    let mut shaping_worst: f64 = 0.0;
    for i in 0..200 {
        let (n, k) = [(4, 2), (3, 2), (5, 3), (9, 7), (7, 3)][i % 5];
        let code = build_shaping_code(n, k, i as u64).unwrap();
        let la_c: Vec<f64> = (0..n).map(|_| rng.random_range(-15.0..15.0)).collect();
        let la_d: Vec<f64> = (0..k).map(|_| rng.random_range(-15.0..15.0)).collect();
        let book: Vec<(Vec<u8>, Vec<u8>)> = (0..1usize << k)
            .map(|v| {
                let d: Vec<u8> = (0..k).map(|j| ((v >> (k - 1 - j)) & 1) as u8).collect();
                let c = code.encode(&d).unwrap();
                (d, c)
            })
            .collect();
        let metric = |bits: &[u8], l: &[f64], skip: Option<usize>| -> f64 {
            bits.iter()
                .zip(l)
                .enumerate()
                .filter(|(j, _)| Some(*j) != skip)
                .map(|(_, (&b, &x))| if b == 0 { 0.5 * x } else { -0.5 * x })
                .sum()
        };
        let got_d = code.decode_message(&la_c, &la_d);
        let got_c = code.decode_codeword(&la_c, &la_d);
        for (pos, side_d) in (0..k).map(|p| (p, true)).chain((0..n).map(|p| (p, false))) {
            let (mut zero, mut one) = (Vec::new(), Vec::new());
            for (d, c) in &book {
                let (bit, v) = if side_d {
                    (d[pos], metric(c, &la_c, None) + metric(d, &la_d, Some(pos)))
                } else {
                    (c[pos], metric(c, &la_c, Some(pos)) + metric(d, &la_d, None))
                };
                if bit == 0 {
                    zero.push(v);
                } else {
                    one.push(v);
                }
            }
            let want = llr::saturate(llr::log_sum_exp(&zero) - llr::log_sum_exp(&one));
            let got = if side_d { got_d[pos] } else { got_c[pos] };
            shaping_worst = shaping_worst.max((got - want).abs());
        }
    }
    let ldpc_ok = ldpc_exclusion();
    outcome(
        worst <= 1e-9 && shaping_worst <= 1e-9 && ldpc_ok,
        format!(
            "demapper max error {worst:.1e} over 200 instances; shaping decoder {shaping_worst:.1e} over 200; (60,40) exclusion {}",
            if ldpc_ok { "holds" } else { "violated" }
        ),
    )
}

fn ldpc_exclusion() -> bool {
    use rand::{Rng, SeedableRng};
    use shapsk::ldpc::{decode_iteration, DecoderState, Tanner};
    let d =
        DegreeDistribution::new(vec![2, 3, 6], vec![1.0 / 3.0, 5.0 / 9.0, 1.0 / 9.0], 9).unwrap();
    let code = build_eira(60, 40, &d, 7).unwrap();
    let tanner = Tanner::new(&code);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    (0..200).all(|t| {
        let la: Vec<f64> = (0..60).map(|_| rng.random_range(-4.0..4.0)).collect();
        let mut state = DecoderState::new(&tanner);
        let mut le = vec![0.0; 60];
        for _ in 0..t % 4 {
            decode_iteration(&tanner, &la, &mut state, &mut le);
        }
        let mut other = state.clone();
        let j = t % 60;
        let mut moved = la.clone();
        moved[j] += rng.random_range(-15.0..15.0);
        let mut le2 = vec![0.0; 60];
        decode_iteration(&tanner, &la, &mut state, &mut le);
        decode_iteration(&tanner, &moved, &mut other, &mut le2);
        le[j] == le2[j]
    })
}

/// BICM capacity of a uniform labelled constellation by Gauss-Hermite
/// quadrature, summed over bit positions.
fn bicm_capacity(c: &Constellation, esn0_db: f64) -> f64 {
    let rule = GaussHermite::new(std::num::NonZeroUsize::new(40).unwrap());
    let nodes: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    let n0 = 10f64.powf(-esn0_db / 10.0);
    let m = c.bits_per_symbol();
    let pts = c.points();
    let size = pts.len() as f64;
    let mut total = 0.0;
    for k in 0..m {
        let mut loss = 0.0;
        for (x, &px) in pts.iter().enumerate() {
            let b = label_bit(x, k, m);
            for &(u, wu) in &nodes {
                for &(v, wv) in &nodes {
                    let y = px + Complex64::new(u, v) * n0.sqrt();
                    let (mut all, mut same) = (0.0, 0.0);
                    for (x2, &p2) in pts.iter().enumerate() {
                        let q = (-(y - p2).norm_sqr() / n0).exp();
                        all += q;
                        if label_bit(x2, k, m) == b {
                            same += q;
                        }
                    }
                    loss += wu * wv / std::f64::consts::PI * (all / same).log2() / size;
                }
            }
        }
        total += 1.0 - loss;
    }
    total
}

fn detector_anchor() -> Outcome {
    let c = build_apsk(32, &GAMMA_32[2], &LabelMap::bundled(32, 0).unwrap(), false).unwrap();
    let model = DetectorModel::uniform(c.clone());
    let mut pass = true;
    let mut detail = Vec::new();
    for (i, es) in [8.8, 11.0].into_iter().enumerate() {
        let curve = detector_characteristic(&model, es, &[0.0], 5_000_000, 40 + i as u64);
        let sim = curve.ie[0] * 5.0;
        let oracle = bicm_capacity(&c, es);
        pass &= (sim - oracle).abs() <= 0.01;
        detail.push(format!(
            "Es/N0 {es} dB: IE(0) m = {sim:.4}, BICM capacity {oracle:.4}"
        ));
    }
    outcome(pass, detail.join("; "))
}

fn desk_ber() -> Outcome {
    let stop = StopRule {
        max_frames: 300,
        max_bit_errors: usize::MAX,
        max_frame_errors: Some(20),
        batch: 4,
    };
    let systems = [
        (System::ShapedOptimized, 4.5),
        (System::ShapedStandard, 4.5),
        (System::UniformBicmId, 5.0),
        (System::UniformBicm, 5.3),
    ];
    let mut at = Vec::new();
    let mut detail = Vec::new();
    for (sys, start) in systems {
        let cfg = sys.build(16200, 100, 1).unwrap();
        let crossing = ber_crossing(&cfg, start, 0.1, 1e-4, 15, &stop, 2024);
        detail.push(match crossing.ebn0_db {
            Some(x) => format!("{} {x:.3} dB (N_c {})", sys.name(), cfg.lengths().n_c),
            None => format!("{} no crossing", sys.name()),
        });
        at.push(crossing.ebn0_db.unwrap_or(f64::NAN));
    }
    let ordered = at.windows(2).all(|w| w[0] < w[1]);
    let gap = at[3] - at[0];
    detail.push(format!("gap {gap:.3} dB"));
    outcome(ordered && gap >= 0.6, detail.join("; "))
}

fn iteration_trend() -> Outcome {
    let stop = StopRule {
        max_frames: 100,
        max_bit_errors: usize::MAX,
        max_frame_errors: None,
        batch: 4,
    };
    let eb = 5.7;
    let mean = |sys: System| {
        let cfg = sys.build(16200, 100, 1).unwrap();
        ber_campaign(&cfg, &[eb], &stop, 99)[0]
    };
    let shaped = mean(System::ShapedStandard);
    let uniform = mean(System::UniformBicmId);
    outcome(
        shaped.mean_iters < uniform.mean_iters,
        format!(
            "Eb/N0 {eb} dB: shaped {:.2} iterations (BER {:.1e}), uniform BICM-ID {:.2} (BER {:.1e})",
            shaped.mean_iters, shaped.ber, uniform.mean_iters, uniform.ber
        ),
    )
}

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let wanted = |name: &str| filter.is_empty() || filter.iter().any(|f| name.contains(f.as_str()));
    let mut failed = 0;
    let mut report = |name: &str, run: &dyn Fn() -> Outcome| {
        if !wanted(name) {
            return;
        }
        let t = Instant::now();
        let o = run();
        println!(
            "{} {name}: {} [{:.1?}]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed()
        );
        failed += usize::from(!o.pass);
    };
    report("shaping-code-bias", &shaping_code_bias);
    report("rate-equation", &rate_equation);
    report("degree-table-arithmetic", &degree_tables);
    report("cm-capacity-thresholds", &capacity_thresholds);
    let needs_opt = ["table-one", "shaping-bit-ordering"]
        .iter()
        .any(|n| wanted(n));
    if needs_opt {
        let o16 = optimize(16, 2);
        let o32 = optimize(32, 1);
        report("table-one-spot-checks", &|| table_one(&o16, &o32));
        report("shaping-bit-ordering", &|| g_ordering(&o32));
    }
    report("papr", &papr);
    report("oracle-equivalence", &oracle_equivalence);
    report("detector-anchor", &detector_anchor);
    report("desk-ber-trend", &desk_ber);
    report("iteration-trend", &iteration_trend);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

use std::path::PathBuf;
use std::result::Result;

use shapsk::constellation::permitted_gammas;
use shapsk::exitlab::{
    check_precision, cnd_curve, ia_grid, vnd_curve, DegreeSearchSpace, DEFAULT_SAMPLES,
};
use shapsk::infotheory::{rate_curve, GridP0, JointOptimization, JointOptions, GH_ORDER};
use shapsk::ldpc::load_external;
use shapsk::presets::System;
use shapsk::*;

use crate::config::{parse_grid, Settings};
use crate::output::{join, Run};
use crate::Failure;

fn invalid<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Invalid(msg.into()))
}

fn order(s: &Settings) -> Result<usize, Failure> {
    match s.order.unwrap_or(32) {
        o @ (16 | 32) => Ok(o),
        o => invalid(format!("order {o} is not supported; use 16 or 32")),
    }
}

fn default_g(order: usize) -> usize {
    if order == 16 {
        2
    } else {
        1
    }
}

fn gamma(s: &Settings, order: usize) -> Result<Vec<f64>, Failure> {
    if let Some(values) = &s.gamma_values {
        if s.gamma.is_some() {
            return invalid("set either gamma (an index) or gamma_values, not both");
        }
        return Ok(values.clone());
    }
    let sets = permitted_gammas(order);
    let i = s.gamma.unwrap_or(if order == 32 { 2 } else { 0 });
    match sets.get(i) {
        Some(set) => Ok(set.clone()),
        None => invalid(format!(
            "gamma index {i} out of range; {order}-APSK has {} radius sets",
            sets.len()
        )),
    }
}

fn constellation(s: &Settings, order: usize, g: usize, p0: f64) -> Result<Constellation, Failure> {
    let map = LabelMap::bundled(order, g)?;
    let base = build_apsk(
        order,
        &gamma(s, order)?,
        &map,
        s.allow_any_gamma.unwrap_or(false),
    )?;
    if g == 0 {
        return Ok(base);
    }
    Ok(base.with_strategy(&ShapingStrategy::default_for(order, g, p0)?)?)
}

/// Shaping-bit zero probability from `ns`/`ks` or `p0`, defaulting to the
/// (4,2) code.
fn bias(s: &Settings) -> Result<(f64, Option<(usize, usize)>), Failure> {
    match (s.ns, s.ks, s.p0) {
        (Some(n), Some(k), None) => Ok((build_shaping_code(n, k, s.seed())?.p0(), Some((n, k)))),
        (None, None, Some(p)) if p > 0.0 && p < 1.0 => Ok((p, None)),
        (None, None, Some(p)) => invalid(format!("p0 = {p} must lie strictly between 0 and 1")),
        (None, None, None) => Ok((build_shaping_code(4, 2, s.seed())?.p0(), Some((4, 2)))),
        _ => invalid("give both ns and ks, or p0 alone"),
    }
}

fn grid(s: &Settings, default: &str) -> Result<Vec<f64>, Failure> {
    parse_grid(s.snr.as_deref().unwrap_or(default))
}

fn method(s: &Settings) -> Result<RateMethod, Failure> {
    match s.method.as_deref().unwrap_or("quadrature") {
        "quadrature" => Ok(RateMethod::Quadrature {
            order: s.gh_order.unwrap_or(GH_ORDER),
        }),
        "monte-carlo" => Ok(RateMethod::MonteCarlo {
            samples: s.mc_samples.unwrap_or(1_000_000),
            seed: s.seed(),
        }),
        m => invalid(format!(
            "method {m:?} unknown; use quadrature or monte-carlo"
        )),
    }
}

fn code_fields(code: Option<(usize, usize)>) -> [String; 2] {
    match code {
        Some((n, k)) => [n.to_string(), k.to_string()],
        None => [String::new(), String::new()],
    }
}

pub fn capacity(s: &Settings) -> Result<PathBuf, Failure> {
    let order = order(s)?;
    let g = s.g.unwrap_or(default_g(order));
    let gamma = gamma(s, order)?;
    let method = method(s)?;
    let es = grid(s, "-5:25:0.1")?;
    let mut curves = vec![(0, 0.5, constellation(s, order, 0, 0.5)?)];
    if g > 0 {
        let (p0, _) = bias(s)?;
        curves.push((g, p0, constellation(s, order, g, p0)?));
    }
    let m = order.trailing_zeros() as f64;
    if let Some(r) = s.rate {
        if !(r > 0.0 && r < m) {
            return invalid(format!("rate {r} must lie in (0, {m})"));
        }
    }
    let mut run = Run::new("capacity", s)?;
    let mut rows = Vec::new();
    for (g, p0, c) in &curves {
        for p in rate_curve(c.points(), c.pmf(), &es, method)? {
            rows.push(vec![
                method.tag().to_string(),
                order.to_string(),
                g.to_string(),
                p0.to_string(),
                join(&gamma),
                p.esn0_db.to_string(),
                p.ebn0_db.to_string(),
                p.bpcu.to_string(),
            ]);
        }
        if let Some(r) = s.rate {
            let eb = required_ebn0(c.points(), c.pmf(), r, method)?;
            run.result(&format!("ebn0_db_at_rate.g{g}"), eb);
        }
    }
    run.csv(
        "capacity",
        &[
            "method", "M", "g", "p0", "gamma", "esn0_db", "ebn0_db", "bpcu",
        ],
        &rows,
    )?;
    run.finish()
}

fn joint(s: &Settings) -> Result<JointOptimization, Failure> {
    let order = order(s)?;
    let g = s.g.unwrap_or(default_g(order));
    if g == 0 {
        return invalid("the joint search needs g >= 1 shaping bits");
    }
    let es = grid(s, if order == 16 { "4:16:0.1" } else { "6:18:0.1" })?;
    let p0s = match (s.ns, s.ks, s.p0) {
        (Some(n), Some(k), None) => vec![GridP0 {
            p0: build_shaping_code(n, k, s.seed())?.p0(),
            codes: vec![(n, k)],
        }],
        (None, None, None) => p0_grid(),
        _ => return invalid("restrict the joint search with both ns and ks"),
    };
    let opts = JointOptions {
        gh_order: s.gh_order.unwrap_or(GH_ORDER),
        ..JointOptions::default()
    };
    Ok(joint_optimize(order, g, &es, &p0s, &opts)?)
}

pub fn gain(s: &Settings) -> Result<PathBuf, Failure> {
    let opt = joint(s)?;
    let mut run = Run::new("gain", s)?;
    let rows: Vec<Vec<String>> = opt
        .gains
        .iter()
        .map(|p| {
            vec![
                opt.order.to_string(),
                opt.g.to_string(),
                p.rate.to_string(),
                p.gain_db.to_string(),
            ]
        })
        .collect();
    run.csv("gain", &["M", "g", "rate", "gain_db"], &rows)?;
    let b = &opt.best;
    let [ns, ks] = code_fields(b.source);
    run.csv(
        "gain-table",
        &[
            "M", "g", "rate", "ebn0_db", "gain_db", "p0", "ns", "ks", "gamma",
        ],
        &[vec![
            b.order.to_string(),
            b.g.to_string(),
            b.rate.to_string(),
            b.ebn0_db.to_string(),
            b.gain_db.to_string(),
            b.p0.to_string(),
            ns,
            ks,
            join(&b.gamma),
        ]],
    )?;
    run.result("best.rate", b.rate);
    run.result("best.ebn0_db", b.ebn0_db);
    run.result("best.gain_db", b.gain_db);
    run.result("best.p0", b.p0);
    println!(
        "{}-APSK g={}: best gain {:.3} dB at rate {} (p0 = {})",
        b.order, b.g, b.gain_db, b.rate, b.p0
    );
    run.finish()
}

pub fn optimal_p0(s: &Settings) -> Result<PathBuf, Failure> {
    let opt = joint(s)?;
    let mut run = Run::new("optimal-p0", s)?;
    let rows: Vec<Vec<String>> = opt
        .sweep
        .iter()
        .map(|p| {
            let (p0, code) = match &p.p0 {
                Some(q) => (q.p0, Some(q.code())),
                None => (0.5, None),
            };
            let [ns, ks] = code_fields(code);
            vec![
                opt.order.to_string(),
                opt.g.to_string(),
                p.esn0_db.to_string(),
                p.shaped_bpcu.to_string(),
                p0.to_string(),
                ns,
                ks,
                join(&opt.gammas[p.gamma]),
                p.uniform_bpcu.to_string(),
                join(&opt.gammas[p.uniform_gamma]),
            ]
        })
        .collect();
    run.csv(
        "optimal-p0",
        &[
            "M",
            "g",
            "esn0_db",
            "bpcu",
            "p0",
            "ns",
            "ks",
            "gamma",
            "uniform_bpcu",
            "uniform_gamma",
        ],
        &rows,
    )?;
    run.finish()
}

pub fn papr(s: &Settings) -> Result<PathBuf, Failure> {
    let order = order(s)?;
    let g = s.g.unwrap_or(default_g(order));
    if g == 0 {
        return invalid("PAPR versus bias needs g >= 1 shaping bits");
    }
    let gammas = if s.gamma.is_some() || s.gamma_values.is_some() {
        vec![gamma(s, order)?]
    } else {
        permitted_gammas(order)
    };
    let mut p0s = vec![0.5];
    if s.ns.is_some() || s.ks.is_some() || s.p0.is_some() {
        p0s.push(bias(s)?.0);
    } else {
        p0s.extend(p0_grid().iter().map(|q| q.p0));
    }
    let map = LabelMap::bundled(order, g)?;
    let mut rows = Vec::new();
    for (i, gm) in gammas.iter().enumerate() {
        let base = build_apsk(order, gm, &map, s.allow_any_gamma.unwrap_or(false))?;
        for &p0 in &p0s {
            let c = base.with_strategy(&ShapingStrategy::default_for(order, g, p0)?)?;
            rows.push(vec![
                order.to_string(),
                g.to_string(),
                i.to_string(),
                join(gm),
                p0.to_string(),
                papr_db(c.points(), c.pmf()).to_string(),
            ]);
        }
    }
    let mut run = Run::new("papr", s)?;
    run.csv(
        "papr",
        &["M", "g", "gamma_index", "gamma", "p0", "papr_db"],
        &rows,
    )?;
    run.finish()
}

pub fn shaping_code(s: &Settings) -> Result<PathBuf, Failure> {
    let (Some(n), Some(k)) = (s.ns, s.ks) else {
        return invalid("shaping-code needs both ns and ks");
    };
    let code = build_shaping_code(n, k, s.seed())?;
    let rows: Vec<Vec<String>> = code
        .codewords()
        .iter()
        .enumerate()
        .map(|(msg, &word)| {
            vec![
                format!("{msg:0k$b}"),
                format!("{word:0n$b}"),
                word.count_ones().to_string(),
            ]
        })
        .collect();
    let mut run = Run::new("shaping-code", s)?;
    run.csv("shaping-code", &["message", "codeword", "weight"], &rows)?;
    let weights: Vec<String> = code.column_weights().iter().map(usize::to_string).collect();
    run.result("n_s", n);
    run.result("k_s", k);
    run.result("rate", code.rate());
    run.result("p0", code.p0());
    run.result("column_weights", weights.join(","));
    println!(
        "({n},{k}) shaping code: rate {}, p0 = {}",
        code.rate(),
        code.p0()
    );
    print!("{}", code.to_text());
    run.finish()
}

fn system(s: &Settings, default: &str) -> Result<System, Failure> {
    let name = s.system.as_deref().unwrap_or(default);
    System::from_name(name).ok_or_else(|| {
        let names: Vec<&str> = System::ALL.iter().map(System::name).collect();
        Failure::Invalid(format!(
            "unknown system {name:?}; expected one of {}",
            names.join(", ")
        ))
    })
}

/// The system's profile, or the one given by `degrees`, `fractions` and
/// `dc`.
fn custom_degrees(s: &Settings, sys: System) -> Result<Option<DegreeDistribution>, Failure> {
    match (&s.degrees, &s.fractions) {
        (Some(dv), Some(a)) => Ok(Some(DegreeDistribution::new(
            dv.clone(),
            a.clone(),
            s.dc.unwrap_or(sys.degrees().dc),
        )?)),
        (None, None) if s.dc.is_none() => Ok(None),
        (None, None) => invalid("dc needs degrees and fractions"),
        _ => invalid("degrees and fractions must be given together"),
    }
}

fn detector_model(sys: System, seed: u64) -> Result<DetectorModel, Failure> {
    let gamma = permitted_gammas(32)[2].clone();
    Ok(match sys.shaping_code() {
        None => DetectorModel::uniform(build_apsk(32, &gamma, &LabelMap::bundled(32, 0)?, false)?),
        Some((n, k)) => {
            let code = build_shaping_code(n, k, seed)?;
            let c = build_apsk(32, &gamma, &LabelMap::bundled(32, 1)?, false)?
                .with_strategy(&ShapingStrategy::default_for(32, 1, code.p0())?)?;
            DetectorModel::shaped(c, code)?
        }
    })
}

/// Bits per symbol of `sys` with LDPC rate `rc`.
fn system_rate(sys: System, rc: f64) -> f64 {
    match sys.shaping_code() {
        None => overall_rate(rc, 1.0, 5, 0),
        Some((n, k)) => overall_rate(rc, k as f64 / n as f64, 5, 1),
    }
}

fn ia_points(s: &Settings) -> Result<Vec<f64>, Failure> {
    match s.ia_points.unwrap_or(21) {
        n if n >= 2 => Ok(ia_grid(n)),
        n => invalid(format!("ia_points = {n}; need at least 2")),
    }
}

fn samples(s: &Settings) -> Result<usize, Failure> {
    match s.samples.unwrap_or(DEFAULT_SAMPLES) {
        0 => invalid("samples must be positive"),
        n => Ok(n),
    }
}

pub fn exit(s: &Settings) -> Result<PathBuf, Failure> {
    let sys = system(s, "shaped-optimized")?;
    let custom = custom_degrees(s, sys)?;
    let (num, den) = sys.ldpc_rate();
    let rc = match &custom {
        Some(d) => d.design_rate(),
        None => num as f64 / den as f64,
    };
    let dist = custom.unwrap_or_else(|| sys.degrees());
    let offset = 10.0 * system_rate(sys, rc).log10();
    let es: Vec<f64> = grid(s, "4.73")?.iter().map(|eb| eb + offset).collect();
    let ia = ia_points(s)?;
    let n_bits = samples(s)?;
    let model = detector_model(sys, s.seed())?;
    let mut run = Run::new("exit", s)?;
    let table = DetectorTable::simulate(&model, &es, &ia, n_bits, s.seed());
    let mut rows = Vec::new();
    let mut push = |c: &ExitCurve| {
        let es = c.esn0_db.map(|x| x.to_string()).unwrap_or_default();
        for (x, y) in c.ia.iter().zip(&c.ie) {
            rows.push(vec![
                c.kind.label(),
                es.clone(),
                x.to_string(),
                y.to_string(),
            ]);
        }
    };
    let mut worst: f64 = 0.0;
    for det in &table.curves {
        push(det);
        push(&vnd_curve(det, &dist));
        worst = det.ci_width.iter().copied().fold(worst, f64::max);
        if let Err(e) = check_precision(det) {
            eprintln!("warning: {e}");
        }
    }
    push(&cnd_curve(dist.dc, &ia));
    run.csv("exit", &["context", "esn0_db", "ia", "ie"], &rows)?;
    run.result("ebn0_to_esn0_offset_db", offset);
    run.result("max_ci_halfwidth", worst);
    if es.len() >= 2 {
        match threshold_search(&table, &dist) {
            Ok(t) => {
                run.result("threshold_esn0_db", t);
                run.result("threshold_ebn0_db", t - offset);
            }
            Err(e) => run.result("threshold", e),
        }
    }
    run.finish()
}

pub fn design_ldpc(s: &Settings) -> Result<PathBuf, Failure> {
    let sys = system(s, "shaped-standard")?;
    let (num, den) = sys.ldpc_rate();
    let rc = s.rate.unwrap_or(num as f64 / den as f64);
    if !(rc > 0.0 && rc < 1.0) {
        return invalid(format!("LDPC rate {rc} must lie in (0, 1)"));
    }
    let dc = s.dc.unwrap_or(sys.degrees().dc);
    let offset = 10.0 * system_rate(sys, rc).log10();
    let es: Vec<f64> = grid(s, "4.4:6.4:0.1")?
        .iter()
        .map(|eb| eb + offset)
        .collect();
    if es.len() < 2 {
        return invalid("design-ldpc needs an SNR grid of at least two points");
    }
    let ia = ia_points(s)?;
    let n_bits = samples(s)?;
    let model = detector_model(sys, s.seed())?;
    let mut run = Run::new("design-ldpc", s)?;
    let table = DetectorTable::simulate(&model, &es, &ia, n_bits, s.seed());
    let (best, reports) = optimize_degrees(&table, rc, dc, &DegreeSearchSpace::default())?;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.dv2.to_string(),
                r.dv3.to_string(),
                r.a2.to_string(),
                r.a3.to_string(),
                r.threshold_db.map(|t| t.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    run.csv(
        "design-ldpc",
        &["dv2", "dv3", "a2", "a3", "threshold_db"],
        &rows,
    )?;
    let t = threshold_search(&table, &best)?;
    let dv: Vec<String> = best.dv.iter().map(usize::to_string).collect();
    let a: Vec<String> = best.a.iter().map(f64::to_string).collect();
    run.result("best.dv", dv.join(","));
    run.result("best.a", a.join(","));
    run.result("best.dc", best.dc);
    run.result("best.threshold_esn0_db", t);
    run.result("best.threshold_ebn0_db", t - offset);
    println!(
        "best profile dv {} a {} dc {}: threshold Eb/N0 {:.2} dB",
        dv.join(","),
        a.join(","),
        best.dc,
        t - offset
    );
    let preset = sys.degrees();
    if s.rate.is_none() && s.dc.is_none() {
        match threshold_search(&table, &preset) {
            Ok(t) => run.result("preset.threshold_ebn0_db", t - offset),
            Err(e) => run.result("preset.threshold", e),
        }
    }
    run.finish()
}

pub fn ber(s: &Settings, name: &'static str) -> Result<PathBuf, Failure> {
    let iters = name == "iters";
    let sys = system(s, "shaped-standard")?;
    let eb = grid(s, "4.6:5.6:0.2")?;
    let stop = StopRule {
        max_frames: s.max_frames.unwrap_or(if iters { 200 } else { 10_000 }),
        max_bit_errors: s
            .max_bit_errors
            .unwrap_or(if iters { usize::MAX } else { 100 }),
        max_frame_errors: s.max_frame_errors,
        ..StopRule::default()
    };
    if stop.max_frames == 0 {
        return invalid("max_frames must be positive");
    }
    let n = s.n.unwrap_or(16_200);
    let max_iters = s.max_iters.unwrap_or(100);
    let seed = s.seed();
    let cfg = match (&s.alist, custom_degrees(s, sys)?) {
        (Some(_), Some(_)) => return invalid("give either an alist file or a degree profile"),
        (Some(path), None) => {
            if s.n.is_some() {
                return invalid("n is set by the alist file");
            }
            let code = load_external(path, None)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            sys.build_with(code, max_iters, seed)?
        }
        (None, Some(d)) => sys.build_with_degrees(&d, n, max_iters, seed)?,
        (None, None) => sys.build(n, max_iters, seed)?,
    };
    let mut run = Run::new(name, s)?;
    let len = cfg.lengths();
    eprintln!(
        "{}: N_c = {}, K_c = {}, {} symbols per frame",
        sys.name(),
        len.n_c,
        len.k_c,
        len.n
    );
    let points = ber_campaign(&cfg, &eb, &stop, seed);
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                p.ebn0_db.to_string(),
                p.esn0_db.to_string(),
                p.frames.to_string(),
                p.bit_errors.to_string(),
                p.ber.to_string(),
                p.fer.to_string(),
                p.mean_iters.to_string(),
            ]
        })
        .collect();
    run.csv(
        name,
        &[
            "snr_db_eb",
            "snr_db_es",
            "frames",
            "bit_errors",
            "ber",
            "fer",
            "mean_iters",
        ],
        &rows,
    )?;
    run.result("n_c", len.n_c);
    run.result("k_c", len.k_c);
    run.result("symbols", len.n);
    run.result("rate", cfg.rate());
    run.finish()
}

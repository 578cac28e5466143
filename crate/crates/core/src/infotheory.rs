//! Coded-modulation information rates of shaped constellations over AWGN,
//! their inversion to required SNR, and the joint search over shaping bias
//! and ring radii.

use std::num::NonZeroUsize;

use gauss_quad::GaussHermite;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channel::{db_to_lin, lin_to_db, substream};
use crate::constellation::{build_apsk, permitted_gammas, LabelMap, ShapingStrategy};
use crate::error::{Error, Result};
use crate::shaping::{codebook_ones, MAX_KS, MAX_NS};

/// Gauss-Hermite nodes per real noise dimension.
pub const GH_ORDER: usize = 16;

/// Largest quadrature/Monte Carlo disagreement tolerated by
/// [`check_quadrature`].
pub const QUADRATURE_TOL: f64 = 0.02;

/// How the noise expectation is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateMethod {
    /// Product Gauss-Hermite rule with `order` nodes per real dimension.
    Quadrature { order: usize },
    /// Sample mean over `samples` channel uses drawn from `seed`.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for RateMethod {
    fn default() -> Self {
        RateMethod::Quadrature { order: GH_ORDER }
    }
}

impl RateMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            RateMethod::Quadrature { .. } => "quadrature",
            RateMethod::MonteCarlo { .. } => "monte-carlo",
        }
    }
}

/// One point of a rate curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub esn0_db: f64,
    /// SNR per information bit at rate `bpcu`.
    pub ebn0_db: f64,
    pub bpcu: f64,
    pub method: RateMethod,
}

/// Product rule for unit-power circular Gaussian noise: nodes `u + iv`
/// with weights summing to one.
#[derive(Debug, Clone)]
struct NoiseRule {
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
}

impl NoiseRule {
    fn new(order: usize) -> Self {
        let rule = GaussHermite::new(NonZeroUsize::new(order.max(1)).expect("nonzero"));
        let pairs = rule.as_node_weight_pairs();
        let mut nodes = Vec::with_capacity(pairs.len() * pairs.len());
        let mut weights = Vec::with_capacity(pairs.len() * pairs.len());
        for &(u, wu) in pairs {
            for &(v, wv) in pairs {
                nodes.push(Complex64::new(u, v));
                weights.push(wu * wv / std::f64::consts::PI);
            }
        }
        NoiseRule { nodes, weights }
    }
}

/// For a fixed geometry and signal-to-noise ratio `rho` (for unit-power
/// noise), per-class sums of likelihood ratios `p(y|x') / p(y|x)` at each
/// quadrature node, scaled by `exp(-offset)` to stay finite.
struct ClassSums {
    n_classes: usize,
    n_nodes: usize,
    sums: Vec<f64>,
    offset: Vec<f64>,
}

impl ClassSums {
    fn new(
        points: &[Complex64],
        class_of: &[usize],
        n_classes: usize,
        rho: f64,
        rule: &NoiseRule,
    ) -> Self {
        let order = points.len();
        let n_nodes = rule.nodes.len();
        let mut sums = vec![0.0; order * n_nodes * n_classes];
        let mut offset = vec![0.0; order * n_nodes];
        let s = rho.sqrt();
        let mut e = vec![0.0; order];
        for (x, &px) in points.iter().enumerate() {
            for (k, &nz) in rule.nodes.iter().enumerate() {
                let mut emax = f64::NEG_INFINITY;
                for (ej, &pj) in e.iter_mut().zip(points) {
                    let d = px - pj;
                    *ej = -rho * d.norm_sqr() - 2.0 * s * (d * nz.conj()).re;
                    emax = emax.max(*ej);
                }
                let row = &mut sums[(x * n_nodes + k) * n_classes..][..n_classes];
                for (&ej, &c) in e.iter().zip(class_of) {
                    row[c] += (ej - emax).exp();
                }
                offset[x * n_nodes + k] = emax;
            }
        }
        ClassSums {
            n_classes,
            n_nodes,
            sums,
            offset,
        }
    }

    /// Rate in bits when every symbol of class `c` has probability `q[c]`.
    fn rate(&self, q: &[f64], class_of: &[usize], weights: &[f64]) -> f64 {
        let mut total = 0.0;
        for (x, &c) in class_of.iter().enumerate() {
            if q[c] == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for (k, &w) in weights.iter().enumerate().take(self.n_nodes) {
                let i = x * self.n_nodes + k;
                let row = &self.sums[i * self.n_classes..][..self.n_classes];
                let mix: f64 = row.iter().zip(q).map(|(a, b)| a * b).sum();
                acc -= w * (mix.ln() + self.offset[i]);
            }
            total += q[c] * acc;
        }
        total / std::f64::consts::LN_2
    }
}

fn check_pmf(points: &[Complex64], pmf: &[f64]) -> Result<()> {
    if pmf.len() != points.len() {
        return Err(Error::Length {
            what: "pmf",
            expected: points.len(),
            got: pmf.len(),
        });
    }
    let total: f64 = pmf.iter().sum();
    if pmf.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Constellation(format!(
            "symbol probabilities must be nonnegative and sum to one (sum {total})"
        )));
    }
    Ok(())
}

/// Mutual information in bits per channel use between a symbol drawn from
/// `pmf` over `points` and its AWGN observation at `esn0_db`. The points
/// are rescaled to unit average energy under `pmf` first.
pub fn information_rate(
    points: &[Complex64],
    pmf: &[f64],
    esn0_db: f64,
    method: RateMethod,
) -> Result<f64> {
    check_pmf(points, pmf)?;
    let es: f64 = points.iter().zip(pmf).map(|(x, p)| p * x.norm_sqr()).sum();
    let rho = db_to_lin(esn0_db) / es;
    Ok(match method {
        RateMethod::Quadrature { order } => {
            let rule = NoiseRule::new(order);
            let class_of: Vec<usize> = (0..points.len()).collect();
            let sums = ClassSums::new(points, &class_of, points.len(), rho, &rule);
            let entropy: f64 = pmf
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|p| -p * p.log2())
                .sum();
            sums.rate(pmf, &class_of, &rule.weights).clamp(0.0, entropy)
        }
        RateMethod::MonteCarlo { samples, seed } => {
            monte_carlo_rate(points, pmf, rho, samples, seed)
        }
    })
}

fn monte_carlo_rate(points: &[Complex64], pmf: &[f64], rho: f64, samples: usize, seed: u64) -> f64 {
    let pick = WeightedIndex::new(pmf).expect("valid pmf");
    let s = rho.sqrt();
    let chunk = 4096;
    let n_chunks = samples.div_ceil(chunk);
    let total: f64 = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let count = chunk.min(samples - c * chunk);
            let mut acc = 0.0;
            for _ in 0..count {
                let x = pick.sample(&mut rng);
                let nz = unit_noise(&mut rng);
                let e: Vec<f64> = points
                    .iter()
                    .map(|&pj| {
                        let d = points[x] - pj;
                        -rho * d.norm_sqr() - 2.0 * s * (d * nz.conj()).re
                    })
                    .collect();
                let emax = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mix: f64 = e
                    .iter()
                    .zip(pmf)
                    .map(|(&ej, &p)| p * (ej - emax).exp())
                    .sum();
                acc -= mix.ln() + emax;
            }
            acc
        })
        .sum();
    total / samples as f64 / std::f64::consts::LN_2
}

fn unit_noise<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Quadrature rate at `esn0_db`, cross-checked against a Monte Carlo
/// estimate; fails when the two disagree by more than [`QUADRATURE_TOL`].
pub fn check_quadrature(
    points: &[Complex64],
    pmf: &[f64],
    esn0_db: f64,
    order: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let q = information_rate(points, pmf, esn0_db, RateMethod::Quadrature { order })?;
    let mc = information_rate(
        points,
        pmf,
        esn0_db,
        RateMethod::MonteCarlo { samples, seed },
    )?;
    let diff = (q - mc).abs();
    if diff > QUADRATURE_TOL {
        return Err(Error::QuadratureMismatch { esn0_db, diff });
    }
    Ok(q)
}

/// Rates over an Es/N0 grid.
pub fn rate_curve(
    points: &[Complex64],
    pmf: &[f64],
    esn0_db: &[f64],
    method: RateMethod,
) -> Result<Vec<RatePoint>> {
    check_pmf(points, pmf)?;
    esn0_db
        .par_iter()
        .map(|&es| {
            let bpcu = information_rate(points, pmf, es, method)?;
            Ok(RatePoint {
                esn0_db: es,
                ebn0_db: es - lin_to_db(bpcu),
                bpcu,
                method,
            })
        })
        .collect()
}

/// Lower end of the Es/N0 bracket searched by [`required_ebn0`].
pub const SEARCH_LO_DB: f64 = -20.0;
/// Upper end of the Es/N0 bracket searched by [`required_ebn0`].
pub const SEARCH_HI_DB: f64 = 50.0;

/// Eb/N0 in dB at which the rate reaches `rate` bits per channel use,
/// found by bisection on Es/N0.
pub fn required_ebn0(
    points: &[Complex64],
    pmf: &[f64],
    rate: f64,
    method: RateMethod,
) -> Result<f64> {
    let es = required_esn0(points, pmf, rate, method)?;
    Ok(es - lin_to_db(rate))
}

/// Es/N0 in dB at which the rate reaches `rate`.
pub fn required_esn0(
    points: &[Complex64],
    pmf: &[f64],
    rate: f64,
    method: RateMethod,
) -> Result<f64> {
    let (mut lo, mut hi) = (SEARCH_LO_DB, SEARCH_HI_DB);
    let f = |es: f64| information_rate(points, pmf, es, method);
    if f(lo)? > rate || f(hi)? < rate {
        return Err(Error::NotBracketed { lo, hi });
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        let i = f(mid)?;
        if (i - rate).abs() < 1e-6 || hi - lo < 1e-7 {
            return Ok(mid);
        }
        if i < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A shaping bias and every `(n_s, k_s)` code producing it, in order of
/// `n_s` then `k_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridP0 {
    pub p0: f64,
    pub codes: Vec<(usize, usize)>,
}

impl GridP0 {
    /// The first code producing this bias.
    pub fn code(&self) -> (usize, usize) {
        self.codes[0]
    }
}

/// Distinct zero probabilities of all lowest-weight `(n_s, k_s)` codes
/// with `k_s < n_s <= 20` and `k_s <= 10`, ascending.
pub fn p0_grid() -> Vec<GridP0> {
    // p0 = 1 - ones / (n 2^k); compared exactly as fractions.
    let mut seen: Vec<(u128, u128, GridP0)> = Vec::new();
    for n in 2..=MAX_NS {
        for k in 1..n.min(MAX_KS + 1) {
            let num = codebook_ones(n, k) as u128;
            let den = (n as u128) << k;
            match seen.iter_mut().find(|(a, b, _)| *a * den == num * *b) {
                Some((_, _, p)) => p.codes.push((n, k)),
                None => {
                    let p0 = 1.0 - num as f64 / den as f64;
                    seen.push((
                        num,
                        den,
                        GridP0 {
                            p0,
                            codes: vec![(n, k)],
                        },
                    ));
                }
            }
        }
    }
    let mut out: Vec<GridP0> = seen.into_iter().map(|(_, _, g)| g).collect();
    out.sort_by(|a, b| a.p0.total_cmp(&b.p0));
    out
}

/// Knobs of [`joint_optimize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOptions {
    pub gh_order: usize,
    /// Spacing of the internal signal-to-noise grid on which rates are
    /// tabulated before interpolation onto the requested Es/N0 grid.
    pub table_step_db: f64,
    /// Spacing of the rate grid on which gains are compared.
    pub rate_step: f64,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions {
            gh_order: GH_ORDER,
            table_step_db: 0.05,
            rate_step: 0.001,
        }
    }
}

/// Best shaped and uniform rates at one Es/N0.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub esn0_db: f64,
    pub uniform_bpcu: f64,
    /// Index into the radius ratio sets of the best uniform rate.
    pub uniform_gamma: usize,
    pub shaped_bpcu: f64,
    /// Maximizing bias; `None` when the uniform distribution wins.
    pub p0: Option<GridP0>,
    pub gamma: usize,
}

/// Shaping gain at one rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainPoint {
    pub rate: f64,
    pub gain_db: f64,
}

/// The operating point of largest shaping gain.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationRecord {
    pub order: usize,
    pub g: usize,
    pub rate: f64,
    pub ebn0_db: f64,
    pub gain_db: f64,
    pub p0: f64,
    pub source: Option<(usize, usize)>,
    pub gamma: Vec<f64>,
}

/// Full output of [`joint_optimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointOptimization {
    pub order: usize,
    pub g: usize,
    pub gammas: Vec<Vec<f64>>,
    pub sweep: Vec<SweepPoint>,
    pub gains: Vec<GainPoint>,
    pub best: OptimizationRecord,
}

/// Per-symbol probability of each shaping-prefix weight class.
fn class_probs(p0: f64, g: usize, m: usize) -> Vec<f64> {
    let spread = (1u64 << (m - g)) as f64;
    (0..=g)
        .map(|w| p0.powi((g - w) as i32) * (1.0 - p0).powi(w as i32) / spread)
        .collect()
}

/// Rates of every candidate bias for one radius set, on `esn0_db`.
fn rates_for_geometry(
    points: &[Complex64],
    class_of: &[usize],
    g: usize,
    m: usize,
    candidates: &[f64],
    esn0_db: &[f64],
    opts: &JointOptions,
    rule: &NoiseRule,
) -> Vec<Vec<f64>> {
    let qs: Vec<Vec<f64>> = candidates.iter().map(|&p0| class_probs(p0, g, m)).collect();
    // Unit-energy scaling under each bias is a shift of the SNR axis.
    let shifts: Vec<f64> = qs
        .iter()
        .map(|q| {
            let es: f64 = points
                .iter()
                .zip(class_of)
                .map(|(x, &c)| q[c] * x.norm_sqr())
                .sum();
            lin_to_db(es)
        })
        .collect();
    let lo_es = esn0_db.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_es = esn0_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo_shift = shifts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_shift = shifts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let step = opts.table_step_db;
    let k_lo = (-hi_shift / step).floor() as i64 - 1;
    let k_hi = ((hi_es - lo_shift - lo_es) / step).ceil() as i64 + 1;
    let rho_db: Vec<f64> = (k_lo..=k_hi).map(|k| lo_es + k as f64 * step).collect();
    let table: Vec<Vec<f64>> = rho_db
        .par_iter()
        .map(|&r| {
            let sums = ClassSums::new(points, class_of, g + 1, db_to_lin(r), rule);
            qs.iter()
                .map(|q| sums.rate(q, class_of, &rule.weights))
                .collect()
        })
        .collect();
    candidates
        .iter()
        .enumerate()
        .map(|(ci, _)| {
            esn0_db
                .iter()
                .map(|&es| {
                    let pos = (es - shifts[ci] - rho_db[0]) / step;
                    let i = (pos.floor() as usize).min(rho_db.len() - 2);
                    let t = pos - i as f64;
                    table[i][ci] * (1.0 - t) + table[i + 1][ci] * t
                })
                .collect()
        })
        .collect()
}

/// Es/N0 at which an increasing curve sampled on `esn0_db` reaches `rate`.
fn invert(esn0_db: &[f64], curve: &[f64], rate: f64) -> Option<f64> {
    let i = curve
        .windows(2)
        .position(|w| w[0] <= rate && rate <= w[1])?;
    let (a, b) = (curve[i], curve[i + 1]);
    let t = if b > a { (rate - a) / (b - a) } else { 0.0 };
    Some(esn0_db[i] + t * (esn0_db[i + 1] - esn0_db[i]))
}

/// Maximizes the rate of `order`-APSK with `g` shaping bits over every
/// permitted radius set and every bias in `p0s` (plus the uniform
/// distribution) at each Es/N0 of `esn0_db`, and reports the shaping gain
/// against the best uniform constellation as a function of rate.
pub fn joint_optimize(
    order: usize,
    g: usize,
    esn0_db: &[f64],
    p0s: &[GridP0],
    opts: &JointOptions,
) -> Result<JointOptimization> {
    if esn0_db.len() < 2 {
        return Err(Error::Config(
            "the Es/N0 grid needs at least two points".into(),
        ));
    }
    if esn0_db.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("the Es/N0 grid must be increasing".into()));
    }
    let m = order.trailing_zeros() as usize;
    let map = LabelMap::bundled(order, g)?;
    let strategy = ShapingStrategy::default_for(order, g, 0.75)?;
    let gammas = permitted_gammas(order);
    let mut candidates = vec![0.5];
    candidates.extend(p0s.iter().map(|p| p.p0));
    let rule = NoiseRule::new(opts.gh_order);

    // rates[gamma][candidate][snr]
    let mut rates = Vec::with_capacity(gammas.len());
    for gamma in &gammas {
        let c = build_apsk(order, gamma, &map, false)?;
        let class_of: Vec<usize> = (0..order)
            .map(|l| strategy.prefix_of(l, m).count_ones() as usize)
            .collect();
        rates.push(rates_for_geometry(
            c.points(),
            &class_of,
            g,
            m,
            &candidates,
            esn0_db,
            opts,
            &rule,
        ));
    }

    let sweep: Vec<SweepPoint> = (0..esn0_db.len())
        .map(|s| {
            let mut best = SweepPoint {
                esn0_db: esn0_db[s],
                uniform_bpcu: f64::NEG_INFINITY,
                uniform_gamma: 0,
                shaped_bpcu: f64::NEG_INFINITY,
                p0: None,
                gamma: 0,
            };
            for (gi, per_gamma) in rates.iter().enumerate() {
                if per_gamma[0][s] > best.uniform_bpcu {
                    best.uniform_bpcu = per_gamma[0][s];
                    best.uniform_gamma = gi;
                }
                for (ci, curve) in per_gamma.iter().enumerate() {
                    if curve[s] > best.shaped_bpcu {
                        best.shaped_bpcu = curve[s];
                        best.p0 = ci.checked_sub(1).map(|i| p0s[i].clone());
                        best.gamma = gi;
                    }
                }
            }
            best
        })
        .collect();

    let uniform: Vec<f64> = sweep.iter().map(|p| p.uniform_bpcu).collect();
    let shaped: Vec<f64> = sweep.iter().map(|p| p.shaped_bpcu).collect();
    let r_lo = uniform[0].max(shaped[0]);
    let r_hi = uniform[uniform.len() - 1].min(shaped[shaped.len() - 1]);
    let n_rates = ((r_hi - r_lo) / opts.rate_step).floor().max(0.0) as usize;
    let gains: Vec<GainPoint> = (0..=n_rates)
        .filter_map(|i| {
            let rate = r_lo + i as f64 * opts.rate_step;
            let su = invert(esn0_db, &uniform, rate)?;
            let ss = invert(esn0_db, &shaped, rate)?;
            Some(GainPoint {
                rate,
                gain_db: su - ss,
            })
        })
        .collect();
    let top = gains
        .iter()
        .copied()
        .fold(None, |acc: Option<GainPoint>, p| match acc {
            Some(a) if a.gain_db >= p.gain_db => Some(a),
            _ => Some(p),
        })
        .ok_or_else(|| Error::Config("shaped and uniform rate ranges do not overlap".into()))?;
    let es_best = invert(esn0_db, &shaped, top.rate).expect("rate inside the shaped range");
    let nearest = esn0_db
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - es_best).abs().total_cmp(&(b.1 - es_best).abs()))
        .map(|(i, _)| i)
        .expect("nonempty grid");
    let at = &sweep[nearest];
    let best = OptimizationRecord {
        order,
        g,
        rate: top.rate,
        ebn0_db: es_best - lin_to_db(top.rate),
        gain_db: top.gain_db,
        p0: at.p0.as_ref().map_or(0.5, |p| p.p0),
        source: at.p0.as_ref().map(GridP0::code),
        gamma: gammas[at.gamma].clone(),
    };
    Ok(JointOptimization {
        order,
        g,
        gammas,
        sweep,
        gains,
        best,
    })
}

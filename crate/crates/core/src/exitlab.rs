//! EXIT-chart tools: the J-function, detector, variable-node and check-node
//! transfer curves, convergence thresholds and variable-degree search.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::{db_to_lin, substream};
use crate::constellation::{label_bit, Constellation};
use crate::demod::{DemapMode, Demapper};
use crate::error::{Error, Result};
use crate::ldpc::DegreeDistribution;
use crate::llr::mi_loss;
use crate::shaping::ShapingCode;

/// Largest tabulated J-function argument.
pub const SIGMA_MAX: f64 = 30.0;
const SIGMA_STEP: f64 = 1e-3;

/// Convergence target of the threshold search.
pub const I_STAR: f64 = 0.9999;

/// Widest bootstrap confidence interval accepted for a detector point.
pub const MAX_CI_WIDTH: f64 = 0.005;

/// Default number of label bits simulated per detector point.
pub const DEFAULT_SAMPLES: usize = 200_000;

/// Mutual information of a consistent Gaussian LLR with standard deviation
/// `sigma`, by direct numerical integration.
pub fn j_integral(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    let rule = RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(8).expect("nonzero")));
    let mean = 0.5 * sigma * sigma;
    let panels = 64;
    let (lo, hi) = (-12.0, 12.0);
    let width = (hi - lo) / panels as f64;
    let norm = (2.0 * std::f64::consts::PI).sqrt().recip();
    let loss: f64 = (0..panels)
        .map(|p| {
            let a = lo + p as f64 * width;
            rule.integrate(a, a + width, |t| {
                let l = mean + sigma * t;
                norm * (-0.5 * t * t).exp() * mi_loss(l, 0)
            })
        })
        .sum();
    1.0 - loss
}

fn j_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = (SIGMA_MAX / SIGMA_STEP).round() as usize;
        let mut t: Vec<f64> = (0..=n)
            .into_par_iter()
            .map(|i| j_integral(i as f64 * SIGMA_STEP))
            .collect();
        // Force strict monotonicity where the integral rounds flat near 1.
        for i in 1..t.len() {
            if t[i] <= t[i - 1] {
                t[i] = t[i - 1] + f64::EPSILON;
            }
        }
        t
    })
}

/// The J-function, interpolated from a table at `1e-3` spacing in sigma.
pub fn j_function(sigma: f64) -> f64 {
    let t = j_table();
    if sigma <= 0.0 {
        return 0.0;
    }
    let pos = sigma / SIGMA_STEP;
    let i = pos.floor() as usize;
    if i + 1 >= t.len() {
        return t[t.len() - 1].min(1.0);
    }
    let f = pos - i as f64;
    (t[i] * (1.0 - f) + t[i + 1] * f).min(1.0)
}

/// Inverse of [`j_function`], clamped to `[0, SIGMA_MAX]`.
pub fn j_inverse(i: f64) -> f64 {
    let t = j_table();
    if i <= 0.0 {
        return 0.0;
    }
    if i >= t[t.len() - 1] {
        return SIGMA_MAX;
    }
    let k = t.partition_point(|&v| v <= i);
    let (a, b) = (t[k - 1], t[k]);
    ((k - 1) as f64 + (i - a) / (b - a)) * SIGMA_STEP
}

/// What a transfer curve describes.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind {
    Detector,
    Vnd(DegreeDistribution),
    Cnd { dc: usize },
}

impl CurveKind {
    pub fn label(&self) -> String {
        match self {
            CurveKind::Detector => "detector".into(),
            CurveKind::Vnd(d) => {
                let parts: Vec<String> =
                    d.dv.iter()
                        .zip(&d.a)
                        .map(|(dv, a)| format!("{dv}:{a}"))
                        .collect();
                format!("vnd[{}]", parts.join(" "))
            }
            CurveKind::Cnd { dc } => format!("cnd[{dc}]"),
        }
    }
}

/// Extrinsic information `ie[i]` for a priori information `ia[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitCurve {
    pub kind: CurveKind,
    pub esn0_db: Option<f64>,
    pub ia: Vec<f64>,
    pub ie: Vec<f64>,
    /// Bootstrap 95% interval half-widths of simulated points; empty otherwise.
    pub ci_width: Vec<f64>,
}

impl ExitCurve {
    /// Linear interpolation in `ia`.
    pub fn at(&self, x: f64) -> f64 {
        interp(&self.ia, &self.ie, x)
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let k = xs.partition_point(|&v| v < x);
    if k >= xs.len() {
        return ys[ys.len() - 1];
    }
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

/// `n` evenly spaced a priori values on `[0, 1]`.
pub fn ia_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Check-node transfer curve of degree `dc`.
pub fn cnd_curve(dc: usize, ia: &[f64]) -> ExitCurve {
    let s = ((dc - 1) as f64).sqrt();
    ExitCurve {
        kind: CurveKind::Cnd { dc },
        esn0_db: None,
        ia: ia.to_vec(),
        ie: ia.iter().map(|&x| cnd_value(s, x)).collect(),
        ci_width: Vec::new(),
    }
}

fn cnd_value(sqrt_dc1: f64, x: f64) -> f64 {
    1.0 - j_function(sqrt_dc1 * j_inverse(1.0 - x))
}

/// Variable-node transfer of one degree `dv` given the detector output.
pub fn vnd_value(dv: usize, ia: f64, ie_det: f64) -> f64 {
    let sa = j_inverse(ia);
    let sd = j_inverse(ie_det);
    j_function(((dv as f64 - 1.0) * sa * sa + sd * sd).sqrt())
}

/// Variable-node curve of `dist` on the detector's grid, mixing the
/// per-degree curves by edge fraction.
pub fn vnd_curve(det: &ExitCurve, dist: &DegreeDistribution) -> ExitCurve {
    let b = dist.edge_fractions();
    let ie = det
        .ia
        .iter()
        .zip(&det.ie)
        .map(|(&x, &d)| {
            dist.dv
                .iter()
                .zip(&b)
                .map(|(&dv, &bi)| bi * vnd_value(dv, x, d))
                .sum()
        })
        .collect();
    ExitCurve {
        kind: CurveKind::Vnd(dist.clone()),
        esn0_db: det.esn0_db,
        ia: det.ia.clone(),
        ie,
        ci_width: Vec::new(),
    }
}

/// The modulation seen by the LDPC code: a demapper, optionally preceded
/// by a shaping code on the strategy's shaping bits.
#[derive(Debug, Clone)]
pub struct DetectorModel {
    constellation: Constellation,
    shaping: Option<ShapingCode>,
    /// Demap/shaping-decode rounds per detector pass.
    pub passes: usize,
}

impl DetectorModel {
    pub fn uniform(constellation: Constellation) -> Self {
        DetectorModel {
            constellation,
            shaping: None,
            passes: 1,
        }
    }

    pub fn shaped(constellation: Constellation, code: ShapingCode) -> Result<Self> {
        if constellation.shaping_bits() == 0 {
            return Err(Error::Config("shaped detector needs shaping bits".into()));
        }
        if (constellation.strategy().p0 - code.p0()).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "strategy p0 {} differs from the shaping code's {}",
                constellation.strategy().p0,
                code.p0()
            )));
        }
        Ok(DetectorModel {
            constellation,
            shaping: Some(code),
            passes: 1,
        })
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn shaping(&self) -> Option<&ShapingCode> {
        self.shaping.as_ref()
    }

    /// Code bits carried per channel symbol.
    pub fn bits_per_symbol(&self) -> f64 {
        let m = self.constellation.bits_per_symbol() as f64;
        match &self.shaping {
            None => m,
            Some(c) => {
                let g = self.constellation.shaping_bits() as f64;
                m - g + g * c.rate()
            }
        }
    }

    /// One detector pass on fresh random data: returns the code bits `v`
    /// and their extrinsic LLRs given a priori LLRs of deviation `sigma_a`.
    fn run(
        &self,
        demapper: &Demapper,
        n0: f64,
        sigma_a: f64,
        n_bits: usize,
        rng: &mut ChaCha8Rng,
    ) -> (Vec<u8>, Vec<f64>) {
        let c = &self.constellation;
        let m = c.bits_per_symbol();
        let strategy = c.strategy();
        let g = strategy.g;
        let unshaped: Vec<usize> = (0..m)
            .filter(|p| !strategy.bit_positions.contains(p))
            .collect();
        let prior = |b: u8, rng: &mut ChaCha8Rng| -> f64 {
            let z: f64 = rng.sample(StandardNormal);
            let mean = 0.5 * sigma_a * sigma_a;
            (if b == 0 { mean } else { -mean }) + sigma_a * z
        };
        let sqrt_half_n0 = (0.5 * n0).sqrt();
        let noisy = |x: Complex64, rng: &mut ChaCha8Rng| -> Complex64 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            x + Complex64::new(re, im) * sqrt_half_n0
        };

        match &self.shaping {
            None => {
                let n_sym = n_bits.div_ceil(m);
                let mut v = Vec::with_capacity(n_sym * m);
                let mut la = Vec::with_capacity(n_sym * m);
                let mut ys = Vec::with_capacity(n_sym);
                for _ in 0..n_sym {
                    let label = (rng.next_u32() as usize) & ((1 << m) - 1);
                    for p in 0..m {
                        let b = label_bit(label, p, m);
                        v.push(b);
                        la.push(prior(b, rng));
                    }
                    ys.push(noisy(c.point(label), rng));
                }
                let mut le = vec![0.0; la.len()];
                demapper.demap_block(&ys, n0, &la, &mut le);
                (v, le)
            }
            Some(code) => {
                let (n_s, k_s) = (code.n_s(), code.k_s());
                // Blocks per group so that the shaping bits fill whole symbols.
                let per_group = g / gcd(g, n_s);
                let bits_per_group = per_group * (k_s + n_s / g * (m - g));
                let groups = n_bits.div_ceil(bits_per_group).max(1);
                let n_blocks = groups * per_group;
                let n_sym = n_blocks * n_s / g;
                let d: Vec<u8> = (0..n_blocks * k_s)
                    .map(|_| (rng.next_u32() & 1) as u8)
                    .collect();
                let s2: Vec<u8> = (0..n_sym * (m - g))
                    .map(|_| (rng.next_u32() & 1) as u8)
                    .collect();
                let s1 = code.encode_blocks(&d).expect("whole blocks");
                let la_d: Vec<f64> = d.iter().map(|&b| prior(b, rng)).collect();
                let la_s2: Vec<f64> = s2.iter().map(|&b| prior(b, rng)).collect();
                let mut ys = Vec::with_capacity(n_sym);
                for i in 0..n_sym {
                    let mut label = 0usize;
                    for (j, &p) in strategy.bit_positions.iter().enumerate() {
                        label |= (s1[i * g + j] as usize) << (m - 1 - p);
                    }
                    for (j, &p) in unshaped.iter().enumerate() {
                        label |= (s2[i * (m - g) + j] as usize) << (m - 1 - p);
                    }
                    ys.push(noisy(c.point(label), rng));
                }
                let mut la_c = vec![0.0; n_blocks * n_s];
                let mut la_z = vec![0.0; n_sym * m];
                let mut le_z = vec![0.0; n_sym * m];
                let mut le_s2 = vec![0.0; s2.len()];
                for _ in 0..self.passes.max(1) {
                    let la_s1 = code.decode_codeword_blocks(&la_c, &la_d);
                    for i in 0..n_sym {
                        for (j, &p) in strategy.bit_positions.iter().enumerate() {
                            la_z[i * m + p] = la_s1[i * g + j];
                        }
                        for (j, &p) in unshaped.iter().enumerate() {
                            la_z[i * m + p] = la_s2[i * (m - g) + j];
                        }
                    }
                    demapper.demap_block(&ys, n0, &la_z, &mut le_z);
                    for i in 0..n_sym {
                        for (j, &p) in strategy.bit_positions.iter().enumerate() {
                            la_c[i * g + j] = le_z[i * m + p];
                        }
                        for (j, &p) in unshaped.iter().enumerate() {
                            le_s2[i * (m - g) + j] = le_z[i * m + p];
                        }
                    }
                }
                let le_d = code.decode_message_blocks(&la_c, &la_d);
                let mut v = d;
                v.extend_from_slice(&s2);
                let mut le = le_d;
                le.extend_from_slice(&le_s2);
                (v, le)
            }
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Mutual information from per-bit losses and the half-width of its
/// bootstrap 95% interval over contiguous batches.
fn mi_with_ci(losses: &[f64], seed: u64) -> (f64, f64) {
    let n = losses.len();
    let mi = 1.0 - losses.iter().sum::<f64>() / n as f64;
    let n_batches = 100.min(n);
    let size = n / n_batches;
    let means: Vec<f64> = (0..n_batches)
        .map(|b| losses[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let mut rng = substream(seed, u64::MAX);
    let mut boot: Vec<f64> = (0..1000)
        .map(|_| {
            (0..n_batches)
                .map(|_| means[rng.random_range(0..n_batches)])
                .sum::<f64>()
                / n_batches as f64
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    (mi, 0.5 * (boot[974] - boot[25]))
}

/// Simulated detector characteristic at `esn0_db`: for each a priori
/// level, `n_bits` code bits are sent through the model with consistent
/// Gaussian priors and the extrinsic information is measured. Point `i`
/// uses substream `i` of `seed`, so curves at different SNRs share their
/// random draws.
pub fn detector_characteristic(
    model: &DetectorModel,
    esn0_db: f64,
    ia: &[f64],
    n_bits: usize,
    seed: u64,
) -> ExitCurve {
    let demapper = Demapper::new(&model.constellation, DemapMode::Exact);
    let n0 = 1.0 / db_to_lin(esn0_db);
    let points: Vec<(f64, f64)> = ia
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut rng = substream(seed, i as u64);
            let sigma_a = j_inverse(x);
            let (v, le) = model.run(&demapper, n0, sigma_a, n_bits, &mut rng);
            let losses: Vec<f64> = le.iter().zip(&v).map(|(&l, &b)| mi_loss(l, b)).collect();
            mi_with_ci(&losses, seed ^ i as u64)
        })
        .collect();
    ExitCurve {
        kind: CurveKind::Detector,
        esn0_db: Some(esn0_db),
        ia: ia.to_vec(),
        ie: points.iter().map(|p| p.0.clamp(0.0, 1.0)).collect(),
        ci_width: points.iter().map(|p| p.1).collect(),
    }
}

/// Fails when any simulated point of `curve` is less precise than
/// [`MAX_CI_WIDTH`].
pub fn check_precision(curve: &ExitCurve) -> Result<()> {
    for (&x, &w) in curve.ia.iter().zip(&curve.ci_width) {
        if w > MAX_CI_WIDTH {
            return Err(Error::InsufficientSamples { ia: x, width: w });
        }
    }
    Ok(())
}

/// Detector characteristics on an increasing Es/N0 grid, interpolated
/// linearly in between.
#[derive(Debug, Clone)]
pub struct DetectorTable {
    pub curves: Vec<ExitCurve>,
    /// Code bits per channel symbol, for Es/N0 to Eb/N0 conversion.
    pub bits_per_symbol: f64,
}

impl DetectorTable {
    pub fn simulate(
        model: &DetectorModel,
        esn0_db: &[f64],
        ia: &[f64],
        n_bits: usize,
        seed: u64,
    ) -> Self {
        DetectorTable {
            curves: esn0_db
                .iter()
                .map(|&es| detector_characteristic(model, es, ia, n_bits, seed))
                .collect(),
            bits_per_symbol: model.bits_per_symbol(),
        }
    }

    /// Binary antipodal signalling over AWGN: the detector output does not
    /// depend on the a priori input.
    pub fn biawgn(esn0_db: &[f64], ia: &[f64]) -> Self {
        DetectorTable {
            curves: esn0_db
                .iter()
                .map(|&es| {
                    let ie = j_function((8.0 * db_to_lin(es)).sqrt());
                    ExitCurve {
                        kind: CurveKind::Detector,
                        esn0_db: Some(es),
                        ia: ia.to_vec(),
                        ie: vec![ie; ia.len()],
                        ci_width: Vec::new(),
                    }
                })
                .collect(),
            bits_per_symbol: 1.0,
        }
    }

    pub fn esn0_range(&self) -> (f64, f64) {
        let es = |c: &ExitCurve| c.esn0_db.expect("detector curves carry an SNR");
        (es(&self.curves[0]), es(&self.curves[self.curves.len() - 1]))
    }

    /// Detector curve at `esn0_db`, interpolated between tabulated SNRs.
    pub fn at(&self, esn0_db: f64) -> ExitCurve {
        if self.curves.len() == 1 {
            return ExitCurve {
                esn0_db: Some(esn0_db),
                ci_width: Vec::new(),
                ..self.curves[0].clone()
            };
        }
        let es: Vec<f64> = self
            .curves
            .iter()
            .map(|c| c.esn0_db.expect("SNR"))
            .collect();
        let k = es.partition_point(|&v| v < esn0_db).clamp(1, es.len() - 1);
        let t = ((esn0_db - es[k - 1]) / (es[k] - es[k - 1])).clamp(0.0, 1.0);
        let (a, b) = (&self.curves[k - 1], &self.curves[k]);
        ExitCurve {
            kind: CurveKind::Detector,
            esn0_db: Some(esn0_db),
            ia: a.ia.clone(),
            ie: a
                .ie
                .iter()
                .zip(&b.ie)
                .map(|(x, y)| x + t * (y - x))
                .collect(),
            ci_width: Vec::new(),
        }
    }
}

/// Resolution of the a priori axis when checking for an open tunnel.
const TUNNEL_POINTS: usize = 1000;

/// Whether the decoding tunnel of `dist` is open at `esn0_db`: the check
/// node maps every variable-node output back above its input for all
/// a priori levels below [`I_STAR`].
pub fn tunnel_open(table: &DetectorTable, dist: &DegreeDistribution, esn0_db: f64) -> bool {
    let vnd = vnd_curve(&table.at(esn0_db), dist);
    let s = ((dist.dc - 1) as f64).sqrt();
    (0..=TUNNEL_POINTS).all(|i| {
        let x = I_STAR * i as f64 / TUNNEL_POINTS as f64;
        cnd_value(s, vnd.at(x)) > x
    })
}

/// Smallest Es/N0 in dB, to 0.01 dB, at which the tunnel of `dist` opens.
pub fn threshold_search(table: &DetectorTable, dist: &DegreeDistribution) -> Result<f64> {
    let (mut lo, mut hi) = table.esn0_range();
    if !tunnel_open(table, dist, hi) {
        return Err(Error::TunnelClosed { hi_db: hi });
    }
    if tunnel_open(table, dist, lo) {
        return Err(Error::NotBracketed { lo, hi });
    }
    while hi - lo > 0.01 {
        let mid = 0.5 * (lo + hi);
        if tunnel_open(table, dist, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Candidate degree pairs for three-degree eIRA profiles: degree 2 on the
/// parity part, `dv2` from a set, `dv3` up to a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSearchSpace {
    pub dv2: Vec<usize>,
    pub dv3_max: usize,
}

impl Default for DegreeSearchSpace {
    fn default() -> Self {
        DegreeSearchSpace {
            dv2: vec![3, 4],
            dv3_max: 25,
        }
    }
}

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub dv2: usize,
    pub dv3: usize,
    pub a2: f64,
    pub a3: f64,
    /// Es/N0 threshold in dB; `None` when the tunnel stays closed.
    pub threshold_db: Option<f64>,
}

/// The profile `{2, dv2, dv3}` of rate `rate` and check degree `dc` with
/// `a1 = 1 - rate`, if the edge balance leaves both other fractions
/// positive.
pub fn eira_profile(rate: f64, dc: usize, dv2: usize, dv3: usize) -> Option<DegreeDistribution> {
    if dv2 <= 2 || dv3 <= dv2 {
        return None;
    }
    let a1 = 1.0 - rate;
    // a2 dv2 + a3 dv3 = (1 - rate)(dc - 2), a2 + a3 = rate
    let a3 = (a1 * (dc as f64 - 2.0) - rate * dv2 as f64) / (dv3 - dv2) as f64;
    let a2 = rate - a3;
    if a2 <= 0.0 || a3 <= 0.0 {
        return None;
    }
    DegreeDistribution::new(vec![2, dv2, dv3], vec![a1, a2, a3], dc).ok()
}

/// Scans the search space and returns the profile with the lowest
/// threshold, with every candidate's report.
pub fn optimize_degrees(
    table: &DetectorTable,
    rate: f64,
    dc: usize,
    space: &DegreeSearchSpace,
) -> Result<(DegreeDistribution, Vec<SearchReport>)> {
    let candidates: Vec<(usize, usize, DegreeDistribution)> = space
        .dv2
        .iter()
        .flat_map(|&d2| ((d2 + 1)..=space.dv3_max).map(move |d3| (d2, d3)))
        .filter_map(|(d2, d3)| eira_profile(rate, dc, d2, d3).map(|d| (d2, d3, d)))
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoFeasibleDistribution);
    }
    let reports: Vec<SearchReport> = candidates
        .par_iter()
        .map(|(d2, d3, dist)| SearchReport {
            dv2: *d2,
            dv3: *d3,
            a2: dist.a[1],
            a3: dist.a[2],
            threshold_db: threshold_search(table, dist).ok(),
        })
        .collect();
    let best = reports
        .iter()
        .zip(&candidates)
        .filter_map(|(r, c)| r.threshold_db.map(|t| (t, &c.2)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, d)| d.clone())
        .ok_or(Error::NoFeasibleDistribution)?;
    Ok((best, reports))
}

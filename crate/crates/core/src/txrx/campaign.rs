use rayon::prelude::*;

use super::{receive_traced, transmit_random, SystemConfig};
use crate::channel::{add_noise, convert_snr, substream, SnrSpec};

/// When to stop simulating one SNR point. Checked after every batch of
/// `batch` frames, so results do not depend on the worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub max_frames: usize,
    pub max_bit_errors: usize,
    pub max_frame_errors: Option<usize>,
    pub batch: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_frames: 10_000,
            max_bit_errors: 100,
            max_frame_errors: None,
            batch: 8,
        }
    }
}

/// Monte Carlo estimate at one SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignPoint {
    pub ebn0_db: f64,
    pub esn0_db: f64,
    pub frames: usize,
    pub bit_errors: usize,
    pub frame_errors: usize,
    pub ber: f64,
    pub fer: f64,
    pub mean_iters: f64,
}

/// Simulates frames at each Eb/N0 in `ebn0_db` until the stop rule fires.
/// Frame `f` of point `p` draws its data and noise from substream
/// `(p << 32) | f` of `seed`.
pub fn ber_campaign(
    cfg: &SystemConfig,
    ebn0_db: &[f64],
    stop: &StopRule,
    seed: u64,
) -> Vec<CampaignPoint> {
    ebn0_db
        .iter()
        .enumerate()
        .map(|(p, &eb)| simulate_point(cfg, eb, stop, seed, p as u64))
        .collect()
}

/// Points visited by [`ber_crossing`] and the interpolated Eb/N0 where the
/// BER falls to the target, if it did.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub points: Vec<CampaignPoint>,
    pub ebn0_db: Option<f64>,
}

/// Steps Eb/N0 upward from `start_db` by `step_db` until the BER drops
/// below `target`, then interpolates linearly in log BER between the last
/// two points. A point with no errors counts as half an error. Returns no
/// crossing if the first point is already below the target or `max_points`
/// are exhausted. Point `k` uses the substreams of campaign point `k`.
pub fn ber_crossing(
    cfg: &SystemConfig,
    start_db: f64,
    step_db: f64,
    target: f64,
    max_points: usize,
    stop: &StopRule,
    seed: u64,
) -> Crossing {
    let mut points: Vec<CampaignPoint> = Vec::new();
    for k in 0..max_points {
        let eb = start_db + k as f64 * step_db;
        let pt = simulate_point(cfg, eb, stop, seed, k as u64);
        points.push(pt);
        if pt.ber >= target {
            continue;
        }
        let ebn0_db = points.len().checked_sub(2).map(|i| {
            let prev = &points[i];
            let floor =
                |p: &CampaignPoint| p.ber.max(0.5 / (p.frames * cfg.lengths().k_c) as f64).ln();
            let (l0, l1) = (floor(prev), floor(&pt));
            prev.ebn0_db + (target.ln() - l0) / (l1 - l0) * (pt.ebn0_db - prev.ebn0_db)
        });
        return Crossing { points, ebn0_db };
    }
    Crossing {
        points,
        ebn0_db: None,
    }
}

fn simulate_point(
    cfg: &SystemConfig,
    eb: f64,
    stop: &StopRule,
    seed: u64,
    p: u64,
) -> CampaignPoint {
    let batch = stop.batch.max(1);
    let (es, _) = convert_snr(&SnrSpec::eb(eb, cfg.rate()));
    let n0 = SnrSpec::es(es, cfg.rate()).n0();
    let mut frames = 0usize;
    let mut bit_errors = 0usize;
    let mut frame_errors = 0usize;
    let mut iters = 0usize;
    while frames < stop.max_frames
        && bit_errors < stop.max_bit_errors
        && stop.max_frame_errors.is_none_or(|f| frame_errors < f)
    {
        let count = batch.min(stop.max_frames - frames);
        let results: Vec<(usize, usize)> = (frames..frames + count)
            .into_par_iter()
            .map(|f| {
                let mut rng = substream(seed, (p << 32) | f as u64);
                let tx = transmit_random(cfg, &mut rng);
                let mut y = tx.symbols.clone();
                add_noise(&mut y, n0, &mut rng);
                let r = receive_traced(cfg, &y, n0, &tx.info, None);
                (r.bit_errors, r.iterations)
            })
            .collect();
        for (e, it) in results {
            bit_errors += e;
            frame_errors += usize::from(e > 0);
            iters += it;
        }
        frames += count;
    }
    CampaignPoint {
        ebn0_db: eb,
        esn0_db: es,
        frames,
        bit_errors,
        frame_errors,
        ber: bit_errors as f64 / (frames * cfg.lengths().k_c) as f64,
        fer: frame_errors as f64 / frames as f64,
        mean_iters: iters as f64 / frames as f64,
    }
}

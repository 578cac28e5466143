//! Complex AWGN channel, SNR bookkeeping and seeded random substreams.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Whether an SNR value is per symbol or per information bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrMode {
    EsN0,
    EbN0,
}

/// An SNR in dB together with the rate (bits per symbol) that relates the
/// symbol and bit forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSpec {
    pub mode: SnrMode,
    pub db: f64,
    pub rate: f64,
}

impl SnrSpec {
    pub fn es(db: f64, rate: f64) -> Self {
        SnrSpec {
            mode: SnrMode::EsN0,
            db,
            rate,
        }
    }

    pub fn eb(db: f64, rate: f64) -> Self {
        SnrSpec {
            mode: SnrMode::EbN0,
            db,
            rate,
        }
    }

    /// `(Es/N0, Eb/N0)` in dB.
    pub fn both_db(&self) -> (f64, f64) {
        convert_snr(self)
    }

    /// Noise density for a unit-energy constellation.
    pub fn n0(&self) -> f64 {
        db_to_lin(-self.both_db().0)
    }
}

/// Returns `(Es/N0, Eb/N0)` in dB, related by `Es/N0 = Eb/N0 + 10 log10 R`.
pub fn convert_snr(spec: &SnrSpec) -> (f64, f64) {
    assert!(spec.rate > 0.0, "rate must be positive");
    let offset = 10.0 * spec.rate.log10();
    match spec.mode {
        SnrMode::EsN0 => (spec.db, spec.db - offset),
        SnrMode::EbN0 => (spec.db + offset, spec.db),
    }
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Random generator for substream `stream` of a root seed. Substreams are
/// independent and cheap to create, so each frame or grid point can own one
/// regardless of which worker runs it.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Adds circularly symmetric Gaussian noise of total power `n0` in place.
pub fn add_noise<R: Rng + ?Sized>(samples: &mut [Complex64], n0: f64, rng: &mut R) {
    if n0 == 0.0 {
        return;
    }
    let sigma = (n0 / 2.0).sqrt();
    for s in samples {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Complex64::new(sigma * re, sigma * im);
    }
}

/// `y = x + n` for a unit-energy constellation at linear Es/N0 `esn0`.
pub fn transmit_awgn(x: &[Complex64], esn0: f64, seed: u64) -> Vec<Complex64> {
    assert!(esn0 > 0.0, "Es/N0 must be positive");
    let mut y = x.to_vec();
    add_noise(&mut y, esn0.recip(), &mut substream(seed, 0));
    y
}

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

/// One experiment's settings, read from a TOML file and overridden by
/// command-line flags. Unset values fall back to per-command defaults.
#[derive(Args, Serialize, Deserialize, Default, Clone, Debug, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Root seed for every random draw.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Constellation order M (16 or 32).
    #[arg(long = "m", visible_alias = "order")]
    #[serde(alias = "m")]
    pub order: Option<usize>,
    /// Shaping bits per symbol.
    #[arg(long)]
    pub g: Option<usize>,
    /// Index into the DVB-S2 radius-ratio sets of the order.
    #[arg(long)]
    pub gamma: Option<usize>,
    /// Explicit radius ratios, comma separated; needs `allow_any_gamma`.
    #[arg(long, value_delimiter = ',')]
    pub gamma_values: Option<Vec<f64>>,
    /// Accept radius ratios outside the DVB-S2 sets.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub allow_any_gamma: Option<bool>,
    /// Shaping code length.
    #[arg(long)]
    pub ns: Option<usize>,
    /// Shaping code dimension.
    #[arg(long)]
    pub ks: Option<usize>,
    /// Shaping-bit zero probability, instead of a shaping code.
    #[arg(long)]
    pub p0: Option<f64>,
    /// Target rate: bits/symbol for `capacity`, LDPC rate for `design-ldpc`.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Preset system for `exit`, `design-ldpc`, `ber` and `iters`.
    #[arg(long)]
    pub system: Option<String>,
    /// LDPC code in alist format, replacing the built code.
    #[arg(long)]
    pub alist: Option<PathBuf>,
    /// Variable-node degrees of a custom LDPC profile.
    #[arg(long, value_delimiter = ',')]
    pub degrees: Option<Vec<usize>>,
    /// Node fractions of the custom profile.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    /// Check-node degree.
    #[arg(long)]
    pub dc: Option<usize>,
    /// Target LDPC codeword length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Iteration limit of the receiver.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// SNR grid in dB: `start:stop:step` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    #[arg(long)]
    pub max_frames: Option<usize>,
    #[arg(long)]
    pub max_bit_errors: Option<usize>,
    #[arg(long)]
    pub max_frame_errors: Option<usize>,
    /// Code bits per detector-characteristic point.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Number of a priori points on [0, 1].
    #[arg(long)]
    pub ia_points: Option<usize>,
    /// `quadrature` or `monte-carlo`.
    #[arg(long)]
    pub method: Option<String>,
    /// Gauss-Hermite nodes per dimension.
    #[arg(long)]
    pub gh_order: Option<usize>,
    /// Samples per rate for the Monte Carlo method.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    /// Directory receiving the CSV and manifest files.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Failure::Invalid(format!("config {}: {e}", path.display())))
    }

    /// Values set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &Settings) -> Self {
        overlay!(
            self,
            top,
            seed,
            order,
            g,
            gamma,
            gamma_values,
            allow_any_gamma,
            ns,
            ks,
            p0,
            rate,
            system,
            alist,
            degrees,
            fractions,
            dc,
            n,
            max_iters,
            snr,
            max_frames,
            max_bit_errors,
            max_frame_errors,
            samples,
            ia_points,
            method,
            gh_order,
            mc_samples,
            threads,
            out_dir
        );
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Canonical TOML of the effective settings.
    pub fn canonical(&self, command: &str) -> String {
        #[derive(Serialize)]
        struct Tagged<'a> {
            command: &'a str,
            #[serde(flatten)]
            settings: &'a Settings,
        }
        toml::to_string(&Tagged {
            command,
            settings: self,
        })
        .expect("settings serialize")
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self, command: &str) -> String {
        let digest = Sha256::digest(self.canonical(command).as_bytes());
        let mut out = String::new();
        for b in &digest[..8] {
            write!(out, "{b:02x}").expect("string write");
        }
        out
    }
}

/// Parses `start:stop:step` or a comma-separated list of SNRs in dB.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let text = text.trim();
    let bad = |why: &str| Failure::Invalid(format!("SNR grid {text:?}: {why}"));
    if text.is_empty() {
        return Err(bad("empty grid"));
    }
    let grid: Vec<f64> = if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("expected numbers"))?;
        let [start, stop, step] = parts[..] else {
            return Err(bad("expected start:stop:step"));
        };
        if step <= 0.0 || stop < start {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect()
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("expected numbers"))?
    };
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(bad("non-finite value"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("values must increase"));
    }
    Ok(grid)
}

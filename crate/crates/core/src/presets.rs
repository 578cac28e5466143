//! Degree distributions and ready-made 32-APSK systems at 3 bits/symbol.

use crate::constellation::{build_apsk, LabelMap, ShapingStrategy, GAMMA_32};
use crate::error::Result;
use crate::ldpc::{build_eira, DegreeDistribution, LdpcCode};
use crate::shaping::build_shaping_code;
use crate::txrx::{Schedule, SystemConfig};

/// Check degree and variable-degree profile of the DVB-S2 rate-3/5 code.
pub fn standard_3_5() -> DegreeDistribution {
    DegreeDistribution::new(vec![2, 3, 12], vec![0.4, 0.4, 0.2], 11).expect("valid")
}

/// Check degree and variable-degree profile of the DVB-S2 rate-2/3 code.
pub fn standard_2_3() -> DegreeDistribution {
    DegreeDistribution::new(vec![2, 3, 13], vec![1.0 / 3.0, 0.6, 1.0 / 15.0], 10).expect("valid")
}

/// Rate-3/5 profile optimized for uniform 32-APSK.
pub fn optimized_3_5() -> DegreeDistribution {
    DegreeDistribution::new(vec![2, 4, 19], vec![0.40, 0.52, 0.08], 11).expect("valid")
}

/// Rate-2/3 profile optimized for 32-APSK shaped by the (4,2) code.
pub fn optimized_2_3() -> DegreeDistribution {
    DegreeDistribution::new(vec![2, 3, 14], vec![0.333, 0.606, 0.061], 10).expect("valid")
}

/// Rate-9/14 profile optimized for 32-APSK shaped by the (3,2) code.
pub fn optimized_9_14() -> DegreeDistribution {
    DegreeDistribution::new(vec![2, 3, 14], vec![0.357, 0.558, 0.085], 10).expect("valid")
}

/// The 32-APSK systems compared at 3 bits/symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    /// Uniform, standard-profile rate 3/5, no feedback.
    UniformBicm,
    /// Uniform, standard-profile rate 3/5, iterative demapping.
    UniformBicmId,
    /// Uniform, optimized rate 3/5, iterative demapping.
    UniformOptimized,
    /// (4,2) shaping, standard-profile rate 2/3.
    ShapedStandard,
    /// (4,2) shaping, optimized rate 2/3.
    ShapedOptimized,
    /// (3,2) shaping, optimized rate 9/14.
    ShapedOptimized914,
}

impl System {
    pub const ALL: [System; 6] = [
        System::UniformBicm,
        System::UniformBicmId,
        System::UniformOptimized,
        System::ShapedStandard,
        System::ShapedOptimized,
        System::ShapedOptimized914,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            System::UniformBicm => "uniform-bicm",
            System::UniformBicmId => "uniform-bicm-id",
            System::UniformOptimized => "uniform-optimized",
            System::ShapedStandard => "shaped-standard",
            System::ShapedOptimized => "shaped-optimized",
            System::ShapedOptimized914 => "shaped-optimized-9-14",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Shaping code `(n_s, k_s)`, if any.
    pub fn shaping_code(&self) -> Option<(usize, usize)> {
        match self {
            System::UniformBicm | System::UniformBicmId | System::UniformOptimized => None,
            System::ShapedStandard | System::ShapedOptimized => Some((4, 2)),
            System::ShapedOptimized914 => Some((3, 2)),
        }
    }

    pub fn degrees(&self) -> DegreeDistribution {
        match self {
            System::UniformBicm | System::UniformBicmId => standard_3_5(),
            System::UniformOptimized => optimized_3_5(),
            System::ShapedStandard => standard_2_3(),
            System::ShapedOptimized => optimized_2_3(),
            System::ShapedOptimized914 => optimized_9_14(),
        }
    }

    /// LDPC rate as a fraction `(num, den)`.
    pub fn ldpc_rate(&self) -> (usize, usize) {
        match self.shaping_code() {
            None => (3, 5),
            Some((4, 2)) => (2, 3),
            Some(_) => (9, 14),
        }
    }

    /// LDPC lengths compatible with the frame layout are multiples of this.
    pub fn length_step(&self, seed: u64) -> Result<usize> {
        let (_, den) = self.ldpc_rate();
        let block = match self.shaping_code() {
            Some((n, k)) => build_shaping_code(n, k, seed).map(|c| c.n_s() * 4 + c.k_s())?,
            None => 5,
        };
        Ok(lcm(den, block))
    }

    /// Builds the system with an LDPC length near `n_target`, chosen so the
    /// rate is exact and the frame fills whole symbols.
    pub fn build(&self, n_target: usize, max_iters: usize, seed: u64) -> Result<SystemConfig> {
        self.build_with_degrees(&self.degrees(), n_target, max_iters, seed)
    }

    /// As [`build`](Self::build) with a different degree distribution.
    pub fn build_with_degrees(
        &self,
        degrees: &DegreeDistribution,
        n_target: usize,
        max_iters: usize,
        seed: u64,
    ) -> Result<SystemConfig> {
        let (num, den) = self.ldpc_rate();
        let step = self.length_step(seed)?;
        let n_c = ((n_target + step / 2) / step).max(1) * step;
        let k_c = n_c / den * num;
        let ldpc = build_eira(n_c, k_c, degrees, seed)?;
        self.build_with(ldpc, max_iters, seed)
    }

    /// Assembles the system around a given LDPC code.
    pub fn build_with(&self, ldpc: LdpcCode, max_iters: usize, seed: u64) -> Result<SystemConfig> {
        let gamma = GAMMA_32[2];
        let (g, code) = match self.shaping_code() {
            None => (0, None),
            Some((n, k)) => (1, Some(build_shaping_code(n, k, seed)?)),
        };
        let map = LabelMap::bundled(32, g)?;
        let base = build_apsk(32, &gamma, &map, false)?;
        let constellation = match &code {
            Some(c) => base.with_strategy(&ShapingStrategy::default_for(32, 1, c.p0())?)?,
            None => base,
        };
        let schedule = Schedule {
            max_iters,
            feedback: *self != System::UniformBicm,
            ..Schedule::default()
        };
        SystemConfig::new(constellation, code, ldpc, schedule, seed)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

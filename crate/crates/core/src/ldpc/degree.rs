use crate::error::{Error, Result};

/// Variable-node degree distribution with a constant check degree.
/// `a[i]` is the fraction of variable nodes of degree `dv[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    pub dv: Vec<usize>,
    pub a: Vec<f64>,
    pub dc: usize,
}

impl DegreeDistribution {
    pub fn new(dv: Vec<usize>, a: Vec<f64>, dc: usize) -> Result<Self> {
        if dv.is_empty() || dv.len() != a.len() {
            return Err(Error::Degrees(
                "degrees and node fractions must have equal nonzero length".into(),
            ));
        }
        if dv.contains(&0) || dc < 2 {
            return Err(Error::Degrees(
                "degrees must be positive and dc >= 2".into(),
            ));
        }
        if dv.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Degrees("degrees must be strictly increasing".into()));
        }
        if a.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::Degrees("node fractions must lie in [0, 1]".into()));
        }
        let sum: f64 = a.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Degrees(format!("node fractions sum to {sum}")));
        }
        Ok(DegreeDistribution { dv, a, dc })
    }

    /// Average variable-node degree `Σ a_i d_i`.
    pub fn mean_dv(&self) -> f64 {
        self.dv
            .iter()
            .zip(&self.a)
            .map(|(&d, &a)| a * d as f64)
            .sum()
    }

    /// Edge fractions `b_i = a_i d_i / Σ a_j d_j`.
    pub fn edge_fractions(&self) -> Vec<f64> {
        let mean = self.mean_dv();
        self.dv
            .iter()
            .zip(&self.a)
            .map(|(&d, &a)| a * d as f64 / mean)
            .collect()
    }

    /// Code rate implied by edge balance, `1 - Σ a_i d_i / dc`.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.mean_dv() / self.dc as f64
    }

    /// Edge count mismatch `(Σ a_i d_i) n - dc (n - k)`.
    pub fn edge_mismatch(&self, n: usize, k: usize) -> f64 {
        self.mean_dv() * n as f64 - (self.dc * (n - k)) as f64
    }
}

//! Log-likelihood ratio conventions and helpers shared by every soft-in
//! soft-out block.
//!
//! An LLR is `ln P(bit = 0) / P(bit = 1)`: positive values favour zero.

/// Saturation bound applied to LLRs before they enter exponent-domain work.
pub const LLR_MAX: f64 = 50.0;

/// Clamps an LLR to `[-LLR_MAX, LLR_MAX]`. NaN maps to zero.
#[inline]
pub fn saturate(l: f64) -> f64 {
    if l.is_nan() {
        0.0
    } else {
        l.clamp(-LLR_MAX, LLR_MAX)
    }
}

/// The Jacobian logarithm `ln(e^a + e^b)`.
#[inline]
pub fn max_star(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    a.max(b) + (-(a - b).abs()).exp().ln_1p()
}

/// Left-to-right max-star chain. The empty chain is `-inf`.
pub fn max_star_chain<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    terms.into_iter().fold(f64::NEG_INFINITY, max_star)
}

/// `ln Σ e^t`, evaluated with a single max shift. Equal to
/// [`max_star_chain`] up to rounding but with one `exp` per term.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Hard decision: negative LLR means a one. Zero decides zero.
#[inline]
pub fn hard(l: f64) -> u8 {
    u8::from(l < 0.0)
}

/// Per-sample information loss `log2(1 + e^{-L (1 - 2b)})` used by the
/// time-averaging mutual information estimator.
#[inline]
pub fn mi_loss(l: f64, bit: u8) -> f64 {
    let signed = if bit == 0 { l } else { -l };
    softplus(-signed) / std::f64::consts::LN_2
}

/// Time-averaging estimate of the mutual information between known bits
/// and their LLRs, `1 - E[log2(1 + e^{-L (1 - 2b)})]`.
pub fn mutual_information(llrs: &[f64], bits: &[u8]) -> f64 {
    assert_eq!(llrs.len(), bits.len());
    if llrs.is_empty() {
        return 0.0;
    }
    let loss: f64 = llrs.iter().zip(bits).map(|(&l, &b)| mi_loss(l, b)).sum();
    1.0 - loss / llrs.len() as f64
}

/// Whether an LLR block is an a priori input or an extrinsic output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlrRole {
    APriori,
    Extrinsic,
}

/// The bit streams of the transmit chain, named after the vectors they
/// carry: LDPC codeword `u` and its interleaved form `v`, shaping message
/// `d`, unshaped `s2`, shaping codeword `c`, interleaved shaping `s1` and the
/// per-symbol label stream `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitStream {
    U,
    V,
    D,
    C,
    S1,
    S2,
    Z,
}

/// A vector of LLRs tagged with its role and stream.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrBlock {
    pub role: LlrRole,
    pub stream: BitStream,
    pub values: Vec<f64>,
}

impl LlrBlock {
    pub fn new(role: LlrRole, stream: BitStream, values: Vec<f64>) -> Self {
        LlrBlock {
            role,
            stream,
            values,
        }
    }

    pub fn zeros(role: LlrRole, stream: BitStream, len: usize) -> Self {
        Self::new(role, stream, vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn hard_decisions(&self) -> Vec<u8> {
        self.values.iter().map(|&l| hard(l)).collect()
    }

    /// Mutual information against the transmitted bits of the same stream.
    pub fn mutual_information(&self, bits: &[u8]) -> f64 {
        mutual_information(&self.values, bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn max_star_values() {
        assert_abs_diff_eq!(max_star(0.0, 0.0), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(max_star(3.5, f64::NEG_INFINITY), 3.5);
        assert_eq!(max_star(f64::NEG_INFINITY, -2.0), -2.0);
        let direct = (1f64.exp() + 2f64.exp() + 3f64.exp()).ln();
        assert_abs_diff_eq!(max_star_chain([1.0, 2.0, 3.0]), direct, epsilon = 1e-12);
        assert_abs_diff_eq!(direct, 3.40760596, epsilon = 1e-8);
    }

    #[test]
    fn chain_matches_log_sum_exp_on_range() {
        let terms: Vec<f64> = (0..61).map(|i| -30.0 + i as f64 * 0.997).collect();
        let a = max_star_chain(terms.iter().copied());
        let b = log_sum_exp(&terms);
        assert!((a - b).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn mi_estimator_limits() {
        let bits = [0u8, 1, 0, 1];
        assert_abs_diff_eq!(mutual_information(&[0.0; 4], &bits), 0.0, epsilon = 1e-15);
        let sure = [40.0, -40.0, 40.0, -40.0];
        assert!(mutual_information(&sure, &bits) > 1.0 - 1e-15);
    }

    #[test]
    fn saturation() {
        assert_eq!(saturate(f64::INFINITY), LLR_MAX);
        assert_eq!(saturate(f64::NEG_INFINITY), -LLR_MAX);
        assert_eq!(saturate(f64::NAN), 0.0);
        assert_eq!(saturate(3.0), 3.0);
    }
}

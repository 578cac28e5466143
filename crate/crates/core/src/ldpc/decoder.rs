use super::code::LdpcCode;
use crate::llr::hard;

const ATANH_CLAMP: f64 = 1.0 - 1e-12;

/// Edge layout of a code for message passing: edges are stored row by row.
#[derive(Debug, Clone)]
pub struct Tanner {
    n: usize,
    row_start: Vec<usize>,
    edge_col: Vec<u32>,
}

impl Tanner {
    pub fn new(code: &LdpcCode) -> Self {
        let mut row_start = Vec::with_capacity(code.n_checks() + 1);
        let mut edge_col = Vec::with_capacity(code.n_edges());
        row_start.push(0);
        for row in code.rows() {
            edge_col.extend_from_slice(row);
            row_start.push(edge_col.len());
        }
        Tanner {
            n: code.n(),
            row_start,
            edge_col,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edge_col.len()
    }
}

/// Per-frame decoder memory: check-to-variable messages carried between
/// sweeps and their per-variable sums.
#[derive(Debug, Clone)]
pub struct DecoderState {
    c2v: Vec<f64>,
    sum: Vec<f64>,
    hard: Vec<u8>,
    buf: Vec<f64>,
}

impl DecoderState {
    pub fn new(tanner: &Tanner) -> Self {
        DecoderState {
            c2v: vec![0.0; tanner.n_edges()],
            sum: vec![0.0; tanner.n()],
            hard: vec![0; tanner.n()],
            buf: Vec::new(),
        }
    }

    pub fn reset(&mut self) {
        self.c2v.iter_mut().for_each(|x| *x = 0.0);
        self.sum.iter_mut().for_each(|x| *x = 0.0);
    }

    /// Check-to-variable messages, stored row by row.
    pub fn check_messages(&self) -> &[f64] {
        &self.c2v
    }
}

/// `tanh(x / 2)`.
#[inline]
fn half_tanh(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    ((1.0 - e) / (1.0 + e)).copysign(x)
}

/// `2 atanh(p)`.
#[inline]
fn twice_atanh(p: f64) -> f64 {
    let p = p.clamp(-ATANH_CLAMP, ATANH_CLAMP);
    ((1.0 + p) / (1.0 - p)).ln()
}

/// One flooding sweep of sum-product decoding.
///
/// Variable nodes combine `la` with the stored check messages, every check
/// node applies the tanh rule, and `le[j]` receives the sum of the new
/// messages into variable `j`, so it excludes `la[j]`. Returns whether the
/// hard decisions on `la + le` satisfy every check.
pub fn decode_iteration(
    tanner: &Tanner,
    la: &[f64],
    state: &mut DecoderState,
    le: &mut [f64],
) -> bool {
    let n = tanner.n;
    assert_eq!(la.len(), n);
    assert_eq!(le.len(), n);
    le.iter_mut().for_each(|x| *x = 0.0);
    let DecoderState {
        c2v,
        sum,
        hard: hd,
        buf,
    } = state;
    for r in 0..tanner.row_start.len() - 1 {
        let (s, t) = (tanner.row_start[r], tanner.row_start[r + 1]);
        let cols = &tanner.edge_col[s..t];
        let msgs = &mut c2v[s..t];
        buf.clear();
        buf.extend(cols.iter().zip(msgs.iter()).map(|(&c, &m)| {
            let c = c as usize;
            half_tanh(la[c] + sum[c] - m)
        }));
        // Exclusive products by prefix and suffix sweeps.
        let mut prefix = 1.0;
        for (m, &b) in msgs.iter_mut().zip(buf.iter()) {
            *m = prefix;
            prefix *= b;
        }
        let mut suffix = 1.0;
        for ((m, &b), &c) in msgs.iter_mut().zip(buf.iter()).zip(cols).rev() {
            *m = twice_atanh(*m * suffix);
            suffix *= b;
            le[c as usize] += *m;
        }
    }
    sum.copy_from_slice(le);
    for j in 0..n {
        hd[j] = hard(la[j] + le[j]);
    }
    syndrome_ok(tanner, hd)
}

/// True when `bits` satisfies every check.
pub fn syndrome_ok(tanner: &Tanner, bits: &[u8]) -> bool {
    tanner.row_start.windows(2).all(|w| {
        tanner.edge_col[w[0]..w[1]]
            .iter()
            .fold(0u8, |a, &c| a ^ bits[c as usize])
            == 0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::{build_eira, DegreeDistribution};

    fn small() -> LdpcCode {
        let d = DegreeDistribution::new(vec![2, 3, 6], vec![1.0 / 3.0, 5.0 / 9.0, 1.0 / 9.0], 9)
            .unwrap();
        build_eira(60, 40, &d, 7).unwrap()
    }

    #[test]
    fn zero_input_is_a_fixed_point() {
        let code = small();
        let t = Tanner::new(&code);
        let mut st = DecoderState::new(&t);
        let mut le = vec![1.0; 60];
        for _ in 0..3 {
            decode_iteration(&t, &[0.0; 60], &mut st, &mut le);
            assert!(le.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn strong_correct_input_decodes_at_once() {
        let code = small();
        let t = Tanner::new(&code);
        let msg: Vec<u8> = (0..40).map(|i| (i * 7 % 3 == 0) as u8).collect();
        let cw = code.encode(&msg).unwrap();
        let la: Vec<f64> = cw
            .iter()
            .map(|&b| if b == 0 { 20.0 } else { -20.0 })
            .collect();
        let mut st = DecoderState::new(&t);
        let mut le = vec![0.0; 60];
        assert!(decode_iteration(&t, &la, &mut st, &mut le));
        for j in 0..60 {
            assert_eq!(hard(la[j] + le[j]), cw[j]);
        }
    }
}

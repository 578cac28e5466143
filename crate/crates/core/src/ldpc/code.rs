use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::degree::DegreeDistribution;
use crate::error::{Error, Result};

/// How a parity-check matrix was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// Dual-diagonal accumulator in the last `n - k` columns, with a single
    /// degree-1 column at the end. Encodable.
    Eira,
    /// Loaded from a file without recognizable accumulator structure.
    External,
}

/// A binary LDPC code given by the adjacency of its parity-check matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcCode {
    n: usize,
    k: usize,
    cols: Vec<Vec<u32>>,
    rows: Vec<Vec<u32>>,
    structure: Structure,
}

const PEG_DEPTH: usize = 3;
const MAX_ATTEMPTS: u64 = 8;

impl LdpcCode {
    /// Builds a code from per-column row lists. The structure tag is
    /// `Eira` when the accumulator pattern is present.
    pub fn from_columns(n_rows: usize, cols: Vec<Vec<u32>>) -> Result<Self> {
        let n = cols.len();
        if n_rows == 0 || n_rows >= n {
            return Err(Error::Construction(format!(
                "{n_rows} checks for {n} variables"
            )));
        }
        let mut rows = vec![Vec::new(); n_rows];
        for (j, col) in cols.iter().enumerate() {
            let mut sorted = col.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Construction(format!(
                    "column {j} has a repeated edge"
                )));
            }
            for &r in col {
                if r as usize >= n_rows {
                    return Err(Error::Construction(format!(
                        "column {j} references row {r} of {n_rows}"
                    )));
                }
                rows[r as usize].push(j as u32);
            }
        }
        let k = n - n_rows;
        let mut code = LdpcCode {
            n,
            k,
            cols,
            rows,
            structure: Structure::External,
        };
        if code.has_accumulator() {
            code.structure = Structure::Eira;
        }
        Ok(code)
    }

    fn has_accumulator(&self) -> bool {
        let m = self.n - self.k;
        (0..m).all(|i| {
            let mut col = self.cols[self.k + i].clone();
            col.sort_unstable();
            if i + 1 < m {
                col == [i as u32, i as u32 + 1]
            } else {
                col == [i as u32]
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_checks(&self) -> usize {
        self.n - self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    /// Rows of column `j`.
    pub fn column(&self, j: usize) -> &[u32] {
        &self.cols[j]
    }

    /// Columns of row `i`.
    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.cols
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn n_edges(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// `(degree, count)` pairs of the column degrees, ascending.
    pub fn column_degree_histogram(&self) -> Vec<(usize, usize)> {
        histogram(self.cols.iter().map(Vec::len))
    }

    /// `(degree, count)` pairs of the row degrees, ascending.
    pub fn row_degree_histogram(&self) -> Vec<(usize, usize)> {
        histogram(self.rows.iter().map(Vec::len))
    }

    /// Systematic encoding through the accumulator: the message followed by
    /// parity bits `p_i = p_{i-1} + (row i restricted to the message)`.
    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if self.structure != Structure::Eira {
            return Err(Error::NoEncoder(
                "the last n - k columns are not a dual-diagonal accumulator".into(),
            ));
        }
        if message.len() != self.k {
            return Err(Error::Length {
                what: "LDPC message",
                expected: self.k,
                got: message.len(),
            });
        }
        let mut word = message.to_vec();
        word.resize(self.n, 0);
        let mut acc = 0u8;
        for (i, row) in self.rows.iter().enumerate() {
            for &j in row {
                if (j as usize) < self.k {
                    acc ^= message[j as usize] & 1;
                }
            }
            word[self.k + i] = acc;
        }
        Ok(word)
    }

    /// True when every check is satisfied by the hard decisions `bits`.
    pub fn syndrome_ok(&self, bits: &[u8]) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |a, &j| a ^ bits[j as usize]) & 1 == 0)
    }
}

fn histogram<I: Iterator<Item = usize>>(degrees: I) -> Vec<(usize, usize)> {
    let mut map = std::collections::BTreeMap::new();
    for d in degrees {
        *map.entry(d).or_insert(0usize) += 1;
    }
    map.into_iter().collect()
}

/// Builds an eIRA code: the last `n - k` columns form the accumulator and
/// the message columns get the remaining degrees of `dist`, placed by
/// depth-limited progressive edge growth so every check has degree `dc`.
pub fn build_eira(n: usize, k: usize, dist: &DegreeDistribution, seed: u64) -> Result<LdpcCode> {
    if k == 0 || k >= n {
        return Err(Error::Construction(format!(
            "need 0 < k < n, got ({n}, {k})"
        )));
    }
    let m = n - k;
    let dc = dist.dc;
    if dc < 3 {
        return Err(Error::Degrees("eIRA codes need dc >= 3".into()));
    }
    let info_degrees = info_column_degrees(n, k, dist)?;
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        match place_edges(m, k, dc, &info_degrees, seed.wrapping_add(attempt)) {
            Ok(info_cols) => {
                let mut cols = info_cols;
                for i in 0..m {
                    if i + 1 < m {
                        cols.push(vec![i as u32, i as u32 + 1]);
                    } else {
                        cols.push(vec![i as u32]);
                    }
                }
                return LdpcCode::from_columns(m, cols);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Degrees of the `k` message columns: the distribution's node counts minus
/// the accumulator, apportioned by largest remainder, then repaired so the
/// edge count fills every check exactly. Any residual is absorbed by one
/// lowest-degree column.
pub(crate) fn info_column_degrees(
    n: usize,
    k: usize,
    dist: &DegreeDistribution,
) -> Result<Vec<usize>> {
    let m = n - k;
    let dc = dist.dc;
    let required = m * (dc - 2) + 1;
    if dist.dv[0] != 2 {
        return Err(Error::Degrees(
            "the lowest degree must be 2 for an eIRA code".into(),
        ));
    }
    let targets: Vec<f64> = dist
        .a
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let t = a * n as f64;
            if i == 0 {
                (t - m as f64).max(0.0)
            } else {
                t
            }
        })
        .collect();
    if dist.a[0] * (n as f64) < m as f64 - 0.01 * n as f64 {
        return Err(Error::Degrees(format!(
            "degree-2 fraction {} too small for {m} accumulator columns",
            dist.a[0]
        )));
    }
    let total: f64 = targets.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degrees("no message columns left".into()));
    }
    let exact: Vec<f64> = targets.iter().map(|t| t * k as f64 / total).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut left = k - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    let classes: Vec<usize> = (0..counts.len()).filter(|&i| targets[i] > 0.0).collect();
    let lo = *classes.first().expect("some message class");
    let hi = *classes.last().expect("some message class");
    let sum = |c: &[usize]| -> i64 { c.iter().zip(&dist.dv).map(|(&c, &d)| (c * d) as i64).sum() };
    let mut diff = required as i64 - sum(&counts);
    let slack = (0.01 * required as f64) as i64 + dist.dv[hi] as i64;
    if diff.abs() > slack {
        return Err(Error::Degrees(format!(
            "edge count off by {diff} (slack {slack}); dc = {dc} does not fit rate {k}/{n}"
        )));
    }
    let step = (dist.dv[hi] - dist.dv[lo]) as i64;
    if step > 0 {
        while diff >= step && counts[lo] > 1 {
            counts[lo] -= 1;
            counts[hi] += 1;
            diff -= step;
        }
        while diff < 0 && counts[hi] > 0 {
            counts[hi] -= 1;
            counts[lo] += 1;
            diff += step;
        }
    }
    if diff < 0 || counts[lo] == 0 {
        return Err(Error::Degrees(format!(
            "cannot repair edge count (residual {diff})"
        )));
    }
    let mut degrees = Vec::with_capacity(k);
    for (i, &c) in counts.iter().enumerate() {
        degrees.extend(std::iter::repeat_n(dist.dv[i], c));
    }
    // The residual goes to the first column of the lowest class.
    let first_lo = counts[..lo].iter().sum::<usize>();
    degrees[first_lo] += diff as usize;
    if degrees.iter().any(|&d| d > m) {
        return Err(Error::Degrees(
            "a column degree exceeds the number of checks".into(),
        ));
    }
    Ok(degrees)
}

/// Progressive edge growth over the message columns, highest degree first.
/// Each new edge goes to a check outside the column's depth-limited
/// neighbourhood when one exists, preferring checks with the most free
/// slots; ties are broken at random.
fn place_edges(
    m: usize,
    k: usize,
    dc: usize,
    degrees: &[usize],
    seed: u64,
) -> Result<Vec<Vec<u32>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut capacity: Vec<usize> = (0..m)
        .map(|i| if i == 0 { dc - 1 } else { dc - 2 })
        .collect();
    // Neighbourhoods include the accumulator edges.
    let mut row_cols: Vec<Vec<u32>> = vec![Vec::new(); m];
    let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); k + m];
    for i in 0..m {
        let j = (k + i) as u32;
        col_rows[k + i].push(i as u32);
        row_cols[i].push(j);
        if i + 1 < m {
            col_rows[k + i].push(i as u32 + 1);
            row_cols[i + 1].push(j);
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut rng);
    order.sort_by(|&a, &b| degrees[b].cmp(&degrees[a]));

    let mut row_seen = vec![0u32; m];
    let mut col_seen = vec![0u32; k + m];
    let mut stamp = 0u32;
    let mut frontier: Vec<u32> = Vec::new();
    let mut next: Vec<u32> = Vec::new();
    let mut candidates: Vec<u32> = Vec::new();

    for &j in &order {
        for _ in 0..degrees[j] {
            stamp += 1;
            // Rows within reach of column j, marked with `stamp`.
            let mut reached_any = false;
            if !col_rows[j].is_empty() {
                reached_any = true;
                col_seen[j] = stamp;
                frontier.clear();
                for &r in &col_rows[j] {
                    row_seen[r as usize] = stamp;
                    frontier.push(r);
                }
                for _ in 1..PEG_DEPTH {
                    next.clear();
                    for &r in &frontier {
                        for &c in &row_cols[r as usize] {
                            if col_seen[c as usize] == stamp {
                                continue;
                            }
                            col_seen[c as usize] = stamp;
                            for &r2 in &col_rows[c as usize] {
                                if row_seen[r2 as usize] != stamp {
                                    row_seen[r2 as usize] = stamp;
                                    next.push(r2);
                                }
                            }
                        }
                    }
                    if next.is_empty() {
                        break;
                    }
                    std::mem::swap(&mut frontier, &mut next);
                }
            }
            let direct = |r: usize, col_rows: &[Vec<u32>]| col_rows[j].contains(&(r as u32));
            let pick = |far_only: bool, candidates: &mut Vec<u32>| {
                candidates.clear();
                let mut best = 0;
                for r in 0..m {
                    if capacity[r] == 0 || (far_only && reached_any && row_seen[r] == stamp) {
                        continue;
                    }
                    if !far_only && direct(r, &col_rows) {
                        continue;
                    }
                    if capacity[r] > best {
                        best = capacity[r];
                        candidates.clear();
                    }
                    if capacity[r] == best {
                        candidates.push(r as u32);
                    }
                }
            };
            pick(true, &mut candidates);
            if candidates.is_empty() {
                pick(false, &mut candidates);
            }
            if candidates.is_empty() {
                return Err(Error::Construction(format!(
                    "no free check for column {j} without a repeated edge"
                )));
            }
            let r = candidates[rng.random_range(0..candidates.len())] as usize;
            capacity[r] -= 1;
            col_rows[j].push(r as u32);
            row_cols[r].push(j as u32);
        }
    }
    if capacity.iter().any(|&c| c != 0) {
        return Err(Error::Construction("checks left with free slots".into()));
    }
    col_rows.truncate(k);
    Ok(col_rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_code() -> LdpcCode {
        let d = DegreeDistribution::new(vec![2, 3, 6], vec![1.0 / 3.0, 5.0 / 9.0, 1.0 / 9.0], 9)
            .unwrap();
        build_eira(60, 40, &d, 7).unwrap()
    }

    #[test]
    fn small_code_structure() {
        let c = small_code();
        assert_eq!(c.structure(), Structure::Eira);
        assert_eq!(c.row_degree_histogram(), vec![(9, 20)]);
        assert_eq!(c.column(59).len(), 1);
        for i in 0..19 {
            assert_eq!(c.column(40 + i), &[i as u32, i as u32 + 1]);
        }
    }

    #[test]
    fn encoding() {
        let c = small_code();
        assert!(c.encode(&[0; 40]).unwrap().iter().all(|&b| b == 0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<u8> = (0..40).map(|_| rng.random_range(0..2)).collect();
        let b: Vec<u8> = (0..40).map(|_| rng.random_range(0..2)).collect();
        let ca = c.encode(&a).unwrap();
        let cb = c.encode(&b).unwrap();
        assert_eq!(&ca[..40], &a[..]);
        assert!(c.syndrome_ok(&ca));
        let sum: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
        assert!(c.syndrome_ok(&sum));
        assert!(c.encode(&[0; 39]).is_err());
    }

    #[test]
    fn degree_histogram_matches_request() {
        let d = DegreeDistribution::new(vec![2, 4, 19], vec![0.40, 0.52, 0.08], 11).unwrap();
        let c = build_eira(1800, 1080, &d, 1).unwrap();
        let h = c.column_degree_histogram();
        // One edge of residual lands on a single degree-4 column.
        assert_eq!(h, vec![(1, 1), (2, 719), (4, 935), (5, 1), (19, 144)]);
        assert_eq!(c.row_degree_histogram(), vec![(11, 720)]);
    }

    #[test]
    fn rejects_infeasible() {
        let d = DegreeDistribution::new(vec![2, 4, 19], vec![0.40, 0.52, 0.08], 11).unwrap();
        assert!(build_eira(1800, 1200, &d, 1).is_err());
        let d = DegreeDistribution::new(vec![3, 4], vec![0.5, 0.5], 11).unwrap();
        assert!(build_eira(100, 60, &d, 1).is_err());
    }
}

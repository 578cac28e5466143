//! APSK constellations with DVB-S2 ring geometry, label tables, shaping
//! partitions and the symbol distributions they induce.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Radius ratios permitted for 16-APSK.
pub const GAMMA_16: [f64; 6] = [2.57, 2.60, 2.70, 2.75, 2.85, 3.15];

/// Radius ratio pairs (middle, outer) permitted for 32-APSK.
pub const GAMMA_32: [[f64; 2]; 5] = [
    [2.53, 4.30],
    [2.54, 4.33],
    [2.64, 4.64],
    [2.72, 4.87],
    [2.84, 5.27],
];

const APSK16_TABLE: &str = include_str!("../data/apsk16.txt");
const APSK32_TABLE: &str = include_str!("../data/apsk32.txt");
const APSK32_RING_TABLE: &str = include_str!("../data/apsk32_ring.txt");

/// Returns bit `pos` (0 = first transmitted bit) of an `m`-bit label.
#[inline]
pub fn label_bit(label: usize, pos: usize, m: usize) -> u8 {
    ((label >> (m - 1 - pos)) & 1) as u8
}

/// Permitted radius ratios for the given order, one entry per DVB-S2 choice.
pub fn permitted_gammas(order: usize) -> Vec<Vec<f64>> {
    match order {
        16 => GAMMA_16.iter().map(|&g| vec![g]).collect(),
        32 => GAMMA_32.iter().map(|g| g.to_vec()).collect(),
        _ => Vec::new(),
    }
}

/// Ring geometry: population, radius relative to the inner ring and phase
/// offset of the first symbol, per ring from the inside out.
#[derive(Debug, Clone, PartialEq)]
pub struct RingSpec {
    pub points_per_ring: Vec<usize>,
    pub radius_ratios: Vec<f64>,
    pub phase_offsets: Vec<f64>,
}

impl RingSpec {
    pub fn new(
        points_per_ring: Vec<usize>,
        radius_ratios: Vec<f64>,
        phase_offsets: Vec<f64>,
    ) -> Result<Self> {
        let n = points_per_ring.len();
        if n == 0 || radius_ratios.len() != n || phase_offsets.len() != n {
            return Err(Error::Constellation(
                "ring populations, radii and offsets must have equal nonzero length".into(),
            ));
        }
        if points_per_ring.contains(&0) {
            return Err(Error::Constellation("empty ring".into()));
        }
        let total: usize = points_per_ring.iter().sum();
        if total < 2 || !total.is_power_of_two() {
            return Err(Error::Constellation(format!(
                "order {total} is not a power of two"
            )));
        }
        if radius_ratios[0] != 1.0 {
            return Err(Error::Constellation(
                "the inner ring must have radius ratio 1".into(),
            ));
        }
        if radius_ratios.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Constellation(
                "radius ratios must be strictly increasing".into(),
            ));
        }
        Ok(RingSpec {
            points_per_ring,
            radius_ratios,
            phase_offsets,
        })
    }

    /// DVB-S2 geometry: rings of 4/12 (16-APSK) or 4/12/16 (32-APSK) with
    /// offsets pi/4, pi/12 and 0. `gamma` lists the outer-ring ratios.
    pub fn dvbs2(order: usize, gamma: &[f64]) -> Result<Self> {
        let (pops, offsets) = match order {
            16 => (vec![4, 12], vec![PI / 4.0, PI / 12.0]),
            32 => (vec![4, 12, 16], vec![PI / 4.0, PI / 12.0, 0.0]),
            _ => {
                return Err(Error::Constellation(format!(
                    "no APSK geometry for order {order}"
                )))
            }
        };
        if gamma.len() != pops.len() - 1 {
            return Err(Error::Constellation(format!(
                "{order}-APSK needs {} radius ratios, got {}",
                pops.len() - 1,
                gamma.len()
            )));
        }
        let mut radii = vec![1.0];
        radii.extend_from_slice(gamma);
        RingSpec::new(pops, radii, offsets)
    }

    pub fn order(&self) -> usize {
        self.points_per_ring.iter().sum()
    }
}

/// Symbol labelling: for every symbol its ring, its index within the ring
/// and its `m`-bit label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub rings: Vec<usize>,
    pub m: usize,
    pub entries: Vec<LabelEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelEntry {
    pub ring: usize,
    pub index: usize,
    pub label: usize,
}

impl LabelMap {
    /// Parses the text table format: `#` comments, a `rings n0 n1 ...` line
    /// and one `ring index label_bits` record per symbol.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rings: Option<Vec<usize>> = None;
        let mut m = 0usize;
        let mut entries = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::LabelTable { line: line_no, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0] == "rings" {
                let pops = fields[1..]
                    .iter()
                    .map(|f| f.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| err(e.to_string()))?;
                let total: usize = pops.iter().sum();
                if pops.is_empty() || !total.is_power_of_two() || total < 2 {
                    return Err(err(format!("ring populations sum to {total}")));
                }
                m = total.trailing_zeros() as usize;
                rings = Some(pops);
                continue;
            }
            let pops = rings
                .as_ref()
                .ok_or_else(|| err("record before the rings line".into()))?;
            if fields.len() != 3 {
                return Err(err(format!("expected 3 fields, got {}", fields.len())));
            }
            let ring: usize = fields[0]
                .parse()
                .map_err(|_| err("bad ring index".into()))?;
            let index: usize = fields[1]
                .parse()
                .map_err(|_| err("bad symbol index".into()))?;
            let bits = fields[2];
            if bits.len() != m || !bits.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(err(format!("label {bits:?} is not a {m}-bit string")));
            }
            if ring >= pops.len() || index >= pops[ring] {
                return Err(err(format!(
                    "symbol ({ring}, {index}) outside the ring layout"
                )));
            }
            let label = usize::from_str_radix(bits, 2).expect("validated bit string");
            entries.push(LabelEntry { ring, index, label });
        }
        let rings = rings.ok_or(Error::LabelTable {
            line: 0,
            msg: "missing rings line".into(),
        })?;
        let map = LabelMap { rings, m, entries };
        map.validate()?;
        Ok(map)
    }

    /// Checks that labels and (ring, index) positions are both bijective.
    pub fn validate(&self) -> Result<()> {
        let order: usize = self.rings.iter().sum();
        let err = |msg: String| Error::LabelTable { line: 0, msg };
        if self.entries.len() != order {
            return Err(err(format!(
                "{} records for {order} symbols",
                self.entries.len()
            )));
        }
        let mut seen_label = vec![false; order];
        let offsets: Vec<usize> = self
            .rings
            .iter()
            .scan(0, |acc, &n| {
                let start = *acc;
                *acc += n;
                Some(start)
            })
            .collect();
        let mut seen_pos = vec![false; order];
        for e in &self.entries {
            if e.label >= order || std::mem::replace(&mut seen_label[e.label], true) {
                return Err(err(format!("label {} repeated or out of range", e.label)));
            }
            if e.ring >= self.rings.len() || e.index >= self.rings[e.ring] {
                return Err(err(format!(
                    "symbol ({}, {}) out of range",
                    e.ring, e.index
                )));
            }
            let slot = offsets[e.ring] + e.index;
            if std::mem::replace(&mut seen_pos[slot], true) {
                return Err(err(format!("symbol ({}, {}) repeated", e.ring, e.index)));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# ring index, symbol index within ring, label\nrings");
        for n in &self.rings {
            out.push_str(&format!(" {n}"));
        }
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{} {} {:0width$b}\n",
                e.ring,
                e.index,
                e.label,
                width = self.m
            ));
        }
        out
    }

    /// The bundled table for an order and shaping-bit count. 32-APSK with
    /// two or three shaping bits uses a variant whose label prefixes follow
    /// ring membership.
    pub fn bundled(order: usize, g: usize) -> Result<Self> {
        let text = match (order, g) {
            (16, _) => APSK16_TABLE,
            (32, 0 | 1) => APSK32_TABLE,
            (32, _) => APSK32_RING_TABLE,
            _ => {
                return Err(Error::Constellation(format!(
                    "no bundled label table for order {order}"
                )))
            }
        };
        LabelMap::parse(text)
    }
}

/// Which label bits carry shaping-code output and how biased they are.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapingStrategy {
    pub g: usize,
    pub bit_positions: Vec<usize>,
    pub p0: f64,
}

impl ShapingStrategy {
    pub fn new(bit_positions: Vec<usize>, p0: f64) -> Result<Self> {
        if !(0.5..1.0).contains(&p0) {
            return Err(Error::Strategy(format!("p0 = {p0} outside [0.5, 1)")));
        }
        let mut sorted = bit_positions.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != bit_positions.len() {
            return Err(Error::Strategy("repeated shaping bit position".into()));
        }
        Ok(ShapingStrategy {
            g: bit_positions.len(),
            bit_positions,
            p0,
        })
    }

    pub fn uniform() -> Self {
        ShapingStrategy {
            g: 0,
            bit_positions: Vec::new(),
            p0: 0.5,
        }
    }

    /// The default shaping bit positions: the first `g` bits for 16-APSK;
    /// for 32-APSK the second bit, then the last, then the first.
    pub fn default_for(order: usize, g: usize, p0: f64) -> Result<Self> {
        let positions: &[usize] = match (order, g) {
            (_, 0) => &[],
            (16, 1) => &[0],
            (16, 2) => &[0, 1],
            (32, 1) => &[1],
            (32, 2) => &[1, 4],
            (32, 3) => &[0, 1, 4],
            _ => {
                return Err(Error::Strategy(format!(
                    "no strategy with g = {g} for order {order}"
                )))
            }
        };
        if g == 0 {
            return Ok(Self::uniform());
        }
        Self::new(positions.to_vec(), p0)
    }

    /// Shaping prefix of a label: the shaping bits read in strategy order,
    /// first shaping bit most significant.
    pub fn prefix_of(&self, label: usize, m: usize) -> usize {
        self.bit_positions
            .iter()
            .fold(0, |acc, &p| (acc << 1) | label_bit(label, p, m) as usize)
    }
}

/// A labelled, energy-normalized signal set with a symbol distribution.
/// Points are indexed by label.
#[derive(Debug, Clone)]
pub struct Constellation {
    m: usize,
    points: Vec<Complex64>,
    ring_of: Vec<usize>,
    rings: Option<RingSpec>,
    strategy: ShapingStrategy,
    pmf: Vec<f64>,
}

/// Builds an APSK constellation normalized to unit energy under a uniform
/// distribution. Radius ratios outside the DVB-S2 sets are rejected unless
/// `allow_any_gamma` is set.
pub fn build_apsk(
    order: usize,
    gamma: &[f64],
    map: &LabelMap,
    allow_any_gamma: bool,
) -> Result<Constellation> {
    if !order.is_power_of_two() {
        return Err(Error::Constellation(format!(
            "order {order} is not a power of two"
        )));
    }
    if !allow_any_gamma {
        let ok = permitted_gammas(order).iter().any(|p| {
            p.len() == gamma.len() && p.iter().zip(gamma).all(|(a, b)| (a - b).abs() < 1e-9)
        });
        if !ok {
            return Err(Error::Constellation(format!(
                "radius ratios {gamma:?} are not a DVB-S2 choice for {order}-APSK"
            )));
        }
    }
    let rings = RingSpec::dvbs2(order, gamma)?;
    build_from_rings(rings, map)
}

/// Builds a constellation from arbitrary ring geometry and a label table.
pub fn build_from_rings(rings: RingSpec, map: &LabelMap) -> Result<Constellation> {
    map.validate()?;
    if map.rings != rings.points_per_ring {
        return Err(Error::Constellation(format!(
            "label table rings {:?} do not match geometry {:?}",
            map.rings, rings.points_per_ring
        )));
    }
    let order = rings.order();
    let mut points = vec![Complex64::new(0.0, 0.0); order];
    let mut ring_of = vec![0; order];
    for e in &map.entries {
        let n = rings.points_per_ring[e.ring] as f64;
        let phase = rings.phase_offsets[e.ring] + 2.0 * PI * e.index as f64 / n;
        points[e.label] = Complex64::from_polar(rings.radius_ratios[e.ring], phase);
        ring_of[e.label] = e.ring;
    }
    let m = order.trailing_zeros() as usize;
    let mut c = Constellation {
        m,
        points,
        ring_of,
        rings: Some(rings),
        strategy: ShapingStrategy::uniform(),
        pmf: vec![1.0 / order as f64; order],
    };
    c.normalize();
    Ok(c)
}

impl Constellation {
    /// A constellation from explicit points, indexed by label, with a
    /// uniform distribution. Ring membership is inferred from the radii.
    pub fn from_points(points: Vec<Complex64>) -> Result<Self> {
        let order = points.len();
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::Constellation(format!(
                "order {order} is not a power of two"
            )));
        }
        let mut radii: Vec<f64> = points.iter().map(|p| p.norm()).collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.max(1.0));
        let ring_of = points
            .iter()
            .map(|p| {
                radii
                    .iter()
                    .position(|r| (r - p.norm()).abs() <= 1e-9 * r.max(1.0))
                    .unwrap_or(0)
            })
            .collect();
        let mut c = Constellation {
            m: order.trailing_zeros() as usize,
            points,
            ring_of,
            rings: None,
            strategy: ShapingStrategy::uniform(),
            pmf: vec![1.0 / order as f64; order],
        };
        c.normalize();
        Ok(c)
    }

    fn normalize(&mut self) {
        let es = self.energy();
        let scale = es.sqrt().recip();
        for p in &mut self.points {
            *p *= scale;
        }
    }

    /// Applies a shaping strategy: the distribution becomes the shaped pmf
    /// and the points are rescaled to unit average energy under it.
    pub fn with_strategy(&self, strategy: &ShapingStrategy) -> Result<Self> {
        let pmf = shaped_pmf(self, strategy)?;
        let mut c = self.clone();
        c.strategy = strategy.clone();
        c.pmf = pmf;
        c.normalize();
        Ok(c)
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.m
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn rings(&self) -> Option<&RingSpec> {
        self.rings.as_ref()
    }

    pub fn ring_of(&self, label: usize) -> usize {
        self.ring_of[label]
    }

    pub fn strategy(&self) -> &ShapingStrategy {
        &self.strategy
    }

    pub fn shaping_bits(&self) -> usize {
        self.strategy.g
    }

    /// Average energy under the current distribution.
    pub fn energy(&self) -> f64 {
        energy_under(&self.points, &self.pmf)
    }

    /// Labels whose shaping bits equal `prefix`, in ascending label order.
    pub fn partition_of(&self, prefix: usize) -> Result<Vec<usize>> {
        if prefix >= 1 << self.strategy.g {
            return Err(Error::Strategy(format!(
                "prefix {prefix} out of range for g = {}",
                self.strategy.g
            )));
        }
        Ok((0..self.order())
            .filter(|&l| self.strategy.prefix_of(l, self.m) == prefix)
            .collect())
    }

    /// Checks that the shaping partition follows the ring structure: the
    /// all-zero prefix covers the inner ring and partitions of larger prefix
    /// weight never sit on a ring inside one of smaller weight.
    pub fn validate_partition(&self) -> Result<()> {
        let g = self.strategy.g;
        if g == 0 {
            return Ok(());
        }
        let size = self.order() >> g;
        let n_rings = self.ring_of.iter().max().map_or(1, |r| r + 1);
        let mut lo = vec![usize::MAX; g + 1];
        let mut hi = vec![0usize; g + 1];
        for prefix in 0..1usize << g {
            let part = self.partition_of(prefix)?;
            if part.len() != size {
                return Err(Error::Strategy(format!(
                    "partition {prefix} has {} symbols, expected {size}",
                    part.len()
                )));
            }
            let w = prefix.count_ones() as usize;
            for &l in &part {
                lo[w] = lo[w].min(self.ring_of[l]);
                hi[w] = hi[w].max(self.ring_of[l]);
            }
        }
        let inner: Vec<usize> = (0..self.order())
            .filter(|&l| self.ring_of[l] == 0)
            .collect();
        if n_rings > 1
            && inner
                .iter()
                .any(|&l| self.strategy.prefix_of(l, self.m) != 0)
        {
            return Err(Error::Strategy(
                "the all-zero shaping prefix must contain the inner ring".into(),
            ));
        }
        for w in 1..=g {
            if hi[w - 1] > lo[w] {
                return Err(Error::Strategy(format!(
                    "prefix weight {w} reaches ring {} inside ring {} of weight {}",
                    lo[w],
                    hi[w - 1],
                    w - 1
                )));
            }
        }
        Ok(())
    }
}

/// Average energy of `points` under `pmf`.
pub fn energy_under(points: &[Complex64], pmf: &[f64]) -> f64 {
    points.iter().zip(pmf).map(|(x, p)| p * x.norm_sqr()).sum()
}

/// Symbol distribution induced by biased shaping bits: each symbol gets the
/// product of `p0` (bit 0) or `1 - p0` (bit 1) over its shaping bits,
/// spread evenly over the `2^(m-g)` symbols sharing the prefix.
pub fn shaped_pmf(c: &Constellation, strategy: &ShapingStrategy) -> Result<Vec<f64>> {
    let m = c.bits_per_symbol();
    if strategy.g >= m || strategy.bit_positions.iter().any(|&p| p >= m) {
        return Err(Error::Strategy(format!(
            "shaping positions {:?} invalid for m = {m}",
            strategy.bit_positions
        )));
    }
    let p1 = 1.0 - strategy.p0;
    let spread = (1usize << (m - strategy.g)) as f64;
    Ok((0..c.order())
        .map(|l| {
            strategy
                .bit_positions
                .iter()
                .map(|&p| {
                    if label_bit(l, p, m) == 0 {
                        strategy.p0
                    } else {
                        p1
                    }
                })
                .product::<f64>()
                / spread
        })
        .collect())
}

/// Peak-to-average power ratio in dB of `points` under `pmf`.
pub fn papr_db(points: &[Complex64], pmf: &[f64]) -> f64 {
    let peak = points
        .iter()
        .zip(pmf)
        .filter(|(_, &p)| p > 0.0)
        .map(|(x, _)| x.norm_sqr())
        .fold(0.0, f64::max);
    10.0 * (peak / energy_under(points, pmf)).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn apsk(order: usize, gamma: &[f64], g: usize) -> Constellation {
        build_apsk(order, gamma, &LabelMap::bundled(order, g).unwrap(), false).unwrap()
    }

    #[test]
    fn ring_populations_and_radii() {
        let c = apsk(16, &[2.70], 0);
        let mut radii: Vec<f64> = c.points().iter().map(|p| p.norm()).collect();
        radii.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(radii[4] / radii[0], 2.70, epsilon = 1e-12);
        assert_abs_diff_eq!(radii[3], radii[0], epsilon = 1e-12);
        assert_abs_diff_eq!(radii[15], radii[4], epsilon = 1e-12);
        let c = apsk(32, &[2.64, 4.64], 0);
        let counts = (0..3)
            .map(|r| (0..32).filter(|&l| c.ring_of(l) == r).count())
            .collect::<Vec<_>>();
        assert_eq!(counts, vec![4, 12, 16]);
    }

    #[test]
    fn uniform_normalization_identity() {
        let c = apsk(16, &[2.57], 0);
        assert_abs_diff_eq!(c.energy(), 1.0, epsilon = 1e-12);
        let r2 = 16.0 / (4.0 + 12.0 * 2.57f64.powi(2));
        assert_abs_diff_eq!(c.point(0).norm_sqr(), r2, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let map = LabelMap::bundled(16, 0).unwrap();
        assert!(build_apsk(16, &[2.65], &map, false).is_err());
        assert!(build_apsk(16, &[2.65], &map, true).is_ok());
        assert!(build_apsk(24, &[2.57], &map, true).is_err());
        let mut bad = map.clone();
        bad.entries[1].label = bad.entries[0].label;
        assert!(build_apsk(16, &[2.57], &bad, false).is_err());
        assert!(LabelMap::parse("rings 4 12\n0 0 00000\n").is_err());
    }

    #[test]
    fn label_table_round_trip() {
        for (order, g) in [(16, 0), (32, 0), (32, 3)] {
            let map = LabelMap::bundled(order, g).unwrap();
            assert_eq!(LabelMap::parse(&map.to_text()).unwrap(), map);
        }
    }

    #[test]
    fn sixteen_partitions() {
        let c = apsk(16, &[2.57], 2);
        let s = ShapingStrategy::default_for(16, 2, 0.688).unwrap();
        let c = c.with_strategy(&s).unwrap();
        c.validate_partition().unwrap();
        let a = c.partition_of(0).unwrap();
        assert!(a.iter().all(|&l| c.ring_of(l) == 0));
        let pa: f64 = a.iter().map(|&l| c.pmf()[l]).sum();
        assert_abs_diff_eq!(pa, 0.688 * 0.688, epsilon = 1e-12);
        let pc: f64 = c.partition_of(3).unwrap().iter().map(|&l| c.pmf()[l]).sum();
        assert_abs_diff_eq!(pc, 0.312 * 0.312, epsilon = 1e-12);
        assert!(c.partition_of(4).is_err());
    }

    #[test]
    fn thirty_two_partitions_follow_rings() {
        let c = apsk(32, &[2.64, 4.64], 1);
        let c = c
            .with_strategy(&ShapingStrategy::default_for(32, 1, 0.716).unwrap())
            .unwrap();
        let inner = c.partition_of(0).unwrap();
        assert_eq!(inner.len(), 16);
        assert!(inner.iter().all(|&l| c.ring_of(l) <= 1));
        let p: f64 = inner.iter().map(|&l| c.pmf()[l]).sum();
        assert_abs_diff_eq!(p, 0.716, epsilon = 1e-12);
        for g in 1..=3 {
            let c = apsk(32, &[2.64, 4.64], g)
                .with_strategy(&ShapingStrategy::default_for(32, g, 0.7).unwrap())
                .unwrap();
            c.validate_partition().unwrap();
        }
        let c = apsk(16, &[2.57], 1)
            .with_strategy(&ShapingStrategy::default_for(16, 1, 0.7).unwrap())
            .unwrap();
        c.validate_partition().unwrap();
    }

    #[test]
    fn whole_constellation_when_unshaped() {
        let c = apsk(32, &[2.53, 4.30], 0);
        assert_eq!(c.partition_of(0).unwrap(), (0..32).collect::<Vec<_>>());
    }

    #[test]
    fn papr_values() {
        let c = apsk(16, &[3.15], 0);
        assert_abs_diff_eq!(papr_db(c.points(), c.pmf()), 1.106, epsilon = 0.002);
        let psk: Vec<Complex64> = (0..8)
            .map(|k| Complex64::from_polar(1.0, k as f64 * PI / 4.0))
            .collect();
        assert_abs_diff_eq!(papr_db(&psk, &[0.125; 8]), 0.0, epsilon = 1e-12);
    }
}

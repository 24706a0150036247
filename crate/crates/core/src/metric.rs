//! Covering numbers and dyadic partition families on subsets of the line.
//!
//! The index space of every built-in model is `[0, 1]` with `d(s, t) = |s - t|`.
//! Level `n` of a [`PartitionFamily`] splits the interval into cells of width
//! `2^(1-n)` (half-open, last cell closed) and designates the midpoint of
//! each cell, so that `d(t, s_n(t)) <= 2^-n`. The single cell at the
//! trivial level `n0` carries the configurable point `t0` instead.
//!
//! Nothing here materializes a level unless asked to: cell counts, nets and
//! the pair sets `H_n` are computed on demand, which keeps families with
//! `n_max = 40` or more cheap to build.

use crate::error::{Error, Result};

/// Largest supported level; `2^(n-1)` cells must fit in a `u64`.
pub const MAX_LEVEL: i32 = 62;

/// Multiplier in the pair-set radius `6 * 2^-n`.
const H_RADIUS_FACTOR: f64 = 6.0;

/// Levels with at most this many cells are counted pair by pair.
const DIRECT_COUNT_LIMIT: u64 = 64;

/// Number of boundary cells handled explicitly at each end when counting `H_n`.
const BOUNDARY_CELLS: u64 = 8;

/// A compact index space with the Euclidean metric of the line.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexSpace {
    /// The closed interval `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// A finite point set, sorted and deduplicated. Used by tests.
    Points(Vec<f64>),
}

impl IndexSpace {
    pub fn unit_interval() -> Self {
        IndexSpace::Interval { lo: 0.0, hi: 1.0 }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::Domain(format!("[{lo}, {hi}] is not a bounded interval")));
        }
        Ok(IndexSpace::Interval { lo, hi })
    }

    pub fn points(mut pts: Vec<f64>) -> Result<Self> {
        if pts.is_empty() || pts.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("point set must be non-empty and finite".into()));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Ok(IndexSpace::Points(pts))
    }

    pub fn distance(s: f64, t: f64) -> f64 {
        (s - t).abs()
    }

    /// `D(T) = sup d(s, t)`.
    pub fn diameter(&self) -> f64 {
        match self {
            IndexSpace::Interval { lo, hi } => hi - lo,
            IndexSpace::Points(p) => p[p.len() - 1] - p[0],
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        match self {
            IndexSpace::Interval { lo, hi } => *lo <= t && t <= *hi,
            IndexSpace::Points(p) => p.binary_search_by(|x| x.total_cmp(&t)).is_ok(),
        }
    }
}

/// Minimal number of closed balls of the given radius covering `space`.
///
/// For an interval of length `L` this is `ceil(L / (2 radius))`, at least 1.
pub fn covering_number(space: &IndexSpace, radius: f64) -> Result<u64> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("covering radius must be positive, got {radius}")));
    }
    match space {
        IndexSpace::Interval { lo, hi } => {
            let count = ((hi - lo) / (2.0 * radius)).ceil().max(1.0);
            if count >= 2f64.powi(63) {
                return Err(Error::Domain(format!("radius {radius} is too small to count")));
            }
            Ok(count as u64)
        }
        IndexSpace::Points(pts) => {
            // greedy from the left is optimal on the line
            let mut count = 0;
            let mut reach = f64::NEG_INFINITY;
            for &p in pts {
                if p > reach {
                    count += 1;
                    reach = p + 2.0 * radius;
                }
            }
            Ok(count)
        }
    }
}

/// `n0`: the largest integer `n` with `N(T, d, 2^-n) = 1`.
pub fn largest_trivial_level(space: &IndexSpace) -> Result<i32> {
    let diameter = space.diameter();
    if diameter <= 0.0 {
        return Err(Error::Domain("every level is trivial for a single point".into()));
    }
    // N(2^-n) = 1 iff D <= 2^(1-n); start a few levels below the transition
    let mut n = -(diameter.log2().ceil() as i32) - 2;
    while n < MAX_LEVEL {
        if covering_number(space, 2f64.powi(-(n + 1)))? > 1 {
            return Ok(n);
        }
        n += 1;
    }
    Err(Error::Domain("no non-trivial level below the level cap".into()))
}

/// One level of the dyadic partition: cells, designated points and the
/// link to the level above.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    n: i32,
    lo: f64,
    hi: f64,
    width: f64,
    cells: u64,
    /// `Some(t0)` at the trivial level.
    anchor: Option<f64>,
    h_count: u64,
}

impl Level {
    pub fn n(&self) -> i32 {
        self.n
    }

    /// `|A_n| = |T_n|`.
    pub fn cell_count(&self) -> u64 {
        self.cells
    }

    /// Number of pairs in `H_n`. Zero at the trivial level.
    pub fn h_count(&self) -> u64 {
        self.h_count
    }

    /// Bounds of cell `i`; the last one is closed on the right.
    pub fn cell(&self, i: u64) -> (f64, f64) {
        if self.anchor.is_some() {
            return (self.lo, self.hi);
        }
        let a = self.lo + i as f64 * self.width;
        let b = (self.lo + (i + 1) as f64 * self.width).min(self.hi);
        (a, b)
    }

    /// Designated point of cell `i`.
    pub fn net_point(&self, i: u64) -> f64 {
        match self.anchor {
            Some(t0) => t0,
            None => {
                let (a, b) = self.cell(i);
                0.5 * (a + b)
            }
        }
    }

    /// Index of the cell containing `t` (clamped to the space).
    pub fn cell_index(&self, t: f64) -> u64 {
        if self.anchor.is_some() || t <= self.lo {
            return 0;
        }
        let i = ((t - self.lo) / self.width).floor();
        (i as u64).min(self.cells - 1)
    }

    /// `s_n(t)`.
    pub fn representative(&self, t: f64) -> f64 {
        self.net_point(self.cell_index(t))
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.cells).map(move |i| self.cell(i))
    }

    /// `T_n` as a vector. Allocates `cell_count` values.
    pub fn net(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.net_point(i)).collect()
    }

    /// Radius of the pair set `H_n`.
    pub fn h_radius(&self) -> f64 {
        H_RADIUS_FACTOR * 2f64.powi(-self.n)
    }

    /// Indices `j` into the coarser level with `d(u_i, v_j) <= 6 * 2^-n`.
    fn linked(&self, coarse: &Level, i: u64) -> impl Iterator<Item = u64> + '_ {
        let u = self.net_point(i);
        let r = self.h_radius();
        let first = coarse.cell_index(u - r);
        let last = coarse.cell_index(u + r);
        let coarse = coarse.clone();
        (first..=last).filter(move |&j| IndexSpace::distance(u, coarse.net_point(j)) <= r)
    }

    fn count_pairs(&self, coarse: &Level) -> u64 {
        let count_one = |i: u64| self.linked(coarse, i).count() as u64;
        if self.cells <= DIRECT_COUNT_LIMIT || coarse.anchor.is_some() {
            return (0..self.cells).map(count_one).sum();
        }
        // Away from both ends u_i = lo + (2i+1) 2^-n and v_j = lo + (4j+2) 2^-n,
        // so |u_i - v_j| <= 6 * 2^-n reads j in [(2i-7)/4, (2i+5)/4]: a window
        // of length 3 with non-integer ends, holding exactly three indices.
        let b = BOUNDARY_CELLS;
        let edges: u64 = (0..b).chain(self.cells - b..self.cells).map(count_one).sum();
        edges + 3 * (self.cells - 2 * b)
    }
}

/// Dyadic partitions `A_n0, ..., A_n_max` of an interval with midpoint nets.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionFamily {
    space: IndexSpace,
    n0: i32,
    t0: f64,
    levels: Vec<Level>,
}

/// Builds levels `n0..=n_max` with `t0` at the midpoint of the space.
pub fn build_partition_family(space: &IndexSpace, n_max: i32) -> Result<PartitionFamily> {
    let t0 = match space {
        IndexSpace::Interval { lo, hi } => 0.5 * (lo + hi),
        IndexSpace::Points(_) => {
            return Err(Error::Domain("partition families are built on intervals".into()))
        }
    };
    PartitionFamily::with_anchor(space, n_max, t0)
}

impl PartitionFamily {
    pub const DEFAULT_N_MAX: i32 = 20;

    /// Builds levels `n0..=n_max` with `T_n0 = {t0}`.
    pub fn with_anchor(space: &IndexSpace, n_max: i32, t0: f64) -> Result<Self> {
        let (lo, hi) = match space {
            IndexSpace::Interval { lo, hi } => (*lo, *hi),
            IndexSpace::Points(_) => {
                return Err(Error::Domain("partition families are built on intervals".into()))
            }
        };
        if !space.contains(t0) {
            return Err(Error::Domain(format!("t0 = {t0} lies outside [{lo}, {hi}]")));
        }
        let n0 = largest_trivial_level(space)?;
        if n_max < n0 + 1 {
            return Err(Error::Domain(format!("n_max = {n_max} must be at least n0 + 1 = {}", n0 + 1)));
        }
        if n_max > MAX_LEVEL {
            return Err(Error::Domain(format!("n_max = {n_max} exceeds the cap {MAX_LEVEL}")));
        }

        let mut levels: Vec<Level> = Vec::with_capacity((n_max - n0 + 1) as usize);
        levels.push(Level {
            n: n0,
            lo,
            hi,
            width: 2f64.powi(1 - n0),
            cells: 1,
            anchor: Some(t0),
            h_count: 0,
        });
        for n in n0 + 1..=n_max {
            let mut level = Level {
                n,
                lo,
                hi,
                width: 2f64.powi(1 - n),
                cells: covering_number(space, 2f64.powi(-n))?,
                anchor: None,
                h_count: 0,
            };
            level.h_count = level.count_pairs(levels.last().expect("trivial level"));
            levels.push(level);
        }
        Ok(PartitionFamily {
            space: space.clone(),
            n0,
            t0,
            levels,
        })
    }

    pub fn space(&self) -> &IndexSpace {
        &self.space
    }

    pub fn n0(&self) -> i32 {
        self.n0
    }

    pub fn n_max(&self) -> i32 {
        self.n0 + self.levels.len() as i32 - 1
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, n: i32) -> Option<&Level> {
        if n < self.n0 {
            return None;
        }
        self.levels.get((n - self.n0) as usize)
    }

    /// `H_n` as pairs of indices into `T_n x T_(n-1)`. Materializes the set.
    pub fn h_pairs(&self, n: i32) -> Result<Vec<(u64, u64)>> {
        let (fine, coarse) = match (self.level(n), self.level(n - 1)) {
            (Some(f), Some(c)) => (f, c),
            _ => {
                return Err(Error::Domain(format!(
                    "H_n is defined for n in {}..={}, got {n}",
                    self.n0 + 1,
                    self.n_max()
                )))
            }
        };
        Ok((0..fine.cells)
            .flat_map(|i| fine.linked(coarse, i).map(move |j| (i, j)))
            .collect())
    }

    /// The chain `s_n0(t) = t0, s_(n0+1)(t), ..., s_n_max(t)`.
    pub fn chain(&self, t: f64) -> Vec<f64> {
        self.levels.iter().map(|l| l.representative(t)).collect()
    }
}

/// `∫_0^D a^gamma N(T, d, a)^p da` with `p = 2` when `squared`.
///
/// Returns `f64::INFINITY` when the integral diverges.
pub fn entropy_integral(space: &IndexSpace, gamma: f64, squared: bool) -> Result<f64> {
    entropy_integral_to(space, gamma, squared, space.diameter())
}

/// Same as [`entropy_integral`] with an explicit upper limit.
pub fn entropy_integral_to(space: &IndexSpace, gamma: f64, squared: bool, upper: f64) -> Result<f64> {
    if !(gamma > -1.0) {
        return Err(Error::Domain(format!("entropy integral needs gamma > -1, got {gamma}")));
    }
    if !(upper >= 0.0) || !upper.is_finite() {
        return Err(Error::Domain(format!("upper limit must be finite and non-negative, got {upper}")));
    }
    let power = if squared { 2 } else { 1 };
    let piece = |a: f64, b: f64, count: f64| {
        count.powi(power) * (b.powf(gamma + 1.0) - a.powf(gamma + 1.0)) / (gamma + 1.0)
    };

    match space {
        IndexSpace::Interval { lo, hi } => {
            let half = 0.5 * (hi - lo);
            if half == 0.0 {
                return Ok(piece(0.0, upper, 1.0));
            }
            // Near zero N(a) ~ L/(2a), so a^gamma N^p is integrable iff gamma > p - 1.
            if gamma <= (power - 1) as f64 {
                return Ok(f64::INFINITY);
            }
            // N(a) = k exactly on [half/k, half/(k-1)).
            const PIECES: u64 = 1 << 20;
            let mut sum = KahanSum::default();
            if upper > half {
                sum.add(piece(half, upper, 1.0));
            }
            for k in 2..=PIECES {
                let a = half / k as f64;
                if a >= upper {
                    continue;
                }
                let b = (half / (k - 1) as f64).min(upper);
                sum.add(piece(a, b, k as f64));
            }
            // Below r = half / PIECES, L/(2a) <= N(a) < L/(2a) + 1; take the
            // midpoint of the two closed-form bounds.
            let r = (half / PIECES as f64).min(upper);
            let g = gamma;
            let (low, high) = if squared {
                let low = half * half * r.powf(g - 1.0) / (g - 1.0);
                (low, low + 2.0 * half * r.powf(g) / g + r.powf(g + 1.0) / (g + 1.0))
            } else {
                let low = half * r.powf(g) / g;
                (low, low + r.powf(g + 1.0) / (g + 1.0))
            };
            sum.add(0.5 * (low + high));
            Ok(sum.value())
        }
        IndexSpace::Points(pts) => {
            // N is a step function whose jumps sit at half the pairwise gaps.
            let mut breaks: Vec<f64> = pts
                .iter()
                .enumerate()
                .flat_map(|(i, p)| pts[i + 1..].iter().map(move |q| 0.5 * (q - p)))
                .filter(|&b| b < upper)
                .collect();
            breaks.push(0.0);
            breaks.push(upper);
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let mut total = 0.0;
            for w in breaks.windows(2) {
                let count = covering_number(space, 0.5 * (w[0] + w[1]))? as f64;
                total += piece(w[0], w[1], count);
            }
            Ok(total)
        }
    }
}

#[derive(Default)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> IndexSpace {
        IndexSpace::unit_interval()
    }

    /// Place closed intervals of half-length `r` left to right until `[0, 1]` is covered.
    fn greedy_interval_cover(len: f64, r: f64) -> u64 {
        let mut covered = 0.0;
        let mut count = 0;
        loop {
            count += 1;
            covered += 2.0 * r;
            if covered >= len {
                return count;
            }
        }
    }

    #[test]
    fn covering_number_examples() {
        assert_eq!(covering_number(&unit(), 0.125).unwrap(), 4);
        assert_eq!(covering_number(&unit(), 0.5).unwrap(), 1);
        assert_eq!(covering_number(&unit(), 0.3).unwrap(), 2);
        assert_eq!(greedy_interval_cover(1.0, 0.3), 2);
    }

    #[test]
    fn covering_number_rejects_non_positive_radius() {
        assert!(matches!(covering_number(&unit(), 0.0), Err(Error::Domain(_))));
        assert!(matches!(covering_number(&unit(), -1.0), Err(Error::Domain(_))));
        assert!(covering_number(&unit(), f64::NAN).is_err());
    }

    #[test]
    fn covering_number_respects_the_ceil_one_over_a_bound() {
        for k in 1..200 {
            let a = 1.0 / (k as f64 + 0.37);
            let n = covering_number(&unit(), a).unwrap();
            assert!(n as f64 <= (1.0 / a).ceil());
        }
    }

    #[test]
    fn point_set_covering_is_greedy() {
        let space = IndexSpace::points(vec![0.0, 0.1, 0.5, 0.55, 1.0]).unwrap();
        assert_eq!(covering_number(&space, 0.01).unwrap(), 5);
        assert_eq!(covering_number(&space, 0.05).unwrap(), 3);
        assert_eq!(covering_number(&space, 0.25).unwrap(), 2);
        assert_eq!(covering_number(&space, 0.5).unwrap(), 1);
    }

    #[test]
    fn trivial_level_of_unit_and_rescaled_intervals() {
        assert_eq!(largest_trivial_level(&unit()).unwrap(), 1);
        assert_eq!(covering_number(&unit(), 0.25).unwrap(), 2);
        let wide = IndexSpace::interval(0.0, 4.0).unwrap();
        assert_eq!(largest_trivial_level(&wide).unwrap(), -1);
        let single = IndexSpace::points(vec![0.3]).unwrap();
        assert!(largest_trivial_level(&single).is_err());
    }

    #[test]
    fn small_family_nets_and_pairs() {
        let fam = build_partition_family(&unit(), 3).unwrap();
        assert_eq!(fam.n0(), 1);
        assert_eq!(fam.t0(), 0.5);
        assert_eq!(fam.level(3).unwrap().net(), vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(fam.h_pairs(2).unwrap(), vec![(0, 0), (1, 0)]);
        assert_eq!(fam.level(2).unwrap().h_count(), 2);
        assert_eq!(fam.level(3).unwrap().h_count(), 8);
        assert!(fam.h_pairs(1).is_err());
        assert!(fam.h_pairs(4).is_err());
    }

    #[test]
    fn n_max_must_exceed_trivial_level() {
        assert!(build_partition_family(&unit(), 1).is_err());
        assert!(build_partition_family(&unit(), MAX_LEVEL + 1).is_err());
        assert!(build_partition_family(&IndexSpace::points(vec![0.0, 1.0]).unwrap(), 4).is_err());
    }

    #[test]
    fn cells_are_half_open_with_closed_last_cell() {
        let fam = build_partition_family(&unit(), 4).unwrap();
        let l = fam.level(3).unwrap();
        assert_eq!(l.cell_index(0.25), 1);
        assert_eq!(l.cell_index(0.2499999), 0);
        assert_eq!(l.cell_index(1.0), 3);
        assert_eq!(l.cells().last().unwrap(), (0.75, 1.0));
    }

    #[test]
    fn pair_count_shortcut_matches_enumeration() {
        for space in [unit(), IndexSpace::interval(0.0, 0.7).unwrap(), IndexSpace::interval(-1.0, 3.0).unwrap()] {
            let fam = build_partition_family(&space, 16).unwrap();
            for n in fam.n0() + 1..=16 {
                let listed = fam.h_pairs(n).unwrap().len() as u64;
                assert_eq!(listed, fam.level(n).unwrap().h_count(), "level {n} of {space:?}");
            }
        }
    }

    #[test]
    fn pair_sets_are_bounded_by_five_cells() {
        let fam = build_partition_family(&unit(), 40).unwrap();
        for l in &fam.levels()[1..] {
            assert!(l.h_count() <= 5 * l.cell_count());
            assert_eq!(l.cell_count(), 1 << (l.n() - 1));
        }
    }

    #[test]
    fn custom_anchor_sits_alone_at_the_trivial_level() {
        let fam = PartitionFamily::with_anchor(&unit(), 6, 0.1).unwrap();
        assert_eq!(fam.level(1).unwrap().net(), vec![0.1]);
        assert_eq!(fam.chain(0.9)[0], 0.1);
        assert_eq!(fam.level(2).unwrap().h_count(), 2);
        assert!(PartitionFamily::with_anchor(&unit(), 6, 1.5).is_err());
    }

    #[test]
    fn entropy_integral_single_point_to_one() {
        let single = IndexSpace::points(vec![0.5]).unwrap();
        let v = entropy_integral_to(&single, 1.0, false, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(entropy_integral(&single, 1.0, false).unwrap(), 0.0);
    }

    #[test]
    fn entropy_integral_respects_two_over_gamma() {
        let v = entropy_integral(&unit(), 0.5, false).unwrap();
        assert!(v.is_finite() && v > 0.0 && v <= 4.0, "{v}");
    }

    #[test]
    fn entropy_integral_divergence_is_reported_as_infinite() {
        assert_eq!(entropy_integral(&unit(), 0.0, false).unwrap(), f64::INFINITY);
        assert_eq!(entropy_integral(&unit(), -0.5, false).unwrap(), f64::INFINITY);
        assert_eq!(entropy_integral(&unit(), 1.0, true).unwrap(), f64::INFINITY);
        assert!(entropy_integral(&unit(), 1.5, true).unwrap().is_finite());
        assert!(entropy_integral(&unit(), -1.0, false).is_err());
    }

    #[test]
    fn entropy_integral_on_points_matches_step_sum() {
        // N = 3 on (0, 0.05), 2 on [0.05, 0.25), 1 on [0.25, 0.5]
        let space = IndexSpace::points(vec![0.0, 0.1, 0.5]).unwrap();
        let v = entropy_integral(&space, 0.0, false).unwrap();
        let expected = 3.0 * 0.05 + 2.0 * 0.2 + 1.0 * 0.25;
        assert!((v - expected).abs() < 1e-14, "{v} vs {expected}");
    }

    proptest! {
        #[test]
        fn covering_number_is_non_increasing(a in 1e-4f64..1.0, b in 1e-4f64..1.0) {
            let (small, large) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(covering_number(&unit(), small).unwrap() >= covering_number(&unit(), large).unwrap());
        }

        #[test]
        fn covering_number_agrees_with_greedy(r in 1e-3f64..0.75) {
            prop_assert_eq!(covering_number(&unit(), r).unwrap(), greedy_interval_cover(1.0, r));
        }

        #[test]
        fn metric_axioms_on_sampled_triples(x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0) {
            let d = IndexSpace::distance;
            prop_assert_eq!(d(x, x), 0.0);
            prop_assert_eq!(d(x, y), d(y, x));
            prop_assert!(d(x, z) <= d(x, y) + d(y, z) + 1e-15);
            prop_assert!(d(x, y) <= unit().diameter());
        }
    }
}

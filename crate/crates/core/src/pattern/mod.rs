//! Geometric pattern discovery on 2-D point sets (SIA, SIATEC) and greedy
//! compression by translational equivalence classes (COSIATEC).
//!
//! Drum phrases become points `(grid step from phrase start, component
//! index)`. The compression ratio of the COSIATEC cover measures how much
//! of the phrase is built from repeated patterns.

mod text;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_rational::Ratio;

use crate::preprocess::DrumHit;
use crate::time::{quarters_to_steps, Quarters};

pub use text::{parse_point_set, write_point_set};

pub type Point = (i64, i64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("point set is empty")]
    EmptySet,
    #[error("drum onset {0} is not on the grid")]
    OffGrid(Quarters),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: &'static str },
}

fn add(a: Point, b: Point) -> Point {
    (a.0 + b.0, a.1 + b.1)
}

fn sub(a: Point, b: Point) -> Point {
    (a.0 - b.0, a.1 - b.1)
}

/// A finite set of points kept sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(points: impl IntoIterator<Item = Point>) -> Self {
        let set: BTreeSet<Point> = points.into_iter().collect();
        Self { points: set.into_iter().collect() }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points.binary_search(&p).is_ok()
    }
}

/// Constant-time membership for compact sets, binary search otherwise.
enum Lookup<'a> {
    Grid { min: Point, width: i64, height: i64, bits: Vec<u64> },
    Sorted(&'a [Point]),
}

impl<'a> Lookup<'a> {
    const MAX_CELLS: i64 = 1 << 24;

    fn new(points: &'a [Point]) -> Self {
        let (Some(first), Some(last)) = (points.first(), points.last()) else {
            return Lookup::Sorted(points);
        };
        let min_y = points.iter().map(|p| p.1).min().unwrap();
        let max_y = points.iter().map(|p| p.1).max().unwrap();
        let width = last.0 - first.0 + 1;
        let height = max_y - min_y + 1;
        if width.checked_mul(height).is_none_or(|c| c > Self::MAX_CELLS) {
            return Lookup::Sorted(points);
        }
        let mut bits = alloc::vec![0u64; ((width * height) as usize).div_ceil(64)];
        for p in points {
            let i = ((p.0 - first.0) * height + (p.1 - min_y)) as usize;
            bits[i / 64] |= 1 << (i % 64);
        }
        Lookup::Grid { min: (first.0, min_y), width, height, bits }
    }

    fn contains(&self, p: Point) -> bool {
        match self {
            Lookup::Grid { min, width, height, bits } => {
                let (dx, dy) = sub(p, *min);
                if dx < 0 || dy < 0 || dx >= *width || dy >= *height {
                    return false;
                }
                let i = (dx * height + dy) as usize;
                bits[i / 64] & (1 << (i % 64)) != 0
            }
            Lookup::Sorted(points) => points.binary_search(&p).is_ok(),
        }
    }
}

/// A maximal translatable pattern: every point of the set that stays in the
/// set when moved by `vector`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mtp {
    pub vector: Point,
    pub points: Vec<Point>,
}

/// All non-empty MTPs, one per lexicographically positive difference
/// vector, sorted by vector. (The MTP of `-v` is the MTP of `v` moved by
/// `v`, so it adds no new pattern.)
pub fn sia(set: &PointSet) -> Vec<Mtp> {
    let pts = set.points();
    let n = pts.len();
    let mut table: Vec<(Point, u32)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            table.push((sub(pts[j], pts[i]), i as u32));
        }
    }
    table.sort_unstable();
    let mut out: Vec<Mtp> = Vec::new();
    for (v, i) in table {
        match out.last_mut() {
            Some(m) if m.vector == v => m.points.push(pts[i as usize]),
            _ => out.push(Mtp { vector: v, points: alloc::vec![pts[i as usize]] }),
        }
    }
    out
}

/// A pattern together with every translation that maps it into the set.
/// `pattern` is the occurrence with the smallest offset, so `translators`
/// always starts with the zero vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tec {
    pub pattern: Vec<Point>,
    pub translators: Vec<Point>,
}

impl Tec {
    /// Every point covered by some occurrence, sorted.
    pub fn covered(&self) -> Vec<Point> {
        let set: BTreeSet<Point> =
            self.translators.iter().flat_map(|&t| self.pattern.iter().map(move |&p| add(p, t))).collect();
        set.into_iter().collect()
    }

    /// Encoding size: the pattern plus its non-identity translators.
    pub fn cost(&self) -> u64 {
        (self.pattern.len() + self.translators.len() - 1) as u64
    }

    pub fn compression_ratio(&self) -> Ratio<u64> {
        Ratio::new(self.covered().len() as u64, self.cost())
    }

    pub fn bounding_box_area(&self) -> u64 {
        let xs = self.pattern.iter().map(|p| p.0);
        let ys = self.pattern.iter().map(|p| p.1);
        let w = xs.clone().max().unwrap_or(0) - xs.min().unwrap_or(0) + 1;
        let h = ys.clone().max().unwrap_or(0) - ys.min().unwrap_or(0) + 1;
        (w * h) as u64
    }
}

fn tec_of_shape(shape: &[Point], pts: &[Point], lookup: &Lookup<'_>) -> Tec {
    // shape[0] is the origin; try every set point as its image.
    let offsets: Vec<Point> =
        pts.iter().copied().filter(|&o| shape.iter().rev().all(|&s| lookup.contains(add(s, o)))).collect();
    let base = offsets[0];
    Tec {
        pattern: shape.iter().map(|&s| add(s, base)).collect(),
        translators: offsets.iter().map(|&o| sub(o, base)).collect(),
    }
}

/// One TEC per distinct MTP shape, plus the single-point TEC whose
/// occurrences are the whole set. Sorted by pattern.
pub fn siatec(set: &PointSet) -> Vec<Tec> {
    let pts = set.points();
    if pts.is_empty() {
        return Vec::new();
    }
    let lookup = Lookup::new(pts);
    let mut shapes: Vec<Vec<Point>> = sia(set)
        .into_iter()
        .map(|m| {
            let origin = m.points[0];
            m.points.iter().map(|&p| sub(p, origin)).collect()
        })
        .collect();
    shapes.push(alloc::vec![(0, 0)]);
    shapes.sort_unstable();
    shapes.dedup();
    let mut tecs: Vec<Tec> = shapes.iter().map(|s| tec_of_shape(s, pts, &lookup)).collect();
    tecs.sort_by(|a, b| a.pattern.cmp(&b.pattern));
    tecs
}

/// Greedy cover of a point set by disjoint TECs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressionResult {
    pub tecs: Vec<Tec>,
    /// Input size over the summed encoding sizes.
    pub ratio: Ratio<u64>,
}

impl CompressionResult {
    /// The point set the encoding describes.
    pub fn decode(&self) -> PointSet {
        PointSet::new(self.tecs.iter().flat_map(Tec::covered))
    }
}

struct Candidate {
    tec: Tec,
    covered: Vec<Point>,
    ratio: Ratio<u64>,
    area: u64,
}

/// Higher ratio, then more coverage, then a smaller bounding box, then the
/// smaller pattern.
fn better(a: &Candidate, b: &Candidate) -> bool {
    a.ratio
        .cmp(&b.ratio)
        .then(a.covered.len().cmp(&b.covered.len()))
        .then(b.area.cmp(&a.area))
        .then(b.tec.pattern.cmp(&a.tec.pattern))
        == Ordering::Greater
}

pub fn cosiatec(set: &PointSet) -> Result<CompressionResult, PatternError> {
    if set.is_empty() {
        return Err(PatternError::EmptySet);
    }
    let mut remaining = set.clone();
    let mut tecs = Vec::new();
    let mut cost = 0u64;
    while !remaining.is_empty() {
        let mut best: Option<Candidate> = None;
        for tec in siatec(&remaining) {
            let covered = tec.covered();
            let c = Candidate {
                ratio: Ratio::new(covered.len() as u64, tec.cost()),
                area: tec.bounding_box_area(),
                covered,
                tec,
            };
            if best.as_ref().is_none_or(|b| better(&c, b)) {
                best = Some(c);
            }
        }
        let best = best.expect("a non-empty set has a single-point TEC");
        cost += best.tec.cost();
        let covered: BTreeSet<Point> = best.covered.into_iter().collect();
        remaining = PointSet { points: remaining.points.into_iter().filter(|p| !covered.contains(p)).collect() };
        tecs.push(best.tec);
    }
    Ok(CompressionResult { tecs, ratio: Ratio::new(set.len() as u64, cost) })
}

/// Drum hits as points: x is the grid step from the phrase start, y the
/// component index.
pub fn to_point_set(drums: &[DrumHit], grid: u32) -> Result<PointSet, PatternError> {
    let mut pts = Vec::with_capacity(drums.len());
    for h in drums {
        let x = quarters_to_steps(h.onset, grid).ok_or(PatternError::OffGrid(h.onset))?;
        pts.push((x, h.component.index() as i64));
    }
    Ok(PointSet::new(pts))
}

pub fn compression_ratio_metric(drums: &[DrumHit], grid: u32) -> Result<Ratio<u64>, PatternError> {
    Ok(cosiatec(&to_point_set(drums, grid)?)?.ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// MTPs straight from the definition, for every positive vector.
    fn brute_sia(set: &PointSet) -> Vec<Mtp> {
        let pts = set.points();
        let mut vectors: Vec<Point> = Vec::new();
        for &a in pts {
            for &b in pts {
                let v = sub(b, a);
                if v > (0, 0) {
                    vectors.push(v);
                }
            }
        }
        vectors.sort();
        vectors.dedup();
        vectors
            .into_iter()
            .map(|v| Mtp { vector: v, points: pts.iter().copied().filter(|&p| set.contains(add(p, v))).collect() })
            .collect()
    }

    /// (shape, occurrence count) pairs by trying every translation.
    fn brute_siatec(set: &PointSet) -> Vec<(Vec<Point>, usize)> {
        let pts = set.points();
        let mut shapes: Vec<Vec<Point>> = brute_sia(set)
            .into_iter()
            .map(|m| m.points.iter().map(|&p| sub(p, m.points[0])).collect())
            .collect();
        shapes.push(vec![(0, 0)]);
        shapes.sort();
        shapes.dedup();
        let (min_x, max_x) = (pts[0].0, pts[pts.len() - 1].0);
        let min_y = pts.iter().map(|p| p.1).min().unwrap();
        let max_y = pts.iter().map(|p| p.1).max().unwrap();
        shapes
            .into_iter()
            .map(|s| {
                let mut count = 0;
                for tx in min_x - max_x..=max_x - min_x + max_x {
                    for ty in min_y - max_y..=max_y - min_y + max_y {
                        if s.iter().all(|&p| set.contains(add(p, (tx, ty)))) {
                            count += 1;
                        }
                    }
                }
                (s, count)
            })
            .collect()
    }

    fn random_set(rng: &mut ChaCha8Rng, n: usize) -> PointSet {
        PointSet::new((0..n).map(|_| (rng.gen_range(0..10), rng.gen_range(0..4))))
    }

    #[test]
    fn two_points() {
        let s = PointSet::new([(0, 0), (1, 0)]);
        assert_eq!(sia(&s), vec![Mtp { vector: (1, 0), points: vec![(0, 0)] }]);
    }

    #[test]
    fn singleton_set() {
        let s = PointSet::new([(3, 7)]);
        let tecs = siatec(&s);
        assert_eq!(tecs, vec![Tec { pattern: vec![(3, 7)], translators: vec![(0, 0)] }]);
        assert_eq!(cosiatec(&s).unwrap().ratio, Ratio::from_integer(1));
        assert_eq!(cosiatec(&PointSet::default()), Err(PatternError::EmptySet));
    }

    #[test]
    fn pattern_repeated_twice() {
        let s = PointSet::new([(0, 0), (1, 2), (5, 0), (6, 2)]);
        let tec = siatec(&s).into_iter().find(|t| t.pattern.len() == 2).unwrap();
        assert_eq!(tec.pattern, vec![(0, 0), (1, 2)]);
        assert_eq!(tec.translators, vec![(0, 0), (5, 0)]);
    }

    #[test]
    fn four_translations_of_four_points() {
        let shape = [(0, 0), (1, 1), (2, 0), (3, 2)];
        let s = PointSet::new((0..4).flat_map(|k| shape.iter().map(move |&(x, y)| (x + 4 * k, y))));
        assert_eq!(s.len(), 16);
        let r = cosiatec(&s).unwrap();
        assert_eq!(r.ratio, Ratio::new(16, 7));
        assert_eq!(r.tecs.len(), 1);
        // Encoding-size check: 4 pattern points plus 3 non-zero translators.
        assert_eq!(r.tecs[0].pattern.len() + r.tecs[0].translators.len() - 1, 7);
        assert_eq!(r.decode(), s);
    }

    #[test]
    fn generic_points_do_not_compress() {
        let s = PointSet::new([(0, 0), (1, 5), (7, 2)]);
        assert_eq!(cosiatec(&s).unwrap().ratio, Ratio::from_integer(1));
    }

    #[test]
    fn agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(1..=12);
            let s = random_set(&mut rng, n);
            let fast = sia(&s);
            assert_eq!(fast, brute_sia(&s));
            for m in &fast {
                // Maximal: no other point can join.
                for &p in s.points() {
                    assert_eq!(m.points.contains(&p), s.contains(add(p, m.vector)));
                }
            }
            let got: Vec<(Vec<Point>, usize)> = {
                let mut v: Vec<_> = siatec(&s)
                    .into_iter()
                    .map(|t| (t.pattern.iter().map(|&p| sub(p, t.pattern[0])).collect(), t.translators.len()))
                    .collect();
                v.sort();
                v
            };
            assert_eq!(got, brute_siatec(&s));
            for t in siatec(&s) {
                assert_eq!(t.translators[0], (0, 0));
                assert!(t.covered().iter().all(|&p| s.contains(p)));
            }
            let r = cosiatec(&s).unwrap();
            assert_eq!(r.decode(), s);
            let total: usize = r.tecs.iter().map(|t| t.covered().len()).sum();
            assert_eq!(total, s.len());
            assert!(r.ratio >= Ratio::from_integer(1));
        }
    }

    #[test]
    fn looping_increases_ratio() {
        let bar: Vec<Point> = vec![(0, 0), (2, 3), (4, 1), (6, 3), (8, 0), (10, 3), (12, 1), (14, 3)];
        let one = cosiatec(&PointSet::new(bar.clone())).unwrap().ratio;
        let eight = cosiatec(&PointSet::new((0..8).flat_map(|k| bar.iter().map(move |&(x, y)| (x + 16 * k, y)))))
            .unwrap()
            .ratio;
        assert!(eight > one, "{eight} vs {one}");
    }
}

use num_traits::Zero;

use super::{level_mass, TowerModel};
use crate::error::{Error, Result};
use crate::num::Rational;

/// Largest number of ranges a refinement may produce.
pub(crate) const MAX_REFINED_RANGES: usize = 1 << 24;

/// A finite union of levels of one column, kept as sorted, disjoint,
/// non-adjacent half-open index ranges.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LevelSet {
    column: usize,
    ranges: Vec<(u128, u128)>,
}

impl LevelSet {
    /// Builds a set from arbitrary ranges, which may overlap or be empty.
    pub fn new(column: usize, ranges: impl IntoIterator<Item = (u128, u128)>) -> Self {
        Self {
            column,
            ranges: normalize(ranges.into_iter().collect()),
        }
    }

    /// Builds a set after checking every range against `h_column`.
    pub fn checked(tower: &TowerModel, column: usize, ranges: impl IntoIterator<Item = (u128, u128)>) -> Result<Self> {
        let h = tower.height_u128(column)?;
        let ranges: Vec<_> = ranges.into_iter().collect();
        if let Some(&(a, b)) = ranges.iter().find(|&&(a, b)| a > b || b > h) {
            return Err(Error::domain(format!("range [{a}, {b}) is not inside Z_{h} of column {column}")));
        }
        Ok(Self::new(column, ranges))
    }

    pub fn empty(column: usize) -> Self {
        Self {
            column,
            ranges: Vec::new(),
        }
    }

    /// The single level `I_{column, i}`.
    pub fn level(column: usize, i: u128) -> Self {
        Self {
            column,
            ranges: vec![(i, i + 1)],
        }
    }

    /// All of `C_column`.
    pub fn whole(tower: &TowerModel, column: usize) -> Result<Self> {
        Ok(Self::new(column, [(0, tower.height_u128(column)?)]))
    }

    pub fn column(&self) -> usize {
        self.column
    }

    pub fn ranges(&self) -> &[(u128, u128)] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Number of levels.
    pub fn count(&self) -> u128 {
        self.ranges.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, i: u128) -> bool {
        let k = self.ranges.partition_point(|&(_, b)| b <= i);
        self.ranges.get(k).is_some_and(|&(a, _)| a <= i)
    }

    pub fn indices(&self) -> impl Iterator<Item = u128> + '_ {
        self.ranges.iter().flat_map(|&(a, b)| a..b)
    }

    pub fn measure(&self, tower: &TowerModel) -> Result<Rational> {
        level_mass(tower, self.column, self.count())
    }

    pub fn shifted(&self, t: u128) -> Self {
        Self {
            column: self.column,
            ranges: self.ranges.iter().map(|&(a, b)| (a + t, b + t)).collect(),
        }
    }

    /// Union with a set of the same column.
    pub fn union(&self, other: &Self) -> Result<Self> {
        same_column(self, other)?;
        let mut all = self.ranges.clone();
        all.extend_from_slice(&other.ranges);
        Ok(Self::new(self.column, all))
    }

    /// Intersection with a set of the same column.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        same_column(self, other)?;
        Ok(Self {
            column: self.column,
            ranges: intersect_ranges(&self.ranges, &other.ranges),
        })
    }

    /// Levels of the column that are not in the set.
    pub fn complement(&self, tower: &TowerModel) -> Result<Self> {
        let h = tower.height_u128(self.column)?;
        let mut out = Vec::new();
        let mut at = 0u128;
        for &(a, b) in &self.ranges {
            if a > at {
                out.push((at, a));
            }
            at = b;
        }
        if at < h {
            out.push((at, h));
        }
        Ok(Self {
            column: self.column,
            ranges: out,
        })
    }
}

fn same_column(a: &LevelSet, b: &LevelSet) -> Result<()> {
    if a.column != b.column {
        return Err(Error::domain(format!(
            "level sets live in columns {} and {}; refine first",
            a.column, b.column
        )));
    }
    Ok(())
}

pub(crate) fn normalize(mut ranges: Vec<(u128, u128)>) -> Vec<(u128, u128)> {
    ranges.retain(|(a, b)| a < b);
    ranges.sort_unstable();
    let mut out: Vec<(u128, u128)> = Vec::with_capacity(ranges.len());
    for (a, b) in ranges {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Intersection of two sorted disjoint range lists.
pub(crate) fn intersect_ranges(x: &[(u128, u128)], y: &[(u128, u128)]) -> Vec<(u128, u128)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < x.len() && j < y.len() {
        let lo = x[i].0.max(y[j].0);
        let hi = x[i].1.min(y[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if x[i].1 < y[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Refines sorted ranges of `C_from` one column at a time up to `C_to`.
pub(crate) fn refine_ranges(
    tower: &TowerModel,
    from: usize,
    mut ranges: Vec<(u128, u128)>,
    to: usize,
    limit: usize,
) -> Result<Vec<(u128, u128)>> {
    for c in from..to {
        if ranges.is_empty() {
            break;
        }
        tower.height_u128(c + 1)?;
        let r = tower
            .cuts_usize(c)
            .filter(|&r| r.saturating_mul(ranges.len()) <= limit)
            .ok_or_else(|| Error::budget(format!("refining {} ranges of C_{c} exceeds {limit} ranges", ranges.len())))?;
        let mut next = Vec::with_capacity(r * ranges.len());
        for j in 0..r as u128 {
            let o = tower.offset_u128(c, j)?;
            next.extend(ranges.iter().map(|&(a, b)| (o + a, o + b)));
        }
        ranges = normalize(next);
    }
    Ok(ranges)
}

/// The same set written as a union of levels of column `m`.
pub fn refine(tower: &TowerModel, a: &LevelSet, m: usize) -> Result<LevelSet> {
    if m < a.column {
        return Err(Error::domain(format!("cannot refine column {} to shallower column {m}", a.column)));
    }
    Ok(LevelSet {
        column: m,
        ranges: refine_ranges(tower, a.column, a.ranges.clone(), m, MAX_REFINED_RANGES)?,
    })
}

/// Pieces of `C_d` ranges seen from column `c <= d`. Each output
/// `(lo, hi, shift)` says that levels `lo + shift .. hi + shift` of `C_d` lie
/// inside levels `lo .. hi` of `C_c`; spacer levels are dropped.
pub(crate) fn coarsen_tracked(
    tower: &TowerModel,
    d: usize,
    ranges: &[(u128, u128)],
    c: usize,
) -> Result<Vec<(u128, u128, u128)>> {
    let mut cur: Vec<(u128, u128, u128)> = ranges.iter().map(|&(a, b)| (a, b, 0)).collect();
    for col in (c..d).rev() {
        let h = tower.height_u128(col)?;
        let r = tower.cuts_usize(col);
        let mut next = Vec::new();
        for &(a, b, shift) in &cur {
            let mut j = tower.subcolumn_of(col, a)?;
            loop {
                let o = tower.offset_u128(col, j)?;
                if o >= b {
                    break;
                }
                let lo = a.max(o);
                let hi = b.min(o + h);
                if lo < hi {
                    next.push((lo - o, hi - o, shift + o));
                }
                j += 1;
                if r.is_some_and(|r| j >= r as u128) {
                    break;
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

pub(crate) fn coarsen_ranges(
    tower: &TowerModel,
    d: usize,
    ranges: &[(u128, u128)],
    c: usize,
) -> Result<Vec<(u128, u128)>> {
    Ok(coarsen_tracked(tower, d, ranges, c)?
        .into_iter()
        .map(|(a, b, _)| (a, b))
        .collect())
}

/// A set written as disjoint level sets of several columns, one part per
/// column. Images under powers of the map take this form: pieces whose orbit
/// stays inside a shallow column are kept there.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct LevelUnion {
    parts: Vec<LevelSet>,
}

impl LevelUnion {
    /// Parts of the same column are merged; the parts of different columns
    /// must be disjoint as subsets of the space.
    pub fn new(parts: impl IntoIterator<Item = LevelSet>) -> Self {
        let mut by_col: std::collections::BTreeMap<usize, Vec<(u128, u128)>> = Default::default();
        for p in parts {
            by_col.entry(p.column).or_default().extend(p.ranges);
        }
        Self {
            parts: by_col
                .into_iter()
                .map(|(c, r)| LevelSet::new(c, r))
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }

    pub fn parts(&self) -> &[LevelSet] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn shallowest_column(&self) -> Option<usize> {
        self.parts.first().map(|p| p.column)
    }

    pub fn deepest_column(&self) -> Option<usize> {
        self.parts.last().map(|p| p.column)
    }

    pub fn measure(&self, tower: &TowerModel) -> Result<Rational> {
        let mut acc = Rational::zero();
        for p in &self.parts {
            acc += p.measure(tower)?;
        }
        Ok(acc)
    }

    pub fn shifted(&self, t: u128) -> Self {
        Self {
            parts: self.parts.iter().map(|p| p.shifted(t)).collect(),
        }
    }

    /// The whole union as levels of column `q`, which must be at least the
    /// deepest column present.
    pub fn to_column(&self, tower: &TowerModel, q: usize) -> Result<LevelSet> {
        let mut all = Vec::new();
        for p in &self.parts {
            all.extend(refine(tower, p, q)?.ranges);
        }
        Ok(LevelSet::new(q, all))
    }

    pub fn intersect_measure(&self, tower: &TowerModel, b: &LevelSet) -> Result<Rational> {
        let mut acc = Rational::zero();
        for p in &self.parts {
            acc += intersect_measure(tower, p, b)?;
        }
        Ok(acc)
    }
}

impl From<LevelSet> for LevelUnion {
    fn from(s: LevelSet) -> Self {
        Self::new([s])
    }
}

/// `mu(A ∩ B)`, computed in the shallower column of the two.
pub fn intersect_measure(tower: &TowerModel, a: &LevelSet, b: &LevelSet) -> Result<Rational> {
    let (shallow, deep) = if a.column <= b.column { (a, b) } else { (b, a) };
    if shallow.is_empty() || deep.is_empty() {
        return Ok(Rational::zero());
    }
    let pieces = coarsen_ranges(tower, deep.column, &deep.ranges, shallow.column)?;
    let mut count = 0u128;
    for (lo, hi) in pieces {
        let k = shallow.ranges.partition_point(|&(_, e)| e <= lo);
        for &(x, y) in &shallow.ranges[k..] {
            if x >= hi {
                break;
            }
            count += hi.min(y) - lo.max(x);
        }
    }
    level_mass(tower, deep.column, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynseq::CutRule;
    use crate::families::make_staircase;
    use crate::num::rational;

    fn r23() -> TowerModel {
        TowerModel::new(make_staircase(CutRule::Linear { slope: 1, offset: 2 }).unwrap())
    }

    #[test]
    fn normalization_merges() {
        let s = LevelSet::new(2, [(5, 7), (0, 2), (2, 3), (6, 9), (4, 4)]);
        assert_eq!(s.ranges(), &[(0, 3), (5, 9)]);
        assert_eq!(s.count(), 7);
        assert!(s.contains(8) && !s.contains(3) && !s.contains(9));
    }

    #[test]
    fn refine_examples() {
        let t = r23();
        let r = refine(&t, &LevelSet::level(1, 0), 2).unwrap();
        assert_eq!(r.indices().collect::<Vec<_>>(), vec![0, 3, 7]);
        let same = refine(&t, &LevelSet::level(1, 2), 1).unwrap();
        assert_eq!(same, LevelSet::level(1, 2));
        let r = refine(&t, &LevelSet::level(2, 0), 3).unwrap();
        assert_eq!(r.indices().collect::<Vec<_>>(), vec![0, 12, 25, 39]);
        assert!(refine(&t, &LevelSet::level(2, 0), 1).is_err());
    }

    #[test]
    fn refine_preserves_measure() {
        let t = r23();
        let a = LevelSet::new(2, [(1, 4), (9, 12)]);
        for m in 2..6 {
            assert_eq!(refine(&t, &a, m).unwrap().measure(&t).unwrap(), a.measure(&t).unwrap());
        }
    }

    #[test]
    fn intersection_examples() {
        let t = r23();
        let i10 = LevelSet::level(1, 0);
        assert_eq!(intersect_measure(&t, &i10, &i10).unwrap(), rational(1, 2));
        let a = LevelSet::new(2, [(3, 4), (6, 7), (10, 11)]);
        let b = LevelSet::new(2, [(0, 1), (3, 4), (7, 8)]);
        assert_eq!(intersect_measure(&t, &a, &b).unwrap(), rational(1, 6));
        assert_eq!(intersect_measure(&t, &LevelSet::level(1, 0), &LevelSet::level(1, 1)).unwrap(), rational(0, 1));
        assert_eq!(intersect_measure(&t, &i10, &b).unwrap(), rational(1, 2));
        assert_eq!(intersect_measure(&t, &LevelSet::whole(&t, 1).unwrap(), &LevelSet::level(2, 6)).unwrap(), rational(0, 1));
    }

    #[test]
    fn coarsen_agrees_with_refine() {
        let t = r23();
        let a = LevelSet::new(1, [(0, 1), (2, 3)]);
        let b = LevelSet::new(3, [(0, 10), (13, 30), (40, 54)]);
        let direct = refine(&t, &a, 3).unwrap().intersect(&b).unwrap().measure(&t).unwrap();
        assert_eq!(intersect_measure(&t, &a, &b).unwrap(), direct);
        assert_eq!(intersect_measure(&t, &b, &a).unwrap(), direct);
    }

    #[test]
    fn complement_and_union() {
        let t = r23();
        let a = LevelSet::new(2, [(1, 3), (8, 9)]);
        let c = a.complement(&t).unwrap();
        assert_eq!(c.ranges(), &[(0, 1), (3, 8), (9, 12)]);
        assert_eq!(a.union(&c).unwrap(), LevelSet::whole(&t, 2).unwrap());
        assert!(a.intersect(&c).unwrap().is_empty());
    }
}

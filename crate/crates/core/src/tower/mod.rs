//! Exact tower model: heights, widths, column and spacer measures, level
//! sets, images under powers of the map, and a point-orbit oracle.

pub(crate) mod levelset;
mod point;
mod power;

use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

pub use levelset::{intersect_measure, refine, LevelSet, LevelUnion};
pub use point::{locate, point_in, point_power, point_step, sample_points, PointCoord, SAMPLE_GRID_BITS};
pub use power::{apply_power, preimage, trace, Budget, BudgetUsed, PowerImage, Trace};

use crate::dynseq::SpacerRule;
use crate::error::{Error, Result};
use crate::num::{from_uint, Rational};

/// Widest stage whose sublevel offsets are tabulated.
const OFFSET_TABLE_LIMIT: usize = 1 << 20;

/// Everything the tower needs to know about one stage.
#[derive(Debug)]
pub struct StageData {
    pub n: usize,
    /// `r_n`
    pub cuts: BigUint,
    /// `h_n`
    pub height: BigUint,
    /// `W_n = prod_{z<n} r_z`, so a level of `C_n` has width `1/W_n`.
    pub width_den: BigUint,
    /// `sum_j s_{n,j}`
    pub spacers: BigUint,
    offsets: OnceLock<Option<Arc<Vec<u128>>>>,
}

impl StageData {
    pub fn width(&self) -> Rational {
        Rational::new(BigInt::one(), BigInt::from(self.width_den.clone()))
    }

    /// `mu(C_n) = h_n / W_n`
    pub fn column_measure(&self) -> Rational {
        Rational::new(BigInt::from(self.height.clone()), BigInt::from(self.width_den.clone()))
    }

    /// `mu(S_n) = (sum_j s_{n,j}) / W_{n+1}`
    pub fn spacer_measure(&self) -> Rational {
        Rational::new(
            BigInt::from(self.spacers.clone()),
            BigInt::from(&self.width_den * &self.cuts),
        )
    }

    /// `sbar_n / h_n`
    pub fn spacer_ratio(&self) -> Rational {
        Rational::new(
            BigInt::from(self.spacers.clone()),
            BigInt::from(&self.cuts * &self.height),
        )
    }

    pub fn next_height(&self) -> BigUint {
        &self.cuts * &self.height + &self.spacers
    }
}

/// Memoized tower of a spacer rule. Stages are computed on demand and shared;
/// after [`TowerModel::freeze`] reads of frozen stages take no lock.
pub struct TowerModel {
    rule: SpacerRule,
    stages: RwLock<Vec<Arc<StageData>>>,
    frozen: OnceLock<Vec<Arc<StageData>>>,
}

impl std::fmt::Debug for TowerModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TowerModel").field("rule", &self.rule).finish()
    }
}

impl TowerModel {
    pub fn new(rule: SpacerRule) -> Self {
        Self {
            rule,
            stages: RwLock::new(Vec::new()),
            frozen: OnceLock::new(),
        }
    }

    pub fn rule(&self) -> &SpacerRule {
        &self.rule
    }

    /// Precomputes stages `0..=max`; later reads of these stages are lock-free.
    /// Only the first call has an effect.
    pub fn freeze(&self, max: usize) -> Result<()> {
        if self.frozen.get().is_some() {
            return Ok(());
        }
        self.stage(max)?;
        let snapshot = self.stages.read().unwrap()[..=max].to_vec();
        let _ = self.frozen.set(snapshot);
        Ok(())
    }

    pub fn stage(&self, n: usize) -> Result<Arc<StageData>> {
        if let Some(f) = self.frozen.get() {
            if let Some(s) = f.get(n) {
                return Ok(s.clone());
            }
        }
        if let Some(s) = self.stages.read().unwrap().get(n) {
            return Ok(s.clone());
        }
        let mut stages = self.stages.write().unwrap();
        while stages.len() <= n {
            let z = stages.len();
            let (height, width_den) = match stages.last() {
                None => (BigUint::one(), BigUint::one()),
                Some(prev) => (prev.next_height(), &prev.width_den * &prev.cuts),
            };
            let cuts = self.rule.cuts(z)?;
            let spacers = self.rule.total(z)?;
            stages.push(Arc::new(StageData {
                n: z,
                cuts,
                height,
                width_den,
                spacers,
                offsets: OnceLock::new(),
            }));
        }
        Ok(stages[n].clone())
    }

    pub fn height(&self, n: usize) -> Result<BigUint> {
        Ok(self.stage(n)?.height.clone())
    }

    pub fn cuts(&self, n: usize) -> Result<BigUint> {
        Ok(self.stage(n)?.cuts.clone())
    }

    pub fn width(&self, n: usize) -> Result<Rational> {
        Ok(self.stage(n)?.width())
    }

    pub fn column_measure(&self, n: usize) -> Result<Rational> {
        Ok(self.stage(n)?.column_measure())
    }

    pub fn spacer_measure(&self, n: usize) -> Result<Rational> {
        Ok(self.stage(n)?.spacer_measure())
    }

    pub fn spacer_ratio(&self, n: usize) -> Result<Rational> {
        Ok(self.stage(n)?.spacer_ratio())
    }

    /// `h_n` as a machine index; level sets live below `2^128`.
    pub fn height_u128(&self, n: usize) -> Result<u128> {
        self.stage(n)?
            .height
            .to_u128()
            .ok_or_else(|| Error::Overflow(format!("h_{n} does not fit in 128 bits")))
    }

    pub(crate) fn cuts_usize(&self, n: usize) -> Option<usize> {
        self.stage(n).ok()?.cuts.to_usize()
    }

    /// Position `j h_p + s^{(j)}_{p,0}` of sublevel `j` of level 0 inside `C_{p+1}`.
    pub fn sublevel_offset(&self, p: usize, j: &BigUint) -> Result<BigUint> {
        let st = self.stage(p)?;
        if j >= &st.cuts {
            return Err(Error::domain(format!("sublevel {j} outside Z_{{r_{p}}} with r_{p} = {}", st.cuts)));
        }
        Ok(j * &st.height + self.rule.prefix(p, j)?)
    }

    /// All sublevel offsets of stage `p` when the stage is narrow enough to
    /// tabulate and `C_{p+1}` has 128-bit indices.
    pub(crate) fn offset_table(&self, p: usize) -> Result<Option<Arc<Vec<u128>>>> {
        let st = self.stage(p)?;
        if let Some(t) = st.offsets.get() {
            return Ok(t.clone());
        }
        let table = match (st.cuts.to_usize(), st.next_height().to_u128()) {
            (Some(r), Some(_)) if r <= OFFSET_TABLE_LIMIT => {
                let h = st.height.to_u128().expect("below the next height");
                let values = self.rule.stage_values(p)?;
                let mut out = Vec::with_capacity(r);
                let mut acc: u128 = 0;
                for (j, s) in values.iter().enumerate() {
                    out.push(j as u128 * h + acc);
                    acc += s.to_u128().expect("bounded by the next height");
                }
                Some(Arc::new(out))
            }
            _ => None,
        };
        Ok(st.offsets.get_or_init(|| table).clone())
    }

    /// Sublevel offset as a machine index.
    pub(crate) fn offset_u128(&self, p: usize, j: u128) -> Result<u128> {
        if let Some(t) = self.offset_table(p)? {
            return t
                .get(j as usize)
                .copied()
                .filter(|_| j < t.len() as u128)
                .ok_or_else(|| Error::domain(format!("sublevel {j} outside Z_{{r_{p}}}")));
        }
        let v = self.sublevel_offset(p, &BigUint::from(j))?;
        v.to_u128()
            .ok_or_else(|| Error::Overflow(format!("offset in C_{} beyond 128 bits", p + 1)))
    }

    /// Largest `j` with `offset(p, j) <= i`, for `i` an index of `C_{p+1}`.
    pub(crate) fn subcolumn_of(&self, p: usize, i: u128) -> Result<u128> {
        if let Some(t) = self.offset_table(p)? {
            return Ok(t.partition_point(|&o| o <= i) as u128 - 1);
        }
        let r = self
            .stage(p)?
            .cuts
            .to_u128()
            .ok_or_else(|| Error::Overflow(format!("r_{p} beyond 128 bits")))?;
        let (mut lo, mut hi) = (0u128, r - 1);
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if self.offset_u128(p, mid)? <= i {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        Ok(lo)
    }

    /// `sum_{n<N} sbar_n/h_n` and `prod_{n<N} (1 + sbar_n/h_n) = mu(C_N)`.
    pub fn finite_measure_partial_sum(&self, big_n: usize) -> Result<(Rational, Rational)> {
        let mut sum = Rational::zero();
        for n in 0..big_n {
            sum += self.spacer_ratio(n)?;
        }
        Ok((sum, self.column_measure(big_n)?))
    }

    /// The stage `p` with `h_p <= a < h_{p+1}`.
    pub fn stage_of_exponent(&self, a: &BigUint) -> Result<usize> {
        if a.is_zero() {
            return Err(Error::domain("exponent must be at least h_0 = 1"));
        }
        let mut p = 0;
        while &self.stage(p)?.next_height() <= a {
            p += 1;
        }
        Ok(p)
    }

    /// Stages `M..M'` at which the increments `sbar_n/h_n` fail to decrease,
    /// a finite-range hint that the measure may be infinite.
    pub fn non_decreasing_increments(&self, from: usize, to: usize) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for n in from..to {
            if self.spacer_ratio(n + 1)? >= self.spacer_ratio(n)? {
                out.push(n);
            }
        }
        Ok(out)
    }
}

/// `mu` of `count` levels of `C_n`.
pub(crate) fn level_mass(tower: &TowerModel, n: usize, count: u128) -> Result<Rational> {
    Ok(tower.width(n)? * from_uint(&BigUint::from(count)))
}

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LevelSet, TowerModel};
use crate::error::{Error, Result};
use crate::num::Rational;

/// Sampled horizontal coordinates are multiples of `2^-SAMPLE_GRID_BITS`.
pub const SAMPLE_GRID_BITS: u32 = 62;

/// A point of `C_column`: its level and its horizontal position `u` in `[0, 1)`
/// across the level.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PointCoord {
    pub column: usize,
    pub level: u128,
    pub u: Rational,
}

impl PointCoord {
    pub fn new(column: usize, level: u128, u: Rational) -> Self {
        Self { column, level, u }
    }
}

/// The same point seen in the next column.
fn descend(tower: &TowerModel, x: &PointCoord) -> Result<PointCoord> {
    let r = tower.cuts(x.column)?;
    let scaled = &x.u * Rational::from_integer(BigInt::from(r));
    let j = scaled.floor();
    let u = &scaled - &j;
    let j = j
        .to_integer()
        .to_u128()
        .ok_or_else(|| Error::Overflow("subcolumn index beyond 128 bits".into()))?;
    let level = tower.offset_u128(x.column, j)? + x.level;
    Ok(PointCoord::new(x.column + 1, level, u))
}

/// One application of the map.
pub fn point_step(tower: &TowerModel, x: &PointCoord, max_depth: usize) -> Result<PointCoord> {
    point_power(tower, x, 1, max_depth)
}

/// `T^t x`: jump inside the current column when possible, otherwise move the
/// point to the next column and retry.
pub fn point_power(tower: &TowerModel, x: &PointCoord, t: u128, max_depth: usize) -> Result<PointCoord> {
    let mut p = x.clone();
    let mut depth = 0;
    loop {
        let h = tower.height_u128(p.column)?;
        if p.level.checked_add(t).is_some_and(|e| e < h) {
            p.level += t;
            return Ok(p);
        }
        if depth == max_depth {
            return Err(Error::budget(format!(
                "orbit of level {} in C_{} needs more than {max_depth} refinements",
                x.level, x.column
            )));
        }
        p = descend(tower, &p)?;
        depth += 1;
    }
}

/// Level of `C_column` containing `x`, or `None` when `x` lies in a spacer
/// added after that column.
pub fn locate(tower: &TowerModel, x: &PointCoord, column: usize) -> Result<Option<u128>> {
    let mut p = x.clone();
    while p.column < column {
        p = descend(tower, &p)?;
    }
    let mut i = p.level;
    for c in (column..p.column).rev() {
        let j = tower.subcolumn_of(c, i)?;
        let rel = i - tower.offset_u128(c, j)?;
        if rel >= tower.height_u128(c)? {
            return Ok(None);
        }
        i = rel;
    }
    Ok(Some(i))
}

pub fn point_in(tower: &TowerModel, x: &PointCoord, set: &LevelSet) -> Result<bool> {
    Ok(locate(tower, x, set.column())?.is_some_and(|i| set.contains(i)))
}

/// `count` points of `C_m`, levels uniform on `Z_{h_m}` and `u` uniform on the
/// grid of multiples of `2^-62`, drawn from a ChaCha8 stream seeded by `seed`.
pub fn sample_points(tower: &TowerModel, m: usize, count: usize, seed: u64) -> Result<Vec<PointCoord>> {
    if count == 0 {
        return Err(Error::domain("sample count must be at least 1"));
    }
    let h = tower.height_u128(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let den = BigInt::from(1u64 << SAMPLE_GRID_BITS);
    Ok((0..count)
        .map(|_| {
            let level = rng.random_range(0..h);
            let num = rng.random::<u64>() >> (64 - SAMPLE_GRID_BITS);
            PointCoord::new(m, level, Rational::new(BigInt::from(num), den.clone()))
        })
        .collect())
}

#[cfg(test)]
fn is_valid(tower: &TowerModel, x: &PointCoord) -> bool {
    tower.height_u128(x.column).is_ok_and(|h| x.level < h)
        && x.u >= Rational::from_integer(0.into())
        && x.u < Rational::from_integer(1.into())
}

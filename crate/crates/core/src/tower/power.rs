use num_traits::Zero;

use super::levelset::{coarsen_tracked, intersect_ranges, refine_ranges, LevelSet, LevelUnion};
use super::{level_mass, TowerModel};
use crate::error::{Error, Result};
use crate::num::Rational;

/// Work limits for [`apply_power`] and [`preimage`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Maximum number of index ranges handled.
    pub max_pieces: usize,
    /// How many columns past the input column the walk may refine.
    pub max_depth: usize,
    /// Fail instead of returning an inexact image.
    pub strict: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_pieces: 1 << 22,
            max_depth: 8,
            strict: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BudgetUsed {
    pub pieces: usize,
    pub deepest_column: usize,
}

/// Image of a level set under `T^t`. When `unresolved_mass` is zero the
/// image is exact.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerImage {
    pub resolved: LevelUnion,
    pub unresolved_mass: Rational,
    pub used: BudgetUsed,
}

impl PowerImage {
    pub fn is_exact(&self) -> bool {
        self.unresolved_mass.is_zero()
    }

    /// The resolved part as levels of its deepest column.
    pub fn resolved_set(&self, tower: &TowerModel) -> Result<LevelSet> {
        match self.resolved.deepest_column() {
            Some(q) => self.resolved.to_column(tower, q),
            None => Ok(LevelSet::empty(self.used.deepest_column)),
        }
    }
}

/// The part of `A` on which `T^t` was resolved, split into pieces
/// `(column, start, end)` such that `T^t` maps level `i` of the piece's column
/// to level `i + t` of the same column.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub shift: u128,
    pub pieces: Vec<(usize, u128, u128)>,
    pub unresolved_mass: Rational,
    pub used: BudgetUsed,
}

impl Trace {
    pub fn sources(&self) -> LevelUnion {
        LevelUnion::new(self.pieces.iter().map(|&(c, a, b)| LevelSet::new(c, [(a, b)])))
    }
}

/// Walks `A` forward by `t`: a range whose shift stays below the column top
/// is resolved in place, the crossing part is cut into its subcolumns in the
/// next column and retried there.
pub fn trace(tower: &TowerModel, a: &LevelSet, t: u128, budget: &Budget) -> Result<Trace> {
    let max_col = a.column() + budget.max_depth;
    let mut stack: Vec<(usize, u128, u128)> = a.ranges().iter().rev().map(|&(x, y)| (a.column(), x, y)).collect();
    let mut pieces = Vec::new();
    let mut unresolved = Rational::zero();
    let mut used = BudgetUsed {
        pieces: stack.len(),
        deepest_column: a.column(),
    };
    while let Some((c, lo, hi)) = stack.pop() {
        let h = tower.height_u128(c)?;
        let cut = h.saturating_sub(t);
        if hi <= cut {
            pieces.push((c, lo, hi));
            used.deepest_column = used.deepest_column.max(c);
            continue;
        }
        let lo = if lo < cut {
            pieces.push((c, lo, cut));
            used.deepest_column = used.deepest_column.max(c);
            cut
        } else {
            lo
        };
        let r = tower.cuts_usize(c);
        let fits = c < max_col
            && tower.height_u128(c + 1).is_ok()
            && r.is_some_and(|r| used.pieces.saturating_add(r) <= budget.max_pieces);
        if !fits {
            unresolved += level_mass(tower, c, hi - lo)?;
            continue;
        }
        let r = r.expect("checked above");
        used.pieces += r;
        for j in (0..r as u128).rev() {
            let o = tower.offset_u128(c, j)?;
            stack.push((c + 1, o + lo, o + hi));
        }
    }
    Ok(Trace {
        shift: t,
        pieces,
        unresolved_mass: unresolved,
        used,
    })
}

fn finish<T>(budget: &Budget, image: PowerImage, value: T) -> Result<T> {
    if budget.strict && !image.is_exact() {
        return Err(Error::Budget {
            reason: format!("{} of mass left unresolved", image.unresolved_mass),
            partial: Some(Box::new(image)),
        });
    }
    Ok(value)
}

/// `T^t(A)`, each piece kept in the column where its shift was resolved.
pub fn apply_power(tower: &TowerModel, a: &LevelSet, t: u128, budget: &Budget) -> Result<PowerImage> {
    let tr = trace(tower, a, t, budget)?;
    let image = PowerImage {
        resolved: tr.sources().shifted(t),
        unresolved_mass: tr.unresolved_mass,
        used: tr.used,
    };
    finish(budget, image.clone(), image)
}

/// `T^{-t}(B) ∩ D` for a domain `D`, through the forward walk of `D`. The
/// unresolved mass of the walk bounds what the answer may be missing.
pub fn preimage(
    tower: &TowerModel,
    b: &LevelSet,
    t: u128,
    domain: &LevelSet,
    budget: &Budget,
) -> Result<PowerImage> {
    let tr = trace(tower, domain, t, budget)?;
    let d = b.column();
    let mut parts = Vec::new();
    for part in tr.sources().parts() {
        let c = part.column();
        let image = part.shifted(t);
        if c >= d {
            let mut out = Vec::new();
            for (lo, hi, off) in coarsen_tracked(tower, c, image.ranges(), d)? {
                for (x, y) in intersect_ranges(&[(lo, hi)], b.ranges()) {
                    out.push((x + off - t, y + off - t));
                }
            }
            parts.push(LevelSet::new(c, out));
        } else {
            let fine = refine_ranges(tower, c, image.ranges().to_vec(), d, budget.max_pieces.max(1))?;
            let hits = intersect_ranges(&fine, b.ranges());
            parts.push(LevelSet::new(d, hits.into_iter().map(|(x, y)| (x - t, y - t))));
        }
    }
    let image = PowerImage {
        resolved: LevelUnion::new(parts),
        unresolved_mass: tr.unresolved_mass,
        used: tr.used,
    };
    finish(budget, image.clone(), image)
}

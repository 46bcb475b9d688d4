//! Normalized correlations nu(T^t A ∩ B) - nu(A) nu(B) over a range of t.

use rankone::dynseq::CutRule;
use rankone::ergodic::correlation;
use rankone::families::make_staircase;
use rankone::num::to_decimal;
use rankone::tower::{Budget, LevelSet, TowerModel};

fn main() -> rankone::Result<()> {
    let tower = TowerModel::new(make_staircase(CutRule::Linear { slope: 1, offset: 2 })?);
    let budget = Budget { max_depth: 24, ..Budget::default() };
    let a = LevelSet::level(1, 0);
    let b = LevelSet::new(2, vec![(0, 3), (7, 8)]);
    for t in [0u128, 1, 3, 12, 54, 280, 1695] {
        let aa = correlation(&tower, &a, &a, t, 2, &budget)?;
        let ab = correlation(&tower, &a, &b, t, 2, &budget)?;
        println!(
            "t = {t:>5}  A,A: {:>10} ({})  A,B: {:>10}  unresolved {}",
            aa.normalized.to_string(),
            to_decimal(&aa.normalized),
            ab.normalized.to_string(),
            aa.unresolved_mass
        );
    }
    Ok(())
}

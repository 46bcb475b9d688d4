//! The uniform mixing sum over the levels of a column and its domination of
//! single-set correlations.

use rankone::dynseq::CutRule;
use rankone::ergodic::{correlation, uniform_mixing_sum};
use rankone::families::make_staircase;
use rankone::num::to_decimal;
use rankone::tower::{Budget, LevelSet, TowerModel};

fn main() -> rankone::Result<()> {
    let tower = TowerModel::new(make_staircase(CutRule::Linear { slope: 1, offset: 2 })?);
    let budget = Budget { max_depth: 24, ..Budget::default() };
    let b = LevelSet::level(1, 0);
    // every level of the exponent's stage must sit inside the reference column
    for a in [3u128, 5, 12, 30, 54, 200, 280] {
        let u = uniform_mixing_sum(&tower, a, &b, 4, &budget)?;
        println!("a = {a:>3}: stage {} sum {} ({})", u.stage, u.sum.value, to_decimal(&u.sum.value));
    }
    let a = LevelSet::new(2, vec![(0, 4), (9, 12)]);
    let c = correlation(&tower, &a, &b, 30, 2, &budget)?;
    let u = uniform_mixing_sum(&tower, 30, &b, 2, &budget)?;
    println!("|corr| = {} <= {}", to_decimal(&num_traits::Signed::abs(&c.normalized)), to_decimal(&u.sum.value));
    Ok(())
}

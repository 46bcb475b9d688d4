//! Block lemma and level-sum bound checked on concrete inputs.

use rankone::dynseq::CutRule;
use rankone::ergodic::{block_lemma_check, level_sum_bound_check};
use rankone::families::make_staircase;
use rankone::tower::{Budget, LevelSet, TowerModel};

fn main() -> rankone::Result<()> {
    let tower = TowerModel::new(make_staircase(CutRule::Linear { slope: 1, offset: 2 })?);
    let budget = Budget::default();
    let b = LevelSet::level(1, 0);
    for (r, l, p) in [(12, 3, 2), (12, 12, 1), (30, 7, 3)] {
        let res = block_lemma_check(&tower, r, l, p, &b, 2, &budget)?;
        println!("R = {r} L = {l} p = {p}: {} <= {} (slack {}, holds {})", res.lhs, res.rhs, res.slack, res.holds);
    }
    let res = level_sum_bound_check(&tower, 2, &[0, 1, 2], &[(1, 0), (3, 2)], &b, 3, &budget)?;
    println!(
        "level sum {} vs integral {} + boundary {} (scaled integral {}): holds {}",
        res.lhs, res.integral, res.boundary, res.integral_scaled, res.holds
    );
    Ok(())
}

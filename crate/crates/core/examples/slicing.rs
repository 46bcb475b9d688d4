//! Slicing one stage of the dynamical sequence and the averages along it.

use num_bigint::BigUint;
use rankone::dynseq::{build_slicing, epsilon_schedule, validate_slicing, CutRule};
use rankone::ergodic::slice_ergodic_average;
use rankone::families::make_staircase;
use rankone::num::rational;
use rankone::tower::{Budget, LevelSet, TowerModel};

fn main() -> rankone::Result<()> {
    let tower = TowerModel::new(make_staircase(CutRule::Linear { slope: 1, offset: 2 })?);
    let b = LevelSet::level(1, 0);
    for (p, k, eps) in [(2, 1, rational(1, 12)), (4, 2, epsilon_schedule(&tower, 4)?)] {
        let s = build_slicing(&tower, p, k, &BigUint::from(0u32), &eps)?;
        println!("stage {p}, window {k}, eps {eps}: Q = {}", s.q_count());
        for q in 0..s.q_count() {
            println!("  slice {q}: alpha {} gamma {:?}", s.alpha[q], s.gamma[q]);
        }
        for c in validate_slicing(&s, &tower)? {
            println!("  {:<20} {} {}", c.name, if c.passed { "ok" } else { "FAILED" }, c.detail);
        }
        let avg = slice_ergodic_average(&tower, &s, &b, 2, &Budget::default())?;
        println!("  slice average {}", avg.value);
    }
    Ok(())
}

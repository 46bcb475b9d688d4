//! Point orbits as an independent check on exact correlations.

use rankone::dynseq::CutRule;
use rankone::ergodic::correlation;
use rankone::families::make_staircase;
use rankone::num::to_decimal;
use rankone::tower::{point_in, point_power, sample_points, Budget, LevelSet, TowerModel};

fn main() -> rankone::Result<()> {
    let tower = TowerModel::new(make_staircase(CutRule::Linear { slope: 1, offset: 2 })?);
    let (a, b, t, m) = (LevelSet::new(2, vec![(1, 5)]), LevelSet::new(3, vec![(10, 40)]), 37u128, 3);
    let exact = correlation(&tower, &a, &b, t, m, &Budget::default())?.raw / tower.column_measure(m)?;
    let n = 100_000;
    let mut hits = 0;
    for x in sample_points(&tower, m, n, 1)? {
        if point_in(&tower, &x, &a)? && point_in(&tower, &point_power(&tower, &x, t, 64)?, &b)? {
            hits += 1;
        }
    }
    let p: f64 = to_decimal(&exact).parse().unwrap();
    let se = (p * (1.0 - p) / n as f64).sqrt();
    println!("exact {exact} = {p:.6}, sampled {:.6}, z = {:.2}", hits as f64 / n as f64, (hits as f64 / n as f64 - p) / se);
    Ok(())
}

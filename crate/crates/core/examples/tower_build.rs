//! Heights, widths and measures of the staircase tower with r_n = n + 2,
//! plus the partial sums deciding whether the space has finite measure.

use rankone::dynseq::CutRule;
use rankone::families::make_staircase;
use rankone::num::to_decimal;
use rankone::tower::TowerModel;

fn main() -> rankone::Result<()> {
    let tower = TowerModel::new(make_staircase(CutRule::Linear { slope: 1, offset: 2 })?);
    println!("{:>2} {:>3} {:>10} {:>12} {:>10}", "n", "r", "h", "mu(C_n)", "sum");
    for n in 0..=8 {
        let (sum, mu) = tower.finite_measure_partial_sum(n)?;
        println!(
            "{n:>2} {:>3} {:>10} {:>12} {:>10}",
            tower.cuts(n)?,
            tower.height(n)?,
            mu.to_string(),
            sum.to_string()
        );
    }
    println!("sublevel offsets at p = 2: {:?}", (0..4u32).map(|j| tower.sublevel_offset(2, &j.into())).collect::<Result<Vec<_>, _>>()?);
    let (sum, mu) = tower.finite_measure_partial_sum(40)?;
    println!("after 40 stages: sum = {}, mu(C_40) = {}", to_decimal(&sum), to_decimal(&mu));
    Ok(())
}

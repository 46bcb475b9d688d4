//! L1 ergodic averages along the dynamical sequence, along k-th powers and
//! along a polynomial.

use rankone::dynseq::CutRule;
use rankone::ergodic::{dynseq_ergodic_average, polynomial_average, power_ergodic_profile};
use rankone::families::{make_staircase, PolynomialSpec};
use rankone::num::to_decimal;
use rankone::tower::{Budget, LevelSet, TowerModel};

fn main() -> rankone::Result<()> {
    let tower = TowerModel::new(make_staircase(CutRule::Linear { slope: 1, offset: 2 })?);
    let budget = Budget { max_depth: 24, ..Budget::default() };
    let b = LevelSet::level(1, 0);

    println!("dynamical sequence, window 1:");
    for n in 1..=12 {
        let avg = dynseq_ergodic_average(&tower, n, 1, &b, 2, &budget)?;
        println!("  n = {n:>2}: {} (tail bound {})", to_decimal(&avg.value), to_decimal(&avg.tail_bound));
    }

    let profile = power_ergodic_profile(&tower, 8, 4, &b, 2, &budget)?;
    for (k, avg) in &profile.rows {
        println!("exponents j*{k}, j < 8: {}", avg.value);
    }
    println!("sup {} at k = {}", profile.sup, profile.argsup);

    let sq = polynomial_average(&tower, &PolynomialSpec::monomial(2), 6, &b, 2, &budget)?;
    println!("exponents j^2, j < 6: {}", sq.value);
    Ok(())
}

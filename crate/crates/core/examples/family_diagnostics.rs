//! Growth and divisibility diagnostics across spacer families.

use rankone::dynseq::{BoundRule, CutRule};
use rankone::families::{family_diagnostics, make_ornstein, make_polynomial_staircase, make_simple_polystair, make_staircase, PolynomialSpec};
use rankone::num::{rational, to_decimal};
use rankone::tower::TowerModel;

fn main() -> rankone::Result<()> {
    let rules = [
        make_staircase(CutRule::Linear { slope: 1, offset: 2 })?,
        make_polynomial_staircase(PolynomialSpec::monomial(2), CutRule::Linear { slope: 1, offset: 3 })?,
        make_simple_polystair(1, rational(1, 1))?,
        make_ornstein(7, BoundRule::Linear { slope: 2, offset: 1 }, CutRule::Linear { slope: 1, offset: 3 })?,
    ];
    for rule in rules {
        let tower = TowerModel::new(rule);
        let d = family_diagnostics(&tower, 4, 1..6)?;
        println!("{} (flagged moduli {:?})", d.family, d.flagged);
        for s in &d.stages {
            let div: Vec<String> = s.divisibility.iter().map(|(l, f)| format!("{l}:{}", f.as_ref().map_or("-".into(), to_decimal))).collect();
            println!("  n = {} r = {} r^2/h = {} {}", s.n, s.cuts, to_decimal(&s.r2_over_h), div.join(" "));
        }
    }
    Ok(())
}

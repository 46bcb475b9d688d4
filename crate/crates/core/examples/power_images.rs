//! Exact images of level sets under powers of the map, with refinement and
//! intersection measures.

use rankone::dynseq::CutRule;
use rankone::families::make_staircase;
use rankone::tower::{apply_power, intersect_measure, refine, trace, Budget, LevelSet, TowerModel};

fn main() -> rankone::Result<()> {
    let tower = TowerModel::new(make_staircase(CutRule::Linear { slope: 1, offset: 2 })?);
    let budget = Budget::default();
    let top = LevelSet::level(1, 0);
    println!("I_(1,0) refined to C_2: {:?}", refine(&tower, &top, 2)?.ranges());

    let img = apply_power(&tower, &top, 3, &budget)?;
    let set = img.resolved_set(&tower)?;
    println!("T^3 I_(1,0) = {:?} in C_{}", set.ranges(), set.column());
    println!("overlap with I_(1,0): {}", intersect_measure(&tower, &set, &refine(&tower, &top, 2)?)?);

    let a = LevelSet::level(1, 2);
    let img = apply_power(&tower, &a, 3, &budget)?;
    for part in img.resolved.parts() {
        println!("T^3 I_(1,2) piece in C_{}: {:?}", part.column(), part.ranges());
    }
    println!("measure {} of {}", img.resolved.measure(&tower)?, a.measure(&tower)?);

    // a large shift from a shallow column spreads over many columns
    let tr = trace(&tower, &LevelSet::level(2, 5), 500, &budget)?;
    println!(
        "T^500 I_(2,5): {} pieces, deepest column {}, unresolved {}",
        tr.pieces.len(),
        tr.used.deepest_column,
        tr.unresolved_mass
    );
    Ok(())
}

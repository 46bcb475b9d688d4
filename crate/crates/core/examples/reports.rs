//! Building a report, rendering it as CSV and JSON, and charting it.

use rankone::dynseq::CutRule;
use rankone::ergodic::correlation;
use rankone::families::make_staircase;
use rankone::report::{chart_svg, parse_table, Format, Kind, Report};
use rankone::tower::{Budget, LevelSet, TowerModel};

fn main() -> rankone::Result<()> {
    let tower = TowerModel::new(make_staircase(CutRule::Linear { slope: 1, offset: 2 })?);
    let a = LevelSet::level(1, 0);
    let mut report = Report::new("correlate", &[("series", Kind::Text), ("x", Kind::Int), ("value", Kind::Rational)])
        .with_meta("reference_column", 2);
    for t in 0..40u128 {
        let row = correlation(&tower, &a, &a, t, 2, &Budget::default())?;
        report.push(vec!["A|A".into(), t.into(), row.normalized.into()]);
    }
    let csv = report.render(Format::Csv)?;
    println!("{}", csv.lines().take(4).collect::<Vec<_>>().join("\n"));
    println!("{}", report.render(Format::Json)?.lines().take(8).collect::<Vec<_>>().join("\n"));

    let dir = std::env::temp_dir().join("rankone-example");
    std::fs::create_dir_all(&dir)?;
    let svg = chart_svg(&parse_table(&csv)?, "correlation of I_(1,0)")?;
    std::fs::write(dir.join("correlate.svg"), svg)?;
    println!("wrote {}", report.write(&dir, Format::Csv)?.display());
    Ok(())
}

//! Command-line front end. Each subcommand turns a [`RunConfig`] into one or
//! more [`Report`]s; `chart` turns a report file into an SVG.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use serde_json::{Map, Value as Json};

use crate::config::{rationals, sample_exponents, RunConfig};
use crate::dynseq::{build_slicing_with, materialize_stage, partial_sums, validate_slicing, epsilon_schedule};
use crate::ergodic::{
    correlation, dynseq_ergodic_average, ergodic_average, polynomial_average, power_ergodic_profile,
    slice_ergodic_average, uniform_mixing_sum, AverageResult,
};
use crate::error::{Error, Result};
use crate::families::{family_diagnostics, partial_sum_polynomial};
use crate::families::PolynomialSpec;
use crate::num::{from_uint, Rational};
use crate::report::{chart_svg, read_table, Cell, Format, Kind, Report};
use crate::tower::{Budget, LevelSet, TowerModel};

/// Environment variable that sets the output directory when `--out` is absent.
pub const OUT_DIR_ENV: &str = "RANKONE_OUT_DIR";

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_IO: i32 = 5;
pub const EXIT_SCHEMA: i32 = 6;
pub const EXIT_INTERNAL: i32 = 70;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "rankone", version, about = "Exact reports for rank-one cutting-and-stacking transformations")]
pub struct Cli {
    #[command(flatten)]
    pub opts: Options,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Options {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for report files; stdout when neither this nor RANKONE_OUT_DIR is set.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    #[arg(long, global = true, value_name = "N")]
    pub budget_pieces: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub budget_depth: Option<usize>,
    /// Overrides `family.seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Overrides `ref_column`.
    #[arg(long, global = true, value_name = "M")]
    pub ref_column: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FormatArg {
    #[default]
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Heights, widths and measures of each stage.
    Build,
    /// Correlations of configured set pairs over a range of exponents.
    Correlate,
    /// Ergodic averages along explicit exponents or stage partial sums.
    Ergavg,
    /// Slicing of one stage, its checks and its ergodic average.
    Slice,
    /// Uniform mixing sums over sampled exponents.
    Uniform,
    /// Power ergodic profile of one stage.
    Power,
    /// Polynomial averages and closed-form partial-sum polynomials.
    Poly,
    /// Growth and divisibility diagnostics of the family.
    Validate,
    /// SVG line chart of a report file.
    Chart {
        /// CSV or JSON report written by this tool.
        report: PathBuf,
    },
    /// JSON bundle of uniform mixing, ergodic averages, correlations and family diagnostics.
    Diagnose,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Domain(_) | Error::Construction { .. } | Error::Overflow(_) => EXIT_DOMAIN,
        Error::Budget { .. } => EXIT_BUDGET,
        Error::Io(_) => EXIT_IO,
        Error::Schema(_) => EXIT_SCHEMA,
        Error::Consistency(_) => EXIT_INTERNAL,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rankone: {e}");
            exit_code(&e)
        }
    }
}

fn out_dir(opts: &Options) -> Option<PathBuf> {
    opts.out.clone().or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
}

pub fn run(cli: &Cli) -> Result<()> {
    let format: Format = cli.opts.format.into();
    if let Command::Chart { report } = &cli.command {
        let svg = chart_file(report)?;
        let stem = report.file_stem().and_then(|s| s.to_str()).unwrap_or("chart");
        return emit_text(&cli.opts, &format!("{stem}.svg"), &svg);
    }
    let cfg = load_config(&cli.opts)?;
    if let Command::Diagnose = cli.command {
        let mut text = serde_json::to_string_pretty(&diagnose(&cfg)?).expect("json values always serialize");
        text.push('\n');
        return emit_text(&cli.opts, "diagnose.json", &text);
    }
    for report in reports(&cli.command, &cfg)? {
        let text = report.render(format)?;
        emit_text(&cli.opts, &format!("{}.{}", report.name, format.extension()), &text)?;
    }
    Ok(())
}

fn emit_text(opts: &Options, file: &str, text: &str) -> Result<()> {
    match out_dir(opts) {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            let path = dir.join(file);
            std::fs::write(&path, text)?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Reads `--config` and applies the command-line overrides.
pub fn load_config(opts: &Options) -> Result<RunConfig> {
    let path = opts
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = opts.seed {
        cfg.family.seed = Some(s);
    }
    if let Some(m) = opts.ref_column {
        cfg.ref_column = Some(m);
    }
    if opts.budget_pieces == Some(0) || opts.budget_depth == Some(0) {
        return Err(Error::Config("budgets must be positive".into()));
    }
    if let Some(p) = opts.budget_pieces {
        cfg.budget.pieces = Some(p);
    }
    if let Some(d) = opts.budget_depth {
        cfg.budget.depth = Some(d);
    }
    if cfg.ref_column() > cfg.stages() {
        return Err(Error::Config(format!("ref_column {} exceeds stages = {}", cfg.ref_column(), cfg.stages())));
    }
    Ok(cfg)
}

pub fn chart_file(path: &Path) -> Result<String> {
    let table = read_table(path)?;
    let title = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    chart_svg(&table, title)
}

/// Reports produced by a subcommand other than `chart` and `diagnose`.
pub fn reports(cmd: &Command, cfg: &RunConfig) -> Result<Vec<Report>> {
    let tower = cfg.tower()?;
    let r = match cmd {
        Command::Build => vec![build(cfg, &tower)?],
        Command::Correlate => vec![correlate(cfg, &tower)?],
        Command::Ergavg => vec![ergavg(cfg, &tower)?],
        Command::Slice => slice(cfg, &tower)?,
        Command::Uniform => vec![uniform(cfg, &tower)?],
        Command::Power => vec![power(cfg, &tower)?],
        Command::Poly => poly(cfg, &tower)?,
        Command::Validate => validate(cfg, &tower)?,
        Command::Chart { .. } | Command::Diagnose => {
            return Err(Error::Config("this command does not produce tabular reports".into()))
        }
    };
    Ok(r)
}

pub fn build(cfg: &RunConfig, tower: &TowerModel) -> Result<Report> {
    let mut rep = Report::new(
        "build",
        &[
            ("n", Kind::Int),
            ("r", Kind::Int),
            ("h", Kind::Int),
            ("width", Kind::Rational),
            ("mu_column", Kind::Rational),
            ("mu_spacers", Kind::Rational),
            ("sbar_over_h", Kind::Rational),
            ("finite_measure_sum", Kind::Rational),
        ],
    )
    .with_meta("family", tower.rule().name());
    for n in 0..=cfg.stages() {
        let st = tower.stage(n)?;
        let (sum, _) = tower.finite_measure_partial_sum(n)?;
        let last = n == cfg.stages();
        rep.push(vec![
            n.into(),
            if last { Cell::Missing } else { st.cuts.clone().into() },
            st.height.clone().into(),
            st.width().into(),
            st.column_measure().into(),
            if last { Cell::Missing } else { st.spacer_measure().into() },
            if last { Cell::Missing } else { st.spacer_ratio().into() },
            sum.into(),
        ]);
    }
    Ok(rep)
}

fn status(unresolved: &Rational) -> &'static str {
    if unresolved.is_zero() {
        "exact"
    } else {
        "partial"
    }
}

pub fn correlate(cfg: &RunConfig, tower: &TowerModel) -> Result<Report> {
    let m = cfg.ref_column();
    let budget = cfg.budget();
    let pairs: Vec<(String, String)> = match &cfg.correlate.pairs {
        Some(p) => p.clone(),
        None => {
            let names: Vec<&String> = cfg.sets.keys().collect();
            names
                .iter()
                .flat_map(|a| names.iter().map(move |b| (a.to_string(), b.to_string())))
                .collect()
        }
    };
    let ts = sample_exponents(tower, &cfg.correlate.sampling(), (1, m.max(2)))?;
    let mut rep = Report::new(
        "correlate",
        &[
            ("series", Kind::Text),
            ("x", Kind::Int),
            ("raw", Kind::Rational),
            ("value", Kind::Rational),
            ("unresolved_mass", Kind::Rational),
            ("status", Kind::Text),
        ],
    )
    .with_meta("ref_column", m);
    for (a, b) in &pairs {
        let (sa, sb) = (cfg.set(a)?, cfg.set(b)?);
        let rows: Vec<Vec<Cell>> = ts
            .par_iter()
            .map(|&t| {
                let series = Cell::from(format!("{a}|{b}"));
                match correlation(tower, &sa, &sb, t, m, &budget) {
                    Ok(row) => Ok(vec![
                        series,
                        t.into(),
                        row.raw.into(),
                        row.normalized.into(),
                        (&row.unresolved_mass).into(),
                        status(&row.unresolved_mass).into(),
                    ]),
                    Err(Error::Budget { .. }) => Ok(vec![
                        series,
                        t.into(),
                        Cell::Missing,
                        Cell::Missing,
                        Cell::Missing,
                        "budget".into(),
                    ]),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        for row in rows {
            rep.push(row);
        }
    }
    Ok(rep)
}

fn average_columns() -> Vec<(&'static str, Kind)> {
    vec![
        ("series", Kind::Text),
        ("x", Kind::Int),
        ("value", Kind::Rational),
        ("tail_bound", Kind::Rational),
        ("ref_column", Kind::Int),
        ("deepest_column", Kind::Int),
        ("divergent", Kind::Bool),
        ("terms", Kind::Int),
        ("unresolved_mass", Kind::Rational),
    ]
}

fn average_row(series: &str, x: impl Into<Cell>, a: &AverageResult) -> Vec<Cell> {
    vec![
        series.into(),
        x.into(),
        (&a.value).into(),
        (&a.tail_bound).into(),
        a.ref_column.into(),
        a.deepest_column.into(),
        a.divergent.into(),
        a.terms.into(),
        (&a.unresolved_mass).into(),
    ]
}

pub fn ergavg(cfg: &RunConfig, tower: &TowerModel) -> Result<Report> {
    let m = cfg.ref_column();
    let budget = cfg.budget();
    let (name, b) = cfg.set_or_first(cfg.ergavg.b.as_deref())?;
    let mut rep = Report::new("ergavg", &average_columns()).with_meta("set", &name);
    if let Some(exps) = &cfg.ergavg.exponents {
        let a = ergodic_average(tower, exps, &b, m, &budget)?;
        rep.push(average_row(&name, exps.len(), &a));
        return Ok(rep);
    }
    let k = cfg.ergavg.k.unwrap_or(1);
    let (lo, hi) = cfg.ergavg.stages.unwrap_or((1, cfg.stages()));
    let rows: Vec<Vec<Cell>> = (lo..hi)
        .into_par_iter()
        .map(|n| {
            let a = dynseq_ergodic_average(tower, n, k, &b, m, &budget)?;
            Ok(average_row(&format!("{name} k={k}"), n, &a))
        })
        .collect::<Result<_>>()?;
    for row in rows {
        rep.push(row);
    }
    Ok(rep)
}

pub fn slice(cfg: &RunConfig, tower: &TowerModel) -> Result<Vec<Report>> {
    let m = cfg.ref_column();
    let budget = cfg.budget();
    let p = cfg.slice.stage.unwrap_or(m);
    let k = cfg.slice.k.unwrap_or(1);
    let residual = BigUint::from(cfg.slice.m.unwrap_or(0));
    let eps = match &cfg.slice.epsilon {
        Some(e) => e.value()?,
        None => epsilon_schedule(tower, p)?,
    };
    let s = build_slicing_with(tower, p, k, &residual, &eps, cfg.criterion()?)?;
    let (name, b) = cfg.set_or_first(cfg.slice.b.as_deref())?;

    let mut parts = Report::new(
        "slice",
        &[
            ("q", Kind::Int),
            ("ell", Kind::Int),
            ("alpha", Kind::Int),
            ("beta", Kind::Int),
            ("beta_prime", Kind::Int),
            ("lower", Kind::Int),
            ("upper", Kind::Int),
            ("size", Kind::Int),
        ],
    )
    .with_meta("stage", p)
    .with_meta("k", k)
    .with_meta("epsilon", &eps);
    for q in 0..s.q_count() {
        parts.push(vec![
            q.into(),
            s.ell[q].into(),
            s.alpha[q].into(),
            s.beta[q].clone().into(),
            s.beta_prime[q].clone().into(),
            s.lower[q].clone().into(),
            s.upper[q].clone().into(),
            s.gamma[q].len().into(),
        ]);
    }

    let mut checks = Report::new(
        "slice_checks",
        &[("check", Kind::Text), ("passed", Kind::Bool), ("required", Kind::Bool), ("detail", Kind::Text)],
    );
    for c in validate_slicing(&s, tower)? {
        checks.push(vec![c.name.into(), c.passed.into(), c.required.into(), c.detail.into()]);
    }

    let mut avg = Report::new("slice_average", &average_columns()).with_meta("set", &name);
    let a = slice_ergodic_average(tower, &s, &b, m, &budget)?;
    avg.push(average_row(&name, p, &a));
    Ok(vec![parts, checks, avg])
}

pub fn uniform(cfg: &RunConfig, tower: &TowerModel) -> Result<Report> {
    let m = cfg.ref_column();
    let budget = cfg.budget();
    let (name, b) = cfg.set_or_first(cfg.uniform.b.as_deref())?;
    let mut columns = average_columns();
    columns.insert(2, ("stage", Kind::Int));
    let mut rep = Report::new("uniform", &columns).with_meta("set", &name);
    let xs = sample_exponents(tower, &cfg.uniform.sampling(), (1, m.max(2)))?;
    let rows: Vec<Vec<Cell>> = xs
        .par_iter()
        .map(|&a| {
            let u = uniform_mixing_sum(tower, a, &b, m, &budget)?;
            let mut row = average_row(&name, a, &u.sum);
            row.insert(2, u.stage.into());
            Ok(row)
        })
        .collect::<Result<_>>()?;
    for row in rows {
        rep.push(row);
    }
    Ok(rep)
}

pub fn power(cfg: &RunConfig, tower: &TowerModel) -> Result<Report> {
    let m = cfg.ref_column();
    let (name, b) = cfg.set_or_first(cfg.power.b.as_deref())?;
    let n = cfg.power.n.unwrap_or(8);
    let k_max = cfg.power.k_max.unwrap_or(4);
    let prof = power_ergodic_profile(tower, n, k_max, &b, m, &cfg.budget())?;
    let mut rep = Report::new("power", &average_columns())
        .with_meta("set", &name)
        .with_meta("n", n)
        .with_meta("sup", &prof.sup)
        .with_meta("argsup", prof.argsup);
    for (k, a) in &prof.rows {
        rep.push(average_row(&format!("{name} n={n}"), *k, a));
    }
    Ok(rep)
}

fn exponent_polynomial(cfg: &RunConfig) -> Result<PolynomialSpec> {
    match &cfg.poly.coefficients {
        Some(c) => Ok(PolynomialSpec::fixed(rationals(c)?)),
        None => cfg.family_polynomial(),
    }
}

pub fn poly(cfg: &RunConfig, tower: &TowerModel) -> Result<Vec<Report>> {
    let m = cfg.ref_column();
    let budget = cfg.budget();
    let (name, b) = cfg.set_or_first(cfg.poly.b.as_deref())?;
    let spec = exponent_polynomial(cfg)?;
    let ns = cfg.poly.n.clone().unwrap_or_else(|| vec![2, 4, 8]);
    let mut avg = Report::new("poly", &average_columns()).with_meta("set", &name);
    let rows: Vec<Vec<Cell>> = ns
        .par_iter()
        .map(|&n| Ok(average_row(&name, n, &polynomial_average(tower, &spec, n, &b, m, &budget)?)))
        .collect::<Result<_>>()?;
    for row in rows {
        avg.push(row);
    }

    let mut closed = Report::new(
        "poly_partial_sums",
        &[
            ("n", Kind::Int),
            ("k", Kind::Int),
            ("coefficients", Kind::Text),
            ("lead", Kind::Rational),
            ("matches_direct_sum", Kind::Bool),
        ],
    );
    let family_poly = cfg.family.kind == "polynomial";
    for n in 0..cfg.stages() {
        for &k in cfg.poly.windows.as_deref().unwrap_or(&[1, 2]) {
            let pk = partial_sum_polynomial(&spec, n, k)?;
            let coeffs = pk.coefficients(0)?;
            let text = coeffs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
            let matches = if family_poly { Cell::from(matches_direct(tower, &pk, n, k)?) } else { Cell::Missing };
            closed.push(vec![n.into(), k.into(), text.into(), pk.lead(0)?.into(), matches]);
        }
    }
    Ok(vec![avg, closed])
}

fn matches_direct(tower: &TowerModel, pk: &PolynomialSpec, n: usize, k: usize) -> Result<Option<bool>> {
    let stage = materialize_stage(tower.rule(), n)?;
    if k >= stage.r() {
        return Ok(None);
    }
    let ps = partial_sums(&stage, k)?;
    for (j, v) in ps.values.iter().enumerate() {
        if pk.eval(0, &j.into())? != from_uint(v) {
            return Ok(Some(false));
        }
    }
    Ok(Some(true))
}

pub fn validate(cfg: &RunConfig, tower: &TowerModel) -> Result<Vec<Report>> {
    let l_max = cfg.validate.l_max.unwrap_or(6);
    let (lo, hi) = cfg.validate.stages.unwrap_or((0, cfg.stages()));
    let d = family_diagnostics(tower, l_max, lo..hi)?;
    let flagged = d.flagged.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
    let mut growth = Report::new(
        "validate",
        &[
            ("n", Kind::Int),
            ("r", Kind::Int),
            ("h", Kind::Int),
            ("clamped", Kind::Bool),
            ("r2_over_h", Kind::Rational),
            ("r_sbar_over_h", Kind::Rational),
            ("lead_over_n", Kind::Rational),
        ],
    )
    .with_meta("family", &d.family)
    .with_meta("flagged", &flagged)
    .with_meta("passes", d.passes());
    let mut div = Report::new(
        "validate_divisibility",
        &[("series", Kind::Text), ("x", Kind::Int), ("value", Kind::Rational), ("informational", Kind::Bool)],
    );
    for st in &d.stages {
        growth.push(vec![
            st.n.into(),
            st.cuts.clone().into(),
            st.height.clone().into(),
            st.clamped.into(),
            (&st.r2_over_h).into(),
            (&st.r_sbar_over_h).into(),
            st.lead_over_n.clone().into(),
        ]);
        for (l, frac) in &st.divisibility {
            div.push(vec![format!("L={l}").into(), st.n.into(), frac.clone().into(), (*l == 1).into()]);
        }
    }
    Ok(vec![growth, div])
}

/// The three finite-stage proxies side by side, plus family diagnostics.
pub fn diagnose(cfg: &RunConfig) -> Result<Json> {
    let tower = cfg.tower()?;
    let m = cfg.ref_column();
    let budget = cfg.budget();
    let mut bundle = Map::new();
    bundle.insert("tower".into(), build(cfg, &tower)?.to_json_value());
    bundle.insert("uniform_mixing".into(), uniform(cfg, &tower)?.to_json_value());

    let mut ergodic = Map::new();
    let (name, b) = cfg.set_or_first(cfg.ergavg.b.as_deref())?;
    let mut dyn_cfg = cfg.clone();
    dyn_cfg.ergavg.exponents = None;
    ergodic.insert("dynseq".into(), ergavg(&dyn_cfg, &tower)?.to_json_value());
    let slices = slice_summary(cfg, &tower, &b, m, &budget)?;
    ergodic.insert("slice".into(), slices.to_json_value());
    ergodic.insert("set".into(), Json::String(name));
    bundle.insert("ergodic".into(), Json::Object(ergodic));

    bundle.insert("correlation".into(), correlate(cfg, &tower)?.to_json_value());
    let fam: Vec<Json> = validate(cfg, &tower)?.iter().map(Report::to_json_value).collect();
    bundle.insert("family".into(), Json::Array(fam));
    bundle.insert("ref_column".into(), Json::from(m));
    Ok(Json::Object(bundle))
}

/// Slice ergodic averages over the `[ergavg]` stage range, using the default
/// epsilon schedule. Stages too narrow for the window are skipped.
fn slice_summary(cfg: &RunConfig, tower: &TowerModel, b: &LevelSet, m: usize, budget: &Budget) -> Result<Report> {
    let k = cfg.slice.k.unwrap_or(1);
    let mut rep = Report::new("slice_average", &average_columns());
    let criterion = cfg.criterion()?;
    let (lo, hi) = cfg.ergavg.stages.unwrap_or((1, cfg.stages()));
    let stages: Vec<usize> = (lo.max(1)..hi).collect();
    let rows: Vec<Option<Vec<Cell>>> = stages
        .par_iter()
        .map(|&p| {
            let r = materialize_stage(tower.rule(), p)?.r();
            if k >= r {
                return Ok(None);
            }
            let eps = epsilon_schedule(tower, p)?;
            let s = build_slicing_with(tower, p, k, &BigUint::zero(), &eps, criterion)?;
            let a = slice_ergodic_average(tower, &s, b, m, budget)?;
            Ok(Some(average_row(&format!("k={k}"), p, &a)))
        })
        .collect::<Result<_>>()?;
    for row in rows.into_iter().flatten() {
        rep.push(row);
    }
    Ok(rep)
}

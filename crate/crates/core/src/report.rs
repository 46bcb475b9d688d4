//! Tabular reports with exact cells, serialized as CSV or JSON, and a plain
//! SVG line chart for reports that carry `series`, `x` and `value` columns.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde_json::{Map, Value as Json};

use crate::error::{Error, Result};
use crate::num::{parse_rational, to_decimal, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Column type. Rational columns expand to `name` and `name_decimal`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Int,
    Rational,
    Text,
    Bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(BigInt),
    Rat(Rational),
    Text(String),
    Bool(bool),
    /// Left blank, e.g. a row whose computation ran out of budget.
    Missing,
}

impl From<Rational> for Cell {
    fn from(q: Rational) -> Self {
        Cell::Rat(q)
    }
}

impl From<&Rational> for Cell {
    fn from(q: &Rational) -> Self {
        Cell::Rat(q.clone())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

macro_rules! int_cell {
    ($($t:ty),*) => {$(
        impl From<$t> for Cell {
            fn from(x: $t) -> Self {
                Cell::Int(BigInt::from(x))
            }
        }
    )*};
}
int_cell!(u32, u64, u128, usize, i64, i128, BigInt, num_bigint::BigUint);

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Missing, Into::into)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub name: String,
    pub columns: Vec<(String, Kind)>,
    pub rows: Vec<Vec<Cell>>,
    /// Report-level values such as the reference column.
    pub meta: BTreeMap<String, String>,
}

impl Report {
    pub fn new(name: &str, columns: &[(&str, Kind)]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|(c, k)| (c.to_string(), *k)).collect(),
            rows: Vec::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    /// Appends a row; panics if its width disagrees with the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from the header of {}", self.name);
        self.rows.push(row);
    }

    pub fn header(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, kind) in &self.columns {
            out.push(name.clone());
            if *kind == Kind::Rational {
                out.push(format!("{name}_decimal"));
            }
        }
        out
    }

    fn flat_row(&self, row: &[Cell]) -> Vec<String> {
        let mut out = Vec::new();
        for ((_, kind), cell) in self.columns.iter().zip(row) {
            let text = match cell {
                Cell::Int(x) => x.to_string(),
                Cell::Rat(q) => q.to_string(),
                Cell::Text(s) => s.clone(),
                Cell::Bool(b) => b.to_string(),
                Cell::Missing => String::new(),
            };
            out.push(text);
            if *kind == Kind::Rational {
                out.push(match cell {
                    Cell::Rat(q) => to_decimal(q),
                    _ => String::new(),
                });
            }
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Consistency(format!("csv encoding: {e}"));
        w.write_record(self.header()).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(self.flat_row(row)).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Consistency(format!("csv encoding: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Consistency(e.to_string()))
    }

    pub fn to_json_value(&self) -> Json {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for ((name, kind), cell) in self.columns.iter().zip(row) {
                    obj.insert(name.clone(), json_cell(cell));
                    if *kind == Kind::Rational {
                        let dec = match cell {
                            Cell::Rat(q) => Json::String(to_decimal(q)),
                            _ => Json::Null,
                        };
                        obj.insert(format!("{name}_decimal"), dec);
                    }
                }
                Json::Object(obj)
            })
            .collect();
        let header = self.header();
        let mut top = Map::new();
        top.insert("report".into(), Json::String(self.name.clone()));
        top.insert("columns".into(), Json::Array(header.into_iter().map(Json::String).collect()));
        top.insert(
            "meta".into(),
            Json::Object(self.meta.iter().map(|(k, v)| (k.clone(), Json::String(v.clone()))).collect()),
        );
        top.insert("rows".into(), Json::Array(rows));
        Json::Object(top)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("json values always serialize");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => Ok(self.to_json()),
        }
    }

    /// Writes `<dir>/<name>.<ext>` and returns the path.
    pub fn write(&self, dir: &Path, format: Format) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.{}", self.name, format.extension()));
        std::fs::write(&path, self.render(format)?)?;
        Ok(path)
    }
}

fn json_cell(cell: &Cell) -> Json {
    match cell {
        Cell::Int(x) => x.to_i64().map_or_else(|| Json::String(x.to_string()), Json::from),
        Cell::Rat(q) => Json::String(q.to_string()),
        Cell::Text(s) => Json::String(s.clone()),
        Cell::Bool(b) => Json::Bool(*b),
        Cell::Missing => Json::Null,
    }
}

/// A report read back from disk: header plus string cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing field `{name}`")))
    }
}

/// Reads a CSV or JSON report written by [`Report::write`]. The format is
/// taken from the first non-blank character.
pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    parse_table(&text)
}

pub fn parse_table(text: &str) -> Result<Table> {
    if text.trim().is_empty() {
        return Ok(Table::default());
    }
    if text.trim_start().starts_with('{') {
        return parse_json_table(text);
    }
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let schema = |e: csv::Error| Error::Schema(format!("unreadable csv: {e}"));
    let header = r.headers().map_err(schema)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(schema)?.iter().map(str::to_string).collect());
    }
    Ok(Table { header, rows })
}

fn parse_json_table(text: &str) -> Result<Table> {
    let v: Json = serde_json::from_str(text).map_err(|e| Error::Schema(format!("unreadable json: {e}")))?;
    let header: Vec<String> = v
        .get("columns")
        .and_then(Json::as_array)
        .ok_or_else(|| Error::Schema("missing field `columns`".into()))?
        .iter()
        .map(|c| c.as_str().unwrap_or_default().to_string())
        .collect();
    let rows = v
        .get("rows")
        .and_then(Json::as_array)
        .ok_or_else(|| Error::Schema("missing field `rows`".into()))?
        .iter()
        .map(|row| {
            header
                .iter()
                .map(|h| match row.get(h) {
                    Some(Json::String(s)) => s.clone(),
                    Some(Json::Null) | None => String::new(),
                    Some(other) => other.to_string(),
                })
                .collect()
        })
        .collect();
    Ok(Table { header, rows })
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];

/// Renders one polyline per distinct `series` value, plotting `value_decimal`
/// against `x`. Rows with a blank value are skipped.
pub fn chart_svg(table: &Table, title: &str) -> Result<String> {
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    if !table.rows.is_empty() || !table.header.is_empty() {
        let (si, xi, vi) = (table.column("series")?, table.column("x")?, table.column("value_decimal")?);
        for row in &table.rows {
            let cell = |i: usize| row.get(i).map(String::as_str).unwrap_or_default();
            if cell(vi).is_empty() {
                continue;
            }
            let x = parse_rational(cell(xi))?
                .to_f64()
                .ok_or_else(|| Error::Schema(format!("x value {:?} is not finite", cell(xi))))?;
            let y: f64 = cell(vi)
                .parse()
                .map_err(|_| Error::Schema(format!("value_decimal {:?} is not a number", cell(vi))))?;
            let name = cell(si).to_string();
            match series.iter_mut().find(|(n, _)| *n == name) {
                Some((_, pts)) => pts.push((x, y)),
                None => series.push((name, vec![(x, y)])),
            }
        }
    }
    for (_, pts) in &mut series {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>"#);
    let label = |s: &mut String, x: f64, y: f64, anchor: &str, v: f64| {
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{v:.4e}</text>"#
        );
    };
    label(&mut s, left, bottom + 18.0, "start", x0);
    label(&mut s, right, bottom + 18.0, "end", x1);
    label(&mut s, left - 6.0, bottom, "end", y0);
    label(&mut s, left - 6.0, top + 4.0, "end", y1);
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            points.join(" "),
            escape(name)
        );
        let ly = top + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" text-anchor="end" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            right,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

//! TOML run configuration shared by the command-line tool and the examples.
//!
//! ```toml
//! stages = 4
//! ref_column = 2
//!
//! [family]
//! kind = "staircase"
//! cuts = { slope = 1, offset = 2 }
//!
//! [sets.A]
//! column = 1
//! ranges = [[0, 1]]
//!
//! [correlate]
//! pairs = [["A", "A"]]
//! t = [0, 3]
//! ```
//!
//! Rationals are written as integers or strings such as `"1/12"`. Level
//! ranges are half-open. The full schema is described in the README.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::One;
use serde::Deserialize;

use crate::dynseq::{BoundRule, CutRule, SpacerRule};
use crate::error::{Error, Result};
use crate::families::{CoefficientSchedule, PolynomialSpec};
use crate::families::{
    make_constant, make_ornstein, make_polynomial_staircase, make_simple_polystair, make_smorodinsky,
    make_staircase,
};
use crate::dynseq::{RuleKind, BreakCriterion};
use crate::num::{parse_rational, Rational};
use crate::tower::{Budget, LevelSet, TowerModel};

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum RatLit {
    Int(i64),
    Text(String),
}

impl RatLit {
    pub fn value(&self) -> Result<Rational> {
        match self {
            RatLit::Int(i) => Ok(Rational::from_integer((*i).into())),
            RatLit::Text(s) => parse_rational(s).map_err(|_| Error::Config(format!("not a rational: {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum CutSpec {
    Constant(u64),
    Table(Vec<u64>),
    Linear { slope: u64, offset: u64 },
}

impl From<&CutSpec> for CutRule {
    fn from(c: &CutSpec) -> Self {
        match c {
            CutSpec::Constant(x) => CutRule::Constant(*x),
            CutSpec::Table(t) => CutRule::Table(t.clone()),
            CutSpec::Linear { slope, offset } => CutRule::Linear {
                slope: *slope,
                offset: *offset,
            },
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum BoundSpec {
    Constant(u64),
    Linear { slope: u64, offset: u64 },
}

#[derive(Clone, Debug, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// `staircase`, `smorodinsky`, `constant`, `polynomial`,
    /// `simple_polystair`, `ornstein` or `explicit`.
    pub kind: String,
    pub cuts: Option<CutSpec>,
    /// Spacer count of the constant family.
    pub value: Option<u64>,
    /// Polynomial coefficients from the constant term up.
    pub coefficients: Option<Vec<RatLit>>,
    /// Per-stage increase of each coefficient.
    pub coefficient_slopes: Option<Vec<RatLit>>,
    pub degree: Option<u32>,
    pub delta: Option<RatLit>,
    pub seed: Option<u64>,
    pub bound: Option<BoundSpec>,
    /// Spacer arrays of the explicit family, one per stage.
    pub spacers: Option<Vec<Vec<u64>>>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SetConfig {
    pub column: usize,
    pub ranges: Vec<(u128, u128)>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub pieces: Option<usize>,
    pub depth: Option<usize>,
    pub strict: Option<bool>,
}

/// Exponents given as an explicit list or sampled as `k h_p + residual` for
/// `p` in `stages`, `k` in `1..=multiples`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ExponentSampling {
    pub t: Option<Vec<u128>>,
    pub stages: Option<(usize, usize)>,
    pub multiples: Option<u128>,
    pub residuals: Option<Vec<u128>>,
}

#[derive(Clone, Debug, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct CorrelateConfig {
    /// Pairs of set names; defaults to every ordered pair.
    pub pairs: Option<Vec<(String, String)>>,
    pub t: Option<Vec<u128>>,
    pub stages: Option<(usize, usize)>,
    pub multiples: Option<u128>,
    pub residuals: Option<Vec<u128>>,
}

macro_rules! sampling_of {
    ($($t:ty),*) => {$(
        impl $t {
            pub fn sampling(&self) -> ExponentSampling {
                ExponentSampling {
                    t: self.t.clone(),
                    stages: self.stages,
                    multiples: self.multiples,
                    residuals: self.residuals.clone(),
                }
            }
        }
    )*};
}
sampling_of!(CorrelateConfig, UniformConfig);

#[derive(Clone, Debug, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ErgavgConfig {
    pub b: Option<String>,
    /// Explicit exponents; otherwise the window-`k` partial sums of each
    /// stage in `stages`.
    pub exponents: Option<Vec<i128>>,
    pub stages: Option<(usize, usize)>,
    pub k: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct SliceConfig {
    pub b: Option<String>,
    pub stage: Option<usize>,
    pub k: Option<usize>,
    pub m: Option<u128>,
    /// Defaults to the built-in schedule for the stage.
    pub epsilon: Option<RatLit>,
    /// `shifted` or `fixed`.
    pub criterion: Option<String>,
}

#[derive(Clone, Debug, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct UniformConfig {
    pub b: Option<String>,
    pub t: Option<Vec<u128>>,
    pub stages: Option<(usize, usize)>,
    pub multiples: Option<u128>,
    pub residuals: Option<Vec<u128>>,
}

#[derive(Clone, Debug, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    pub b: Option<String>,
    pub n: Option<usize>,
    pub k_max: Option<u128>,
}

#[derive(Clone, Debug, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct PolyConfig {
    pub b: Option<String>,
    /// Polynomial of the exponents; defaults to the family's own polynomial.
    pub coefficients: Option<Vec<RatLit>>,
    pub n: Option<Vec<usize>>,
    /// Windows `k` for the closed-form partial-sum polynomials.
    pub windows: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub l_max: Option<u64>,
    pub stages: Option<(usize, usize)>,
}

#[derive(Clone, Debug, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Number of stages materialized up front.
    pub stages: Option<usize>,
    pub ref_column: Option<usize>,
    pub family: FamilyConfig,
    #[serde(default)]
    pub sets: BTreeMap<String, SetConfig>,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub correlate: CorrelateConfig,
    #[serde(default)]
    pub ergavg: ErgavgConfig,
    #[serde(default)]
    pub slice: SliceConfig,
    #[serde(default)]
    pub uniform: UniformConfig,
    #[serde(default)]
    pub power: PowerConfig,
    #[serde(default)]
    pub poly: PolyConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
}

pub const DEFAULT_STAGES: usize = 4;

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn stages(&self) -> usize {
        self.stages.unwrap_or(DEFAULT_STAGES)
    }

    pub fn ref_column(&self) -> usize {
        self.ref_column.unwrap_or_else(|| self.stages().min(2))
    }

    fn check(&self) -> Result<()> {
        let max = self.stages();
        if self.ref_column() > max {
            return Err(Error::Config(format!("ref_column {} exceeds stages = {max}", self.ref_column())));
        }
        for (name, s) in &self.sets {
            if s.column > max {
                return Err(Error::Config(format!("sets.{name}: column {} exceeds stages = {max}", s.column)));
            }
        }
        if self.budget.pieces == Some(0) || self.budget.depth == Some(0) {
            return Err(Error::Config("budget.pieces and budget.depth must be positive".into()));
        }
        Ok(())
    }

    pub fn budget(&self) -> Budget {
        let d = Budget::default();
        Budget {
            max_pieces: self.budget.pieces.unwrap_or(d.max_pieces),
            max_depth: self.budget.depth.unwrap_or(d.max_depth),
            strict: self.budget.strict.unwrap_or(d.strict),
        }
    }

    /// Builds the spacer rule of the `[family]` block.
    pub fn rule(&self) -> Result<SpacerRule> {
        let f = &self.family;
        let cuts = || -> Result<CutRule> {
            f.cuts
                .as_ref()
                .map(CutRule::from)
                .ok_or_else(|| Error::Config(format!("family.cuts is required for kind {:?}", f.kind)))
        };
        let rule = match f.kind.as_str() {
            "staircase" => make_staircase(cuts()?)?,
            "smorodinsky" => make_smorodinsky()?,
            "constant" => make_constant(f.value.unwrap_or(0), cuts()?)?,
            "polynomial" => make_polynomial_staircase(self.family_polynomial()?, cuts()?)?,
            "simple_polystair" => {
                let delta = f.delta.as_ref().map(RatLit::value).transpose()?.unwrap_or_else(Rational::one);
                make_simple_polystair(f.degree.unwrap_or(1), delta)?
            }
            "ornstein" => {
                let bound = match f.bound.as_ref() {
                    Some(BoundSpec::Constant(c)) => BoundRule::Constant(*c),
                    Some(BoundSpec::Linear { slope, offset }) => BoundRule::Linear {
                        slope: *slope,
                        offset: *offset,
                    },
                    None => return Err(Error::Config("family.bound is required for kind \"ornstein\"".into())),
                };
                make_ornstein(f.seed.unwrap_or(0), bound, cuts()?)?
            }
            "explicit" => SpacerRule::new(RuleKind::Explicit {
                stages: f
                    .spacers
                    .clone()
                    .ok_or_else(|| Error::Config("family.spacers is required for kind \"explicit\"".into()))?,
            })?,
            other => return Err(Error::Config(format!("unknown family kind {other:?}"))),
        };
        Ok(rule)
    }

    /// The family's stage polynomial from `coefficients` and optional
    /// `coefficient_slopes`.
    pub fn family_polynomial(&self) -> Result<PolynomialSpec> {
        let f = &self.family;
        let base = rationals(
            f.coefficients
                .as_ref()
                .ok_or_else(|| Error::Config("family.coefficients is required".into()))?,
        )?;
        match &f.coefficient_slopes {
            None => Ok(PolynomialSpec::fixed(base)),
            Some(sl) => {
                let slope = rationals(sl)?;
                let degree = base.len().max(slope.len()).saturating_sub(1);
                PolynomialSpec::new(degree, CoefficientSchedule::Affine { base, slope })
            }
        }
    }

    /// Materializes the tower up to `stages` and freezes it.
    pub fn tower(&self) -> Result<TowerModel> {
        let tower = TowerModel::new(self.rule()?);
        tower.freeze(self.stages())?;
        Ok(tower)
    }

    pub fn set(&self, name: &str) -> Result<LevelSet> {
        let s = self
            .sets
            .get(name)
            .ok_or_else(|| Error::Config(format!("no set named {name:?} in [sets]")))?;
        Ok(LevelSet::new(s.column, s.ranges.clone()))
    }

    /// The set named `name`, or the sole/first configured set.
    pub fn set_or_first(&self, name: Option<&str>) -> Result<(String, LevelSet)> {
        let name = match name {
            Some(n) => n.to_string(),
            None => self
                .sets
                .keys()
                .next()
                .cloned()
                .ok_or_else(|| Error::Config("no sets configured".into()))?,
        };
        let set = self.set(&name)?;
        Ok((name, set))
    }

    pub fn criterion(&self) -> Result<BreakCriterion> {
        match self.slice.criterion.as_deref() {
            None | Some("shifted") => Ok(BreakCriterion::ShiftedWindow),
            Some("fixed") => Ok(BreakCriterion::FixedWindow),
            Some(other) => Err(Error::Config(format!("slice.criterion must be \"shifted\" or \"fixed\", not {other:?}"))),
        }
    }
}

pub fn rationals(v: &[RatLit]) -> Result<Vec<Rational>> {
    v.iter().map(RatLit::value).collect()
}

/// Explicit `t` list, or `k h_p + r` over the configured stages, multiples
/// and residuals, deduplicated and sorted.
pub fn sample_exponents(tower: &TowerModel, s: &ExponentSampling, default_stages: (usize, usize)) -> Result<Vec<u128>> {
    if let Some(t) = &s.t {
        return Ok(t.clone());
    }
    let (lo, hi) = s.stages.unwrap_or(default_stages);
    let mut out = Vec::new();
    for p in lo..hi {
        let h = tower.height_u128(p)?;
        let next = tower.height_u128(p + 1)?;
        let kmax = s.multiples.unwrap_or(u128::MAX);
        for k in 1..=kmax {
            let base = match k.checked_mul(h) {
                Some(b) if b < next => b,
                _ => break,
            };
            for r in s.residuals.as_deref().unwrap_or(&[0]) {
                if let Some(t) = base.checked_add(*r).filter(|t| *t < next) {
                    out.push(t);
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    const R23: &str = r#"
stages = 4
ref_column = 2
[family]
kind = "staircase"
cuts = { slope = 1, offset = 2 }
[sets.A]
column = 1
ranges = [[0, 1]]
[correlate]
pairs = [["A", "A"]]
t = [0, 3]
"#;

    #[test]
    fn parses_fixture() {
        let cfg = RunConfig::parse(R23).unwrap();
        let tower = cfg.tower().unwrap();
        let h: Vec<BigUint> = (0..4).map(|n| tower.height(n).unwrap()).collect();
        assert_eq!(h, [1u32, 3, 12, 54].map(BigUint::from));
        assert_eq!(cfg.set("A").unwrap(), LevelSet::level(1, 0));
    }

    #[test]
    fn reports_field_errors() {
        let err = RunConfig::parse("stages = 4\n[family]\nkind = \"staircase\"\nbogus = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line"), "{msg}");
        let err = RunConfig::parse("stages = 2\n[family]\nkind = \"staircase\"\ncuts = 2\n[sets.A]\ncolumn = 3\nranges = []\n").unwrap_err();
        assert!(err.to_string().contains("sets.A"));
    }

    #[test]
    fn exponent_sampling_follows_heights() {
        let cfg = RunConfig::parse(R23).unwrap();
        let tower = cfg.tower().unwrap();
        let s = ExponentSampling {
            stages: Some((1, 2)),
            residuals: Some(vec![0, 1]),
            ..Default::default()
        };
        assert_eq!(sample_exponents(&tower, &s, (0, 0)).unwrap(), vec![3, 4, 6, 7, 9, 10]);
    }
}

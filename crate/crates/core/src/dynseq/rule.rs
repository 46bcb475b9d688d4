use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::families::poly::{eval_coeffs, prefix_value, PolynomialSpec};
use crate::num::{nth_root_floor, power_sum, Rational};
use crate::rng;

/// Widest stage that is ever enumerated value by value.
pub const MAX_MATERIALIZED_CUTS: usize = 1 << 24;

/// Cut counts `r_n` for rules that do not derive them from the heights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CutRule {
    Constant(u64),
    /// `r_n = slope * n + offset`.
    Linear { slope: u64, offset: u64 },
    Table(Vec<u64>),
}

impl CutRule {
    fn at(&self, n: usize) -> Option<u64> {
        match self {
            CutRule::Constant(c) => Some(*c),
            CutRule::Linear { slope, offset } => slope
                .checked_mul(n as u64)
                .and_then(|x| x.checked_add(*offset)),
            CutRule::Table(t) => t.get(n).copied(),
        }
    }
}

/// Upper bounds for the uniform spacer draws of the stochastic family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundRule {
    Constant(u64),
    Linear { slope: u64, offset: u64 },
}

impl BoundRule {
    pub fn at(&self, n: usize) -> u64 {
        match self {
            BoundRule::Constant(c) => *c,
            BoundRule::Linear { slope, offset } => slope.saturating_mul(n as u64).saturating_add(*offset),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RuleKind {
    /// `s_{n,j} = j`.
    Staircase { cuts: CutRule },
    /// `s_{n,j} = value`.
    Constant { value: u64, cuts: CutRule },
    /// `s_{n,j} = p_n(j)`.
    Polynomial { poly: PolynomialSpec, cuts: CutRule },
    /// `s_{n,j} = j^D` with `r_n = max(2, floor(h_n^(1/(D+delta))))`.
    SimplePolystair { degree: u32, delta: Rational },
    /// Independent uniform draws on `{0, ..., bound(n)}`.
    Ornstein { seed: u64, bound: BoundRule, cuts: CutRule },
    /// Explicit stage arrays; the cut count is the array length.
    Explicit { stages: Vec<Vec<u64>> },
}

#[derive(Default)]
struct Memo {
    /// heights of self-referential rules
    heights: RwLock<Vec<BigUint>>,
    cuts: RwLock<Vec<(BigUint, bool)>>,
    prefix: RwLock<HashMap<usize, Arc<Vec<BigUint>>>>,
    validated: RwLock<HashSet<usize>>,
}

/// Generator of cut counts `r_n` and spacer counts `s_{n,j}`.
#[derive(Clone)]
pub struct SpacerRule {
    kind: RuleKind,
    memo: Arc<Memo>,
}

impl fmt::Debug for SpacerRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpacerRule").field("kind", &self.kind).finish()
    }
}

impl PartialEq for SpacerRule {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

impl SpacerRule {
    pub fn new(kind: RuleKind) -> Result<Self> {
        if let RuleKind::SimplePolystair { degree, delta } = &kind {
            if *degree < 1 || !delta.is_positive() {
                return Err(Error::domain("simple polynomial staircase needs D >= 1 and delta > 0"));
            }
        }
        if let RuleKind::Polynomial { poly, .. } = &kind {
            if poly.degree() > 64 {
                return Err(Error::domain("polynomial degree above 64"));
            }
        }
        Ok(Self {
            kind,
            memo: Arc::new(Memo::default()),
        })
    }

    pub fn kind(&self) -> &RuleKind {
        &self.kind
    }

    /// Seed of a stochastic rule, if any.
    pub fn seed(&self) -> Option<u64> {
        match &self.kind {
            RuleKind::Ornstein { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match &self.kind {
            RuleKind::Staircase { .. } => "staircase",
            RuleKind::Constant { .. } => "constant",
            RuleKind::Polynomial { .. } => "polynomial",
            RuleKind::SimplePolystair { .. } => "simple_polystair",
            RuleKind::Ornstein { .. } => "ornstein",
            RuleKind::Explicit { .. } => "explicit",
        }
    }

    /// `r_n`; fails when the rule yields fewer than two cuts.
    pub fn cuts(&self, n: usize) -> Result<BigUint> {
        Ok(self.cuts_clamped(n)?.0)
    }

    /// Whether `r_n` was raised to 2 by the clamp of the self-referential family.
    pub fn clamped(&self, n: usize) -> Result<bool> {
        Ok(self.cuts_clamped(n)?.1)
    }

    fn cuts_clamped(&self, n: usize) -> Result<(BigUint, bool)> {
        let (r, clamped) = match &self.kind {
            RuleKind::Staircase { cuts }
            | RuleKind::Constant { cuts, .. }
            | RuleKind::Polynomial { cuts, .. }
            | RuleKind::Ornstein { cuts, .. } => {
                let r = cuts.at(n).ok_or_else(|| {
                    Error::construction(n, None, "cut rule undefined or overflowing at this stage")
                })?;
                (big(r), false)
            }
            RuleKind::Explicit { stages } => {
                let s = stages.get(n).ok_or_else(|| {
                    Error::construction(n, None, format!("only {} explicit stages", stages.len()))
                })?;
                (big(s.len() as u64), false)
            }
            RuleKind::SimplePolystair { .. } => self.polystair_cuts(n)?,
        };
        if r < big(2) {
            return Err(Error::construction(n, None, format!("cut count r_n = {r} is below 2")));
        }
        Ok((r, clamped))
    }

    fn polystair_cuts(&self, n: usize) -> Result<(BigUint, bool)> {
        let RuleKind::SimplePolystair { degree, delta } = &self.kind else {
            unreachable!()
        };
        if let Some(c) = self.memo.cuts.read().unwrap().get(n) {
            return Ok(c.clone());
        }
        let mut heights = self.memo.heights.write().unwrap();
        let mut cuts = self.memo.cuts.write().unwrap();
        if heights.is_empty() {
            heights.push(BigUint::one());
        }
        // delta = a/b, so h^(1/(D+delta)) = (h^b)^(1/(bD+a))
        let a = delta.numer().to_u32().ok_or_else(|| Error::domain("delta numerator too large"))?;
        let b = delta.denom().to_u32().ok_or_else(|| Error::domain("delta denominator too large"))?;
        let root = b
            .checked_mul(*degree)
            .and_then(|x| x.checked_add(a))
            .ok_or_else(|| Error::domain("root index overflows"))?;
        while cuts.len() <= n {
            let z = cuts.len();
            let h = &heights[z];
            let raw = nth_root_floor(&num_traits::pow(h.clone(), b as usize), root);
            let (r, clamped) = if raw < big(2) { (big(2), true) } else { (raw, false) };
            let total = power_sum(*degree, &BigInt::from(r.clone()));
            let next = &r * h + total.to_biguint().expect("power sums are nonnegative");
            heights.push(next);
            cuts.push((r, clamped));
        }
        Ok(cuts[n].clone())
    }

    /// `s_{n,j}` for `j < r_n`.
    pub fn spacer(&self, n: usize, j: &BigUint) -> Result<BigUint> {
        let r = self.cuts(n)?;
        if j >= &r {
            return Err(Error::construction(
                n,
                Some(j.to_string()),
                format!("index outside Z_{{r_n}} with r_n = {r}"),
            ));
        }
        match &self.kind {
            RuleKind::Staircase { .. } => Ok(j.clone()),
            RuleKind::Constant { value, .. } => Ok(big(*value)),
            RuleKind::Polynomial { poly, .. } => {
                let v = poly.eval(n, &BigInt::from(j.clone()))?;
                check_spacer(n, j, &v)
            }
            RuleKind::SimplePolystair { degree, .. } => Ok(num_traits::pow(j.clone(), *degree as usize)),
            RuleKind::Ornstein { seed, bound, .. } => {
                let j = j.to_u64().ok_or_else(|| Error::Overflow("stochastic index beyond 64 bits".into()))?;
                Ok(big(rng::uniform_inclusive(*seed, n as u64, j, bound.at(n))))
            }
            RuleKind::Explicit { stages } => {
                let j = j.to_usize().expect("bounded by table length");
                Ok(big(stages[n][j]))
            }
        }
    }

    /// `sum_{z<j} s_{n,z}` for `j <= r_n`.
    pub fn prefix(&self, n: usize, j: &BigUint) -> Result<BigUint> {
        let r = self.cuts(n)?;
        if j > &r {
            return Err(Error::domain(format!("prefix length {j} exceeds r_{n} = {r}")));
        }
        match &self.kind {
            RuleKind::Staircase { .. } => {
                let j = BigInt::from(j.clone());
                Ok(power_sum(1, &j).to_biguint().expect("nonnegative"))
            }
            RuleKind::Constant { value, .. } => Ok(big(*value) * j),
            RuleKind::SimplePolystair { degree, .. } => Ok(power_sum(*degree, &BigInt::from(j.clone()))
                .to_biguint()
                .expect("nonnegative")),
            RuleKind::Polynomial { poly, .. } => {
                self.validate_polynomial_stage(n, poly, &r)?;
                let v = prefix_value(&poly.coefficients(n)?, &BigInt::from(j.clone()));
                check_spacer(n, j, &v)
            }
            RuleKind::Ornstein { .. } | RuleKind::Explicit { .. } => {
                let table = self.prefix_table(n)?;
                let j = j.to_usize().expect("bounded by the table length");
                Ok(table[j].clone())
            }
        }
    }

    /// `sum_{j<r_n} s_{n,j}`.
    pub fn total(&self, n: usize) -> Result<BigUint> {
        let r = self.cuts(n)?;
        self.prefix(n, &r)
    }

    fn prefix_table(&self, n: usize) -> Result<Arc<Vec<BigUint>>> {
        if let Some(t) = self.memo.prefix.read().unwrap().get(&n) {
            return Ok(t.clone());
        }
        let values = self.stage_values(n)?;
        let mut acc = BigUint::zero();
        let mut table = Vec::with_capacity(values.len() + 1);
        table.push(acc.clone());
        for v in values {
            acc += v;
            table.push(acc.clone());
        }
        let table = Arc::new(table);
        self.memo.prefix.write().unwrap().insert(n, table.clone());
        Ok(table)
    }

    fn validate_polynomial_stage(&self, n: usize, poly: &PolynomialSpec, r: &BigUint) -> Result<()> {
        if self.memo.validated.read().unwrap().contains(&n) {
            return Ok(());
        }
        if !poly.is_integer_valued(n)? {
            return Err(Error::construction(n, None, "stage polynomial is not integer-valued"));
        }
        let width = r.to_usize().filter(|&w| w <= MAX_MATERIALIZED_CUTS).ok_or_else(|| {
            Error::construction(n, None, "stage too wide to validate spacer nonnegativity")
        })?;
        let c = poly.coefficients(n)?;
        for j in 0..width {
            let v = eval_coeffs(&c, &BigInt::from(j));
            check_spacer(n, &big(j as u64), &v)?;
        }
        self.memo.validated.write().unwrap().insert(n);
        Ok(())
    }

    /// All spacer values of stage `n`.
    pub fn stage_values(&self, n: usize) -> Result<Vec<BigUint>> {
        let r = self.cuts(n)?;
        let width = r.to_usize().filter(|&w| w <= MAX_MATERIALIZED_CUTS).ok_or_else(|| {
            Error::Overflow(format!("stage {n} has r_n = {r}, too wide to materialize"))
        })?;
        match &self.kind {
            RuleKind::Explicit { stages } => Ok(stages[n].iter().map(|&v| big(v)).collect()),
            RuleKind::Ornstein { seed, bound, .. } => {
                let b = bound.at(n);
                Ok((0..width as u64)
                    .map(|j| big(rng::uniform_inclusive(*seed, n as u64, j, b)))
                    .collect())
            }
            RuleKind::Polynomial { poly, .. } => {
                let c = poly.coefficients(n)?;
                (0..width)
                    .map(|j| check_spacer(n, &big(j as u64), &eval_coeffs(&c, &BigInt::from(j))))
                    .collect()
            }
            _ => (0..width).map(|j| self.spacer(n, &big(j as u64))).collect(),
        }
    }

    /// Coefficients of the stage polynomial when the rule is polynomial in `j`.
    pub fn stage_polynomial(&self, n: usize) -> Result<Option<Vec<Rational>>> {
        Ok(match &self.kind {
            RuleKind::Staircase { .. } => Some(vec![Rational::zero(), Rational::one()]),
            RuleKind::Constant { value, .. } => Some(vec![Rational::from_integer(BigInt::from(*value))]),
            RuleKind::Polynomial { poly, .. } => Some(poly.coefficients(n)?),
            RuleKind::SimplePolystair { degree, .. } => {
                let mut c = vec![Rational::zero(); *degree as usize + 1];
                c[*degree as usize] = Rational::one();
                Some(c)
            }
            _ => None,
        })
    }

    /// Stages (below `upto`) at which `r_{n+1} <= r_n`; the index sequence of a
    /// dynamical sequence should tend to infinity.
    pub fn non_growing_stages(&self, upto: usize) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for n in 0..upto {
            if self.cuts(n + 1)? <= self.cuts(n)? {
                out.push(n);
            }
        }
        Ok(out)
    }
}

fn check_spacer(n: usize, j: &BigUint, v: &Rational) -> Result<BigUint> {
    if !v.is_integer() {
        return Err(Error::construction(n, Some(j.to_string()), format!("spacer value {v} is not an integer")));
    }
    let v = v.to_integer();
    v.to_biguint()
        .ok_or_else(|| Error::construction(n, Some(j.to_string()), format!("negative spacer count {v}")))
}

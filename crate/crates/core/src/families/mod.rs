//! Named transformation families as spacer rules, and diagnostics for their
//! hypotheses.

pub(crate) mod poly;

use std::ops::Range;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

pub use poly::{CoefficientSchedule, PolynomialSpec};

use crate::dynseq::{BoundRule, CutRule, RuleKind, SpacerRule};
use crate::error::{Error, Result};
use crate::num::{from_uint, rational, Rational};
use crate::tower::TowerModel;

/// Width up to which divisibility counts are taken term by term.
const DIRECT_COUNT_LIMIT: usize = 1 << 16;
/// Longest residue period scanned when a stage is wider than that.
const PERIOD_LIMIT: usize = 1 << 22;

/// `s_{n,j} = j`.
pub fn make_staircase(cuts: CutRule) -> Result<SpacerRule> {
    SpacerRule::new(RuleKind::Staircase { cuts })
}

/// The staircase with cut counts growing by one per stage, started at
/// `r_0 = 2` so that every stage has at least two cuts.
pub fn make_smorodinsky() -> Result<SpacerRule> {
    make_staircase(CutRule::Linear { slope: 1, offset: 2 })
}

/// `s_{n,j} = value`.
pub fn make_constant(value: u64, cuts: CutRule) -> Result<SpacerRule> {
    SpacerRule::new(RuleKind::Constant { value, cuts })
}

/// `s_{n,j} = p_n(j)`; negative or fractional values are rejected when a
/// stage is queried.
pub fn make_polynomial_staircase(spec: PolynomialSpec, cuts: CutRule) -> Result<SpacerRule> {
    SpacerRule::new(RuleKind::Polynomial { poly: spec, cuts })
}

/// `s_{n,j} = j^D` with `r_n = max(2, floor(h_n^(1/(D+delta))))`.
pub fn make_simple_polystair(degree: u32, delta: Rational) -> Result<SpacerRule> {
    SpacerRule::new(RuleKind::SimplePolystair { degree, delta })
}

/// Spacers drawn independently and uniformly from `{0, ..., bound(n)}` with a
/// counter-based SplitMix64 stream keyed by `(seed, n, j)`. A heuristic
/// stand-in for randomly placed spacers.
pub fn make_ornstein(seed: u64, bound: BoundRule, cuts: CutRule) -> Result<SpacerRule> {
    SpacerRule::new(RuleKind::Ornstein { seed, bound, cuts })
}

/// Closed form of `j -> s^{(k)}_{n,j}` for a polynomial stage.
pub fn partial_sum_polynomial(spec: &PolynomialSpec, n: usize, k: usize) -> Result<PolynomialSpec> {
    if k == 0 {
        return Err(Error::domain("window k must be at least 1"));
    }
    let c = spec.coefficients(n)?;
    let w = poly::window_sum_coeffs(&c, &BigInt::from(k));
    PolynomialSpec::new(spec.degree(), CoefficientSchedule::Fixed(w))
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageDiagnostics {
    pub n: usize,
    pub cuts: BigUint,
    pub height: BigUint,
    /// `r_n` was raised to 2 by the clamp.
    pub clamped: bool,
    pub r2_over_h: Rational,
    pub r_sbar_over_h: Rational,
    /// `c_{n,D}/n`, undefined at `n = 0` and for non-polynomial rules.
    pub lead_over_n: Option<Rational>,
    /// `(L, (1/r_n) #{j : L | s_{n,j+1} - s_{n,j}})` for `L = 1..=Lmax`; `None`
    /// when the stage is too wide to count.
    pub divisibility: Vec<(u64, Option<Rational>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyDiagnostics {
    pub family: String,
    pub stages: Vec<StageDiagnostics>,
    /// Moduli `L >= 2` whose divisibility fraction is at least `1 - 10^-6` at
    /// every examined stage.
    pub flagged: Vec<u64>,
}

impl FamilyDiagnostics {
    pub fn passes(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Diagnostics of a polynomial staircase built from `spec` and `cuts`.
pub fn validate_polystair(
    spec: &PolynomialSpec,
    cuts: CutRule,
    l_max: u64,
    stages: Range<usize>,
) -> Result<FamilyDiagnostics> {
    let tower = TowerModel::new(make_polynomial_staircase(spec.clone(), cuts)?);
    family_diagnostics(&tower, l_max, stages)
}

/// Growth and divisibility diagnostics of any family over a range of stages.
pub fn family_diagnostics(tower: &TowerModel, l_max: u64, stages: Range<usize>) -> Result<FamilyDiagnostics> {
    if l_max < 2 {
        return Err(Error::domain("Lmax must be at least 2"));
    }
    let rule = tower.rule();
    let mut out = Vec::new();
    for n in stages {
        let st = tower.stage(n)?;
        let h = from_uint(&st.height);
        let r = from_uint(&st.cuts);
        let coeffs = rule.stage_polynomial(n)?;
        let lead_over_n = match &coeffs {
            Some(c) if n > 0 => Some(c.iter().rev().find(|x| !x.is_zero()).cloned().unwrap_or_default() / rational(n, 1)),
            _ => None,
        };
        let divisibility = (1..=l_max)
            .map(|l| Ok((l, divisibility_fraction(rule, n, coeffs.as_deref(), l)?)))
            .collect::<Result<Vec<_>>>()?;
        out.push(StageDiagnostics {
            n,
            cuts: st.cuts.clone(),
            height: st.height.clone(),
            clamped: rule.clamped(n)?,
            r2_over_h: &r * &r / &h,
            r_sbar_over_h: from_uint(&st.spacers) / &h,
            lead_over_n,
            divisibility,
        });
    }
    let threshold = Rational::one() - rational(1, 1_000_000);
    let flagged = (2..=l_max)
        .filter(|&l| {
            !out.is_empty()
                && out.iter().all(|s| {
                    s.divisibility[(l - 1) as usize]
                        .1
                        .as_ref()
                        .is_some_and(|f| f >= &threshold)
                })
        })
        .collect();
    Ok(FamilyDiagnostics {
        family: rule.name().to_string(),
        stages: out,
        flagged,
    })
}

fn divisibility_fraction(rule: &SpacerRule, n: usize, coeffs: Option<&[Rational]>, l: u64) -> Result<Option<Rational>> {
    let r = rule.cuts(n)?;
    let big_l = BigInt::from(l);
    let Some(c) = coeffs else {
        // no closed form: compare consecutive materialized values
        let Some(w) = r.to_usize().filter(|&w| w <= DIRECT_COUNT_LIMIT) else {
            return Ok(None);
        };
        let v = rule.stage_values(n)?;
        let hits = v
            .windows(2)
            .filter(|p| (BigInt::from(p[1].clone()) - BigInt::from(p[0].clone())).is_multiple_of(&big_l))
            .count();
        return Ok(Some(rational(hits, w)));
    };
    // d(j) = p(j+1) - p(j), scaled to integer coefficients q = den * d
    let d = difference(c);
    let den = d.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let q: Vec<BigInt> = d.iter().map(|x| (x * Rational::from_integer(den.clone())).to_integer()).collect();
    let modulus = &big_l * &den;
    let divides = |j: &BigInt| -> bool {
        let v = q.iter().rev().fold(BigInt::zero(), |acc, a| (acc * j + a).mod_floor(&modulus));
        v.is_zero()
    };
    if let Some(w) = r.to_usize().filter(|&w| w <= DIRECT_COUNT_LIMIT) {
        let hits = (0..w).filter(|&j| divides(&BigInt::from(j))).count();
        return Ok(Some(rational(hits, w)));
    }
    let Some(period) = modulus.to_usize().filter(|&p| p <= PERIOD_LIMIT) else {
        return Ok(None);
    };
    let per: Vec<bool> = (0..period).map(|j| divides(&BigInt::from(j))).collect();
    let full = per.iter().filter(|&&b| b).count();
    let r_int = BigInt::from(r.clone());
    let (cycles, rest) = r_int.div_rem(&BigInt::from(period));
    let rest = rest.to_usize().expect("below the period");
    let hits = cycles * BigInt::from(full) + BigInt::from(per[..rest].iter().filter(|&&b| b).count());
    Ok(Some(Rational::new(hits, r_int)))
}

/// Coefficients of `p(j+1) - p(j)`.
fn difference(c: &[Rational]) -> Vec<Rational> {
    let shifted = poly::window_sum_coeffs(c, &BigInt::from(2));
    shifted
        .iter()
        .zip(c)
        .map(|(s, a)| s - a - a)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynseq::{materialize_stage, partial_sums};

    fn ints(v: &[BigUint]) -> Vec<u64> {
        v.iter().map(|x| x.try_into().unwrap()).collect()
    }

    #[test]
    fn staircase_examples() {
        let s = make_staircase(CutRule::Linear { slope: 1, offset: 2 }).unwrap();
        assert_eq!(ints(&s.stage_values(1).unwrap()), vec![0, 1, 2]);
        assert_eq!(ints(&s.stage_values(0).unwrap()), vec![0, 1]);
        let t = TowerModel::new(s);
        for n in 0..12 {
            let st = t.stage(n).unwrap();
            assert_eq!(from_uint(&st.spacers) / from_uint(&st.cuts), (from_uint(&st.cuts) - Rational::one()) / rational(2, 1));
        }
    }

    #[test]
    fn polynomial_examples() {
        let lin = make_polynomial_staircase(PolynomialSpec::monomial(1), CutRule::Linear { slope: 1, offset: 2 }).unwrap();
        let st = make_staircase(CutRule::Linear { slope: 1, offset: 2 }).unwrap();
        for n in 0..6 {
            assert_eq!(lin.stage_values(n).unwrap(), st.stage_values(n).unwrap());
        }
        let tri = PolynomialSpec::fixed(vec![rational(0, 1), rational(-1, 2), rational(1, 2)]);
        let rule = make_polynomial_staircase(tri, CutRule::Constant(6)).unwrap();
        assert_eq!(ints(&rule.stage_values(0).unwrap()), vec![0, 0, 1, 3, 6, 10]);
        let neg = PolynomialSpec::fixed(vec![rational(3, 1), rational(-1, 1)]);
        let rule = make_polynomial_staircase(neg, CutRule::Constant(6)).unwrap();
        match rule.stage_values(0) {
            Err(Error::Construction { stage: 0, index: Some(j), .. }) => assert_eq!(j, "4"),
            other => panic!("expected a construction error, got {other:?}"),
        }
    }

    #[test]
    fn simple_polystair_start() {
        let rule = make_simple_polystair(1, rational(1, 1)).unwrap();
        assert_eq!(rule.cuts(0).unwrap(), BigUint::from(2u32));
        assert!(rule.clamped(0).unwrap());
        let t = TowerModel::new(rule.clone());
        assert_eq!(t.height(1).unwrap(), BigUint::from(3u32));
        assert_eq!(rule.cuts(1).unwrap(), BigUint::from(2u32));
        for d in 1..5 {
            let r = make_simple_polystair(d, rational(1, 2)).unwrap();
            assert_eq!(ints(&r.stage_values(0).unwrap())[..2], [0, 1]);
        }
    }

    #[test]
    fn polystair_heights_follow_recurrence() {
        let rule = make_simple_polystair(2, rational(3, 2)).unwrap();
        let t = TowerModel::new(rule.clone());
        for n in 0..8 {
            let vals = rule.stage_values(n).unwrap();
            let sum: BigUint = vals.iter().sum();
            assert_eq!(t.height(n + 1).unwrap(), rule.cuts(n).unwrap() * t.height(n).unwrap() + sum);
            // floor(h^(1/(D+delta))) with D + delta = 7/2
            let h = t.height(n).unwrap();
            let r = rule.cuts(n).unwrap();
            if !rule.clamped(n).unwrap() {
                assert!(num_traits::pow(r.clone(), 7) <= num_traits::pow(h.clone(), 2));
                assert!(num_traits::pow(r + 1u32, 7) > num_traits::pow(h, 2));
            }
        }
    }

    #[test]
    fn ornstein_examples() {
        let z = make_ornstein(5, BoundRule::Constant(0), CutRule::Constant(7)).unwrap();
        assert!(z.stage_values(3).unwrap().iter().all(Zero::is_zero));
        let a = make_ornstein(99, BoundRule::Linear { slope: 2, offset: 1 }, CutRule::Constant(50)).unwrap();
        let b = make_ornstein(99, BoundRule::Linear { slope: 2, offset: 1 }, CutRule::Constant(50)).unwrap();
        for n in 0..5 {
            assert_eq!(a.stage_values(n).unwrap(), b.stage_values(n).unwrap());
            assert!(a.stage_values(n).unwrap().iter().all(|v| v <= &BigUint::from(2 * n as u64 + 1)));
        }
    }

    #[test]
    fn divisibility_examples() {
        let d = validate_polystair(&PolynomialSpec::monomial(1), CutRule::Linear { slope: 1, offset: 2 }, 6, 0..10).unwrap();
        assert!(d.passes());
        for s in &d.stages {
            assert_eq!(s.divisibility[0].1, Some(rational(1, 1)));
            for (_, f) in &s.divisibility[1..] {
                assert_eq!(f, &Some(rational(0, 1)));
            }
        }
        let two = PolynomialSpec::fixed(vec![rational(0, 1), rational(2, 1)]);
        let d = validate_polystair(&two, CutRule::Constant(9), 4, 0..3).unwrap();
        assert_eq!(d.flagged, vec![2]);
        assert_eq!(d.stages[0].divisibility[1].1, Some(rational(1, 1)));
    }

    #[test]
    fn periodic_count_matches_direct() {
        let sq = PolynomialSpec::fixed(vec![rational(0, 1), rational(1, 2), rational(1, 2)]);
        let c = sq.coefficients(0).unwrap();
        let small = make_polynomial_staircase(sq.clone(), CutRule::Constant(600)).unwrap();
        let wide = make_polynomial_staircase(sq, CutRule::Constant(600_000)).unwrap();
        for l in 2..7 {
            let direct = divisibility_fraction(&small, 0, Some(&c), l).unwrap().unwrap();
            let periodic = divisibility_fraction(&wide, 0, Some(&c), l).unwrap().unwrap();
            // both ranges are whole multiples of every period involved
            assert_eq!(direct, periodic, "L = {l}");
        }
    }

    #[test]
    fn partial_sum_polynomials() {
        let lin = PolynomialSpec::monomial(1);
        let p2 = partial_sum_polynomial(&lin, 0, 2).unwrap();
        assert_eq!(p2.coefficients(0).unwrap(), vec![rational(1, 1), rational(2, 1)]);
        let sq = PolynomialSpec::monomial(2);
        assert_eq!(partial_sum_polynomial(&sq, 3, 1).unwrap().coefficients(0).unwrap(), sq.coefficients(3).unwrap());
        let p3 = partial_sum_polynomial(&sq, 0, 3).unwrap();
        assert_eq!(p3.lead(0).unwrap(), rational(3, 1));
        let rule = make_polynomial_staircase(sq, CutRule::Constant(20)).unwrap();
        let ps = partial_sums(&materialize_stage(&rule, 0).unwrap(), 3).unwrap();
        for (j, v) in ps.values.iter().enumerate() {
            assert_eq!(p3.eval(0, &BigInt::from(j)).unwrap(), from_uint(v));
        }
        assert!(partial_sum_polynomial(&PolynomialSpec::monomial(1), 0, 0).is_err());
    }
}

use std::ops::Range;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::num::{binomial, from_uint, power_sum, Rational};

/// Per-stage coefficients `c_{n,a}` of a stage polynomial `p_n`.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientSchedule {
    /// Same polynomial at every stage.
    Fixed(Vec<Rational>),
    /// `c_{n,a} = base_a + n * slope_a`.
    Affine {
        base: Vec<Rational>,
        slope: Vec<Rational>,
    },
    /// Explicit coefficients for stages `0..table.len()`.
    Table(Vec<Vec<Rational>>),
}

/// A sequence of polynomials of bounded degree, `p_n(j) = sum_a c_{n,a} j^a`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialSpec {
    degree: usize,
    schedule: CoefficientSchedule,
    valid: Option<Range<usize>>,
}

fn pad(mut v: Vec<Rational>, len: usize) -> Vec<Rational> {
    v.resize(len, Rational::zero());
    v
}

impl PolynomialSpec {
    pub fn new(degree: usize, schedule: CoefficientSchedule) -> Result<Self> {
        let widths: Vec<usize> = match &schedule {
            CoefficientSchedule::Fixed(c) => vec![c.len()],
            CoefficientSchedule::Affine { base, slope } => vec![base.len(), slope.len()],
            CoefficientSchedule::Table(rows) => rows.iter().map(Vec::len).collect(),
        };
        if widths.iter().any(|&w| w > degree + 1) {
            return Err(Error::domain(format!(
                "coefficient list longer than degree {degree} allows"
            )));
        }
        let valid = match &schedule {
            CoefficientSchedule::Table(rows) => Some(0..rows.len()),
            _ => None,
        };
        Ok(Self {
            degree,
            schedule,
            valid,
        })
    }

    /// Fixed polynomial with coefficients listed from the constant term up.
    pub fn fixed(coeffs: Vec<Rational>) -> Self {
        let degree = coeffs.len().saturating_sub(1);
        Self::new(degree, CoefficientSchedule::Fixed(coeffs)).expect("width matches degree")
    }

    /// `p(j) = j^d`.
    pub fn monomial(d: usize) -> Self {
        let mut c = vec![Rational::zero(); d + 1];
        c[d] = Rational::one();
        Self::fixed(c)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn schedule(&self) -> &CoefficientSchedule {
        &self.schedule
    }

    pub fn valid_stages(&self) -> Option<Range<usize>> {
        self.valid.clone()
    }

    /// `c_{n,0..=D}`.
    pub fn coefficients(&self, n: usize) -> Result<Vec<Rational>> {
        if let Some(r) = &self.valid {
            if !r.contains(&n) {
                return Err(Error::domain(format!(
                    "polynomial not defined at stage {n} (valid {r:?})"
                )));
            }
        }
        let len = self.degree + 1;
        Ok(match &self.schedule {
            CoefficientSchedule::Fixed(c) => pad(c.clone(), len),
            CoefficientSchedule::Affine { base, slope } => {
                let base = pad(base.clone(), len);
                let slope = pad(slope.clone(), len);
                let n = Rational::from_integer(BigInt::from(n));
                base.into_iter()
                    .zip(slope)
                    .map(|(b, s)| b + s * &n)
                    .collect()
            }
            CoefficientSchedule::Table(rows) => pad(rows[n].clone(), len),
        })
    }

    /// Lead coefficient `c_{n,D}`.
    pub fn lead(&self, n: usize) -> Result<Rational> {
        Ok(self.coefficients(n)?.pop().unwrap_or_else(Rational::zero))
    }

    pub fn eval(&self, n: usize, j: &BigInt) -> Result<Rational> {
        Ok(eval_coeffs(&self.coefficients(n)?, j))
    }

    /// Value at `j`, required to be an integer.
    pub fn eval_int(&self, n: usize, j: &BigInt) -> Result<BigInt> {
        let v = self.eval(n, j)?;
        if !v.is_integer() {
            return Err(Error::domain(format!(
                "p_{n}({j}) = {v} is not an integer"
            )));
        }
        Ok(v.to_integer())
    }

    /// True when `p_n` maps integers to integers. A polynomial of degree `D`
    /// taking integer values on `D + 1` consecutive integers does so everywhere.
    pub fn is_integer_valued(&self, n: usize) -> Result<bool> {
        let c = self.coefficients(n)?;
        Ok((0..=self.degree).all(|j| eval_coeffs(&c, &BigInt::from(j)).is_integer()))
    }
}

pub(crate) fn eval_coeffs(c: &[Rational], j: &BigInt) -> Rational {
    let x = Rational::from_integer(j.clone());
    c.iter()
        .rev()
        .fold(Rational::zero(), |acc, a| acc * &x + a)
}

/// Coefficients of `j -> sum_{z<k} p(j + z)` for `p` given by `c`, expanded
/// binomially: the `j^b` coefficient is `sum_{a>=b} c_a C(a,b) sum_{z<k} z^(a-b)`.
pub(crate) fn window_sum_coeffs(c: &[Rational], k: &BigInt) -> Vec<Rational> {
    let d = c.len().saturating_sub(1);
    let sums: Vec<Rational> = (0..=d)
        .map(|e| Rational::from_integer(power_sum(e as u32, k)))
        .collect();
    (0..c.len())
        .map(|b| {
            (b..=d).fold(Rational::zero(), |acc, a| {
                acc + &c[a] * from_uint(&binomial(a as u32, b as u32)) * &sums[a - b]
            })
        })
        .collect()
}

/// `sum_{z<j} p(z)` for `j >= 0`.
pub(crate) fn prefix_value(c: &[Rational], j: &BigInt) -> Rational {
    if j.is_negative() || j.is_zero() {
        return Rational::zero();
    }
    c.iter().enumerate().fold(Rational::zero(), |acc, (a, ca)| {
        acc + ca * Rational::from_integer(power_sum(a as u32, j))
    })
}

//! Exact integer and rational helpers shared by the engine.

use std::sync::Mutex;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational used for every measure, average and bound.
pub type Rational = BigRational;

pub fn rational(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Rational {
    Rational::new(num.into(), den.into())
}

pub fn from_uint(x: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(x.clone()))
}

pub fn to_u128(x: &BigUint, what: &str) -> Result<u128> {
    x.to_u128()
        .ok_or_else(|| Error::Overflow(format!("{what} = {x} exceeds the 128-bit index range")))
}

pub fn to_usize(x: &BigUint, what: &str) -> Result<usize> {
    x.to_usize()
        .ok_or_else(|| Error::Overflow(format!("{what} = {x} exceeds the addressable range")))
}

/// `floor(x^(1/n))`, exact.
pub fn nth_root_floor(x: &BigUint, n: u32) -> BigUint {
    x.nth_root(n)
}

pub fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

static BERNOULLI: Mutex<Vec<Rational>> = Mutex::new(Vec::new());

/// Bernoulli numbers with the `B_1 = -1/2` convention.
fn bernoulli(upto: usize) -> Vec<Rational> {
    let mut cache = BERNOULLI.lock().expect("bernoulli cache poisoned");
    while cache.len() <= upto {
        let m = cache.len();
        if m == 0 {
            cache.push(Rational::one());
            continue;
        }
        // sum_{i<=m} C(m+1, i) B_i = 0
        let mut acc = Rational::zero();
        for (i, b) in cache.iter().enumerate() {
            acc += b * from_uint(&binomial(m as u32 + 1, i as u32));
        }
        cache.push(-acc / Rational::from_integer(BigInt::from(m + 1)));
    }
    cache[..=upto].to_vec()
}

/// `sum_{z=0}^{k-1} z^e` for `k >= 0` via Faulhaber's formula (with `0^0 = 1`).
pub fn power_sum(e: u32, k: &BigInt) -> BigInt {
    if k.is_zero() || k.is_negative() {
        return BigInt::zero();
    }
    let b = bernoulli(e as usize);
    let mut acc = Rational::zero();
    for (i, bi) in b.iter().enumerate() {
        if bi.is_zero() {
            continue;
        }
        let c = from_uint(&binomial(e + 1, i as u32));
        acc += bi * c * Rational::from_integer(num_traits::pow(k.clone(), e as usize + 1 - i));
    }
    acc /= Rational::from_integer(BigInt::from(e + 1));
    debug_assert!(acc.is_integer());
    acc.to_integer()
}

/// Renders a rational in scientific notation with twelve significant digits,
/// rounding half away from zero. Display only; the exact value is always
/// carried alongside.
pub fn to_decimal(q: &Rational) -> String {
    const SIG: i64 = 12;
    if q.is_zero() {
        return "0".to_string();
    }
    let neg = q.is_negative();
    let x = q.abs();
    let num = x.numer().clone();
    let den = x.denom().clone();
    let ten = BigInt::from(10u32);
    let mut exp = num.to_string().len() as i64 - den.to_string().len() as i64;
    // normalise so that 10^exp <= x < 10^(exp+1)
    let pow10 = |e: i64| -> Rational {
        if e >= 0 {
            Rational::from_integer(num_traits::pow(ten.clone(), e as usize))
        } else {
            Rational::new(BigInt::one(), num_traits::pow(ten.clone(), (-e) as usize))
        }
    };
    while x < pow10(exp) {
        exp -= 1;
    }
    while x >= pow10(exp + 1) {
        exp += 1;
    }
    let scaled = &x * pow10(SIG - 1 - exp);
    let half = Rational::new(BigInt::one(), BigInt::from(2u32));
    let mut digits = (scaled + half).floor().to_integer();
    if digits >= num_traits::pow(ten.clone(), SIG as usize) {
        digits /= &ten;
        exp += 1;
    }
    let s = digits.to_string();
    let (head, tail) = s.split_at(1);
    format!("{}{}.{}e{}", if neg { "-" } else { "" }, head, tail, exp)
}

/// Parses `p/q`, an integer, or a plain decimal such as `0.125`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((int, frac)) = s.split_once('.') {
        if !s.contains('/') {
            let neg = int.starts_with('-');
            let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
            let n: BigInt = digits
                .parse()
                .map_err(|_| Error::domain(format!("not a number: {s:?}")))?;
            let d = num_traits::pow(BigInt::from(10u32), frac.len());
            let q = Rational::new(n, d);
            return Ok(if neg { -q } else { q });
        }
    }
    s.parse::<Rational>()
        .map_err(|_| Error::domain(format!("not a rational: {s:?}")))
}

/// Smallest rational with denominator `2^bits` that is `>= sqrt(x)`.
pub fn sqrt_upper(x: &Rational, bits: u32) -> Rational {
    assert!(!x.is_negative(), "sqrt of a negative rational");
    let scale = BigInt::one() << (2 * bits) as usize;
    let scaled = (x * Rational::from_integer(scale)).ceil().to_integer();
    let (sign, mag) = scaled.into_parts();
    debug_assert!(sign != Sign::Minus);
    let mut root = mag.sqrt();
    if &root * &root < mag {
        root += 1u32;
    }
    Rational::new(BigInt::from(root), BigInt::one() << bits as usize)
}

pub fn gcd_u128(a: u128, b: u128) -> u128 {
    a.gcd(&b)
}

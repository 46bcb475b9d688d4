//! Correlations, ergodic averages and uniform mixing sums, evaluated exactly
//! over a reference column `C_M` with the normalized measure
//! `nu = mu / mu(C_M)`.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::dynseq::{materialize_stage, partial_sums, Slicing};
use crate::error::{Error, Result};
use crate::families::PolynomialSpec;
use crate::num::{from_uint, rational, Rational};
use crate::tower::{apply_power, preimage, refine, Budget, LevelSet, LevelUnion, TowerModel};
use crate::tower::levelset::{coarsen_ranges, normalize as levelset_normalize};

/// Exact value of an integral or sum restricted to `C_M`, with a bound on
/// what lies outside it.
#[derive(Clone, Debug, PartialEq)]
pub struct AverageResult {
    pub value: Rational,
    /// `nu(B) (mu(C_M') - mu(C_M)) / mu(C_M)` for the deepest column `M'` the
    /// evaluation reached, plus the effect of any unresolved mass.
    pub tail_bound: Rational,
    pub ref_column: usize,
    pub deepest_column: usize,
    /// The increments `sbar_n/h_n` failed to decrease somewhere in `[M, M')`.
    pub divergent: bool,
    pub unresolved_mass: Rational,
    /// Number of averaged terms, counted with multiplicity.
    pub terms: usize,
}

impl AverageResult {
    pub fn is_exact(&self) -> bool {
        self.unresolved_mass.is_zero()
    }
}

/// `raw = mu(T^t A ∩ B)` and `normalized = raw/mu_ref - (mu(A)/mu_ref)(mu(B)/mu_ref)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationRow {
    pub t: u128,
    pub raw: Rational,
    pub normalized: Rational,
    pub unresolved_mass: Rational,
}

fn check_within(b: &LevelSet, m: usize, what: &str) -> Result<()> {
    if b.column() > m {
        return Err(Error::domain(format!(
            "{what} lives in column {} beyond the reference column {m}",
            b.column()
        )));
    }
    Ok(())
}

pub fn correlation(
    tower: &TowerModel,
    a: &LevelSet,
    b: &LevelSet,
    t: u128,
    m: usize,
    budget: &Budget,
) -> Result<CorrelationRow> {
    check_within(a, m, "A")?;
    check_within(b, m, "B")?;
    let mu_ref = tower.column_measure(m)?;
    let image = apply_power(tower, a, t, budget)?;
    let raw = image.resolved.intersect_measure(tower, b)?;
    let na = a.measure(tower)? / &mu_ref;
    let nb = b.measure(tower)? / &mu_ref;
    Ok(CorrelationRow {
        t,
        normalized: &raw / &mu_ref - na * nb,
        raw,
        unresolved_mass: image.unresolved_mass,
    })
}

/// A set entering an average with a multiplicity, plus the mass its
/// computation left unresolved.
struct Term {
    set: LevelUnion,
    weight: usize,
    unresolved: Rational,
}

/// Adds weighted pieces to count segments `(start, end, count)`; pieces
/// outside the segments are dropped.
fn overlay(segs: &[(u128, u128, i64)], pieces: &[(u128, u128, i64)]) -> Vec<(u128, u128, i64)> {
    if pieces.is_empty() {
        return segs.to_vec();
    }
    // (position, order, cover delta, segment count); segment ends sort first
    let mut ev: Vec<(u128, u8, i64, i64)> = Vec::with_capacity(2 * (segs.len() + pieces.len()));
    for &(a, b, c) in segs {
        ev.push((a, 1, 0, c));
        ev.push((b, 0, 0, 0));
    }
    for &(a, b, w) in pieces {
        ev.push((a, 2, w, 0));
        ev.push((b, 2, -w, 0));
    }
    ev.sort_unstable_by_key(|e| (e.0, e.1));
    let mut out: Vec<(u128, u128, i64)> = Vec::new();
    let (mut cover, mut base): (i64, Option<i64>) = (0, None);
    let mut k = 0;
    while k < ev.len() {
        let pos = ev[k].0;
        while k < ev.len() && ev[k].0 == pos {
            let (_, kind, dc, c) = ev[k];
            match kind {
                0 => base = None,
                1 => base = Some(c),
                _ => cover += dc,
            }
            k += 1;
        }
        if let (Some(c), Some(next)) = (base, ev.get(k)) {
            let cnt = c + cover;
            match out.last_mut() {
                Some(last) if last.1 == pos && last.2 == cnt => last.1 = next.0,
                _ => out.push((pos, next.0, cnt)),
            }
        }
    }
    out
}

type Segments = Vec<(u128, u128, i64)>;

/// Splits segments into the parts inside and outside sorted disjoint ranges.
fn split(segs: &[(u128, u128, i64)], ranges: &[(u128, u128)]) -> (Segments, Segments) {
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    let mut k = 0;
    for &(a, b, c) in segs {
        let mut at = a;
        while k < ranges.len() && ranges[k].1 <= at {
            k += 1;
        }
        let mut i = k;
        while at < b {
            match ranges.get(i) {
                Some(&(x, y)) if x < b => {
                    if x > at {
                        outside.push((at, x, c));
                        at = x;
                    }
                    let end = y.min(b);
                    inside.push((at, end, c));
                    at = end;
                    if y <= b {
                        i += 1;
                    }
                }
                _ => {
                    outside.push((at, b, c));
                    at = b;
                }
            }
        }
    }
    (inside, outside)
}

/// `int_{C_M} |cnt/norm - target| dnu` where `cnt(x)` counts (with weight) the
/// terms containing `x`. Levels of `C_M` are split into sublevels only where
/// some term has pieces in a deeper column.
fn integrate(
    tower: &TowerModel,
    terms: &[Term],
    norm: usize,
    target: &Rational,
    nu_b: &Rational,
    m: usize,
    budget: &Budget,
) -> Result<AverageResult> {
    if norm == 0 {
        return Err(Error::domain("an average needs at least one term"));
    }
    let limit = budget.max_pieces.max(1);
    // weighted pieces per column, columns below M refined to M
    let mut pieces: BTreeMap<usize, Vec<(u128, u128, i64)>> = BTreeMap::new();
    for t in terms {
        let w = i64::try_from(t.weight).map_err(|_| Error::Overflow("term weight".into()))?;
        for part in t.set.parts() {
            let part = if part.column() < m { refine(tower, part, m)? } else { part.clone() };
            pieces
                .entry(part.column())
                .or_default()
                .extend(part.ranges().iter().map(|&(a, b)| (a, b, w)));
        }
    }
    let q = pieces.keys().next_back().copied().unwrap_or(m).max(m);
    // deep[c]: levels of C_c containing a piece of a deeper column
    let mut deep: Vec<Vec<(u128, u128)>> = vec![Vec::new(); q - m + 1];
    for c in (m..q).rev() {
        let mut below: Vec<(u128, u128)> = deep[c + 1 - m].clone();
        if let Some(p) = pieces.get(&(c + 1)) {
            below.extend(p.iter().map(|&(a, b, _)| (a, b)));
        }
        let below = levelset_normalize(below);
        deep[c - m] = levelset_normalize(coarsen_ranges(tower, c + 1, &below, c)?);
    }
    let n = rational(norm, 1);
    let mut value = Rational::zero();
    let mut segs = vec![(0u128, tower.height_u128(m)?, 0i64)];
    for c in m..=q {
        if let Some(p) = pieces.get(&c) {
            segs = overlay(&segs, p);
        }
        let (inside, outside) = split(&segs, &deep[c - m]);
        let mut buckets: BTreeMap<i64, u128> = BTreeMap::new();
        for (a, b, cnt) in outside {
            *buckets.entry(cnt).or_default() += b - a;
        }
        let w = tower.width(c)?;
        for (cnt, len) in buckets {
            let dev = (Rational::from_integer(BigInt::from(cnt)) / &n - target).abs();
            value += dev * &w * from_uint(&BigUint::from(len));
        }
        if c == q || inside.is_empty() {
            break;
        }
        let r = tower
            .cuts_usize(c)
            .filter(|&r| r.saturating_mul(inside.len()) <= limit)
            .ok_or_else(|| Error::budget(format!("splitting {} levels of C_{c} exceeds the piece budget", inside.len())))?;
        let mut next = Vec::with_capacity(r * inside.len());
        for j in 0..r as u128 {
            let o = tower.offset_u128(c, j)?;
            next.extend(inside.iter().map(|&(a, b, cnt)| (o + a, o + b, cnt)));
        }
        segs = next;
    }
    let mu_m = tower.column_measure(m)?;
    value /= &mu_m;
    let unresolved: Rational = terms
        .iter()
        .map(|t| &t.unresolved * rational(t.weight, 1))
        .fold(Rational::zero(), |a, b| a + b);
    let tail = nu_b * (tower.column_measure(q)? - &mu_m) / &mu_m + &unresolved / (&n * &mu_m);
    Ok(AverageResult {
        value,
        tail_bound: tail,
        ref_column: m,
        deepest_column: q,
        divergent: !tower.non_decreasing_increments(m, q)?.is_empty(),
        unresolved_mass: unresolved,
        terms: terms.iter().map(|t| t.weight).sum(),
    })
}

/// Indicator set of `chi_B ∘ T^{-e}` on `C_M`: `T^e(B)` for `e >= 0`, and the
/// part of `C_M` that `T^{|e|}` sends into `B` otherwise.
fn shifted_set(tower: &TowerModel, b: &LevelSet, e: i128, m: usize, budget: &Budget) -> Result<(LevelUnion, Rational)> {
    let img = if e >= 0 {
        apply_power(tower, b, e as u128, budget)?
    } else {
        preimage(tower, b, e.unsigned_abs(), &LevelSet::whole(tower, m)?, budget)?
    };
    Ok((img.resolved, img.unresolved_mass))
}

fn exponent_terms(tower: &TowerModel, exponents: &[i128], b: &LevelSet, m: usize, budget: &Budget) -> Result<Vec<Term>> {
    let mut counts: BTreeMap<i128, usize> = BTreeMap::new();
    for &e in exponents {
        *counts.entry(e).or_default() += 1;
    }
    let counts: Vec<(i128, usize)> = counts.into_iter().collect();
    counts
        .par_iter()
        .map(|&(e, weight)| {
            let (set, unresolved) = shifted_set(tower, b, e, m, budget)?;
            Ok(Term { set, weight, unresolved })
        })
        .collect()
}

fn nu(tower: &TowerModel, b: &LevelSet, m: usize) -> Result<Rational> {
    Ok(b.measure(tower)? / tower.column_measure(m)?)
}

/// `int_{C_M} |(1/L) sum_j chi_B ∘ T^{-e_j} - nu(B)| dnu`.
pub fn ergodic_average(
    tower: &TowerModel,
    exponents: &[i128],
    b: &LevelSet,
    m: usize,
    budget: &Budget,
) -> Result<AverageResult> {
    average_with_norm(tower, exponents, exponents.len(), b, m, budget)
}

fn average_with_norm(
    tower: &TowerModel,
    exponents: &[i128],
    norm: usize,
    b: &LevelSet,
    m: usize,
    budget: &Budget,
) -> Result<AverageResult> {
    if exponents.is_empty() {
        return Err(Error::domain("exponent list is empty"));
    }
    check_within(b, m, "B")?;
    let nu_b = nu(tower, b, m)?;
    let terms = exponent_terms(tower, exponents, b, m, budget)?;
    integrate(tower, &terms, norm, &nu_b, &nu_b, m, budget)
}

fn to_exponent(x: &BigUint) -> Result<i128> {
    x.to_i128()
        .ok_or_else(|| Error::Overflow(format!("exponent {x} beyond 127 bits")))
}

/// Ergodic average along the `k`-th partial sums of stage `n`.
pub fn dynseq_ergodic_average(
    tower: &TowerModel,
    n: usize,
    k: usize,
    b: &LevelSet,
    m: usize,
    budget: &Budget,
) -> Result<AverageResult> {
    let stage = materialize_stage(tower.rule(), n)?;
    let ps = partial_sums(&stage, k)?;
    let exps = ps.values.iter().map(to_exponent).collect::<Result<Vec<_>>>()?;
    ergodic_average(tower, &exps, b, m, budget)
}

/// Exponents of a slice-ergodic average: `s^{(k - alpha_q)}_{p,j}` for
/// `j` in `Gamma_q`, or with the window one longer when `carry` is set.
pub fn slice_exponents(tower: &TowerModel, s: &Slicing, carry: bool) -> Result<Vec<i128>> {
    let stage = materialize_stage(tower.rule(), s.stage)?;
    if stage.r() != s.cuts || tower.height(s.stage)? != s.height {
        return Err(Error::domain(format!("slicing does not belong to stage {} of this tower", s.stage)));
    }
    let prefix = stage.prefix_sums();
    let mut out = Vec::new();
    for (q, g) in s.gamma.iter().enumerate() {
        let a = *s.alpha.get(q).ok_or_else(|| Error::domain("slicing has fewer alphas than slices"))?;
        let w = s.window.checked_sub(a).ok_or_else(|| Error::domain("alpha exceeds the window"))? + usize::from(carry);
        for &j in g {
            let end = prefix.get(j + w).ok_or_else(|| Error::domain("slice index outside the stage"))?;
            out.push(to_exponent(&(end - &prefix[j]))?);
        }
    }
    Ok(out)
}

/// Slice-ergodic average, normalized by `r_p - k`, the number of sliced indices.
pub fn slice_ergodic_average(
    tower: &TowerModel,
    s: &Slicing,
    b: &LevelSet,
    m: usize,
    budget: &Budget,
) -> Result<AverageResult> {
    slice_ergodic_average_with(tower, s, b, m, false, budget)
}

pub fn slice_ergodic_average_with(
    tower: &TowerModel,
    s: &Slicing,
    b: &LevelSet,
    m: usize,
    carry: bool,
    budget: &Budget,
) -> Result<AverageResult> {
    let exps = slice_exponents(tower, s, carry)?;
    if exps.is_empty() {
        return Err(Error::domain("slicing has no indices"));
    }
    average_with_norm(tower, &exps, s.len(), b, m, budget)
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniformMixing {
    /// The stage with `h_p <= a < h_{p+1}`.
    pub stage: usize,
    pub sum: AverageResult,
}

/// `sum_{i<h_p} |nu(T^a I_{p,i} ∩ B) - nu(I_{p,i}) nu(B)|`.
pub fn uniform_mixing_sum(
    tower: &TowerModel,
    a: u128,
    b: &LevelSet,
    m: usize,
    budget: &Budget,
) -> Result<UniformMixing> {
    if a == 0 {
        return Err(Error::domain("exponent a must be at least 1"));
    }
    check_within(b, m, "B")?;
    let p = tower.stage_of_exponent(&BigUint::from(a))?;
    if m < p {
        return Err(Error::domain(format!("reference column {m} is below the stage {p} of a = {a}")));
    }
    let h = tower.height_u128(p)?;
    if h > budget.max_pieces as u128 {
        return Err(Error::budget(format!("h_{p} = {h} levels exceed the piece budget")));
    }
    let mu_m = tower.column_measure(m)?;
    let nu_b = nu(tower, b, m)?;
    let nu_level = tower.width(p)? / &mu_m;
    let parts: Vec<(Rational, Rational, usize)> = (0..h as u64)
        .into_par_iter()
        .map(|i| {
            let img = apply_power(tower, &LevelSet::level(p, i as u128), a, budget)?;
            let hit = img.resolved.intersect_measure(tower, b)? / &mu_m;
            let deepest = img.resolved.deepest_column().unwrap_or(p);
            Ok(((hit - &nu_level * &nu_b).abs(), img.unresolved_mass, deepest))
        })
        .collect::<Result<_>>()?;
    let mut value = Rational::zero();
    let mut unresolved = Rational::zero();
    let mut deepest = m;
    for (v, u, c) in parts {
        value += v;
        unresolved += u;
        deepest = deepest.max(c);
    }
    Ok(UniformMixing {
        stage: p,
        sum: AverageResult {
            value,
            tail_bound: &unresolved / &mu_m,
            ref_column: m,
            deepest_column: deepest,
            divergent: false,
            unresolved_mass: unresolved,
            terms: h as usize,
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerProfile {
    pub rows: Vec<(u128, AverageResult)>,
    /// Largest value over the rows and the first `k` attaining it.
    pub sup: Rational,
    pub argsup: u128,
}

fn arithmetic(n: usize, k: u128) -> Result<Vec<i128>> {
    (0..n as u128)
        .map(|j| {
            j.checked_mul(k)
                .and_then(|x| i128::try_from(x).ok())
                .ok_or_else(|| Error::Overflow("exponent j k beyond 127 bits".into()))
        })
        .collect()
}

fn profile(rows: Vec<(u128, AverageResult)>) -> PowerProfile {
    let mut sup = Rational::zero();
    let mut argsup = rows.first().map(|r| r.0).unwrap_or(0);
    for (k, r) in &rows {
        if r.value > sup {
            sup = r.value.clone();
            argsup = *k;
        }
    }
    PowerProfile { rows, sup, argsup }
}

/// `int |(1/n) sum_{j<n} chi_B ∘ T^{-jk} - nu(B)| dnu` for `k = 1..=k_max`.
pub fn power_ergodic_profile(
    tower: &TowerModel,
    n: usize,
    k_max: u128,
    b: &LevelSet,
    m: usize,
    budget: &Budget,
) -> Result<PowerProfile> {
    if n == 0 || k_max == 0 {
        return Err(Error::domain("n and kMax must be at least 1"));
    }
    let rows = (1..=k_max)
        .map(|k| Ok((k, ergodic_average(tower, &arithmetic(n, k)?, b, m, budget)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(profile(rows))
}

/// Power averages along a caller-supplied schedule of `(n, k_n)` pairs.
pub fn weak_power_profile(
    tower: &TowerModel,
    schedule: &[(usize, u128)],
    b: &LevelSet,
    m: usize,
    budget: &Budget,
) -> Result<PowerProfile> {
    let rows = schedule
        .iter()
        .map(|&(n, k)| {
            if n == 0 {
                return Err(Error::domain("average length must be at least 1"));
            }
            Ok((k, ergodic_average(tower, &arithmetic(n, k)?, b, m, budget)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(profile(rows))
}

/// Ergodic average along `p(0), ..., p(n-1)`; negative values go through
/// preimages.
pub fn polynomial_average(
    tower: &TowerModel,
    poly: &PolynomialSpec,
    n: usize,
    b: &LevelSet,
    m: usize,
    budget: &Budget,
) -> Result<AverageResult> {
    if n == 0 {
        return Err(Error::domain("average length must be at least 1"));
    }
    if !poly.is_integer_valued(0)? {
        return Err(Error::domain("polynomial does not map integers to integers"));
    }
    let exps = (0..n)
        .map(|j| {
            let v = poly.eval_int(0, &BigInt::from(j))?;
            v.to_i128()
                .ok_or_else(|| Error::Overflow(format!("p({j}) = {v} beyond 127 bits")))
        })
        .collect::<Result<Vec<_>>>()?;
    ergodic_average(tower, &exps, b, m, budget)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockLemma {
    /// Cesàro average over `0..R`.
    pub lhs: Rational,
    /// Stride-`p` average over `L` terms plus `pL/R`.
    pub rhs: Rational,
    /// `(R-1)/(2 h_M)`: the averages live on `C_M`, which the map does not
    /// preserve, and shifting by `i < R` moves at most `i/h_M` of it out.
    pub boundary: Rational,
    /// `lhs <= rhs + boundary`.
    pub holds: bool,
    /// `lhs <= rhs`.
    pub holds_strict: bool,
    pub slack: Rational,
    pub exact: bool,
}

pub fn block_lemma_check(
    tower: &TowerModel,
    r: usize,
    l: usize,
    p: usize,
    b: &LevelSet,
    m: usize,
    budget: &Budget,
) -> Result<BlockLemma> {
    if r == 0 || l == 0 || p == 0 {
        return Err(Error::domain("R, L and p must be at least 1"));
    }
    let lhs = ergodic_average(tower, &arithmetic(r, 1)?, b, m, budget)?;
    let stride = ergodic_average(tower, &arithmetic(l, p as u128)?, b, m, budget)?;
    let rhs = &stride.value + rational(p * l, r);
    let boundary = rational(r - 1, 2) / from_uint(&tower.height(m)?);
    let slack = &rhs + &boundary - &lhs.value;
    Ok(BlockLemma {
        holds: !slack.is_negative(),
        holds_strict: lhs.value <= rhs,
        exact: lhs.is_exact() && stride.is_exact(),
        lhs: lhs.value,
        rhs,
        boundary,
        slack,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelSumBound {
    pub lhs: Rational,
    /// `int_{C_M} |(1/r_p) sum_j chi_B ∘ T^{f_j} - nu(B)| dnu`.
    pub integral: Rational,
    /// The same integral with `nu(B)` scaled by `#Gamma / r_p`.
    pub integral_scaled: Rational,
    /// `(sup f) (1/h_p) (#Gamma / r_p)`.
    pub boundary: Rational,
    /// `lhs <= integral + boundary`.
    pub holds: bool,
    /// `lhs <= integral_scaled + boundary`.
    pub holds_scaled: bool,
}

/// Compares the level sum over `Lambda` of sublevel correlations against the
/// integral bound. `gamma` lists the pairs `(f(j), g(j))`; `B` must be a union
/// of levels of a column at most `p`.
pub fn level_sum_bound_check(
    tower: &TowerModel,
    p: usize,
    lambda: &[u128],
    gamma: &[(u128, u128)],
    b: &LevelSet,
    m: usize,
    budget: &Budget,
) -> Result<LevelSumBound> {
    if b.column() > p {
        return Err(Error::domain("B must be a union of levels of C_p"));
    }
    if m <= p {
        return Err(Error::domain("the reference column must lie below stage p"));
    }
    let h = tower.height_u128(p)?;
    let r = tower.cuts_usize(p).ok_or_else(|| Error::Overflow("r_p too large".into()))?;
    if lambda.iter().any(|&i| i >= h) || gamma.iter().any(|&(_, g)| g >= r as u128) {
        return Err(Error::domain("Lambda or g out of range"));
    }
    let mu_m = tower.column_measure(m)?;
    let nu_b = nu(tower, b, m)?;
    let nu_sub = tower.width(p + 1)? / &mu_m;
    let mut lhs = Rational::zero();
    let mut unresolved = Rational::zero();
    for &i in lambda {
        let mut acc = Rational::zero();
        for &(f, g) in gamma {
            let sub = LevelSet::level(p + 1, tower.offset_u128(p, g)? + i);
            let img = apply_power(tower, &sub, f, budget)?;
            unresolved += img.unresolved_mass.clone();
            acc += img.resolved.intersect_measure(tower, b)? / &mu_m - &nu_sub * &nu_b;
        }
        lhs += acc.abs();
    }
    let fs: Vec<i128> = gamma.iter().map(|&(f, _)| -(f as i128)).collect();
    let scaled = &nu_b * rational(gamma.len(), r);
    let terms = exponent_terms(tower, &fs, b, m, budget)?;
    let integral = integrate(tower, &terms, r, &nu_b, &nu_b, m, budget)?;
    let integral_scaled = integrate(tower, &terms, r, &scaled, &nu_b, m, budget)?;
    let sup_f = gamma.iter().map(|&(f, _)| f).max().unwrap_or(0);
    let boundary = Rational::from_integer(BigInt::from(sup_f)) / from_uint(&BigUint::from(h)) * rational(gamma.len(), r);
    let exact = unresolved.is_zero() && integral.is_exact();
    if !exact && budget.strict {
        return Err(Error::budget("level-sum terms left unresolved mass"));
    }
    Ok(LevelSumBound {
        holds: lhs <= &integral.value + &boundary,
        holds_scaled: lhs <= &integral_scaled.value + &boundary,
        lhs,
        integral: integral.value,
        integral_scaled: integral_scaled.value,
        boundary,
    })
}

/// Dynamical-sequence averages over a run of stages, with whether they never
/// increase along it.
pub fn dynseq_trend(
    tower: &TowerModel,
    stages: std::ops::Range<usize>,
    k: usize,
    b: &LevelSet,
    m: usize,
    budget: &Budget,
) -> Result<(Vec<(usize, AverageResult)>, bool)> {
    let rows = stages
        .map(|n| Ok((n, dynseq_ergodic_average(tower, n, k, b, m, budget)?)))
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows.windows(2).all(|w| w[1].1.value <= w[0].1.value);
    Ok((rows, monotone))
}

/// `2 nu (1 - nu)`, the value of every single-term average.
pub fn indicator_deviation(nu_b: &Rational) -> Rational {
    rational(2, 1) * nu_b * (Rational::one() - nu_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynseq::{build_slicing, CutRule};
    use crate::families::make_staircase;

    fn r23() -> TowerModel {
        TowerModel::new(make_staircase(CutRule::Linear { slope: 1, offset: 2 }).unwrap())
    }

    fn bud() -> Budget {
        Budget::default()
    }

    #[test]
    fn overlay_and_split() {
        let segs = vec![(0, 4, 0), (4, 8, 2), (10, 12, 1)];
        let got = overlay(&segs, &[(2, 6, 1), (3, 11, 1)]);
        assert_eq!(got, vec![(0, 2, 0), (2, 3, 1), (3, 4, 2), (4, 6, 4), (6, 8, 3), (10, 11, 2), (11, 12, 1)]);
        let (inside, outside) = split(&[(0, 10, 5), (12, 14, 1)], &[(2, 3), (5, 13)]);
        assert_eq!(inside, vec![(2, 3, 5), (5, 10, 5), (12, 13, 1)]);
        assert_eq!(outside, vec![(0, 2, 5), (3, 5, 5), (13, 14, 1)]);
    }

    #[test]
    fn correlation_examples() {
        let t = r23();
        let i10 = LevelSet::level(1, 0);
        let c0 = correlation(&t, &i10, &i10, 0, 2, &bud()).unwrap();
        assert_eq!(c0.normalized, rational(3, 16));
        let c3 = correlation(&t, &i10, &i10, 3, 2, &bud()).unwrap();
        assert_eq!(c3.raw, rational(1, 6));
        assert_eq!(c3.normalized, rational(1, 48));
        let empty = LevelSet::empty(1);
        assert_eq!(correlation(&t, &empty, &i10, 5, 2, &bud()).unwrap().normalized, rational(0, 1));
    }

    #[test]
    fn trivial_averages() {
        let t = r23();
        let b = LevelSet::new(2, [(0, 5)]);
        let nu_b = nu(&t, &b, 2).unwrap();
        let v = ergodic_average(&t, &[0, 0, 0], &b, 2, &bud()).unwrap();
        assert_eq!(v.value, indicator_deviation(&nu_b));
        let e = ergodic_average(&t, &[1, 4, 9], &LevelSet::empty(2), 2, &bud()).unwrap();
        assert_eq!(e.value, rational(0, 1));
        assert!(ergodic_average(&t, &[], &b, 2, &bud()).is_err());
        let k0 = dynseq_ergodic_average(&t, 3, 0, &b, 2, &bud()).unwrap();
        assert_eq!(k0.value, indicator_deviation(&nu_b));
    }

    #[test]
    fn dynseq_delegates() {
        let t = r23();
        let b = LevelSet::level(1, 0);
        let d = dynseq_ergodic_average(&t, 2, 1, &b, 3, &bud()).unwrap();
        let e = ergodic_average(&t, &[0, 1, 2], &b, 3, &bud()).unwrap();
        assert_eq!(d, e);
    }

    #[test]
    fn uniform_mixing_example() {
        let t = r23();
        let u = uniform_mixing_sum(&t, 3, &LevelSet::level(1, 0), 2, &bud()).unwrap();
        assert_eq!(u.stage, 1);
        assert_eq!(u.sum.value, rational(1, 12));
        let z = uniform_mixing_sum(&t, 3, &LevelSet::empty(1), 2, &bud()).unwrap();
        assert_eq!(z.sum.value, rational(0, 1));
    }

    #[test]
    fn single_term_power_average() {
        let t = r23();
        let b = LevelSet::level(1, 1);
        let nu_b = nu(&t, &b, 3).unwrap();
        let prof = power_ergodic_profile(&t, 1, 5, &b, 3, &bud()).unwrap();
        assert!(prof.rows.iter().all(|(_, r)| r.value == indicator_deviation(&nu_b)));
        let lin = PolynomialSpec::monomial(1);
        let p = polynomial_average(&t, &lin, 6, &b, 3, &bud()).unwrap();
        let k1 = power_ergodic_profile(&t, 6, 1, &b, 3, &bud()).unwrap();
        assert_eq!(p, k1.rows[0].1);
        let zero = PolynomialSpec::fixed(vec![rational(0, 1)]);
        assert_eq!(polynomial_average(&t, &zero, 4, &b, 3, &bud()).unwrap().value, indicator_deviation(&nu_b));
        let half = PolynomialSpec::fixed(vec![rational(0, 1), rational(1, 2)]);
        assert!(matches!(polynomial_average(&t, &half, 4, &b, 3, &bud()), Err(Error::Domain(_))));
    }

    #[test]
    fn block_lemma_examples() {
        let t = r23();
        let b = LevelSet::level(1, 0);
        let same = block_lemma_check(&t, 5, 5, 1, &b, 3, &bud()).unwrap();
        assert_eq!(same.rhs, &same.lhs + Rational::one());
        let bl = block_lemma_check(&t, 12, 3, 2, &b, 4, &bud()).unwrap();
        assert!(bl.holds && bl.holds_strict, "{bl:?}");
        let e = block_lemma_check(&t, 7, 2, 3, &LevelSet::empty(1), 3, &bud()).unwrap();
        assert_eq!(e.lhs, rational(0, 1));
        assert_eq!(e.rhs, rational(6, 7));
    }

    #[test]
    fn slice_average_reduces_to_window_average() {
        let t = r23();
        let b = LevelSet::level(1, 0);
        let s = build_slicing(&t, 2, 1, &BigUint::zero(), &rational(1, 12)).unwrap();
        let exps = slice_exponents(&t, &s, false).unwrap();
        // alphas [0, 1, 1]: windows 1, 0, 0 over indices 0, 1, 2
        assert_eq!(exps, vec![0, 0, 0]);
        let v = slice_ergodic_average(&t, &s, &b, 3, &bud()).unwrap();
        assert_eq!(v.value, indicator_deviation(&nu(&t, &b, 3).unwrap()));
    }

    #[test]
    fn exactness_denominator() {
        let t = r23();
        let b = LevelSet::new(2, [(1, 4), (8, 10)]);
        let exps = [0i128, 2, 5, 11, 13];
        let m = 2;
        let v = ergodic_average(&t, &exps, &b, m, &bud()).unwrap();
        let st_m = t.stage(m).unwrap();
        let st_q = t.stage(v.deepest_column).unwrap();
        let h = from_uint(&st_m.height);
        let scale = rational(exps.len(), 1) * &h * &h * from_uint(&st_q.width_den) / from_uint(&st_m.width_den);
        assert!((v.value * scale).is_integer());
    }
}

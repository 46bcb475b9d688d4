//! Greedy slicing of a partial-sum stage into blocks of nearby values, with
//! the wrap counts `alpha_q` and residual offsets `beta_q`, `beta'_q` that
//! describe where each block lands under `T^(k h_p + m)`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{from_uint, rational, sqrt_upper, Rational};
use crate::tower::TowerModel;

/// Quantity compared against `epsilon * h_p` when looking for the next breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakCriterion {
    /// `s^{(k-alpha_q+1)}_{Psi(l)} - s^{(k-alpha_q)}_{Psi(l_q)}`.
    ShiftedWindow,
    /// `s^{(k)}_{Psi(l)} - s^{(k)}_{Psi(l_q)}`.
    FixedWindow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Slicing {
    pub stage: usize,
    pub window: usize,
    pub residual: BigUint,
    pub epsilon: Rational,
    pub criterion: BreakCriterion,
    /// `r_p` of the sliced stage.
    pub cuts: usize,
    /// `h_p` of the sliced stage.
    pub height: BigUint,
    /// Ranks to indices, sorting `s^{(k)}` ascending (ties by index).
    pub psi: Vec<usize>,
    /// Breakpoints `l_0 = 0 < ... < l_Q = r_p - k` in rank space.
    pub ell: Vec<usize>,
    pub alpha: Vec<usize>,
    pub beta: Vec<BigInt>,
    pub beta_prime: Vec<BigInt>,
    pub gamma: Vec<Vec<usize>>,
    /// Threshold bounds `[lower_q, upper_q)` on `s^{(k)}` defining `gamma[q]`.
    pub lower: Vec<BigUint>,
    pub upper: Vec<Option<BigUint>>,
}

impl Slicing {
    pub fn q_count(&self) -> usize {
        self.gamma.len()
    }

    /// Number of sliced indices, `r_p - k`.
    pub fn len(&self) -> usize {
        self.cuts - self.window
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when `alpha_0` matches the literal initial choice `alpha_0 = 1`.
    pub fn alpha0_is_one(&self) -> bool {
        self.alpha.first() == Some(&1)
    }
}

/// One pass/fail line of [`validate_slicing`]. Checks with `required = false`
/// are reported but do not take part in the overall verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub required: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, required: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            required,
            detail: detail.into(),
        }
    }
}

/// Window sums over a prefix table.
struct Sums {
    prefix: Vec<BigUint>,
}

impl Sums {
    fn window(&self, j: usize, w: usize) -> BigInt {
        BigInt::from(&self.prefix[j + w] - &self.prefix[j])
    }

    fn value(&self, j: usize) -> BigInt {
        BigInt::from(&self.prefix[j + 1] - &self.prefix[j])
    }
}

struct Ctx {
    sums: Sums,
    k: usize,
    h: BigInt,
    m: BigInt,
}

impl Ctx {
    /// `F(a) = a h + s^{(a)}_{j0+k-a}`, strictly increasing in `a`.
    fn wrap(&self, j0: usize, a: usize) -> BigInt {
        BigInt::from(a) * &self.h + self.sums.window(j0 + self.k - a, a)
    }

    /// Smallest `a` in `0..=k` with `F(a) >= s^{(k)}_{j0} - m`; this is the
    /// unique `a` with `F(a-1) < s^{(k)}_{j0} - m <= F(a)`, reading `F(-1)` as `-inf`.
    fn alpha(&self, j0: usize) -> Result<usize> {
        let x = self.sums.window(j0, self.k) - &self.m;
        let (mut lo, mut hi) = (0usize, self.k);
        if self.wrap(j0, hi) < x {
            return Err(Error::Consistency(format!(
                "no wrap count satisfies the alpha conditions at index {j0}"
            )));
        }
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.wrap(j0, mid) >= x {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }

    fn beta(&self, j0: usize, a: usize) -> (BigInt, BigInt) {
        let x = self.sums.window(j0, self.k) - &self.m;
        let beta = self.wrap(j0, a) - x;
        let beta_prime = &beta - self.sums.value(j0 + self.k - a);
        (beta, beta_prime)
    }
}

/// Greedy slicing with the shifted-window breakpoint rule.
pub fn build_slicing(
    tower: &TowerModel,
    p: usize,
    k: usize,
    m: &BigUint,
    epsilon: &Rational,
) -> Result<Slicing> {
    build_slicing_with(tower, p, k, m, epsilon, BreakCriterion::ShiftedWindow)
}

pub fn build_slicing_with(
    tower: &TowerModel,
    p: usize,
    k: usize,
    m: &BigUint,
    epsilon: &Rational,
    criterion: BreakCriterion,
) -> Result<Slicing> {
    let stage = crate::dynseq::materialize_stage(tower.rule(), p)?;
    let r = stage.r();
    if k == 0 || k >= r {
        return Err(Error::domain(format!("window k = {k} must satisfy 1 <= k < r_p = {r}")));
    }
    let height = tower.height(p)?;
    if m >= &height {
        return Err(Error::domain(format!("residual m = {m} must be below h_p = {height}")));
    }
    if !epsilon.is_positive() {
        return Err(Error::domain("epsilon must be positive"));
    }
    let ctx = Ctx {
        sums: Sums {
            prefix: stage.prefix_sums(),
        },
        k,
        h: BigInt::from(height.clone()),
        m: BigInt::from(m.clone()),
    };
    let n_idx = r - k;
    let key: Vec<BigInt> = (0..n_idx).map(|j| ctx.sums.window(j, k)).collect();
    let mut psi: Vec<usize> = (0..n_idx).collect();
    psi.sort_by(|&a, &b| key[a].cmp(&key[b]).then(a.cmp(&b)));

    let eps_num = epsilon.numer().clone();
    let eps_den = epsilon.denom().clone();
    let threshold = &eps_num * &ctx.h;
    let jumps = |gap: BigInt| gap * &eps_den >= threshold;

    let mut ell = vec![0usize];
    let mut alpha = Vec::new();
    loop {
        let lq = *ell.last().unwrap();
        let head = psi[lq];
        let a = ctx.alpha(head)?;
        alpha.push(a);
        let base = match criterion {
            BreakCriterion::ShiftedWindow => ctx.sums.window(head, k - a),
            BreakCriterion::FixedWindow => key[head].clone(),
        };
        let found = (lq + 1..n_idx).find(|&l| {
            let v = match criterion {
                BreakCriterion::ShiftedWindow => ctx.sums.window(psi[l], k - a + 1),
                BreakCriterion::FixedWindow => key[psi[l]].clone(),
            };
            jumps(v - &base)
        });
        let Some(mut next) = found else {
            ell.push(n_idx);
            break;
        };
        // breakpoints never split a run of equal partial sums
        if key[psi[next]] == key[psi[next - 1]] {
            let mut start = next;
            while start > 0 && key[psi[start - 1]] == key[psi[next]] {
                start -= 1;
            }
            if start > lq {
                next = start;
            } else {
                while next < n_idx && key[psi[next]] == key[psi[lq]] {
                    next += 1;
                }
            }
        }
        ell.push(next);
        if next == n_idx {
            break;
        }
    }

    let q_count = ell.len() - 1;
    let mut beta = Vec::with_capacity(q_count);
    let mut beta_prime = Vec::with_capacity(q_count);
    let mut lower = Vec::with_capacity(q_count);
    let mut upper = Vec::with_capacity(q_count);
    for q in 0..q_count {
        let head = psi[ell[q]];
        let (b, bp) = ctx.beta(head, alpha[q]);
        beta.push(b);
        beta_prime.push(bp);
        lower.push(key[head].to_biguint().expect("partial sums are nonnegative"));
        upper.push((ell[q + 1] < n_idx).then(|| key[psi[ell[q + 1]]].to_biguint().expect("nonnegative")));
    }
    let gamma = threshold_sets(&key, &lower, &upper);

    Ok(Slicing {
        stage: p,
        window: k,
        residual: m.clone(),
        epsilon: epsilon.clone(),
        criterion,
        cuts: r,
        height,
        psi,
        ell,
        alpha,
        beta,
        beta_prime,
        gamma,
        lower,
        upper,
    })
}

fn threshold_sets(key: &[BigInt], lower: &[BigUint], upper: &[Option<BigUint>]) -> Vec<Vec<usize>> {
    lower
        .iter()
        .zip(upper)
        .map(|(lo, hi)| {
            let lo = BigInt::from(lo.clone());
            let hi = hi.clone().map(BigInt::from);
            (0..key.len())
                .filter(|&j| key[j] >= lo && hi.as_ref().is_none_or(|h| &key[j] < h))
                .collect()
        })
        .collect()
}

/// Checks every structural property of a slicing against the tower it claims
/// to slice. Failures are returned as data.
pub fn validate_slicing(s: &Slicing, tower: &TowerModel) -> Result<Vec<Check>> {
    let stage = crate::dynseq::materialize_stage(tower.rule(), s.stage)?;
    let height = tower.height(s.stage)?;
    if stage.r() != s.cuts || height != s.height {
        return Err(Error::domain(format!(
            "slicing was built for r = {}, h = {} but stage {} has r = {}, h = {}",
            s.cuts,
            s.height,
            s.stage,
            stage.r(),
            height
        )));
    }
    let k = s.window;
    if k == 0 || k >= s.cuts {
        return Err(Error::domain("slicing window outside 1..r_p"));
    }
    let n_idx = s.cuts - k;
    let q_count = s.gamma.len();
    let ctx = Ctx {
        sums: Sums {
            prefix: stage.prefix_sums(),
        },
        k,
        h: BigInt::from(height.clone()),
        m: BigInt::from(s.residual.clone()),
    };
    let key: Vec<BigInt> = (0..n_idx).map(|j| ctx.sums.window(j, k)).collect();
    let mut checks = Vec::new();

    // Psi is a permutation sorting the partial sums
    let mut seen = vec![false; n_idx];
    let perm = s.psi.len() == n_idx
        && s.psi.iter().all(|&j| j < n_idx && !std::mem::replace(&mut seen[j], true));
    let sorted = perm && s.psi.windows(2).all(|w| key[w[0]] <= key[w[1]]);
    checks.push(Check::new("psi_sorts_partial_sums", sorted, true, format!("{n_idx} indices")));

    // partition
    let mut count = vec![0usize; n_idx];
    let mut out_of_range = 0usize;
    for g in &s.gamma {
        for &j in g {
            if j < n_idx {
                count[j] += 1;
            } else {
                out_of_range += 1;
            }
        }
    }
    let overlaps = count.iter().filter(|&&c| c > 1).count();
    let missing = count.iter().filter(|&&c| c == 0).count();
    checks.push(Check::new(
        "partition",
        overlaps == 0 && missing == 0 && out_of_range == 0,
        true,
        format!("{overlaps} overlapping, {missing} uncovered, {out_of_range} out of range"),
    ));

    // thresholds: lower <= s^{(k)}_j < upper implies j in gamma_q
    let shapes_ok = s.lower.len() == q_count && s.upper.len() == q_count;
    let mut bad = Vec::new();
    if shapes_ok {
        for q in 0..q_count {
            let lo = BigInt::from(s.lower[q].clone());
            let hi = s.upper[q].clone().map(BigInt::from);
            if hi.as_ref().is_some_and(|h| h < &lo) {
                bad.push(q);
                continue;
            }
            let inside = (0..n_idx).filter(|&j| key[j] >= lo && hi.as_ref().is_none_or(|h| &key[j] < h));
            if inside.into_iter().any(|j| !s.gamma[q].contains(&j)) {
                bad.push(q);
            }
        }
    }
    checks.push(Check::new(
        "thresholds",
        shapes_ok && bad.is_empty(),
        true,
        if shapes_ok { format!("violating slices {bad:?}") } else { "threshold arrays have the wrong length".into() },
    ));

    // alpha conditions i) and ii), beta ranges
    let heads_ok = s.ell.len() == q_count + 1
        && s.alpha.len() == q_count
        && s.beta.len() == q_count
        && s.beta_prime.len() == q_count
        && s.ell[..q_count].iter().all(|&l| l < n_idx)
        && s.psi.len() == n_idx;
    let mut alpha_bad = Vec::new();
    let mut beta_bad = Vec::new();
    if heads_ok {
        for q in 0..q_count {
            let head = s.psi[s.ell[q]];
            let a = s.alpha[q];
            if a > k {
                alpha_bad.push(q);
                beta_bad.push(q);
                continue;
            }
            let x = ctx.sums.window(head, k) - &ctx.m;
            let cond_i = a == 0 || ctx.wrap(head, a - 1) < x;
            let cond_ii = x <= ctx.wrap(head, a);
            if !(cond_i && cond_ii) {
                alpha_bad.push(q);
            }
            let (b, bp) = ctx.beta(head, a);
            let top = &ctx.h + ctx.sums.value(head + k - a);
            let ok = b == s.beta[q] && bp == s.beta_prime[q] && !b.is_negative() && b < top && bp < ctx.h;
            if !ok {
                beta_bad.push(q);
            }
        }
    }
    checks.push(Check::new(
        "alpha_conditions",
        heads_ok && alpha_bad.is_empty(),
        true,
        if heads_ok { format!("violating slices {alpha_bad:?}") } else { "breakpoint arrays have the wrong length".into() },
    ));
    checks.push(Check::new(
        "beta_ranges",
        heads_ok && beta_bad.is_empty(),
        true,
        format!("violating slices {beta_bad:?}"),
    ));

    // Q bound in terms of spacer and column measures: r mu(S)/(eps mu(C)) = sum_j s_j / (eps h)
    let mu_s = tower.spacer_measure(s.stage)?;
    let mu_c = tower.column_measure(s.stage)?;
    if mu_s.is_positive() {
        let bound = rational(s.cuts, 1) * &mu_s / (&s.epsilon * &mu_c);
        let q = rational(q_count, 1);
        checks.push(Check::new(
            "q_bound",
            &q - Rational::one() <= bound,
            true,
            format!("Q - 1 = {} <= {}", q_count.saturating_sub(1), bound),
        ));
        checks.push(Check::new(
            "q_bound_literal",
            q <= bound,
            false,
            format!("Q = {q_count} <= {bound}"),
        ));
    } else {
        checks.push(Check::new("q_bound", true, true, "mu(S_p) = 0, bound not applicable"));
    }

    // spread of the operative window inside each slice
    if heads_ok && s.gamma.len() == q_count {
        let eps_h = &s.epsilon * from_uint(&height);
        let mut wide = Vec::new();
        for q in 0..q_count {
            let a = s.alpha[q].min(k);
            let head = s.psi[s.ell[q]];
            let base = ctx.sums.window(head, k - a);
            let top = s.gamma[q]
                .iter()
                .filter(|&&j| j < n_idx)
                .map(|&j| ctx.sums.window(j, k - a))
                .max()
                .unwrap_or_else(|| base.clone());
            if Rational::from_integer(top - &base) >= eps_h {
                wide.push(q);
            }
        }
        checks.push(Check::new(
            "window_spread",
            wide.is_empty(),
            false,
            format!("slices spreading at least eps h_p in window k - alpha_q: {wide:?}"),
        ));
    }
    Ok(checks)
}

/// `max(sqrt(mu(S_n)/mu(C_n)), 1/max(n,1))`, with the square root rounded up
/// to a dyadic rational so the result stays exact.
pub fn epsilon_schedule(tower: &TowerModel, n: usize) -> Result<Rational> {
    let ratio = tower.spacer_measure(n)? / tower.column_measure(n)?;
    let root = sqrt_upper(&ratio, 32);
    let floor = rational(1, n.max(1));
    Ok(if root > floor { root } else { floor })
}

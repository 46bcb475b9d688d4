//! Dynamical sequences: spacer rules, stage materialisation, partial sums,
//! monotonicity and slicings.

mod rule;
mod slicing;

use num_bigint::BigUint;
use num_traits::Zero;

pub use rule::{BoundRule, CutRule, RuleKind, SpacerRule, MAX_MATERIALIZED_CUTS};
pub use slicing::{
    build_slicing, build_slicing_with, epsilon_schedule, validate_slicing, BreakCriterion, Check,
    Slicing,
};

use crate::error::{Error, Result};
use crate::num::{rational, Rational};

/// The values `s_{n,0}, ..., s_{n,r_n - 1}` of one stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynStage {
    pub n: usize,
    pub values: Vec<BigUint>,
}

impl DynStage {
    pub fn r(&self) -> usize {
        self.values.len()
    }

    /// Prefix sums `P[j] = sum_{z<j} s_{n,z}`, length `r + 1`.
    pub fn prefix_sums(&self) -> Vec<BigUint> {
        let mut acc = BigUint::zero();
        let mut out = Vec::with_capacity(self.values.len() + 1);
        out.push(acc.clone());
        for v in &self.values {
            acc += v;
            out.push(acc.clone());
        }
        out
    }
}

/// Window sums `s^{(k)}_{n,j}` for `j < r_n - k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialSumStage {
    pub n: usize,
    pub k: usize,
    pub values: Vec<BigUint>,
}

pub fn materialize_stage(rule: &SpacerRule, n: usize) -> Result<DynStage> {
    Ok(DynStage {
        n,
        values: rule.stage_values(n)?,
    })
}

/// `k`-th partial sums of a stage. `k = 0` yields `r_n` zeros.
pub fn partial_sums(stage: &DynStage, k: usize) -> Result<PartialSumStage> {
    let r = stage.r();
    if k >= r {
        return Err(Error::domain(format!("window k = {k} must be below r_n = {r}")));
    }
    let values = if k == 0 {
        vec![BigUint::zero(); r]
    } else {
        let p = stage.prefix_sums();
        (0..r - k).map(|j| &p[j + k] - &p[j]).collect()
    };
    Ok(PartialSumStage {
        n: stage.n,
        k,
        values,
    })
}

/// `(1/r_n) #{j : |s_{n,j}| < M}`.
pub fn monotonicity_fraction(stage: &DynStage, threshold: &BigUint) -> Rational {
    let below = stage.values.iter().filter(|v| *v < threshold).count();
    rational(below, stage.r())
}

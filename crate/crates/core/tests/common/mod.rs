//! Test-only oracle: builds a column by literally cutting and stacking, then
//! answers measure questions by enumerating its levels.

#![allow(dead_code)]

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// An explicitly stacked column `C_depth`, each level remembering the level
/// of every earlier column it was cut from.
pub struct Stacked {
    pub depth: usize,
    pub heights: Vec<usize>,
    pub width_den: Vec<BigUint>,
    /// `parent[n][i]`: level of `C_{n}` that level `i` of `C_{n+1}` came from.
    parent: Vec<Vec<Option<u32>>>,
}

impl Stacked {
    /// `cuts(n, h_n)` and `spacer(n, j)` define the stages.
    pub fn build(depth: usize, cuts: impl Fn(usize, usize) -> usize, spacer: impl Fn(usize, usize) -> usize) -> Self {
        let mut heights = vec![1usize];
        let mut width_den = vec![BigUint::one()];
        let mut parent = Vec::new();
        for n in 0..depth {
            let h = heights[n];
            let r = cuts(n, h);
            let mut col: Vec<Option<u32>> = Vec::new();
            for j in 0..r {
                col.extend((0..h).map(|i| Some(i as u32)));
                col.extend(std::iter::repeat_n(None, spacer(n, j)));
            }
            heights.push(col.len());
            width_den.push(&width_den[n] * BigUint::from(r));
            parent.push(col);
        }
        Self {
            depth,
            heights,
            width_den,
            parent,
        }
    }

    /// The staircase with `r_n = n + 2`.
    pub fn r23(depth: usize) -> Self {
        Self::build(depth, |n, _| n + 2, |_, j| j)
    }

    pub fn top(&self) -> usize {
        self.heights[self.depth]
    }

    /// `s_{n,j} = j` with `r_n = max(2, floor(sqrt(h_n)))`.
    pub fn t11(depth: usize) -> Self {
        Self::build(depth, |_, h| (h as f64).sqrt().floor().max(2.0) as usize, |_, j| j)
    }

    /// Level of `C_c` containing level `l` of the deepest column.
    pub fn ancestor(&self, mut l: usize, c: usize) -> Option<usize> {
        for n in (c..self.depth).rev() {
            l = self.parent[n][l]? as usize;
        }
        Some(l)
    }

    pub fn level_width(&self, n: usize) -> Q {
        Q::new(BigInt::one(), BigInt::from(self.width_den[n].clone()))
    }

    pub fn column_measure(&self, n: usize) -> Q {
        Q::from_integer(BigInt::from(self.heights[n])) * self.level_width(n)
    }

    fn member(&self, l: usize, set: &(usize, Vec<usize>)) -> bool {
        self.ancestor(l, set.0).is_some_and(|a| set.1.contains(&a))
    }

    /// Deepest levels inside a set, panicking unless shifting them by `reach`
    /// stays inside the stacked column.
    fn refined(&self, set: &(usize, Vec<usize>), reach: usize) -> Vec<usize> {
        let out: Vec<usize> = (0..self.top()).filter(|&l| self.member(l, set)).collect();
        if let Some(&last) = out.last() {
            assert!(last + reach < self.top(), "stack deeper: level {last} + {reach} leaves the column");
        }
        out
    }

    pub fn measure(&self, set: &(usize, Vec<usize>)) -> Q {
        Q::from_integer(BigInt::from(self.refined(set, 0).len())) * self.level_width(self.depth)
    }

    /// `mu(T^t A ∩ B)`.
    pub fn correlation_raw(&self, a: &(usize, Vec<usize>), b: &(usize, Vec<usize>), t: usize) -> Q {
        let hits = self.refined(a, t).into_iter().filter(|&l| self.member(l + t, b)).count();
        Q::from_integer(BigInt::from(hits)) * self.level_width(self.depth)
    }

    /// `int_{C_M} |(1/L) sum_e chi_B ∘ T^{-e} - nu(B)| dnu`, with `chi_B ∘ T^{-e}`
    /// the indicator of `T^e B`.
    pub fn ergodic_average(&self, exps: &[i64], b: &(usize, Vec<usize>), m: usize) -> Q {
        self.ergodic_average_with(exps, exps.len(), None, b, m)
    }

    pub fn ergodic_average_with(&self, exps: &[i64], norm: usize, target: Option<Q>, b: &(usize, Vec<usize>), m: usize) -> Q {
        let reach = exps.iter().map(|e| e.unsigned_abs() as usize).max().unwrap_or(0);
        let bl = self.refined(b, reach);
        let in_b: std::collections::HashSet<usize> = bl.iter().copied().collect();
        let mu_m = self.column_measure(m);
        let nu_b = self.measure(b) / &mu_m;
        let target = target.unwrap_or_else(|| nu_b.clone());
        let mut total = Q::zero();
        for l in 0..self.top() {
            if self.ancestor(l, m).is_none() {
                continue;
            }
            let cnt = exps
                .iter()
                .filter(|&&e| {
                    if e >= 0 {
                        let e = e as usize;
                        l >= e && in_b.contains(&(l - e))
                    } else {
                        let e = e.unsigned_abs() as usize;
                        l + e < self.top() && in_b.contains(&(l + e))
                    }
                })
                .count();
            total += (q(cnt as i64, norm as i64) - &target).abs();
        }
        total * self.level_width(self.depth) / mu_m
    }

    /// `sum_{i<h_p} |nu(T^a I_{p,i} ∩ B) - nu(I_{p,i}) nu(B)|` with `h_p <= a < h_{p+1}`.
    pub fn uniform_mixing_sum(&self, a: usize, b: &(usize, Vec<usize>), m: usize) -> (usize, Q) {
        let p = (0..self.depth).find(|&p| self.heights[p] <= a && a < self.heights[p + 1]).expect("stack deeper");
        let mu_m = self.column_measure(m);
        let nu_b = self.measure(b) / &mu_m;
        let mut total = Q::zero();
        for i in 0..self.heights[p] {
            let level = (p, vec![i]);
            let hit = self.correlation_raw(&level, b, a) / &mu_m;
            let nu_i = self.level_width(p) / &mu_m;
            total += (hit - nu_i * &nu_b).abs();
        }
        (p, total)
    }
}

use rankone::dynseq::CutRule;
use rankone::families::{make_simple_polystair, make_staircase};
use rankone::tower::{LevelSet, TowerModel};

/// Engine tower of the staircase with `r_n = n + 2`.
pub fn r23() -> TowerModel {
    TowerModel::new(make_staircase(CutRule::Linear { slope: 1, offset: 2 }).unwrap())
}

/// Engine tower of the simple polynomial staircase with `D = delta = 1`.
pub fn t11() -> TowerModel {
    TowerModel::new(make_simple_polystair(1, rankone::num::rational(1, 1)).unwrap())
}

/// Oracle form `(column, levels)` of an engine set.
pub fn explicit(set: &LevelSet) -> (usize, Vec<usize>) {
    (set.column(), set.indices().map(|i| i as usize).collect())
}

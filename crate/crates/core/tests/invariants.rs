//! Structural invariants of the engine, checked exhaustively on small stages
//! and by random instances elsewhere.

mod common;

use common::{r23, t11};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rankone::dynseq::{
    build_slicing, materialize_stage, monotonicity_fraction, partial_sums, validate_slicing, CutRule, SpacerRule,
};
use rankone::ergodic::{correlation, uniform_mixing_sum};
use rankone::families::{
    make_constant, make_ornstein, make_polynomial_staircase, make_simple_polystair, make_staircase,
    partial_sum_polynomial, PolynomialSpec,
};
use rankone::dynseq::BoundRule;
use rankone::num::{from_uint, rational, Rational};
use rankone::tower::{apply_power, preimage, refine, sample_points, Budget, LevelSet, TowerModel};

fn deep() -> Budget {
    Budget {
        max_depth: 32,
        ..Budget::default()
    }
}

fn rules() -> Vec<SpacerRule> {
    vec![
        make_staircase(CutRule::Linear { slope: 1, offset: 2 }).unwrap(),
        make_constant(3, CutRule::Constant(5)).unwrap(),
        make_polynomial_staircase(PolynomialSpec::fixed(vec![rational(1, 1), rational(0, 1), rational(2, 1)]), CutRule::Linear { slope: 3, offset: 2 }).unwrap(),
        make_ornstein(11, BoundRule::Linear { slope: 3, offset: 2 }, CutRule::Linear { slope: 5, offset: 4 }).unwrap(),
        make_simple_polystair(1, rational(1, 1)).unwrap(),
    ]
}

#[test]
fn window_sums_are_associative() {
    for rule in rules() {
        for n in 0..8 {
            let stage = materialize_stage(&rule, n).unwrap();
            let r = stage.r();
            if r > 64 {
                continue;
            }
            for k in 1..r {
                let whole = partial_sums(&stage, k).unwrap();
                assert_eq!(whole.values.len(), r - k);
                for k1 in 1..=k {
                    let left = partial_sums(&stage, k1).unwrap();
                    let right = partial_sums(&stage, k - k1).unwrap();
                    for j in 0..r - k {
                        let rhs = &left.values[j] + right.values.get(j + k1).cloned().unwrap_or_default();
                        assert_eq!(whole.values[j], rhs, "{} n={n} k={k} k1={k1} j={j}", rule.name());
                    }
                }
            }
            let ones = partial_sums(&stage, 1).unwrap();
            assert_eq!(ones.values[..], stage.values[..r - 1]);
        }
    }
}

#[test]
fn height_and_measure_recurrences() {
    for rule in rules() {
        let t = TowerModel::new(rule);
        for n in 0..7 {
            let st = t.stage(n).unwrap();
            let total: BigUint = st.spacers.clone();
            assert_eq!(t.height(n + 1).unwrap(), &st.cuts * &st.height + &total);
            let ratio = Rational::one() + st.spacer_ratio();
            assert_eq!(t.column_measure(n + 1).unwrap(), t.column_measure(n).unwrap() * ratio);
            assert_eq!(st.spacer_measure(), st.spacer_ratio() * st.column_measure());
            assert_eq!(t.width(n + 1).unwrap(), t.width(n).unwrap() / from_uint(&st.cuts));
        }
        assert_eq!(t.column_measure(0).unwrap(), Rational::one());
    }
}

#[test]
fn staircase_monotonicity_fraction_decreases() {
    let rule = make_staircase(CutRule::Linear { slope: 1, offset: 2 }).unwrap();
    for m in [1u32, 3, 5] {
        let fr: Vec<Rational> = (0..=20)
            .map(|n| monotonicity_fraction(&materialize_stage(&rule, n).unwrap(), &BigUint::from(m)))
            .collect();
        assert!(fr.windows(2).all(|w| w[1] <= w[0]));
        for (n, f) in fr.iter().enumerate() {
            if n + 2 > m as usize {
                assert_eq!(*f, rational(m, n + 2));
            }
        }
    }
}

#[test]
fn partial_sum_polynomial_identity() {
    for d in 0..=4usize {
        for coeffs in [vec![1i64; d + 1], (0..=d as i64).map(|a| a * a - 1).map(i64::abs).collect()] {
            let spec = PolynomialSpec::fixed(coeffs.iter().map(|&c| rational(c, 1)).collect());
            let rule = make_polynomial_staircase(spec.clone(), CutRule::Linear { slope: 7, offset: 2 }).unwrap();
            for n in 0..9 {
                let stage = materialize_stage(&rule, n).unwrap();
                assert!(stage.r() <= 64);
                for k in 1..stage.r().min(9) {
                    let pk = partial_sum_polynomial(&spec, n, k).unwrap();
                    let direct = partial_sums(&stage, k).unwrap();
                    for (j, v) in direct.values.iter().enumerate() {
                        assert_eq!(pk.eval(0, &BigInt::from(j)).unwrap(), from_uint(v));
                    }
                    assert_eq!(pk.lead(0).unwrap(), spec.lead(n).unwrap() * rational(k, 1));
                }
            }
        }
    }
}

#[test]
fn staircase_restricted_growth_ratio_falls() {
    let t = r23();
    let ratios: Vec<Rational> = (0..=20)
        .map(|n| {
            let st = t.stage(n).unwrap();
            from_uint(&(&st.cuts * &st.cuts)) / from_uint(&st.height)
        })
        .collect();
    assert!(ratios.windows(2).skip(1).all(|w| w[1] < w[0]));
}

/// `(sbar_n/h_n)^(b(D+delta)) <= h_n^(-a)` for `delta = a/b`, i.e. the
/// increments stay under `h_n^(D/(D+delta) - 1)`.
#[test]
fn simple_polystair_increments_under_envelope() {
    for (d, a, b) in [(1u32, 1u32, 1u32), (1, 1, 2), (2, 1, 2), (2, 2, 1), (3, 1, 1)] {
        let t = TowerModel::new(make_simple_polystair(d, rational(a, b)).unwrap());
        let mut prev_sum = Rational::zero();
        for n in 0..=25 {
            let st = t.stage(n).unwrap();
            if st.height.bits() > 4096 {
                break;
            }
            let inc = st.spacer_ratio();
            let (sum, _) = t.finite_measure_partial_sum(n + 1).unwrap();
            assert!(sum > prev_sum || inc.is_zero());
            prev_sum = sum;
            if st.height < BigUint::from(4u32) {
                continue;
            }
            let lhs = num_traits::pow(inc, (b * d + a) as usize);
            let rhs = Rational::new(BigInt::one(), num_traits::pow(BigInt::from(st.height.clone()), a as usize));
            assert!(lhs <= rhs, "D={d} delta={a}/{b} n={n}");
        }
    }
}

#[test]
fn ornstein_stream_is_pinned() {
    let rule = make_ornstein(42, BoundRule::Constant(9), CutRule::Constant(8)).unwrap();
    let again = make_ornstein(42, BoundRule::Constant(9), CutRule::Constant(8)).unwrap();
    let v: Vec<u64> = rule.stage_values(3).unwrap().iter().map(|x| u64::try_from(x).unwrap()).collect();
    assert_eq!(v, again.stage_values(3).unwrap().iter().map(|x| u64::try_from(x).unwrap()).collect::<Vec<_>>());
    // SplitMix64 counter stream keyed by (seed, n, j)
    assert_eq!(v, GOLDEN_ORNSTEIN);
    let zero = make_ornstein(42, BoundRule::Constant(0), CutRule::Constant(8)).unwrap();
    assert!(zero.stage_values(2).unwrap().iter().all(Zero::is_zero));
}

const GOLDEN_ORNSTEIN: [u64; 8] = [5, 7, 1, 7, 4, 9, 3, 3];

#[test]
fn ornstein_mean_is_half_the_bound() {
    let bound = 1000u64;
    let rule = make_ornstein(5, BoundRule::Constant(bound), CutRule::Constant(20_000)).unwrap();
    let vals = rule.stage_values(1).unwrap();
    let r = vals.len() as f64;
    let mean = vals.iter().map(|v| u64::try_from(v).unwrap() as f64).sum::<f64>() / r;
    let sd = ((bound + 1) as f64 * (bound + 1) as f64 - 1.0).sqrt() / 12f64.sqrt();
    assert!((mean - bound as f64 / 2.0).abs() < 4.0 * sd / r.sqrt(), "mean {mean}");
}

#[test]
fn sampled_levels_are_uniform() {
    let t = r23();
    let pts = sample_points(&t, 2, 100_000, 3).unwrap();
    let mut hist = [0f64; 12];
    for p in &pts {
        assert!(p.level < 12);
        hist[p.level as usize] += 1.0;
    }
    let e = 100_000.0 / 12.0;
    let chi2: f64 = hist.iter().map(|o| (o - e) * (o - e) / e).sum();
    // 11 degrees of freedom: mean 11, sd ~4.7
    assert!(chi2 < 11.0 + 4.0 * (22f64).sqrt(), "chi2 {chi2}");
    let again = sample_points(&t, 2, 3, 3).unwrap();
    assert_eq!(again[..], pts[..3]);
}

fn level_set(column: usize, h: u128) -> impl Strategy<Value = LevelSet> {
    prop::collection::vec((0..h, 1..=h), 1..4).prop_map(move |rs| {
        LevelSet::new(column, rs.into_iter().map(|(a, len)| (a, (a + len).min(h))).collect::<Vec<_>>())
    })
}

fn r23_set() -> impl Strategy<Value = LevelSet> {
    prop_oneof![level_set(1, 3), level_set(2, 12), level_set(3, 54)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn images_preserve_measure(a in r23_set(), frac in 0.0f64..1.0, depth in 1usize..10) {
        let t = r23();
        let limit = t.height_u128(a.column() + 2).unwrap();
        let shift = (frac * limit as f64) as u128;
        let budget = Budget { max_depth: depth, ..Budget::default() };
        let img = apply_power(&t, &a, shift, &budget).unwrap();
        prop_assert_eq!(img.resolved.measure(&t).unwrap() + &img.unresolved_mass, a.measure(&t).unwrap());
        let full = apply_power(&t, &a, shift, &deep()).unwrap();
        if full.is_exact() {
            prop_assert_eq!(full.resolved.measure(&t).unwrap(), a.measure(&t).unwrap());
        }
        // shifts below the next height resolve well inside u128 columns
        if shift < t.height_u128(a.column() + 1).unwrap() {
            prop_assert!(full.is_exact());
        }
    }

    #[test]
    fn images_of_disjoint_sets_are_disjoint(a in level_set(2, 12), shift in 0u128..200) {
        let t = r23();
        let comp = a.complement(&t).unwrap();
        let ia = apply_power(&t, &a, shift, &deep()).unwrap().resolved;
        let ic = apply_power(&t, &comp, shift, &deep()).unwrap().resolved;
        for part in ic.parts() {
            prop_assert!(ia.intersect_measure(&t, part).unwrap().is_zero());
        }
    }

    #[test]
    fn refinement_keeps_measure(a in r23_set(), extra in 0usize..3) {
        let t = r23();
        let fine = refine(&t, &a, a.column() + extra).unwrap();
        prop_assert_eq!(fine.measure(&t).unwrap(), a.measure(&t).unwrap());
    }

    #[test]
    fn adjoint_identity(a in r23_set(), b in r23_set(), shift in 0u128..150) {
        let t = r23();
        let forward = correlation(&t, &a, &b, shift, 3, &deep()).unwrap();
        let back = preimage(&t, &b, shift, &a, &deep()).unwrap();
        prop_assert!(back.is_exact());
        prop_assert_eq!(forward.raw, back.resolved.measure(&t).unwrap());
    }

    #[test]
    fn slicings_validate(p in 2usize..7, k in 1usize..4, m_frac in 0.0f64..1.0, eps_den in 1i64..40, poly in any::<bool>()) {
        let t = if poly { t11() } else { r23() };
        let r = usize::try_from(t.cuts(p).unwrap()).unwrap();
        prop_assume!(k < r);
        let h = t.height_u128(p).unwrap();
        let m = BigUint::from((m_frac * h as f64) as u128 % h);
        let s = build_slicing(&t, p, k, &m, &rational(1, eps_den)).unwrap();
        let checks = validate_slicing(&s, &t).unwrap();
        for c in &checks {
            prop_assert!(c.passed || !c.required, "{} failed: {}", c.name, c.detail);
        }
    }

    #[test]
    fn uniform_sum_dominates_correlation(pick in 1u64..4096, a_exp in 12u128..54, b in level_set(2, 12)) {
        let t = r23();
        let levels: Vec<(u128, u128)> = (0..12u128).filter(|i| pick >> i & 1 == 1).map(|i| (i, i + 1)).collect();
        let a = LevelSet::new(2, levels);
        let m = 2;
        let u = uniform_mixing_sum(&t, a_exp, &b, m, &deep()).unwrap();
        prop_assert_eq!(u.stage, 2);
        let c = correlation(&t, &a, &b, a_exp, m, &deep()).unwrap();
        prop_assert!(c.normalized.clone().abs() <= u.sum.value, "{} > {}", c.normalized, u.sum.value);
    }
}

trait AbsExt {
    fn abs(self) -> Self;
}

impl AbsExt for Rational {
    fn abs(self) -> Self {
        num_traits::Signed::abs(&self)
    }
}

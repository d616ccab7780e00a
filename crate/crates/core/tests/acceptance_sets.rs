mod common;
mod random;

use common::*;
use gdp_core::acceptance::{expected_shortfall, expectile, AcceptanceSet, ConeBase, Utility};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HALF: [f64; 2] = [0.5, 0.5];
const TOL: f64 = 1e-9;

/// `min_t t + E[(−X−t)⁺]/α` over a fine grid of `t`.
fn es_on_grid(alpha: f64, x: &[f64], p: &[f64]) -> f64 {
    (-4000..=4000)
        .map(|k| {
            let t = k as f64 * 1e-3;
            t + x.iter().zip(p).map(|(v, q)| q * (-v - t).max(0.0)).sum::<f64>() / alpha
        })
        .fold(f64::INFINITY, f64::min)
}

fn mean(x: &[f64], p: &[f64]) -> f64 {
    x.iter().zip(p).map(|(a, b)| a * b).sum()
}

fn negative_part_mean(x: &[f64], p: &[f64]) -> f64 {
    x.iter().zip(p).map(|(a, b)| b * (-a).max(0.0)).sum()
}

fn generators(a: &AcceptanceSet, p: &[f64]) -> Vec<Vec<f64>> {
    match a.cone_base(p).unwrap() {
        ConeBase::Generators(g) => g,
        ConeBase::NotPolyhedral => panic!("no cone base"),
    }
}

fn same_set(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> bool {
    let key = |v: &Vec<f64>| v.iter().map(|x| (x * 1e6).round() as i64).collect::<Vec<_>>();
    a.sort_by_key(key);
    b.sort_by_key(key);
    a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| close_vec(x, y, 1e-9))
}

#[test]
fn membership_examples() {
    let x = [-1.0, 3.0];
    let es = AcceptanceSet::ExpectedShortfall { alpha: 0.5 };
    assert!((es_on_grid(0.5, &x, &HALF) - 1.0).abs() < 1e-9);
    assert!(!es.contains(&HALF, &x, TOL));
    // gain-loss ratio E[X⁺]/E[X⁻] = 1.5/0.5 = 3 = (1−α)/α at α = ¼
    let gains: f64 = x.iter().zip(&HALF).map(|(v, q)| q * v.max(0.0)).sum();
    let ratio = gains / negative_part_mean(&x, &HALF);
    assert_eq!(ratio, (1.0 - 0.25) / 0.25);
    assert!(AcceptanceSet::GainLoss { alpha: 0.25 }.contains(&HALF, &x, TOL));
    for a in families() {
        assert!(a.contains(&HALF, &[0.0, 0.0], TOL), "{a:?}");
    }
}

fn families() -> Vec<AcceptanceSet> {
    vec![
        AcceptanceSet::PositiveCone,
        AcceptanceSet::ExpectedShortfall { alpha: 0.3 },
        AcceptanceSet::GainLoss { alpha: 0.25 },
        AcceptanceSet::Scenarios { event: vec![1] },
        AcceptanceSet::TestProbabilities { tests: vec![(vec![1.5, 0.5], -0.5), (vec![0.5, 1.5], 0.0)] },
        AcceptanceSet::UtilityPwl { utility: Utility { knots: vec![-1.0, 1.0], slopes: vec![2.0, 1.0, 0.5] }, floor: -0.5 },
        AcceptanceSet::Ssd { benchmark: vec![-2.0, 2.0] },
        wedge(),
        AcceptanceSet::Cone { generators: vec![vec![1.0, 0.0], vec![-1.0, 1.0]] },
    ]
}

#[test]
fn expected_shortfall_examples() {
    for c in [-2.0, 0.0, 1.5] {
        assert!((expected_shortfall(0.4, &[c, c], &HALF) + c).abs() < 1e-12);
    }
    let x = [-1.0, 3.0];
    for alpha in [0.5, 0.25] {
        let grid = es_on_grid(alpha, &x, &HALF);
        assert!((expected_shortfall(alpha, &x, &HALF) - grid).abs() < 1e-9);
        assert!((grid - 1.0).abs() < 1e-9);
    }
}

#[test]
fn expectile_examples() {
    let x = [-1.0, 3.0];
    assert!((expectile(0.5, &x, &HALF) - mean(&x, &HALF)).abs() < 1e-9);
    assert!((expectile(0.3, &[2.5, 2.5], &HALF) - 2.5).abs() < 1e-9);
    // the expectile condition vanishes at t = 0 for α = ¼
    let alpha = 0.25;
    let t = 0.0f64;
    let up: f64 = x.iter().zip(&HALF).map(|(v, q)| q * (v - t).max(0.0)).sum();
    let down: f64 = x.iter().zip(&HALF).map(|(v, q)| q * (t - v).max(0.0)).sum();
    assert_eq!(alpha * up - (1.0 - alpha) * down, 0.0);
    assert!(expectile(alpha, &x, &HALF).abs() < 1e-9);
}

#[test]
fn support_examples() {
    let es = AcceptanceSet::ExpectedShortfall { alpha: 0.5 };
    assert_eq!(es.support(&HALF, &[1.0, 1.0]), 0.0);
    assert_eq!(AcceptanceSet::PositiveCone.support(&HALF, &[1.0, 2.0]), 0.0);
    assert_eq!(AcceptanceSet::PositiveCone.support(&HALF, &[1.0, -0.5]), f64::NEG_INFINITY);
    // inf E[X] subject to E[X] ≥ −1
    let tp = AcceptanceSet::TestProbabilities { tests: vec![(vec![1.0, 1.0], -1.0)] };
    assert!((tp.support(&HALF, &[1.0, 1.0]) + 1.0).abs() < 1e-9);
}

#[test]
fn recession_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for a in [AcceptanceSet::PositiveCone, AcceptanceSet::ExpectedShortfall { alpha: 0.3 }, AcceptanceSet::GainLoss { alpha: 0.2 }] {
        for _ in 0..200 {
            let x = random::payoff(&mut rng, 2);
            assert_eq!(a.in_recession(&HALF, &x, TOL), a.contains(&HALF, &x, TOL), "{a:?} at {x:?}");
        }
    }
    let tp = AcceptanceSet::TestProbabilities { tests: vec![(vec![1.0, 1.0], -1.0)] };
    assert!(tp.contains(&HALF, &[-0.5, -0.5], TOL));
    assert!(!tp.in_recession(&HALF, &[-0.5, -0.5], TOL));
    let ssd = AcceptanceSet::Ssd { benchmark: vec![-2.0, 2.0] };
    assert!(ssd.in_recession(&HALF, &[1.0, 1.0], TOL));
    assert!(!ssd.in_recession(&HALF, &[-1e-3, 3.0], TOL));
}

#[test]
fn cone_base_examples() {
    assert!(same_set(generators(&AcceptanceSet::PositiveCone, &HALF), vec![vec![1.0, 0.0], vec![0.0, 1.0]]));
    assert!(same_set(generators(&wedge(), &HALF), vec![vec![1.0, 0.0], vec![-1.0, 1.0]]));
    let (_, a) = exponential_counterexample();
    assert!(same_set(generators(&a, &HALF), vec![vec![1.0, 0.0], vec![-1.0, 1.0]]));
}

#[test]
fn conified_membership_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let es = AcceptanceSet::ExpectedShortfall { alpha: 0.5 };
    for _ in 0..200 {
        let x = random::payoff(&mut rng, 2);
        assert_eq!(es.conified_contains(&HALF, &x, TOL).unwrap(), es.contains(&HALF, &x, TOL), "{x:?}");
    }
    let (_, a) = exponential_counterexample();
    assert!(a.conified_contains(&HALF, &[-1.0, 1.0], TOL).unwrap());
    assert!(!a.conified_contains(&HALF, &[-1.0, 0.5], TOL).unwrap());
}

#[test]
fn pointedness_examples() {
    assert!(AcceptanceSet::PositiveCone.is_pointed(&HALF).unwrap());
    let (_, a) = parabola_counterexample();
    assert!(!a.is_pointed(&HALF).unwrap());
    for p in [vec![0.5, 0.5], vec![0.2, 0.3, 0.5]] {
        assert!(AcceptanceSet::ExpectedShortfall { alpha: 0.4 }.is_pointed(&p).unwrap());
    }
}

fn family(rng: &mut ChaCha8Rng, n: usize) -> (AcceptanceSet, Vec<f64>) {
    let p = random::probs(rng, n);
    let a = match rng.gen_range(0..8) {
        0 => AcceptanceSet::PositiveCone,
        1 => AcceptanceSet::ExpectedShortfall { alpha: rng.gen_range(0.05..0.95) },
        2 => AcceptanceSet::GainLoss { alpha: rng.gen_range(0.05..0.5) },
        3 => AcceptanceSet::Scenarios { event: (0..n).filter(|_| rng.gen_bool(0.5)).chain([n - 1]).collect() },
        4 => AcceptanceSet::TestProbabilities {
            tests: (0..2)
                .map(|_| {
                    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
                    let m = mean(&raw, p.probs());
                    (raw.iter().map(|v| v / m).collect(), -rng.gen_range(0.0..1.0))
                })
                .collect(),
        },
        5 => AcceptanceSet::UtilityPwl {
            utility: Utility { knots: vec![-1.0, 0.5], slopes: vec![3.0, 1.0, 0.25] },
            floor: -rng.gen_range(0.0..1.0),
        },
        6 => {
            // a benchmark that is dominated by 0: nonpositive mean
            let mut z: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let shift = mean(&z, p.probs()).max(0.0);
            z.iter_mut().for_each(|v| *v -= shift);
            AcceptanceSet::Ssd { benchmark: z }
        }
        _ => AcceptanceSet::Cone { generators: vec![(0..n).map(|i| if i == 0 { -1.0 } else { 1.0 }).collect()] },
    };
    (a, p.probs().to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn membership_is_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=4);
        let (a, p) = family(&mut rng, n);
        let x = random::payoff(&mut rng, n);
        let y: Vec<f64> = x.iter().map(|v| v + (rng.gen_range(0.0f64..2.0) * 4.0).round() / 4.0).collect();
        if a.contains(&p, &x, TOL) {
            prop_assert!(a.contains(&p, &y, TOL), "{a:?}: {x:?} accepted but {y:?} not");
        }
    }

    #[test]
    fn support_is_never_positive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=4);
        let (a, p) = family(&mut rng, n);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..3.0)).collect();
        let g = a.support(&p, &y);
        prop_assert!(g <= 1e-9, "{a:?}: support {g}");
    }

    #[test]
    fn recession_directions_are_accepted_at_scale(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=4);
        let (a, p) = family(&mut rng, n);
        let x = random::payoff(&mut rng, n);
        if a.in_recession(&p, &x, TOL) {
            for lambda in [1.0, 10.0, 100.0] {
                let scaled: Vec<f64> = x.iter().map(|v| lambda * v).collect();
                prop_assert!(a.contains(&p, &scaled, 1e-7), "{a:?}: {lambda}·{x:?} rejected");
            }
        }
    }

    #[test]
    fn conic_functionals_are_homogeneous(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=4);
        let p = random::probs(&mut rng, n);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (es_a, ex_a) = (rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.5));
        for lambda in [2.0, 5.0] {
            let scaled: Vec<f64> = x.iter().map(|v| lambda * v).collect();
            let (e1, e2) = (expected_shortfall(es_a, &scaled, p.probs()), lambda * expected_shortfall(es_a, &x, p.probs()));
            prop_assert!((e1 - e2).abs() <= 1e-9 * (1.0 + e2.abs()), "ES {e1} vs {e2}");
            let (f1, f2) = (expectile(ex_a, &scaled, p.probs()), lambda * expectile(ex_a, &x, p.probs()));
            prop_assert!((f1 - f2).abs() <= 1e-8 * (1.0 + f2.abs()), "expectile {f1} vs {f2}");
        }
    }

    #[test]
    fn gain_loss_matches_its_linear_encoding(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=4);
        let p = random::probs(&mut rng, n);
        let alpha = [0.1, 0.2, 0.25, 0.4, 0.5][rng.gen_range(0..5)];
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let lhs = mean(&x, p.probs());
        let rhs = ((1.0 - alpha) / alpha - 1.0) * negative_part_mean(&x, p.probs());
        prop_assume!((lhs - rhs).abs() > 1e-7);
        let a = AcceptanceSet::GainLoss { alpha };
        prop_assert_eq!(a.contains(p.probs(), &x, TOL), lhs >= rhs);
        prop_assert_eq!(expectile(alpha, &x, p.probs()) >= 0.0, lhs >= rhs);
    }
}

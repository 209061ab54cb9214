mod common;

use common::*;
use functional_clt::measures::{DiscreteMeasure, Point};
use functional_clt::rng::stream;
use functional_clt::transport::{wasserstein, wasserstein0, wasserstein_general};
use proptest::prelude::*;

/// Quantile-coupling oracle for W_ℓ on the line.
fn quantile_wasserstein(a: &DiscreteMeasure, b: &DiscreteMeasure, ell: f64) -> f64 {
    let sorted = |m: &DiscreteMeasure| {
        let mut v: Vec<(f64, f64)> = m.atoms().map(|(p, w)| (p.x1(), w)).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        v
    };
    let (sa, sb) = (sorted(a), sorted(b));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (sa[0].1, sb[0].1);
    let mut cost = 0.0;
    while i < sa.len() && j < sb.len() {
        let t = ra.min(rb);
        cost += t * (sa[i].0 - sb[j].0).abs().powf(ell);
        ra -= t;
        rb -= t;
        if ra <= 1e-15 {
            i += 1;
            ra = sa.get(i).map_or(0.0, |x| x.1);
        }
        if rb <= 1e-15 {
            j += 1;
            rb = sb.get(j).map_or(0.0, |x| x.1);
        }
    }
    cost.powf(1.0 / ell)
}

#[test]
fn dirac_distance_is_point_distance() {
    let a = DiscreteMeasure::dirac(Point::new(vec![0.0, 0.0]).unwrap());
    let b = DiscreteMeasure::dirac(Point::new(vec![3.0, 4.0]).unwrap());
    for ell in [1.0, 2.0, 3.5] {
        assert!((wasserstein(&a, &b, ell).unwrap().0 - 5.0).abs() < 1e-12);
    }
}

#[test]
fn total_variation_distance_of_disjoint_measures_is_one() {
    assert!((wasserstein0(&dirac(0.0), &dirac(1.0)).unwrap() - 1.0).abs() < 1e-15);
    assert!(wasserstein0(&iid3(), &iid3()).unwrap().abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn line_distance_matches_quantile_coupling(seed in 0u64..10_000, k1 in 1usize..12, k2 in 1usize..12, ell in 1.0f64..4.0) {
        let mut rng = stream(seed, 0);
        let a = random_measure(&mut rng, k1, 1);
        let b = random_measure(&mut rng, k2, 1);
        let w = wasserstein(&a, &b, ell).unwrap().0;
        let oracle = quantile_wasserstein(&a, &b, ell);
        prop_assert!((w - oracle).abs() < 1e-9 * (1.0 + oracle), "{} vs {}", w, oracle);
    }

    #[test]
    fn general_solver_agrees_and_plans_are_couplings(seed in 0u64..10_000, k1 in 1usize..10, k2 in 1usize..10, d in 1usize..4) {
        let mut rng = stream(seed, 1);
        let a = random_measure(&mut rng, k1, d);
        let b = random_measure(&mut rng, k2, d);
        let (w, plan) = wasserstein(&a, &b, 2.0).unwrap();
        let (wg, _) = wasserstein_general(&a, &b, 2.0).unwrap();
        prop_assert!((w - wg).abs() < 1e-9);
        for (s, t) in plan.row_sums().iter().zip(a.weights()) {
            prop_assert!((s - t).abs() < 1e-12);
        }
        for (s, t) in plan.col_sums().iter().zip(b.weights()) {
            prop_assert!((s - t).abs() < 1e-12);
        }
    }

    #[test]
    fn metric_axioms(seed in 0u64..10_000, ell in 1.0f64..3.0) {
        let mut rng = stream(seed, 2);
        let a = random_measure(&mut rng, 5, 2);
        let b = random_measure(&mut rng, 6, 2);
        let c = random_measure(&mut rng, 4, 2);
        let w = |x: &DiscreteMeasure, y: &DiscreteMeasure| wasserstein(x, y, ell).unwrap().0;
        prop_assert!(w(&a, &a) < 1e-12);
        prop_assert!((w(&a, &b) - w(&b, &a)).abs() < 1e-9);
        prop_assert!(w(&a, &c) <= w(&a, &b) + w(&b, &c) + 1e-9);
    }
}

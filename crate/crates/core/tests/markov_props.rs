mod common;

use ctxdbn::dbn::transition_matrix;
use ctxdbn::markov::{analyze, stationary_check, stationary_residual};
use ctxdbn::{ContextFormula, Limits, Strategy, WorldDistribution};
use proptest::prelude::*;
use rand::Rng;

fn random_distribution(rng: &mut impl Rng, size: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..size).map(|_| rng.gen_range(0.0..1.0)).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / z).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn positive_chains_have_one_attracting_distribution(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = common::rng(seed);
        let tbn = common::two_slice(&mut rng, n, true);
        let m = transition_matrix(&tbn, &Limits::default(), Strategy::default()).unwrap();
        let a = analyze(&m);
        prop_assert!(a.irreducible && a.aperiodic);
        prop_assert_eq!(a.recurrent.len(), 1);
        let pi = &a.recurrent[0].stationary;
        prop_assert!(pi.is_normalized(1e-12));
        prop_assert!(stationary_residual(&m, pi) < 1e-9);
        for _ in 0..3 {
            let mut v = random_distribution(&mut rng, m.size());
            for _ in 0..20_000 {
                let next: Vec<f64> = (0..m.size()).map(|j| (0..m.size()).map(|i| v[i] * m.get(i, j)).sum()).collect();
                let diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                v = next;
                if diff < 1e-14 {
                    break;
                }
            }
            for (i, p) in v.iter().enumerate() {
                prop_assert!((p - pi.probs()[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn recurrent_classes_are_closed_and_stationary(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = common::rng(seed);
        let tbn = common::two_slice(&mut rng, n, false);
        let m = transition_matrix(&tbn, &Limits::default(), Strategy::default()).unwrap();
        let a = analyze(&m);
        let mut seen = vec![false; m.size()];
        for comp in &a.components {
            for &s in comp {
                prop_assert!(!seen[s]);
                seen[s] = true;
            }
        }
        prop_assert!(seen.iter().all(|&b| b));
        prop_assert!(!a.recurrent.is_empty());
        for class in &a.recurrent {
            for &s in &class.states {
                for j in 0..m.size() {
                    if m.get(s, j) > 0.0 {
                        prop_assert!(class.states.contains(&j), "edge {s} -> {j} leaves the class");
                    }
                }
                prop_assert!(class.stationary.probs()[s] > 0.0);
            }
            prop_assert!(class.stationary.is_normalized(1e-9));
            prop_assert!(stationary_check(&m, &class.stationary));
            prop_assert!(class.period >= 1);
        }
        // mixtures of class distributions are stationary too
        let weights = random_distribution(&mut rng, a.recurrent.len());
        let mut mix = vec![0.0; m.size()];
        for (w, class) in weights.iter().zip(&a.recurrent) {
            for (slot, p) in mix.iter_mut().zip(class.stationary.probs()) {
                *slot += w * p;
            }
        }
        prop_assert!(stationary_check(&m, &WorldDistribution::new(n, mix).unwrap()));
    }

    #[test]
    fn delta_is_the_least_class_mass(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = common::rng(seed);
        let tbn = common::two_slice(&mut rng, n, false);
        let m = transition_matrix(&tbn, &Limits::default(), Strategy::default()).unwrap();
        let a = analyze(&m);
        let phi = ContextFormula::from_disjuncts((0..2).map(|_| common::context(&mut rng, n)));
        let expected = a
            .recurrent
            .iter()
            .map(|c| c.stationary.mass(&phi))
            .fold(f64::INFINITY, f64::min);
        prop_assert!((a.delta(&phi) - expected).abs() < 1e-12);
        prop_assert_eq!(a.delta_positive(&phi), a.delta(&phi) > 0.0);
    }
}

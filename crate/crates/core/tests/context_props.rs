mod common;

use ctxdbn::context::{equivalent, satisfying_worlds};
use ctxdbn::{entails, Gci, PropFormula, VAxiom, VOntology};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn query(rng: &mut impl Rng, ont: &VOntology) -> Gci {
    if rng.gen_bool(0.5) {
        let ax = &ont.axioms().choose(rng).unwrap().axiom;
        Gci::new(ax.lhs.clone(), common::concept(rng, 2))
    } else {
        common::gci(rng, 2)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn formula_models_are_entailing_worlds(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = common::rng(seed);
        let ont = common::ontology(&mut rng, n, 12, 3);
        let q = query(&mut rng, &ont);
        let phi = ont.context_formula(&q);
        for w in ont.vars().worlds() {
            prop_assert_eq!(phi.eval(w), entails(&ont.restrict(w), &q), "world {}", w.render(ont.vars()));
        }
    }

    #[test]
    fn formula_is_irredundant_and_ordered(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = common::rng(seed);
        let ont = common::ontology(&mut rng, n, 10, 2);
        let phi = ont.context_formula(&query(&mut rng, &ont));
        let ds = phi.disjuncts();
        for (i, a) in ds.iter().enumerate() {
            for (j, b) in ds.iter().enumerate() {
                if i != j {
                    prop_assert!(!a.is_subset_of(*b));
                }
            }
        }
        for pair in ds.windows(2) {
            prop_assert!(pair[0].len() <= pair[1].len());
        }
    }

    #[test]
    fn rendering_parses_back_to_an_equivalent_formula(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = common::rng(seed);
        let ont = common::ontology(&mut rng, n, 10, 2);
        let phi = ont.context_formula(&query(&mut rng, &ont));
        let text = phi.render(ont.vars());
        let parsed = PropFormula::parse(&text, ont.vars()).unwrap().to_context_formula();
        prop_assert!(equivalent(&phi, &parsed, ont.vars(), 20).unwrap(), "{}", text);
        prop_assert_eq!(parsed.render(ont.vars()), text);
    }

    #[test]
    fn adding_axioms_only_adds_models(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = common::rng(seed);
        let ont = common::ontology(&mut rng, n, 8, 2);
        let q = query(&mut rng, &ont);
        let mut axioms = ont.axioms().to_vec();
        axioms.push(VAxiom::new(common::gci(&mut rng, 2), common::context(&mut rng, n)));
        let bigger = VOntology::new(ont.vars().clone(), axioms).unwrap();
        let before = satisfying_worlds(&ont.context_formula(&q), ont.vars(), 20).unwrap();
        let after = satisfying_worlds(&bigger.context_formula(&q), ont.vars(), 20).unwrap();
        for w in before {
            prop_assert!(after.contains(&w));
        }
    }

    #[test]
    fn prop_formula_conversion_preserves_models(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = common::rng(seed);
        let vars = common::vars(n);
        let f = random_prop(&mut rng, n, 4);
        let dnf = f.to_context_formula();
        for w in vars.worlds() {
            prop_assert_eq!(f.eval(w), dnf.eval(w));
        }
    }
}

fn random_prop(rng: &mut impl Rng, n: usize, depth: usize) -> PropFormula {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..10) {
            0 => PropFormula::Const(rng.gen_bool(0.5)),
            _ => PropFormula::Var(rng.gen_range(0..n)),
        };
    }
    match rng.gen_range(0..3) {
        0 => PropFormula::Not(Box::new(random_prop(rng, n, depth - 1))),
        1 => PropFormula::And((0..rng.gen_range(0..3)).map(|_| random_prop(rng, n, depth - 1)).collect()),
        _ => PropFormula::Or((0..rng.gen_range(0..3)).map(|_| random_prop(rng, n, depth - 1)).collect()),
    }
}

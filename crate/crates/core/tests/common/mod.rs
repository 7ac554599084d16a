//! Seeded generators and brute-force oracles shared by the integration
//! tests. The oracles read CPT tables directly and never call the
//! library's inference code.

#![allow(dead_code)]

use ctxdbn::{
    BayesNet, Concept, Context, Cpt, Dbn, Gci, KnowledgeBase, Literal, TwoSliceNet, VAxiom,
    VOntology, VarSet, World,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const NAMES: [&str; 5] = ["A", "B", "C", "D", "E"];
pub const ROLES: [&str; 2] = ["r", "s"];
pub const VAR_NAMES: [&str; 6] = ["x", "y", "z", "u", "v", "w"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vars(n: usize) -> VarSet {
    VarSet::new(VAR_NAMES[..n].iter().copied()).unwrap()
}

/// A random concept of depth at most `depth`.
pub fn concept(rng: &mut impl Rng, depth: usize) -> Concept {
    let leaf = |rng: &mut dyn rand::RngCore| {
        if rng.gen_bool(0.1) {
            Concept::Top
        } else {
            Concept::atom(*NAMES.choose(rng).unwrap())
        }
    };
    if depth == 0 || rng.gen_bool(0.4) {
        return leaf(rng);
    }
    if rng.gen_bool(0.5) {
        Concept::and(concept(rng, depth - 1), concept(rng, depth - 1))
    } else {
        Concept::exists(*ROLES.choose(rng).unwrap(), concept(rng, depth - 1))
    }
}

pub fn gci(rng: &mut impl Rng, depth: usize) -> Gci {
    Gci::new(concept(rng, depth), concept(rng, depth))
}

/// A random consistent context over `n` variables, often empty or short.
pub fn context(rng: &mut impl Rng, n: usize) -> Context {
    let lits = (0..n).filter_map(|v| match rng.gen_range(0..5) {
        0 => Some(Literal::pos(v)),
        1 => Some(Literal::neg(v)),
        _ => None,
    });
    Context::new(lits).unwrap()
}

pub fn ontology(rng: &mut impl Rng, n: usize, max_axioms: usize, depth: usize) -> VOntology {
    let count = rng.gen_range(1..=max_axioms);
    let axioms = (0..count)
        .map(|_| VAxiom::new(gci(rng, depth), context(rng, n)))
        .collect();
    VOntology::new(vars(n), axioms).unwrap()
}

/// A probability that is sometimes exactly 0 or 1.
pub fn prob(rng: &mut impl Rng, extremes: bool) -> f64 {
    if extremes {
        match rng.gen_range(0..8) {
            0 => return 0.0,
            1 => return 1.0,
            _ => {}
        }
    }
    rng.gen_range(0.0..=1.0)
}

fn table(rng: &mut impl Rng, parents: usize, lo: f64, hi: f64, extremes: bool) -> Vec<f64> {
    (0..1usize << parents)
        .map(|_| {
            if extremes {
                prob(rng, true)
            } else {
                rng.gen_range(lo..=hi)
            }
        })
        .collect()
}

/// A random network whose parents always precede their child in a
/// shuffled order, so it is acyclic by construction.
pub fn bayes_net(rng: &mut impl Rng, n: usize, extremes: bool) -> BayesNet {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let cpts = (0..n)
        .map(|pos| {
            let child = order[pos];
            let mut parents: Vec<usize> =
                order[..pos].iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
            parents.truncate(3);
            parents.shuffle(rng);
            let k = parents.len();
            Cpt::new(child, parents, table(rng, k, 0.0, 1.0, extremes))
        })
        .collect();
    BayesNet::new(vars(n), cpts).unwrap()
}

/// A random two-slice network. With `positive`, every transition has
/// probability in `[0.05, 0.95]` per variable, so the chain is strictly
/// positive.
pub fn two_slice(rng: &mut impl Rng, n: usize, positive: bool) -> TwoSliceNet {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let cpts = (0..n)
        .map(|pos| {
            let child = n + order[pos];
            let mut parents: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            parents.extend(order[..pos].iter().map(|v| n + v).filter(|_| rng.gen_bool(0.3)));
            parents.truncate(3);
            parents.shuffle(rng);
            let k = parents.len();
            let t = if positive {
                table(rng, k, 0.05, 0.95, false)
            } else {
                table(rng, k, 0.0, 1.0, true)
            };
            Cpt::new(child, parents, t)
        })
        .collect();
    TwoSliceNet::new(vars(n), cpts).unwrap()
}

pub struct Instance {
    pub kb: KnowledgeBase,
    pub query: Gci,
}

/// A query entailed in some worlds of `ont` but not all, when one turns
/// up within a few tries. Worlds are judged by classical entailment only.
pub fn contingent_query(rng: &mut impl Rng, ont: &VOntology) -> Gci {
    let mut candidate = || {
        let ax = &ont.axioms().choose(rng).unwrap().axiom;
        match rng.gen_range(0..3) {
            0 => Gci::new(ax.lhs.clone(), concept(rng, 1)),
            1 => {
                let other = &ont.axioms().choose(rng).unwrap().axiom;
                Gci::new(ax.lhs.clone(), other.rhs.clone())
            }
            _ => Gci::new(concept(rng, 1), concept(rng, 1)),
        }
    };
    let mut last = candidate();
    for _ in 0..30 {
        let hits = ont
            .vars()
            .worlds()
            .filter(|w| ctxdbn::entails(&ont.restrict(*w), &last))
            .count();
        if hits > 0 && hits < 1 << ont.vars().len() {
            break;
        }
        last = candidate();
    }
    last
}

/// A random knowledge base over `n` variables with a contingent query.
pub fn instance(rng: &mut impl Rng, n: usize, positive: bool) -> Instance {
    let dbn = Dbn::new(bayes_net(rng, n, !positive), two_slice(rng, n, positive)).unwrap();
    let ont = ontology(rng, n, 8, 2);
    let query = contingent_query(rng, &ont);
    Instance {
        kb: KnowledgeBase::new(dbn, ont).unwrap(),
        query,
    }
}

/// `P(child | parents)` read from the table, with `value(v)` giving the
/// node values; `parents[0]` selects the most significant row bit.
pub fn cpt_factor(cpt: &Cpt, value: &dyn Fn(usize) -> bool) -> f64 {
    let mut row = 0usize;
    for &p in &cpt.parents {
        row = row * 2 + usize::from(value(p));
    }
    let p = cpt.table[row];
    if value(cpt.child) {
        p
    } else {
        1.0 - p
    }
}

/// `P(V_1 = w)` from the initial network's tables.
pub fn initial_prob(kb: &KnowledgeBase, w: World) -> f64 {
    kb.dbn()
        .initial()
        .cpts()
        .iter()
        .map(|c| cpt_factor(c, &|v| w.value(v)))
        .product()
}

/// `P(V_{t+1} = to | V_t = from)` from the transition tables.
pub fn step_prob(kb: &KnowledgeBase, from: World, to: World) -> f64 {
    let n = kb.vars().len();
    kb.dbn()
        .transition()
        .cpts()
        .iter()
        .map(|c| {
            cpt_factor(c, &|node| {
                if node < n {
                    from.value(node)
                } else {
                    to.value(node - n)
                }
            })
        })
        .product()
}

/// Sums the probability of every trajectory of length `t` accepted by
/// `keep`, by plain enumeration.
pub fn trajectory_sum(kb: &KnowledgeBase, t: usize, keep: &dyn Fn(&[World]) -> bool) -> f64 {
    let n = kb.vars().len();
    let worlds: Vec<World> = kb.vars().worlds().collect();
    let mut total = 0.0;
    let count = 1usize << (n * t);
    let mut path = vec![World::default(); t];
    for code in 0..count {
        for (i, slot) in path.iter_mut().enumerate() {
            *slot = worlds[(code >> (i * n)) & ((1 << n) - 1)];
        }
        if !keep(&path) {
            continue;
        }
        let mut p = initial_prob(kb, path[0]);
        for i in 1..t {
            p *= step_prob(kb, path[i - 1], path[i]);
        }
        total += p;
    }
    total
}

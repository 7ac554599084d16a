use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ctxdbn::dbn::{forward_step, initial_distribution, transition_matrix};
use ctxdbn::{
    BayesNet, Context, ContextFormula, Cpt, Dbn, Gci, KnowledgeBase, Limits, Literal, Reasoner,
    Strategy, TwoSliceNet, VAxiom, VOntology, VarSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STRATEGIES: [Strategy; 2] = [Strategy::Sequential, Strategy::Parallel];

fn vars(n: usize) -> VarSet {
    VarSet::new((0..n).map(|i| format!("v{i}"))).unwrap()
}

/// Chain-shaped networks: each variable depends on its predecessor (and,
/// in the transition, on its own previous value).
fn dbn(n: usize, rng: &mut impl Rng) -> Dbn {
    let vs = vars(n);
    let initial = (0..n)
        .map(|i| {
            if i == 0 {
                Cpt::root(0, rng.gen_range(0.1..0.9))
            } else {
                Cpt::new(i, vec![i - 1], vec![rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)])
            }
        })
        .collect();
    let transition = (0..n)
        .map(|i| {
            let mut parents = vec![i];
            if i > 0 {
                parents.push(n + i - 1);
            }
            let rows = 1 << parents.len();
            Cpt::new(n + i, parents, (0..rows).map(|_| rng.gen_range(0.05..0.95)).collect())
        })
        .collect();
    Dbn::new(
        BayesNet::new(vs.clone(), initial).unwrap(),
        TwoSliceNet::new(vs, transition).unwrap(),
    )
    .unwrap()
}

fn kb(n: usize, rng: &mut impl Rng) -> KnowledgeBase {
    let vs = vars(n);
    let axioms = vec![
        VAxiom::new(Gci::atomic("A", "B"), Context::literal(Literal::pos(0))),
        VAxiom::new(Gci::atomic("B", "C"), Context::literal(Literal::neg(n - 1))),
        VAxiom::new(Gci::atomic("A", "C"), Context::new([Literal::pos(1), Literal::pos(n - 1)]).unwrap()),
    ];
    KnowledgeBase::new(dbn(n, rng), VOntology::new(vs, axioms).unwrap()).unwrap()
}

fn bench_transition_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("transition_matrix");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [8, 10] {
        let d = dbn(n, &mut rng);
        for s in STRATEGIES {
            group.bench_with_input(BenchmarkId::new(format!("{s:?}"), n), &d, |b, d| {
                b.iter(|| transition_matrix(black_box(d.transition()), &Limits::default(), s).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_forward_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward_step");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [10, 12] {
        let d = dbn(n, &mut rng);
        let limits = Limits::default();
        let m = transition_matrix(d.transition(), &limits, Strategy::default()).unwrap();
        let v = initial_distribution(d.initial(), &limits, Strategy::default()).unwrap();
        for s in STRATEGIES {
            group.bench_with_input(BenchmarkId::new(format!("{s:?}"), n), &(&v, &m), |b, (v, m)| {
                b.iter(|| forward_step(black_box(v), m, s).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_formula_prob(c: &mut Criterion) {
    let mut group = c.benchmark_group("formula_prob");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 18;
    let d = dbn(n, &mut rng);
    let phi = ContextFormula::from_disjuncts([
        Context::new([Literal::pos(0), Literal::neg(5)]).unwrap(),
        Context::new([Literal::pos(3), Literal::pos(17)]).unwrap(),
    ]);
    for s in STRATEGIES {
        group.bench_function(BenchmarkId::new(format!("{s:?}"), n), |b| {
            b.iter(|| d.initial().formula_prob_with(black_box(&phi), 20, s).unwrap())
        });
    }
    group.finish();
}

fn bench_trajectory_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("prob_within_oracle");
    group.sample_size(10);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 3;
    let t = 6;
    let k = kb(n, &mut rng);
    for s in STRATEGIES {
        let r = Reasoner::with_options(&k, Limits::default(), s);
        let q = r.compile(&Gci::atomic("A", "C"));
        group.bench_function(BenchmarkId::new(format!("{s:?}"), n * t), |b| {
            b.iter(|| r.prob_within_oracle(black_box(&q), t).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    kernels,
    bench_transition_matrix,
    bench_forward_step,
    bench_formula_prob,
    bench_trajectory_oracle
);
criterion_main!(kernels);

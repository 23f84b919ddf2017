use criterion::{black_box, criterion_group, criterion_main, Criterion};
use opspace::linalg::{Matrix, PExponent};
use opspace::opnorm::{opnorm_bounds, OpnormConfig};
use opspace::postructure::{Effort, MatrixOverSpace, POStructure};
use opspace::seeding::rng_for;
use opspace::spaces::Space;
use opspace::tensor::{nuclear_bounds, proj_norm, TensorConfig, TensorElem};

fn opnorm(c: &mut Criterion) {
    let p = PExponent::new(3.0).unwrap();
    let mut rng = rng_for(1, 0);
    for n in [2, 3, 6] {
        let a = Matrix::random(n, n, &mut rng);
        c.bench_function(&format!("opnorm/{n}x{n}/p3"), |b| {
            b.iter(|| opnorm_bounds(black_box(&a), p, &OpnormConfig::default()).unwrap())
        });
    }
}

fn structures(c: &mut Criterion) {
    let p = PExponent::new(3.0).unwrap();
    let u = MatrixOverSpace::random(2, 2, &mut rng_for(2, 0));
    let cases = [
        ("min-linf", POStructure::min(Space::linf(2).unwrap(), p)),
        ("maxlp-l1", POStructure::maxlp(Space::l1(2).unwrap(), p)),
        ("nuclear-quotient", POStructure::nuclear_diagonal_quotient(p, 2)),
    ];
    let mut g = c.benchmark_group("matnorm");
    g.sample_size(10);
    for (name, s) in &cases {
        g.bench_function(*name, |b| b.iter(|| s.norm_with(black_box(&u), Effort::Fast)));
    }
    g.finish();
}

fn tensors(c: &mut Criterion) {
    let p = PExponent::new(3.0).unwrap();
    let mut rng = rng_for(3, 0);
    let coeffs = Matrix::random(2, 3, &mut rng);
    let t = TensorElem::new(Space::l1(2).unwrap(), Space::lp(3.0, 3).unwrap(), coeffs.clone()).unwrap();
    let mut g = c.benchmark_group("tensor");
    g.sample_size(10);
    g.bench_function("proj/l1-l3", |b| b.iter(|| proj_norm(black_box(&t), &TensorConfig::quick(0))));
    let sq = Matrix::random(2, 2, &mut rng);
    g.bench_function("nuclear/2", |b| b.iter(|| nuclear_bounds(black_box(&sq), p, 0)));
    g.finish();
}

criterion_group!(benches, opnorm, structures, tensors);
criterion_main!(benches);

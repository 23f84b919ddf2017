use opspace::linalg::{Matrix, Vector};
use opspace::seeding::rng_for;
use opspace::spaces::Space;
use opspace::tensor::{inj_norm, nuclear_bounds, proj_norm, TensorConfig, TensorElem};
use opspace::linalg::{svd, PExponent};
use proptest::prelude::*;

fn pick(i: usize, d: usize) -> Space {
    match i {
        0 => Space::l1(d).unwrap(),
        1 => Space::linf(d).unwrap(),
        _ => Space::lp(3.0, d).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn injective_below_projective(seed in any::<u64>(), i in 0usize..3, j in 0usize..3, dx in 1usize..3, dy in 1usize..3) {
        let c = Matrix::random(dx, dy, &mut rng_for(seed, 0));
        let t = TensorElem::new(pick(i, dx), pick(j, dy), c).unwrap();
        let inj = inj_norm(&t);
        let proj = proj_norm(&t, &TensorConfig::quick(seed));
        prop_assert!(inj.lower <= proj.upper + 1e-9);
        prop_assert!(proj.lower <= proj.upper + 1e-9);
    }

    #[test]
    fn cross_norms(seed in any::<u64>(), i in 0usize..3, j in 0usize..3, dx in 1usize..4, dy in 1usize..4) {
        let mut rng = rng_for(seed, 1);
        let (x, y) = (pick(i, dx), pick(j, dy));
        let u = Vector::random(dx, &mut rng);
        let v = Vector::random(dy, &mut rng);
        let want = x.norm(&u).unwrap().upper * y.norm(&v).unwrap().upper;
        let t = TensorElem::rank_one(x, y, &u, &v).unwrap();
        prop_assert!(inj_norm(&t).contains(want, 1e-6 * want.max(1.0)));
        prop_assert!(proj_norm(&t, &TensorConfig::quick(seed)).contains(want, 1e-6 * want.max(1.0)));
    }

    #[test]
    fn nuclear_at_two_is_trace_norm(seed in any::<u64>(), m in 1usize..4) {
        let a = Matrix::random(m, m, &mut rng_for(seed, 2));
        let tr: f64 = svd(&a).iter().map(|t| t.0).sum();
        let b = nuclear_bounds(&a, PExponent::new(2.0).unwrap(), seed);
        prop_assert!(b.contains(tr, 1e-6 * tr.max(1.0)));
    }
}

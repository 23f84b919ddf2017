use opspace::linalg::{c, Vector};
use opspace::seeding::rng_for;
use opspace::spaces::Space;
use proptest::prelude::*;

fn spaces() -> Vec<Space> {
    let mut rng = rng_for(11, 0);
    vec![
        Space::lp(3.0, 3).unwrap(),
        Space::l1(2).unwrap(),
        Space::linf(3).unwrap(),
        Space::weighted_lp(1.5, vec![0.5, 2.0]).unwrap(),
        Space::norming_set(2, (0..4).map(|_| Vector::random(2, &mut rng)).collect()).unwrap(),
        Space::quotient(Space::l1(3).unwrap(), vec![Vector::from_real(&[1.0, 1.0, 0.0])]).unwrap(),
        Space::dual(Space::lp(3.0, 2).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norm_axioms(seed in any::<u64>(), which in 0usize..7, s in 0.1f64..5.0) {
        let sp = &spaces()[which];
        let mut rng = rng_for(seed, 0);
        let x = Vector::random(sp.dim(), &mut rng);
        let y = Vector::random(sp.dim(), &mut rng);
        let nx = sp.norm(&x).unwrap();
        let ny = sp.norm(&y).unwrap();
        let sum = Vector(x.iter().zip(y.iter()).map(|(a, b)| a + b).collect());
        let ns = sp.norm(&sum).unwrap();
        prop_assert!(ns.lower <= nx.upper + ny.upper + 1e-9);
        let sx = sp.norm(&x.scale(c(0.0, s))).unwrap();
        prop_assert!(sx.overlaps(&nx.scaled(s), 1e-9 * s * nx.upper.max(1.0)));
        prop_assert!(nx.lower > 0.0);
    }

    #[test]
    fn pairing_bounded_by_norms(seed in any::<u64>(), which in 0usize..7) {
        let sp = &spaces()[which];
        let mut rng = rng_for(seed, 1);
        let x = Vector::random(sp.dim(), &mut rng);
        let phi = Vector::random(sp.dim(), &mut rng);
        let dual = match sp.dual_norm(&phi) {
            Ok(b) => b,
            // functionals on a quotient must vanish on the kernel
            Err(_) => return Ok(()),
        };
        let nx = sp.norm(&x).unwrap();
        prop_assert!(phi.pair(&x).norm() <= dual.upper * nx.upper * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn norming_functional_attains(seed in any::<u64>(), which in 0usize..4) {
        let sp = &spaces()[which];
        let x = Vector::random(sp.dim(), &mut rng_for(seed, 2));
        let phi = sp.norming_functional(&x);
        let nx = sp.norm(&x).unwrap();
        let dn = sp.dual_norm(&phi).unwrap();
        prop_assert!(dn.lower <= 1.0 + 1e-9);
        prop_assert!((phi.pair(&x).norm() - nx.upper).abs() <= 1e-7 * nx.upper.max(1.0));
    }
}

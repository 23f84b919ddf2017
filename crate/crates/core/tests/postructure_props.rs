use opspace::linalg::{Matrix, PExponent, Vector};
use opspace::multops::{DiscreteMeasure, MultRep};
use opspace::postructure::{op_bounds, Effort, MatrixOverSpace, POStructure};
use opspace::seeding::rng_for;
use opspace::spaces::Space;
use proptest::prelude::*;

fn p3() -> PExponent {
    PExponent::new(3.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn min_is_smallest(seed in any::<u64>(), n in 1usize..3) {
        // min l^inf(2) is the structure of the multiplication representation,
        // and max l^1(2) dominates min l^1(2)
        let mut rng = rng_for(seed, 0);
        let u = MatrixOverSpace::random(n, 2, &mut rng);
        let min = POStructure::min(Space::linf(2).unwrap(), p3()).norm_with(&u, Effort::Full);
        let conc = MultRep::new(DiscreteMeasure::uniform(2).unwrap(), p3()).structure().norm_with(&u, Effort::Full);
        prop_assert!(min.lower <= conc.upper + 1e-6);
        prop_assert!(conc.lower <= min.upper + 1e-6);
        let lo = POStructure::min(Space::l1(2).unwrap(), p3()).norm_with(&u, Effort::Fast);
        let hi = POStructure::maxlp(Space::l1(2).unwrap(), p3()).norm_with(&u, Effort::Fast);
        prop_assert!(lo.lower <= hi.upper + 1e-6);
    }

    #[test]
    fn scalar_cross_norm(seed in any::<u64>(), n in 1usize..3, which in 0usize..3) {
        let mut rng = rng_for(seed, 1);
        let s = match which {
            0 => POStructure::min(Space::linf(2).unwrap(), p3()),
            1 => POStructure::min(Space::lp(3.0, 2).unwrap(), p3()),
            _ => POStructure::maxlp(Space::l1(2).unwrap(), p3()),
        };
        let alpha = Matrix::random(n, n, &mut rng);
        let v = Vector::random(2, &mut rng);
        let got = s.norm_with(&MatrixOverSpace::scalar(&alpha, &v), Effort::Full);
        let na = op_bounds(&alpha, p3(), Effort::Full, 0);
        let nv = s.norm_with(&MatrixOverSpace::scalar(&Matrix::identity(1), &v), Effort::Full);
        let tol = 3e-2 * na.upper * nv.upper;
        prop_assert!(got.lower <= na.upper * nv.upper + tol);
        prop_assert!(got.upper >= na.lower * nv.lower - tol);
    }

    #[test]
    fn level_one_is_banach(seed in any::<u64>(), which in 0usize..3) {
        let s = match which {
            0 => POStructure::min(Space::lp(3.0, 2).unwrap(), p3()),
            1 => POStructure::maxlp(Space::l1(3).unwrap(), p3()),
            _ => POStructure::nuclear_diagonal_quotient(p3(), 2),
        };
        let x = Vector::random(s.dim(), &mut rng_for(seed, 2));
        let got = s.norm_with(&MatrixOverSpace::scalar(&Matrix::identity(1), &x), Effort::Full);
        let want = s.space.norm(&x).unwrap();
        prop_assert!(got.overlaps(&want, 1e-6 * want.upper.max(1.0)));
    }
}

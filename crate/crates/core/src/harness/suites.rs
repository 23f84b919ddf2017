use rand::Rng;
use rayon::prelude::*;

use super::{SuiteSpec, TOL_CLOSED, TOL_SEARCH};
use crate::bounds::Bounds;
use crate::cbmaps::LinearMap;
use crate::error::{Error, Result};
use crate::harness::check::Check;
use crate::linalg::{Matrix, PExponent, Vector};
use crate::multops::{self, amplified_diag, DiscreteMeasure, MultRep};
use crate::postructure::{check_axioms, op_bounds, Effort, MatrixOverSpace, POStructure, StructureKind};
use crate::seeding::{derive, rng_for};
use crate::spaces::Space;
use crate::tensor::{inj_norm, pproj_norm_level1, TensorConfig, TensorElem};

/// Largest `n * dim` handed to the maximal-structure searches.
const SEARCH_CAP: usize = 16;

pub(super) fn dispatch(spec: &SuiteSpec, p: PExponent) -> Result<Vec<Check>> {
    match spec.suite.as_str() {
        "axioms" => axioms(spec, p),
        "linfty" => multops::verify_linfty_isometry(spec.n, spec.k, p, spec.samples, spec.seed),
        "expectation" => expectation(spec, p),
        "commutant" => multops::commutant_check(spec.k, p, spec.samples, spec.seed),
        "dual-min-max" => dual_min_max(spec, p),
        "bidual" => bidual(spec, p),
        "inj-min" => inj_min(spec, p),
        "l1-max" => l1_max(spec, p),
        "l1-quotient" => l1_quotient(spec, p),
        "l1-tensor" => l1_tensor(spec, p),
        "cross-norm" => cross_norm(spec, p),
        other => Err(Error::UnknownSuite(other.to_string())),
    }
}

fn per_sample<F>(samples: usize, f: F) -> Vec<Check>
where
    F: Fn(usize) -> Vec<Check> + Sync + Send,
{
    (0..samples).into_par_iter().flat_map_iter(f).collect()
}

fn search_cap(spec: &SuiteSpec, dim: usize) -> Result<()> {
    if spec.n * dim > SEARCH_CAP {
        return Err(Error::CapExceeded(format!("n * dim = {} > {SEARCH_CAP}", spec.n * dim)));
    }
    Ok(())
}

fn configure(s: POStructure, spec: &SuiteSpec) -> POStructure {
    let s = s.with_seed(derive(spec.seed, 0x5eed));
    let s = match spec.cap_m {
        Some(c) => s.with_cap(c),
        None => s,
    };
    match spec.starts {
        Some(st) => s.with_starts(st),
        None => s,
    }
}

/// Default slack for a structure: closed form unless a search is involved.
fn structure_tol(s: &POStructure) -> f64 {
    match s.kind {
        StructureKind::Min | StructureKind::Concrete { .. } => TOL_CLOSED,
        _ => TOL_SEARCH,
    }
}

fn chosen_structure(spec: &SuiteSpec, p: PExponent) -> Result<POStructure> {
    let s = match &spec.structure {
        Some(ss) => ss.build()?,
        None => POStructure::min(Space::linf(spec.k)?, p),
    };
    Ok(configure(s, spec))
}

fn axioms(spec: &SuiteSpec, p: PExponent) -> Result<Vec<Check>> {
    let s = chosen_structure(spec, p)?;
    let tol = spec.tol.unwrap_or_else(|| structure_tol(&s));
    let mut checks = check_axioms(&s, spec.samples, spec.seed, tol);
    for c in &mut checks {
        c.id = format!("axioms/{}/{}", s.kind_name(), c.id);
    }
    Ok(checks)
}

fn cross_norm(spec: &SuiteSpec, p: PExponent) -> Result<Vec<Check>> {
    let s = chosen_structure(spec, p)?;
    let tol = spec.tol.unwrap_or_else(|| structure_tol(&s));
    let d = s.dim();
    Ok(per_sample(spec.samples, |t| {
        let mut rng = rng_for(derive(spec.seed, 0xc5), t as u64);
        let alpha = Matrix::random(spec.n, spec.n, &mut rng);
        let v = Vector::random(d, &mut rng);
        let lhs = s.norm_with(&MatrixOverSpace::scalar(&alpha, &v), Effort::Full);
        let na = op_bounds(&alpha, p, Effort::Full, spec.seed);
        let nv = s.norm_with(&MatrixOverSpace::scalar(&Matrix::identity(1), &v), Effort::Full);
        let rhs = Bounds::new(na.lower * nv.lower, na.upper * nv.upper, "product", "product");
        vec![
            Check::at_most(format!("cross-norm/{t:03}/upper"), &lhs, &rhs, tol),
            Check::equal(format!("cross-norm/{t:03}/equal"), &lhs, &rhs, tol),
        ]
    }))
}

fn expectation(spec: &SuiteSpec, p: PExponent) -> Result<Vec<Check>> {
    let (n, k) = (spec.n, spec.k);
    let rep = MultRep::new(DiscreteMeasure::uniform(k)?, p);
    let tol = spec.tol.unwrap_or(TOL_CLOSED);
    let exact = 1e-12;
    let id = Matrix::identity(n * k);
    let e_id = multops::expectation(&id, &rep, n)?;
    let mut out = vec![Check::holds("expectation/unital", e_id == id, e_id.max_abs_diff(&id), 0.0, 0.0)];
    out.extend(per_sample(spec.samples, |t| {
        let mut rng = rng_for(derive(spec.seed, 0xe0), t as u64);
        let tm = Matrix::random(n * k, n * k, &mut rng);
        let e = multops::expectation(&tm, &rep, n).expect("shape");
        let ee = multops::expectation(&e, &rep, n).expect("shape");
        let f = amplified_diag(&Vector::random(k, &mut rng), n);
        let g = amplified_diag(&Vector::random(k, &mut rng), n);
        let lhs = multops::expectation(&f.matmul(&tm).matmul(&g), &rep, n).expect("shape");
        let rhs = f.matmul(&e).matmul(&g);
        let idem = ee.max_abs_diff(&e);
        let module = lhs.max_abs_diff(&rhs);
        let ne = op_bounds(&e, p, Effort::Full, spec.seed);
        let nt = op_bounds(&tm, p, Effort::Full, spec.seed);
        vec![
            Check::holds(format!("expectation/{t:03}/idempotent"), idem <= exact, idem, 0.0, exact),
            Check::holds(format!("expectation/{t:03}/module"), module <= exact, module, 0.0, exact),
            Check::at_most(format!("expectation/{t:03}/contractive"), &ne, &nt, tol),
        ]
    }));
    Ok(out)
}

/// `(max V)* = min V*` and `(min W)* = max W*` with `V = l^1(k)`, `W = l^inf(k)`.
fn dual_min_max(spec: &SuiteSpec, p: PExponent) -> Result<Vec<Check>> {
    let k = spec.k;
    search_cap(spec, k)?;
    let tol = spec.tol.unwrap_or(TOL_SEARCH);
    let max_l1 = configure(POStructure::maxlp(Space::l1(k)?, p), spec);
    let min_linf = configure(POStructure::min(Space::linf(k)?, p), spec);
    let dual_max = configure(POStructure::dual(max_l1.clone()), spec);
    let dual_min = configure(POStructure::dual(min_linf.clone()), spec);
    Ok(per_sample(spec.samples, |t| {
        let mut rng = rng_for(derive(spec.seed, 0xd0), t as u64);
        let u = MatrixOverSpace::random(spec.n, k, &mut rng);
        let a = dual_max.norm_with(&u, Effort::Full);
        let b = min_linf.norm_with(&u, Effort::Full);
        let c = dual_min.norm_with(&u, Effort::Full);
        let d = max_l1.norm_with(&u, Effort::Full);
        vec![
            Check::equal(format!("dual-min-max/max-dual/{t:03}"), &a, &b, tol),
            Check::equal(format!("dual-min-max/min-dual/{t:03}"), &c, &d, tol),
        ]
    }))
}

/// `(min V)** = min V` for `V = l^1(k)` or the space of the given structure.
fn bidual(spec: &SuiteSpec, p: PExponent) -> Result<Vec<Check>> {
    let space = match &spec.structure {
        Some(ss) => ss.build()?.space,
        None => Space::l1(spec.k)?,
    };
    search_cap(spec, space.dim())?;
    let tol = spec.tol.unwrap_or(TOL_SEARCH);
    let min = configure(POStructure::min(space.clone(), p), spec);
    let bi = configure(POStructure::dual(POStructure::dual(min.clone())), spec);
    let d = space.dim();
    Ok(per_sample(spec.samples, |t| {
        let mut rng = rng_for(derive(spec.seed, 0xb1), t as u64);
        let u = MatrixOverSpace::random(spec.n, d, &mut rng);
        let a = bi.norm_with(&u, Effort::Full);
        let b = min.norm_with(&u, Effort::Full);
        vec![Check::equal(format!("bidual/{t:03}"), &a, &b, tol)]
    }))
}

/// `min X ⊗ min Y = min(X ⊗_λ Y)` for `X = l^inf(k)` and `Y` a random
/// norming-set space of dimension 2, computed once through the product
/// norming set and once by slicing against the norming set of `X`.
fn inj_min(spec: &SuiteSpec, p: PExponent) -> Result<Vec<Check>> {
    let k = spec.k;
    let tol = spec.tol.unwrap_or(TOL_CLOSED);
    let mut rng = rng_for(derive(spec.seed, 0x1a), 0);
    let dy = 2;
    let psi: Vec<Vector> = (0..3).map(|_| Vector::random(dy, &mut rng)).collect();
    let x = Space::linf(k)?;
    let y = Space::norming_set(dy, psi.clone())?;
    let phi: Vec<Vector> = (0..k).map(|i| Vector::basis(k, i)).collect();
    let mut prod = Vec::with_capacity(phi.len() * psi.len());
    for f in &phi {
        for g in &psi {
            prod.push(Vector(f.iter().flat_map(|a| g.iter().map(move |b| a * b)).collect()));
        }
    }
    let joint = configure(POStructure::min(Space::norming_set(k * dy, prod)?, p), spec);
    let min_y = configure(POStructure::min(y.clone(), p), spec);
    Ok(per_sample(spec.samples, |t| {
        let mut rng = rng_for(derive(spec.seed, 0x1b), t as u64);
        let u = MatrixOverSpace::random(spec.n, k * dy, &mut rng);
        let a = joint.norm_with(&u, Effort::Full);
        let mut b: Option<Bounds> = None;
        for f in &phi {
            // (f ⊗ id)(u) in M_n(Y)
            let slice: Vec<Matrix> = (0..dy)
                .map(|j| {
                    let mut m = Matrix::zeros(spec.n, spec.n);
                    for (i, &fi) in f.iter().enumerate() {
                        m.add_scaled(&u.coeffs()[i * dy + j], fi);
                    }
                    m
                })
                .collect();
            let bf = min_y.norm_with(&MatrixOverSpace::new(slice).expect("square"), Effort::Full);
            b = Some(match b {
                None => bf,
                Some(prev) => Bounds::max_of(&prev, &bf),
            });
        }
        let b = b.expect("k >= 1");
        let mut out = vec![Check::equal(format!("inj-min/n{}/{t:03}", spec.n), &a, &b, tol)];
        // level one against the injective tensor norm
        let c = Vector::random(k * dy, &mut rng);
        let te = TensorElem::new(x.clone(), y.clone(), Matrix::from_vec(k, dy, c.0.clone()).expect("shape"))
            .expect("dims");
        let inj = inj_norm(&te);
        let lvl = joint.norm_with(&MatrixOverSpace::scalar(&Matrix::identity(1), &c), Effort::Full);
        out.push(Check::equal(format!("inj-min/n1/{t:03}"), &inj, &lvl, tol));
        out
    }))
}

/// `l^1(k)` inside `(min l^inf(k))*`: its norms match the maximal structure,
/// and maps out of it into `B(l^p(2))` have level norms no larger than the
/// plain norm.
fn l1_max(spec: &SuiteSpec, p: PExponent) -> Result<Vec<Check>> {
    let k = spec.k;
    search_cap(spec, k)?;
    let tol = spec.tol.unwrap_or(TOL_SEARCH);
    let l1 = configure(POStructure::dual(POStructure::min(Space::linf(k)?, p)), spec);
    let max_l1 = configure(POStructure::maxlp(Space::l1(k)?, p), spec);
    let target = POStructure::operators(p, 2);
    Ok(per_sample(spec.samples, |t| {
        let mut rng = rng_for(derive(spec.seed, 0x11), t as u64);
        let u = MatrixOverSpace::random(spec.n, k, &mut rng);
        let a = l1.norm_with(&u, Effort::Full);
        let b = max_l1.norm_with(&u, Effort::Full);
        let mut out = vec![Check::equal(format!("l1-max/norm/{t:03}"), &a, &b, tol)];
        let map = LinearMap::new(l1.clone(), target.clone(), Matrix::random(4, k, &mut rng)).expect("dims");
        let banach = map.banach_norm(Effort::Full);
        for lvl in 1..=spec.levels {
            let ln = map.level_norm_with(lvl, Effort::Full);
            out.push(Check::at_most(format!("l1-max/cb/{t:03}/level{lvl}"), &ln, &banach, tol));
        }
        out
    }))
}

/// Maximal structure on `l^1(k)` against the quotient of the nuclear space.
fn l1_quotient(spec: &SuiteSpec, p: PExponent) -> Result<Vec<Check>> {
    let k = spec.k;
    search_cap(spec, k)?;
    let tol = spec.tol.unwrap_or(TOL_SEARCH);
    let max_l1 = configure(POStructure::maxlp(Space::l1(k)?, p), spec);
    let quot = configure(POStructure::nuclear_diagonal_quotient(p, k), spec);
    Ok(per_sample(spec.samples, |t| {
        let mut rng = rng_for(derive(spec.seed, 0x19), t as u64);
        let u = MatrixOverSpace::random(spec.n, k, &mut rng);
        let a = max_l1.norm_with(&u, Effort::Full);
        let b = quot.norm_with(&u, Effort::Full);
        vec![Check::equal(format!("l1-quotient/{t:03}"), &a, &b, tol)]
    }))
}

/// `max l^1(k1) ⊗ max l^1(k2) = max l^1(k1 k2)`: the maximal structure on the
/// product against the nuclear quotient, rank-one elements against the cross
/// norm, and level one against the p-projective bracket.
fn l1_tensor(spec: &SuiteSpec, p: PExponent) -> Result<Vec<Check>> {
    let (k1, k2) = (spec.k, spec.k2.unwrap_or(spec.k));
    let k = k1 * k2;
    search_cap(spec, k)?;
    let tol = spec.tol.unwrap_or(TOL_SEARCH);
    let direct = configure(POStructure::maxlp(Space::l1(k)?, p), spec);
    let quot = configure(POStructure::nuclear_diagonal_quotient(p, k), spec);
    let v = configure(POStructure::maxlp(Space::l1(k1)?, p), spec);
    let w = configure(POStructure::maxlp(Space::l1(k2)?, p), spec);
    let tcfg = TensorConfig::quick(spec.seed);
    Ok(per_sample(spec.samples, |t| {
        let mut rng = rng_for(derive(spec.seed, 0x7e), t as u64);
        let u = MatrixOverSpace::random(spec.n, k, &mut rng);
        let a = direct.norm_with(&u, Effort::Full);
        let b = quot.norm_with(&u, Effort::Full);
        let mut out = vec![Check::equal(format!("l1-tensor/product/{t:03}"), &a, &b, tol)];

        let alpha = Matrix::random(spec.n, spec.n, &mut rng);
        let (i, j) = (rng.gen_range(0..k1), rng.gen_range(0..k2));
        let r1 = MatrixOverSpace::scalar(&alpha, &Vector::basis(k, i * k2 + j));
        let lhs = direct.norm_with(&r1, Effort::Full);
        let rhs = op_bounds(&alpha, p, Effort::Full, spec.seed);
        out.push(Check::equal(format!("l1-tensor/rank-one/{t:03}"), &lhs, &rhs, tol));

        let c = Matrix::random(k1, k2, &mut rng);
        let sum: f64 = c.data().iter().map(|z| z.norm()).sum();
        let te = TensorElem::new(v.space.clone(), w.space.clone(), c).expect("dims");
        let pp = pproj_norm_level1(&te, &v, &w, spec.levels, &tcfg).expect("dims");
        out.push(Check::equal(format!("l1-tensor/level1/{t:03}"), &pp, &Bounds::exact(sum, "entry-sum"), tol));
        out
    }))
}

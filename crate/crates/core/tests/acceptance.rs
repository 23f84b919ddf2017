//! Acceptance criteria 1-8. Each test prints one `criterion N: PASS|FAIL` line
//! (written to the real stdout so it shows without `--nocapture`).

use std::io::Write;
use std::time::{Duration, Instant};

use opspace::cbmaps::LinearMap;
use opspace::harness::{run_suite, Check, Report, Status, SuiteSpec};
use opspace::linalg::{Matrix, PExponent};
use opspace::multops::{commutant_basis, DiscreteMeasure, MultRep};
use opspace::opnorm::{grid_oracle, opnorm_bounds, OpnormConfig};
use opspace::postructure::{Effort, POStructure};
use opspace::seeding::rng_for;
use opspace::spaces::Space;
use opspace::tensor::{proj_norm, TensorConfig, TensorElem};
use rand::Rng;

fn p(x: f64) -> PExponent {
    PExponent::new(x).unwrap()
}

fn report_line(n: usize, ok: bool, detail: &str, elapsed: Duration, budget: Duration) {
    let within = elapsed <= budget;
    let verdict = if ok && within { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "criterion {n}: {verdict}  {detail}  ({:.1}s, budget {}s)",
        elapsed.as_secs_f64(),
        budget.as_secs()
    )
    .unwrap();
}

fn summarize(reports: &[Report]) -> (usize, usize, usize) {
    reports.iter().fold((0, 0, 0), |(a, b, c), r| {
        (a + r.count(Status::Pass), b + r.count(Status::Fail), c + r.count(Status::Inconclusive))
    })
}

fn failing(reports: &[Report]) -> Vec<&Check> {
    reports.iter().flat_map(|r| r.checks.iter()).filter(|c| c.status != Status::Pass).collect()
}

#[test]
fn criterion_1_opnorm_soundness() {
    let start = Instant::now();
    let ps = [1.5, 2.0, 3.0, 4.0];
    let mut overlaps = 0;
    let mut worst_p2_width: f64 = 0.0;
    let total = 200;
    for s in 0..total {
        let mut rng = rng_for(0xacc1, s as u64);
        let rows = rng.gen_range(1..=3);
        let cols = rng.gen_range(1..=3);
        let pe = p(ps[s % ps.len()]);
        let a = Matrix::random(rows, cols, &mut rng);
        let b = opnorm_bounds(&a, pe, &OpnormConfig::default()).unwrap();
        let mesh = if cols == 3 { 0.2 } else { 0.02 };
        let g = grid_oracle(&a, pe, mesh).unwrap();
        if b.overlaps(&g, 1e-9) {
            overlaps += 1;
        } else {
            eprintln!("no overlap: {rows}x{cols} p={} solver {b:?} grid {g:?}", pe.value());
        }
        if pe.value() == 2.0 {
            worst_p2_width = worst_p2_width.max(b.width());
        }
    }
    let ok = overlaps == total && worst_p2_width < 1e-8;
    report_line(
        1,
        ok,
        &format!("overlap {overlaps}/{total}, worst p=2 width {worst_p2_width:.1e}"),
        start.elapsed(),
        Duration::from_secs(60),
    );
    assert!(ok);
}

#[test]
fn criterion_2_axioms() {
    let start = Instant::now();
    let pe = p(3.0);
    let structures = [
        POStructure::min(Space::linf(2).unwrap(), pe),
        POStructure::min(Space::linf(3).unwrap(), pe),
        MultRep::new(DiscreteMeasure::new(vec![1.0, 0.5, 2.0]).unwrap(), pe).structure(),
        POStructure::maxlp(Space::l1(2).unwrap(), pe),
    ];
    let reports: Vec<Report> = structures
        .iter()
        .map(|s| run_suite(&SuiteSpec::new("axioms").p(3.0).samples(50).seed(2).structure(s.to_spec())).unwrap())
        .collect();
    let (pass, fail, inc) = summarize(&reports);
    for c in failing(&reports) {
        eprintln!("{c:?}");
    }
    let ok = fail == 0 && inc == 0;
    report_line(
        2,
        ok,
        &format!("{pass} pass, {fail} fail, {inc} inconclusive over 4 structures x 50 samples"),
        start.elapsed(),
        Duration::from_secs(300),
    );
    assert!(ok);
}

#[test]
fn criterion_3_linfty_isometry() {
    let start = Instant::now();
    let mut reports = Vec::new();
    for n in 1..=3 {
        for k in 1..=3 {
            for pv in [2.0, 3.0] {
                let spec = SuiteSpec::new("linfty").n(n).k(k).p(pv).samples(25).seed(3);
                reports.push(run_suite(&spec).unwrap());
            }
        }
    }
    let (pass, fail, inc) = summarize(&reports);
    for c in failing(&reports) {
        eprintln!("{c:?}");
    }
    let ok = fail == 0 && inc == 0;
    report_line(3, ok, &format!("overlap {pass}/{}", pass + fail + inc), start.elapsed(), Duration::from_secs(300));
    assert!(ok);
}

#[test]
fn criterion_4_commutant_and_expectation() {
    let start = Instant::now();
    let dims_ok = (1..=5).all(|k| commutant_basis(k).len() == k);
    let mut reports = Vec::new();
    for k in 1..=5 {
        reports.push(run_suite(&SuiteSpec::new("commutant").k(k).p(3.0).samples(5).seed(4)).unwrap());
    }
    // 100 samples spread over n <= 2, k <= 3
    for (n, k) in [(1, 2), (1, 3), (2, 2), (2, 3)] {
        reports.push(run_suite(&SuiteSpec::new("expectation").n(n).k(k).p(2.5).samples(25).seed(4)).unwrap());
    }
    let (pass, fail, inc) = summarize(&reports);
    for c in failing(&reports) {
        eprintln!("{c:?}");
    }
    let ok = dims_ok && fail == 0 && inc == 0;
    report_line(
        4,
        ok,
        &format!("nullspace dims exact: {dims_ok}; {pass} pass, {fail} fail, {inc} inconclusive"),
        start.elapsed(),
        Duration::from_secs(120),
    );
    assert!(ok);
}

#[test]
fn criterion_5_duality() {
    let start = Instant::now();
    let dual = run_suite(&SuiteSpec::new("dual-min-max").n(2).k(2).p(3.0).samples(20).seed(5)).unwrap();
    let max_dual: Vec<&Check> = dual.checks.iter().filter(|c| c.id.starts_with("dual-min-max/max-dual/")).collect();
    let quot = run_suite(&SuiteSpec::new("l1-quotient").n(2).k(2).p(3.0).samples(10).seed(5)).unwrap();
    let a = max_dual.iter().filter(|c| c.status == Status::Pass).count();
    let b = quot.count(Status::Pass);
    for c in max_dual.iter().filter(|c| c.status != Status::Pass).chain(failing(std::slice::from_ref(&quot)).iter()) {
        eprintln!("{c:?}");
    }
    let ok = a == 20 && b == 10;
    report_line(
        5,
        ok,
        &format!("(max)* vs min {a}/20, max vs nuclear quotient {b}/10"),
        start.elapsed(),
        Duration::from_secs(900),
    );
    assert!(ok);
}

#[test]
fn criterion_6_tensor_identities() {
    let start = Instant::now();
    // projective norm on l^1 x l^1 collapses onto the entry sum
    let mut collapsed = 0;
    for s in 0..20 {
        let mut rng = rng_for(0xacc6, s as u64);
        let (dx, dy) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let c = Matrix::random(dx, dy, &mut rng);
        let sum: f64 = c.data().iter().map(|z| z.norm()).sum();
        let t = TensorElem::new(Space::l1(dx).unwrap(), Space::l1(dy).unwrap(), c).unwrap();
        let b = proj_norm(&t, &TensorConfig::default().with_seed(s as u64));
        if b.contains(sum, 1e-9) && b.width() <= 1e-3 * sum.max(1.0) {
            collapsed += 1;
        } else {
            eprintln!("l1 projective: {b:?} vs {sum}");
        }
    }
    let inj = run_suite(&SuiteSpec::new("inj-min").n(2).k(3).p(3.0).samples(20).seed(6)).unwrap();
    let tens = run_suite(&SuiteSpec::new("l1-tensor").n(2).k(2).k2(2).p(3.0).samples(10).seed(6)).unwrap();
    let reports = [inj, tens];
    for c in failing(&reports) {
        eprintln!("{c:?}");
    }
    let (pass, fail, inc) = summarize(&reports);
    let ok = collapsed == 20 && fail == 0 && inc == 0;
    report_line(
        6,
        ok,
        &format!("l1 projective collapse {collapsed}/20; inj-min and l1-tensor {pass} pass, {fail} fail, {inc} inconclusive"),
        start.elapsed(),
        Duration::from_secs(1200),
    );
    assert!(ok);
}

/// Levels `1..=3` agree when every level midpoint lies within twice the widest
/// bracket (plus rounding) of level one.
fn flat(levels: &[opspace::Bounds]) -> bool {
    let w = levels.iter().map(|b| b.width()).fold(0.0, f64::max);
    let scale = levels[0].upper.abs().max(1.0);
    levels.iter().all(|b| (b.midpoint() - levels[0].midpoint()).abs() <= 2.0 * w + 1e-9 * scale)
}

#[test]
fn criterion_7_cb_flattening() {
    let start = Instant::now();
    let pe = p(3.0);
    let into_min_src = POStructure::operators(pe, 2);
    let min_target = POStructure::min(Space::linf(2).unwrap(), pe);
    let max_src = POStructure::maxlp(Space::l1(2).unwrap(), pe);
    let ops_target = POStructure::operators(pe, 2);
    let mut flat_min = 0;
    let mut flat_max = 0;
    for s in 0..20 {
        let mut rng = rng_for(0xacc7, s as u64);
        let t = LinearMap::new(into_min_src.clone(), min_target.clone(), Matrix::random(2, 4, &mut rng)).unwrap();
        let e = t.cb_estimate_with(3, Effort::Full);
        if flat(&e.levels) {
            flat_min += 1;
        } else {
            eprintln!("min target not flat: {:?}", e.levels);
        }
        let t = LinearMap::new(max_src.clone(), ops_target.clone(), Matrix::random(4, 2, &mut rng)).unwrap();
        let e = t.cb_estimate_with(3, Effort::Full);
        if flat(&e.levels) {
            flat_max += 1;
        } else {
            eprintln!("maximal source not flat: {:?}", e.levels);
        }
    }
    let ok = flat_min == 20 && flat_max == 20;
    report_line(
        7,
        ok,
        &format!("flat into min targets {flat_min}/20, out of maximal source {flat_max}/20"),
        start.elapsed(),
        Duration::from_secs(600),
    );
    assert!(ok);
}

#[test]
fn criterion_8_determinism() {
    let start = Instant::now();
    let specs = [
        SuiteSpec::new("linfty").n(2).k(2).samples(5).seed(8),
        SuiteSpec::new("axioms").samples(5).seed(8),
        SuiteSpec::new("l1-quotient").samples(2).seed(8),
    ];
    let mut same = 0;
    for spec in &specs {
        let a = run_suite(spec).unwrap();
        let b = run_suite(spec).unwrap();
        if a.hashed_bytes() == b.hashed_bytes() && a.digest() == b.digest() {
            same += 1;
        }
    }
    let ok = same == specs.len();
    report_line(8, ok, &format!("byte-identical reruns {same}/{}", specs.len()), start.elapsed(), Duration::from_secs(600));
    assert!(ok);
}

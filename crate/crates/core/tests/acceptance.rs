//! One PASS/FAIL line per acceptance criterion, with wall-clock limits.
//! Run with `--nocapture` to see the report.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num::One;
use pontcalc::assoc::{build_restricted_yz, fibers_are_polygons, quasifib_check, AssocPoset, YElem};
use pontcalc::cellcx::{coboundary, coboundary_witness};
use pontcalc::charts::*;
use pontcalc::chern::{check_theta_oracle, delta_omega_failures, omega_rechosen};
use pontcalc::grassmann::{elementary_case_sign, euler_sign, target_pairs, transition_positive, Certificate, ChartPair, Elementary};
use pontcalc::linalg::{q, qr};
use pontcalc::om::*;
use pontcalc::pipeline::{prepare, Options, Prepared};
use pontcalc::pont::{find_fixing_cycle, pontrjagin_dual, verify_fixing, FixingOutcome};
use pontcalc::{models, Q};

fn idx(a: &FlatteningAtlas, l: &str) -> usize {
    a.complex.labels.iter().position(|x| x == l).unwrap()
}

fn criterion_1() {
    let t = models::torus(3, 3).unwrap();
    let m = linear_chart(&flatten_at(&t, &vertex_point(idx(&t, "a") as u32)).unwrap()).unwrap();
    let nonloops: BTreeSet<&str> = (0..9).filter(|&i| !m.is_loop(i)).map(|i| t.complex.labels[i].as_str()).collect();
    assert_eq!(nonloops, ["b", "c", "d", "e", "f", "g"].into_iter().collect());
    for (x, y) in [("b", "e"), ("c", "f"), ("d", "g")] {
        let (x, y) = (idx(&t, x), idx(&t, y));
        assert!(m.covectors().iter().all(|c| c.get(x) == c.get(y).neg()));
    }
    let (a, b) = (idx(&t, "a") as u32, idx(&t, "b") as u32);
    let point = |s: Q| vec![(a, Q::one() - &s), (b, s)];
    let flats: Vec<_> = [qr(1, 4), qr(1, 2), qr(3, 4)].into_iter().map(|s| flatten_at(&t, &point(s)).unwrap()).collect();
    let lin: BTreeSet<Vec<SignVector>> = flats.iter().map(|f| linear_chart(f).unwrap().covectors().to_vec()).collect();
    let aff: BTreeSet<Vec<SignVector>> = flats.iter().map(|f| affine_chart(f).unwrap().covectors().to_vec()).collect();
    assert_eq!((lin.len(), aff.len()), (3, 1));
}

fn criterion_2() {
    let t = Arc::new(models::torus(3, 3).unwrap());
    let c = Arc::new(models::circle(6).unwrap());
    for (atlas, flavor) in [(t.clone(), Flavor::Affine), (t, Flavor::Linear), (c, Flavor::Affine)] {
        let cd = build_cd(atlas.clone(), flavor, 3, 5).unwrap();
        for cell in &cd.cells {
            let r = validate_chart(&cell.chart, &cell.carrier, &atlas, flavor);
            assert!(r.valid, "{:?}", r.violations);
        }
    }
    let arr = VectorArrangement::new(
        ground(&["a", "b", "c", "d"]),
        vec![vec![q(0), q(0), q(1)], vec![q(2), q(0), q(1)], vec![qr(1, 2), q(1), q(1)], vec![qr(3, 2), q(1), q(1)]],
    )
    .unwrap();
    let m = om_from_vectors(&arr, 3).unwrap();
    let mut star = BTreeSet::new();
    for tri in [[0u32, 1, 2], [0, 1, 3]] {
        for mask in 1u32..8 {
            star.insert((0..3).filter(|i| mask >> i & 1 == 1).map(|i| tri[i]).collect::<Vec<u32>>());
        }
    }
    assert!(!validate_chart_in(&m, &[0, 1], &star, Flavor::Affine).valid);
}

fn criterion_3() {
    for (name, arr, r) in common::corpus_arrangements() {
        let m = om_from_vectors(&arr, r).unwrap();
        let got: BTreeSet<SignVector> = m.covectors().iter().copied().collect();
        assert_eq!(got, common::fan_covectors(&arr), "{name}");
        let chi = m.normalized_chirotope().unwrap();
        assert_eq!(OrientedMatroid::from_chirotope(chi).covectors(), m.covectors(), "{name}");
    }
}

fn criterion_4() {
    for (atlas, flavor) in [(models::torus(3, 3).unwrap(), Flavor::Affine), (models::torus(3, 3).unwrap(), Flavor::Linear), (models::circle(6).unwrap(), Flavor::Affine)] {
        let cd = build_cd(Arc::new(atlas), flavor, 3, 5).unwrap();
        let ap = build_restricted_yz(&cd).unwrap();
        assert!(fibers_are_polygons(&ap));
        assert_eq!(quasifib_check(&ap), Ok(()));
    }
    let arr = VectorArrangement::from_ints(&["a", "b", "c"], &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
    let t = Arc::new(om_from_vectors(&arr, 3).unwrap());
    let ys = [
        project_along(&arr, &[q(1), q(0), q(0)]).unwrap(),
        project_onto(&arr, &[q(0), q(1), q(0)], &[q(1), q(0), q(1)]).unwrap(),
        project_onto(&arr, &[q(1), q(0), q(1)], &[q(-1), q(1), q(0)]).unwrap(),
    ];
    assert!(weak_map(&ys[2], &ys[1]).unwrap() && weak_map(&ys[1], &ys[0]).unwrap());
    let elems = ys.into_iter().map(|y| YElem { delta: vec![0, 1, 2], star: 0b111, t: t.clone(), y }).collect();
    let ap = AssocPoset::from_elements(elems, false).unwrap();
    assert!(fibers_are_polygons(&ap));
    assert_eq!(quasifib_check(&ap), Ok(()));
}

fn criterion_5(prep: &Prepared) {
    let (cy, data) = (&prep.posets.cy, &prep.chern);
    let sys = &data.orient.sys;
    assert!(delta_omega_failures(cy, &data.omega, sys).is_empty());
    let (_, om2) = omega_rechosen(cy, data, 0x0c1e_7a11).unwrap();
    let diff = data.omega.minus(&om2);
    let w = coboundary_witness(&diff, cy, sys).expect("coboundary witness");
    assert!(coboundary(&w, cy, sys).minus(&diff).is_zero());
    assert_eq!(check_theta_oracle(&data.theta).unwrap(), data.theta.problems.len());
}

fn criterion_6(prep: &Prepared) {
    let setup = prep.setup().unwrap();
    assert_eq!(setup.degree, 4);
    let r = find_fixing_cycle(&setup, false).unwrap();
    assert_eq!(r.outcome, FixingOutcome::Found);
    assert!(verify_fixing(&setup, r.phi.as_ref().unwrap()).unwrap().ok());
}

fn criterion_7(preps: &[&Prepared]) {
    for prep in preps {
        let setup = prep.setup().unwrap();
        let phi = find_fixing_cycle(&setup, false).unwrap().phi.unwrap();
        assert_eq!(pontrjagin_dual(&setup, &prep.chern.omega, 0, &phi).unwrap(), prep.base.fclass_sd);
        for i in 1..=2 {
            assert!(pontrjagin_dual(&setup, &prep.chern.omega, i, &phi).unwrap().is_zero());
        }
    }
}

fn criterion_8() {
    for a in [4, 6] {
        for t in target_pairs() {
            let r = transition_positive(&ChartPair::new(a, (1, 2), t).unwrap(), 100).unwrap();
            assert!(r.all_positive && r.factorization_holds && r.oracle_agrees);
            assert!(r.checked + r.skipped >= 100);
        }
    }
    let r = elementary_case_sign(&Elementary::Diagonal([2, 3, 5, 7].map(q).to_vec()), 4).unwrap();
    assert!(matches!(r.certificate, Certificate::Square { .. }));
    assert_eq!(euler_sign(4).unwrap().sign, -1);
    for a in 2..=12 {
        let e = euler_sign(a).unwrap();
        assert_eq!(e.sign, e.formula);
    }
}

struct Report {
    failures: Vec<usize>,
}

impl Report {
    fn run(&mut self, k: usize, title: &str, limit: Duration, f: impl FnOnce()) {
        let start = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(f)).is_ok();
        let took = start.elapsed();
        let pass = ok && took <= limit;
        let why = if !ok { " (check failed)" } else if !pass { " (over time limit)" } else { "" };
        println!("criterion {k} {}: {title} [{:.2?} / limit {:.0?}]{why}", if pass { "PASS" } else { "FAIL" }, took, limit);
        if !pass {
            self.failures.push(k);
        }
    }
}

#[test]
fn acceptance() {
    let mut rep = Report { failures: vec![] };
    let s = Duration::from_secs;
    rep.run(1, "torus chart reproduction", s(1), criterion_1);
    rep.run(2, "chart-axiom suite", s(1), criterion_2);
    rep.run(3, "covector oracle equivalence", s(30), criterion_3);
    rep.run(4, "quasifibration", s(60), criterion_4);

    let opt = |flavor| Options { flavor, ..Options::default() };
    let start = Instant::now();
    let torus = prepare(Arc::new(models::torus(3, 3).unwrap()), &opt(Flavor::Affine)).unwrap();
    let prep_time = start.elapsed();
    println!("  torus charts, posets and Ω prepared in {prep_time:.2?}");
    rep.run(5, "Chern cocycle", s(300).saturating_sub(prep_time), || criterion_5(&torus));
    rep.run(6, "fixing cycle on the torus", s(600).saturating_sub(prep_time), || criterion_6(&torus));
    let circle = prepare(Arc::new(models::circle(6).unwrap()), &opt(Flavor::Affine)).unwrap();
    let linear = prepare(Arc::new(models::torus(3, 3).unwrap()), &opt(Flavor::Linear)).unwrap();
    rep.run(7, "Pontrjagin dual sanity", s(60), || criterion_7(&[&torus, &circle, &linear]));
    rep.run(8, "Grassmann suite", s(10), criterion_8);

    // no CP² facet list or flat-chart atlas ships with the corpus, and the
    // default resource guard refuses dimension ≥ 3 without --stretch
    let guard = pontcalc::pipeline::resource_notice(&models::sphere(3).unwrap());
    assert!(guard.is_some());
    println!("criterion 9 INCONCLUSIVE: CP² stretch target (no atlas supplied; n ≥ 3 inputs get resource diagnostics)");

    assert!(rep.failures.is_empty(), "failed criteria: {:?}", rep.failures);
}

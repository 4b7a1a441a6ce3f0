use std::collections::BTreeMap;
use std::sync::Arc;

use num::{One, Signed, Zero};
use pontcalc::cellcx::{boundary, Chain, Cochain};
use pontcalc::charts::{FlatteningAtlas, Flavor};
use pontcalc::linalg::{Echelon, SparseRow};
use pontcalc::pipeline::{prepare, Options, Prepared};
use pontcalc::pont::*;
use pontcalc::{models, Q};

fn prepared(atlas: FlatteningAtlas, flavor: Flavor) -> Prepared {
    prepare(Arc::new(atlas), &Options { flavor, ..Options::default() }).unwrap()
}

/// Dense-free generic solve of the full system: every boundary row and the
/// normalization on every top simplex of Cx X, through chain-level cap and
/// pushforward of unit chains.
fn oracle_solution(setup: &FixingSetup) -> Option<Chain> {
    let tops = setup.cy.simplices(setup.degree);
    let n = tops.len();
    let mut faces: BTreeMap<Vec<u32>, BTreeMap<usize, Q>> = BTreeMap::new();
    let mut norms: BTreeMap<Vec<u32>, BTreeMap<usize, Q>> = BTreeMap::new();
    for (j, s) in tops.iter().enumerate() {
        let mut unit = Chain::zero(setup.degree);
        unit.add(s.clone(), Q::one());
        for (f, v) in &boundary(&unit, &setup.phi_sys).terms {
            *faces.entry(f.clone()).or_default().entry(j).or_insert_with(Q::zero) += v;
        }
        for (f, v) in &setup.pushed(&unit).unwrap().terms {
            *norms.entry(f.clone()).or_default().entry(j).or_insert_with(Q::zero) += v;
        }
    }
    let mut ech = Echelon::new();
    for row in faces.values() {
        ech.insert(row.iter().filter(|(_, v)| !v.is_zero()).map(|(j, v)| (*j, v.clone())).collect());
    }
    for s in setup.base.cx_x.simplices(setup.base.n) {
        let mut row: SparseRow = norms.get(s).map(|r| r.iter().filter(|(_, v)| !v.is_zero()).map(|(j, v)| (*j, v.clone())).collect()).unwrap_or_default();
        let rhs = setup.base.fclass_sd.terms.get(s).cloned().unwrap_or_else(Q::zero);
        if !rhs.is_zero() {
            row.push((n, -rhs));
        }
        if !row.is_empty() {
            ech.insert(row);
        }
    }
    let sol = ech.back_substitute(n)?;
    let mut phi = Chain::zero(setup.degree);
    for (j, v) in sol {
        phi.add(tops[j].clone(), v);
    }
    Some(phi)
}

fn found(setup: &FixingSetup) -> Chain {
    let r = find_fixing_cycle(setup, false).unwrap();
    assert_eq!(r.outcome, FixingOutcome::Found);
    let phi = r.phi.unwrap();
    assert!(verify_fixing(setup, &phi).unwrap().ok());
    phi
}

fn small_case(atlas: FlatteningAtlas, flavor: Flavor, degree: usize) {
    let prep = prepared(atlas, flavor);
    let setup = prep.setup().unwrap();
    assert_eq!(setup.degree, degree);
    let phi = found(&setup);
    let other = oracle_solution(&setup).expect("oracle finds a solution");
    assert!(verify_fixing(&setup, &other).unwrap().ok());
    let diff = phi.minus(&other);
    assert!(boundary(&diff, &setup.phi_sys).is_zero());
    assert!(setup.pushed(&diff).unwrap().is_zero());
    assert_eq!(pontrjagin_dual(&setup, &prep.chern.omega, 0, &phi).unwrap(), prep.base.fclass_sd);
    assert!(pontrjagin_dual(&setup, &prep.chern.omega, 1, &phi).unwrap().is_zero());
}

#[test]
fn circle_matches_oracle() {
    small_case(models::circle(6).unwrap(), Flavor::Affine, 1);
}

#[test]
fn linear_torus_matches_oracle() {
    small_case(models::torus(3, 3).unwrap(), Flavor::Linear, 2);
}

#[test]
fn subdivided_fundamental_class() {
    let x = models::torus(3, 3).unwrap().complex;
    let base = base_data(&x, 2).unwrap();
    assert_eq!(base.fclass.terms.len(), 18);
    // each triangle splits into six flags
    assert_eq!(base.fclass_sd.terms.len(), 108);
    assert!(base.fclass_sd.terms.values().all(|v| v.abs() == Q::one()));
    assert!(boundary(&base.fclass_sd, &base.d_cx).is_zero());
}

#[test]
fn affine_torus() {
    let prep = prepared(models::torus(3, 3).unwrap(), Flavor::Affine);
    let setup = prep.setup().unwrap();
    assert_eq!((setup.degree, setup.exponent), (4, 1));
    assert!(setup.exhaustive);
    let phi = found(&setup);

    let doubled = phi.scale(&Q::from_integer(2.into()));
    let check = verify_fixing(&setup, &doubled).unwrap();
    assert!(check.cycle && !check.chain_level && !check.dual_evaluation);

    let other = find_fixing_cycle(&setup, true).unwrap().phi.unwrap();
    assert_eq!(compare_fixing_cycles(&setup, &phi, &other).unwrap().0, Comparison::Homologous);

    assert_eq!(pontrjagin_dual(&setup, &prep.chern.omega, 0, &phi).unwrap(), prep.base.fclass_sd);
    assert!(pontrjagin_dual(&setup, &prep.chern.omega, 1, &phi).unwrap().is_zero());

    // with Ω = 0 the normalization cannot hold
    let zero = Cochain::zero(2);
    let dead = FixingSetup::new(&prep.base, &prep.posets.ap, &prep.posets.cy, &zero, &prep.chern.orient.sys, Flavor::Affine).unwrap();
    assert_eq!(find_fixing_cycle(&dead, false).unwrap().outcome, FixingOutcome::None);
    assert!(!verify_fixing(&dead, &phi).unwrap().chain_level);
}

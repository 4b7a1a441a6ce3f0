mod common;

use std::collections::BTreeSet;

use pontcalc::linalg::{det, q};
use pontcalc::om::*;
use pontcalc::Q;
use proptest::prelude::*;

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("e{i}")).collect()
}

fn arrangement(vecs: &[Vec<i64>]) -> VectorArrangement {
    let l = labels(vecs.len());
    let l: Vec<&str> = l.iter().map(|s| s.as_str()).collect();
    let v: Vec<&[i64]> = vecs.iter().map(|x| x.as_slice()).collect();
    VectorArrangement::from_ints(&l, &v)
}

fn arb_arrangement() -> impl Strategy<Value = VectorArrangement> {
    (2usize..=3).prop_flat_map(|d| prop::collection::vec(prop::collection::vec(-3i64..=3, d), d..=8)).prop_map(|v| arrangement(&v))
}

#[test]
fn corpus_matches_fan_oracle() {
    let corpus = common::corpus_arrangements();
    assert!(corpus.len() > 100);
    for (name, arr, r) in &corpus {
        let m = om_from_vectors(arr, *r).unwrap();
        let got: BTreeSet<SignVector> = m.covectors().iter().copied().collect();
        assert_eq!(got, common::fan_covectors(arr), "{name}");
    }
}

#[test]
fn chirotope_of_three_basis_vectors() {
    let arr = arrangement(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    let m = om_from_vectors(&arr, 3).unwrap();
    // three coordinate hyperplanes: every sign vector occurs
    assert_eq!(m.covectors().len(), 27);
    assert_eq!(m.normalized_chirotope().unwrap().get(&[0, 1, 2]), Sign::Pos);
    assert_eq!(m.normalized_chirotope().unwrap().get(&[1, 0, 2]), Sign::Neg);
}

fn random_invertible(seed: &[i64; 9]) -> Option<Vec<Vec<Q>>> {
    let a: Vec<Vec<Q>> = seed.chunks(3).map(|r| r.iter().map(|&x| q(x)).collect()).collect();
    if det(&a) == q(0) {
        None
    } else {
        Some(a)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_arrangements_match_fan_oracle(arr in arb_arrangement()) {
        prop_assume!(arr.rank() == arr.dim);
        let m = om_from_vectors(&arr, arr.dim).unwrap();
        let got: BTreeSet<SignVector> = m.covectors().iter().copied().collect();
        prop_assert_eq!(got, common::fan_covectors(&arr));
    }

    #[test]
    fn chirotope_covector_round_trip(arr in arb_arrangement()) {
        prop_assume!(arr.rank() == arr.dim);
        let m = om_from_vectors(&arr, arr.dim).unwrap();
        prop_assert!(m.check_covector_axioms());
        let chi = m.normalized_chirotope().unwrap();
        prop_assert!(check_chirotope(&chi).unwrap());
        let back = OrientedMatroid::from_chirotope(chi.clone());
        prop_assert_eq!(back.covectors(), m.covectors());
        prop_assert_eq!(back.normalized_chirotope().unwrap(), chi);
    }

    #[test]
    fn weak_maps_compose(arr in arb_arrangement(), e in 0usize..8, f in 0usize..8) {
        let n = arr.vectors.len();
        let (e, f) = (e % n, f % n);
        let mut a2 = arr.clone();
        a2.vectors[e] = vec![q(0); arr.dim];
        let mut a3 = a2.clone();
        a3.vectors[f] = vec![q(0); arr.dim];
        prop_assume!(arr.rank() == arr.dim && a3.rank() == arr.dim);
        let (m1, m2, m3) = (om_from_vectors(&arr, arr.dim).unwrap(), om_from_vectors(&a2, arr.dim).unwrap(), om_from_vectors(&a3, arr.dim).unwrap());
        prop_assert!(weak_map(&m1, &m1).unwrap());
        prop_assert!(weak_map(&m1, &m2).unwrap());
        prop_assert!(weak_map(&m2, &m3).unwrap());
        prop_assert!(weak_map(&m1, &m3).unwrap());
        if m2 != m1 {
            prop_assert!(!weak_map(&m2, &m1).unwrap());
        }
    }

    #[test]
    fn quotients_invariant_under_linear_maps(
        vecs in prop::collection::vec(prop::collection::vec(-3i64..=3, 3), 3..=6),
        seeds in prop::collection::vec(prop::array::uniform9(-3i64..=3), 5),
    ) {
        let arr = arrangement(&vecs);
        prop_assume!(arr.rank() == 3);
        let base: BTreeSet<Vec<SignVector>> = rank2_quotients_of_rank3(&arr).unwrap().iter().map(|m| m.covectors().to_vec()).collect();
        for s in &seeds {
            let Some(a) = random_invertible(s) else { continue };
            let moved: BTreeSet<Vec<SignVector>> = rank2_quotients_of_rank3(&arr.transform(&a)).unwrap().iter().map(|m| m.covectors().to_vec()).collect();
            prop_assert_eq!(&moved, &base);
        }
        // every quotient is a strong-map image of the chart
        let m = om_from_vectors(&arr, 3).unwrap();
        for y in rank2_quotients_of_rank3(&arr).unwrap() {
            prop_assert!(strong_map_image(&m, &y).unwrap());
        }
    }

    #[test]
    fn rank2_circle_alternates(vecs in prop::collection::vec(prop::collection::vec(-3i64..=3, 2), 2..=8)) {
        let arr = arrangement(&vecs);
        prop_assume!(arr.rank() == 2);
        let m = om_from_vectors(&arr, 2).unwrap();
        let c = rank2_circle(&m).unwrap();
        let k = c.len();
        prop_assert_eq!(k, m.covectors().len() - 1);
        prop_assert_eq!(c.iter().collect::<BTreeSet<_>>().len(), k);
        prop_assert!(k % 2 == 0);
        for i in 0..k {
            let (a, b) = (c[i], c[(i + 1) % k]);
            if i % 2 == 0 {
                prop_assert!(a.le(&b) && a != b);
            } else {
                prop_assert!(b.le(&a) && a != b);
            }
        }
    }
}

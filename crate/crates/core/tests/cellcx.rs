use pontcalc::cellcx::*;
use pontcalc::linalg::q;
use pontcalc::{models, Q};
use proptest::prelude::*;

/// Random complex on `n` vertices from facets given as bit masks, with a
/// random flat sign system (a ±1 vertex function's coboundary).
fn complex(n: usize, masks: &[u32]) -> OrderedComplex {
    let facets: Vec<Simplex> = masks
        .iter()
        .map(|m| (0..n as u32).filter(|i| m >> i & 1 == 1).collect::<Vec<u32>>())
        .filter(|f| !f.is_empty())
        .collect();
    OrderedComplex::from_facets((0..n).map(|i| format!("v{i}")).collect(), &facets).unwrap()
}

fn system(cx: &OrderedComplex, flips: u32) -> LocalSystem {
    let neg = cx.simplices(1).iter().filter(|e| (flips >> e[0] & 1) != (flips >> e[1] & 1)).map(|e| (e[0], e[1]));
    LocalSystem::new(cx, neg).unwrap()
}

fn chain(cx: &OrderedComplex, d: usize, coeffs: &[i64]) -> Chain {
    let mut c = Chain::zero(d);
    for (s, v) in cx.simplices(d).iter().zip(coeffs.iter().cycle()) {
        c.add(s.clone(), q(*v));
    }
    c
}

fn cochain(cx: &OrderedComplex, d: usize, coeffs: &[i64]) -> Cochain {
    let mut c = Cochain::zero(d);
    for (s, v) in cx.simplices(d).iter().zip(coeffs.iter().cycle()) {
        c.set(s.clone(), q(*v));
    }
    c
}

fn arb_complex() -> impl Strategy<Value = (OrderedComplex, u32)> {
    (4usize..=7, prop::collection::vec(1u32..128, 1..6), any::<u32>()).prop_map(|(n, m, f)| {
        let masks: Vec<u32> = m.into_iter().map(|x| x & ((1 << n) - 1)).filter(|&x| x != 0 && x.count_ones() <= 5).collect();
        (complex(n, if masks.is_empty() { &[0b111] } else { &masks }), f)
    })
}

fn coeffs() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-4i64..=4, 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_squares_to_zero((cx, f) in arb_complex(), c in coeffs()) {
        let sys = system(&cx, f);
        for d in 2..=cx.dim() {
            let x = chain(&cx, d, &c);
            prop_assert!(boundary(&boundary(&x, &sys), &sys).is_zero());
        }
    }

    #[test]
    fn coboundary_squares_to_zero((cx, f) in arb_complex(), c in coeffs()) {
        let sys = system(&cx, f);
        for d in 0..cx.dim().saturating_sub(1) {
            let x = cochain(&cx, d, &c);
            prop_assert!(coboundary(&coboundary(&x, &cx, &sys), &cx, &sys).is_zero());
        }
    }

    #[test]
    fn coboundary_is_dual_to_boundary((cx, f) in arb_complex(), c in coeffs(), e in coeffs()) {
        let sys = system(&cx, f);
        for d in 1..=cx.dim() {
            let x = chain(&cx, d, &c);
            let psi = cochain(&cx, d - 1, &e);
            let lhs = pair(&boundary(&x, &sys), &psi);
            let rhs = pair(&x, &coboundary(&psi, &cx, &sys));
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn leibniz_rule((cx, f) in arb_complex(), c in coeffs(), e in coeffs()) {
        let sys = system(&cx, f);
        let triv = LocalSystem::trivial();
        for p in 0..cx.dim() {
            for qd in 0..cx.dim() - p {
                let a = cochain(&cx, p, &c);
                let b = cochain(&cx, qd, &e);
                let lhs = coboundary(&cup(&a, &b, &cx, &sys), &cx, &sys);
                let t1 = cup(&coboundary(&a, &cx, &triv), &b, &cx, &sys);
                let t2 = cup(&a, &coboundary(&b, &cx, &sys), &cx, &sys);
                let rhs = if p % 2 == 0 { t1.minus(&t2.scale(&q(-1))) } else { t1.minus(&t2) };
                prop_assert!(lhs.minus(&rhs).is_zero(), "p={} q={}", p, qd);
            }
        }
    }

    #[test]
    fn cap_boundary_formula((cx, f) in arb_complex(), g in any::<u32>(), c in coeffs(), e in coeffs()) {
        // ∂(x ⌢ ψ) = (−1)^k (∂x ⌢ ψ − x ⌢ δψ)
        let sc = system(&cx, f);
        let sp = system(&cx, g);
        let st = sc.tensor(&sp);
        for d in 1..=cx.dim() {
            for k in 0..d {
                let x = chain(&cx, d, &c);
                let psi = cochain(&cx, k, &e);
                let lhs = boundary(&cap(&x, &psi, &sc, &sp).unwrap(), &st);
                let a = cap(&boundary(&x, &sc), &psi, &sc, &sp).unwrap();
                let b = cap(&x, &coboundary(&psi, &cx, &sp), &sc, &sp).unwrap();
                let mut rhs = a.minus(&b);
                if k % 2 == 1 {
                    rhs = rhs.scale(&q(-1));
                }
                prop_assert_eq!(&lhs, &rhs, "d={} k={}", d, k);
            }
        }
    }

    #[test]
    fn pushforward_commutes_with_boundary((cx, f) in arb_complex(), fold in prop::collection::vec(0u32..4, 7), c in coeffs()) {
        // target: full simplex on 4 vertices with a random flat system
        let target = complex(4, &[0b1111]);
        let tsys = system(&target, f);
        let map = SimplicialMap { map: (0..cx.num_vertices()).map(|v| fold[v]).collect() };
        map.check(&cx, &target).unwrap();
        let ssys = tsys.pullback(&cx, &map);
        for d in 1..=cx.dim() {
            let x = chain(&cx, d, &c);
            let lhs = pushforward(&map, &boundary(&x, &ssys), &tsys);
            let rhs = boundary(&pushforward(&map, &x, &tsys), &tsys);
            prop_assert_eq!(lhs, rhs);
        }
    }
}

fn pair(c: &Chain, psi: &Cochain) -> Q {
    c.terms.iter().fold(q(0), |acc, (s, v)| acc + v * psi.get(s))
}

#[test]
fn rp2_twisted_top_homology() {
    let x = models::rp2();
    let (d, f) = fundamental_class(&x, 2).unwrap();
    assert!(!d.is_trivial());
    assert!(boundary(&f, &d).is_zero());
    assert_eq!(Homology::new(&x, &d).rank(2), 1);
    let triv = LocalSystem::trivial();
    let h = Homology::new(&x, &triv);
    assert_eq!(h.rank(2), 0);
    assert_eq!(h.rank(1), 0);
    assert_eq!(h.rank(0), 1);
    // Euler characteristic 1 in both systems
    let ht = Homology::new(&x, &d);
    assert_eq!(ht.rank(0) as i64 - ht.rank(1) as i64 + ht.rank(2) as i64, 1);
}

#[test]
fn torus_homology() {
    let t = models::torus(3, 3).unwrap();
    let triv = LocalSystem::trivial();
    let h = Homology::new(&t.complex, &triv);
    assert_eq!((h.rank(0), h.rank(1), h.rank(2)), (1, 2, 1));
    let (d, f) = fundamental_class(&t.complex, 2).unwrap();
    assert!(d.is_trivial());
    assert_eq!(f.terms.len(), 18);
    assert!(f.terms.values().all(|v| *v == q(1) || *v == q(-1)));
}

/// Grid position of each torus letter.
fn pos(l: &str) -> (i64, i64) {
    match l {
        "a" => (1, 2),
        "b" => (1, 0),
        "c" => (0, 2),
        "d" => (0, 1),
        "e" => (1, 1),
        "f" => (2, 2),
        "g" => (2, 0),
        "h" => (0, 0),
        _ => (2, 1),
    }
}

fn oriented_edge(c: &mut Chain, u: u32, v: u32) {
    if u < v {
        c.add(vec![u, v], q(1));
    } else {
        c.add(vec![v, u], q(-1));
    }
}

#[test]
fn torus_meridian_cap() {
    let t = models::torus(3, 3).unwrap();
    let x = &t.complex;
    let triv = LocalSystem::trivial();
    let label = |v: u32| x.labels[v as usize].as_str();
    // α counts crossings of the cut x = 2 | x = 0, in the +x direction
    let mut alpha = Cochain::zero(1);
    for e in x.simplices(1) {
        let (p, r) = (pos(label(e[0])), pos(label(e[1])));
        if p.0 == 2 && r.0 == 0 {
            alpha.set(e.clone(), q(1));
        } else if p.0 == 0 && r.0 == 2 {
            alpha.set(e.clone(), q(-1));
        }
    }
    assert!(coboundary(&alpha, x, &triv).is_zero());
    let (_, f) = fundamental_class(x, 2).unwrap();
    let c = cap(&f, &alpha, &triv, &triv).unwrap();
    assert!(boundary(&c, &triv).is_zero());
    let h = Homology::new(x, &triv);
    assert!(h.is_boundary(&c).is_none());
    // the loop x = 0 in the +y direction: h → d → c → h
    let idx = |l: &str| x.labels.iter().position(|s| s == l).unwrap() as u32;
    let mut lp = Chain::zero(1);
    for (u, v) in [("h", "d"), ("d", "c"), ("c", "h")] {
        oriented_edge(&mut lp, idx(u), idx(v));
    }
    let plus = h.homologous(&c, &lp).is_some();
    let minus = h.homologous(&c, &lp.scale(&q(-1))).is_some();
    assert!(plus ^ minus);
    // evaluating α on the loop that crosses the cut gives ±1
    let mut m = Chain::zero(1);
    for (u, v) in [("h", "b"), ("b", "g"), ("g", "h")] {
        oriented_edge(&mut m, idx(u), idx(v));
    }
    assert_eq!(pair(&m, &alpha), q(1));
}

#[test]
fn coboundary_witness_solves() {
    let t = models::torus(3, 3).unwrap();
    let triv = LocalSystem::trivial();
    let psi = cochain(&t.complex, 1, &[1, -2, 3, 0, 5]);
    let d = coboundary(&psi, &t.complex, &triv);
    let w = coboundary_witness(&d, &t.complex, &triv).unwrap();
    assert_eq!(coboundary(&w, &t.complex, &triv), d);
    // a generator of H² is not a coboundary
    let mut top = Cochain::zero(2);
    top.set(t.complex.simplices(2)[0].clone(), q(1));
    assert!(coboundary_witness(&top, &t.complex, &triv).is_none());
}

#[test]
fn pseudomanifold_check_rejects_branching() {
    let x = complex(5, &[0b00111, 0b01011, 0b10011]);
    assert!(fundamental_class(&x, 2).is_err());
}

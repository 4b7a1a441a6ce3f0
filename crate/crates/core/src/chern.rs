//! The twisted Chern 2-cocycle Ω on Cx Y: fiber orientations, the uniform
//! fiber cocycle Θ, its least-norm extension over every edge of Cx Y, and
//! `Ω = −δΘ` evaluated on lifts of triangles.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assoc::AssocPoset;
use crate::cellcx::{coboundary_at, Chain, Cochain, Homology, LocalSystem, OrderedComplex};
use crate::linalg::{rref, Echelon, SparseRow};
use crate::{Error, Result, Q};

/// Shape of the cylinder over one edge `y1 < y2` of Cx Y: fiber sizes and the
/// comparable pairs `(a, c)` of circle positions with `z2[c] ≥ z1[a]|`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeShape {
    pub n1: u16,
    pub n2: u16,
    pub pairs: Vec<(u16, u16)>,
}

pub fn edge_shape(ap: &AssocPoset, y1: u32, y2: u32) -> EdgeShape {
    let f1 = &ap.fibers[y1 as usize];
    let f2 = &ap.fibers[y2 as usize];
    let star = ap.y[y2 as usize].star;
    let mut pairs = vec![];
    for (a, &za) in f1.iter().enumerate() {
        let r = ap.z[za as usize].z.restrict(star);
        for (c, &zc) in f2.iter().enumerate() {
            if r.le(&ap.z[zc as usize].z) {
                pairs.push((a as u16, c as u16));
            }
        }
    }
    EdgeShape { n1: f1.len() as u16, n2: f2.len() as u16, pairs }
}

/// Uniform fiber cocycle on an `n`-cell circle in standard orientation:
/// value on the order-complex edge `[cocircuit p, tope t]` (circle positions).
pub fn theta_std(n: usize, p: usize, t: usize) -> Q {
    let m = Q::new(1.into(), (n as i64).into());
    if t == p + 1 {
        m
    } else if (t + 1) % n == p {
        -m
    } else {
        Q::zero()
    }
}

/// Θ on every order-complex edge of one fiber, `orientation = ±1` relative to
/// the normalized chirotope.
pub fn theta_vertex(n: usize, orientation: i8) -> Vec<((usize, usize), Q)> {
    let mut out = vec![];
    for p in (0..n).step_by(2) {
        for t in [(p + 1) % n, (p + n - 1) % n] {
            let v = theta_std(n, p, t);
            out.push(((p, t), if orientation < 0 { -v } else { v }));
        }
    }
    out
}

/// Fiber edges `(cocircuit, tope)` of an `n`-cell circle.
fn fiber_edges(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).step_by(2).flat_map(move |p| [(p, (p + 1) % n), (p, (p + n - 1) % n)])
}

/// Cylinder order complex of an edge shape, vertices ordered: fiber 1
/// cocircuits, fiber 1 topes, fiber 2 cocircuits, fiber 2 topes.
fn cylinder(shape: &EdgeShape) -> (OrderedComplex, Vec<u32>, Vec<u32>) {
    let (n1, n2) = (shape.n1 as usize, shape.n2 as usize);
    let order = |n: usize, base: usize| -> Vec<u32> {
        // position -> vertex index
        let mut idx = vec![0u32; n];
        for p in 0..n {
            idx[p] = (base + if p % 2 == 0 { p / 2 } else { n / 2 + p / 2 }) as u32;
        }
        idx
    };
    let i1 = order(n1, 0);
    let i2 = order(n2, n1);
    let mut up = vec![vec![]; n1 + n2];
    for (p, t) in fiber_edges(n1) {
        up[i1[p] as usize].push(i1[t]);
    }
    for (p, t) in fiber_edges(n2) {
        up[i2[p] as usize].push(i2[t]);
    }
    for &(a, c) in &shape.pairs {
        up[i1[a as usize] as usize].push(i2[c as usize]);
    }
    for u in up.iter_mut() {
        u.sort();
        u.dedup();
    }
    let labels = (0..n1 + n2).map(|i| i.to_string()).collect();
    (OrderedComplex::order_complex(labels, &up, 2), i1, i2)
}

fn fiber_cycle(n: usize, idx: &[u32]) -> Chain {
    let mut c = Chain::zero(1);
    for ((p, t), v) in theta_vertex(n, 1) {
        let sign = if v > Q::zero() { Q::one() } else { -Q::one() };
        let (a, b) = (idx[p], idx[t]);
        c.add(vec![a.min(b), a.max(b)], if a < b { sign } else { -sign });
    }
    c
}

/// Compares the standard orientations of the two fibers of an edge through
/// the homology of the cylinder over it.
pub fn orientation_sign(shape: &EdgeShape) -> Result<i8> {
    let (cx, i1, i2) = cylinder(shape);
    let g1 = fiber_cycle(shape.n1 as usize, &i1);
    let g2 = fiber_cycle(shape.n2 as usize, &i2);
    let triv = LocalSystem::trivial();
    let h = Homology::new(&cx, &triv);
    if h.is_boundary(&g2.minus(&g1)).is_some() {
        Ok(1)
    } else if h.is_boundary(&g2.plus(&g1)).is_some() {
        Ok(-1)
    } else {
        Err(Error::Structure("fiber circles over an edge are not homologous".into()))
    }
}

/// Per-Y orientation (relative to the normalized chirotope) and the induced
/// local system on Cx Y.
#[derive(Clone, Debug)]
pub struct FiberOrientation {
    pub o: Vec<i8>,
    /// Standard comparison sign per edge of Cx Y.
    pub std_sign: HashMap<(u32, u32), i8>,
    pub sys: LocalSystem,
}

impl FiberOrientation {
    pub fn sign(&self, y1: u32, y2: u32) -> i8 {
        self.sys.sign(y1, y2)
    }

    /// The same comparisons with a different choice per vertex.
    pub fn rechoose(&self, cy: &OrderedComplex, o: Vec<i8>) -> Result<FiberOrientation> {
        let neg = self.std_sign.iter().filter(|(&(a, b), &s)| s * o[a as usize] * o[b as usize] < 0).map(|(&e, _)| e);
        let sys = LocalSystem::new(cy, neg.collect::<Vec<_>>())?;
        Ok(FiberOrientation { o, std_sign: self.std_sign.clone(), sys })
    }
}

/// Shapes of every edge of `cy`, deduplicated.
pub struct EdgeShapes {
    pub edges: Vec<(u32, u32)>,
    pub shape_of: Vec<u32>,
    pub shapes: Vec<Arc<EdgeShape>>,
}

pub fn collect_shapes(ap: &AssocPoset, cy: &OrderedComplex) -> EdgeShapes {
    let edges: Vec<(u32, u32)> = cy.simplices(1).iter().map(|e| (e[0], e[1])).collect();
    let raw: Vec<EdgeShape> = edges.par_iter().map(|&(a, b)| edge_shape(ap, a, b)).collect();
    let mut ids: BTreeMap<EdgeShape, u32> = BTreeMap::new();
    let mut shape_of = Vec::with_capacity(raw.len());
    for s in &raw {
        let n = ids.len() as u32;
        shape_of.push(*ids.entry(s.clone()).or_insert(n));
    }
    let mut shapes = vec![None; ids.len()];
    for (s, i) in ids {
        shapes[i as usize] = Some(Arc::new(s));
    }
    EdgeShapes { edges, shape_of, shapes: shapes.into_iter().map(|s| s.unwrap()).collect() }
}

/// Deterministic orientation: every fiber in its normalized-chirotope
/// orientation; edge signs from cylinder homology; cocycle condition
/// verified on every triangle of `cy`.
pub fn orient_fibers(ap: &AssocPoset, cy: &OrderedComplex, shapes: &EdgeShapes) -> Result<FiberOrientation> {
    let signs: Vec<Result<i8>> = shapes.shapes.par_iter().map(|s| orientation_sign(s)).collect();
    let signs: Vec<i8> = signs.into_iter().collect::<Result<_>>()?;
    let mut std_sign = HashMap::with_capacity(shapes.edges.len());
    let mut neg = vec![];
    for (k, &e) in shapes.edges.iter().enumerate() {
        let s = signs[shapes.shape_of[k] as usize];
        std_sign.insert(e, s);
        if s < 0 {
            neg.push(e);
        }
    }
    let sys = LocalSystem::new(cy, neg)?;
    Ok(FiberOrientation { o: vec![1; ap.y.len()], std_sign, sys })
}

/// Difference constraints `x_u − x_w = d` of one edge problem.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeProblem {
    pub shape: Arc<EdgeShape>,
    /// Orientation of fiber 1 and `s · o2`, both relative to the standard.
    pub o1: i8,
    pub so2: i8,
}

impl EdgeProblem {
    pub fn constraints(&self) -> Vec<(usize, usize, Q)> {
        let sh = &self.shape;
        let (n1, n2) = (sh.n1 as usize, sh.n2 as usize);
        let index: HashMap<(u16, u16), usize> = sh.pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut out = vec![];
        // [(y1,v),(y1,e),(y2,c)]: x_vc − x_ec = Θ1[v,e]
        for (v, e) in fiber_edges(n1) {
            let th = theta_std(n1, v, e) * Q::from_integer(self.o1.into());
            for c in 0..n2 as u16 {
                if let (Some(&u), Some(&w)) = (index.get(&(v as u16, c)), index.get(&(e as u16, c))) {
                    out.push((u, w, th.clone()));
                }
            }
        }
        // [(y1,a),(y2,v),(y2,e)]: x_ae − x_av = s Θ2[v,e]
        for (v, e) in fiber_edges(n2) {
            let th = theta_std(n2, v, e) * Q::from_integer(self.so2.into());
            for a in 0..n1 as u16 {
                if let (Some(&u), Some(&w)) = (index.get(&(a, e as u16)), index.get(&(a, v as u16))) {
                    out.push((u, w, th.clone()));
                }
            }
        }
        out
    }
}

/// Least-norm solution by potentials: propagate differences through each
/// connected component, then shift every component to zero mean.
pub fn theta_edge(p: &EdgeProblem) -> Result<Vec<Q>> {
    let n = p.shape.pairs.len();
    let cons = p.constraints();
    let mut adj: Vec<Vec<(usize, Q)>> = vec![vec![]; n];
    for (u, w, d) in &cons {
        adj[*w].push((*u, d.clone()));
        adj[*u].push((*w, -d.clone()));
    }
    let mut x: Vec<Option<Q>> = vec![None; n];
    for root in 0..n {
        if x[root].is_some() {
            continue;
        }
        x[root] = Some(Q::zero());
        let mut comp = vec![root];
        let mut queue = VecDeque::from([root]);
        while let Some(w) = queue.pop_front() {
            let xw = x[w].clone().unwrap();
            for (u, d) in &adj[w] {
                let want = &xw + d;
                match &x[*u] {
                    Some(xu) if *xu != want => return Err(Error::Structure("edge constraints for Θ are infeasible".into())),
                    Some(_) => {}
                    None => {
                        x[*u] = Some(want);
                        comp.push(*u);
                        queue.push_back(*u);
                    }
                }
            }
        }
        let mean = comp.iter().fold(Q::zero(), |a, &i| a + x[i].as_ref().unwrap()) / Q::from_integer((comp.len() as i64).into());
        for &i in &comp {
            let v = x[i].take().unwrap() - &mean;
            x[i] = Some(v);
        }
    }
    Ok(x.into_iter().map(|v| v.unwrap()).collect())
}

/// Independent least-norm oracle: generic sparse elimination for a
/// particular solution and a null-space basis, then the normal equations of
/// the projection onto the null space.
pub fn theta_edge_oracle(p: &EdgeProblem) -> Result<Vec<Q>> {
    let n = p.shape.pairs.len();
    let mut ech = Echelon::new();
    for (u, w, d) in p.constraints() {
        let mut row: SparseRow = vec![(u, Q::one()), (w, -Q::one())];
        row.sort_by_key(|e| e.0);
        row.push((n, -d));
        ech.insert(row);
    }
    let xp_map = ech.back_substitute(n).ok_or_else(|| Error::Structure("oracle: infeasible".into()))?;
    let xp: Vec<Q> = (0..n).map(|i| xp_map.get(&i).cloned().unwrap_or_else(Q::zero)).collect();
    let lead: std::collections::BTreeSet<usize> = ech.leading_columns().copied().collect();
    let free: Vec<usize> = (0..n).filter(|c| !lead.contains(c)).collect();
    let basis: Vec<Vec<Q>> = free
        .iter()
        .map(|&f| {
            let m = ech.solve_with_free(None, &BTreeMap::from([(f, Q::one())]));
            (0..n).map(|i| m.get(&i).cloned().unwrap_or_else(Q::zero)).collect()
        })
        .collect();
    let k = basis.len();
    if k == 0 {
        return Ok(xp);
    }
    // (NᵀN) c = Nᵀ x_p
    let mut aug: Vec<Vec<Q>> = (0..k)
        .map(|i| {
            let mut row: Vec<Q> = (0..k).map(|j| crate::linalg::dot(&basis[i], &basis[j])).collect();
            row.push(crate::linalg::dot(&basis[i], &xp));
            row
        })
        .collect();
    let piv = rref(&mut aug);
    if piv.len() != k {
        return Err(Error::Structure("oracle: singular Gram matrix".into()));
    }
    let c: Vec<Q> = (0..k).map(|i| aug[i][k].clone()).collect();
    Ok((0..n).map(|i| (0..k).fold(xp[i].clone(), |acc, j| acc - &c[j] * &basis[j][i])).collect())
}

/// Θ extended over every edge of Cx Y.
pub struct ThetaField {
    pub problems: Vec<EdgeProblem>,
    pub solutions: Vec<Arc<Vec<Q>>>,
    /// Problem index per edge of Cx Y.
    pub problem_of: HashMap<(u32, u32), u32>,
}

impl ThetaField {
    /// Value of Θ on the cross edge `[(y1, a), (y2, c)]`, in the orientation of `y1`.
    pub fn cross(&self, y1: u32, a: u16, y2: u32, c: u16) -> Option<Q> {
        let k = *self.problem_of.get(&(y1, y2))? as usize;
        let i = self.problems[k].shape.pairs.binary_search(&(a, c)).ok()?;
        Some(self.solutions[k][i].clone())
    }
}

pub fn solve_theta(shapes: &EdgeShapes, orient: &FiberOrientation) -> Result<ThetaField> {
    let mut ids: BTreeMap<EdgeProblem, u32> = BTreeMap::new();
    let mut of = HashMap::with_capacity(shapes.edges.len());
    for (k, &(a, b)) in shapes.edges.iter().enumerate() {
        let p = EdgeProblem {
            shape: shapes.shapes[shapes.shape_of[k] as usize].clone(),
            o1: orient.o[a as usize],
            so2: orient.sign(a, b) * orient.o[b as usize],
        };
        let n = ids.len() as u32;
        of.insert((a, b), *ids.entry(p).or_insert(n));
    }
    let mut problems = vec![None; ids.len()];
    for (p, i) in ids {
        problems[i as usize] = Some(p);
    }
    let problems: Vec<EdgeProblem> = problems.into_iter().map(|p| p.unwrap()).collect();
    let sols: Vec<Result<Vec<Q>>> = problems.par_iter().map(theta_edge).collect();
    let solutions = sols.into_iter().map(|s| s.map(Arc::new)).collect::<Result<_>>()?;
    Ok(ThetaField { problems, solutions, problem_of: of })
}

/// Checks every distinct edge problem against the dense oracle; returns the
/// number of problems compared.
pub fn check_theta_oracle(field: &ThetaField) -> Result<usize> {
    let bad: Vec<bool> = field
        .problems
        .par_iter()
        .zip(field.solutions.par_iter())
        .map(|(p, s)| theta_edge_oracle(p).map(|o| o != **s).unwrap_or(true))
        .collect();
    if let Some(i) = bad.iter().position(|&b| b) {
        return Err(Error::Structure(format!("theta solution {i} disagrees with the oracle")));
    }
    Ok(bad.len())
}

/// A lift `z0 < z1 < z2` of the triangle `[y0, y1, y2]` as circle positions,
/// starting from position `start` over `y0`.
pub fn lift(field: &ThetaField, tri: &[u32], start: u16) -> Option<[u16; 3]> {
    let p01 = &field.problems[*field.problem_of.get(&(tri[0], tri[1]))? as usize].shape;
    let p12 = &field.problems[*field.problem_of.get(&(tri[1], tri[2]))? as usize].shape;
    for &(a, c) in &p01.pairs {
        if a != start {
            continue;
        }
        if let Some(&(_, d)) = p12.pairs.iter().find(|(b, _)| *b == c) {
            return Some([a, c, d]);
        }
    }
    None
}

/// `−δΘ` on one lift.
pub fn omega_on_lift(field: &ThetaField, orient: &FiberOrientation, tri: &[u32], z: [u16; 3]) -> Option<Q> {
    let x01 = field.cross(tri[0], z[0], tri[1], z[1])?;
    let x02 = field.cross(tri[0], z[0], tri[2], z[2])?;
    let x12 = field.cross(tri[1], z[1], tri[2], z[2])?;
    let s = orient.sign(tri[0], tri[1]);
    let t12 = if s < 0 { -x12 } else { x12 };
    Some(-(t12 - x02 + x01))
}

/// Ω on every triangle of `cy`, twisted by the fiber orientation system.
pub fn omega(cy: &OrderedComplex, field: &ThetaField, orient: &FiberOrientation) -> Result<Cochain> {
    let vals: Vec<Result<(Vec<u32>, Q)>> = cy
        .simplices(2)
        .par_iter()
        .map(|t| {
            let z = lift(field, t, 0).ok_or_else(|| Error::Presheaf(format!("triangle {t:?} has no lift")))?;
            let v = omega_on_lift(field, orient, t, z).ok_or_else(|| Error::Presheaf(format!("missing Θ on {t:?}")))?;
            Ok((t.clone(), v))
        })
        .collect();
    let mut om = Cochain::zero(2);
    for r in vals {
        let (t, v) = r?;
        om.set(t, v);
    }
    Ok(om)
}

/// Triangles whose Ω value depends on the lift (checked from every starting
/// position over `y0`).
pub fn lift_dependence(cy: &OrderedComplex, field: &ThetaField, orient: &FiberOrientation, om: &Cochain) -> Vec<Vec<u32>> {
    cy.simplices(2)
        .par_iter()
        .filter(|t| {
            let k = field.problem_of[&(t[0], t[1])] as usize;
            let n1 = field.problems[k].shape.n1;
            let v = om.get(t);
            (0..n1).any(|s| lift(field, t, s).and_then(|z| omega_on_lift(field, orient, t, z)).is_some_and(|w| w != v))
        })
        .cloned()
        .collect()
}

/// 3-simplices of `cy` where the twisted coboundary of Ω is nonzero.
pub fn delta_omega_failures(cy: &OrderedComplex, om: &Cochain, sys: &LocalSystem) -> Vec<Vec<u32>> {
    cy.simplices(3).par_iter().filter(|s| !coboundary_at(om, s, sys).is_zero()).cloned().collect()
}

/// Full Chern stage.
pub struct ChernData {
    pub shapes: EdgeShapes,
    pub orient: FiberOrientation,
    pub theta: ThetaField,
    pub omega: Cochain,
}

pub fn chern(ap: &AssocPoset, cy: &OrderedComplex) -> Result<ChernData> {
    let shapes = collect_shapes(ap, cy);
    let orient = orient_fibers(ap, cy, &shapes)?;
    let theta = solve_theta(&shapes, &orient)?;
    let om = omega(cy, &theta, &orient)?;
    Ok(ChernData { shapes, orient, theta, omega: om })
}

/// Ω for a seeded random re-choice of fiber orientations, transported back to
/// the deterministic orientation system (multiplying by `o(y0)`).
pub fn omega_rechosen(cy: &OrderedComplex, data: &ChernData, seed: u64) -> Result<(Vec<i8>, Cochain)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o: Vec<i8> = (0..data.orient.o.len()).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
    let orient2 = data.orient.rechoose(cy, o.clone())?;
    let theta2 = solve_theta(&data.shapes, &orient2)?;
    let om2 = omega(cy, &theta2, &orient2)?;
    let mut back = Cochain::zero(2);
    for (s, v) in &om2.values {
        back.set(s.clone(), if o[s[0] as usize] < 0 { -v.clone() } else { v.clone() });
    }
    Ok((o, back))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::Signed;

    #[test]
    fn fiber_values() {
        let t = theta_vertex(12, 1);
        assert_eq!(t.len(), 12);
        assert!(t.iter().all(|(_, v)| v.abs() == Q::new(1.into(), 12.into())));
        let total = t.iter().fold(Q::zero(), |a, ((p, tp), v)| if *tp == p + 1 { a + v } else { a - v });
        assert_eq!(total, Q::one());
        assert!(theta_vertex(4, 1).iter().all(|(_, v)| v.abs() == Q::new(1.into(), 4.into())));
        let neg = theta_vertex(12, -1);
        assert!(t.iter().zip(&neg).all(|(a, b)| a.1 == -b.1.clone()));
    }

    fn fiber_value(a: u16, c: u16) -> Q {
        let (p, t) = if a % 2 == 0 { (a, c) } else { (c, a) };
        theta_std(4, p as usize, t as usize)
    }

    #[test]
    fn identical_fibers_extend_constantly() {
        // the cylinder over an identity edge of a 4-cell circle
        let pairs = vec![(0, 0), (0, 1), (0, 3), (1, 1), (2, 1), (2, 2), (2, 3), (3, 3)];
        let shape = Arc::new(EdgeShape { n1: 4, n2: 4, pairs });
        assert_eq!(orientation_sign(&shape).unwrap(), 1);
        let p = EdgeProblem { shape, o1: 1, so2: 1 };
        let x = theta_edge(&p).unwrap();
        assert_eq!(x, theta_edge_oracle(&p).unwrap());
        // vertical edges carry 0, the others the fiber value of the same edge
        for (i, &(a, c)) in p.shape.pairs.iter().enumerate() {
            let want = if a == c { Q::zero() } else { fiber_value(a, c) };
            assert_eq!(x[i], want);
        }
    }
}

//! The associated posets `Z → Y → X`: tuples `(Δ, t, y)` and `(Δ, t, y, z)`
//! of a chart, one of its rank-2 strong-map images and a nonzero covector,
//! restricted to what the charts of a CD manifold generate.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;

use crate::cellcx::{OrderedComplex, Simplex};
use crate::charts::{CDManifold, FlatteningAtlas};
use crate::linalg::q;
use crate::om::{rank2_circle, rank2_quotients_of_rank3, rank2_quotients_sampled, weak_map_covs, OrientedMatroid, SignVector, VectorArrangement};
use crate::{Error, Result, Q};

#[derive(Clone, Debug)]
pub struct YElem {
    pub delta: Simplex,
    /// Vertices of the closed star of `delta`.
    pub star: u64,
    pub t: Arc<OrientedMatroid>,
    pub y: OrientedMatroid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZElem {
    pub y: u32,
    pub z: SignVector,
}

/// `e1 ≤ e2`: `Δ1 ⊆ Δ2`, `t2 ⇝ t1|`, `y2 ⇝ y1|` with restriction to the
/// closed star of `Δ2`.
pub fn y_order(e1: &YElem, e2: &YElem) -> bool {
    if !e1.delta.iter().all(|v| e2.delta.contains(v)) {
        return false;
    }
    let m = e2.star;
    let t1: Vec<SignVector> = restricted(e1.t.covectors(), m);
    let y1: Vec<SignVector> = restricted(e1.y.covectors(), m);
    weak_map_covs(e2.t.covectors(), &t1) && weak_map_covs(e2.y.covectors(), &y1)
}

/// Z order: the Y order plus `z2 ≥ z1|`.
pub fn assoc_order(e1: &YElem, z1: SignVector, e2: &YElem, z2: SignVector) -> bool {
    y_order(e1, e2) && z1.restrict(e2.star).le(&z2)
}

fn restricted(covs: &[SignVector], mask: u64) -> Vec<SignVector> {
    let mut v: Vec<SignVector> = covs.iter().map(|c| c.restrict(mask)).collect();
    v.sort();
    v.dedup();
    v
}

/// Finite posets Y and Z with `ρ: Z → Y` (index `z.y`) and `π: Y → X`
/// (field `delta`). Y is indexed by a linear extension of its order.
#[derive(Clone, Debug)]
pub struct AssocPoset {
    pub y: Vec<YElem>,
    /// `y_up[i]`: every `j` with `i < j`, increasing.
    pub y_up: Vec<Vec<u32>>,
    pub z: Vec<ZElem>,
    /// `fibers[i]`: Z indices over `y[i]` in rank-2 circle order.
    pub fibers: Vec<Vec<u32>>,
    pub exhaustive: bool,
}

impl AssocPoset {
    /// Orders the given elements (after deduplication) and attaches their
    /// fiber circles.
    pub fn from_elements(mut elems: Vec<YElem>, exhaustive: bool) -> Result<AssocPoset> {
        for e in &elems {
            if e.y.rank != 2 {
                return Err(Error::Rank { expected: 2, found: e.y.rank });
            }
        }
        elems.sort_by(|a, b| (&a.delta, a.t.covectors(), a.y.covectors()).cmp(&(&b.delta, b.t.covectors(), b.y.covectors())));
        elems.dedup_by(|a, b| a.delta == b.delta && a.t == b.t && a.y == b.y);
        let n = elems.len();
        // candidate pairs: Δ1 ⊆ Δ2
        let mut by_delta: BTreeMap<&Simplex, Vec<usize>> = BTreeMap::new();
        for (i, e) in elems.iter().enumerate() {
            by_delta.entry(&e.delta).or_default().push(i);
        }
        let deltas: Vec<&Simplex> = by_delta.keys().copied().collect();
        let up: Vec<Vec<usize>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let e1 = &elems[i];
                let mut out = vec![];
                for d2 in &deltas {
                    if !e1.delta.iter().all(|v| d2.contains(v)) {
                        continue;
                    }
                    let star = elems[by_delta[d2][0]].star;
                    let t1 = restricted(e1.t.covectors(), star);
                    let y1 = restricted(e1.y.covectors(), star);
                    for &j in &by_delta[d2] {
                        let e2 = &elems[j];
                        if j != i && weak_map_covs(e2.t.covectors(), &t1) && weak_map_covs(e2.y.covectors(), &y1) {
                            out.push(j);
                        }
                    }
                }
                out
            })
            .collect();
        // linear extension by Kahn's algorithm, smallest index first
        let mut indeg = vec![0usize; n];
        for u in &up {
            for &j in u {
                indeg[j] += 1;
            }
        }
        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &j in &up[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.insert(j);
                }
            }
        }
        if order.len() != n {
            return Err(Error::Structure("Y order has a cycle".into()));
        }
        let mut pos = vec![0u32; n];
        for (k, &i) in order.iter().enumerate() {
            pos[i] = k as u32;
        }
        let mut y_up = vec![vec![]; n];
        for (i, u) in up.iter().enumerate() {
            let mut v: Vec<u32> = u.iter().map(|&j| pos[j]).collect();
            v.sort();
            y_up[pos[i] as usize] = v;
        }
        let mut slots: Vec<Option<YElem>> = elems.into_iter().map(Some).collect();
        let y: Vec<YElem> = order.iter().map(|&i| slots[i].take().unwrap()).collect();
        let mut z = vec![];
        let mut fibers = Vec::with_capacity(n);
        for (i, e) in y.iter().enumerate() {
            let circle = rank2_circle(&e.y)?;
            let mut f = Vec::with_capacity(circle.len());
            for c in circle {
                f.push(z.len() as u32);
                z.push(ZElem { y: i as u32, z: c });
            }
            fibers.push(f);
        }
        Ok(AssocPoset { y, y_up, z, fibers, exhaustive })
    }

    pub fn y_le(&self, i: u32, j: u32) -> bool {
        i == j || self.y_up[i as usize].binary_search(&j).is_ok()
    }

    /// `(y_a, z_a) ≤ (y_b, z_b)` for Z indices.
    pub fn z_le(&self, a: u32, b: u32) -> bool {
        let (za, zb) = (&self.z[a as usize], &self.z[b as usize]);
        self.y_le(za.y, zb.y) && za.z.restrict(self.y[zb.y as usize].star).le(&zb.z)
    }

    /// Order complex of Y, dimension capped at `max_dim`.
    pub fn y_complex(&self, max_dim: usize) -> OrderedComplex {
        let labels = (0..self.y.len()).map(|i| format!("y{i}")).collect();
        OrderedComplex::order_complex(labels, &self.y_up, max_dim)
    }

    /// Order complex of the face poset of X, with the simplicial map
    /// `π: Cx Y → Cx X` and the index of each face.
    pub fn x_face_complex(x: &OrderedComplex) -> (OrderedComplex, HashMap<Simplex, u32>) {
        let mut faces: Vec<Simplex> = vec![];
        for d in 0..=x.dim() {
            faces.extend(x.simplices(d).iter().cloned());
        }
        let index: HashMap<Simplex, u32> = faces.iter().enumerate().map(|(i, f)| (f.clone(), i as u32)).collect();
        let up: Vec<Vec<u32>> = faces
            .iter()
            .map(|f| {
                faces
                    .iter()
                    .enumerate()
                    .filter(|(_, g)| g.len() > f.len() && f.iter().all(|v| g.contains(v)))
                    .map(|(j, _)| j as u32)
                    .collect()
            })
            .collect();
        let labels = faces.iter().map(|f| f.iter().map(|&v| x.labels[v as usize].as_str()).collect::<Vec<_>>().join("")).collect();
        (OrderedComplex::order_complex(labels, &up, x.dim()), index)
    }

    pub fn pi_map(&self, face_index: &HashMap<Simplex, u32>) -> crate::cellcx::SimplicialMap {
        crate::cellcx::SimplicialMap { map: self.y.iter().map(|e| face_index[&e.delta]).collect() }
    }

    pub fn fiber_circle(&self, i: u32) -> Result<Vec<SignVector>> {
        let c = rank2_circle(&self.y[i as usize].y)?;
        let f: Vec<SignVector> = self.fibers[i as usize].iter().map(|&k| self.z[k as usize].z).collect();
        if c != f {
            return Err(Error::Structure(format!("fiber over y{i} does not match its circle")));
        }
        Ok(c)
    }
}

/// Rank-2 strong-map images of a chart from its realization: the chart
/// itself in rank 2, exhaustive projections in rank 3, sampled 2-planes
/// otherwise (flagged by the returned boolean).
pub fn quotients(t: &OrientedMatroid, arr: &VectorArrangement) -> Result<(Vec<OrientedMatroid>, bool)> {
    match t.rank {
        2 => Ok((vec![t.clone()], true)),
        3 => Ok((rank2_quotients_of_rank3(arr)?, true)),
        r if r > 3 => Ok((rank2_quotients_sampled(arr, &sample_planes(r)), false)),
        r => Err(Error::Rank { expected: 2, found: r }),
    }
}

/// All coordinate-pair planes plus a small deterministic grid of planes.
pub fn sample_planes(r: usize) -> Vec<(Vec<Q>, Vec<Q>)> {
    let unit = |i: usize| (0..r).map(|k| q((k == i) as i64)).collect::<Vec<Q>>();
    let mut out = vec![];
    for i in 0..r {
        for j in i + 1..r {
            out.push((unit(i), unit(j)));
        }
    }
    for s in 1..=3i64 {
        let w1: Vec<Q> = (0..r).map(|k| q(1 + (k as i64 * s) % 5)).collect();
        let w2: Vec<Q> = (0..r).map(|k| q(((k as i64 + 2) * (s + 1)) % 7 - 3)).collect();
        out.push((w1, w2));
    }
    out
}

/// Y generated by every cell chart of `cd` and its rank-2 images.
pub fn build_restricted_yz(cd: &CDManifold) -> Result<AssocPoset> {
    let atlas: &FlatteningAtlas = &cd.atlas;
    let parts: Vec<Result<(Vec<YElem>, bool)>> = cd
        .cells
        .par_iter()
        .map(|c| {
            let t = Arc::new(c.chart.clone());
            let (qs, exh) = quotients(&t, &c.arrangement)?;
            let star = atlas.star_mask(&c.carrier);
            Ok((qs.into_iter().map(|y| YElem { delta: c.carrier.clone(), star, t: t.clone(), y }).collect(), exh))
        })
        .collect();
    let mut elems = vec![];
    let mut exhaustive = true;
    for p in parts {
        let (e, x) = p?;
        exhaustive &= x;
        elems.extend(e);
    }
    AssocPoset::from_elements(elems, exhaustive)
}

/// Order complex of a subposet of one fiber circle, as `(V, E)` counts and
/// connectivity.
fn is_tree(ap: &AssocPoset, set: &[u32]) -> bool {
    if set.is_empty() {
        return false;
    }
    let v = set.len();
    let mut parent: Vec<usize> = (0..v).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let mut e = 0;
    for a in 0..v {
        for b in 0..v {
            if a != b && ap.z[set[a] as usize].z.le(&ap.z[set[b] as usize].z) {
                e += 1;
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let root = find(&mut parent, 0);
    v == e + 1 && (0..v).all(|i| find(&mut parent, i) == root)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuasifibViolation {
    pub z: u32,
    pub y: u32,
    pub upward: bool,
}

/// Contractibility of every up-set `{z' over y' : z' ≥ z}` (for `ρ(z) ≤ y'`)
/// and down-set `{z' over y' : z' ≤ z}` (for `y' ≤ ρ(z)`) in its fiber
/// circle; returns the first violation.
pub fn quasifib_check(ap: &AssocPoset) -> std::result::Result<(), QuasifibViolation> {
    let mut down: Vec<Vec<u32>> = vec![vec![]; ap.y.len()];
    for (i, u) in ap.y_up.iter().enumerate() {
        for &j in u {
            down[j as usize].push(i as u32);
        }
    }
    let res: Vec<Option<QuasifibViolation>> = (0..ap.z.len() as u32)
        .into_par_iter()
        .map(|zi| {
            let yi = ap.z[zi as usize].y;
            let up = std::iter::once(yi).chain(ap.y_up[yi as usize].iter().copied()).map(|y| (y, true));
            let dn = down[yi as usize].iter().map(|&y| (y, false));
            for (y2, upward) in up.chain(dn) {
                let set: Vec<u32> = ap.fibers[y2 as usize]
                    .iter()
                    .copied()
                    .filter(|&w| if upward { ap.z_le(zi, w) } else { ap.z_le(w, zi) })
                    .collect();
                if !is_tree(ap, &set) {
                    return Some(QuasifibViolation { z: zi, y: y2, upward });
                }
            }
            None
        })
        .collect();
    match res.into_iter().flatten().next() {
        Some(v) => Err(v),
        None => Ok(()),
    }
}

/// Every ρ-fiber is the face poset of an even polygon: alternating ranks.
pub fn fibers_are_polygons(ap: &AssocPoset) -> bool {
    ap.fibers.iter().enumerate().all(|(i, f)| {
        let m = &ap.y[i].y;
        let cocs = m.cocircuits();
        f.len() % 4 == 0
            && f.len() >= 4
            && f.iter().enumerate().all(|(k, &zi)| {
                let z = ap.z[zi as usize].z;
                (k % 2 == 0) == cocs.contains(&z)
            })
    })
}

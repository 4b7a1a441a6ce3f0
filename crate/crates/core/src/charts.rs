//! Flattenings of simplicial stars, affine and linear oriented-matroid charts,
//! the chart axioms, and assembly of a CD-manifold structure on flat models.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cellcx::{OrderedComplex, Simplex};
use crate::om::{om_from_vectors, weak_map, Ground, OrientedMatroid, SignVector, VectorArrangement};
use crate::{Error, Result, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Affine,
    Linear,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Affine => "affine",
            Flavor::Linear => "linear",
        })
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Flavor> {
        match s {
            "affine" => Ok(Flavor::Affine),
            "linear" => Ok(Flavor::Linear),
            _ => Err(Error::Input(format!("unknown flavor {s:?}"))),
        }
    }
}

/// A point of `‖X‖` as sorted `(vertex, barycentric weight)` pairs with
/// positive weights summing to 1.
pub type Point = Vec<(u32, Q)>;

pub fn vertex_point(v: u32) -> Point {
    vec![(v, Q::one())]
}

/// Convex combination `Σ w_i p_i` of points (weights need not be normalized).
pub fn combine(points: &[Point], weights: &[Q]) -> Point {
    let total: Q = weights.iter().fold(Q::zero(), |a, b| a + b);
    let mut acc: BTreeMap<u32, Q> = BTreeMap::new();
    for (p, w) in points.iter().zip(weights) {
        for (v, x) in p {
            *acc.entry(*v).or_insert_with(Q::zero) += x * w / &total;
        }
    }
    acc.into_iter().filter(|(_, x)| !x.is_zero()).collect()
}

/// Triangulated manifold with exact star coordinates at every vertex.
#[derive(Clone, Debug)]
pub struct FlatteningAtlas {
    pub complex: OrderedComplex,
    pub n: usize,
    /// `coords[v][w]`: coordinates of `w ∈ star(v)` in the chart of `v`.
    pub coords: Vec<BTreeMap<u32, Vec<Q>>>,
    pub tag: Option<String>,
    pub ground: Ground,
}

impl FlatteningAtlas {
    pub fn new(complex: OrderedComplex, n: usize, coords: Vec<BTreeMap<u32, Vec<Q>>>, tag: Option<String>) -> Result<FlatteningAtlas> {
        if complex.dim() != n {
            return Err(Error::Structure(format!("complex has dimension {}, atlas declares {n}", complex.dim())));
        }
        if coords.len() != complex.num_vertices() {
            return Err(Error::Input("atlas must give coordinates for every vertex".into()));
        }
        if complex.num_vertices() > crate::om::MAX_ELEMENTS {
            return Err(Error::Input(format!("at most {} vertices supported", crate::om::MAX_ELEMENTS)));
        }
        let ground: Ground = complex.labels.to_vec().into();
        let atlas = FlatteningAtlas { complex, n, coords, tag, ground };
        for v in 0..atlas.complex.num_vertices() as u32 {
            let c = &atlas.coords[v as usize];
            match c.get(&v) {
                Some(x) if x.iter().all(|t| t.is_zero()) => {}
                _ => return Err(Error::Input(format!("vertex {} must sit at the origin of its own chart", atlas.label(v)))),
            }
            for w in atlas.star(&[v]) {
                match c.get(&w) {
                    Some(x) if x.len() == n => {}
                    _ => return Err(Error::Input(format!("chart of {} lacks {}", atlas.label(v), atlas.label(w)))),
                }
            }
        }
        Ok(atlas)
    }

    pub fn label(&self, v: u32) -> &str {
        &self.complex.labels[v as usize]
    }

    pub fn top_simplices_containing<'a>(&'a self, s: &'a [u32]) -> impl Iterator<Item = &'a Simplex> + 'a {
        self.complex.simplices(self.n).iter().filter(move |t| s.iter().all(|v| t.contains(v)))
    }

    /// Vertices of the closed star of `s`.
    pub fn star(&self, s: &[u32]) -> BTreeSet<u32> {
        self.top_simplices_containing(s).flat_map(|t| t.iter().copied()).collect()
    }

    pub fn star_mask(&self, s: &[u32]) -> u64 {
        self.star(s).iter().fold(0u64, |m, v| m | 1 << v)
    }

    /// Every simplex of the closed star of `s`.
    pub fn star_simplices(&self, s: &[u32]) -> BTreeSet<Simplex> {
        let mut out = BTreeSet::new();
        for t in self.top_simplices_containing(s) {
            for mask in 1u32..(1 << t.len()) {
                out.insert((0..t.len()).filter(|i| mask >> i & 1 == 1).map(|i| t[i]).collect());
            }
        }
        out
    }

    pub fn mask(s: &[u32]) -> u64 {
        s.iter().fold(0u64, |m, v| m | 1 << v)
    }
}

/// Flattening of the star of the carrier of `p`, in the chart of the
/// carrier's least vertex: `f_p(v) = coord(v) − coord(p)`.
#[derive(Clone, Debug)]
pub struct Flattening {
    pub carrier: Simplex,
    pub star: u64,
    pub arrangement: VectorArrangement,
}

pub fn flatten_at(atlas: &FlatteningAtlas, p: &Point) -> Result<Flattening> {
    if p.is_empty() || p.iter().any(|(_, w)| !w.is_positive()) {
        return Err(Error::Input("point must have positive barycentric weights".into()));
    }
    if p.iter().fold(Q::zero(), |a, (_, w)| a + w) != Q::one() {
        return Err(Error::Input("barycentric weights must sum to 1".into()));
    }
    let carrier: Simplex = p.iter().map(|(v, _)| *v).collect();
    if !atlas.complex.contains(&carrier) {
        return Err(Error::Input(format!("point carrier {carrier:?} is not a simplex")));
    }
    let u = carrier[0] as usize;
    let chart = &atlas.coords[u];
    let star = atlas.star(&carrier);
    let mut pc = vec![Q::zero(); atlas.n];
    for (v, w) in p {
        let c = chart.get(v).ok_or_else(|| Error::Input(format!("chart of {} lacks {}", atlas.label(u as u32), atlas.label(*v))))?;
        for (a, b) in pc.iter_mut().zip(c) {
            *a += w * b;
        }
    }
    let mut vectors = vec![vec![Q::zero(); atlas.n]; atlas.complex.num_vertices()];
    for &w in &star {
        let c = chart.get(&w).ok_or_else(|| Error::Input(format!("chart of {} lacks {}", atlas.label(u as u32), atlas.label(w))))?;
        vectors[w as usize] = c.iter().zip(&pc).map(|(a, b)| a - b).collect();
    }
    let arrangement = VectorArrangement::new(atlas.ground.clone(), vectors)?;
    Ok(Flattening { carrier, star: star.iter().fold(0u64, |m, v| m | 1 << v), arrangement })
}

pub fn linear_chart(f: &Flattening) -> Result<OrientedMatroid> {
    let r = f.arrangement.dim;
    om_from_vectors(&f.arrangement, r)
}

pub fn affine_chart(f: &Flattening) -> Result<OrientedMatroid> {
    let r = f.arrangement.dim + 1;
    om_from_vectors(&f.arrangement.homogenize(f.star), r)
}

/// The arrangement a chart of the given flavor is realized by.
pub fn chart_arrangement(f: &Flattening, flavor: Flavor) -> VectorArrangement {
    match flavor {
        Flavor::Affine => f.arrangement.homogenize(f.star),
        Flavor::Linear => f.arrangement.clone(),
    }
}

pub fn chart(f: &Flattening, flavor: Flavor) -> Result<OrientedMatroid> {
    match flavor {
        Flavor::Affine => affine_chart(f),
        Flavor::Linear => linear_chart(f),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ChartReport {
    pub valid: bool,
    pub violations: Vec<String>,
}

fn labels_of(ground: &Ground, mask: u64) -> String {
    let v: Vec<&str> = (0..ground.len()).filter(|i| mask >> i & 1 == 1).map(|i| ground[i].as_str()).collect();
    format!("{{{}}}", v.join(","))
}

/// Checks every clause of the chart definition of the given flavor at `delta`.
pub fn validate_chart(m: &OrientedMatroid, delta: &[u32], atlas: &FlatteningAtlas, flavor: Flavor) -> ChartReport {
    validate_chart_in(m, delta, &atlas.star_simplices(delta), flavor)
}

/// [`validate_chart`] against an explicit closed star (every simplex of it).
pub fn validate_chart_in(m: &OrientedMatroid, delta: &[u32], simplices: &BTreeSet<Simplex>, flavor: Flavor) -> ChartReport {
    let mut v = vec![];
    let g = &m.ground;
    let n = g.len();
    let star = simplices.iter().fold(0u64, |acc, s| acc | FlatteningAtlas::mask(s));
    let dmask = FlatteningAtlas::mask(delta);
    match flavor {
        Flavor::Linear => {
            let bad = m.nonloops() & !star;
            if bad != 0 {
                v.push(format!("clause 1: nonloops outside the star {}", labels_of(g, bad)));
            }
            if m.is_independent(dmask) {
                v.push(format!("clause 2: {} is independent", labels_of(g, dmask)));
            }
            for s in simplices.iter().filter(|s| !delta.iter().all(|d| s.contains(d))) {
                let sm = FlatteningAtlas::mask(s);
                if !m.is_independent(sm) {
                    v.push(format!("clause 3: boundary simplex {} is dependent", labels_of(g, sm)));
                    continue;
                }
                let others = m.nonloops() & !sm;
                for e in (0..n).filter(|e| others >> e & 1 == 1) {
                    if m.in_convex_hull(e, sm) {
                        v.push(format!("clause 3: {} lies in the convex hull of {}", g[e], labels_of(g, sm)));
                    }
                }
            }
        }
        Flavor::Affine => {
            if m.nonloops() != star {
                v.push(format!("clause 1: nonloops {} differ from the star {}", labels_of(g, m.nonloops()), labels_of(g, star)));
            }
            if !m.contains(&SignVector { pos: star, neg: 0 }) {
                v.push("clause 2: no covector is positive on the whole star".into());
            }
            for s in simplices {
                let sm = FlatteningAtlas::mask(s);
                if !m.is_independent(sm) {
                    v.push(format!("clause 3: simplex {} is dependent", labels_of(g, sm)));
                }
            }
            let covs = m.covectors();
            for s in simplices {
                for t in simplices {
                    if s >= t {
                        continue;
                    }
                    let (sm, tm) = (FlatteningAtlas::mask(s), FlatteningAtlas::mask(t));
                    let (common, only_s, only_t) = (sm & tm, sm & !tm, tm & !sm);
                    let ok = covs.iter().any(|y| y.support() & common == 0 && y.pos & only_s == only_s && y.neg & only_t == only_t);
                    if !ok {
                        v.push(format!("clause 4: no covector separates {} from {}", labels_of(g, sm), labels_of(g, tm)));
                    }
                }
            }
        }
    }
    ChartReport { valid: v.is_empty(), violations: v }
}

/// Open cell of a subdivision of `‖X‖`: the convex hull of its corners,
/// lying in the open simplex `carrier`.
#[derive(Clone, Debug)]
pub struct Cell {
    pub carrier: Simplex,
    pub corners: Vec<Point>,
    pub dim: usize,
    pub chart: OrientedMatroid,
    /// Realization of `chart` at the cell barycenter.
    pub arrangement: VectorArrangement,
}

impl Cell {
    pub fn barycenter(&self) -> Point {
        combine(&self.corners, &vec![Q::one(); self.corners.len()])
    }
}

/// Simplicial manifold with a cell subdivision and one chart per cell.
#[derive(Clone, Debug)]
pub struct CDManifold {
    pub atlas: Arc<FlatteningAtlas>,
    pub flavor: Flavor,
    /// Refinement level: 1 = X itself, 2 = edge midpoints, 3 = barycentric.
    pub level: usize,
    pub cells: Vec<Cell>,
    /// `faces[i]`: indices of the proper faces of cell `i`.
    pub faces: Vec<Vec<usize>>,
}

struct RawCell {
    carrier: Simplex,
    corners: Vec<Point>,
    dim: usize,
}

fn midpoint(a: u32, b: u32) -> Point {
    let h = Q::new(1.into(), 2.into());
    let (a, b) = (a.min(b), a.max(b));
    vec![(a, h.clone()), (b, h)]
}

fn sorted(mut c: Vec<Point>) -> Vec<Point> {
    c.sort();
    c.dedup();
    c
}

fn raw_cells(x: &OrderedComplex, level: usize) -> Vec<RawCell> {
    let mut out = vec![];
    match level {
        1 => {
            for d in 0..=x.dim() {
                for s in x.simplices(d) {
                    out.push(RawCell { carrier: s.clone(), corners: s.iter().map(|&v| vertex_point(v)).collect(), dim: d });
                }
            }
        }
        2 => {
            for v in x.simplices(0) {
                out.push(RawCell { carrier: v.clone(), corners: vec![vertex_point(v[0])], dim: 0 });
            }
            for e in x.simplices(1) {
                let m = midpoint(e[0], e[1]);
                out.push(RawCell { carrier: e.clone(), corners: vec![m.clone()], dim: 0 });
                out.push(RawCell { carrier: e.clone(), corners: sorted(vec![vertex_point(e[0]), m.clone()]), dim: 1 });
                out.push(RawCell { carrier: e.clone(), corners: sorted(vec![vertex_point(e[1]), m]), dim: 1 });
            }
            for d in 2..=x.dim() {
                for s in x.simplices(d) {
                    let mut c: Vec<Point> = s.iter().map(|&v| vertex_point(v)).collect();
                    for i in 0..s.len() {
                        for j in i + 1..s.len() {
                            c.push(midpoint(s[i], s[j]));
                        }
                    }
                    out.push(RawCell { carrier: s.clone(), corners: sorted(c), dim: d });
                }
            }
        }
        _ => {
            // barycentric subdivision: one cell per flag of faces
            let mut faces: Vec<Simplex> = vec![];
            for d in 0..=x.dim() {
                faces.extend(x.simplices(d).iter().cloned());
            }
            let bary = |s: &Simplex| combine(&s.iter().map(|&v| vertex_point(v)).collect::<Vec<_>>(), &vec![Q::one(); s.len()]);
            fn flags(cur: &mut Vec<usize>, faces: &[Simplex], out: &mut Vec<Vec<usize>>) {
                out.push(cur.clone());
                let last = &faces[*cur.last().unwrap()];
                for (j, f) in faces.iter().enumerate() {
                    if f.len() > last.len() && last.iter().all(|v| f.contains(v)) {
                        cur.push(j);
                        flags(cur, faces, out);
                        cur.pop();
                    }
                }
            }
            let mut all = vec![];
            for i in 0..faces.len() {
                flags(&mut vec![i], &faces, &mut all);
            }
            for fl in all {
                let carrier = faces[*fl.last().unwrap()].clone();
                let corners = sorted(fl.iter().map(|&i| bary(&faces[i])).collect());
                out.push(RawCell { carrier, dim: fl.len() - 1, corners });
            }
        }
    }
    out
}

const SAMPLE_SEED: u64 = 0x5eed_c4a7;

/// Interior sample points of a cell: its barycenter and `k` random positive
/// combinations of its corners (fixed seed per cell).
pub fn interior_samples(corners: &[Point], k: usize, cell_index: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED ^ cell_index as u64);
    let mut pts = vec![combine(corners, &vec![Q::one(); corners.len()])];
    for _ in 0..k {
        let w: Vec<Q> = (0..corners.len()).map(|_| Q::from_integer(rng.gen_range(1..=16).into())).collect();
        pts.push(combine(corners, &w));
    }
    pts
}

/// Chart of the given flavor at `p`, with its realizing arrangement.
pub fn chart_at(atlas: &FlatteningAtlas, p: &Point, flavor: Flavor) -> Result<(OrientedMatroid, VectorArrangement)> {
    let f = flatten_at(atlas, p)?;
    Ok((chart(&f, flavor)?, chart_arrangement(&f, flavor)))
}

/// Coarsest refinement (up to `refine_cap`) on which the chart is constant on
/// every open cell; validates every chart and the weak-map condition on
/// every face pair.
pub fn build_cd(atlas: Arc<FlatteningAtlas>, flavor: Flavor, refine_cap: usize, samples: usize) -> Result<CDManifold> {
    let cap = refine_cap.clamp(1, 3);
    let mut last_detail = String::new();
    'level: for level in 1..=cap {
        let raw = raw_cells(&atlas.complex, level);
        let mut cells = Vec::with_capacity(raw.len());
        for (i, rc) in raw.into_iter().enumerate() {
            let pts = interior_samples(&rc.corners, if rc.dim == 0 { 0 } else { samples }, i);
            let (chart0, arr) = chart_at(&atlas, &pts[0], flavor)?;
            for p in &pts[1..] {
                let (c, _) = chart_at(&atlas, p, flavor)?;
                if c != chart0 {
                    last_detail = format!("chart varies on the open cell over {:?}", rc.carrier.iter().map(|&v| atlas.label(v)).collect::<Vec<_>>());
                    continue 'level;
                }
            }
            cells.push(Cell { carrier: rc.carrier, corners: rc.corners, dim: rc.dim, chart: chart0, arrangement: arr });
        }
        let faces: Vec<Vec<usize>> = (0..cells.len())
            .map(|i| {
                (0..cells.len())
                    .filter(|&j| j != i && cells[j].corners.len() < cells[i].corners.len() && cells[j].corners.iter().all(|c| cells[i].corners.binary_search(c).is_ok()))
                    .collect()
            })
            .collect();
        let cd = CDManifold { atlas: atlas.clone(), flavor, level, cells, faces };
        cd.validate()?;
        return Ok(cd);
    }
    Err(Error::Refinement { depth: cap, detail: last_detail })
}

impl CDManifold {
    /// Chart axioms per cell and the weak-map condition per face pair.
    pub fn validate(&self) -> Result<()> {
        for c in &self.cells {
            let r = validate_chart(&c.chart, &c.carrier, &self.atlas, self.flavor);
            if !r.valid {
                return Err(Error::Structure(format!("chart on cell over {:?} invalid: {}", c.carrier, r.violations.join("; "))));
            }
        }
        for (i, fs) in self.faces.iter().enumerate() {
            let s = &self.cells[i].chart;
            for &j in fs {
                let t = self.cells[j].chart.restrict(s.nonloops());
                if !weak_map(s, &t)? {
                    return Err(Error::Structure(format!("weak-map condition fails between cells {i} and {j}")));
                }
            }
        }
        Ok(())
    }

    /// Cells whose carrier is exactly `s`.
    pub fn cells_over<'a>(&'a self, s: &'a [u32]) -> impl Iterator<Item = usize> + 'a {
        (0..self.cells.len()).filter(move |&i| self.cells[i].carrier == s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::qr;
    use crate::models;

    #[test]
    fn flatten_at_vertex_a() {
        let t = models::torus(3, 3).unwrap();
        let f = flatten_at(&t, &vertex_point(0)).unwrap();
        let v = &f.arrangement.vectors;
        assert!(v[0].iter().all(|x| x.is_zero()));
        let b = t.complex.labels.iter().position(|l| l == "b").unwrap();
        assert_eq!(v[b], vec![Q::zero(), Q::one()]);
        assert_eq!(f.star.count_ones(), 7);
    }

    #[test]
    fn interior_point_positively_spans() {
        let t = models::torus(3, 3).unwrap();
        let s = t.complex.simplices(2)[0].clone();
        let p: Point = s.iter().map(|&v| (v, qr(1, 3))).collect();
        let f = flatten_at(&t, &p).unwrap();
        let m = linear_chart(&f).unwrap();
        assert!(m.contains(&SignVector::ZERO));
        assert_eq!(m.nonloops().count_ones(), 3);
        // positively spanning: no covector is nonnegative and nonzero on all three
        let sm = FlatteningAtlas::mask(&s);
        assert!(!m.covectors().iter().any(|c| !c.is_zero() && c.neg & sm == 0));
    }
}

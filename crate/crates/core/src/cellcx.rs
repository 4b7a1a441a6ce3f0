//! Ordered simplicial complexes with rational chains and cochains twisted by
//! sign-valued local systems: boundary, coboundary, cup, cap, pushforward,
//! fundamental classes and exact homology queries.
//!
//! Coefficients of a twisted simplex `[x0, …, xk]` live in the fiber over its
//! leading vertex `x0`; moving a coefficient to another vertex of the simplex
//! multiplies it by the edge sign.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use num::{One, Zero};

use crate::linalg::{Echelon, SparseRow};
use crate::{Error, Result, Q};

pub type Simplex = Vec<u32>;

/// Simplicial complex on vertices `0..n`, whose total order is the index
/// order. Every simplex is stored with increasing vertices.
#[derive(Clone, Debug, Default)]
pub struct OrderedComplex {
    pub labels: Vec<String>,
    simplices: Vec<Vec<Simplex>>,
    index: Vec<HashMap<Simplex, usize>>,
}

impl OrderedComplex {
    fn from_sets(labels: Vec<String>, mut by_dim: Vec<Vec<Simplex>>) -> OrderedComplex {
        for d in by_dim.iter_mut() {
            d.sort();
            d.dedup();
        }
        while by_dim.last().is_some_and(|d| d.is_empty()) {
            by_dim.pop();
        }
        let index = by_dim.iter().map(|d| d.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect()).collect();
        OrderedComplex { labels, simplices: by_dim, index }
    }

    /// Downward closure of the given simplices. Vertices are `0..labels.len()`.
    pub fn from_facets(labels: Vec<String>, facets: &[Simplex]) -> Result<OrderedComplex> {
        let n = labels.len() as u32;
        let mut by_dim: Vec<HashSet<Simplex>> = vec![];
        for f in facets {
            let mut f = f.clone();
            f.sort();
            if f.windows(2).any(|w| w[0] == w[1]) || f.iter().any(|&v| v >= n) || f.is_empty() {
                return Err(Error::Input(format!("malformed simplex {f:?}")));
            }
            let k = f.len();
            for mask in 1u32..(1 << k) {
                let s: Simplex = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| f[i]).collect();
                let d = s.len() - 1;
                if by_dim.len() <= d {
                    by_dim.resize(d + 1, HashSet::new());
                }
                by_dim[d].insert(s);
            }
        }
        if by_dim.is_empty() {
            by_dim.push(HashSet::new());
        }
        for v in 0..n {
            by_dim[0].insert(vec![v]);
        }
        Ok(Self::from_sets(labels, by_dim.into_iter().map(|s| s.into_iter().collect()).collect()))
    }

    /// Order complex of a finite poset whose index order is a linear
    /// extension; `up[i]` lists every `j` with `i < j` in the poset.
    pub fn order_complex(labels: Vec<String>, up: &[Vec<u32>], max_dim: usize) -> OrderedComplex {
        let mut by_dim: Vec<Vec<Simplex>> = vec![vec![]; max_dim + 1];
        let upsets: Vec<HashSet<u32>> = up.iter().map(|u| u.iter().copied().collect()).collect();
        fn rec(chain: &mut Vec<u32>, cands: &[u32], up: &[Vec<u32>], upsets: &[HashSet<u32>], by_dim: &mut Vec<Vec<Simplex>>, max_dim: usize) {
            by_dim[chain.len() - 1].push(chain.clone());
            if chain.len() > max_dim {
                return;
            }
            for &j in cands {
                let next: Vec<u32> = cands.iter().copied().filter(|k| upsets[j as usize].contains(k)).collect();
                chain.push(j);
                rec(chain, &next, up, upsets, by_dim, max_dim);
                chain.pop();
            }
        }
        for i in 0..up.len() {
            let mut chain = vec![i as u32];
            let mut cands = up[i].clone();
            cands.sort();
            rec(&mut chain, &cands, up, &upsets, &mut by_dim, max_dim);
        }
        Self::from_sets(labels, by_dim)
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.simplices.len().saturating_sub(1)
    }

    pub fn simplices(&self, d: usize) -> &[Simplex] {
        self.simplices.get(d).map_or(&[], |v| v.as_slice())
    }

    pub fn count(&self, d: usize) -> usize {
        self.simplices(d).len()
    }

    pub fn index_of(&self, s: &[u32]) -> Option<usize> {
        self.index.get(s.len().checked_sub(1)?)?.get(s).copied()
    }

    pub fn contains(&self, s: &[u32]) -> bool {
        self.index_of(s).is_some()
    }

    /// Cofaces of dimension `dim(s) + 1`, computed by scanning.
    pub fn coface_map(&self, d: usize) -> HashMap<Simplex, Vec<usize>> {
        let mut map: HashMap<Simplex, Vec<usize>> = HashMap::new();
        for (j, t) in self.simplices(d + 1).iter().enumerate() {
            for i in 0..t.len() {
                map.entry(face(t, i)).or_default().push(j);
            }
        }
        map
    }
}

pub fn face(s: &[u32], i: usize) -> Simplex {
    s.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect()
}

/// Sign-valued local system: the set of edges with transport sign −1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalSystem {
    negative: HashSet<(u32, u32)>,
}

impl LocalSystem {
    pub fn trivial() -> LocalSystem {
        LocalSystem::default()
    }

    /// Builds a system from its negative edges and checks the cocycle
    /// condition on every 2-simplex of `cx`.
    pub fn new(cx: &OrderedComplex, negative: impl IntoIterator<Item = (u32, u32)>) -> Result<LocalSystem> {
        let ls = LocalSystem { negative: negative.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect() };
        ls.validate(cx)?;
        Ok(ls)
    }

    pub fn validate(&self, cx: &OrderedComplex) -> Result<()> {
        for t in cx.simplices(2) {
            if self.sign(t[0], t[1]) * self.sign(t[1], t[2]) * self.sign(t[0], t[2]) != 1 {
                return Err(Error::Structure(format!("local system not flat on {t:?}")));
            }
        }
        Ok(())
    }

    pub fn sign(&self, a: u32, b: u32) -> i8 {
        if a != b && self.negative.contains(&(a.min(b), a.max(b))) {
            -1
        } else {
            1
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.negative.is_empty()
    }

    pub fn negative_edges(&self) -> Vec<(u32, u32)> {
        let mut v: Vec<_> = self.negative.iter().copied().collect();
        v.sort();
        v
    }

    /// Tensor product: signs multiply.
    pub fn tensor(&self, other: &LocalSystem) -> LocalSystem {
        LocalSystem { negative: self.negative.symmetric_difference(&other.negative).copied().collect() }
    }

    /// Pullback along a vertex map, evaluated on the edges of `source`.
    pub fn pullback(&self, source: &OrderedComplex, f: &SimplicialMap) -> LocalSystem {
        let negative = source
            .simplices(1)
            .iter()
            .filter(|e| self.sign(f.map[e[0] as usize], f.map[e[1] as usize]) == -1)
            .map(|e| (e[0], e[1]))
            .collect();
        LocalSystem { negative }
    }

    /// Transport sign from the leading vertex of `s` to its `i`-th vertex.
    pub fn transport(&self, s: &[u32], i: usize) -> i8 {
        self.sign(s[0], s[i])
    }
}

/// Rational chain, keyed by increasing simplices.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Chain {
    pub degree: usize,
    pub terms: BTreeMap<Simplex, Q>,
}

/// Rational cochain, keyed by increasing simplices (absent = 0).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Cochain {
    pub degree: usize,
    pub values: BTreeMap<Simplex, Q>,
}

fn add_term(map: &mut BTreeMap<Simplex, Q>, s: Simplex, v: Q) {
    if v.is_zero() {
        return;
    }
    match map.entry(s) {
        std::collections::btree_map::Entry::Occupied(mut o) => {
            *o.get_mut() += v;
            if o.get().is_zero() {
                o.remove();
            }
        }
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(v);
        }
    }
}

fn signed(v: &Q, s: i8) -> Q {
    if s < 0 {
        -v.clone()
    } else {
        v.clone()
    }
}

impl Chain {
    pub fn zero(degree: usize) -> Chain {
        Chain { degree, terms: BTreeMap::new() }
    }

    pub fn add(&mut self, s: Simplex, v: Q) {
        add_term(&mut self.terms, s, v);
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, f: &Q) -> Chain {
        let mut c = Chain::zero(self.degree);
        for (s, v) in &self.terms {
            c.add(s.clone(), v * f);
        }
        c
    }

    pub fn plus(&self, other: &Chain) -> Chain {
        let mut c = self.clone();
        for (s, v) in &other.terms {
            c.add(s.clone(), v.clone());
        }
        c
    }

    pub fn minus(&self, other: &Chain) -> Chain {
        self.plus(&other.scale(&-Q::one()))
    }

    /// Checks that every simplex belongs to `cx` and has the declared degree.
    pub fn validate(&self, cx: &OrderedComplex) -> Result<()> {
        for s in self.terms.keys() {
            if s.len() != self.degree + 1 || !cx.contains(s) {
                return Err(Error::Structure(format!("chain simplex {s:?} not in complex")));
            }
        }
        Ok(())
    }
}

impl Cochain {
    pub fn zero(degree: usize) -> Cochain {
        Cochain { degree, values: BTreeMap::new() }
    }

    pub fn set(&mut self, s: Simplex, v: Q) {
        if v.is_zero() {
            self.values.remove(&s);
        } else {
            self.values.insert(s, v);
        }
    }

    pub fn add(&mut self, s: Simplex, v: Q) {
        add_term(&mut self.values, s, v);
    }

    pub fn get(&self, s: &[u32]) -> Q {
        self.values.get(s).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// The constant 0-cochain 1.
    pub fn one(cx: &OrderedComplex) -> Cochain {
        let mut c = Cochain::zero(0);
        for s in cx.simplices(0) {
            c.set(s.clone(), Q::one());
        }
        c
    }

    pub fn minus(&self, other: &Cochain) -> Cochain {
        let mut c = self.clone();
        for (s, v) in &other.values {
            c.add(s.clone(), -v.clone());
        }
        c
    }

    pub fn scale(&self, f: &Q) -> Cochain {
        let mut c = Cochain::zero(self.degree);
        for (s, v) in &self.values {
            c.set(s.clone(), v * f);
        }
        c
    }

    pub fn validate(&self, cx: &OrderedComplex) -> Result<()> {
        for s in self.values.keys() {
            if s.len() != self.degree + 1 || !cx.contains(s) {
                return Err(Error::Structure(format!("cochain simplex {s:?} not in complex")));
            }
        }
        Ok(())
    }
}

/// Twisted boundary `∂[x0..xk] = Σ (−1)^i [..x̂i..]`; the `i = 0` face has
/// leading vertex `x1`, so its coefficient is transported along `x0x1`.
pub fn boundary(c: &Chain, sys: &LocalSystem) -> Chain {
    if c.degree == 0 {
        return Chain::zero(0);
    }
    let mut out = Chain::zero(c.degree - 1);
    for (s, v) in &c.terms {
        for i in 0..s.len() {
            let mut sg: i8 = if i % 2 == 0 { 1 } else { -1 };
            if i == 0 {
                sg *= sys.transport(s, 1);
            }
            out.add(face(s, i), signed(v, sg));
        }
    }
    out
}

/// Dual of [`boundary`], evaluated on every `(k+1)`-simplex of `cx`.
pub fn coboundary(psi: &Cochain, cx: &OrderedComplex, sys: &LocalSystem) -> Cochain {
    let mut out = Cochain::zero(psi.degree + 1);
    for s in cx.simplices(psi.degree + 1) {
        let v = coboundary_at(psi, s, sys);
        out.set(s.clone(), v);
    }
    out
}

pub fn coboundary_at(psi: &Cochain, s: &[u32], sys: &LocalSystem) -> Q {
    let mut acc = Q::zero();
    for i in 0..s.len() {
        let val = psi.values.get(&face(s, i));
        let Some(val) = val else { continue };
        let mut sg: i8 = if i % 2 == 0 { 1 } else { -1 };
        if i == 0 {
            sg *= sys.transport(s, 1);
        }
        acc += signed(val, sg);
    }
    acc
}

/// Front/back-face cup product, values on every `(p+q)`-simplex of `cx`;
/// `sys_b` transports `b`'s back-face value to the leading vertex.
pub fn cup(a: &Cochain, b: &Cochain, cx: &OrderedComplex, sys_b: &LocalSystem) -> Cochain {
    let (p, qd) = (a.degree, b.degree);
    let mut out = Cochain::zero(p + qd);
    for s in cx.simplices(p + qd) {
        let Some(av) = a.values.get(&s[..=p]) else { continue };
        let Some(bv) = b.values.get(&s[p..]) else { continue };
        out.set(s.clone(), signed(&(av * bv), sys_b.transport(s, p)));
    }
    out
}

/// Cap product `[x0..x_{k+l}] ⌢ ψ = ψ([x0..xk]) [xk..x_{k+l}]`, with the
/// coefficient moved from `x0` to `xk` in the tensor system.
pub fn cap(c: &Chain, psi: &Cochain, sys_c: &LocalSystem, sys_psi: &LocalSystem) -> Result<Chain> {
    let k = psi.degree;
    if c.degree < k {
        return Err(Error::Degree(format!("cap of degree-{} chain with degree-{k} cochain", c.degree)));
    }
    let mut out = Chain::zero(c.degree - k);
    for (s, v) in &c.terms {
        let Some(pv) = psi.values.get(&s[..=k]) else { continue };
        let sg = sys_c.transport(s, k) * sys_psi.transport(s, k);
        out.add(s[k..].to_vec(), signed(&(v * pv), sg));
    }
    Ok(out)
}

/// Vertex map between ordered complexes.
#[derive(Clone, Debug)]
pub struct SimplicialMap {
    pub map: Vec<u32>,
}

impl SimplicialMap {
    pub fn check(&self, source: &OrderedComplex, target: &OrderedComplex) -> Result<()> {
        for d in 0..=source.dim() {
            for s in source.simplices(d) {
                let mut img: Vec<u32> = s.iter().map(|&v| self.map[v as usize]).collect();
                img.sort();
                img.dedup();
                if !target.contains(&img) {
                    return Err(Error::Structure(format!("image of {s:?} is not a simplex")));
                }
            }
        }
        Ok(())
    }
}

/// Chain-level pushforward; collapsed simplices go to zero. Coefficients are
/// in the pulled-back system, so they move to the image's leading vertex with
/// the target system's sign.
pub fn pushforward(f: &SimplicialMap, c: &Chain, target_sys: &LocalSystem) -> Chain {
    let mut out = Chain::zero(c.degree);
    for (s, v) in &c.terms {
        let img: Vec<u32> = s.iter().map(|&x| f.map[x as usize]).collect();
        let mut idx: Vec<usize> = (0..img.len()).collect();
        idx.sort_by_key(|&i| img[i]);
        if idx.windows(2).any(|w| img[w[0]] == img[w[1]]) {
            continue;
        }
        let mut sg = perm_parity(&idx);
        let sorted: Vec<u32> = idx.iter().map(|&i| img[i]).collect();
        sg *= target_sys.sign(img[0], sorted[0]);
        out.add(sorted, signed(v, sg));
    }
    out
}

fn perm_parity(p: &[usize]) -> i8 {
    let mut s = 1;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                s = -s;
            }
        }
    }
    s
}

/// Orientation local system and fundamental cycle of a closed pseudomanifold.
/// Orientable inputs get the trivial system and a coherent orientation.
pub fn fundamental_class(x: &OrderedComplex, n: usize) -> Result<(LocalSystem, Chain)> {
    if x.dim() != n {
        return Err(Error::Structure(format!("complex has dimension {}, expected {n}", x.dim())));
    }
    let tops = x.simplices(n);
    if tops.is_empty() {
        return Err(Error::Structure("no top simplices".into()));
    }
    let cofaces = x.coface_map(n - 1);
    for f in x.simplices(n - 1) {
        let k = cofaces.get(f).map_or(0, |v| v.len());
        if k != 2 {
            return Err(Error::Structure(format!("face {f:?} lies in {k} top simplices")));
        }
    }
    // induced sign of top simplex j on its i-th face
    let induced = |j: usize, f: &Simplex| -> i8 {
        let i = tops[j].iter().position(|v| !f.contains(v)).unwrap();
        if i % 2 == 0 {
            1
        } else {
            -1
        }
    };
    // coherent orientation of the tops containing `keep`, across faces containing `keep`
    let orient = |seed: usize, keep: &[u32]| -> (HashMap<usize, i8>, bool) {
        let mut eps: HashMap<usize, i8> = HashMap::new();
        eps.insert(seed, 1);
        let mut queue = VecDeque::from([seed]);
        let mut ok = true;
        while let Some(j) = queue.pop_front() {
            for i in 0..=n {
                let f = face(&tops[j], i);
                if !keep.iter().all(|v| f.contains(v)) {
                    continue;
                }
                for &k in &cofaces[&f] {
                    if k == j {
                        continue;
                    }
                    let want = -eps[&j] * induced(j, &f) * induced(k, &f);
                    match eps.get(&k) {
                        Some(&e) if e != want => ok = false,
                        Some(_) => {}
                        None => {
                            eps.insert(k, want);
                            queue.push_back(k);
                        }
                    }
                }
            }
        }
        (eps, ok)
    };
    let (eps, ok) = orient(0, &[]);
    if eps.len() != tops.len() {
        return Err(Error::Structure("complex is not connected".into()));
    }
    if ok {
        let mut c = Chain::zero(n);
        for (j, t) in tops.iter().enumerate() {
            c.add(t.clone(), Q::from_integer(eps[&j].into()));
        }
        return Ok((LocalSystem::trivial(), c));
    }
    // per-vertex star orientations
    let mut star_eps: Vec<HashMap<usize, i8>> = Vec::with_capacity(x.num_vertices());
    for v in 0..x.num_vertices() as u32 {
        let seed = tops.iter().position(|t| t.contains(&v)).ok_or_else(|| Error::Structure(format!("vertex {v} in no top simplex")))?;
        let (e, ok) = orient(seed, &[v]);
        if !ok {
            return Err(Error::Structure(format!("star of vertex {v} is not orientable")));
        }
        star_eps.push(e);
    }
    let mut negative = vec![];
    for e in x.simplices(1) {
        let j = tops.iter().position(|t| t.contains(&e[0]) && t.contains(&e[1])).unwrap();
        if star_eps[e[0] as usize][&j] * star_eps[e[1] as usize][&j] == -1 {
            negative.push((e[0], e[1]));
        }
    }
    let sys = LocalSystem::new(x, negative)?;
    let mut c = Chain::zero(n);
    for (j, t) in tops.iter().enumerate() {
        c.add(t.clone(), Q::from_integer(star_eps[t[0] as usize][&j].into()));
    }
    if !boundary(&c, &sys).is_zero() {
        return Err(Error::Structure("twisted fundamental chain is not a cycle".into()));
    }
    Ok((sys, c))
}

/// Boundary matrix columns of `∂_{k+1}` indexed by `k`-simplex positions.
fn boundary_columns(cx: &OrderedComplex, sys: &LocalSystem, k: usize) -> Vec<SparseRow> {
    cx.simplices(k + 1)
        .iter()
        .map(|s| {
            let b = boundary(&Chain { degree: k + 1, terms: BTreeMap::from([(s.clone(), Q::one())]) }, sys);
            let mut row: SparseRow = b.terms.iter().map(|(f, v)| (cx.index_of(f).unwrap(), v.clone())).collect();
            row.sort_by_key(|e| e.0);
            row
        })
        .collect()
}

/// Witness `ψ` with `δψ = target`, if `target` is a coboundary.
pub fn coboundary_witness(target: &Cochain, cx: &OrderedComplex, sys: &LocalSystem) -> Option<Cochain> {
    let k = target.degree;
    if target.is_zero() {
        return Some(Cochain::zero(k.saturating_sub(1)));
    }
    if k == 0 {
        return None;
    }
    let mut cols: Vec<SparseRow> = vec![vec![]; cx.count(k - 1)];
    for (r, s) in cx.simplices(k).iter().enumerate() {
        for i in 0..s.len() {
            let mut sg: i8 = if i % 2 == 0 { 1 } else { -1 };
            if i == 0 {
                sg *= sys.transport(s, 1);
            }
            let j = cx.index_of(&face(s, i)).expect("face in complex");
            cols[j].push((r, Q::from_integer(sg.into())));
        }
    }
    let mut b: SparseRow = target.values.iter().filter(|(_, v)| !v.is_zero()).map(|(s, v)| (cx.index_of(s).expect("cochain on complex"), v.clone())).collect();
    b.sort_by_key(|e| e.0);
    let x = crate::linalg::solve_columns(&cols, &b)?;
    let mut w = Cochain::zero(k - 1);
    for (j, v) in x.into_iter().enumerate() {
        if !v.is_zero() {
            w.set(cx.simplices(k - 1)[j].clone(), v);
        }
    }
    Some(w)
}

/// Exact rational homology queries on one complex with one local system.
pub struct Homology<'a> {
    pub cx: &'a OrderedComplex,
    pub sys: &'a LocalSystem,
}

impl<'a> Homology<'a> {
    pub fn new(cx: &'a OrderedComplex, sys: &'a LocalSystem) -> Self {
        Homology { cx, sys }
    }

    fn rank_boundary(&self, k: usize) -> usize {
        if k == 0 || k > self.cx.dim() {
            return 0;
        }
        let mut e = Echelon::new();
        for c in boundary_columns(self.cx, self.sys, k - 1) {
            e.insert(c);
        }
        e.rank()
    }

    pub fn rank(&self, k: usize) -> usize {
        self.cx.count(k) - self.rank_boundary(k) - self.rank_boundary(k + 1)
    }

    /// Witness `x` with `∂x = c`, if `c` is a boundary.
    pub fn is_boundary(&self, c: &Chain) -> Option<Chain> {
        let k = c.degree;
        let cols = boundary_columns(self.cx, self.sys, k);
        let mut b: SparseRow = c.terms.iter().map(|(s, v)| (self.cx.index_of(s).expect("chain in complex"), v.clone())).collect();
        b.sort_by_key(|e| e.0);
        if cols.is_empty() {
            return if c.is_zero() { Some(Chain::zero(k + 1)) } else { None };
        }
        let x = crate::linalg::solve_columns(&cols, &b)?;
        let mut w = Chain::zero(k + 1);
        for (j, v) in x.into_iter().enumerate() {
            w.add(self.cx.simplices(k + 1)[j].clone(), v);
        }
        Some(w)
    }

    pub fn homologous(&self, a: &Chain, b: &Chain) -> Option<Chain> {
        self.is_boundary(&a.minus(b))
    }
}

//! Oriented matroids: sign vectors, chirotopes, covector sets, realizations
//! by rational vector arrangements, weak and strong maps, and the rank-2
//! circle structure.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use num::{Signed, Zero};

use crate::linalg::{det, dot, sign_of};
use crate::{Error, Result, Q};

/// Maximum ground-set size; sign vectors are packed into two `u64` masks.
pub const MAX_ELEMENTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    pub fn from_i8(s: i8) -> Sign {
        match s.signum() {
            1 => Sign::Pos,
            -1 => Sign::Neg,
            _ => Sign::Zero,
        }
    }
    pub fn to_i8(self) -> i8 {
        match self {
            Sign::Pos => 1,
            Sign::Neg => -1,
            Sign::Zero => 0,
        }
    }
    pub fn neg(self) -> Sign {
        Sign::from_i8(-self.to_i8())
    }
    pub fn mul(self, o: Sign) -> Sign {
        Sign::from_i8(self.to_i8() * o.to_i8())
    }
    pub fn of(x: &Q) -> Sign {
        Sign::from_i8(sign_of(x))
    }
}

/// A sign vector over an indexed ground set, as positive and negative masks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignVector {
    pub pos: u64,
    pub neg: u64,
}

impl SignVector {
    pub const ZERO: SignVector = SignVector { pos: 0, neg: 0 };

    pub fn from_signs(signs: &[Sign]) -> SignVector {
        let mut v = SignVector::ZERO;
        for (i, s) in signs.iter().enumerate() {
            v.set(i, *s);
        }
        v
    }

    pub fn get(&self, i: usize) -> Sign {
        if self.pos >> i & 1 == 1 {
            Sign::Pos
        } else if self.neg >> i & 1 == 1 {
            Sign::Neg
        } else {
            Sign::Zero
        }
    }

    pub fn set(&mut self, i: usize, s: Sign) {
        let b = 1u64 << i;
        self.pos &= !b;
        self.neg &= !b;
        match s {
            Sign::Pos => self.pos |= b,
            Sign::Neg => self.neg |= b,
            Sign::Zero => {}
        }
    }

    pub fn support(&self) -> u64 {
        self.pos | self.neg
    }

    pub fn zero_set(&self, n: usize) -> u64 {
        !self.support() & full_mask(n)
    }

    pub fn is_zero(&self) -> bool {
        self.support() == 0
    }

    pub fn negate(&self) -> SignVector {
        SignVector { pos: self.neg, neg: self.pos }
    }

    /// `self ∘ other`: entries of `self` where nonzero, else those of `other`.
    pub fn compose(&self, other: &SignVector) -> SignVector {
        let s = self.support();
        SignVector { pos: self.pos | (other.pos & !s), neg: self.neg | (other.neg & !s) }
    }

    /// Componentwise order with `0 < +` and `0 < −`.
    pub fn le(&self, other: &SignVector) -> bool {
        self.pos & !other.pos == 0 && self.neg & !other.neg == 0
    }

    pub fn restrict(&self, mask: u64) -> SignVector {
        SignVector { pos: self.pos & mask, neg: self.neg & mask }
    }

    /// Elements where the two vectors have opposite nonzero signs.
    pub fn separation(&self, other: &SignVector) -> u64 {
        (self.pos & other.neg) | (self.neg & other.pos)
    }

    pub fn render(&self, n: usize) -> String {
        (0..n)
            .map(|i| match self.get(i) {
                Sign::Pos => '+',
                Sign::Neg => '-',
                Sign::Zero => '0',
            })
            .collect()
    }

    pub fn parse(s: &str) -> Option<SignVector> {
        let mut v = SignVector::ZERO;
        for (i, c) in s.chars().enumerate() {
            if i >= MAX_ELEMENTS {
                return None;
            }
            match c {
                '+' => v.set(i, Sign::Pos),
                '-' => v.set(i, Sign::Neg),
                '0' => {}
                _ => return None,
            }
        }
        Some(v)
    }
}

pub fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub type Ground = Arc<[String]>;

pub fn ground(labels: &[&str]) -> Ground {
    labels.iter().map(|s| s.to_string()).collect::<Vec<_>>().into()
}

/// Alternating sign map on `rank`-tuples, stored on strictly increasing
/// tuples and extended by permutation sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chirotope {
    pub ground: Ground,
    pub rank: usize,
    /// Values on every ordered `rank`-tuple of ground indices (with repeats).
    pub values: BTreeMap<Vec<usize>, Sign>,
}

fn perm_sign_and_sort(t: &[usize]) -> (Sign, Vec<usize>) {
    let mut v = t.to_vec();
    let mut s = 1i8;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                s = -s;
            } else if v[j] == v[j + 1] {
                s = 0;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        s = 0;
    }
    (Sign::from_i8(s), v)
}

fn all_tuples(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..r {
        let mut next = Vec::with_capacity(out.len() * n);
        for t in &out {
            for e in 0..n {
                let mut u = t.clone();
                u.push(e);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

pub fn increasing_tuples(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for e in start..n {
            if n - e < r - cur.len() {
                break;
            }
            cur.push(e);
            rec(e + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = vec![];
    rec(0, n, r, &mut vec![], &mut out);
    out
}

impl Chirotope {
    /// Builds the full table from values on increasing tuples.
    pub fn from_increasing(ground: Ground, rank: usize, f: impl Fn(&[usize]) -> Sign) -> Chirotope {
        let n = ground.len();
        let mut values = BTreeMap::new();
        for t in all_tuples(n, rank) {
            let (s, sorted) = perm_sign_and_sort(&t);
            let v = if s == Sign::Zero { Sign::Zero } else { s.mul(f(&sorted)) };
            values.insert(t, v);
        }
        Chirotope { ground, rank, values }
    }

    pub fn get(&self, t: &[usize]) -> Sign {
        self.values.get(t).copied().unwrap_or(Sign::Zero)
    }

    pub fn negate(&self) -> Chirotope {
        Chirotope {
            ground: self.ground.clone(),
            rank: self.rank,
            values: self.values.iter().map(|(k, v)| (k.clone(), v.neg())).collect(),
        }
    }

    /// Cocircuit signature `f ↦ χ(A, f)` for an independent `(r−1)`-tuple `A`.
    fn cocircuit(&self, a: &[usize]) -> SignVector {
        let mut v = SignVector::ZERO;
        let mut t = a.to_vec();
        t.push(0);
        for f in 0..self.ground.len() {
            *t.last_mut().unwrap() = f;
            v.set(f, self.get(&t));
        }
        v
    }

    pub fn cocircuits(&self) -> Vec<SignVector> {
        let mut set = BTreeSet::new();
        for a in increasing_tuples(self.ground.len(), self.rank - 1) {
            let c = self.cocircuit(&a);
            if !c.is_zero() {
                set.insert(c);
                set.insert(c.negate());
            }
        }
        set.into_iter().collect()
    }

    /// Covector set generated by the cocircuits of this chirotope.
    pub fn covectors(&self) -> Vec<SignVector> {
        closure(&self.cocircuits())
    }
}

/// Grassmann–Plücker check: alternating, nonzero, and every three-term (in
/// general `r+1`-term) relation is either all zero or contains both signs.
pub fn check_chirotope(chi: &Chirotope) -> Result<bool> {
    let n = chi.ground.len();
    let r = chi.rank;
    if r == 0 || n > MAX_ELEMENTS {
        return Err(Error::Input("chirotope rank must be positive".into()));
    }
    for t in all_tuples(n, r) {
        if !chi.values.contains_key(&t) {
            return Err(Error::Input(format!("chirotope undefined on tuple {t:?}")));
        }
    }
    if chi.values.len() != n.pow(r as u32) {
        return Err(Error::Input("chirotope has tuples outside the ground set".into()));
    }
    // alternating
    for (t, v) in &chi.values {
        let (s, sorted) = perm_sign_and_sort(t);
        let expect = if s == Sign::Zero { Sign::Zero } else { s.mul(chi.get(&sorted)) };
        if *v != expect {
            return Ok(false);
        }
    }
    if chi.values.values().all(|v| *v == Sign::Zero) {
        return Ok(false);
    }
    for e in all_tuples(n, r - 1) {
        for f in increasing_tuples(n, r + 1) {
            let (mut has_pos, mut has_neg) = (false, false);
            for i in 0..=r {
                let mut t1 = vec![f[i]];
                t1.extend_from_slice(&e);
                let t2: Vec<usize> = f.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| *x).collect();
                let s = chi.get(&t1).mul(chi.get(&t2));
                let s = if i % 2 == 1 { s.neg() } else { s };
                match s {
                    Sign::Pos => has_pos = true,
                    Sign::Neg => has_neg = true,
                    Sign::Zero => {}
                }
            }
            if has_pos != has_neg {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Closure of `{0} ∪ gens` under composition. Every covector of an oriented
/// matroid is a composition of cocircuits, so generating from cocircuits
/// yields the full covector set. Output sorted.
pub fn closure(gens: &[SignVector]) -> Vec<SignVector> {
    let mut seen: HashSet<SignVector> = HashSet::new();
    seen.insert(SignVector::ZERO);
    let mut frontier = vec![SignVector::ZERO];
    while let Some(x) = frontier.pop() {
        for c in gens {
            let y = x.compose(c);
            if seen.insert(y) {
                frontier.push(y);
            }
        }
    }
    let mut v: Vec<_> = seen.into_iter().collect();
    v.sort();
    v
}

/// A finite list of rational column vectors indexed by ground labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorArrangement {
    pub ground: Ground,
    pub vectors: Vec<Vec<Q>>,
    pub dim: usize,
}

impl VectorArrangement {
    pub fn new(ground: Ground, vectors: Vec<Vec<Q>>) -> Result<VectorArrangement> {
        if ground.len() != vectors.len() {
            return Err(Error::Input("arrangement label/vector count mismatch".into()));
        }
        if ground.len() > MAX_ELEMENTS {
            return Err(Error::Input(format!("more than {MAX_ELEMENTS} elements")));
        }
        let dim = vectors.first().map_or(0, |v| v.len());
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Input("arrangement vectors differ in length".into()));
        }
        Ok(VectorArrangement { ground, vectors, dim })
    }

    pub fn from_ints(labels: &[&str], vecs: &[&[i64]]) -> VectorArrangement {
        let v = vecs.iter().map(|c| c.iter().map(|x| Q::from_integer((*x).into())).collect()).collect();
        VectorArrangement::new(ground(labels), v).expect("well-formed arrangement")
    }

    /// Appends a final coordinate equal to 1 on the listed elements, 0 elsewhere.
    pub fn homogenize(&self, nonloops: u64) -> VectorArrangement {
        let vectors = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut w = v.clone();
                w.push(if nonloops >> i & 1 == 1 { Q::from_integer(1.into()) } else { Q::zero() });
                w
            })
            .collect();
        VectorArrangement { ground: self.ground.clone(), vectors, dim: self.dim + 1 }
    }

    /// Applies a linear map `A` (rows) to every vector.
    pub fn transform(&self, a: &[Vec<Q>]) -> VectorArrangement {
        let vectors = self.vectors.iter().map(|v| a.iter().map(|row| dot(row, v)).collect()).collect();
        VectorArrangement { ground: self.ground.clone(), vectors, dim: a.len() }
    }

    pub fn rank(&self) -> usize {
        crate::linalg::rank_dense(&self.vectors)
    }
}

/// Oriented matroid given by its covector set, with an optional chirotope
/// representative `χ` of the unordered pair `{χ, −χ}`.
#[derive(Clone, Debug)]
pub struct OrientedMatroid {
    pub ground: Ground,
    pub rank: usize,
    covectors: Arc<[SignVector]>,
    pub chirotope: Option<Arc<Chirotope>>,
}

impl PartialEq for OrientedMatroid {
    fn eq(&self, other: &Self) -> bool {
        self.ground == other.ground && self.covectors == other.covectors
    }
}
impl Eq for OrientedMatroid {}

impl std::hash::Hash for OrientedMatroid {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.covectors.hash(state);
    }
}

impl fmt::Display for OrientedMatroid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.ground.len();
        write!(f, "OM(rank {}; {} covectors)", self.rank, self.covectors.len())?;
        for c in self.covectors.iter().take(4) {
            write!(f, " {}", c.render(n))?;
        }
        Ok(())
    }
}

/// Length of the longest chain `0 < x1 < … < xr` in a covector list.
pub fn covector_rank(covs: &[SignVector]) -> usize {
    let mut order: Vec<&SignVector> = covs.iter().collect();
    order.sort_by_key(|c| c.support().count_ones());
    let mut level = vec![0usize; order.len()];
    let mut best = 0;
    for i in 0..order.len() {
        for j in 0..i {
            if order[j] != order[i] && order[j].le(order[i]) {
                level[i] = level[i].max(level[j] + 1);
            }
        }
        best = best.max(level[i]);
    }
    best
}

impl OrientedMatroid {
    /// Wraps a covector list (sorted and deduplicated here). No axiom check.
    pub fn from_covectors(ground: Ground, covs: Vec<SignVector>) -> OrientedMatroid {
        let mut covs = covs;
        covs.sort();
        covs.dedup();
        let rank = covector_rank(&covs);
        OrientedMatroid { ground, rank, covectors: covs.into(), chirotope: None }
    }

    pub fn from_chirotope(chi: Chirotope) -> OrientedMatroid {
        let covs = chi.covectors();
        OrientedMatroid { ground: chi.ground.clone(), rank: chi.rank, covectors: covs.into(), chirotope: Some(Arc::new(chi)) }
    }

    pub fn covectors(&self) -> &[SignVector] {
        &self.covectors
    }

    pub fn len(&self) -> usize {
        self.ground.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ground.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.ground
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Input(format!("element {label} not in ground set")))
    }

    pub fn mask_of(&self, labels: &[&str]) -> Result<u64> {
        labels.iter().try_fold(0u64, |m, l| Ok(m | 1 << self.index_of(l)?))
    }

    pub fn contains(&self, x: &SignVector) -> bool {
        self.covectors.binary_search(x).is_ok()
    }

    /// Maximal covectors.
    pub fn topes(&self) -> Vec<SignVector> {
        let supp = self.covectors.iter().map(|c| c.support()).fold(0, |a, b| a | b);
        self.covectors.iter().copied().filter(|c| c.support() == supp).collect()
    }

    /// Minimal nonzero covectors.
    pub fn cocircuits(&self) -> Vec<SignVector> {
        self.covectors
            .iter()
            .copied()
            .filter(|c| !c.is_zero() && !self.covectors.iter().any(|d| !d.is_zero() && d != c && d.le(c)))
            .collect()
    }

    pub fn loops(&self) -> u64 {
        let supp = self.covectors.iter().map(|c| c.support()).fold(0, |a, b| a | b);
        full_mask(self.len()) & !supp
    }

    pub fn nonloops(&self) -> u64 {
        full_mask(self.len()) & !self.loops()
    }

    pub fn is_loop(&self, e: usize) -> bool {
        self.loops() >> e & 1 == 1
    }

    /// Deletion to `mask`: covectors restricted, other elements become loops.
    pub fn restrict(&self, mask: u64) -> OrientedMatroid {
        let covs: Vec<SignVector> = self.covectors.iter().map(|c| c.restrict(mask)).collect();
        OrientedMatroid::from_covectors(self.ground.clone(), covs)
    }

    pub fn rank_of(&self, mask: u64) -> usize {
        let mut covs: Vec<SignVector> = self.covectors.iter().map(|c| c.restrict(mask)).collect();
        covs.sort();
        covs.dedup();
        covector_rank(&covs)
    }

    /// Independence of a subset. Uses the chirotope when one is attached
    /// (some basis extending the subset has a nonzero value), otherwise the
    /// rank of the deletion.
    pub fn is_independent(&self, mask: u64) -> bool {
        let k = mask.count_ones() as usize;
        if k > self.rank {
            return false;
        }
        if let Some(chi) = &self.chirotope {
            let a: Vec<usize> = (0..self.len()).filter(|i| mask >> i & 1 == 1).collect();
            let rest: Vec<usize> = (0..self.len()).filter(|i| mask >> i & 1 == 0).collect();
            return increasing_tuples(rest.len(), self.rank - k).iter().any(|t| {
                let mut tup = a.clone();
                tup.extend(t.iter().map(|&j| rest[j]));
                chi.get(&tup) != Sign::Zero
            });
        }
        self.rank_of(mask) == k
    }

    /// `e ∈ conv(A)`: every covector positive on all of `A` is positive on `e`.
    pub fn in_convex_hull(&self, e: usize, a: u64) -> bool {
        self.covectors.iter().filter(|x| x.pos & a == a).all(|x| x.pos >> e & 1 == 1)
    }

    /// Covector axioms checked literally.
    pub fn check_covector_axioms(&self) -> bool {
        let set: HashSet<SignVector> = self.covectors.iter().copied().collect();
        if !set.contains(&SignVector::ZERO) {
            return false;
        }
        for x in self.covectors.iter() {
            if !set.contains(&x.negate()) {
                return false;
            }
            for y in self.covectors.iter() {
                if !set.contains(&x.compose(y)) {
                    return false;
                }
                if *x == y.negate() {
                    continue;
                }
                let sep = x.separation(y);
                let both_zero = !x.support() & !y.support() & full_mask(self.len());
                let agree_pos = x.pos & y.pos;
                let agree_neg = x.neg & y.neg;
                for e in 0..self.len() {
                    if sep >> e & 1 == 0 {
                        continue;
                    }
                    // Z(e) = 0, Z vanishes where both vanish, Z matches where x and y agree
                    let ok = self.covectors.iter().any(|z| {
                        z.support() >> e & 1 == 0
                            && z.support() & both_zero == 0
                            && z.pos & agree_pos == agree_pos
                            && z.neg & agree_neg == agree_neg
                    });
                    if !ok {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Chirotope representative with value `+` on the lexicographically least
    /// basis; computed from the stored chirotope if present.
    pub fn normalized_chirotope(&self) -> Option<Chirotope> {
        let chi = self.chirotope.as_ref()?;
        let first = increasing_tuples(self.len(), self.rank).into_iter().find(|t| chi.get(t) != Sign::Zero)?;
        Some(if chi.get(&first) == Sign::Pos { (**chi).clone() } else { chi.negate() })
    }
}

pub fn check_ground(m: &OrientedMatroid, n: &OrientedMatroid) -> Result<()> {
    if m.ground != n.ground {
        return Err(Error::GroundMismatch);
    }
    Ok(())
}

pub fn compose(x: &SignVector, y: &SignVector) -> SignVector {
    x.compose(y)
}

/// `M ⇝ N`: every covector of `N` lies below some covector of `M`.
/// It suffices to test the topes of `N`.
pub fn weak_map(m: &OrientedMatroid, n: &OrientedMatroid) -> Result<bool> {
    check_ground(m, n)?;
    Ok(weak_map_covs(m.covectors(), n.covectors()))
}

pub fn weak_map_covs(m: &[SignVector], n: &[SignVector]) -> bool {
    let supp = n.iter().map(|c| c.support()).fold(0, |a, b| a | b);
    n.iter().filter(|y| y.support() == supp).all(|y| m.iter().any(|x| y.le(x)))
}

/// `N` is a strong-map image of `M`: `V*(N) ⊆ V*(M)`.
pub fn strong_map_image(m: &OrientedMatroid, n: &OrientedMatroid) -> Result<bool> {
    check_ground(m, n)?;
    Ok(n.covectors().iter().all(|y| m.contains(y)))
}

/// Normal vector of the hyperplane spanned by `r−1` vectors in `ℚ^r`:
/// `y_k = det(v_1, …, v_{r−1}, e_k)`.
fn normal(vs: &[&Vec<Q>], r: usize) -> Vec<Q> {
    (0..r)
        .map(|k| {
            let mut m: Vec<Vec<Q>> = vs.iter().map(|v| (*v).clone()).collect();
            let mut ek = vec![Q::zero(); r];
            ek[k] = Q::from_integer(1.into());
            m.push(ek);
            det(&m)
        })
        .collect()
}

/// Oriented matroid of a vector arrangement of declared rank `r`.
pub fn om_from_vectors(arr: &VectorArrangement, r: usize) -> Result<OrientedMatroid> {
    let n = arr.ground.len();
    if arr.vectors.iter().all(|v| v.iter().all(|x| x.is_zero())) {
        return Err(Error::Input("arrangement has only zero columns".into()));
    }
    if arr.dim != r {
        return Err(Error::Rank { expected: r, found: arr.dim });
    }
    let found = arr.rank();
    if found != r {
        return Err(Error::Rank { expected: r, found });
    }
    let mut basis_vals: BTreeMap<Vec<usize>, Sign> = BTreeMap::new();
    for t in increasing_tuples(n, r) {
        let m: Vec<Vec<Q>> = t.iter().map(|&i| arr.vectors[i].clone()).collect();
        basis_vals.insert(t, Sign::of(&det(&m)));
    }
    let chi = Chirotope::from_increasing(arr.ground.clone(), r, |t| basis_vals[t]);
    let mut cocircuits = BTreeSet::new();
    for a in increasing_tuples(n, r - 1) {
        let vs: Vec<&Vec<Q>> = a.iter().map(|&i| &arr.vectors[i]).collect();
        let y = normal(&vs, r);
        if y.iter().all(|x| x.is_zero()) {
            continue;
        }
        let c = SignVector::from_signs(&arr.vectors.iter().map(|v| Sign::of(&dot(&y, v))).collect::<Vec<_>>());
        cocircuits.insert(c);
        cocircuits.insert(c.negate());
    }
    let gens: Vec<SignVector> = cocircuits.into_iter().collect();
    let covs = closure(&gens);
    Ok(OrientedMatroid { ground: arr.ground.clone(), rank: r, covectors: covs.into(), chirotope: Some(Arc::new(chi)) })
}

/// The alternating cyclic sequence `v0 < e0 > v1 < e1 > …` of cocircuits and
/// topes of a rank-2 oriented matroid. With a chirotope attached the walk
/// follows the counterclockwise orientation it induces; otherwise it starts
/// toward the smaller tope.
pub fn rank2_circle(m: &OrientedMatroid) -> Result<Vec<SignVector>> {
    if m.rank != 2 {
        return Err(Error::Rank { expected: 2, found: m.rank });
    }
    let cocs = m.cocircuits();
    let topes = m.topes();
    let chi = m.normalized_chirotope();
    let start = cocs[0];
    let next_tope = |c: SignVector, prev: Option<SignVector>| -> Result<SignVector> {
        let adj: Vec<SignVector> = topes.iter().copied().filter(|t| c.le(t)).collect();
        if adj.len() != 2 {
            return Err(Error::Structure(format!("cocircuit adjacent to {} topes", adj.len())));
        }
        if let Some(p) = prev {
            return Ok(if adj[0] == p { adj[1] } else { adj[0] });
        }
        if let Some(chi) = &chi {
            // c = s·C_e with C_e(f) = χ(e, f); the counterclockwise successor
            // of C_e is negative on e.
            let e = (0..m.len()).find(|&e| !m.is_loop(e) && c.get(e) == Sign::Zero).unwrap();
            let f = (0..m.len()).find(|&f| c.get(f) != Sign::Zero).unwrap();
            let s = c.get(f).mul(chi.get(&[e, f]));
            let want = s.neg();
            return Ok(if adj[0].get(e) == want { adj[0] } else { adj[1] });
        }
        Ok(adj[0])
    };
    let mut seq = vec![start];
    let mut cur = start;
    let mut prev_tope = None;
    loop {
        let t = next_tope(cur, prev_tope)?;
        seq.push(t);
        let nxt: Vec<SignVector> = cocs.iter().copied().filter(|c| c.le(&t) && *c != cur).collect();
        if nxt.len() != 1 {
            return Err(Error::Structure("tope not bounded by two cocircuits".into()));
        }
        cur = nxt[0];
        prev_tope = Some(t);
        if cur == start {
            break;
        }
        seq.push(cur);
        if seq.len() > 2 * m.covectors().len() {
            return Err(Error::Structure("rank-2 circle walk did not close".into()));
        }
    }
    if seq.len() != m.covectors().len() - 1 {
        return Err(Error::Structure("rank-2 covectors do not form a single circle".into()));
    }
    Ok(seq)
}

/// Cross product in `ℚ³`.
pub fn cross(a: &[Q], b: &[Q]) -> Vec<Q> {
    vec![
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

/// Realizes `arr` projected along the line spanned by `l` (rank-3 input).
pub fn project_along(arr: &VectorArrangement, l: &[Q]) -> Result<OrientedMatroid> {
    let z = Q::zero();
    let cands = [
        vec![-l[1].clone(), l[0].clone(), z.clone()],
        vec![z.clone(), -l[2].clone(), l[1].clone()],
        vec![l[2].clone(), z.clone(), -l[0].clone()],
    ];
    let w1 = cands.into_iter().find(|w| w.iter().any(|x| !x.is_zero())).ok_or_else(|| Error::Input("zero projection direction".into()))?;
    let w2 = cross(l, &w1);
    project_onto(arr, &w1, &w2)
}

/// Realizes the arrangement in coordinates `(v·w1, v·w2)`.
pub fn project_onto(arr: &VectorArrangement, w1: &[Q], w2: &[Q]) -> Result<OrientedMatroid> {
    let vectors = arr.vectors.iter().map(|v| vec![dot(v, w1), dot(v, w2)]).collect();
    let p = VectorArrangement { ground: arr.ground.clone(), vectors, dim: 2 };
    om_from_vectors(&p, 2)
}

/// Every rank-2 quotient of a rank-3 arrangement obtained by projecting
/// along a line. The quotient chirotope along `L` is `sign det(v_i, v_j, L)
/// = sign((v_i × v_j)·L)`, so quotients correspond to the nonzero cells of
/// the great-circle arrangement with normals `v_i × v_j`; each cell gets an
/// explicit representative line.
pub fn rank2_quotients_of_rank3(arr: &VectorArrangement) -> Result<Vec<OrientedMatroid>> {
    if arr.dim != 3 {
        return Err(Error::Rank { expected: 3, found: arr.dim });
    }
    let r = arr.rank();
    if r != 3 {
        return Err(Error::Rank { expected: 3, found: r });
    }
    let mut normals: Vec<Vec<Q>> = vec![];
    for t in increasing_tuples(arr.ground.len(), 2) {
        let nv = cross(&arr.vectors[t[0]], &arr.vectors[t[1]]);
        if nv.iter().any(|x| !x.is_zero()) {
            normals.push(nv);
        }
    }
    let cells = arrangement_cells(&normals)?;
    let mut seen = HashSet::new();
    let mut out = vec![];
    for (_, l) in cells {
        let q = project_along(arr, &l)?;
        if seen.insert(q.covectors().to_vec()) {
            out.push(q);
        }
    }
    out.sort_by(|a, b| a.covectors().cmp(b.covectors()));
    Ok(out)
}

/// Nonzero cells (up to sign) of the central arrangement of planes with the
/// given normals in `ℚ³`, each with a representative point. Cocircuit points
/// come from cross products of normals; compositions `x∘c` are realized by
/// `p_x + ε p_c` with `ε` below every ratio that could flip a sign of `x`.
pub fn arrangement_cells(normals: &[Vec<Q>]) -> Result<Vec<(SignVector, Vec<Q>)>> {
    let m = normals.len();
    if m > MAX_ELEMENTS {
        return Err(Error::Resource(format!("{m} planes exceed the {MAX_ELEMENTS}-element limit")));
    }
    let signs = |p: &[Q]| SignVector::from_signs(&normals.iter().map(|nv| Sign::of(&dot(nv, p))).collect::<Vec<_>>());
    let mut cocs: BTreeMap<SignVector, Vec<Q>> = BTreeMap::new();
    for t in increasing_tuples(m, 2) {
        let p = cross(&normals[t[0]], &normals[t[1]]);
        if p.iter().all(|x| x.is_zero()) {
            continue;
        }
        let s = signs(&p);
        let neg: Vec<Q> = p.iter().map(|x| -x).collect();
        cocs.entry(s).or_insert(p);
        cocs.entry(s.negate()).or_insert(neg);
    }
    if cocs.is_empty() {
        // all planes coincide: two half-spaces and the plane's circle
        let nv = &normals[0];
        let p: Vec<Q> = nv.clone();
        let s = signs(&p);
        let neg: Vec<Q> = p.iter().map(|x| -x).collect();
        cocs.insert(s, p);
        cocs.insert(s.negate(), neg);
    }
    let gens: Vec<(SignVector, Vec<Q>)> = cocs.into_iter().collect();
    let mut seen: BTreeMap<SignVector, Vec<Q>> = BTreeMap::new();
    let mut frontier: Vec<SignVector> = vec![];
    for (s, p) in &gens {
        if seen.insert(*s, p.clone()).is_none() {
            frontier.push(*s);
        }
    }
    while let Some(x) = frontier.pop() {
        let px = seen[&x].clone();
        let vals_x: Vec<Q> = normals.iter().map(|nv| dot(nv, &px)).collect();
        for (c, pc) in &gens {
            let y = x.compose(c);
            if seen.contains_key(&y) {
                continue;
            }
            let mut eps = Q::from_integer(1.into());
            for (k, nv) in normals.iter().enumerate() {
                if vals_x[k].is_zero() {
                    continue;
                }
                let d = dot(nv, pc);
                if d.is_zero() {
                    continue;
                }
                let bound = (&vals_x[k] / &d).abs() / Q::from_integer(2.into());
                if bound < eps {
                    eps = bound;
                }
            }
            let p: Vec<Q> = px.iter().zip(pc).map(|(a, b)| a + &eps * b).collect();
            debug_assert_eq!(signs(&p), y);
            seen.insert(y, p);
            frontier.push(y);
        }
    }
    // one representative per antipodal pair
    let mut out = vec![];
    for (s, p) in seen {
        if s.is_zero() {
            continue;
        }
        if s.negate() < s {
            continue;
        }
        out.push((s, p));
    }
    Ok(out)
}

/// Rank-2 projections onto caller-supplied 2-planes (higher-rank charts,
/// non-exhaustive). Planes where the projection has rank < 2 are skipped.
pub fn rank2_quotients_sampled(arr: &VectorArrangement, planes: &[(Vec<Q>, Vec<Q>)]) -> Vec<OrientedMatroid> {
    let mut seen = HashSet::new();
    let mut out = vec![];
    for (w1, w2) in planes {
        if let Ok(q) = project_onto(arr, w1, w2) {
            if seen.insert(q.covectors().to_vec()) {
                out.push(q);
            }
        }
    }
    out.sort_by(|a, b| a.covectors().cmp(b.covectors()));
    out
}

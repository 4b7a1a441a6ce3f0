//! Fixing cycles and the combinatorial Pontrjagin formula
//! `p̃_i(X) ⌢ [X] = (−1)^i π_*(Ω^{e+2i} ⌢ φ)`.

use std::collections::{BTreeMap, HashMap};

use num::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::assoc::AssocPoset;
use crate::cellcx::{boundary, cap, cup, face, fundamental_class, pushforward, Chain, Cochain, Homology, LocalSystem, OrderedComplex, Simplex, SimplicialMap};
use crate::charts::Flavor;
use crate::linalg::{Echelon, SparseRow};
use crate::{Error, Result, Q};

/// Degree of a fixing cycle and the power of Ω it is capped with.
pub fn fixing_degree(flavor: Flavor, n: usize) -> Result<(usize, usize)> {
    match flavor {
        Flavor::Affine if n >= 1 => Ok((3 * n - 2, n - 1)),
        Flavor::Linear if n >= 2 => Ok((3 * n - 4, n - 2)),
        _ => Err(Error::Degree(format!("no {flavor} fixing cycle for n = {n}"))),
    }
}

/// Base data: X, its face-poset complex, the orientation systems and the
/// subdivided fundamental cycle.
pub struct BaseData {
    pub n: usize,
    pub x: OrderedComplex,
    pub d_x: LocalSystem,
    pub fclass: Chain,
    pub cx_x: OrderedComplex,
    pub face_index: HashMap<Simplex, u32>,
    pub faces: Vec<Simplex>,
    /// `D` pulled back to Cx X along `σ ↦ min σ`.
    pub d_cx: LocalSystem,
    /// Image of `[X]` under barycentric subdivision.
    pub fclass_sd: Chain,
}

pub fn base_data(x: &OrderedComplex, n: usize) -> Result<BaseData> {
    let (d_x, fclass) = fundamental_class(x, n)?;
    let (cx_x, face_index) = AssocPoset::x_face_complex(x);
    let mut faces = vec![Simplex::new(); face_index.len()];
    for (f, &i) in &face_index {
        faces[i as usize] = f.clone();
    }
    let minv = SimplicialMap { map: faces.iter().map(|f| f[0]).collect() };
    let d_cx = d_x.pullback(&cx_x, &minv);
    let mut sd = Chain::zero(n);
    for (t, eps) in &fclass.terms {
        for perm in permutations(n + 1) {
            let mut flag = Vec::with_capacity(n + 1);
            let mut acc: Vec<u32> = vec![];
            for &p in &perm {
                acc.push(t[p]);
                let mut f = acc.clone();
                f.sort();
                flag.push(face_index[&f]);
            }
            let sg = perm_sign(&perm) * d_x.sign(t[0], t[perm[0]]);
            sd.add(flag, if sg < 0 { -eps.clone() } else { eps.clone() });
        }
    }
    if !boundary(&sd, &d_cx).is_zero() {
        return Err(Error::Structure("subdivided fundamental chain is not a cycle".into()));
    }
    Ok(BaseData { n, x: x.clone(), d_x, fclass, cx_x, face_index, faces, d_cx, fclass_sd: sd })
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for p in permutations(k - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, k - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn perm_sign(p: &[usize]) -> i8 {
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

/// `Ω^k` by repeated cup products (`Ω^0` is the constant 1).
pub fn omega_power(cy: &OrderedComplex, om: &Cochain, sys: &LocalSystem, k: usize) -> Cochain {
    let mut p = Cochain::one(cy);
    let mut psys = LocalSystem::trivial();
    for _ in 0..k {
        p = cup(&p, om, cy, sys);
        psys = psys.tensor(sys);
    }
    let _ = psys;
    p
}

/// Everything the fixing-cycle equations need on Cx Y.
pub struct FixingSetup<'a> {
    pub base: &'a BaseData,
    pub cy: &'a OrderedComplex,
    pub pi: SimplicialMap,
    pub o: &'a LocalSystem,
    /// Local system of φ: `O^e ⊗ π*D`.
    pub phi_sys: LocalSystem,
    /// `π*D` on Cx Y.
    pub pid: LocalSystem,
    pub omega_e: Cochain,
    pub degree: usize,
    pub exponent: usize,
    pub exhaustive: bool,
}

impl<'a> FixingSetup<'a> {
    pub fn new(base: &'a BaseData, ap: &AssocPoset, cy: &'a OrderedComplex, om: &Cochain, o: &'a LocalSystem, flavor: Flavor) -> Result<FixingSetup<'a>> {
        let (degree, exponent) = fixing_degree(flavor, base.n)?;
        let pi = ap.pi_map(&base.face_index);
        let pid = base.d_cx.pullback(cy, &pi);
        let phi_sys = if exponent % 2 == 1 { o.tensor(&pid) } else { pid.clone() };
        let omega_e = omega_power(cy, om, o, exponent);
        Ok(FixingSetup { base, cy, pi, o, phi_sys, pid, omega_e, degree, exponent, exhaustive: ap.exhaustive })
    }

    /// Sign for the part of `π(σ)` from position `k` on: its permutation sign
    /// if nondegenerate.
    fn image(&self, s: &[u32]) -> Option<(Vec<u32>, i8)> {
        let img: Vec<u32> = s.iter().map(|&v| self.pi.map[v as usize]).collect();
        if img.windows(2).all(|w| w[0] < w[1]) {
            Some((img, 1))
        } else {
            None
        }
    }

    /// `π_*(Ω^e ⌢ φ)` by chain-level cap product and pushforward.
    pub fn pushed(&self, phi: &Chain) -> Result<Chain> {
        let c = cap(phi, &self.omega_e, &self.phi_sys, &exp_sys(self.o, self.exponent))?;
        Ok(pushforward(&self.pi, &c, &self.base.d_cx))
    }

    /// Coefficient of the top simplex `s` in `π_*(Ω^e ⌢ σ)` for a unit
    /// simplex `σ`, by direct dual evaluation.
    pub fn dual_weight(&self, sigma: &[u32], s: &[u32]) -> Q {
        let k = 2 * self.exponent;
        let back = &sigma[k..];
        let Some((img, sg)) = self.image(back) else { return Q::zero() };
        if img != s {
            return Q::zero();
        }
        let w = self.omega_e.get(&sigma[..=k]);
        if w.is_zero() {
            return w;
        }
        let t = sg * self.pid.sign(sigma[0], sigma[k]);
        if t < 0 {
            -w
        } else {
            w
        }
    }

    /// Twisted boundary rows of the degree-`d` simplices, keyed by face.
    fn boundary_rows(&self) -> Vec<Vec<(usize, i8)>> {
        let tops = self.cy.simplices(self.degree);
        let mut rows: HashMap<Simplex, Vec<(usize, i8)>> = HashMap::new();
        for (j, s) in tops.iter().enumerate() {
            for i in 0..s.len() {
                let mut sg: i8 = if i % 2 == 0 { 1 } else { -1 };
                if i == 0 {
                    sg *= self.phi_sys.sign(s[0], s[1]);
                }
                rows.entry(face(s, i)).or_default().push((j, sg));
            }
        }
        let mut v: Vec<(Simplex, Vec<(usize, i8)>)> = rows.into_iter().collect();
        v.sort();
        v.into_iter().map(|(_, r)| r).collect()
    }
}

fn exp_sys(o: &LocalSystem, e: usize) -> LocalSystem {
    if e % 2 == 1 {
        o.clone()
    } else {
        LocalSystem::trivial()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FixingOutcome {
    Found,
    None,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct FixingResult {
    pub outcome: FixingOutcome,
    pub phi: Option<Chain>,
    /// Top simplex of Cx X used for the normalization row.
    pub normal_simplex: Simplex,
    pub stats: SolveStats,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SolveStats {
    pub unknowns: usize,
    pub components: usize,
    pub live_components: usize,
    pub residual_rows: usize,
}

/// Union-find over unknowns with a ±1 ratio to the root.
struct Signed {
    parent: Vec<usize>,
    ratio: Vec<i8>,
    dead: Vec<bool>,
}

impl Signed {
    fn new(n: usize) -> Self {
        Signed { parent: (0..n).collect(), ratio: vec![1; n], dead: vec![false; n] }
    }

    fn find(&mut self, i: usize) -> (usize, i8) {
        let p = self.parent[i];
        if p == i {
            return (i, 1);
        }
        let (r, s) = self.find(p);
        self.parent[i] = r;
        self.ratio[i] *= s;
        (r, self.ratio[i])
    }

    /// Imposes `a x_i + b x_j = 0` with `a, b = ±1`.
    fn relate(&mut self, i: usize, a: i8, j: usize, b: i8) {
        let (ri, si) = self.find(i);
        let (rj, sj) = self.find(j);
        // x_i = si x_ri, x_j = sj x_rj; want x_rj = t x_ri
        let t = -a * b * si * sj;
        if ri == rj {
            if t != 1 {
                self.dead[ri] = true;
            }
            return;
        }
        self.parent[rj] = ri;
        self.ratio[rj] = t;
        self.dead[ri] |= self.dead[rj];
    }
}

/// Solves `∂φ = 0` and the normalization `⟨π_*(Ω^e ⌢ φ), s⟩ = [X]_sd(s)`
/// for one top simplex `s`; `reverse` flips the elimination order.
pub fn find_fixing_cycle(setup: &FixingSetup, reverse: bool) -> Result<FixingResult> {
    let tops = setup.cy.simplices(setup.degree);
    let (s, xs) = setup.base.fclass_sd.terms.iter().next().map(|(s, v)| (s.clone(), v.clone())).ok_or_else(|| Error::Structure("empty fundamental class".into()))?;
    let n = tops.len();
    let mut uf = Signed::new(n);
    let rows = setup.boundary_rows();
    let mut multi = vec![];
    for r in rows {
        match r.len() {
            1 => {
                let (root, _) = uf.find(r[0].0);
                uf.dead[root] = true;
            }
            2 => uf.relate(r[0].0, r[0].1, r[1].0, r[1].1),
            _ => multi.push(r),
        }
    }
    let roots: Vec<(usize, i8)> = (0..n).map(|j| uf.find(j)).collect();
    let mut comp_ids: BTreeMap<usize, usize> = BTreeMap::new();
    for (r, _) in &roots {
        if !uf.dead[*r] {
            let k = comp_ids.len();
            comp_ids.entry(*r).or_insert(k);
        }
    }
    let live = comp_ids.len();
    let col = |root: usize| -> Option<usize> {
        comp_ids.get(&root).map(|&k| if reverse { live - 1 - k } else { k })
    };
    let to_sparse = |terms: &mut dyn Iterator<Item = (usize, Q)>| -> SparseRow {
        let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
        for (j, v) in terms {
            let (r, sg) = roots[j];
            if let Some(c) = col(r) {
                let e = acc.entry(c).or_insert_with(Q::zero);
                if sg < 0 {
                    *e -= v;
                } else {
                    *e += v;
                }
            }
        }
        acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
    };
    let mut ech = Echelon::new();
    let mut residual = 0;
    for r in &multi {
        let row = to_sparse(&mut r.iter().map(|&(j, v)| (j, Q::from_integer(v.into()))));
        if !row.is_empty() {
            residual += 1;
            ech.insert(row);
        }
    }
    let weights: Vec<(usize, Q)> = tops
        .par_iter()
        .enumerate()
        .map(|(j, sigma)| (j, setup.dual_weight(sigma, &s)))
        .filter(|(_, w)| !w.is_zero())
        .collect();
    let mut norm = to_sparse(&mut weights.into_iter());
    norm.push((live, -xs));
    ech.insert(norm);
    let stats = SolveStats { unknowns: n, components: comp_ids.len() + roots.iter().filter(|(r, _)| uf.dead[*r]).map(|(r, _)| *r).collect::<std::collections::BTreeSet<_>>().len(), live_components: live, residual_rows: residual };
    let Some(sol) = ech.back_substitute(live) else {
        let outcome = if setup.exhaustive { FixingOutcome::None } else { FixingOutcome::Inconclusive };
        return Ok(FixingResult { outcome, phi: None, normal_simplex: s, stats });
    };
    let mut phi = Chain::zero(setup.degree);
    for (j, &(r, sg)) in roots.iter().enumerate() {
        if let Some(c) = col(r) {
            if let Some(v) = sol.get(&c) {
                phi.add(tops[j].clone(), if sg < 0 { -v.clone() } else { v.clone() });
            }
        }
    }
    Ok(FixingResult { outcome: FixingOutcome::Found, phi: Some(phi), normal_simplex: s, stats })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FixingCheck {
    pub cycle: bool,
    pub chain_level: bool,
    pub dual_evaluation: bool,
}

impl FixingCheck {
    pub fn ok(&self) -> bool {
        self.cycle && self.chain_level && self.dual_evaluation
    }
}

/// Recomputes both defining conditions: `∂φ = 0`, and `π_*(Ω^e ⌢ φ) = [X]_sd`
/// by chain-level cap/pushforward and by dual evaluation per top simplex
/// (top degree of Cx X has no boundaries, so homology is equality).
pub fn verify_fixing(setup: &FixingSetup, phi: &Chain) -> Result<FixingCheck> {
    if phi.degree != setup.degree {
        return Err(Error::Degree(format!("fixing cycle must have degree {}, got {}", setup.degree, phi.degree)));
    }
    let cycle = boundary(phi, &setup.phi_sys).is_zero();
    let base = setup.base;
    let same = |c: &Chain| {
        *c == base.fclass_sd || (base.cx_x.count(base.n + 1) > 0 && Homology::new(&base.cx_x, &base.d_cx).homologous(c, &base.fclass_sd).is_some())
    };
    let chain_level = same(&setup.pushed(phi)?);
    let mut dual = Chain::zero(setup.base.n);
    for (sigma, v) in &phi.terms {
        let back = &sigma[2 * setup.exponent..];
        if let Some((img, _)) = setup.image(back) {
            let w = setup.dual_weight(sigma, &img);
            dual.add(img, w * v);
        }
    }
    let dual_evaluation = same(&dual);
    Ok(FixingCheck { cycle, chain_level, dual_evaluation })
}

/// Cycle representing `p̃_i(X) ⌢ [X]`: degree `n − 4i`, zero when `4i > n`.
pub fn pontrjagin_dual(setup: &FixingSetup, om: &Cochain, i: usize, phi: &Chain) -> Result<Chain> {
    let n = setup.base.n;
    if 4 * i > n {
        return Ok(Chain::zero(0));
    }
    let e = setup.exponent + 2 * i;
    let pe = omega_power(setup.cy, om, setup.o, e);
    let c = cap(phi, &pe, &setup.phi_sys, &exp_sys(setup.o, e))?;
    let mut out = pushforward(&setup.pi, &c, &setup.base.d_cx);
    if i % 2 == 1 {
        out = out.scale(&-Q::one());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    Homologous,
    Distinct,
}

/// Degree-`d` cycles on Cx Y are homologous iff their difference bounds.
pub fn compare_fixing_cycles(setup: &FixingSetup, a: &Chain, b: &Chain) -> Result<(Comparison, Option<Chain>)> {
    for p in [a, b] {
        if !verify_fixing(setup, p)?.ok() {
            return Err(Error::Structure("compare_fixing_cycles needs verified fixing cycles".into()));
        }
    }
    let diff = a.minus(b);
    if diff.is_zero() {
        return Ok((Comparison::Homologous, Some(Chain::zero(setup.degree + 1))));
    }
    if setup.cy.count(setup.degree + 1) == 0 {
        return Ok((Comparison::Distinct, None));
    }
    let h = Homology::new(setup.cy, &setup.phi_sys);
    match h.is_boundary(&diff) {
        Some(w) => Ok((Comparison::Homologous, Some(w))),
        None => Ok((Comparison::Distinct, None)),
    }
}

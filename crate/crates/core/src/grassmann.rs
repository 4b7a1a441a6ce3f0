//! Orientation checks for the standard charts on Gr(2, ℝ^a).
//!
//! A point of the chart `W_{x,y}` is a 2×a matrix whose columns `x, y` form
//! the identity; its coordinates are the remaining columns read top to
//! bottom, left to right. Indices in the public API are 1-based.

use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{det, fmt_q, q, sqrt_q};
use crate::{Error, Result, Q};

const SAMPLE_SEED: u64 = 0x6772_2c61;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ChartPair {
    pub a: usize,
    pub source: (usize, usize),
    pub target: (usize, usize),
}

impl ChartPair {
    pub fn new(a: usize, source: (usize, usize), target: (usize, usize)) -> Result<Self> {
        for (x, y) in [source, target] {
            if !(1 <= x && x < y && y <= a) {
                return Err(Error::Input(format!("chart pair ({x},{y}) not ordered within [1,{a}]")));
            }
        }
        if a < 4 {
            return Err(Error::Input(format!("a = {a} too small")));
        }
        Ok(ChartPair { a, source, target })
    }

    pub fn dim(&self) -> usize {
        2 * (self.a - 2)
    }
}

/// Scalars the chart maps are evaluated over.
trait Field: Clone {
    fn c(x: Q) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn value(&self) -> &Q;
}

impl Field for Q {
    fn c(x: Q) -> Self {
        x
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn value(&self) -> &Q {
        self
    }
}

/// First-order dual numbers `v + d·ε`.
#[derive(Clone, Debug)]
struct Dual {
    v: Q,
    d: Q,
}

impl Field for Dual {
    fn c(x: Q) -> Self {
        Dual { v: x, d: Q::zero() }
    }
    fn add(&self, o: &Self) -> Self {
        Dual { v: &self.v + &o.v, d: &self.d + &o.d }
    }
    fn sub(&self, o: &Self) -> Self {
        Dual { v: &self.v - &o.v, d: &self.d - &o.d }
    }
    fn mul(&self, o: &Self) -> Self {
        Dual { v: &self.v * &o.v, d: &self.v * &o.d + &self.d * &o.v }
    }
    fn div(&self, o: &Self) -> Self {
        Dual { v: &self.v / &o.v, d: (&self.d * &o.v - &self.v * &o.d) / (&o.v * &o.v) }
    }
    fn value(&self) -> &Q {
        &self.v
    }
}

fn free_columns(a: usize, pair: (usize, usize)) -> Vec<usize> {
    (0..a).filter(|&c| c != pair.0 - 1 && c != pair.1 - 1).collect()
}

/// The reduced matrix of a chart point.
fn chart_matrix<T: Field>(a: usize, pair: (usize, usize), m: &[T]) -> [Vec<T>; 2] {
    let mut n = [vec![T::c(Q::zero()); a], vec![T::c(Q::zero()); a]];
    n[0][pair.0 - 1] = T::c(Q::one());
    n[1][pair.1 - 1] = T::c(Q::one());
    for (k, c) in free_columns(a, pair).into_iter().enumerate() {
        n[0][c] = m[2 * k].clone();
        n[1][c] = m[2 * k + 1].clone();
    }
    n
}

fn times<T: Field>(n: &[Vec<T>; 2], a: &[Vec<Q>]) -> [Vec<T>; 2] {
    let cols = a.len();
    let row = |r: &Vec<T>| -> Vec<T> {
        (0..cols)
            .map(|j| r.iter().zip(a).fold(T::c(Q::zero()), |acc, (x, arow)| acc.add(&x.mul(&T::c(arow[j].clone())))))
            .collect()
    };
    [row(&n[0]), row(&n[1])]
}

/// Coordinates of `row(N·A)` in the target chart, `None` off the overlap.
fn chart_map<T: Field>(a: usize, source: (usize, usize), m: &[T], mat: Option<&[Vec<Q>]>, target: (usize, usize)) -> Option<Vec<T>> {
    let mut n = chart_matrix(a, source, m);
    if let Some(mat) = mat {
        n = times(&n, mat);
    }
    let (y, z) = (target.0 - 1, target.1 - 1);
    let d = n[0][y].mul(&n[1][z]).sub(&n[0][z].mul(&n[1][y]));
    if d.value().is_zero() {
        return None;
    }
    // adjugate / det
    let zero = T::c(Q::zero());
    let inv = [[n[1][z].div(&d), zero.sub(&n[0][z]).div(&d)], [zero.sub(&n[1][y]).div(&d), n[0][y].div(&d)]];
    let mut out = Vec::with_capacity(2 * (a - 2));
    for c in free_columns(a, target) {
        for r in inv.iter() {
            out.push(r[0].mul(&n[0][c]).add(&r[1].mul(&n[1][c])));
        }
    }
    Some(out)
}

/// Jacobian of a chart map by forward-mode differentiation.
fn jacobian_dual(a: usize, source: (usize, usize), m: &[Q], mat: Option<&[Vec<Q>]>, target: (usize, usize)) -> Option<Vec<Vec<Q>>> {
    let k = m.len();
    let mut jac = vec![vec![Q::zero(); k]; k];
    for j in 0..k {
        let md: Vec<Dual> = m.iter().enumerate().map(|(i, v)| Dual { v: v.clone(), d: if i == j { Q::one() } else { Q::zero() } }).collect();
        let out = chart_map(a, source, &md, mat, target)?;
        for (i, o) in out.into_iter().enumerate() {
            jac[i][j] = o.d;
        }
    }
    Some(jac)
}

/// Jacobian of the transition `g_{(w,x),(y,z)}` from `d(B⁻¹N) = B⁻¹(dN − dB·B⁻¹N)`.
pub fn transition_jacobian(cp: &ChartPair, m: &[Q]) -> Option<Vec<Vec<Q>>> {
    let a = cp.a;
    let n = chart_matrix::<Q>(a, cp.source, m);
    let (y, z) = (cp.target.0 - 1, cp.target.1 - 1);
    let d = &n[0][y] * &n[1][z] - &n[0][z] * &n[1][y];
    if d.is_zero() {
        return None;
    }
    let inv = [[&n[1][z] / &d, -&n[0][z] / &d], [-&n[1][y] / &d, &n[0][y] / &d]];
    let apply = |v: [&Q; 2]| -> [Q; 2] { [&inv[0][0] * v[0] + &inv[0][1] * v[1], &inv[1][0] * v[0] + &inv[1][1] * v[1]] };
    let mcols: Vec<[Q; 2]> = (0..a).map(|c| apply([&n[0][c], &n[1][c]])).collect();
    let src_cols = free_columns(a, cp.source);
    let dst_cols = free_columns(a, cp.target);
    let k = cp.dim();
    let mut jac = vec![vec![Q::zero(); k]; k];
    for j in 0..k {
        let (col, row) = (src_cols[j / 2], j % 2);
        for (t, &c) in dst_cols.iter().enumerate() {
            // dN has a single unit entry at (row, col); dB is its restriction to y, z
            let mut dn = [Q::zero(), Q::zero()];
            if c == col {
                dn[row] = Q::one();
            }
            if col == y {
                dn[row] -= &mcols[c][0];
            }
            if col == z {
                dn[row] -= &mcols[c][1];
            }
            let v = apply([&dn[0], &dn[1]]);
            jac[2 * t][j] = v[0].clone();
            jac[2 * t + 1][j] = v[1].clone();
        }
    }
    Some(jac)
}

/// Same Jacobian through dual-number evaluation of the transition.
pub fn transition_jacobian_oracle(cp: &ChartPair, m: &[Q]) -> Option<Vec<Vec<Q>>> {
    jacobian_dual(cp.a, cp.source, m, None, cp.target)
}

/// Target-chart coordinates of a source-chart point.
pub fn transition(cp: &ChartPair, m: &[Q]) -> Option<Vec<Q>> {
    chart_map(cp.a, cp.source, m, None, cp.target)
}

fn random_q(rng: &mut ChaCha8Rng) -> Q {
    Q::new(rng.gen_range(-12i64..=12).into(), rng.gen_range(1i64..=6).into())
}

/// Deterministic sample points of ℝ^{2(a−2)}.
pub fn sample_points(a: usize, count: usize) -> Vec<Vec<Q>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED ^ a as u64);
    (0..count).map(|_| (0..2 * (a - 2)).map(|_| random_q(&mut rng)).collect()).collect()
}

fn overlap_det(cp: &ChartPair, m: &[Q]) -> Q {
    let n = chart_matrix::<Q>(cp.a, cp.source, m);
    let (y, z) = (cp.target.0 - 1, cp.target.1 - 1);
    &n[0][y] * &n[1][z] - &n[0][z] * &n[1][y]
}

/// Points with `|N_{y,z}| = δ` for small δ, obtained by solving for one
/// coordinate (the determinant is affine in each coordinate).
pub fn adversarial_points(cp: &ChartPair, base: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let mut out = vec![];
    let deltas = [Q::new(1.into(), 10.into()), Q::new(1.into(), 1000.into()), Q::new((-1).into(), 1_000_000.into())];
    for (i, p) in base.iter().take(5).enumerate() {
        for j in 0..p.len() {
            let mut p0 = p.clone();
            p0[j] = Q::zero();
            let alpha = overlap_det(cp, &p0);
            p0[j] = Q::one();
            let beta = overlap_det(cp, &p0) - &alpha;
            if beta.is_zero() {
                continue;
            }
            let delta = &deltas[i % deltas.len()];
            p0[j] = (delta - &alpha) / &beta;
            out.push(p0);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct TransitionReport {
    pub pair: ChartPair,
    pub checked: usize,
    pub adversarial: usize,
    pub skipped: usize,
    pub all_positive: bool,
    pub factorization_holds: bool,
    pub oracle_agrees: bool,
    /// Positivity is established on samples only.
    pub status: &'static str,
    pub min_j1: Option<String>,
}

impl TransitionReport {
    pub fn ok(&self) -> bool {
        self.all_positive && self.factorization_holds && self.oracle_agrees
    }
}

fn block(m: &[Vec<Q>], r: std::ops::Range<usize>) -> Vec<Vec<Q>> {
    m[r.clone()].iter().map(|row| row[r.clone()].to_vec()).collect()
}

/// Samples `|J₁|` over the overlap and checks `|J| = |J₁|·|N_{y,z}⁻¹|^{a−4}`.
pub fn transition_positive(cp: &ChartPair, samples: usize) -> Result<TransitionReport> {
    if cp.source != (1, 2) || cp.target.1 > 4 {
        return Err(Error::Input("block structure needs source (1,2) and target within {1,2,3,4}".into()));
    }
    let base = sample_points(cp.a, samples);
    let adv = adversarial_points(cp, &base);
    let mut rep = TransitionReport {
        pair: *cp,
        checked: 0,
        adversarial: adv.len(),
        skipped: 0,
        all_positive: true,
        factorization_holds: true,
        oracle_agrees: true,
        status: "sampled",
        min_j1: None,
    };
    let mut min: Option<Q> = None;
    for p in base.iter().chain(adv.iter()) {
        let Some(jac) = transition_jacobian(cp, p) else {
            rep.skipped += 1;
            continue;
        };
        rep.checked += 1;
        if transition_jacobian_oracle(cp, p).as_ref() != Some(&jac) {
            rep.oracle_agrees = false;
        }
        let j1 = det(&block(&jac, 0..4));
        let full = det(&jac);
        let b = overlap_det(cp, p);
        let expect = &j1 * num::pow(b.recip(), cp.a - 4);
        rep.factorization_holds &= full == expect;
        rep.all_positive &= j1.is_positive() && full.is_positive();
        if min.as_ref().is_none_or(|m| &j1 < m) {
            min = Some(j1);
        }
    }
    rep.min_j1 = min.as_ref().map(fmt_q);
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Elementary {
    /// `σ` as a 1-based image list: `N·A` moves column `i` to column `σ(i)`.
    Permutation(Vec<usize>),
    Diagonal(Vec<Q>),
    /// `A = I + λ·E_{ij}` (1-based, `i ≠ j`).
    Transvection { i: usize, j: usize, lambda: Q },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Certificate {
    /// Transition determinant equals `|Ã|²`.
    Permutation { det_tilde: i8 },
    /// Product of transition entries is `root²`.
    Square { root: String },
    UnitTriangular,
}

#[derive(Clone, Debug, Serialize)]
pub struct ElementaryReport {
    pub sign: i8,
    pub determinant: String,
    pub source: (usize, usize),
    pub target: (usize, usize),
    pub certificate: Certificate,
}

fn elementary_matrix(e: &Elementary, a: usize) -> Result<Vec<Vec<Q>>> {
    let mut m = vec![vec![Q::zero(); a]; a];
    match e {
        Elementary::Permutation(s) => {
            let mut seen = vec![false; a];
            if s.len() != a || s.iter().any(|&v| v == 0 || v > a || std::mem::replace(&mut seen[v - 1], true)) {
                return Err(Error::Input("not a permutation".into()));
            }
            for (i, &v) in s.iter().enumerate() {
                m[i][v - 1] = Q::one();
            }
        }
        Elementary::Diagonal(d) => {
            if d.len() != a {
                return Err(Error::Input(format!("diagonal needs {a} entries")));
            }
            if d.iter().any(|x| x.is_zero()) {
                return Err(Error::Input("singular diagonal".into()));
            }
            for (i, x) in d.iter().enumerate() {
                m[i][i] = x.clone();
            }
        }
        Elementary::Transvection { i, j, lambda } => {
            if i == j || *i == 0 || *j == 0 || *i > a || *j > a || lambda.is_zero() {
                return Err(Error::Input("bad transvection".into()));
            }
            for (k, row) in m.iter_mut().enumerate() {
                row[k] = Q::one();
            }
            m[i - 1][j - 1] = lambda.clone();
        }
    }
    Ok(m)
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

/// Sign of the fiber transition `row(N) ↦ row(N·A)` for an elementary `A`.
pub fn elementary_case_sign(e: &Elementary, a: usize) -> Result<ElementaryReport> {
    if a % 2 == 1 || a < 4 {
        return Err(Error::Input(format!("a = {a} must be even and at least 4")));
    }
    let mat = elementary_matrix(e, a)?;
    let (source, target) = match e {
        Elementary::Permutation(s) => {
            let t = (s[0].min(s[1]), s[0].max(s[1]));
            ((1, 2), t)
        }
        Elementary::Diagonal(_) => ((1, 2), (1, 2)),
        Elementary::Transvection { j, .. } => {
            let p: Vec<usize> = (1..=a).filter(|k| k != j).take(2).collect();
            ((p[0], p[1]), (p[0], p[1]))
        }
    };
    // the transition is affine, so its Jacobian at any point is the matrix
    let pt = sample_points(a, 1).remove(0);
    let jac = jacobian_dual(a, source, &pt, Some(&mat), target).ok_or_else(|| Error::Structure("charts do not overlap".into()))?;
    let d = det(&jac);
    let certificate = match e {
        Elementary::Permutation(s) => {
            let src = free_columns(a, source);
            let tilde: Vec<usize> = src.iter().map(|&c| s[c]).collect();
            let st = perm_sign(&tilde);
            // |Ã|² = 1; a swapped target pair contributes the row swap twice
            if d != Q::one() {
                return Err(Error::Structure(format!("permutation transition determinant {}", fmt_q(&d))));
            }
            Certificate::Permutation { det_tilde: st }
        }
        Elementary::Diagonal(dd) => {
            let diag_only = jac.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, v)| i == j || v.is_zero()));
            let prod = (0..jac.len()).fold(Q::one(), |acc, i| acc * &jac[i][i]);
            let root = sqrt_q(&prod).ok_or_else(|| Error::Structure("diagonal product is not a square".into()))?;
            let half = (a - 2) / 2;
            let closed = dd[2..].iter().fold(Q::one(), |acc, x| acc * x) / num::pow(&dd[0] * &dd[1], half);
            if !diag_only || prod != d || root != closed.abs() {
                return Err(Error::Structure("diagonal transition mismatch".into()));
            }
            Certificate::Square { root: fmt_q(&root) }
        }
        Elementary::Transvection { .. } => {
            let k = jac.len();
            let unit = (0..k).all(|i| jac[i][i].is_one());
            let lower = (0..k).all(|i| (i + 1..k).all(|j| jac[i][j].is_zero()));
            let upper = (0..k).all(|i| (0..i).all(|j| jac[i][j].is_zero()));
            if !(unit && (lower || upper)) {
                return Err(Error::Structure("transvection transition not unit triangular".into()));
            }
            Certificate::UnitTriangular
        }
    };
    Ok(ElementaryReport { sign: if d.is_positive() { 1 } else { -1 }, determinant: fmt_q(&d), source, target, certificate })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EulerSign {
    pub a: usize,
    pub sign: i8,
    pub branch: &'static str,
    pub formula: i8,
}

/// Sign of the shuffle taking `(e₁,0),(0,e₁),…,(e_k,0),(0,e_k)` to
/// `(e₁,0),…,(e_k,0),(0,e₁),…,(0,e_k)` with `k = a − 2`.
pub fn euler_sign(a: usize) -> Result<EulerSign> {
    if a < 2 {
        return Err(Error::Input(format!("a = {a} must be at least 2")));
    }
    let k = a - 2;
    // position of the interleaved basis vector in the standard order
    let perm: Vec<usize> = (0..2 * k).map(|i| if i % 2 == 0 { i / 2 } else { k + i / 2 }).collect();
    let sign = perm_sign(&perm);
    let (branch, e) = if a % 2 == 0 { ("even", k / 2) } else { ("odd", k / 2) };
    let formula = if e % 2 == 0 { 1 } else { -1 };
    Ok(EulerSign { a, sign, branch, formula })
}

/// The full suite: transitions for every target pair, elementary cases, and
/// Euler signs up to `a_max`.
#[derive(Clone, Debug, Serialize)]
pub struct GrassmannSuite {
    pub transitions: Vec<TransitionReport>,
    pub elementary: Vec<ElementaryReport>,
    pub euler: Vec<EulerSign>,
    pub ok: bool,
}

pub fn target_pairs() -> Vec<(usize, usize)> {
    let mut v = vec![];
    for y in 1..=4 {
        for z in y + 1..=4 {
            v.push((y, z));
        }
    }
    v
}

pub fn run_suite(dims: &[usize], samples: usize, a_max: usize) -> Result<GrassmannSuite> {
    let mut transitions = vec![];
    for &a in dims {
        for t in target_pairs() {
            transitions.push(transition_positive(&ChartPair::new(a, (1, 2), t)?, samples)?);
        }
    }
    let mut elementary = vec![];
    for &a in dims {
        let mut swap: Vec<usize> = (1..=a).collect();
        swap.swap(0, 2);
        let cyc: Vec<usize> = (1..=a).map(|i| i % a + 1).collect();
        let diag: Vec<Q> = [2, 3, 5, 7, 11, 13, 17, 19].iter().cycle().take(a).map(|&p| q(p)).collect();
        for e in [
            Elementary::Permutation(swap),
            Elementary::Permutation(cyc),
            Elementary::Diagonal(diag),
            Elementary::Transvection { i: 1, j: 3, lambda: q(5) },
            Elementary::Transvection { i: a, j: 1, lambda: Q::new((-2).into(), 3.into()) },
        ] {
            elementary.push(elementary_case_sign(&e, a)?);
        }
    }
    let euler: Vec<EulerSign> = (2..=a_max).map(euler_sign).collect::<Result<_>>()?;
    let ok = transitions.iter().all(|t| t.ok()) && elementary.iter().all(|e| e.sign == 1) && euler.iter().all(|e| e.sign == e.formula);
    Ok(GrassmannSuite { transitions, elementary, euler, ok })
}

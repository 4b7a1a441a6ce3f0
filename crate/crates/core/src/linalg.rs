//! Exact linear algebra over the rationals: small dense kernels and a sparse
//! row-echelon eliminator used by every homology and cocycle solve.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};

use crate::Q;

pub fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: num::BigInt = n.trim().parse().ok()?;
            let d: num::BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Q::new(n, d))
        }
        None => Some(Q::from_integer(s.parse().ok()?)),
    }
}

/// Always `"p/q"`, with `q = 1` for integers, so output is byte-stable.
pub fn fmt_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn sign_of(x: &Q) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

/// Determinant by Gaussian elimination. Empty matrix has determinant 1.
pub fn det(m: &[Vec<Q>]) -> Q {
    let n = m.len();
    match n {
        0 => return Q::one(),
        1 => return m[0][0].clone(),
        2 => return &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        3 => {
            return &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
                - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
                + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
        }
        _ => {}
    }
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        let piv = a[c][c].clone();
        d *= &piv;
        for r in c + 1..n {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &piv;
            for k in c..n {
                let t = &f * &a[c][k];
                a[r][k] -= t;
            }
        }
    }
    d
}

/// Reduced row-echelon form in place; returns the pivot columns.
pub fn rref(a: &mut [Vec<Q>]) -> Vec<usize> {
    let rows = a.len();
    if rows == 0 {
        return vec![];
    }
    let cols = a[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(p, r);
        let inv = a[r][c].recip();
        for k in c..cols {
            if !a[r][k].is_zero() {
                a[r][k] *= &inv;
            }
        }
        for i in 0..rows {
            if i == r || a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone();
            for k in c..cols {
                if a[r][k].is_zero() {
                    continue;
                }
                let t = &f * &a[r][k];
                a[i][k] -= t;
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank_dense(m: &[Vec<Q>]) -> usize {
    let mut a = m.to_vec();
    rref(&mut a).len()
}

/// Sparse row: strictly increasing column indices, no explicit zeros.
pub type SparseRow = Vec<(usize, Q)>;

/// `row + f * other`, merged.
pub fn axpy(row: &SparseRow, f: &Q, other: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(row.len() + other.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < other.len() {
        let take_row = j >= other.len() || (i < row.len() && row[i].0 < other[j].0);
        let take_other = i >= row.len() || (j < other.len() && other[j].0 < row[i].0);
        if take_row {
            out.push(row[i].clone());
            i += 1;
        } else if take_other {
            out.push((other[j].0, f * &other[j].1));
            j += 1;
        } else {
            let v = &row[i].1 + f * &other[j].1;
            if !v.is_zero() {
                out.push((row[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Incremental sparse row-echelon form. Rows are inserted one at a time and
/// reduced against existing pivots (keyed by leading column); insertion order
/// fixes the elimination order, so results are deterministic.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    pivots: BTreeMap<usize, SparseRow>,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn reduce(&self, mut row: SparseRow) -> SparseRow {
        let mut start = 0;
        loop {
            let Some(k) = row[start..].iter().position(|(c, _)| self.pivots.contains_key(c)) else {
                return row;
            };
            let k = start + k;
            let (c, v) = row[k].clone();
            let p = &self.pivots[&c];
            let f = -(v / &p[0].1);
            row = axpy(&row, &f, p);
            // entries left of k carry no pivot and are untouched by the update
            start = k;
        }
    }

    /// Inserts a row; returns true if it increased the rank.
    pub fn insert(&mut self, row: SparseRow) -> bool {
        let r = self.reduce(row);
        if r.is_empty() {
            return false;
        }
        self.pivots.insert(r[0].0, r);
        true
    }

    pub fn leading_columns(&self) -> impl Iterator<Item = &usize> {
        self.pivots.keys()
    }

    /// Back substitution for a system whose right-hand side sits in column
    /// `rhs_col` (greater than every unknown). Free unknowns are set to zero.
    /// `None` if inconsistent.
    pub fn back_substitute(&self, rhs_col: usize) -> Option<BTreeMap<usize, Q>> {
        if self.pivots.contains_key(&rhs_col) {
            return None;
        }
        let mut x: BTreeMap<usize, Q> = BTreeMap::new();
        for (&p, row) in self.pivots.iter().rev() {
            let mut acc = Q::zero();
            for (c, v) in &row[1..] {
                if *c == rhs_col {
                    acc += v;
                } else if let Some(xc) = x.get(c) {
                    acc += v * xc;
                }
            }
            // row: a_p x_p + sum a_c x_c + b = 0  (b stored as coefficient of rhs column)
            let val = -acc / &row[0].1;
            if !val.is_zero() {
                x.insert(p, val);
            }
        }
        Some(x)
    }
}

impl Echelon {
    /// Back substitution with prescribed values for free unknowns (absent =
    /// 0) and an optional right-hand-side column.
    pub fn solve_with_free(&self, rhs_col: Option<usize>, free: &BTreeMap<usize, Q>) -> BTreeMap<usize, Q> {
        let mut x: BTreeMap<usize, Q> = free.clone();
        for (&p, row) in self.pivots.iter().rev() {
            let mut acc = Q::zero();
            for (c, v) in &row[1..] {
                if Some(*c) == rhs_col {
                    acc += v;
                } else if let Some(xc) = x.get(c) {
                    acc += v * xc;
                }
            }
            let val = -acc / &row[0].1;
            if !val.is_zero() {
                x.insert(p, val);
            }
        }
        x
    }
}

/// Solves `sum_j x_j col_j = b` for sparse columns (rows indexed arbitrarily).
/// Returns one solution (free variables zero) or `None`.
pub fn solve_columns(cols: &[SparseRow], b: &SparseRow) -> Option<Vec<Q>> {
    // transpose into rows: row index -> [(unknown, coeff)]
    let n = cols.len();
    let mut rows: BTreeMap<usize, SparseRow> = BTreeMap::new();
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col {
            rows.entry(*i).or_default().push((j, v.clone()));
        }
    }
    for (i, v) in b {
        rows.entry(*i).or_default().push((n, -v.clone()));
    }
    let mut ech = Echelon::new();
    for (_, r) in rows {
        ech.insert(r);
    }
    let x = ech.back_substitute(n)?;
    let mut out = vec![Q::zero(); n];
    for (j, v) in x {
        out[j] = v;
    }
    Some(out)
}

pub fn rank_columns(cols: &[SparseRow]) -> usize {
    let mut ech = Echelon::new();
    for c in cols {
        ech.insert(c.clone());
    }
    ech.rank()
}

/// Exact square root of a nonnegative rational, if it is a perfect square.
pub fn sqrt_q(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(Q::new(n, d))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_matches_expansion() {
        let m = vec![
            vec![q(2), q(0), q(1), q(3)],
            vec![q(1), q(1), q(0), q(2)],
            vec![q(0), q(4), q(1), q(1)],
            vec![q(5), q(1), q(2), q(0)],
        ];
        // value checked with an independent CAS
        assert_eq!(det(&m), q(-48));
    }

    #[test]
    fn sparse_solve_roundtrip() {
        // x0 + x1 = 3, x1 - x2 = 1, x0 + x2 = 2  -> rank 2, consistent
        let cols = vec![
            vec![(0, q(1)), (2, q(1))],
            vec![(0, q(1)), (1, q(1))],
            vec![(1, q(-1)), (2, q(1))],
        ];
        let b = vec![(0, q(3)), (1, q(1)), (2, q(2))];
        let x = solve_columns(&cols, &b).unwrap();
        assert_eq!(&x[0] + &x[1], q(3));
        assert_eq!(&x[1] - &x[2], q(1));
        assert_eq!(&x[0] + &x[2], q(2));
        assert_eq!(rank_columns(&cols), 2);
        let bad = vec![(0, q(3)), (1, q(1)), (2, q(5))];
        assert!(solve_columns(&cols, &bad).is_none());
    }

    #[test]
    fn rational_sqrt() {
        assert_eq!(sqrt_q(&qr(1225, 36)), Some(qr(35, 6)));
        assert_eq!(sqrt_q(&qr(2, 1)), None);
    }
}

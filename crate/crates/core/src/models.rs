//! Flat-model generators: the m×k torus, the regular n-gon circle, simplex
//! boundary spheres and the minimal real projective plane.

use std::collections::BTreeMap;

use crate::cellcx::{OrderedComplex, Simplex};
use crate::charts::FlatteningAtlas;
use crate::linalg::q;
use crate::{Error, Result};

/// Letters of the 3×3 torus, indexed by grid position `(x, y)`.
const TORUS3_LABELS: [((i64, i64), &str); 9] = [
    ((1, 2), "a"),
    ((1, 0), "b"),
    ((0, 2), "c"),
    ((0, 1), "d"),
    ((1, 1), "e"),
    ((2, 2), "f"),
    ((2, 0), "g"),
    ((0, 0), "h"),
    ((2, 1), "i"),
];

const TORUS_OFFSETS: [(i64, i64); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)];

/// Flat torus `ℝ²/(mℤ × kℤ)` triangulated by the unit grid with one diagonal
/// per square. The 3×3 case uses the letters `a…i`.
pub fn torus(m: usize, k: usize) -> Result<FlatteningAtlas> {
    if m < 3 || k < 3 {
        return Err(Error::Input(format!("torus grid {m}x{k} is too small (need at least 3x3)")));
    }
    let (mi, ki) = (m as i64, k as i64);
    let mut cells: Vec<((i64, i64), String)> = vec![];
    for x in 0..mi {
        for y in 0..ki {
            let label = if m == 3 && k == 3 {
                TORUS3_LABELS.iter().find(|(p, _)| *p == (x, y)).unwrap().1.to_string()
            } else {
                format!("v{x}_{y}")
            };
            cells.push(((x, y), label));
        }
    }
    cells.sort_by(|a, b| a.1.cmp(&b.1));
    let index: BTreeMap<(i64, i64), u32> = cells.iter().enumerate().map(|(i, (p, _))| (*p, i as u32)).collect();
    let at = |x: i64, y: i64| index[&(x.rem_euclid(mi), y.rem_euclid(ki))];
    let labels: Vec<String> = cells.iter().map(|c| c.1.clone()).collect();
    let mut facets: Vec<Simplex> = vec![];
    for x in 0..mi {
        for y in 0..ki {
            facets.push(vec![at(x, y), at(x + 1, y), at(x + 1, y + 1)]);
            facets.push(vec![at(x, y), at(x, y + 1), at(x + 1, y + 1)]);
        }
    }
    let complex = OrderedComplex::from_facets(labels, &facets)?;
    let mut coords = vec![BTreeMap::new(); cells.len()];
    for ((x, y), _) in &cells {
        let v = at(*x, *y) as usize;
        coords[v].insert(v as u32, vec![q(0), q(0)]);
        for (dx, dy) in TORUS_OFFSETS {
            coords[v].insert(at(x + dx, y + dy), vec![q(dx), q(dy)]);
        }
    }
    FlatteningAtlas::new(complex, 2, coords, Some(format!("torus {m}x{k}")))
}

/// Regular `n`-gon circle with unit edge coordinates.
pub fn circle(n: usize) -> Result<FlatteningAtlas> {
    if n < 3 {
        return Err(Error::Input(format!("circle needs at least 3 vertices, got {n}")));
    }
    let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let facets: Vec<Simplex> = (0..n as u32).map(|i| vec![i, (i + 1) % n as u32]).collect();
    let complex = OrderedComplex::from_facets(labels, &facets)?;
    let coords = (0..n)
        .map(|i| {
            BTreeMap::from([
                (i as u32, vec![q(0)]),
                (((i + 1) % n) as u32, vec![q(1)]),
                (((i + n - 1) % n) as u32, vec![q(-1)]),
            ])
        })
        .collect();
    FlatteningAtlas::new(complex, 1, coords, Some(format!("circle {n}")))
}

/// Boundary of the `(n+1)`-simplex, an `n`-sphere. In the chart of `v` the
/// other vertices sit at `e_1, …, e_n` and `−(e_1 + … + e_n)`. Every vertex
/// is extreme in its neighbours' charts, so these charts fail the weak-map
/// condition; the atlas exercises rejection and the stretch path.
pub fn sphere(n: usize) -> Result<FlatteningAtlas> {
    if n == 0 || n + 2 > crate::om::MAX_ELEMENTS {
        return Err(Error::Input(format!("sphere dimension {n} out of range")));
    }
    let labels: Vec<String> = (0..n + 2).map(|i| format!("v{i}")).collect();
    let all: Vec<u32> = (0..n as u32 + 2).collect();
    let facets: Vec<Simplex> = (0..n + 2).map(|i| all.iter().copied().filter(|&v| v as usize != i).collect()).collect();
    let complex = OrderedComplex::from_facets(labels, &facets)?;
    let coords = (0..n + 2)
        .map(|v| {
            let mut c = BTreeMap::from([(v as u32, vec![q(0); n])]);
            for (k, w) in all.iter().filter(|&&w| w as usize != v).enumerate() {
                let x = if k < n { (0..n).map(|j| q((j == k) as i64)).collect() } else { vec![q(-1); n] };
                c.insert(*w, x);
            }
            c
        })
        .collect();
    FlatteningAtlas::new(complex, n, coords, Some(format!("sphere {n}")))
}

/// Minimal 6-vertex triangulation of the real projective plane.
pub fn rp2() -> OrderedComplex {
    let facets: Vec<Simplex> = [
        [0, 1, 2],
        [0, 2, 3],
        [0, 3, 4],
        [0, 4, 5],
        [0, 5, 1],
        [1, 2, 4],
        [2, 3, 5],
        [3, 4, 1],
        [4, 5, 2],
        [5, 1, 3],
    ]
    .iter()
    .map(|f| f.to_vec())
    .collect();
    OrderedComplex::from_facets((1..=6).map(|i| i.to_string()).collect(), &facets).expect("valid RP2 facets")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_counts() {
        let t = torus(3, 3).unwrap();
        assert_eq!(t.complex.count(0), 9);
        assert_eq!(t.complex.count(1), 27);
        assert_eq!(t.complex.count(2), 18);
        assert_eq!(t.complex.labels[0], "a");
    }

    #[test]
    fn rp2_counts() {
        let x = rp2();
        assert_eq!((x.count(0), x.count(1), x.count(2)), (6, 15, 10));
    }
}

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use num::{Integer, ToPrimitive};
use pontcalc::charts::{build_cd, Flavor};
use pontcalc::om::{Sign, SignVector, VectorArrangement};
use pontcalc::{models, Q};

/// Integer vector with the same direction as a rational one.
fn integral(v: &[Q]) -> Vec<i128> {
    let l = v.iter().fold(num::BigInt::from(1), |acc, x| acc.lcm(x.denom()));
    v.iter().map(|x| (x.numer() * (&l / x.denom())).to_i128().expect("small coordinates")).collect()
}

fn dot(a: &[i128], b: &[i128]) -> i128 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Covectors `sign(y·v_e)` for `y` ranging over sums of at most `d` rays of
/// the central arrangement `{v_e^⊥}` in `ℝ^d` (`d ∈ {2, 3}`), plus `y = 0`.
/// Rays come from intersecting `d − 1` hyperplanes, so every face of an
/// essential arrangement contains one of these sums in its relative interior.
pub fn fan_covectors(arr: &VectorArrangement) -> BTreeSet<SignVector> {
    let vs: Vec<Vec<i128>> = arr.vectors.iter().map(|v| integral(v)).collect();
    let d = arr.dim;
    let mut rays: BTreeSet<Vec<i128>> = BTreeSet::new();
    let mut push = |r: Vec<i128>| {
        if r.iter().any(|&x| x != 0) {
            let g = r.iter().fold(0i128, |g, &x| g.gcd(&x.abs()));
            let r: Vec<i128> = r.iter().map(|x| x / g).collect();
            rays.insert(r.iter().map(|x| -x).collect());
            rays.insert(r);
        }
    };
    match d {
        2 => vs.iter().for_each(|v| push(vec![-v[1], v[0]])),
        3 => {
            for i in 0..vs.len() {
                for j in i + 1..vs.len() {
                    let (a, b) = (&vs[i], &vs[j]);
                    push(vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]);
                }
            }
        }
        _ => panic!("fan oracle needs dimension 2 or 3"),
    }
    let rays: Vec<Vec<i128>> = rays.into_iter().collect();
    let cov = |y: &[i128]| {
        SignVector::from_signs(&vs.iter().map(|v| Sign::from_i8(dot(y, v).signum() as i8)).collect::<Vec<_>>())
    };
    let mut out = BTreeSet::from([SignVector::ZERO]);
    let k = rays.len();
    for i in 0..k {
        out.insert(cov(&rays[i]));
        for j in i + 1..k {
            let s2: Vec<i128> = (0..d).map(|c| rays[i][c] + rays[j][c]).collect();
            out.insert(cov(&s2));
            if d == 3 {
                for l in j + 1..k {
                    let s3: Vec<i128> = (0..d).map(|c| s2[c] + rays[l][c]).collect();
                    out.insert(cov(&s3));
                }
            }
        }
    }
    out
}

/// Chart arrangements of the torus (both flavors) and circle CD structures.
pub fn corpus_arrangements() -> Vec<(String, VectorArrangement, usize)> {
    let mut out = vec![];
    let t = Arc::new(models::torus(3, 3).unwrap());
    let c = Arc::new(models::circle(6).unwrap());
    for (name, atlas, flavor) in [("torus", t.clone(), Flavor::Affine), ("torus", t, Flavor::Linear), ("circle", c, Flavor::Affine)] {
        let cd = build_cd(atlas, flavor, 3, 5).unwrap();
        for (i, cell) in cd.cells.iter().enumerate() {
            out.push((format!("{name} {flavor} cell {i}"), cell.arrangement.clone(), cell.chart.rank));
        }
    }
    out
}

//! Triangulation + atlas input files.
//!
//! ```json
//! { "complex": { "vertices": ["a", "b", ...], "simplices": [["a", "b", "c"], ...] },
//!   "atlas": { "a": { "a": ["0", "0"], "b": ["1", "0"], ... }, ... } }
//! ```
//! or a generator shorthand such as `{ "generator": { "kind": "torus", "m": 3, "k": 3 } }`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use pontcalc::cellcx::OrderedComplex;
use pontcalc::charts::FlatteningAtlas;
use pontcalc::linalg::{fmt_q, parse_q};
use pontcalc::{models, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexSpec {
    pub vertices: Vec<String>,
    pub simplices: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Generator {
    Torus { m: usize, k: usize },
    Circle { n: usize },
    Sphere { n: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complex: Option<ComplexSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atlas: Option<BTreeMap<String, BTreeMap<String, Vec<String>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
}

pub struct Loaded {
    pub atlas: FlatteningAtlas,
    pub name: String,
    /// SHA-256 of the raw input bytes.
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    format!("{:x}", Sha256::digest(bytes))
}

pub fn load(path: &Path) -> Result<Loaded> {
    let bytes = std::fs::read(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let file: InputFile = serde_json::from_slice(&bytes).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let atlas = build(&file)?;
    let name = file.name.clone().or(atlas.tag.clone()).unwrap_or_else(|| path.display().to_string());
    Ok(Loaded { atlas, name, sha256: sha256_hex(&bytes) })
}

pub fn build(file: &InputFile) -> Result<FlatteningAtlas> {
    match (&file.generator, &file.complex, &file.atlas) {
        (Some(g), None, None) => match *g {
            Generator::Torus { m, k } => models::torus(m, k),
            Generator::Circle { n } => models::circle(n),
            Generator::Sphere { n } => models::sphere(n),
        },
        (None, Some(c), Some(a)) => from_spec(c, a),
        _ => Err(Error::Input("give either a generator or both complex and atlas".into())),
    }
}

fn from_spec(c: &ComplexSpec, atlas: &BTreeMap<String, BTreeMap<String, Vec<String>>>) -> Result<FlatteningAtlas> {
    let mut labels = c.vertices.clone();
    labels.sort();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Input("duplicate vertex label".into()));
    }
    let index: HashMap<&str, u32> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect();
    let lookup = |l: &str| index.get(l).copied().ok_or_else(|| Error::Input(format!("unknown vertex {l:?}")));
    let mut facets = Vec::with_capacity(c.simplices.len());
    for s in &c.simplices {
        let mut f: Vec<u32> = s.iter().map(|l| lookup(l)).collect::<Result<_>>()?;
        f.sort();
        if f.is_empty() || f.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Input(format!("bad simplex {s:?}")));
        }
        facets.push(f);
    }
    let complex = OrderedComplex::from_facets(labels.clone(), &facets)?;
    let n = complex.dim();
    let mut coords = vec![BTreeMap::new(); labels.len()];
    for (v, chart) in atlas {
        let vi = lookup(v)?;
        for (w, xs) in chart {
            let wi = lookup(w)?;
            let x: Vec<_> = xs.iter().map(|s| parse_q(s).ok_or_else(|| Error::Input(format!("bad rational {s:?}")))).collect::<Result<_>>()?;
            if x.len() != n {
                return Err(Error::Input(format!("coordinates of {w} in chart {v} need {n} entries")));
            }
            coords[vi as usize].insert(wi, x);
        }
    }
    FlatteningAtlas::new(complex, n, coords, None)
}

/// Explicit form of an atlas, the inverse of [`build`].
pub fn to_input(atlas: &FlatteningAtlas, name: Option<String>) -> InputFile {
    let labels = &atlas.complex.labels;
    let simplices = atlas.complex.simplices(atlas.n).iter().map(|s| s.iter().map(|&v| labels[v as usize].clone()).collect()).collect();
    let mut charts = BTreeMap::new();
    for (v, c) in atlas.coords.iter().enumerate() {
        let chart = c.iter().map(|(w, x)| (labels[*w as usize].clone(), x.iter().map(fmt_q).collect())).collect();
        charts.insert(labels[v].clone(), chart);
    }
    InputFile { name, complex: Some(ComplexSpec { vertices: labels.clone(), simplices }), atlas: Some(charts), generator: None }
}

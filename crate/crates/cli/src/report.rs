//! JSON forms of chains, cochains and local systems. Rationals are `"p/q"`
//! strings (or plain integers), simplices are vertex-index lists.

use pontcalc::cellcx::{Chain, Cochain, LocalSystem, OrderedComplex, Simplex};
use pontcalc::linalg::{fmt_q, parse_q};
use pontcalc::{Error, Result, Q};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainJson {
    /// Which complex the simplices index into: `"x"`, `"cx_x"` or `"cx_y"`.
    pub complex: String,
    pub degree: usize,
    /// Negative edges of the coefficient system.
    pub local_system: Vec<(u32, u32)>,
    pub terms: Vec<(Simplex, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CochainJson {
    pub complex: String,
    pub degree: usize,
    pub local_system: Vec<(u32, u32)>,
    pub values: Vec<(Simplex, String)>,
}

pub fn chain_json(complex: &str, c: &Chain, sys: &LocalSystem) -> ChainJson {
    ChainJson {
        complex: complex.into(),
        degree: c.degree,
        local_system: sys.negative_edges(),
        terms: c.terms.iter().map(|(s, v)| (s.clone(), fmt_q(v))).collect(),
    }
}

pub fn cochain_json(complex: &str, c: &Cochain, sys: &LocalSystem) -> CochainJson {
    CochainJson {
        complex: complex.into(),
        degree: c.degree,
        local_system: sys.negative_edges(),
        values: c.values.iter().map(|(s, v)| (s.clone(), fmt_q(v))).collect(),
    }
}

fn parse(s: &str) -> Result<Q> {
    parse_q(s).ok_or_else(|| Error::Input(format!("bad rational {s:?}")))
}

/// Reloads a cochain and re-validates it against `cx`.
pub fn load_cochain(j: &CochainJson, cx: &OrderedComplex) -> Result<(Cochain, LocalSystem)> {
    let mut c = Cochain::zero(j.degree);
    for (s, v) in &j.values {
        c.set(s.clone(), parse(v)?);
    }
    c.validate(cx)?;
    let sys = LocalSystem::new(cx, j.local_system.iter().copied())?;
    Ok((c, sys))
}

pub fn load_chain(j: &ChainJson, cx: &OrderedComplex) -> Result<(Chain, LocalSystem)> {
    let mut c = Chain::zero(j.degree);
    for (s, v) in &j.terms {
        c.add(s.clone(), parse(v)?);
    }
    c.validate(cx)?;
    let sys = LocalSystem::new(cx, j.local_system.iter().copied())?;
    Ok((c, sys))
}

/// Stable SHA-256 of a serializable value's compact JSON.
pub fn digest<T: Serialize>(v: &T) -> String {
    crate::input::sha256_hex(&serde_json::to_vec(v).expect("serializable"))
}

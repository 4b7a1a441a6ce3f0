//! Stage orchestration: charts → associated posets → Chern cocycle → fixing
//! cycle. Each stage records its own failure name.

use std::sync::Arc;

use crate::assoc::{self, AssocPoset};
use crate::cellcx::OrderedComplex;
use crate::charts::{build_cd, CDManifold, FlatteningAtlas, Flavor};
use crate::chern::{self, ChernData};
use crate::pont::{self, BaseData};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub flavor: Flavor,
    pub refine_cap: usize,
    pub samples: usize,
    pub stretch: bool,
    /// Largest `|Y|` attempted before giving up with resource diagnostics.
    pub max_y: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { flavor: Flavor::Affine, refine_cap: 3, samples: 5, stretch: false, max_y: 200_000 }
    }
}

/// Stage failure tagged with the stage that raised it.
#[derive(Debug, Clone)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {}

pub type StageResult<T> = std::result::Result<T, StageError>;

fn at<T>(stage: &'static str, r: Result<T>) -> StageResult<T> {
    r.map_err(|error| StageError { stage, error })
}

/// Upper estimate of the associated-poset work; manifolds of dimension ≥ 3
/// are stretch-scale.
pub fn resource_notice(atlas: &FlatteningAtlas) -> Option<String> {
    let n = atlas.n;
    if n < 3 {
        return None;
    }
    let tops = atlas.complex.count(n);
    Some(format!(
        "dimension {n} with {} vertices and {tops} top simplices: rank-{} charts have sampled rank-2 quotients and the order complex of Y has dimension up to {}; rerun with --stretch to attempt it",
        atlas.complex.num_vertices(),
        n + 1,
        3 * n - 2
    ))
}

pub fn charts_stage(atlas: Arc<FlatteningAtlas>, opt: &Options) -> StageResult<CDManifold> {
    if !opt.stretch {
        if let Some(msg) = resource_notice(&atlas) {
            return Err(StageError { stage: "charts", error: Error::Resource(msg) });
        }
    }
    at("charts", build_cd(atlas, opt.flavor, opt.refine_cap, opt.samples))
}

pub struct Posets {
    pub ap: AssocPoset,
    pub cy: OrderedComplex,
}

pub fn assoc_stage(cd: &CDManifold, opt: &Options) -> StageResult<Posets> {
    let ap = at("assoc", assoc::build_restricted_yz(cd))?;
    if ap.y.len() > opt.max_y {
        return Err(StageError { stage: "assoc", error: Error::Resource(format!("|Y| = {} exceeds the limit {}; |Z| = {}", ap.y.len(), opt.max_y, ap.z.len())) });
    }
    let n = cd.atlas.n;
    let (deg, _) = at("assoc", pont::fixing_degree(opt.flavor, n))?;
    let cy = ap.y_complex(deg + 1);
    Ok(Posets { ap, cy })
}

pub fn chern_stage(p: &Posets) -> StageResult<ChernData> {
    at("chern", chern::chern(&p.ap, &p.cy))
}

pub fn base_stage(cd: &CDManifold) -> StageResult<BaseData> {
    at("fix", pont::base_data(&cd.atlas.complex, cd.atlas.n))
}

/// Everything up to the fixing-cycle equations.
pub struct Prepared {
    pub cd: CDManifold,
    pub posets: Posets,
    pub chern: ChernData,
    pub base: BaseData,
}

pub fn prepare(atlas: Arc<FlatteningAtlas>, opt: &Options) -> StageResult<Prepared> {
    let cd = charts_stage(atlas, opt)?;
    let posets = assoc_stage(&cd, opt)?;
    let chern = chern_stage(&posets)?;
    let base = base_stage(&cd)?;
    Ok(Prepared { cd, posets, chern, base })
}

impl Prepared {
    pub fn setup(&self) -> StageResult<pont::FixingSetup<'_>> {
        at("fix", pont::FixingSetup::new(&self.base, &self.posets.ap, &self.posets.cy, &self.chern.omega, &self.chern.orient.sys, self.cd.flavor))
    }
}

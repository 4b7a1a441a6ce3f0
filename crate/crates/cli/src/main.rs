mod input;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use pontcalc::assoc::{fibers_are_polygons, quasifib_check};
use pontcalc::cellcx::{boundary, coboundary, coboundary_witness, Chain, Homology};
use pontcalc::charts::{validate_chart, CDManifold, Flavor};
use pontcalc::chern;
use pontcalc::grassmann;
use pontcalc::pipeline::{self, Options, Posets, Prepared, StageError};
use pontcalc::pont::{self, FixingOutcome, FixingSetup};
use pontcalc::{Error, Q};
use serde_json::{json, Value};

use report::{chain_json, cochain_json, digest, CochainJson};

/// Seed for the second, independent choice of fiber orientations.
const RECHOICE_SEED: u64 = 0x0c1e_7a11;

#[derive(Parser)]
#[command(name = "pontcalc", version, about = "Combinatorial Pontrjagin classes from oriented-matroid charts")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Triangulation + atlas JSON, or a generator shorthand.
    input: PathBuf,
    #[arg(long)]
    flavor: Flavor,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    refine_cap: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    /// Allow stretch-scale inputs (dimension ≥ 3).
    #[arg(long)]
    stretch: bool,
    /// Write the JSON bundle here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn options(&self) -> Options {
        Options {
            flavor: self.flavor,
            refine_cap: self.refine_cap as usize,
            samples: self.samples as usize,
            stretch: self.stretch,
            ..Options::default()
        }
    }
}

#[derive(Args, Clone)]
struct VerifyArgs {
    /// Restrict the invariant suites to this input.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "affine")]
    flavor: Flavor,
    /// Check δΩ = 0 for this cochain file (a cochain or a chern/pipeline bundle).
    #[arg(long, requires = "input")]
    omega: Option<PathBuf>,
    /// Extra dimensions for the Euler-sign check; odd values use the odd branch.
    #[arg(long = "euler-a")]
    euler_a: Vec<usize>,
    /// Transition samples per chart pair.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-cell charts, validation verdicts and the weak-map audit.
    Charts(RunArgs),
    /// Associated posets Y/Z and the quasifibration check.
    Assoc(RunArgs),
    /// The twisted Chern cocycle Ω.
    Chern(RunArgs),
    /// Fixing-cycle search and verification.
    Fix(RunArgs),
    /// Duals of the inverse Pontrjagin classes.
    Pont {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "i", value_delimiter = ',', default_value = "0,1")]
        i: Vec<usize>,
    },
    /// Every stage in order.
    Pipeline {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "i", value_delimiter = ',', default_value = "0,1")]
        i: Vec<usize>,
    },
    /// Property suites: Grassmann orientation checks and pipeline invariants.
    Verify(VerifyArgs),
}

struct Failure {
    stage: &'static str,
    error: Error,
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure { stage: e.stage, error: e.error }
    }
}

fn fail(stage: &'static str) -> impl Fn(Error) -> Failure {
    move |error| Failure { stage, error }
}

type Run<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(t) = std::env::var("PONTCALC_THREADS") {
        match t.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => return report_failure(Failure { stage: "config", error: Error::Input(format!("PONTCALC_THREADS must be a positive integer, got {t:?}")) }, None),
        }
    }
    let out = match &cli.cmd {
        Cmd::Charts(a) | Cmd::Assoc(a) | Cmd::Chern(a) | Cmd::Fix(a) | Cmd::Pont { run: a, .. } | Cmd::Pipeline { run: a, .. } => a.out.clone(),
        Cmd::Verify(v) => v.out.clone(),
    };
    let result = match &cli.cmd {
        Cmd::Charts(a) => cmd_charts(a),
        Cmd::Assoc(a) => cmd_assoc(a),
        Cmd::Chern(a) => cmd_chern(a),
        Cmd::Fix(a) => cmd_fix(a),
        Cmd::Pont { run, i } => cmd_pont(run, i, false),
        Cmd::Pipeline { run, i } => cmd_pont(run, i, true),
        Cmd::Verify(v) => cmd_verify(v),
    };
    match result {
        Ok((bundle, ok)) => {
            if let Err(e) = emit(out.as_deref(), &bundle) {
                return report_failure(Failure { stage: "output", error: Error::Input(e.to_string()) }, None);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => report_failure(f, out.as_deref()),
    }
}

fn emit(out: Option<&Path>, v: &Value) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(v).expect("json") + "\n";
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_failure(f: Failure, out: Option<&Path>) -> ExitCode {
    let kind = match &f.error {
        Error::Input(_) => "input",
        Error::Resource(_) => "resource",
        Error::Degree(_) => "degree",
        Error::Refinement { .. } => "refinement",
        _ => "structure",
    };
    let body = json!({ "error": { "stage": f.stage, "kind": kind, "message": f.error.to_string() } });
    eprintln!("pontcalc: {} failed: {}", f.stage, f.error);
    let _ = emit(None, &body);
    if let Some(p) = out {
        let _ = emit(Some(p), &body);
    }
    ExitCode::from(if kind == "input" { 2 } else { 1 })
}

struct Timer(Instant);

impl Timer {
    fn lap(&self, what: &str) {
        eprintln!("[{:>8.2}s] {what}", self.0.elapsed().as_secs_f64());
    }
}

fn load(a: &RunArgs) -> Run<(input::Loaded, Value)> {
    let l = input::load(&a.input).map_err(fail("input"))?;
    let head = json!({
        "name": l.name,
        "sha256": l.sha256,
        "vertices": l.atlas.complex.num_vertices(),
        "dimension": l.atlas.n,
        "options": { "flavor": a.flavor, "refine_cap": a.refine_cap, "samples": a.samples, "stretch": a.stretch },
    });
    Ok((l, head))
}

fn charts_section(cd: &CDManifold) -> Value {
    let labels = &cd.atlas.complex.labels;
    let m = labels.len();
    let cells: Vec<Value> = cd
        .cells
        .iter()
        .map(|c| {
            let r = validate_chart(&c.chart, &c.carrier, &cd.atlas, cd.flavor);
            let mut cov: Vec<String> = c.chart.covectors().iter().map(|x| x.render(m)).collect();
            cov.sort();
            json!({
                "carrier": c.carrier.iter().map(|&v| &labels[v as usize]).collect::<Vec<_>>(),
                "dim": c.dim,
                "rank": c.chart.rank,
                "covectors": cov,
                "valid": r.valid,
                "violations": r.violations,
            })
        })
        .collect();
    let audit = cd.validate();
    json!({
        "level": cd.level,
        "cell_count": cd.cells.len(),
        "all_valid": cells.iter().all(|c| c["valid"] == true),
        "weak_map_audit": {
            "face_pairs": cd.faces.iter().map(|f| f.len()).sum::<usize>(),
            "ok": audit.is_ok(),
            "error": audit.err().map(|e| e.to_string()),
        },
        "cells": cells,
    })
}

fn assoc_section(p: &Posets) -> Value {
    let q = quasifib_check(&p.ap);
    let mut by_dim = vec![0usize; 4];
    for e in &p.ap.y {
        by_dim[e.delta.len() - 1] += 1;
    }
    while by_dim.last() == Some(&0) {
        by_dim.pop();
    }
    json!({
        "y": p.ap.y.len(),
        "z": p.ap.z.len(),
        "y_by_carrier_dim": by_dim,
        "exhaustive": p.ap.exhaustive,
        "fibers_polygons": fibers_are_polygons(&p.ap),
        "quasifibration": match q {
            Ok(()) => json!({ "pass": true }),
            Err(v) => json!({ "pass": false, "z": v.z, "y": v.y, "upward": v.upward }),
        },
        "cx_y_simplices": (0..=p.cy.dim()).map(|d| p.cy.count(d)).collect::<Vec<_>>(),
    })
}

fn chern_section(p: &Posets, data: &chern::ChernData) -> Run<Value> {
    let cy = &p.cy;
    let sys = &data.orient.sys;
    let oracle = chern::check_theta_oracle(&data.theta);
    let delta = chern::delta_omega_failures(cy, &data.omega, sys);
    let dep = chern::lift_dependence(cy, &data.theta, &data.orient, &data.omega);
    let (o, om2) = chern::omega_rechosen(cy, data, RECHOICE_SEED).map_err(fail("chern"))?;
    let diff = data.omega.minus(&om2);
    let witness = coboundary_witness(&diff, cy, sys);
    let witness_ok = witness.as_ref().is_some_and(|w| w.is_zero() && diff.is_zero() || coboundary(w, cy, sys).minus(&diff).is_zero());
    let omega = cochain_json("cx_y", &data.omega, sys);
    Ok(json!({
        "edge_shapes": data.shapes.shapes.len(),
        "theta_problems": data.theta.problems.len(),
        "theta_oracle": match &oracle {
            Ok(n) => json!({ "agree": true, "problems": n }),
            Err(e) => json!({ "agree": false, "error": e.to_string() }),
        },
        "negative_fiber_edges": sys.negative_edges().len(),
        "delta_omega_failures": delta.len(),
        "lift_dependence": dep.len(),
        "omega_nonzero": data.omega.values.len(),
        "omega_sha256": digest(&omega),
        "rechoice": {
            "seed": RECHOICE_SEED,
            "flipped": o.iter().filter(|&&s| s < 0).count(),
            "difference_nonzero": diff.values.len(),
            "witness_found": witness.is_some(),
            "witness_verified": witness_ok,
            "witness": witness.map(|w| cochain_json("cx_y", &w, sys)),
        },
        "omega": omega,
    }))
}

struct FixOutput {
    section: Value,
    phi: Option<Chain>,
    ok: bool,
}

fn fix_section(setup: &FixingSetup) -> Run<FixOutput> {
    let r = pont::find_fixing_cycle(setup, false).map_err(fail("fix"))?;
    let mut v = json!({
        "outcome": r.outcome,
        "degree": setup.degree,
        "omega_exponent": setup.exponent,
        "exhaustive": setup.exhaustive,
        "stats": r.stats,
        "normal_simplex": r.normal_simplex,
    });
    let Some(phi) = r.phi else {
        return Ok(FixOutput { section: v, phi: None, ok: r.outcome != FixingOutcome::Found });
    };
    let check = pont::verify_fixing(setup, &phi).map_err(fail("fix"))?;
    let second = pont::find_fixing_cycle(setup, true).map_err(fail("fix"))?;
    let cmp = match &second.phi {
        Some(p2) => {
            let (c, w) = pont::compare_fixing_cycles(setup, &phi, p2).map_err(fail("fix"))?;
            json!({ "outcome": second.outcome, "comparison": c, "witness_terms": w.map(|w| w.terms.len()) })
        }
        None => json!({ "outcome": second.outcome }),
    };
    let pj = chain_json("cx_y", &phi, &setup.phi_sys);
    v["verify"] = json!(check);
    v["second_solve"] = cmp;
    v["phi_sha256"] = json!(digest(&pj));
    v["phi"] = json!(pj);
    Ok(FixOutput { section: v, ok: check.ok(), phi: Some(phi) })
}

fn pont_section(setup: &FixingSetup, omega: &pontcalc::cellcx::Cochain, phi: &Chain, is: &[usize]) -> Run<(Value, bool)> {
    let base = setup.base;
    let n = base.n;
    let mut ok = true;
    let mut out = vec![];
    for &i in is {
        let c = pont::pontrjagin_dual(setup, omega, i, phi).map_err(fail("pont"))?;
        let mut v = json!({
            "i": i,
            "degree": if 4 * i <= n { json!(n - 4 * i) } else { Value::Null },
            "omega_exponent": setup.exponent + 2 * i,
            "zero": c.is_zero(),
        });
        if 4 * i <= n && c.degree == 0 {
            let total = c.terms.values().fold(Q::from_integer(0.into()), |a, x| a + x);
            v["total_coefficient"] = json!(pontcalc::linalg::fmt_q(&total));
        }
        if i == 0 {
            let h = c == base.fclass_sd || Homology::new(&base.cx_x, &base.d_cx).homologous(&c, &base.fclass_sd).is_some();
            v["homologous_to_fundamental"] = json!(h);
            ok &= h;
        }
        v["chain"] = json!(chain_json("cx_x", &c, &base.d_cx));
        out.push(v);
    }
    Ok((json!({ "cx_x_vertices": base.cx_x.labels, "duals": out }), ok))
}

fn cmd_charts(a: &RunArgs) -> Run<(Value, bool)> {
    let t = Timer(Instant::now());
    let (l, head) = load(a)?;
    pontcalc::cellcx::fundamental_class(&l.atlas.complex, l.atlas.n).map_err(fail("charts"))?;
    let cd = pipeline::charts_stage(Arc::new(l.atlas), &a.options())?;
    t.lap(&format!("CD structure: level {}, {} cells", cd.level, cd.cells.len()));
    let s = charts_section(&cd);
    let ok = s["all_valid"] == true && s["weak_map_audit"]["ok"] == true;
    Ok((json!({ "input": head, "charts": s }), ok))
}

fn posets(a: &RunArgs) -> Run<(Value, CDManifold, Posets, Timer)> {
    let t = Timer(Instant::now());
    let (l, head) = load(a)?;
    let opt = a.options();
    let cd = pipeline::charts_stage(Arc::new(l.atlas), &opt)?;
    t.lap(&format!("CD structure: level {}, {} cells", cd.level, cd.cells.len()));
    let p = pipeline::assoc_stage(&cd, &opt)?;
    t.lap(&format!("Y {} / Z {} (exhaustive: {})", p.ap.y.len(), p.ap.z.len(), p.ap.exhaustive));
    Ok((head, cd, p, t))
}

fn cmd_assoc(a: &RunArgs) -> Run<(Value, bool)> {
    let (head, _, p, t) = posets(a)?;
    let s = assoc_section(&p);
    t.lap("quasifibration check");
    let ok = s["quasifibration"]["pass"] == true && s["fibers_polygons"] == true;
    Ok((json!({ "input": head, "assoc": s }), ok))
}

fn cmd_chern(a: &RunArgs) -> Run<(Value, bool)> {
    let (head, _, p, t) = posets(a)?;
    let data = pipeline::chern_stage(&p)?;
    let s = chern_section(&p, &data)?;
    t.lap(&format!("Ω: {} nonzero values, δΩ failures {}", s["omega_nonzero"], s["delta_omega_failures"]));
    let ok = s["delta_omega_failures"] == 0 && s["theta_oracle"]["agree"] == true && s["rechoice"]["witness_verified"] == true;
    Ok((json!({ "input": head, "assoc": assoc_section(&p), "chern": s }), ok))
}

fn prepared(a: &RunArgs) -> Run<(Value, Prepared, Timer)> {
    let (head, cd, posets, t) = posets(a)?;
    let chern = pipeline::chern_stage(&posets)?;
    t.lap(&format!("Ω: {} nonzero values", chern.omega.values.len()));
    let base = pipeline::base_stage(&cd)?;
    Ok((head, Prepared { cd, posets, chern, base }, t))
}

fn cmd_fix(a: &RunArgs) -> Run<(Value, bool)> {
    let (head, prep, t) = prepared(a)?;
    let setup = prep.setup()?;
    let f = fix_section(&setup)?;
    t.lap(&format!("fixing cycle: {}", f.section["outcome"]));
    Ok((json!({ "input": head, "fix": f.section }), f.ok))
}

fn cmd_pont(a: &RunArgs, is: &[usize], full: bool) -> Run<(Value, bool)> {
    let (head, prep, t) = prepared(a)?;
    let setup = prep.setup()?;
    let f = fix_section(&setup)?;
    t.lap(&format!("fixing cycle: {}", f.section["outcome"]));
    let mut bundle = json!({ "input": head, "fix": f.section });
    let mut ok = f.ok;
    if let Some(phi) = &f.phi {
        let (s, pok) = pont_section(&setup, &prep.chern.omega, phi, is)?;
        t.lap("Pontrjagin duals");
        bundle["pont"] = s;
        ok &= pok;
    } else {
        bundle["pont"] = json!({ "skipped": "no fixing cycle" });
    }
    if full {
        bundle["charts"] = charts_section(&prep.cd);
        bundle["assoc"] = assoc_section(&prep.posets);
        let c = chern_section(&prep.posets, &prep.chern)?;
        ok &= c["delta_omega_failures"] == 0 && c["theta_oracle"]["agree"] == true;
        bundle["chern"] = c;
        ok &= bundle["assoc"]["quasifibration"]["pass"] == true;
        t.lap("bundle assembled");
    }
    Ok((bundle, ok))
}

fn corpus_check(name: &str, atlas: pontcalc::charts::FlatteningAtlas, flavor: Flavor) -> Run<Value> {
    let opt = Options { flavor, ..Options::default() };
    let again = input::build(&input::to_input(&atlas, None)).map_err(fail("verify"))?;
    let input_round_trip = again.complex.labels == atlas.complex.labels && again.coords == atlas.coords && again.complex.count(atlas.n) == atlas.complex.count(atlas.n);
    let (_, fclass) = pontcalc::cellcx::fundamental_class(&atlas.complex, atlas.n).map_err(fail("verify"))?;
    let prep = pipeline::prepare(Arc::new(atlas), &opt)?;
    let setup = prep.setup()?;
    let r = pont::find_fixing_cycle(&setup, false).map_err(fail("verify"))?;
    let mut chain_round_trip = false;
    let fixing = match &r.phi {
        Some(phi) => {
            let j: report::ChainJson = serde_json::from_str(&serde_json::to_string(&chain_json("cx_y", phi, &setup.phi_sys)).expect("json")).expect("json");
            chain_round_trip = report::load_chain(&j, &prep.posets.cy).is_ok_and(|(c, sys)| &c == phi && sys.negative_edges() == setup.phi_sys.negative_edges());
            let ok = pont::verify_fixing(&setup, phi).map_err(fail("verify"))?.ok();
            let p0 = pont::pontrjagin_dual(&setup, &prep.chern.omega, 0, phi).map_err(fail("verify"))? == prep.base.fclass_sd;
            let p1 = pont::pontrjagin_dual(&setup, &prep.chern.omega, 1, phi).map_err(fail("verify"))?.is_zero();
            ok && p0 && p1
        }
        None => false,
    };
    let checks = json!({
        "input_round_trip": input_round_trip,
        "chain_round_trip": chain_round_trip,
        "fundamental_cycle": boundary(&fclass, &prep.base.d_x).is_zero(),
        "quasifibration": quasifib_check(&prep.posets.ap).is_ok(),
        "fibers_polygons": fibers_are_polygons(&prep.posets.ap),
        "theta_oracle": chern::check_theta_oracle(&prep.chern.theta).is_ok(),
        "delta_omega": chern::delta_omega_failures(&prep.posets.cy, &prep.chern.omega, &prep.chern.orient.sys).is_empty(),
        "fixing_cycle_and_duals": fixing,
    });
    let ok = checks.as_object().unwrap().values().all(|v| v == true);
    Ok(json!({ "name": name, "flavor": flavor, "checks": checks, "ok": ok }))
}

fn omega_check(a: &VerifyArgs, path: &Path) -> Run<Value> {
    let run = RunArgs { input: a.input.clone().unwrap(), flavor: a.flavor, refine_cap: 3, samples: 5, stretch: false, out: None };
    let (_, _, p, _) = posets(&run)?;
    let text = std::fs::read(path).map_err(|e| Failure { stage: "verify", error: Error::Input(format!("{}: {e}", path.display())) })?;
    let v: Value = serde_json::from_slice(&text).map_err(|e| Failure { stage: "verify", error: Error::Input(e.to_string()) })?;
    let v = if v.get("chern").is_some() { v["chern"]["omega"].clone() } else { v };
    let j: CochainJson = serde_json::from_value(v).map_err(|e| Failure { stage: "verify", error: Error::Input(format!("not a cochain: {e}")) })?;
    let (om, sys) = report::load_cochain(&j, &p.cy).map_err(fail("verify"))?;
    let bad = chern::delta_omega_failures(&p.cy, &om, &sys);
    Ok(json!({
        "file": path.display().to_string(),
        "degree": om.degree,
        "delta_failures": bad.len(),
        "first_failure": bad.first(),
        "ok": om.degree == 2 && bad.is_empty(),
    }))
}

fn cmd_verify(a: &VerifyArgs) -> Run<(Value, bool)> {
    let t = Timer(Instant::now());
    let suite = grassmann::run_suite(&[4, 6, 8], a.samples as usize, 12).map_err(fail("verify"))?;
    t.lap(&format!("Grassmann suite: {}", if suite.ok { "pass" } else { "FAIL" }));
    let euler: Vec<_> = a.euler_a.iter().map(|&x| grassmann::euler_sign(x)).collect::<Result<_, _>>().map_err(fail("verify"))?;
    let mut ok = suite.ok && euler.iter().all(|e| e.sign == e.formula);
    let mut corpus = vec![];
    match &a.input {
        Some(p) => {
            let l = input::load(p).map_err(fail("input"))?;
            corpus.push(corpus_check(&l.name, l.atlas, a.flavor)?);
        }
        None => {
            let m = |r: pontcalc::Result<_>| r.map_err(fail("verify"));
            corpus.push(corpus_check("circle 6", m(pontcalc::models::circle(6))?, Flavor::Affine)?);
            corpus.push(corpus_check("torus 3x3", m(pontcalc::models::torus(3, 3))?, Flavor::Affine)?);
            corpus.push(corpus_check("torus 3x3", m(pontcalc::models::torus(3, 3))?, Flavor::Linear)?);
        }
    }
    t.lap("invariant suites");
    ok &= corpus.iter().all(|c| c["ok"] == true);
    let mut bundle = json!({ "grassmann": suite, "euler": euler, "corpus": corpus });
    if let Some(p) = &a.omega {
        let c = omega_check(a, p)?;
        t.lap(&format!("Ω file: {} δ failures", c["delta_failures"]));
        ok &= c["ok"] == true;
        bundle["omega_file"] = c;
    }
    bundle["ok"] = json!(ok);
    Ok((bundle, ok))
}

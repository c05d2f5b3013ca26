use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};
use soslift_core::glyph::{
    component_certificate, e3_sparse_bound, error_components, kappa_convergence_study, Certificate, NormParams,
};
use soslift_core::instances::{sample_gaussian_matrix, sample_goe, sample_regular_graph};
use soslift_core::moments::TOL_PSD;
use soslift_core::pseudocal::{pseudocal_coefficient, MultiIndex};
use soslift_core::report::{cut_summary, objective_summary, ramanujan_ratio, P_STAR};
use soslift_core::seeds::{default_sk_k, seed_boolean_vector, seed_maxcut, seed_sk};
use soslift_core::{
    check_sos2_feasible, check_sos4_feasible, cholesky_rows, lift_implicit, linalg, Degree2Solution, LiftReport,
};

use crate::artifacts::{self, resolve, Instance, LiftedFile};
use crate::{
    CertifyArgs, Cli, Command, ConvergeArgs, GenArgs, LiftArgs, PseudocalArgs, ReportArgs, SeedBvsArgs,
    SeedMaxcutArgs, SeedSkArgs, VerificationFailed, VerifyArgs,
};

pub fn run(cli: &Cli) -> Result<()> {
    let config = serde_json::to_value(cli)?;
    let dir = cli.dir.as_path();
    match &cli.command {
        Command::GenGoe(a) => gen(dir, "goe", a, &config),
        Command::GenRegular(a) => gen(dir, "regular", a, &config),
        Command::GenSubspace(a) => gen(dir, "subspace", a, &config),
        Command::SeedSk(a) => cmd_seed_sk(dir, a, &config),
        Command::SeedMaxcut(a) => cmd_seed_maxcut(dir, a, &config),
        Command::SeedBvs(a) => cmd_seed_bvs(dir, a, &config),
        Command::Lift(a) => cmd_lift(dir, a, &config),
        Command::Verify(a) => cmd_verify(dir, a, &config),
        Command::Certify(a) => cmd_certify(dir, a, &config),
        Command::Converge(a) => cmd_converge(dir, a, &config),
        Command::PseudocalDemo(a) => cmd_pseudocal(a),
        Command::Report(a) => cmd_report(dir, a, &config),
    }
}

/// Add the config and version stamp to a core artifact and write it.
fn write_stamped(path: &Path, core_json: &str, config: &Value) -> Result<()> {
    let mut v: Value = serde_json::from_str(core_json)?;
    let obj = v.as_object_mut().context("artifact is not a JSON object")?;
    obj.insert("config".into(), config.clone());
    obj.insert("stamp".into(), artifacts::stamp());
    artifacts::write_json(path, &v)
}

/// Print a line; a closed stdout is not an error.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn emit<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    artifacts::write_json(path, report)?;
    say(&soslift_core::json::to_string(report)?);
    Ok(())
}

fn gen(dir: &Path, kind: &str, a: &GenArgs, config: &Value) -> Result<()> {
    let out = resolve(dir, &a.out);
    let need_d = || a.d.with_context(|| format!("gen-{kind} needs --d"));
    let (text, summary) = match kind {
        "goe" => {
            let g = sample_goe(a.n, a.seed)?;
            let ratio = linalg::lambda_max(&g.g) / (g.n as f64).sqrt();
            (g.to_json()?, json!({"kind": kind, "n": g.n, "seed": g.seed, "lambda_max_over_sqrt_n": ratio}))
        }
        "regular" => {
            let g = sample_regular_graph(a.n, need_d()?, a.seed)?;
            let radius = g.nontrivial_spectral_radius();
            let summary = json!({
                "kind": kind,
                "n": g.n,
                "d": g.d,
                "seed": g.seed,
                "pairing_attempts": g.attempts,
                "nontrivial_spectral_radius": radius,
                "ramanujan_bound": 2.0 * ((g.d as f64) - 1.0).sqrt(),
            });
            (g.to_json()?, summary)
        }
        _ => {
            let s = sample_gaussian_matrix(a.n, need_d()?, a.seed)?;
            (s.to_json()?, json!({"kind": kind, "n": s.n, "d": s.d, "seed": s.seed}))
        }
    };
    write_stamped(&out, &text, config)?;
    let report = json!({"config": config, "stamp": artifacts::stamp(), "instance": summary});
    emit(&artifacts::report_path(&out), &report)
}

fn seed_report<T: Serialize>(x: &Degree2Solution, inst: &Instance, report: &T, config: &Value) -> Result<Value> {
    let sos2 = check_sos2_feasible(&x.x, TOL_PSD)?;
    Ok(json!({
        "config": config,
        "stamp": artifacts::stamp(),
        "instance": inst.summary(),
        "seed": report,
        "sos2": sos2,
        "objective_deg2": inst.objective().dot(&x.x),
    }))
}

fn finish_seed(dir: &Path, out: &Path, x: &Degree2Solution, report: Value, config: &Value) -> Result<()> {
    let out = resolve(dir, out);
    write_stamped(&out, &x.to_json()?, config)?;
    emit(&artifacts::report_path(&out), &report)
}

fn cmd_seed_sk(dir: &Path, a: &SeedSkArgs, config: &Value) -> Result<()> {
    let inst = Instance::load(&resolve(dir, &a.instance))?;
    let Instance::Goe(g) = &inst else {
        bail!("seed-sk needs a goe instance, got {}", inst.kind());
    };
    let k = a.k.unwrap_or_else(|| default_sk_k(g.n));
    let (x, rep) = seed_sk(g, k, a.gamma)?;
    let mut report = seed_report(&x, &inst, &rep, config)?;
    report["reference"] = json!({"p_star": P_STAR});
    finish_seed(dir, &a.out, &x, report, config)
}

fn cmd_seed_maxcut(dir: &Path, a: &SeedMaxcutArgs, config: &Value) -> Result<()> {
    let inst = Instance::load(&resolve(dir, &a.instance))?;
    let Instance::Regular(g) = &inst else {
        bail!("seed-maxcut needs a regular instance, got {}", inst.kind());
    };
    let (x, rep) = seed_maxcut(g, a.eps)?;
    let mut report = seed_report(&x, &inst, &rep, config)?;
    report["reference"] = json!({"ramanujan_ratio": ramanujan_ratio(g.d)});
    finish_seed(dir, &a.out, &x, report, config)
}

fn cmd_seed_bvs(dir: &Path, a: &SeedBvsArgs, config: &Value) -> Result<()> {
    let inst = Instance::load(&resolve(dir, &a.instance))?;
    let Instance::Subspace(s) = &inst else {
        bail!("seed-bvs needs a subspace instance, got {}", inst.kind());
    };
    let (x, rep) = seed_boolean_vector(s, a.gamma)?;
    let report = seed_report(&x, &inst, &rep, config)?;
    finish_seed(dir, &a.out, &x, report, config)
}

fn cmd_lift(dir: &Path, a: &LiftArgs, config: &Value) -> Result<()> {
    let x = artifacts::load_degree2(&resolve(dir, &a.input))?;
    let lifted = lift_implicit(&x, a.mode)?;
    let inst_path = resolve(dir, &a.instance);
    let inst = if inst_path.exists() {
        Some(Instance::load(&inst_path)?).filter(|i| i.n() == x.n)
    } else {
        None
    };
    let obj = inst.as_ref().map(Instance::objective);
    let report = LiftReport::new(&lifted, None, obj.as_ref())?;
    let objective = obj.as_ref().map(|m| objective_summary(m, &lifted, a.bound_tol)).transpose()?;
    let cut = match (&inst, x.provenance.get("epsilon").and_then(Value::as_f64)) {
        (Some(Instance::Regular(g)), Some(eps)) => Some(cut_summary(g, &lifted, eps, a.bound_tol)?),
        _ => None,
    };
    let file = LiftedFile {
        schema: soslift_core::json::SCHEMA.into(),
        kind: "lifted".into(),
        stamp: artifacts::stamp(),
        config: config.clone(),
        params: lifted.params.clone(),
        report,
        objective,
        cut,
        degree2: serde_json::from_str(&x.to_json()?)?,
    };
    let out = resolve(dir, &a.out);
    artifacts::write_json(&out, &file)?;
    let mut summary = serde_json::to_value(&file)?;
    summary.as_object_mut().expect("struct").remove("degree2");
    emit(&artifacts::report_path(&out), &summary)
}

#[derive(Serialize)]
struct VerifyReport {
    config: Value,
    stamp: Value,
    n: usize,
    mode: soslift_core::Mode,
    /// "dense", "identity" or "certificate".
    method: &'static str,
    ok: bool,
    tol: f64,
    lambda_min: Option<f64>,
    /// η − (1−η)·α from the certificate; a proof-based lower bound on λ_min.
    lambda_min_certified: f64,
    sos4: Option<soslift_core::moments::Sos4Report>,
    objective_bound_holds: Option<bool>,
    objective_bound_tol: Option<f64>,
}

fn cmd_verify(dir: &Path, a: &VerifyArgs, config: &Value) -> Result<()> {
    let file = LiftedFile::load(&resolve(dir, &a.input))?;
    let lifted = file.solution()?;
    let p = &lifted.params;
    let n = lifted.n();
    let lambda_min_certified = p.eta - (1.0 - p.eta) * p.alpha;
    let (method, lambda_min, sos4) = if n <= a.dense_max {
        let m = lifted.to_dense()?;
        let rep = check_sos4_feasible(&m, a.tol)?;
        ("dense", Some(rep.lambda_min), Some(rep))
    } else if p.alpha_mag == 0.0 {
        // no off-diagonal mass: every off-diagonal moment vanishes and M = Id
        ("identity", Some(1.0), None)
    } else if p.mode == soslift_core::Mode::Certified {
        ("certificate", None, None)
    } else {
        bail!("n = {n} exceeds --dense-max {} and a tight lift has no certificate", a.dense_max);
    };
    let psd_ok = match (&sos4, lambda_min) {
        (Some(r), _) => r.ok,
        (None, Some(l)) => l >= -a.tol,
        (None, None) => lambda_min_certified >= -a.tol,
    };
    let bound = file.objective.as_ref().map(|o| o.bound_holds);
    let report = VerifyReport {
        config: config.clone(),
        stamp: artifacts::stamp(),
        n,
        mode: p.mode,
        method,
        ok: psd_ok && bound.unwrap_or(true),
        tol: a.tol,
        lambda_min,
        lambda_min_certified,
        sos4,
        objective_bound_holds: bound,
        objective_bound_tol: file.objective.as_ref().map(|o| o.tol),
    };
    emit(&resolve(dir, &a.out), &report)?;
    if !report.ok {
        return Err(VerificationFailed(format!(
            "method {method}, lambda_min {lambda_min:?}, objective bound {bound:?}"
        ))
        .into());
    }
    Ok(())
}

#[derive(Serialize)]
struct CertifyReport {
    config: Value,
    stamp: Value,
    n: usize,
    norms: NormParams,
    certificates: Vec<Certificate>,
    analytic_bounds: [f64; 4],
    numeric_norms: Option<[f64; 4]>,
    e3_sparse_bound: f64,
    e3_sparse_norm: Option<f64>,
    sound: Option<bool>,
}

fn cmd_certify(dir: &Path, a: &CertifyArgs, config: &Value) -> Result<()> {
    let x = artifacts::load_degree2(&resolve(dir, &a.input))?;
    let rows = cholesky_rows(&x)?;
    let norms = NormParams::from_matrix(&x.x);
    let certificates = (1..=4).map(|k| component_certificate(k, &norms)).collect::<Result<Vec<_>, _>>()?;
    let mut analytic_bounds = [0.0; 4];
    for (b, c) in analytic_bounds.iter_mut().zip(&certificates) {
        *b = c.bound;
    }
    let numeric = (x.n <= a.numeric_max).then(|| error_components(&rows)).transpose()?;
    let numeric_norms = numeric.as_ref().map(|e| e.numeric_norms);
    let sparse_bound = e3_sparse_bound(&norms);
    let e3_sparse_norm = numeric.as_ref().map(|e| e.e3_sparse_norm);
    let sound = numeric_norms.map(|v| {
        v.iter().zip(&analytic_bounds).all(|(m, b)| m <= b) && e3_sparse_norm.is_none_or(|s| s <= sparse_bound)
    });
    let report = CertifyReport {
        config: config.clone(),
        stamp: artifacts::stamp(),
        n: x.n,
        norms,
        certificates,
        analytic_bounds,
        numeric_norms,
        e3_sparse_bound: sparse_bound,
        e3_sparse_norm,
        sound,
    };
    artifacts::write_json(&resolve(dir, &a.out), &report)?;
    println!("component  terms  numeric        bound");
    for (k, c) in report.certificates.iter().enumerate() {
        let num = numeric_norms.map_or("-".to_string(), |v| format!("{:.6e}", v[k]));
        println!("E{}         {:>5}  {num:<13}  {:.6e}", k + 1, c.terms.len(), c.bound);
    }
    let num = e3_sparse_norm.map_or("-".to_string(), |v| format!("{v:.6e}"));
    println!("E3_sparse  {:>5}  {num:<13}  {:.6e}", 1, sparse_bound);
    if sound == Some(false) {
        return Err(VerificationFailed("a numeric error norm exceeds its certified bound".into()).into());
    }
    Ok(())
}

/// Random unit vectors in R^n, as a Gram matrix.
fn random_gram(n: usize, seed: u64) -> Result<Degree2Solution> {
    let v = sample_gaussian_matrix(n, n, seed)?.mg;
    let norms: Vec<f64> = (0..n).map(|i| v.row(i).norm()).collect();
    let g = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            let (a, b) = (i.min(j), i.max(j));
            v.row(a).dot(&v.row(b)) / (norms[a] * norms[b])
        }
    });
    Ok(Degree2Solution::new(g, json!({"seed": "random_gram", "n": n, "rng_seed": seed}))?)
}

fn cmd_converge(dir: &Path, a: &ConvergeArgs, config: &Value) -> Result<()> {
    let x = random_gram(a.n, a.seed)?;
    let rows = cholesky_rows(&x)?;
    let study = kappa_convergence_study(&rows, &a.subset, &a.kappas)?;
    let out = resolve(dir, &a.out);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kappa", "oracle", "limit", "abs_error", "slope"])?;
    let slope = study.slope.map_or(String::new(), |s| format!("{s:.16e}"));
    for (i, k) in study.kappas.iter().enumerate() {
        w.write_record([
            k.to_string(),
            format!("{:.16e}", study.oracle[i]),
            format!("{:.16e}", study.limit),
            format!("{:.16e}", study.errors[i]),
            slope.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
    artifacts::write(&out, std::str::from_utf8(&bytes)?)?;
    let report = json!({
        "config": config,
        "stamp": artifacts::stamp(),
        "gram": x.provenance,
        "study": study,
        "slope_window": [-1.4, -0.6],
    });
    artifacts::write_json(&artifacts::report_path(&out), &report)?;
    match study.slope {
        Some(s) => println!("slope {s:.4} (log error against log kappa, {} points)", study.kappas.len()),
        None => println!("slope undefined: fewer than two nonzero errors"),
    }
    Ok(())
}

fn parse_alpha(s: &str) -> Result<DMatrix<u32>> {
    let rows: Vec<Vec<u32>> = s
        .split(';')
        .map(|r| r.split(',').map(|e| e.trim().parse::<u32>()).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("cannot parse exponent matrix {s:?}"))?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        bail!("exponent matrix rows have different lengths");
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn cmd_pseudocal(a: &PseudocalArgs) -> Result<()> {
    let cases: Vec<(String, Vec<usize>)> = match &a.alpha {
        Some(s) => vec![(s.clone(), a.l.clone())],
        None => vec![
            ("0,0;0,0".into(), vec![]),
            ("1,1".into(), vec![]),
            ("2".into(), vec![0]),
            ("2,1;0,1".into(), vec![0, 1]),
            ("1;1".into(), vec![0, 1]),
            ("1,1;1,1".into(), vec![]),
            ("3,1;1,1".into(), vec![]),
        ],
    };
    for (alpha, l) in cases {
        let idx = MultiIndex::new(parse_alpha(&alpha)?, l.clone())?;
        let c = pseudocal_coefficient(&idx, a.d)?;
        say(&json!({"alpha": alpha, "l": l, "d": a.d, "coefficient": c}).to_string());
    }
    Ok(())
}

fn read_optional(path: &Path) -> Result<Option<Value>> {
    if !path.exists() {
        return Ok(None);
    }
    let s = artifacts::read(path)?;
    Ok(Some(serde_json::from_str(&s).with_context(|| format!("{} is not JSON", path.display()))?))
}

fn cmd_report(dir: &Path, a: &ReportArgs, config: &Value) -> Result<()> {
    let mut stages = serde_json::Map::new();
    for (name, file) in [
        ("instance", "instance-report.json"),
        ("seed", "seed-report.json"),
        ("lift", "lifted-report.json"),
        ("verify", "verify-report.json"),
        ("certify", "certify.json"),
        ("converge", "converge-report.json"),
    ] {
        if let Some(v) = read_optional(&dir.join(file))? {
            stages.insert(name.into(), v);
        }
    }
    if stages.is_empty() {
        bail!("no stage reports found in {}", dir.display());
    }
    let d = stages
        .get("instance")
        .and_then(|v| v.pointer("/instance/d"))
        .and_then(Value::as_u64)
        .filter(|_| stages["instance"].pointer("/instance/kind") == Some(&json!("regular")));
    let mut reference = json!({"p_star": P_STAR});
    if let Some(d) = d {
        reference["ramanujan_ratio"] = json!(ramanujan_ratio(d as usize));
    }
    let report = json!({
        "schema": soslift_core::json::SCHEMA,
        "config": config,
        "stamp": artifacts::stamp(),
        "stages": stages,
        "reference": reference,
    });
    artifacts::write_json(&resolve(dir, &a.out), &report)?;

    for name in stages.keys() {
        println!("stage {name}: present");
    }
    if let Some(l) = stages.get("lift") {
        println!(
            "lift: mode {} alpha {} eta {}",
            l.pointer("/params/mode").unwrap_or(&Value::Null),
            l.pointer("/params/alpha").unwrap_or(&Value::Null),
            l.pointer("/params/eta").unwrap_or(&Value::Null)
        );
        if let Some(o) = l.get("objective").filter(|o| !o.is_null()) {
            println!(
                "objective: degree-2 {} degree-4 {} lower bound {} holds {} (relative tol {})",
                o["objective_deg2"], o["objective_deg4"], o["lower_bound"], o["bound_holds"], o["tol"]
            );
        }
    }
    if let Some(v) = stages.get("verify") {
        println!(
            "verify: ok {} method {} lambda_min {} (tol {})",
            v["ok"], v["method"], v["lambda_min"], v["tol"]
        );
    }
    println!("reference: P* ~ {P_STAR} (SK value per n^(3/2), display only)");
    if let Some(d) = d {
        println!("reference: 2*sqrt(d-1)/d = {:.6} for d = {d} (display only)", ramanujan_ratio(d as usize));
    }
    Ok(())
}

//! Artifact files exchanged between pipeline stages.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use soslift_core::instances::{GoeInstance, RegularGraph, SubspaceInstance};
use soslift_core::json::SCHEMA;
use soslift_core::lift::ENTRY_TABLE_VERSION;
use soslift_core::report::{CutSummary, ObjectiveSummary};
use soslift_core::seeds::boolean_vector_objective;
use soslift_core::{Degree2Solution, LiftReport, LiftedSolution, SolutionParams};

pub fn resolve(dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, &soslift_core::json::to_string(value)?)
}

/// `report.json` next to `seed.json` becomes `seed-report.json`.
pub fn report_path(artifact: &Path) -> PathBuf {
    let stem = artifact.file_stem().and_then(|s| s.to_str()).unwrap_or("artifact");
    artifact.with_file_name(format!("{stem}-report.json"))
}

/// Versions and constants stamped into every artifact.
pub fn stamp() -> Value {
    json!({
        "schema": SCHEMA,
        "soslift": env!("CARGO_PKG_VERSION"),
        "entry_table": ENTRY_TABLE_VERSION,
    })
}

/// Reject files whose schema tag is present but foreign.
fn check_schema(v: &Value, path: &Path) -> Result<()> {
    match v.get("schema").and_then(Value::as_str) {
        None | Some(SCHEMA) => Ok(()),
        Some(other) => bail!("{}: schema mismatch, expected {SCHEMA}, got {other}", path.display()),
    }
}

pub enum Instance {
    Goe(GoeInstance),
    Regular(RegularGraph),
    Subspace(SubspaceInstance),
}

impl Instance {
    pub fn load(path: &Path) -> Result<Self> {
        let s = read(path)?;
        let v: Value = serde_json::from_str(&s).with_context(|| format!("{} is not JSON", path.display()))?;
        check_schema(&v, path)?;
        let inst = match v.get("kind").and_then(Value::as_str) {
            Some("goe") => Instance::Goe(GoeInstance::from_json(&s)?),
            Some("regular") => Instance::Regular(RegularGraph::from_json(&s)?),
            Some("subspace") => Instance::Subspace(SubspaceInstance::from_json(&s)?),
            other => bail!("{}: not an instance file (kind {other:?})", path.display()),
        };
        Ok(inst)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Goe(_) => "goe",
            Instance::Regular(_) => "regular",
            Instance::Subspace(_) => "subspace",
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Instance::Goe(g) => g.n,
            Instance::Regular(g) => g.n,
            Instance::Subspace(s) => s.n,
        }
    }

    /// Objective matrix: G, −A or (d/n)·Mg Mgᵀ.
    pub fn objective(&self) -> DMatrix<f64> {
        match self {
            Instance::Goe(g) => g.g.clone(),
            Instance::Regular(g) => -g.adjacency(),
            Instance::Subspace(s) => boolean_vector_objective(s),
        }
    }

    pub fn summary(&self) -> Value {
        match self {
            Instance::Goe(g) => json!({"kind": "goe", "n": g.n, "seed": g.seed}),
            Instance::Regular(g) => json!({"kind": "regular", "n": g.n, "d": g.d, "seed": g.seed}),
            Instance::Subspace(s) => json!({"kind": "subspace", "n": s.n, "d": s.d, "seed": s.seed}),
        }
    }
}

pub fn load_degree2(path: &Path) -> Result<Degree2Solution> {
    let s = read(path)?;
    let v: Value = serde_json::from_str(&s).with_context(|| format!("{} is not JSON", path.display()))?;
    check_schema(&v, path)?;
    Degree2Solution::from_json(&s).with_context(|| format!("reading {}", path.display()))
}

/// A lift in implicit form: the seed X plus the solution parameters. Every
/// moment entry is recomputed from X on demand.
#[derive(Serialize, Deserialize)]
pub struct LiftedFile {
    pub schema: String,
    pub kind: String,
    pub stamp: Value,
    pub config: Value,
    pub params: SolutionParams,
    pub report: LiftReport,
    pub objective: Option<ObjectiveSummary>,
    pub cut: Option<CutSummary>,
    /// The degree-2 seed, in its own file format.
    pub degree2: Value,
}

impl LiftedFile {
    pub fn load(path: &Path) -> Result<Self> {
        let s = read(path)?;
        let v: Value = serde_json::from_str(&s).with_context(|| format!("{} is not JSON", path.display()))?;
        check_schema(&v, path)?;
        if v.get("kind").and_then(Value::as_str) != Some("lifted") {
            bail!("{}: expected kind lifted", path.display());
        }
        serde_json::from_value(v).with_context(|| format!("reading {}", path.display()))
    }

    pub fn solution(&self) -> Result<LiftedSolution> {
        let x = Degree2Solution::from_json(&serde_json::to_string(&self.degree2)?)?;
        Ok(LiftedSolution {
            x,
            params: self.params.clone(),
        })
    }
}

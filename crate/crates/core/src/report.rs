//! The JSON report written by the command-line tool, and an independent
//! re-check of the residuals it stores.

use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DVector;
use serde::Serialize;
use serde_json::Value;

use crate::audit::AuditReport;
use crate::error::{Error, Result};
use crate::jdsvd::{DeflationEvent, Mode, OuterStep, RunReport, SolverConfig, Termination};
use crate::sparse::SparseMatrix;

pub const SCHEMA_VERSION: u32 = 1;

/// Echo of the parameters a report was produced with.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nnz: Option<usize>,
    pub tau: f64,
    pub num: usize,
    pub tol: f64,
    pub k_max: usize,
    pub k_min: usize,
    pub eps_inner: f64,
    pub pretol1: f64,
    pub pretol2: f64,
    pub mode: Mode,
    pub seed: u64,
    pub maxit_outer: usize,
    pub audit_cap: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

impl ConfigEcho {
    pub fn new(cfg: &SolverConfig) -> Self {
        Self {
            matrix: None,
            shape: None,
            nnz: None,
            tau: cfg.tau,
            num: cfg.ell,
            tol: cfg.tol,
            k_max: cfg.k_max,
            k_min: cfg.k_min,
            eps_inner: cfg.eps_inner,
            pretol1: cfg.pretol1,
            pretol2: cfg.pretol2,
            mode: cfg.mode,
            seed: cfg.seed,
            maxit_outer: cfg.max_outer(),
            audit_cap: cfg.audit_cap,
            trials: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TripletEntry {
    pub index: usize,
    pub value: f64,
    pub residual: f64,
    pub outer_iteration: usize,
    pub inner_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub left: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSection {
    pub termination: Termination,
    pub requested: usize,
    pub converged: usize,
    /// Correction equations solved.
    pub outer_iterations: usize,
    pub mvs: u64,
    pub expansions: usize,
    pub auxiliary_products: u64,
    pub inner_iterations: usize,
    pub op_applications: usize,
    pub norme: f64,
    /// `√(‖AV_c − U_cΣ_c‖²_F + ‖AᵀU_c − V_cΣ_c‖²_F)`.
    pub aggregate_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    pub triplets: Vec<TripletEntry>,
    pub trace: Vec<OuterStep>,
    pub deflations: Vec<DeflationEvent>,
}

impl RunSection {
    pub fn new(run: &RunReport, requested: usize, emit_vectors: bool, timing: bool) -> Self {
        let triplets = run
            .triplets
            .iter()
            .enumerate()
            .map(|(i, t)| TripletEntry {
                index: i + 1,
                value: t.value,
                residual: t.residual,
                outer_iteration: t.outer_iteration,
                inner_iterations: t.inner_iterations.iter().sum(),
                left: emit_vectors.then(|| t.left.as_slice().to_vec()),
                right: emit_vectors.then(|| t.right.as_slice().to_vec()),
            })
            .collect();
        Self {
            termination: run.termination,
            requested,
            converged: run.triplets.len(),
            outer_iterations: run.outer_iterations,
            mvs: run.mvs,
            expansions: run.expansions,
            auxiliary_products: run.auxiliary_products,
            inner_iterations: run.trace.iter().map(|s| s.inner_iterations).sum(),
            op_applications: run.op_applications(),
            norme: run.norme,
            aggregate_residual: run.aggregate_residual(),
            wall_time: timing.then_some(run.wall_time),
            triplets,
            trace: run.trace.clone(),
            deflations: run.deflations.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub generator: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditReport>,
}

impl ReportDocument {
    pub fn new(config: ConfigEcho, timestamp: bool) -> Self {
        let timestamp = timestamp.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Self {
            schema_version: SCHEMA_VERSION,
            generator: format!("ipjdsvd {}", env!("CARGO_PKG_VERSION")),
            timestamp,
            config,
            run: None,
            audit: None,
        }
    }

    /// Serializes after checking that every number is finite (JSON has no
    /// representation for NaN or infinities).
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if !all_finite(&value) {
            return Err(Error::NonFinite("report"));
        }
        if let Some(run) = &self.run {
            if run.trace.len() != run.outer_iterations {
                return Err(Error::InvalidConfig("trace length differs from outer iterations".into()));
            }
        }
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

fn all_finite(v: &Value) -> bool {
    match v {
        // serde_json turns non-finite floats into null; a missing optional is
        // skipped instead, so any null marks a bad number
        Value::Null => false,
        Value::Number(n) => n.as_f64().is_some_and(f64::is_finite),
        Value::Array(a) => a.iter().all(all_finite),
        Value::Object(o) => o.values().all(all_finite),
        _ => true,
    }
}

/// Stored and recomputed aggregate residual of a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Revalidation {
    pub stored: f64,
    pub recomputed: f64,
    /// Per-triplet worst `|stored − recomputed|`.
    pub max_triplet_gap: f64,
}

/// Re-reads a JSON report written with vectors and recomputes every
/// residual `‖[Av − σu; Aᵀu − σv]‖` from the emitted factors.
pub fn revalidate(json: &str, a: &SparseMatrix) -> Result<Revalidation> {
    let doc: Value = serde_json::from_str(json).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    let run = doc.get("run").ok_or_else(|| missing("run"))?;
    let stored = num(run, "aggregate_residual")?;
    let triplets = run
        .get("triplets")
        .and_then(Value::as_array)
        .ok_or_else(|| missing("triplets"))?;
    let mut sum = 0.0;
    let mut max_gap = 0.0f64;
    for t in triplets {
        let value = num(t, "value")?;
        let left = vector(t, "left")?;
        let right = vector(t, "right")?;
        let mut top = a.apply(right.as_slice())?;
        top.axpy(-value, &left, 1.0);
        let mut bottom = a.apply_transpose(left.as_slice())?;
        bottom.axpy(-value, &right, 1.0);
        let r2 = top.norm_squared() + bottom.norm_squared();
        max_gap = max_gap.max((r2.sqrt() - num(t, "residual")?).abs());
        sum += r2;
    }
    Ok(Revalidation {
        stored,
        recomputed: sum.sqrt(),
        max_triplet_gap: max_gap,
    })
}

fn missing(field: &str) -> Error {
    Error::InvalidConfig(format!("report lacks `{field}`"))
}

fn num(v: &Value, field: &str) -> Result<f64> {
    v.get(field).and_then(Value::as_f64).ok_or_else(|| missing(field))
}

fn vector(v: &Value, field: &str) -> Result<DVector<f64>> {
    let arr = v
        .get(field)
        .and_then(Value::as_array)
        .ok_or_else(|| missing(field))?;
    arr.iter()
        .map(|x| x.as_f64().ok_or_else(|| missing(field)))
        .collect::<Result<Vec<f64>>>()
        .map(DVector::from_vec)
}

/// One row per converged triplet: `index,value,residual`.
pub fn csv_summary(run: &RunReport) -> String {
    let mut s = String::from("index,value,residual\n");
    for (i, t) in run.triplets.iter().enumerate() {
        s.push_str(&format!("{},{:e},{:e}\n", i + 1, t.value, t.residual));
    }
    s
}

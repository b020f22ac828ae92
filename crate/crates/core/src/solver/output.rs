//! CSV, JSON and binary serializations of solver results.

use std::fmt::Write;

use serde_json::{json, Value};

use super::{ProblemSpec, SolveResult, StepDiagnostics, SweepResult};
use crate::config::TOOL_VERSION;

pub const TRAJECTORY_LAYOUT: &str =
    "little-endian f64, index order [step][j][i][component], interior nodes only, x = i h, y = j h with i, j = 1..n";

const CSV_HEADER: &str = "step,time,l2_sq,F_l2_sq,gradu_l2_sq,dt_accum,gradF_accum,newton_iters";

pub fn diagnostics_csv(rows: &[StepDiagnostics]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.step, r.time, r.l2_sq, r.f_l2_sq, r.gradu_l2_sq, r.dt_accum, r.grad_f_accum, r.newton_iters
        );
    }
    s
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut s =
        String::from("A1,A_N,gradF_accum,l2_sq,F_l2_sq,gradu_l2_sq,dt_accum,estimate_lhs,max_du,diff_prev,error\n");
    for r in &sweep.rows {
        let last = r.last.as_ref();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.a1,
            opt(r.thresholds.last().copied()),
            opt(last.map(|d| d.grad_f_accum)),
            opt(last.map(|d| d.l2_sq)),
            opt(last.map(|d| d.f_l2_sq)),
            opt(last.map(|d| d.gradu_l2_sq)),
            opt(last.map(|d| d.dt_accum)),
            opt(r.estimate_lhs),
            opt(r.max_du),
            opt(r.diff_prev),
            r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        );
    }
    s
}

/// Nodal trajectory in the order of [`TRAJECTORY_LAYOUT`].
pub fn trajectory_bytes(result: &SolveResult) -> Vec<u8> {
    let mut out = Vec::new();
    for f in &result.trajectory {
        for v in &f.values {
            out.extend_from_slice(&v[0].to_le_bytes());
            out.extend_from_slice(&v[1].to_le_bytes());
        }
    }
    out
}

/// Metadata document of a parabolic solve. `binary` names the trajectory
/// file if one was written.
pub fn solve_document(spec: &ProblemSpec, result: &SolveResult, config: &Value, binary: Option<&str>) -> Value {
    let n = spec.grid.nx;
    json!({
        "tool_version": TOOL_VERSION,
        "config": config,
        "problem": {
            "chain": spec.chain.to_document(),
            "grid": spec.grid,
            "T": spec.t_final,
            "tau": spec.tau,
            "steps": spec.steps(),
            "forcing": spec.forcing.label,
            "tolerances": spec.tols,
        },
        "data_norm_sq": result.data_norm_sq,
        "estimate_lhs": result.estimate_lhs,
        "estimate_ratio": result.estimate_ratio,
        "max_du": result.max_du,
        "diagnostics": result.diagnostics,
        "trajectory": binary.map(|file| json!({
            "file": file,
            "layout": TRAJECTORY_LAYOUT,
            "shape": [result.trajectory.len(), n, n, 2],
        })),
    })
}

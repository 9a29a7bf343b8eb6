use crate::assembly::{ProblemSetup, SolutionState};
use crate::benchmarks::ErrorReport;
use crate::config::BenchmarkSpec;
use crate::error::{Result, SolverError};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Writes a field snapshot as CSV with fixed column order x,h,u,E,active at
/// the quadrature points, one row per point in mesh order.
pub fn write_snapshot_csv(
    path: &Path,
    state: &SolutionState,
    setup: &ProblemSetup,
) -> Result<()> {
    let mut out = String::from("x,h,u,E,active\n");
    let threshold = setup.params.sigma0 / setup.reg.gamma;
    for e in 0..setup.mesh.n_elements() {
        for q in 0..setup.n_quad() {
            let x = setup.mesh.to_physical(e, setup.basis_h.quad_nodes()[q]);
            let h = setup.basis_h.eval_coeffs_at(state.h.block(e), q);
            let u = setup.basis_u.eval_coeffs_at(state.u.block(e), q);
            let ee = setup.basis_e.eval_coeffs_at(state.e.block(e), q);
            let active = if ee.abs() >= threshold { 1 } else { 0 };
            out.push_str(&format!("{x:.12e},{h:.12e},{u:.12e},{ee:.12e},{active}\n"));
        }
    }
    fs::write(path, out)
        .map_err(|e| SolverError::InvalidArgument(format!("cannot write {path:?}: {e}")))
}

/// Run summary mirroring the error report plus the full configuration echo.
#[derive(serde::Serialize)]
pub struct Summary<'a> {
    pub config: &'a BenchmarkSpec,
    pub report: &'a ErrorReport,
    pub steps: usize,
    pub nonconverged_steps: usize,
}

pub fn write_summary_json(path: &Path, summary: &Summary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)
        .map_err(|e| SolverError::InvalidArgument(format!("summary serialization: {e}")))?;
    let mut file = fs::File::create(path)
        .map_err(|e| SolverError::InvalidArgument(format!("cannot create {path:?}: {e}")))?;
    file.write_all(text.as_bytes())
        .and_then(|_| file.write_all(b"\n"))
        .map_err(|e| SolverError::InvalidArgument(format!("cannot write {path:?}: {e}")))
}

/// Snapshot path for a given simulation time, e.g. `snapshot_t0.050000.csv`.
pub fn snapshot_path(dir: &Path, time: f64) -> PathBuf {
    dir.join(format!("snapshot_t{time:.6}.csv"))
}

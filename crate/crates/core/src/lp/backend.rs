//! LP solver backends: the bundled simplex, or an external program that
//! reads the program as JSON and writes a solution JSON.

use std::fmt;
use std::path::PathBuf;
use std::process::Command;
use std::str::FromStr;

use super::model::{LinearProgram, LpError, LpSolution, LpStatus};
use super::simplex::{self, SimplexOptions};

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Bundled(SimplexOptions),
    /// Invoked as `<program> <lp.json> <solution.json>`.
    External(PathBuf),
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Bundled(SimplexOptions::default())
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Bundled(_) => write!(f, "bundled"),
            Backend::External(p) => write!(f, "external:{}", p.display()),
        }
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "bundled" {
            return Ok(Backend::default());
        }
        match s.strip_prefix("external:") {
            Some(p) if !p.is_empty() => Ok(Backend::External(PathBuf::from(p))),
            _ => Err(format!("unknown LP backend {s:?} (expected \"bundled\" or \"external:<path>\")")),
        }
    }
}

impl Backend {
    pub fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        match self {
            Backend::Bundled(opts) => simplex::solve(lp, *opts),
            Backend::External(program) => solve_external(program, lp),
        }
    }
}

fn solve_external(program: &PathBuf, lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.check()?;
    let dir = tempfile::tempdir().map_err(|e| LpError::Backend(e.to_string()))?;
    let lp_path = dir.path().join("lp.json");
    let sol_path = dir.path().join("solution.json");
    let text = serde_json::to_string(lp).map_err(|e| LpError::Backend(e.to_string()))?;
    std::fs::write(&lp_path, text).map_err(|e| LpError::Backend(e.to_string()))?;
    let status = Command::new(program)
        .arg(&lp_path)
        .arg(&sol_path)
        .status()
        .map_err(|e| LpError::Backend(format!("cannot run {}: {e}", program.display())))?;
    if !status.success() {
        return Err(LpError::Backend(format!("{} exited with {status}", program.display())));
    }
    let text = std::fs::read_to_string(&sol_path).map_err(|e| LpError::Backend(e.to_string()))?;
    let sol: LpSolution = serde_json::from_str(&text).map_err(|e| LpError::Backend(format!("bad solution file: {e}")))?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(LpError::Infeasible),
        LpStatus::Unbounded => return Err(LpError::Unbounded),
        LpStatus::IterLimit => return Err(LpError::IterLimit(sol.iterations)),
    }
    if sol.values.len() != lp.variables.len() {
        return Err(LpError::Backend(format!("solution has {} values for {} variables", sol.values.len(), lp.variables.len())));
    }
    if lp.max_violation(&sol.values) > 1e-6 {
        return Err(LpError::Backend("solution violates the program".into()));
    }
    Ok(sol)
}

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("iteration limit reached after {0} pivots")]
    IterLimit(usize),
    #[error("numerical trouble: {0}")]
    Numerical(String),
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("external solver: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    /// (variable index, coefficient)
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub cost: f64,
    pub lower: f64,
    /// `None` means unbounded above.
    pub upper: Option<f64>,
    /// Only meaningful for the integer program and the LP export.
    pub integer: bool,
}

/// Minimize `cᵀx` subject to the rows and variable bounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub variables: Vec<Variable>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn check(&self) -> Result<(), LpError> {
        let n = self.variables.len();
        for v in &self.variables {
            if !v.cost.is_finite() || v.lower.is_nan() || v.upper.is_some_and(|u| u.is_nan() || u < v.lower) {
                return Err(LpError::Malformed(format!("variable {} has bad bounds or cost", v.name)));
            }
            if v.lower == f64::INFINITY {
                return Err(LpError::Malformed(format!("variable {} has lower bound +inf", v.name)));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {} has a non-finite right-hand side", r.name)));
            }
            for &(j, a) in &r.coeffs {
                if j >= n || !a.is_finite() {
                    return Err(LpError::Malformed(format!("row {} has a bad entry ({j}, {a})", r.name)));
                }
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.variables.iter().zip(x).map(|(v, x)| v.cost * x).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, &xv) in self.variables.iter().zip(x) {
            worst = worst.max(v.lower - xv);
            if let Some(u) = v.upper {
                worst = worst.max(xv - u);
            }
        }
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let d = lhs - r.rhs;
            worst = worst.max(match r.sense {
                Sense::Le => d,
                Sense::Ge => -d,
                Sense::Eq => d.abs(),
            });
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    /// Row duals, when the backend reports them.
    #[serde(default)]
    pub duals: Option<Vec<f64>>,
    /// `c_j − yᵀA_j` per variable, when available.
    #[serde(default)]
    pub reduced_costs: Option<Vec<f64>>,
    #[serde(default)]
    pub iterations: usize,
}

impl LpSolution {
    /// Reduced costs, derived from the duals if the backend only gave those.
    pub fn reduced_costs_for(&self, lp: &LinearProgram) -> Option<Vec<f64>> {
        if let Some(d) = &self.reduced_costs {
            return (d.len() == lp.variables.len()).then(|| d.clone());
        }
        let y = self.duals.as_ref().filter(|y| y.len() == lp.rows.len())?;
        let mut d: Vec<f64> = lp.variables.iter().map(|v| v.cost).collect();
        for (r, row) in lp.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                d[j] -= a * y[r];
            }
        }
        Some(d)
    }
}

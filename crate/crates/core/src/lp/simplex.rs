//! Bounded-variable primal revised simplex.
//!
//! Every row gets a slack (`a·x + s = b`) whose bounds encode the sense.
//! Rows whose slack cannot absorb the initial residual get a signed
//! artificial; phase one drives those to zero, phase two optimizes the real
//! objective. Pricing is Dantzig's rule, switching to Bland's rule after a
//! long run of degenerate pivots.

use super::lu::{Factor, SparseCol};
use super::model::{LinearProgram, LpError, LpSolution, LpStatus, Sense};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    pub refactor_every: usize,
    pub degenerate_switch: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_iterations: 1_000_000, refactor_every: 100, degenerate_switch: 10_000 }
    }
}

const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
/// Smallest column segment examined per partial pricing pass.
const PRICE_SEGMENT: usize = 512;
const PHASE1_TOL: f64 = 1e-7;
const MAX_RESTARTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic(usize),
    Lower,
    Upper,
    /// Nonbasic free variable sitting at zero.
    Zero,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterLimit,
    /// Refactorization left the basis infeasible; start over.
    Restart,
}

struct Solver<'a> {
    m: usize,
    n: usize,
    cols: &'a [SparseCol],
    rhs: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    sign: Vec<f64>,
    factor: Factor,
    iterations: usize,
    opts: SimplexOptions,
    force_bland: bool,
}

impl<'a> Solver<'a> {
    fn col(&self, j: usize) -> SparseCol {
        if j < self.n {
            self.cols[j].clone()
        } else if j < self.n + self.m {
            vec![(j - self.n, 1.0)]
        } else {
            let r = j - self.n - self.m;
            vec![(r, self.sign[r])]
        }
    }

    fn dot_col(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            self.cols[j].iter().map(|&(r, v)| v * y[r]).sum()
        } else if j < self.n + self.m {
            y[j - self.n]
        } else {
            let r = j - self.n - self.m;
            self.sign[r] * y[r]
        }
    }

    fn new(lp_cols: &'a [SparseCol], lp: &LinearProgram, opts: SimplexOptions, force_bland: bool) -> Self {
        let m = lp.rows.len();
        let n = lp.variables.len();
        let total = n + 2 * m;
        let mut lo = Vec::with_capacity(total);
        let mut up = Vec::with_capacity(total);
        for v in &lp.variables {
            lo.push(v.lower);
            up.push(v.upper.unwrap_or(f64::INFINITY));
        }
        for r in &lp.rows {
            let (l, u) = match r.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            up.push(u);
        }
        for _ in 0..m {
            lo.push(0.0);
            up.push(f64::INFINITY);
        }
        let mut x = vec![0.0; total];
        let mut state = vec![State::Lower; total];
        for j in 0..n + m {
            if lo[j].is_finite() {
                x[j] = lo[j];
                state[j] = State::Lower;
            } else if up[j].is_finite() {
                x[j] = up[j];
                state[j] = State::Upper;
            } else {
                state[j] = State::Zero;
            }
        }
        let rhs: Vec<f64> = lp.rows.iter().map(|r| r.rhs).collect();
        let mut resid = rhs.clone();
        for j in 0..n {
            if x[j] != 0.0 {
                for &(r, v) in &lp_cols[j] {
                    resid[r] -= v * x[j];
                }
            }
        }
        let mut basis = Vec::with_capacity(m);
        let mut sign = vec![1.0; m];
        for i in 0..m {
            let s = n + i;
            let a = n + m + i;
            if resid[i] >= lo[s] - FEAS_TOL && resid[i] <= up[s] + FEAS_TOL {
                x[s] = resid[i];
                state[s] = State::Basic(i);
                basis.push(s);
                x[a] = 0.0;
                up[a] = 0.0;
            } else {
                let sv = if resid[i] < lo[s] { lo[s] } else { up[s] };
                x[s] = sv;
                state[s] = if sv == lo[s] { State::Lower } else { State::Upper };
                let gap = resid[i] - sv;
                sign[i] = gap.signum();
                x[a] = gap.abs();
                state[a] = State::Basic(i);
                basis.push(a);
            }
        }
        for i in 0..m {
            if basis[i] == n + i {
                state[n + m + i] = State::Lower;
            }
        }
        let cost = vec![0.0; total];
        let mut s = Solver {
            m,
            n,
            cols: lp_cols,
            rhs,
            lo,
            up,
            cost,
            x,
            state,
            basis,
            sign,
            factor: Factor::factorize(0, &[]).factor,
            iterations: 0,
            opts,
            force_bland,
        };
        s.factor = Factor::factorize(m, &s.basis.iter().map(|&j| s.col(j)).collect::<Vec<_>>()).factor;
        s
    }

    /// Refactorizes and recomputes basic values. Returns false if the basis
    /// had to be repaired into an infeasible one.
    fn refactor(&mut self) -> bool {
        let cols: Vec<SparseCol> = self.basis.iter().map(|&j| self.col(j)).collect();
        let f = Factor::factorize(self.m, &cols);
        let repaired = !f.replaced.is_empty();
        self.factor = f.factor;
        for &(pos, row) in &f.replaced {
            let old = self.basis[pos];
            self.state[old] = if self.lo[old].is_finite() {
                self.x[old] = self.lo[old];
                State::Lower
            } else if self.up[old].is_finite() {
                self.x[old] = self.up[old];
                State::Upper
            } else {
                self.x[old] = 0.0;
                State::Zero
            };
            // The factor already holds a unit column for `row`. The slack
            // has exactly that column; if it is basic elsewhere the
            // artificial (with a positive sign) stands in.
            let slack = self.n + row;
            let newvar = if matches!(self.state[slack], State::Basic(_)) {
                let a = self.n + self.m + row;
                self.sign[row] = 1.0;
                self.up[a] = f64::INFINITY;
                a
            } else {
                slack
            };
            self.basis[pos] = newvar;
            self.state[newvar] = State::Basic(pos);
        }
        let mut r = self.rhs.clone();
        for j in 0..self.n + 2 * self.m {
            if !matches!(self.state[j], State::Basic(_)) && self.x[j] != 0.0 {
                for (row, v) in self.col(j) {
                    r[row] -= v * self.x[j];
                }
            }
        }
        self.factor.ftran(&mut r);
        let mut feasible = true;
        for (pos, &j) in self.basis.iter().enumerate() {
            self.x[j] = r[pos];
            if r[pos] < self.lo[j] - 1e-6 || r[pos] > self.up[j] + 1e-6 {
                feasible = false;
            }
        }
        !(repaired && !feasible)
    }

    fn objective(&self) -> f64 {
        self.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    fn duals(&self) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        self.factor.btran(&mut y);
        y
    }

    /// Reduced cost of nonbasic `j` if it is attractive to enter.
    fn candidate(&self, j: usize, y: &[f64]) -> Option<f64> {
        let d = || self.cost[j] - self.dot_col(j, y);
        match self.state[j] {
            State::Basic(_) => None,
            State::Lower if self.up[j] > self.lo[j] => Some(d()).filter(|&d| d < -OPT_TOL),
            State::Upper if self.up[j] > self.lo[j] => Some(d()).filter(|&d| d > OPT_TOL),
            State::Zero => Some(d()).filter(|d| d.abs() > OPT_TOL),
            _ => None,
        }
    }

    fn run(&mut self) -> Outcome {
        let total = self.n + 2 * self.m;
        let mut since_refactor = 0usize;
        let mut degenerate_run = 0usize;
        let mut w = vec![0.0; self.m];
        let mut price_cursor = 0usize;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Outcome::IterLimit;
            }
            if since_refactor >= self.opts.refactor_every {
                since_refactor = 0;
                if !self.refactor() {
                    return Outcome::Restart;
                }
            }
            let y = self.duals();
            let bland = self.force_bland || degenerate_run > self.opts.degenerate_switch;
            // Partial pricing: segments are scanned cyclically from where the
            // last search stopped, and the best candidate of the first
            // segment holding any is taken. Bland scans everything in order.
            let segment = if bland { total } else { PRICE_SEGMENT.max(total / 16) };
            let mut entering: Option<(usize, f64)> = None;
            let start = if bland { 0 } else { price_cursor % total.max(1) };
            let mut scanned = 0;
            while scanned < total && entering.is_none() {
                let stop = (scanned + segment).min(total);
                for off in scanned..stop {
                    let j = (start + off) % total;
                    let Some(d) = self.candidate(j, &y) else { continue };
                    if bland {
                        if entering.is_none() {
                            entering = Some((j, d));
                        }
                        break;
                    }
                    if entering.is_none_or(|(_, best)| d.abs() > best.abs()) {
                        entering = Some((j, d));
                    }
                }
                scanned = stop;
            }
            price_cursor = start + scanned;
            let Some((q, dq)) = entering else {
                return Outcome::Optimal;
            };
            self.iterations += 1;

            w.iter_mut().for_each(|v| *v = 0.0);
            for (r, v) in self.col(q) {
                w[r] = v;
            }
            self.factor.ftran(&mut w);
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };

            // (step, leaving position or None for a bound flip, |pivot|)
            let mut best_t = self.up[q] - self.lo[q];
            let mut leave: Option<usize> = None;
            let mut best_piv = 0.0f64;
            for (pos, &j) in self.basis.iter().enumerate() {
                let wi = w[pos];
                if wi.abs() <= PIVOT_TOL {
                    continue;
                }
                let rate = -dir * wi;
                let t = if rate < 0.0 {
                    if !self.lo[j].is_finite() {
                        continue;
                    }
                    (self.x[j] - self.lo[j]) / -rate
                } else {
                    if !self.up[j].is_finite() {
                        continue;
                    }
                    (self.up[j] - self.x[j]) / rate
                };
                let t = t.max(0.0);
                let better = match leave {
                    _ if t < best_t - 1e-12 => true,
                    _ if t > best_t + 1e-12 => false,
                    None => best_t.is_infinite(),
                    Some(cur) => {
                        if bland {
                            j < self.basis[cur]
                        } else {
                            wi.abs() > best_piv
                        }
                    }
                };
                if better {
                    best_t = t;
                    leave = Some(pos);
                    best_piv = wi.abs();
                }
            }
            if best_t.is_infinite() {
                return Outcome::Unbounded;
            }
            degenerate_run = if best_t <= 1e-12 { degenerate_run + 1 } else { 0 };

            self.x[q] += dir * best_t;
            if best_t != 0.0 {
                for (pos, &j) in self.basis.iter().enumerate() {
                    if w[pos] != 0.0 {
                        self.x[j] -= dir * best_t * w[pos];
                    }
                }
            }
            match leave {
                None => {
                    self.state[q] = if dir > 0.0 { State::Upper } else { State::Lower };
                    self.x[q] = if dir > 0.0 { self.up[q] } else { self.lo[q] };
                }
                Some(pos) => {
                    let j = self.basis[pos];
                    let rate = -dir * w[pos];
                    if rate < 0.0 {
                        self.x[j] = self.lo[j];
                        self.state[j] = State::Lower;
                    } else {
                        self.x[j] = self.up[j];
                        self.state[j] = State::Upper;
                    }
                    if self.lo[j] == self.up[j] {
                        self.state[j] = State::Lower;
                    }
                    self.basis[pos] = q;
                    self.state[q] = State::Basic(pos);
                    self.factor.update(pos, &w);
                    since_refactor += 1;
                }
            }
        }
    }
}

/// Column-major copy of the constraint matrix.
pub fn columns(lp: &LinearProgram) -> Vec<SparseCol> {
    let mut cols = vec![Vec::new(); lp.variables.len()];
    for (r, row) in lp.rows.iter().enumerate() {
        for &(j, v) in &row.coeffs {
            if v != 0.0 {
                cols[j].push((r, v));
            }
        }
    }
    cols
}

fn attempt(lp: &LinearProgram, cols: &[SparseCol], opts: SimplexOptions, bland: bool) -> Result<Option<LpSolution>, LpError> {
    let mut s = Solver::new(cols, lp, opts, bland);
    let (n, m) = (s.n, s.m);
    let has_artificial = s.basis.iter().any(|&j| j >= n + m);
    if has_artificial {
        for a in n + m..n + 2 * m {
            s.cost[a] = 1.0;
        }
        match s.run() {
            Outcome::Optimal => {}
            Outcome::IterLimit => return Err(LpError::IterLimit(s.iterations)),
            Outcome::Restart => return Ok(None),
            Outcome::Unbounded => unreachable!("phase one is bounded below"),
        }
        if s.objective() > PHASE1_TOL * (1.0 + s.rhs.iter().map(|v| v.abs()).sum::<f64>()) {
            return Err(LpError::Infeasible);
        }
        for a in n + m..n + 2 * m {
            s.cost[a] = 0.0;
            s.up[a] = 0.0;
            if !matches!(s.state[a], State::Basic(_)) {
                s.x[a] = 0.0;
                s.state[a] = State::Lower;
            }
        }
    }
    for (j, v) in lp.variables.iter().enumerate() {
        s.cost[j] = v.cost;
    }
    match s.run() {
        Outcome::Optimal => {}
        Outcome::IterLimit => return Err(LpError::IterLimit(s.iterations)),
        Outcome::Restart => return Ok(None),
        Outcome::Unbounded => return Err(LpError::Unbounded),
    }
    // Final clean recomputation of the basic values.
    if !s.refactor() {
        return Ok(None);
    }
    for a in n + m..n + 2 * m {
        if s.x[a].abs() > 1e-6 {
            return Ok(None);
        }
    }
    let y = s.duals();
    let reduced: Vec<f64> = (0..n).map(|j| s.cost[j] - s.dot_col(j, &y)).collect();
    let mut values = s.x[..n].to_vec();
    for (j, v) in values.iter_mut().enumerate() {
        *v = v.clamp(s.lo[j], s.up[j]);
        if v.abs() < FEAS_TOL {
            *v = 0.0;
        }
    }
    let objective = lp.variables.iter().zip(&values).map(|(v, x)| v.cost * x).sum();
    Ok(Some(LpSolution {
        status: LpStatus::Optimal,
        objective,
        values,
        duals: Some(y),
        reduced_costs: Some(reduced),
        iterations: s.iterations,
    }))
}

/// Solves the program to optimality.
pub fn solve(lp: &LinearProgram, opts: SimplexOptions) -> Result<LpSolution, LpError> {
    lp.check()?;
    let cols = columns(lp);
    for restart in 0..=MAX_RESTARTS {
        if let Some(sol) = attempt(lp, &cols, opts, restart > 0)? {
            return Ok(sol);
        }
    }
    Err(LpError::Numerical("basis repair kept failing".into()))
}

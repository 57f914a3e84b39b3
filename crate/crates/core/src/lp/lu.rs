//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Columns are eliminated left-looking in order of increasing nonzero count.
//! The pivot row is chosen among entries within a factor of two of the
//! column's largest magnitude, preferring rows with few nonzeros. With `Lop`
//! the accumulated row eliminations, `Lop·B·Q = P·U` where Q maps pivot step
//! to basis position and P maps pivot step to row.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

/// Sparse column as (index, value) pairs.
pub type SparseCol = Vec<(usize, f64)>;

const SINGULAR_TOL: f64 = 1e-11;
const THRESHOLD: f64 = 0.5;

/// Dense accumulator with its nonzero pattern.
struct Work {
    w: Vec<f64>,
    touched: Vec<bool>,
    pattern: Vec<usize>,
}

impl Work {
    fn add(&mut self, r: usize, v: f64) {
        if !self.touched[r] {
            self.touched[r] = true;
            self.pattern.push(r);
        }
        self.w[r] += v;
    }

    fn clear(&mut self) {
        for &r in &self.pattern {
            self.w[r] = 0.0;
            self.touched[r] = false;
        }
        self.pattern.clear();
    }
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    others: SparseCol,
}

#[derive(Debug, Clone)]
pub struct Factor {
    m: usize,
    /// Pivot row of each step.
    prow: Vec<usize>,
    /// Basis position of each step.
    ppos: Vec<usize>,
    /// Row eliminations per step: (row, multiplier).
    lcols: Vec<SparseCol>,
    /// Above-diagonal U entries per step: (earlier step, value).
    ucols: Vec<SparseCol>,
    diag: Vec<f64>,
    etas: Vec<Eta>,
}

/// Outcome of factorizing a possibly singular basis.
pub struct Factorization {
    pub factor: Factor,
    /// Basis positions whose column was dependent, each paired with the row
    /// whose unit column should replace it.
    pub replaced: Vec<(usize, usize)>,
}

impl Factor {
    /// Factorizes the basis given by its columns (row-indexed). Dependent
    /// columns are swapped for unit columns of the uncovered rows.
    pub fn factorize(m: usize, cols: &[SparseCol]) -> Factorization {
        assert_eq!(cols.len(), m);
        let mut row_count = vec![0usize; m];
        for c in cols {
            for &(r, _) in c {
                row_count[r] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (cols[p].len(), p));

        let mut f = Factor {
            m,
            prow: Vec::with_capacity(m),
            ppos: Vec::with_capacity(m),
            lcols: Vec::with_capacity(m),
            ucols: Vec::with_capacity(m),
            diag: Vec::with_capacity(m),
            etas: Vec::new(),
        };
        let mut step_of_row = vec![usize::MAX; m];
        let mut work = Work { w: vec![0.0; m], touched: vec![false; m], pattern: Vec::new() };
        let mut dependent = Vec::new();

        for &pos in &order {
            for &(r, v) in &cols[pos] {
                work.add(r, v);
            }
            if !f.eliminate(pos, &mut work, &mut step_of_row, &row_count) {
                dependent.push(pos);
            }
        }
        let mut replaced = Vec::new();
        let free_rows: Vec<usize> = (0..m).filter(|&r| step_of_row[r] == usize::MAX).collect();
        for (pos, row) in dependent.into_iter().zip(free_rows) {
            work.add(row, 1.0);
            let ok = f.eliminate(pos, &mut work, &mut step_of_row, &row_count);
            debug_assert!(ok);
            replaced.push((pos, row));
        }
        Factorization { factor: f, replaced }
    }

    /// Applies earlier eliminations to the sparse column in `work`, then
    /// pivots. Leaves `work` empty. Returns false (and records nothing) if
    /// the column is dependent on the earlier ones.
    fn eliminate(&mut self, pos: usize, work: &mut Work, step_of_row: &mut [usize], row_count: &[usize]) -> bool {
        // Earlier steps reachable from the pattern, applied in step order.
        let mut queued = BinaryHeap::new();
        let mut seen = BTreeSet::new();
        for &r in &work.pattern {
            let s = step_of_row[r];
            if s != usize::MAX && seen.insert(s) {
                queued.push(Reverse(s));
            }
        }
        while let Some(Reverse(s)) = queued.pop() {
            let x = work.w[self.prow[s]];
            if x == 0.0 {
                continue;
            }
            for &(r, mult) in &self.lcols[s] {
                work.add(r, -mult * x);
                let t = step_of_row[r];
                if t != usize::MAX && seen.insert(t) {
                    queued.push(Reverse(t));
                }
            }
        }

        let free = |r: usize| step_of_row[r] == usize::MAX;
        let best = work.pattern.iter().filter(|&&r| free(r)).fold(0.0f64, |b, &r| b.max(work.w[r].abs()));
        if best < SINGULAR_TOL {
            work.clear();
            return false;
        }
        let mut prow = usize::MAX;
        for &r in &work.pattern {
            if free(r) && work.w[r].abs() >= THRESHOLD * best && (prow == usize::MAX || (row_count[r], r) < (row_count[prow], prow)) {
                prow = r;
            }
        }
        let step = self.prow.len();
        let pivot = work.w[prow];
        let mut ucol = Vec::new();
        let mut lcol = Vec::new();
        for &r in &work.pattern {
            let v = work.w[r];
            if v == 0.0 || r == prow {
                continue;
            }
            if step_of_row[r] != usize::MAX {
                ucol.push((step_of_row[r], v));
            } else {
                lcol.push((r, v / pivot));
            }
        }
        work.clear();
        step_of_row[prow] = step;
        self.prow.push(prow);
        self.ppos.push(pos);
        self.lcols.push(lcol);
        self.ucols.push(ucol);
        self.diag.push(pivot);
        true
    }

    pub fn eta_count(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B x = a`; `a` is row-indexed and overwritten with `x`, indexed
    /// by basis position.
    pub fn ftran(&self, a: &mut [f64]) {
        for s in 0..self.m {
            let x = a[self.prow[s]];
            if x != 0.0 {
                for &(r, mult) in &self.lcols[s] {
                    a[r] -= mult * x;
                }
            }
        }
        let mut z = vec![0.0; self.m];
        for s in (0..self.m).rev() {
            let v = a[self.prow[s]] / self.diag[s];
            z[s] = v;
            if v != 0.0 {
                for &(s2, u) in &self.ucols[s] {
                    a[self.prow[s2]] -= u * v;
                }
            }
        }
        for s in 0..self.m {
            a[self.ppos[s]] = z[s];
        }
        for e in &self.etas {
            let xr = a[e.pos] / e.pivot;
            a[e.pos] = xr;
            if xr != 0.0 {
                for &(i, wi) in &e.others {
                    a[i] -= wi * xr;
                }
            }
        }
    }

    /// Solves `Bᵀ y = c`; `c` is indexed by basis position and overwritten
    /// with `y`, indexed by row.
    pub fn btran(&self, c: &mut [f64]) {
        for e in self.etas.iter().rev() {
            let mut v = c[e.pos];
            for &(i, wi) in &e.others {
                v -= wi * c[i];
            }
            c[e.pos] = v / e.pivot;
        }
        let mut h = vec![0.0; self.m];
        for s in 0..self.m {
            let mut v = c[self.ppos[s]];
            for &(s2, u) in &self.ucols[s] {
                v -= u * h[s2];
            }
            h[s] = v / self.diag[s];
        }
        let y = c;
        y.iter_mut().for_each(|x| *x = 0.0);
        for s in 0..self.m {
            y[self.prow[s]] = h[s];
        }
        for s in (0..self.m).rev() {
            let mut v = 0.0;
            for &(r, mult) in &self.lcols[s] {
                v += mult * y[r];
            }
            if v != 0.0 {
                y[self.prow[s]] -= v;
            }
        }
    }

    /// Records the replacement of basis position `pos` by a column whose
    /// FTRAN result is `w`.
    pub fn update(&mut self, pos: usize, w: &[f64]) {
        let others = w.iter().enumerate().filter(|&(i, &v)| i != pos && v != 0.0).map(|(i, &v)| (i, v)).collect();
        self.etas.push(Eta { pos, pivot: w[pos], others });
    }
}

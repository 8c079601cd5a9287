//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! The basis `B` (one column per basis position) is factored left-looking:
//! positions are processed sparsest-first, each column is reduced by the
//! elimination transforms gathered so far, and the pivot row is picked among
//! numerically acceptable candidates by smallest row count. Column swaps
//! after a simplex pivot are appended as eta transforms until the next
//! refactorization.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Sparse column: parallel row-index and value arrays.
pub(crate) struct SparseCol<'a> {
    pub rows: &'a [usize],
    pub vals: &'a [f64],
}

const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

struct Eta {
    pos: usize,
    pivot: f64,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

pub(crate) struct Factorization {
    m: usize,
    /// Pivot row of elimination step `k`.
    pivot_row: Vec<usize>,
    /// Basis position eliminated at step `k`.
    pivot_pos: Vec<usize>,
    l_start: Vec<usize>,
    l_rows: Vec<usize>,
    l_vals: Vec<f64>,
    /// Off-diagonal entries of `U` column `k`, keyed by earlier step index.
    u_start: Vec<usize>,
    u_steps: Vec<usize>,
    u_vals: Vec<f64>,
    u_diag: Vec<f64>,
    etas: Vec<Eta>,
    work: Vec<f64>,
}

/// Basis positions whose columns could not be pivoted, paired with rows left
/// without a pivot. Replacing each such column with the slack of the paired
/// row yields a nonsingular basis.
#[derive(Debug)]
pub(crate) struct Singular {
    pub replacements: Vec<(usize, usize)>,
}

impl Factorization {
    pub fn new<'a, F>(m: usize, column: F) -> Result<Self, Singular>
    where
        F: Fn(usize) -> SparseCol<'a>,
    {
        let mut row_count = vec![0usize; m];
        let mut order: Vec<(usize, usize)> = (0..m)
            .map(|p| {
                let c = column(p);
                for &r in c.rows {
                    row_count[r] += 1;
                }
                (c.rows.len(), p)
            })
            .collect();
        order.sort_unstable();

        let mut f = Factorization {
            m,
            pivot_row: Vec::with_capacity(m),
            pivot_pos: Vec::with_capacity(m),
            l_start: vec![0],
            l_rows: Vec::new(),
            l_vals: Vec::new(),
            u_start: vec![0],
            u_steps: Vec::new(),
            u_vals: Vec::new(),
            u_diag: Vec::with_capacity(m),
            etas: Vec::new(),
            work: vec![0.0; m],
        };
        // step index of each row once pivoted
        let mut step_of_row = vec![usize::MAX; m];
        let mut failed = Vec::new();
        let mut x = vec![0.0f64; m];
        // rows holding a (possibly cancelled) nonzero of the current column
        let mut touched: Vec<usize> = Vec::new();
        let mut is_touched = vec![false; m];
        // pivoted steps whose row became nonzero, applied in step order
        let mut pending: BinaryHeap<Reverse<usize>> = BinaryHeap::new();

        for &(_, pos) in &order {
            let c = column(pos);
            for (&r, &v) in c.rows.iter().zip(c.vals) {
                x[r] += v;
                if !is_touched[r] {
                    is_touched[r] = true;
                    touched.push(r);
                    if step_of_row[r] != usize::MAX {
                        pending.push(Reverse(step_of_row[r]));
                    }
                }
            }
            while let Some(Reverse(j)) = pending.pop() {
                let xp = x[f.pivot_row[j]];
                if xp == 0.0 {
                    continue;
                }
                for idx in f.l_start[j]..f.l_start[j + 1] {
                    let r = f.l_rows[idx];
                    x[r] -= f.l_vals[idx] * xp;
                    if !is_touched[r] {
                        is_touched[r] = true;
                        touched.push(r);
                        // L entries live in rows unpivoted at step j, pivoted later if at all
                        if step_of_row[r] != usize::MAX {
                            pending.push(Reverse(step_of_row[r]));
                        }
                    }
                }
            }
            let mut max_abs = 0.0f64;
            for &r in &touched {
                if step_of_row[r] == usize::MAX {
                    max_abs = max_abs.max(x[r].abs());
                }
            }
            if max_abs <= SINGULAR_TOL {
                failed.push(pos);
                for &r in &touched {
                    x[r] = 0.0;
                    is_touched[r] = false;
                }
                touched.clear();
                continue;
            }
            let mut best: Option<usize> = None;
            for &r in &touched {
                let v = x[r];
                if step_of_row[r] != usize::MAX || v.abs() < PIVOT_THRESHOLD * max_abs {
                    continue;
                }
                best = match best {
                    Some(b) if row_count[b] < row_count[r] => Some(b),
                    Some(b) if row_count[b] == row_count[r] && (x[b].abs() > v.abs() || (x[b].abs() == v.abs() && b < r)) => {
                        Some(b)
                    }
                    _ => Some(r),
                };
            }
            let pr = best.expect("a row passes the threshold test");
            let diag = x[pr];
            touched.sort_unstable();
            for &r in &touched {
                let v = x[r];
                x[r] = 0.0;
                is_touched[r] = false;
                if v == 0.0 || r == pr {
                    continue;
                }
                let s = step_of_row[r];
                if s != usize::MAX {
                    if v.abs() > DROP_TOL {
                        f.u_steps.push(s);
                        f.u_vals.push(v);
                    }
                } else if (v / diag).abs() > DROP_TOL {
                    f.l_rows.push(r);
                    f.l_vals.push(v / diag);
                }
            }
            touched.clear();
            step_of_row[pr] = f.pivot_row.len();
            f.pivot_row.push(pr);
            f.pivot_pos.push(pos);
            f.u_diag.push(diag);
            f.l_start.push(f.l_rows.len());
            f.u_start.push(f.u_steps.len());
        }

        if failed.is_empty() {
            Ok(f)
        } else {
            let free_rows = (0..m).filter(|&r| step_of_row[r] == usize::MAX);
            Err(Singular {
                replacements: failed.into_iter().zip(free_rows).collect(),
            })
        }
    }

    pub fn eta_count(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B z = rhs` in place: `rhs` is indexed by row on entry and by
    /// basis position on exit.
    pub fn ftran(&mut self, rhs: &mut [f64]) {
        let m = self.m;
        for j in 0..m {
            let xp = rhs[self.pivot_row[j]];
            if xp == 0.0 {
                continue;
            }
            for idx in self.l_start[j]..self.l_start[j + 1] {
                rhs[self.l_rows[idx]] -= self.l_vals[idx] * xp;
            }
        }
        let y = &mut self.work;
        for k in 0..m {
            y[k] = rhs[self.pivot_row[k]];
        }
        for k in (0..m).rev() {
            let w = y[k] / self.u_diag[k];
            y[k] = w;
            if w == 0.0 {
                continue;
            }
            for idx in self.u_start[k]..self.u_start[k + 1] {
                y[self.u_steps[idx]] -= self.u_vals[idx] * w;
            }
        }
        for k in 0..m {
            rhs[self.pivot_pos[k]] = y[k];
        }
        for eta in &self.etas {
            let zp = rhs[eta.pos] / eta.pivot;
            rhs[eta.pos] = zp;
            if zp == 0.0 {
                continue;
            }
            for (&i, &a) in eta.rows.iter().zip(&eta.vals) {
                rhs[i] -= a * zp;
            }
        }
    }

    /// Solves `Bᵀ π = c` in place: `c` is indexed by basis position on entry
    /// and by row on exit.
    pub fn btran(&mut self, c: &mut [f64]) {
        let m = self.m;
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for (&i, &a) in eta.rows.iter().zip(&eta.vals) {
                s -= a * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        let v = &mut self.work;
        for k in 0..m {
            let mut s = c[self.pivot_pos[k]];
            for idx in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_vals[idx] * v[self.u_steps[idx]];
            }
            v[k] = s / self.u_diag[k];
        }
        for k in 0..m {
            c[self.pivot_row[k]] = v[k];
        }
        for j in (0..m).rev() {
            let mut s = 0.0;
            for idx in self.l_start[j]..self.l_start[j + 1] {
                s += self.l_vals[idx] * c[self.l_rows[idx]];
            }
            if s != 0.0 {
                c[self.pivot_row[j]] -= s;
            }
        }
    }

    /// Records the replacement of the column at `pos` by a column whose
    /// FTRAN image is `alpha` (indexed by position).
    pub fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > DROP_TOL {
                rows.push(i);
                vals.push(a);
            }
        }
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            rows,
            vals,
        });
    }
}

//! Sparse LU factorization of a simplex basis with partial pivoting,
//! left-looking column by column (Gilbert-Peierls style), plus the forward
//! and transposed solves the simplex method needs.

use crate::error::{Error, Result};

/// Minimum admissible pivot magnitude before the basis counts as singular.
const SINGULAR_TOL: f64 = 1e-11;

/// LU factors of a square sparse matrix whose columns were supplied as
/// (row index, value) pairs. Columns are processed sparsest-first; `steps`
/// index the elimination order.
#[derive(Debug, Clone)]
pub struct LuFactors {
    m: usize,
    /// step -> position of the column in the input ordering
    col_of_step: Vec<usize>,
    /// step -> pivot row (original index)
    piv_row: Vec<usize>,
    /// row -> step at which it was pivoted
    step_of_row: Vec<usize>,
    /// L (unit diagonal implicit): per step, multipliers at original rows
    l_ptr: Vec<usize>,
    l_rows: Vec<usize>,
    l_vals: Vec<f64>,
    /// U off-diagonals: per step (column), entries at earlier steps
    u_ptr: Vec<usize>,
    u_steps: Vec<usize>,
    u_vals: Vec<f64>,
    /// U diagonal per step
    diag: Vec<f64>,
}

impl LuFactors {
    /// Factorizes the matrix whose `pos`-th column has the given sparse
    /// entries. All columns must have the same implicit row dimension `m`.
    pub fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self> {
        assert_eq!(columns.len(), m, "basis must be square");
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| columns[p].len());
        let mut f = LuFactors {
            m,
            col_of_step: Vec::with_capacity(m),
            piv_row: Vec::with_capacity(m),
            step_of_row: vec![usize::MAX; m],
            l_ptr: vec![0],
            l_rows: Vec::new(),
            l_vals: Vec::new(),
            u_ptr: vec![0],
            u_steps: Vec::new(),
            u_vals: Vec::new(),
            diag: Vec::with_capacity(m),
        };
        // Dense scatter workspace plus DFS scratch.
        let mut x = vec![0.0f64; m];
        let mut topo: Vec<usize> = Vec::new();
        let mut visited = vec![usize::MAX; m]; // step -> stamp
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for (stamp, &pos) in order.iter().enumerate() {
            let col = &columns[pos];
            // Symbolic: steps whose multipliers reach this column's pattern,
            // in topological order (children before parents in application
            // order means reverse post-order here).
            topo.clear();
            for &(r, _) in col {
                let s0 = f.step_of_row[r];
                if s0 == usize::MAX || visited[s0] == stamp {
                    continue;
                }
                visited[s0] = stamp;
                stack.push((s0, f.l_ptr[s0]));
                while let Some(top) = stack.len().checked_sub(1) {
                    let (s, mut it) = stack[top];
                    let end = f.l_ptr[s + 1];
                    let mut pushed = false;
                    while it < end {
                        let child_row = f.l_rows[it];
                        it += 1;
                        let cs = f.step_of_row[child_row];
                        if cs != usize::MAX && visited[cs] != stamp {
                            visited[cs] = stamp;
                            stack[top].1 = it;
                            stack.push((cs, f.l_ptr[cs]));
                            pushed = true;
                            break;
                        }
                    }
                    if !pushed {
                        topo.push(s);
                        stack.pop();
                    }
                }
            }
            topo.reverse();
            // Numeric left-looking update.
            for &(r, v) in col {
                x[r] += v;
            }
            for &s in &topo {
                let xs = x[f.piv_row[s]];
                if xs != 0.0 {
                    for t in f.l_ptr[s]..f.l_ptr[s + 1] {
                        x[f.l_rows[t]] -= f.l_vals[t] * xs;
                    }
                }
            }
            // Pivot: the largest remaining (un-pivoted) entry. The candidate
            // rows are the original pattern plus fill from the updates, all of
            // which lie in the L patterns just applied; rescan those.
            let mut cand: Vec<usize> = Vec::new();
            for &(r, _) in col {
                if f.step_of_row[r] == usize::MAX {
                    cand.push(r);
                }
            }
            for &s in &topo {
                for t in f.l_ptr[s]..f.l_ptr[s + 1] {
                    let r = f.l_rows[t];
                    if f.step_of_row[r] == usize::MAX {
                        cand.push(r);
                    }
                }
            }
            cand.sort_unstable();
            cand.dedup();
            let p = cand
                .iter()
                .copied()
                .max_by(|&a, &b| x[a].abs().partial_cmp(&x[b].abs()).unwrap());
            let p = match p {
                Some(p) if x[p].abs() > SINGULAR_TOL => p,
                _ => {
                    // Clean the workspace before bailing out.
                    for &s in &topo {
                        x[f.piv_row[s]] = 0.0;
                        for t in f.l_ptr[s]..f.l_ptr[s + 1] {
                            x[f.l_rows[t]] = 0.0;
                        }
                    }
                    for &(r, _) in col {
                        x[r] = 0.0;
                    }
                    for &r in &cand {
                        x[r] = 0.0;
                    }
                    return Err(Error::Domain("singular basis in LU factorization".into()));
                }
            };
            let step = f.diag.len();
            let d = x[p];
            f.diag.push(d);
            f.piv_row.push(p);
            f.col_of_step.push(pos);
            f.step_of_row[p] = step;
            // U entries (at already-pivoted steps).
            for &s in &topo {
                let r = f.piv_row[s];
                if x[r] != 0.0 {
                    f.u_steps.push(s);
                    f.u_vals.push(x[r]);
                }
                x[r] = 0.0;
            }
            // Original pattern rows that were already pivoted but not reached
            // by the DFS cannot exist: reaching them seeds the DFS. Remaining
            // candidates become L multipliers.
            f.u_ptr.push(f.u_steps.len());
            for &r in &cand {
                if r != p && x[r] != 0.0 {
                    f.l_rows.push(r);
                    f.l_vals.push(x[r] / d);
                }
                x[r] = 0.0;
            }
            x[p] = 0.0;
            f.l_ptr.push(f.l_rows.len());
        }
        Ok(f)
    }

    /// Solves `B w = rhs`; `rhs` is indexed by rows, the result by basis
    /// positions (the `pos` of the input columns). `rhs` is consumed as
    /// workspace.
    pub fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        let m = self.m;
        let mut y = vec![0.0f64; m];
        for k in 0..m {
            let yk = rhs[self.piv_row[k]];
            y[k] = yk;
            if yk != 0.0 {
                for t in self.l_ptr[k]..self.l_ptr[k + 1] {
                    rhs[self.l_rows[t]] -= self.l_vals[t] * yk;
                }
            }
        }
        for k in (0..m).rev() {
            let zk = y[k] / self.diag[k];
            y[k] = zk;
            if zk != 0.0 {
                for t in self.u_ptr[k]..self.u_ptr[k + 1] {
                    y[self.u_steps[t]] -= self.u_vals[t] * zk;
                }
            }
        }
        for k in 0..m {
            out[self.col_of_step[k]] = y[k];
        }
    }

    /// Solves `B' y = rhs`; `rhs` is indexed by basis positions, the result
    /// by rows.
    pub fn btran(&self, rhs: &[f64], out: &mut [f64]) {
        let m = self.m;
        let mut t = vec![0.0f64; m];
        for k in 0..m {
            let mut v = rhs[self.col_of_step[k]];
            for idx in self.u_ptr[k]..self.u_ptr[k + 1] {
                v -= self.u_vals[idx] * t[self.u_steps[idx]];
            }
            t[k] = v / self.diag[k];
        }
        for o in out.iter_mut() {
            *o = 0.0;
        }
        for k in (0..m).rev() {
            let mut v = t[k];
            for idx in self.l_ptr[k]..self.l_ptr[k + 1] {
                v -= self.l_vals[idx] * out[self.l_rows[idx]];
            }
            out[self.piv_row[k]] = v;
        }
    }
}

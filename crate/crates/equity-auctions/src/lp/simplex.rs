//! Bounded-variable revised simplex for `max c'x : A x <= b, 0 <= x <= u`,
//! with a sparse LU-factorized basis, product-form updates between periodic
//! refactorizations, Dantzig pricing with a Bland fallback against cycling,
//! and a KKT certificate on the returned solution.

use super::lu::LuFactors;
use crate::error::{Error, Result};

/// Optimality tolerance on reduced costs.
const OPT_TOL: f64 = 1e-9;
/// Minimum pivot magnitude in the ratio test.
const PIVOT_TOL: f64 = 1e-9;
/// Pivots between basis refactorizations.
const REFACTOR_EVERY: usize = 64;
/// Consecutive non-improving pivots before switching to Bland's rule.
const STALL_LIMIT: usize = 2000;

/// Column-compressed sparse matrix.
#[derive(Debug, Clone, Default)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triples(nrows: usize, ncols: usize, triples: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; ncols + 1];
        for &(_, c, _) in triples {
            counts[c + 1] += 1;
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let mut row_idx = vec![0usize; triples.len()];
        let mut values = vec![0.0f64; triples.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triples {
            let slot = next[c];
            row_idx[slot] = r;
            values[slot] = v;
            next[c] += 1;
        }
        SparseMatrix {
            nrows,
            ncols,
            col_ptr: counts,
            row_idx,
            values,
        }
    }

    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.row_idx[a..b], &self.values[a..b])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// A maximization problem `max c'x : A x <= b, 0 <= x <= upper`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Basis snapshot for warm starts: one basic variable per row (structural
/// indices `0..n`, slack `n + i` for row `i`) plus nonbasic bound flags.
#[derive(Debug, Clone)]
pub struct Basis {
    pub basic: Vec<usize>,
    pub at_upper: Vec<bool>,
}

/// KKT residuals of a solution (all should be at numerical noise level).
#[derive(Debug, Clone, Copy)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.complementarity)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub kkt: KktResiduals,
    pub basis: Basis,
    pub iterations: usize,
}

struct Eta {
    pos: usize,
    pivot: f64,
    /// Off-pivot nonzeros of the transformed entering column.
    entries: Vec<(usize, f64)>,
}

struct Solver<'a> {
    p: &'a Problem,
    n: usize,
    m: usize,
    basic: Vec<usize>,
    /// position in `basic` if basic, else usize::MAX
    pos_of: Vec<usize>,
    at_upper: Vec<bool>,
    x_b: Vec<f64>,
    lu: LuFactors,
    etas: Vec<Eta>,
}

impl<'a> Solver<'a> {
    fn upper_of(&self, var: usize) -> f64 {
        if var < self.n {
            self.p.upper[var]
        } else {
            f64::INFINITY
        }
    }

    fn cost_of(&self, var: usize) -> f64 {
        if var < self.n {
            self.p.c[var]
        } else {
            0.0
        }
    }

    /// Scatters structural or slack column `var` into `out` (assumed zeroed),
    /// returning the touched rows.
    fn scatter_col(&self, var: usize, out: &mut [f64]) -> Vec<usize> {
        if var < self.n {
            let (rows, vals) = self.p.a.col(var);
            for (&r, &v) in rows.iter().zip(vals) {
                out[r] += v;
            }
            rows.to_vec()
        } else {
            out[var - self.n] = 1.0;
            vec![var - self.n]
        }
    }

    fn sparse_basis_columns(&self) -> Vec<Vec<(usize, f64)>> {
        self.basic
            .iter()
            .map(|&var| {
                if var < self.n {
                    let (rows, vals) = self.p.a.col(var);
                    rows.iter().copied().zip(vals.iter().copied()).collect()
                } else {
                    vec![(var - self.n, 1.0)]
                }
            })
            .collect()
    }

    fn refactorize(&mut self) -> Result<()> {
        self.lu = LuFactors::factorize(self.m, &self.sparse_basis_columns())?;
        self.etas.clear();
        self.recompute_x_b();
        Ok(())
    }

    /// `x_B = B^{-1} (b - sum over nonbasic-at-upper columns)`.
    fn recompute_x_b(&mut self) {
        let mut rhs = self.p.b.clone();
        for j in 0..self.n {
            if self.pos_of[j] == usize::MAX && self.at_upper[j] && self.p.upper[j] != 0.0 {
                let (rows, vals) = self.p.a.col(j);
                for (&r, &v) in rows.iter().zip(vals) {
                    rhs[r] -= v * self.p.upper[j];
                }
            }
        }
        let mut out = vec![0.0; self.m];
        self.ftran(&mut rhs, &mut out);
        self.x_b = out;
    }

    fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        self.lu.ftran(rhs, out);
        for eta in &self.etas {
            let t = out[eta.pos] / eta.pivot;
            if t != 0.0 {
                for &(i, w) in &eta.entries {
                    out[i] -= w * t;
                }
            }
            out[eta.pos] = t;
        }
    }

    fn btran(&self, rhs: &mut [f64], out: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut v = rhs[eta.pos];
            for &(i, w) in &eta.entries {
                v -= w * rhs[i];
            }
            rhs[eta.pos] = v / eta.pivot;
        }
        self.lu.btran(rhs, out);
    }

    fn nonbasic_value(&self, var: usize) -> f64 {
        if self.at_upper[var] {
            self.upper_of(var)
        } else {
            0.0
        }
    }

    /// Reduced costs `d = c - A' y` for all variables (slack `i` has `-y_i`).
    fn reduced_costs(&self, y: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.n + self.m];
        for j in 0..self.n {
            let (rows, vals) = self.p.a.col(j);
            let dot: f64 = rows.iter().zip(vals).map(|(&r, &v)| v * y[r]).sum();
            d[j] = self.p.c[j] - dot;
        }
        for i in 0..self.m {
            d[self.n + i] = -y[i];
        }
        d
    }
}

/// Solves the problem, optionally warm-starting from a previous basis of an
/// instance with identical constraints. `x = 0` must be feasible (`b >= 0`),
/// which holds for every program this crate assembles.
pub fn solve(p: &Problem, warm: Option<&Basis>) -> Result<Solution> {
    let n = p.a.ncols;
    let m = p.a.nrows;
    debug_assert!(p.b.iter().all(|&bi| bi >= 0.0));
    let cold = Basis {
        basic: (n..n + m).collect(),
        at_upper: vec![false; n + m],
    };
    if let Some(w) = warm {
        if w.basic.len() == m && w.at_upper.len() == n + m {
            if let Ok(sol) = solve_from(p, w) {
                return Ok(sol);
            }
        }
    }
    solve_from(p, &cold)
}

fn solve_from(p: &Problem, start: &Basis) -> Result<Solution> {
    let n = p.a.ncols;
    let m = p.a.nrows;
    let mut pos_of = vec![usize::MAX; n + m];
    for (pos, &var) in start.basic.iter().enumerate() {
        pos_of[var] = pos;
    }
    let columns: Vec<Vec<(usize, f64)>> = start
        .basic
        .iter()
        .map(|&var| {
            if var < n {
                let (rows, vals) = p.a.col(var);
                rows.iter().copied().zip(vals.iter().copied()).collect()
            } else {
                vec![(var - n, 1.0)]
            }
        })
        .collect();
    let lu = LuFactors::factorize(m, &columns)?;
    let mut s = Solver {
        p,
        n,
        m,
        basic: start.basic.clone(),
        pos_of,
        at_upper: start.at_upper.clone(),
        x_b: vec![0.0; m],
        lu,
        etas: Vec::new(),
    };
    s.recompute_x_b();
    // A warm basis from a different objective is primal feasible by
    // construction; reject it if numerics disagree.
    let feas_slack = 1e-7;
    for (pos, &var) in s.basic.iter().enumerate() {
        if s.x_b[pos] < -feas_slack || s.x_b[pos] > s.upper_of(var) + feas_slack {
            return Err(Error::Domain("warm basis is not primal feasible".into()));
        }
    }

    let max_iters = 200 * (m + n) + 10_000;
    let mut iterations = 0usize;
    let mut stall = 0usize;
    let mut bland = false;
    let mut y = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut wcol = vec![0.0; m];
    loop {
        if iterations >= max_iters {
            return Err(Error::Domain(format!(
                "simplex iteration limit {max_iters} reached"
            )));
        }
        if s.etas.len() >= REFACTOR_EVERY {
            s.refactorize()?;
        }
        // Pricing.
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for (pos, &var) in s.basic.iter().enumerate() {
            rhs[pos] = s.cost_of(var);
        }
        s.btran(&mut rhs.clone(), &mut y);
        // btran consumed a clone; rhs reused below.
        let d = s.reduced_costs(&y);
        let mut entering = usize::MAX;
        let mut best = OPT_TOL;
        for j in 0..n + m {
            if s.pos_of[j] != usize::MAX {
                continue;
            }
            let improving = if s.at_upper[j] { -d[j] } else { d[j] };
            if improving > OPT_TOL {
                if bland {
                    entering = j;
                    break;
                }
                if improving > best {
                    best = improving;
                    entering = j;
                }
            }
        }
        if entering == usize::MAX {
            break; // optimal
        }
        // Direction.
        let sigma = if s.at_upper[entering] { -1.0 } else { 1.0 };
        rhs.iter_mut().for_each(|v| *v = 0.0);
        s.scatter_col(entering, &mut rhs);
        s.ftran(&mut rhs, &mut wcol);
        // Ratio test: entering moves by t >= 0 from its bound; basic values
        // change by -sigma * w * t.
        let mut t_limit = s.upper_of(entering); // bound flip distance
        let mut leaving: Option<(usize, bool)> = None; // (position, hits upper)
        for pos in 0..m {
            let delta = sigma * wcol[pos];
            if delta > PIVOT_TOL {
                let t = (s.x_b[pos].max(0.0)) / delta;
                if t < t_limit - 1e-12
                    || (t < t_limit + 1e-12
                        && leaving.map_or(false, |(lp, _)| {
                            wcol[pos].abs() > wcol[lp].abs()
                        }))
                {
                    t_limit = t.max(0.0);
                    leaving = Some((pos, false));
                }
            } else if delta < -PIVOT_TOL {
                let ub = s.upper_of(s.basic[pos]);
                if ub.is_finite() {
                    let t = (ub - s.x_b[pos]).max(0.0) / -delta;
                    if t < t_limit - 1e-12
                        || (t < t_limit + 1e-12
                            && leaving.map_or(false, |(lp, _)| {
                                wcol[pos].abs() > wcol[lp].abs()
                            }))
                    {
                        t_limit = t.max(0.0);
                        leaving = Some((pos, true));
                    }
                }
            }
        }
        if t_limit.is_infinite() {
            return Err(Error::LpUnbounded);
        }
        // Apply the step.
        if t_limit > 0.0 {
            for pos in 0..m {
                s.x_b[pos] -= sigma * wcol[pos] * t_limit;
            }
            stall = 0;
        } else {
            stall += 1;
            if stall > STALL_LIMIT {
                bland = true;
            }
        }
        match leaving {
            None => {
                // Bound flip: the entering variable crosses to its other bound.
                s.at_upper[entering] = !s.at_upper[entering];
            }
            Some((r, hits_upper)) => {
                let leaving_var = s.basic[r];
                s.pos_of[leaving_var] = usize::MAX;
                s.at_upper[leaving_var] = hits_upper;
                s.basic[r] = entering;
                s.pos_of[entering] = r;
                let enter_from = if sigma > 0.0 {
                    0.0
                } else {
                    s.upper_of(entering)
                };
                s.x_b[r] = enter_from + sigma * t_limit;
                s.at_upper[entering] = false;
                let entries: Vec<(usize, f64)> = wcol
                    .iter()
                    .enumerate()
                    .filter(|&(i, &v)| i != r && v != 0.0)
                    .map(|(i, &v)| (i, v))
                    .collect();
                s.etas.push(Eta {
                    pos: r,
                    pivot: wcol[r],
                    entries,
                });
            }
        }
        iterations += 1;
    }

    // Extract the solution and certify it.
    let mut x = vec![0.0; n];
    for j in 0..n {
        if s.pos_of[j] == usize::MAX {
            x[j] = s.nonbasic_value(j);
        }
    }
    for (pos, &var) in s.basic.iter().enumerate() {
        if var < n {
            x[var] = s.x_b[pos];
        }
    }
    // Clamp basic values into bounds by at most the feasibility drift.
    for (j, xj) in x.iter_mut().enumerate() {
        *xj = xj.clamp(0.0, p.upper[j]);
    }
    let objective: f64 = x.iter().zip(&p.c).map(|(a, b)| a * b).sum();
    // Final duals from the certified basis.
    rhs.iter_mut().for_each(|v| *v = 0.0);
    for (pos, &var) in s.basic.iter().enumerate() {
        rhs[pos] = s.cost_of(var);
    }
    s.btran(&mut rhs.clone(), &mut y);
    let d = s.reduced_costs(&y);
    let mut ax = vec![0.0; m];
    for j in 0..n {
        if x[j] != 0.0 {
            let (rows, vals) = p.a.col(j);
            for (&r, &v) in rows.iter().zip(vals) {
                ax[r] += v * x[j];
            }
        }
    }
    let mut primal = 0.0f64;
    for i in 0..m {
        primal = primal.max(ax[i] - p.b[i]);
    }
    let mut dual = 0.0f64;
    let mut comp = 0.0f64;
    for j in 0..n + m {
        let basicp = s.pos_of[j] != usize::MAX;
        if basicp {
            dual = dual.max(d[j].abs());
        } else if s.at_upper[j] {
            dual = dual.max(-d[j]);
        } else {
            dual = dual.max(d[j]);
        }
        // Complementarity: reduced cost times distance to the active bound.
        let xv = if j < n {
            x[j]
        } else {
            (p.b[j - n] - ax[j - n]).max(0.0)
        };
        if !basicp {
            let gap = if s.at_upper[j] {
                (s.upper_of(j) - xv).abs()
            } else {
                xv.abs()
            };
            comp = comp.max(d[j].abs() * gap);
        }
    }
    // Row complementarity: dual price times constraint slack.
    for i in 0..m {
        comp = comp.max(y[i].abs() * (p.b[i] - ax[i]).max(0.0));
    }
    Ok(Solution {
        x,
        objective,
        kkt: KktResiduals {
            primal,
            dual,
            complementarity: comp,
        },
        basis: Basis {
            basic: s.basic.clone(),
            at_upper: s.at_upper.clone(),
        },
        iterations,
    })
}

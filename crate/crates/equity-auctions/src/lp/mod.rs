//! Grid-discretized mechanism design as a linear program.
//!
//! Variables are an allocation `q_i(t)` and a payment `m_i(t)` per bidder `i`
//! and grid profile `t`, all in `[0, 1]`. Constraints are incentive
//! compatibility along each bidder's own-value grid line, individual
//! rationality, allocation feasibility, and the equity constraint (ex post per
//! profile, or a single expectation row). The objective maximizes expected
//! revenue under the table's probability masses. Restricting payments to
//! `m >= 0` loses no revenue: for any monotone allocation the payment-maximal
//! incentive-compatible payment rule is a sum of nonnegative envelope terms.

pub mod lu;
pub mod simplex;

pub use simplex::{Basis, KktResiduals, Problem, Solution, SparseMatrix};

use crate::dists::{DiscreteJoint, GroupStructure, RegularMarginal};
use crate::error::{Error, Result};
use crate::mech::Mechanism;
use crate::util::fmt_g12;

/// Default cap on the number of constraint rows.
pub const DEFAULT_ROW_CAP: usize = 150_000;

/// How the equity constraint enters the program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquityMode {
    /// One row `gamma * sum_maj q - sum_min q <= 0` per grid profile.
    ExPost,
    /// A single row on the expectation over profiles.
    Expectation,
}

/// Which incentive constraints are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcMode {
    /// Every deviation along the bidder's own-value grid line.
    Full,
    /// Only deviations to adjacent grid values. Equivalent to [`IcMode::Full`]
    /// on a grid: both adjacent inequalities force a monotone allocation, and
    /// telescoping the adjacent constraints recovers every far deviation.
    Adjacent,
}

/// An assembled mechanism-design LP over a discrete value table.
#[derive(Debug, Clone)]
pub struct GridMechanismLp {
    table: DiscreteJoint,
    group: GroupStructure,
    gamma: f64,
    equity: EquityMode,
    ic: IcMode,
    problem: Problem,
    triples: Vec<(usize, usize, f64)>,
}

impl GridMechanismLp {
    pub fn new(
        table: DiscreteJoint,
        group: GroupStructure,
        gamma: f64,
        equity: EquityMode,
        ic: IcMode,
    ) -> Result<Self> {
        Self::with_row_cap(table, group, gamma, equity, ic, DEFAULT_ROW_CAP)
    }

    pub fn with_row_cap(
        table: DiscreteJoint,
        group: GroupStructure,
        gamma: f64,
        equity: EquityMode,
        ic: IcMode,
        row_cap: usize,
    ) -> Result<Self> {
        let dim = table.dim();
        if dim != group.total() {
            return Err(Error::Config(format!(
                "table dimension {dim} does not match group size {}",
                group.total()
            )));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!(
                "LP assembly supports 1 to 3 bidders, got {dim}"
            )));
        }
        if !(gamma >= 0.0) {
            return Err(Error::Domain(format!("gamma = {gamma} must be >= 0")));
        }
        let g = table.grid().len();
        let p = table.len();
        let ic_rows = match ic {
            IcMode::Full => p * dim * (g - 1),
            IcMode::Adjacent => 2 * (p / g) * dim * (g - 1),
        };
        let eq_rows = match equity {
            EquityMode::ExPost => p,
            EquityMode::Expectation => 1,
        };
        let rows = ic_rows + p * dim + p + eq_rows;
        if rows > row_cap {
            return Err(Error::LpTooLarge(rows, row_cap));
        }

        let nvars = 2 * p * dim;
        let q_var = |t: usize, i: usize| t * dim + i;
        let m_var = |t: usize, i: usize| p * dim + t * dim + i;
        // Coordinate `d` has stride `g^(dim-1-d)`: the last coordinate varies
        // fastest, matching `DiscreteJoint::point`.
        let stride: Vec<usize> = (0..dim).map(|d| g.pow((dim - 1 - d) as u32)).collect();

        let mut triples: Vec<(usize, usize, f64)> = Vec::new();
        let mut b: Vec<f64> = Vec::with_capacity(rows);
        let mut row = 0usize;
        let push = |triples: &mut Vec<(usize, usize, f64)>, r: usize, c: usize, v: f64| {
            if v != 0.0 {
                triples.push((r, c, v));
            }
        };

        // Incentive compatibility: truthful type `v_i` at profile `t` must not
        // gain by reporting another grid value (profile `u` on the same line):
        // `v_i q_i(u) - m_i(u) - v_i q_i(t) + m_i(t) <= 0`.
        for t in 0..p {
            let vals = table.point(t);
            for i in 0..dim {
                let ci = (t / stride[i]) % g;
                let base = t - ci * stride[i];
                let deviations: Vec<usize> = match ic {
                    IcMode::Full => (0..g).filter(|&j| j != ci).collect(),
                    IcMode::Adjacent => {
                        let mut d = Vec::new();
                        if ci > 0 {
                            d.push(ci - 1);
                        }
                        if ci + 1 < g {
                            d.push(ci + 1);
                        }
                        d
                    }
                };
                for j in deviations {
                    let u = base + j * stride[i];
                    push(&mut triples, row, q_var(u, i), vals[i]);
                    push(&mut triples, row, m_var(u, i), -1.0);
                    push(&mut triples, row, q_var(t, i), -vals[i]);
                    push(&mut triples, row, m_var(t, i), 1.0);
                    b.push(0.0);
                    row += 1;
                }
            }
        }
        // Individual rationality: `m_i(t) - v_i q_i(t) <= 0`.
        for t in 0..p {
            let vals = table.point(t);
            for i in 0..dim {
                push(&mut triples, row, m_var(t, i), 1.0);
                push(&mut triples, row, q_var(t, i), -vals[i]);
                b.push(0.0);
                row += 1;
            }
        }
        // Allocation feasibility: `sum_i q_i(t) <= 1`.
        for t in 0..p {
            for i in 0..dim {
                push(&mut triples, row, q_var(t, i), 1.0);
            }
            b.push(1.0);
            row += 1;
        }
        // Equity: `gamma * sum_maj q - sum_min q <= 0`.
        match equity {
            EquityMode::ExPost => {
                for t in 0..p {
                    for i in group.minority_indices() {
                        push(&mut triples, row, q_var(t, i), -1.0);
                    }
                    for i in group.majority_indices() {
                        push(&mut triples, row, q_var(t, i), gamma);
                    }
                    b.push(0.0);
                    row += 1;
                }
            }
            EquityMode::Expectation => {
                for (t, &mass) in table.masses().iter().enumerate() {
                    for i in group.minority_indices() {
                        push(&mut triples, row, q_var(t, i), -mass);
                    }
                    for i in group.majority_indices() {
                        push(&mut triples, row, q_var(t, i), gamma * mass);
                    }
                }
                b.push(0.0);
                row += 1;
            }
        }
        debug_assert_eq!(row, rows);

        // Objective: expected revenue `sum_t p_t sum_i m_i(t)`.
        let mut c = vec![0.0; nvars];
        for (t, &mass) in table.masses().iter().enumerate() {
            for i in 0..dim {
                c[m_var(t, i)] = mass;
            }
        }
        let a = SparseMatrix::from_triples(rows, nvars, &triples);
        Ok(GridMechanismLp {
            table,
            group,
            gamma,
            equity,
            ic,
            problem: Problem {
                a,
                b,
                c,
                upper: vec![1.0; nvars],
            },
            triples,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.problem.a.nrows
    }

    pub fn num_vars(&self) -> usize {
        self.problem.a.ncols
    }

    pub fn table(&self) -> &DiscreteJoint {
        &self.table
    }

    pub fn equity(&self) -> EquityMode {
        self.equity
    }

    pub fn ic(&self) -> IcMode {
        self.ic
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    /// Sparse matrix entries as `(row, col, coeff)` triples.
    pub fn to_sparse_triples(&self) -> &[(usize, usize, f64)] {
        &self.triples
    }

    /// Plain-text dump of the whole program: '#'-headed sections with
    /// `col,coeff` objective lines, `row,col,coeff` matrix triples, and
    /// `row,value` right-hand sides. All variables live in `[0, 1]`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# linear program: {} rows, {} cols, all vars in [0,1], rows are <=\n",
            self.num_rows(),
            self.num_vars()
        ));
        out.push_str("# objective (maximize): col,coeff\n");
        for (j, &cj) in self.problem.c.iter().enumerate() {
            if cj != 0.0 {
                out.push_str(&format!("{j},{}\n", fmt_g12(cj)));
            }
        }
        out.push_str("# matrix: row,col,coeff\n");
        for &(r, cidx, v) in &self.triples {
            out.push_str(&format!("{r},{cidx},{}\n", fmt_g12(v)));
        }
        out.push_str("# rhs: row,value\n");
        for (r, &bv) in self.problem.b.iter().enumerate() {
            out.push_str(&format!("{r},{}\n", fmt_g12(bv)));
        }
        out
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        self.solve_warm(None)
    }

    /// Solves, optionally warm-starting from the basis of a previous solve of
    /// a program with the same constraints (for example another contamination
    /// level, which only changes the objective).
    pub fn solve_warm(&self, warm: Option<&Basis>) -> Result<LpOutcome> {
        let sol = simplex::solve(&self.problem, warm)?;
        let dim = self.table.dim();
        let p = self.table.len();
        let q = sol.x[..p * dim].to_vec();
        let m = sol.x[p * dim..].to_vec();
        let name = match self.equity {
            EquityMode::ExPost => "lp-expost",
            EquityMode::Expectation => "lp-expectation",
        };
        Ok(LpOutcome {
            mechanism: TabulatedMechanism {
                name: name.to_string(),
                group: self.group,
                gamma: self.gamma,
                grid: self.table.grid().to_vec(),
                dim,
                q,
                m,
            },
            objective: sol.objective,
            kkt: sol.kkt,
            basis: sol.basis,
            iterations: sol.iterations,
        })
    }
}

/// Result of solving a [`GridMechanismLp`].
#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub mechanism: TabulatedMechanism,
    pub objective: f64,
    pub kkt: KktResiduals,
    pub basis: Basis,
    pub iterations: usize,
}

/// A mechanism stored as grid tables of allocations and payments. Off-grid
/// values snap to the nearest grid point, ties toward the lower one.
#[derive(Debug, Clone)]
pub struct TabulatedMechanism {
    name: String,
    group: GroupStructure,
    gamma: f64,
    grid: Vec<f64>,
    dim: usize,
    q: Vec<f64>,
    m: Vec<f64>,
}

impl TabulatedMechanism {
    fn snap(&self, v: f64) -> usize {
        let g = &self.grid;
        let hi = g.partition_point(|&x| x <= v);
        if hi == 0 {
            return 0;
        }
        if hi == g.len() {
            return g.len() - 1;
        }
        if g[hi] - v < v - g[hi - 1] {
            hi
        } else {
            hi - 1
        }
    }

    fn profile_index(&self, values: &[f64]) -> usize {
        let g = self.grid.len();
        values.iter().fold(0usize, |acc, &v| acc * g + self.snap(v))
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// CSV with header `v_1,..,v_I,q_1,..,q_I,m_1,..,m_I`, one grid profile
    /// per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 1..=self.dim {
            out.push_str(&format!("v_{i},"));
        }
        for i in 1..=self.dim {
            out.push_str(&format!("q_{i},"));
        }
        for i in 1..=self.dim {
            out.push_str(&format!("m_{i}"));
            out.push(if i == self.dim { '\n' } else { ',' });
        }
        let g = self.grid.len();
        let p = g.pow(self.dim as u32);
        for t in 0..p {
            let mut rest = t;
            let mut coords = vec![0usize; self.dim];
            for d in (0..self.dim).rev() {
                coords[d] = rest % g;
                rest /= g;
            }
            let mut fields: Vec<String> = coords
                .iter()
                .map(|&cidx| fmt_g12(self.grid[cidx]))
                .collect();
            for i in 0..self.dim {
                fields.push(fmt_g12(self.q[t * self.dim + i]));
            }
            for i in 0..self.dim {
                fields.push(fmt_g12(self.m[t * self.dim + i]));
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

impl Mechanism for TabulatedMechanism {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn group(&self) -> GroupStructure {
        self.group
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn allocate(&self, values: &[f64]) -> Vec<f64> {
        let t = self.profile_index(values);
        self.q[t * self.dim..(t + 1) * self.dim].to_vec()
    }

    fn pay(&self, values: &[f64]) -> Vec<f64> {
        let t = self.profile_index(values);
        self.m[t * self.dim..(t + 1) * self.dim].to_vec()
    }

    fn own_value_breakpoints(&self, _i: usize, _values: &[f64]) -> Vec<f64> {
        // Snapping switches at cell midpoints.
        self.grid.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Solves the revenue-maximal grid mechanism tailored to the discretized
/// contamination mixture `(1-eps) F + eps B^rho` (ex-post equity, adjacent
/// incentive constraints). `warm` may carry the basis from another `eps` at
/// the same grid, which leaves the constraints unchanged.
pub fn tailored_mechanism(
    base: &[RegularMarginal],
    eps: f64,
    rho: f64,
    delta: f64,
    gamma: f64,
    group: GroupStructure,
    warm: Option<Basis>,
) -> Result<LpOutcome> {
    let table = crate::eval::contaminated_table(base, eps, rho, delta)?;
    let lp = GridMechanismLp::new(table, group, gamma, EquityMode::ExPost, IcMode::Adjacent)?;
    lp.solve_warm(warm.as_ref())
}

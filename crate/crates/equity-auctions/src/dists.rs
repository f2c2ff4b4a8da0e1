//! Value distributions on [0,1]: regular marginals with virtual values,
//! product joints, the Bernoulli-corner extremal distribution and its
//! contamination mixture, and grid discretization.

use crate::error::{Error, Result};
use crate::util::bisect_nondecreasing;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Absolute tolerance on total probability mass of discrete tables.
pub const MASS_TOL: f64 = 1e-9;

/// Fixed partition of bidders into a minority group (indices `0..n_min`)
/// followed by a majority group (indices `n_min..n_min + n_maj`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupStructure {
    n_min: usize,
    n_maj: usize,
}

impl GroupStructure {
    pub fn new(n_min: usize, n_maj: usize) -> Result<Self> {
        if n_min == 0 {
            return Err(Error::Config(
                "at least one minority bidder is required".into(),
            ));
        }
        Ok(Self { n_min, n_maj })
    }

    pub fn total(&self) -> usize {
        self.n_min + self.n_maj
    }

    pub fn n_minority(&self) -> usize {
        self.n_min
    }

    pub fn n_majority(&self) -> usize {
        self.n_maj
    }

    pub fn is_minority(&self, i: usize) -> bool {
        i < self.n_min
    }

    pub fn minority_indices(&self) -> std::ops::Range<usize> {
        0..self.n_min
    }

    pub fn majority_indices(&self) -> std::ops::Range<usize> {
        self.n_min..self.total()
    }
}

/// A one-dimensional value distribution on [0,1] with strictly positive
/// density on (0,1) and a non-decreasing virtual value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum RegularMarginal {
    Uniform,
    Beta22,
    /// Piecewise-linear CDF through `(knots[j], cdf[j])`. Regularity is
    /// validated numerically at construction; use [`RegularMarginal::table`].
    Table {
        knots: Vec<f64>,
        cdf: Vec<f64>,
    },
}

impl RegularMarginal {
    /// Builds a custom-table marginal and rejects irregular inputs.
    pub fn table(knots: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        if knots.len() != cdf.len() || knots.len() < 2 {
            return Err(Error::Config("table needs matching knots/cdf, len >= 2".into()));
        }
        if knots[0] != 0.0 || *knots.last().unwrap() != 1.0 {
            return Err(Error::Config("table knots must span [0, 1]".into()));
        }
        if cdf[0] != 0.0 || (*cdf.last().unwrap() - 1.0).abs() > MASS_TOL {
            return Err(Error::Config("table cdf must run from 0 to 1".into()));
        }
        for w in knots.windows(2).zip(cdf.windows(2)) {
            let (k, c) = w;
            if k[1] <= k[0] {
                return Err(Error::Config("table knots must be strictly increasing".into()));
            }
            if c[1] <= c[0] {
                return Err(Error::Config(
                    "table cdf must be strictly increasing (positive density)".into(),
                ));
            }
        }
        let m = RegularMarginal::Table { knots, cdf };
        // Regularity check on a 1e-3 grid.
        let mut prev = f64::NEG_INFINITY;
        for j in 0..=1000 {
            let v = j as f64 / 1000.0;
            let p = m.psi(v);
            if p < prev - 1e-9 {
                return Err(Error::Config(format!(
                    "irregular table marginal: virtual value decreases near v = {v}"
                )));
            }
            prev = prev.max(p);
        }
        Ok(m)
    }

    pub fn cdf(&self, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        match self {
            RegularMarginal::Uniform => v,
            RegularMarginal::Beta22 => v * v * (3.0 - 2.0 * v),
            RegularMarginal::Table { knots, cdf } => {
                let j = knots.partition_point(|&k| k <= v).min(knots.len() - 1);
                let (k0, k1) = (knots[j - 1], knots[j]);
                let (c0, c1) = (cdf[j - 1], cdf[j]);
                c0 + (c1 - c0) * (v - k0) / (k1 - k0)
            }
        }
    }

    pub fn density(&self, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        match self {
            RegularMarginal::Uniform => 1.0,
            RegularMarginal::Beta22 => 6.0 * v * (1.0 - v),
            RegularMarginal::Table { knots, cdf } => {
                let j = knots.partition_point(|&k| k <= v).min(knots.len() - 1);
                (cdf[j] - cdf[j - 1]) / (knots[j] - knots[j - 1])
            }
        }
    }

    /// Virtual value `psi(v) = v - (1 - F(v)) / f(v)`, with `psi(1) = 1`
    /// exactly. May be `-inf` where the density vanishes at 0.
    #[inline]
    pub fn psi(&self, v: f64) -> f64 {
        if v >= 1.0 {
            return 1.0;
        }
        match self {
            RegularMarginal::Uniform => 2.0 * v - 1.0,
            RegularMarginal::Beta22 => {
                // 1 - F(v) = (1 - v)^2 (1 + 2v), f(v) = 6 v (1 - v)
                if v <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    v - (1.0 - v) * (1.0 + 2.0 * v) / (6.0 * v)
                }
            }
            _ => {
                let f = self.density(v);
                if f <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    v - (1.0 - self.cdf(v)) / f
                }
            }
        }
    }

    /// Checked variant of [`psi`](Self::psi).
    pub fn virtual_value(&self, v: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("value {v} outside [0, 1]")));
        }
        Ok(self.psi(v))
    }

    /// Smallest `v` with `psi(v) >= y`; `None` if even `psi(1) = 1 < y`.
    pub fn inverse_virtual_value(&self, y: f64) -> Option<f64> {
        if y == f64::NEG_INFINITY {
            return Some(0.0);
        }
        bisect_nondecreasing(|v| self.psi(v), y, 0.0, 1.0, 1e-10)
    }

    /// Inverse CDF, used for sampling.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            RegularMarginal::Uniform => u,
            _ => bisect_nondecreasing(|v| self.cdf(v), u, 0.0, 1.0, 1e-12).unwrap_or(1.0),
        }
    }
}

/// Atoms of the Bernoulli-corner distribution with correlation `rho`:
/// mass on the four corners of [0,1]^2.
pub fn corner_atoms(rho: f64) -> [([f64; 2], f64); 4] {
    let same = (1.0 + rho) / 4.0;
    let diff = (1.0 - rho) / 4.0;
    [
        ([0.0, 0.0], same),
        ([0.0, 1.0], diff),
        ([1.0, 0.0], diff),
        ([1.0, 1.0], same),
    ]
}

/// Discrete joint distribution supported on the grid `{0, delta, ..., 1}^dim`,
/// stored row-major (last coordinate fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    dim: usize,
    grid: Vec<f64>,
    masses: Vec<f64>,
}

impl DiscreteJoint {
    pub fn new(dim: usize, grid: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let n = grid.len().pow(dim as u32);
        if masses.len() != n {
            return Err(Error::Config(format!(
                "expected {n} masses for a {dim}-dim table, got {}",
                masses.len()
            )));
        }
        if masses.iter().any(|&m| m < -MASS_TOL) {
            return Err(Error::Config("negative probability mass".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Config(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { dim, grid, masses })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn grid_step(&self) -> f64 {
        1.0 / (self.grid.len() - 1) as f64
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Grid point for a flat row-major index.
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let k = self.grid.len();
        let mut out = vec![0.0; self.dim];
        for d in (0..self.dim).rev() {
            out[d] = self.grid[idx % k];
            idx /= k;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        (0..self.len()).map(move |i| (self.point(i), self.masses[i]))
    }
}

/// Joint distribution of the bidders' values.
#[derive(Debug, Clone, PartialEq)]
pub enum JointValueDistribution {
    /// Mutually independent coordinates.
    Product(Vec<RegularMarginal>),
    /// Mixture `(1 - eps) * product(base) + eps * B^rho`; requires 2 bidders.
    Contaminated {
        base: Vec<RegularMarginal>,
        eps: f64,
        rho: f64,
    },
    Discrete(DiscreteJoint),
}

impl JointValueDistribution {
    pub fn product(marginals: Vec<RegularMarginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::Config("product joint needs at least one marginal".into()));
        }
        Ok(JointValueDistribution::Product(marginals))
    }

    pub fn contaminated(base: Vec<RegularMarginal>, eps: f64, rho: f64) -> Result<Self> {
        if base.len() != 2 {
            return Err(Error::Config(
                "the corner contamination model is defined for exactly 2 bidders".into(),
            ));
        }
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Config(format!("eps = {eps} outside [0, 1]")));
        }
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::Config(format!("rho = {rho} outside [-1, 1]")));
        }
        Ok(JointValueDistribution::Contaminated { base, eps, rho })
    }

    pub fn dim(&self) -> usize {
        match self {
            JointValueDistribution::Product(m) => m.len(),
            JointValueDistribution::Contaminated { base, .. } => base.len(),
            JointValueDistribution::Discrete(t) => t.dim(),
        }
    }

    /// Draws `n` i.i.d. value profiles, reproducible under a fixed seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        match self {
            JointValueDistribution::Product(marginals) => {
                for _ in 0..n {
                    out.push(marginals.iter().map(|m| m.quantile(rng.gen())).collect());
                }
            }
            JointValueDistribution::Contaminated { base, eps, rho } => {
                let atoms = corner_atoms(*rho);
                for _ in 0..n {
                    if rng.gen::<f64>() < *eps {
                        let mut u: f64 = rng.gen();
                        let mut draw = atoms[3].0;
                        for (corner, p) in atoms {
                            if u < p {
                                draw = corner;
                                break;
                            }
                            u -= p;
                        }
                        out.push(draw.to_vec());
                    } else {
                        out.push(base.iter().map(|m| m.quantile(rng.gen())).collect());
                    }
                }
            }
            JointValueDistribution::Discrete(table) => {
                let mut cum = Vec::with_capacity(table.len());
                let mut acc = 0.0;
                for &m in table.masses() {
                    acc += m;
                    cum.push(acc);
                }
                for _ in 0..n {
                    let u: f64 = rng.gen::<f64>() * acc;
                    let idx = cum.partition_point(|&c| c < u).min(table.len() - 1);
                    out.push(table.point(idx));
                }
            }
        }
        out
    }

    /// Discretizes onto the grid `{0, delta, ..., 1}^I`. Each positive grid
    /// point `g` receives the mass of the half-open lower-left cell
    /// `prod_i (g_i - delta, g_i]`; the cell of `g_i = 0` is the single point
    /// `{0}`, so continuous marginals place no mass there while the corner
    /// atoms of `B^rho` land on grid points exactly.
    pub fn discretize(&self, delta: f64) -> Result<DiscreteJoint> {
        let k = (1.0 / delta).round();
        if !(k >= 2.0 && (1.0 / delta - k).abs() < 1e-9) {
            return Err(Error::Config(format!(
                "grid step {delta} is not 1/k for an integer k >= 2"
            )));
        }
        let k = k as usize;
        let grid: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
        let cell_masses = |m: &RegularMarginal| -> Vec<f64> {
            let mut w = vec![0.0; k + 1];
            for j in 1..=k {
                w[j] = m.cdf(grid[j]) - m.cdf(grid[j - 1]);
            }
            w
        };
        match self {
            JointValueDistribution::Product(marginals) => {
                let per: Vec<Vec<f64>> = marginals.iter().map(cell_masses).collect();
                let dim = marginals.len();
                let n = (k + 1).pow(dim as u32);
                let mut masses = vec![0.0; n];
                for (idx, mass) in masses.iter_mut().enumerate() {
                    let mut p = 1.0;
                    let mut rest = idx;
                    for d in (0..dim).rev() {
                        p *= per[d][rest % (k + 1)];
                        rest /= k + 1;
                    }
                    *mass = p;
                }
                DiscreteJoint::new(dim, grid, masses)
            }
            JointValueDistribution::Contaminated { base, eps, rho } => {
                let product = JointValueDistribution::Product(base.clone());
                let mut table = product.discretize(delta)?;
                for m in table.masses.iter_mut() {
                    *m *= 1.0 - eps;
                }
                for (corner, p) in corner_atoms(*rho) {
                    let mut idx = 0usize;
                    for &c in &corner {
                        idx = idx * (k + 1) + if c >= 1.0 { k } else { 0 };
                    }
                    table.masses[idx] += eps * p;
                }
                DiscreteJoint::new(2, table.grid, table.masses)
            }
            JointValueDistribution::Discrete(_) => Err(Error::Config(
                "discretize expects a product or contaminated joint".into(),
            )),
        }
    }
}

/// Structured description of a joint distribution, loadable from JSON:
/// `{"marginals":[{"family":"beta22"},...], "contamination":{"eps":0.1,"rho":0.0}}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DistributionConfig {
    pub marginals: Vec<RegularMarginal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contamination: Option<Contamination>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Contamination {
    pub eps: f64,
    pub rho: f64,
}

impl DistributionConfig {
    pub fn build(&self) -> Result<JointValueDistribution> {
        // Re-validate table marginals that came in through serde.
        let mut marginals = Vec::with_capacity(self.marginals.len());
        for m in &self.marginals {
            marginals.push(match m {
                RegularMarginal::Table { knots, cdf } => {
                    RegularMarginal::table(knots.clone(), cdf.clone())?
                }
                other => other.clone(),
            });
        }
        match self.contamination {
            Some(c) => JointValueDistribution::contaminated(marginals, c.eps, c.rho),
            None => JointValueDistribution::product(marginals),
        }
    }
}

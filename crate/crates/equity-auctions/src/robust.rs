//! A distribution-free mechanism with low worst-case ex-post regret against
//! the equity-constrained hindsight benchmark.
//!
//! The rule prices through the score `l(v) = (gamma v_a + v_c) / (1 + gamma)`
//! built from the top minority value `v_a` and the top majority value `v_c`:
//! when the majority side is on top, the winning pair receives total
//! probability `(1 + log l)^+` split `gamma : 1` between the two group
//! leaders; otherwise the top minority bidder alone receives
//! `(1 + log v_a)^+`. Payments are in closed form from the envelope identity.

use crate::dists::GroupStructure;
use crate::error::{Error, Result};
use crate::mech::Mechanism;

const E: f64 = std::f64::consts::E;

/// `1/e`, the boundary of the clamp in `(1 + log z)^+`.
pub fn log_clamp_point() -> f64 {
    1.0 / E
}

/// Antiderivative of `z -> (1 + log z)^+`: `P(z) = max(z, 1/e) log max(z, 1/e)`.
fn plog(z: f64) -> f64 {
    let z = z.max(1.0 / E);
    z * z.ln()
}

/// `(1 + log z)^+` for `z in [0, 1]`.
fn clamped_log(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        (1.0 + z.ln()).max(0.0)
    }
}

/// Prior-free mechanism for a fixed group structure and equity level.
#[derive(Debug, Clone, Copy)]
pub struct RobustMechanism {
    group: GroupStructure,
    gamma: f64,
}

impl RobustMechanism {
    pub fn new(group: GroupStructure, gamma: f64) -> Result<Self> {
        if gamma < 0.0 {
            return Err(Error::Config(format!("gamma = {gamma} must be >= 0")));
        }
        Ok(Self { group, gamma })
    }

    /// Lexicographic arg max of `values` over an index range.
    fn top(values: &[f64], range: std::ops::Range<usize>) -> Option<usize> {
        range.reduce(|best, i| if values[i] > values[best] { i } else { best })
    }

    /// `(top minority index, top majority index)`; the latter is `None` for a
    /// minority-only group.
    fn leaders(&self, values: &[f64]) -> (usize, Option<usize>) {
        let i_min = Self::top(values, self.group.minority_indices()).expect("minority nonempty");
        let i_maj = Self::top(values, self.group.majority_indices());
        (i_min, i_maj)
    }

    /// The pricing score `l(v) = (gamma v_a + v_c) / (1 + gamma)` evaluated
    /// with the top minority value `v_a` and top majority value `v_c`.
    pub fn score(&self, values: &[f64]) -> f64 {
        let (i_min, i_maj) = self.leaders(values);
        let a = values[i_min];
        let c = i_maj.map_or(0.0, |j| values[j]);
        (self.gamma * a + c) / (1.0 + self.gamma)
    }

    /// Set-aside decomposition `(q_all, q_min)` with
    /// `q = q_all / (1+gamma) + gamma q_min / (1+gamma)`: both components give
    /// their group leader weight `(1 + log lbar)^+` where `lbar` is the
    /// hindsight benchmark value.
    pub fn set_aside_decompose(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.group.total();
        let (i_min, i_maj) = self.leaders(values);
        let a = values[i_min];
        let max_all = i_maj.map_or(a, |j| values[j].max(a));
        let lbar = (max_all + self.gamma * a) / (1.0 + self.gamma);
        let w = clamped_log(lbar);
        let mut q_all = vec![0.0; n];
        let mut q_min = vec![0.0; n];
        // Overall leader with ties to the minority side.
        let i_all = match i_maj {
            Some(j) if values[j] > a => j,
            _ => i_min,
        };
        q_all[i_all] = w;
        q_min[i_min] = w;
        (q_all, q_min)
    }
}

impl Mechanism for RobustMechanism {
    fn name(&self) -> String {
        "robust-prior-free".into()
    }

    fn group(&self) -> GroupStructure {
        self.group
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn allocate(&self, values: &[f64]) -> Vec<f64> {
        let n = self.group.total();
        let gamma = self.gamma;
        let mut q = vec![0.0; n];
        let (i_min, i_maj) = self.leaders(values);
        let a = values[i_min];
        match i_maj {
            Some(j) if values[j] > a => {
                let w = clamped_log(self.score(values));
                q[i_min] = gamma / (1.0 + gamma) * w;
                q[j] = 1.0 / (1.0 + gamma) * w;
            }
            _ => {
                q[i_min] = clamped_log(a);
            }
        }
        q
    }

    fn pay(&self, values: &[f64]) -> Vec<f64> {
        let n = self.group.total();
        let gamma = self.gamma;
        let q = self.allocate(values);
        let mut m = vec![0.0; n];
        let (i_min, i_maj) = self.leaders(values);
        let a = values[i_min];
        let c = i_maj.map_or(0.0, |j| values[j]);
        // Score as a function of one leader's own value x, the other fixed.
        let l_of_min = |x: f64| (gamma * x + c) / (1.0 + gamma);
        let l_of_maj = |x: f64| (gamma * a + x) / (1.0 + gamma);
        if q[i_min] > 0.0 {
            // Runner-up among the other minority bidders; the integrand is
            // zero below it.
            let b = self
                .group
                .minority_indices()
                .filter(|&j| j != i_min)
                .map(|j| values[j])
                .fold(0.0_f64, f64::max);
            let integral = if a < c {
                // Entirely inside the split branch; substitute z = l(x).
                plog(l_of_min(a)) - plog(l_of_min(b))
            } else if b < c {
                // Split branch on (b, c), solo branch on (c, a); l(c) = c.
                plog(a) - plog(l_of_min(b))
            } else {
                plog(a) - plog(b)
            };
            m[i_min] = q[i_min] * a - integral;
        }
        if let Some(j) = i_maj {
            if q[j] > 0.0 {
                let b = self
                    .group
                    .majority_indices()
                    .filter(|&k| k != j)
                    .map(|k| values[k])
                    .fold(0.0_f64, f64::max);
                // The majority leader holds positive probability only above
                // both the minority top and the majority runner-up.
                let integral = plog(l_of_maj(c)) - plog(l_of_maj(a.max(b)));
                m[j] = q[j] * c - integral;
            }
        }
        m
    }

    fn own_value_breakpoints(&self, i: usize, values: &[f64]) -> Vec<f64> {
        let gamma = self.gamma;
        let (i_min, i_maj) = self.leaders(values);
        let a = values[i_min];
        let c = i_maj.map_or(0.0, |j| values[j]);
        let mut out = vec![1.0 / E];
        if self.group.is_minority(i) {
            let b = self
                .group
                .minority_indices()
                .filter(|&j| j != i)
                .map(|j| values[j])
                .fold(0.0_f64, f64::max);
            out.push(b);
            out.push(c);
            if gamma > 0.0 {
                // l(x) crosses 1/e.
                out.push(((1.0 + gamma) / E - c) / gamma);
            }
        } else {
            let b = self
                .group
                .majority_indices()
                .filter(|&j| j != i)
                .map(|j| values[j])
                .fold(0.0_f64, f64::max);
            out.push(b);
            out.push(a);
            out.push((1.0 + gamma) / E - gamma * a);
        }
        out.retain(|x| (0.0..1.0).contains(x));
        out
    }
}

//! The revenue-optimal mechanism under a known product of regular value
//! distributions: virtual-value based allocation with a `gamma/(1+gamma)`
//! set-aside for the minority group, and exact threshold payments.

use crate::dists::{GroupStructure, JointValueDistribution, RegularMarginal};
use crate::error::{Error, Result};
use crate::mech::Mechanism;

/// Optimal stochastic mechanism for independent regular marginals.
#[derive(Debug, Clone)]
pub struct StochasticMechanism {
    group: GroupStructure,
    gamma: f64,
    marginals: Vec<RegularMarginal>,
}

/// Which estimator [`StochasticMechanism::expected_revenue`] uses.
#[derive(Debug, Clone, Copy)]
pub enum RevenueEstimator {
    /// Exhaustive sum over the discretized product prior with the given grid step.
    ClosedGrid { delta: f64 },
    /// Seeded Monte Carlo with the given sample count.
    MonteCarlo { samples: usize, seed: u64 },
}

impl StochasticMechanism {
    pub fn new(
        group: GroupStructure,
        gamma: f64,
        marginals: Vec<RegularMarginal>,
    ) -> Result<Self> {
        if gamma < 0.0 {
            return Err(Error::Config(format!("gamma = {gamma} must be >= 0")));
        }
        if marginals.len() != group.total() {
            return Err(Error::Config(format!(
                "{} marginals for {} bidders",
                marginals.len(),
                group.total()
            )));
        }
        Ok(Self {
            group,
            gamma,
            marginals,
        })
    }

    pub fn marginals(&self) -> &[RegularMarginal] {
        &self.marginals
    }

    fn psis(&self, values: &[f64]) -> Vec<f64> {
        self.marginals
            .iter()
            .zip(values)
            .map(|(m, &v)| m.psi(v))
            .collect()
    }

    /// Lexicographic arg max over an index range; `None` if the range is empty.
    fn top(psis: &[f64], range: std::ops::Range<usize>) -> Option<usize> {
        range.reduce(|best, i| if psis[i] > psis[best] { i } else { best })
    }

    /// The equity-adjusted virtual surplus condition for selling at all:
    /// `psi_top_all + gamma * psi_top_min >= 0`, with `-inf` handled so no
    /// NaN arises and `gamma = 0` reduces to the plain reserve `psi >= 0`.
    fn surplus_ok(&self, psi_all: f64, psi_min: f64) -> bool {
        if psi_all == f64::NEG_INFINITY {
            return false;
        }
        if self.gamma == 0.0 {
            psi_all >= 0.0
        } else {
            psi_min.is_finite() && psi_all + self.gamma * psi_min >= 0.0
        }
    }

    /// The set-aside decomposition `(q_all, q_min)` of the allocation rule:
    /// `q* = q_all / (1+gamma) + gamma q_min / (1+gamma)`, with `q_min`
    /// allocating exclusively to the minority group.
    pub fn set_aside_decompose(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.group.total();
        let psis = self.psis(values);
        let mut q_all = vec![0.0; n];
        let mut q_min = vec![0.0; n];
        let top_all = Self::top(&psis, 0..n).expect("at least one bidder");
        let top_min = Self::top(&psis, self.group.minority_indices()).expect("minority nonempty");
        if self.surplus_ok(psis[top_all], psis[top_min]) {
            q_all[top_all] = 1.0;
            q_min[top_min] = 1.0;
        }
        (q_all, q_min)
    }

    /// Expected revenue `E[sum_i m_i]`, together with a cross-check of the
    /// virtual-surplus identity `E[sum_i m_i] = E[sum_i psi_i(v_i) q_i(v)]`.
    ///
    /// Returns `(revenue, virtual_surplus)`. The two agree within estimator
    /// tolerance for a product of the mechanism's own marginals.
    pub fn expected_revenue(&self, estimator: RevenueEstimator) -> Result<(f64, f64)> {
        let joint = JointValueDistribution::product(self.marginals.clone())?;
        let accumulate = |v: &[f64]| -> (f64, f64) {
            let q = self.allocate(v);
            let m = self.pay(v);
            let psis = self.psis(v);
            let surplus = psis
                .iter()
                .zip(&q)
                .map(|(&ps, &qi)| if qi > 0.0 { ps * qi } else { 0.0 })
                .sum::<f64>();
            (m.iter().sum::<f64>(), surplus)
        };
        match estimator {
            RevenueEstimator::ClosedGrid { delta } => {
                let table = joint.discretize(delta)?;
                let mut rev = 0.0;
                let mut surplus = 0.0;
                for (v, p) in table.iter() {
                    if p == 0.0 {
                        continue;
                    }
                    let (r, s) = accumulate(&v);
                    rev += p * r;
                    surplus += p * s;
                }
                Ok((rev, surplus))
            }
            RevenueEstimator::MonteCarlo { samples, seed } => {
                let mut rev = 0.0;
                let mut surplus = 0.0;
                for v in joint.sample(samples, seed) {
                    let (r, s) = accumulate(&v);
                    rev += r;
                    surplus += s;
                }
                Ok((rev / samples as f64, surplus / samples as f64))
            }
        }
    }

    /// Own-value thresholds at which `x -> q_i(x, v_{-i})` jumps: entry into
    /// the partial slice (`gamma/(1+gamma)` for minority, `1/(1+gamma)` for
    /// majority) and, for minority bidders, entry into probability 1.
    fn jump_points(&self, i: usize, values: &[f64]) -> (Option<f64>, Option<f64>) {
        let psis = self.psis(values);
        let gamma = self.gamma;
        let marginal = &self.marginals[i];
        let threshold = |level: f64| -> Option<f64> {
            if level == f64::NEG_INFINITY {
                Some(0.0)
            } else {
                marginal.inverse_virtual_value(level)
            }
        };
        if self.group.is_minority(i) {
            let rival_min = self
                .group
                .minority_indices()
                .filter(|&j| j != i)
                .map(|j| psis[j])
                .fold(f64::NEG_INFINITY, f64::max);
            let max_maj = self
                .group
                .majority_indices()
                .map(|j| psis[j])
                .fold(f64::NEG_INFINITY, f64::max);
            // Full win: top overall (ties go to the minority side) with
            // non-negative virtual value.
            let full = threshold(rival_min.max(max_maj).max(0.0));
            // Set-aside slice: top minority below the majority winner, with
            // max_maj + gamma psi_i >= 0. Nonempty only if max_maj >= 0.
            let partial = if gamma > 0.0 && max_maj >= 0.0 && max_maj > rival_min {
                threshold(rival_min.max(-max_maj / gamma))
            } else {
                None
            };
            match (partial, full) {
                (Some(p), Some(f)) if p >= f => (None, Some(f)),
                other => other,
            }
        } else {
            let rival_maj = self
                .group
                .majority_indices()
                .filter(|&j| j != i)
                .map(|j| psis[j])
                .fold(f64::NEG_INFINITY, f64::max);
            let max_min = self
                .group
                .minority_indices()
                .map(|j| psis[j])
                .fold(f64::NEG_INFINITY, f64::max);
            let level = if gamma == 0.0 {
                rival_maj.max(max_min).max(0.0)
            } else if max_min == f64::NEG_INFINITY {
                // gamma * max_min diverges: the surplus condition never holds.
                return (None, None);
            } else {
                rival_maj.max(max_min).max(-gamma * max_min)
            };
            (threshold(level), None)
        }
    }
}

impl Mechanism for StochasticMechanism {
    fn name(&self) -> String {
        "stochastic-optimal".into()
    }

    fn group(&self) -> GroupStructure {
        self.group
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn allocate(&self, values: &[f64]) -> Vec<f64> {
        let n = self.group.total();
        let psis = self.psis(values);
        let gamma = self.gamma;
        let mut q = vec![0.0; n];
        let top_all = Self::top(&psis, 0..n).expect("at least one bidder");
        let top_min = Self::top(&psis, self.group.minority_indices()).expect("minority nonempty");
        if self.group.is_minority(top_all) {
            if psis[top_all] >= 0.0 {
                q[top_all] = 1.0;
            }
        } else if self.surplus_ok(psis[top_all], psis[top_min]) {
            q[top_all] = 1.0 / (1.0 + gamma);
            if gamma > 0.0 {
                q[top_min] = gamma / (1.0 + gamma);
            }
        }
        q
    }

    fn pay(&self, values: &[f64]) -> Vec<f64> {
        let n = self.group.total();
        let q = self.allocate(values);
        let gamma = self.gamma;
        let mut m = vec![0.0; n];
        for i in 0..n {
            if q[i] <= 0.0 {
                continue;
            }
            let (partial, full) = self.jump_points(i, values);
            // Payment is the sum over own-value jumps t <= v_i of
            // (jump size) * t, per the envelope identity for step rules.
            // Which jumps lie below v_i is read off the attained level q_i
            // instead of comparing t with v_i: the thresholds come out of a
            // bisection with ~1e-10 error, and at exact ties (t = v_i) that
            // comparison would be a coin flip. Jumps are clamped to v_i so
            // noise never pushes a payment above the bidder's value.
            if self.group.is_minority(i) {
                let pw = gamma / (1.0 + gamma);
                if q[i] >= 1.0 - 1e-9 {
                    let f = full.expect("full win has a finite threshold").min(values[i]);
                    m[i] = match partial {
                        Some(p) => pw * p.min(values[i]) + (1.0 - pw) * f,
                        None => f,
                    };
                } else {
                    let p = partial.expect("set-aside win has a finite threshold");
                    m[i] = pw * p.min(values[i]);
                }
            } else {
                let t = partial.expect("majority win has a finite threshold");
                m[i] = t.min(values[i]) / (1.0 + gamma);
            }
        }
        m
    }

    fn own_value_breakpoints(&self, i: usize, values: &[f64]) -> Vec<f64> {
        let (partial, full) = self.jump_points(i, values);
        partial.into_iter().chain(full).collect()
    }
}

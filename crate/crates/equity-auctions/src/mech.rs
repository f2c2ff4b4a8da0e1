//! Mechanism abstraction, the equity-constrained hindsight benchmark,
//! ex-post regret, and feasibility auditing (IC/IR/AF/Eq).

use crate::dists::GroupStructure;
use crate::error::{Error, Result};
use crate::quad::simpson_with_breakpoints;
use crate::util::fmt_g12;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;

/// Numerical slack admitted on the feasibility constraints.
pub const FEAS_TOL: f64 = 1e-9;

/// A point in [0,1]^I together with its group partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueProfile {
    values: Vec<f64>,
    group: GroupStructure,
}

impl ValueProfile {
    pub fn new(values: Vec<f64>, group: GroupStructure) -> Result<Self> {
        if values.len() != group.total() {
            return Err(Error::Domain(format!(
                "profile has {} values for {} bidders",
                values.len(),
                group.total()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Domain("profile coordinates must lie in [0, 1]".into()));
        }
        Ok(Self { values, group })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn group(&self) -> GroupStructure {
        self.group
    }
}

/// Allocation probabilities and payments for one profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub q: Vec<f64>,
    pub m: Vec<f64>,
}

impl Outcome {
    /// Checks AF, Eq and the IR upper bound `m_i <= q_i v_i` at tolerance.
    pub fn check(&self, values: &[f64], group: GroupStructure, gamma: f64) -> Result<()> {
        let qsum: f64 = self.q.iter().sum();
        if qsum > 1.0 + FEAS_TOL {
            return Err(Error::Domain(format!("total allocation {qsum} exceeds 1")));
        }
        let qmin: f64 = group.minority_indices().map(|i| self.q[i]).sum();
        let qmaj: f64 = group.majority_indices().map(|i| self.q[i]).sum();
        if qmin < gamma * qmaj - FEAS_TOL {
            return Err(Error::Domain(format!(
                "equity violated: minority {qmin} < gamma * majority {}",
                gamma * qmaj
            )));
        }
        for i in 0..group.total() {
            if self.m[i] > self.q[i] * values[i] + FEAS_TOL {
                return Err(Error::Domain(format!("bidder {i} pays more than q_i v_i")));
            }
        }
        Ok(())
    }
}

/// A deterministic direct mechanism: an allocation rule and a payment rule
/// over value profiles, tagged with its equity level.
pub trait Mechanism: Sync {
    fn name(&self) -> String;
    fn group(&self) -> GroupStructure;
    fn gamma(&self) -> f64;
    fn allocate(&self, values: &[f64]) -> Vec<f64>;
    fn pay(&self, values: &[f64]) -> Vec<f64>;

    fn outcome(&self, values: &[f64]) -> Outcome {
        Outcome {
            q: self.allocate(values),
            m: self.pay(values),
        }
    }

    /// Candidate discontinuities/kinks of `x -> q_i(x, v_{-i})` on [0,1].
    /// Used to split quadrature ranges when auditing the payment identity.
    fn own_value_breakpoints(&self, _i: usize, _values: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

/// Highest revenue achievable in hindsight under the equity constraint:
/// `(1/(1+gamma)) max_i v_i + (gamma/(1+gamma)) max_{minority} v_i`.
pub fn hindsight_revenue(values: &[f64], group: GroupStructure, gamma: f64) -> f64 {
    let max_all = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_min = group
        .minority_indices()
        .map(|i| values[i])
        .fold(f64::NEG_INFINITY, f64::max);
    (max_all + gamma * max_min) / (1.0 + gamma)
}

/// Ex-post regret of a mechanism at one profile: hindsight revenue minus
/// collected payments.
pub fn ex_post_regret(mech: &dyn Mechanism, values: &[f64]) -> f64 {
    let paid: f64 = mech.pay(values).iter().sum();
    hindsight_revenue(values, mech.group(), mech.gamma()) - paid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Monotonicity,
    PaymentIdentity,
    /// Discrete no-deviation constraint used by the grid audit.
    IncentiveCompatibility,
    AllocationFeasibility,
    Equity,
    IndividualRationality,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintKind::Monotonicity => "monotonicity",
            ConstraintKind::PaymentIdentity => "payment-identity",
            ConstraintKind::IncentiveCompatibility => "incentive-compatibility",
            ConstraintKind::AllocationFeasibility => "allocation-feasibility",
            ConstraintKind::Equity => "equity",
            ConstraintKind::IndividualRationality => "individual-rationality",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub constraint: ConstraintKind,
    pub profile: Vec<f64>,
    pub magnitude: f64,
}

/// Result of a feasibility audit. Empty means feasible at the tolerance.
#[derive(Debug, Clone, Default)]
pub struct AuditReport {
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst(&self, kind: ConstraintKind) -> Option<&Violation> {
        self.violations
            .iter()
            .filter(|v| v.constraint == kind)
            .max_by(|a, b| a.magnitude.partial_cmp(&b.magnitude).unwrap())
    }

    /// CSV serialization: `constraint,profile,violation`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("constraint,profile,violation\n");
        for v in &self.violations {
            let profile = v
                .profile
                .iter()
                .map(|x| fmt_g12(*x))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!(
                "{},{},{}\n",
                v.constraint,
                profile,
                fmt_g12(v.magnitude)
            ));
        }
        out
    }
}

/// Knobs for [`audit_feasibility`].
#[derive(Debug, Clone, Copy)]
pub struct AuditOptions {
    /// Grid step for exhaustive audits (I <= 3).
    pub delta: f64,
    /// Violation tolerance.
    pub tol: f64,
    /// Total Simpson panel budget per payment-identity integral.
    pub panels: usize,
    /// Sample count for high-dimensional audits (I > 3).
    pub samples: usize,
    pub seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            delta: 0.02,
            tol: 1e-6,
            panels: 10_000,
            samples: 100_000,
            seed: 0,
        }
    }
}

/// Audits a mechanism against the Lemma-1 IC characterization (allocation
/// monotonicity plus the envelope payment identity, the latter checked by
/// quadrature) and the AF/Eq/IR constraints.
///
/// For I <= 3 the audit sweeps an exhaustive delta-grid over [0,1]^I; for
/// larger I it checks uniformly sampled profiles plus all corner profiles,
/// with monotonicity probed at random lower own-value reports.
pub fn audit_feasibility(mech: &dyn Mechanism, opts: &AuditOptions) -> AuditReport {
    let group = mech.group();
    let dim = group.total();
    let profiles: Vec<Vec<f64>> = if dim <= 3 {
        let k = (1.0 / opts.delta).round() as usize;
        let grid: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
        let mut out = Vec::with_capacity((k + 1).pow(dim as u32));
        let mut idx = vec![0usize; dim];
        loop {
            out.push(idx.iter().map(|&j| grid[j]).collect());
            let mut d = dim;
            loop {
                if d == 0 {
                    return audit_profiles(mech, &out, opts, Some(opts.delta));
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] <= k {
                    break;
                }
                idx[d] = 0;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut out: Vec<Vec<f64>> = (0..opts.samples)
            .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
            .collect();
        for c in 0..(1usize << dim) {
            out.push((0..dim).map(|d| ((c >> d) & 1) as f64).collect());
        }
        out
    };
    audit_profiles(mech, &profiles, opts, None)
}

/// Audits a grid-tabulated mechanism on its own grid: discrete incentive
/// compatibility against every same-line deviation, plus IR/AF/Eq at each
/// grid profile. This is the right check for mechanisms defined by nearest-
/// grid snapping, whose payments satisfy the discrete envelope rather than
/// the continuous payment identity.
pub fn audit_grid_feasibility(mech: &dyn Mechanism, delta: f64, tol: f64) -> AuditReport {
    let group = mech.group();
    let gamma = mech.gamma();
    let dim = group.total();
    assert!(dim <= 3, "grid audit supports at most 3 bidders");
    let k = (1.0 / delta).round() as usize;
    let g = k + 1;
    let grid: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
    let p = g.pow(dim as u32);
    let point = |t: usize| -> Vec<f64> {
        let mut rest = t;
        let mut v = vec![0.0; dim];
        for d in (0..dim).rev() {
            v[d] = grid[rest % g];
            rest /= g;
        }
        v
    };
    let outcomes: Vec<(Vec<f64>, Vec<f64>)> = (0..p)
        .into_par_iter()
        .map(|t| {
            let v = point(t);
            (mech.allocate(&v), mech.pay(&v))
        })
        .collect();
    let stride: Vec<usize> = (0..dim).map(|d| g.pow((dim - 1 - d) as u32)).collect();
    let violations: Vec<Violation> = (0..p)
        .into_par_iter()
        .flat_map_iter(|t| {
            let v = point(t);
            let (q, m) = &outcomes[t];
            let mut found = Vec::new();
            let qsum: f64 = q.iter().sum();
            if qsum > 1.0 + tol {
                found.push(Violation {
                    constraint: ConstraintKind::AllocationFeasibility,
                    profile: v.clone(),
                    magnitude: qsum - 1.0,
                });
            }
            let qmin: f64 = group.minority_indices().map(|i| q[i]).sum();
            let qmaj: f64 = group.majority_indices().map(|i| q[i]).sum();
            if qmin < gamma * qmaj - tol {
                found.push(Violation {
                    constraint: ConstraintKind::Equity,
                    profile: v.clone(),
                    magnitude: gamma * qmaj - qmin,
                });
            }
            for i in 0..dim {
                let truth = q[i] * v[i] - m[i];
                if truth < -tol {
                    found.push(Violation {
                        constraint: ConstraintKind::IndividualRationality,
                        profile: v.clone(),
                        magnitude: -truth,
                    });
                }
                let ci = (t / stride[i]) % g;
                let base = t - ci * stride[i];
                let mut worst = 0.0f64;
                for j in 0..g {
                    if j == ci {
                        continue;
                    }
                    let u = base + j * stride[i];
                    let (qu, mu) = &outcomes[u];
                    worst = worst.max(qu[i] * v[i] - mu[i] - truth);
                }
                if worst > tol {
                    found.push(Violation {
                        constraint: ConstraintKind::IncentiveCompatibility,
                        profile: v.clone(),
                        magnitude: worst,
                    });
                }
            }
            found.into_iter()
        })
        .collect();
    AuditReport { violations }
}

fn audit_profiles(
    mech: &dyn Mechanism,
    profiles: &[Vec<f64>],
    opts: &AuditOptions,
    grid_step: Option<f64>,
) -> AuditReport {
    let group = mech.group();
    let gamma = mech.gamma();
    let dim = group.total();
    let tol = opts.tol;
    let violations: Vec<Violation> = profiles
        .par_iter()
        .enumerate()
        .flat_map_iter(|(pidx, v)| {
            let mut found = Vec::new();
            let q = mech.allocate(v);
            let m = mech.pay(v);
            let qsum: f64 = q.iter().sum();
            if qsum > 1.0 + tol {
                found.push(Violation {
                    constraint: ConstraintKind::AllocationFeasibility,
                    profile: v.clone(),
                    magnitude: qsum - 1.0,
                });
            }
            let qmin: f64 = group.minority_indices().map(|i| q[i]).sum();
            let qmaj: f64 = group.majority_indices().map(|i| q[i]).sum();
            if qmin < gamma * qmaj - tol {
                found.push(Violation {
                    constraint: ConstraintKind::Equity,
                    profile: v.clone(),
                    magnitude: gamma * qmaj - qmin,
                });
            }
            for i in 0..dim {
                let util = q[i] * v[i] - m[i];
                if util < -tol {
                    found.push(Violation {
                        constraint: ConstraintKind::IndividualRationality,
                        profile: v.clone(),
                        magnitude: -util,
                    });
                }
                // Monotonicity of q_i in the own value.
                let lower = match grid_step {
                    Some(delta) if v[i] >= delta => Some(v[i] - delta),
                    Some(_) => None,
                    None => {
                        // sampled mode: deterministic pseudo-random lower report
                        let mut r = ChaCha8Rng::seed_from_u64(
                            opts.seed ^ (pidx as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ i as u64,
                        );
                        Some(v[i] * r.gen::<f64>())
                    }
                };
                if let Some(w) = lower {
                    let mut dev = v.clone();
                    dev[i] = w;
                    let q_low = mech.allocate(&dev)[i];
                    if q[i] < q_low - tol {
                        found.push(Violation {
                            constraint: ConstraintKind::Monotonicity,
                            profile: v.clone(),
                            magnitude: q_low - q[i],
                        });
                    }
                }
                // Payment identity m_i = q_i v_i - int_0^{v_i} q_i(x, v_{-i}) dx.
                let breaks = mech.own_value_breakpoints(i, v);
                let integral = simpson_with_breakpoints(
                    |x| {
                        let mut probe = v.clone();
                        probe[i] = x;
                        mech.allocate(&probe)[i]
                    },
                    0.0,
                    v[i],
                    &breaks,
                    opts.panels,
                );
                let envelope = q[i] * v[i] - integral;
                if (m[i] - envelope).abs() > tol {
                    found.push(Violation {
                        constraint: ConstraintKind::PaymentIdentity,
                        profile: v.clone(),
                        magnitude: (m[i] - envelope).abs(),
                    });
                }
            }
            found.into_iter()
        })
        .collect();
    AuditReport { violations }
}

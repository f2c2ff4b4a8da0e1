//! Evaluation engine: expected revenue, regret distributions, worst-case
//! regret search, equity-violation probability, the contamination sweep, and
//! brute-force oracles used by other modules' tests.

use crate::dists::{DiscreteJoint, GroupStructure, JointValueDistribution, RegularMarginal};
use crate::error::{Error, Result};
use crate::lp::tailored_mechanism;
use crate::mech::{ex_post_regret, hindsight_revenue, Mechanism};
use crate::util::fmt_g12;
use rayon::prelude::*;

/// How [`evaluate`] traverses the value space.
#[derive(Debug, Clone, Copy)]
pub enum EvalMode {
    /// Exact expectation over a discrete-table joint.
    ExhaustiveGrid,
    /// Seeded sampling from any joint.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Slack admitted before a profile counts as an ex-post equity violation.
pub const EQUITY_PROB_TOL: f64 = 1e-9;

/// Summary statistics of one mechanism under one distribution.
#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub mechanism: String,
    pub distribution: String,
    pub expected_revenue: f64,
    /// Monte Carlo standard error of the revenue; `None` in exhaustive mode.
    pub std_error: Option<f64>,
    pub regret_p25: f64,
    pub regret_p50: f64,
    pub regret_p75: f64,
    pub regret_max: f64,
    pub equity_violation_probability: f64,
    /// Human-readable description of the traversal (grid spec or sample count).
    pub mode: String,
    pub seed: Option<u64>,
}

impl EvaluationReport {
    pub fn csv_header() -> &'static str {
        "mechanism,distribution,expected_revenue,std_error,regret_p25,regret_p50,\
         regret_p75,regret_max,equity_violation_probability,mode,seed"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.mechanism,
            self.distribution,
            fmt_g12(self.expected_revenue),
            self.std_error.map(fmt_g12).unwrap_or_default(),
            fmt_g12(self.regret_p25),
            fmt_g12(self.regret_p50),
            fmt_g12(self.regret_p75),
            fmt_g12(self.regret_max),
            fmt_g12(self.equity_violation_probability),
            self.mode,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
        )
    }

    pub fn to_text(&self) -> String {
        let se = self
            .std_error
            .map(|s| format!(" (se {})", fmt_g12(s)))
            .unwrap_or_default();
        format!(
            "{} under {} [{}]\n  expected revenue: {}{}\n  regret p25/p50/p75/max: {} / {} / {} / {}\n  equity violation probability: {}\n",
            self.mechanism,
            self.distribution,
            self.mode,
            fmt_g12(self.expected_revenue),
            se,
            fmt_g12(self.regret_p25),
            fmt_g12(self.regret_p50),
            fmt_g12(self.regret_p75),
            fmt_g12(self.regret_max),
            fmt_g12(self.equity_violation_probability),
        )
    }
}

/// Nearest-rank percentile of a weighted sample; `pct` in (0, 100].
fn weighted_percentile(pairs: &mut Vec<(f64, f64)>, total: f64, pct: f64) -> f64 {
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let target = total * pct / 100.0;
    let mut acc = 0.0;
    for &(x, w) in pairs.iter() {
        acc += w;
        if acc >= target - 1e-15 {
            return x;
        }
    }
    pairs.last().map_or(0.0, |p| p.0)
}

/// Evaluates a mechanism under a joint distribution.
///
/// Exhaustive mode computes exact expectations over a discrete table; Monte
/// Carlo mode samples with the given seed and reports a standard error.
pub fn evaluate(
    mech: &dyn Mechanism,
    joint: &JointValueDistribution,
    mode: EvalMode,
) -> Result<EvaluationReport> {
    let group = mech.group();
    let gamma = mech.gamma();
    if joint.dim() != group.total() {
        return Err(Error::Config(format!(
            "joint has {} coordinates for {} bidders",
            joint.dim(),
            group.total()
        )));
    }
    let per_profile = |v: &[f64]| -> (f64, f64, bool) {
        let q = mech.allocate(v);
        let m = mech.pay(v);
        let rev: f64 = m.iter().sum();
        let regret = hindsight_revenue(v, group, gamma) - rev;
        let qmin: f64 = group.minority_indices().map(|i| q[i]).sum();
        let qmaj: f64 = group.majority_indices().map(|i| q[i]).sum();
        (rev, regret, qmin < gamma * qmaj - EQUITY_PROB_TOL)
    };
    match mode {
        EvalMode::ExhaustiveGrid => {
            let table = match joint {
                JointValueDistribution::Discrete(t) => t,
                _ => {
                    return Err(Error::Config(
                        "exhaustive evaluation requires a discrete-table joint".into(),
                    ))
                }
            };
            let stats: Vec<(f64, f64, bool, f64)> = (0..table.len())
                .into_par_iter()
                .filter(|&i| table.masses()[i] > 0.0)
                .map(|i| {
                    let v = table.point(i);
                    let (rev, regret, viol) = per_profile(&v);
                    (rev, regret, viol, table.masses()[i])
                })
                .collect();
            let total: f64 = stats.iter().map(|s| s.3).sum();
            let revenue: f64 = stats.iter().map(|s| s.0 * s.3).sum();
            let viol: f64 = stats.iter().filter(|s| s.2).map(|s| s.3).sum();
            let mut regrets: Vec<(f64, f64)> = stats.iter().map(|s| (s.1, s.3)).collect();
            let regret_max = regrets
                .iter()
                .map(|r| r.0)
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(EvaluationReport {
                mechanism: mech.name(),
                distribution: format!("discrete-table[{}]", table.len()),
                expected_revenue: revenue / total,
                std_error: None,
                regret_p25: weighted_percentile(&mut regrets, total, 25.0),
                regret_p50: weighted_percentile(&mut regrets, total, 50.0),
                regret_p75: weighted_percentile(&mut regrets, total, 75.0),
                regret_max,
                equity_violation_probability: viol / total,
                mode: format!("exhaustive delta={}", fmt_g12(table.grid_step())),
                seed: None,
            })
        }
        EvalMode::MonteCarlo { samples, seed } => {
            let draws = joint.sample(samples, seed);
            let stats: Vec<(f64, f64, bool)> =
                draws.par_iter().map(|v| per_profile(v)).collect();
            let n = samples as f64;
            let revenue: f64 = stats.iter().map(|s| s.0).sum::<f64>() / n;
            let var: f64 =
                stats.iter().map(|s| (s.0 - revenue).powi(2)).sum::<f64>() / (n - 1.0);
            let viol = stats.iter().filter(|s| s.2).count() as f64 / n;
            let mut regrets: Vec<(f64, f64)> = stats.iter().map(|s| (s.1, 1.0)).collect();
            let regret_max = regrets
                .iter()
                .map(|r| r.0)
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(EvaluationReport {
                mechanism: mech.name(),
                distribution: format!("sampled[{}d]", joint.dim()),
                expected_revenue: revenue,
                std_error: Some((var / n).sqrt()),
                regret_p25: weighted_percentile(&mut regrets, n, 25.0),
                regret_p50: weighted_percentile(&mut regrets, n, 50.0),
                regret_p75: weighted_percentile(&mut regrets, n, 75.0),
                regret_max,
                equity_violation_probability: viol,
                mode: format!("monte-carlo n={samples}"),
                seed: Some(seed),
            })
        }
    }
}

/// Maximum ex-post regret over a delta-grid with one local refinement pass at
/// step `delta / 10` around the incumbent. Returns `(value, profile)`.
pub fn worst_case_regret(
    mech: &dyn Mechanism,
    delta: f64,
) -> Result<(f64, Vec<f64>)> {
    let dim = mech.group().total();
    if dim > 3 {
        return Err(Error::Config(
            "exhaustive worst-case search supports at most 3 bidders".into(),
        ));
    }
    let k = (1.0 / delta).round() as usize;
    if k < 2 || (1.0 / delta - k as f64).abs() > 1e-9 {
        return Err(Error::Config(format!("grid step {delta} is not 1/k")));
    }
    let coarse: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
    // Deterministic reduction: parallel evaluation in index order, then a
    // sequential arg max with ties resolved to the smallest index.
    let scan = |points: &[Vec<f64>]| -> (f64, Vec<f64>) {
        let regrets: Vec<f64> = points
            .par_iter()
            .map(|v| ex_post_regret(mech, v))
            .collect();
        let mut best = f64::NEG_INFINITY;
        let mut idx = 0usize;
        for (j, &r) in regrets.iter().enumerate() {
            if r > best {
                best = r;
                idx = j;
            }
        }
        (best, points[idx].clone())
    };
    let grid_points = |axes: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for axis in axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        out
    };
    let axes: Vec<Vec<f64>> = vec![coarse; dim];
    let (mut best, mut arg) = scan(&grid_points(&axes));
    // Refinement: step delta/10 in a +/- delta box around the incumbent.
    let fine: Vec<Vec<f64>> = arg
        .iter()
        .map(|&x| {
            (0..=20)
                .map(|j| (x - delta + j as f64 * delta / 10.0).clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    let (fine_best, fine_arg) = scan(&grid_points(&fine));
    if fine_best > best {
        best = fine_best;
        arg = fine_arg;
    }
    Ok((best, arg))
}

/// Best vertex of the two-group ex-post feasible set under the objective
/// `tau_min * psi_min_max + tau_maj * psi_maj_max`.
///
/// Candidate vertices, in tie-break order: withhold `(0, 0)`, minority-only
/// `(1, 0)`, and the equity split `(gamma/(1+gamma), 1/(1+gamma))`.
pub fn vertex_oracle(psi_min_max: f64, psi_maj_max: f64, gamma: f64) -> (f64, f64) {
    let vertices = [
        (0.0, 0.0),
        (1.0, 0.0),
        (gamma / (1.0 + gamma), 1.0 / (1.0 + gamma)),
    ];
    let obj = |t: (f64, f64)| -> f64 {
        let a = if t.0 == 0.0 { 0.0 } else { t.0 * psi_min_max };
        let b = if t.1 == 0.0 { 0.0 } else { t.1 * psi_maj_max };
        a + b
    };
    let mut best = vertices[0];
    for v in vertices.into_iter().skip(1) {
        if obj(v) > obj(best) {
            best = v;
        }
    }
    best
}

/// Objective value reached by [`vertex_oracle`].
pub fn vertex_oracle_objective(psi_min_max: f64, psi_maj_max: f64, gamma: f64) -> f64 {
    let (tmin, tmaj) = vertex_oracle(psi_min_max, psi_maj_max, gamma);
    let a = if tmin == 0.0 { 0.0 } else { tmin * psi_min_max };
    let b = if tmaj == 0.0 { 0.0 } else { tmaj * psi_maj_max };
    a + b
}

/// One contamination level of [`normalized_revenue_sweep`].
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub eps: f64,
    /// Expected revenue of the tailored LP mechanism under the same table.
    pub tailored_objective: f64,
    /// Per mechanism (by name): revenue / tailored_objective and the 75th
    /// regret percentile under the contaminated table.
    pub entries: Vec<(String, f64, f64)>,
}

/// Contamination sweep table.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub gamma: f64,
    pub rho: f64,
    pub delta: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// CSV: `eps,mechanism,normalized_revenue,regret_p75`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,mechanism,normalized_revenue,regret_p75\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},tailored,1,{}\n",
                fmt_g12(row.eps),
                fmt_g12(
                    row.entries
                        .iter()
                        .find(|e| e.0 == "tailored")
                        .map(|e| e.2)
                        .unwrap_or(f64::NAN)
                ),
            ));
            for (name, norm, p75) in &row.entries {
                if name == "tailored" {
                    continue;
                }
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_g12(row.eps),
                    name,
                    fmt_g12(*norm),
                    fmt_g12(*p75)
                ));
            }
        }
        out
    }
}

/// For each contamination level, re-solves the tailored LP under the
/// discretized mixture and evaluates every given mechanism there, normalizing
/// revenues by the tailored optimum. The tailored mechanism itself is always
/// included under the name `tailored`.
pub fn normalized_revenue_sweep(
    base: &[RegularMarginal],
    group: GroupStructure,
    gamma: f64,
    eps_list: &[f64],
    rho: f64,
    delta: f64,
    mechs: &[&dyn Mechanism],
) -> Result<SweepTable> {
    let mut rows = Vec::with_capacity(eps_list.len());
    let mut warm = None;
    for &eps in eps_list {
        let table = contaminated_table(base, eps, rho, delta)?;
        let solved = tailored_mechanism(base, eps, rho, delta, gamma, group, warm.take())?;
        warm = Some(solved.basis.clone());
        let joint = JointValueDistribution::Discrete(table);
        let mut entries = Vec::new();
        let tailored_report =
            evaluate(&solved.mechanism, &joint, EvalMode::ExhaustiveGrid)?;
        entries.push((
            "tailored".to_string(),
            1.0,
            tailored_report.regret_p75,
        ));
        for m in mechs {
            let report = evaluate(*m, &joint, EvalMode::ExhaustiveGrid)?;
            entries.push((
                m.name(),
                report.expected_revenue / solved.objective,
                report.regret_p75,
            ));
        }
        rows.push(SweepRow {
            eps,
            tailored_objective: solved.objective,
            entries,
        });
    }
    Ok(SweepTable {
        gamma,
        rho,
        delta,
        rows,
    })
}

/// Discretization of the contamination mixture `(1-eps) F + eps B^rho`
/// (degenerating to the plain product at `eps = 0`).
pub fn contaminated_table(
    base: &[RegularMarginal],
    eps: f64,
    rho: f64,
    delta: f64,
) -> Result<DiscreteJoint> {
    let joint = if eps == 0.0 {
        JointValueDistribution::product(base.to_vec())?
    } else {
        JointValueDistribution::contaminated(base.to_vec(), eps, rho)?
    };
    joint.discretize(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robust::RobustMechanism;

    struct ZeroMechanism(GroupStructure, f64);

    impl Mechanism for ZeroMechanism {
        fn name(&self) -> String {
            "zero".into()
        }
        fn group(&self) -> GroupStructure {
            self.0
        }
        fn gamma(&self) -> f64 {
            self.1
        }
        fn allocate(&self, values: &[f64]) -> Vec<f64> {
            vec![0.0; values.len()]
        }
        fn pay(&self, values: &[f64]) -> Vec<f64> {
            vec![0.0; values.len()]
        }
    }

    fn uniform2() -> JointValueDistribution {
        JointValueDistribution::product(vec![
            RegularMarginal::Uniform,
            RegularMarginal::Uniform,
        ])
        .unwrap()
    }

    #[test]
    fn zero_mechanism_regret_is_the_benchmark() {
        let g = GroupStructure::new(1, 1).unwrap();
        let z = ZeroMechanism(g, 0.25);
        let table = uniform2().discretize(0.1).unwrap();
        let joint = JointValueDistribution::Discrete(table.clone());
        let r = evaluate(&z, &joint, EvalMode::ExhaustiveGrid).unwrap();
        assert_eq!(r.expected_revenue, 0.0);
        assert_eq!(r.equity_violation_probability, 0.0);
        // Regret distribution equals the benchmark distribution.
        let mut bench: Vec<(f64, f64)> = table
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(v, p)| (hindsight_revenue(&v, g, 0.25), p))
            .collect();
        let p75 = weighted_percentile(&mut bench, 1.0, 75.0);
        assert!((r.regret_p75 - p75).abs() < 1e-12);
        assert!((r.regret_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn percentiles_are_ordered() {
        let g = GroupStructure::new(1, 1).unwrap();
        let m = RobustMechanism::new(g, 0.5).unwrap();
        let table = uniform2().discretize(0.05).unwrap();
        let joint = JointValueDistribution::Discrete(table);
        let r = evaluate(&m, &joint, EvalMode::ExhaustiveGrid).unwrap();
        assert!(r.regret_p25 <= r.regret_p50);
        assert!(r.regret_p50 <= r.regret_p75);
        assert!(r.regret_p75 <= r.regret_max);
        assert!((0.0..=1.0).contains(&r.equity_violation_probability));
    }

    #[test]
    fn monte_carlo_agrees_with_exhaustive_on_tables() {
        let g = GroupStructure::new(1, 1).unwrap();
        let m = RobustMechanism::new(g, 0.25).unwrap();
        let table = uniform2().discretize(0.1).unwrap();
        let joint = JointValueDistribution::Discrete(table);
        let exact = evaluate(&m, &joint, EvalMode::ExhaustiveGrid).unwrap();
        let mc = evaluate(
            &m,
            &joint,
            EvalMode::MonteCarlo {
                samples: 100_000,
                seed: 4,
            },
        )
        .unwrap();
        let se = mc.std_error.unwrap();
        assert!(
            (mc.expected_revenue - exact.expected_revenue).abs() < 3.0 * se,
            "mc {} vs exact {} (se {se})",
            mc.expected_revenue,
            exact.expected_revenue
        );
    }

    #[test]
    fn worst_case_regret_of_zero_mechanism_is_one() {
        let g = GroupStructure::new(1, 1).unwrap();
        let z = ZeroMechanism(g, 1.0);
        let (val, arg) = worst_case_regret(&z, 0.25).unwrap();
        assert!((val - 1.0).abs() < 1e-12);
        // Ties resolve to the first grid profile in scan order; any profile
        // with a minority value of 1 attains the full regret of 1.
        assert_eq!(arg, vec![1.0, 0.0]);
    }

    #[test]
    fn worst_case_regret_prior_free_examples() {
        let g = GroupStructure::new(1, 1).unwrap();
        let e_inv = (-1.0f64).exp();
        let m = RobustMechanism::new(g, 0.0).unwrap();
        let (val, _) = worst_case_regret(&m, 0.05).unwrap();
        assert!((val - e_inv).abs() < 1e-3, "val = {val}");
        let m = RobustMechanism::new(g, 0.25).unwrap();
        let (val, _) = worst_case_regret(&m, 0.05).unwrap();
        let theta = crate::bounds::theta(0.25).unwrap();
        assert!(val >= e_inv - 1e-3 && val <= theta + 1e-3, "val = {val}");
    }

    #[test]
    fn vertex_oracle_examples() {
        assert_eq!(vertex_oracle(0.8, 0.2, 1.0), (1.0, 0.0));
        assert_eq!(vertex_oracle(-0.4, 0.8, 1.0), (0.5, 0.5));
        assert_eq!(vertex_oracle(-0.8, -0.6, 1.0), (0.0, 0.0));
        assert_eq!(vertex_oracle(-0.8, -0.6, 7.3), (0.0, 0.0));
        // Ties resolve to the earlier-listed vertex.
        assert_eq!(vertex_oracle(0.0, -1.0, 1.0), (0.0, 0.0));
        // Minus infinity on one side never poisons the other vertices.
        let (tmin, tmaj) = vertex_oracle(f64::NEG_INFINITY, 0.8, 0.0);
        assert_eq!((tmin, tmaj), (0.0, 1.0));
    }
}

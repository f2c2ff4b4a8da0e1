//! Command-line front end: bounds curve, mechanism evaluation, contamination
//! stress sweeps, LP solving, feasibility audits, and worst-case regret
//! search. Every output CSV embeds a hash of the resolved configuration and
//! the seed, and identical configurations reproduce byte-identical files.
//!
//! Exit codes: 0 on success, 1 when an audit finds violations (or a command
//! fails mid-computation), 2 on invalid arguments or configuration.

use crate::bounds;
use crate::dists::{GroupStructure, JointValueDistribution, RegularMarginal};
use crate::error::{Error, Result};
use crate::eval::{self, evaluate, EvalMode, EvaluationReport};
use crate::lp::{EquityMode, GridMechanismLp, IcMode, TabulatedMechanism};
use crate::mech::{audit_feasibility, audit_grid_feasibility, AuditOptions, Mechanism};
use crate::robust::RobustMechanism;
use crate::stochastic::StochasticMechanism;
use crate::util::fmt_g12;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// Environment variable overriding the output directory of every command.
pub const OUTPUT_DIR_ENV: &str = "EQUITY_AUCTIONS_OUT";

/// Experiment configuration consumed by `stress` (JSON file) and echoed, via
/// its hash, into every output header.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub group: GroupStructure,
    pub gamma: f64,
    pub marginals: Vec<RegularMarginal>,
    /// Contamination levels to sweep.
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    /// Corner-correlation parameters to sweep.
    #[serde(default = "default_rho_list")]
    pub rho_list: Vec<f64>,
    /// Grid step, the reciprocal of an integer.
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_eps_list() -> Vec<f64> {
    (0..=10).map(|j| j as f64 / 10.0).collect()
}

fn default_rho_list() -> Vec<f64> {
    vec![-0.5, 0.0, 0.5]
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.marginals.len() != self.group.total() {
            return Err(Error::Config(format!(
                "{} marginals for {} bidders",
                self.marginals.len(),
                self.group.total()
            )));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::Config(format!(
                "gamma = {} must be >= 0",
                self.gamma
            )));
        }
        let k = (1.0 / self.delta).round();
        if !(k >= 2.0 && (1.0 / self.delta - k).abs() < 1e-9) {
            return Err(Error::Config(format!(
                "delta = {} is not 1/k for an integer k >= 2",
                self.delta
            )));
        }
        if self
            .eps_list
            .iter()
            .any(|&e| !(0.0..=1.0).contains(&e))
        {
            return Err(Error::Config("eps values must lie in [0, 1]".into()));
        }
        if self.rho_list.iter().any(|&r| !(-1.0..=1.0).contains(&r)) {
            return Err(Error::Config("rho values must lie in [-1, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "equity-auctions",
    about = "Equity-constrained single-good auctions: mechanisms, bounds, LPs, audits",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Worst-case bound curve: u*, theta, and the approximation factor per gamma.
    Bounds(BoundsArgs),
    /// Revenue/regret evaluation of one mechanism under one distribution.
    Evaluate(EvaluateArgs),
    /// Contamination sweep comparing mechanisms against the tailored LP optimum.
    Stress(StressArgs),
    /// Assemble and solve one grid mechanism-design LP.
    LpSolve(LpSolveArgs),
    /// Feasibility audit; exit 1 if any constraint is violated.
    Audit(AuditArgs),
    /// Exhaustive worst-case regret search for a mechanism.
    WorstCase(WorstCaseArgs),
}

#[derive(Args, Debug, Serialize)]
struct BoundsArgs {
    #[arg(long, default_value_t = 0.0)]
    gamma_min: f64,
    #[arg(long, default_value_t = 10.0)]
    gamma_max: f64,
    #[arg(long, default_value_t = 1001)]
    points: usize,
    /// Geometric spacing of the gamma grid.
    #[arg(long, default_value_t = false)]
    log: bool,
    #[arg(long, default_value = "out")]
    out_dir: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum MechKind {
    /// Prior-tailored closed form.
    Stochastic,
    /// Distribution-free regret-based mechanism.
    Robust,
    /// Grid LP with the per-profile equity constraint.
    LpExpost,
    /// Grid LP with the equity constraint in expectation only.
    LpExpectation,
}

#[derive(Args, Debug, Serialize)]
struct EvaluateArgs {
    #[arg(long, value_enum)]
    mech: MechKind,
    #[arg(long)]
    gamma: f64,
    /// Group sizes as `minority,majority`.
    #[arg(long, default_value = "1,1")]
    group: String,
    /// Comma-separated marginal families (`uniform` or `beta22`), one per bidder.
    #[arg(long, default_value = "uniform,uniform")]
    marginals: String,
    /// Contamination level of the evaluation distribution.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Grid step for exhaustive evaluation and for LP mechanisms.
    #[arg(long, default_value_t = 0.02)]
    delta: f64,
    /// Evaluate by sampling instead of exhaustively on the grid.
    #[arg(long, default_value_t = false)]
    monte_carlo: bool,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: String,
}

#[derive(Args, Debug, Serialize)]
struct StressArgs {
    /// JSON file holding an `ExperimentConfig`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum EquityKind {
    ExPost,
    Expectation,
}

#[derive(Args, Debug, Serialize)]
struct LpSolveArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value = "1,1")]
    group: String,
    #[arg(long, default_value = "uniform,uniform")]
    marginals: String,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// `ex-post` keeps one equity row per profile; `expectation` uses one
    /// mass-weighted row.
    #[arg(long, value_enum, default_value_t = EquityKind::ExPost)]
    equity: EquityKind,
    /// Generate all same-line deviations instead of adjacent ones.
    #[arg(long, default_value_t = false)]
    full_ic: bool,
    /// Also write the assembled program as sparse triples.
    #[arg(long, default_value_t = false)]
    dump: bool,
    #[arg(long, default_value = "out")]
    out_dir: String,
}

#[derive(Args, Debug, Serialize)]
struct AuditArgs {
    #[arg(long, value_enum)]
    mech: MechKind,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value = "1,1")]
    group: String,
    #[arg(long, default_value = "uniform,uniform")]
    marginals: String,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.02)]
    delta: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: String,
}

#[derive(Args, Debug, Serialize)]
struct WorstCaseArgs {
    #[arg(long, value_enum, default_value_t = MechKind::Robust)]
    mech: MechKind,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value = "1,1")]
    group: String,
    #[arg(long, default_value = "uniform,uniform")]
    marginals: String,
    #[arg(long, default_value_t = 0.02)]
    delta: f64,
    #[arg(long, default_value = "out")]
    out_dir: String,
}

/// Runs the CLI on explicit arguments (the first being the program name) and
/// returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Bounds(a) => cmd_bounds(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Stress(a) => cmd_stress(&a),
        Command::LpSolve(a) => cmd_lp_solve(&a),
        Command::Audit(a) => cmd_audit(&a),
        Command::WorstCase(a) => cmd_worst_case(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e @ (Error::Config(_) | Error::Domain(_) | Error::Json(_))) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn config_hash<T: Serialize>(cfg: &T) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn resolve_out_dir(flag: &str) -> PathBuf {
    std::env::var(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|_| PathBuf::from(flag))
}

fn write_output(dir: &Path, name: &str, hash: &str, seed: u64, body: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let content = format!("# config-hash: {hash}\n# seed: {seed}\n{body}");
    fs::write(&path, content)?;
    Ok(path)
}

fn parse_group(spec: &str) -> Result<GroupStructure> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!(
            "group must be `minority,majority`, got `{spec}`"
        )));
    }
    let n_min = parts[0]
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("bad minority count `{}`", parts[0])))?;
    let n_maj = parts[1]
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("bad majority count `{}`", parts[1])))?;
    GroupStructure::new(n_min, n_maj)
}

fn parse_marginals(spec: &str, expected: usize) -> Result<Vec<RegularMarginal>> {
    let out: Vec<RegularMarginal> = spec
        .split(',')
        .map(|s| match s.trim() {
            "uniform" => Ok(RegularMarginal::Uniform),
            "beta22" => Ok(RegularMarginal::Beta22),
            other => Err(Error::Config(format!(
                "unknown marginal family `{other}` (expected `uniform` or `beta22`)"
            ))),
        })
        .collect::<Result<_>>()?;
    if out.len() != expected {
        return Err(Error::Config(format!(
            "{} marginals for {expected} bidders",
            out.len()
        )));
    }
    Ok(out)
}

fn solve_lp_mechanism(
    marginals: &[RegularMarginal],
    group: GroupStructure,
    gamma: f64,
    eps: f64,
    rho: f64,
    delta: f64,
    equity: EquityMode,
    ic: IcMode,
) -> Result<(TabulatedMechanism, f64, crate::lp::KktResiduals)> {
    let table = eval::contaminated_table(marginals, eps, rho, delta)?;
    let lp = GridMechanismLp::new(table, group, gamma, equity, ic)?;
    let out = lp.solve()?;
    Ok((out.mechanism, out.objective, out.kkt))
}

fn build_mechanism(
    kind: MechKind,
    group: GroupStructure,
    gamma: f64,
    marginals: &[RegularMarginal],
    eps: f64,
    rho: f64,
    delta: f64,
) -> Result<Box<dyn Mechanism>> {
    match kind {
        MechKind::Stochastic => Ok(Box::new(StochasticMechanism::new(
            group,
            gamma,
            marginals.to_vec(),
        )?)),
        MechKind::Robust => Ok(Box::new(RobustMechanism::new(group, gamma)?)),
        MechKind::LpExpost => {
            let (m, _, _) = solve_lp_mechanism(
                marginals,
                group,
                gamma,
                eps,
                rho,
                delta,
                EquityMode::ExPost,
                IcMode::Adjacent,
            )?;
            Ok(Box::new(m))
        }
        MechKind::LpExpectation => {
            let (m, _, _) = solve_lp_mechanism(
                marginals,
                group,
                gamma,
                eps,
                rho,
                delta,
                EquityMode::Expectation,
                IcMode::Adjacent,
            )?;
            Ok(Box::new(m))
        }
    }
}

fn cmd_bounds(a: &BoundsArgs) -> Result<i32> {
    let curve = bounds::factor_curve(a.gamma_min, a.gamma_max, a.points, a.log)?;
    let hash = config_hash(a);
    let dir = resolve_out_dir(&a.out_dir);
    let path = write_output(&dir, "bounds.csv", &hash, 0, &curve.to_csv())?;
    println!(
        "bounds: {} points in [{}, {}]; max factor {} at gamma = {}",
        a.points,
        fmt_g12(a.gamma_min),
        fmt_g12(a.gamma_max),
        fmt_g12(curve.max_factor),
        fmt_g12(curve.argmax_gamma)
    );
    println!("wrote {}", path.display());
    Ok(0)
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<i32> {
    let group = parse_group(&a.group)?;
    let marginals = parse_marginals(&a.marginals, group.total())?;
    let mech = build_mechanism(a.mech, group, a.gamma, &marginals, a.eps, a.rho, a.delta)?;
    let report = evaluate_on_mixture(&*mech, &marginals, a.eps, a.rho, a.delta, a)?;
    let hash = config_hash(a);
    let dir = resolve_out_dir(&a.out_dir);
    let body = format!("{}\n{}\n", EvaluationReport::csv_header(), report.to_csv_row());
    let name = format!("evaluate_{}.csv", mech.name());
    let path = write_output(&dir, &name, &hash, a.seed, &body)?;
    print!("{}", report.to_text());
    println!("wrote {}", path.display());
    Ok(0)
}

fn evaluate_on_mixture(
    mech: &dyn Mechanism,
    marginals: &[RegularMarginal],
    eps: f64,
    rho: f64,
    delta: f64,
    a: &EvaluateArgs,
) -> Result<EvaluationReport> {
    if a.monte_carlo {
        let joint = if eps == 0.0 {
            JointValueDistribution::product(marginals.to_vec())?
        } else {
            JointValueDistribution::contaminated(marginals.to_vec(), eps, rho)?
        };
        evaluate(
            mech,
            &joint,
            EvalMode::MonteCarlo {
                samples: a.samples,
                seed: a.seed,
            },
        )
    } else {
        let table = eval::contaminated_table(marginals, eps, rho, delta)?;
        evaluate(
            mech,
            &JointValueDistribution::Discrete(table),
            EvalMode::ExhaustiveGrid,
        )
    }
}

fn cmd_stress(a: &StressArgs) -> Result<i32> {
    let raw = fs::read_to_string(&a.config)?;
    let cfg: ExperimentConfig = serde_json::from_str(&raw)?;
    cfg.validate()?;
    if cfg.group.total() != 2 {
        return Err(Error::Config(
            "the contamination stress test is defined for two bidders".into(),
        ));
    }
    let hash = config_hash(&cfg);
    let dir = cfg
        .output_dir
        .as_deref()
        .map(|d| resolve_out_dir(d))
        .unwrap_or_else(|| resolve_out_dir(&a.out_dir));

    let stochastic = StochasticMechanism::new(cfg.group, cfg.gamma, cfg.marginals.clone())?;
    let robust = RobustMechanism::new(cfg.group, cfg.gamma)?;
    // The expectation-only benchmark is tailored once to the uncontaminated
    // prior and then held fixed across the sweep.
    let (baseline, _, _) = solve_lp_mechanism(
        &cfg.marginals,
        cfg.group,
        cfg.gamma,
        0.0,
        0.0,
        cfg.delta,
        EquityMode::Expectation,
        IcMode::Adjacent,
    )?;
    let mechs: Vec<&dyn Mechanism> = vec![&stochastic, &robust, &baseline];

    let mut exit = 0;
    for &rho in &cfg.rho_list {
        let mut revenue_csv = String::from("eps,mechanism,normalized_revenue\n");
        let mut regret_csv = String::from("eps,mechanism,regret_p75\n");
        let mut warm = None;
        for &eps in &cfg.eps_list {
            let cell = stress_cell(&cfg, eps, rho, &mechs, &mut warm);
            match cell {
                Ok(rows) => {
                    for (name, norm, p75) in rows {
                        revenue_csv.push_str(&format!(
                            "{},{},{}\n",
                            fmt_g12(eps),
                            name,
                            fmt_g12(norm)
                        ));
                        regret_csv.push_str(&format!(
                            "{},{},{}\n",
                            fmt_g12(eps),
                            name,
                            fmt_g12(p75)
                        ));
                    }
                }
                Err(e) => {
                    // Per-cell failure: record it and keep sweeping.
                    eprintln!("stress cell eps={eps} rho={rho} failed: {e}");
                    revenue_csv.push_str(&format!("{},error,\n", fmt_g12(eps)));
                    regret_csv.push_str(&format!("{},error,\n", fmt_g12(eps)));
                    exit = 1;
                }
            }
        }
        let tag = fmt_g12(rho).replace('-', "m").replace('.', "p");
        let p1 = write_output(
            &dir,
            &format!("stress_revenue_rho_{tag}.csv"),
            &hash,
            cfg.seed,
            &revenue_csv,
        )?;
        let p2 = write_output(
            &dir,
            &format!("stress_regret_rho_{tag}.csv"),
            &hash,
            cfg.seed,
            &regret_csv,
        )?;
        println!("wrote {}", p1.display());
        println!("wrote {}", p2.display());
    }
    Ok(exit)
}

/// One sweep cell: re-solves the tailored LP at `(eps, rho)` and returns
/// `(name, normalized revenue, regret p75)` rows, the tailored row first.
fn stress_cell(
    cfg: &ExperimentConfig,
    eps: f64,
    rho: f64,
    mechs: &[&dyn Mechanism],
    warm: &mut Option<crate::lp::Basis>,
) -> Result<Vec<(String, f64, f64)>> {
    let table = eval::contaminated_table(&cfg.marginals, eps, rho, cfg.delta)?;
    let solved = crate::lp::tailored_mechanism(
        &cfg.marginals,
        eps,
        rho,
        cfg.delta,
        cfg.gamma,
        cfg.group,
        warm.take(),
    )?;
    *warm = Some(solved.basis.clone());
    let joint = JointValueDistribution::Discrete(table);
    let mut rows = Vec::new();
    let tailored = evaluate(&solved.mechanism, &joint, EvalMode::ExhaustiveGrid)?;
    rows.push(("tailored".to_string(), 1.0, tailored.regret_p75));
    for m in mechs {
        let report = evaluate(*m, &joint, EvalMode::ExhaustiveGrid)?;
        rows.push((
            m.name(),
            report.expected_revenue / solved.objective,
            report.regret_p75,
        ));
    }
    Ok(rows)
}

fn cmd_lp_solve(a: &LpSolveArgs) -> Result<i32> {
    let group = parse_group(&a.group)?;
    let marginals = parse_marginals(&a.marginals, group.total())?;
    let equity = match a.equity {
        EquityKind::ExPost => EquityMode::ExPost,
        EquityKind::Expectation => EquityMode::Expectation,
    };
    let ic = if a.full_ic { IcMode::Full } else { IcMode::Adjacent };
    let table = eval::contaminated_table(&marginals, a.eps, a.rho, a.delta)?;
    let lp = GridMechanismLp::new(table, group, a.gamma, equity, ic)?;
    let out = lp.solve()?;
    let hash = config_hash(a);
    let dir = resolve_out_dir(&a.out_dir);
    let name = format!("{}.csv", out.mechanism.name());
    let path = write_output(&dir, &name, &hash, 0, &out.mechanism.to_csv())?;
    println!(
        "{}: {} rows, {} vars, objective {}, kkt residual {}",
        out.mechanism.name(),
        lp.num_rows(),
        lp.num_vars(),
        fmt_g12(out.objective),
        fmt_g12(out.kkt.max())
    );
    println!("wrote {}", path.display());
    if a.dump {
        let dump_name = format!("{}_program.txt", out.mechanism.name());
        let p = write_output(&dir, &dump_name, &hash, 0, &lp.dump())?;
        println!("wrote {}", p.display());
    }
    Ok(0)
}

fn cmd_audit(a: &AuditArgs) -> Result<i32> {
    let group = parse_group(&a.group)?;
    let marginals = parse_marginals(&a.marginals, group.total())?;
    let mech = build_mechanism(a.mech, group, a.gamma, &marginals, a.eps, a.rho, a.delta)?;
    // LP mechanisms are grid tables: audit them with the discrete
    // no-deviation check on their own grid. Closed-form mechanisms get the
    // continuous audit (monotonicity plus the envelope payment identity).
    let report = match a.mech {
        MechKind::LpExpost | MechKind::LpExpectation => {
            audit_grid_feasibility(&*mech, a.delta, a.tol)
        }
        _ => audit_feasibility(
            &*mech,
            &AuditOptions {
                delta: a.delta,
                tol: a.tol,
                seed: a.seed,
                ..AuditOptions::default()
            },
        ),
    };
    let hash = config_hash(a);
    let dir = resolve_out_dir(&a.out_dir);
    let name = format!("audit_{}.csv", mech.name());
    let path = write_output(&dir, &name, &hash, a.seed, &report.to_csv())?;
    println!(
        "audit {}: {} violations at tol {}",
        mech.name(),
        report.violations.len(),
        fmt_g12(a.tol)
    );
    println!("wrote {}", path.display());
    Ok(if report.is_feasible() { 0 } else { 1 })
}

fn cmd_worst_case(a: &WorstCaseArgs) -> Result<i32> {
    let group = parse_group(&a.group)?;
    let marginals = parse_marginals(&a.marginals, group.total())?;
    let mech = build_mechanism(a.mech, group, a.gamma, &marginals, 0.0, 0.0, a.delta)?;
    let (regret, profile) = eval::worst_case_regret(&*mech, a.delta)?;
    let theta = bounds::theta(a.gamma)?;
    let hash = config_hash(a);
    let dir = resolve_out_dir(&a.out_dir);
    let body = format!(
        "mechanism,gamma,delta,worst_regret,theta_bound,profile\n{},{},{},{},{},{}\n",
        mech.name(),
        fmt_g12(a.gamma),
        fmt_g12(a.delta),
        fmt_g12(regret),
        fmt_g12(theta),
        profile.iter().map(|&x| fmt_g12(x)).collect::<Vec<_>>().join(";")
    );
    let name = format!("worst_case_{}.csv", mech.name());
    let path = write_output(&dir, &name, &hash, 0, &body)?;
    println!(
        "worst-case regret of {}: {} at ({}); bound theta = {}",
        mech.name(),
        fmt_g12(regret),
        profile.iter().map(|&x| fmt_g12(x)).collect::<Vec<_>>().join(", "),
        fmt_g12(theta)
    );
    println!("wrote {}", path.display());
    Ok(0)
}

/// Loads, validates, and returns an experiment configuration.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        std::iter::once("equity-auctions")
            .chain(list.iter().copied())
            .map(String::from)
            .collect()
    }

    #[test]
    fn invalid_arguments_exit_2() {
        assert_eq!(run(args(&["bounds", "--points", "1"])), 2);
        assert_eq!(run(args(&["no-such-command"])), 2);
        assert_eq!(run(args(&["evaluate", "--mech", "robust"])), 2); // missing gamma
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(run(args(&["--help"])), 0);
    }

    #[test]
    fn bounds_round_trip_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let a = args(&[
            "bounds",
            "--gamma-min",
            "0",
            "--gamma-max",
            "2",
            "--points",
            "11",
            "--out-dir",
            out,
        ]);
        assert_eq!(run(a.clone()), 0);
        let first = fs::read(dir.path().join("bounds.csv")).unwrap();
        assert_eq!(run(a), 0);
        let second = fs::read(dir.path().join("bounds.csv")).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("# config-hash: "));
        assert!(text.contains("# seed: 0"));
        assert!(text.contains("gamma,u_star,beta_star,theta,factor"));
    }

    #[test]
    fn audit_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        // Feasible closed-form mechanism on a coarse grid.
        assert_eq!(
            run(args(&[
                "audit", "--mech", "robust", "--gamma", "0.25", "--delta", "0.1",
                "--out-dir", out,
            ])),
            0
        );
        // The expectation-only LP violates the per-profile equity constraint.
        assert_eq!(
            run(args(&[
                "audit",
                "--mech",
                "lp-expectation",
                "--gamma",
                "1",
                "--delta",
                "0.25",
                "--out-dir",
                out,
            ])),
            1
        );
        let report =
            fs::read_to_string(dir.path().join("audit_lp-expectation.csv")).unwrap();
        assert!(report.contains("equity"));
    }

    #[test]
    fn config_parsing_and_validation() {
        let cfg = ExperimentConfig {
            group: GroupStructure::new(1, 1).unwrap(),
            gamma: 0.25,
            marginals: vec![RegularMarginal::Beta22, RegularMarginal::Beta22],
            eps_list: default_eps_list(),
            rho_list: vec![0.0],
            delta: 0.1,
            seed: 7,
            output_dir: None,
        };
        cfg.validate().unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        back.validate().unwrap();
        assert_eq!(back.marginals, cfg.marginals);

        let mut bad = cfg.clone();
        bad.delta = 0.3;
        assert!(bad.validate().is_err());
        let mut bad = cfg.clone();
        bad.eps_list = vec![1.5];
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        bad.marginals.pop();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn env_var_overrides_output_dir() {
        let dir = tempfile::tempdir().unwrap();
        std::env::set_var(OUTPUT_DIR_ENV, dir.path());
        let code = run(args(&[
            "bounds",
            "--gamma-max",
            "1",
            "--points",
            "3",
            "--out-dir",
            "ignored-by-env",
        ]));
        std::env::remove_var(OUTPUT_DIR_ENV);
        assert_eq!(code, 0);
        assert!(dir.path().join("bounds.csv").exists());
    }
}

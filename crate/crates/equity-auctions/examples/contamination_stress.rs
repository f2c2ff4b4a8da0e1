//! Stress mechanisms under epsilon-contamination: mix a Beta(2,2) prior with
//! adversarial corner mass and compare revenue normalized by the per-epsilon
//! tailored LP optimum. The prior-aware auction degrades as epsilon grows
//! while the prior-free auction stays flat.

use equity_auctions::dists::{GroupStructure, JointValueDistribution, RegularMarginal};
use equity_auctions::eval::{contaminated_table, evaluate, EvalMode};
use equity_auctions::lp::tailored_mechanism;
use equity_auctions::mech::Mechanism;
use equity_auctions::robust::RobustMechanism;
use equity_auctions::stochastic::StochasticMechanism;

fn main() {
    let group = GroupStructure::new(1, 1).unwrap();
    let gamma = 0.25;
    let delta = 0.05;
    let base = vec![RegularMarginal::Beta22; 2];
    let stoch = StochasticMechanism::new(group, gamma, base.clone()).unwrap();
    let robust = RobustMechanism::new(group, gamma).unwrap();

    println!("{:>5} {:>10} {:>12} {:>12}", "eps", "tailored", "stochastic", "prior-free");
    let mut warm = None;
    for j in 0..=5 {
        let eps = j as f64 / 5.0;
        let tailored =
            tailored_mechanism(&base, eps, 0.0, delta, gamma, group, warm.take()).unwrap();
        warm = Some(tailored.basis.clone());
        let joint = JointValueDistribution::Discrete(
            contaminated_table(&base, eps, 0.0, delta).unwrap(),
        );
        let norm = |mech: &dyn Mechanism| {
            evaluate(mech, &joint, EvalMode::ExhaustiveGrid)
                .unwrap()
                .expected_revenue
                / tailored.objective
        };
        println!(
            "{eps:>5.1} {:>10.4} {:>12.4} {:>12.4}",
            1.0,
            norm(&stoch),
            norm(&robust)
        );
    }
}

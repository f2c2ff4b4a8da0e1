//! Run the prior-aware stochastic auction on a few bid profiles and estimate
//! its expected revenue two ways: a closed grid sum and Monte Carlo.

use equity_auctions::dists::{GroupStructure, RegularMarginal};
use equity_auctions::mech::Mechanism;
use equity_auctions::stochastic::{RevenueEstimator, StochasticMechanism};

fn main() {
    let group = GroupStructure::new(1, 1).unwrap();
    let gamma = 0.25;
    let mech = StochasticMechanism::new(
        group,
        gamma,
        vec![RegularMarginal::Uniform, RegularMarginal::Beta22],
    )
    .unwrap();

    println!("mechanism: {} (gamma = {gamma})", mech.name());
    for v in [[0.9, 0.3], [0.3, 0.9], [0.55, 0.52], [0.2, 0.1]] {
        let q = mech.allocate(&v);
        let m = mech.pay(&v);
        println!(
            "v = {v:?}  q = [{:.4}, {:.4}]  m = [{:.4}, {:.4}]",
            q[0], q[1], m[0], m[1]
        );
    }

    let (grid_rev, grid_surplus) = mech
        .expected_revenue(RevenueEstimator::ClosedGrid { delta: 0.005 })
        .unwrap();
    let (mc_rev, _) = mech
        .expected_revenue(RevenueEstimator::MonteCarlo {
            samples: 200_000,
            seed: 7,
        })
        .unwrap();
    println!("\nexpected revenue: grid {grid_rev:.5}, monte carlo {mc_rev:.5}");
    println!("virtual surplus (grid): {grid_surplus:.5}");
}

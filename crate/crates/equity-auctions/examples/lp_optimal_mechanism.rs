//! Solve for the revenue-optimal grid mechanism by linear programming and
//! inspect the certificate. Compares the ex-post equity constraint with the
//! weaker in-expectation variant.

use equity_auctions::dists::{GroupStructure, JointValueDistribution, RegularMarginal};
use equity_auctions::lp::{EquityMode, GridMechanismLp, IcMode};

fn main() {
    let group = GroupStructure::new(1, 1).unwrap();
    let gamma = 0.25;
    let table = JointValueDistribution::product(vec![RegularMarginal::Beta22; 2])
        .unwrap()
        .discretize(0.1)
        .unwrap();

    for equity in [EquityMode::ExPost, EquityMode::Expectation] {
        let lp = GridMechanismLp::new(table.clone(), group, gamma, equity, IcMode::Adjacent)
            .unwrap();
        let out = lp.solve().unwrap();
        println!(
            "{equity:?}: {} vars, {} rows, objective {:.6}, {} pivots, kkt {:.2e}",
            lp.num_vars(),
            lp.num_rows(),
            out.objective,
            out.iterations,
            out.kkt.max()
        );
    }

    // The tabulated solution snaps off-grid bids to the nearest grid point.
    let lp = GridMechanismLp::new(table, group, gamma, EquityMode::ExPost, IcMode::Adjacent)
        .unwrap();
    let mech = lp.solve().unwrap().mechanism;
    println!("\nfirst rows of the optimal table:");
    for line in mech.to_csv().lines().take(6) {
        println!("  {line}");
    }
}

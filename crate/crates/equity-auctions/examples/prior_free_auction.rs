//! Evaluate the prior-free auction: its allocations need no distributional
//! knowledge, and its worst-case regret against hindsight revenue stays below
//! the theoretical bound theta(gamma).

use equity_auctions::bounds;
use equity_auctions::dists::GroupStructure;
use equity_auctions::eval::worst_case_regret;
use equity_auctions::mech::Mechanism;
use equity_auctions::robust::RobustMechanism;

fn main() {
    let group = GroupStructure::new(1, 1).unwrap();
    for gamma in [0.0, 0.25, 1.0, 4.0] {
        let mech = RobustMechanism::new(group, gamma).unwrap();
        let v = [0.4, 0.8];
        let q = mech.allocate(&v);
        let m = mech.pay(&v);
        let (regret, at) = worst_case_regret(&mech, 0.01).unwrap();
        let theta = bounds::theta(gamma).unwrap();
        println!(
            "gamma {gamma:>5}: q(0.4, 0.8) = [{:.4}, {:.4}], m = [{:.4}, {:.4}]",
            q[0], q[1], m[0], m[1]
        );
        println!(
            "             worst regret {regret:.5} at {at:?} (bound theta = {theta:.5})"
        );
    }
}

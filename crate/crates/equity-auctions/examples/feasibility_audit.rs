//! Audit mechanisms for incentive compatibility, individual rationality,
//! allocation feasibility, the equity floor, and the envelope payment
//! identity. A clean report means no violation above tolerance.

use equity_auctions::dists::{GroupStructure, RegularMarginal};
use equity_auctions::mech::{audit_feasibility, AuditOptions, Mechanism};
use equity_auctions::robust::RobustMechanism;
use equity_auctions::stochastic::StochasticMechanism;

fn main() {
    let group = GroupStructure::new(1, 2).unwrap();
    let gamma = 0.5;
    let opts = AuditOptions {
        delta: 0.05,
        tol: 1e-6,
        ..AuditOptions::default()
    };

    let stoch = StochasticMechanism::new(group, gamma, vec![RegularMarginal::Beta22; 3])
        .unwrap();
    let robust = RobustMechanism::new(group, gamma).unwrap();
    let mechs: [&dyn Mechanism; 2] = [&stoch, &robust];
    for mech in mechs {
        let report = audit_feasibility(mech, &opts);
        println!(
            "{}: {} violations above {:.0e}",
            mech.name(),
            report.violations.len(),
            opts.tol
        );
        for v in report.violations.iter().take(3) {
            println!("  {v:?}");
        }
    }
}

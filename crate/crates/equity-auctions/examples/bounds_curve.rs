//! Sweep the equity level and print the revenue-approximation bound curve.
//!
//! For each gamma the curve reports theta(gamma), the guaranteed fraction of
//! hindsight revenue divided by e, and the factor e * theta by which the
//! prior-free guarantee can beat the classical 1/e baseline.

use equity_auctions::bounds;

fn main() {
    let curve = bounds::factor_curve(0.0, 10.0, 101, false).unwrap();
    println!("{:>8} {:>12} {:>12} {:>12}", "gamma", "u_star", "theta", "factor");
    for row in curve.rows.iter().step_by(10) {
        println!(
            "{:>8.2} {:>12.6} {:>12.6} {:>12.6}",
            row.gamma, row.u_star, row.theta, row.factor
        );
    }
    println!(
        "\nmax factor {:.4} at gamma = {:.2}",
        curve.max_factor, curve.argmax_gamma
    );
    println!("theta(0) = {:.6} = 1/e", bounds::theta(0.0).unwrap());
}

//! Randomized invariant checks over profiles, equity levels, and grids.

use equity_auctions::bounds::{beta_star, theta, theta_objective, u_star};
use equity_auctions::dists::{GroupStructure, JointValueDistribution, RegularMarginal};
use equity_auctions::eval::contaminated_table;
use equity_auctions::mech::{hindsight_revenue, Mechanism};
use equity_auctions::quad::simpson_with_breakpoints;
use equity_auctions::robust::RobustMechanism;
use equity_auctions::stochastic::StochasticMechanism;
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn profile(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, n)
}

fn group_and_profile() -> impl Strategy<Value = (GroupStructure, Vec<f64>)> {
    (1usize..=2, 0usize..=2)
        .prop_filter("need two bidders", |(n_min, n_maj)| n_min + n_maj >= 2)
        .prop_flat_map(|(n_min, n_maj)| {
            let g = GroupStructure::new(n_min, n_maj).unwrap();
            profile(n_min + n_maj).prop_map(move |v| (g, v))
        })
}

fn feasible(mech: &dyn Mechanism, v: &[f64]) {
    let g = mech.group();
    let gamma = mech.gamma();
    let q = mech.allocate(v);
    let m = mech.pay(v);
    let total: f64 = q.iter().sum();
    assert!(total <= 1.0 + TOL, "over-allocated: {q:?}");
    assert!(q.iter().all(|&x| x >= 0.0), "negative allocation: {q:?}");
    let qmin: f64 = g.minority_indices().map(|i| q[i]).sum();
    let qmaj: f64 = g.majority_indices().map(|i| q[i]).sum();
    assert!(qmin >= gamma * qmaj - TOL, "equity: {q:?} at {v:?}");
    for i in 0..v.len() {
        assert!(m[i] >= -TOL && m[i] <= q[i] * v[i] + TOL, "IR: m = {m:?} at {v:?}");
    }
    let paid: f64 = m.iter().sum();
    assert!(
        paid <= hindsight_revenue(v, g, gamma) + TOL,
        "paid above hindsight at {v:?}"
    );
}

fn own_value_monotone(mech: &dyn Mechanism, v: &[f64], i: usize) {
    let mut prev = -1.0;
    for k in 0..=40 {
        let mut w = v.to_vec();
        w[i] = k as f64 / 40.0;
        let qi = mech.allocate(&w)[i];
        assert!(qi >= prev - TOL, "q_{i} not monotone at {w:?}");
        prev = qi;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stochastic_mechanism_invariants(
        (g, v) in group_and_profile(),
        gamma in 0.0..8.0f64,
        beta in prop::bool::ANY,
    ) {
        let marginal = if beta { RegularMarginal::Beta22 } else { RegularMarginal::Uniform };
        let mech = StochasticMechanism::new(g, gamma, vec![marginal; g.total()]).unwrap();
        feasible(&mech, &v);
        for i in 0..v.len() {
            own_value_monotone(&mech, &v, i);
        }
    }

    #[test]
    fn robust_mechanism_invariants(
        (g, v) in group_and_profile(),
        gamma in 0.0..8.0f64,
    ) {
        let mech = RobustMechanism::new(g, gamma).unwrap();
        feasible(&mech, &v);
        for i in 0..v.len() {
            own_value_monotone(&mech, &v, i);
        }
    }

    #[test]
    fn theta_maximizes_its_objective(gamma in 0.0..50.0f64, u in 0.3678795..1.0f64) {
        let th = theta(gamma).unwrap();
        prop_assert!(th >= theta_objective(gamma, u) - 1e-9);
        prop_assert!(th >= 1.0 / std::f64::consts::E - 1e-12);
        prop_assert!(th <= 0.5);
        let us = u_star(gamma).unwrap();
        prop_assert!((0.3678794..=1.0000001).contains(&us));
        prop_assert!((0.3678794..=1.0000001).contains(&beta_star(gamma)));
    }

    #[test]
    fn discretized_tables_conserve_mass(
        delta_k in 2usize..=20,
        beta in prop::bool::ANY,
        dim in 1usize..=3,
    ) {
        let marginal = if beta { RegularMarginal::Beta22 } else { RegularMarginal::Uniform };
        let table = JointValueDistribution::product(vec![marginal; dim])
            .unwrap()
            .discretize(1.0 / delta_k as f64)
            .unwrap();
        let total: f64 = table.masses().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(table.masses().iter().all(|&m| m >= 0.0));
        prop_assert_eq!(table.len(), (delta_k + 1).pow(dim as u32));
    }

    #[test]
    fn contaminated_tables_conserve_mass(
        eps in 0.0..=1.0f64,
        rho in -1.0..=1.0f64,
    ) {
        let table = contaminated_table(
            &[RegularMarginal::Beta22, RegularMarginal::Beta22],
            eps,
            rho,
            0.1,
        )
        .unwrap();
        let total: f64 = table.masses().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(table.masses().iter().all(|&m| m >= -1e-12));
    }

    #[test]
    fn quadrature_integrates_step_functions_exactly(
        cut in 0.05..0.95f64,
        lo in 0.0..1.0f64,
        hi in 0.0..1.0f64,
    ) {
        let f = |x: f64| if x < cut { lo } else { hi };
        let exact = lo * cut + hi * (1.0 - cut);
        let got = simpson_with_breakpoints(f, 0.0, 1.0, &[cut], 200);
        prop_assert!((got - exact).abs() < 1e-9, "{got} vs {exact}");
    }

    #[test]
    fn virtual_value_inversion_round_trips(
        v in 0.05..=1.0f64,
        beta in prop::bool::ANY,
    ) {
        let marginal = if beta { RegularMarginal::Beta22 } else { RegularMarginal::Uniform };
        let psi = marginal.psi(v);
        if psi.is_finite() {
            if let Some(back) = marginal.inverse_virtual_value(psi) {
                prop_assert!((back - v).abs() < 1e-8, "{back} vs {v}");
            }
        }
    }
}

//! Worst-case regret bound for the prior-free mechanism: the constant
//! `beta* = max(1/(1+gamma), 1/e)`, the root `u*` of the bound's stationarity
//! condition, the regret bound `theta(gamma)`, and the approximation factor
//! `e * theta(gamma)` relative to the `1/e` lower bound.

use crate::error::{Error, Result};
use crate::util::{bisect_root, fmt_g12};

const E: f64 = std::f64::consts::E;

/// All bound quantities at one equity level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsSummary {
    pub gamma: f64,
    pub u_star: f64,
    pub beta_star: f64,
    pub theta: f64,
    /// `e * theta`, the approximation factor; `>= 1`, at most about 1.31.
    pub factor: f64,
}

/// `beta* = max(1/(1+gamma), 1/e)`.
pub fn beta_star(gamma: f64) -> f64 {
    (1.0 / (1.0 + gamma)).max(1.0 / E)
}

/// Residual of the stationarity condition defining `u*`:
/// `(gamma/(1+gamma)) log((1+gamma u)/(1+gamma)) - log u - 1/(1+gamma)`.
pub fn u_star_residual(gamma: f64, u: f64) -> f64 {
    gamma / (1.0 + gamma) * ((1.0 + gamma * u) / (1.0 + gamma)).ln() - u.ln()
        - 1.0 / (1.0 + gamma)
}

/// Unique root of the stationarity condition on `[1/e, 1]`, to 1e-12.
///
/// The residual is positive at `1/e` and equals `-1/(1+gamma) < 0` at `1`,
/// so bisection on this bracket always converges.
pub fn u_star(gamma: f64) -> Result<f64> {
    if gamma < 0.0 {
        return Err(Error::Domain(format!("gamma = {gamma} must be >= 0")));
    }
    Ok(bisect_root(
        |u| u_star_residual(gamma, u),
        1.0 / E,
        1.0,
        1e-12,
    ))
}

/// The objective whose maximizer over `u in [1/e, 1]` is `u*`; its value at
/// `u*` is `theta(gamma)`.
pub fn theta_objective(gamma: f64, u: f64) -> f64 {
    let a = (1.0 + gamma * u) / (1.0 + gamma);
    let b = beta_star(gamma);
    a * a.ln() - u * u.ln() - b * b.ln()
}

/// Worst-case regret bound `theta(gamma)`.
pub fn theta(gamma: f64) -> Result<f64> {
    Ok(theta_objective(gamma, u_star(gamma)?))
}

/// All bound quantities at one equity level.
pub fn summary(gamma: f64) -> Result<BoundsSummary> {
    let u = u_star(gamma)?;
    let th = theta_objective(gamma, u);
    Ok(BoundsSummary {
        gamma,
        u_star: u,
        beta_star: beta_star(gamma),
        theta: th,
        factor: E * th,
    })
}

/// The bound curve over a grid of equity levels, with its grid arg max.
#[derive(Debug, Clone)]
pub struct FactorCurve {
    pub rows: Vec<BoundsSummary>,
    pub argmax_gamma: f64,
    pub max_factor: f64,
}

impl FactorCurve {
    /// CSV serialization with header `gamma,u_star,beta_star,theta,factor`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,u_star,beta_star,theta,factor\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_g12(r.gamma),
                fmt_g12(r.u_star),
                fmt_g12(r.beta_star),
                fmt_g12(r.theta),
                fmt_g12(r.factor)
            ));
        }
        out
    }
}

/// Evaluates the bound over `n` equity levels in `[gamma_min, gamma_max]`.
///
/// Linear spacing by default; with `log_spacing` the positive part of the
/// range is geometrically spaced (a leading `gamma_min = 0` point is kept
/// as-is, with the remaining points spanning six decades below `gamma_max`).
pub fn factor_curve(
    gamma_min: f64,
    gamma_max: f64,
    n: usize,
    log_spacing: bool,
) -> Result<FactorCurve> {
    if !(0.0 <= gamma_min && gamma_min < gamma_max) || n < 2 {
        return Err(Error::Config(format!(
            "need 0 <= gamma_min < gamma_max and n >= 2, got [{gamma_min}, {gamma_max}] with {n}"
        )));
    }
    let gammas: Vec<f64> = if log_spacing {
        let lo = if gamma_min > 0.0 {
            gamma_min
        } else {
            gamma_max * 1e-6
        };
        let mut g: Vec<f64> = (0..n)
            .map(|j| lo * (gamma_max / lo).powf(j as f64 / (n - 1) as f64))
            .collect();
        if gamma_min == 0.0 {
            g[0] = 0.0;
        }
        g
    } else {
        (0..n)
            .map(|j| gamma_min + (gamma_max - gamma_min) * j as f64 / (n - 1) as f64)
            .collect()
    };
    let rows: Vec<BoundsSummary> = gammas
        .into_iter()
        .map(summary)
        .collect::<Result<Vec<_>>>()?;
    let best = rows
        .iter()
        .cloned()
        .reduce(|a, b| if b.factor > a.factor { b } else { a })
        .expect("n >= 2");
    Ok(FactorCurve {
        rows,
        argmax_gamma: best.gamma,
        max_factor: best.factor,
    })
}

//! The large-deviations rate function `xi(alpha, beta)` and the typical
//! final-size fraction `phi_alpha`.
//!
//! With initial sets of size `alpha * a_c` (`alpha < 1`) and targets
//! `beta * t_c`, the survival probability decays like `exp(xi t_c)` where
//!
//! ```text
//! xi = -beta^r/r + | (beta - alpha gamma_r) log(e beta^r / (r (beta - alpha gamma_r)))   for beta in (phi_alpha, alpha)
//!                  | alpha/r - (r-2)(beta - alpha) + (r-1) log(beta^beta / alpha^(alpha gamma_r))   for beta in [alpha, 1]
//! ```
//!
//! and `phi_alpha` is the unique root in `[0, alpha)` of
//! `phi - phi^r / r = alpha gamma_r`. The rate vanishes at `beta =
//! phi_alpha` (the typical trajectory is free) and for `beta > 1` it
//! saturates at `xi(alpha, 1)`: beyond the critical time the process is
//! supercritical and survives at no extra exponential cost.
//!
//! Conventions: `0^0 = 1` and `0 log 0 = 0`, matching the analytic limits
//! at `alpha = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numeric::xlogx;

/// Which piece of the rate function produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateBranch {
    /// `beta < alpha`: the optimal trajectory touches the diagonal only at
    /// its endpoint.
    BelowAlpha,
    /// `beta >= alpha`: the optimal trajectory rides the diagonal on
    /// `[alpha, beta]`.
    AboveAlpha,
    /// `beta > 1` was clamped to `beta = 1`.
    ClampedAtOne,
}

/// An evaluated point of the rate function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub alpha: f64,
    /// The requested `beta` (before any clamping).
    pub beta: f64,
    pub xi: f64,
    pub branch: RateBranch,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!(
            "alpha must lie in [0,1), got {alpha}"
        )));
    }
    Ok(())
}

fn check_r(r: u32) -> Result<()> {
    if r < 2 {
        return Err(Error::Domain(format!("r must be >= 2, got {r}")));
    }
    Ok(())
}

/// The typical final-size fraction `phi_alpha`: the unique solution in
/// `[0, alpha)` of `phi - phi^r / r = alpha gamma_r`.
///
/// Solved by bisection: the map `phi -> phi - phi^r/r` is strictly
/// increasing on `[0, 1)`, negative at `0` and positive at `alpha`, so the
/// bracket never fails. Residual is below `1e-12` well within the 200
/// iteration cap.
pub fn phi(alpha: f64, r: u32) -> Result<f64> {
    check_alpha(alpha)?;
    check_r(r)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let rf = f64::from(r);
    let gamma_r = 1.0 - 1.0 / rf;
    let target = alpha * gamma_r;
    let g = |x: f64| x - x.powi(r as i32) / rf - target;
    let mut lo = 0.0f64;
    let mut hi = alpha;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let value = g(mid);
        if value.abs() < 1e-14 {
            return Ok(mid);
        }
        if value < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The `beta < alpha` piece of the rate function, as a raw formula (no
/// domain clamping). Exposed so the two analytic branches can be compared
/// directly at the seam `beta = alpha`.
pub fn xi_power_branch(alpha: f64, beta: f64, r: u32) -> f64 {
    let rf = f64::from(r);
    let alpha_r = alpha * (1.0 - 1.0 / rf);
    let gap = beta - alpha_r;
    -beta.powi(r as i32) / rf + gap * (std::f64::consts::E * beta.powi(r as i32) / (rf * gap)).ln()
}

/// The `beta >= alpha` piece of the rate function, as a raw formula.
///
/// Uses `0 log 0 = 0` so that `alpha = 0` evaluates to the analytic limit.
pub fn xi_diagonal_branch(alpha: f64, beta: f64, r: u32) -> f64 {
    let rf = f64::from(r);
    let gamma_r = 1.0 - 1.0 / rf;
    // log(beta^beta / alpha^(alpha gamma_r)) = beta log beta - alpha gamma_r log alpha
    let log_term = xlogx(beta) - gamma_r * xlogx(alpha);
    -beta.powi(r as i32) / rf + alpha / rf - (rf - 2.0) * (beta - alpha) + (rf - 1.0) * log_term
}

/// Evaluates the rate function at `(alpha, beta)`.
///
/// Requires `beta > phi_alpha`; the rate is 0 at `phi_alpha` itself and the
/// decay statement covers `beta in (phi_alpha, 1]`. Values `beta > 1` are
/// clamped to `beta = 1` with [`RateBranch::ClampedAtOne`].
pub fn rate_xi(alpha: f64, beta: f64, r: u32) -> Result<RatePoint> {
    check_alpha(alpha)?;
    check_r(r)?;
    let phi_a = phi(alpha, r)?;
    if beta <= phi_a {
        return Err(Error::Domain(format!(
            "beta must exceed phi_alpha = {phi_a:.12}, got beta = {beta}"
        )));
    }
    let (beta_eff, branch) = if beta > 1.0 {
        (1.0, RateBranch::ClampedAtOne)
    } else if beta < alpha {
        (beta, RateBranch::BelowAlpha)
    } else {
        (beta, RateBranch::AboveAlpha)
    };
    let xi = match branch {
        RateBranch::BelowAlpha => xi_power_branch(alpha, beta_eff, r),
        _ => xi_diagonal_branch(alpha, beta_eff, r),
    };
    Ok(RatePoint {
        alpha,
        beta,
        xi,
        branch,
    })
}

/// Mean and variance of the subcritical final size: `mu = phi_alpha t_c`,
/// `sigma^2 = (phi_alpha^r / r) (1 - phi_alpha^(r-1))^-2 t_c`.
pub fn clt_moments(alpha: f64, params: &ModelParams) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let r = params.r();
    let rf = f64::from(r);
    let scales = params.critical_scales();
    let phi_a = phi(alpha, r)?;
    let mu = phi_a * scales.t_c;
    let denom = 1.0 - phi_a.powi(r as i32 - 1);
    let sigma2 = phi_a.powi(r as i32) / rf / (denom * denom) * scales.t_c;
    Ok((mu, sigma2))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAMMA_2: f64 = 0.5;

    #[test]
    fn phi_at_zero_is_zero() {
        for r in 2..=5 {
            assert_eq!(phi(0.0, r).unwrap(), 0.0);
        }
    }

    #[test]
    fn phi_matches_quadratic_root_for_r2() {
        // r=2: phi^2 - 2 phi + alpha = 0 with root phi = 1 - sqrt(1 - alpha).
        for &alpha in &[0.1f64, 0.3, 0.5, 0.7, 0.9, 0.99] {
            let expected = 1.0 - (1.0 - alpha).sqrt();
            let got = phi(alpha, 2).unwrap();
            assert!(
                (got - expected).abs() < 1e-12,
                "alpha={alpha}: got {got}, expected {expected}"
            );
        }
        // alpha = 0.5 from the closed form: 1 - sqrt(2)/2.
        let got = phi(0.5, 2).unwrap();
        assert!((got - (1.0 - std::f64::consts::SQRT_2 / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn phi_defining_equation_residual() {
        for r in 2..=4u32 {
            let rf = f64::from(r);
            let gamma_r = 1.0 - 1.0 / rf;
            for i in 0..100 {
                let alpha = i as f64 / 100.0;
                let p = phi(alpha, r).unwrap();
                let residual = p - p.powi(r as i32) / rf - alpha * gamma_r;
                assert!(
                    residual.abs() <= 1e-12,
                    "alpha={alpha}, r={r}: residual {residual:e}"
                );
                if alpha > 0.0 {
                    assert!(p < alpha, "phi must stay below alpha");
                    assert!(p > 0.0);
                }
            }
        }
    }

    #[test]
    fn phi_is_monotone_and_tends_to_one() {
        let mut last = -1.0;
        for i in 0..1000 {
            let alpha = i as f64 / 1000.0;
            let p = phi(alpha, 2).unwrap();
            assert!(p >= last);
            last = p;
        }
        // phi_alpha -> 1 as alpha -> 1.
        assert!((1.0 - phi(0.999, 2).unwrap()).abs() < 0.05);
    }

    #[test]
    fn phi_rejects_out_of_range() {
        assert!(phi(-0.1, 2).is_err());
        assert!(phi(1.0, 2).is_err());
    }

    #[test]
    fn xi_vanishes_at_phi() {
        for &alpha in &[0.2, 0.5, 0.8] {
            let phi_a = phi(alpha, 2).unwrap();
            let point = rate_xi(alpha, phi_a + 1e-6, 2).unwrap();
            assert!(
                point.xi.abs() < 1e-4,
                "alpha={alpha}: xi({:.7}) = {:e}",
                phi_a + 1e-6,
                point.xi
            );
        }
    }

    #[test]
    fn xi_at_origin_and_one() {
        // xi(0,1) = -(r-1) gamma_r.
        for r in 2..=5u32 {
            let rf = f64::from(r);
            let expected = -(rf - 1.0) * (1.0 - 1.0 / rf);
            let point = rate_xi(0.0, 1.0, r).unwrap();
            assert!(
                (point.xi - expected).abs() < 1e-12,
                "r={r}: {} vs {}",
                point.xi,
                expected
            );
        }
        assert!((rate_xi(0.0, 1.0, 2).unwrap().xi + 0.5).abs() < 1e-15);
    }

    #[test]
    fn xi_half_one_hand_value() {
        // xi(1/2, 1) for r=2: -1/2 + 1/4 + (1/4) log 2.
        let expected = -0.5 + 0.25 + 0.25 * 2.0f64.ln();
        let point = rate_xi(0.5, 1.0, 2).unwrap();
        assert!((point.xi - expected).abs() < 1e-15);
        assert!((point.xi - (-0.0767132)).abs() < 1e-6);
        assert_eq!(point.branch, RateBranch::AboveAlpha);
    }

    #[test]
    fn beta_above_one_clamps() {
        let at_one = rate_xi(0.3, 1.0, 2).unwrap();
        let clamped = rate_xi(0.3, 1.7, 2).unwrap();
        assert_eq!(clamped.branch, RateBranch::ClampedAtOne);
        assert_eq!(clamped.xi, at_one.xi);
        assert_eq!(clamped.beta, 1.7);
    }

    #[test]
    fn beta_at_or_below_phi_rejected() {
        let phi_a = phi(0.5, 2).unwrap();
        assert!(rate_xi(0.5, phi_a, 2).is_err());
        assert!(rate_xi(0.5, phi_a - 0.01, 2).is_err());
    }

    #[test]
    fn branch_continuity_at_alpha() {
        // Both analytic pieces reduce to (alpha/r)(1 + (r-1) log alpha) - beta^r/r
        // at beta = alpha.
        for r in 2..=4u32 {
            for i in 1..10 {
                let alpha = i as f64 / 10.0;
                let below = xi_power_branch(alpha, alpha, r);
                let above = xi_diagonal_branch(alpha, alpha, r);
                assert!(
                    (below - above).abs() < 1e-10,
                    "r={r}, alpha={alpha}: {below} vs {above}"
                );
                let rf = f64::from(r);
                let closed =
                    -alpha.powi(r as i32) / rf + alpha / rf * (1.0 + (rf - 1.0) * alpha.ln());
                assert!((below - closed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn xi_monotone_grid() {
        // Strictly decreasing in beta on (phi_alpha, 1]; increasing in alpha.
        for r in [2u32, 3] {
            for i in 0..10 {
                let alpha = i as f64 * 0.1;
                let phi_a = phi(alpha, r).unwrap();
                let mut beta = phi_a + 0.01;
                let mut last = rate_xi(alpha, beta, r).unwrap().xi;
                while beta + 0.01 <= 1.0 {
                    beta += 0.01;
                    let xi = rate_xi(alpha, beta, r).unwrap().xi;
                    assert!(xi < last, "xi not decreasing at alpha={alpha}, beta={beta}");
                    last = xi;
                }
            }
            // Increasing in alpha for fixed beta.
            for j in 1..=10 {
                let beta = j as f64 * 0.1;
                let mut last = f64::NEG_INFINITY;
                for i in 0..10 {
                    let alpha = i as f64 * 0.1;
                    if phi(alpha, r).unwrap() >= beta {
                        continue;
                    }
                    let xi = rate_xi(alpha, beta, r).unwrap().xi;
                    assert!(
                        xi > last,
                        "xi not increasing in alpha at alpha={alpha}, beta={beta}"
                    );
                    last = xi;
                }
            }
        }
    }

    #[test]
    fn xi_nonpositive() {
        for i in 0..10 {
            let alpha = i as f64 * 0.1;
            let phi_a = phi(alpha, 3).unwrap();
            for j in 1..=50 {
                let beta = phi_a + (1.0 - phi_a) * j as f64 / 50.0;
                let xi = rate_xi(alpha, beta, 3).unwrap().xi;
                assert!(xi <= 0.0, "xi({alpha},{beta}) = {xi} > 0");
            }
        }
    }

    #[test]
    fn clt_moments_examples() {
        // alpha = 0 gives (0, 0).
        let params = ModelParams::new(1_000_000, 1e-4, 2).unwrap();
        let (mu, sigma2) = clt_moments(0.0, &params).unwrap();
        assert_eq!(mu, 0.0);
        assert_eq!(sigma2, 0.0);

        // alpha = 0.5, r=2, t_c=100: mu ~ 29.289, sigma^2 ~ 8.579.
        let (mu, sigma2) = clt_moments(0.5, &params).unwrap();
        let phi_a = phi(0.5, 2).unwrap();
        assert!((mu - phi_a * 100.0).abs() < 1e-9);
        assert!((mu - 29.2893218).abs() < 1e-4);
        let expected_var = phi_a * phi_a / 2.0 / (1.0 - phi_a) / (1.0 - phi_a) * 100.0;
        assert!((sigma2 - expected_var).abs() < 1e-9);
        assert!((sigma2 - 8.5786).abs() < 1e-3);
        assert!(sigma2 >= 0.0);
    }

    #[test]
    fn gamma_2_constant_sane() {
        assert_eq!(GAMMA_2, 0.5);
    }
}

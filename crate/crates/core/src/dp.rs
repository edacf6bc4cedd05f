//! Exact finite-`n` survival probabilities by dynamic programming.
//!
//! The chain's law is fully specified by the per-step thinned binomial
//! increments (see [`crate::chain`]); propagating them over the state space
//! `(t, S(t))` gives the full distribution of `|A*| = t*` and the survival
//! probabilities `P(a, t) = P(|A*| >= t)` exactly, up to floating point.
//!
//! States are absorbed when `S(t) + a = t`. The running count may be capped
//! at `ceil(c * t_c)`; mass driven above the cap is folded into
//! `mass_censored`, making the reported survival a lower bound that differs
//! from the exact value by at most the reported censored mass.

use serde::{Deserialize, Serialize};

use crate::chain::ChainParams;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numeric::KahanSum;
use crate::rate::{phi, rate_xi};

/// Upper bound on `(horizon + 1) * (cap + 1)` DP states.
const STATE_GUARD: u128 = 100_000_000;

/// Per-step pmf terms below this threshold (beyond the mean) are truncated,
/// with the discarded mass tracked as censored. Deep-tail survival paths
/// ride pmf terms of order `1/t_c`, far above the floor, so truncation
/// never distorts reported survival — it only caps the censored bookkeeping.
const PMF_FLOOR: f64 = 1e-30;

/// The cap on the running count `S` implied by multiplier `c`:
/// `min(n - a, ceil(c t_c))`. Values at or above `n - a` mean no truncation.
pub fn truncated_cap(params: &ChainParams, c: f64) -> u64 {
    let t_c = params.model().critical_scales().t_c;
    let max_s = params.model().n() - params.a();
    ((c * t_c).ceil() as u64).min(max_s)
}

/// Distribution of the final size and survival probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurvivalTable {
    pub params: ChainParams,
    /// Cap applied to `S` during the run.
    pub cap: u64,
    /// `dist[k] = P(|A*| = k)` for `k <= horizon`.
    pub dist: Vec<f64>,
    /// `survival[t] = P(|A*| >= t)` for `t <= horizon`.
    pub survival: Vec<f64>,
    /// Probability of exceeding the cap or outliving the horizon. Censored
    /// runs survive every `t` up to the horizon, so reported survival is a
    /// lower bound differing from the exact value by at most this mass.
    pub mass_censored: f64,
}

impl SurvivalTable {
    /// Lower bound on `P(a, t) = P(|A*| >= t)`, exact when nothing was
    /// censored (see [`SurvivalTable::mass_censored`]).
    pub fn survival(&self, t: u64) -> f64 {
        self.survival.get(t as usize).copied().unwrap_or(0.0)
    }

    /// Writes `(t, survival)` rows as CSV.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,survival")?;
        for (t, s) in self.survival.iter().enumerate() {
            writeln!(out, "{t},{s:.15e}")?;
        }
        Ok(())
    }
}

/// Runs the forward DP with the cap implied by the params' multiplier.
pub fn exact_distribution(params: &ChainParams) -> Result<SurvivalTable> {
    exact_distribution_with_cap(params, truncated_cap(params, params.cap_multiplier()))
}

/// Runs the forward DP with an explicit cap on `S`.
///
/// A cap of `n - a` (or more) disables truncation entirely and the result
/// is exact to floating point.
pub fn exact_distribution_with_cap(params: &ChainParams, cap: u64) -> Result<SurvivalTable> {
    let n = params.model().n();
    let a = params.a();
    let horizon = params.horizon();
    let cap = cap.min(n - a);
    let states = u128::from(horizon + 1) * u128::from(cap + 1);
    if states > STATE_GUARD {
        return Err(Error::StateSpace {
            states,
            guard: STATE_GUARD,
            hint: format!(
                "retry with a smaller cap multiplier (cap is currently {cap}) or horizon"
            ),
        });
    }

    let mut dist = vec![0.0f64; horizon as usize + 1];
    let mut censored = KahanSum::new();

    if a == 0 {
        // No active vertices: absorbed at t = 0.
        dist[0] = 1.0;
        return Ok(finish_table(params, cap, dist, 0.0));
    }

    let hazards = params.hazards(horizon);
    let mut alive = vec![0.0f64; cap as usize + 1];
    alive[0] = 1.0;
    // Nothing stays alive past t = cap + a: survival needs S + a > t with
    // S <= cap.
    let t_end = horizon.min(cap + a);
    let mut next = vec![0.0f64; cap as usize + 1];
    #[cfg(debug_assertions)]
    let mut absorbed_total = KahanSum::new();

    for t in 1..=t_end {
        let q = hazards[t as usize];
        next.iter_mut().for_each(|v| *v = 0.0);
        for s in 0..=cap {
            let weight = alive[s as usize];
            if weight == 0.0 {
                continue;
            }
            let trials = n - a - s;
            let room = cap - s;
            if trials == 0 || q <= 0.0 {
                next[s as usize] += weight;
                continue;
            }
            if q >= 1.0 {
                if trials <= room {
                    next[(s + trials) as usize] += weight;
                } else {
                    censored.add(weight);
                }
                continue;
            }
            // Stable pmf row from k = 0 upward; stop past the cap (the rest
            // is censored) or once terms fall below the floor beyond the mean.
            let mut term = (trials as f64 * (-q).ln_1p()).exp();
            let odds = q / (1.0 - q);
            let mean = trials as f64 * q;
            let mut tail = 1.0f64;
            let mut k = 0u64;
            let complete = loop {
                if k > room {
                    break false;
                }
                next[(s + k) as usize] += weight * term;
                tail -= term;
                if k >= trials {
                    break true;
                }
                if term < PMF_FLOOR && k as f64 > mean {
                    break false;
                }
                term *= (trials - k) as f64 / (k + 1) as f64 * odds;
                k += 1;
            };
            // A fully enumerated row leaves only rounding noise behind.
            if !complete && tail > 0.0 {
                censored.add(weight * tail);
            }
        }
        std::mem::swap(&mut alive, &mut next);

        // Absorb S + a = t.
        if t >= a {
            let s_abs = t - a;
            if s_abs <= cap {
                let mass = alive[s_abs as usize];
                dist[t as usize] = mass;
                #[cfg(debug_assertions)]
                absorbed_total.add(mass);
                alive[s_abs as usize] = 0.0;
            }
        }

        #[cfg(debug_assertions)]
        {
            let alive_now: f64 = alive.iter().sum();
            let total = alive_now + absorbed_total.value() + censored.value();
            debug_assert!(
                (total - 1.0).abs() < 1e-10,
                "probability leak at t={t}: total {total}"
            );
        }
    }

    // Anything still alive outlived the horizon within the cap window.
    for v in &alive {
        censored.add(*v);
    }
    Ok(finish_table(params, cap, dist, censored.value().max(0.0)))
}

fn finish_table(params: &ChainParams, cap: u64, dist: Vec<f64>, censored: f64) -> SurvivalTable {
    // Suffix sums over the absorbed mass; censored mass stays out so the
    // result is a lower bound.
    let mut survival = vec![0.0f64; dist.len()];
    let mut acc = KahanSum::new();
    for t in (0..dist.len()).rev() {
        acc.add(dist[t]);
        survival[t] = acc.value().min(1.0);
    }
    SurvivalTable {
        params: *params,
        cap,
        dist,
        survival,
        mass_censored: censored,
    }
}

/// One row of an exponent convergence table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExponentPoint {
    pub n: u64,
    pub t_c: f64,
    pub a: u64,
    pub t_target: u64,
    pub survival: f64,
    /// `t_c^{-1} log P(a, t)`.
    pub exponent: f64,
    /// The limiting rate `xi(alpha, beta)` for reference.
    pub xi: f64,
    pub mass_censored: f64,
}

/// Runs the DP along a sequence of models with `(alpha, beta)` held fixed
/// and reports the finite-`n` exponents `t_c^{-1} log P(a, t)`.
///
/// Initial sizes are `a = max(r, round(alpha a_c))` and targets
/// `t = round(beta t_c)`. Sets smaller than `r` can never activate anything
/// (the first activation outside needs `r` marks), so `a = r` stands in for
/// `alpha = 0`; it still satisfies `a / a_c -> 0`.
pub fn empirical_exponent(
    alpha: f64,
    beta: f64,
    models: &[ModelParams],
) -> Result<Vec<ExponentPoint>> {
    if models.is_empty() {
        return Err(Error::InvalidParameter("empty model sequence".into()));
    }
    let r = models[0].r();
    let phi_a = phi(alpha, r)?;
    if beta <= phi_a {
        return Err(Error::Domain(format!(
            "beta must exceed phi_alpha = {phi_a:.12}"
        )));
    }
    let xi = rate_xi(alpha, beta, r)?.xi;
    let mut points = Vec::with_capacity(models.len());
    for model in models {
        if model.r() != r {
            return Err(Error::InvalidParameter(
                "all models in a sequence must share r".into(),
            ));
        }
        let scales = model.critical_scales();
        let a = ((alpha * scales.a_c).round() as u64).max(u64::from(r));
        let t_target = ((beta * scales.t_c).round() as u64).max(a + 1);
        let params = ChainParams::new(*model, a)?;
        let table = exact_distribution(&params)?;
        let survival = table.survival(t_target);
        points.push(ExponentPoint {
            n: model.n(),
            t_c: scales.t_c,
            a,
            t_target,
            survival,
            exponent: survival.ln() / scales.t_c,
            xi,
            mass_censored: table.mass_censored,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{pi_at, survival_mc};

    fn chain(n: u64, p: f64, r: u32, a: u64) -> ChainParams {
        ChainParams::new(ModelParams::new(n, p, r).unwrap(), a).unwrap()
    }

    #[test]
    fn survival_is_one_up_to_a() {
        let params = chain(500, 5e-3, 2, 6);
        let table = exact_distribution(&params).unwrap();
        for t in 0..=6 {
            // Exactly 1 up to the censored lower-bound slack.
            assert!(
                1.0 - table.survival(t) <= table.mass_censored + 1e-12,
                "t={t}: {}",
                table.survival(t)
            );
        }
        assert!(table.survival(7) < 1.0 - 1e-3);
    }

    #[test]
    fn survival_first_step_closed_form() {
        // survival(a+1) = 1 - (1 - pi(a))^(n-a): the chain dies at t = a
        // exactly when no vertex has been counted by then. Untruncated runs
        // so the identity is exact.
        for &(n, p, a) in &[(200u64, 0.04, 3u64), (500, 8e-3, 5), (1000, 2e-3, 4)] {
            let params = chain(n, p, 2, a).with_horizon(n).unwrap();
            let table = exact_distribution_with_cap(&params, n - a).unwrap();
            let pi_a = pi_at(a, p, 2);
            let closed = -((n - a) as f64 * (-pi_a).ln_1p()).exp_m1();
            let got = table.survival(a + 1);
            assert!(
                (got - closed).abs() < 1e-12,
                "n={n}: {got:.15} vs {closed:.15}"
            );
        }
    }

    #[test]
    fn empty_initial_set_table() {
        let params = chain(100, 0.05, 2, 0);
        let table = exact_distribution(&params).unwrap();
        assert_eq!(table.survival(0), 1.0);
        assert_eq!(table.survival(1), 0.0);
        assert_eq!(table.dist[0], 1.0);
    }

    #[test]
    fn probability_mass_is_conserved() {
        let params = chain(300, 0.02, 2, 4);
        let table = exact_distribution_with_cap(&params, 296).unwrap();
        let total: f64 = table.dist.iter().sum::<f64>() + table.mass_censored;
        assert!((total - 1.0).abs() < 1e-10, "total {total}");
    }

    #[test]
    fn survival_monotone_in_t_and_a() {
        // Untruncated tables: the exact survival is monotone in both t and a.
        let params = chain(400, 8e-3, 2, 5).with_horizon(400).unwrap();
        let table = exact_distribution_with_cap(&params, 395).unwrap();
        for t in 0..params.horizon() {
            assert!(table.survival(t) >= table.survival(t + 1));
        }
        let params_bigger = chain(400, 8e-3, 2, 6).with_horizon(400).unwrap();
        let bigger = exact_distribution_with_cap(&params_bigger, 394).unwrap();
        for t in 0..=400 {
            assert!(
                bigger.survival(t) >= table.survival(t) - 1e-12,
                "survival not monotone in a at t={t}"
            );
        }
    }

    #[test]
    fn censored_mass_small_in_subcritical_runs() {
        // c = 3 leaves less than 1e-6 above the cap for subcritical a once
        // t_c is large enough for the exponential decay to bite.
        let model = ModelParams::new(1_000_000, 1e-4, 2).unwrap(); // t_c = 100
        let params = ChainParams::new(model, 15).unwrap(); // alpha = 0.3
        let table = exact_distribution(&params).unwrap();
        assert!(
            table.mass_censored < 1e-6,
            "censored {:e}",
            table.mass_censored
        );
    }

    #[test]
    fn no_truncation_when_cap_reaches_n() {
        let params = chain(150, 0.05, 2, 3).with_horizon(150).unwrap();
        let full = exact_distribution_with_cap(&params, 147).unwrap();
        // With horizon = n the chain must stop; nothing can be censored.
        assert!(
            full.mass_censored < 1e-12,
            "censored {:e}",
            full.mass_censored
        );
        let total: f64 = full.dist.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn survival_monotone_in_cap() {
        let params = chain(2000, 1.2e-3, 2, 3);
        let mut last = None;
        for cap in [5u64, 10, 20, 40, 1997] {
            let table = exact_distribution_with_cap(&params, cap).unwrap();
            let s = table.survival(8);
            if let Some(prev) = last {
                assert!(s >= prev - 1e-14, "cap={cap}: {s} < {prev}");
            }
            last = Some(s);
        }
    }

    #[test]
    fn state_space_guard_triggers() {
        let model = ModelParams::new(100_000_000, 1e-6, 2).unwrap();
        let params = ChainParams::new(model, 1000).unwrap();
        match exact_distribution_with_cap(&params, 99_000_000) {
            Err(Error::StateSpace { .. }) => {}
            other => panic!("expected state-space guard, got {other:?}"),
        }
    }

    #[test]
    fn dp_matches_chain_monte_carlo() {
        // Three parameter sets; every tested t within 3 standard errors.
        let cases = [
            chain(500, 8e-3, 2, 4),
            chain(1000, 3e-3, 2, 6),
            chain(300, 0.03, 3, 5),
        ];
        for params in cases {
            let table = exact_distribution_with_cap(&params, params.model().n()).unwrap();
            for t in [
                params.a() + 1,
                params.a() + 3,
                params.a() + 8,
                params.a() + 15,
            ] {
                if t > params.horizon() {
                    continue;
                }
                let mc = survival_mc(&params, t, 40_000, 2024).unwrap();
                let exact = table.survival(t);
                let gap = (mc.p_hat - exact).abs();
                assert!(
                    gap <= 3.0 * mc.stderr.max(1e-4),
                    "params {:?}, t={t}: dp {exact} vs mc {} (se {})",
                    params,
                    mc.p_hat,
                    mc.stderr
                );
            }
        }
    }

    #[test]
    fn exponent_sequence_shape() {
        let models = [
            ModelParams::for_critical_time(10_000, 2, 15.0).unwrap(),
            ModelParams::for_critical_time(100_000, 2, 25.0).unwrap(),
        ];
        let points = empirical_exponent(0.5, 1.0, &models).unwrap();
        assert_eq!(points.len(), 2);
        for point in &points {
            assert!(point.exponent < 0.0);
            assert!((point.xi - rate_xi(0.5, 1.0, 2).unwrap().xi).abs() < 1e-15);
            assert!(point.survival > 0.0 && point.survival < 1.0);
        }
    }

    #[test]
    fn csv_output_shape() {
        let table = exact_distribution(&chain(300, 5e-3, 2, 3)).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,survival\n"));
        let first: f64 = text
            .lines()
            .nth(1)
            .unwrap()
            .strip_prefix("0,")
            .unwrap()
            .parse()
            .unwrap();
        assert!((first - 1.0).abs() < 1e-9);
    }
}

//! The binomial-chain representation of the bootstrap dynamics.
//!
//! Revealing the graph one used vertex per step, each of the `n - a`
//! initially inactive vertices accumulates marks independently, so the
//! cumulative count of newly discovered active vertices satisfies
//!
//! ```text
//! S(t) ~ Bin(n - a, pi(t)),      pi(t) = P(Bin(t, p) >= r),
//! ```
//!
//! with independent binomial increments over disjoint intervals. The process
//! stops at `t* = min{t >= 0 : S(t) + a = t}`, and `|A*| = t*`: the final
//! active set has size `t*` exactly.
//!
//! Simulation draws per-step increments
//! `dS(t) ~ Bin(n - a - S(t-1), (pi(t) - pi(t-1)) / (1 - pi(t-1)))`,
//! the hazard of a vertex reaching `r` marks at step `t` given it had not
//! before. By thinning this reproduces every marginal and increment law
//! above exactly.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numeric::ln_choose;
use crate::seeding::stream_rng;

/// `P(Bin(t, p) <= r - 1)`: the probability a vertex is still inactive after
/// `t` mark opportunities. Sums the `r` lower-tail terms by a stable pmf
/// recurrence (all quantities positive).
pub(crate) fn inactive_prob(t: u64, p: f64, r: u32) -> f64 {
    if t == 0 {
        return 1.0;
    }
    let tf = t as f64;
    let mut term = (tf * (-p).ln_1p()).exp(); // (1-p)^t
    let mut sum = term;
    let odds = p / (1.0 - p);
    let kmax = u64::from(r) - 1;
    for k in 0..kmax.min(t) {
        let kf = k as f64;
        term *= (tf - kf) / (kf + 1.0) * odds;
        sum += term;
    }
    sum.min(1.0)
}

/// Binomial pmf `P(Bin(t, p) = k)` through log-gamma, for the hazard
/// identity below.
fn binom_pmf(t: u64, k: u64, p: f64) -> f64 {
    if k > t {
        return 0.0;
    }
    let (tf, kf) = (t as f64, k as f64);
    (ln_choose(tf, kf) + kf * p.ln() + (tf - kf) * (-p).ln_1p()).exp()
}

/// `pi(t) = P(Bin(t, p) >= r)`, computed stably on both ends: via the
/// complement of the `r`-term lower tail when the result is large, and by
/// direct upper-tail summation when it is small.
pub fn pi_at(t: u64, p: f64, r: u32) -> f64 {
    if t < u64::from(r) {
        return 0.0;
    }
    let lower = inactive_prob(t, p, r);
    if lower <= 0.5 {
        return 1.0 - lower;
    }
    // Upper tail directly: terms fall off geometrically for pt << 1.
    let (tf, rf) = (t as f64, f64::from(r));
    let mut term = (ln_choose(tf, rf) + rf * p.ln() + (tf - rf) * (-p).ln_1p()).exp();
    let mut sum = term;
    let odds = p / (1.0 - p);
    for k in u64::from(r)..t {
        let kf = k as f64;
        term *= (tf - kf) / (kf + 1.0) * odds;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum.min(1.0)
}

/// Per-step increment probabilities of the thinned chain.
///
/// `delta_pi(t) = pi(t) - pi(t-1) = p * P(Bin(t-1, p) = r-1)` exactly: the
/// last mark opportunity must push a vertex sitting at `r - 1` marks over
/// the threshold. Dividing by the survivor mass gives the hazard without
/// any cancellation.
pub(crate) fn hazard_table(p: f64, r: u32, t_max: u64) -> Vec<f64> {
    let mut hazards = Vec::with_capacity(t_max as usize + 1);
    hazards.push(0.0); // t = 0 placeholder
    for t in 1..=t_max {
        let delta = p * binom_pmf(t - 1, u64::from(r) - 1, p);
        let survivor = inactive_prob(t - 1, p, r);
        let q = if survivor > 0.0 {
            delta / survivor
        } else {
            1.0
        };
        hazards.push(q.clamp(0.0, 1.0));
    }
    hazards
}

/// Parameters of one chain: the model, the initial active count `a` and the
/// step horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    model: ModelParams,
    a: u64,
    horizon: u64,
    cap_multiplier: f64,
}

impl ChainParams {
    /// Default horizon `min(n, a + ceil(C t_c))` with cap multiplier `C = 3`.
    pub fn new(model: ModelParams, a: u64) -> Result<Self> {
        Self::with_cap(model, a, 3.0)
    }

    /// Same, with an explicit trajectory cap multiplier `C`.
    pub fn with_cap(model: ModelParams, a: u64, cap_multiplier: f64) -> Result<Self> {
        if a > model.n() {
            return Err(Error::InvalidParameter(format!(
                "initial count a = {a} exceeds n = {}",
                model.n()
            )));
        }
        if cap_multiplier.is_nan() || cap_multiplier <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cap multiplier must be positive, got {cap_multiplier}"
            )));
        }
        let t_c = model.critical_scales().t_c;
        let horizon = (a + (cap_multiplier * t_c).ceil() as u64).min(model.n());
        Ok(Self {
            model,
            a,
            horizon: horizon.max(a),
            cap_multiplier,
        })
    }

    /// Overrides the horizon; must satisfy `a <= horizon <= n`.
    pub fn with_horizon(mut self, horizon: u64) -> Result<Self> {
        if horizon < self.a || horizon > self.model.n() {
            return Err(Error::InvalidParameter(format!(
                "horizon must lie in [a, n] = [{}, {}], got {horizon}",
                self.a,
                self.model.n()
            )));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn cap_multiplier(&self) -> f64 {
        self.cap_multiplier
    }

    pub(crate) fn hazards(&self, t_max: u64) -> Vec<f64> {
        hazard_table(self.model.p(), self.model.r(), t_max)
    }
}

/// One realization of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    /// `S(0), S(1), ..., S(T)` where `T` is the stopping time or the horizon.
    pub s_values: Vec<u64>,
    /// Stopping time `t* = |A*|`, or `None` when censored at the horizon.
    pub t_star: Option<u64>,
}

impl ChainTrace {
    pub fn censored(&self) -> bool {
        self.t_star.is_none()
    }

    /// Writes the trace as CSV with columns `(t, s_t)`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,s_t")?;
        for (t, s) in self.s_values.iter().enumerate() {
            writeln!(out, "{t},{s}")?;
        }
        Ok(())
    }
}

fn draw_binomial<R: Rng>(rng: &mut R, count: u64, q: f64) -> u64 {
    if count == 0 || q <= 0.0 {
        0
    } else if q >= 1.0 {
        count
    } else {
        Binomial::new(count, q)
            .expect("hazard is clamped to [0,1]")
            .sample(rng)
    }
}

fn run_chain(params: &ChainParams, hazards: &[f64], seed: u64, stream: u64) -> ChainTrace {
    let mut rng = stream_rng(seed, stream);
    let (n, a) = (params.model.n(), params.a);
    let mut s = 0u64;
    let mut s_values = vec![0u64];
    if a == 0 {
        return ChainTrace {
            s_values,
            t_star: Some(0),
        };
    }
    for t in 1..=params.horizon {
        let remaining = n - a - s;
        let ds = draw_binomial(&mut rng, remaining, hazards[t as usize]);
        s += ds;
        s_values.push(s);
        if s + a == t {
            return ChainTrace {
                s_values,
                t_star: Some(t),
            };
        }
    }
    ChainTrace {
        s_values,
        t_star: None,
    }
}

/// Simulates one chain, stopping at `t*` or the horizon. Reproducible given
/// the seed.
pub fn simulate_chain(params: &ChainParams, seed: u64) -> ChainTrace {
    let hazards = params.hazards(params.horizon);
    run_chain(params, &hazards, seed, 0)
}

/// Evolves the counting process `S(t)` for exactly `t_max` steps without
/// stopping, returning `S(0), ..., S(t_max)`.
///
/// The chain's law is defined past the absorption time (stopping is a
/// functional of the path), which is what marginal-law checks need.
pub fn marginal_counts(params: &ChainParams, t_max: u64, seed: u64) -> Vec<u64> {
    let hazards = params.hazards(t_max);
    let mut rng = stream_rng(seed, 0);
    let (n, a) = (params.model.n(), params.a);
    let mut s = 0u64;
    let mut out = vec![0u64];
    for t in 1..=t_max {
        let remaining = n - a - s;
        s += draw_binomial(&mut rng, remaining, hazards[t as usize]);
        out.push(s);
    }
    out
}

/// Monte Carlo estimate of `P(a, t) = P(|A*| >= t)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub runs: u64,
    pub successes: u64,
    pub seed: u64,
    pub t_target: u64,
    pub params: ChainParams,
}

/// Estimates `P(|A*| >= t_target)` over `runs` independent chains.
///
/// Runs execute in parallel on independent seed streams; the horizon is
/// extended to at least `t_target` so censoring never makes the outcome of
/// a run ambiguous.
pub fn survival_mc(
    params: &ChainParams,
    t_target: u64,
    runs: u64,
    seed: u64,
) -> Result<SurvivalEstimate> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be >= 1".into()));
    }
    let params = if params.horizon < t_target {
        params.with_horizon(t_target.min(params.model.n()))?
    } else {
        *params
    };
    if t_target > params.model.n() {
        return Err(Error::InvalidParameter(format!(
            "t_target = {t_target} exceeds n = {}",
            params.model.n()
        )));
    }
    let hazards = params.hazards(params.horizon);
    let successes: u64 = (0..runs)
        .into_par_iter()
        .map(|run| {
            let trace = run_chain(&params, &hazards, seed, run);
            // Censored runs outlived the horizon >= t_target.
            match trace.t_star {
                Some(t) => u64::from(t >= t_target),
                None => 1,
            }
        })
        .sum();
    let p_hat = successes as f64 / runs as f64;
    let stderr = (p_hat * (1.0 - p_hat) / runs as f64).sqrt();
    Ok(SurvivalEstimate {
        p_hat,
        stderr,
        runs,
        successes,
        seed,
        t_target,
        params,
    })
}

/// Sample moments of the final size `t*`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FinalSizeMoments {
    pub mean: f64,
    pub variance: f64,
    /// Standard error of the mean.
    pub se_mean: f64,
    /// Standard error of the variance under a normal approximation.
    pub se_variance: f64,
    pub runs: u64,
    pub censored: u64,
    pub seed: u64,
    pub params: ChainParams,
}

/// Sample mean and variance of `t*` over `runs` chains, for comparison with
/// the subcritical CLT. Censored runs are counted separately and excluded
/// from the moments.
pub fn final_size_moments(params: &ChainParams, runs: u64, seed: u64) -> Result<FinalSizeMoments> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be >= 1".into()));
    }
    let hazards = params.hazards(params.horizon);
    let outcomes: Vec<Option<u64>> = (0..runs)
        .into_par_iter()
        .map(|run| run_chain(params, &hazards, seed, run).t_star)
        .collect();
    let censored = outcomes.iter().filter(|o| o.is_none()).count() as u64;
    let kept: Vec<f64> = outcomes.into_iter().flatten().map(|t| t as f64).collect();
    let count = kept.len() as f64;
    if kept.is_empty() {
        return Ok(FinalSizeMoments {
            mean: f64::NAN,
            variance: f64::NAN,
            se_mean: f64::NAN,
            se_variance: f64::NAN,
            runs,
            censored,
            seed,
            params: *params,
        });
    }
    let mean = kept.iter().sum::<f64>() / count;
    let variance = if kept.len() < 2 {
        0.0
    } else {
        kept.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0)
    };
    Ok(FinalSizeMoments {
        mean,
        variance,
        se_mean: (variance / count).sqrt(),
        se_variance: variance * (2.0 / (count - 1.0)).sqrt(),
        runs,
        censored,
        seed,
        params: *params,
    })
}

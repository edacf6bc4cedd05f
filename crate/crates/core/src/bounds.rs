//! Contagious-set analytics: the lower-bound calculator for minimal
//! contagious sets of `G(n,p)` and a brute-force oracle for small graphs.
//!
//! A set is contagious when it eventually activates every vertex; `m(G, r)`
//! is the least size of such a set. With the scale parameter `vartheta` and
//!
//! ```text
//! p = (gamma_r^2 / vartheta)^{gamma_r} ((r-1)!/n)^{1/r},
//! ```
//!
//! the critical time is `t_c = vartheta / gamma_r^2` and a first-moment
//! count of size-`t_delta` sets surviving to `t_c` yields the bound
//! `m(G(n,p), r) >= (1 - o(1)) r vartheta / log(n / vartheta)`, since
//! `xi(0,1) t_c = -r vartheta`. The `o(1)` terms are reported as explicit
//! zeros here; everything is a finite-`n` diagnostic.

use serde::{Deserialize, Serialize};

use crate::chain::ChainParams;
use crate::dp::exact_distribution;
use crate::error::{Error, Result};
use crate::graph::{percolate, Graph};
use crate::model::ModelParams;
use crate::numeric::ln_choose;

/// Lower-bound report for minimal contagious sets of G(n,p).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContagiousBoundReport {
    pub r: u32,
    pub n: u64,
    pub vartheta: f64,
    pub delta: f64,
    /// Edge probability derived from `vartheta`.
    pub p: f64,
    /// `vartheta / gamma_r^2`.
    pub t_c: f64,
    /// The bound candidate `(1 - delta) r vartheta / log(n / vartheta)`.
    pub t_delta: f64,
    /// Exponent margin `1 - (1 - delta) log(ne/t_delta) / log(n/vartheta)`,
    /// with the asymptotic `o(1)` term set to 0.
    pub nu: f64,
    /// Log of the first-moment bound `(ne/t_delta)^{t_delta} e^{-r vartheta}`.
    pub log_expected_asymptotic: f64,
}

fn check_bound_args(r: u32, n: u64, vartheta: f64, delta: f64) -> Result<()> {
    if r < 2 {
        return Err(Error::InvalidParameter(format!("r must be >= 2, got {r}")));
    }
    if !(vartheta > 1.0 && vartheta < n as f64) {
        return Err(Error::InvalidParameter(format!(
            "vartheta must lie in (1, n), got {vartheta}"
        )));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in [0, 1), got {delta}"
        )));
    }
    Ok(())
}

/// Evaluates the lower-bound formulas at `(r, n, vartheta, delta)`.
pub fn contagious_lower_bound(
    r: u32,
    n: u64,
    vartheta: f64,
    delta: f64,
) -> Result<ContagiousBoundReport> {
    check_bound_args(r, n, vartheta, delta)?;
    let rf = f64::from(r);
    let gamma_r = 1.0 - 1.0 / rf;
    let nf = n as f64;
    let factorial: f64 = (1..r).map(f64::from).product();
    let p = (gamma_r * gamma_r / vartheta).powf(gamma_r) * (factorial / nf).powf(1.0 / rf);
    let t_c = vartheta / (gamma_r * gamma_r);
    let log_ratio = (nf / vartheta).ln();
    let t_delta = (1.0 - delta) * rf * vartheta / log_ratio;
    let nu = 1.0 - (1.0 - delta) * (nf * std::f64::consts::E / t_delta).ln() / log_ratio;
    let log_expected_asymptotic =
        t_delta * (nf * std::f64::consts::E / t_delta).ln() - rf * vartheta;
    Ok(ContagiousBoundReport {
        r,
        n,
        vartheta,
        delta,
        p,
        t_c,
        t_delta,
        nu,
        log_expected_asymptotic,
    })
}

/// Finite-`n` first moment with the survival probability taken from the
/// exact DP instead of the asymptotic `e^{-r vartheta}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FirstMomentReport {
    pub bound: ContagiousBoundReport,
    /// `round(t_delta)`, the set size actually counted.
    pub a: u64,
    /// `round(t_c)`, the survival target.
    pub t_target: u64,
    pub log_choose: f64,
    /// `log P(a, t_target)` from the exact DP.
    pub log_survival: f64,
    /// `log [ C(n, a) P(a, t_target) ]`.
    pub log_expected: f64,
}

/// Computes `log(C(n, t_delta) P(t_delta, t_c))` exactly at finite `n`.
pub fn first_moment(r: u32, n: u64, vartheta: f64, delta: f64) -> Result<FirstMomentReport> {
    let bound = contagious_lower_bound(r, n, vartheta, delta)?;
    let a = bound.t_delta.round() as u64;
    if a >= n {
        return Err(Error::InvalidParameter(format!(
            "t_delta = {} reaches n = {n}",
            bound.t_delta
        )));
    }
    let a = a.max(1);
    let model = ModelParams::new(n, bound.p, r)?;
    let t_target = bound.t_c.round() as u64;
    let params = ChainParams::new(model, a)?;
    let table = exact_distribution(&params)?;
    let log_survival = table.survival(t_target).ln();
    let log_choose = ln_choose(n as f64, a as f64);
    Ok(FirstMomentReport {
        bound,
        a,
        t_target,
        log_choose,
        log_survival,
        log_expected: log_choose + log_survival,
    })
}

/// Outcome of the brute-force search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MinContagious {
    Found { size: usize, witness: Vec<usize> },
    ExceedsLimit { limit: usize },
}

/// Subset guard for the exhaustive search.
const ENUMERATION_GUARD: u128 = 100_000_000;

fn binomial_u128(n: usize, k: usize) -> u128 {
    let mut result: u128 = 1;
    for i in 0..k.min(n - k) {
        result = result.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    result
}

/// Advances to the lexicographically next k-combination of `{0, ..., n-1}`;
/// returns false once exhausted.
fn next_combination(indices: &mut [usize], n: usize) -> bool {
    let k = indices.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if indices[i] != i + n - k {
            indices[i] += 1;
            for j in i + 1..k {
                indices[j] = indices[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exhaustive minimal contagious set search, in increasing subset size,
/// using the percolation fixpoint as the activation oracle.
///
/// No set smaller than `min(r, n)` can be contagious (a first activation
/// outside the set needs `r` active neighbours), so the search starts there.
pub fn min_contagious_bruteforce(
    graph: &Graph,
    r: u32,
    size_limit: usize,
) -> Result<MinContagious> {
    let n = graph.n();
    if n == 0 {
        return Ok(MinContagious::Found {
            size: 0,
            witness: Vec::new(),
        });
    }
    let limit = size_limit.min(n);
    let start = (r as usize).min(n);
    for k in start..=limit {
        let subsets = binomial_u128(n, k);
        if subsets > ENUMERATION_GUARD {
            return Err(Error::EnumerationGuard {
                subsets,
                guard: ENUMERATION_GUARD,
            });
        }
        let mut indices: Vec<usize> = (0..k).collect();
        loop {
            if percolate(graph, &indices, r)?.final_size() == n {
                return Ok(MinContagious::Found {
                    size: k,
                    witness: indices,
                });
            }
            if !next_combination(&mut indices, n) {
                break;
            }
        }
    }
    Ok(MinContagious::ExceedsLimit { limit })
}

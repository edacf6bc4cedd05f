//! Model parameters and critical scales.
//!
//! Everything in this crate lives in the universe of the triple `(n, p, r)`:
//! an Erdős–Rényi graph on `n` vertices with edge probability `p`, and the
//! `r`-neighbour activation threshold. The derived scales
//!
//! ```text
//! gamma_r = 1 - 1/r
//! t_c     = ((r-1)! / (n p^r))^(1/(r-1))
//! a_c     = gamma_r * t_c
//! ```
//!
//! set the units for everything else: initial sets are measured in `a_c`,
//! activation times and final sizes in `t_c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ln_gamma;

/// The `(n, p, r)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: u64,
    p: f64,
    r: u32,
}

impl ModelParams {
    /// Validates `n >= r + 1`, `0 < p < 1` and `r >= 2`.
    pub fn new(n: u64, p: f64, r: u32) -> Result<Self> {
        if r < 2 {
            return Err(Error::InvalidParameter(format!("r must be >= 2, got {r}")));
        }
        if n < u64::from(r) + 1 {
            return Err(Error::InvalidParameter(format!(
                "n must be >= r + 1, got n={n}, r={r}"
            )));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p must lie strictly in (0,1), got {p}"
            )));
        }
        Ok(Self { n, p, r })
    }

    /// Picks `p` so that the critical time scale equals `t_c`.
    ///
    /// Inverts the defining equation of `t_c`, giving
    /// `p = ((r-1)! / (n t_c^(r-1)))^(1/r)`. Useful for holding `(alpha,
    /// beta)` fixed while `n` grows.
    pub fn for_critical_time(n: u64, r: u32, t_c: f64) -> Result<Self> {
        if t_c.is_nan() || t_c <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "t_c must be positive, got {t_c}"
            )));
        }
        let rf = f64::from(r);
        let ln_p = (ln_gamma(rf) - (n as f64).ln() - (rf - 1.0) * t_c.ln()) / rf;
        Self::new(n, ln_p.exp(), r)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// `gamma_r`, `t_c` and `a_c` for these parameters.
    pub fn critical_scales(&self) -> CriticalScales {
        let rf = f64::from(self.r);
        let gamma_r = 1.0 - 1.0 / rf;
        // (r-1)! via log-gamma so large r cannot overflow.
        let ln_tc = (ln_gamma(rf) - (self.n as f64).ln() - rf * self.p.ln()) / (rf - 1.0);
        let t_c = ln_tc.exp();
        CriticalScales {
            gamma_r,
            t_c,
            a_c: gamma_r * t_c,
        }
    }

    /// Finite-`n` diagnostics for the hypothesis `log^{r-1} n << np << n^{gamma_r}`.
    ///
    /// Purely informational: ratios above 1 mean the parameters sit inside
    /// the regime, but nothing ever fails on them.
    pub fn check_regime(&self) -> RegimeReport {
        let n = self.n as f64;
        let rf = f64::from(self.r);
        let np = n * self.p;
        let log_pow = n.ln().powf(rf - 1.0);
        let n_gamma = n.powf(1.0 - 1.0 / rf);
        let scales = self.critical_scales();
        RegimeReport {
            np,
            log_pow_n: log_pow,
            n_gamma_r: n_gamma,
            lower_ratio: np / log_pow,
            upper_ratio: n_gamma / np,
            p_t_c: self.p * scales.t_c,
            in_regime: np > log_pow && n_gamma > np,
        }
    }
}

/// Derived critical scales; see the module docs for the formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalScales {
    /// `1 - 1/r`.
    pub gamma_r: f64,
    /// Time scale at which the activation branching process turns supercritical.
    pub t_c: f64,
    /// Critical initial-set size `gamma_r * t_c`.
    pub a_c: f64,
}

/// Output of [`ModelParams::check_regime`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegimeReport {
    pub np: f64,
    pub log_pow_n: f64,
    pub n_gamma_r: f64,
    /// `np / log^{r-1} n`; in-regime when > 1.
    pub lower_ratio: f64,
    /// `n^{gamma_r} / np`; in-regime when > 1.
    pub upper_ratio: f64,
    /// `p * t_c`, small in-regime.
    pub p_t_c: f64,
    pub in_regime: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelParams::new(10, 0.1, 1).is_err());
        assert!(ModelParams::new(2, 0.1, 2).is_err());
        assert!(ModelParams::new(10, 0.0, 2).is_err());
        assert!(ModelParams::new(10, 1.0, 2).is_err());
        assert!(ModelParams::new(10, 0.5, 2).is_ok());
    }

    #[test]
    fn critical_scales_from_direct_arithmetic() {
        // (n=10^6, p=10^-4, r=2): t_c = 1/(n p^2) = 100, a_c = 50.
        let params = ModelParams::new(1_000_000, 1e-4, 2).unwrap();
        let scales = params.critical_scales();
        assert!((scales.t_c - 100.0).abs() < 1e-9);
        assert!((scales.a_c - 50.0).abs() < 1e-9);

        // (n=10^6, p=2*10^-4, r=2): t_c = 25, a_c = 12.5.
        let params = ModelParams::new(1_000_000, 2e-4, 2).unwrap();
        let scales = params.critical_scales();
        assert!((scales.t_c - 25.0).abs() < 1e-10);
        assert!((scales.a_c - 12.5).abs() < 1e-10);
    }

    #[test]
    fn gamma_2_is_one_half() {
        for &(n, p) in &[(1000u64, 0.01), (10_000, 0.001), (500, 0.2)] {
            let scales = ModelParams::new(n, p, 2).unwrap().critical_scales();
            assert!((scales.a_c / scales.t_c - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn critical_scales_match_integer_factorial_for_larger_r() {
        // r=4: (r-1)! = 6; check the log-gamma route against direct arithmetic.
        let (n, p) = (100_000u64, 1e-3);
        let scales = ModelParams::new(n, p, 4).unwrap().critical_scales();
        let direct = (6.0 / (n as f64 * p.powi(4))).powf(1.0 / 3.0);
        assert!((scales.t_c - direct).abs() / direct < 1e-12);
    }

    #[test]
    fn for_critical_time_round_trips() {
        for &(n, r, tc) in &[(10_000u64, 2u32, 21.5), (1_000_000, 3, 80.0)] {
            let params = ModelParams::for_critical_time(n, r, tc).unwrap();
            let scales = params.critical_scales();
            assert!((scales.t_c - tc).abs() / tc < 1e-12);
        }
    }

    #[test]
    fn regime_report_examples() {
        // (n=10^6, p=2*10^-4, r=2): np = 200, log n ~ 13.8, sqrt(n) = 1000.
        let report = ModelParams::new(1_000_000, 2e-4, 2).unwrap().check_regime();
        assert!((report.np - 200.0).abs() < 1e-9);
        assert!(report.lower_ratio > 1.0);
        assert!(report.upper_ratio > 1.0);
        assert!(report.in_regime);
        // p * t_c = 2e-4 * 25 = 5e-3.
        assert!((report.p_t_c - 5e-3).abs() < 1e-12);

        // (n=100, p=0.5, r=2): np = 50 > sqrt(n) = 10, out of regime.
        let report = ModelParams::new(100, 0.5, 2).unwrap().check_regime();
        assert!(!report.in_regime);
        assert!(report.upper_ratio < 1.0);
    }
}

//! Optimal activation trajectories and the integral functional
//!
//! ```text
//! I(f, s, t) = \int_s^t f'(x) log(e x^{r-1} / f'(x)) dx.
//! ```
//!
//! Trajectories are measured in units of `t_c` on both axes: `f(x)` is the
//! number of active vertices (in `t_c` units) once `x t_c` of them have been
//! used. Survival corresponds to the obstacle constraint `f(x) >= x`.
//!
//! The maximizing trajectory from `(0, alpha gamma_r)` to the diagonal is a
//! pure power `c x^r + c'` while strictly above the diagonal, and rides the
//! diagonal after first contact:
//!
//! ```text
//! beta <= alpha:  f*(x) = (beta - alpha gamma_r)(x/beta)^r + alpha gamma_r
//! beta >  alpha:  f*(x) = x^r/(r alpha^{r-1}) + alpha gamma_r   (x <= alpha),
//!                 f*(x) = x                                     (x > alpha).
//! ```
//!
//! At `alpha = 0` the power form degenerates; its limit is the diagonal
//! `f*(x) = x` on all of `[0, beta]`, which is what we use.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, xlogx};
use crate::rate::phi;

/// Tolerance for floating-point slack in trajectory invariants.
const INVARIANT_SLACK: f64 = 1e-9;

/// A sampled trajectory: strictly increasing grid `x_0 < ... < x_m` with
/// non-decreasing values `f_i >= x_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "grid and values must have equal length ({} vs {})",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < 2 {
            return Err(Error::InvalidParameter(
                "a trajectory needs at least two grid points".into(),
            ));
        }
        for i in 0..grid.len() - 1 {
            if grid[i + 1] <= grid[i] {
                return Err(Error::InvalidParameter(format!(
                    "grid must be strictly increasing at index {i}"
                )));
            }
            if values[i + 1] < values[i] - INVARIANT_SLACK {
                return Err(Error::InvalidParameter(format!(
                    "values must be non-decreasing at index {i}"
                )));
            }
        }
        for i in 0..grid.len() {
            if values[i] < grid[i] - INVARIANT_SLACK * grid[i].abs().max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "obstacle violated at index {i}: f = {} < x = {}",
                    values[i], grid[i]
                )));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of cells (grid points minus one).
    pub fn cells(&self) -> usize {
        self.grid.len() - 1
    }

    /// Sup-norm distance to another trajectory on the same grid.
    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.grid.len() != other.grid.len()
            || self
                .grid
                .iter()
                .zip(&other.grid)
                .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::InvalidParameter(
                "sup_distance requires identical grids".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// The closed-form optimal trajectory `f*` for a given `(alpha, beta, r)`.
#[derive(Debug, Clone, Copy)]
pub struct OptimalPath {
    alpha: f64,
    beta: f64,
    r: u32,
    alpha_r: f64,
    /// Leading coefficient of the power piece; `None` when the whole path is
    /// the diagonal (`alpha = 0`).
    power_coeff: Option<f64>,
    /// Where the power piece ends and the diagonal begins (`beta` when the
    /// path never rides the diagonal).
    contact: f64,
}

impl OptimalPath {
    /// Requires `alpha in [0,1)`, `phi_alpha < beta <= 1`.
    pub fn new(alpha: f64, beta: f64, r: u32) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Domain(format!(
                "alpha must lie in [0,1), got {alpha}"
            )));
        }
        let phi_a = phi(alpha, r)?;
        if beta <= phi_a || beta > 1.0 {
            return Err(Error::Domain(format!(
                "beta must lie in (phi_alpha, 1] = ({phi_a:.12}, 1], got {beta}"
            )));
        }
        let rf = f64::from(r);
        let alpha_r = alpha * (1.0 - 1.0 / rf);
        let (power_coeff, contact) = if alpha == 0.0 {
            (None, 0.0)
        } else if beta <= alpha {
            (Some((beta - alpha_r) / beta.powi(r as i32)), beta)
        } else {
            (Some(1.0 / (rf * alpha.powi(r as i32 - 1))), alpha)
        };
        Ok(Self {
            alpha,
            beta,
            r,
            alpha_r,
            power_coeff,
            contact,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// First diagonal contact point: `min(alpha, beta)` (0 when `alpha = 0`).
    pub fn contact(&self) -> f64 {
        self.contact
    }

    /// `f*(x)` for `x in [0, beta]`.
    pub fn value(&self, x: f64) -> f64 {
        match self.power_coeff {
            None => x,
            Some(c) => {
                if x <= self.contact {
                    c * x.powi(self.r as i32) + self.alpha_r
                } else {
                    x
                }
            }
        }
    }

    /// `f*'(x)`; on the diagonal this is 1.
    pub fn slope(&self, x: f64) -> f64 {
        match self.power_coeff {
            Some(c) if x <= self.contact => c * f64::from(self.r) * x.powi(self.r as i32 - 1),
            _ => 1.0,
        }
    }

    /// Samples `f*` on the uniform grid `x_i = i beta / m`.
    pub fn sample(&self, m: usize) -> Result<Trajectory> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid size must be >= 2, got {m}"
            )));
        }
        let mut grid = Vec::with_capacity(m + 1);
        let mut values = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let x = if i == m {
                self.beta
            } else {
                i as f64 * self.beta / m as f64
            };
            grid.push(x);
            values.push(self.value(x));
        }
        Trajectory::new(grid, values)
    }

    /// Exact `I(f*, 0, beta)` assembled from the closed forms.
    pub fn integral(&self) -> f64 {
        self.integral_between(0.0, self.beta)
    }

    /// Exact `I(f*, s, t)` for `0 <= s <= t <= beta`.
    pub fn integral_between(&self, s: f64, t: f64) -> f64 {
        match self.power_coeff {
            None => integral_diagonal(self.r, s, t),
            Some(c) => {
                let split = self.contact.clamp(s, t);
                integral_power(c, self.r, s, split) + integral_diagonal(self.r, split, t)
            }
        }
    }
}

/// Samples the closed-form optimal trajectory on `m + 1` uniform grid points.
pub fn optimal_trajectory(alpha: f64, beta: f64, r: u32, m: usize) -> Result<Trajectory> {
    OptimalPath::new(alpha, beta, r)?.sample(m)
}

/// Closed form `I(c x^r + c', u, v) = c (v^r - u^r) log(e / (c r))`.
///
/// `c = 0` (a flat segment) contributes 0, the `w log(1/w) -> 0` limit.
pub fn integral_power(c: f64, r: u32, u: f64, v: f64) -> f64 {
    if c == 0.0 || u == v {
        return 0.0;
    }
    let rf = f64::from(r);
    c * (v.powi(r as i32) - u.powi(r as i32)) * (1.0 - (c * rf).ln())
}

/// Closed form `I(x, u, v) = -(r-2)(v-u) + (r-1) log(v^v / u^u)`.
pub fn integral_diagonal(r: u32, u: f64, v: f64) -> f64 {
    let rf = f64::from(r);
    -(rf - 2.0) * (v - u) + (rf - 1.0) * (xlogx(v) - xlogx(u))
}

/// `I(f, s, t)` for a sampled trajectory, by exact integration of the
/// per-cell constant slope `w_i = df_i / dx_i` against `log(e x^{r-1} / w_i)`.
///
/// Zero-slope cells contribute 0. `[s, t]` must lie inside the grid span.
pub fn integral_sampled(traj: &Trajectory, r: u32, s: f64, t: f64) -> Result<f64> {
    let grid = traj.grid();
    let values = traj.values();
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if s < lo - 1e-12 || t > hi + 1e-12 || s > t {
        return Err(Error::Domain(format!(
            "[{s}, {t}] outside trajectory span [{lo}, {hi}]"
        )));
    }
    let rf = f64::from(r);
    let mut total = 0.0;
    for i in 0..traj.cells() {
        let (a, b) = (grid[i], grid[i + 1]);
        let cell_lo = a.max(s);
        let cell_hi = b.min(t);
        if cell_hi <= cell_lo {
            continue;
        }
        let w = (values[i + 1] - values[i]) / (b - a);
        if w <= 0.0 {
            continue;
        }
        // \int w log(e x^{r-1} / w) dx over [cell_lo, cell_hi]
        let span = cell_hi - cell_lo;
        let log_part = span + (rf - 1.0) * (xlogx(cell_hi) - cell_hi - xlogx(cell_lo) + cell_lo);
        total += w * (log_part - w.ln() * span);
    }
    Ok(total)
}

/// `I(f, s, t)` by adaptive quadrature of the integrand built from a slope
/// function. Serves as the independent oracle for the closed forms.
pub fn integral_quadrature<F: Fn(f64) -> f64>(slope: F, r: u32, s: f64, t: f64, tol: f64) -> f64 {
    let rf = f64::from(r);
    let integrand = move |x: f64| {
        let w = slope(x);
        if w <= 0.0 {
            0.0
        } else {
            w * (1.0 + (rf - 1.0) * x.ln() - w.ln())
        }
    };
    // The integrand vanishes like x^{r-1} log x near 0; cutting at 1e-12
    // costs less than 1e-10 in absolute error.
    let lo = s.max(1e-12);
    if t <= lo {
        return 0.0;
    }
    adaptive_simpson(&integrand, lo, t, tol)
}

/// The rate function by the integral route:
/// `xi = I(f*, 0, beta) - beta^r / r`, with `I` evaluated by adaptive
/// quadrature along the optimal trajectory rather than by the closed forms.
///
/// Beyond `beta = 1` the value saturates: `xi(alpha, beta) = xi(alpha, 1)`.
pub fn xi_via_integral(alpha: f64, beta: f64, r: u32) -> Result<f64> {
    let phi_a = phi(alpha, r)?;
    if beta <= phi_a {
        return Err(Error::Domain(format!(
            "beta must exceed phi_alpha = {phi_a:.12}, got beta = {beta}"
        )));
    }
    let beta_eff = beta.min(1.0);
    let path = OptimalPath::new(alpha, beta_eff, r)?;
    let rf = f64::from(r);
    let contact = path.contact();
    let mut integral = 0.0;
    if contact > 0.0 {
        integral += integral_quadrature(|x| path.slope(x), r, 0.0, contact, 1e-12);
    }
    if beta_eff > contact {
        integral += integral_quadrature(|_| 1.0, r, contact, beta_eff, 1e-12);
    }
    Ok(integral - beta_eff.powi(r as i32) / rf)
}

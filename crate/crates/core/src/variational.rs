//! Discrete calculus of variations for activation trajectories.
//!
//! On the even grid `x_i = i beta / m`, a trajectory `f` earns per cell
//!
//! ```text
//! sigma_i = (df_i/dx_i) log(e x_i^{r-1} dx_i / df_i) - x_i^{r-1},
//! ```
//!
//! and the total `J(f) = sum_i sigma_i dx_i` converges to
//! `I(f, 0, beta) - beta^r / r` as the grid refines. Stationarity of `J`
//! pins the derivative `sigma_w`:
//!
//! ```text
//! sigma_w = log(x_i^{r-1} dx_i / df_i) = const
//! ```
//!
//! across cells, i.e. increments proportional to `x_i^{r-1}` — a discrete
//! power trajectory. The maximizer over non-decreasing trajectories with
//! `f_0 = alpha gamma_r`, obstacle `f_i >= x_i` and a free endpoint in
//! `[beta, C]` is found exactly on a quantized value lattice by a
//! longest-path DP (valid because `sigma_i` depends only on `x_i` and the
//! increment), then sharpened by monotone concave coordinate ascent: each
//! `sigma_i` is strictly concave in the slope, so `J` is concave over the
//! feasible polytope and local refinement cannot leave the global optimum.
//!
//! The first cell starts at `x_0 = 0` where `log x_0` degenerates; that
//! cell's coefficient is evaluated at its right endpoint `x_1` instead,
//! an `O(1/m)` effect.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::rate::phi;
use crate::trajectory::{integral_diagonal, integral_power, OptimalPath, Trajectory};

/// Hard ceiling on value-lattice levels.
const LEVEL_GUARD: usize = 10_001;

/// Endpoint handling for the trajectory maximizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EndpointMode {
    /// `f_m` free over `[beta, C]`.
    Free,
    /// `f_m` pinned to the given value (must lie in `[beta, C]`).
    Fixed(f64),
}

/// A constrained trajectory maximization problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryProblem {
    pub alpha: f64,
    pub beta: f64,
    pub r: u32,
    /// Number of grid cells.
    pub m: usize,
    /// Upper bound `C` on trajectory values.
    pub cap: f64,
    pub endpoint: EndpointMode,
}

impl TrajectoryProblem {
    /// Free-endpoint problem with the default cap `C = 3`.
    pub fn new(alpha: f64, beta: f64, r: u32, m: usize) -> Result<Self> {
        Self::with_options(alpha, beta, r, m, 3.0, EndpointMode::Free)
    }

    pub fn with_options(
        alpha: f64,
        beta: f64,
        r: u32,
        m: usize,
        cap: f64,
        endpoint: EndpointMode,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Domain(format!(
                "alpha must lie in [0,1), got {alpha}"
            )));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::Domain(format!("beta must lie in (0,1], got {beta}")));
        }
        if r < 2 {
            return Err(Error::Domain(format!("r must be >= 2, got {r}")));
        }
        if m < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid size must be >= 8, got {m}"
            )));
        }
        if cap < beta {
            return Err(Error::Infeasible(format!(
                "cap {cap} below required endpoint floor beta = {beta}"
            )));
        }
        if let EndpointMode::Fixed(v) = endpoint {
            if v < beta || v > cap {
                return Err(Error::Infeasible(format!(
                    "fixed endpoint {v} outside [beta, cap] = [{beta}, {cap}]"
                )));
            }
        }
        Ok(Self {
            alpha,
            beta,
            r,
            m,
            cap,
            endpoint,
        })
    }

    fn alpha_r(&self) -> f64 {
        self.alpha * (1.0 - 1.0 / f64::from(self.r))
    }

    /// Default lattice spacing: `(C - alpha gamma_r) / 2000`.
    pub fn default_resolution(&self) -> f64 {
        (self.cap - self.alpha_r()) / 2000.0
    }

    fn grid(&self) -> Vec<f64> {
        let mut grid: Vec<f64> = (0..=self.m)
            .map(|i| i as f64 * self.beta / self.m as f64)
            .collect();
        grid[self.m] = self.beta;
        grid
    }
}

/// Per-cell coefficients `x_i^{r-1}`, with the first cell evaluated at its
/// right endpoint when the grid starts at 0.
fn cell_coefficients(grid: &[f64], r: u32) -> Vec<f64> {
    let e = r as i32 - 1;
    (0..grid.len() - 1)
        .map(|i| {
            let x = if grid[i] == 0.0 { grid[i + 1] } else { grid[i] };
            x.powi(e)
        })
        .collect()
}

/// `sigma(s, w) = w log(e s / w) - s`, with the `w -> 0` limit `-s`.
fn sigma(s: f64, w: f64) -> f64 {
    if w <= 0.0 {
        -s
    } else {
        w * (1.0 + (s / w).ln()) - s
    }
}

/// Per-cell sigma values and their weighted total `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaEvaluation {
    pub per_cell: Vec<f64>,
    /// `J = sum_i sigma_i dx_i`.
    pub total: f64,
}

fn require_even_grid(traj: &Trajectory) -> Result<f64> {
    let grid = traj.grid();
    let dx = grid[1] - grid[0];
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.max(1e-9) {
            return Err(Error::InvalidParameter(
                "sigma evaluation requires evenly spaced grid points".into(),
            ));
        }
    }
    Ok(dx)
}

/// Evaluates `sigma_i` per cell and the functional `J`.
///
/// Rejects decreasing value sequences; zero-slope cells contribute the
/// analytic limit `-x_i^{r-1} dx_i`.
pub fn sigma_total(traj: &Trajectory, r: u32) -> Result<SigmaEvaluation> {
    let dx = require_even_grid(traj)?;
    let values = traj.values();
    for w in values.windows(2) {
        if w[1] < w[0] {
            return Err(Error::InvalidParameter(
                "sigma evaluation requires non-decreasing values".into(),
            ));
        }
    }
    let coeffs = cell_coefficients(traj.grid(), r);
    let mut per_cell = Vec::with_capacity(traj.cells());
    let mut total = KahanSum::new();
    for i in 0..traj.cells() {
        let w = (values[i + 1] - values[i]) / dx;
        let s = sigma(coeffs[i], w);
        per_cell.push(s);
        total.add(s * dx);
    }
    Ok(SigmaEvaluation {
        per_cell,
        total: total.value(),
    })
}

/// Per-cell Euler-Lagrange residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct ElResidual {
    /// `sigma_w = log(x_i^{r-1} dx_i / df_i)` per cell; `None` flags cells
    /// with non-positive slope, which carry no stationarity information.
    pub sigma_w: Vec<Option<f64>>,
}

impl ElResidual {
    /// Mean over included cells.
    pub fn mean(&self) -> Option<f64> {
        let included: Vec<f64> = self.sigma_w.iter().flatten().copied().collect();
        if included.is_empty() {
            None
        } else {
            Some(included.iter().sum::<f64>() / included.len() as f64)
        }
    }

    /// Deviations from the mean (None for excluded cells).
    pub fn deviations(&self) -> Vec<Option<f64>> {
        match self.mean() {
            None => vec![None; self.sigma_w.len()],
            Some(mean) => self.sigma_w.iter().map(|v| v.map(|x| x - mean)).collect(),
        }
    }

    /// Largest absolute deviation from the mean over included cells.
    pub fn max_abs_deviation(&self) -> Option<f64> {
        self.deviations()
            .into_iter()
            .flatten()
            .map(f64::abs)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

/// Computes `sigma_w` per cell; a constant sequence certifies a discrete
/// Euler-Lagrange stationary point.
pub fn el_residual(traj: &Trajectory, r: u32) -> Result<ElResidual> {
    let dx = require_even_grid(traj)?;
    let values = traj.values();
    let coeffs = cell_coefficients(traj.grid(), r);
    let sigma_w = (0..traj.cells())
        .map(|i| {
            let df = values[i + 1] - values[i];
            if df <= 0.0 {
                None
            } else {
                Some((coeffs[i] * dx / df).ln())
            }
        })
        .collect();
    Ok(ElResidual { sigma_w })
}

struct Lattice {
    base: f64,
    step: f64,
    levels: usize,
    /// Minimum feasible level at each grid point (obstacle).
    floor: Vec<usize>,
}

fn build_lattice(problem: &TrajectoryProblem, resolution: f64, grid: &[f64]) -> Result<Lattice> {
    if resolution.is_nan() || resolution <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let base = problem.alpha_r();
    let span = problem.cap - base;
    let mut levels = (span / resolution + 1e-9).floor() as usize + 1;
    // The endpoint floor may need one extra level when the cap is not a
    // lattice multiple.
    let beta_floor = level_ceil(problem.beta, base, resolution);
    levels = levels.max(beta_floor + 1);
    if levels > LEVEL_GUARD {
        return Err(Error::InvalidParameter(format!(
            "resolution {resolution} would create {levels} levels (guard {LEVEL_GUARD})"
        )));
    }
    let floor = grid
        .iter()
        .map(|&x| level_ceil(x, base, resolution))
        .collect();
    Ok(Lattice {
        base,
        step: resolution,
        levels,
        floor,
    })
}

fn level_ceil(value: f64, base: f64, step: f64) -> usize {
    if value <= base {
        0
    } else {
        ((value - base) / step - 1e-9).ceil() as usize
    }
}

/// Divide-and-conquer row maximization for `V'[j] = max_{lo <= l <= j}
/// V[l] + w(j - l)`: concavity of `w` makes the argmax monotone in `j`.
#[allow(clippy::too_many_arguments)]
fn dc_solve<W: Fn(usize) -> f64>(
    v_prev: &[f64],
    lo_prev: usize,
    w: &W,
    v_next: &mut [f64],
    arg: &mut [u32],
    jl: usize,
    jr: usize,
    il: usize,
    ir: usize,
) {
    if jl > jr {
        return;
    }
    let jm = jl + (jr - jl) / 2;
    let mut best = f64::NEG_INFINITY;
    let mut best_l = usize::MAX;
    let scan_lo = il.max(lo_prev);
    let scan_hi = ir.min(jm);
    let mut l = scan_lo;
    while l <= scan_hi {
        let v = v_prev[l];
        if v > f64::NEG_INFINITY {
            let candidate = v + w(jm - l);
            if candidate > best {
                best = candidate;
                best_l = l;
            }
        }
        l += 1;
    }
    v_next[jm] = best;
    arg[jm] = if best_l == usize::MAX {
        u32::MAX
    } else {
        best_l as u32
    };
    if jm > jl {
        let hi = if best_l == usize::MAX { ir } else { best_l };
        dc_solve(v_prev, lo_prev, w, v_next, arg, jl, jm - 1, il, hi);
    }
    if jm < jr {
        let lo = if best_l == usize::MAX { il } else { best_l };
        dc_solve(v_prev, lo_prev, w, v_next, arg, jm + 1, jr, lo, ir);
    }
}

/// Exact maximization of `J` over lattice-quantized non-decreasing
/// trajectories with `f_0 = alpha gamma_r`, the obstacle and the endpoint
/// mode. Longest path over `(cell, level)` states.
pub fn lattice_maximize(problem: &TrajectoryProblem, resolution: f64) -> Result<Trajectory> {
    let grid = problem.grid();
    let lattice = build_lattice(problem, resolution, &grid)?;
    let coeffs = cell_coefficients(&grid, problem.r);
    let dx = problem.beta / problem.m as f64;
    let levels = lattice.levels;

    let mut v_prev = vec![f64::NEG_INFINITY; levels];
    v_prev[0] = 0.0; // f_0 = alpha gamma_r exactly
    if lattice.floor[0] > 0 {
        return Err(Error::Infeasible(
            "obstacle exceeds the start value at x = 0".into(),
        ));
    }
    let mut v_next = vec![f64::NEG_INFINITY; levels];
    let mut args: Vec<Vec<u32>> = Vec::with_capacity(problem.m);

    for (i, &s) in coeffs.iter().enumerate() {
        let weight = |d: usize| {
            let w = d as f64 * lattice.step / dx;
            sigma(s, w) * dx
        };
        let jlo = lattice.floor[i + 1];
        let lo_prev = lattice.floor[i];
        v_next.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
        let mut arg = vec![u32::MAX; levels];
        dc_solve(
            &v_prev,
            lo_prev,
            &weight,
            &mut v_next,
            &mut arg,
            jlo,
            levels - 1,
            0,
            levels - 1,
        );
        for v in v_next.iter_mut().take(jlo) {
            *v = f64::NEG_INFINITY;
        }
        args.push(arg);
        std::mem::swap(&mut v_prev, &mut v_next);
    }

    // Pick the endpoint level.
    let end_floor = level_ceil(problem.beta, lattice.base, lattice.step);
    let final_level = match problem.endpoint {
        EndpointMode::Fixed(v) => {
            let level = ((v - lattice.base) / lattice.step).round() as usize;
            level.clamp(end_floor, levels - 1)
        }
        EndpointMode::Free => {
            let mut best = f64::NEG_INFINITY;
            let mut best_level = end_floor;
            for (level, &value) in v_prev.iter().enumerate().skip(end_floor) {
                if value > best {
                    best = value;
                    best_level = level;
                }
            }
            best_level
        }
    };
    if v_prev[final_level] == f64::NEG_INFINITY {
        return Err(Error::Infeasible(
            "no feasible lattice trajectory reaches the endpoint".into(),
        ));
    }

    // Reconstruct levels backwards.
    let mut level_path = vec![0usize; problem.m + 1];
    level_path[problem.m] = final_level;
    for i in (0..problem.m).rev() {
        let from = args[i][level_path[i + 1]];
        debug_assert!(from != u32::MAX, "broken DP back-pointer");
        level_path[i] = from as usize;
    }

    let values: Vec<f64> = level_path
        .iter()
        .map(|&level| lattice.base + level as f64 * lattice.step)
        .collect();
    Trajectory::new(grid, values)
}

/// Monotone concave coordinate ascent from a feasible starting trajectory.
/// Never decreases `J`; preserves monotonicity, the obstacle and the
/// endpoint mode.
fn polish(problem: &TrajectoryProblem, traj: &Trajectory, sweeps: usize) -> Result<Trajectory> {
    let grid = traj.grid().to_vec();
    let mut values = traj.values().to_vec();
    let coeffs = cell_coefficients(&grid, problem.r);
    let dx = grid[1] - grid[0];
    let m = values.len() - 1;
    let tol = 1e-13 * problem.beta.max(1.0);
    for _ in 0..sweeps {
        let mut max_move = 0.0f64;
        for i in 1..m {
            let lower = grid[i].max(values[i - 1]);
            let upper = values[i + 1];
            let target = (coeffs[i] * values[i - 1] + coeffs[i - 1] * values[i + 1])
                / (coeffs[i] + coeffs[i - 1]);
            let new_value = target.clamp(lower, upper);
            max_move = max_move.max((new_value - values[i]).abs());
            values[i] = new_value;
        }
        if let EndpointMode::Free = problem.endpoint {
            // Stationarity of the last cell: slope equal to its coefficient.
            let lower = problem.beta.max(values[m - 1]);
            let target = values[m - 1] + coeffs[m - 1] * dx;
            let new_value = target.clamp(lower, problem.cap);
            max_move = max_move.max((new_value - values[m]).abs());
            values[m] = new_value;
        }
        if max_move < tol {
            break;
        }
    }
    Trajectory::new(grid, values)
}

/// Maximizes `J` over the problem's feasible trajectories: certified lattice
/// DP for the global structure, then concave refinement between lattice
/// levels. The result's `J` is at least the lattice argmax's.
pub fn maximize_trajectory(problem: &TrajectoryProblem, resolution: f64) -> Result<Trajectory> {
    let lattice_best = lattice_maximize(problem, resolution)?;
    polish(problem, &lattice_best, 50_000)
}

/// Which optimality claim a report row checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClaimKind {
    /// After touching the diagonal at `beta'`, staying on it beats any
    /// feasible power continuation: `I(f, beta', beta) < I(x, beta', beta)`.
    DiagonalCoincide,
    /// A power trajectory that never touches the diagonal is beaten by the
    /// optimal one: `I(f, 0, beta) < I(f*, 0, beta)`.
    DiagonalTouch,
    /// Touching the diagonal before `min(alpha, beta)` is suboptimal:
    /// `I(f, 0, a') + I(x, a', eta) < I(f*, 0, eta)`.
    FirstContact,
}

/// One evaluated claim instance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub claim: ClaimKind,
    pub alpha: f64,
    pub beta: f64,
    /// Auxiliary parameter: `beta'` / `c_1` / `alpha'` depending on the claim.
    pub aux: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; the claims assert this is strictly positive.
    pub margin: f64,
}

/// Margin report over a parameter grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClaimsReport {
    pub r: u32,
    pub rows: Vec<ClaimCheck>,
}

impl ClaimsReport {
    pub fn all_strict(&self) -> bool {
        self.rows.iter().all(|row| row.margin > 0.0)
    }

    pub fn min_margin(&self) -> Option<f64> {
        self.rows
            .iter()
            .map(|row| row.margin)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
    }
}

/// `I(c2 (x^r - b'^r) + b', b', b)` vs `I(x, b', b)` at the extreme
/// coefficient `c2 = 1/(r b'^{r-1})`.
pub fn claim_diagonal_coincide(r: u32, beta_prime: f64, beta: f64) -> ClaimCheck {
    let rf = f64::from(r);
    let c2 = 1.0 / (rf * beta_prime.powi(r as i32 - 1));
    let lhs = integral_power(c2, r, beta_prime, beta);
    let rhs = integral_diagonal(r, beta_prime, beta);
    ClaimCheck {
        claim: ClaimKind::DiagonalCoincide,
        alpha: f64::NAN,
        beta,
        aux: beta_prime,
        lhs,
        rhs,
        margin: rhs - lhs,
    }
}

/// `I(c1 x^r + alpha_r, 0, beta)` vs `I(f*, 0, beta)` for a coefficient
/// strictly above the touching threshold.
pub fn claim_diagonal_touch(r: u32, alpha: f64, beta: f64, c1: f64) -> Result<ClaimCheck> {
    let path = OptimalPath::new(alpha, beta, r)?;
    let lhs = integral_power(c1, r, 0.0, beta);
    let rhs = path.integral();
    Ok(ClaimCheck {
        claim: ClaimKind::DiagonalTouch,
        alpha,
        beta,
        aux: c1,
        lhs,
        rhs,
        margin: rhs - lhs,
    })
}

/// `I((a'-alpha_r)(x/a')^r + alpha_r, 0, a') + I(x, a', eta)` vs the optimal
/// `I(f*, 0, eta)` with `eta = min(alpha, beta)`.
pub fn claim_first_contact(r: u32, alpha: f64, beta: f64, alpha_prime: f64) -> ClaimCheck {
    let rf = f64::from(r);
    let alpha_r = alpha * (1.0 - 1.0 / rf);
    let eta = alpha.min(beta);
    let c = (alpha_prime - alpha_r) / alpha_prime.powi(r as i32);
    let lhs = integral_power(c, r, 0.0, alpha_prime) + integral_diagonal(r, alpha_prime, eta);
    let c_star = (eta - alpha_r) / eta.powi(r as i32);
    let rhs = integral_power(c_star, r, 0.0, eta);
    ClaimCheck {
        claim: ClaimKind::FirstContact,
        alpha,
        beta,
        aux: alpha_prime,
        lhs,
        rhs,
        margin: rhs - lhs,
    }
}

/// Evaluates all three diagonal-structure claims over `(alpha, beta)` grids,
/// instantiating the free parameters at their informative extremes:
/// `beta' = (alpha_r + beta)/2`, `c1 = 1.5 * threshold`,
/// `alpha' = (alpha_r + eta)/2`. Infeasible combinations are skipped.
pub fn verify_diagonal_claims(
    r: u32,
    alpha_grid: &[f64],
    beta_grid: &[f64],
) -> Result<ClaimsReport> {
    let rf = f64::from(r);
    let mut rows = Vec::new();
    for &alpha in alpha_grid {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha {alpha} outside [0,1)")));
        }
        let alpha_r = alpha * (1.0 - 1.0 / rf);
        let phi_a = phi(alpha, r)?;
        for &beta in beta_grid {
            if !(beta > 0.0 && beta <= 1.0) {
                return Err(Error::Domain(format!("beta {beta} outside (0,1]")));
            }
            if alpha_r < beta {
                let beta_prime = 0.5 * (alpha_r + beta);
                if beta_prime > 0.0 && beta_prime < beta {
                    rows.push(claim_diagonal_coincide(r, beta_prime, beta));
                }
            }
            if alpha > 0.0 && beta > phi_a {
                let eta = alpha.min(beta);
                let threshold = (eta - alpha_r) / eta.powi(r as i32);
                rows.push(claim_diagonal_touch(r, alpha, beta, 1.5 * threshold)?);
                let alpha_prime = 0.5 * (alpha_r + eta);
                if alpha_prime < eta {
                    rows.push(claim_first_contact(r, alpha, beta, alpha_prime));
                }
            }
        }
    }
    Ok(ClaimsReport { r, rows })
}

/// Writes a trajectory (with optional per-cell sigma values) as CSV columns
/// `(x, f, sigma)`.
pub fn write_trajectory_csv<W: std::io::Write>(
    traj: &Trajectory,
    sigma: Option<&SigmaEvaluation>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "x,f,sigma")?;
    for i in 0..traj.grid().len() {
        let sigma_i = sigma
            .and_then(|s| s.per_cell.get(i))
            .map(|v| format!("{v:.15e}"))
            .unwrap_or_default();
        writeln!(
            out,
            "{:.15e},{:.15e},{sigma_i}",
            traj.grid()[i],
            traj.values()[i]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::rate_xi;
    use crate::trajectory::optimal_trajectory;
    use rand::Rng;

    fn sample_power_on(c: f64, c0: f64, r: u32, lo: f64, hi: f64, m: usize) -> Trajectory {
        let grid: Vec<f64> = (0..=m)
            .map(|i| lo + (hi - lo) * i as f64 / m as f64)
            .collect();
        let values: Vec<f64> = grid.iter().map(|&x| c * x.powi(r as i32) + c0).collect();
        Trajectory::new(grid, values).unwrap()
    }

    #[test]
    fn sigma_single_cell_zero_at_matching_slope() {
        // df = dx * x_left^{r-1} makes the log argument e and sigma = 0.
        let (x0, dx) = (0.5, 0.1);
        let traj = Trajectory::new(vec![x0, x0 + dx], vec![0.9, 0.9 + dx * x0]).unwrap();
        let eval = sigma_total(&traj, 2).unwrap();
        assert!(eval.per_cell[0].abs() < 1e-14);
    }

    #[test]
    fn sigma_zero_slope_cell() {
        let traj = Trajectory::new(vec![0.5, 0.6], vec![0.9, 0.9]).unwrap();
        let eval = sigma_total(&traj, 2).unwrap();
        assert!((eval.per_cell[0] + 0.5).abs() < 1e-15);
        // r = 3: -x^2.
        let eval = sigma_total(&traj, 3).unwrap();
        assert!((eval.per_cell[0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn sigma_rejects_uneven_or_decreasing() {
        let uneven = Trajectory::new(vec![0.0, 0.1, 0.3], vec![0.5, 0.5, 0.5]).unwrap();
        assert!(sigma_total(&uneven, 2).is_err());
    }

    #[test]
    fn sigma_total_converges_to_integral_functional() {
        // J -> I(f*, 0, beta) - beta^r/r as the grid refines.
        let path = OptimalPath::new(0.8, 0.6, 2).unwrap();
        let target = path.integral() - 0.6f64.powi(2) / 2.0;
        let mut last_gap = f64::INFINITY;
        for k in 4..=10 {
            let traj = path.sample(1 << k).unwrap();
            let eval = sigma_total(&traj, 2).unwrap();
            let gap = (eval.total - target).abs();
            assert!(gap < last_gap + 1e-12, "gap grew at m = 2^{k}");
            last_gap = gap;
        }
        assert!(last_gap <= 1e-3, "final gap {last_gap}");
    }

    #[test]
    fn el_residual_power_trajectory_stationary() {
        // Sampled c x^r + c' away from x = 0 is near-stationary; the spread
        // shrinks as the grid refines.
        let mut last = f64::INFINITY;
        for &m in &[64usize, 128, 256] {
            let traj = sample_power_on(1.0, 0.3, 2, 0.5, 1.0, m);
            let residual = el_residual(&traj, 2).unwrap();
            let dev = residual.max_abs_deviation().unwrap();
            assert!(dev < last, "deviation grew at m={m}");
            last = dev;
        }
        assert!(last <= 1e-2, "max deviation {last} at m=256");
    }

    #[test]
    fn el_residual_diagonal_not_stationary() {
        // f(x) = x has sigma_w = log x_i, spread bounded away from zero.
        let grid: Vec<f64> = (0..=128).map(|i| 0.5 + 0.5 * i as f64 / 128.0).collect();
        let values = grid.clone();
        let traj = Trajectory::new(grid, values).unwrap();
        let residual = el_residual(&traj, 2).unwrap();
        assert!(residual.max_abs_deviation().unwrap() > 0.1);
    }

    #[test]
    fn el_residual_flags_flat_cells() {
        let traj = Trajectory::new(vec![0.1, 0.2, 0.3], vec![0.5, 0.5, 0.5]).unwrap();
        let residual = el_residual(&traj, 2).unwrap();
        assert!(residual.sigma_w.iter().all(Option::is_none));
        assert!(residual.mean().is_none());
        assert!(residual.max_abs_deviation().is_none());
    }

    #[test]
    fn dc_matches_bruteforce() {
        let mut rng = crate::seeding::stream_rng(5, 0);
        for trial in 0..50 {
            let levels = 40 + (trial % 17);
            let v_prev: Vec<f64> = (0..levels)
                .map(|i| {
                    if rng.random::<f64>() < 0.2 {
                        f64::NEG_INFINITY
                    } else {
                        rng.random::<f64>() * 2.0 - 1.0 + i as f64 * 0.01
                    }
                })
                .collect();
            // Random concave weight: cumulative sum of decreasing slopes.
            let mut slopes: Vec<f64> = (0..levels).map(|_| rng.random::<f64>()).collect();
            slopes.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut w = vec![0.0f64; levels];
            for d in 1..levels {
                w[d] = w[d - 1] + slopes[d - 1] - 0.3;
            }
            let lo_prev = trial % 5;
            let weight = |d: usize| w[d];
            let mut v_dc = vec![f64::NEG_INFINITY; levels];
            let mut arg = vec![u32::MAX; levels];
            dc_solve(
                &v_prev,
                lo_prev,
                &weight,
                &mut v_dc,
                &mut arg,
                0,
                levels - 1,
                0,
                levels - 1,
            );
            for j in 0..levels {
                let mut best = f64::NEG_INFINITY;
                for l in lo_prev..=j {
                    if v_prev[l] > f64::NEG_INFINITY {
                        best = best.max(v_prev[l] + w[j - l]);
                    }
                }
                assert!(
                    (v_dc[j] - best).abs() < 1e-12 || (v_dc[j] == best),
                    "trial {trial}, j={j}: dc {} vs brute {best}",
                    v_dc[j]
                );
            }
        }
    }

    #[test]
    fn maximizer_recovers_power_case() {
        // (alpha=0.8, beta=0.6, r=2): f* = 0.2 (x/0.6)^2 + 0.4.
        let problem = TrajectoryProblem::new(0.8, 0.6, 2, 64).unwrap();
        let result = maximize_trajectory(&problem, problem.default_resolution()).unwrap();
        let reference = optimal_trajectory(0.8, 0.6, 2, 64).unwrap();
        let gap = result.sup_distance(&reference).unwrap();
        assert!(
            gap <= 2.0 * problem.default_resolution() + 5.0 / 64.0,
            "sup gap {gap}"
        );
    }

    #[test]
    fn maximizer_rides_the_diagonal() {
        // (alpha=0.5, beta=1, r=2): coincides with the diagonal on [0.55, 1].
        let problem = TrajectoryProblem::new(0.5, 1.0, 2, 64).unwrap();
        let resolution = problem.default_resolution();
        let result = maximize_trajectory(&problem, resolution).unwrap();
        let mut max_gap = 0.0f64;
        for (x, f) in result.grid().iter().zip(result.values()) {
            if *x >= 0.55 {
                max_gap = max_gap.max((f - x).abs());
            }
        }
        assert!(max_gap <= 2.0 * resolution, "diagonal gap {max_gap}");
    }

    #[test]
    fn free_endpoint_settles_at_beta() {
        for &(alpha, beta) in &[(0.8f64, 0.6f64), (0.5, 1.0), (0.2, 0.9)] {
            let problem = TrajectoryProblem::new(alpha, beta, 2, 32).unwrap();
            let resolution = problem.default_resolution();
            let result = maximize_trajectory(&problem, resolution).unwrap();
            let end = *result.values().last().unwrap();
            assert!(
                (end - beta).abs() <= 2.0 * resolution,
                "endpoint {end} far from beta {beta}"
            );
        }
    }

    #[test]
    fn fixed_endpoint_respected() {
        let problem =
            TrajectoryProblem::with_options(0.5, 0.8, 2, 32, 3.0, EndpointMode::Fixed(1.1))
                .unwrap();
        let result = maximize_trajectory(&problem, 1e-3).unwrap();
        let end = *result.values().last().unwrap();
        assert!((end - 1.1).abs() <= 1e-3, "endpoint {end}");
    }

    #[test]
    fn infeasible_cap_rejected() {
        assert!(matches!(
            TrajectoryProblem::with_options(0.5, 0.9, 2, 32, 0.5, EndpointMode::Free),
            Err(Error::Infeasible(_))
        ));
        assert!(
            TrajectoryProblem::with_options(0.5, 0.9, 2, 32, 3.0, EndpointMode::Fixed(4.0))
                .is_err()
        );
    }

    #[test]
    fn optimizer_beats_random_feasible_perturbations() {
        let problem = TrajectoryProblem::new(0.5, 1.0, 2, 32).unwrap();
        let resolution = problem.default_resolution();
        let best = maximize_trajectory(&problem, resolution).unwrap();
        let best_j = sigma_total(&best, 2).unwrap().total;
        let mut rng = crate::seeding::stream_rng(17, 0);
        let lattice = lattice_maximize(&problem, resolution).unwrap();
        let m = lattice.values().len() - 1;
        for _ in 0..1000 {
            let mut values = lattice.values().to_vec();
            // Random feasible tweaks at a few interior points.
            for _ in 0..3 {
                let i = 1 + rng.random_range(0..m - 1);
                let lower = values[i - 1].max(lattice.grid()[i]);
                let upper = values[i + 1];
                if upper > lower {
                    values[i] = lower + rng.random::<f64>() * (upper - lower);
                }
            }
            let candidate = Trajectory::new(lattice.grid().to_vec(), values).unwrap();
            let j = sigma_total(&candidate, 2).unwrap().total;
            assert!(
                j <= best_j + 1e-12,
                "perturbation beat the optimizer: {j} > {best_j}"
            );
        }
    }

    #[test]
    fn optimizer_total_bridges_to_rate_function() {
        // J at the optimum approximates xi(alpha, beta) for m = 256.
        for &(alpha, beta) in &[(0.5f64, 1.0f64), (0.8, 0.6)] {
            let problem = TrajectoryProblem::new(alpha, beta, 2, 256).unwrap();
            let best = maximize_trajectory(&problem, problem.default_resolution()).unwrap();
            let j = sigma_total(&best, 2).unwrap().total;
            let xi = rate_xi(alpha, beta, 2).unwrap().xi;
            assert!(
                (j - xi).abs() <= 1e-2,
                "J = {j} vs xi = {xi} at ({alpha}, {beta})"
            );
        }
    }

    #[test]
    fn claim_examples_from_closed_forms() {
        // (r=2, beta'=0.5, beta=0.8, c2=1): strict inequality.
        let check = claim_diagonal_coincide(2, 0.5, 0.8);
        assert!((check.lhs - 0.39 * (1.0 - 2.0f64.ln())).abs() < 1e-12);
        assert!(check.margin > 0.0);

        // First-contact at alpha' = alpha_r (flat start), r=2, alpha=0.6, beta=0.9.
        let check = claim_first_contact(2, 0.6, 0.9, 0.3);
        assert!(check.margin > 0.0);
        // LHS reduces to I(x, 0.3, 0.6) since the power piece is flat.
        assert!((check.lhs - integral_diagonal(2, 0.3, 0.6)).abs() < 1e-12);
    }

    #[test]
    fn touch_margin_vanishes_at_threshold() {
        // beta <= alpha: as c1 drops to the threshold the two trajectories
        // merge and the margin goes to 0 from above.
        let (alpha, beta, r) = (0.8, 0.6, 2u32);
        let alpha_r = 0.4;
        let threshold = (beta - alpha_r) / (beta * beta);
        let mut last = f64::INFINITY;
        for &eps in &[0.5, 0.1, 0.01, 1e-4, 1e-8] {
            let check = claim_diagonal_touch(r, alpha, beta, threshold * (1.0 + eps)).unwrap();
            assert!(check.margin > 0.0, "margin at eps={eps}: {}", check.margin);
            assert!(check.margin < last);
            last = check.margin;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn claims_grid_report() {
        let report =
            verify_diagonal_claims(2, &[0.1, 0.3, 0.5, 0.7, 0.9], &[0.2, 0.4, 0.6, 0.8, 1.0])
                .unwrap();
        assert!(report.rows.len() > 25);
        assert!(report.all_strict(), "min margin {:?}", report.min_margin());
        for kind in [
            ClaimKind::DiagonalCoincide,
            ClaimKind::DiagonalTouch,
            ClaimKind::FirstContact,
        ] {
            assert!(report.rows.iter().any(|row| row.claim == kind));
        }
    }

    #[test]
    fn convergence_over_parameter_grid() {
        // Sup-norm distance to f* shrinks with the grid over a 3x3 (alpha,
        // beta) square.
        for &alpha in &[0.2, 0.5, 0.7] {
            for &beta in &[0.4, 0.7, 1.0] {
                if crate::rate::phi(alpha, 2).unwrap() >= beta {
                    continue;
                }
                let mut gaps = Vec::new();
                for &m in &[16usize, 64] {
                    let problem = TrajectoryProblem::new(alpha, beta, 2, m).unwrap();
                    let resolution = problem.default_resolution();
                    let result = maximize_trajectory(&problem, resolution).unwrap();
                    let reference = optimal_trajectory(alpha, beta, 2, m).unwrap();
                    gaps.push(result.sup_distance(&reference).unwrap());
                }
                assert!(
                    gaps[1] <= gaps[0] + 2e-3,
                    "({alpha},{beta}): gaps {gaps:?} grew with m"
                );
                assert!(
                    gaps[1] < 2e-2,
                    "({alpha},{beta}): gap {} too large",
                    gaps[1]
                );
            }
        }
    }

    #[test]
    fn trajectory_csv_shape() {
        let traj = optimal_trajectory(0.5, 1.0, 2, 16).unwrap();
        let sigma = sigma_total(&traj, 2).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, Some(&sigma), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,f,sigma\n"));
        assert_eq!(text.lines().count(), 18);
    }
}

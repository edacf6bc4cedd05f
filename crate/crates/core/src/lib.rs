//! Large deviations of `r`-neighbour bootstrap percolation on the
//! Erdős–Rényi graph `G(n,p)`.
//!
//! The crate provides, for initial sets of size `a ~ alpha a_c` activating
//! targets of size `t ~ beta t_c`:
//!
//! - closed-form analytics ([`model`], [`rate`], [`trajectory`]): critical
//!   scales, the typical fraction `phi_alpha`, the rate function
//!   `xi(alpha, beta)` governing `P(a, t) ~ exp(xi t_c)`, optimal
//!   trajectories and the integral functional behind them;
//! - the exact binomial-chain dynamics ([`chain`]) with Monte Carlo batch
//!   drivers, and an exact finite-`n` survival oracle by dynamic
//!   programming ([`dp`]);
//! - direct graph simulation ([`graph`]) as the model-independent
//!   cross-check;
//! - a discrete variational optimizer ([`variational`]) recovering the
//!   optimal trajectory numerically and verifying the diagonal-structure
//!   inequalities;
//! - contagious-set lower bounds with a brute-force oracle ([`bounds`]).
//!
//! All computations are pure functions of their inputs plus an explicit
//! seed; batch drivers parallelize over independent seed streams and are
//! bit-reproducible regardless of thread count.

pub mod bounds;
pub mod chain;
pub mod dp;
pub mod error;
pub mod graph;
pub mod model;
mod numeric;
pub mod rate;
pub mod seeding;
pub mod trajectory;
pub mod variational;

pub use bounds::{
    contagious_lower_bound, first_moment, min_contagious_bruteforce, ContagiousBoundReport,
    FirstMomentReport, MinContagious,
};
pub use chain::{
    final_size_moments, marginal_counts, pi_at, simulate_chain, survival_mc, ChainParams,
    ChainTrace, FinalSizeMoments, SurvivalEstimate,
};
pub use dp::{
    empirical_exponent, exact_distribution, exact_distribution_with_cap, truncated_cap,
    ExponentPoint, SurvivalTable,
};
pub use error::{Error, Result};
pub use graph::{
    final_size_samples, is_bootstrap_fixpoint, percolate, sample_gnp, sample_gnp_seeded,
    Activation, Graph, InitialSet, PercolationResult,
};
pub use model::{CriticalScales, ModelParams, RegimeReport};
pub use rate::{
    clt_moments, phi, rate_xi, xi_diagonal_branch, xi_power_branch, RateBranch, RatePoint,
};
pub use seeding::{stream_rng, StreamRng};
pub use trajectory::{
    integral_diagonal, integral_power, integral_quadrature, integral_sampled, optimal_trajectory,
    xi_via_integral, OptimalPath, Trajectory,
};
pub use variational::{
    el_residual, lattice_maximize, maximize_trajectory, sigma_total, verify_diagonal_claims,
    write_trajectory_csv, ClaimCheck, ClaimKind, ClaimsReport, ElResidual, EndpointMode,
    SigmaEvaluation, TrajectoryProblem,
};

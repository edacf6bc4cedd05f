//! Shared fixtures for the benchmark targets.

use perc_ldp::{ChainParams, ModelParams};

/// Subcritical chain at t_c = 100 (n = 1e6, p = 1e-4, r = 2, a = 25).
pub fn subcritical_chain() -> ChainParams {
    let model = ModelParams::new(1_000_000, 1e-4, 2).unwrap();
    ChainParams::new(model, 25).unwrap()
}

/// The n = 200 equivalence-test model.
pub fn small_graph_model() -> ModelParams {
    ModelParams::new(200, 0.04, 2).unwrap()
}

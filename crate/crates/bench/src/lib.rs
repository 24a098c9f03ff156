//! Shared fixtures for the solver benchmarks.

use critblow::shooting::initial_psi;
use critblow::solver::RunConfig;
use critblow::{GridField, ModelParams};

/// p = 5 parameters, default run config and a shooting datum at s = 15.
pub fn fixture() -> (ModelParams, RunConfig, GridField) {
    let m = ModelParams::new(5.0, 1.0, 6.0).expect("p = 5 is admissible");
    let cfg = RunConfig::default();
    let v = initial_psi(-0.24, 0.0, 15.0, 20.0, &m, &cfg).expect("default domain covers the cutoff");
    (m, cfg, v)
}

//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use cwsim_core::{initial_paramagnet, Distribution, ModelConfig, SectorGenerator, SectorTables};

/// Reference couplings at size `n`, sector 0.
pub fn config(n: u32) -> ModelConfig {
    ModelConfig::default().with_size(n)
}

/// Tables, generator and starting paramagnet for `config(n)`.
pub fn setup(n: u32) -> (SectorTables, SectorGenerator, Distribution) {
    let tables = SectorTables::build(&config(n)).expect("reference config is valid");
    let gen = SectorGenerator::build(&tables);
    let p0 = initial_paramagnet(Arc::clone(&tables.lattice));
    (tables, gen, p0)
}

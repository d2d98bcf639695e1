//! Master-equation simulation of an ideal quantum measurement by a
//! Curie-Weiss magnet.
//!
//! The apparatus is `N` spins (spin 1/2 or spin 1) coupled to the measured
//! spin and to a phonon bath. Diagonal sectors of the joint density matrix
//! reduce to a probability distribution over the magnet's order parameters;
//! off-diagonal sectors decay by dephasing and decoherence.
//!
//! ```
//! use cwsim_core::{register, time_grid, EvolveControls, ModelConfig};
//!
//! let cfg = ModelConfig { n: 20, ..ModelConfig::default() };
//! let run = register(&cfg, &time_grid(2.0, 0.5), &EvolveControls::default()).unwrap();
//! assert!(run.series.last().f_dyn < run.series.first().f_dyn);
//! ```

pub mod error;
pub mod kernel;
pub mod model;
pub mod registration;
pub mod thermo;
pub mod truncation;

pub use error::{Error, Result};
pub use kernel::BathKernel;
pub use model::{
    Level, ModelConfig, Moments, MomentLattice, Occupation, Sector, SectorTables, Spin,
};
pub use registration::{
    evolve, initial_paramagnet, observables, oracle_evolve, Distribution, EvolveControls,
    Observables, SectorGenerator, Trajectory,
};
pub use thermo::{
    gibbs, register, time_grid, GibbsState, RegistrationRun, Restriction, ThermoPoint,
    ThermoSeries,
};

//! Master-equation dynamics of the diagonal sectors in `tau = gamma T t`.

mod distribution;
mod evolve;
mod generator;
mod observables;
pub mod oracle;

pub use distribution::{initial_paramagnet, Distribution};
pub use evolve::{evolve, evolve_observed, ConservationReport, EvolveControls, Trajectory};
pub use generator::{Edge, SectorGenerator};
pub use observables::{observables, Observables};
pub use oracle::{oracle_evolve, ConfigSpace};

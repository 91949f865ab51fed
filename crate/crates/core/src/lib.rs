pub mod cells;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod geometry;
pub mod grad;
pub mod hamiltonian;
pub mod metrics;
pub mod oracle;
pub mod plot;
pub mod reference;
pub mod vmc;
pub mod wavefunction;

//! Simulation of electron charge qubits coupled to a microwave resonator.
//!
//! Layers, bottom up:
//!
//! - [`quantum`]: dense operators on `mode ⊗ qubit(s)`.
//! - [`device`]: parameter sets, tuning maps, charge noise, closed-form rates.
//! - [`spectroscopy`]: steady-state transmission maps.
//! - [`dynamics`]: Lindblad evolution with shaped pulses, plus a reduced qubit model.
//! - [`protocols`]: Rabi, T1, Ramsey, echo, CPMG, readout, randomized benchmarking.
//! - [`estimation`]: least-squares fit kernels.

pub mod device;
pub mod dynamics;
pub mod estimation;
pub mod protocols;
pub mod quantum;
pub mod rng;
pub mod spectroscopy;

pub use quantum::C64;

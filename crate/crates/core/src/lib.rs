//! Approximate Gibbs sampling with low-depth QAOA circuits, and the Boltzmann
//! machine training loop built on top of it.
//!
//! The crate is organised bottom-up:
//!
//! - [`qsim`]: statevector and density-matrix simulators with the small gate
//!   set needed by QAOA, purified thermal preparation and depolarizing noise.
//! - [`ising`]: Ising cost Hamiltonians on a visible/hidden partition, the exact
//!   Gibbs oracle, and pseudo-thermal diagnostics.
//! - [`optimizer`]: Nelder-Mead simplex minimisation.
//! - [`qaoa`]: thermalization of a cost Hamiltonian by energy minimisation at
//!   fixed entropy, with shot-based expectation estimation.
//! - [`qabom`]: clamped/unclamped sampling, weight updates and the epoch loop.
//! - [`datagen`] and [`metrics`]: synthetic datasets, RBM marginals, KL.
//!
//! Qubit `j` is bit `j` of a basis-state index (qubit 0 is least significant),
//! and unit `j` of an Ising model lives on qubit `j`. A computational-basis bit
//! `b` corresponds to the spin `z = (-1)^b`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bits;
pub mod datagen;
pub mod error;
pub mod ising;
pub mod metrics;
pub mod optimizer;
pub mod qabom;
pub mod qaoa;
pub mod qsim;
pub mod rng;

pub use bits::Bitstring;
pub use datagen::{DataDistribution, Dataset};
pub use error::{Error, Result};
pub use ising::{CostHamiltonian, Coupling, IsingModel, Variant};
pub use optimizer::{Minimum, NelderMead};
pub use qabom::{ClampMode, EpochRecord, History, TrainConfig};
pub use qaoa::{Backend, Clamp, Expectations, PulseSchedule, ThermalizeConfig, ThermalizerResult};
pub use qsim::{DensityMatrix, NoiseModel, QuantumState, StateVector};

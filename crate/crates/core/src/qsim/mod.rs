//! Statevector and density-matrix simulation of the QAOA gate set.
//!
//! The statevector backend unravels depolarizing noise into stochastic Pauli
//! trajectories; the density-matrix backend applies the channel exactly and is
//! limited to [`MAX_DENSITY_QUBITS`] qubits.

mod density;
mod gate;
mod kernels;
mod noise;
mod statevector;

pub use density::{DensityMatrix, MAX_DENSITY_QUBITS};
pub use gate::{thermal_populations, GateOp};
pub use kernels::C64;
pub use noise::{sample_pauli, NoiseModel, Pauli};
pub use statevector::{sample_indices, StateVector, MAX_STATEVECTOR_QUBITS};

use rand::Rng;

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use gate::{check_beta, pair_prep_angle};

/// Product of Pauli-Z operators on a set of qubits, with a real coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZTerm {
    mask: u64,
    pub coeff: f64,
}

impl ZTerm {
    pub fn new(qubits: &[usize], coeff: f64) -> Result<Self> {
        let mut mask = 0u64;
        for &q in qubits {
            if q >= 64 {
                return Err(Error::QubitOutOfRange { qubit: q, n_qubits: 64 });
            }
            if mask & (1 << q) != 0 {
                return Err(Error::invalid(format!("qubit {q} repeated in Z product")));
            }
            mask |= 1 << q;
        }
        Ok(Self { mask, coeff })
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn qubits(&self) -> Vec<usize> {
        (0..64).filter(|q| self.mask & (1 << q) != 0).collect()
    }

    pub fn order(&self) -> u32 {
        self.mask.count_ones()
    }

    /// Eigenvalue of the bare Z product (without coefficient) on a basis state.
    pub fn sign(&self, index: u64) -> f64 {
        if (index & self.mask).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn value(&self, index: u64) -> f64 {
        self.coeff * self.sign(index)
    }

    fn highest_qubit(&self) -> Option<usize> {
        (self.mask != 0).then(|| 63 - self.mask.leading_zeros() as usize)
    }
}

/// Hamiltonian diagonal in the computational basis: a sum of [`ZTerm`]s.
#[derive(Clone, Debug, PartialEq)]
pub struct ZHamiltonian {
    pub terms: Vec<ZTerm>,
}

impl ZHamiltonian {
    pub fn new(terms: Vec<ZTerm>) -> Self {
        Self { terms }
    }

    pub fn energy(&self, index: u64) -> f64 {
        self.terms.iter().map(|t| t.value(index)).sum()
    }

    /// Smallest register the Hamiltonian fits in.
    pub fn min_qubits(&self) -> usize {
        self.terms.iter().filter_map(ZTerm::highest_qubit).max().map_or(0, |q| q + 1)
    }
}

/// A simulated register, either backend.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    StateVector(StateVector),
    DensityMatrix(DensityMatrix),
}

macro_rules! dispatch {
    ($self:ident, $s:ident => $e:expr) => {
        match $self {
            QuantumState::StateVector($s) => $e,
            QuantumState::DensityMatrix($s) => $e,
        }
    };
}

impl From<StateVector> for QuantumState {
    fn from(s: StateVector) -> Self {
        QuantumState::StateVector(s)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(s: DensityMatrix) -> Self {
        QuantumState::DensityMatrix(s)
    }
}

impl QuantumState {
    pub fn n_qubits(&self) -> usize {
        dispatch!(self, s => s.n_qubits())
    }

    pub fn backend_name(&self) -> &'static str {
        match self {
            QuantumState::StateVector(_) => "statevector",
            QuantumState::DensityMatrix(_) => "density-matrix",
        }
    }

    pub fn as_density(&self) -> Option<&DensityMatrix> {
        match self {
            QuantumState::DensityMatrix(d) => Some(d),
            QuantumState::StateVector(_) => None,
        }
    }

    pub fn as_statevector(&self) -> Option<&StateVector> {
        match self {
            QuantumState::StateVector(s) => Some(s),
            QuantumState::DensityMatrix(_) => None,
        }
    }

    /// Computational-basis outcome distribution over all qubits.
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            QuantumState::StateVector(s) => s.probabilities(),
            QuantumState::DensityMatrix(d) => d.diagonal().into_iter().map(|p| p.max(0.0)).collect(),
        }
    }

    /// Outcome distribution of the lowest `n_low` qubits.
    pub fn marginal_probabilities(&self, n_low: usize) -> Vec<f64> {
        match self {
            QuantumState::StateVector(s) => s.marginal_probabilities(n_low),
            QuantumState::DensityMatrix(_) => {
                let n_low = n_low.min(self.n_qubits());
                let mask = (1usize << n_low) - 1;
                let mut out = vec![0.0; 1 << n_low];
                for (i, p) in self.probabilities().into_iter().enumerate() {
                    out[i & mask] += p;
                }
                out
            }
        }
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        dispatch!(self, s => s.check_qubit(q))
    }

    fn depolarize_one<R: Rng + ?Sized>(&mut self, q: usize, p: f64, rng: &mut R) -> Result<()> {
        match self {
            QuantumState::StateVector(s) => s.depolarize(q, p, rng),
            QuantumState::DensityMatrix(d) => d.depolarize(q, p),
        }
    }

    /// Apply one gate, followed by the noise channel on its targets when the
    /// model asks for it.
    pub fn apply_gate<R: Rng + ?Sized>(&mut self, gate: &GateOp, noise: &NoiseModel, rng: &mut R) -> Result<()> {
        gate.validate(self.n_qubits())?;
        noise.validate()?;
        let noisy = noise.p > 0.0 && (!gate.is_preparation() || noise.noisy_preparation);
        match *gate {
            GateOp::Rx { target, angle } => dispatch!(self, s => s.apply_rx(target, angle)),
            GateOp::Rz { target, angle } => dispatch!(self, s => s.apply_rz(target, angle)),
            GateOp::Rzz { a, b, angle } => dispatch!(self, s => s.apply_rzz(a, b, angle)),
            GateOp::X(q) => dispatch!(self, s => s.apply_pauli(q, Pauli::X)),
            GateOp::Y(q) => dispatch!(self, s => s.apply_pauli(q, Pauli::Y)),
            GateOp::Z(q) => dispatch!(self, s => s.apply_pauli(q, Pauli::Z)),
            GateOp::PairPrep { system, environment, beta } => {
                dispatch!(self, s => s.apply_ry(system, pair_prep_angle(beta)));
                if noisy {
                    self.depolarize_one(system, noise.p, rng)?;
                }
                dispatch!(self, s => s.apply_cnot(system, environment));
            }
            GateOp::BasisPrep { target, bit } => {
                if bit {
                    dispatch!(self, s => s.apply_pauli(target, Pauli::X));
                }
            }
        }
        if noisy {
            for q in gate.targets() {
                self.depolarize_one(q, noise.p, rng)?;
            }
        }
        Ok(())
    }

    /// `exp(-i gamma H)` for diagonal `H`, compiled into one Z- or ZZ-rotation
    /// per term, each followed by the noise channel on its targets.
    pub fn apply_cost_evolution<R: Rng + ?Sized>(
        &mut self,
        hamiltonian: &ZHamiltonian,
        gamma: f64,
        noise: &NoiseModel,
        rng: &mut R,
    ) -> Result<()> {
        let n = self.n_qubits();
        if hamiltonian.min_qubits() > n {
            return Err(Error::QubitOutOfRange { qubit: hamiltonian.min_qubits() - 1, n_qubits: n });
        }
        for term in &hamiltonian.terms {
            let angle = 2.0 * gamma * term.coeff;
            let gate = match term.qubits()[..] {
                // global phase
                [] => continue,
                [q] => GateOp::Rz { target: q, angle },
                [a, b] => GateOp::Rzz { a, b, angle },
                _ => return Err(Error::invalid(format!("cost terms of order {} are not supported", term.order()))),
            };
            self.apply_gate(&gate, noise, rng)?;
        }
        Ok(())
    }

    /// `prod_j exp(-i nu X_j)` over `qubits`, noise after each rotation.
    pub fn apply_mixer_evolution<R: Rng + ?Sized>(
        &mut self,
        qubits: &[usize],
        nu: f64,
        noise: &NoiseModel,
        rng: &mut R,
    ) -> Result<()> {
        for &q in qubits {
            self.check_qubit(q)?;
        }
        for &target in qubits {
            self.apply_gate(&GateOp::Rx { target, angle: 2.0 * nu }, noise, rng)?;
        }
        Ok(())
    }

    /// Depolarizing channel on each target: exact for density matrices, one
    /// sampled Pauli per target for statevectors.
    pub fn apply_depolarizing<R: Rng + ?Sized>(&mut self, targets: &[usize], p: f64, rng: &mut R) -> Result<()> {
        noise::check_probability(p)?;
        for &q in targets {
            self.check_qubit(q)?;
        }
        for &q in targets {
            self.depolarize_one(q, p, rng)?;
        }
        Ok(())
    }

    /// Measure all qubits `shots` times.
    pub fn sample_bitstrings<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Result<Vec<Bitstring>> {
        dispatch!(self, s => s.sample(shots, rng))
    }

    /// Exact expectation of the Z product on `qubits`.
    pub fn exact_expectation(&self, qubits: &[usize]) -> Result<f64> {
        for &q in qubits {
            self.check_qubit(q)?;
        }
        let term = ZTerm::new(qubits, 1.0)?;
        Ok(self.probabilities().iter().enumerate().map(|(i, p)| p * term.sign(i as u64)).sum())
    }

    /// Partial trace of a density-matrix state.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        match self {
            QuantumState::DensityMatrix(d) => d.partial_trace(keep),
            QuantumState::StateVector(_) => Err(Error::WrongBackend("density-matrix")),
        }
    }
}

/// Purified thermal state of `exp(-beta sum_j Z_j)` on `n_system` qubits.
///
/// System qubit `j` is paired with environment qubit `n_system + j`; each pair
/// holds `e^{-beta/2}|00> + e^{beta/2}|11>` normalised by `sqrt(2 cosh beta)`.
pub fn prepare_purified_thermal(n_system: usize, beta: f64) -> Result<StateVector> {
    check_beta(beta)?;
    if n_system == 0 {
        return Err(Error::invalid("purified thermal state needs at least one system qubit"));
    }
    let total = n_system
        .checked_mul(2)
        .ok_or(Error::RegisterTooLarge { requested: usize::MAX, limit: MAX_STATEVECTOR_QUBITS })?;
    let mut state = QuantumState::from(StateVector::new(total)?);
    let mut rng = crate::rng::from_seed(0);
    for j in 0..n_system {
        let gate = GateOp::PairPrep { system: j, environment: n_system + j, beta };
        state.apply_gate(&gate, &NoiseModel::noiseless(), &mut rng)?;
    }
    match state {
        QuantumState::StateVector(s) => Ok(s),
        QuantumState::DensityMatrix(_) => unreachable!(),
    }
}

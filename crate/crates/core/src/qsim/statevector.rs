use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::density::DensityMatrix;
use super::kernels::{self, C64, ONE, ZERO};
use super::noise::{check_probability, sample_pauli, Pauli};
use crate::bits::Bitstring;
use crate::error::{Error, Result};

/// Largest statevector register.
pub const MAX_STATEVECTOR_QUBITS: usize = 24;

/// Pure state of `n` qubits as `2^n` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn new(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Wrap explicit amplitudes; the vector must be normalised within 1e-10.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if !dim.is_power_of_two() {
            return Err(Error::invalid(format!("amplitude vector length {dim} is not a power of two")));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_size(n_qubits)?;
        let state = Self { n_qubits, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("amplitudes have squared norm {norm}")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Outcome distribution of the lowest `n_low` qubits, the rest traced out.
    pub fn marginal_probabilities(&self, n_low: usize) -> Vec<f64> {
        let n_low = n_low.min(self.n_qubits);
        let mask = (1usize << n_low) - 1;
        let mut out = vec![0.0; 1 << n_low];
        for (i, a) in self.amps.iter().enumerate() {
            out[i & mask] += a.norm_sqr();
        }
        out
    }

    pub(crate) fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::QubitOutOfRange { qubit: q, n_qubits: self.n_qubits });
        }
        Ok(())
    }

    pub fn apply_rx(&mut self, q: usize, theta: f64) {
        kernels::apply_matrix(&mut self.amps, q, &kernels::rx_matrix(theta));
    }

    pub fn apply_ry(&mut self, q: usize, theta: f64) {
        kernels::apply_matrix(&mut self.amps, q, &kernels::ry_matrix(theta));
    }

    /// `exp(-i theta/2 Z)`.
    pub fn apply_rz(&mut self, q: usize, theta: f64) {
        kernels::apply_phase_z(&mut self.amps, q, theta / 2.0);
    }

    /// `exp(-i theta/2 Z_a Z_b)`.
    pub fn apply_rzz(&mut self, a: usize, b: usize, theta: f64) {
        kernels::apply_phase_zz(&mut self.amps, a, b, theta / 2.0);
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        kernels::apply_cnot(&mut self.amps, control, target);
    }

    pub fn apply_pauli(&mut self, q: usize, pauli: Pauli) {
        match pauli {
            Pauli::I => {}
            Pauli::X => kernels::apply_x(&mut self.amps, q),
            Pauli::Y => kernels::apply_y(&mut self.amps, q),
            Pauli::Z => kernels::apply_z(&mut self.amps, q),
        }
    }

    /// One stochastic unraveling step of the depolarizing channel.
    pub fn depolarize<R: Rng + ?Sized>(&mut self, q: usize, p: f64, rng: &mut R) -> Result<()> {
        check_probability(p)?;
        self.check_qubit(q)?;
        let pauli = sample_pauli(p, rng);
        self.apply_pauli(q, pauli);
        Ok(())
    }

    /// Measure every qubit `shots` times.
    pub fn sample<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Result<Vec<Bitstring>> {
        sample_from(&self.probabilities(), self.n_qubits, shots, rng)
    }

    /// Measure the lowest `n_low` qubits `shots` times.
    pub fn sample_marginal<R: Rng + ?Sized>(&self, n_low: usize, shots: usize, rng: &mut R) -> Result<Vec<Bitstring>> {
        sample_from(&self.marginal_probabilities(n_low), n_low.min(self.n_qubits), shots, rng)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_pure(self)
    }

    /// Reduced density matrix on `keep`, tracing out every other qubit.
    ///
    /// Qubit `keep[i]` becomes qubit `i` of the result.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let layout = super::density::SplitLayout::new(self.n_qubits, keep)?;
        let dk = 1usize << keep.len();
        let mut data = vec![ZERO; dk * dk];
        for t in 0..layout.traced_dim() {
            let tb = layout.traced_base(t);
            for r in 0..dk {
                let ar = self.amps[tb | layout.kept_base(r)];
                if ar == ZERO {
                    continue;
                }
                for c in 0..dk {
                    data[r * dk + c] += ar * self.amps[tb | layout.kept_base(c)].conj();
                }
            }
        }
        DensityMatrix::from_raw(keep.len(), data)
    }
}

pub(crate) fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_STATEVECTOR_QUBITS {
        return Err(Error::RegisterTooLarge { requested: n_qubits, limit: MAX_STATEVECTOR_QUBITS });
    }
    Ok(())
}

pub(crate) fn sample_from<R: Rng + ?Sized>(
    probs: &[f64],
    width: usize,
    shots: usize,
    rng: &mut R,
) -> Result<Vec<Bitstring>> {
    sample_indices(probs, shots, rng)?.into_iter().map(|i| Bitstring::new(width, i as u64)).collect()
}

/// Draw `shots` basis indices from a (possibly slightly unnormalised)
/// probability vector.
pub fn sample_indices<R: Rng + ?Sized>(probs: &[f64], shots: usize, rng: &mut R) -> Result<Vec<usize>> {
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    let weights = probs.iter().map(|&p| p.max(0.0));
    let dist = WeightedIndex::new(weights).map_err(|e| Error::invalid(format!("cannot sample from state: {e}")))?;
    Ok((0..shots).map(|_| dist.sample(rng)).collect())
}

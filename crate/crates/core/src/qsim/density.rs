use nalgebra::DMatrix;
use rand::Rng;

use super::kernels::{self, C64, ONE, ZERO};
use super::noise::{check_probability, Pauli};
use super::statevector::{sample_from, StateVector};
use crate::bits::Bitstring;
use crate::error::{Error, Result};

/// Largest density-matrix register (`4^n` entries).
pub const MAX_DENSITY_QUBITS: usize = 10;

/// Mixed state of `n` qubits. Entry `rho[r][c]` is stored at `(r << n) | c`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    /// `|0...0><0...0|`.
    pub fn new(n_qubits: usize) -> Result<Self> {
        let mut probs = vec![0.0; 1usize << check_size(n_qubits)?];
        probs[0] = 1.0;
        Self::from_diagonal(&probs)
    }

    pub fn from_pure(state: &StateVector) -> Result<Self> {
        let n = check_size(state.n_qubits())?;
        let amps = state.amplitudes();
        let dim = amps.len();
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[(r << n) | c] = amps[r] * amps[c].conj();
            }
        }
        Ok(Self { n_qubits: n, data })
    }

    /// Classical mixture of basis states; `probs` must sum to 1 within 1e-10.
    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let dim = probs.len();
        if !dim.is_power_of_two() {
            return Err(Error::invalid(format!("diagonal length {dim} is not a power of two")));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid("diagonal entries must be non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("diagonal sums to {total}")));
        }
        let n = check_size(dim.trailing_zeros() as usize)?;
        let mut data = vec![ZERO; dim * dim];
        for (i, &p) in probs.iter().enumerate() {
            data[(i << n) | i] = C64::new(p, 0.0);
        }
        Ok(Self { n_qubits: n, data })
    }

    /// Row-major `dim x dim` matrix; must be Hermitian with unit trace within 1e-10.
    pub fn from_matrix(n_qubits: usize, data: Vec<C64>) -> Result<Self> {
        let rho = Self::from_raw(n_qubits, data)?;
        let tr = rho.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::invalid(format!("trace {tr} is not 1")));
        }
        if !rho.is_hermitian(1e-10) {
            return Err(Error::invalid("matrix is not Hermitian"));
        }
        Ok(rho)
    }

    /// Uniform mixture of equally sized states.
    pub fn mixture(states: &[DensityMatrix]) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::invalid("mixture of no states"))?;
        let mut data = vec![ZERO; first.data.len()];
        for s in states {
            if s.n_qubits != first.n_qubits {
                return Err(Error::WidthMismatch { expected: first.n_qubits, actual: s.n_qubits });
            }
            for (acc, x) in data.iter_mut().zip(&s.data) {
                *acc += x;
            }
        }
        let w = 1.0 / states.len() as f64;
        data.iter_mut().for_each(|x| *x *= w);
        Self::from_raw(first.n_qubits, data)
    }

    pub(crate) fn from_raw(n_qubits: usize, data: Vec<C64>) -> Result<Self> {
        let n = check_size(n_qubits)?;
        if data.len() != 1usize << (2 * n) {
            return Err(Error::invalid(format!("expected {} entries, got {}", 1usize << (2 * n), data.len())));
        }
        Ok(Self { n_qubits: n, data })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row << self.n_qubits) | col]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|r| (r..d).all(|c| (self.get(r, c) - self.get(c, r).conj()).norm() <= tol))
    }

    /// Largest entrywise distance to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.n_qubits, other.n_qubits, "size mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |r, c| self.get(r, c))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `-tr(rho ln rho)` in nats.
    pub fn von_neumann_entropy(&self) -> f64 {
        -self.eigenvalues().into_iter().filter(|&l| l > 1e-15).map(|l| l * l.ln()).sum::<f64>()
    }

    /// Quantum relative entropy `D(rho || sigma)` for a `sigma` diagonal in the
    /// computational basis. Returns `+inf` when the support condition fails.
    pub fn relative_entropy_to_diagonal(&self, sigma: &[f64]) -> Result<f64> {
        if sigma.len() != self.dim() {
            return Err(Error::WidthMismatch { expected: self.dim(), actual: sigma.len() });
        }
        let mut cross = 0.0;
        for (i, &s) in sigma.iter().enumerate() {
            let rii = self.get(i, i).re;
            if rii > 1e-15 {
                if s <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                cross += rii * s.ln();
            }
        }
        Ok(-self.von_neumann_entropy() - cross)
    }

    /// Partial trace keeping `keep`; qubit `keep[i]` becomes qubit `i`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let layout = SplitLayout::new(self.n_qubits, keep)?;
        let dk = 1usize << keep.len();
        let k = keep.len();
        let mut data = vec![ZERO; dk * dk];
        for r in 0..dk {
            let rb = layout.kept_base(r);
            for c in 0..dk {
                let cb = layout.kept_base(c);
                let mut acc = ZERO;
                for t in 0..layout.traced_dim() {
                    let tb = layout.traced_base(t);
                    acc += self.get(rb | tb, cb | tb);
                }
                data[(r << k) | c] = acc;
            }
        }
        DensityMatrix::from_raw(k, data)
    }

    pub(crate) fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::QubitOutOfRange { qubit: q, n_qubits: self.n_qubits });
        }
        Ok(())
    }

    fn conjugate_by(&mut self, q: usize, m: &kernels::Matrix2) {
        kernels::apply_matrix(&mut self.data, q + self.n_qubits, m);
        kernels::apply_matrix(&mut self.data, q, &kernels::conj_matrix(m));
    }

    pub fn apply_rx(&mut self, q: usize, theta: f64) {
        self.conjugate_by(q, &kernels::rx_matrix(theta));
    }

    pub fn apply_ry(&mut self, q: usize, theta: f64) {
        self.conjugate_by(q, &kernels::ry_matrix(theta));
    }

    pub fn apply_rz(&mut self, q: usize, theta: f64) {
        let n = self.n_qubits;
        kernels::apply_phase_z(&mut self.data, q + n, theta / 2.0);
        kernels::apply_phase_z(&mut self.data, q, -theta / 2.0);
    }

    pub fn apply_rzz(&mut self, a: usize, b: usize, theta: f64) {
        let n = self.n_qubits;
        kernels::apply_phase_zz(&mut self.data, a + n, b + n, theta / 2.0);
        kernels::apply_phase_zz(&mut self.data, a, b, -theta / 2.0);
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let n = self.n_qubits;
        kernels::apply_cnot(&mut self.data, control + n, target + n);
        kernels::apply_cnot(&mut self.data, control, target);
    }

    pub fn apply_pauli(&mut self, q: usize, pauli: Pauli) {
        let n = self.n_qubits;
        match pauli {
            Pauli::I => {}
            Pauli::X => {
                kernels::apply_x(&mut self.data, q + n);
                kernels::apply_x(&mut self.data, q);
            }
            // Y rho Y: the column factor is conj(Y) = -Y.
            Pauli::Y => {
                kernels::apply_y(&mut self.data, q + n);
                kernels::apply_y(&mut self.data, q);
                self.data.iter_mut().for_each(|x| *x = -*x);
            }
            Pauli::Z => {
                kernels::apply_z(&mut self.data, q + n);
                kernels::apply_z(&mut self.data, q);
            }
        }
    }

    /// Exact depolarizing channel on qubit `q`.
    pub fn depolarize(&mut self, q: usize, p: f64) -> Result<()> {
        check_probability(p)?;
        self.check_qubit(q)?;
        if p == 0.0 {
            return Ok(());
        }
        let n = self.n_qubits;
        let row_bit = 1usize << (q + n);
        let col_bit = 1usize << q;
        let keep = 1.0 - 2.0 * p;
        let swap = 2.0 * p;
        let coherence = 1.0 - 4.0 * p;
        for i in 0..self.data.len() {
            if i & (row_bit | col_bit) != 0 {
                continue;
            }
            let i11 = i | row_bit | col_bit;
            let a = self.data[i];
            let d = self.data[i11];
            self.data[i] = a * keep + d * swap;
            self.data[i11] = d * keep + a * swap;
            self.data[i | col_bit] *= coherence;
            self.data[i | row_bit] *= coherence;
        }
        Ok(())
    }

    /// Measure every qubit `shots` times.
    pub fn sample<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Result<Vec<Bitstring>> {
        sample_from(&self.diagonal(), self.n_qubits, shots, rng)
    }
}

fn check_size(n_qubits: usize) -> Result<usize> {
    if n_qubits > MAX_DENSITY_QUBITS {
        return Err(Error::RegisterTooLarge { requested: n_qubits, limit: MAX_DENSITY_QUBITS });
    }
    Ok(n_qubits)
}

/// Index bookkeeping for splitting a register into kept and traced qubits.
pub(crate) struct SplitLayout {
    kept: Vec<usize>,
    traced: Vec<usize>,
}

impl SplitLayout {
    pub(crate) fn new(n_qubits: usize, keep: &[usize]) -> Result<Self> {
        let mut seen = vec![false; n_qubits];
        for &q in keep {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
            }
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::invalid(format!("qubit {q} listed twice")));
            }
        }
        let traced = (0..n_qubits).filter(|&q| !seen[q]).collect();
        Ok(Self { kept: keep.to_vec(), traced })
    }

    fn scatter(qubits: &[usize], compact: usize) -> usize {
        qubits.iter().enumerate().fold(0, |acc, (i, &q)| acc | (((compact >> i) & 1) << q))
    }

    pub(crate) fn kept_base(&self, compact: usize) -> usize {
        Self::scatter(&self.kept, compact)
    }

    pub(crate) fn traced_base(&self, compact: usize) -> usize {
        Self::scatter(&self.traced, compact)
    }

    pub(crate) fn traced_dim(&self) -> usize {
        1 << self.traced.len()
    }
}

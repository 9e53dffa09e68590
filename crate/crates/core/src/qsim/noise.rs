use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// Per-gate depolarizing noise `N_p(rho) = (1-3p) rho + p (X rho X + Y rho Y + Z rho Z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Probability of each of the three Pauli errors.
    pub p: f64,
    /// Whether state-preparation gates also carry the channel.
    #[serde(default)]
    pub noisy_preparation: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { p: 0.0, noisy_preparation: false }
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        check_probability(p)?;
        Ok(Self { p, noisy_preparation: false })
    }

    pub fn validate(&self) -> Result<()> {
        check_probability(self.p)
    }

    pub fn is_noiseless(&self) -> bool {
        self.p == 0.0
    }

    /// Average fidelity of a single-qubit gate followed by the channel.
    pub fn single_qubit_fidelity(&self) -> f64 {
        1.0 - 2.0 * self.p
    }

    /// Average fidelity of a two-qubit gate with the channel on both targets.
    pub fn two_qubit_fidelity(&self) -> f64 {
        (1.0 - 2.0 * self.p).powi(2)
    }
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=0.25).contains(&p) {
        return Err(Error::invalid(format!("depolarizing probability {p} outside [0, 1/4]")));
    }
    Ok(())
}

/// Draw one Pauli from `{I, X, Y, Z}` with probabilities `{1-3p, p, p, p}`.
pub fn sample_pauli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Pauli {
    if p == 0.0 {
        return Pauli::I;
    }
    let u: f64 = rng.gen();
    if u < p {
        Pauli::X
    } else if u < 2.0 * p {
        Pauli::Y
    } else if u < 3.0 * p {
        Pauli::Z
    } else {
        Pauli::I
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn fidelities() {
        let n = NoiseModel::depolarizing(0.01).unwrap();
        assert!((n.single_qubit_fidelity() - 0.98).abs() < 1e-15);
        assert!((n.two_qubit_fidelity() - 0.9604).abs() < 1e-15);
        assert_eq!(NoiseModel::noiseless().single_qubit_fidelity(), 1.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(NoiseModel::depolarizing(-0.01).is_err());
        assert!(NoiseModel::depolarizing(0.26).is_err());
        assert!(NoiseModel::depolarizing(f64::NAN).is_err());
        assert!(NoiseModel::depolarizing(0.25).is_ok());
    }

    #[test]
    fn pauli_frequencies() {
        let mut r = rng::from_seed(1);
        let n = 200_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let i = match sample_pauli(0.1, &mut r) {
                Pauli::I => 0,
                Pauli::X => 1,
                Pauli::Y => 2,
                Pauli::Z => 3,
            };
            counts[i] += 1;
        }
        let expect = [0.7, 0.1, 0.1, 0.1];
        for (c, e) in counts.iter().zip(expect) {
            let f = *c as f64 / n as f64;
            let sigma = (e * (1.0 - e) / n as f64).sqrt();
            assert!((f - e).abs() < 4.0 * sigma, "{f} vs {e}");
        }
    }
}

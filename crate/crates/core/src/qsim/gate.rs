use crate::error::{Error, Result};

/// Gate set compiled from the QAOA exponentials and state preparation.
///
/// Rotations follow `R_P(theta) = exp(-i theta/2 P)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateOp {
    Rx {
        target: usize,
        angle: f64,
    },
    Rz {
        target: usize,
        angle: f64,
    },
    Rzz {
        a: usize,
        b: usize,
        angle: f64,
    },
    X(usize),
    Y(usize),
    Z(usize),
    /// Takes `|0>_s |0>_e` to the purified single-qubit thermal pair at `beta`.
    PairPrep {
        system: usize,
        environment: usize,
        beta: f64,
    },
    /// Takes a fresh `|0>` to `|bit>`.
    BasisPrep {
        target: usize,
        bit: bool,
    },
}

impl GateOp {
    pub fn targets(&self) -> Vec<usize> {
        match *self {
            GateOp::Rx { target, .. }
            | GateOp::Rz { target, .. }
            | GateOp::X(target)
            | GateOp::Y(target)
            | GateOp::Z(target)
            | GateOp::BasisPrep { target, .. } => vec![target],
            GateOp::Rzz { a, b, .. } => vec![a, b],
            GateOp::PairPrep { system, environment, .. } => vec![system, environment],
        }
    }

    pub fn is_preparation(&self) -> bool {
        matches!(self, GateOp::PairPrep { .. } | GateOp::BasisPrep { .. })
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let targets = self.targets();
        for &q in &targets {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
            }
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(Error::invalid(format!("{self:?} acts twice on qubit {}", targets[0])));
        }
        match *self {
            GateOp::Rx { angle, .. } | GateOp::Rz { angle, .. } | GateOp::Rzz { angle, .. } if !angle.is_finite() => {
                Err(Error::invalid(format!("non-finite rotation angle in {self:?}")))
            }
            GateOp::PairPrep { beta, .. } => check_beta(beta),
            _ => Ok(()),
        }
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || beta.is_infinite() {
        return Err(Error::invalid(format!("inverse temperature must be finite and non-negative, got {beta}")));
    }
    Ok(())
}

/// Y-rotation angle that puts weight `e^{-beta}/(2 cosh beta)` on `|0>`.
pub(crate) fn pair_prep_angle(beta: f64) -> f64 {
    2.0 * beta.exp().atan()
}

/// Thermal populations `[p(0), p(1)]` of `exp(-beta Z)` on one qubit.
pub fn thermal_populations(beta: f64) -> [f64; 2] {
    let t = beta.tanh();
    [(1.0 - t) / 2.0, (1.0 + t) / 2.0]
}

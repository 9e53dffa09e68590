//! Ising energy functions on a visible/hidden partition.
//!
//! Energies use `H = -sum_{jk} J_jk Z_j Z_k - sum_j B_j Z_j` everywhere; every
//! consumer goes through [`CostHamiltonian`] so there is a single sign
//! convention in the crate.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::qsim::{thermal_populations, ZHamiltonian, ZTerm};

/// Largest model handled by exhaustive enumeration.
pub const MAX_ENUMERATION_UNITS: usize = 20;
/// Largest model for the pseudo-thermal diagnostics.
pub const MAX_DIAGNOSTIC_UNITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Which cost/mixer pair to use: all units, or the clamped form that drops
/// visible biases and mixes hidden units only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Full,
    Partial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsingModel {
    n_units: usize,
    visible: Vec<usize>,
    hidden: Vec<usize>,
    couplings: Vec<Coupling>,
    biases: Vec<f64>,
}

impl IsingModel {
    pub fn new(
        n_units: usize,
        visible: Vec<usize>,
        hidden: Vec<usize>,
        couplings: Vec<Coupling>,
        biases: Vec<f64>,
    ) -> Result<Self> {
        if n_units > 64 {
            return Err(Error::invalid(format!("{n_units} units exceeds the 64-unit limit")));
        }
        let mut role = vec![None; n_units];
        for (list, name) in [(&visible, "visible"), (&hidden, "hidden")] {
            for &u in list.iter() {
                let slot = role.get_mut(u).ok_or_else(|| Error::invalid(format!("{name} unit {u} out of range")))?;
                if slot.replace(name).is_some() {
                    return Err(Error::invalid(format!("unit {u} listed more than once")));
                }
            }
        }
        if let Some(u) = role.iter().position(Option::is_none) {
            return Err(Error::invalid(format!("unit {u} is neither visible nor hidden")));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &couplings {
            if c.a >= n_units || c.b >= n_units {
                return Err(Error::invalid(format!("coupling ({}, {}) out of range", c.a, c.b)));
            }
            if c.a == c.b {
                return Err(Error::invalid(format!("self-coupling on unit {}", c.a)));
            }
            if !seen.insert((c.a.min(c.b), c.a.max(c.b))) {
                return Err(Error::invalid(format!("duplicate coupling ({}, {})", c.a, c.b)));
            }
            if !c.weight.is_finite() {
                return Err(Error::invalid("non-finite coupling weight"));
            }
        }
        if biases.len() != n_units {
            return Err(Error::WidthMismatch { expected: n_units, actual: biases.len() });
        }
        if biases.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("non-finite bias"));
        }
        Ok(Self { n_units, visible, hidden, couplings, biases })
    }

    /// Restricted Boltzmann machine: visibles `0..n_visible`, hiddens after
    /// them, every visible coupled to every hidden, all weights zero.
    pub fn rbm(n_visible: usize, n_hidden: usize) -> Result<Self> {
        let n = n_visible + n_hidden;
        let couplings = (0..n_visible)
            .flat_map(|v| (0..n_hidden).map(move |h| Coupling { a: v, b: n_visible + h, weight: 0.0 }))
            .collect();
        Self::new(n, (0..n_visible).collect(), (n_visible..n).collect(), couplings, vec![0.0; n])
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn visible(&self) -> &[usize] {
        &self.visible
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// True when the couplings are exactly the complete visible-hidden bipartite graph.
    pub fn is_restricted(&self) -> bool {
        let vis = |u: usize| self.visible.contains(&u);
        self.couplings.iter().all(|c| vis(c.a) != vis(c.b))
            && self.couplings.len() == self.visible.len() * self.hidden.len()
    }

    /// Parameter vector: coupling weights in stored order, then biases.
    pub fn parameters(&self) -> Vec<f64> {
        self.couplings.iter().map(|c| c.weight).chain(self.biases.iter().copied()).collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        let n_c = self.couplings.len();
        if params.len() != n_c + self.n_units {
            return Err(Error::WidthMismatch { expected: n_c + self.n_units, actual: params.len() });
        }
        for (c, &w) in self.couplings.iter_mut().zip(params) {
            c.weight = w;
        }
        self.biases.copy_from_slice(&params[n_c..]);
        Ok(())
    }

    pub fn cost_hamiltonian(&self, variant: Variant) -> CostHamiltonian {
        let mut terms: Vec<ZTerm> =
            self.couplings.iter().map(|c| ZTerm::new(&[c.a, c.b], -c.weight).expect("validated coupling")).collect();
        let biased: Box<dyn Iterator<Item = usize>> = match variant {
            Variant::Full => Box::new(0..self.n_units),
            Variant::Partial => Box::new(self.hidden.iter().copied()),
        };
        terms.extend(biased.map(|j| ZTerm::new(&[j], -self.biases[j]).expect("validated unit")));
        CostHamiltonian { n_units: self.n_units, variant, hamiltonian: ZHamiltonian::new(terms) }
    }

    /// Qubits the mixer acts on.
    pub fn mixer(&self, variant: Variant) -> MixerSpec {
        let qubits = match variant {
            Variant::Full => (0..self.n_units).collect(),
            Variant::Partial => self.hidden.clone(),
        };
        MixerSpec { qubits }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    units: usize,
    visible: Vec<usize>,
    hidden: Vec<usize>,
    couplings: Vec<(usize, usize, f64)>,
    biases: BTreeMap<String, f64>,
}

impl Serialize for IsingModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ModelDoc {
            units: self.n_units,
            visible: self.visible.clone(),
            hidden: self.hidden.clone(),
            couplings: self.couplings.iter().map(|c| (c.a, c.b, c.weight)).collect(),
            biases: self.biases.iter().enumerate().map(|(j, &b)| (j.to_string(), b)).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IsingModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = ModelDoc::deserialize(deserializer)?;
        let mut biases = vec![0.0; doc.units];
        for (key, value) in doc.biases {
            let j: usize = key.parse().map_err(|_| D::Error::custom(format!("bad bias key {key:?}")))?;
            *biases.get_mut(j).ok_or_else(|| D::Error::custom(format!("bias for unit {j} out of range")))? = value;
        }
        let couplings = doc.couplings.into_iter().map(|(a, b, weight)| Coupling { a, b, weight }).collect();
        IsingModel::new(doc.units, doc.visible, doc.hidden, couplings, biases).map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixerSpec {
    pub qubits: Vec<usize>,
}

/// Diagonal cost Hamiltonian derived from an [`IsingModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct CostHamiltonian {
    n_units: usize,
    variant: Variant,
    hamiltonian: ZHamiltonian,
}

impl CostHamiltonian {
    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn terms(&self) -> &[ZTerm] {
        &self.hamiltonian.terms
    }

    pub fn as_z_hamiltonian(&self) -> &ZHamiltonian {
        &self.hamiltonian
    }

    /// Energy of a spin assignment (`+1`/`-1` per unit).
    pub fn energy(&self, spins: &[f64]) -> Result<f64> {
        if spins.len() != self.n_units {
            return Err(Error::WidthMismatch { expected: self.n_units, actual: spins.len() });
        }
        let mut index = 0u64;
        for (j, &s) in spins.iter().enumerate() {
            if s == -1.0 {
                index |= 1 << j;
            } else if s != 1.0 {
                return Err(Error::invalid(format!("spin {s} at unit {j} is not +1 or -1")));
            }
        }
        Ok(self.energy_of_index(index))
    }

    /// Energy of the basis state `index` (bit `j` set means `z_j = -1`).
    pub fn energy_of_index(&self, index: u64) -> f64 {
        self.hamiltonian.energy(index)
    }

    pub fn energy_of_bits(&self, bits: &Bitstring) -> Result<f64> {
        if bits.width() != self.n_units {
            return Err(Error::WidthMismatch { expected: self.n_units, actual: bits.width() });
        }
        Ok(self.energy_of_index(bits.value()))
    }

    /// Energies of every basis state, for models within the enumeration bound.
    pub fn energies(&self) -> Result<Vec<f64>> {
        check_units(self.n_units, MAX_ENUMERATION_UNITS)?;
        Ok((0..1u64 << self.n_units).map(|i| self.energy_of_index(i)).collect())
    }
}

fn check_units(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::RegisterTooLarge { requested: n, limit });
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || beta.is_infinite() {
        return Err(Error::invalid(format!("inverse temperature must be finite and non-negative, got {beta}")));
    }
    Ok(())
}

/// Exact Boltzmann distribution over basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsDistribution {
    n_units: usize,
    probs: Vec<f64>,
    log_partition: f64,
}

impl GibbsDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn probability(&self, bits: &Bitstring) -> f64 {
        self.probs[bits.value() as usize]
    }

    pub fn expect_term(&self, term: &ZTerm) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| p * term.sign(i as u64)).sum()
    }

    pub fn expect_z(&self, j: usize) -> f64 {
        self.expect_term(&ZTerm::new(&[j], 1.0).expect("unit index"))
    }

    pub fn expect_zz(&self, a: usize, b: usize) -> f64 {
        self.expect_term(&ZTerm::new(&[a, b], 1.0).expect("distinct units"))
    }

    pub fn expect_energy(&self, h: &CostHamiltonian) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| p * h.energy_of_index(i as u64)).sum()
    }
}

fn boltzmann(energies: &[f64], beta: f64, allowed: impl Fn(usize) -> bool) -> (Vec<f64>, f64) {
    let e_min = energies.iter().enumerate().filter(|(i, _)| allowed(*i)).map(|(_, &e)| e).fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> =
        energies.iter().enumerate().map(|(i, &e)| if allowed(i) { (-beta * (e - e_min)).exp() } else { 0.0 }).collect();
    let z: f64 = weights.iter().sum();
    let probs = weights.into_iter().map(|w| w / z).collect();
    (probs, z.ln() - beta * e_min)
}

/// `exp(-beta H) / tr exp(-beta H)` by enumeration.
pub fn gibbs_oracle(h: &CostHamiltonian, beta: f64) -> Result<GibbsDistribution> {
    check_beta(beta)?;
    let energies = h.energies()?;
    let (probs, log_partition) = boltzmann(&energies, beta, |_| true);
    Ok(GibbsDistribution { n_units: h.n_units, probs, log_partition })
}

/// Gibbs distribution of the full model with the visible units fixed to `clamp`.
pub fn gibbs_oracle_clamped(model: &IsingModel, beta: f64, clamp: &Bitstring) -> Result<GibbsDistribution> {
    check_beta(beta)?;
    if clamp.width() != model.visible.len() {
        return Err(Error::WidthMismatch { expected: model.visible.len(), actual: clamp.width() });
    }
    let energies = model.cost_hamiltonian(Variant::Full).energies()?;
    let visible = model.visible.clone();
    let matches = |i: usize| visible.iter().enumerate().all(|(k, &u)| ((i >> u) & 1 == 1) == clamp.bit(k));
    let (probs, log_partition) = boltzmann(&energies, beta, matches);
    Ok(GibbsDistribution { n_units: model.n_units, probs, log_partition })
}

/// Spectrum of the product thermal state of `sum_j Z_j` on `n_qubits`,
/// indexed by basis state. Unitary evolution of the purified initial state
/// preserves this multiset.
pub fn pseudo_thermal_spectrum(beta: f64, n_qubits: usize) -> Result<Vec<f64>> {
    check_beta(beta)?;
    check_units(n_qubits, MAX_ENUMERATION_UNITS)?;
    let [p0, p1] = thermal_populations(beta);
    Ok((0..1u64 << n_qubits)
        .map(|k| {
            let ones = k.count_ones() as i32;
            p1.powi(ones) * p0.powi(n_qubits as i32 - ones)
        })
        .collect())
}

/// Minimum-energy state reachable by unitary evolution of the initial thermal
/// state: the largest eigenvalues go to the lowest energies. Returned as the
/// diagonal in the computational basis (the energy eigenbasis of `h`).
///
/// Equal energies are ordered by basis index.
pub fn min_energy_pseudo_thermal(h: &CostHamiltonian, beta: f64) -> Result<Vec<f64>> {
    check_units(h.n_units, MAX_DIAGNOSTIC_UNITS)?;
    let mut spectrum = pseudo_thermal_spectrum(beta, h.n_units)?;
    spectrum.sort_by(|a, b| b.total_cmp(a));
    let energies = h.energies()?;
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    let mut diag = vec![0.0; energies.len()];
    for (rank, &state) in order.iter().enumerate() {
        diag[state] = spectrum[rank];
    }
    Ok(diag)
}

/// Relative entropy (nats) from the minimum-energy pseudo-thermal state to
/// the Gibbs state, by two routes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoThermalDivergence {
    /// `sum_k p_k ln(p_k / g_k)` over the two diagonals.
    pub direct: f64,
    /// `ln Z_C + beta <H>_perf - S_init`, with the initial entropy
    /// `S_init = Q (ln(2 cosh beta) - beta tanh beta)`.
    pub closed_form: f64,
}

pub fn pseudo_thermal_divergence(h: &CostHamiltonian, beta: f64) -> Result<PseudoThermalDivergence> {
    let perf = min_energy_pseudo_thermal(h, beta)?;
    let gibbs = gibbs_oracle(h, beta)?;
    let direct = perf.iter().zip(gibbs.probs()).filter(|(p, _)| **p > 0.0).map(|(p, g)| p * (p / g).ln()).sum();
    let energy: f64 = perf.iter().enumerate().map(|(i, p)| p * h.energy_of_index(i as u64)).sum();
    let q = h.n_units as f64;
    let initial_entropy = q * ((2.0 * beta.cosh()).ln() - beta * beta.tanh());
    let closed_form = gibbs.log_partition() + beta * energy - initial_entropy;
    Ok(PseudoThermalDivergence { direct, closed_form })
}

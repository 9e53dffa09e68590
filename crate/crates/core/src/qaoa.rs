//! Quantum approximate thermalization.
//!
//! A purified thermal state of `sum_j Z_j` is evolved by `P` alternating
//! cost/mixer pulses whose angles are tuned by Nelder-Mead to minimise the
//! shot-estimated cost energy. The system entropy is fixed by the initial
//! state, so lowering the energy lowers the free energy and moves the system
//! towards the Gibbs state of the cost Hamiltonian.
//!
//! Register layout for the statevector backend: system qubits `0..n` (unit
//! `j` on qubit `j`), then one environment qubit per purified unit, then the
//! address register in QRAM mode.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::ising::{CostHamiltonian, IsingModel, Variant};
use crate::optimizer::NelderMead;
use crate::qsim::{
    sample_indices, thermal_populations, DensityMatrix, GateOp, NoiseModel, QuantumState, StateVector, ZTerm, C64,
    MAX_DENSITY_QUBITS,
};

/// Largest system register the `Auto` backend hands to the density-matrix simulator.
pub const AUTO_DENSITY_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Density matrix on the system register when it is small enough and the
    /// clamp is not QRAM; statevector trajectories otherwise.
    #[default]
    Auto,
    /// Purified statevector. Noisy circuits are simulated shot by shot with
    /// sampled Pauli errors.
    Trajectory,
    /// Exact channel on the system register.
    DensityMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub gammas: Vec<f64>,
    pub nus: Vec<f64>,
}

impl PulseSchedule {
    pub fn new(gammas: Vec<f64>, nus: Vec<f64>) -> Result<Self> {
        if gammas.len() != nus.len() {
            return Err(Error::WidthMismatch { expected: gammas.len(), actual: nus.len() });
        }
        if gammas.iter().chain(&nus).any(|a| !a.is_finite()) {
            return Err(Error::invalid("pulse angles must be finite"));
        }
        Ok(Self { gammas, nus })
    }

    pub fn zeros(pulses: usize) -> Self {
        Self { gammas: vec![0.0; pulses], nus: vec![0.0; pulses] }
    }

    /// Angles drawn uniformly from `[0, 2 pi)`.
    pub fn random<R: Rng + ?Sized>(pulses: usize, rng: &mut R) -> Self {
        Self::from_flat(&(0..2 * pulses).map(|_| rng.gen_range(0.0..TAU)).collect::<Vec<_>>()).expect("even length")
    }

    pub fn pulses(&self) -> usize {
        self.gammas.len()
    }

    /// `[gamma_1, nu_1, gamma_2, nu_2, ...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.gammas.iter().zip(&self.nus).flat_map(|(&g, &n)| [g, n]).collect()
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(2) {
            return Err(Error::invalid(format!("flat schedule has odd length {}", flat.len())));
        }
        Self::new(flat.iter().step_by(2).copied().collect(), flat.iter().skip(1).step_by(2).copied().collect())
    }
}

/// Source of the visible-unit assignment. Any clamp selects the partial
/// cost and mixer; no clamp selects the full ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clamp {
    None,
    Fixed(Bitstring),
    /// Every shot picks a data point uniformly at random.
    Randomized(Vec<Bitstring>),
    /// Uniform superposition over the data points entangled with an address
    /// register that the circuit never touches.
    Qram(Vec<Bitstring>),
}

impl Clamp {
    pub fn variant(&self) -> Variant {
        match self {
            Clamp::None => Variant::Full,
            _ => Variant::Partial,
        }
    }

    fn points(&self) -> &[Bitstring] {
        match self {
            Clamp::None => &[],
            Clamp::Fixed(b) => std::slice::from_ref(b),
            Clamp::Randomized(v) | Clamp::Qram(v) => v,
        }
    }

    /// A randomized clamp over copies of one string is the fixed clamp.
    fn normalized(&self) -> Clamp {
        match self {
            Clamp::Randomized(v) if v.windows(2).all(|w| w[0] == w[1]) => Clamp::Fixed(v[0]),
            other => other.clone(),
        }
    }
}

pub fn address_qubits(points: usize) -> usize {
    points.max(1).next_power_of_two().trailing_zeros() as usize
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalizeConfig {
    pub beta: f64,
    pub pulses: usize,
    pub shots: usize,
    pub max_iters: usize,
    pub noise: NoiseModel,
    pub backend: Backend,
    pub max_address_qubits: usize,
}

impl Default for ThermalizeConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            pulses: 3,
            shots: 500,
            max_iters: 100,
            noise: NoiseModel::noiseless(),
            backend: Backend::Auto,
            max_address_qubits: 8,
        }
    }
}

impl ThermalizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || self.beta.is_infinite() {
            return Err(Error::invalid(format!("beta must be finite and non-negative, got {}", self.beta)));
        }
        if self.shots == 0 {
            return Err(Error::invalid("shots must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("optimizer iterations must be at least 1"));
        }
        self.noise.validate()
    }

    fn noisy(&self) -> bool {
        !self.noise.is_noiseless()
    }
}

/// Estimated or exact expectations of one circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    /// `<Z_j>` for every unit.
    pub z: Vec<f64>,
    /// `<Z_a Z_b>` for every coupling, in model order.
    pub zz: Vec<f64>,
    /// Expectation of the cost Hamiltonian that was optimised.
    pub energy: f64,
}

impl Expectations {
    /// Same layout as [`IsingModel::parameters`].
    pub fn to_parameter_vector(&self) -> Vec<f64> {
        self.zz.iter().chain(&self.z).copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalizerResult {
    pub schedule: PulseSchedule,
    /// Re-measured on the optimal schedule with a fresh batch of shots.
    pub expectations: Expectations,
    /// Best estimated energy after each optimizer iteration.
    pub energy_trace: Vec<f64>,
    /// Estimated energy at the random initial schedule.
    pub initial_energy: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Engine {
    Density,
    Statevector,
}

fn validate(model: &IsingModel, clamp: &Clamp, config: &ThermalizeConfig) -> Result<()> {
    config.validate()?;
    let nv = model.visible().len();
    match clamp {
        Clamp::None => {}
        Clamp::Fixed(b) => check_width(b, nv)?,
        Clamp::Randomized(points) | Clamp::Qram(points) => {
            if points.is_empty() {
                return Err(Error::invalid("clamp dataset is empty"));
            }
            for b in points {
                check_width(b, nv)?;
            }
        }
    }
    if let Clamp::Qram(points) = clamp {
        let a = address_qubits(points.len());
        if a > config.max_address_qubits {
            return Err(Error::RegisterTooLarge { requested: a, limit: config.max_address_qubits });
        }
    }
    Ok(())
}

fn check_width(b: &Bitstring, expected: usize) -> Result<()> {
    if b.width() != expected {
        return Err(Error::WidthMismatch { expected, actual: b.width() });
    }
    Ok(())
}

fn engine(model: &IsingModel, clamp: &Clamp, config: &ThermalizeConfig) -> Result<Engine> {
    let n = model.n_units();
    let noisy_prep = config.noisy() && config.noise.noisy_preparation;
    match config.backend {
        Backend::Trajectory => Ok(Engine::Statevector),
        Backend::DensityMatrix => {
            if matches!(clamp, Clamp::Qram(_)) {
                return Err(Error::invalid("QRAM clamping needs the trajectory backend"));
            }
            if noisy_prep {
                return Err(Error::invalid("noisy preparation needs the trajectory backend"));
            }
            if n > MAX_DENSITY_QUBITS {
                return Err(Error::RegisterTooLarge { requested: n, limit: MAX_DENSITY_QUBITS });
            }
            Ok(Engine::Density)
        }
        Backend::Auto => {
            if n <= AUTO_DENSITY_LIMIT && !noisy_prep && !matches!(clamp, Clamp::Qram(_)) {
                Ok(Engine::Density)
            } else {
                Ok(Engine::Statevector)
            }
        }
    }
}

fn visible_index(model: &IsingModel, bits: &Bitstring) -> u64 {
    model.visible().iter().enumerate().filter(|(k, _)| bits.bit(*k)).fold(0, |acc, (_, &u)| acc | 1 << u)
}

fn purified_units(model: &IsingModel, clamp: &Clamp) -> Vec<usize> {
    match clamp {
        Clamp::None => (0..model.n_units()).collect(),
        _ => model.hidden().to_vec(),
    }
}

/// Initial system state for the density backend, diagonal in the computational basis.
fn initial_density(model: &IsingModel, clamp: &Clamp, beta: f64) -> Result<DensityMatrix> {
    let n = model.n_units();
    let [p0, p1] = thermal_populations(beta);
    let thermal = |units: &[usize], index: usize| -> f64 {
        units.iter().map(|&u| if index >> u & 1 == 1 { p1 } else { p0 }).product()
    };
    let mut diag = vec![0.0; 1 << n];
    match clamp {
        Clamp::None => {
            let all: Vec<usize> = (0..n).collect();
            for (i, d) in diag.iter_mut().enumerate() {
                *d = thermal(&all, i);
            }
        }
        _ => {
            let points = clamp.points();
            let w = 1.0 / points.len() as f64;
            let visible_mask: usize = model.visible().iter().map(|&u| 1 << u).sum();
            for point in points {
                let v = visible_index(model, point) as usize;
                for (i, d) in diag.iter_mut().enumerate() {
                    if i & visible_mask == v {
                        *d += w * thermal(model.hidden(), i);
                    }
                }
            }
        }
    }
    DensityMatrix::from_diagonal(&diag)
}

/// Purified initial state for one trajectory. A randomized clamp must be
/// resolved to a single point before calling this.
fn initial_statevector<R: Rng + ?Sized>(
    model: &IsingModel,
    clamp: &Clamp,
    config: &ThermalizeConfig,
    rng: &mut R,
) -> Result<QuantumState> {
    let n = model.n_units();
    let purified = purified_units(model, clamp);
    let env_base = n;
    let addr_base = n + purified.len();
    let total = match clamp {
        Clamp::Qram(points) => addr_base + address_qubits(points.len()),
        _ => addr_base,
    };
    let mut state = match clamp {
        Clamp::Qram(points) => {
            let sv = StateVector::new(total)?;
            let mut amps = vec![C64::new(0.0, 0.0); sv.amplitudes().len()];
            let a = C64::new((points.len() as f64).sqrt().recip(), 0.0);
            for (j, point) in points.iter().enumerate() {
                amps[(j << addr_base) | visible_index(model, point) as usize] = a;
            }
            let mut state = QuantumState::from(StateVector::from_amplitudes(amps)?);
            if config.noisy() && config.noise.noisy_preparation {
                state.apply_depolarizing(model.visible(), config.noise.p, rng)?;
            }
            state
        }
        Clamp::Fixed(bits) => {
            let mut state = QuantumState::from(StateVector::new(total)?);
            for (k, &target) in model.visible().iter().enumerate() {
                state.apply_gate(&GateOp::BasisPrep { target, bit: bits.bit(k) }, &config.noise, rng)?;
            }
            state
        }
        Clamp::None => QuantumState::from(StateVector::new(total)?),
        Clamp::Randomized(_) => unreachable!("randomized clamps are resolved per shot"),
    };
    for (i, &system) in purified.iter().enumerate() {
        let gate = GateOp::PairPrep { system, environment: env_base + i, beta: config.beta };
        state.apply_gate(&gate, &config.noise, rng)?;
    }
    Ok(state)
}

fn apply_schedule<R: Rng + ?Sized>(
    state: &mut QuantumState,
    cost: &CostHamiltonian,
    mixer: &[usize],
    schedule: &PulseSchedule,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<()> {
    for (&gamma, &nu) in schedule.gammas.iter().zip(&schedule.nus) {
        state.apply_cost_evolution(cost.as_z_hamiltonian(), gamma, noise, rng)?;
        state.apply_mixer_evolution(mixer, nu, noise, rng)?;
    }
    Ok(())
}

struct Circuit<'a> {
    model: &'a IsingModel,
    clamp: Clamp,
    config: &'a ThermalizeConfig,
    cost: CostHamiltonian,
    mixer: Vec<usize>,
    engine: Engine,
}

impl<'a> Circuit<'a> {
    fn new(model: &'a IsingModel, clamp: &Clamp, config: &'a ThermalizeConfig) -> Result<Self> {
        validate(model, clamp, config)?;
        let variant = clamp.variant();
        Ok(Self {
            model,
            clamp: clamp.normalized(),
            config,
            cost: model.cost_hamiltonian(variant),
            mixer: model.mixer(variant).qubits,
            engine: engine(model, clamp, config)?,
        })
    }

    fn run_density<R: Rng + ?Sized>(&self, schedule: &PulseSchedule, rng: &mut R) -> Result<QuantumState> {
        let mut state = QuantumState::from(initial_density(self.model, &self.clamp, self.config.beta)?);
        apply_schedule(&mut state, &self.cost, &self.mixer, schedule, &self.config.noise, rng)?;
        Ok(state)
    }

    /// One trajectory with the clamp already resolved to a non-randomized form.
    fn run_trajectory<R: Rng + ?Sized>(
        &self,
        clamp: &Clamp,
        schedule: &PulseSchedule,
        rng: &mut R,
    ) -> Result<QuantumState> {
        let mut state = initial_statevector(self.model, clamp, self.config, rng)?;
        apply_schedule(&mut state, &self.cost, &self.mixer, schedule, &self.config.noise, rng)?;
        Ok(state)
    }

    fn run<R: Rng + ?Sized>(&self, schedule: &PulseSchedule, rng: &mut R) -> Result<QuantumState> {
        match (self.engine, &self.clamp) {
            (Engine::Density, _) => self.run_density(schedule, rng),
            (Engine::Statevector, Clamp::Randomized(points)) => {
                let point = points[rng.gen_range(0..points.len())];
                self.run_trajectory(&Clamp::Fixed(point), schedule, rng)
            }
            (Engine::Statevector, clamp) => self.run_trajectory(clamp, schedule, rng),
        }
    }

    fn system_probabilities(&self, state: &QuantumState) -> Vec<f64> {
        state.marginal_probabilities(self.model.n_units())
    }

    /// `shots` measured system basis indices, as counts per index.
    fn sample<R: Rng + ?Sized>(
        &self,
        schedule: &PulseSchedule,
        shots: usize,
        rng: &mut R,
    ) -> Result<BTreeMap<usize, usize>> {
        let mut counts = BTreeMap::new();
        let mut record = |indices: Vec<usize>| {
            for i in indices {
                *counts.entry(i).or_insert(0) += 1;
            }
        };
        match (self.engine, &self.clamp) {
            // exact output distribution, so N samples from it are N independent shots
            (Engine::Density, _) => {
                let state = self.run_density(schedule, rng)?;
                record(sample_indices(&self.system_probabilities(&state), shots, rng)?);
            }
            (Engine::Statevector, clamp) if !self.config.noisy() => match clamp {
                Clamp::Randomized(points) => {
                    let mut per_point: Vec<(Bitstring, usize)> = Vec::new();
                    for _ in 0..shots {
                        let p = points[rng.gen_range(0..points.len())];
                        match per_point.iter_mut().find(|(q, _)| *q == p) {
                            Some((_, c)) => *c += 1,
                            None => per_point.push((p, 1)),
                        }
                    }
                    for (point, count) in per_point {
                        let state = self.run_trajectory(&Clamp::Fixed(point), schedule, rng)?;
                        record(sample_indices(&self.system_probabilities(&state), count, rng)?);
                    }
                }
                clamp => {
                    let state = self.run_trajectory(clamp, schedule, rng)?;
                    record(sample_indices(&self.system_probabilities(&state), shots, rng)?);
                }
            },
            (Engine::Statevector, _) => {
                for _ in 0..shots {
                    let state = self.run(schedule, rng)?;
                    record(sample_indices(&self.system_probabilities(&state), 1, rng)?);
                }
            }
        }
        Ok(counts)
    }

    fn expectations(&self, weights: impl Iterator<Item = (usize, f64)>) -> Expectations {
        let n = self.model.n_units();
        let couplings: Vec<ZTerm> =
            self.model.couplings().iter().map(|c| ZTerm::new(&[c.a, c.b], 1.0).expect("validated coupling")).collect();
        let mut z = vec![0.0; n];
        let mut zz = vec![0.0; couplings.len()];
        let mut energy = 0.0;
        for (index, w) in weights {
            for (j, zj) in z.iter_mut().enumerate() {
                *zj += if index >> j & 1 == 1 { -w } else { w };
            }
            for (t, v) in couplings.iter().zip(zz.iter_mut()) {
                *v += w * t.sign(index as u64);
            }
            energy += w * self.cost.energy_of_index(index as u64);
        }
        Expectations { z, zz, energy }
    }

    fn estimate<R: Rng + ?Sized>(&self, schedule: &PulseSchedule, rng: &mut R) -> Result<Expectations> {
        let shots = self.config.shots;
        let counts = self.sample(schedule, shots, rng)?;
        let n = shots as f64;
        Ok(self.expectations(counts.into_iter().map(|(i, c)| (i, c as f64 / n))))
    }

    fn exact_distribution(&self, schedule: &PulseSchedule) -> Result<Vec<f64>> {
        let n = self.model.n_units();
        let noisy_prep = self.config.noisy() && self.config.noise.noisy_preparation;
        // the density route never draws from the rng
        let mut rng = crate::rng::from_seed(0);
        if !noisy_prep && n <= MAX_DENSITY_QUBITS {
            let state = self.run_density(schedule, &mut rng)?;
            return Ok(self.system_probabilities(&state));
        }
        if self.config.noisy() {
            return Err(Error::RegisterTooLarge { requested: n, limit: MAX_DENSITY_QUBITS });
        }
        let points: Vec<Clamp> = match &self.clamp {
            Clamp::Randomized(points) => points.iter().map(|&p| Clamp::Fixed(p)).collect(),
            clamp => vec![clamp.clone()],
        };
        let mut probs = vec![0.0; 1 << n];
        let w = 1.0 / points.len() as f64;
        for clamp in &points {
            let state = self.run_trajectory(clamp, schedule, &mut rng)?;
            for (acc, p) in probs.iter_mut().zip(self.system_probabilities(&state)) {
                *acc += w * p;
            }
        }
        Ok(probs)
    }

    fn reduced_state(&self, schedule: &PulseSchedule) -> Result<DensityMatrix> {
        let mut rng = crate::rng::from_seed(0);
        if self.engine == Engine::Density {
            return match self.run_density(schedule, &mut rng)? {
                QuantumState::DensityMatrix(d) => Ok(d),
                QuantumState::StateVector(_) => unreachable!("density engine"),
            };
        }
        if self.config.noisy() {
            return Err(Error::WrongBackend("density-matrix"));
        }
        let system: Vec<usize> = (0..self.model.n_units()).collect();
        let points: Vec<Clamp> = match &self.clamp {
            Clamp::Randomized(points) => points.iter().map(|&p| Clamp::Fixed(p)).collect(),
            clamp => vec![clamp.clone()],
        };
        let parts = points
            .iter()
            .map(|clamp| match self.run_trajectory(clamp, schedule, &mut rng)? {
                QuantumState::StateVector(s) => s.reduced_density(&system),
                QuantumState::DensityMatrix(_) => unreachable!("statevector engine"),
            })
            .collect::<Result<Vec<_>>>()?;
        DensityMatrix::mixture(&parts)
    }
}

/// Prepare the initial state and apply the pulses once.
///
/// With the statevector backend this is a single trajectory: the state
/// covers system, environment and address qubits, noise errors are sampled,
/// and a randomized clamp picks one data point. With the density backend it
/// is the exact system state.
pub fn run_circuit<R: Rng + ?Sized>(
    model: &IsingModel,
    clamp: &Clamp,
    schedule: &PulseSchedule,
    config: &ThermalizeConfig,
    rng: &mut R,
) -> Result<QuantumState> {
    Circuit::new(model, clamp, config)?.run(schedule, rng)
}

/// Shot-based estimate of every `Z`/`ZZ` term and the cost energy, all
/// evaluated on the same measured bitstrings.
pub fn qee_estimate<R: Rng + ?Sized>(
    model: &IsingModel,
    clamp: &Clamp,
    schedule: &PulseSchedule,
    config: &ThermalizeConfig,
    rng: &mut R,
) -> Result<Expectations> {
    Circuit::new(model, clamp, config)?.estimate(schedule, rng)
}

/// Exact expectations of the circuit, averaged over noise and clamp randomness.
pub fn exact_expectations(
    model: &IsingModel,
    clamp: &Clamp,
    schedule: &PulseSchedule,
    config: &ThermalizeConfig,
) -> Result<Expectations> {
    let circuit = Circuit::new(model, clamp, config)?;
    let probs = circuit.exact_distribution(schedule)?;
    Ok(circuit.expectations(probs.into_iter().enumerate()))
}

/// Exact output distribution over system basis states.
pub fn exact_distribution(
    model: &IsingModel,
    clamp: &Clamp,
    schedule: &PulseSchedule,
    config: &ThermalizeConfig,
) -> Result<Vec<f64>> {
    Circuit::new(model, clamp, config)?.exact_distribution(schedule)
}

/// Exact reduced state of the system qubits after the circuit, with the
/// environment and address registers traced out.
///
/// Noisy circuits need the density backend.
pub fn reduced_system_state(
    model: &IsingModel,
    clamp: &Clamp,
    schedule: &PulseSchedule,
    config: &ThermalizeConfig,
) -> Result<DensityMatrix> {
    Circuit::new(model, clamp, config)?.reduced_state(schedule)
}

/// Optimise the pulse angles from a random start and re-measure the result.
pub fn thermalize<R: Rng + ?Sized>(
    model: &IsingModel,
    clamp: &Clamp,
    config: &ThermalizeConfig,
    rng: &mut R,
) -> Result<ThermalizerResult> {
    thermalize_from(model, clamp, config, None, rng)
}

/// [`thermalize`] starting from `start` instead of random angles.
pub fn thermalize_from<R: Rng + ?Sized>(
    model: &IsingModel,
    clamp: &Clamp,
    config: &ThermalizeConfig,
    start: Option<&PulseSchedule>,
    rng: &mut R,
) -> Result<ThermalizerResult> {
    let circuit = Circuit::new(model, clamp, config)?;
    let x0 = match start {
        Some(s) if s.pulses() == config.pulses => s.to_flat(),
        Some(s) => return Err(Error::WidthMismatch { expected: config.pulses, actual: s.pulses() }),
        None => PulseSchedule::random(config.pulses, rng).to_flat(),
    };
    let min = NelderMead::new(config.max_iters)
        .minimize(|x| Ok(circuit.estimate(&PulseSchedule::from_flat(x)?, rng)?.energy), &x0)?;
    let schedule = PulseSchedule::from_flat(&min.point)?;
    let expectations = circuit.estimate(&schedule, rng)?;
    Ok(ThermalizerResult {
        schedule,
        expectations,
        energy_trace: min.trace,
        initial_energy: min.initial_value,
        evaluations: min.evaluations + 1,
    })
}

#[cfg(test)]
mod tests;

//! Boltzmann machine training with QAOA-thermalized expectation values.
//!
//! Each epoch thermalizes the full model (unclamped) and the partial model
//! with the visibles clamped to data, then moves every weight by the
//! difference of the clamped and unclamped correlations.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::datagen::{DataDistribution, Dataset};
use crate::error::{Error, Result};
use crate::ising::IsingModel;
use crate::metrics::{kl_divergence, rbm_visible_marginal, update_error};
use crate::qaoa::{
    exact_expectations, qee_estimate, thermalize_from, Backend, Clamp, Expectations, PulseSchedule, ThermalizeConfig,
    ThermalizerResult,
};
use crate::qsim::NoiseModel;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClampMode {
    /// One thermalization per distinct data string.
    Regular,
    /// One thermalization; each shot clamps to a uniformly drawn data string.
    QrcClassical,
    /// One thermalization with the data loaded in superposition on an address register.
    QrcQram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub visible: usize,
    pub hidden: usize,
    pub beta: f64,
    pub pulses: usize,
    pub shots: usize,
    pub max_iters: usize,
    pub noise: NoiseModel,
    pub backend: Backend,
    pub epochs: usize,
    pub mode: ClampMode,
    pub learning_rate: f64,
    /// Initial weights and biases are drawn from `[-init_range, init_range]`.
    pub init_range: f64,
    /// Start each epoch's optimizer from the previous epoch's optimum.
    pub warm_start: bool,
    /// Clamp to a random subset of this many samples each epoch.
    pub minibatch: Option<usize>,
    pub max_address_qubits: usize,
    /// Also compute the exact expectations of every optimized circuit and
    /// record the squared error of the estimated update.
    pub track_update_error: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let t = ThermalizeConfig::default();
        Self {
            visible: 4,
            hidden: 2,
            beta: t.beta,
            pulses: t.pulses,
            shots: t.shots,
            max_iters: t.max_iters,
            noise: t.noise,
            backend: t.backend,
            epochs: 40,
            mode: ClampMode::QrcClassical,
            learning_rate: 1.0,
            init_range: 0.1,
            warm_start: false,
            minibatch: None,
            max_address_qubits: t.max_address_qubits,
            track_update_error: false,
        }
    }
}

impl TrainConfig {
    pub fn thermalize_config(&self) -> ThermalizeConfig {
        ThermalizeConfig {
            beta: self.beta,
            pulses: self.pulses,
            shots: self.shots,
            max_iters: self.max_iters,
            noise: self.noise,
            backend: self.backend,
            max_address_qubits: self.max_address_qubits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.thermalize_config().validate()?;
        if self.visible == 0 {
            return Err(Error::invalid("at least one visible unit is required"));
        }
        if self.visible + self.hidden > crate::ising::MAX_ENUMERATION_UNITS {
            return Err(Error::RegisterTooLarge {
                requested: self.visible + self.hidden,
                limit: crate::ising::MAX_ENUMERATION_UNITS,
            });
        }
        if !(self.learning_rate > 0.0) || self.learning_rate.is_infinite() {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.init_range >= 0.0) || self.init_range.is_infinite() {
            return Err(Error::invalid(format!("init range must be non-negative, got {}", self.init_range)));
        }
        if self.minibatch == Some(0) {
            return Err(Error::invalid("minibatch size must be at least 1"));
        }
        Ok(())
    }
}

/// Stream tags for [`rng::stream`].
const INIT: u64 = 0;
const UNCLAMPED: u64 = 1;
const CLAMPED: u64 = 2;
const BATCH: u64 = 3;

/// RBM with weights and biases drawn uniformly from `[-range, range]`.
pub fn init_weights<R: Rng + ?Sized>(visible: usize, hidden: usize, range: f64, rng: &mut R) -> Result<IsingModel> {
    let mut model = IsingModel::rbm(visible, hidden)?;
    let params: Vec<f64> =
        (0..model.parameters().len()).map(|_| if range > 0.0 { rng.gen_range(-range..=range) } else { 0.0 }).collect();
    model.set_parameters(&params)?;
    Ok(model)
}

/// An optimized clamped circuit and the weight of its data in the average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClampedCircuit {
    pub clamp: Clamp,
    pub weight: f64,
    pub schedule: PulseSchedule,
}

/// The optimized circuits of one epoch, enough to re-estimate its update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochCircuits {
    pub unclamped: PulseSchedule,
    pub clamped: Vec<ClampedCircuit>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClampedResult {
    /// Data-averaged expectations.
    pub expectations: Expectations,
    pub circuits: Vec<ClampedCircuit>,
}

pub fn unclamped_expectations<R: Rng + ?Sized>(
    model: &IsingModel,
    config: &ThermalizeConfig,
    start: Option<&PulseSchedule>,
    rng: &mut R,
) -> Result<ThermalizerResult> {
    thermalize_from(model, &Clamp::None, config, start, rng)
}

fn average(parts: &[(f64, &Expectations)]) -> Expectations {
    let (_, first) = parts[0];
    let mut avg = Expectations { z: vec![0.0; first.z.len()], zz: vec![0.0; first.zz.len()], energy: 0.0 };
    for (w, e) in parts {
        for (a, b) in avg.z.iter_mut().zip(&e.z) {
            *a += w * b;
        }
        for (a, b) in avg.zz.iter_mut().zip(&e.zz) {
            *a += w * b;
        }
        avg.energy += w * e.energy;
    }
    avg
}

fn check_data(model: &IsingModel, data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    if data.width() != model.visible().len() {
        return Err(Error::WidthMismatch { expected: model.visible().len(), actual: data.width() });
    }
    Ok(())
}

/// One thermalization per distinct data string, averaged with the strings'
/// multiplicities as weights. Each string gets its own rng stream derived
/// from a single draw on `rng`.
pub fn clamped_expectations_regular<R: Rng + ?Sized>(
    model: &IsingModel,
    data: &Dataset,
    config: &ThermalizeConfig,
    starts: Option<&[ClampedCircuit]>,
    rng: &mut R,
) -> Result<ClampedResult> {
    check_data(model, data)?;
    let base: u64 = rng.gen();
    let total = data.len() as f64;
    let mut results = Vec::new();
    let mut circuits = Vec::new();
    for (i, (point, count)) in data.distinct().into_iter().enumerate() {
        let clamp = Clamp::Fixed(point);
        let start = starts.and_then(|s| s.iter().find(|c| c.clamp == clamp)).map(|c| &c.schedule);
        let res = thermalize_from(model, &clamp, config, start, &mut rng::stream(base, &[i as u64]))?;
        let weight = count as f64 / total;
        circuits.push(ClampedCircuit { clamp, weight, schedule: res.schedule.clone() });
        results.push((weight, res.expectations));
    }
    let parts: Vec<(f64, &Expectations)> = results.iter().map(|(w, e)| (*w, e)).collect();
    Ok(ClampedResult { expectations: average(&parts), circuits })
}

/// A single thermalization over the whole dataset, clamped by per-shot
/// random choice or through a QRAM address register.
pub fn clamped_expectations_qrc<R: Rng + ?Sized>(
    model: &IsingModel,
    data: &Dataset,
    config: &ThermalizeConfig,
    mode: ClampMode,
    start: Option<&PulseSchedule>,
    rng: &mut R,
) -> Result<ClampedResult> {
    check_data(model, data)?;
    let points: Vec<Bitstring> = data.samples().to_vec();
    let clamp = match mode {
        ClampMode::QrcClassical => Clamp::Randomized(points),
        ClampMode::QrcQram => Clamp::Qram(points),
        ClampMode::Regular => return Err(Error::invalid("regular clamping is not a QRC mode")),
    };
    let res = thermalize_from(model, &clamp, config, start, rng)?;
    Ok(ClampedResult {
        expectations: res.expectations,
        circuits: vec![ClampedCircuit { clamp, weight: 1.0, schedule: res.schedule }],
    })
}

/// `eta (clamped - unclamped)` in the [`IsingModel::parameters`] layout.
pub fn weight_update(unclamped: &Expectations, clamped: &Expectations, learning_rate: f64) -> Result<Vec<f64>> {
    let u = unclamped.to_parameter_vector();
    let c = clamped.to_parameter_vector();
    if u.len() != c.len() || unclamped.z.len() != clamped.z.len() {
        return Err(Error::WidthMismatch { expected: u.len(), actual: c.len() });
    }
    Ok(c.iter().zip(&u).map(|(c, u)| learning_rate * (c - u)).collect())
}

pub fn apply_update(model: &mut IsingModel, delta: &[f64]) -> Result<()> {
    let params = model.parameters();
    if delta.len() != params.len() {
        return Err(Error::WidthMismatch { expected: params.len(), actual: delta.len() });
    }
    let next: Vec<f64> = params.iter().zip(delta).map(|(p, d)| p + d).collect();
    model.set_parameters(&next)
}

/// Re-estimate the update of frozen circuits with fresh shots.
pub fn estimate_update<R: Rng + ?Sized>(
    model: &IsingModel,
    circuits: &EpochCircuits,
    config: &ThermalizeConfig,
    learning_rate: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let unclamped = qee_estimate(model, &Clamp::None, &circuits.unclamped, config, rng)?;
    let clamped = circuits
        .clamped
        .iter()
        .map(|c| Ok((c.weight, qee_estimate(model, &c.clamp, &c.schedule, config, rng)?)))
        .collect::<Result<Vec<_>>>()?;
    let parts: Vec<(f64, &Expectations)> = clamped.iter().map(|(w, e)| (*w, e)).collect();
    weight_update(&unclamped, &average(&parts), learning_rate)
}

/// The update the frozen circuits would give with exact expectation values.
pub fn exact_update(
    model: &IsingModel,
    circuits: &EpochCircuits,
    config: &ThermalizeConfig,
    learning_rate: f64,
) -> Result<Vec<f64>> {
    let unclamped = exact_expectations(model, &Clamp::None, &circuits.unclamped, config)?;
    let clamped = circuits
        .clamped
        .iter()
        .map(|c| Ok((c.weight, exact_expectations(model, &c.clamp, &c.schedule, config)?)))
        .collect::<Result<Vec<_>>>()?;
    let parts: Vec<(f64, &Expectations)> = clamped.iter().map(|(w, e)| (*w, e)).collect();
    weight_update(&unclamped, &average(&parts), learning_rate)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Parameters after this epoch's update, in [`IsingModel::parameters`] layout.
    pub parameters: Vec<f64>,
    /// KL divergence from the target to the model's visible marginal at these parameters.
    pub kl: f64,
    /// Expectations that produced this epoch's update; absent for epoch 0.
    pub unclamped: Option<Expectations>,
    pub clamped: Option<Expectations>,
    pub circuits: Option<EpochCircuits>,
    pub update_error: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<EpochRecord>,
    /// Set when training stopped early on an error.
    pub aborted: Option<String>,
    /// Seconds spent per epoch. Ignored by serialization and equality, so
    /// that repeated runs compare and serialize identically.
    #[serde(skip)]
    pub wallclock: Vec<f64>,
}

impl PartialEq for History {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records && self.aborted == other.aborted
    }
}

impl History {
    pub fn kl_trace(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.kl).collect()
    }

    /// `(epoch, kl)` of the lowest KL.
    pub fn min_kl(&self) -> Option<(usize, f64)> {
        self.records.iter().map(|r| (r.epoch, r.kl)).min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn final_model(&self, config: &TrainConfig) -> Result<IsingModel> {
        let mut model = IsingModel::rbm(config.visible, config.hidden)?;
        if let Some(last) = self.records.last() {
            model.set_parameters(&last.parameters)?;
        }
        Ok(model)
    }
}

/// Everything one epoch computes before its update is applied.
pub struct EpochOutcome {
    pub unclamped: ThermalizerResult,
    pub clamped: ClampedResult,
    pub delta: Vec<f64>,
    pub update_error: Option<f64>,
}

/// Thermalize, clamp and compute the update for `model`, with randomness
/// taken from streams of `seed` tagged by `epoch`.
pub fn run_epoch(
    model: &IsingModel,
    data: &Dataset,
    config: &TrainConfig,
    previous: Option<&EpochCircuits>,
    epoch: usize,
    seed: u64,
) -> Result<EpochOutcome> {
    let tcfg = config.thermalize_config();
    let e = epoch as u64;
    let batch = match config.minibatch {
        Some(size) if size < data.len() => data.subsample(size, &mut rng::stream(seed, &[BATCH, e])),
        _ => data.clone(),
    };
    let warm = previous.filter(|_| config.warm_start);
    let unclamped =
        unclamped_expectations(model, &tcfg, warm.map(|c| &c.unclamped), &mut rng::stream(seed, &[UNCLAMPED, e]))?;
    let mut clamp_rng = rng::stream(seed, &[CLAMPED, e]);
    let clamped = match config.mode {
        ClampMode::Regular => {
            clamped_expectations_regular(model, &batch, &tcfg, warm.map(|c| c.clamped.as_slice()), &mut clamp_rng)?
        }
        mode => {
            let start = warm.and_then(|c| c.clamped.first()).map(|c| &c.schedule);
            clamped_expectations_qrc(model, &batch, &tcfg, mode, start, &mut clamp_rng)?
        }
    };
    let delta = weight_update(&unclamped.expectations, &clamped.expectations, config.learning_rate)?;
    let update_error = if config.track_update_error {
        let circuits = EpochCircuits { unclamped: unclamped.schedule.clone(), clamped: clamped.circuits.clone() };
        Some(update_error(&delta, &exact_update(model, &circuits, &tcfg, config.learning_rate)?)?)
    } else {
        None
    };
    Ok(EpochOutcome { unclamped, clamped, delta, update_error })
}

/// Train from random initial weights for `config.epochs` epochs, scoring
/// every epoch by `D(target || model marginal)`.
///
/// Invalid input is an error; a failure during training ends the run and is
/// reported in [`History::aborted`] alongside the epochs completed so far.
pub fn train(config: &TrainConfig, data: &Dataset, target: &DataDistribution, seed: u64) -> Result<History> {
    config.validate()?;
    let mut model = init_weights(config.visible, config.hidden, config.init_range, &mut rng::stream(seed, &[INIT]))?;
    check_data(&model, data)?;
    if target.width() != config.visible {
        return Err(Error::WidthMismatch { expected: config.visible, actual: target.width() });
    }
    let score = |m: &IsingModel| -> Result<f64> { kl_divergence(target, &rbm_visible_marginal(m, config.beta)?) };
    let mut history = History {
        records: vec![EpochRecord {
            epoch: 0,
            parameters: model.parameters(),
            kl: score(&model)?,
            unclamped: None,
            clamped: None,
            circuits: None,
            update_error: None,
        }],
        aborted: None,
        wallclock: vec![0.0],
    };
    let mut previous: Option<EpochCircuits> = None;
    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let step = run_epoch(&model, data, config, previous.as_ref(), epoch, seed).and_then(|out| {
            apply_update(&mut model, &out.delta)?;
            Ok((out, score(&model)?))
        });
        let (out, kl) = match step {
            Ok(v) => v,
            Err(e) => {
                history.aborted = Some(format!("epoch {epoch}: {e}"));
                break;
            }
        };
        let circuits = EpochCircuits { unclamped: out.unclamped.schedule, clamped: out.clamped.circuits };
        history.records.push(EpochRecord {
            epoch,
            parameters: model.parameters(),
            kl,
            unclamped: Some(out.unclamped.expectations),
            clamped: Some(out.clamped.expectations),
            circuits: Some(circuits.clone()),
            update_error: out.update_error,
        });
        history.wallclock.push(started.elapsed().as_secs_f64());
        previous = Some(circuits);
    }
    Ok(history)
}

#[cfg(test)]
mod tests;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use qabom_core::ising::{gibbs_oracle, pseudo_thermal_divergence};
use qabom_core::metrics::update_error;
use qabom_core::qabom::{estimate_update, exact_update, init_weights, run_epoch, train, EpochCircuits};
use qabom_core::qaoa::{exact_expectations, reduced_system_state, thermalize};
use qabom_core::{rng, Clamp, History, IsingModel, NoiseModel, PulseSchedule, ThermalizeConfig, Variant};

use crate::config::{DatagenJob, ExperimentConfig, ThermalizeJob};
use crate::output::{num, opt, Artifacts};
use crate::CliError;

/// Stream tags for sweep randomness.
const SWEEP_INIT: u64 = 10;
const SWEEP_SHOTS: u64 = 11;

struct Run {
    seed: u64,
    history: History,
    seconds: f64,
}

fn train_seeds(config: &ExperimentConfig) -> Result<Vec<Run>, CliError> {
    config
        .seeds()
        .into_par_iter()
        .map(|seed| {
            let started = Instant::now();
            let (data, target) = config.data.generate(seed).map_err(CliError::runtime)?;
            let history = train(&config.train, &data, &target, seed).map_err(CliError::runtime)?;
            Ok(Run { seed, history, seconds: started.elapsed().as_secs_f64() })
        })
        .collect()
}

fn history_doc(run: &Run) -> Value {
    json!({ "seed": run.seed, "history": run.history })
}

fn timing_doc(runs: &[Run]) -> Value {
    let rows: Vec<Value> = runs
        .iter()
        .map(|r| json!({ "seed": r.seed, "total_seconds": r.seconds, "epoch_seconds": r.history.wallclock }))
        .collect();
    json!({ "runs": rows })
}

fn kl_rows(prefix: &[String], run: &Run) -> Vec<Vec<String>> {
    run.history
        .records
        .iter()
        .map(|r| {
            let mut row = prefix.to_vec();
            row.extend([run.seed.to_string(), r.epoch.to_string(), num(r.kl), opt(r.update_error)]);
            row
        })
        .collect()
}

/// Train every replicate; writes `history_seed<S>.json`, `kl.csv` and `timing.json`.
pub fn cmd_train(config: &ExperimentConfig, out_dir: &Path) -> Result<(), CliError> {
    let out = Artifacts::new(out_dir, config)?;
    let runs = train_seeds(config)?;
    let mut rows = Vec::new();
    for run in &runs {
        out.json(&format!("history_seed{}.json", run.seed), history_doc(run))?;
        rows.extend(kl_rows(&[], run));
    }
    out.csv("kl.csv", &["seed", "epoch", "kl", "update_error"], &rows)?;
    out.text("timing.json", &format!("{:#}\n", timing_doc(&runs)))?;
    let mut failed = Vec::new();
    for run in &runs {
        let last = run.history.records.last().map(|r| r.kl).unwrap_or(f64::NAN);
        let best = run.history.min_kl().map(|(e, kl)| format!("min {kl:.6} at epoch {e}")).unwrap_or_default();
        println!("seed {}: final KL {last:.6} ({best})", run.seed);
        if let Some(msg) = &run.history.aborted {
            failed.push(format!("seed {}: {msg}", run.seed));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("training aborted ({})", failed.join("; "))))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    /// Depolarizing error probability.
    #[value(name = "noise_p")]
    NoiseP,
    /// QAOA depth.
    #[value(name = "pulses_P")]
    PulsesP,
    /// Measurements per expectation estimate.
    #[value(name = "shots_N")]
    ShotsN,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::NoiseP => "noise_p",
            Axis::PulsesP => "pulses_P",
            Axis::ShotsN => "shots_N",
        }
    }

    /// Config with the axis set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig, CliError> {
        let mut cfg = base.clone();
        let count = || {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(CliError::Config(format!("{} value must be a non-negative integer, got {value}", self.name())))
            }
        };
        match self {
            Axis::NoiseP => {
                cfg.train.noise = NoiseModel { p: value, ..cfg.train.noise };
            }
            Axis::PulsesP => cfg.train.pulses = count()?,
            Axis::ShotsN => cfg.train.shots = count()?,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Sweep one axis. Noise and depth run full training per value and seed and
/// report the minimum KL; shots re-estimate the update of one frozen epoch
/// and report its squared error.
pub fn cmd_sweep(config: &ExperimentConfig, axis: Axis, values: &[f64], out_dir: &Path) -> Result<(), CliError> {
    let configs = values.iter().map(|&v| axis.apply(config, v)).collect::<Result<Vec<_>, _>>()?;
    let provenance = json!({ "experiment": config, "axis": axis.name(), "values": values });
    let out = Artifacts::new(out_dir, &provenance)?;
    let (metric, per_value) = match axis {
        Axis::ShotsN => ("update_error", sweep_shots(config, &configs)?),
        _ => {
            let runs: Vec<Vec<Run>> = configs.iter().map(train_seeds).collect::<Result<_, _>>()?;
            let mut rows = Vec::new();
            let mut metrics = Vec::new();
            for (value, runs) in values.iter().zip(&runs) {
                for run in runs {
                    if let Some(msg) = &run.history.aborted {
                        return Err(CliError::Runtime(format!("{}={value}, seed {}: {msg}", axis.name(), run.seed)));
                    }
                    rows.extend(kl_rows(&[num(*value)], run));
                }
                metrics.push(runs.iter().filter_map(|r| r.history.min_kl().map(|m| m.1)).collect::<Vec<_>>());
            }
            out.csv("traces.csv", &[axis.name(), "seed", "epoch", "kl", "update_error"], &rows)?;
            let timing: Vec<Value> =
                values.iter().zip(&runs).map(|(v, r)| json!({ "value": v, "timing": timing_doc(r) })).collect();
            out.text("timing.json", &format!("{:#}\n", Value::Array(timing)))?;
            ("min_kl", metrics)
        }
    };
    let rows: Vec<Vec<String>> = values
        .iter()
        .zip(&per_value)
        .map(|(v, xs)| {
            let (mean, std) = mean_std(xs);
            println!("{}={v}: {metric} mean {mean:.6e} std {std:.6e} over {}", axis.name(), xs.len());
            vec![num(*v), metric.to_string(), num(mean), num(std), xs.len().to_string()]
        })
        .collect();
    out.csv("sweep.csv", &[axis.name(), "metric", "mean", "std", "count"], &rows)?;
    Ok(())
}

/// Update errors per shot count, on circuits optimized once with the base config.
fn sweep_shots(base: &ExperimentConfig, configs: &[ExperimentConfig]) -> Result<Vec<Vec<f64>>, CliError> {
    let cfg = &base.train;
    let (data, _) = base.data.generate(base.seed).map_err(CliError::runtime)?;
    let model = init_weights(cfg.visible, cfg.hidden, cfg.init_range, &mut rng::stream(base.seed, &[SWEEP_INIT]))
        .map_err(CliError::runtime)?;
    let frozen = run_epoch(&model, &data, cfg, None, 1, base.seed).map_err(CliError::runtime)?;
    let circuits = EpochCircuits { unclamped: frozen.unclamped.schedule, clamped: frozen.clamped.circuits };
    let exact =
        exact_update(&model, &circuits, &cfg.thermalize_config(), cfg.learning_rate).map_err(CliError::runtime)?;
    configs
        .iter()
        .map(|c| {
            let tcfg = c.train.thermalize_config();
            (0..base.replicates as u64)
                .into_par_iter()
                .map(|i| {
                    let mut r = rng::stream(base.seed, &[SWEEP_SHOTS, c.train.shots as u64, i]);
                    let est = estimate_update(&model, &circuits, &tcfg, cfg.learning_rate, &mut r)?;
                    update_error(&est, &exact)
                })
                .collect::<qabom_core::Result<Vec<f64>>>()
                .map_err(CliError::runtime)
        })
        .collect()
}

/// Write `dataset.txt` and `distribution.json`.
pub fn cmd_datagen(job: &DatagenJob, out_dir: &Path) -> Result<(), CliError> {
    job.data.validate().map_err(CliError::config)?;
    let out = Artifacts::new(out_dir, job)?;
    let (data, pmf) = job.data.generate(job.seed).map_err(CliError::runtime)?;
    let header = vec![crate::output::VERSION.to_string(), format!("config: {}", out.config())];
    out.text("dataset.txt", &data.to_text(&header))?;
    let pmf: Value = serde_json::from_str(&pmf.to_json().map_err(CliError::runtime)?)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    out.json("distribution.json", json!({ "distribution": pmf }))?;
    println!("wrote {} samples of width {} to {}", data.len(), data.width(), out.path("dataset.txt").display());
    Ok(())
}

fn divergence(model: &IsingModel, schedule: &PulseSchedule, cfg: &ThermalizeConfig, gibbs: &[f64]) -> Option<f64> {
    reduced_system_state(model, &Clamp::None, schedule, cfg)
        .and_then(|rho| rho.relative_entropy_to_diagonal(gibbs))
        .ok()
}

/// Thermalize a model and compare against its exact Gibbs state; writes
/// `report.json` and `trace.csv`.
pub fn cmd_thermalize(job: &ThermalizeJob, out_dir: &Path) -> Result<(), CliError> {
    job.validate()?;
    let out = Artifacts::new(out_dir, job)?;
    let cfg = &job.thermalize;
    let model = &job.model;
    let h = model.cost_hamiltonian(Variant::Full);
    let rt = CliError::runtime;
    let gibbs = gibbs_oracle(&h, cfg.beta).map_err(rt)?;
    let result = thermalize(model, &Clamp::None, cfg, &mut rng::from_seed(job.seed)).map_err(rt)?;
    let product = PulseSchedule::zeros(cfg.pulses);
    let initial = exact_expectations(model, &Clamp::None, &product, cfg).map_err(rt)?;
    let fin = exact_expectations(model, &Clamp::None, &result.schedule, cfg).map_err(rt)?;
    let bound = pseudo_thermal_divergence(&h, cfg.beta).map_err(rt)?;
    let gibbs_energy = gibbs.expect_energy(&h);
    let d_init = divergence(model, &product, cfg, gibbs.probs());
    let d_final = divergence(model, &result.schedule, cfg, gibbs.probs());
    let report = json!({
        "seed": job.seed,
        "schedule": result.schedule,
        "evaluations": result.evaluations,
        "energy": {
            "initial_exact": initial.energy,
            "initial_estimated": result.initial_energy,
            "final_exact": fin.energy,
            "final_estimated": result.expectations.energy,
            "gibbs": gibbs_energy,
        },
        "divergence_to_gibbs": {
            "initial": d_init,
            "final": d_final,
            "best_reachable": bound.direct,
        },
        "final_expectations": result.expectations,
        "gibbs_expectations": {
            "z": (0..model.n_units()).map(|j| gibbs.expect_z(j)).collect::<Vec<_>>(),
            "zz": model.couplings().iter().map(|c| gibbs.expect_zz(c.a, c.b)).collect::<Vec<_>>(),
        },
    });
    out.json("report.json", report)?;
    let rows: Vec<Vec<String>> =
        result.energy_trace.iter().enumerate().map(|(i, e)| vec![i.to_string(), num(*e)]).collect();
    out.csv("trace.csv", &["iteration", "best_energy"], &rows)?;
    println!(
        "energy: initial {:.6}, final {:.6}, Gibbs {gibbs_energy:.6}; divergence to Gibbs: initial {}, final {}",
        initial.energy,
        fin.energy,
        opt(d_init),
        opt(d_final)
    );
    Ok(())
}

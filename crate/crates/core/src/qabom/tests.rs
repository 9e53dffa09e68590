use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::datagen::coded_bernoulli;
use crate::ising::{gibbs_oracle_clamped, Coupling};
use crate::qaoa::exact_distribution;

fn bits(s: &str) -> Bitstring {
    s.parse().unwrap()
}

fn small_config() -> ThermalizeConfig {
    ThermalizeConfig { max_iters: 20, shots: 200, ..ThermalizeConfig::default() }
}

fn dataset(strings: &[&str]) -> Dataset {
    let samples: Vec<Bitstring> = strings.iter().map(|s| bits(s)).collect();
    Dataset::new(samples[0].width(), samples).unwrap()
}

#[test]
fn init_weights_contract() {
    let a = init_weights(4, 2, 0.1, &mut rng::from_seed(1)).unwrap();
    let b = init_weights(4, 2, 0.1, &mut rng::from_seed(1)).unwrap();
    assert_eq!(a, b);
    assert!(a.parameters().iter().all(|p| p.abs() <= 0.1));
    assert_eq!(a.parameters().len(), 8 + 6);
    let sets: Vec<Vec<f64>> =
        (0..10).map(|s| init_weights(4, 2, 0.1, &mut rng::from_seed(s)).unwrap().parameters()).collect();
    for i in 0..10 {
        for j in i + 1..10 {
            assert_ne!(sets[i], sets[j]);
        }
    }
}

#[test]
fn zero_weights_only_rotate_the_initial_state() {
    // with a zero cost every schedule has energy 0, so the optimizer keeps
    // its random start and the mixer rotates each spin by 2 * sum(nu)
    let beta = 1.0f64;
    let model = IsingModel::rbm(2, 1).unwrap();
    let shots = 20_000;
    let cfg = ThermalizeConfig { shots, max_iters: 5, ..ThermalizeConfig::default() };
    let tol = 4.0 / (shots as f64).sqrt();
    for seed in 0..3 {
        let res = unclamped_expectations(&model, &cfg, None, &mut rng::from_seed(seed)).unwrap();
        let c = (2.0 * res.schedule.nus.iter().sum::<f64>()).cos();
        for z in &res.expectations.z {
            assert!((z + beta.tanh() * c).abs() < tol, "{z}");
        }
        for zz in &res.expectations.zz {
            assert!((zz - (beta.tanh() * c).powi(2)).abs() < tol, "{zz}");
        }
        assert!(res.expectations.to_parameter_vector().iter().all(|v| v.abs() <= 1.0));
    }
    let p0 = ThermalizeConfig { pulses: 0, max_iters: 1, ..cfg };
    let res = unclamped_expectations(&model, &p0, None, &mut rng::from_seed(0)).unwrap();
    assert!((res.expectations.z[0] + beta.tanh()).abs() < tol);
}

#[test]
fn strong_ferromagnetic_coupling_gives_aligned_spins() {
    let model =
        IsingModel::new(2, vec![0], vec![1], vec![Coupling { a: 0, b: 1, weight: 5.0 }], vec![0.0, 0.0]).unwrap();
    let cfg = ThermalizeConfig { max_iters: 100, ..ThermalizeConfig::default() };
    for seed in 0..3 {
        let res = unclamped_expectations(&model, &cfg, None, &mut rng::from_seed(seed)).unwrap();
        assert!(res.expectations.zz[0] > 0.0, "{}", res.expectations.zz[0]);
    }
}

#[test]
fn regular_clamping_reproduces_visible_data_means() {
    let model = init_weights(2, 1, 0.5, &mut rng::from_seed(3)).unwrap();
    let data = dataset(&["10", "11", "10", "00"]);
    let res = clamped_expectations_regular(&model, &data, &small_config(), None, &mut rng::from_seed(0)).unwrap();
    assert_eq!(res.circuits.len(), 3);
    assert_eq!(res.circuits.iter().map(|c| c.weight).sum::<f64>(), 1.0);
    for k in 0..2 {
        let mean = data.samples().iter().map(|d| d.spin(k)).sum::<f64>() / 4.0;
        assert!((res.expectations.z[k] - mean).abs() < 1e-15);
    }
}

#[test]
fn regular_clamping_on_one_string_is_one_thermalization() {
    let model = init_weights(2, 1, 0.5, &mut rng::from_seed(3)).unwrap();
    let cfg = small_config();
    let res = clamped_expectations_regular(&model, &dataset(&["01"]), &cfg, None, &mut rng::from_seed(9)).unwrap();
    let base: u64 = rng::from_seed(9).gen();
    let single =
        crate::qaoa::thermalize(&model, &Clamp::Fixed(bits("01")), &cfg, &mut rng::stream(base, &[0])).unwrap();
    assert_eq!(res.expectations, single.expectations);
}

#[test]
fn clamped_correlation_tracks_the_conditional_gibbs_state() {
    let mut model = IsingModel::rbm(2, 1).unwrap();
    model.set_parameters(&[0.4, -0.3, 0.0, 0.0, 0.2]).unwrap();
    let beta = 1.0;
    let shots = 20_000;
    let cfg = ThermalizeConfig { shots, beta, ..ThermalizeConfig::default() };
    let point = bits("10");
    let res = clamped_expectations_regular(&model, &dataset(&["10"]), &cfg, None, &mut rng::from_seed(2)).unwrap();
    let gibbs = gibbs_oracle_clamped(&model, beta, &point).unwrap();
    let exact = exact_expectations(&model, &Clamp::Fixed(point), &res.circuits[0].schedule, &cfg).unwrap();
    for (k, c) in model.couplings().iter().enumerate() {
        let oracle = gibbs.expect_zz(c.a, c.b);
        let gap = (exact.zz[k] - oracle).abs();
        assert!((res.expectations.zz[k] - oracle).abs() <= 3.0 / (shots as f64).sqrt() + gap);
    }
}

#[test]
fn qrc_on_one_string_matches_regular_clamping() {
    let model = init_weights(2, 2, 0.5, &mut rng::from_seed(4)).unwrap();
    let schedule = PulseSchedule::random(3, &mut rng::from_seed(1));
    let cfg = ThermalizeConfig { backend: Backend::Trajectory, ..small_config() };
    let circuits = |clamp: Clamp| EpochCircuits {
        unclamped: schedule.clone(),
        clamped: vec![ClampedCircuit { clamp, weight: 1.0, schedule: schedule.clone() }],
    };
    let regular =
        estimate_update(&model, &circuits(Clamp::Fixed(bits("11"))), &cfg, 1.0, &mut rng::from_seed(5)).unwrap();
    for clamp in [Clamp::Randomized(vec![bits("11"); 4]), Clamp::Qram(vec![bits("11")])] {
        let qrc = estimate_update(&model, &circuits(clamp), &cfg, 1.0, &mut rng::from_seed(5)).unwrap();
        assert_eq!(qrc, regular);
    }
}

#[test]
fn classical_qrc_visible_means_follow_the_data() {
    let model = init_weights(2, 1, 0.5, &mut rng::from_seed(3)).unwrap();
    let data = dataset(&["10", "11", "10", "00"]);
    let shots = 4000;
    let cfg = ThermalizeConfig { shots, max_iters: 10, ..ThermalizeConfig::default() };
    let res =
        clamped_expectations_qrc(&model, &data, &cfg, ClampMode::QrcClassical, None, &mut rng::from_seed(0)).unwrap();
    for k in 0..2 {
        let mean = data.samples().iter().map(|d| d.spin(k)).sum::<f64>() / 4.0;
        assert!((res.expectations.z[k] - mean).abs() < 3.0 / (shots as f64).sqrt());
    }
    assert!(clamped_expectations_qrc(&model, &data, &cfg, ClampMode::Regular, None, &mut rng::from_seed(0)).is_err());
}

#[test]
fn qram_and_classical_clamping_measure_the_same_distribution() {
    let model = init_weights(2, 1, 0.8, &mut rng::from_seed(6)).unwrap();
    let schedule = PulseSchedule::random(3, &mut rng::from_seed(2));
    let points = vec![bits("10"), bits("01")];
    let cfg = ThermalizeConfig::default();
    let qram = exact_distribution(&model, &Clamp::Qram(points.clone()), &schedule, &cfg).unwrap();
    let classical = exact_distribution(&model, &Clamp::Randomized(points), &schedule, &cfg).unwrap();
    for (a, b) in qram.iter().zip(&classical) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn weight_update_examples() {
    let u = Expectations { z: vec![0.1, -0.2], zz: vec![0.3], energy: 0.0 };
    assert!(weight_update(&u, &u, 1.0).unwrap().iter().all(|d| *d == 0.0));
    let c = Expectations { z: vec![0.1, -0.2], zz: vec![0.8], energy: 0.0 };
    let d = weight_update(&u, &c, 1.0).unwrap();
    assert!((d[0] - 0.5).abs() < 1e-15);
    let short = Expectations { z: vec![0.1], zz: vec![0.8], energy: 0.0 };
    assert!(weight_update(&u, &short, 1.0).is_err());

    let mut m = IsingModel::new(2, vec![0], vec![1], vec![Coupling { a: 0, b: 1, weight: 0.1 }], vec![0.0; 2]).unwrap();
    apply_update(&mut m, &d).unwrap();
    assert!((m.couplings()[0].weight - 0.6).abs() < 1e-15);
    assert!(apply_update(&mut m, &d[..2]).is_err());
}

#[test]
fn data_pushes_the_visible_bias_towards_the_data() {
    // data forces z_v = +1; unclamped <Z_v> sits below +1
    let model = IsingModel::new(2, vec![0], vec![1], vec![Coupling { a: 0, b: 1, weight: 0.0 }], vec![0.0; 2]).unwrap();
    let cfg = small_config();
    let data = dataset(&["0"]);
    let mut mean = 0.0;
    for seed in 0..5 {
        let u = unclamped_expectations(&model, &cfg, None, &mut rng::from_seed(seed)).unwrap();
        let c = clamped_expectations_regular(&model, &data, &cfg, None, &mut rng::from_seed(seed)).unwrap();
        let d = weight_update(&u.expectations, &c.expectations, 1.0).unwrap();
        mean += d[1] / 5.0;
    }
    assert!(mean > 0.0);
}

fn coded_target() -> (Dataset, DataDistribution) {
    coded_bernoulli(2, 1, 0.6, 0.025, 20, &mut rng::from_seed(0)).unwrap()
}

fn tiny_train_config() -> TrainConfig {
    TrainConfig { visible: 2, hidden: 1, shots: 100, max_iters: 10, epochs: 2, ..TrainConfig::default() }
}

#[test]
fn zero_epochs_keep_the_initial_weights() {
    let (data, target) = coded_target();
    let cfg = TrainConfig { epochs: 0, ..tiny_train_config() };
    let h = train(&cfg, &data, &target, 5).unwrap();
    assert_eq!(h.records.len(), 1);
    assert_eq!(h.records[0].parameters, init_weights(2, 1, 0.1, &mut rng::stream(5, &[INIT])).unwrap().parameters());
    assert!(h.records[0].unclamped.is_none());
    assert!(h.aborted.is_none());
}

#[test]
fn training_is_deterministic_per_seed() {
    let (data, target) = coded_target();
    for mode in [ClampMode::Regular, ClampMode::QrcClassical, ClampMode::QrcQram] {
        let cfg = TrainConfig { mode, track_update_error: true, ..tiny_train_config() };
        let a = train(&cfg, &data, &target, 11).unwrap();
        let b = train(&cfg, &data, &target, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.records.len(), 3);
        assert!(a.records[1..].iter().all(|r| r.update_error.unwrap() >= 0.0));
        let c = train(&cfg, &data, &target, 12).unwrap();
        assert_ne!(a.records[1].parameters, c.records[1].parameters);
    }
}

#[test]
fn records_chain_updates() {
    let (data, target) = coded_target();
    let cfg = TrainConfig { learning_rate: 0.5, ..tiny_train_config() };
    let h = train(&cfg, &data, &target, 3).unwrap();
    for w in h.records.windows(2) {
        let r = &w[1];
        let d = weight_update(r.unclamped.as_ref().unwrap(), r.clamped.as_ref().unwrap(), 0.5).unwrap();
        for ((prev, next), d) in w[0].parameters.iter().zip(&r.parameters).zip(d) {
            assert!((prev + d - next).abs() < 1e-15);
        }
    }
    let m = h.final_model(&cfg).unwrap();
    let kl = kl_divergence(&target, &rbm_visible_marginal(&m, cfg.beta).unwrap()).unwrap();
    assert_eq!(kl, h.records.last().unwrap().kl);
    assert_eq!(h.wallclock.len(), h.records.len());
}

#[test]
fn runtime_failure_keeps_the_partial_history() {
    let (data, target) = coded_target();
    let cfg = TrainConfig { mode: ClampMode::QrcQram, backend: Backend::DensityMatrix, ..tiny_train_config() };
    let h = train(&cfg, &data, &target, 1).unwrap();
    assert_eq!(h.records.len(), 1);
    assert!(h.aborted.as_deref().unwrap().starts_with("epoch 1"));
}

#[test]
fn invalid_configs_are_rejected_up_front() {
    let (data, target) = coded_target();
    for cfg in [
        TrainConfig { learning_rate: 0.0, ..tiny_train_config() },
        TrainConfig { minibatch: Some(0), ..tiny_train_config() },
        TrainConfig { visible: 3, ..tiny_train_config() },
        TrainConfig { shots: 0, ..tiny_train_config() },
    ] {
        assert!(train(&cfg, &data, &target, 0).is_err());
    }
}

#[test]
fn minibatches_change_the_clamped_average() {
    let (data, target) = coded_target();
    let full = train(&tiny_train_config(), &data, &target, 2).unwrap();
    let batched = train(&TrainConfig { minibatch: Some(3), ..tiny_train_config() }, &data, &target, 2).unwrap();
    assert_ne!(full.records[1].clamped, batched.records[1].clamped);
}

#[test]
fn update_error_shrinks_with_shots() {
    let (data, _) = coded_target();
    let model = init_weights(2, 1, 0.5, &mut rng::from_seed(1)).unwrap();
    let cfg = TrainConfig { mode: ClampMode::QrcClassical, ..tiny_train_config() };
    let out = run_epoch(&model, &data, &cfg, None, 1, 0).unwrap();
    let circuits = EpochCircuits { unclamped: out.unclamped.schedule, clamped: out.clamped.circuits };
    let mean_error = |shots: usize| {
        let tcfg = ThermalizeConfig { shots, ..cfg.thermalize_config() };
        let exact = exact_update(&model, &circuits, &tcfg, 1.0).unwrap();
        (0..20u64)
            .map(|s| {
                let est = estimate_update(&model, &circuits, &tcfg, 1.0, &mut rng::from_seed(s)).unwrap();
                update_error(&est, &exact).unwrap()
            })
            .sum::<f64>()
            / 20.0
    };
    assert!(mean_error(2000) < mean_error(200));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn update_is_antisymmetric(
        z1 in prop::collection::vec(-1.0f64..1.0, 3),
        z2 in prop::collection::vec(-1.0f64..1.0, 3),
        zz1 in prop::collection::vec(-1.0f64..1.0, 2),
        zz2 in prop::collection::vec(-1.0f64..1.0, 2),
        eta in 0.01f64..2.0,
    ) {
        let a = Expectations { z: z1, zz: zz1, energy: 0.0 };
        let b = Expectations { z: z2, zz: zz2, energy: 0.0 };
        let ab = weight_update(&a, &b, eta).unwrap();
        let ba = weight_update(&b, &a, eta).unwrap();
        prop_assert!(ab.iter().zip(&ba).all(|(x, y)| x == &-y));
    }
}

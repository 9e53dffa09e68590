use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::ising::{gibbs_oracle, pseudo_thermal_spectrum, Coupling};
use crate::qsim::prepare_purified_thermal;
use crate::rng;

fn bits(s: &str) -> Bitstring {
    s.parse().unwrap()
}

fn single_unit(bias: f64) -> IsingModel {
    IsingModel::new(1, vec![0], vec![], vec![], vec![bias]).unwrap()
}

fn ferromagnet() -> IsingModel {
    IsingModel::new(2, vec![0, 1], vec![], vec![Coupling { a: 0, b: 1, weight: 1.0 }], vec![0.0, 0.0]).unwrap()
}

fn rbm(nv: usize, nh: usize, seed: u64) -> IsingModel {
    let mut m = IsingModel::rbm(nv, nh).unwrap();
    let mut r = rng::from_seed(seed);
    let p: Vec<f64> = (0..m.parameters().len()).map(|_| r.gen_range(-1.0..1.0)).collect();
    m.set_parameters(&p).unwrap();
    m
}

fn config(backend: Backend) -> ThermalizeConfig {
    ThermalizeConfig { backend, ..ThermalizeConfig::default() }
}

fn sched(flat: &[f64]) -> PulseSchedule {
    PulseSchedule::from_flat(flat).unwrap()
}

#[test]
fn schedule_flat_layout() {
    let s = sched(&[0.1, 0.2, 0.3, 0.4]);
    assert_eq!(s.gammas, vec![0.1, 0.3]);
    assert_eq!(s.nus, vec![0.2, 0.4]);
    assert_eq!(s.to_flat(), vec![0.1, 0.2, 0.3, 0.4]);
    assert!(PulseSchedule::from_flat(&[0.1]).is_err());
    assert!(PulseSchedule::new(vec![0.1], vec![]).is_err());
    let r = PulseSchedule::random(3, &mut rng::from_seed(1));
    assert!(r.to_flat().iter().all(|a| (0.0..TAU).contains(a)));
}

#[test]
fn address_register_size() {
    assert_eq!(address_qubits(1), 0);
    assert_eq!(address_qubits(2), 1);
    assert_eq!(address_qubits(3), 2);
    assert_eq!(address_qubits(16), 4);
    assert_eq!(address_qubits(17), 5);
}

#[test]
fn empty_and_zero_schedules_leave_the_initial_state() {
    let m = rbm(2, 1, 4);
    let cfg = config(Backend::Trajectory);
    let mut r = rng::from_seed(0);
    let initial = QuantumState::from(prepare_purified_thermal(3, 1.0).unwrap());
    let s0 = run_circuit(&m, &Clamp::None, &PulseSchedule::zeros(0), &cfg, &mut r).unwrap();
    assert_eq!(s0, initial);
    let s = run_circuit(&m, &Clamp::None, &PulseSchedule::zeros(3), &cfg, &mut r).unwrap();
    let diff = s
        .as_statevector()
        .unwrap()
        .amplitudes()
        .iter()
        .zip(initial.as_statevector().unwrap().amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(diff < 1e-14);
}

type Dense = Vec<Vec<C64>>;

fn kron(a: &Dense, b: &Dense) -> Dense {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![C64::new(0.0, 0.0); n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn apply(m: &Dense, v: &[C64]) -> Vec<C64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

#[test]
fn one_qubit_circuit_matches_dense_oracle() {
    let beta = 1.0f64;
    let (gamma, nu) = (0.3f64, 0.7f64);
    let m = single_unit(1.0);
    let cfg = ThermalizeConfig { beta, ..config(Backend::Trajectory) };
    let got = run_circuit(&m, &Clamp::None, &sched(&[gamma, nu]), &cfg, &mut rng::from_seed(0)).unwrap();

    // Basis |env sys>, Kronecker order env (x) sys. Purified pair:
    // sqrt(p0)|00> + sqrt(p1)|11> with p1 = e^beta / (2 cosh beta).
    let p1 = beta.exp() / (2.0 * beta.cosh());
    let zero = C64::new(0.0, 0.0);
    let psi = vec![C64::new((1.0 - p1).sqrt(), 0.0), zero, zero, C64::new(p1.sqrt(), 0.0)];
    let id: Dense = vec![vec![C64::new(1.0, 0.0), zero], vec![zero, C64::new(1.0, 0.0)]];
    // exp(-i gamma H) with H = -Z
    let cost: Dense = vec![vec![C64::from_polar(1.0, gamma), zero], vec![zero, C64::from_polar(1.0, -gamma)]];
    // exp(-i nu X) = cos(nu) I - i sin(nu) X
    let (c, s) = (C64::new(nu.cos(), 0.0), C64::new(0.0, -nu.sin()));
    let mixer: Dense = vec![vec![c, s], vec![s, c]];
    let expected = apply(&kron(&id, &mixer), &apply(&kron(&id, &cost), &psi));
    let amps = got.as_statevector().unwrap().amplitudes();
    for (a, b) in amps.iter().zip(&expected) {
        assert!((a - b).norm() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn qee_on_an_eigenstate_is_exact() {
    // two clamped visibles in |00>, H_partial = -Z0 Z1
    let m = ferromagnet();
    for backend in [Backend::Trajectory, Backend::DensityMatrix] {
        for shots in [1, 7, 500] {
            let cfg = ThermalizeConfig { shots, ..config(backend) };
            let e =
                qee_estimate(&m, &Clamp::Fixed(bits("00")), &sched(&[0.4, 1.1]), &cfg, &mut rng::from_seed(2)).unwrap();
            assert_eq!(e.energy, -1.0);
            assert_eq!(e.zz, vec![1.0]);
            assert_eq!(e.z, vec![1.0, 1.0]);
        }
    }
}

#[test]
fn qee_of_zero_hamiltonian_is_zero() {
    let m = IsingModel::rbm(2, 1).unwrap();
    let cfg = ThermalizeConfig { shots: 50, ..config(Backend::Auto) };
    for seed in 0..5 {
        let e = qee_estimate(&m, &Clamp::None, &sched(&[0.3, 0.8, 1.0, 2.0]), &cfg, &mut rng::from_seed(seed)).unwrap();
        assert_eq!(e.energy, 0.0);
    }
}

#[test]
fn qee_converges_to_the_exact_expectation() {
    let m = rbm(1, 1, 9);
    let s = sched(&[0.7, 0.4, 1.9, 2.5]);
    let shots = 100_000;
    for backend in [Backend::Trajectory, Backend::DensityMatrix] {
        let cfg = ThermalizeConfig { shots, ..config(backend) };
        let exact = exact_expectations(&m, &Clamp::None, &s, &cfg).unwrap();
        let est = qee_estimate(&m, &Clamp::None, &s, &cfg, &mut rng::from_seed(11)).unwrap();
        let bound = 3.0 / (shots as f64).sqrt();
        for (a, b) in est.to_parameter_vector().iter().zip(exact.to_parameter_vector()) {
            assert!((a - b).abs() < bound, "{backend:?}: {a} vs {b}");
        }
    }
}

#[test]
fn noisy_trajectories_match_the_exact_channel() {
    let m = rbm(1, 1, 5);
    let s = sched(&[0.9, 0.3, 1.2, 0.6]);
    let noise = NoiseModel::depolarizing(0.05).unwrap();
    let shots = 20_000;
    let traj = ThermalizeConfig { shots, noise, ..config(Backend::Trajectory) };
    let dens = ThermalizeConfig { shots, noise, ..config(Backend::DensityMatrix) };
    let exact = exact_expectations(&m, &Clamp::None, &s, &dens).unwrap();
    let est = qee_estimate(&m, &Clamp::None, &s, &traj, &mut rng::from_seed(3)).unwrap();
    let bound = 4.0 / (shots as f64).sqrt();
    for (a, b) in est.to_parameter_vector().iter().zip(exact.to_parameter_vector()) {
        assert!((a - b).abs() < bound, "{a} vs {b}");
    }
    // noise pulls correlations towards zero
    let clean = exact_expectations(&m, &Clamp::None, &s, &config(Backend::DensityMatrix)).unwrap();
    assert!(exact.zz[0].abs() < clean.zz[0].abs());
}

#[test]
fn density_and_statevector_reduced_states_agree() {
    let m = rbm(2, 1, 21);
    let s = sched(&[0.5, 1.5, 2.0, 0.1, 1.0, 0.7]);
    for clamp in [Clamp::None, Clamp::Fixed(bits("10")), Clamp::Randomized(vec![bits("10"), bits("01"), bits("10")])] {
        let a = reduced_system_state(&m, &clamp, &s, &config(Backend::Trajectory)).unwrap();
        let b = reduced_system_state(&m, &clamp, &s, &config(Backend::DensityMatrix)).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12, "{clamp:?}");
    }
}

#[test]
fn qram_and_randomized_clamps_give_the_same_system_state() {
    let m = rbm(2, 1, 8);
    let s = sched(&[0.5, 1.5, 2.0, 0.1, 1.0, 0.7]);
    let data = vec![bits("10"), bits("11"), bits("00")];
    let qram = reduced_system_state(&m, &Clamp::Qram(data.clone()), &s, &config(Backend::Auto)).unwrap();
    let classical = reduced_system_state(&m, &Clamp::Randomized(data), &s, &config(Backend::Auto)).unwrap();
    assert!(qram.max_abs_diff(&classical) < 1e-12);
}

#[test]
fn randomized_over_one_point_is_fixed() {
    let m = rbm(2, 2, 13);
    let s = sched(&[0.2, 0.9, 1.7, 2.2]);
    for backend in [Backend::Trajectory, Backend::DensityMatrix] {
        for p in [0.0, 0.02] {
            let cfg = ThermalizeConfig { shots: 300, noise: NoiseModel::depolarizing(p).unwrap(), ..config(backend) };
            let fixed = qee_estimate(&m, &Clamp::Fixed(bits("01")), &s, &cfg, &mut rng::from_seed(4)).unwrap();
            let rand =
                qee_estimate(&m, &Clamp::Randomized(vec![bits("01"); 3]), &s, &cfg, &mut rng::from_seed(4)).unwrap();
            assert_eq!(fixed, rand);
        }
    }
}

#[test]
fn randomized_clamp_visible_means_follow_the_data() {
    let m = rbm(2, 1, 3);
    let data = vec![bits("10"), bits("11"), bits("00"), bits("10")];
    let shots = 4000;
    let cfg = ThermalizeConfig { shots, ..config(Backend::Trajectory) };
    let e =
        qee_estimate(&m, &Clamp::Randomized(data.clone()), &sched(&[0.4, 0.3]), &cfg, &mut rng::from_seed(6)).unwrap();
    for k in 0..2 {
        let mean = data.iter().map(|d| d.spin(k)).sum::<f64>() / data.len() as f64;
        assert!((e.z[k] - mean).abs() < 3.0 / (shots as f64).sqrt());
    }
}

#[test]
fn clamped_circuits_leave_visibles_alone() {
    let m = rbm(3, 2, 1);
    let clamp = bits("101");
    let s = sched(&[0.6, 1.1, 2.3, 0.4, 1.9, 2.8]);
    for backend in [Backend::Trajectory, Backend::DensityMatrix] {
        let e = exact_expectations(&m, &Clamp::Fixed(clamp), &s, &config(backend)).unwrap();
        for k in 0..3 {
            assert!((e.z[k] - clamp.spin(k)).abs() < 1e-12);
        }
        let est = qee_estimate(&m, &Clamp::Fixed(clamp), &s, &config(backend), &mut rng::from_seed(0)).unwrap();
        for k in 0..3 {
            assert_eq!(est.z[k], clamp.spin(k));
        }
    }
}

#[test]
fn validation() {
    let m = rbm(2, 1, 0);
    let cfg = config(Backend::Auto);
    let s = PulseSchedule::zeros(1);
    let mut r = rng::from_seed(0);
    assert!(matches!(qee_estimate(&m, &Clamp::Fixed(bits("1")), &s, &cfg, &mut r), Err(Error::WidthMismatch { .. })));
    assert!(qee_estimate(&m, &Clamp::Randomized(vec![]), &s, &cfg, &mut r).is_err());
    let small = ThermalizeConfig { max_address_qubits: 1, ..cfg.clone() };
    assert!(matches!(
        qee_estimate(&m, &Clamp::Qram(vec![bits("00"), bits("01"), bits("10")]), &s, &small, &mut r),
        Err(Error::RegisterTooLarge { .. })
    ));
    let dm = config(Backend::DensityMatrix);
    assert!(qee_estimate(&m, &Clamp::Qram(vec![bits("00")]), &s, &dm, &mut r).is_err());
    for bad in [
        ThermalizeConfig { shots: 0, ..cfg.clone() },
        ThermalizeConfig { max_iters: 0, ..cfg.clone() },
        ThermalizeConfig { beta: -1.0, ..cfg.clone() },
    ] {
        assert!(thermalize(&m, &Clamp::None, &bad, &mut r).is_err());
    }
    let noisy = ThermalizeConfig { noise: NoiseModel::depolarizing(0.01).unwrap(), ..config(Backend::Trajectory) };
    assert!(matches!(reduced_system_state(&m, &Clamp::None, &s, &noisy), Err(Error::WrongBackend(_))));
}

#[test]
fn zero_pulse_thermalization_reports_the_initial_state() {
    let beta = 1.0f64;
    let m = rbm(2, 1, 2);
    let shots = 20_000;
    let cfg = ThermalizeConfig { beta, pulses: 0, max_iters: 1, shots, ..config(Backend::Auto) };
    let res = thermalize(&m, &Clamp::None, &cfg, &mut rng::from_seed(5)).unwrap();
    let tol = 4.0 / (shots as f64).sqrt();
    for z in &res.expectations.z {
        assert!((z + beta.tanh()).abs() < tol, "{z}");
    }
    for zz in &res.expectations.zz {
        assert!((zz - beta.tanh().powi(2)).abs() < tol, "{zz}");
    }
    assert_eq!(res.schedule.pulses(), 0);
}

#[test]
fn optimizer_trace_never_rises() {
    let m = single_unit(1.0);
    let cfg = ThermalizeConfig { max_iters: 30, ..config(Backend::Auto) };
    let res = thermalize(&m, &Clamp::None, &cfg, &mut rng::from_seed(8)).unwrap();
    assert_eq!(res.energy_trace.len(), 30);
    assert!(res.energy_trace[0] <= res.initial_energy);
    assert!(res.energy_trace.windows(2).all(|w| w[1] <= w[0]));
    assert!(res.expectations.z.iter().all(|z| z.abs() <= 1.0));
}

#[test]
fn thermalization_is_deterministic() {
    let m = rbm(2, 1, 2);
    let cfg = ThermalizeConfig { max_iters: 10, shots: 100, ..config(Backend::Auto) };
    let a = thermalize(&m, &Clamp::Fixed(bits("01")), &cfg, &mut rng::from_seed(5)).unwrap();
    let b = thermalize(&m, &Clamp::Fixed(bits("01")), &cfg, &mut rng::from_seed(5)).unwrap();
    assert_eq!(a, b);
    let warm = thermalize_from(&m, &Clamp::Fixed(bits("01")), &cfg, Some(&a.schedule), &mut rng::from_seed(5)).unwrap();
    assert!(warm.initial_energy.is_finite());
    assert!(thermalize_from(&m, &Clamp::None, &cfg, Some(&PulseSchedule::zeros(1)), &mut rng::from_seed(5)).is_err());
}

fn divergence_to_gibbs(m: &IsingModel, beta: f64, schedule: &PulseSchedule) -> f64 {
    let cfg = ThermalizeConfig { beta, ..config(Backend::DensityMatrix) };
    let rho = reduced_system_state(m, &Clamp::None, schedule, &cfg).unwrap();
    let gibbs = gibbs_oracle(&m.cost_hamiltonian(Variant::Full), beta).unwrap();
    rho.relative_entropy_to_diagonal(gibbs.probs()).unwrap()
}

#[test]
fn unbiased_ferromagnet_cannot_beat_the_initial_correlation() {
    // Cost and full mixer both commute with X0 X1, and the single-spin parts
    // of the initial state are odd under it, so <Z0 Z1> <= tanh^2 beta.
    let m = ferromagnet();
    let beta = 1.0f64;
    let cfg = ThermalizeConfig { beta, ..config(Backend::DensityMatrix) };
    let mut r = rng::from_seed(3);
    for _ in 0..200 {
        let s = PulseSchedule::random(3, &mut r);
        let e = exact_expectations(&m, &Clamp::None, &s, &cfg).unwrap();
        assert!(e.zz[0] <= beta.tanh().powi(2) + 1e-12, "{}", e.zz[0]);
    }
}

#[test]
fn lower_energy_means_lower_divergence() {
    let beta = 1.0;
    let m =
        IsingModel::new(2, vec![0, 1], vec![], vec![Coupling { a: 0, b: 1, weight: 1.0 }], vec![0.5, -0.3]).unwrap();
    let cfg = ThermalizeConfig { beta, pulses: 3, shots: 500, max_iters: 100, ..config(Backend::Auto) };
    let initial = exact_expectations(&m, &Clamp::None, &PulseSchedule::zeros(0), &cfg).unwrap().energy;
    let before = divergence_to_gibbs(&m, beta, &PulseSchedule::zeros(0));
    let mut improved = 0;
    for seed in 0..5 {
        let res = thermalize(&m, &Clamp::None, &cfg, &mut rng::from_seed(seed)).unwrap();
        let final_energy = exact_expectations(&m, &Clamp::None, &res.schedule, &cfg).unwrap().energy;
        let after = divergence_to_gibbs(&m, beta, &res.schedule);
        // fixed entropy: D = beta (E - F_gibbs) - S, so the two move together
        assert!(((after - before) - beta * (final_energy - initial)).abs() < 1e-9);
        if final_energy < initial {
            improved += 1;
            assert!(after < before);
        }
    }
    assert!(improved > 0);
}

#[test]
fn fixed_entropy_and_spectrum() {
    let m = rbm(2, 1, 7);
    let beta = 0.8;
    let initial = DensityMatrix::from_diagonal(&pseudo_thermal_spectrum(beta, 3).unwrap()).unwrap();
    let s0 = initial.von_neumann_entropy();
    let mut r = rng::from_seed(12);
    for backend in [Backend::Trajectory, Backend::DensityMatrix] {
        for _ in 0..5 {
            let s = PulseSchedule::random(3, &mut r);
            let cfg = ThermalizeConfig { beta, ..config(backend) };
            let rho = reduced_system_state(&m, &Clamp::None, &s, &cfg).unwrap();
            assert!((rho.von_neumann_entropy() - s0).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn expectations_stay_in_range(seed in 0u64..10_000, p in 0.0f64..0.1) {
        let m = rbm(2, 1, seed);
        let mut r = rng::from_seed(seed);
        let s = PulseSchedule::random(2, &mut r);
        let cfg = ThermalizeConfig { shots: 64, noise: NoiseModel::depolarizing(p).unwrap(), ..config(Backend::Auto) };
        let e = qee_estimate(&m, &Clamp::None, &s, &cfg, &mut r).unwrap();
        prop_assert!(e.to_parameter_vector().iter().all(|v| v.abs() <= 1.0));
        let x = exact_expectations(&m, &Clamp::None, &s, &cfg).unwrap();
        prop_assert!(x.to_parameter_vector().iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }
}

//! Evaluation metrics: exact RBM visible marginals, KL divergence and the
//! squared error of an estimated weight update.

use crate::datagen::DataDistribution;
use crate::error::{Error, Result};
use crate::ising::{gibbs_oracle, IsingModel, Variant};

/// `p(v) = sum_h exp(-beta E(v, h)) / Z`, by enumeration over all units.
/// Bit `k` of the result indexes visible unit `model.visible()[k]`.
pub fn rbm_visible_marginal(model: &IsingModel, beta: f64) -> Result<DataDistribution> {
    let gibbs = gibbs_oracle(&model.cost_hamiltonian(Variant::Full), beta)?;
    let visible = model.visible();
    let mut probs = vec![0.0; 1 << visible.len()];
    for (index, p) in gibbs.probs().iter().enumerate() {
        let v = visible.iter().enumerate().filter(|(_, &u)| index >> u & 1 == 1).fold(0, |acc, (k, _)| acc | 1 << k);
        probs[v] += p;
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    DataDistribution::new(visible.len(), probs)
}

/// `D(data || model)` in nats; `+inf` when the model misses part of the data's support.
pub fn kl_divergence(data: &DataDistribution, model: &DataDistribution) -> Result<f64> {
    if data.width() != model.width() {
        return Err(Error::WidthMismatch { expected: data.width(), actual: model.width() });
    }
    let mut kl = 0.0;
    for (&p, &q) in data.probs().iter().zip(model.probs()) {
        if p == 0.0 {
            continue;
        }
        if q == 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += p * (p / q).ln();
    }
    Ok(kl.max(0.0))
}

/// `|est - exact|^2`.
pub fn update_error(estimated: &[f64], exact: &[f64]) -> Result<f64> {
    if estimated.len() != exact.len() {
        return Err(Error::WidthMismatch { expected: exact.len(), actual: estimated.len() });
    }
    Ok(estimated.iter().zip(exact).map(|(a, b)| (a - b).powi(2)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Bitstring;
    use crate::ising::Coupling;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn zero_weights_give_a_uniform_marginal() {
        let m = IsingModel::rbm(3, 2).unwrap();
        let p = rbm_visible_marginal(&m, 1.0).unwrap();
        assert!(p.probs().iter().all(|x| (x - 0.125).abs() < 1e-15));
    }

    #[test]
    fn single_visible_with_bias() {
        let m = IsingModel::new(1, vec![0], vec![], vec![], vec![1.0]).unwrap();
        let p = rbm_visible_marginal(&m, 1.0).unwrap();
        assert!((p.probs()[0] - 1f64.exp() / (2.0 * 1f64.cosh())).abs() < 1e-15);
    }

    #[test]
    fn one_visible_one_hidden_by_hand() {
        let m = IsingModel::new(2, vec![0], vec![1], vec![Coupling { a: 0, b: 1, weight: 1.0 }], vec![0.0; 2]).unwrap();
        let p = rbm_visible_marginal(&m, 1.0).unwrap();
        // energies: -z_v z_h, so each visible value sees e + 1/e
        assert!((p.probs()[0] - 0.5).abs() < 1e-15);

        let m =
            IsingModel::new(2, vec![0], vec![1], vec![Coupling { a: 0, b: 1, weight: 1.0 }], vec![0.0, 0.5]).unwrap();
        let p = rbm_visible_marginal(&m, 1.0).unwrap();
        let w = |zv: f64, zh: f64| (zv * zh + 0.5 * zh).exp();
        let p0 = w(1.0, 1.0) + w(1.0, -1.0);
        let p1 = w(-1.0, 1.0) + w(-1.0, -1.0);
        assert!((p.probs()[0] - p0 / (p0 + p1)).abs() < 1e-15);
    }

    #[test]
    fn marginal_is_invariant_under_hidden_relabelling() {
        let mut a = IsingModel::rbm(2, 2).unwrap();
        let p = [0.3, -0.5, 0.8, 0.1, 0.2, -0.4, 0.6, -0.9];
        a.set_parameters(&p).unwrap();
        // swap hidden units 2 and 3
        let cs = a.couplings().iter().map(|c| Coupling { a: c.a, b: 5 - c.b, weight: c.weight }).collect();
        let mut biases = a.biases().to_vec();
        biases.swap(2, 3);
        let b = IsingModel::new(4, vec![0, 1], vec![2, 3], cs, biases).unwrap();
        let pa = rbm_visible_marginal(&a, 1.0).unwrap();
        let pb = rbm_visible_marginal(&b, 1.0).unwrap();
        for (x, y) in pa.probs().iter().zip(pb.probs()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((pa.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kl_examples() {
        let q = DataDistribution::new(2, vec![0.25; 4]).unwrap();
        assert_eq!(kl_divergence(&q, &q).unwrap(), 0.0);
        let p = DataDistribution::new(2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((kl_divergence(&p, &q).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl_divergence(&q, &p).unwrap(), f64::INFINITY);
        let narrow = DataDistribution::new(1, vec![0.5, 0.5]).unwrap();
        assert!(kl_divergence(&narrow, &q).is_err());
    }

    #[test]
    fn kl_is_asymmetric() {
        let p = DataDistribution::new(1, vec![0.9, 0.1]).unwrap();
        let q = DataDistribution::new(1, vec![0.6, 0.4]).unwrap();
        assert!((kl_divergence(&p, &q).unwrap() - kl_divergence(&q, &p).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn kl_is_non_negative_on_random_pairs() {
        let mut r = rng::from_seed(0);
        for _ in 0..1000 {
            let mut draw = || {
                let mut v: Vec<f64> = (0..8).map(|_| r.gen::<f64>()).collect();
                let s: f64 = v.iter().sum();
                v.iter_mut().for_each(|x| *x /= s);
                let s: f64 = v.iter().sum();
                v[0] += 1.0 - s;
                DataDistribution::new(3, v).unwrap()
            };
            let (p, q) = (draw(), draw());
            assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
        }
    }

    #[test]
    fn update_error_examples() {
        assert_eq!(update_error(&[0.3, -0.2], &[0.3, -0.2]).unwrap(), 0.0);
        assert_eq!(update_error(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!(update_error(&[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn marginal_matches_the_empirical_marginal_of_gibbs_samples() {
        let mut m = IsingModel::rbm(2, 1).unwrap();
        m.set_parameters(&[0.7, -0.4, 0.2, 0.1, -0.3]).unwrap();
        let g = gibbs_oracle(&m.cost_hamiltonian(Variant::Full), 1.0).unwrap();
        let joint = DataDistribution::new(3, g.probs().to_vec()).unwrap();
        let samples = joint.sample(50_000, &mut rng::from_seed(4)).unwrap();
        let visible: Vec<Bitstring> =
            samples.samples().iter().map(|s| Bitstring::from_bits(&[s.bit(0), s.bit(1)]).unwrap()).collect();
        let emp = DataDistribution::empirical(&crate::datagen::Dataset::new(2, visible).unwrap()).unwrap();
        let exact = rbm_visible_marginal(&m, 1.0).unwrap();
        assert!(emp.total_variation(&exact).unwrap() < 0.01);
    }

    proptest! {
        #[test]
        fn marginal_sums_to_one(params in prop::collection::vec(-2.0f64..2.0, 11), beta in 0.0f64..3.0) {
            let mut m = IsingModel::rbm(3, 2).unwrap();
            m.set_parameters(&params).unwrap();
            let p = rbm_visible_marginal(&m, beta).unwrap();
            prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

//! Synthetic visible-layer datasets with exactly known generating distributions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::error::{Error, Result};

/// Widest distribution stored densely.
pub const MAX_DISTRIBUTION_BITS: usize = 20;

/// Probability mass function over `{0,1}^n`, indexed by [`Bitstring::value`].
#[derive(Clone, Debug, PartialEq)]
pub struct DataDistribution {
    width: usize,
    probs: Vec<f64>,
}

impl DataDistribution {
    pub fn new(width: usize, probs: Vec<f64>) -> Result<Self> {
        if width > MAX_DISTRIBUTION_BITS {
            return Err(Error::RegisterTooLarge { requested: width, limit: MAX_DISTRIBUTION_BITS });
        }
        if probs.len() != 1 << width {
            return Err(Error::WidthMismatch { expected: 1 << width, actual: probs.len() });
        }
        if probs.iter().any(|p| !(*p >= 0.0) || p.is_infinite()) {
            return Err(Error::invalid("probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("probabilities sum to {total}")));
        }
        Ok(Self { width, probs })
    }

    /// Empirical distribution of a sample.
    pub fn empirical(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::invalid("empirical distribution of an empty dataset"));
        }
        let mut probs = vec![0.0; 1 << data.width];
        let w = 1.0 / data.len() as f64;
        for s in &data.samples {
            probs[s.value() as usize] += w;
        }
        renormalize(&mut probs);
        Self::new(data.width, probs)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn probability(&self, bits: &Bitstring) -> f64 {
        if bits.width() != self.width {
            return 0.0;
        }
        self.probs[bits.value() as usize]
    }

    pub fn support(&self) -> impl Iterator<Item = Bitstring> + '_ {
        let width = self.width;
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(move |(i, _)| Bitstring::new(width, i as u64).expect("index fits width"))
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Dataset> {
        let dist = WeightedIndex::new(&self.probs).map_err(|e| Error::invalid(e.to_string()))?;
        let samples = (0..count).map(|_| Bitstring::new(self.width, dist.sample(rng) as u64)).collect::<Result<_>>()?;
        Dataset::new(self.width, samples)
    }

    pub fn total_variation(&self, other: &DataDistribution) -> Result<f64> {
        if self.width != other.width {
            return Err(Error::WidthMismatch { expected: self.width, actual: other.width });
        }
        Ok(0.5 * self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }

    /// `{bitstring: probability}` over the support.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Absorb the rounding left over from summing many small terms.
fn renormalize(probs: &mut [f64]) {
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
}

impl Serialize for DataDistribution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, f64> = self.support().map(|b| (b.to_string(), self.probability(&b))).collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DataDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let map = BTreeMap::<String, f64>::deserialize(deserializer)?;
        let width = map.keys().next().map_or(0, String::len);
        let mut probs = vec![0.0; 1usize.checked_shl(width as u32).unwrap_or(0)];
        for (k, p) in map {
            let b: Bitstring = k.parse().map_err(D::Error::custom)?;
            if b.width() != width {
                return Err(D::Error::custom(format!("key {k:?} has width {}, expected {width}", b.width())));
            }
            probs[b.value() as usize] = p;
        }
        DataDistribution::new(width, probs).map_err(D::Error::custom)
    }
}

/// A multiset of visible-layer bitstrings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    width: usize,
    samples: Vec<Bitstring>,
}

impl Dataset {
    pub fn new(width: usize, samples: Vec<Bitstring>) -> Result<Self> {
        if let Some(bad) = samples.iter().find(|s| s.width() != width) {
            return Err(Error::WidthMismatch { expected: width, actual: bad.width() });
        }
        Ok(Self { width, samples })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn samples(&self) -> &[Bitstring] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Distinct strings with their multiplicities, in order of first appearance.
    pub fn distinct(&self) -> Vec<(Bitstring, usize)> {
        let mut out: Vec<(Bitstring, usize)> = Vec::new();
        for s in &self.samples {
            match out.iter_mut().find(|(b, _)| b == s) {
                Some((_, c)) => *c += 1,
                None => out.push((*s, 1)),
            }
        }
        out
    }

    /// Uniformly drawn subset of `size` samples without replacement.
    pub fn subsample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Dataset {
        let picked = rand::seq::index::sample(rng, self.len(), size.min(self.len()));
        let mut idx = picked.into_vec();
        idx.sort_unstable();
        Dataset { width: self.width, samples: idx.into_iter().map(|i| self.samples[i]).collect() }
    }

    /// One bitstring per line after `#`-prefixed header lines.
    pub fn to_text(&self, header: &[String]) -> String {
        let mut out = String::new();
        for h in header {
            for line in h.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        for s in &self.samples {
            let _ = writeln!(out, "{s}");
        }
        out
    }

    /// Parse [`Dataset::to_text`] output. Blank and `#` lines are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let samples = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::parse)
            .collect::<Result<Vec<Bitstring>>>()?;
        let width = samples.first().map_or(0, Bitstring::width);
        Self::new(width, samples)
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn check_width(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DISTRIBUTION_BITS {
        return Err(Error::invalid(format!("width must be in 1..={MAX_DISTRIBUTION_BITS}, got {n}")));
    }
    Ok(())
}

/// Bit-flip kernel `p^d (1-p)^(n-d)` for a Hamming distance `d`.
fn flip_weight(n: usize, d: u32, p: f64) -> f64 {
    p.powi(d as i32) * (1.0 - p).powi(n as i32 - d as i32)
}

/// Copy source bit `i` into positions `i*r .. (i+1)*r`.
fn repetition_encode(word: u64, k: usize, r: usize) -> u64 {
    (0..k).filter(|i| word >> i & 1 == 1).fold(0, |acc, i| acc | ((1u64 << r) - 1) << (i * r))
}

fn check_code(n: usize, k: usize) -> Result<usize> {
    check_width(n)?;
    if k == 0 || !n.is_multiple_of(k) {
        return Err(Error::invalid(format!("a [{n},{k}] repetition code needs k to divide n")));
    }
    Ok(n / k)
}

/// Exact distribution of repetition-coded Bernoulli(`eta`) words with
/// independent bit flips.
pub fn coded_bernoulli_pmf(n: usize, k: usize, eta: f64, p_flip: f64) -> Result<DataDistribution> {
    let r = check_code(n, k)?;
    check_probability("eta", eta)?;
    check_probability("flip probability", p_flip)?;
    let mut probs = vec![0.0; 1 << n];
    for word in 0..1u64 << k {
        let ones = word.count_ones() as i32;
        let prior = eta.powi(ones) * (1.0 - eta).powi(k as i32 - ones);
        if prior == 0.0 {
            continue;
        }
        let code = repetition_encode(word, k, r);
        for (x, p) in probs.iter_mut().enumerate() {
            *p += prior * flip_weight(n, (x as u64 ^ code).count_ones(), p_flip);
        }
    }
    renormalize(&mut probs);
    DataDistribution::new(n, probs)
}

/// Sample `count` coded-Bernoulli strings; also returns the exact distribution.
pub fn coded_bernoulli<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    eta: f64,
    p_flip: f64,
    count: usize,
    rng: &mut R,
) -> Result<(Dataset, DataDistribution)> {
    let pmf = coded_bernoulli_pmf(n, k, eta, p_flip)?;
    let r = n / k;
    let samples = (0..count)
        .map(|_| {
            let word = (0..k).filter(|_| rng.gen_bool(eta)).fold(0u64, |acc, i| acc | 1 << i);
            let noise = (0..n).filter(|_| rng.gen_bool(p_flip)).fold(0u64, |acc, j| acc | 1 << j);
            Bitstring::new(n, repetition_encode(word, k, r) ^ noise)
        })
        .collect::<Result<_>>()?;
    Ok((Dataset::new(n, samples)?, pmf))
}

/// `P(x) = (1/k) sum_j p^(n - d(x, m_j)) (1 - p)^d(x, m_j)`.
pub fn hidden_mode_pmf(n: usize, modes: &[Bitstring], p: f64) -> Result<DataDistribution> {
    check_width(n)?;
    check_probability("mode fidelity", p)?;
    if modes.is_empty() {
        return Err(Error::invalid("at least one mode is required"));
    }
    if let Some(m) = modes.iter().find(|m| m.width() != n) {
        return Err(Error::WidthMismatch { expected: n, actual: m.width() });
    }
    let w = 1.0 / modes.len() as f64;
    let mut probs = vec![0.0; 1 << n];
    for m in modes {
        for (x, px) in probs.iter_mut().enumerate() {
            *px += w * flip_weight(n, (x as u64 ^ m.value()).count_ones(), 1.0 - p);
        }
    }
    renormalize(&mut probs);
    DataDistribution::new(n, probs)
}

/// Pick a mode uniformly, then flip each bit with probability `1 - p`.
pub fn hidden_mode<R: Rng + ?Sized>(
    n: usize,
    modes: &[Bitstring],
    p: f64,
    count: usize,
    rng: &mut R,
) -> Result<(Dataset, DataDistribution)> {
    let pmf = hidden_mode_pmf(n, modes, p)?;
    let samples = (0..count)
        .map(|_| {
            let mode = modes[rng.gen_range(0..modes.len())].value();
            let noise = (0..n).filter(|_| rng.gen_bool(1.0 - p)).fold(0u64, |acc, j| acc | 1 << j);
            Bitstring::new(n, mode ^ noise)
        })
        .collect::<Result<_>>()?;
    Ok((Dataset::new(n, samples)?, pmf))
}

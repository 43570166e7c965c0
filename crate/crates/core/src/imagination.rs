//! Pluggable sample generators.
//!
//! A generator consumes class prototypes of one subject and emits per-class
//! imagined feature samples that preserve the subject's identity component.
//! The reference implementation translates prototypes between class means in
//! feature space; an oracle backed by synthetic ground truth provides the
//! upper bound used in acceptance tests.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::{LabeledSequence, SynthTruth};
use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::seeding::rng_from_parts;

/// Behavioral contract of an imagination generator.
///
/// Outputs keep the input dimension, carry only labels from `targets`, and
/// contain exactly `n_per_class` samples per target when `prototypes` is
/// non-empty. Identical inputs and seed produce identical outputs.
pub trait ImaginationGenerator {
    fn imagine(
        &self,
        prototypes: &[(Vec<f64>, ClassLabel)],
        targets: &[ClassLabel],
        n_per_class: usize,
        seed: u64,
    ) -> Result<Vec<(Vec<f64>, ClassLabel)>>;
}

/// Feature-space prototype translation: `p - mean(src) + mean(target)`.
///
/// The residual `p - mean(src)` is the subject's identity component, so a
/// translated sample keeps the identity while moving to the target class.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationModel {
    class_means: BTreeMap<ClassLabel, Vec<f64>>,
    jitter_sigma: f64,
    dim: usize,
}

/// Fits per-class mean vectors on a support corpus.
///
/// The support corpus must be disjoint from the subject under evaluation and
/// must contain at least one frame for each of the six classes.
pub fn fit_translation(support: &[LabeledSequence], jitter_sigma: f64) -> Result<TranslationModel> {
    if jitter_sigma < 0.0 {
        return Err(Error::Config(format!(
            "jitter_sigma must be >= 0, got {jitter_sigma}"
        )));
    }
    let mut sums: BTreeMap<ClassLabel, (Vec<f64>, u64)> = BTreeMap::new();
    let mut dim = None;
    for seq in support {
        let d = seq.dim();
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::DimensionMismatch { expected, got: d })
            }
            _ => {}
        }
        let entry = sums
            .entry(seq.label)
            .or_insert_with(|| (vec![0.0; d], 0));
        for frame in seq.frames() {
            for (s, &v) in entry.0.iter_mut().zip(frame) {
                *s += v;
            }
            entry.1 += 1;
        }
    }
    let dim = dim.ok_or_else(|| Error::Input("support corpus is empty".into()))?;
    let mut class_means = BTreeMap::new();
    for label in ClassLabel::ALL {
        let (sum, count) = sums
            .remove(&label)
            .ok_or_else(|| Error::MissingClass(label.to_string()))?;
        class_means.insert(label, sum.iter().map(|s| s / count as f64).collect());
    }
    Ok(TranslationModel {
        class_means,
        jitter_sigma,
        dim,
    })
}

impl TranslationModel {
    pub fn class_mean(&self, label: ClassLabel) -> &[f64] {
        &self.class_means[&label]
    }

    pub fn jitter_sigma(&self) -> f64 {
        self.jitter_sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn from_parts(
        class_means: BTreeMap<ClassLabel, Vec<f64>>,
        jitter_sigma: f64,
    ) -> Result<Self> {
        if class_means.len() != ClassLabel::ALL.len() {
            return Err(Error::Schema(format!(
                "translation model needs all {} class means, found {}",
                ClassLabel::ALL.len(),
                class_means.len()
            )));
        }
        let dim = class_means.values().next().expect("non-empty").len();
        if class_means.values().any(|m| m.len() != dim) {
            return Err(Error::Schema("class means have mixed dimensions".into()));
        }
        if jitter_sigma < 0.0 {
            return Err(Error::Schema("jitter_sigma must be >= 0".into()));
        }
        Ok(TranslationModel {
            class_means,
            jitter_sigma,
            dim,
        })
    }
}

impl ImaginationGenerator for TranslationModel {
    /// For each target class and sample index, picks a prototype round-robin
    /// (index `i % len`, so corresponding samples of different targets share
    /// a prototype) and emits `p - mean(src) + mean(target) + noise`.
    fn imagine(
        &self,
        prototypes: &[(Vec<f64>, ClassLabel)],
        targets: &[ClassLabel],
        n_per_class: usize,
        seed: u64,
    ) -> Result<Vec<(Vec<f64>, ClassLabel)>> {
        if prototypes.is_empty() {
            return Err(Error::Generation("no prototypes to translate".into()));
        }
        for (p, _) in prototypes {
            if p.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: p.len(),
                });
            }
        }
        let mut out = Vec::with_capacity(targets.len() * n_per_class);
        for &target in targets {
            let target_mean = &self.class_means[&target];
            for i in 0..n_per_class {
                let (p, src) = &prototypes[i % prototypes.len()];
                let src_mean = &self.class_means[src];
                let mut rng = rng_from_parts(&[seed, target.index() as u64, i as u64]);
                let sample: Vec<f64> = p
                    .iter()
                    .zip(src_mean)
                    .zip(target_mean)
                    .map(|((&pv, &sm), &tm)| {
                        let g: f64 = rng.sample(StandardNormal);
                        pv - sm + tm + self.jitter_sigma * g
                    })
                    .collect();
                out.push((sample, target));
            }
        }
        Ok(out)
    }
}

/// Test-harness generator backed by the synthetic ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleGenerator {
    subject_means: BTreeMap<String, BTreeMap<ClassLabel, Vec<f64>>>,
}

impl OracleGenerator {
    pub fn from_truth(truth: &SynthTruth) -> Self {
        OracleGenerator {
            subject_means: truth.subject_means.clone(),
        }
    }

    /// Gaussian samples around the subject's true class means.
    pub fn oracle_imagine(
        &self,
        subject_id: &str,
        targets: &[ClassLabel],
        n_per_class: usize,
        sigma: f64,
        seed: u64,
    ) -> Result<Vec<(Vec<f64>, ClassLabel)>> {
        let means = self
            .subject_means
            .get(subject_id)
            .ok_or_else(|| Error::UnknownSubject(subject_id.to_string()))?;
        let mut out = Vec::with_capacity(targets.len() * n_per_class);
        for &target in targets {
            let mean = &means[&target];
            for i in 0..n_per_class {
                let mut rng = rng_from_parts(&[seed, target.index() as u64, i as u64]);
                let sample: Vec<f64> = mean
                    .iter()
                    .map(|&m| {
                        let g: f64 = rng.sample(StandardNormal);
                        m + sigma * g
                    })
                    .collect();
                out.push((sample, target));
            }
        }
        Ok(out)
    }

    /// Fixes the subject and noise level so the oracle can stand in for a
    /// regular generator.
    pub fn bind(&self, subject_id: &str, sigma: f64) -> Result<BoundOracle> {
        if !self.subject_means.contains_key(subject_id) {
            return Err(Error::UnknownSubject(subject_id.to_string()));
        }
        Ok(BoundOracle {
            oracle: self.clone(),
            subject_id: subject_id.to_string(),
            sigma,
        })
    }
}

/// An [`OracleGenerator`] bound to one subject.
#[derive(Debug, Clone)]
pub struct BoundOracle {
    oracle: OracleGenerator,
    subject_id: String,
    sigma: f64,
}

impl ImaginationGenerator for BoundOracle {
    fn imagine(
        &self,
        prototypes: &[(Vec<f64>, ClassLabel)],
        targets: &[ClassLabel],
        n_per_class: usize,
        seed: u64,
    ) -> Result<Vec<(Vec<f64>, ClassLabel)>> {
        if prototypes.is_empty() {
            return Err(Error::Generation("no prototypes supplied".into()));
        }
        self.oracle
            .oracle_imagine(&self.subject_id, targets, n_per_class, self.sigma, seed)
    }
}

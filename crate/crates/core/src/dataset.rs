//! Per-subject expression-feature data: synthetic generation, CSV ingestion
//! of pre-encoded features, and stratified train/test splitting.
//!
//! CSV schema (header required):
//! `subject_id,sample_id,frame_index,label,f0,...,f{d-1}`
//! with lowercase canonical labels and decimal floats.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::seeding::rng_from_parts;

/// An ordered run of feature frames sharing one expression label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub subject_id: String,
    pub label: ClassLabel,
    frames: Vec<Vec<f64>>,
}

impl LabeledSequence {
    pub fn new(subject_id: impl Into<String>, label: ClassLabel, frames: Vec<Vec<f64>>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Input("a sequence needs at least one frame".into()));
        }
        let dim = frames[0].len();
        if dim == 0 {
            return Err(Error::Input("frames must have dimension >= 1".into()));
        }
        if let Some(bad) = frames.iter().find(|f| f.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(LabeledSequence {
            subject_id: subject_id.into(),
            label,
            frames,
        })
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn dim(&self) -> usize {
        self.frames[0].len()
    }
}

/// All sequences recorded for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectDataset {
    pub subject_id: String,
    pub sequences: Vec<LabeledSequence>,
    pub dim: usize,
}

impl SubjectDataset {
    pub fn classes_present(&self) -> BTreeSet<ClassLabel> {
        self.sequences.iter().map(|s| s.label).collect()
    }

    pub fn covers_all_classes(&self) -> bool {
        self.classes_present().len() == ClassLabel::ALL.len()
    }

    pub fn sequences_of(&self, label: ClassLabel) -> Vec<&LabeledSequence> {
        self.sequences.iter().filter(|s| s.label == label).collect()
    }
}

/// Knobs of the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub dim: usize,
    pub subjects: usize,
    pub sequences_per_class: usize,
    pub frames_per_sequence: usize,
    /// Euclidean distance between any two class anchors.
    pub class_separation: f64,
    pub within_class_sigma: f64,
    /// AR(1) frame-to-frame correlation, in [0,1).
    pub ar_coefficient: f64,
    /// Standard deviation of the per-subject identity shift.
    pub subject_offset_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dim: 32,
            subjects: 12,
            sequences_per_class: 5,
            frames_per_sequence: 8,
            class_separation: 4.0,
            within_class_sigma: 0.6,
            ar_coefficient: 0.7,
            subject_offset_sigma: 0.9,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < ClassLabel::ALL.len() {
            return Err(Error::Config(format!(
                "dim must be >= {} to place the class anchors, got {}",
                ClassLabel::ALL.len(),
                self.dim
            )));
        }
        if self.subjects == 0 || self.sequences_per_class == 0 || self.frames_per_sequence == 0 {
            return Err(Error::Config("counts must be positive".into()));
        }
        if !(self.class_separation > 0.0) {
            return Err(Error::Config("class_separation must be > 0".into()));
        }
        if self.within_class_sigma < 0.0 || self.subject_offset_sigma < 0.0 {
            return Err(Error::Config("sigmas must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.ar_coefficient) {
            return Err(Error::Config("ar_coefficient must lie in [0,1)".into()));
        }
        Ok(())
    }
}

/// Ground truth behind a synthetic dataset; feeds the oracle generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    pub class_anchors: Vec<Vec<f64>>,
    /// Per subject: anchor + identity offset for each class.
    pub subject_means: BTreeMap<String, BTreeMap<ClassLabel, Vec<f64>>>,
}

/// The six class anchors: scaled standard-basis vectors in the first six
/// coordinates, so every pair is exactly `separation` apart.
pub fn class_anchors(dim: usize, separation: f64) -> Vec<Vec<f64>> {
    let scale = separation / std::f64::consts::SQRT_2;
    ClassLabel::ALL
        .iter()
        .map(|c| {
            let mut v = vec![0.0; dim];
            v[c.index()] = scale;
            v
        })
        .collect()
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<Vec<SubjectDataset>> {
    generate_synthetic_with_truth(config).map(|(d, _)| d)
}

/// Generates per-subject datasets plus the ground-truth class means.
///
/// Per subject: identity ~ N(0, subject_offset_sigma^2 I). Per sequence the
/// residual follows an AR(1) process with stationary variance
/// `within_class_sigma^2`: `e_t = rho e_{t-1} + sqrt(1-rho^2) N(0, sigma^2 I)`.
pub fn generate_synthetic_with_truth(
    config: &SynthConfig,
) -> Result<(Vec<SubjectDataset>, SynthTruth)> {
    config.validate()?;
    let anchors = class_anchors(config.dim, config.class_separation);
    let mut rng = rng_from_parts(&[config.seed, 0x5e_9d]);
    let rho = config.ar_coefficient;
    let innovation = (1.0 - rho * rho).sqrt();

    let mut datasets = Vec::with_capacity(config.subjects);
    let mut subject_means = BTreeMap::new();
    for si in 0..config.subjects {
        let subject_id = format!("s{si:03}");
        let identity: Vec<f64> = (0..config.dim)
            .map(|_| config.subject_offset_sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut means = BTreeMap::new();
        for (ci, label) in ClassLabel::ALL.iter().enumerate() {
            let mean: Vec<f64> = anchors[ci]
                .iter()
                .zip(&identity)
                .map(|(&a, &o)| a + o)
                .collect();
            means.insert(*label, mean);
        }

        let mut sequences = Vec::new();
        for label in ClassLabel::ALL {
            let mean = &means[&label];
            for _ in 0..config.sequences_per_class {
                let mut residual: Vec<f64> = (0..config.dim)
                    .map(|_| config.within_class_sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let mut frames = Vec::with_capacity(config.frames_per_sequence);
                for t in 0..config.frames_per_sequence {
                    if t > 0 {
                        for r in residual.iter_mut() {
                            let g: f64 = rng.sample(StandardNormal);
                            *r = rho * *r + innovation * config.within_class_sigma * g;
                        }
                    }
                    frames.push(
                        mean.iter().zip(&residual).map(|(&m, &e)| m + e).collect(),
                    );
                }
                sequences.push(LabeledSequence::new(subject_id.clone(), label, frames)?);
            }
        }
        subject_means.insert(subject_id.clone(), means);
        datasets.push(SubjectDataset {
            subject_id,
            sequences,
            dim: config.dim,
        });
    }
    Ok((
        datasets,
        SynthTruth {
            class_anchors: anchors,
            subject_means,
        },
    ))
}

const CSV_FIXED_COLUMNS: [&str; 4] = ["subject_id", "sample_id", "frame_index", "label"];

/// Loads pre-encoded feature sequences from the documented CSV schema.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<SubjectDataset>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(csv_error)?;

    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.len() < CSV_FIXED_COLUMNS.len() + 1 {
        return Err(Error::Schema(format!(
            "expected at least {} columns, found {}",
            CSV_FIXED_COLUMNS.len() + 1,
            headers.len()
        )));
    }
    for (i, name) in CSV_FIXED_COLUMNS.iter().enumerate() {
        if &headers[i] != *name {
            return Err(Error::Schema(format!(
                "column {i} must be `{name}`, found `{}`",
                &headers[i]
            )));
        }
    }
    let dim = headers.len() - CSV_FIXED_COLUMNS.len();
    for (k, h) in headers.iter().skip(CSV_FIXED_COLUMNS.len()).enumerate() {
        let expected = format!("f{k}");
        if h != expected {
            return Err(Error::Schema(format!(
                "feature column {k} must be `{expected}`, found `{h}`"
            )));
        }
    }

    // (subject, sample) -> (label, frames by index)
    let mut groups: BTreeMap<(String, String), (ClassLabel, BTreeMap<u64, Vec<f64>>)> =
        BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(0);
        if record.len() != headers.len() {
            return Err(Error::Schema(format!(
                "line {line}: expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        let subject = record[0].to_string();
        let sample = record[1].to_string();
        let frame_index: u64 = record[2].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("invalid frame_index `{}`", &record[2]),
        })?;
        let label: ClassLabel = record[3].parse()?;
        let mut features = Vec::with_capacity(dim);
        for j in 0..dim {
            let raw = &record[CSV_FIXED_COLUMNS.len() + j];
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("invalid float `{raw}` in column f{j}"),
            })?;
            features.push(v);
        }
        let entry = groups
            .entry((subject, sample))
            .or_insert_with(|| (label, BTreeMap::new()));
        if entry.0 != label {
            return Err(Error::Schema(format!(
                "line {line}: sample has conflicting labels `{}` and `{}`",
                entry.0, label
            )));
        }
        if entry.1.insert(frame_index, features).is_some() {
            return Err(Error::Schema(format!(
                "line {line}: duplicate frame_index {frame_index}"
            )));
        }
    }

    let mut by_subject: BTreeMap<String, Vec<LabeledSequence>> = BTreeMap::new();
    for ((subject, _sample), (label, frames)) in groups {
        let frames: Vec<Vec<f64>> = frames.into_values().collect();
        let seq = LabeledSequence::new(subject.clone(), label, frames)?;
        by_subject.entry(subject).or_default().push(seq);
    }
    by_subject
        .into_iter()
        .map(|(subject_id, sequences)| {
            Ok(SubjectDataset {
                dim,
                subject_id,
                sequences,
            })
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    let line = match e.position() {
        Some(p) => p.line(),
        None => 0,
    };
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

/// Writes datasets in the documented CSV schema; `load_csv` restores them.
pub fn save_csv(datasets: &[SubjectDataset], path: impl AsRef<Path>) -> Result<()> {
    let dim = match datasets.first() {
        Some(d) => d.dim,
        None => return Err(Error::Input("nothing to save".into())),
    };
    let mut writer = csv::Writer::from_path(path.as_ref()).map_err(csv_error)?;
    let mut header: Vec<String> = CSV_FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..dim).map(|i| format!("f{i}")));
    writer.write_record(&header).map_err(csv_error)?;
    for ds in datasets {
        if ds.dim != dim {
            return Err(Error::Schema(format!(
                "subject {} has dim {}, expected {dim}",
                ds.subject_id, ds.dim
            )));
        }
        for (qi, seq) in ds.sequences.iter().enumerate() {
            let sample_id = format!("q{qi:05}");
            for (t, frame) in seq.frames().iter().enumerate() {
                let mut row: Vec<String> = vec![
                    ds.subject_id.clone(),
                    sample_id.clone(),
                    t.to_string(),
                    seq.label.to_string(),
                ];
                row.extend(frame.iter().map(|v| format!("{v}")));
                writer.write_record(&row).map_err(csv_error)?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

/// Stratified per-class split: per class, `ceil(test_fraction * n)` sequences
/// go to the test side (never all of them), chosen by a seeded shuffle.
pub fn split(
    dataset: &SubjectDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(SubjectDataset, SubjectDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Input(format!(
            "test_fraction must lie in (0,1), got {test_fraction}"
        )));
    }
    let mut test_idx = BTreeSet::new();
    for label in ClassLabel::ALL {
        let indices: Vec<usize> = dataset
            .sequences
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == label)
            .map(|(i, _)| i)
            .collect();
        if indices.is_empty() {
            continue;
        }
        if indices.len() < 2 {
            return Err(Error::Split(label.to_string()));
        }
        let n = indices.len();
        let n_test = ((test_fraction * n as f64).ceil() as usize).clamp(1, n - 1);
        let mut shuffled = indices;
        let mut rng = rng_from_parts(&[seed, 0xdeca_f, label.index() as u64]);
        shuffled.shuffle(&mut rng);
        test_idx.extend(shuffled.into_iter().take(n_test));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, seq) in dataset.sequences.iter().enumerate() {
        if test_idx.contains(&i) {
            test.push(seq.clone());
        } else {
            train.push(seq.clone());
        }
    }
    Ok((
        SubjectDataset {
            subject_id: dataset.subject_id.clone(),
            sequences: train,
            dim: dataset.dim,
        },
        SubjectDataset {
            subject_id: dataset.subject_id.clone(),
            sequences: test,
            dim: dataset.dim,
        },
    ))
}

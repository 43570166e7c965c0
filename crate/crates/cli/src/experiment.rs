//! The experiment grid: variants x subjects x seeds x episodes.
//!
//! Every cell owns a fresh model, consumes only the training split, and is
//! fully determined by (config, variant, subject, seed), so cells can run in
//! parallel. Records are sorted canonically before any aggregation.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand::seq::SliceRandom;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use clifer_core::dataset::{generate_synthetic_with_truth, load_csv, split};
use clifer_core::imagination::{fit_translation, BoundOracle, ImaginationGenerator};
use clifer_core::seeding::{derive_seed, rng_from_parts};
use clifer_core::snapshot::DualMemorySnapshot;
use clifer_core::stats::{kruskal_wallis, macro_f1, KwResult};
use clifer_core::{
    ClassLabel, ConfusionMatrix, DualMemory, DualMemoryConfig, LabeledSequence, OracleGenerator,
    SubjectDataset, TranslationModel,
};

use crate::baseline::{run_baseline_episode, BaselineModel};
use crate::config::{
    DataSource, ExperimentConfig, ExperimentKind, GeneratorKind, KwGrouping,
};
use crate::variant::Variant;
use crate::HarnessError;

pub const EPISODES: usize = 6;

/// One experiment cell-episode: what was learned and how both heads scored.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub variant: Variant,
    pub subject_id: String,
    pub order: Vec<ClassLabel>,
    pub seed: u64,
    /// 1-based episode index.
    pub episode: usize,
    pub class_learned: ClassLabel,
    /// Absent for the baseline, which has a single score.
    pub episodic_f1: Option<f64>,
    /// Baseline scores are reported under this head.
    pub semantic_f1: Option<f64>,
    pub episodic_size: usize,
    pub semantic_size: usize,
    /// Wall-clock per episode; surfaced in run metadata, never in records.csv.
    pub wall_ms: f64,
}

/// Per-cell summary kept in memory for invariant checks and statistics.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub variant: Variant,
    pub subject_id: String,
    pub seed: u64,
    pub order: Vec<ClassLabel>,
    /// Final-episode confusion over all six classes, per head.
    pub final_episodic_cm: Option<ConfusionMatrix>,
    pub final_semantic_cm: Option<ConfusionMatrix>,
    /// Serialized final model, when requested.
    pub final_snapshot: Option<String>,
    pub audit: CellAudit,
}

/// Counters proving what flowed into the learning path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellAudit {
    pub train_sequences: u64,
    pub train_frames: u64,
    pub replayed_trajectories: u64,
    pub imagined_samples: u64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub cells: Vec<CellOutcome>,
    pub kw: Option<KwResult>,
    /// Mean semantic F1 per class order (order sensitivity only).
    pub order_means: Vec<(Vec<ClassLabel>, f64)>,
    pub warnings: Vec<String>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Capture the serialized final model of every cell.
    pub keep_final_snapshots: bool,
}

struct SubjectContext {
    subject_id: String,
    subject_index: u64,
    train: SubjectDataset,
    test: SubjectDataset,
    translation: Option<TranslationModel>,
    train_fingerprints: HashSet<u64>,
    test_fingerprints: HashSet<u64>,
}

struct SeedContext {
    seed: u64,
    subjects: Vec<SubjectContext>,
    oracle: Option<OracleGenerator>,
}

fn sequence_fingerprint(seq: &LabeledSequence) -> u64 {
    let mut h = DefaultHasher::new();
    seq.label.index().hash(&mut h);
    for frame in seq.frames() {
        for v in frame {
            v.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

/// Refuses to learn from anything that fingerprints as held-out data.
///
/// A sequence counts as leaked when its content matches the test split but
/// not the training split; content shared by both sides (possible on
/// zero-noise synthetic data, where all frames of a class coincide) is fine.
fn audit_training_batch(
    batch: &[LabeledSequence],
    audit: &mut CellAudit,
    subject: &SubjectContext,
) -> Result<(), HarnessError> {
    for seq in batch {
        let fp = sequence_fingerprint(seq);
        if subject.test_fingerprints.contains(&fp) && !subject.train_fingerprints.contains(&fp) {
            return Err(HarnessError::Runtime(
                "audit violation: a held-out sequence reached the learning path".into(),
            ));
        }
        audit.train_sequences += 1;
        audit.train_frames += seq.frames().len() as u64;
    }
    Ok(())
}

fn prepare_seed_context(
    config: &ExperimentConfig,
    seed: u64,
    warnings: &mut Vec<String>,
) -> Result<SeedContext, HarnessError> {
    let (datasets, oracle) = match &config.data {
        DataSource::Synthetic(synth) => {
            let per_seed = clifer_core::SynthConfig {
                seed: derive_seed(&[synth.seed, seed]),
                ..synth.clone()
            };
            let (datasets, truth) = generate_synthetic_with_truth(&per_seed)?;
            (datasets, Some(OracleGenerator::from_truth(&truth)))
        }
        DataSource::Csv(path) => (load_csv(path)?, None),
    };

    // Subjects must cover all six classes and leave both split sides
    // non-empty for every class; others are skipped, mirroring the
    // sub-selection of usable subjects.
    let mut usable: Vec<(String, SubjectDataset, SubjectDataset)> = Vec::new();
    for (si, ds) in datasets.iter().enumerate() {
        if !ds.covers_all_classes() {
            warnings.push(format!(
                "seed {seed}: subject {} skipped (missing classes)",
                ds.subject_id
            ));
            continue;
        }
        let split_seed = derive_seed(&[seed, si as u64, 0x517]);
        match split(ds, config.test_fraction, split_seed) {
            Ok((train, test)) => usable.push((ds.subject_id.clone(), train, test)),
            Err(e) => {
                warnings.push(format!(
                    "seed {seed}: subject {} skipped ({e})",
                    ds.subject_id
                ));
            }
        }
    }
    if usable.is_empty() {
        return Err(HarnessError::Data(clifer_core::Error::Protocol(
            "no usable subjects: every subject lacks classes or sequences".into(),
        )));
    }

    let needs_translation = config
        .variants
        .iter()
        .any(|v| v.imagination_enabled())
        && config.imagination.generator == GeneratorKind::Translation;
    let jitter = config.effective_jitter();

    let mut subjects = Vec::with_capacity(usable.len());
    for i in 0..usable.len() {
        let translation = if needs_translation {
            // Fit on every other subject's training split; the subject under
            // test never contributes to its own generator.
            let support: Vec<LabeledSequence> = usable
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, (_, train, _))| train.sequences.iter().cloned())
                .collect();
            if support.is_empty() {
                return Err(HarnessError::Data(clifer_core::Error::Protocol(
                    "translation generator needs at least two usable subjects".into(),
                )));
            }
            Some(fit_translation(&support, jitter)?)
        } else {
            None
        };
        let (subject_id, train, test) = &usable[i];
        let train_fingerprints = train.sequences.iter().map(sequence_fingerprint).collect();
        let test_fingerprints = test.sequences.iter().map(sequence_fingerprint).collect();
        subjects.push(SubjectContext {
            subject_id: subject_id.clone(),
            subject_index: i as u64,
            train: train.clone(),
            test: test.clone(),
            translation,
            train_fingerprints,
            test_fingerprints,
        });
    }
    Ok(SeedContext {
        seed,
        subjects,
        oracle,
    })
}

/// Extra gaussian noise on imagined samples, scaled by the first class of
/// the learning order; the positive control for the order-sensitivity test.
struct BiasedGenerator<'a> {
    inner: &'a dyn ImaginationGenerator,
    sigma: f64,
}

impl ImaginationGenerator for BiasedGenerator<'_> {
    fn imagine(
        &self,
        prototypes: &[(Vec<f64>, ClassLabel)],
        targets: &[ClassLabel],
        n_per_class: usize,
        seed: u64,
    ) -> clifer_core::Result<Vec<(Vec<f64>, ClassLabel)>> {
        let mut out = self.inner.imagine(prototypes, targets, n_per_class, seed)?;
        if self.sigma > 0.0 {
            for (i, (sample, _)) in out.iter_mut().enumerate() {
                let mut rng = rng_from_parts(&[seed, 0xb1a5, i as u64]);
                for v in sample.iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    *v += self.sigma * g;
                }
            }
        }
        Ok(out)
    }
}

enum CellGenerator {
    None,
    Translation(TranslationModel),
    Oracle(BoundOracle),
}

impl CellGenerator {
    fn as_dyn(&self) -> Option<&dyn ImaginationGenerator> {
        match self {
            CellGenerator::None => None,
            CellGenerator::Translation(t) => Some(t),
            CellGenerator::Oracle(o) => Some(o),
        }
    }
}

fn evaluation_scope(config: &ExperimentConfig, order: &[ClassLabel], episode: usize) -> Vec<ClassLabel> {
    let mut scope: Vec<ClassLabel> = match config.experiment {
        ExperimentKind::Exp1 => order[..episode].to_vec(),
        // Order sensitivity runs the exp2 protocol per order.
        ExperimentKind::Exp2 | ExperimentKind::Orders => ClassLabel::ALL.to_vec(),
    };
    scope.sort();
    scope
}

fn evaluate_dual_memory(
    dm: &DualMemory,
    test: &SubjectDataset,
    scope: &[ClassLabel],
) -> Result<(ConfusionMatrix, ConfusionMatrix), HarnessError> {
    let mut episodic_cm = ConfusionMatrix::new(&ClassLabel::ALL)?;
    let mut semantic_cm = ConfusionMatrix::new(&ClassLabel::ALL)?;
    for seq in &test.sequences {
        if !scope.contains(&seq.label) {
            continue;
        }
        let (e, s) = dm.classify(seq.frames())?;
        episodic_cm.record(seq.label, e)?;
        semantic_cm.record(seq.label, s)?;
    }
    Ok((episodic_cm, semantic_cm))
}

fn run_dual_memory_cell(
    config: &ExperimentConfig,
    seed_ctx: &SeedContext,
    subject: &SubjectContext,
    variant: Variant,
    order: &[ClassLabel],
    options: RunOptions,
) -> Result<(Vec<RunRecord>, CellOutcome), HarnessError> {
    let mut audit = CellAudit::default();
    let dm_config = DualMemoryConfig {
        replay_enabled: variant.replay_enabled(),
        imagination_enabled: variant.imagination_enabled(),
        trajectory_length: config.trajectory_length,
        replay_period: config.replay_period,
        imagination_n_per_class: config.imagination.n_per_class,
        imagination_seed: derive_seed(&[seed_ctx.seed, subject.subject_index, 0x1a]),
        imagination_before_replay: false,
    };

    let first_batch = subject.train.sequences_of(order[0]);
    let first = first_batch
        .first()
        .ok_or_else(|| HarnessError::Runtime("empty training class after split".into()))?;
    let mut dm = DualMemory::bootstrap(
        config.episodic.clone(),
        config.semantic.clone(),
        dm_config,
        first,
    )?;

    let generator = if variant.imagination_enabled() {
        match config.imagination.generator {
            GeneratorKind::Translation => {
                let model = subject.translation.clone().ok_or_else(|| {
                    HarnessError::Runtime("translation model missing for cell".into())
                })?;
                CellGenerator::Translation(model)
            }
            GeneratorKind::Oracle => {
                let oracle = seed_ctx.oracle.as_ref().ok_or_else(|| {
                    HarnessError::Runtime("oracle generator needs synthetic data".into())
                })?;
                CellGenerator::Oracle(
                    oracle.bind(&subject.subject_id, config.imagination.oracle_sigma)?,
                )
            }
        }
    } else {
        CellGenerator::None
    };
    let bias_sigma = config
        .order_effect_bias
        .map(|b| b * order[0].index() as f64)
        .unwrap_or(0.0);

    let mut records = Vec::with_capacity(EPISODES);
    let mut final_cms = None;
    for (i, &class) in order.iter().enumerate() {
        let started = Instant::now();
        let batch: Vec<LabeledSequence> = subject
            .train
            .sequences_of(class)
            .into_iter()
            .cloned()
            .collect();
        audit_training_batch(&batch, &mut audit, subject)?;
        let report = match generator.as_dyn() {
            Some(inner) if bias_sigma > 0.0 => {
                let biased = BiasedGenerator {
                    inner,
                    sigma: bias_sigma,
                };
                dm.learn_episode(&batch, Some(&biased))?
            }
            other => dm.learn_episode(&batch, other)?,
        };
        audit.replayed_trajectories += report.replayed_trajectories as u64;
        audit.imagined_samples += report.imagined_samples as u64;

        let scope = evaluation_scope(config, order, i + 1);
        let (e_cm, s_cm) = evaluate_dual_memory(&dm, &subject.test, &scope)?;
        records.push(RunRecord {
            variant,
            subject_id: subject.subject_id.clone(),
            order: order.to_vec(),
            seed: seed_ctx.seed,
            episode: i + 1,
            class_learned: class,
            episodic_f1: Some(macro_f1(&e_cm)?),
            semantic_f1: Some(macro_f1(&s_cm)?),
            episodic_size: dm.episodic().neuron_count(),
            semantic_size: dm.semantic().neuron_count(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        if i + 1 == EPISODES {
            final_cms = Some((e_cm, s_cm));
        }
    }

    let (e_cm, s_cm) = final_cms.expect("six episodes ran");
    Ok((
        records,
        CellOutcome {
            variant,
            subject_id: subject.subject_id.clone(),
            seed: seed_ctx.seed,
            order: order.to_vec(),
            final_episodic_cm: Some(e_cm),
            final_semantic_cm: Some(s_cm),
            final_snapshot: options
                .keep_final_snapshots
                .then(|| DualMemorySnapshot::capture(&dm).to_json()),
            audit,
        },
    ))
}

fn run_baseline_cell(
    config: &ExperimentConfig,
    seed_ctx: &SeedContext,
    subject: &SubjectContext,
    order: &[ClassLabel],
) -> Result<(Vec<RunRecord>, CellOutcome), HarnessError> {
    let mut audit = CellAudit::default();
    let mut model = BaselineModel::new(
        subject.train.dim,
        config.baseline.hidden,
        derive_seed(&[seed_ctx.seed, subject.subject_index, 0xb0]),
    );
    let mut records = Vec::with_capacity(EPISODES);
    let mut final_cm = None;
    for (i, &class) in order.iter().enumerate() {
        let started = Instant::now();
        let batch: Vec<LabeledSequence> = subject
            .train
            .sequences_of(class)
            .into_iter()
            .cloned()
            .collect();
        audit_training_batch(&batch, &mut audit, subject)?;
        run_baseline_episode(
            &mut model,
            &batch,
            config.baseline.epochs,
            config.baseline.learning_rate,
        )?;

        let scope = evaluation_scope(config, order, i + 1);
        let mut cm = ConfusionMatrix::new(&ClassLabel::ALL)?;
        for seq in &subject.test.sequences {
            if !scope.contains(&seq.label) {
                continue;
            }
            cm.record(seq.label, model.predict_sequence(seq.frames())?)?;
        }
        records.push(RunRecord {
            variant: Variant::Baseline,
            subject_id: subject.subject_id.clone(),
            order: order.to_vec(),
            seed: seed_ctx.seed,
            episode: i + 1,
            class_learned: class,
            episodic_f1: None,
            semantic_f1: Some(macro_f1(&cm)?),
            episodic_size: 0,
            semantic_size: 0,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        if i + 1 == EPISODES {
            final_cm = Some(cm);
        }
    }
    Ok((
        records,
        CellOutcome {
            variant: Variant::Baseline,
            subject_id: subject.subject_id.clone(),
            seed: seed_ctx.seed,
            order: order.to_vec(),
            final_episodic_cm: None,
            final_semantic_cm: final_cm,
            final_snapshot: None,
            audit,
        },
    ))
}

fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        a.variant
            .as_str()
            .cmp(b.variant.as_str())
            .then_with(|| a.subject_id.cmp(&b.subject_id))
            .then_with(|| order_string(&a.order).cmp(&order_string(&b.order)))
            .then_with(|| a.seed.cmp(&b.seed))
            .then_with(|| a.episode.cmp(&b.episode))
    });
}

pub fn order_string(order: &[ClassLabel]) -> String {
    order
        .iter()
        .map(|c| c.as_str())
        .collect::<Vec<_>>()
        .join("-")
}

fn run_grid(
    config: &ExperimentConfig,
    orders: &[Vec<ClassLabel>],
    options: RunOptions,
) -> Result<ExperimentOutput, HarnessError> {
    let started = Instant::now();
    let mut warnings = Vec::new();
    let seed_contexts: Vec<Arc<SeedContext>> = config
        .seeds
        .iter()
        .map(|&seed| prepare_seed_context(config, seed, &mut warnings).map(Arc::new))
        .collect::<Result<_, _>>()?;

    // One task per (order, seed, subject, variant).
    let mut tasks = Vec::new();
    for order in orders {
        for sc in &seed_contexts {
            for si in 0..sc.subjects.len() {
                for &variant in &config.variants {
                    tasks.push((order.clone(), Arc::clone(sc), si, variant));
                }
            }
        }
    }

    let results: Vec<Result<(Vec<RunRecord>, CellOutcome), HarnessError>> = tasks
        .par_iter()
        .map(|(order, sc, si, variant)| {
            let subject = &sc.subjects[*si];
            match variant {
                Variant::Baseline => run_baseline_cell(config, sc, subject, order),
                _ => run_dual_memory_cell(config, sc, subject, *variant, order, options),
            }
        })
        .collect();

    let mut records = Vec::new();
    let mut cells = Vec::new();
    for r in results {
        let (rs, cell) = r?;
        records.extend(rs);
        cells.push(cell);
    }
    sort_records(&mut records);
    cells.sort_by(|a, b| {
        a.variant
            .as_str()
            .cmp(b.variant.as_str())
            .then_with(|| a.subject_id.cmp(&b.subject_id))
            .then_with(|| order_string(&a.order).cmp(&order_string(&b.order)))
            .then_with(|| a.seed.cmp(&b.seed))
    });

    Ok(ExperimentOutput {
        records,
        cells,
        kw: None,
        order_means: Vec::new(),
        warnings,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Remembering seen classes: per-episode evaluation restricted to the classes
/// learned so far.
pub fn run_experiment1(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    run_experiment_with(config, RunOptions::default())
}

/// Generalising to unseen classes: per-episode evaluation over all classes.
pub fn run_experiment2(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    run_experiment_with(config, RunOptions::default())
}

pub fn run_experiment_with(
    config: &ExperimentConfig,
    options: RunOptions,
) -> Result<ExperimentOutput, HarnessError> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::Exp1 | ExperimentKind::Exp2 => {
            run_grid(config, &[config.class_order.clone()], options)
        }
        ExperimentKind::Orders => run_order_sensitivity_with(config, options),
    }
}

/// The six class orders: each class leads exactly once, the remainder is
/// shuffled by the first configured seed.
pub fn six_start_orders(seed: u64) -> Vec<Vec<ClassLabel>> {
    ClassLabel::ALL
        .iter()
        .enumerate()
        .map(|(j, &first)| {
            let mut rest: Vec<ClassLabel> = ClassLabel::ALL
                .iter()
                .copied()
                .filter(|&c| c != first)
                .collect();
            let mut rng = rng_from_parts(&[seed, 0x0de5, j as u64]);
            rest.shuffle(&mut rng);
            let mut order = vec![first];
            order.extend(rest);
            order
        })
        .collect()
}

pub fn run_order_sensitivity(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    run_order_sensitivity_with(config, RunOptions::default())
}

fn run_order_sensitivity_with(
    config: &ExperimentConfig,
    options: RunOptions,
) -> Result<ExperimentOutput, HarnessError> {
    config.validate()?;
    let orders = six_start_orders(config.seeds[0]);
    let mut output = run_grid(config, &orders, options)?;

    // Group semantic scores per order.
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); orders.len()];
    let mut means: Vec<(Vec<ClassLabel>, f64)> = Vec::new();
    for (oi, order) in orders.iter().enumerate() {
        for r in &output.records {
            if &r.order != order {
                continue;
            }
            let include = match config.kw_grouping {
                KwGrouping::FinalEpisode => r.episode == EPISODES,
                KwGrouping::PerEpisode => true,
            };
            if include {
                if let Some(f1) = r.semantic_f1 {
                    groups[oi].push(f1);
                }
            }
        }
        let mean = groups[oi].iter().sum::<f64>() / groups[oi].len().max(1) as f64;
        means.push((order.clone(), mean));
    }
    output.kw = Some(kruskal_wallis(&groups)?);
    output.order_means = means;
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn audit_catches_leaked_test_sequences() {
        let frames = |v: f64| vec![vec![v; 4], vec![v + 0.5; 4]];
        let train_seq =
            LabeledSequence::new("s", ClassLabel::Happy, frames(0.0)).unwrap();
        let test_seq = LabeledSequence::new("s", ClassLabel::Happy, frames(9.0)).unwrap();
        let subject = SubjectContext {
            subject_id: "s".into(),
            subject_index: 0,
            train: SubjectDataset {
                subject_id: "s".into(),
                sequences: vec![train_seq.clone()],
                dim: 4,
            },
            test: SubjectDataset {
                subject_id: "s".into(),
                sequences: vec![test_seq.clone()],
                dim: 4,
            },
            translation: None,
            train_fingerprints: [sequence_fingerprint(&train_seq)].into_iter().collect(),
            test_fingerprints: [sequence_fingerprint(&test_seq)].into_iter().collect(),
        };
        let mut audit = CellAudit::default();
        audit_training_batch(&[train_seq.clone()], &mut audit, &subject).unwrap();
        assert_eq!(audit.train_sequences, 1);
        assert_eq!(audit.train_frames, 2);

        let err = audit_training_batch(&[test_seq], &mut audit, &subject).unwrap_err();
        assert!(err.to_string().contains("audit violation"));
    }

    #[test]
    fn six_start_orders_cover_every_first_class() {
        let orders = six_start_orders(3);
        assert_eq!(orders.len(), 6);
        for (j, order) in orders.iter().enumerate() {
            assert_eq!(order[0], ClassLabel::ALL[j]);
            let mut sorted = order.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), 6, "order {j} is not a permutation");
        }
        assert_eq!(orders, six_start_orders(3));
        assert_ne!(orders, six_start_orders(4));
    }
}

//! Protocol invariants of the experiment harness.

use std::path::PathBuf;

use clifer_cli::report::records_csv;
use clifer_cli::{
    BaselineModel, DataSource, ExperimentConfig, ExperimentKind, ParamsFile, RunOptions, Variant,
};
use clifer_core::dataset::{generate_synthetic, split, SynthConfig};
use clifer_core::seeding::derive_seed;
use clifer_core::stats::{macro_f1, sign_test_greater};
use clifer_core::{ClassLabel, ConfusionMatrix};

fn tiny_synth() -> SynthConfig {
    SynthConfig {
        subjects: 3,
        sequences_per_class: 4,
        frames_per_sequence: 6,
        ..SynthConfig::default()
    }
}

fn config_for(
    experiment: ExperimentKind,
    variants: Vec<Variant>,
    seeds: Vec<u64>,
) -> ExperimentConfig {
    ExperimentConfig::new(
        experiment,
        variants,
        DataSource::Synthetic(tiny_synth()),
        seeds,
        ParamsFile::default(),
        PathBuf::from("unused"),
    )
}

#[test]
fn record_counts_follow_the_grid() {
    let config = config_for(
        ExperimentKind::Exp1,
        vec![Variant::Gdm, Variant::GdmReplay],
        vec![1, 2],
    );
    let output = clifer_cli::run_experiment1(&config).unwrap();
    // 2 variants x 3 subjects x 2 seeds x 6 episodes.
    assert_eq!(output.records.len(), 72);
    assert_eq!(output.cells.len(), 12);
    assert!(output.warnings.is_empty());
}

#[test]
fn experiments_share_training_trajectories() {
    let options = RunOptions {
        keep_final_snapshots: true,
    };
    let exp1 = {
        let config = config_for(ExperimentKind::Exp1, vec![Variant::GdmReplay], vec![3]);
        clifer_cli::run_experiment_with(&config, options).unwrap()
    };
    let exp2 = {
        let config = config_for(ExperimentKind::Exp2, vec![Variant::GdmReplay], vec![3]);
        clifer_cli::run_experiment_with(&config, options).unwrap()
    };

    // Identical final models: evaluation scope must not influence learning.
    assert_eq!(exp1.cells.len(), exp2.cells.len());
    for (a, b) in exp1.cells.iter().zip(&exp2.cells) {
        assert_eq!(a.subject_id, b.subject_id);
        assert_eq!(a.final_snapshot, b.final_snapshot);
        assert!(a.final_snapshot.is_some());
    }

    // Episode 6 scores coincide: all classes are seen by then.
    let final_scores = |records: &[clifer_cli::RunRecord]| -> Vec<(String, Option<f64>, Option<f64>)> {
        records
            .iter()
            .filter(|r| r.episode == 6)
            .map(|r| (r.subject_id.clone(), r.episodic_f1, r.semantic_f1))
            .collect()
    };
    assert_eq!(final_scores(&exp1.records), final_scores(&exp2.records));
}

#[test]
fn replay_wiring_differs_only_by_replay_counts() {
    let config = config_for(
        ExperimentKind::Exp1,
        vec![Variant::Gdm, Variant::GdmReplay],
        vec![4],
    );
    let output = clifer_cli::run_experiment1(&config).unwrap();
    for cell in &output.cells {
        match cell.variant {
            Variant::Gdm => {
                assert_eq!(cell.audit.replayed_trajectories, 0);
                assert_eq!(cell.audit.imagined_samples, 0);
            }
            Variant::GdmReplay => {
                assert!(cell.audit.replayed_trajectories > 0);
                assert_eq!(cell.audit.imagined_samples, 0);
            }
            _ => unreachable!("only gdm variants configured"),
        }
    }
    // Both variants consumed exactly the same training stream.
    let frames: Vec<u64> = output.cells.iter().map(|c| c.audit.train_frames).collect();
    let per_variant = output.cells.len() / 2;
    assert_eq!(frames[..per_variant], frames[per_variant..]);
}

#[test]
fn records_are_deterministic_across_runs() {
    let config = config_for(
        ExperimentKind::Exp2,
        vec![Variant::Clifer, Variant::Baseline],
        vec![5],
    );
    let a = clifer_cli::run_experiment2(&config).unwrap();
    let b = clifer_cli::run_experiment2(&config).unwrap();
    assert_eq!(records_csv(&a.records), records_csv(&b.records));
}

#[test]
fn order_sensitivity_rejects_degenerate_groups() {
    // Zero noise: every order scores exactly 1.0, so the pooled sample is
    // constant and the rank test must refuse it.
    let synth = SynthConfig {
        subjects: 2,
        sequences_per_class: 4,
        frames_per_sequence: 4,
        within_class_sigma: 0.0,
        subject_offset_sigma: 0.0,
        ar_coefficient: 0.0,
        ..SynthConfig::default()
    };
    let config = ExperimentConfig::new(
        ExperimentKind::Orders,
        vec![Variant::GdmReplay],
        DataSource::Synthetic(synth),
        vec![1],
        ParamsFile::default(),
        PathBuf::from("unused"),
    );
    let err = clifer_cli::run_order_sensitivity(&config).unwrap_err();
    assert!(
        err.to_string().contains("degenerate"),
        "expected a degenerate-data error, got: {err}"
    );
}

#[test]
fn baseline_forgets_early_classes() {
    // After six sequential episodes the first class's F1 falls below the
    // last class's on almost every seed.
    let mut first_scores = Vec::new();
    let mut last_scores = Vec::new();
    for seed in 0..10u64 {
        let synth = SynthConfig {
            subjects: 1,
            seed: derive_seed(&[99, seed]),
            ..tiny_synth()
        };
        let dataset = generate_synthetic(&synth).unwrap().remove(0);
        let (train, test) = split(&dataset, 0.3, seed).unwrap();
        let mut model = BaselineModel::new(dataset.dim, 24, seed);
        for class in ClassLabel::ALL {
            let batch: Vec<_> = train
                .sequences_of(class)
                .into_iter()
                .cloned()
                .collect();
            clifer_cli::run_baseline_episode(&mut model, &batch, 8, 0.05).unwrap();
        }
        let mut cm = ConfusionMatrix::new(&ClassLabel::ALL).unwrap();
        for seq in &test.sequences {
            cm.record(seq.label, model.predict_sequence(seq.frames()).unwrap())
                .unwrap();
        }
        let _ = macro_f1(&cm).unwrap();
        let (_, _, first) = cm.class_prf(ClassLabel::Neutral).unwrap();
        let (_, _, last) = cm.class_prf(ClassLabel::Sadness).unwrap();
        first_scores.push(first);
        last_scores.push(last);
    }
    let test = sign_test_greater(&last_scores, &first_scores).unwrap();
    assert!(
        test.p_value < 0.05,
        "no forgetting signature: last {last_scores:?} vs first {first_scores:?}, p = {}",
        test.p_value
    );
}

#[test]
fn skipped_subjects_are_reported_not_fatal() {
    // Subject CSV with one subject missing a class entirely.
    let mut good = generate_synthetic(&tiny_synth()).unwrap();
    let mut bad = good.pop().unwrap();
    bad.subject_id = "zz_bad".into();
    bad.sequences.retain(|s| s.label != ClassLabel::Fear);
    good.push(bad);

    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("data.csv");
    clifer_core::dataset::save_csv(&good, &csv_path).unwrap();

    let config = ExperimentConfig::new(
        ExperimentKind::Exp1,
        vec![Variant::Gdm],
        DataSource::Csv(csv_path),
        vec![1],
        ParamsFile::default(),
        PathBuf::from("unused"),
    );
    let output = clifer_cli::run_experiment1(&config).unwrap();
    assert_eq!(output.warnings.len(), 1);
    assert!(output.warnings[0].contains("zz_bad"));
    // Two healthy subjects still ran.
    assert_eq!(output.cells.len(), 2);
}

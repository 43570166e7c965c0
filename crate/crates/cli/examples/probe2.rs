//! Compares the harness episode-1 path with a standalone episode-1 cell.

use std::path::PathBuf;

use clifer_cli::{DataSource, ExperimentConfig, ExperimentKind, ParamsFile, Variant};
use clifer_core::dataset::{generate_synthetic_with_truth, split, SynthConfig};
use clifer_core::imagination::fit_translation;
use clifer_core::seeding::derive_seed;
use clifer_core::stats::macro_f1;
use clifer_core::{
    ClassLabel, ConfusionMatrix, DualMemory, DualMemoryConfig, GwrParams,
};

fn main() {
    let subjects: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(6);

    // Path A: the experiment harness, episode-1 records of clifer.
    let synth = SynthConfig {
        subjects,
        ..SynthConfig::default()
    };
    let config = ExperimentConfig::new(
        ExperimentKind::Exp2,
        vec![Variant::Clifer],
        DataSource::Synthetic(synth.clone()),
        vec![1, 2, 3],
        ParamsFile::default(),
        PathBuf::from("unused"),
    );
    let output = clifer_cli::run_experiment2(&config).unwrap();
    let ep1: Vec<f64> = output
        .records
        .iter()
        .filter(|r| r.episode == 1)
        .filter_map(|r| r.semantic_f1)
        .collect();
    println!(
        "harness ep1 semantic: mean {:.4} over {} cells: {:?}",
        ep1.iter().sum::<f64>() / ep1.len() as f64,
        ep1.len(),
        ep1.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>()
    );

    // Path B: standalone cells as in the acceptance test.
    let mut scores = Vec::new();
    for seed in [1u64, 2, 3] {
        let per_seed = SynthConfig {
            subjects,
            seed: derive_seed(&[SynthConfig::default().seed, seed]),
            ..SynthConfig::default()
        };
        let (datasets, _) = generate_synthetic_with_truth(&per_seed).unwrap();
        let splits: Vec<_> = datasets
            .iter()
            .enumerate()
            .map(|(i, d)| split(d, 0.3, derive_seed(&[seed, i as u64, 0x517])).unwrap())
            .collect();
        for subject in 0..datasets.len() {
            let support: Vec<_> = splits
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != subject)
                .flat_map(|(_, (tr, _))| tr.sequences.iter().cloned())
                .collect();
            let translation = fit_translation(&support, 0.2).unwrap();
            let (train, test) = &splits[subject];

            let dm_config = DualMemoryConfig {
                replay_enabled: true,
                imagination_enabled: true,
                imagination_seed: derive_seed(&[seed, subject as u64, 0x1a]),
                ..DualMemoryConfig::default()
            };
            let first = train.sequences_of(ClassLabel::Neutral)[0];
            let mut dm = DualMemory::bootstrap(
                GwrParams::episodic(),
                GwrParams::semantic(),
                dm_config,
                first,
            )
            .unwrap();
            let batch: Vec<_> = train
                .sequences_of(ClassLabel::Neutral)
                .into_iter()
                .cloned()
                .collect();
            dm.learn_episode(&batch, Some(&translation)).unwrap();
            let mut cm = ConfusionMatrix::new(&ClassLabel::ALL).unwrap();
            for seq in &test.sequences {
                let (_, s) = dm.classify(seq.frames()).unwrap();
                cm.record(seq.label, s).unwrap();
            }
            scores.push(macro_f1(&cm).unwrap());
        }
    }
    println!(
        "standalone ep1 semantic: mean {:.4} over {} cells: {:?}",
        scores.iter().sum::<f64>() / scores.len() as f64,
        scores.len(),
        scores.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>()
    );
}

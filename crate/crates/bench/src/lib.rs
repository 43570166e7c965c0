//! Shared fixtures for the benchmark suite.

use clifer_core::dataset::{generate_synthetic, SynthConfig};
use clifer_core::{ClassLabel, GwrNetwork, GwrParams, InsertionGate, SubjectDataset};

/// A small synthetic subject with every class present.
pub fn bench_subject() -> SubjectDataset {
    let config = SynthConfig {
        subjects: 1,
        sequences_per_class: 4,
        frames_per_sequence: 8,
        ..SynthConfig::default()
    };
    generate_synthetic(&config).expect("synthetic data").remove(0)
}

/// A network grown to roughly `target` neurons on subject data.
pub fn grown_network(target: usize) -> GwrNetwork {
    let subject = bench_subject();
    let frames = subject.sequences[0].frames();
    let mut net = GwrNetwork::new(
        GwrParams::episodic(),
        &frames[0],
        &frames[1],
        Some(ClassLabel::Neutral),
        None,
    )
    .expect("network");
    'outer: loop {
        for seq in &subject.sequences {
            for frame in seq.frames() {
                if net.neuron_count() >= target {
                    break 'outer;
                }
                net.adapt(frame, Some(seq.label), InsertionGate::Plain)
                    .expect("adapt");
            }
        }
    }
    net
}

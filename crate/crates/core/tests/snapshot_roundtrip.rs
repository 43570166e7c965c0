//! End-to-end persistence checks for trained dual memories.

use clifer_core::dataset::{generate_synthetic, SynthConfig};
use clifer_core::snapshot::{AnySnapshot, DualMemorySnapshot};
use clifer_core::{DualMemory, DualMemoryConfig, GwrParams};

fn trained_dual_memory() -> DualMemory {
    let config = SynthConfig {
        subjects: 1,
        sequences_per_class: 2,
        frames_per_sequence: 5,
        ..SynthConfig::default()
    };
    let dataset = generate_synthetic(&config).unwrap().pop().unwrap();
    let mut dm = DualMemory::bootstrap(
        GwrParams::episodic(),
        GwrParams::semantic(),
        DualMemoryConfig {
            replay_enabled: true,
            ..DualMemoryConfig::default()
        },
        &dataset.sequences[0],
    )
    .unwrap();
    for label in clifer_core::ClassLabel::ALL {
        let batch: Vec<_> = dataset
            .sequences_of(label)
            .into_iter()
            .cloned()
            .collect();
        dm.learn_episode(&batch, None).unwrap();
    }
    dm
}

#[test]
fn dual_memory_round_trip_is_bit_exact() {
    let dm = trained_dual_memory();
    let json = DualMemorySnapshot::capture(&dm).to_json();
    let restored = DualMemorySnapshot::from_json(&json).unwrap().restore().unwrap();
    assert_eq!(restored, dm);
    assert_eq!(DualMemorySnapshot::capture(&restored).to_json(), json);
}

#[test]
fn restored_memory_behaves_identically() {
    let dm = trained_dual_memory();
    let json = DualMemorySnapshot::capture(&dm).to_json();
    let restored = DualMemorySnapshot::from_json(&json).unwrap().restore().unwrap();

    let probe = vec![vec![0.3; 32], vec![0.1; 32]];
    assert_eq!(dm.classify(&probe).unwrap(), restored.classify(&probe).unwrap());

    // Continuing to learn from the restored state matches the original.
    let mut a = dm;
    let mut b = restored;
    let seq = clifer_core::LabeledSequence::new(
        "x",
        clifer_core::ClassLabel::Fear,
        vec![vec![0.25; 32], vec![0.5; 32]],
    )
    .unwrap();
    a.learn_episode(std::slice::from_ref(&seq), None).unwrap();
    b.learn_episode(std::slice::from_ref(&seq), None).unwrap();
    assert_eq!(
        DualMemorySnapshot::capture(&a).to_json(),
        DualMemorySnapshot::capture(&b).to_json()
    );
}

#[test]
fn envelope_is_detected_as_dual_memory() {
    let dm = trained_dual_memory();
    let json = DualMemorySnapshot::capture(&dm).to_json();
    let any = AnySnapshot::from_json(&json).unwrap();
    assert_eq!(any.kind(), "dual_memory");
    assert_eq!(any.normalize().unwrap(), json);
}

//! Continual-learning building blocks: a recurrent growing-when-required
//! network, a dual episodic/semantic memory with pseudo-rehearsal replay,
//! pluggable imagination generators, synthetic and CSV dataset handling,
//! and the evaluation statistics used by the experiment harness.

pub mod dataset;
pub mod error;
pub mod gdm;
pub mod gwr;
pub mod hexfloat;
pub mod imagination;
pub mod label;
pub mod seeding;
pub mod snapshot;
pub mod stats;

pub use dataset::{LabeledSequence, SubjectDataset, SynthConfig, SynthTruth};
pub use error::{Error, Result};
pub use gdm::{DualMemory, DualMemoryConfig, EpisodeReport, ReplayTrajectory};
pub use gwr::{GwrNetwork, GwrParams, InsertionGate, Neuron, NeuronId, StepOutcome};
pub use imagination::{ImaginationGenerator, OracleGenerator, TranslationModel};
pub use label::ClassLabel;
pub use stats::{ConfusionMatrix, KwResult, SignTestResult};

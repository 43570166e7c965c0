//! Growing-when-required networks: prototypes, Hebbian edges, habituation,
//! temporal context and frequency-based label association.

mod network;
mod params;

pub use network::{
    habituate, GwrNetwork, InsertionGate, Neuron, NeuronId, StepOutcome,
};
pub use params::{default_alphas, GwrParams};

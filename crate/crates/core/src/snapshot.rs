//! Self-describing snapshot documents.
//!
//! Networks, dual memories and translation models serialize to JSON documents
//! in which every float is a hex-float token (see [`crate::hexfloat`]), so a
//! save/load round trip reproduces the exact state, bit for bit. Collections
//! are emitted in key order, which makes re-serialization byte-identical.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gdm::{DualMemory, DualMemoryConfig};
use crate::gwr::{GwrNetwork, GwrParams, Neuron, NeuronId};
use crate::hexfloat::{format_hex, parse_hex};
use crate::imagination::TranslationModel;
use crate::label::ClassLabel;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsDoc {
    insertion_threshold: String,
    habituation_threshold: String,
    eps_b: String,
    eps_n: String,
    tau_b: String,
    tau_n: String,
    kappa: String,
    max_edge_age: u64,
    context_depth: usize,
    beta: String,
    alphas: Vec<String>,
    prune_isolated: bool,
}

impl ParamsDoc {
    fn from_params(p: &GwrParams) -> Self {
        ParamsDoc {
            insertion_threshold: format_hex(p.insertion_threshold),
            habituation_threshold: format_hex(p.habituation_threshold),
            eps_b: format_hex(p.eps_b),
            eps_n: format_hex(p.eps_n),
            tau_b: format_hex(p.tau_b),
            tau_n: format_hex(p.tau_n),
            kappa: format_hex(p.kappa),
            max_edge_age: p.max_edge_age,
            context_depth: p.context_depth,
            beta: format_hex(p.beta),
            alphas: p.alphas.iter().map(|&a| format_hex(a)).collect(),
            prune_isolated: p.prune_isolated,
        }
    }

    fn to_params(&self) -> Result<GwrParams> {
        Ok(GwrParams {
            insertion_threshold: parse_hex(&self.insertion_threshold)?,
            habituation_threshold: parse_hex(&self.habituation_threshold)?,
            eps_b: parse_hex(&self.eps_b)?,
            eps_n: parse_hex(&self.eps_n)?,
            tau_b: parse_hex(&self.tau_b)?,
            tau_n: parse_hex(&self.tau_n)?,
            kappa: parse_hex(&self.kappa)?,
            max_edge_age: self.max_edge_age,
            context_depth: self.context_depth,
            beta: parse_hex(&self.beta)?,
            alphas: parse_vec(&self.alphas)?,
            prune_isolated: self.prune_isolated,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeuronDoc {
    id: u64,
    weight: Vec<String>,
    contexts: Vec<Vec<String>>,
    h: String,
    label_counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeDoc {
    a: u64,
    b: u64,
    age: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionDoc {
    from: u64,
    to: u64,
    n: u64,
}

/// Serialized form of a [`GwrNetwork`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkSnapshot {
    pub version: u32,
    params: ParamsDoc,
    dim: usize,
    neurons: Vec<NeuronDoc>,
    edges: Vec<EdgeDoc>,
    temporal_counts: Vec<TransitionDoc>,
    prev_bmu: Option<u64>,
    global_context: Vec<Vec<String>>,
    rng_seed: u64,
}

fn format_vec(v: &[f64]) -> Vec<String> {
    v.iter().map(|&x| format_hex(x)).collect()
}

fn parse_vec(v: &[String]) -> Result<Vec<f64>> {
    v.iter().map(|s| parse_hex(s)).collect()
}

impl NetworkSnapshot {
    pub fn capture(net: &GwrNetwork) -> Self {
        NetworkSnapshot {
            version: SNAPSHOT_VERSION,
            params: ParamsDoc::from_params(net.params()),
            dim: net.dim(),
            neurons: net
                .neurons()
                .map(|(id, n)| NeuronDoc {
                    id: id.0,
                    weight: format_vec(&n.weight),
                    contexts: n.contexts.iter().map(|c| format_vec(c)).collect(),
                    h: format_hex(n.habituation),
                    label_counts: n
                        .label_counts
                        .iter()
                        .map(|(l, &c)| (l.to_string(), c))
                        .collect(),
                })
                .collect(),
            edges: net
                .edges()
                .map(|((a, b), age)| EdgeDoc { a: a.0, b: b.0, age })
                .collect(),
            temporal_counts: net
                .temporal_counts()
                .map(|((from, to), n)| TransitionDoc {
                    from: from.0,
                    to: to.0,
                    n,
                })
                .collect(),
            prev_bmu: net.prev_bmu().map(|id| id.0),
            global_context: net
                .global_context()
                .iter()
                .map(|c| format_vec(c))
                .collect(),
            rng_seed: net.rng_seed(),
        }
    }

    pub fn restore(&self) -> Result<GwrNetwork> {
        if self.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot version {}",
                self.version
            )));
        }
        let params = self.params.to_params()?;
        params.validate()?;
        let k = params.context_depth;

        let mut neurons = BTreeMap::new();
        let mut next_id = 0u64;
        for doc in &self.neurons {
            let weight = parse_vec(&doc.weight)?;
            if weight.len() != self.dim {
                return Err(Error::Snapshot(format!(
                    "neuron {} has dimension {}, expected {}",
                    doc.id,
                    weight.len(),
                    self.dim
                )));
            }
            if doc.contexts.len() != k {
                return Err(Error::Snapshot(format!(
                    "neuron {} has {} contexts, expected {k}",
                    doc.id,
                    doc.contexts.len()
                )));
            }
            let contexts = doc
                .contexts
                .iter()
                .map(|c| {
                    let v = parse_vec(c)?;
                    if v.len() != self.dim {
                        return Err(Error::Snapshot(format!(
                            "neuron {} context has dimension {}",
                            doc.id,
                            v.len()
                        )));
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut label_counts = BTreeMap::new();
            for (name, &count) in &doc.label_counts {
                label_counts.insert(ClassLabel::from_str(name)?, count);
            }
            let habituation = parse_hex(&doc.h)?;
            if !(0.0..=1.0).contains(&habituation) {
                return Err(Error::Snapshot(format!(
                    "neuron {} habituation {habituation} outside [0,1]",
                    doc.id
                )));
            }
            if neurons
                .insert(
                    NeuronId(doc.id),
                    Neuron {
                        weight,
                        contexts,
                        habituation,
                        label_counts,
                    },
                )
                .is_some()
            {
                return Err(Error::Snapshot(format!("duplicate neuron id {}", doc.id)));
            }
            next_id = next_id.max(doc.id + 1);
        }
        if neurons.len() < 2 {
            return Err(Error::Snapshot(format!(
                "snapshot has {} neurons, need at least 2",
                neurons.len()
            )));
        }

        let mut edges = BTreeMap::new();
        for e in &self.edges {
            let (a, b) = (NeuronId(e.a), NeuronId(e.b));
            if a == b {
                return Err(Error::Snapshot(format!("self-loop edge at {}", e.a)));
            }
            if !neurons.contains_key(&a) || !neurons.contains_key(&b) {
                return Err(Error::Snapshot(format!(
                    "edge ({}, {}) references a missing neuron",
                    e.a, e.b
                )));
            }
            let key = if a <= b { (a, b) } else { (b, a) };
            if edges.insert(key, e.age).is_some() {
                return Err(Error::Snapshot(format!("duplicate edge ({}, {})", e.a, e.b)));
            }
        }

        let mut temporal_counts = BTreeMap::new();
        for t in &self.temporal_counts {
            let (from, to) = (NeuronId(t.from), NeuronId(t.to));
            if !neurons.contains_key(&from) || !neurons.contains_key(&to) {
                return Err(Error::Snapshot(format!(
                    "transition ({}, {}) references a missing neuron",
                    t.from, t.to
                )));
            }
            temporal_counts.insert((from, to), t.n);
        }

        let prev_bmu = match self.prev_bmu {
            Some(id) => {
                let id = NeuronId(id);
                if !neurons.contains_key(&id) {
                    return Err(Error::Snapshot(format!(
                        "prev_bmu {} references a missing neuron",
                        id
                    )));
                }
                Some(id)
            }
            None => None,
        };

        if self.global_context.len() != k {
            return Err(Error::Snapshot(format!(
                "global context has {} entries, expected {k}",
                self.global_context.len()
            )));
        }
        let global_context = self
            .global_context
            .iter()
            .map(|c| {
                let v = parse_vec(c)?;
                if v.len() != self.dim {
                    return Err(Error::Snapshot("global context dimension mismatch".into()));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(GwrNetwork {
            params,
            dim: self.dim,
            neurons,
            edges,
            temporal_counts,
            prev_bmu,
            global_context,
            next_id,
            rng_seed: self.rng_seed,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("snapshot serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Snapshot(e.to_string()))
    }
}

/// Envelope embedding both network snapshots plus the replay/imagination
/// configuration of a [`DualMemory`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualMemorySnapshot {
    pub version: u32,
    episodic: NetworkSnapshot,
    semantic: NetworkSnapshot,
    replay_enabled: bool,
    imagination_enabled: bool,
    trajectory_length: usize,
    replay_period: u64,
    imagination_n_per_class: usize,
    imagination_seed: u64,
    imagination_before_replay: bool,
    episodes_seen: u64,
}

impl DualMemorySnapshot {
    pub fn capture(dm: &DualMemory) -> Self {
        let c = dm.config();
        DualMemorySnapshot {
            version: SNAPSHOT_VERSION,
            episodic: NetworkSnapshot::capture(dm.episodic()),
            semantic: NetworkSnapshot::capture(dm.semantic()),
            replay_enabled: c.replay_enabled,
            imagination_enabled: c.imagination_enabled,
            trajectory_length: c.trajectory_length,
            replay_period: c.replay_period,
            imagination_n_per_class: c.imagination_n_per_class,
            imagination_seed: c.imagination_seed,
            imagination_before_replay: c.imagination_before_replay,
            episodes_seen: dm.episodes_seen(),
        }
    }

    pub fn restore(&self) -> Result<DualMemory> {
        if self.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot version {}",
                self.version
            )));
        }
        let config = DualMemoryConfig {
            replay_enabled: self.replay_enabled,
            imagination_enabled: self.imagination_enabled,
            trajectory_length: self.trajectory_length,
            replay_period: self.replay_period,
            imagination_n_per_class: self.imagination_n_per_class,
            imagination_seed: self.imagination_seed,
            imagination_before_replay: self.imagination_before_replay,
        };
        DualMemory::from_parts(
            self.episodic.restore()?,
            self.semantic.restore()?,
            config,
            self.episodes_seen,
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("snapshot serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Snapshot(e.to_string()))
    }
}

/// Serialized form of a [`TranslationModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslationSnapshot {
    pub version: u32,
    jitter_sigma: String,
    class_means: BTreeMap<String, Vec<String>>,
}

impl TranslationSnapshot {
    pub fn capture(model: &TranslationModel) -> Self {
        TranslationSnapshot {
            version: SNAPSHOT_VERSION,
            jitter_sigma: format_hex(model.jitter_sigma()),
            class_means: ClassLabel::ALL
                .iter()
                .map(|&l| (l.to_string(), format_vec(model.class_mean(l))))
                .collect(),
        }
    }

    pub fn restore(&self) -> Result<TranslationModel> {
        if self.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot version {}",
                self.version
            )));
        }
        let mut means = BTreeMap::new();
        for (name, v) in &self.class_means {
            means.insert(ClassLabel::from_str(name)?, parse_vec(v)?);
        }
        TranslationModel::from_parts(means, parse_hex(&self.jitter_sigma)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("snapshot serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Snapshot(e.to_string()))
    }
}

/// Any supported snapshot document, detected by its shape.
pub enum AnySnapshot {
    Network(NetworkSnapshot),
    DualMemory(DualMemorySnapshot),
    Translation(TranslationSnapshot),
}

impl AnySnapshot {
    pub fn from_json(s: &str) -> Result<Self> {
        if let Ok(d) = serde_json::from_str::<DualMemorySnapshot>(s) {
            return Ok(AnySnapshot::DualMemory(d));
        }
        if let Ok(n) = serde_json::from_str::<NetworkSnapshot>(s) {
            return Ok(AnySnapshot::Network(n));
        }
        if let Ok(t) = serde_json::from_str::<TranslationSnapshot>(s) {
            return Ok(AnySnapshot::Translation(t));
        }
        Err(Error::Snapshot("unrecognized snapshot document".into()))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AnySnapshot::Network(_) => "network",
            AnySnapshot::DualMemory(_) => "dual_memory",
            AnySnapshot::Translation(_) => "translation",
        }
    }

    /// Validates the embedded state and re-emits the canonical document.
    pub fn normalize(&self) -> Result<String> {
        Ok(match self {
            AnySnapshot::Network(n) => NetworkSnapshot::capture(&n.restore()?).to_json(),
            AnySnapshot::DualMemory(d) => DualMemorySnapshot::capture(&d.restore()?).to_json(),
            AnySnapshot::Translation(t) => {
                TranslationSnapshot::capture(&t.restore()?).to_json()
            }
        })
    }
}

pub fn write_file(path: impl AsRef<Path>, json: &str) -> Result<()> {
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_file(path: impl AsRef<Path>) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gwr::InsertionGate;

    fn trained_network() -> GwrNetwork {
        let mut net = GwrNetwork::new(
            GwrParams::episodic(),
            &[0.0, 0.5, 1.0],
            &[1.0, 0.0, -1.0],
            Some(ClassLabel::Neutral),
            Some(ClassLabel::Happy),
        )
        .unwrap();
        net.set_rng_seed(99);
        for i in 0..40 {
            let x = [i as f64 * 0.37 % 3.0, (i as f64 * 0.11) % 2.0, -0.5];
            let label = ClassLabel::ALL[i % 6];
            net.adapt(&x, Some(label), InsertionGate::Plain).unwrap();
        }
        net
    }

    #[test]
    fn network_round_trip_is_bit_exact() {
        let net = trained_network();
        let json = NetworkSnapshot::capture(&net).to_json();
        let restored = NetworkSnapshot::from_json(&json).unwrap().restore().unwrap();
        assert_eq!(restored, net);
        let json2 = NetworkSnapshot::capture(&restored).to_json();
        assert_eq!(json, json2);
    }

    #[test]
    fn snapshot_rejects_corrupted_documents() {
        let net = trained_network();
        let json = NetworkSnapshot::capture(&net).to_json();

        let mut snap = NetworkSnapshot::from_json(&json).unwrap();
        snap.version = 9;
        assert!(snap.restore().is_err());

        let bad = json.replace("\"version\": 1", "\"version\": \"x\"");
        assert!(NetworkSnapshot::from_json(&bad).is_err());
    }

    #[test]
    fn translation_round_trip() {
        let support: Vec<_> = ClassLabel::ALL
            .iter()
            .map(|&l| {
                crate::dataset::LabeledSequence::new(
                    "sup",
                    l,
                    vec![vec![l.index() as f64, 0.25, -1.5]],
                )
                .unwrap()
            })
            .collect();
        let model = crate::imagination::fit_translation(&support, 0.07).unwrap();
        let json = TranslationSnapshot::capture(&model).to_json();
        let restored = TranslationSnapshot::from_json(&json).unwrap().restore().unwrap();
        assert_eq!(restored, model);
        assert_eq!(TranslationSnapshot::capture(&restored).to_json(), json);
    }

    #[test]
    fn any_snapshot_detects_kind() {
        let net = trained_network();
        let json = NetworkSnapshot::capture(&net).to_json();
        assert_eq!(AnySnapshot::from_json(&json).unwrap().kind(), "network");
    }
}

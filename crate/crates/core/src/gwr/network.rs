//! A recurrent growing-when-required network.
//!
//! Neurons are prototype records carrying a weight vector, `K` temporal
//! context vectors, a habituation counter and per-class label frequencies.
//! The network keeps Hebbian edges with ages, counts temporal transitions
//! between consecutive winners, and maintains a recursively blended global
//! context that makes the distance measure sensitive to recent history.
//!
//! All collections are ordered, so iteration (and therefore every tie-break
//! and every serialized document) is deterministic.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;

use super::params::GwrParams;

/// Stable identifier for a neuron; never reused after deletion.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NeuronId(pub u64);

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One prototype record.
#[derive(Debug, Clone, PartialEq)]
pub struct Neuron {
    pub weight: Vec<f64>,
    /// Exactly `K` context vectors, each of the weight's dimension.
    pub contexts: Vec<Vec<f64>>,
    /// Firing counter in [0,1]; starts at 1 and decays toward `1 - 1/kappa`.
    pub habituation: f64,
    pub label_counts: BTreeMap<ClassLabel, u64>,
}

impl Neuron {
    fn new(weight: Vec<f64>, contexts: Vec<Vec<f64>>, label: Option<ClassLabel>) -> Self {
        let mut label_counts = BTreeMap::new();
        if let Some(l) = label {
            label_counts.insert(l, 1);
        }
        Neuron {
            weight,
            contexts,
            habituation: 1.0,
            label_counts,
        }
    }

    /// The most frequent label; ties broken by canonical class order.
    pub fn top_label(&self) -> Option<ClassLabel> {
        let mut best: Option<(ClassLabel, u64)> = None;
        for (&label, &count) in &self.label_counts {
            match best {
                Some((_, c)) if count <= c => {}
                _ => best = Some((label, count)),
            }
        }
        best.map(|(l, _)| l)
    }

    pub fn total_label_count(&self) -> u64 {
        self.label_counts.values().sum()
    }
}

/// Whether `adapt` may insert unconditionally or only on a label mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertionGate {
    /// Insert whenever activation and habituation both fall below threshold.
    Plain,
    /// Additionally require that the winner's top label differs from the
    /// sample label (no insertion for unlabeled samples).
    Misclassify,
}

/// What one `adapt` call did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub bmu: NeuronId,
    pub second: NeuronId,
    /// Distance at the winner, >= 0.
    pub distance: f64,
    /// `exp(-distance)`, in (0,1].
    pub activation: f64,
    pub inserted: bool,
    pub new_neuron: Option<NeuronId>,
    /// The winner's top label before any update.
    pub predicted_label: Option<ClassLabel>,
}

impl StepOutcome {
    /// The neuron that represents the input after the step: the inserted
    /// neuron when insertion fired, otherwise the winner.
    pub fn winner(&self) -> NeuronId {
        self.new_neuron.unwrap_or(self.bmu)
    }
}

/// Habituation update: `h' = clamp(h + tau * (kappa * (1 - h) - 1), 0, 1)`.
///
/// The fixed point is `1 - 1/kappa`; starting from 1 the counter decreases
/// strictly toward it.
pub fn habituate(h: f64, tau: f64, kappa: f64) -> f64 {
    (h + tau * (kappa * (1.0 - h) - 1.0)).clamp(0.0, 1.0)
}

fn edge_key(a: NeuronId, b: NeuronId) -> (NeuronId, NeuronId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A growing graph of prototypes with Hebbian edges and temporal transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct GwrNetwork {
    pub(crate) params: GwrParams,
    pub(crate) dim: usize,
    pub(crate) neurons: BTreeMap<NeuronId, Neuron>,
    /// Undirected edges keyed by the ordered endpoint pair, value = age.
    pub(crate) edges: BTreeMap<(NeuronId, NeuronId), u64>,
    /// Directed transition counts between consecutive winners.
    pub(crate) temporal_counts: BTreeMap<(NeuronId, NeuronId), u64>,
    pub(crate) prev_bmu: Option<NeuronId>,
    /// The `K` global context vectors used by the next `adapt` call.
    pub(crate) global_context: Vec<Vec<f64>>,
    pub(crate) next_id: u64,
    pub(crate) rng_seed: u64,
}

impl GwrNetwork {
    /// Bootstraps a network from two samples.
    ///
    /// The two neurons take the samples as weights, zeroed contexts,
    /// habituation 1 and a single age-0 edge between them.
    pub fn new(
        params: GwrParams,
        first: &[f64],
        second: &[f64],
        first_label: Option<ClassLabel>,
        second_label: Option<ClassLabel>,
    ) -> Result<Self> {
        params.validate()?;
        if first.is_empty() {
            return Err(Error::Config("bootstrap samples must have dimension >= 1".into()));
        }
        if first.len() != second.len() {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                got: second.len(),
            });
        }
        let dim = first.len();
        let k = params.context_depth;
        let zero_contexts = vec![vec![0.0; dim]; k];

        let mut neurons = BTreeMap::new();
        neurons.insert(
            NeuronId(0),
            Neuron::new(first.to_vec(), zero_contexts.clone(), first_label),
        );
        neurons.insert(
            NeuronId(1),
            Neuron::new(second.to_vec(), zero_contexts.clone(), second_label),
        );
        let mut edges = BTreeMap::new();
        edges.insert((NeuronId(0), NeuronId(1)), 0);

        Ok(GwrNetwork {
            params,
            dim,
            neurons,
            edges,
            temporal_counts: BTreeMap::new(),
            prev_bmu: None,
            global_context: zero_contexts,
            next_id: 2,
            rng_seed: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &GwrParams {
        &self.params
    }

    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    pub fn neuron(&self, id: NeuronId) -> Option<&Neuron> {
        self.neurons.get(&id)
    }

    pub fn neurons(&self) -> impl Iterator<Item = (NeuronId, &Neuron)> {
        self.neurons.iter().map(|(&id, n)| (id, n))
    }

    pub fn edges(&self) -> impl Iterator<Item = ((NeuronId, NeuronId), u64)> + '_ {
        self.edges.iter().map(|(&k, &v)| (k, v))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn temporal_counts(&self) -> impl Iterator<Item = ((NeuronId, NeuronId), u64)> + '_ {
        self.temporal_counts.iter().map(|(&k, &v)| (k, v))
    }

    /// The most frequent outgoing transition from `from`, ties to the
    /// smallest target id.
    pub fn strongest_transition(&self, from: NeuronId) -> Option<NeuronId> {
        let mut best: Option<(NeuronId, u64)> = None;
        for ((_, to), count) in self
            .temporal_counts
            .range((from, NeuronId(0))..=(from, NeuronId(u64::MAX)))
            .map(|(&k, &v)| (k, v))
        {
            match best {
                Some((_, c)) if count <= c => {}
                _ => best = Some((to, count)),
            }
        }
        best.map(|(to, _)| to)
    }

    pub fn prev_bmu(&self) -> Option<NeuronId> {
        self.prev_bmu
    }

    pub fn global_context(&self) -> &[Vec<f64>] {
        &self.global_context
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn set_rng_seed(&mut self, seed: u64) {
        self.rng_seed = seed;
    }

    /// Every label that appears in some neuron's frequency table.
    pub fn label_set(&self) -> std::collections::BTreeSet<ClassLabel> {
        self.neurons
            .values()
            .flat_map(|n| n.label_counts.keys().copied())
            .collect()
    }

    pub fn neighbours(&self, id: NeuronId) -> Vec<NeuronId> {
        self.edges
            .keys()
            .filter_map(|&(a, b)| {
                if a == id {
                    Some(b)
                } else if b == id {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Zeroes the global context and forgets the previous winner.
    ///
    /// Call between independent input sequences so that neither the context
    /// nor the transition counts bridge unrelated runs.
    pub fn reset_context(&mut self) {
        for c in &mut self.global_context {
            c.fill(0.0);
        }
        self.prev_bmu = None;
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: input.len(),
            });
        }
        Ok(())
    }

    fn check_context(&self, context: &[Vec<f64>]) -> Result<()> {
        if context.len() != self.params.context_depth {
            return Err(Error::DimensionMismatch {
                expected: self.params.context_depth,
                got: context.len(),
            });
        }
        for c in context {
            self.check_input(c)?;
        }
        Ok(())
    }

    fn distance_unchecked(&self, neuron: &Neuron, input: &[f64], context: &[Vec<f64>]) -> f64 {
        let alphas = &self.params.alphas;
        let mut d = alphas[0] * squared_distance(input, &neuron.weight);
        for (k, ctx) in context.iter().enumerate() {
            d += alphas[k + 1] * squared_distance(ctx, &neuron.contexts[k]);
        }
        d
    }

    /// Weighted squared distance between an input (plus context) and a neuron:
    /// `alpha_0 * |x - w|^2 + sum_k alpha_k * |C_k - c_k|^2`.
    pub fn distance(&self, id: NeuronId, input: &[f64], context: &[Vec<f64>]) -> Result<f64> {
        self.check_input(input)?;
        self.check_context(context)?;
        let neuron = self.neurons.get(&id).ok_or(Error::UnknownNeuron(id.0))?;
        Ok(self.distance_unchecked(neuron, input, context))
    }

    /// Best and second-best matching units; ties go to the lower id.
    pub fn find_bmu(
        &self,
        input: &[f64],
        context: &[Vec<f64>],
    ) -> Result<(NeuronId, NeuronId, f64)> {
        self.check_input(input)?;
        self.check_context(context)?;
        if self.neurons.len() < 2 {
            return Err(Error::State(format!(
                "winner search needs at least 2 neurons, have {}",
                self.neurons.len()
            )));
        }
        let mut best: Option<(NeuronId, f64)> = None;
        let mut second: Option<(NeuronId, f64)> = None;
        for (&id, neuron) in &self.neurons {
            let d = self.distance_unchecked(neuron, input, context);
            match best {
                Some((_, bd)) if d >= bd => match second {
                    Some((_, sd)) if d >= sd => {}
                    _ => second = Some((id, d)),
                },
                _ => {
                    second = best;
                    best = Some((id, d));
                }
            }
        }
        let (b, bd) = best.expect("at least two neurons");
        let (s, _) = second.expect("at least two neurons");
        Ok((b, s, bd))
    }

    /// Runs one full learning step and reports what happened.
    pub fn adapt(
        &mut self,
        input: &[f64],
        label: Option<ClassLabel>,
        gate: InsertionGate,
    ) -> Result<StepOutcome> {
        self.check_input(input)?;
        let p = self.params.clone();
        let context = self.global_context.clone();

        // 1-2: winner search against the current global context.
        let (bmu, second, dist) = self.find_bmu(input, &context)?;
        let activation = (-dist).exp();
        let (weight_before, contexts_before, h_b, predicted_label) = {
            let n = &self.neurons[&bmu];
            (n.weight.clone(), n.contexts.clone(), n.habituation, n.top_label())
        };

        // 3: refresh the winner pair's edge.
        self.edges.insert(edge_key(bmu, second), 0);

        // 4-5: insert a new prototype, or train the winner and its neighbours.
        let gate_open = match gate {
            InsertionGate::Plain => true,
            InsertionGate::Misclassify => match label {
                Some(l) => predicted_label != Some(l),
                None => false,
            },
        };
        let inserted =
            activation < p.insertion_threshold && h_b < p.habituation_threshold && gate_open;
        let mut new_neuron = None;
        if inserted {
            let id = NeuronId(self.next_id);
            self.next_id += 1;
            let weight = midpoint(&weight_before, input);
            let contexts = contexts_before
                .iter()
                .zip(&context)
                .map(|(c, g)| midpoint(c, g))
                .collect();
            self.neurons.insert(id, Neuron::new(weight, contexts, label));
            self.edges.remove(&edge_key(bmu, second));
            self.edges.insert(edge_key(id, bmu), 0);
            self.edges.insert(edge_key(id, second), 0);
            new_neuron = Some(id);
        } else {
            let step = p.eps_b * h_b;
            {
                let n = self.neurons.get_mut(&bmu).expect("winner exists");
                move_toward(&mut n.weight, input, step);
                for (c, g) in n.contexts.iter_mut().zip(&context) {
                    move_toward(c, g, step);
                }
                if let Some(l) = label {
                    *n.label_counts.entry(l).or_insert(0) += 1;
                }
            }
            for nb in self.neighbours(bmu) {
                let n = self.neurons.get_mut(&nb).expect("neighbour exists");
                let step = p.eps_n * n.habituation;
                move_toward(&mut n.weight, input, step);
            }
        }

        // 6: habituate the winner and its current neighbours.
        let neighbours = self.neighbours(bmu);
        {
            let n = self.neurons.get_mut(&bmu).expect("winner exists");
            n.habituation = habituate(n.habituation, p.tau_b, p.kappa);
        }
        for nb in neighbours {
            let n = self.neurons.get_mut(&nb).expect("neighbour exists");
            n.habituation = habituate(n.habituation, p.tau_n, p.kappa);
        }

        // 7: age the winner's edges, drop expired ones, prune isolated neurons.
        let incident: Vec<(NeuronId, NeuronId)> = self
            .edges
            .keys()
            .filter(|&&(a, b)| a == bmu || b == bmu)
            .copied()
            .collect();
        for key in incident {
            let age = self.edges.get_mut(&key).expect("edge exists");
            *age += 1;
            if *age > p.max_edge_age {
                self.edges.remove(&key);
            }
        }
        if p.prune_isolated {
            self.prune_isolated_neurons();
        }

        // 8: record the temporal transition.
        if let Some(prev) = self.prev_bmu {
            *self.temporal_counts.entry((prev, bmu)).or_insert(0) += 1;
        }
        self.prev_bmu = Some(bmu);

        // 9: context recursion from the winner's pre-step values.
        self.roll_context(&weight_before, &contexts_before);

        Ok(StepOutcome {
            bmu,
            second,
            distance: dist,
            activation,
            inserted,
            new_neuron,
            predicted_label,
        })
    }

    /// `C_1 <- beta*w_b + (1-beta)*c_{b,1}`, `C_k <- beta*c_{b,k-1} + (1-beta)*c_{b,k}`.
    fn roll_context(&mut self, bmu_weight: &[f64], bmu_contexts: &[Vec<f64>]) {
        let beta = self.params.beta;
        for (k, global) in self.global_context.iter_mut().enumerate() {
            let lower = if k == 0 { bmu_weight } else { &bmu_contexts[k - 1] };
            let own = &bmu_contexts[k];
            for ((g, &lo), &ow) in global.iter_mut().zip(lower).zip(own) {
                *g = beta * lo + (1.0 - beta) * ow;
            }
        }
    }

    fn prune_isolated_neurons(&mut self) {
        while self.neurons.len() > 2 {
            let isolated = self
                .neurons
                .keys()
                .find(|&&id| !self.edges.keys().any(|&(a, b)| a == id || b == id))
                .copied();
            let Some(id) = isolated else { break };
            self.neurons.remove(&id);
            self.temporal_counts.retain(|&(a, b), _| a != id && b != id);
            if self.prev_bmu == Some(id) {
                self.prev_bmu = None;
            }
        }
    }

    /// Classifies a sequence without mutating the network.
    ///
    /// Streams the frames against a fresh zero context, updating only a local
    /// copy of the context recursion, and returns the top label of the final
    /// frame's winner. If that winner carries no label votes, the nearest
    /// labeled neuron on the final frame decides instead.
    pub fn predict(&self, frames: &[Vec<f64>]) -> Result<ClassLabel> {
        if frames.is_empty() {
            return Err(Error::Input("cannot classify an empty sequence".into()));
        }
        if self.neurons.len() < 2 {
            return Err(Error::State(format!(
                "classification needs at least 2 neurons, have {}",
                self.neurons.len()
            )));
        }
        if !self.neurons.values().any(|n| !n.label_counts.is_empty()) {
            return Err(Error::UnlabeledNetwork);
        }

        let mut context = vec![vec![0.0; self.dim]; self.params.context_depth];
        let mut result = None;
        let last = frames.len() - 1;
        for (i, frame) in frames.iter().enumerate() {
            self.check_input(frame)?;
            let (bmu, _, _) = self.find_bmu(frame, &context)?;
            if i == last {
                let neuron = &self.neurons[&bmu];
                result = match neuron.top_label() {
                    Some(l) => Some(l),
                    None => self.best_labeled(frame, &context),
                };
            }
            let (w, c) = {
                let n = &self.neurons[&bmu];
                (n.weight.clone(), n.contexts.clone())
            };
            // Mirror the training-time recursion on the local copy.
            let beta = self.params.beta;
            for (k, global) in context.iter_mut().enumerate() {
                let lower = if k == 0 { &w } else { &c[k - 1] };
                for ((g, &lo), &ow) in global.iter_mut().zip(lower).zip(&c[k]) {
                    *g = beta * lo + (1.0 - beta) * ow;
                }
            }
        }
        result.ok_or(Error::UnlabeledNetwork)
    }

    fn best_labeled(&self, input: &[f64], context: &[Vec<f64>]) -> Option<ClassLabel> {
        let mut best: Option<(f64, ClassLabel)> = None;
        for neuron in self.neurons.values() {
            let Some(label) = neuron.top_label() else { continue };
            let d = self.distance_unchecked(neuron, input, context);
            match best {
                Some((bd, _)) if d >= bd => {}
                _ => best = Some((d, label)),
            }
        }
        best.map(|(_, l)| l)
    }

    /// All prototypes whose top label equals `class`, in id order.
    pub fn prototypes_of(&self, class: ClassLabel) -> Vec<(Vec<f64>, Vec<Vec<f64>>)> {
        self.neurons
            .values()
            .filter(|n| n.top_label() == Some(class))
            .map(|n| (n.weight.clone(), n.contexts.clone()))
            .collect()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| 0.5 * (x + y)).collect()
}

fn move_toward(target: &mut [f64], toward: &[f64], step: f64) {
    for (t, &x) in target.iter_mut().zip(toward) {
        *t += step * (x - *t);
    }
}

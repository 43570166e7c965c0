//! The growing dual memory: a fast episodic network feeding winners into a
//! slow semantic network, with trajectory-based pseudo-rehearsal and optional
//! imagination-based augmentation.

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledSequence;
use crate::error::{Error, Result};
use crate::gwr::{GwrNetwork, GwrParams, InsertionGate, NeuronId};
use crate::imagination::ImaginationGenerator;
use crate::label::ClassLabel;

/// Replay and imagination settings of a [`DualMemory`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DualMemoryConfig {
    pub replay_enabled: bool,
    pub imagination_enabled: bool,
    /// Frames per replay trajectory, >= 2.
    pub trajectory_length: usize,
    /// Episodes between replays, >= 1.
    pub replay_period: u64,
    /// Imagined samples requested per class each episode.
    pub imagination_n_per_class: usize,
    /// Base seed for per-episode imagination draws.
    pub imagination_seed: u64,
    /// Run imagination before replay instead of after.
    pub imagination_before_replay: bool,
}

impl Default for DualMemoryConfig {
    fn default() -> Self {
        DualMemoryConfig {
            replay_enabled: false,
            imagination_enabled: false,
            trajectory_length: 3,
            replay_period: 1,
            imagination_n_per_class: 6,
            imagination_seed: 0,
            imagination_before_replay: false,
        }
    }
}

impl DualMemoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trajectory_length < 2 {
            return Err(Error::Config(format!(
                "trajectory_length must be >= 2, got {}",
                self.trajectory_length
            )));
        }
        if self.replay_period == 0 {
            return Err(Error::Config("replay_period must be >= 1".into()));
        }
        if self.imagination_n_per_class == 0 && self.imagination_enabled {
            return Err(Error::Config("imagination_n_per_class must be >= 1".into()));
        }
        Ok(())
    }
}

/// A neural activation trajectory ready for rehearsal.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayTrajectory {
    /// Exactly `trajectory_length` prototype vectors.
    pub frames: Vec<Vec<f64>>,
    /// Top label of the start neuron.
    pub label: ClassLabel,
}

/// Counters describing one learning episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub class_learned: ClassLabel,
    pub episodic_size: usize,
    pub semantic_size: usize,
    pub episodic_insertions: usize,
    pub semantic_insertions: usize,
    pub replayed_trajectories: usize,
    pub imagined_samples: usize,
}

/// Episodic + semantic network pair with replay/imagination wiring.
#[derive(Debug, Clone, PartialEq)]
pub struct DualMemory {
    episodic: GwrNetwork,
    semantic: GwrNetwork,
    config: DualMemoryConfig,
    episodes_seen: u64,
}

impl DualMemory {
    pub fn new(episodic: GwrNetwork, semantic: GwrNetwork, config: DualMemoryConfig) -> Result<Self> {
        if episodic.dim() != semantic.dim() {
            return Err(Error::DimensionMismatch {
                expected: episodic.dim(),
                got: semantic.dim(),
            });
        }
        config.validate()?;
        Ok(DualMemory {
            episodic,
            semantic,
            config,
            episodes_seen: 0,
        })
    }

    /// Bootstraps both networks from the first (up to) two frames of a
    /// sequence, labeled with the sequence's class.
    pub fn bootstrap(
        episodic_params: GwrParams,
        semantic_params: GwrParams,
        config: DualMemoryConfig,
        seed_sequence: &LabeledSequence,
    ) -> Result<Self> {
        let frames = seed_sequence.frames();
        let first = &frames[0];
        let second = frames.get(1).unwrap_or(first);
        let label = Some(seed_sequence.label);
        let episodic = GwrNetwork::new(episodic_params, first, second, label, label)?;
        let semantic = GwrNetwork::new(semantic_params, first, second, label, label)?;
        Self::new(episodic, semantic, config)
    }

    pub(crate) fn from_parts(
        episodic: GwrNetwork,
        semantic: GwrNetwork,
        config: DualMemoryConfig,
        episodes_seen: u64,
    ) -> Result<Self> {
        let mut dm = Self::new(episodic, semantic, config)?;
        dm.episodes_seen = episodes_seen;
        Ok(dm)
    }

    pub fn episodic(&self) -> &GwrNetwork {
        &self.episodic
    }

    pub fn semantic(&self) -> &GwrNetwork {
        &self.semantic
    }

    pub fn config(&self) -> &DualMemoryConfig {
        &self.config
    }

    pub fn episodes_seen(&self) -> u64 {
        self.episodes_seen
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.episodic.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.episodic.dim(),
                got: dim,
            });
        }
        Ok(())
    }

    /// Learns one single-class episode.
    ///
    /// Feeds every frame of every sequence to the episodic network, then
    /// propagates the distinct winners (in first-seen order) with the episode
    /// label into the semantic network. Depending on the configuration, the
    /// episode ends with trajectory replay into both networks and with
    /// imagined samples for all six classes.
    pub fn learn_episode(
        &mut self,
        batch: &[LabeledSequence],
        generator: Option<&dyn ImaginationGenerator>,
    ) -> Result<EpisodeReport> {
        let Some(first) = batch.first() else {
            return Err(Error::Protocol("episode batch is empty".into()));
        };
        let label = first.label;
        if let Some(other) = batch.iter().find(|s| s.label != label) {
            return Err(Error::Protocol(format!(
                "episode mixes labels `{label}` and `{}`",
                other.label
            )));
        }
        for seq in batch {
            self.check_dim(seq.dim())?;
        }
        self.episodes_seen += 1;

        let mut episodic_insertions = 0usize;
        let mut semantic_insertions = 0usize;
        let mut winners: Vec<NeuronId> = Vec::new();
        for seq in batch {
            self.episodic.reset_context();
            for frame in seq.frames() {
                let out = self.episodic.adapt(frame, Some(label), InsertionGate::Plain)?;
                episodic_insertions += out.inserted as usize;
                let w = out.winner();
                if !winners.contains(&w) {
                    winners.push(w);
                }
            }
        }
        semantic_insertions += self.propagate_winners(&winners, label)?;

        let mut replayed_trajectories = 0usize;
        let mut imagined_samples = 0usize;
        let replay_due = self.config.replay_enabled
            && self.episodes_seen % self.config.replay_period == 0;

        let run_replay = |dm: &mut Self| -> Result<(usize, usize, usize)> {
            if !replay_due {
                return Ok((0, 0, 0));
            }
            let trajectories =
                build_trajectories(&dm.episodic, dm.config.trajectory_length);
            dm.replay_inner(&trajectories)
        };
        let run_imagination = |dm: &mut Self,
                               generator: Option<&dyn ImaginationGenerator>|
         -> Result<(usize, usize, usize)> {
            let Some(generator) = generator else {
                return Ok((0, 0, 0));
            };
            if !dm.config.imagination_enabled {
                return Ok((0, 0, 0));
            }
            // Strongest prototypes first: the most frequent winners are the
            // cluster cores, and the round-robin in the generator consumes
            // prototypes from the front.
            let mut scored: Vec<(u64, Vec<f64>)> = dm
                .episodic
                .neurons()
                .filter(|(_, n)| n.top_label() == Some(label))
                .map(|(_, n)| {
                    (
                        n.label_counts.get(&label).copied().unwrap_or(0),
                        n.weight.clone(),
                    )
                })
                .collect();
            scored.sort_by(|a, b| b.0.cmp(&a.0));
            let prototypes: Vec<(Vec<f64>, ClassLabel)> =
                scored.into_iter().map(|(_, w)| (w, label)).collect();
            if prototypes.is_empty() {
                return Ok((0, 0, 0));
            }
            let seed = dm.config.imagination_seed.wrapping_add(dm.episodes_seen);
            let samples = generator.imagine(
                &prototypes,
                &ClassLabel::ALL,
                dm.config.imagination_n_per_class,
                seed,
            )?;
            dm.integrate_inner(&samples)
        };

        if self.config.imagination_before_replay {
            let (n, ei, si) = run_imagination(self, generator)?;
            imagined_samples += n;
            episodic_insertions += ei;
            semantic_insertions += si;
            let (n, ei, si) = run_replay(self)?;
            replayed_trajectories += n;
            episodic_insertions += ei;
            semantic_insertions += si;
        } else {
            let (n, ei, si) = run_replay(self)?;
            replayed_trajectories += n;
            episodic_insertions += ei;
            semantic_insertions += si;
            let (n, ei, si) = run_imagination(self, generator)?;
            imagined_samples += n;
            episodic_insertions += ei;
            semantic_insertions += si;
        }

        Ok(EpisodeReport {
            class_learned: label,
            episodic_size: self.episodic.neuron_count(),
            semantic_size: self.semantic.neuron_count(),
            episodic_insertions,
            semantic_insertions,
            replayed_trajectories,
            imagined_samples,
        })
    }

    /// Feeds distinct episodic winners into the semantic network as one
    /// labeled stream under the misclassification gate.
    fn propagate_winners(&mut self, winners: &[NeuronId], label: ClassLabel) -> Result<usize> {
        let mut insertions = 0usize;
        self.semantic.reset_context();
        for id in winners {
            // A winner may have been pruned by later activity in the episode.
            let Some(neuron) = self.episodic.neuron(*id) else {
                continue;
            };
            let weight = neuron.weight.clone();
            let out = self
                .semantic
                .adapt(&weight, Some(label), InsertionGate::Misclassify)?;
            insertions += out.inserted as usize;
        }
        Ok(insertions)
    }

    /// Streams trajectories into both networks; returns the replayed count.
    pub fn replay(&mut self, trajectories: &[ReplayTrajectory]) -> Result<usize> {
        self.replay_inner(trajectories).map(|(n, _, _)| n)
    }

    fn replay_inner(
        &mut self,
        trajectories: &[ReplayTrajectory],
    ) -> Result<(usize, usize, usize)> {
        for t in trajectories {
            for frame in &t.frames {
                self.check_dim(frame.len())?;
            }
        }
        let mut episodic_insertions = 0usize;
        let mut semantic_insertions = 0usize;
        for trajectory in trajectories {
            self.episodic.reset_context();
            let mut winners: Vec<NeuronId> = Vec::new();
            for frame in &trajectory.frames {
                let out = self
                    .episodic
                    .adapt(frame, Some(trajectory.label), InsertionGate::Plain)?;
                episodic_insertions += out.inserted as usize;
                let w = out.winner();
                if !winners.contains(&w) {
                    winners.push(w);
                }
            }
            semantic_insertions += self.propagate_winners(&winners, trajectory.label)?;
        }
        Ok((trajectories.len(), episodic_insertions, semantic_insertions))
    }

    /// Streams imagined samples as one-frame labeled sequences; returns how
    /// many were integrated.
    pub fn integrate_imagined(&mut self, samples: &[(Vec<f64>, ClassLabel)]) -> Result<usize> {
        self.integrate_inner(samples).map(|(n, _, _)| n)
    }

    fn integrate_inner(
        &mut self,
        samples: &[(Vec<f64>, ClassLabel)],
    ) -> Result<(usize, usize, usize)> {
        for (sample, _) in samples {
            self.check_dim(sample.len())?;
        }
        let mut episodic_insertions = 0usize;
        let mut semantic_insertions = 0usize;
        for (sample, label) in samples {
            self.episodic.reset_context();
            let out = self
                .episodic
                .adapt(sample, Some(*label), InsertionGate::Plain)?;
            episodic_insertions += out.inserted as usize;
            semantic_insertions += self.propagate_winners(&[out.winner()], *label)?;
        }
        Ok((samples.len(), episodic_insertions, semantic_insertions))
    }

    /// Classifies a sequence with both heads; side-effect free.
    pub fn classify(&self, frames: &[Vec<f64>]) -> Result<(ClassLabel, ClassLabel)> {
        Ok((self.episodic.predict(frames)?, self.semantic.predict(frames)?))
    }
}

/// Builds one trajectory per labeled episodic neuron.
///
/// Starting from each neuron, repeatedly hops to the strongest outgoing
/// temporal transition (ties to the smallest id) until `trajectory_length`
/// frames are collected; a node without outgoing transitions repeats its own
/// frame. Unlabeled start neurons are skipped.
pub fn build_trajectories(episodic: &GwrNetwork, trajectory_length: usize) -> Vec<ReplayTrajectory> {
    let mut trajectories = Vec::new();
    for (id, neuron) in episodic.neurons() {
        let Some(label) = neuron.top_label() else {
            continue;
        };
        let mut frames = vec![neuron.weight.clone()];
        let mut current = id;
        while frames.len() < trajectory_length {
            match episodic.strongest_transition(current) {
                Some(to) => {
                    frames.push(
                        episodic
                            .neuron(to)
                            .expect("transition targets are live")
                            .weight
                            .clone(),
                    );
                    current = to;
                }
                None => {
                    let pad = episodic
                        .neuron(current)
                        .expect("current neuron is live")
                        .weight
                        .clone();
                    while frames.len() < trajectory_length {
                        frames.push(pad.clone());
                    }
                }
            }
        }
        trajectories.push(ReplayTrajectory { frames, label });
    }
    trajectories
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabeledSequence;

    fn flat(params: GwrParams) -> GwrParams {
        GwrParams {
            context_depth: 0,
            alphas: vec![1.0],
            ..params
        }
    }

    fn seq(label: ClassLabel, frames: Vec<Vec<f64>>) -> LabeledSequence {
        LabeledSequence::new("t", label, frames).unwrap()
    }

    fn fresh_dm(config: DualMemoryConfig) -> DualMemory {
        let boot = seq(ClassLabel::Neutral, vec![vec![0.0, 0.0], vec![0.2, 0.0]]);
        DualMemory::bootstrap(
            flat(GwrParams::episodic()),
            flat(GwrParams::semantic()),
            config,
            &boot,
        )
        .unwrap()
    }

    #[test]
    fn rejects_mixed_and_empty_batches() {
        let mut dm = fresh_dm(DualMemoryConfig::default());
        assert!(matches!(
            dm.learn_episode(&[], None),
            Err(Error::Protocol(_))
        ));
        let batch = [
            seq(ClassLabel::Happy, vec![vec![1.0, 0.0]]),
            seq(ClassLabel::Fear, vec![vec![2.0, 0.0]]),
        ];
        assert!(matches!(
            dm.learn_episode(&batch, None),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn semantic_receives_exactly_the_distinct_winners() {
        let mut dm = fresh_dm(DualMemoryConfig::default());
        let batch = [seq(
            ClassLabel::Happy,
            vec![vec![5.0, 0.0], vec![5.1, 0.0], vec![5.0, 0.1]],
        )];

        // Drive a clone of the episodic network by hand to derive the winner
        // stream, then feed it to a clone of the semantic network.
        let mut episodic_ref = dm.episodic().clone();
        let mut expected_semantic = dm.semantic().clone();
        episodic_ref.reset_context();
        let mut winners = Vec::new();
        for frame in batch[0].frames() {
            let out = episodic_ref
                .adapt(frame, Some(ClassLabel::Happy), InsertionGate::Plain)
                .unwrap();
            let w = out.winner();
            if !winners.contains(&w) {
                winners.push(w);
            }
        }
        expected_semantic.reset_context();
        for id in &winners {
            let w = episodic_ref.neuron(*id).unwrap().weight.clone();
            expected_semantic
                .adapt(&w, Some(ClassLabel::Happy), InsertionGate::Misclassify)
                .unwrap();
        }

        dm.learn_episode(&batch, None).unwrap();
        assert_eq!(dm.episodic(), &episodic_ref);
        assert_eq!(dm.semantic(), &expected_semantic);
    }

    #[test]
    fn trajectory_follows_strongest_transitions() {
        // Network with neurons at distinct points and a hand-built transition
        // table: (1,2):5, (1,3):2, (2,3):4.
        let mut net = GwrNetwork::new(
            flat(GwrParams::episodic()),
            &[1.0, 0.0],
            &[2.0, 0.0],
            Some(ClassLabel::Happy),
            Some(ClassLabel::Happy),
        )
        .unwrap();
        // Grow two more neurons by direct steps so ids 2 and 3 exist.
        net.neurons.insert(
            NeuronId(2),
            crate::gwr::Neuron {
                weight: vec![3.0, 0.0],
                contexts: vec![],
                habituation: 1.0,
                label_counts: [(ClassLabel::Happy, 1)].into_iter().collect(),
            },
        );
        net.neurons.insert(
            NeuronId(3),
            crate::gwr::Neuron {
                weight: vec![4.0, 0.0],
                contexts: vec![],
                habituation: 1.0,
                label_counts: [(ClassLabel::Happy, 1)].into_iter().collect(),
            },
        );
        net.next_id = 4;
        net.temporal_counts.insert((NeuronId(1), NeuronId(2)), 5);
        net.temporal_counts.insert((NeuronId(1), NeuronId(3)), 2);
        net.temporal_counts.insert((NeuronId(2), NeuronId(3)), 4);

        let trajectories = build_trajectories(&net, 3);
        assert_eq!(trajectories.len(), 4);
        // Start neuron 1 hops to 2 (count 5 beats 2), then 2 hops to 3.
        let start1 = &trajectories[1];
        assert_eq!(
            start1.frames,
            vec![vec![2.0, 0.0], vec![3.0, 0.0], vec![4.0, 0.0]]
        );
        // Neuron 3 has no outgoing transitions: its frame repeats.
        let start3 = &trajectories[3];
        assert_eq!(
            start3.frames,
            vec![vec![4.0, 0.0], vec![4.0, 0.0], vec![4.0, 0.0]]
        );
        // Neuron 0 has no outgoing transitions either.
        assert_eq!(trajectories[0].frames, vec![vec![1.0, 0.0]; 3]);
    }

    #[test]
    fn unlabeled_neurons_produce_no_trajectories() {
        let net = GwrNetwork::new(
            flat(GwrParams::episodic()),
            &[0.0, 0.0],
            &[1.0, 0.0],
            None,
            None,
        )
        .unwrap();
        assert!(build_trajectories(&net, 3).is_empty());
    }

    #[test]
    fn empty_replay_leaves_networks_untouched() {
        let mut dm = fresh_dm(DualMemoryConfig::default());
        let before = dm.clone();
        assert_eq!(dm.replay(&[]).unwrap(), 0);
        assert_eq!(dm, before);
    }

    #[test]
    fn replay_counts_trajectories() {
        let mut dm = fresh_dm(DualMemoryConfig::default());
        let trajectories = vec![
            ReplayTrajectory {
                frames: vec![vec![0.0, 0.0]; 3],
                label: ClassLabel::Neutral,
            },
            ReplayTrajectory {
                frames: vec![vec![0.2, 0.0]; 3],
                label: ClassLabel::Neutral,
            },
        ];
        assert_eq!(dm.replay(&trajectories).unwrap(), 2);
    }

    #[test]
    fn replay_of_perfect_prototype_does_not_grow_semantic() {
        let mut dm = fresh_dm(DualMemoryConfig::default());
        let before = dm.semantic().neuron_count();
        // The bootstrap neuron's own weight, correctly labeled: the
        // misclassification gate keeps the semantic network fixed.
        let trajectory = ReplayTrajectory {
            frames: vec![vec![0.0, 0.0]; 3],
            label: ClassLabel::Neutral,
        };
        dm.replay(&[trajectory]).unwrap();
        assert_eq!(dm.semantic().neuron_count(), before);
    }

    #[test]
    fn integrate_imagined_covers_all_classes() {
        let mut dm = fresh_dm(DualMemoryConfig::default());
        let before = dm.clone();
        assert_eq!(dm.integrate_imagined(&[]).unwrap(), 0);
        assert_eq!(dm, before);

        let samples: Vec<(Vec<f64>, ClassLabel)> = ClassLabel::ALL
            .iter()
            .enumerate()
            .map(|(i, &l)| (vec![i as f64 * 2.0, 3.0], l))
            .collect();
        assert_eq!(dm.integrate_imagined(&samples).unwrap(), 6);
        let labels = dm.episodic().label_set();
        assert_eq!(labels.len(), 6);
    }

    #[test]
    fn learn_episode_report_counts() {
        let mut dm = fresh_dm(DualMemoryConfig {
            replay_enabled: true,
            ..DualMemoryConfig::default()
        });
        let batch = [seq(ClassLabel::Happy, vec![vec![6.0, 0.0], vec![6.2, 0.0]])];
        let report = dm.learn_episode(&batch, None).unwrap();
        assert_eq!(report.class_learned, ClassLabel::Happy);
        assert_eq!(report.episodic_size, dm.episodic().neuron_count());
        assert_eq!(report.semantic_size, dm.semantic().neuron_count());
        // Every episodic neuron is labeled, so each contributes a trajectory.
        assert_eq!(report.replayed_trajectories, dm.episodic().neuron_count());
        assert_eq!(report.imagined_samples, 0);
    }

    #[test]
    fn labels_never_disappear() {
        let mut dm = fresh_dm(DualMemoryConfig {
            replay_enabled: true,
            ..DualMemoryConfig::default()
        });
        let mut seen = dm.episodic().label_set();
        for (i, label) in ClassLabel::ALL.iter().enumerate() {
            let x = 3.0 * (i as f64 + 1.0);
            let batch = [seq(*label, vec![vec![x, 0.0], vec![x + 0.1, 0.0]])];
            dm.learn_episode(&batch, None).unwrap();
            let now_epi = dm.episodic().label_set();
            let now_sem = dm.semantic().label_set();
            assert!(seen.iter().all(|l| now_epi.contains(l)));
            seen = now_epi;
            assert!(now_sem.contains(label));
        }
    }

    #[test]
    fn classify_is_pure() {
        let mut dm = fresh_dm(DualMemoryConfig::default());
        let batch = [seq(ClassLabel::Happy, vec![vec![4.0, 0.0], vec![4.1, 0.0]])];
        dm.learn_episode(&batch, None).unwrap();
        let before = dm.clone();
        let (e, s) = dm.classify(&[vec![4.0, 0.0]]).unwrap();
        assert_eq!(dm, before);
        let _ = (e, s);
        assert!(matches!(dm.classify(&[]), Err(Error::Input(_))));
    }

    #[test]
    fn single_class_memory_answers_that_class() {
        let mut dm = fresh_dm(DualMemoryConfig::default());
        let batch = [seq(
            ClassLabel::Neutral,
            vec![vec![0.1, 0.0], vec![0.0, 0.1]],
        )];
        dm.learn_episode(&batch, None).unwrap();
        let (e, s) = dm.classify(&[vec![9.0, 9.0]]).unwrap();
        assert_eq!(e, ClassLabel::Neutral);
        assert_eq!(s, ClassLabel::Neutral);
    }
}

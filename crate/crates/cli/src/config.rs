//! Experiment configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use clifer_core::{ClassLabel, GwrParams, SynthConfig};

use crate::baseline::BaselineConfig;
use crate::variant::Variant;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Remembering seen classes: evaluate on classes learned so far.
    Exp1,
    /// Generalising to unseen classes: evaluate on all six classes.
    Exp2,
    /// Six class orders, Kruskal-Wallis over final semantic scores.
    Orders,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Exp1 => "exp1",
            ExperimentKind::Exp2 => "exp2",
            ExperimentKind::Orders => "orders",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrdersMode {
    Fixed,
    SixStarts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SynthConfig),
    Csv(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Class-mean translation fitted on the other subjects' training data.
    Translation,
    /// Ground-truth oracle; synthetic data only.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KwGrouping {
    /// One value per (subject, seed): final-episode semantic F1.
    FinalEpisode,
    /// One value per (subject, seed, episode).
    PerEpisode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImaginationConfig {
    pub generator: GeneratorKind,
    pub n_per_class: usize,
    /// Translation jitter; `None` derives 5% of the synthetic class gap.
    pub jitter_sigma: Option<f64>,
    /// Noise of the oracle generator.
    pub oracle_sigma: f64,
}

impl Default for ImaginationConfig {
    fn default() -> Self {
        ImaginationConfig {
            generator: GeneratorKind::Translation,
            n_per_class: 6,
            jitter_sigma: None,
            oracle_sigma: 0.0,
        }
    }
}

/// Tunable parameters accepted from a `--params` file; protocol-level choices
/// (experiment, variants, data, seeds, order, output) come from CLI flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamsFile {
    pub episodic: GwrParams,
    pub semantic: GwrParams,
    pub imagination: ImaginationConfig,
    pub trajectory_length: usize,
    pub replay_period: u64,
    pub test_fraction: f64,
    pub baseline: BaselineConfig,
    pub kw_grouping: KwGrouping,
}

impl Default for ParamsFile {
    fn default() -> Self {
        ParamsFile {
            episodic: GwrParams::episodic(),
            semantic: GwrParams::semantic(),
            imagination: ImaginationConfig::default(),
            trajectory_length: 3,
            replay_period: 1,
            test_fraction: 0.3,
            baseline: BaselineConfig::default(),
            kw_grouping: KwGrouping::FinalEpisode,
        }
    }
}

/// Everything one experiment run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub variants: Vec<Variant>,
    /// Learning order; must be a permutation of the six classes.
    pub class_order: Vec<ClassLabel>,
    pub orders_mode: OrdersMode,
    pub data: DataSource,
    pub seeds: Vec<u64>,
    pub test_fraction: f64,
    pub episodic: GwrParams,
    pub semantic: GwrParams,
    pub imagination: ImaginationConfig,
    pub trajectory_length: usize,
    pub replay_period: u64,
    pub baseline: BaselineConfig,
    pub kw_grouping: KwGrouping,
    /// Synthetic-control knob: scales extra imagination noise by the
    /// canonical index of the first class in the order.
    pub order_effect_bias: Option<f64>,
    pub out_dir: PathBuf,
}

pub fn default_class_order() -> Vec<ClassLabel> {
    ClassLabel::ALL.to_vec()
}

impl ExperimentConfig {
    pub fn new(
        experiment: ExperimentKind,
        variants: Vec<Variant>,
        data: DataSource,
        seeds: Vec<u64>,
        params: ParamsFile,
        out_dir: PathBuf,
    ) -> Self {
        ExperimentConfig {
            experiment,
            variants,
            class_order: default_class_order(),
            orders_mode: if experiment == ExperimentKind::Orders {
                OrdersMode::SixStarts
            } else {
                OrdersMode::Fixed
            },
            data,
            seeds,
            test_fraction: params.test_fraction,
            episodic: params.episodic,
            semantic: params.semantic,
            imagination: params.imagination,
            trajectory_length: params.trajectory_length,
            replay_period: params.replay_period,
            baseline: params.baseline,
            kw_grouping: params.kw_grouping,
            order_effect_bias: None,
            out_dir,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.variants.is_empty() {
            return Err(HarnessError::Usage("no variants selected".into()));
        }
        let mut seen = self.variants.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.variants.len() {
            return Err(HarnessError::Usage("duplicate variant".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Usage("no seeds given".into()));
        }
        let mut order = self.class_order.clone();
        order.sort();
        order.dedup();
        if order.len() != 6 || self.class_order.len() != 6 {
            return Err(HarnessError::Usage(
                "class order must be a permutation of the 6 classes".into(),
            ));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(HarnessError::Usage(format!(
                "test_fraction must lie in (0,1), got {}",
                self.test_fraction
            )));
        }
        self.episodic.validate()?;
        self.semantic.validate()?;
        if self.experiment == ExperimentKind::Orders {
            if self.orders_mode != OrdersMode::SixStarts {
                return Err(HarnessError::Usage(
                    "order sensitivity requires six_starts mode".into(),
                ));
            }
            if self.variants.len() != 1 {
                return Err(HarnessError::Usage(
                    "order sensitivity runs exactly one variant".into(),
                ));
            }
        }
        if self.imagination.generator == GeneratorKind::Oracle {
            if let DataSource::Csv(_) = self.data {
                return Err(HarnessError::Usage(
                    "the oracle generator needs synthetic data".into(),
                ));
            }
        }
        Ok(())
    }

    /// Translation jitter: configured value, or 5% of the class separation.
    pub fn effective_jitter(&self) -> f64 {
        if let Some(j) = self.imagination.jitter_sigma {
            return j;
        }
        match &self.data {
            DataSource::Synthetic(s) => 0.05 * s.class_separation,
            DataSource::Csv(_) => 0.05,
        }
    }
}

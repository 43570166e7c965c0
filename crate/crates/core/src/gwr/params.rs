//! Learning parameters for a growing-when-required network.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameter set controlling growth, adaptation and pruning.
///
/// The fast/slow memory asymmetry is expressed entirely through two values of
/// this struct: see [`GwrParams::episodic`] and [`GwrParams::semantic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GwrParams {
    /// Activation threshold `a_T` below which insertion is considered, in (0,1).
    pub insertion_threshold: f64,
    /// Habituation threshold `h_T`; only well-trained winners spawn neurons, in (0,1).
    pub habituation_threshold: f64,
    /// Winner learning rate, in (0,1].
    pub eps_b: f64,
    /// Neighbour learning rate, in (0,1], at most `eps_b`.
    pub eps_n: f64,
    /// Winner habituation decay, in (0,1].
    pub tau_b: f64,
    /// Neighbour habituation decay, in (0,1].
    pub tau_n: f64,
    /// Habituation curvature constant, > 1.
    pub kappa: f64,
    /// Edges older than this are removed, >= 1.
    pub max_edge_age: u64,
    /// Temporal context depth `K`.
    pub context_depth: usize,
    /// Context blend factor, in (0,1).
    pub beta: f64,
    /// Distance weights `alpha_0..alpha_K`; non-negative, summing to 1.
    pub alphas: Vec<f64>,
    /// Remove neurons that lose all their edges (never below 2 neurons).
    pub prune_isolated: bool,
}

impl GwrParams {
    /// Fast episodic preset: high learning rate, strict insertion threshold.
    pub fn episodic() -> Self {
        GwrParams {
            insertion_threshold: 0.85,
            habituation_threshold: 0.3,
            eps_b: 0.5,
            eps_n: 0.005,
            tau_b: 0.3,
            tau_n: 0.1,
            kappa: 1.05,
            max_edge_age: 100,
            context_depth: 2,
            beta: 0.7,
            alphas: default_alphas(2),
            prune_isolated: true,
        }
    }

    /// Slow semantic preset: lower learning rate, looser insertion threshold.
    pub fn semantic() -> Self {
        GwrParams {
            insertion_threshold: 0.80,
            eps_b: 0.4,
            eps_n: 0.001,
            ..Self::episodic()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0,1), got {v}")))
            }
        };
        let half_open_unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0,1], got {v}")))
            }
        };
        open_unit("insertion_threshold", self.insertion_threshold)?;
        open_unit("habituation_threshold", self.habituation_threshold)?;
        half_open_unit("eps_b", self.eps_b)?;
        half_open_unit("eps_n", self.eps_n)?;
        if self.eps_n > self.eps_b {
            return Err(Error::Config(format!(
                "eps_n ({}) must not exceed eps_b ({})",
                self.eps_n, self.eps_b
            )));
        }
        half_open_unit("tau_b", self.tau_b)?;
        half_open_unit("tau_n", self.tau_n)?;
        if !(self.kappa > 1.0) {
            return Err(Error::Config(format!("kappa must exceed 1, got {}", self.kappa)));
        }
        if self.max_edge_age == 0 {
            return Err(Error::Config("max_edge_age must be positive".into()));
        }
        open_unit("beta", self.beta)?;
        if self.alphas.len() != self.context_depth + 1 {
            return Err(Error::Config(format!(
                "alphas must have context_depth + 1 = {} entries, got {}",
                self.context_depth + 1,
                self.alphas.len()
            )));
        }
        if self.alphas.iter().any(|&a| a < 0.0 || !a.is_finite()) {
            return Err(Error::Config("alphas must be non-negative".into()));
        }
        let sum: f64 = self.alphas.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("alphas must sum to 1, got {sum}")));
        }
        Ok(())
    }
}

impl Default for GwrParams {
    fn default() -> Self {
        Self::episodic()
    }
}

/// Default distance weights: half the mass on the weight term, the remainder
/// split equally over the `k` context terms.
pub fn default_alphas(k: usize) -> Vec<f64> {
    if k == 0 {
        return vec![1.0];
    }
    let mut alphas = Vec::with_capacity(k + 1);
    alphas.push(0.5);
    alphas.extend(std::iter::repeat(0.5 / k as f64).take(k));
    alphas
}

pub mod expsum;
pub mod graphs;
pub mod spacing;
pub mod spectrum;

use skewlab_core::{build_matrix, FrequencyKind, ModelConfig, PhaseMatrix};

use crate::{Failure, Model};

/// Builds the matrix for `--model`; the deterministic models are square.
pub fn model_matrix(model: Model, freq: &FrequencyKind, n: usize, rho: f64, seed: u64) -> anyhow::Result<PhaseMatrix> {
    if n == 0 {
        return Err(Failure::Usage("--n must be positive".into()).into());
    }
    let cfg = match model.deterministic() {
        Some(m) => {
            if rho != 1.0 {
                return Err(Failure::Usage("deterministic models are square; use --rho 1".into()).into());
            }
            ModelConfig::deterministic(m, n)?
        }
        None => ModelConfig::skew_shift(freq, n, rho, seed)?,
    };
    Ok(build_matrix(&cfg)?)
}

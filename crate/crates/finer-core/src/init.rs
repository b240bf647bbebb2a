//! Parameter initialization.
//!
//! Weights follow the fan-in uniform rules of sinusoidal networks: the first
//! layer draws from U(−1/n, 1/n) and every later layer from
//! U(−√(6/n), √(6/n)), with n the layer's input width. Biases draw from
//! U(−k, k); the half-width k is the knob that selects which sub-functions
//! of a variable-periodic activation get used. The final affine layer's bias
//! starts at exactly 0.
//!
//! Draws come from a per-layer ChaCha8 stream keyed by layer index, so
//! adding layers never reshuffles earlier layers' parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRule {
    /// U(−1/n, 1/n) — first layer.
    FirstLayer,
    /// U(−√(6/n), √(6/n)) — all later layers.
    SirenHidden,
}

impl WeightRule {
    pub fn halfwidth(self, fan_in: usize) -> f64 {
        match self {
            WeightRule::FirstLayer => 1.0 / fan_in as f64,
            WeightRule::SirenHidden => (6.0 / fan_in as f64).sqrt(),
        }
    }

    /// Rule applied to layer `layer_index` of the stack.
    pub fn for_layer(layer_index: usize) -> Self {
        if layer_index == 0 {
            WeightRule::FirstLayer
        } else {
            WeightRule::SirenHidden
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitScheme {
    /// Half-width k of the bias distribution U(−k, k).
    pub bias_halfwidth: f64,
    pub seed: u64,
}

impl InitScheme {
    pub fn new(bias_halfwidth: f64, seed: u64) -> Self {
        InitScheme {
            bias_halfwidth,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.bias_halfwidth >= 0.0 && self.bias_halfwidth.is_finite(),
            "bias half-width k must be >= 0, got {}",
            self.bias_halfwidth
        );
        Ok(())
    }

    /// Independent stream for one layer's draws.
    pub fn layer_rng(&self, layer_index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(layer_index as u64);
        rng
    }

    /// Scheme for ensemble member `member`, derived deterministically from
    /// the base seed.
    pub fn member(&self, member: u64) -> InitScheme {
        InitScheme {
            bias_halfwidth: self.bias_halfwidth,
            seed: self
                .seed
                .wrapping_add(member.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        }
    }
}

/// One draw from U(−halfwidth, halfwidth).
pub(crate) fn draw_uniform(rng: &mut ChaCha8Rng, halfwidth: f64) -> f64 {
    halfwidth * (2.0 * rng.gen::<f64>() - 1.0)
}

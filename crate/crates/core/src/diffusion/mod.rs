//! Conditional DDPM: forward noising, the noise-prediction training
//! objective, ancestral sampling, and internal-activation extraction.

pub mod nn;

mod activations;
mod checkpoint;
mod embedding;
mod sampler;
mod schedule;
mod trainer;
mod unet;

pub use activations::{extract_activations, read_activation_dump, write_activation_dump};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use embedding::{cond_embedding, sinusoidal_encoding, CondEmbedding};
pub use sampler::{sample, sample_with_capture, SampleOutput};
pub use schedule::{forward_noise, NoiseSchedule};
pub use trainer::{train, train_step, EpochBudget, TrainConfig, TrainOutput};
pub use unet::{UNet, UNetConfig};

/// Matrix of flattened internal-layer activations with aligned labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationCloud {
    pub rows: usize,
    pub cols: usize,
    /// Row-major activations, one row per sampled label.
    pub data: Vec<f32>,
    /// Aligned (mu_x, mu_y) labels.
    pub labels: Vec<(f64, f64)>,
    /// Tap index the activations were read from.
    pub layer_id: u32,
    /// Reverse-process step at capture time.
    pub capture_timestep: u32,
}

impl ActivationCloud {
    pub fn new(
        rows: usize,
        cols: usize,
        data: Vec<f32>,
        labels: Vec<(f64, f64)>,
        layer_id: u32,
        capture_timestep: u32,
    ) -> Self {
        assert_eq!(data.len(), rows * cols);
        assert_eq!(labels.len(), rows);
        ActivationCloud { rows, cols, data, labels, layer_id, capture_timestep }
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Row-major copy at analysis precision.
    pub fn points_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }
}

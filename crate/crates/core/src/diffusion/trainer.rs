//! Training loop: noise-prediction MSE objective, AdamW updates, equalized
//! epoch budgets, deterministic batch-chunk parallelism.

use super::nn::{chunk_ranges, AdamW, AdamWConfig, Elem, ParamArena, Tensor};
use super::{cond_embedding, forward_noise, Checkpoint, CondEmbedding, NoiseSchedule, UNet, UNetConfig};
use crate::datagen::SampleRecord;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub unet: UNetConfig,
    /// Diffusion steps; betas follow a linear ramp.
    pub t_max: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamWConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            unet: UNetConfig::default(),
            t_max: 1000,
            beta_start: 1e-4,
            beta_end: 0.02,
            epochs: 100,
            batch_size: 64,
            optimizer: AdamWConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Desk-scale defaults: reduced widths, shortened schedule with the same
    /// total noise budget.
    pub fn desk() -> Self {
        TrainConfig {
            unet: UNetConfig::desk(),
            t_max: 250,
            beta_start: 4e-4,
            beta_end: 0.08,
            epochs: 120,
            batch_size: 64,
            optimizer: AdamWConfig { lr: 1.5e-3, ..Default::default() },
            seed: 0,
        }
    }

    pub fn schedule<E: Elem>(&self) -> Result<NoiseSchedule<E>> {
        NoiseSchedule::linear(self.t_max, self.beta_start, self.beta_end)
    }

    pub fn embedding(&self) -> CondEmbedding {
        CondEmbedding { dim_per_part: self.unet.dim_per_part }
    }
}

/// Epoch scaling that keeps `epochs x dataset_size` constant across
/// subsampled datasets.
#[derive(Debug, Clone, Copy)]
pub struct EpochBudget {
    pub base_epochs: usize,
    pub base_records: usize,
}

impl EpochBudget {
    pub fn epochs_for(&self, records: usize) -> usize {
        if records == 0 {
            return 0;
        }
        let scaled =
            (self.base_epochs as f64 * self.base_records as f64 / records as f64).round();
        (scaled as usize).max(1)
    }
}

/// Pixels mapped to the model input range [-1, 1].
pub fn normalize_image(pixels: &[u8]) -> Vec<f32> {
    pixels.iter().map(|&p| p as f32 / 127.5 - 1.0).collect()
}

pub struct TrainBatch<'a> {
    pub images: &'a Tensor<f32>,
    pub labels: &'a [(f64, f64)],
}

/// One optimizer step over a prepared batch: draws per-sample timesteps and
/// noise, runs the chunk-parallel forward/backward, applies AdamW. Returns
/// the mean squared error over batch and elements.
pub fn train_step(
    net: &UNet,
    params: &mut [f32],
    opt: &mut AdamW<f32>,
    sched: &NoiseSchedule<f32>,
    batch: TrainBatch<'_>,
    rng: &mut ChaCha20Rng,
) -> Result<f64> {
    let n = batch.images.n;
    assert_eq!(n, batch.labels.len());
    let elems = batch.images.plane();
    let layout = CondEmbedding { dim_per_part: net.config.dim_per_part };

    // Timesteps and noise are drawn sequentially so the trajectory does not
    // depend on the thread count.
    let mut ts = Vec::with_capacity(n);
    let mut eps = Tensor::<f32>::zeros(n, 1, batch.images.h, batch.images.w);
    for i in 0..n {
        ts.push(rng.gen_range(1..=sched.t_max()));
        for v in eps.sample_mut(i) {
            *v = rng.sample::<f32, _>(StandardNormal);
        }
    }
    let mut xt = Tensor::<f32>::zeros(n, 1, batch.images.h, batch.images.w);
    for i in 0..n {
        let noised = forward_noise(batch.images.sample(i), ts[i], eps.sample(i), sched)?;
        xt.sample_mut(i).copy_from_slice(&noised);
    }
    let emb_dim = layout.total_dim();
    let mut emb = vec![0.0f32; n * emb_dim];
    for i in 0..n {
        let (mu_x, mu_y) = batch.labels[i];
        let row = cond_embedding::<f32>(ts[i], mu_x, mu_y, layout);
        emb[i * emb_dim..(i + 1) * emb_dim].copy_from_slice(&row);
    }

    // Chunk-parallel forward/backward with an ordered reduction.
    let ranges = chunk_ranges(n);
    let scale = 2.0 / (n * elems) as f64;
    let results: Vec<(f64, Vec<f32>)> = ranges
        .par_iter()
        .map(|range| {
            let cn = range.len();
            let mut cx = Tensor::<f32>::zeros(cn, 1, xt.h, xt.w);
            let mut ceps = Tensor::<f32>::zeros(cn, 1, xt.h, xt.w);
            let mut cemb = vec![0.0f32; cn * emb_dim];
            for (local, global) in range.clone().enumerate() {
                cx.sample_mut(local).copy_from_slice(xt.sample(global));
                ceps.sample_mut(local).copy_from_slice(eps.sample(global));
                cemb[local * emb_dim..(local + 1) * emb_dim]
                    .copy_from_slice(&emb[global * emb_dim..(global + 1) * emb_dim]);
            }
            let (pred, cache, _) = net.forward(&*params, &cx, &cemb, None);
            let mut sq = 0.0f64;
            let mut gy = Tensor::<f32>::zeros(cn, 1, xt.h, xt.w);
            for idx in 0..pred.data.len() {
                let r = pred.data[idx] - ceps.data[idx];
                sq += (r as f64) * (r as f64);
                gy.data[idx] = (r as f64 * scale) as f32;
            }
            let mut grads = vec![0.0f32; params.len()];
            net.backward(&*params, &cache, &gy, &mut grads);
            (sq, grads)
        })
        .collect();

    let mut grads = vec![0.0f32; params.len()];
    let mut sq_sum = 0.0f64;
    for (sq, chunk_grads) in results {
        sq_sum += sq;
        for (g, cg) in grads.iter_mut().zip(chunk_grads) {
            *g += cg;
        }
    }
    let loss = sq_sum / (n * elems) as f64;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { step: opt.step + 1, checkpoint: PathBuf::new() });
    }
    opt.update(params, &grads);
    Ok(loss)
}

pub struct TrainOutput {
    pub checkpoint: Checkpoint,
    /// Per-step training losses.
    pub losses: Vec<f64>,
}

/// Full training run. `snapshot` is called after each epoch with the current
/// checkpoint state; returning false stops early. A non-finite loss saves a
/// diagnostic checkpoint to `diag_dir` when given.
pub fn train(
    records: &[SampleRecord],
    config: &TrainConfig,
    manifest_fingerprint: &str,
    diag_dir: Option<&std::path::Path>,
    mut snapshot: impl FnMut(usize, &Checkpoint) -> bool,
) -> Result<TrainOutput> {
    if records.is_empty() {
        return Err(Error::EmptyInput("training needs at least one record".into()));
    }
    let side = records[0].image.side as usize;
    let sched: NoiseSchedule<f32> = config.schedule()?;
    let mut build_rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut arena = ParamArena::<f32>::new();
    let net = UNet::build(config.unet, &mut arena, &mut build_rng);

    let steps_per_epoch = records.len().div_ceil(config.batch_size);
    let total_steps = steps_per_epoch * config.epochs;
    let mut opt_config = config.optimizer;
    if opt_config.total_steps == 0 {
        opt_config.total_steps = total_steps;
    }
    let mut opt = AdamW::<f32>::new(opt_config, arena.len());

    // All images normalized once.
    let mut images = Tensor::<f32>::zeros(records.len(), 1, side, side);
    let mut labels = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        images.sample_mut(i).copy_from_slice(&normalize_image(&r.image.pixels));
        labels.push((r.mu_x, r.mu_y));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(0x7261_696e); // training stream, distinct from build
    let mut losses = Vec::with_capacity(total_steps);
    let mut order: Vec<usize> = (0..records.len()).collect();

    for epoch in 0..config.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let mut bimg = Tensor::<f32>::zeros(chunk.len(), 1, side, side);
            let mut blab = Vec::with_capacity(chunk.len());
            for (local, &global) in chunk.iter().enumerate() {
                bimg.sample_mut(local).copy_from_slice(images.sample(global));
                blab.push(labels[global]);
            }
            let batch = TrainBatch { images: &bimg, labels: &blab };
            match train_step(&net, &mut arena.data, &mut opt, &sched, batch, &mut rng) {
                Ok(loss) => losses.push(loss),
                Err(Error::NonFiniteLoss { step, .. }) => {
                    let ckpt = Checkpoint::capture(
                        config,
                        &arena,
                        &opt,
                        epoch,
                        losses.len(),
                        manifest_fingerprint,
                        &rng,
                    );
                    let path = diag_dir
                        .map(|d| d.join(format!("diagnostic-step{step}.ckpt")))
                        .unwrap_or_else(|| PathBuf::from(format!("diagnostic-step{step}.ckpt")));
                    super::save_checkpoint(&path, &ckpt)?;
                    return Err(Error::NonFiniteLoss { step, checkpoint: path });
                }
                Err(e) => return Err(e),
            }
        }
        let ckpt = Checkpoint::capture(
            config,
            &arena,
            &opt,
            epoch + 1,
            losses.len(),
            manifest_fingerprint,
            &rng,
        );
        if !snapshot(epoch + 1, &ckpt) {
            return Ok(TrainOutput { checkpoint: ckpt, losses });
        }
    }
    let ckpt = Checkpoint::capture(
        config,
        &arena,
        &opt,
        config.epochs,
        losses.len(),
        manifest_fingerprint,
        &rng,
    );
    Ok(TrainOutput { checkpoint: ckpt, losses })
}

/// Validation loss: mean squared noise-prediction error over held-out
/// records with a fixed evaluation seed.
pub fn validation_loss(
    ckpt: &Checkpoint,
    records: &[SampleRecord],
    seed: u64,
) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("validation needs records".into()));
    }
    let side = records[0].image.side as usize;
    let sched: NoiseSchedule<f32> = ckpt.config.schedule()?;
    let (net, params) = ckpt.instantiate();
    let layout = ckpt.config.embedding();
    let emb_dim = layout.total_dim();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut total = 0.0f64;
    let mut count = 0usize;
    for batch in records.chunks(64) {
        let n = batch.len();
        let mut xt = Tensor::<f32>::zeros(n, 1, side, side);
        let mut eps = Tensor::<f32>::zeros(n, 1, side, side);
        let mut emb = vec![0.0f32; n * emb_dim];
        for (i, r) in batch.iter().enumerate() {
            let x0 = normalize_image(&r.image.pixels);
            let t = rng.gen_range(1..=sched.t_max());
            for v in eps.sample_mut(i) {
                *v = rng.sample::<f32, _>(StandardNormal);
            }
            let noised = forward_noise(&x0, t, eps.sample(i), &sched)?;
            xt.sample_mut(i).copy_from_slice(&noised);
            let row = cond_embedding::<f32>(t, r.mu_x, r.mu_y, layout);
            emb[i * emb_dim..(i + 1) * emb_dim].copy_from_slice(&row);
        }
        let (pred, _, _) = net.forward(&params, &xt, &emb, None);
        for idx in 0..pred.data.len() {
            let r = (pred.data[idx] - eps.data[idx]) as f64;
            total += r * r;
        }
        count += n * side * side;
    }
    Ok(total / count as f64)
}

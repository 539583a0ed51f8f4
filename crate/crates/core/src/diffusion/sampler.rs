//! Ancestral DDPM sampling with optional activation capture.

use super::nn::Tensor;
use super::{cond_embedding, ActivationCloud, Checkpoint, NoiseSchedule};
use crate::datagen::{quantize, Image};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Generated images plus, when capture was requested, the activation cloud.
pub struct SampleOutput {
    pub images: Vec<Image>,
    pub cloud: Option<ActivationCloud>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Per-sample RNG stream keyed by the label, so identical labels reproduce
/// identical draws under one seed regardless of batch position.
fn label_stream(mu_x: f64, mu_y: f64) -> u64 {
    splitmix(mu_x.to_bits() ^ splitmix(mu_y.to_bits()))
}

/// Generates one image per label from a trained checkpoint. Fully seeded:
/// repeated calls with the same seed produce bit-identical images.
pub fn sample(
    ckpt: &Checkpoint,
    labels: &[(f64, f64)],
    side: usize,
    seed: u64,
) -> Result<Vec<Image>> {
    Ok(sample_with_capture(ckpt, labels, side, seed, None)?.images)
}

/// As [`sample`], optionally capturing the given tap's output at the terminal
/// reverse step (t = 1) as an activation cloud.
pub fn sample_with_capture(
    ckpt: &Checkpoint,
    labels: &[(f64, f64)],
    side: usize,
    seed: u64,
    capture_layer: Option<u32>,
) -> Result<SampleOutput> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("sampling needs at least one label".into()));
    }
    if side % 8 != 0 {
        return Err(Error::ShapeMismatch(format!("image side {side} must be divisible by 8")));
    }
    let sched: NoiseSchedule<f32> = ckpt.config.schedule()?;
    let (net, params) = ckpt.instantiate();
    let layout = ckpt.config.embedding();
    let emb_dim = layout.total_dim();
    let t_max = sched.t_max();

    // Chunked so forward caches stay bounded; chunks are independent and
    // deterministic because every sample owns a label-keyed stream.
    const CHUNK: usize = 64;
    let chunks: Vec<(usize, &[(f64, f64)])> = labels
        .chunks(CHUNK)
        .enumerate()
        .map(|(i, c)| (i * CHUNK, c))
        .collect();
    let results: Result<Vec<(Vec<Image>, Vec<Vec<f32>>)>> = chunks
        .par_iter()
        .map(|&(_, chunk)| {
            let n = chunk.len();
            let plane = side * side;
            let mut rngs: Vec<ChaCha20Rng> = chunk
                .iter()
                .map(|&(mu_x, mu_y)| {
                    let mut rng = ChaCha20Rng::seed_from_u64(seed);
                    rng.set_stream(label_stream(mu_x, mu_y));
                    rng
                })
                .collect();
            let mut x = Tensor::<f32>::zeros(n, 1, side, side);
            for i in 0..n {
                for v in x.sample_mut(i) {
                    *v = StandardNormal.sample(&mut rngs[i]);
                }
            }
            let mut captured: Vec<Vec<f32>> = Vec::new();
            for t in (1..=t_max).rev() {
                let mut emb = vec![0.0f32; n * emb_dim];
                for (i, &(mu_x, mu_y)) in chunk.iter().enumerate() {
                    let row = cond_embedding::<f32>(t, mu_x, mu_y, layout);
                    emb[i * emb_dim..(i + 1) * emb_dim].copy_from_slice(&row);
                }
                let tap = if t == 1 { capture_layer } else { None };
                let (eps_hat, cache, tapped) = net.forward(&params, &x, &emb, tap);
                drop(cache);
                if let Some(tapped) = tapped {
                    let feat = tapped.c * tapped.plane();
                    captured = (0..n).map(|i| tapped.sample(i)[..feat].to_vec()).collect();
                }
                let beta = sched.betas[t - 1];
                let alpha = sched.alphas[t - 1];
                let ab = sched.alphabar(t);
                let ab_prev = sched.alphabar(t - 1);
                let coef = beta / (1.0 - ab).sqrt();
                let inv_sqrt_alpha = 1.0 / alpha.sqrt();
                let sigma = (beta * (1.0 - ab_prev) / (1.0 - ab)).sqrt();
                for i in 0..n {
                    let rng = &mut rngs[i];
                    let xs = x.sample_mut(i);
                    let es = eps_hat.sample(i);
                    for p in 0..plane {
                        let mut v = inv_sqrt_alpha * (xs[p] - coef * es[p]);
                        if t > 1 {
                            let z: f32 = StandardNormal.sample(rng);
                            v += sigma * z;
                        }
                        xs[p] = v;
                    }
                }
            }
            let images: Vec<Image> = (0..n)
                .map(|i| {
                    let pixels: Vec<u8> = x
                        .sample(i)
                        .iter()
                        .map(|&v| quantize((v + 1.0) * 127.5))
                        .collect();
                    Image::new(side as u32, pixels)
                })
                .collect();
            Ok((images, captured))
        })
        .collect();
    let results = results?;

    let mut images = Vec::with_capacity(labels.len());
    let mut rows: Vec<Vec<f32>> = Vec::new();
    for (imgs, captured) in results {
        images.extend(imgs);
        rows.extend(captured);
    }
    let cloud = capture_layer.map(|layer| {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in &rows {
            data.extend_from_slice(r);
        }
        ActivationCloud::new(rows.len(), cols, data, labels.to_vec(), layer, 1)
    });
    Ok(SampleOutput { images, cloud })
}

//! Versioned, fingerprinted checkpoints with exact (bit-level) round-trip.

use super::nn::{AdamW, Elem, ParamArena};
use super::{TrainConfig, UNet};
use crate::{Error, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"BLCK";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub epoch: usize,
    pub step: usize,
    pub manifest_fingerprint: String,
    pub rng_seed: [u8; 32],
    pub rng_stream: u64,
    pub rng_word_pos: u128,
    pub params: Vec<f32>,
    pub adam_m: Vec<f32>,
    pub adam_v: Vec<f32>,
    pub adam_step: usize,
}

impl Checkpoint {
    pub fn capture(
        config: &TrainConfig,
        arena: &ParamArena<f32>,
        opt: &AdamW<f32>,
        epoch: usize,
        step: usize,
        manifest_fingerprint: &str,
        rng: &ChaCha20Rng,
    ) -> Self {
        Checkpoint {
            config: config.clone(),
            epoch,
            step,
            manifest_fingerprint: manifest_fingerprint.to_string(),
            rng_seed: rng.get_seed(),
            rng_stream: rng.get_stream(),
            rng_word_pos: rng.get_word_pos(),
            params: arena.data.clone(),
            adam_m: opt.m.clone(),
            adam_v: opt.v.clone(),
            adam_step: opt.step,
        }
    }

    /// Rebuilds the network and returns its parameters for inference.
    pub fn instantiate(&self) -> (UNet, Vec<f32>) {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let mut arena = ParamArena::<f32>::new();
        let net = UNet::build(self.config.unet, &mut arena, &mut rng);
        assert_eq!(
            arena.len(),
            self.params.len(),
            "checkpoint parameter count does not match its configuration"
        );
        (net, self.params.clone())
    }

    /// Rebuilds the full training state: network, parameter arena, optimizer,
    /// and the restored RNG.
    pub fn resume(&self) -> (UNet, ParamArena<f32>, AdamW<f32>, ChaCha20Rng) {
        let (net, params) = self.instantiate();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let mut arena = ParamArena::<f32>::new();
        let rebuilt = UNet::build(self.config.unet, &mut arena, &mut rng);
        let _ = rebuilt;
        arena.data = params;
        let mut opt = AdamW::<f32>::new(self.config.optimizer, arena.len());
        // The live run fills total_steps from the dataset; restore whatever
        // the checkpoint carried.
        opt.m = self.adam_m.clone();
        opt.v = self.adam_v.clone();
        opt.step = self.adam_step;
        let mut restored = ChaCha20Rng::from_seed(self.rng_seed);
        restored.set_stream(self.rng_stream);
        restored.set_word_pos(self.rng_word_pos);
        (net, arena, opt, restored)
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut payload: Vec<u8> = Vec::new();
    payload.write_all(MAGIC)?;
    payload.write_u32::<LittleEndian>(VERSION)?;
    let config_text = toml::to_string(&ckpt.config)
        .map_err(|e| Error::Checkpoint(format!("config serialization: {e}")))?;
    payload.write_u32::<LittleEndian>(config_text.len() as u32)?;
    payload.write_all(config_text.as_bytes())?;
    payload.write_u64::<LittleEndian>(ckpt.epoch as u64)?;
    payload.write_u64::<LittleEndian>(ckpt.step as u64)?;
    payload.write_u32::<LittleEndian>(ckpt.manifest_fingerprint.len() as u32)?;
    payload.write_all(ckpt.manifest_fingerprint.as_bytes())?;
    payload.write_all(&ckpt.rng_seed)?;
    payload.write_u64::<LittleEndian>(ckpt.rng_stream)?;
    payload.write_u64::<LittleEndian>((ckpt.rng_word_pos >> 64) as u64)?;
    payload.write_u64::<LittleEndian>(ckpt.rng_word_pos as u64)?;
    payload.write_u64::<LittleEndian>(ckpt.adam_step as u64)?;
    payload.write_u64::<LittleEndian>(ckpt.params.len() as u64)?;
    for vecs in [&ckpt.params, &ckpt.adam_m, &ckpt.adam_v] {
        for &v in vecs {
            payload.write_f32::<LittleEndian>(v)?;
        }
    }
    let digest = Sha256::digest(&payload);
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(&payload)?;
    file.write_all(&digest)?;
    file.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 36 {
        return Err(Error::Checkpoint(format!("{} too short", path.display())));
    }
    let (payload, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(payload).as_slice() != digest {
        return Err(Error::Checkpoint(format!("{} failed integrity check", path.display())));
    }
    let mut r = payload;
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    if r.read_u32::<LittleEndian>()? != VERSION {
        return Err(Error::Checkpoint("unsupported version".into()));
    }
    let config_len = r.read_u32::<LittleEndian>()? as usize;
    let mut config_bytes = vec![0u8; config_len];
    r.read_exact(&mut config_bytes)?;
    let config: TrainConfig = toml::from_str(
        std::str::from_utf8(&config_bytes)
            .map_err(|e| Error::Checkpoint(format!("config utf8: {e}")))?,
    )
    .map_err(|e| Error::Checkpoint(format!("config parse: {e}")))?;
    let epoch = r.read_u64::<LittleEndian>()? as usize;
    let step = r.read_u64::<LittleEndian>()? as usize;
    let fp_len = r.read_u32::<LittleEndian>()? as usize;
    let mut fp = vec![0u8; fp_len];
    r.read_exact(&mut fp)?;
    let mut rng_seed = [0u8; 32];
    r.read_exact(&mut rng_seed)?;
    let rng_stream = r.read_u64::<LittleEndian>()?;
    let hi = r.read_u64::<LittleEndian>()? as u128;
    let lo = r.read_u64::<LittleEndian>()? as u128;
    let adam_step = r.read_u64::<LittleEndian>()? as usize;
    let count = r.read_u64::<LittleEndian>()? as usize;
    let mut read_vec = |count: usize| -> Result<Vec<f32>> {
        let mut v = Vec::with_capacity(count);
        for _ in 0..count {
            v.push(r.read_f32::<LittleEndian>()?);
        }
        Ok(v)
    };
    let params = read_vec(count)?;
    let adam_m = read_vec(count)?;
    let adam_v = read_vec(count)?;
    Ok(Checkpoint {
        config,
        epoch,
        step,
        manifest_fingerprint: String::from_utf8(fp)
            .map_err(|e| Error::Checkpoint(format!("fingerprint utf8: {e}")))?,
        rng_seed,
        rng_stream,
        rng_word_pos: (hi << 64) | lo,
        params,
        adam_m,
        adam_v,
        adam_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{enumerate_dataset, CanvasSpec, DatasetManifest, GaussianKind};
    use crate::diffusion::nn::Tensor;
    use crate::diffusion::trainer::{normalize_image, train_step, TrainBatch};
    use crate::diffusion::{train, NoiseSchedule, UNetConfig};

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            unet: UNetConfig {
                widths: (8, 8, 8),
                dim_per_part: 4,
                groups: 8,
                heads: 2,
                attention: [false, false, true, false, false, false],
            },
            t_max: 8,
            beta_start: 0.02,
            beta_end: 0.3,
            epochs: 1,
            batch_size: 4,
            optimizer: Default::default(),
            seed: 21,
        }
    }

    #[test]
    fn checkpoint_file_round_trips_bit_exactly() {
        let config = tiny_config();
        let records = enumerate_dataset(&DatasetManifest::plain(
            CanvasSpec::open(8),
            GaussianKind::Bump,
            4.0,
            1.0,
        ))
        .unwrap();
        let out = train(&records, &config, "fingerprint-abc", None, |_, _| true).unwrap();
        let dir = std::env::temp_dir().join(format!("ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.ckpt");
        save_checkpoint(&path, &out.checkpoint).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, out.checkpoint);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn resume_reproduces_the_next_step_exactly() {
        let config = tiny_config();
        let records = enumerate_dataset(&DatasetManifest::plain(
            CanvasSpec::open(8),
            GaussianKind::Bump,
            4.0,
            1.0,
        ))
        .unwrap();
        let out = train(&records, &config, "fp", None, |_, _| true).unwrap();
        let dir = std::env::temp_dir().join(format!("ckpt-resume-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.ckpt");
        save_checkpoint(&path, &out.checkpoint).unwrap();
        let back = load_checkpoint(&path).unwrap();

        // One more step along both paths must agree bitwise.
        let take_step = |ckpt: &Checkpoint| -> (f64, Vec<f32>) {
            let (net, mut arena, mut opt, mut rng) = ckpt.resume();
            let sched: NoiseSchedule<f32> = ckpt.config.schedule().unwrap();
            let mut images = Tensor::<f32>::zeros(records.len(), 1, 8, 8);
            let mut labels = Vec::new();
            for (i, r) in records.iter().enumerate() {
                images
                    .sample_mut(i)
                    .copy_from_slice(&normalize_image(&r.image.pixels));
                labels.push((r.mu_x, r.mu_y));
            }
            let batch = TrainBatch { images: &images, labels: &labels };
            let loss =
                train_step(&net, &mut arena.data, &mut opt, &sched, batch, &mut rng).unwrap();
            (loss, arena.data)
        };
        let (loss_a, params_a) = take_step(&out.checkpoint);
        let (loss_b, params_b) = take_step(&back);
        assert_eq!(loss_a, loss_b);
        assert_eq!(params_a, params_b);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn corrupted_checkpoint_is_rejected() {
        let config = tiny_config();
        let records = enumerate_dataset(&DatasetManifest::plain(
            CanvasSpec::open(8),
            GaussianKind::Bump,
            4.0,
            1.0,
        ))
        .unwrap();
        let out = train(&records, &config, "fp", None, |_, _| true).unwrap();
        let dir = std::env::temp_dir().join(format!("ckpt-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.ckpt");
        save_checkpoint(&path, &out.checkpoint).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));
        std::fs::remove_dir_all(&dir).ok();
    }
}

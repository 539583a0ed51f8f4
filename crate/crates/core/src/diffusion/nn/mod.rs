//! Minimal dense NN stack with hand-derived backprop, generic over f32/f64.
//!
//! Parameters live in one flat arena; layers hold handles into it. Gradients
//! accumulate into a same-shape arena, which keeps the optimizer, gradient
//! checks, and checkpointing trivial. Training parallelism happens at the
//! batch-chunk level with a fixed chunk count and an ordered reduction, so
//! results do not depend on the thread count.

mod adamw;
mod attention;
mod conv;
mod gemm;
mod linear;
mod norm;
mod resample;
mod tensor;

pub use adamw::{AdamW, AdamWConfig};
pub use attention::{AttentionCache, SelfAttention};
pub use conv::Conv2d;
pub use gemm::Elem;
pub use linear::Linear;
pub use norm::{GroupNorm, GroupNormCache, LayerNorm};
pub use resample::{max_pool2, max_pool2_backward, upsample2, upsample2_backward};
pub use tensor::Tensor;

use rand::Rng;
use rand_distr::StandardNormal;

/// Handle into the parameter arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Handle {
    pub offset: usize,
    pub len: usize,
}

impl Handle {
    pub fn slice<'a, E>(&self, arena: &'a [E]) -> &'a [E] {
        &arena[self.offset..self.offset + self.len]
    }

    pub fn slice_mut<'a, E>(&self, arena: &'a mut [E]) -> &'a mut [E] {
        &mut arena[self.offset..self.offset + self.len]
    }
}

/// Flat parameter storage with named segments in allocation order.
#[derive(Debug, Clone, Default)]
pub struct ParamArena<E> {
    pub data: Vec<E>,
    pub segments: Vec<(String, Handle)>,
}

impl<E: Elem> ParamArena<E> {
    pub fn new() -> Self {
        ParamArena { data: Vec::new(), segments: Vec::new() }
    }

    pub fn alloc(&mut self, name: &str, len: usize, fill: E) -> Handle {
        let handle = Handle { offset: self.data.len(), len };
        self.data.extend(std::iter::repeat(fill).take(len));
        self.segments.push((name.to_string(), handle));
        handle
    }

    /// He-normal initialization with the given fan-in.
    pub fn alloc_normal<R: Rng>(
        &mut self,
        name: &str,
        len: usize,
        fan_in: usize,
        rng: &mut R,
    ) -> Handle {
        let std = (2.0 / fan_in as f64).sqrt();
        let handle = Handle { offset: self.data.len(), len };
        for _ in 0..len {
            let z: f64 = rng.sample(StandardNormal);
            self.data.push(E::from_f64_c(z * std));
        }
        self.segments.push((name.to_string(), handle));
        handle
    }

    pub fn zeros_like(&self) -> Vec<E> {
        vec![E::zero(); self.data.len()]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Fixed chunk count for batch-parallel gradient accumulation; the ordered
/// chunk reduction keeps training deterministic on any thread count.
pub const GRAD_CHUNKS: usize = 4;

/// Splits `n` items into up to [`GRAD_CHUNKS`] contiguous ranges.
pub fn chunk_ranges(n: usize) -> Vec<std::ops::Range<usize>> {
    if n == 0 {
        return Vec::new();
    }
    let chunks = GRAD_CHUNKS.min(n);
    let base = n / chunks;
    let extra = n % chunks;
    let mut out = Vec::with_capacity(chunks);
    let mut start = 0;
    for i in 0..chunks {
        let len = base + usize::from(i < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// GELU (tanh approximation) and its derivative.
pub fn gelu<E: Elem>(x: E) -> E {
    let c = E::from_f64_c(0.797_884_560_802_865_4); // sqrt(2/pi)
    let k = E::from_f64_c(0.044715);
    let half = E::from_f64_c(0.5);
    let inner = c * (x + k * x * x * x);
    half * x * (E::one() + inner.tanh())
}

pub fn gelu_grad<E: Elem>(x: E) -> E {
    let c = E::from_f64_c(0.797_884_560_802_865_4);
    let k = E::from_f64_c(0.044715);
    let half = E::from_f64_c(0.5);
    let three = E::from_f64_c(3.0);
    let inner = c * (x + k * x * x * x);
    let t = inner.tanh();
    let sech2 = E::one() - t * t;
    half * (E::one() + t) + half * x * sech2 * c * (E::one() + three * k * x * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn chunk_ranges_cover_exactly() {
        for n in [1usize, 2, 3, 4, 5, 17, 64] {
            let ranges = chunk_ranges(n);
            assert!(ranges.len() <= GRAD_CHUNKS);
            let total: usize = ranges.iter().map(|r| r.len()).sum();
            assert_eq!(total, n);
            for w in ranges.windows(2) {
                assert_eq!(w[0].end, w[1].start);
            }
        }
    }

    #[test]
    fn gelu_gradient_matches_finite_differences() {
        for &x in &[-2.0f64, -0.5, 0.0, 0.3, 1.7] {
            let h = 1e-6;
            let num = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            let ana = gelu_grad(x);
            assert!((num - ana).abs() < 1e-8, "x={x}: {num} vs {ana}");
        }
    }

    #[test]
    fn arena_segments_are_ordered_and_disjoint() {
        let mut arena = ParamArena::<f32>::new();
        let a = arena.alloc("a", 4, 0.0);
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(1);
        let b = arena.alloc_normal("b", 6, 3, &mut rng);
        assert_eq!(a.offset, 0);
        assert_eq!(b.offset, 4);
        assert_eq!(arena.len(), 10);
    }
}

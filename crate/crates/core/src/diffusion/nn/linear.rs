//! Fully connected layer over row-major (rows x features) matrices.

use super::{Elem, Handle, ParamArena};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Handle,
    pub b: Handle,
    pub d_in: usize,
    pub d_out: usize,
}

impl Linear {
    pub fn new<E: Elem, R: Rng>(
        arena: &mut ParamArena<E>,
        name: &str,
        d_in: usize,
        d_out: usize,
        rng: &mut R,
    ) -> Self {
        let w = arena.alloc_normal(&format!("{name}.w"), d_out * d_in, d_in, rng);
        let b = arena.alloc(&format!("{name}.b"), d_out, E::zero());
        Linear { w, b, d_in, d_out }
    }

    /// `y = x W^T + b`; x is (rows x d_in).
    pub fn forward<E: Elem>(&self, params: &[E], x: &[E], rows: usize) -> Vec<E> {
        debug_assert_eq!(x.len(), rows * self.d_in);
        let mut y = vec![E::zero(); rows * self.d_out];
        E::gemm(
            false,
            true,
            rows,
            self.d_out,
            self.d_in,
            E::one(),
            x,
            self.w.slice(params),
            E::zero(),
            &mut y,
        );
        let b = self.b.slice(params);
        for r in 0..rows {
            for (o, &bv) in b.iter().enumerate() {
                y[r * self.d_out + o] += bv;
            }
        }
        y
    }

    pub fn backward<E: Elem>(
        &self,
        params: &[E],
        x: &[E],
        gy: &[E],
        rows: usize,
        grads: &mut [E],
    ) -> Vec<E> {
        // dW += gy^T x ; db += column sums ; gx = gy W
        {
            let gw = self.w.slice_mut(grads);
            E::gemm(true, false, self.d_out, self.d_in, rows, E::one(), gy, x, E::one(), gw);
        }
        {
            let gb = self.b.slice_mut(grads);
            for r in 0..rows {
                for o in 0..self.d_out {
                    gb[o] += gy[r * self.d_out + o];
                }
            }
        }
        let mut gx = vec![E::zero(); rows * self.d_in];
        E::gemm(
            false,
            false,
            rows,
            self.d_in,
            self.d_out,
            E::one(),
            gy,
            self.w.slice(params),
            E::zero(),
            &mut gx,
        );
        gx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut arena = ParamArena::<f64>::new();
        let lin = Linear::new(&mut arena, "l", 3, 4, &mut rng);
        let x: Vec<f64> = (0..6).map(|i| (i as f64) * 0.5 - 1.0).collect();
        let loss = |ps: &[f64], xs: &[f64]| -> f64 {
            lin.forward(ps, xs, 2).iter().map(|v| v * v).sum::<f64>() / 2.0
        };
        let y = lin.forward(&arena.data, &x, 2);
        let mut grads = arena.zeros_like();
        let gx = lin.backward(&arena.data, &x, &y, 2, &mut grads);
        let h = 1e-6;
        for idx in 0..arena.len() {
            let mut plus = arena.data.clone();
            plus[idx] += h;
            let mut minus = arena.data.clone();
            minus[idx] -= h;
            let num = (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * h);
            assert!((num - grads[idx]).abs() < 1e-7, "param {idx}");
        }
        for idx in 0..x.len() {
            let mut xp = x.clone();
            xp[idx] += h;
            let mut xm = x.clone();
            xm[idx] -= h;
            let num = (loss(&arena.data, &xp) - loss(&arena.data, &xm)) / (2.0 * h);
            assert!((num - gx[idx]).abs() < 1e-7, "input {idx}");
        }
    }
}

//! 2D convolution (stride 1) via im2col + GEMM.

use super::{Elem, Handle, ParamArena, Tensor};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct Conv2d {
    pub w: Handle,
    pub b: Handle,
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub pad: usize,
}

impl Conv2d {
    pub fn new<E: Elem, R: Rng>(
        arena: &mut ParamArena<E>,
        name: &str,
        c_in: usize,
        c_out: usize,
        k: usize,
        pad: usize,
        rng: &mut R,
    ) -> Self {
        let w = arena.alloc_normal(&format!("{name}.w"), c_out * c_in * k * k, c_in * k * k, rng);
        let b = arena.alloc(&format!("{name}.b"), c_out, E::zero());
        Conv2d { w, b, c_in, c_out, k, pad }
    }

    fn im2col<E: Elem>(&self, x: &[E], h: usize, w: usize, col: &mut [E]) {
        // col is (c_in * k * k) x (h * w)
        let k = self.k;
        let pad = self.pad as isize;
        let plane = h * w;
        let mut row = 0usize;
        for c in 0..self.c_in {
            let xc = &x[c * plane..(c + 1) * plane];
            for ki in 0..k {
                for kj in 0..k {
                    let dst = &mut col[row * plane..(row + 1) * plane];
                    row += 1;
                    let di = ki as isize - pad;
                    let dj = kj as isize - pad;
                    for oi in 0..h {
                        let si = oi as isize + di;
                        let dst_row = &mut dst[oi * w..(oi + 1) * w];
                        if si < 0 || si >= h as isize {
                            for v in dst_row.iter_mut() {
                                *v = E::zero();
                            }
                            continue;
                        }
                        let src_row = &xc[si as usize * w..(si as usize + 1) * w];
                        for (oj, v) in dst_row.iter_mut().enumerate() {
                            let sj = oj as isize + dj;
                            *v = if sj < 0 || sj >= w as isize {
                                E::zero()
                            } else {
                                src_row[sj as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im<E: Elem>(&self, col: &[E], h: usize, w: usize, x_grad: &mut [E]) {
        let k = self.k;
        let pad = self.pad as isize;
        let plane = h * w;
        let mut row = 0usize;
        for c in 0..self.c_in {
            let xc = &mut x_grad[c * plane..(c + 1) * plane];
            for ki in 0..k {
                for kj in 0..k {
                    let src = &col[row * plane..(row + 1) * plane];
                    row += 1;
                    let di = ki as isize - pad;
                    let dj = kj as isize - pad;
                    for oi in 0..h {
                        let si = oi as isize + di;
                        if si < 0 || si >= h as isize {
                            continue;
                        }
                        let dst_row = &mut xc[si as usize * w..(si as usize + 1) * w];
                        let src_row = &src[oi * w..(oi + 1) * w];
                        for (oj, &v) in src_row.iter().enumerate() {
                            let sj = oj as isize + dj;
                            if sj >= 0 && sj < w as isize {
                                dst_row[sj as usize] += v;
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn forward<E: Elem>(&self, params: &[E], x: &Tensor<E>) -> Tensor<E> {
        debug_assert_eq!(x.c, self.c_in);
        let (h, w) = (x.h, x.w);
        let plane = h * w;
        let krows = self.c_in * self.k * self.k;
        let weights = self.w.slice(params);
        let bias = self.b.slice(params);
        let mut y = Tensor::zeros(x.n, self.c_out, h, w);
        let mut col = vec![E::zero(); krows * plane];
        for i in 0..x.n {
            self.im2col(x.sample(i), h, w, &mut col);
            let out = y.sample_mut(i);
            E::gemm(false, false, self.c_out, plane, krows, E::one(), weights, &col, E::zero(), out);
            for c in 0..self.c_out {
                let bc = bias[c];
                for v in &mut out[c * plane..(c + 1) * plane] {
                    *v += bc;
                }
            }
        }
        y
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    pub fn backward<E: Elem>(
        &self,
        params: &[E],
        x: &Tensor<E>,
        gy: &Tensor<E>,
        grads: &mut [E],
    ) -> Tensor<E> {
        let (h, w) = (x.h, x.w);
        let plane = h * w;
        let krows = self.c_in * self.k * self.k;
        let weights = self.w.slice(params);
        let mut gx = Tensor::zeros(x.n, self.c_in, h, w);
        let mut col = vec![E::zero(); krows * plane];
        let mut gcol = vec![E::zero(); krows * plane];
        for i in 0..x.n {
            let gyi = gy.sample(i);
            // dW += gy_i * col_i^T
            self.im2col(x.sample(i), h, w, &mut col);
            {
                let gw = self.w.slice_mut(grads);
                E::gemm(false, true, self.c_out, krows, plane, E::one(), gyi, &col, E::one(), gw);
            }
            // db += row sums of gy_i
            {
                let gb = self.b.slice_mut(grads);
                for c in 0..self.c_out {
                    let mut sum = E::zero();
                    for &v in &gyi[c * plane..(c + 1) * plane] {
                        sum += v;
                    }
                    gb[c] += sum;
                }
            }
            // gcol = W^T * gy_i, scattered back with col2im
            E::gemm(true, false, krows, plane, self.c_out, E::one(), weights, gyi, E::zero(), &mut gcol);
            self.col2im(&gcol, h, w, gx.sample_mut(i));
        }
        gx
    }
}

//! Group normalization (NCHW) and layer normalization (token rows).

use super::{Elem, Handle, ParamArena, Tensor};

const EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GroupNorm {
    pub gamma: Handle,
    pub beta: Handle,
    pub groups: usize,
    pub c: usize,
}

/// Per-(sample, group) statistics saved for backward.
#[derive(Debug, Clone, Default)]
pub struct GroupNormCache<E> {
    pub mean: Vec<E>,
    pub rstd: Vec<E>,
}

impl GroupNorm {
    pub fn new<E: Elem>(arena: &mut ParamArena<E>, name: &str, groups: usize, c: usize) -> Self {
        assert_eq!(c % groups, 0, "channels {c} not divisible by groups {groups}");
        let gamma = arena.alloc(&format!("{name}.gamma"), c, E::one());
        let beta = arena.alloc(&format!("{name}.beta"), c, E::zero());
        GroupNorm { gamma, beta, groups, c }
    }

    pub fn forward<E: Elem>(
        &self,
        params: &[E],
        x: &Tensor<E>,
    ) -> (Tensor<E>, GroupNormCache<E>) {
        debug_assert_eq!(x.c, self.c);
        let plane = x.plane();
        let cpg = self.c / self.groups;
        let group_len = cpg * plane;
        let gamma = self.gamma.slice(params);
        let beta = self.beta.slice(params);
        let mut y = Tensor::zeros(x.n, x.c, x.h, x.w);
        let mut cache = GroupNormCache {
            mean: vec![E::zero(); x.n * self.groups],
            rstd: vec![E::zero(); x.n * self.groups],
        };
        let inv_len = E::one() / E::from_f64_c(group_len as f64);
        for i in 0..x.n {
            let xs = x.sample(i);
            let ys = y.sample_mut(i);
            for g in 0..self.groups {
                let seg = &xs[g * group_len..(g + 1) * group_len];
                let mut mean = E::zero();
                for &v in seg {
                    mean += v;
                }
                mean *= inv_len;
                let mut var = E::zero();
                for &v in seg {
                    let d = v - mean;
                    var += d * d;
                }
                var *= inv_len;
                let rstd = E::one() / (var + E::from_f64_c(EPS)).sqrt();
                cache.mean[i * self.groups + g] = mean;
                cache.rstd[i * self.groups + g] = rstd;
                for cc in 0..cpg {
                    let ch = g * cpg + cc;
                    let (gm, bt) = (gamma[ch], beta[ch]);
                    let off = g * group_len + cc * plane;
                    for p in 0..plane {
                        ys[off + p] = (xs[off + p] - mean) * rstd * gm + bt;
                    }
                }
            }
        }
        (y, cache)
    }

    pub fn backward<E: Elem>(
        &self,
        params: &[E],
        x: &Tensor<E>,
        cache: &GroupNormCache<E>,
        gy: &Tensor<E>,
        grads: &mut [E],
    ) -> Tensor<E> {
        let plane = x.plane();
        let cpg = self.c / self.groups;
        let group_len = cpg * plane;
        let gamma = self.gamma.slice(params);
        let mut gx = Tensor::zeros(x.n, x.c, x.h, x.w);
        let inv_len = E::one() / E::from_f64_c(group_len as f64);
        for i in 0..x.n {
            let xs = x.sample(i);
            let gys = gy.sample(i);
            let gxs = gx.sample_mut(i);
            for g in 0..self.groups {
                let mean = cache.mean[i * self.groups + g];
                let rstd = cache.rstd[i * self.groups + g];
                // Accumulate the two reduction terms over the group.
                let mut sum_gxh = E::zero();
                let mut sum_gxh_xh = E::zero();
                for cc in 0..cpg {
                    let ch = g * cpg + cc;
                    let off = g * group_len + cc * plane;
                    for p in 0..plane {
                        let xh = (xs[off + p] - mean) * rstd;
                        let gxh = gys[off + p] * gamma[ch];
                        sum_gxh += gxh;
                        sum_gxh_xh += gxh * xh;
                    }
                }
                for cc in 0..cpg {
                    let ch = g * cpg + cc;
                    let off = g * group_len + cc * plane;
                    for p in 0..plane {
                        let xh = (xs[off + p] - mean) * rstd;
                        let gxh = gys[off + p] * gamma[ch];
                        gxs[off + p] =
                            rstd * (gxh - inv_len * (sum_gxh + xh * sum_gxh_xh));
                    }
                }
                // Parameter grads.
                for cc in 0..cpg {
                    let ch = g * cpg + cc;
                    let off = g * group_len + cc * plane;
                    let mut gg = E::zero();
                    let mut gb = E::zero();
                    for p in 0..plane {
                        let xh = (xs[off + p] - mean) * rstd;
                        gg += gys[off + p] * xh;
                        gb += gys[off + p];
                    }
                    self.gamma.slice_mut(grads)[ch] += gg;
                    self.beta.slice_mut(grads)[ch] += gb;
                }
            }
        }
        gx
    }
}

/// Layer normalization over the last axis of (rows x dim) token matrices.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gamma: Handle,
    pub beta: Handle,
    pub dim: usize,
}

impl LayerNorm {
    pub fn new<E: Elem>(arena: &mut ParamArena<E>, name: &str, dim: usize) -> Self {
        let gamma = arena.alloc(&format!("{name}.gamma"), dim, E::one());
        let beta = arena.alloc(&format!("{name}.beta"), dim, E::zero());
        LayerNorm { gamma, beta, dim }
    }

    pub fn forward<E: Elem>(&self, params: &[E], x: &[E], rows: usize) -> (Vec<E>, Vec<E>, Vec<E>) {
        let d = self.dim;
        let gamma = self.gamma.slice(params);
        let beta = self.beta.slice(params);
        let mut y = vec![E::zero(); rows * d];
        let mut means = vec![E::zero(); rows];
        let mut rstds = vec![E::zero(); rows];
        let inv = E::one() / E::from_f64_c(d as f64);
        for r in 0..rows {
            let xs = &x[r * d..(r + 1) * d];
            let mut mean = E::zero();
            for &v in xs {
                mean += v;
            }
            mean *= inv;
            let mut var = E::zero();
            for &v in xs {
                let dd = v - mean;
                var += dd * dd;
            }
            var *= inv;
            let rstd = E::one() / (var + E::from_f64_c(EPS)).sqrt();
            means[r] = mean;
            rstds[r] = rstd;
            for i in 0..d {
                y[r * d + i] = (xs[i] - mean) * rstd * gamma[i] + beta[i];
            }
        }
        (y, means, rstds)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn backward<E: Elem>(
        &self,
        params: &[E],
        x: &[E],
        means: &[E],
        rstds: &[E],
        gy: &[E],
        rows: usize,
        grads: &mut [E],
    ) -> Vec<E> {
        let d = self.dim;
        let gamma = self.gamma.slice(params);
        let mut gx = vec![E::zero(); rows * d];
        let inv = E::one() / E::from_f64_c(d as f64);
        for r in 0..rows {
            let xs = &x[r * d..(r + 1) * d];
            let gys = &gy[r * d..(r + 1) * d];
            let (mean, rstd) = (means[r], rstds[r]);
            let mut sum_gxh = E::zero();
            let mut sum_gxh_xh = E::zero();
            for i in 0..d {
                let xh = (xs[i] - mean) * rstd;
                let gxh = gys[i] * gamma[i];
                sum_gxh += gxh;
                sum_gxh_xh += gxh * xh;
            }
            for i in 0..d {
                let xh = (xs[i] - mean) * rstd;
                let gxh = gys[i] * gamma[i];
                gx[r * d + i] = rstd * (gxh - inv * (sum_gxh + xh * sum_gxh_xh));
            }
            for i in 0..d {
                let xh = (xs[i] - mean) * rstd;
                self.gamma.slice_mut(grads)[i] += gys[i] * xh;
                self.beta.slice_mut(grads)[i] += gys[i];
            }
        }
        gx
    }
}

//! Spatial self-attention block: pre-LN multi-head attention plus a two-layer
//! feed-forward, both with residual connections, over flattened HxW tokens.

use super::{gelu, gelu_grad, Elem, LayerNorm, Linear, ParamArena, Tensor};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct SelfAttention {
    pub ln1: LayerNorm,
    pub qkv: Linear,
    pub proj: Linear,
    pub ln2: LayerNorm,
    pub ff1: Linear,
    pub ff2: Linear,
    pub heads: usize,
    pub c: usize,
}

/// Saved per-sample forward state.
#[derive(Debug, Clone)]
pub struct AttentionCache<E> {
    tokens: Vec<Vec<E>>,
    t1: Vec<Vec<E>>,
    means1: Vec<Vec<E>>,
    rstds1: Vec<Vec<E>>,
    qkv_out: Vec<Vec<E>>,
    probs: Vec<Vec<E>>, // (heads * hw * hw) per sample
    ctx: Vec<Vec<E>>,
    y1: Vec<Vec<E>>,
    t2: Vec<Vec<E>>,
    means2: Vec<Vec<E>>,
    rstds2: Vec<Vec<E>>,
    z1: Vec<Vec<E>>,
    a1: Vec<Vec<E>>,
}

impl SelfAttention {
    pub fn new<E: Elem, R: Rng>(
        arena: &mut ParamArena<E>,
        name: &str,
        c: usize,
        heads: usize,
        rng: &mut R,
    ) -> Self {
        assert_eq!(c % heads, 0, "channels {c} not divisible by heads {heads}");
        SelfAttention {
            ln1: LayerNorm::new(arena, &format!("{name}.ln1"), c),
            qkv: Linear::new(arena, &format!("{name}.qkv"), c, 3 * c, rng),
            proj: Linear::new(arena, &format!("{name}.proj"), c, c, rng),
            ln2: LayerNorm::new(arena, &format!("{name}.ln2"), c),
            ff1: Linear::new(arena, &format!("{name}.ff1"), c, c, rng),
            ff2: Linear::new(arena, &format!("{name}.ff2"), c, c, rng),
            heads,
            c,
        }
    }

    fn to_tokens<E: Elem>(&self, x: &Tensor<E>, i: usize) -> Vec<E> {
        let plane = x.plane();
        let xs = x.sample(i);
        let mut t = vec![E::zero(); plane * self.c];
        for ch in 0..self.c {
            for p in 0..plane {
                t[p * self.c + ch] = xs[ch * plane + p];
            }
        }
        t
    }

    fn from_tokens<E: Elem>(&self, t: &[E], out: &mut [E], plane: usize) {
        for ch in 0..self.c {
            for p in 0..plane {
                out[ch * plane + p] = t[p * self.c + ch];
            }
        }
    }

    pub fn forward<E: Elem>(&self, params: &[E], x: &Tensor<E>) -> (Tensor<E>, AttentionCache<E>) {
        let plane = x.plane();
        let c = self.c;
        let heads = self.heads;
        let dh = c / heads;
        let scale = E::from_f64_c(1.0 / (dh as f64).sqrt());
        let mut y = Tensor::zeros(x.n, x.c, x.h, x.w);
        let mut cache = AttentionCache {
            tokens: Vec::with_capacity(x.n),
            t1: Vec::new(),
            means1: Vec::new(),
            rstds1: Vec::new(),
            qkv_out: Vec::new(),
            probs: Vec::new(),
            ctx: Vec::new(),
            y1: Vec::new(),
            t2: Vec::new(),
            means2: Vec::new(),
            rstds2: Vec::new(),
            z1: Vec::new(),
            a1: Vec::new(),
        };
        for i in 0..x.n {
            let tokens = self.to_tokens(x, i);
            let (t1, m1, r1) = self.ln1.forward(params, &tokens, plane);
            let qkv = self.qkv.forward(params, &t1, plane);
            let mut probs = vec![E::zero(); heads * plane * plane];
            let mut ctx = vec![E::zero(); plane * c];
            let mut q_h = vec![E::zero(); plane * dh];
            let mut k_h = vec![E::zero(); plane * dh];
            let mut v_h = vec![E::zero(); plane * dh];
            let mut scores = vec![E::zero(); plane * plane];
            let mut ctx_h = vec![E::zero(); plane * dh];
            for h in 0..heads {
                for t in 0..plane {
                    let row = &qkv[t * 3 * c..(t + 1) * 3 * c];
                    q_h[t * dh..(t + 1) * dh].copy_from_slice(&row[h * dh..(h + 1) * dh]);
                    k_h[t * dh..(t + 1) * dh]
                        .copy_from_slice(&row[c + h * dh..c + (h + 1) * dh]);
                    v_h[t * dh..(t + 1) * dh]
                        .copy_from_slice(&row[2 * c + h * dh..2 * c + (h + 1) * dh]);
                }
                E::gemm(false, true, plane, plane, dh, scale, &q_h, &k_h, E::zero(), &mut scores);
                // Row softmax.
                for t in 0..plane {
                    let row = &mut scores[t * plane..(t + 1) * plane];
                    let mut maxv = row[0];
                    for &v in row.iter() {
                        if v > maxv {
                            maxv = v;
                        }
                    }
                    let mut sum = E::zero();
                    for v in row.iter_mut() {
                        *v = (*v - maxv).exp();
                        sum += *v;
                    }
                    let inv = E::one() / sum;
                    for v in row.iter_mut() {
                        *v *= inv;
                    }
                }
                probs[h * plane * plane..(h + 1) * plane * plane].copy_from_slice(&scores);
                E::gemm(false, false, plane, dh, plane, E::one(), &scores, &v_h, E::zero(), &mut ctx_h);
                for t in 0..plane {
                    ctx[t * c + h * dh..t * c + (h + 1) * dh]
                        .copy_from_slice(&ctx_h[t * dh..(t + 1) * dh]);
                }
            }
            let attn_out = self.proj.forward(params, &ctx, plane);
            let y1: Vec<E> = attn_out.iter().zip(&tokens).map(|(&a, &t)| a + t).collect();
            let (t2, m2, r2) = self.ln2.forward(params, &y1, plane);
            let z1 = self.ff1.forward(params, &t2, plane);
            let a1: Vec<E> = z1.iter().map(|&v| gelu(v)).collect();
            let f = self.ff2.forward(params, &a1, plane);
            let y_tok: Vec<E> = f.iter().zip(&y1).map(|(&a, &b)| a + b).collect();
            self.from_tokens(&y_tok, y.sample_mut(i), plane);
            cache.tokens.push(tokens);
            cache.t1.push(t1);
            cache.means1.push(m1);
            cache.rstds1.push(r1);
            cache.qkv_out.push(qkv);
            cache.probs.push(probs);
            cache.ctx.push(ctx);
            cache.y1.push(y1);
            cache.t2.push(t2);
            cache.means2.push(m2);
            cache.rstds2.push(r2);
            cache.z1.push(z1);
            cache.a1.push(a1);
        }
        (y, cache)
    }

    pub fn backward<E: Elem>(
        &self,
        params: &[E],
        cache: &AttentionCache<E>,
        gy: &Tensor<E>,
        grads: &mut [E],
    ) -> Tensor<E> {
        let plane = gy.plane();
        let c = self.c;
        let heads = self.heads;
        let dh = c / heads;
        let scale = E::from_f64_c(1.0 / (dh as f64).sqrt());
        let mut gx = Tensor::zeros(gy.n, gy.c, gy.h, gy.w);
        for i in 0..gy.n {
            // Token-major view of the incoming gradient.
            let mut gy_tok = vec![E::zero(); plane * c];
            {
                let gys = gy.sample(i);
                for ch in 0..c {
                    for p in 0..plane {
                        gy_tok[p * c + ch] = gys[ch * plane + p];
                    }
                }
            }
            // y = ff2(gelu(ff1(ln2(y1)))) + y1
            let g_a1 = self.ff2.backward(params, &cache.a1[i], &gy_tok, plane, grads);
            let g_z1: Vec<E> = g_a1
                .iter()
                .zip(&cache.z1[i])
                .map(|(&g, &z)| g * gelu_grad(z))
                .collect();
            let g_t2 = self.ff1.backward(params, &cache.t2[i], &g_z1, plane, grads);
            let mut g_y1 = self.ln2.backward(
                params,
                &cache.y1[i],
                &cache.means2[i],
                &cache.rstds2[i],
                &g_t2,
                plane,
                grads,
            );
            for (g, &gy_v) in g_y1.iter_mut().zip(&gy_tok) {
                *g += gy_v;
            }
            // y1 = proj(ctx) + tokens
            let g_ctx = self.proj.backward(params, &cache.ctx[i], &g_y1, plane, grads);
            // Attention core per head.
            let qkv = &cache.qkv_out[i];
            let mut g_qkv = vec![E::zero(); plane * 3 * c];
            let mut q_h = vec![E::zero(); plane * dh];
            let mut k_h = vec![E::zero(); plane * dh];
            let mut v_h = vec![E::zero(); plane * dh];
            let mut g_ctx_h = vec![E::zero(); plane * dh];
            let mut g_probs = vec![E::zero(); plane * plane];
            let mut g_scores = vec![E::zero(); plane * plane];
            let mut g_q = vec![E::zero(); plane * dh];
            let mut g_k = vec![E::zero(); plane * dh];
            let mut g_v = vec![E::zero(); plane * dh];
            for h in 0..heads {
                for t in 0..plane {
                    let row = &qkv[t * 3 * c..(t + 1) * 3 * c];
                    q_h[t * dh..(t + 1) * dh].copy_from_slice(&row[h * dh..(h + 1) * dh]);
                    k_h[t * dh..(t + 1) * dh]
                        .copy_from_slice(&row[c + h * dh..c + (h + 1) * dh]);
                    v_h[t * dh..(t + 1) * dh]
                        .copy_from_slice(&row[2 * c + h * dh..2 * c + (h + 1) * dh]);
                    g_ctx_h[t * dh..(t + 1) * dh]
                        .copy_from_slice(&g_ctx[t * c + h * dh..t * c + (h + 1) * dh]);
                }
                let probs = &cache.probs[i][h * plane * plane..(h + 1) * plane * plane];
                // g_probs = g_ctx_h V^T ; g_V = probs^T g_ctx_h
                E::gemm(false, true, plane, plane, dh, E::one(), &g_ctx_h, &v_h, E::zero(), &mut g_probs);
                E::gemm(true, false, plane, dh, plane, E::one(), probs, &g_ctx_h, E::zero(), &mut g_v);
                // Softmax backward per row.
                for t in 0..plane {
                    let p_row = &probs[t * plane..(t + 1) * plane];
                    let g_row = &g_probs[t * plane..(t + 1) * plane];
                    let mut dot = E::zero();
                    for (pv, gv) in p_row.iter().zip(g_row) {
                        dot += *pv * *gv;
                    }
                    let out = &mut g_scores[t * plane..(t + 1) * plane];
                    for ((o, pv), gv) in out.iter_mut().zip(p_row).zip(g_row) {
                        *o = *pv * (*gv - dot);
                    }
                }
                // scores = scale * Q K^T
                E::gemm(false, false, plane, dh, plane, scale, &g_scores, &k_h, E::zero(), &mut g_q);
                E::gemm(true, false, plane, dh, plane, scale, &g_scores, &q_h, E::zero(), &mut g_k);
                for t in 0..plane {
                    g_qkv[t * 3 * c + h * dh..t * 3 * c + (h + 1) * dh]
                        .copy_from_slice(&g_q[t * dh..(t + 1) * dh]);
                    g_qkv[t * 3 * c + c + h * dh..t * 3 * c + c + (h + 1) * dh]
                        .copy_from_slice(&g_k[t * dh..(t + 1) * dh]);
                    g_qkv[t * 3 * c + 2 * c + h * dh..t * 3 * c + 2 * c + (h + 1) * dh]
                        .copy_from_slice(&g_v[t * dh..(t + 1) * dh]);
                }
            }
            let g_t1 = self.qkv.backward(params, &cache.t1[i], &g_qkv, plane, grads);
            let g_tok_ln = self.ln1.backward(
                params,
                &cache.tokens[i],
                &cache.means1[i],
                &cache.rstds1[i],
                &g_t1,
                plane,
                grads,
            );
            // tokens feed both ln1 and the first residual.
            let gxs = gx.sample_mut(i);
            for ch in 0..c {
                for p in 0..plane {
                    gxs[ch * plane + p] = g_tok_ln[p * c + ch] + g_y1[p * c + ch];
                }
            }
        }
        gx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn attention_gradients_match_finite_differences() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut arena = ParamArena::<f64>::new();
        let sa = SelfAttention::new(&mut arena, "sa", 4, 2, &mut rng);
        let x = Tensor::from_vec(
            2,
            4,
            2,
            2,
            (0..32).map(|i| ((i * 11 % 17) as f64 - 8.0) * 0.11).collect(),
        );
        let loss = |ps: &[f64], xt: &Tensor<f64>| -> f64 {
            let (y, _) = sa.forward(ps, xt);
            y.data.iter().enumerate().map(|(i, v)| v * v * (1.0 + 0.01 * i as f64)).sum()
        };
        let (y, cache) = sa.forward(&arena.data, &x);
        let gy = Tensor::from_vec(
            2,
            4,
            2,
            2,
            y.data
                .iter()
                .enumerate()
                .map(|(i, v)| 2.0 * v * (1.0 + 0.01 * i as f64))
                .collect(),
        );
        let mut grads = arena.zeros_like();
        let gx = sa.backward(&arena.data, &cache, &gy, &mut grads);
        let h = 1e-6;
        // Spot-check a spread of parameters from every segment.
        let picks: Vec<usize> = arena
            .segments
            .iter()
            .flat_map(|(_, handle)| [handle.offset, handle.offset + handle.len - 1])
            .collect();
        for idx in picks {
            let mut plus = arena.data.clone();
            plus[idx] += h;
            let mut minus = arena.data.clone();
            minus[idx] -= h;
            let num = (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * h);
            let ana = grads[idx];
            assert!(
                (num - ana).abs() / num.abs().max(1.0) < 1e-5,
                "param {idx}: {num} vs {ana}"
            );
        }
        for idx in (0..x.len()).step_by(5) {
            let mut xp = x.clone();
            xp.data[idx] += h;
            let mut xm = x.clone();
            xm.data[idx] -= h;
            let num = (loss(&arena.data, &xp) - loss(&arena.data, &xm)) / (2.0 * h);
            let ana = gx.data[idx];
            assert!(
                (num - ana).abs() / num.abs().max(1.0) < 1e-5,
                "input {idx}: {num} vs {ana}"
            );
        }
    }
}

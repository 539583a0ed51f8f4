//! Conditional UNet: three down blocks and three up blocks with interlaced
//! self-attention and skip connections pairing down-block i with up-block
//! (3 - i). Each block is two double convolutions (conv, group norm, GELU);
//! the conditioning vector is injected additively after each block's first
//! double convolution. Down blocks max-pool, up blocks nearest-upsample.

use super::nn::{
    gelu, gelu_grad, max_pool2, max_pool2_backward, upsample2, upsample2_backward, AttentionCache,
    Conv2d, Elem, GroupNorm, GroupNormCache, Linear, ParamArena, SelfAttention, Tensor,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UNetConfig {
    /// Channel widths down the path; mirrored on the way up.
    pub widths: (usize, usize, usize),
    /// Length of each sinusoidal encoding part (t, mu_x, mu_y).
    pub dim_per_part: usize,
    /// Group-norm group count.
    pub groups: usize,
    /// Attention heads.
    pub heads: usize,
    /// Self-attention placement after down1..3 and up1..3.
    pub attention: [bool; 6],
}

impl Default for UNetConfig {
    fn default() -> Self {
        UNetConfig {
            widths: (64, 128, 256),
            dim_per_part: 64,
            groups: 8,
            heads: 4,
            attention: [true; 6],
        }
    }
}

impl UNetConfig {
    /// Reduced configuration for desk-scale runs.
    pub fn desk() -> Self {
        UNetConfig {
            widths: (16, 32, 64),
            dim_per_part: 16,
            groups: 8,
            heads: 4,
            attention: [true, true, true, true, true, false],
        }
    }

    pub fn emb_dim(&self) -> usize {
        3 * self.dim_per_part
    }
}

// ---------------------------------------------------------------------------
// Double convolution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct DoubleConv {
    conv1: Conv2d,
    gn1: GroupNorm,
    conv2: Conv2d,
    gn2: GroupNorm,
    residual: bool,
}

#[derive(Debug, Clone)]
struct DoubleConvCache<E> {
    y1: Tensor<E>,
    gn1: GroupNormCache<E>,
    z1: Tensor<E>,
    a1: Tensor<E>,
    y2: Tensor<E>,
    gn2: GroupNormCache<E>,
    /// Pre-activation of the residual sum; present only for residual blocks.
    s: Option<Tensor<E>>,
}

impl DoubleConv {
    fn new<E: Elem, R: Rng>(
        arena: &mut ParamArena<E>,
        name: &str,
        c_in: usize,
        c_out: usize,
        groups: usize,
        residual: bool,
        rng: &mut R,
    ) -> Self {
        assert!(!residual || c_in == c_out);
        DoubleConv {
            conv1: Conv2d::new(arena, &format!("{name}.conv1"), c_in, c_out, 3, 1, rng),
            gn1: GroupNorm::new(arena, &format!("{name}.gn1"), groups, c_out),
            conv2: Conv2d::new(arena, &format!("{name}.conv2"), c_out, c_out, 3, 1, rng),
            gn2: GroupNorm::new(arena, &format!("{name}.gn2"), groups, c_out),
            residual,
        }
    }

    fn forward<E: Elem>(&self, ps: &[E], x: &Tensor<E>) -> (Tensor<E>, DoubleConvCache<E>) {
        let y1 = self.conv1.forward(ps, x);
        let (z1, gn1) = self.gn1.forward(ps, &y1);
        let mut a1 = z1.clone();
        a1.map_in_place(gelu);
        let y2 = self.conv2.forward(ps, &a1);
        let (z2, gn2) = self.gn2.forward(ps, &y2);
        if self.residual {
            let mut s = z2;
            s.add_assign(x);
            let mut out = s.clone();
            out.map_in_place(gelu);
            (out, DoubleConvCache { y1, gn1, z1, a1, y2, gn2, s: Some(s) })
        } else {
            (z2, DoubleConvCache { y1, gn1, z1, a1, y2, gn2, s: None })
        }
    }

    fn backward<E: Elem>(
        &self,
        ps: &[E],
        x: &Tensor<E>,
        cache: &DoubleConvCache<E>,
        gy: &Tensor<E>,
        grads: &mut [E],
    ) -> Tensor<E> {
        let (g_z2, g_res) = if let Some(s) = &cache.s {
            let mut g = gy.clone();
            for (gv, &sv) in g.data.iter_mut().zip(&s.data) {
                *gv *= gelu_grad(sv);
            }
            let res = g.clone();
            (g, Some(res))
        } else {
            (gy.clone(), None)
        };
        let g_y2 = self.gn2.backward(ps, &cache.y2, &cache.gn2, &g_z2, grads);
        let g_a1 = self.conv2.backward(ps, &cache.a1, &g_y2, grads);
        let mut g_z1 = g_a1;
        for (gv, &zv) in g_z1.data.iter_mut().zip(&cache.z1.data) {
            *gv *= gelu_grad(zv);
        }
        let g_y1 = self.gn1.backward(ps, &cache.y1, &cache.gn1, &g_z1, grads);
        let mut gx = self.conv1.backward(ps, x, &g_y1, grads);
        if let Some(res) = g_res {
            gx.add_assign(&res);
        }
        gx
    }
}

// ---------------------------------------------------------------------------
// Down / up blocks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct DownBlock {
    dc1: DoubleConv,
    dc2: DoubleConv,
    emb: Linear,
    c_in: usize,
}

#[derive(Debug, Clone)]
struct DownCache<E> {
    pooled: Tensor<E>,
    argmax: Vec<u32>,
    dc1: DoubleConvCache<E>,
    h1e: Tensor<E>,
    dc2: DoubleConvCache<E>,
}

impl DownBlock {
    fn new<E: Elem, R: Rng>(
        arena: &mut ParamArena<E>,
        name: &str,
        c_in: usize,
        c_out: usize,
        groups: usize,
        emb_dim: usize,
        rng: &mut R,
    ) -> Self {
        DownBlock {
            dc1: DoubleConv::new(arena, &format!("{name}.dc1"), c_in, c_in, groups, true, rng),
            dc2: DoubleConv::new(arena, &format!("{name}.dc2"), c_in, c_out, groups, false, rng),
            emb: Linear::new(arena, &format!("{name}.emb"), emb_dim, c_in, rng),
            c_in,
        }
    }

    fn forward<E: Elem>(
        &self,
        ps: &[E],
        x: &Tensor<E>,
        emb_act: &[E],
    ) -> (Tensor<E>, DownCache<E>) {
        let (pooled, argmax) = max_pool2(x);
        let (h1, dc1) = self.dc1.forward(ps, &pooled);
        let e = self.emb.forward(ps, emb_act, x.n);
        let mut h1e = h1;
        broadcast_add(&mut h1e, &e, self.c_in);
        let (out, dc2) = self.dc2.forward(ps, &h1e);
        (out, DownCache { pooled, argmax, dc1, h1e, dc2 })
    }

    /// Returns (gx, g_emb_act contribution).
    fn backward<E: Elem>(
        &self,
        ps: &[E],
        x_shape: (usize, usize, usize, usize),
        emb_act: &[E],
        cache: &DownCache<E>,
        gy: &Tensor<E>,
        grads: &mut [E],
    ) -> (Tensor<E>, Vec<E>) {
        let g_h1e = self.dc2.backward(ps, &cache.h1e, &cache.dc2, gy, grads);
        let g_e = reduce_broadcast(&g_h1e, self.c_in);
        let g_emb_act = self.emb.backward(ps, emb_act, &g_e, g_h1e.n, grads);
        let g_p = self.dc1.backward(ps, &cache.pooled, &cache.dc1, &g_h1e, grads);
        let gx = max_pool2_backward(x_shape, &cache.argmax, &g_p);
        (gx, g_emb_act)
    }
}

#[derive(Debug, Clone)]
struct UpBlock {
    dc1: DoubleConv,
    dc2: DoubleConv,
    emb: Linear,
    c_cat: usize,
    c_skip: usize,
}

#[derive(Debug, Clone)]
struct UpCache<E> {
    cat: Tensor<E>,
    dc1: DoubleConvCache<E>,
    h1e: Tensor<E>,
    dc2: DoubleConvCache<E>,
}

impl UpBlock {
    fn new<E: Elem, R: Rng>(
        arena: &mut ParamArena<E>,
        name: &str,
        c_in: usize,
        c_skip: usize,
        c_out: usize,
        groups: usize,
        emb_dim: usize,
        rng: &mut R,
    ) -> Self {
        let c_cat = c_in + c_skip;
        UpBlock {
            dc1: DoubleConv::new(arena, &format!("{name}.dc1"), c_cat, c_cat, groups, true, rng),
            dc2: DoubleConv::new(arena, &format!("{name}.dc2"), c_cat, c_out, groups, false, rng),
            emb: Linear::new(arena, &format!("{name}.emb"), emb_dim, c_cat, rng),
            c_cat,
            c_skip,
        }
    }

    fn forward<E: Elem>(
        &self,
        ps: &[E],
        x: &Tensor<E>,
        skip: &Tensor<E>,
        emb_act: &[E],
    ) -> (Tensor<E>, UpCache<E>) {
        let up = upsample2(x);
        let cat = Tensor::concat_channels(skip, &up);
        let (h1, dc1) = self.dc1.forward(ps, &cat);
        let e = self.emb.forward(ps, emb_act, x.n);
        let mut h1e = h1;
        broadcast_add(&mut h1e, &e, self.c_cat);
        let (out, dc2) = self.dc2.forward(ps, &h1e);
        (out, UpCache { cat, dc1, h1e, dc2 })
    }

    /// Returns (gx, g_skip, g_emb_act contribution).
    fn backward<E: Elem>(
        &self,
        ps: &[E],
        emb_act: &[E],
        cache: &UpCache<E>,
        gy: &Tensor<E>,
        grads: &mut [E],
    ) -> (Tensor<E>, Tensor<E>, Vec<E>) {
        let g_h1e = self.dc2.backward(ps, &cache.h1e, &cache.dc2, gy, grads);
        let g_e = reduce_broadcast(&g_h1e, self.c_cat);
        let g_emb_act = self.emb.backward(ps, emb_act, &g_e, g_h1e.n, grads);
        let g_cat = self.dc1.backward(ps, &cache.cat, &cache.dc1, &g_h1e, grads);
        let (g_skip, g_up) = g_cat.split_channels(self.c_skip);
        let gx = upsample2_backward(&g_up);
        (gx, g_skip, g_emb_act)
    }
}

fn broadcast_add<E: Elem>(t: &mut Tensor<E>, rows: &[E], c: usize) {
    let plane = t.plane();
    for i in 0..t.n {
        let row = &rows[i * c..(i + 1) * c];
        let ts = t.sample_mut(i);
        for ch in 0..c {
            let ev = row[ch];
            for v in &mut ts[ch * plane..(ch + 1) * plane] {
                *v += ev;
            }
        }
    }
}

fn reduce_broadcast<E: Elem>(g: &Tensor<E>, c: usize) -> Vec<E> {
    let plane = g.plane();
    let mut out = vec![E::zero(); g.n * c];
    for i in 0..g.n {
        let gs = g.sample(i);
        for ch in 0..c {
            let mut sum = E::zero();
            for &v in &gs[ch * plane..(ch + 1) * plane] {
                sum += v;
            }
            out[i * c + ch] = sum;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// UNet
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct UNet {
    pub config: UNetConfig,
    inc: DoubleConv,
    down1: DownBlock,
    down2: DownBlock,
    down3: DownBlock,
    sa: [Option<SelfAttention>; 6],
    bot1: DoubleConv,
    bot2: DoubleConv,
    up1: UpBlock,
    up2: UpBlock,
    up3: UpBlock,
    outc: Conv2d,
}

/// Saved forward state for one batch chunk.
pub struct UNetCache<E> {
    x: Tensor<E>,
    emb_raw: Vec<E>,
    emb_act: Vec<E>,
    inc: DoubleConvCache<E>,
    x1: Tensor<E>,
    d1: DownCache<E>,
    sa1: Option<AttentionCache<E>>,
    x2: Tensor<E>,
    d2: DownCache<E>,
    sa2: Option<AttentionCache<E>>,
    x3: Tensor<E>,
    d3: DownCache<E>,
    sa3: Option<AttentionCache<E>>,
    x4: Tensor<E>,
    b1: DoubleConvCache<E>,
    xb1: Tensor<E>,
    b2: DoubleConvCache<E>,
    xb: Tensor<E>,
    u1: UpCache<E>,
    sa4: Option<AttentionCache<E>>,
    u1_out: Tensor<E>,
    u2: UpCache<E>,
    sa5: Option<AttentionCache<E>>,
    u2_out: Tensor<E>,
    u3: UpCache<E>,
    sa6: Option<AttentionCache<E>>,
    u3_out: Tensor<E>,
}

/// Named tap points for activation capture; 4 is the third down block's
/// output (the representation the analyses read).
pub const TAP_COUNT: u32 = 8;

impl UNet {
    pub fn build<E: Elem, R: Rng>(
        config: UNetConfig,
        arena: &mut ParamArena<E>,
        rng: &mut R,
    ) -> Self {
        let (c1, c2, c3) = config.widths;
        let g = config.groups;
        let ed = config.emb_dim();
        let heads = config.heads;
        let inc = DoubleConv::new(arena, "inc", 1, c1, g, false, rng);
        let down1 = DownBlock::new(arena, "down1", c1, c2, g, ed, rng);
        let sa1 = config.attention[0]
            .then(|| SelfAttention::new(arena, "sa1", c2, heads, rng));
        let down2 = DownBlock::new(arena, "down2", c2, c3, g, ed, rng);
        let sa2 = config.attention[1]
            .then(|| SelfAttention::new(arena, "sa2", c3, heads, rng));
        let down3 = DownBlock::new(arena, "down3", c3, c3, g, ed, rng);
        let sa3 = config.attention[2]
            .then(|| SelfAttention::new(arena, "sa3", c3, heads, rng));
        let bot1 = DoubleConv::new(arena, "bot1", c3, c3, g, true, rng);
        let bot2 = DoubleConv::new(arena, "bot2", c3, c3, g, true, rng);
        let up1 = UpBlock::new(arena, "up1", c3, c3, c2, g, ed, rng);
        let sa4 = config.attention[3]
            .then(|| SelfAttention::new(arena, "sa4", c2, heads, rng));
        let up2 = UpBlock::new(arena, "up2", c2, c2, c1, g, ed, rng);
        let sa5 = config.attention[4]
            .then(|| SelfAttention::new(arena, "sa5", c1, heads, rng));
        let up3 = UpBlock::new(arena, "up3", c1, c1, c1, g, ed, rng);
        let sa6 = config.attention[5]
            .then(|| SelfAttention::new(arena, "sa6", c1, heads, rng));
        let outc = Conv2d::new(arena, "outc", c1, 1, 1, 0, rng);
        UNet {
            config,
            inc,
            down1,
            down2,
            down3,
            sa: [sa1, sa2, sa3, sa4, sa5, sa6],
            bot1,
            bot2,
            up1,
            up2,
            up3,
            outc,
        }
    }

    fn apply_sa<E: Elem>(
        sa: &Option<SelfAttention>,
        ps: &[E],
        x: Tensor<E>,
    ) -> (Tensor<E>, Option<AttentionCache<E>>) {
        match sa {
            Some(layer) => {
                let (y, cache) = layer.forward(ps, &x);
                (y, Some(cache))
            }
            None => (x, None),
        }
    }

    /// Forward pass. `emb_raw` is the (n x emb_dim) conditioning matrix; the
    /// optional `tap` (1..=8) also returns that block's output.
    pub fn forward<E: Elem>(
        &self,
        ps: &[E],
        x: &Tensor<E>,
        emb_raw: &[E],
        tap: Option<u32>,
    ) -> (Tensor<E>, UNetCache<E>, Option<Tensor<E>>) {
        assert_eq!(x.h % 8, 0, "input side must be divisible by 8");
        let emb_act: Vec<E> = emb_raw.iter().map(|&v| gelu(v)).collect();
        let (x1, inc) = self.inc.forward(ps, x);
        let (x2_raw, d1) = self.down1.forward(ps, &x1, &emb_act);
        let (x2, sa1) = Self::apply_sa(&self.sa[0], ps, x2_raw);
        let (x3_raw, d2) = self.down2.forward(ps, &x2, &emb_act);
        let (x3, sa2) = Self::apply_sa(&self.sa[1], ps, x3_raw);
        let (x4_raw, d3) = self.down3.forward(ps, &x3, &emb_act);
        let (x4, sa3) = Self::apply_sa(&self.sa[2], ps, x4_raw);
        let (xb1, b1) = self.bot1.forward(ps, &x4);
        let (xb, b2) = self.bot2.forward(ps, &xb1);
        let (u1_raw, u1) = self.up1.forward(ps, &xb, &x3, &emb_act);
        let (u1_out, sa4) = Self::apply_sa(&self.sa[3], ps, u1_raw);
        let (u2_raw, u2) = self.up2.forward(ps, &u1_out, &x2, &emb_act);
        let (u2_out, sa5) = Self::apply_sa(&self.sa[4], ps, u2_raw);
        let (u3_raw, u3) = self.up3.forward(ps, &u2_out, &x1, &emb_act);
        let (u3_out, sa6) = Self::apply_sa(&self.sa[5], ps, u3_raw);
        let out = self.outc.forward(ps, &u3_out);
        let tapped = tap.map(|t| match t {
            1 => x1.clone(),
            2 => x2.clone(),
            3 => x3.clone(),
            4 => x4.clone(),
            5 => xb.clone(),
            6 => u1_out.clone(),
            7 => u2_out.clone(),
            _ => u3_out.clone(),
        });
        let cache = UNetCache {
            x: x.clone(),
            emb_raw: emb_raw.to_vec(),
            emb_act,
            inc,
            x1,
            d1,
            sa1,
            x2,
            d2,
            sa2,
            x3,
            d3,
            sa3,
            x4,
            b1,
            xb1,
            b2,
            xb,
            u1,
            sa4,
            u1_out,
            u2,
            sa5,
            u2_out,
            u3,
            sa6,
            u3_out,
        };
        (out, cache, tapped)
    }

    fn sa_backward<E: Elem>(
        sa: &Option<SelfAttention>,
        ps: &[E],
        cache: &Option<AttentionCache<E>>,
        gy: Tensor<E>,
        grads: &mut [E],
    ) -> Tensor<E> {
        match (sa, cache) {
            (Some(layer), Some(c)) => layer.backward(ps, c, &gy, grads),
            _ => gy,
        }
    }

    /// Backward pass; accumulates parameter gradients and returns the
    /// gradient with respect to the conditioning matrix.
    pub fn backward<E: Elem>(
        &self,
        ps: &[E],
        cache: &UNetCache<E>,
        g_out: &Tensor<E>,
        grads: &mut [E],
    ) -> Vec<E> {
        let n = g_out.n;
        let ed = cache.emb_raw.len() / n;
        let mut g_emb_act = vec![E::zero(); n * ed];
        let add_emb = |acc: &mut Vec<E>, part: Vec<E>| {
            for (a, b) in acc.iter_mut().zip(part) {
                *a += b;
            }
        };

        let g_u3_out = self.outc.backward(ps, &cache.u3_out, g_out, grads);
        let g_u3_raw = Self::sa_backward(&self.sa[5], ps, &cache.sa6, g_u3_out, grads);
        let (g_u2_out, g_x1_skip, ge) =
            self.up3.backward(ps, &cache.emb_act, &cache.u3, &g_u3_raw, grads);
        add_emb(&mut g_emb_act, ge);
        let g_u2_raw = Self::sa_backward(&self.sa[4], ps, &cache.sa5, g_u2_out, grads);
        let (g_u1_out, g_x2_skip, ge) =
            self.up2.backward(ps, &cache.emb_act, &cache.u2, &g_u2_raw, grads);
        add_emb(&mut g_emb_act, ge);
        let g_u1_raw = Self::sa_backward(&self.sa[3], ps, &cache.sa4, g_u1_out, grads);
        let (g_xb, g_x3_skip, ge) =
            self.up1.backward(ps, &cache.emb_act, &cache.u1, &g_u1_raw, grads);
        add_emb(&mut g_emb_act, ge);

        let g_xb1 = self.bot2.backward(ps, &cache.xb1, &cache.b2, &g_xb, grads);
        let g_x4 = self.bot1.backward(ps, &cache.x4, &cache.b1, &g_xb1, grads);

        let g_x4_raw = Self::sa_backward(&self.sa[2], ps, &cache.sa3, g_x4, grads);
        let x3_shape = (cache.x3.n, cache.x3.c, cache.x3.h, cache.x3.w);
        let (mut g_x3, ge) =
            self.down3.backward(ps, x3_shape, &cache.emb_act, &cache.d3, &g_x4_raw, grads);
        add_emb(&mut g_emb_act, ge);
        g_x3.add_assign(&g_x3_skip);

        let g_x3_raw = Self::sa_backward(&self.sa[1], ps, &cache.sa2, g_x3, grads);
        let x2_shape = (cache.x2.n, cache.x2.c, cache.x2.h, cache.x2.w);
        let (mut g_x2, ge) =
            self.down2.backward(ps, x2_shape, &cache.emb_act, &cache.d2, &g_x3_raw, grads);
        add_emb(&mut g_emb_act, ge);
        g_x2.add_assign(&g_x2_skip);

        let g_x2_raw = Self::sa_backward(&self.sa[0], ps, &cache.sa1, g_x2, grads);
        let x1_shape = (cache.x1.n, cache.x1.c, cache.x1.h, cache.x1.w);
        let (mut g_x1, ge) =
            self.down1.backward(ps, x1_shape, &cache.emb_act, &cache.d1, &g_x2_raw, grads);
        add_emb(&mut g_emb_act, ge);
        g_x1.add_assign(&g_x1_skip);

        let _g_x = self.inc.backward(ps, &cache.x, &cache.inc, &g_x1, grads);

        // Through the GELU on the raw embedding.
        let mut g_emb = g_emb_act;
        for (g, &e) in g_emb.iter_mut().zip(&cache.emb_raw) {
            *g *= gelu_grad(e);
        }
        g_emb
    }
}

//! 2x max pooling and nearest-neighbor upsampling.

use super::{Elem, Tensor};

/// 2x2 max pool, stride 2. Returns the pooled tensor and the flat argmax
/// index per output element (ties take the first scan position).
pub fn max_pool2<E: Elem>(x: &Tensor<E>) -> (Tensor<E>, Vec<u32>) {
    assert_eq!(x.h % 2, 0);
    assert_eq!(x.w % 2, 0);
    let (oh, ow) = (x.h / 2, x.w / 2);
    let mut y = Tensor::zeros(x.n, x.c, oh, ow);
    let mut argmax = vec![0u32; y.len()];
    let mut out_idx = 0usize;
    for i in 0..x.n {
        for c in 0..x.c {
            let base = (i * x.c + c) * x.h * x.w;
            for oi in 0..oh {
                for oj in 0..ow {
                    let mut best_idx = base + (2 * oi) * x.w + 2 * oj;
                    let mut best = x.data[best_idx];
                    for (di, dj) in [(0usize, 1usize), (1, 0), (1, 1)] {
                        let idx = base + (2 * oi + di) * x.w + 2 * oj + dj;
                        if x.data[idx] > best {
                            best = x.data[idx];
                            best_idx = idx;
                        }
                    }
                    y.data[out_idx] = best;
                    argmax[out_idx] = best_idx as u32;
                    out_idx += 1;
                }
            }
        }
    }
    (y, argmax)
}

pub fn max_pool2_backward<E: Elem>(
    x_shape: (usize, usize, usize, usize),
    argmax: &[u32],
    gy: &Tensor<E>,
) -> Tensor<E> {
    let (n, c, h, w) = x_shape;
    let mut gx = Tensor::zeros(n, c, h, w);
    for (out_idx, &src) in argmax.iter().enumerate() {
        gx.data[src as usize] += gy.data[out_idx];
    }
    gx
}

/// Nearest-neighbor 2x upsample.
pub fn upsample2<E: Elem>(x: &Tensor<E>) -> Tensor<E> {
    let (oh, ow) = (x.h * 2, x.w * 2);
    let mut y = Tensor::zeros(x.n, x.c, oh, ow);
    for i in 0..x.n {
        for c in 0..x.c {
            let src_base = (i * x.c + c) * x.h * x.w;
            let dst_base = (i * x.c + c) * oh * ow;
            for si in 0..x.h {
                for sj in 0..x.w {
                    let v = x.data[src_base + si * x.w + sj];
                    let d0 = dst_base + (2 * si) * ow + 2 * sj;
                    y.data[d0] = v;
                    y.data[d0 + 1] = v;
                    y.data[d0 + ow] = v;
                    y.data[d0 + ow + 1] = v;
                }
            }
        }
    }
    y
}

pub fn upsample2_backward<E: Elem>(gy: &Tensor<E>) -> Tensor<E> {
    assert_eq!(gy.h % 2, 0);
    assert_eq!(gy.w % 2, 0);
    let (ih, iw) = (gy.h / 2, gy.w / 2);
    let mut gx = Tensor::zeros(gy.n, gy.c, ih, iw);
    for i in 0..gy.n {
        for c in 0..gy.c {
            let dst_base = (i * gy.c + c) * ih * iw;
            let src_base = (i * gy.c + c) * gy.h * gy.w;
            for si in 0..ih {
                for sj in 0..iw {
                    let s0 = src_base + (2 * si) * gy.w + 2 * sj;
                    gx.data[dst_base + si * iw + sj] = gy.data[s0]
                        + gy.data[s0 + 1]
                        + gy.data[s0 + gy.w]
                        + gy.data[s0 + gy.w + 1];
                }
            }
        }
    }
    gx
}

//! Contiguous NCHW tensor.

use super::Elem;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<E> {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<E>,
}

impl<E: Elem> Tensor<E> {
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Tensor { n, c, h, w, data: vec![E::zero(); n * c * h * w] }
    }

    pub fn from_vec(n: usize, c: usize, h: usize, w: usize, data: Vec<E>) -> Self {
        assert_eq!(data.len(), n * c * h * w);
        Tensor { n, c, h, w, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn plane(&self) -> usize {
        self.h * self.w
    }

    /// All channels of one sample.
    pub fn sample(&self, i: usize) -> &[E] {
        let stride = self.c * self.plane();
        &self.data[i * stride..(i + 1) * stride]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [E] {
        let stride = self.c * self.plane();
        &mut self.data[i * stride..(i + 1) * stride]
    }

    /// Concatenates along the channel axis.
    pub fn concat_channels(a: &Tensor<E>, b: &Tensor<E>) -> Tensor<E> {
        assert_eq!((a.n, a.h, a.w), (b.n, b.h, b.w));
        let mut out = Tensor::zeros(a.n, a.c + b.c, a.h, a.w);
        let plane = a.plane();
        for i in 0..a.n {
            let dst = out.sample_mut(i);
            dst[..a.c * plane].copy_from_slice(a.sample(i));
            dst[a.c * plane..].copy_from_slice(b.sample(i));
        }
        out
    }

    /// Splits a channel concatenation back into its two parts.
    pub fn split_channels(&self, c_first: usize) -> (Tensor<E>, Tensor<E>) {
        assert!(c_first < self.c);
        let mut a = Tensor::zeros(self.n, c_first, self.h, self.w);
        let mut b = Tensor::zeros(self.n, self.c - c_first, self.h, self.w);
        let plane = self.plane();
        for i in 0..self.n {
            let src = self.sample(i);
            a.sample_mut(i).copy_from_slice(&src[..c_first * plane]);
            b.sample_mut(i).copy_from_slice(&src[c_first * plane..]);
        }
        (a, b)
    }

    pub fn map_in_place(&mut self, f: impl Fn(E) -> E) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    pub fn add_assign(&mut self, other: &Tensor<E>) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_and_split_are_inverse() {
        let a = Tensor::from_vec(2, 1, 2, 2, (0..8).map(|v| v as f32).collect());
        let b = Tensor::from_vec(2, 2, 2, 2, (8..24).map(|v| v as f32).collect());
        let cat = Tensor::concat_channels(&a, &b);
        assert_eq!(cat.c, 3);
        let (a2, b2) = cat.split_channels(1);
        assert_eq!(a, a2);
        assert_eq!(b, b2);
    }
}

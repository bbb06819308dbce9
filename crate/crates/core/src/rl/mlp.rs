use std::fmt::Debug;

use num_traits::Float;

use crate::rng::Prng;

/// Element type of a network: `f32` for training and inference, `f64` for
/// gradient checks.
pub trait Scalar: Float + Default + Debug + Send + Sync + 'static {
    /// `C = A B + beta C` on strided row/column layouts.
    #[allow(clippy::too_many_arguments)]
    fn gemm(m: usize, k: usize, n: usize, a: &[Self], rsa: isize, csa: isize, b: &[Self], rsb: isize, csb: isize, beta: Self, c: &mut [Self]);

    fn of(v: f64) -> Self {
        Self::from(v).expect("representable")
    }
}

impl Scalar for f32 {
    fn gemm(m: usize, k: usize, n: usize, a: &[f32], rsa: isize, csa: isize, b: &[f32], rsb: isize, csb: isize, beta: f32, c: &mut [f32]) {
        debug_assert!(c.len() >= m * n);
        // SAFETY: callers pass slices that cover the strided extents
        unsafe {
            matrixmultiply::sgemm(m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), n as isize, 1);
        }
    }
}

impl Scalar for f64 {
    fn gemm(m: usize, k: usize, n: usize, a: &[f64], rsa: isize, csa: isize, b: &[f64], rsb: isize, csb: isize, beta: f64, c: &mut [f64]) {
        debug_assert!(c.len() >= m * n);
        // SAFETY: as above
        unsafe {
            matrixmultiply::dgemm(m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), n as isize, 1);
        }
    }
}

/// Fully connected network with ReLU hidden layers and a linear output.
/// Parameters live in one flat array, layer by layer, each layer as its
/// `out x in` row-major weight matrix followed by its `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    sizes: Vec<usize>,
    params: Vec<T>,
}

/// Per-layer activations kept by [`Mlp::forward_cached`] for backprop.
#[derive(Debug, Clone, Default)]
pub struct Cache<T> {
    batch: usize,
    acts: Vec<Vec<T>>,
}

impl<T> Cache<T> {
    pub fn output(&self) -> &[T] {
        self.acts.last().map_or(&[], |v| v.as_slice())
    }
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl<T: Scalar> Mlp<T> {
    /// Uniform init in `±1/sqrt(fan_in)` for weights and biases.
    pub fn new(sizes: &[usize], rng: &mut Prng) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0), "layer sizes must be positive");
        let mut params = Vec::with_capacity(param_count(sizes));
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] + w[1] {
                params.push(T::of(rng.uniform(-bound, bound)));
            }
        }
        Mlp { sizes: sizes.to_vec(), params }
    }

    pub fn from_params(sizes: &[usize], params: Vec<T>) -> Option<Self> {
        (sizes.len() >= 2 && sizes.iter().all(|&s| s > 0) && params.len() == param_count(sizes))
            .then(|| Mlp { sizes: sizes.to_vec(), params })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn cast<U: Scalar>(&self) -> Mlp<U> {
        Mlp { sizes: self.sizes.clone(), params: self.params.iter().map(|p| U::of(p.to_f64().unwrap())).collect() }
    }

    fn layer(&self, l: usize) -> (usize, usize, usize) {
        let off: usize = self.sizes[..l + 1].windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        (off, self.sizes[l], self.sizes[l + 1])
    }

    fn dense(&self, l: usize, x: &[T], batch: usize, out: &mut Vec<T>) {
        let (off, n_in, n_out) = self.layer(l);
        let w = &self.params[off..off + n_in * n_out];
        let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
        out.clear();
        out.reserve(batch * n_out);
        for _ in 0..batch {
            out.extend_from_slice(b);
        }
        // out = x W^T + b
        T::gemm(batch, n_in, n_out, x, n_in as isize, 1, w, 1, n_in as isize, T::one(), out);
        if l + 2 < self.sizes.len() {
            for v in out.iter_mut() {
                *v = v.max(T::zero());
            }
        }
    }

    /// Outputs for a row-major `batch x input_dim` block.
    pub fn forward(&self, x: &[T], batch: usize) -> Vec<T> {
        assert_eq!(x.len(), batch * self.input_dim());
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for l in 0..self.sizes.len() - 1 {
            self.dense(l, &cur, batch, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    pub fn forward_cached(&self, x: &[T], batch: usize, cache: &mut Cache<T>) {
        assert_eq!(x.len(), batch * self.input_dim());
        let layers = self.sizes.len();
        cache.batch = batch;
        cache.acts.resize_with(layers, Vec::new);
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(x);
        for l in 0..layers - 1 {
            let (head, tail) = cache.acts.split_at_mut(l + 1);
            self.dense(l, &head[l], batch, &mut tail[0]);
        }
    }

    /// Parameter gradient for upstream gradient `dout` (`batch x output_dim`)
    /// through the activations in `cache`; overwrites `grad`.
    pub fn backward(&self, cache: &Cache<T>, dout: &[T], grad: &mut [T]) {
        let batch = cache.batch;
        assert_eq!(dout.len(), batch * self.output_dim());
        assert_eq!(grad.len(), self.params.len());
        let mut delta = dout.to_vec();
        let mut prev = Vec::new();
        for l in (0..self.sizes.len() - 1).rev() {
            let (off, n_in, n_out) = self.layer(l);
            if l + 2 < self.sizes.len() {
                for (d, a) in delta.iter_mut().zip(&cache.acts[l + 1]) {
                    if *a <= T::zero() {
                        *d = T::zero();
                    }
                }
            }
            let x = &cache.acts[l];
            let (gw, rest) = grad[off..].split_at_mut(n_in * n_out);
            // dW = delta^T x
            T::gemm(n_out, batch, n_in, &delta, 1, n_out as isize, x, n_in as isize, 1, T::zero(), gw);
            let gb = &mut rest[..n_out];
            gb.iter_mut().for_each(|g| *g = T::zero());
            for row in delta.chunks_exact(n_out) {
                for (g, d) in gb.iter_mut().zip(row) {
                    *g = *g + *d;
                }
            }
            if l > 0 {
                let w = &self.params[off..off + n_in * n_out];
                prev.clear();
                prev.resize(batch * n_in, T::zero());
                // dx = delta W
                T::gemm(batch, n_out, n_in, &delta, n_out as isize, 1, w, n_in as isize, 1, T::zero(), &mut prev);
                std::mem::swap(&mut delta, &mut prev);
            }
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_forward(net: &Mlp<f64>, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut off = 0;
        let s = net.sizes().to_vec();
        for l in 0..s.len() - 1 {
            let (n_in, n_out) = (s[l], s[l + 1]);
            let p = net.params();
            let mut out = vec![0.0; n_out];
            for o in 0..n_out {
                let mut z = p[off + n_in * n_out + o];
                for i in 0..n_in {
                    z += p[off + o * n_in + i] * cur[i];
                }
                out[o] = if l + 2 < s.len() { z.max(0.0) } else { z };
            }
            off += n_in * n_out + n_out;
            cur = out;
        }
        cur
    }

    #[test]
    fn forward_matches_naive() {
        let mut rng = Prng::new(4);
        let net: Mlp<f64> = Mlp::new(&[5, 7, 3, 2], &mut rng);
        let x: Vec<f64> = (0..15).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let out = net.forward(&x, 3);
        for b in 0..3 {
            let want = naive_forward(&net, &x[b * 5..b * 5 + 5]);
            for (g, w) in out[b * 2..b * 2 + 2].iter().zip(want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
        assert_eq!(param_count(&[16, 512, 256, 9]), 142_345);
    }

    #[test]
    fn argmax_ties_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 0.0]), 1);
        assert_eq!(argmax(&[0.0f32; 9]), 0);
    }
}

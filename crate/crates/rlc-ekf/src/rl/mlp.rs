//! Minimal dense networks with manual backpropagation and Adam, sized for
//! the compensation policy's actor and critic (inputs of 3, two hidden tanh
//! layers of 64). Weights are `f32` so the on-disk policy format round-trips
//! bit-exactly.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

/// One dense layer, `rows` outputs by `cols` inputs, weights row-major.
#[derive(Debug, Clone)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<f32>,
    pub b: Vec<f32>,
}

/// Feed-forward network: tanh on every layer except the last, which is
/// linear.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub layers: Vec<Dense>,
}

/// Activations recorded during a forward pass; `acts[0]` is the input and
/// `acts[i]` the output of layer `i` (post-tanh on hidden layers).
pub struct ForwardCache {
    pub acts: Vec<Vec<f32>>,
}

/// Per-layer parameter gradients, accumulated across a batch.
#[derive(Debug, Clone)]
pub struct Grads {
    pub w: Vec<Vec<f32>>,
    pub b: Vec<Vec<f32>>,
}

impl Grads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            w: net.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            b: net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        }
    }

    pub fn reset(&mut self) {
        for g in self.w.iter_mut().chain(self.b.iter_mut()) {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

impl Mlp {
    /// Xavier-uniform initialization; when `final_std` is given the last
    /// layer is instead drawn from `N(0, final_std²)` so the network starts
    /// near zero.
    pub fn new(sizes: &[usize], rng: &mut ChaCha8Rng, final_std: Option<f32>) -> Self {
        assert!(sizes.len() >= 2);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for i in 0..sizes.len() - 1 {
            let (cols, rows) = (sizes[i], sizes[i + 1]);
            let last = i == sizes.len() - 2;
            let w = match final_std {
                Some(std) if last => {
                    let normal = Normal::new(0.0_f32, std).unwrap();
                    (0..rows * cols).map(|_| normal.sample(rng)).collect()
                }
                _ => {
                    let limit = (6.0 / (rows + cols) as f32).sqrt();
                    let uniform = Uniform::new_inclusive(-limit, limit).unwrap();
                    (0..rows * cols).map(|_| uniform.sample(rng)).collect()
                }
            };
            layers.push(Dense {
                rows,
                cols,
                w,
                b: vec![0.0; rows],
            });
        }
        Self {
            sizes: sizes.to_vec(),
            layers,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Set the last layer (weights and bias) to exact zeros, making the
    /// network output identically zero.
    pub fn zero_final_layer(&mut self) {
        let last = self.layers.last_mut().unwrap();
        last.w.iter_mut().for_each(|x| *x = 0.0);
        last.b.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn forward(&self, input: &[f32]) -> Vec<f32> {
        debug_assert_eq!(input.len(), self.input_dim());
        let mut a = input.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = vec![0.0_f32; layer.rows];
            for r in 0..layer.rows {
                let row = &layer.w[r * layer.cols..(r + 1) * layer.cols];
                let mut acc = layer.b[r];
                for (wv, av) in row.iter().zip(&a) {
                    acc += wv * av;
                }
                z[r] = if i == last { acc } else { acc.tanh() };
            }
            a = z;
        }
        a
    }

    pub fn forward_cached(&self, input: &[f32]) -> ForwardCache {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let a = acts.last().unwrap();
            let mut z = vec![0.0_f32; layer.rows];
            for r in 0..layer.rows {
                let row = &layer.w[r * layer.cols..(r + 1) * layer.cols];
                let mut acc = layer.b[r];
                for (wv, av) in row.iter().zip(a) {
                    acc += wv * av;
                }
                z[r] = if i == last { acc } else { acc.tanh() };
            }
            acts.push(z);
        }
        ForwardCache { acts }
    }

    /// Backpropagate `d_out = ∂L/∂output`. Parameter gradients accumulate
    /// into `grads` when given; the return value is `∂L/∂input`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        d_out: &[f32],
        mut grads: Option<&mut Grads>,
    ) -> Vec<f32> {
        let mut d = d_out.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &cache.acts[i];
            // Hidden layers cached post-tanh activations; fold in tanh'.
            if i != self.layers.len() - 1 {
                let out = &cache.acts[i + 1];
                for (dv, av) in d.iter_mut().zip(out) {
                    *dv *= 1.0 - av * av;
                }
            }
            if let Some(g) = grads.as_deref_mut() {
                for r in 0..layer.rows {
                    let gw = &mut g.w[i][r * layer.cols..(r + 1) * layer.cols];
                    for (gv, av) in gw.iter_mut().zip(input) {
                        *gv += d[r] * av;
                    }
                    g.b[i][r] += d[r];
                }
            }
            let mut d_in = vec![0.0_f32; layer.cols];
            for r in 0..layer.rows {
                let row = &layer.w[r * layer.cols..(r + 1) * layer.cols];
                for (div, wv) in d_in.iter_mut().zip(row) {
                    *div += wv * d[r];
                }
            }
            d = d_in;
        }
        d
    }

    /// All parameters flattened in layer order, weights row-major then bias.
    pub fn flatten(&self) -> Vec<f32> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    /// Inverse of [`flatten`](Mlp::flatten); the slice length must match.
    pub fn unflatten(&mut self, data: &[f32]) {
        let mut offset = 0;
        for l in &mut self.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&data[offset..offset + nw]);
            offset += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&data[offset..offset + nb]);
            offset += nb;
        }
        debug_assert_eq!(offset, data.len());
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }
}

/// Adam optimizer state for one network.
pub struct Adam {
    m_w: Vec<Vec<f32>>,
    v_w: Vec<Vec<f32>>,
    m_b: Vec<Vec<f32>>,
    v_b: Vec<Vec<f32>>,
    t: i32,
    beta1: f32,
    beta2: f32,
    eps: f32,
}

impl Adam {
    pub fn new(net: &Mlp) -> Self {
        Self {
            m_w: net.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            v_w: net.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            m_b: net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
            v_b: net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Grads, lr: f32) {
        self.t += 1;
        let bias1 = 1.0 - self.beta1.powi(self.t);
        let bias2 = 1.0 - self.beta2.powi(self.t);
        for (i, layer) in net.layers.iter_mut().enumerate() {
            Self::step_slice(
                &mut layer.w,
                &grads.w[i],
                &mut self.m_w[i],
                &mut self.v_w[i],
                lr,
                self.beta1,
                self.beta2,
                self.eps,
                bias1,
                bias2,
            );
            Self::step_slice(
                &mut layer.b,
                &grads.b[i],
                &mut self.m_b[i],
                &mut self.v_b[i],
                lr,
                self.beta1,
                self.beta2,
                self.eps,
                bias1,
                bias2,
            );
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn step_slice(
        params: &mut [f32],
        grads: &[f32],
        m: &mut [f32],
        v: &mut [f32],
        lr: f32,
        beta1: f32,
        beta2: f32,
        eps: f32,
        bias1: f32,
        bias2: f32,
    ) {
        for i in 0..params.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// Polyak mix `target ← κ·online + (1−κ)·target`.
pub fn polyak_update(target: &mut Mlp, online: &Mlp, kappa: f32) {
    debug_assert_eq!(target.sizes, online.sizes);
    for (tl, ol) in target.layers.iter_mut().zip(&online.layers) {
        for (t, o) in tl.w.iter_mut().zip(&ol.w) {
            *t = kappa * o + (1.0 - kappa) * *t;
        }
        for (t, o) in tl.b.iter_mut().zip(&ol.b) {
            *t = kappa * o + (1.0 - kappa) * *t;
        }
    }
}

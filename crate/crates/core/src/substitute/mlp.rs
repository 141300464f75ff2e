use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Dense layer, `y = W x + b` with `W` stored row-major (`out × in`).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn he_init(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let scale = (2.0 / inputs as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| { let e: f64 = StandardNormal.sample(rng); scale * e })
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    /// `Wᵀ g`.
    fn backward_input(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.inputs];
        for (o, &go) in g.iter().enumerate() {
            if go == 0.0 {
                continue;
            }
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            for (acc, w) in out.iter_mut().zip(row) {
                *acc += w * go;
            }
        }
        out
    }
}

/// Parameter gradients, laid out like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    fn scale(&mut self, s: f64) {
        for v in self.weights.iter_mut().chain(self.bias.iter_mut()) {
            v.iter_mut().for_each(|x| *x *= s);
        }
    }
}

/// Feed-forward network with ReLU hidden layers and a softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Activations saved by a forward pass. `inputs[i]` feeds layer `i`;
/// `logits` is the final layer output.
#[derive(Debug, Clone)]
pub struct Trace {
    pub inputs: Vec<Vec<f64>>,
    pub pre: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
}

impl Mlp {
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::param("layer sizes", "need at least two non-zero sizes"));
        }
        Ok(Self {
            layers: sizes
                .windows(2)
                .map(|w| Layer::he_init(w[0], w[1], rng))
                .collect(),
        })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn classes(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    /// Run layers `from..` on `x`; layers other than the last apply ReLU.
    pub fn trace_from(&self, from: usize, x: &[f64]) -> Trace {
        let mut inputs = Vec::with_capacity(self.layers.len() - from);
        let mut pre = Vec::with_capacity(self.layers.len() - from);
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate().skip(from) {
            let z = layer.forward(&cur);
            inputs.push(cur);
            cur = if i == last { z.clone() } else { z.iter().map(|v| v.max(0.0)).collect() };
            pre.push(z);
        }
        Trace {
            inputs,
            pre,
            logits: cur,
        }
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.trace_from(0, x).logits
    }

    /// Output of layers `..upto` (post-ReLU when `upto` is not the last layer).
    pub fn hidden(&self, x: &[f64], upto: usize) -> Vec<f64> {
        let mut cur = x.to_vec();
        for layer in &self.layers[..upto] {
            cur = layer.forward(&cur).into_iter().map(|v| v.max(0.0)).collect();
        }
        cur
    }

    pub fn probs(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    /// Back-propagate `dL/dlogits` through the layers recorded in `trace`
    /// (which started at layer `from`). Accumulates into `grads` and
    /// returns `dL/dinput`.
    pub fn backward(&self, from: usize, trace: &Trace, dlogits: &[f64], grads: Option<&mut Gradients>) -> Vec<f64> {
        let mut g = dlogits.to_vec();
        let last = self.layers.len() - 1;
        let mut grads = grads;
        for i in (from..self.layers.len()).rev() {
            let k = i - from;
            if i != last {
                for (gv, z) in g.iter_mut().zip(&trace.pre[k]) {
                    if *z <= 0.0 {
                        *gv = 0.0;
                    }
                }
            }
            let layer = &self.layers[i];
            if let Some(gr) = grads.as_deref_mut() {
                let input = &trace.inputs[k];
                for (o, &go) in g.iter().enumerate() {
                    gr.bias[i][o] += go;
                    if go == 0.0 {
                        continue;
                    }
                    let row = &mut gr.weights[i][o * layer.inputs..(o + 1) * layer.inputs];
                    for (acc, v) in row.iter_mut().zip(input) {
                        *acc += go * v;
                    }
                }
            }
            g = layer.backward_input(&g);
        }
        g
    }

    /// Mean cross-entropy over a batch starting at layer `from`, with
    /// gradients accumulated for layers `from..`.
    pub fn batch_loss_grad(&self, from: usize, xs: &[&[f64]], ys: &[usize]) -> (f64, Gradients) {
        let mut grads = Gradients::zeros_like(self);
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let trace = self.trace_from(from, x);
            let (l, d) = cross_entropy(&trace.logits, y);
            loss += l;
            self.backward(from, &trace, &d, Some(&mut grads));
        }
        let inv = 1.0 / xs.len().max(1) as f64;
        grads.scale(inv);
        (loss * inv, grads)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Cross-entropy of `softmax(z)` against class `y`, and `dL/dz`.
pub fn cross_entropy(z: &[f64], y: usize) -> (f64, Vec<f64>) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    let p = softmax(z);
    let mut d = p;
    d[y] -= 1.0;
    (lse - z[y], d)
}

/// Adam optimizer state.
#[derive(Debug, Clone)]
pub(crate) struct Adam {
    lr: f64,
    t: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub(crate) fn new(net: &Mlp, lr: f64) -> Self {
        Self {
            lr,
            t: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    /// Update layers `from..` of `net`.
    pub(crate) fn step(&mut self, net: &mut Mlp, g: &Gradients, from: usize) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for i in from..net.layers.len() {
            let layer = &mut net.layers[i];
            let groups = [
                (&mut layer.weights, &g.weights[i], &mut self.m.weights[i], &mut self.v.weights[i]),
                (&mut layer.bias, &g.bias[i], &mut self.m.bias[i], &mut self.v.bias[i]),
            ];
            for (p, gr, m, v) in groups {
                for j in 0..p.len() {
                    m[j] = B1 * m[j] + (1.0 - B1) * gr[j];
                    v[j] = B2 * v[j] + (1.0 - B2) * gr[j] * gr[j];
                    p[j] -= self.lr * (m[j] / c1) / ((v[j] / c2).sqrt() + 1e-8);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chacha;

    fn loss(net: &Mlp, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        net.batch_loss_grad(0, &refs, ys).0
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, -1000.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn parameter_gradient_matches_finite_differences() {
        let mut rng = chacha(11);
        for sizes in [vec![5, 7, 2], vec![4, 6, 5, 3]] {
            let net = Mlp::new(&sizes, &mut rng).unwrap();
            let xs: Vec<Vec<f64>> = (0..8)
                .map(|_| (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let ys: Vec<usize> = (0..8).map(|i| i % sizes[sizes.len() - 1]).collect();
            let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
            let (_, g) = net.batch_loss_grad(0, &refs, &ys);
            let h = 1e-4;
            for _ in 0..10 {
                let li = rng.random_range(0..net.layers.len());
                let wi = rng.random_range(0..net.layers[li].weights.len());
                let mut up = net.clone();
                up.layers[li].weights[wi] += h;
                let mut dn = net.clone();
                dn.layers[li].weights[wi] -= h;
                let fd = (loss(&up, &xs, &ys) - loss(&dn, &xs, &ys)) / (2.0 * h);
                let an = g.weights[li][wi];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
                assert!(rel <= 1e-4 || (fd - an).abs() < 1e-9, "{fd} vs {an}");
            }
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = chacha(12);
        let net = Mlp::new(&[6, 9, 2], &mut rng).unwrap();
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let trace = net.trace_from(0, &x);
        let (_, d) = cross_entropy(&trace.logits, 1);
        let gx = net.backward(0, &trace, &d, None);
        for i in 0..6 {
            let mut up = x.clone();
            up[i] += 1e-5;
            let mut dn = x.clone();
            dn[i] -= 1e-5;
            let fd = (cross_entropy(&net.logits(&up), 1).0 - cross_entropy(&net.logits(&dn), 1).0) / 2e-5;
            assert!((fd - gx[i]).abs() < 1e-7 * (1.0 + fd.abs()));
        }
    }
}

//! Fully connected network with ReLU hidden layers and a linear output.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Per-dimension affine map `(x - shift) / scale` applied before the first
/// layer, and inverted after the last. Scales are floored away from zero so a
/// constant column cannot poison the whole net.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalizer {
    /// Identity map of the given width.
    pub fn identity(dim: usize) -> Self {
        Normalizer {
            shift: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Mean/standard-deviation map fitted to `rows` (each of equal width).
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut shift = vec![0.0; dim];
        for row in rows {
            for (s, v) in shift.iter_mut().zip(row) {
                *s += v / n;
            }
        }
        let mut scale = vec![0.0; dim];
        for row in rows {
            for ((sc, v), m) in scale.iter_mut().zip(row).zip(&shift) {
                *sc += (v - m) * (v - m) / n;
            }
        }
        for sc in &mut scale {
            *sc = sc.sqrt().max(1e-12);
        }
        Normalizer { shift, scale }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            out[i] = (x[i] - self.shift[i]) / self.scale[i];
        }
    }

    pub fn invert(&self, y: &[f64], out: &mut [f64]) {
        for i in 0..y.len() {
            out[i] = y[i] * self.scale[i] + self.shift[i];
        }
    }
}

/// One dense layer, weights stored row-major as `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn affine(&self, x: &[f64], out: &mut [f64]) {
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
            let mut acc = self.biases[o];
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            *slot = acc;
        }
    }
}

/// Multilayer perceptron operating in normalized input/output space. The
/// normalizers are frozen at construction (from the training split) and
/// travel with the weights, so `predict` always works in raw units.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub x_norm: Normalizer,
    pub y_norm: Normalizer,
}

impl Mlp {
    /// Builds a net with the given layer widths (`sizes[0]` inputs through
    /// `sizes.last()` outputs), weights drawn uniformly within the fan-in
    /// bound `sqrt(3 / n_in)` and biases at zero.
    pub fn init(sizes: &[usize], x_norm: Normalizer, y_norm: Normalizer, seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::config("network needs at least two nonzero layer sizes"));
        }
        if x_norm.shift.len() != sizes[0] || y_norm.shift.len() != *sizes.last().unwrap() {
            return Err(Error::config("normalizer widths do not match layer sizes"));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for w in sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let bound = (3.0 / n_in as f64).sqrt();
            let weights = (0..n_in * n_out)
                .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound)
                .collect();
            layers.push(Layer {
                n_in,
                n_out,
                weights,
                biases: vec![0.0; n_out],
            });
        }
        Ok(Mlp {
            layers,
            x_norm,
            y_norm,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().unwrap().n_out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.n_in).collect();
        s.push(self.n_outputs());
        s
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Forward pass in normalized space; returns per-layer pre-activations.
    /// `acts[0]` is the normalized input, `acts[k]` for k >= 1 holds the
    /// affine output of layer k-1 before ReLU (the last entry is the net
    /// output, which has no ReLU).
    pub(crate) fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut xn = vec![0.0; x.len()];
        self.x_norm.apply(x, &mut xn);
        acts.push(xn);
        for (k, layer) in self.layers.iter().enumerate() {
            let mut hidden = acts[k].clone();
            // ReLU the stored pre-activation of every layer but the input.
            if k > 0 {
                for v in &mut hidden {
                    *v = v.max(0.0);
                }
            }
            let mut out = vec![0.0; layer.n_out];
            layer.affine(&hidden, &mut out);
            acts.push(out);
        }
        acts
    }

    /// Prediction in raw units.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let acts = self.forward_trace(x);
        let last = acts.last().unwrap();
        let mut out = vec![0.0; last.len()];
        self.y_norm.invert(last, &mut out);
        out
    }

    /// Mean absolute prediction error in raw units, averaged over every
    /// output element of every row.
    pub fn l1_error(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for (x, y) in xs.iter().zip(ys) {
            let p = self.predict(x);
            for (pi, yi) in p.iter().zip(y) {
                total += (pi - yi).abs();
                count += 1;
            }
        }
        total / count.max(1) as f64
    }

    pub(crate) fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub(crate) fn set_params_flat(&mut self, flat: &[f64]) {
        let mut i = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[i..i + nw]);
            i += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[i..i + nb]);
            i += nb;
        }
    }
}

/// Subgradient convention for |r| at r = 0: zero.
pub(crate) fn l1_sign(r: f64) -> f64 {
    if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// L1 loss in normalized space and parameter gradient for one batch, laid
/// out like `params_flat`. Loss is averaged over batch rows and output
/// elements.
pub(crate) fn l1_loss_grad(mlp: &Mlp, xs: &[&Vec<f64>], ys: &[&Vec<f64>]) -> (f64, Vec<f64>) {
    let n_layers = mlp.layers.len();
    let mut grad = vec![0.0; mlp.n_params()];
    let mut loss = 0.0;
    let denom = (xs.len() * mlp.n_outputs()) as f64;
    let mut yn = vec![0.0; mlp.n_outputs()];
    for (x, y) in xs.iter().zip(ys) {
        let acts = mlp.forward_trace(x);
        mlp.y_norm.apply(y, &mut yn);
        // delta at the output layer: d(mean |r|)/d(out).
        let mut delta: Vec<f64> = acts[n_layers]
            .iter()
            .zip(&yn)
            .map(|(p, t)| {
                loss += (p - t).abs() / denom;
                l1_sign(p - t) / denom
            })
            .collect();
        let mut offset = grad.len();
        for k in (0..n_layers).rev() {
            let layer = &mlp.layers[k];
            let input: Vec<f64> = if k == 0 {
                acts[0].clone()
            } else {
                acts[k].iter().map(|v| v.max(0.0)).collect()
            };
            offset -= layer.weights.len() + layer.biases.len();
            let (gw, gb) = grad[offset..offset + layer.weights.len() + layer.biases.len()]
                .split_at_mut(layer.weights.len());
            for o in 0..layer.n_out {
                gb[o] += delta[o];
                for i in 0..layer.n_in {
                    gw[o * layer.n_in + i] += delta[o] * input[i];
                }
            }
            if k > 0 {
                let mut prev = vec![0.0; layer.n_in];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * d;
                    }
                }
                // ReLU gate against the stored pre-activation.
                for (p, z) in prev.iter_mut().zip(&acts[k]) {
                    if *z <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }
    (loss, grad)
}

/// Outcome of comparing backpropagation against central differences.
#[derive(Debug, Clone)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// Verifies `l1_loss_grad` against a two-sided difference quotient on a
/// single batch. Parameters whose perturbation flips the sign of any
/// residual or crosses a ReLU boundary are skipped: the loss is not
/// differentiable there and the quotient measures nothing.
pub fn gradient_check(mlp: &Mlp, xs: &[Vec<f64>], ys: &[Vec<f64>], eps: f64) -> GradCheck {
    let xref: Vec<&Vec<f64>> = xs.iter().collect();
    let yref: Vec<&Vec<f64>> = ys.iter().collect();
    let (_, grad) = l1_loss_grad(mlp, &xref, &yref);
    let base = mlp.params_flat();
    let mut probe = mlp.clone();

    let signature = |m: &Mlp| -> Vec<bool> {
        let mut sig = Vec::new();
        let mut yn = vec![0.0; m.n_outputs()];
        for (x, y) in xs.iter().zip(ys) {
            let acts = m.forward_trace(x);
            m.y_norm.apply(y, &mut yn);
            for (k, a) in acts.iter().enumerate().skip(1) {
                if k == acts.len() - 1 {
                    for (p, t) in a.iter().zip(&yn) {
                        sig.push(p - t > 0.0);
                    }
                } else {
                    for z in a {
                        sig.push(*z > 0.0);
                    }
                }
            }
        }
        sig
    };

    let mut max_rel = 0.0f64;
    let mut checked = 0;
    let mut skipped = 0;
    for j in 0..base.len() {
        let mut p = base.clone();
        p[j] = base[j] + eps;
        probe.set_params_flat(&p);
        let sig_hi = signature(&probe);
        let (loss_hi, _) = l1_loss_grad(&probe, &xref, &yref);
        p[j] = base[j] - eps;
        probe.set_params_flat(&p);
        let sig_lo = signature(&probe);
        let (loss_lo, _) = l1_loss_grad(&probe, &xref, &yref);
        if sig_hi != sig_lo {
            skipped += 1;
            continue;
        }
        let numeric = (loss_hi - loss_lo) / (2.0 * eps);
        let denom = grad[j].abs().max(numeric.abs()).max(1e-8);
        max_rel = max_rel.max((grad[j] - numeric).abs() / denom);
        checked += 1;
    }
    probe.set_params_flat(&base);
    GradCheck {
        max_rel_err: max_rel,
        checked,
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_net(seed: u64) -> Mlp {
        Mlp::init(
            &[3, 8, 5, 2],
            Normalizer::identity(3),
            Normalizer::identity(2),
            seed,
        )
        .unwrap()
    }

    #[test]
    fn normalizer_round_trips() {
        let rows = vec![vec![1.0, 10.0], vec![3.0, 10.0], vec![5.0, 10.0]];
        let n = Normalizer::fit(&rows);
        assert!((n.shift[0] - 3.0).abs() < 1e-12);
        // constant column gets the floor scale, not zero
        assert_eq!(n.scale[1], 1e-12);
        let mut fwd = vec![0.0; 2];
        let mut back = vec![0.0; 2];
        n.apply(&rows[0], &mut fwd);
        n.invert(&fwd, &mut back);
        assert!((back[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = toy_net(7);
        let b = toy_net(7);
        let c = toy_net(8);
        assert_eq!(a, b);
        assert_ne!(a.layers[0].weights, c.layers[0].weights);
        let bound = (3.0f64 / 3.0).sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= bound));
        assert!(a.layers[0].biases.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn flat_param_round_trip() {
        let a = toy_net(1);
        let mut b = toy_net(2);
        assert_ne!(a, b);
        b.set_params_flat(&a.params_flat());
        assert_eq!(a, b);
        assert_eq!(a.n_params(), 3 * 8 + 8 + 8 * 5 + 5 + 5 * 2 + 2);
    }

    #[test]
    fn single_linear_layer_is_exact() {
        let mut m = Mlp::init(
            &[2, 1],
            Normalizer::identity(2),
            Normalizer::identity(1),
            0,
        )
        .unwrap();
        m.layers[0].weights = vec![2.0, -1.0];
        m.layers[0].biases = vec![0.5];
        let y = m.predict(&[3.0, 4.0]);
        assert_eq!(y, vec![2.0 * 3.0 - 4.0 + 0.5]);
    }

    #[test]
    fn relu_gates_hidden_layers() {
        let mut m = Mlp::init(
            &[1, 1, 1],
            Normalizer::identity(1),
            Normalizer::identity(1),
            0,
        )
        .unwrap();
        m.layers[0].weights = vec![1.0];
        m.layers[0].biases = vec![0.0];
        m.layers[1].weights = vec![1.0];
        m.layers[1].biases = vec![0.0];
        assert_eq!(m.predict(&[2.0]), vec![2.0]);
        assert_eq!(m.predict(&[-2.0]), vec![0.0]);
    }

    #[test]
    fn output_normalizer_rescales_predictions() {
        let mut m = Mlp::init(
            &[1, 1],
            Normalizer::identity(1),
            Normalizer {
                shift: vec![10.0],
                scale: vec![2.0],
            },
            0,
        )
        .unwrap();
        m.layers[0].weights = vec![1.0];
        m.layers[0].biases = vec![0.0];
        assert_eq!(m.predict(&[3.0]), vec![3.0 * 2.0 + 10.0]);
    }

    #[test]
    fn l1_sign_at_zero_is_zero() {
        assert_eq!(l1_sign(0.0), 0.0);
        assert_eq!(l1_sign(1e-300), 1.0);
        assert_eq!(l1_sign(-1e-300), -1.0);
    }

    #[test]
    fn backprop_matches_central_differences() {
        let mlp = toy_net(42);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let xs: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let ys: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..2).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let res = gradient_check(&mlp, &xs, &ys, 1e-6);
        assert!(res.checked > res.skipped, "too many ties: {res:?}");
        assert!(res.max_rel_err < 1e-4, "gradient mismatch: {res:?}");
    }

    #[test]
    fn gradient_check_skips_manufactured_tie() {
        // Zero weights in the first layer put every hidden pre-activation
        // exactly on the ReLU boundary; perturbing any first-layer weight
        // crosses it, so those parameters must be skipped, not failed.
        let mut m = Mlp::init(
            &[1, 2, 1],
            Normalizer::identity(1),
            Normalizer::identity(1),
            3,
        )
        .unwrap();
        m.layers[0].weights = vec![0.0, 0.0];
        m.layers[0].biases = vec![0.0, 0.0];
        let res = gradient_check(&m, &[vec![1.0]], &[vec![5.0]], 1e-6);
        assert!(res.skipped >= 2, "{res:?}");
        assert!(res.max_rel_err < 1e-4, "{res:?}");
    }
}

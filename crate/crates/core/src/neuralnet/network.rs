use ndarray::{s, Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// `(σ'(z), σ''(z))` given `a = σ(z)`.
    fn derivatives_at(self, z: f64, a: f64) -> (f64, f64) {
        match self {
            Activation::Relu => (f64::from(u8::from(z > 0.0)), 0.0),
            Activation::Tanh => {
                let d = 1.0 - a * a;
                (d, -2.0 * a * d)
            }
        }
    }

    /// `(σ(z), σ'(z), σ''(z))`; the ReLU derivative at 0 is taken as 0.
    fn with_derivatives(self, z: f64) -> (f64, f64, f64) {
        match self {
            Activation::Relu => {
                let on = f64::from(u8::from(z > 0.0));
                (z * on, on, 0.0)
            }
            Activation::Tanh => {
                let a = z.tanh();
                let d = 1.0 - a * a;
                (a, d, -2.0 * a * d)
            }
        }
    }
}

/// Flat parameter vector: for each layer in order, the weight matrix
/// row-major (`out × in`) followed by the bias vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &ParamVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Affine map `ξ = (x - shift) * scale` applied before the first layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputMap {
    pub shift: f64,
    pub scale: f64,
}

impl InputMap {
    pub const IDENTITY: InputMap = InputMap {
        shift: 0.0,
        scale: 1.0,
    };

    /// Maps `[x_l, x_r]` onto `[-1, 1]`.
    pub fn unit_interval(x_l: f64, x_r: f64) -> Self {
        InputMap {
            shift: 0.5 * (x_l + x_r),
            scale: 2.0 / (x_r - x_l),
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.shift) * self.scale
    }
}

/// Fully connected network `R → R^K`: `Ψ¹ = W¹ξ + b¹`,
/// `Ψᵐ = Wᵐ σ(Ψᵐ⁻¹) + bᵐ`, with a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    layer_sizes: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    activation: Activation,
    input_map: InputMap,
}

/// Values and x-derivatives of the network output at a batch of points.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    /// `B × K` network outputs.
    pub values: Array2<f64>,
    /// `B × K` derivatives of the outputs with respect to x.
    pub slopes: Array2<f64>,
}

/// Sensitivities of a scalar loss with respect to a [`BatchOutput`].
#[derive(Debug, Clone, PartialEq)]
pub struct LossSeed {
    pub value: f64,
    pub d_values: Array2<f64>,
    pub d_slopes: Array2<f64>,
}

/// Forward intermediates kept for the reverse sweep.
struct Tape {
    inputs: Vec<f64>,
    /// Per hidden layer, pre-activations `z` stacked over their x-tangents
    /// `dz/dx` (`2B × width`).
    stacked: Vec<Array2<f64>>,
    /// The matching `[σ(z); σ'(z) ⊙ t]`.
    activated: Vec<Array2<f64>>,
}

impl MlpNetwork {
    /// Network with `hidden` layers of `width` units, zero biases and
    /// Glorot-uniform (Tanh) or He-uniform (ReLU) weights.
    pub fn new(
        hidden: usize,
        width: usize,
        outputs: usize,
        activation: Activation,
        seed: u64,
    ) -> Result<Self, NetError> {
        let mut sizes = vec![1];
        sizes.extend(std::iter::repeat_n(width, hidden));
        sizes.push(outputs);
        Self::with_layer_sizes(sizes, activation, seed)
    }

    pub fn with_layer_sizes(
        layer_sizes: Vec<usize>,
        activation: Activation,
        seed: u64,
    ) -> Result<Self, NetError> {
        if layer_sizes.len() < 2 || layer_sizes.iter().any(|&s| s == 0) || layer_sizes[0] != 1 {
            return Err(NetError::InvalidArchitecture(layer_sizes));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = match activation {
                Activation::Relu => (6.0 / fan_in as f64).sqrt(),
                Activation::Tanh => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            };
            weights.push(Array2::from_shape_fn((fan_out, fan_in), |_| {
                rng.gen_range(-bound..bound)
            }));
            biases.push(Array1::zeros(fan_out));
        }
        Ok(MlpNetwork {
            layer_sizes,
            weights,
            biases,
            activation,
            input_map: InputMap::IDENTITY,
        })
    }

    pub fn with_input_map(mut self, map: InputMap) -> Self {
        self.input_map = map;
        self
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_map(&self) -> InputMap {
        self.input_map
    }

    pub fn outputs(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|p| p[0] * p[1] + p[1])
            .sum()
    }

    pub fn params(&self) -> ParamVector {
        let mut flat = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            flat.extend(w.iter());
            flat.extend(b.iter());
        }
        ParamVector(flat)
    }

    pub fn set_params(&mut self, params: &ParamVector) -> Result<(), NetError> {
        if params.len() != self.param_count() {
            return Err(NetError::ParamLength {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut offset = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for slot in w.iter_mut() {
                *slot = params.0[offset];
                offset += 1;
            }
            for slot in b.iter_mut() {
                *slot = params.0[offset];
                offset += 1;
            }
        }
        Ok(())
    }

    pub fn with_params(&self, params: &ParamVector) -> Result<Self, NetError> {
        let mut net = self.clone();
        net.set_params(params)?;
        Ok(net)
    }

    pub fn forward(&self, x: f64) -> Vec<f64> {
        let mut act: Vec<f64> = self.weights[0]
            .column(0)
            .iter()
            .zip(self.biases[0].iter())
            .map(|(w, b)| w * self.input_map.apply(x) + b)
            .collect();
        for (w, b) in self.weights.iter().zip(&self.biases).skip(1) {
            let input: Array1<f64> = act.iter().map(|&z| self.activation.apply(z)).collect();
            act = (w.dot(&input) + b).to_vec();
        }
        act
    }

    /// Output and its derivative with respect to x.
    pub fn forward_with_x_derivative(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let out = self.forward_batch(&[x]);
        (out.values.row(0).to_vec(), out.slopes.row(0).to_vec())
    }

    pub fn forward_batch(&self, xs: &[f64]) -> BatchOutput {
        self.run_forward(xs).0
    }

    fn run_forward(&self, xs: &[f64]) -> (BatchOutput, Tape) {
        let batch = xs.len();
        let inputs: Vec<f64> = xs.iter().map(|&x| self.input_map.apply(x)).collect();
        let w0 = &self.weights[0];
        let b0 = &self.biases[0];
        // rows 0..B hold z, rows B..2B hold dz/dx
        let mut zt = Array2::from_shape_fn((2 * batch, w0.nrows()), |(i, j)| {
            if i < batch {
                w0[(j, 0)] * inputs[i] + b0[j]
            } else {
                w0[(j, 0)] * self.input_map.scale
            }
        });
        let mut stacked = Vec::with_capacity(self.weights.len() - 1);
        let mut activated = Vec::with_capacity(self.weights.len() - 1);
        for (w, b) in self.weights.iter().zip(&self.biases).skip(1) {
            let au = self.activate(&zt, batch);
            let mut next = au.dot(&w.t());
            next.slice_mut(s![..batch, ..]).zip_mut_with(&b.view().insert_axis(Axis(0)), |v, &bb| *v += bb);
            stacked.push(std::mem::replace(&mut zt, next));
            activated.push(au);
        }
        let values = zt.slice(s![..batch, ..]).to_owned();
        let slopes = zt.slice(s![batch.., ..]).to_owned();
        (
            BatchOutput { values, slopes },
            Tape {
                inputs,
                stacked,
                activated,
            },
        )
    }

    /// `[σ(z); σ'(z) ⊙ t]` from `[z; t]`.
    fn activate(&self, zt: &Array2<f64>, batch: usize) -> Array2<f64> {
        let mut au = zt.clone();
        let (mut top, mut bottom) = au.view_mut().split_at(Axis(0), batch);
        Zip::from(&mut top).and(&mut bottom).for_each(|a, u| {
            let (s, ds, _) = self.activation.with_derivatives(*a);
            *a = s;
            *u *= ds;
        });
        au
    }

    /// Scalar loss and its exact gradient with respect to every parameter.
    ///
    /// `loss` receives the outputs and x-derivatives at `xs` and returns the
    /// loss value together with its partial derivatives with respect to both.
    pub fn loss_gradient<F>(&self, xs: &[f64], loss: F) -> (f64, ParamVector)
    where
        F: FnOnce(&BatchOutput) -> LossSeed,
    {
        let (out, tape) = self.run_forward(xs);
        let seed = loss(&out);
        let grads = self.backward(&tape, seed.d_values, seed.d_slopes);
        (seed.value, grads)
    }

    fn backward(&self, tape: &Tape, g_z: Array2<f64>, g_t: Array2<f64>) -> ParamVector {
        let layers = self.weights.len();
        let batch = g_z.nrows();
        let mut g = ndarray::concatenate(Axis(0), &[g_z.view(), g_t.view()]).expect("matching seed shapes");
        let mut w_grads: Vec<Array2<f64>> = Vec::with_capacity(layers);
        let mut b_grads: Vec<Array1<f64>> = Vec::with_capacity(layers);
        for m in (1..layers).rev() {
            let zt = &tape.stacked[m - 1];
            let au = &tape.activated[m - 1];
            w_grads.push(g.t().dot(au));
            b_grads.push(g.slice(s![..batch, ..]).sum_axis(Axis(0)));
            // [g_a; g_u] -> [g_a σ' + g_u t σ''; g_u σ']
            let mut next = g.dot(&self.weights[m]);
            let (z, t) = zt.view().split_at(Axis(0), batch);
            let a = au.slice(s![..batch, ..]);
            let (mut ga, mut gu) = next.view_mut().split_at(Axis(0), batch);
            Zip::from(&mut ga)
                .and(&mut gu)
                .and(&z)
                .and(&t)
                .and(&a)
                .for_each(|ga, gu, &zv, &tv, &av| {
                    let (ds, dds) = self.activation.derivatives_at(zv, av);
                    *ga = *ga * ds + *gu * tv * dds;
                    *gu *= ds;
                });
            g = next;
        }
        let scale = self.input_map.scale;
        let width = self.weights[0].nrows();
        let mut w0 = Array2::zeros((width, 1));
        for (i, &xi) in tape.inputs.iter().enumerate() {
            for j in 0..width {
                w0[(j, 0)] += g[(i, j)] * xi + g[(batch + i, j)] * scale;
            }
        }
        w_grads.push(w0);
        b_grads.push(g.slice(s![..batch, ..]).sum_axis(Axis(0)));
        w_grads.reverse();
        b_grads.reverse();

        let mut flat = Vec::with_capacity(self.param_count());
        for (w, b) in w_grads.iter().zip(&b_grads) {
            flat.extend(w.iter());
            flat.extend(b.iter());
        }
        ParamVector(flat)
    }

    pub fn checkpoint(&self, seed: u64) -> Checkpoint {
        Checkpoint {
            layer_sizes: self.layer_sizes.clone(),
            activation: self.activation,
            seed,
            input_map: self.input_map,
            params: self.params().0,
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, NetError> {
        let mut net = Self::with_layer_sizes(ckpt.layer_sizes.clone(), ckpt.activation, ckpt.seed)?
            .with_input_map(ckpt.input_map);
        net.set_params(&ParamVector(ckpt.params.clone()))?;
        Ok(net)
    }
}

/// JSON parameter checkpoint with an architecture header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
    pub input_map: InputMap,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, NetError> {
        serde_json::from_str(text).map_err(|e| NetError::Checkpoint(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Independent scalar-loop evaluation of the recursion.
    fn oracle_forward(net: &MlpNetwork, x: f64) -> Vec<f64> {
        let xi = net.input_map().apply(x);
        let w = net.weights();
        let b = net.biases();
        let mut h: Vec<f64> = (0..w[0].nrows()).map(|j| w[0][(j, 0)] * xi + b[0][j]).collect();
        for m in 1..w.len() {
            let mut next = vec![0.0; w[m].nrows()];
            for (j, slot) in next.iter_mut().enumerate() {
                let mut acc = b[m][j];
                for (k, &hk) in h.iter().enumerate() {
                    let s = match net.activation() {
                        Activation::Relu => {
                            if hk > 0.0 {
                                hk
                            } else {
                                0.0
                            }
                        }
                        Activation::Tanh => hk.tanh(),
                    };
                    acc += w[m][(j, k)] * s;
                }
                *slot = acc;
            }
            h = next;
        }
        h
    }

    fn seeded_points(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(lo..hi)).collect()
    }

    #[test]
    fn zero_weights_give_final_bias() {
        let mut net = MlpNetwork::new(2, 5, 3, Activation::Tanh, 1).unwrap();
        let mut p = ParamVector::zeros(net.param_count());
        let n = p.len();
        p.0[n - 3..].copy_from_slice(&[1.0, -2.0, 0.5]);
        net.set_params(&p).unwrap();
        assert_eq!(net.forward(0.3), vec![1.0, -2.0, 0.5]);
        let (_, d) = net.forward_with_x_derivative(0.3);
        assert_eq!(d, vec![0.0; 3]);
    }

    #[test]
    fn relu_kills_negative_preactivation() {
        // 1 -> 2 -> 1, W1 = [1, -1]^T, W2 = [1, 1]
        let mut net = MlpNetwork::with_layer_sizes(vec![1, 2, 1], Activation::Relu, 0).unwrap();
        net.set_params(&ParamVector(vec![1.0, -1.0, 0.0, 0.0, 1.0, 1.0, 0.0]))
            .unwrap();
        assert_eq!(net.forward(2.0), vec![2.0]);
        assert_eq!(net.forward(-3.0), vec![3.0]);
        let (_, d) = net.forward_with_x_derivative(2.0);
        assert_eq!(d, vec![1.0]);
        let (_, d) = net.forward_with_x_derivative(-3.0);
        assert_eq!(d, vec![-1.0]);
    }

    #[test]
    fn forward_matches_loop_oracle() {
        for act in [Activation::Relu, Activation::Tanh] {
            let net = MlpNetwork::new(3, 7, 4, act, 42)
                .unwrap()
                .with_input_map(InputMap::unit_interval(0.0, 10.0));
            let xs = seeded_points(3, 50, 0.0, 10.0);
            let batch = net.forward_batch(&xs);
            for (i, &x) in xs.iter().enumerate() {
                let oracle = oracle_forward(&net, x);
                for k in 0..4 {
                    assert!((batch.values[(i, k)] - oracle[k]).abs() < 1e-12);
                    assert!((net.forward(x)[k] - oracle[k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn tanh_slope_matches_central_difference() {
        let net = MlpNetwork::new(3, 10, 2, Activation::Tanh, 7)
            .unwrap()
            .with_input_map(InputMap::unit_interval(0.0, 10.0));
        let h = 1e-6;
        for x in seeded_points(11, 100, 0.0, 10.0) {
            let (_, d) = net.forward_with_x_derivative(x);
            let plus = net.forward(x + h);
            let minus = net.forward(x - h);
            for k in 0..2 {
                let fd = (plus[k] - minus[k]) / (2.0 * h);
                let rel = (d[k] - fd).abs() / d[k].abs().max(1e-3);
                assert!(rel < 1e-5, "x={x} k={k} analytic={} fd={fd}", d[k]);
            }
        }
    }

    #[test]
    fn relu_slope_is_piecewise_constant_between_kinks() {
        let mut net = MlpNetwork::with_layer_sizes(vec![1, 6, 1], Activation::Relu, 5).unwrap();
        // zero biases put every kink at 0; spread them out
        let mut p = net.params();
        for j in 0..6 {
            p.0[6 + j] = 0.3 * (j as f64 - 2.5);
        }
        net.set_params(&p).unwrap();
        let mut kinks: Vec<f64> = (0..6).map(|j| -p.0[6 + j] / p.0[j]).collect();
        kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut edges = vec![-10.0];
        edges.extend(kinks.iter().copied());
        edges.push(10.0);
        for pair in edges.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if hi - lo < 1e-6 {
                continue;
            }
            let samples: Vec<f64> = (1..5).map(|k| lo + (hi - lo) * k as f64 / 5.0).collect();
            let slopes: Vec<f64> = samples
                .iter()
                .map(|&x| net.forward_with_x_derivative(x).1[0])
                .collect();
            for s in &slopes {
                assert!((s - slopes[0]).abs() < 1e-12);
            }
            let secant = (net.forward(samples[3])[0] - net.forward(samples[0])[0])
                / (samples[3] - samples[0]);
            assert!((secant - slopes[0]).abs() < 1e-9);
        }
    }

    fn sum_of_squares(out: &BatchOutput, c: f64) -> LossSeed {
        let value = c * (out.values.mapv(|v| v * v).sum() + out.slopes.mapv(|v| v * v).sum());
        LossSeed {
            value,
            d_values: out.values.mapv(|v| 2.0 * c * v),
            d_slopes: out.slopes.mapv(|v| 2.0 * c * v),
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let net = MlpNetwork::new(2, 6, 2, Activation::Tanh, 9)
            .unwrap()
            .with_input_map(InputMap::unit_interval(0.0, 4.0));
        let xs = seeded_points(2, 12, 0.0, 4.0);
        let (_, grad) = net.loss_gradient(&xs, |o| sum_of_squares(o, 0.5));
        let base = net.params();
        let h = 1e-6;
        for i in 0..base.len() {
            let mut plus = base.clone();
            plus.0[i] += h;
            let mut minus = base.clone();
            minus.0[i] -= h;
            let fp = net.with_params(&plus).unwrap().loss_gradient(&xs, |o| sum_of_squares(o, 0.5)).0;
            let fm = net.with_params(&minus).unwrap().loss_gradient(&xs, |o| sum_of_squares(o, 0.5)).0;
            let fd = (fp - fm) / (2.0 * h);
            if grad.0[i].abs() > 1e-8 {
                assert!((grad.0[i] - fd).abs() / grad.0[i].abs() < 1e-5, "param {i}");
            }
        }
    }

    #[test]
    fn gradient_is_linear_in_loss_scale() {
        let net = MlpNetwork::new(2, 5, 2, Activation::Relu, 4).unwrap();
        let xs = seeded_points(8, 10, -1.0, 1.0);
        let (_, g1) = net.loss_gradient(&xs, |o| sum_of_squares(o, 1.0));
        let (_, g3) = net.loss_gradient(&xs, |o| sum_of_squares(o, 3.0));
        for (a, b) in g1.0.iter().zip(&g3.0) {
            assert!((3.0 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let mut net = MlpNetwork::new(2, 5, 2, Activation::Tanh, 4).unwrap();
        net.set_params(&ParamVector::zeros(net.param_count())).unwrap();
        let (v, g) = net.loss_gradient(&[0.1, 0.2], |o| sum_of_squares(o, 1.0));
        assert_eq!(v, 0.0);
        assert!(g.0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = MlpNetwork::new(2, 4, 2, Activation::Relu, 3)
            .unwrap()
            .with_input_map(InputMap::unit_interval(0.0, 10.0));
        let json = net.checkpoint(3).to_json();
        let back = MlpNetwork::from_checkpoint(&Checkpoint::from_json(&json).unwrap()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn same_seed_same_initialization() {
        let a = MlpNetwork::new(5, 50, 2, Activation::Relu, 17).unwrap();
        let b = MlpNetwork::new(5, 50, 2, Activation::Relu, 17).unwrap();
        let c = MlpNetwork::new(5, 50, 2, Activation::Relu, 18).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn set_params_rejects_wrong_length() {
        let mut net = MlpNetwork::new(1, 3, 2, Activation::Relu, 0).unwrap();
        assert!(net.set_params(&ParamVector::zeros(3)).is_err());
    }

    proptest! {
        #[test]
        fn flatten_round_trip(values in prop::collection::vec(-10.0f64..10.0, 31)) {
            let mut net = MlpNetwork::with_layer_sizes(vec![1, 4, 3, 2], Activation::Tanh, 0).unwrap();
            prop_assert_eq!(net.param_count(), 31);
            let p = ParamVector(values);
            net.set_params(&p).unwrap();
            prop_assert_eq!(net.params(), p);
        }

        #[test]
        fn forward_is_continuous(x in -5.0f64..5.0, seed in 0u64..50) {
            let net = MlpNetwork::new(2, 8, 1, Activation::Relu, seed).unwrap();
            let a = net.forward(x)[0];
            let b = net.forward(x + 1e-9)[0];
            prop_assert!((a - b).abs() < 1e-6);
        }
    }
}

//! Minimal multi-layer perceptron with explicit backprop and Adam.
//!
//! Hidden layers are ReLU; the output head is linear (critics) or tanh
//! (bounded actors). Forward passes are pure; gradients accumulate in the net
//! until [`MlpNet::adam_step`] applies and clears them. The backward pass also
//! returns the gradient with respect to the input vector, which is how the
//! critic's action gradient reaches the actor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use thiserror::Error;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("topology mismatch between networks")]
    TopologyMismatch,
    #[error("bad parameter file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Linear,
    Tanh,
}

#[derive(Debug, Clone)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// Row-major, `outputs x inputs`.
    w: Vec<f64>,
    b: Vec<f64>,
    gw: Vec<f64>,
    gb: Vec<f64>,
    mw: Vec<f64>,
    vw: Vec<f64>,
    mb: Vec<f64>,
    vb: Vec<f64>,
}

impl Layer {
    fn new(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        // uniform fan-in scaling for weights and biases
        let bound = 1.0 / (inputs as f64).sqrt();
        let w = (0..inputs * outputs)
            .map(|_| bound * (2.0 * rng.gen::<f64>() - 1.0))
            .collect();
        let b = (0..outputs)
            .map(|_| bound * (2.0 * rng.gen::<f64>() - 1.0))
            .collect();
        Self {
            inputs,
            outputs,
            w,
            b,
            gw: vec![0.0; inputs * outputs],
            gb: vec![0.0; outputs],
            mw: vec![0.0; inputs * outputs],
            vw: vec![0.0; inputs * outputs],
            mb: vec![0.0; outputs],
            vb: vec![0.0; outputs],
        }
    }
}

/// Activations recorded by [`MlpNet::forward_trace`]; required by the
/// backward pass. `activations[0]` is the input, `activations[l + 1]` the
/// post-activation output of layer `l`.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace holds the output")
    }
}

/// Feed-forward network: `sizes[0]` inputs through ReLU hidden layers to
/// `sizes[last]` outputs under the chosen head activation.
#[derive(Debug, Clone)]
pub struct MlpNet {
    sizes: Vec<usize>,
    head: OutputActivation,
    layers: Vec<Layer>,
    adam_steps: u64,
}

impl MlpNet {
    pub fn new(sizes: &[usize], head: OutputActivation, seed: u64) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        assert!(sizes.iter().all(|&s| s > 0), "layer sizes must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .map(|pair| Layer::new(pair[0], pair[1], &mut rng))
            .collect();
        Self {
            sizes: sizes.to_vec(),
            head,
            layers,
            adam_steps: 0,
        }
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn head(&self) -> OutputActivation {
        self.head
    }

    /// Scales the final layer's weights and biases, e.g. to start an actor
    /// near zero output.
    pub fn scale_output_layer(&mut self, factor: f64) {
        let last = self.layers.last_mut().unwrap();
        for w in &mut last.w {
            *w *= factor;
        }
        for b in &mut last.b {
            *b *= factor;
        }
    }

    /// Pure forward pass.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(
            input.len(),
            self.input_dim(),
            "input length does not match the network's input size"
        );
        let mut a = input.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            a = self.affine(layer, &a, l == last);
        }
        a
    }

    /// Forward pass that records activations for a later backward pass.
    pub fn forward_trace(&self, input: &[f64]) -> (Vec<f64>, ForwardTrace) {
        assert_eq!(
            input.len(),
            self.input_dim(),
            "input length does not match the network's input size"
        );
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let a = self.affine(layer, activations.last().unwrap(), l == last);
            activations.push(a);
        }
        let out = activations.last().unwrap().clone();
        (out, ForwardTrace { activations })
    }

    fn affine(&self, layer: &Layer, input: &[f64], is_head: bool) -> Vec<f64> {
        let mut out = Vec::with_capacity(layer.outputs);
        for j in 0..layer.outputs {
            let row = &layer.w[j * layer.inputs..(j + 1) * layer.inputs];
            let mut z = layer.b[j];
            for (w, x) in row.iter().zip(input) {
                z += w * x;
            }
            out.push(if is_head {
                match self.head {
                    OutputActivation::Linear => z,
                    OutputActivation::Tanh => z.tanh(),
                }
            } else {
                z.max(0.0)
            });
        }
        out
    }

    /// Backpropagates `upstream` (gradient of the loss w.r.t. the net output),
    /// accumulating parameter gradients, and returns the gradient w.r.t. the
    /// input vector.
    pub fn backward(&mut self, trace: &ForwardTrace, upstream: &[f64]) -> Vec<f64> {
        let mut delta = self.head_delta(trace, upstream);
        for l in (0..self.layers.len()).rev() {
            let (a_prev, layer) = (&trace.activations[l], &mut self.layers[l]);
            for (j, &d) in delta.iter().enumerate() {
                layer.gb[j] += d;
                let grow = &mut layer.gw[j * layer.inputs..(j + 1) * layer.inputs];
                for (g, &a) in grow.iter_mut().zip(a_prev) {
                    *g += d * a;
                }
            }
            delta = Self::propagate(layer, &delta, a_prev, l > 0);
        }
        delta
    }

    /// Gradient w.r.t. the input only; parameter accumulators are untouched.
    pub fn input_gradient(&self, trace: &ForwardTrace, upstream: &[f64]) -> Vec<f64> {
        let mut delta = self.head_delta(trace, upstream);
        for l in (0..self.layers.len()).rev() {
            delta = Self::propagate(&self.layers[l], &delta, &trace.activations[l], l > 0);
        }
        delta
    }

    fn head_delta(&self, trace: &ForwardTrace, upstream: &[f64]) -> Vec<f64> {
        assert_eq!(
            trace.activations.len(),
            self.layers.len() + 1,
            "trace does not match this network"
        );
        assert_eq!(
            upstream.len(),
            self.output_dim(),
            "upstream length mismatch"
        );
        let out = trace.output();
        match self.head {
            OutputActivation::Linear => upstream.to_vec(),
            OutputActivation::Tanh => upstream
                .iter()
                .zip(out)
                .map(|(g, a)| g * (1.0 - a * a))
                .collect(),
        }
    }

    fn propagate(layer: &Layer, delta: &[f64], a_prev: &[f64], relu_mask: bool) -> Vec<f64> {
        let mut prev = vec![0.0; layer.inputs];
        for (j, &d) in delta.iter().enumerate() {
            if d != 0.0 {
                let row = &layer.w[j * layer.inputs..(j + 1) * layer.inputs];
                for (p, &w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
        }
        if relu_mask {
            // a_prev > 0 iff the pre-activation was positive
            for (p, &a) in prev.iter_mut().zip(a_prev) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
        }
        prev
    }

    pub fn zero_grads(&mut self) {
        for layer in &mut self.layers {
            layer.gw.fill(0.0);
            layer.gb.fill(0.0);
        }
    }

    /// Standard Adam update with bias correction; clears gradients afterwards.
    pub fn adam_step(&mut self, lr: f64, beta1: f64, beta2: f64, eps: f64) {
        self.adam_steps += 1;
        let bc1 = 1.0 - beta1.powi(self.adam_steps as i32);
        let bc2 = 1.0 - beta2.powi(self.adam_steps as i32);
        for layer in &mut self.layers {
            adam_update(
                &mut layer.w,
                &mut layer.gw,
                &mut layer.mw,
                &mut layer.vw,
                lr,
                beta1,
                beta2,
                eps,
                bc1,
                bc2,
            );
            adam_update(
                &mut layer.b,
                &mut layer.gb,
                &mut layer.mb,
                &mut layer.vb,
                lr,
                beta1,
                beta2,
                eps,
                bc1,
                bc2,
            );
        }
    }

    /// Moves every parameter toward `source`: `p = tau * source + (1 - tau) * p`.
    pub fn soft_update_from(&mut self, source: &MlpNet, tau: f64) -> Result<(), NetError> {
        if self.sizes != source.sizes || self.head != source.head {
            return Err(NetError::TopologyMismatch);
        }
        for (t, s) in self.layers.iter_mut().zip(&source.layers) {
            for (tp, sp) in t.w.iter_mut().zip(&s.w) {
                *tp = tau * sp + (1.0 - tau) * *tp;
            }
            for (tp, sp) in t.b.iter_mut().zip(&s.b) {
                *tp = tau * sp + (1.0 - tau) * *tp;
            }
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Flat parameter access, layer by layer, weights before biases. Handy for
    /// gradient checks and update-law tests.
    pub fn param(&self, index: usize) -> f64 {
        *self.locate(index).0
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        *self.locate_mut(index) = value;
    }

    /// Accumulated gradient for the parameter at `index`.
    pub fn grad(&self, index: usize) -> f64 {
        *self.locate(index).1
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.w);
            out.extend_from_slice(&layer.b);
        }
        out
    }

    pub fn params_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(&l.b).all(|p| p.is_finite()))
    }

    fn locate(&self, mut index: usize) -> (&f64, &f64) {
        for layer in &self.layers {
            if index < layer.w.len() {
                return (&layer.w[index], &layer.gw[index]);
            }
            index -= layer.w.len();
            if index < layer.b.len() {
                return (&layer.b[index], &layer.gb[index]);
            }
            index -= layer.b.len();
        }
        panic!("parameter index out of range");
    }

    fn locate_mut(&mut self, mut index: usize) -> &mut f64 {
        for layer in &mut self.layers {
            if index < layer.w.len() {
                return &mut layer.w[index];
            }
            index -= layer.w.len();
            if index < layer.b.len() {
                return &mut layer.b[index];
            }
            index -= layer.b.len();
        }
        panic!("parameter index out of range");
    }

    // ------------------------------------------------------------------
    // parameter persistence: magic, head tag, layer-shape header, raw f64s
    // ------------------------------------------------------------------

    const MAGIC: &'static [u8; 4] = b"MLPB";
    const FORMAT_VERSION: u8 = 1;

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), NetError> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&[Self::FORMAT_VERSION])?;
        w.write_all(&[match self.head {
            OutputActivation::Linear => 0u8,
            OutputActivation::Tanh => 1u8,
        }])?;
        w.write_all(&(self.sizes.len() as u32).to_le_bytes())?;
        for &s in &self.sizes {
            w.write_all(&(s as u32).to_le_bytes())?;
        }
        for layer in &self.layers {
            for v in layer.w.iter().chain(&layer.b) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, NetError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(NetError::Format("bad magic bytes".into()));
        }
        let mut meta = [0u8; 2];
        r.read_exact(&mut meta)?;
        if meta[0] != Self::FORMAT_VERSION {
            return Err(NetError::Format(format!("unsupported version {}", meta[0])));
        }
        let head = match meta[1] {
            0 => OutputActivation::Linear,
            1 => OutputActivation::Tanh,
            t => return Err(NetError::Format(format!("unknown head tag {t}"))),
        };
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let n = u32::from_le_bytes(u32buf) as usize;
        if !(2..=64).contains(&n) {
            return Err(NetError::Format(format!("implausible layer count {n}")));
        }
        let mut sizes = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut u32buf)?;
            let s = u32::from_le_bytes(u32buf) as usize;
            if s == 0 {
                return Err(NetError::Format("zero layer size".into()));
            }
            sizes.push(s);
        }
        let mut net = MlpNet::new(&sizes, head, 0);
        let mut f64buf = [0u8; 8];
        for layer in &mut net.layers {
            for v in layer.w.iter_mut().chain(layer.b.iter_mut()) {
                r.read_exact(&mut f64buf)?;
                *v = f64::from_le_bytes(f64buf);
            }
        }
        net.adam_steps = 0;
        Ok(net)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NetError> {
        let mut cursor = std::io::Cursor::new(bytes);
        let net = Self::read_from(&mut cursor)?;
        if cursor.position() != bytes.len() as u64 {
            return Err(NetError::Format("trailing bytes".into()));
        }
        Ok(net)
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_update(
    params: &mut [f64],
    grads: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        grads[i] = 0.0;
    }
}

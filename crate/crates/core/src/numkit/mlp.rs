use std::fmt;

use super::{axpy, tanh, tanh_in_place, RealMat, Rng};
use crate::error::{check_dim, Error, Result};

/// Fully connected network shape: tanh hidden layers, identity output.
///
/// Flat parameter packing is layer by layer; within a layer the weight
/// matrix comes first (row-major, one row per output unit, `fan_out × fan_in`)
/// followed by the `fan_out` biases.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MlpSpec {
    input_dim: usize,
    hidden_dims: Vec<usize>,
    output_dim: usize,
}

#[derive(Debug, Clone, Copy)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    offset: usize,
}

impl Layer {
    fn weights<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset..self.offset + self.fan_in * self.fan_out]
    }

    fn bias<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        let start = self.offset + self.fan_in * self.fan_out;
        &params[start..start + self.fan_out]
    }

    fn len(&self) -> usize {
        (self.fan_in + 1) * self.fan_out
    }
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, output_dim: usize) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 || hidden_dims.iter().any(|&h| h == 0) {
            return Err(Error::Config(format!(
                "network dimensions must be positive: {input_dim} {hidden_dims:?} {output_dim}"
            )));
        }
        Ok(Self {
            input_dim,
            hidden_dims,
            output_dim,
        })
    }

    /// Two tanh hidden layers of width 32.
    pub fn default_policy(input_dim: usize, output_dim: usize) -> Self {
        Self::new(input_dim, vec![32, 32], output_dim).expect("positive dims")
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn hidden_dims(&self) -> &[usize] {
        &self.hidden_dims
    }

    fn layers(&self) -> Vec<Layer> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(self.output_dim);
        let mut offset = 0;
        dims.windows(2)
            .map(|w| {
                let layer = Layer {
                    fan_in: w[0],
                    fan_out: w[1],
                    offset,
                };
                offset += layer.len();
                layer
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(Layer::len).sum()
    }

    /// Glorot-uniform weights in `±√(6/(fan_in+fan_out))`, zero biases.
    pub fn init_params(&self, rng: &mut Rng) -> Vec<f64> {
        let mut params = vec![0.0; self.param_count()];
        for layer in self.layers() {
            let limit = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            let n = layer.fan_in * layer.fan_out;
            for w in &mut params[layer.offset..layer.offset + n] {
                *w = rng.uniform_range(-limit, limit);
            }
        }
        params
    }

    pub(crate) fn check_params(&self, params: &[f64]) -> Result<()> {
        check_dim("mlp parameters", self.param_count(), params.len())
    }
}

impl fmt::Display for MlpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.input_dim)?;
        for h in &self.hidden_dims {
            write!(f, "-{h}")?;
        }
        write!(f, "-{}", self.output_dim)
    }
}

/// Reusable activation storage for repeated forward/backward passes.
#[derive(Debug, Clone)]
pub struct MlpTape {
    spec: MlpSpec,
    layers: Vec<Layer>,
    param_count: usize,
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl MlpTape {
    pub fn new(spec: &MlpSpec) -> Self {
        let layers = spec.layers();
        let mut acts = vec![vec![0.0; spec.input_dim]];
        acts.extend(layers.iter().map(|l| vec![0.0; l.fan_out]));
        let widest = layers.iter().map(|l| l.fan_in.max(l.fan_out)).max().unwrap_or(1);
        Self {
            spec: spec.clone(),
            param_count: layers.iter().map(Layer::len).sum(),
            layers,
            acts,
            delta: vec![0.0; widest],
            delta_prev: vec![0.0; widest],
        }
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    /// Forward pass; activations stay on the tape for a following [`MlpTape::backward`].
    pub fn forward(&mut self, params: &[f64], input: &[f64]) -> Result<&[f64]> {
        check_dim("mlp parameters", self.param_count, params.len())?;
        check_dim("mlp input", self.spec.input_dim, input.len())?;
        self.acts[0].copy_from_slice(input);
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let (before, after) = self.acts.split_at_mut(k + 1);
            let x = &before[k];
            let y = &mut after[0];
            let w = layer.weights(params);
            let b = layer.bias(params);
            for o in 0..layer.fan_out {
                // same summation order as MlpBatch, so both give bit-identical outputs
                let mut z = b[o];
                for (wi, xi) in w[o * layer.fan_in..(o + 1) * layer.fan_in].iter().zip(x.iter()) {
                    z += wi * xi;
                }
                y[o] = if k == last { z } else { tanh(z) };
            }
        }
        Ok(&self.acts[self.layers.len()])
    }

    pub fn output(&self) -> &[f64] {
        &self.acts[self.layers.len()]
    }

    /// Adds `scale · cotangentᵀ ∂output/∂params` into `grad`, using the
    /// activations of the most recent forward pass.
    pub fn backward(
        &mut self,
        params: &[f64],
        cotangent: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) -> Result<()> {
        check_dim("mlp parameters", self.param_count, params.len())?;
        check_dim("mlp gradient buffer", params.len(), grad.len())?;
        check_dim("mlp cotangent", self.spec.output_dim, cotangent.len())?;
        let n = cotangent.len();
        for (d, c) in self.delta[..n].iter_mut().zip(cotangent) {
            *d = scale * c;
        }
        for k in (0..self.layers.len()).rev() {
            let layer = self.layers[k];
            let x = &self.acts[k];
            let delta = &self.delta[..layer.fan_out];
            let w_start = layer.offset;
            let b_start = layer.offset + layer.fan_in * layer.fan_out;
            for o in 0..layer.fan_out {
                let row = &mut grad[w_start + o * layer.fan_in..w_start + (o + 1) * layer.fan_in];
                axpy(delta[o], x, row);
                grad[b_start + o] += delta[o];
            }
            if k == 0 {
                break;
            }
            let w = layer.weights(params);
            let prev = &mut self.delta_prev[..layer.fan_in];
            prev.iter_mut().for_each(|p| *p = 0.0);
            for o in 0..layer.fan_out {
                axpy(delta[o], &w[o * layer.fan_in..(o + 1) * layer.fan_in], prev);
            }
            // previous layer is tanh: d tanh = 1 - a²
            for (p, a) in prev.iter_mut().zip(x) {
                *p *= 1.0 - a * a;
            }
            std::mem::swap(&mut self.delta, &mut self.delta_prev);
        }
        Ok(())
    }
}

/// Samples per register block; activations are padded to a multiple.
const LANES: usize = 8;
/// Output units per register block.
const UNITS: usize = 4;

/// Activation storage for a whole batch of inputs (e.g. every state of a
/// trajectory). Activations are kept feature-major, `[unit][sample]`, with
/// the sample axis padded to a multiple of 8 so the kernels below work on
/// fixed-size register blocks.
#[derive(Debug, Clone)]
pub struct MlpBatch {
    spec: MlpSpec,
    layers: Vec<Layer>,
    param_count: usize,
    len: usize,
    stride: usize,
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl MlpBatch {
    pub fn new(spec: &MlpSpec) -> Self {
        let layers = spec.layers();
        Self {
            spec: spec.clone(),
            param_count: layers.iter().map(Layer::len).sum(),
            acts: vec![Vec::new(); layers.len() + 1],
            layers,
            len: 0,
            stride: 0,
            delta: Vec::new(),
            delta_prev: Vec::new(),
        }
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    /// Number of samples in the most recent forward pass.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Forward pass over the rows of `inputs`.
    pub fn forward(&mut self, params: &[f64], inputs: &RealMat) -> Result<()> {
        check_dim("mlp parameters", self.param_count, params.len())?;
        check_dim("mlp input", self.spec.input_dim, inputs.cols())?;
        let n = inputs.rows();
        let np = n.div_ceil(LANES) * LANES;
        self.len = n;
        self.stride = np;
        let x0 = &mut self.acts[0];
        x0.clear();
        x0.resize(self.spec.input_dim * np, 0.0);
        for (t, row) in inputs.iter_rows().enumerate() {
            for (i, v) in row.iter().enumerate() {
                x0[i * np + t] = *v;
            }
        }
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let (before, after) = self.acts.split_at_mut(k + 1);
            let y = &mut after[0];
            y.resize(layer.fan_out * np, 0.0);
            affine(layer.weights(params), layer.bias(params), layer.fan_in, &before[k], y, np);
            if k != last {
                tanh_in_place(y);
            }
        }
        Ok(())
    }

    /// Output unit `d` for every sample of the last forward pass.
    pub fn output(&self, d: usize) -> &[f64] {
        let start = d * self.stride;
        &self.acts[self.layers.len()][start..start + self.len]
    }

    /// Adds `Σ_t cotangent_tᵀ ∂output_t/∂params` into `grad`. `cotangent` is
    /// output-major like [`MlpBatch::output`]: `cotangent[d * len + t]`.
    pub fn backward(&mut self, params: &[f64], cotangent: &[f64], grad: &mut [f64]) -> Result<()> {
        check_dim("mlp parameters", self.param_count, params.len())?;
        check_dim("mlp gradient buffer", params.len(), grad.len())?;
        let (n, np) = (self.len, self.stride);
        check_dim("mlp cotangent", self.spec.output_dim * n, cotangent.len())?;
        self.delta.clear();
        self.delta.resize(self.spec.output_dim * np, 0.0);
        for (d, row) in cotangent.chunks_exact(n.max(1)).enumerate().take(self.spec.output_dim) {
            self.delta[d * np..d * np + n].copy_from_slice(&row[..n]);
        }
        for k in (0..self.layers.len()).rev() {
            let layer = self.layers[k];
            let x = &self.acts[k];
            let (w_grad, b_grad) = grad[layer.offset..layer.offset + layer.len()].split_at_mut(layer.fan_in * layer.fan_out);
            outer_accumulate(&self.delta, x, layer.fan_out, layer.fan_in, np, w_grad);
            for (o, g) in b_grad.iter_mut().enumerate() {
                *g += self.delta[o * np..(o + 1) * np].iter().sum::<f64>();
            }
            if k == 0 {
                break;
            }
            self.delta_prev.clear();
            self.delta_prev.resize(layer.fan_in * np, 0.0);
            transpose_apply(layer.weights(params), layer.fan_in, layer.fan_out, &self.delta, &mut self.delta_prev, np);
            // previous layer is tanh: d tanh = 1 - a²
            for (p, a) in self.delta_prev.iter_mut().zip(x) {
                *p *= 1.0 - a * a;
            }
            std::mem::swap(&mut self.delta, &mut self.delta_prev);
        }
        Ok(())
    }
}

/// `y[o][t] = b[o] + Σ_i w[o][i] x[i][t]`, summed bias first and then in
/// input order, exactly like the per-sample tape.
fn affine(w: &[f64], b: &[f64], fan_in: usize, x: &[f64], y: &mut [f64], np: usize) {
    let fan_out = b.len();
    let mut o = 0;
    while o + UNITS <= fan_out {
        for t in (0..np).step_by(LANES) {
            let mut acc = [[0.0; LANES]; UNITS];
            for (u, a) in acc.iter_mut().enumerate() {
                *a = [b[o + u]; LANES];
            }
            for i in 0..fan_in {
                let xv: &[f64; LANES] = x[i * np + t..i * np + t + LANES].try_into().expect("lane block");
                for (u, a) in acc.iter_mut().enumerate() {
                    let wi = w[(o + u) * fan_in + i];
                    for l in 0..LANES {
                        a[l] += wi * xv[l];
                    }
                }
            }
            for (u, a) in acc.iter().enumerate() {
                y[(o + u) * np + t..(o + u) * np + t + LANES].copy_from_slice(a);
            }
        }
        o += UNITS;
    }
    for o in o..fan_out {
        let z = &mut y[o * np..(o + 1) * np];
        z.fill(b[o]);
        for i in 0..fan_in {
            axpy(w[o * fan_in + i], &x[i * np..(i + 1) * np], z);
        }
    }
}

/// `out[i][t] = Σ_o w[o][i] d[o][t]`.
fn transpose_apply(w: &[f64], fan_in: usize, fan_out: usize, d: &[f64], out: &mut [f64], np: usize) {
    let mut i = 0;
    while i + UNITS <= fan_in {
        for t in (0..np).step_by(LANES) {
            let mut acc = [[0.0; LANES]; UNITS];
            for o in 0..fan_out {
                let dv: &[f64; LANES] = d[o * np + t..o * np + t + LANES].try_into().expect("lane block");
                for (u, a) in acc.iter_mut().enumerate() {
                    let wi = w[o * fan_in + i + u];
                    for l in 0..LANES {
                        a[l] += wi * dv[l];
                    }
                }
            }
            for (u, a) in acc.iter().enumerate() {
                out[(i + u) * np + t..(i + u) * np + t + LANES].copy_from_slice(a);
            }
        }
        i += UNITS;
    }
    for i in i..fan_in {
        let z = &mut out[i * np..(i + 1) * np];
        for o in 0..fan_out {
            axpy(w[o * fan_in + i], &d[o * np..(o + 1) * np], z);
        }
    }
}

/// `g[o][i] += Σ_t d[o][t] x[i][t]`, in 4×4 blocks of dot products.
fn outer_accumulate(d: &[f64], x: &[f64], fan_out: usize, fan_in: usize, np: usize, g: &mut [f64]) {
    let full_o = fan_out / UNITS * UNITS;
    let full_i = fan_in / UNITS * UNITS;
    for o in (0..full_o).step_by(UNITS) {
        for i in (0..full_i).step_by(UNITS) {
            let mut acc = [[[0.0; LANES]; UNITS]; UNITS];
            for t in (0..np).step_by(LANES) {
                let xs: [&[f64; LANES]; UNITS] =
                    std::array::from_fn(|v| x[(i + v) * np + t..(i + v) * np + t + LANES].try_into().expect("lane block"));
                for (u, row) in acc.iter_mut().enumerate() {
                    let dv: &[f64; LANES] = d[(o + u) * np + t..(o + u) * np + t + LANES].try_into().expect("lane block");
                    for (v, a) in row.iter_mut().enumerate() {
                        for l in 0..LANES {
                            a[l] += dv[l] * xs[v][l];
                        }
                    }
                }
            }
            for (u, row) in acc.iter().enumerate() {
                for (v, a) in row.iter().enumerate() {
                    g[(o + u) * fan_in + i + v] += a.iter().sum::<f64>();
                }
            }
        }
    }
    for o in 0..fan_out {
        let i_start = if o < full_o { full_i } else { 0 };
        for i in i_start..fan_in {
            g[o * fan_in + i] += dot4(&d[o * np..(o + 1) * np], &x[i * np..(i + 1) * np]);
        }
    }
}

/// Dot product with four interleaved partial sums, which the compiler can
/// keep in vector registers.
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for j in 0..4 {
            acc[j] += x[j] * y[j];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn mlp_forward(spec: &MlpSpec, params: &[f64], input: &[f64]) -> Result<Vec<f64>> {
    let mut tape = MlpTape::new(spec);
    Ok(tape.forward(params, input)?.to_vec())
}

/// `cotangentᵀ · ∂mlp_forward/∂params`.
pub fn mlp_vjp(spec: &MlpSpec, params: &[f64], input: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
    let mut tape = MlpTape::new(spec);
    tape.forward(params, input)?;
    let mut grad = vec![0.0; params.len()];
    tape.backward(params, cotangent, 1.0, &mut grad)?;
    Ok(grad)
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{matmul_into, Matrix};
use crate::scalar::Scalar;

pub const HIDDEN_LAYERS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Self::Relu => "relu",
            Self::Sigmoid => "sigmoid",
        }
    }

    #[inline]
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Self::Relu => x.max(T::zero()),
            Self::Sigmoid => T::one() / (T::one() + (-x).exp()),
        }
    }
}

/// Layer widths `(input, L₁, L₂, L₃, L₄, S)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    widths: Vec<usize>,
}

impl MlpArchitecture {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if widths.len() != HIDDEN_LAYERS + 2 {
            return Err(invalid(
                "layer_widths",
                format!("expected {} widths (input, 4 hidden, output), got {}", HIDDEN_LAYERS + 2, widths.len()),
            ));
        }
        if widths.contains(&0) {
            return Err(invalid("layer_widths", "every layer needs at least one unit"));
        }
        if widths[widths.len() - 1] > 64 {
            return Err(invalid("layer_widths", "at most 64 output bits"));
        }
        Ok(Self { widths })
    }

    /// 4 → 128 → 64 → 32 → 16 → 4.
    pub fn gosm() -> Self {
        Self {
            widths: vec![4, 128, 64, 32, 16, 4],
        }
    }

    /// 4 → 64 → 64 → 64 → 64 → 6.
    pub fn gosmp() -> Self {
        Self {
            widths: vec![4, 64, 64, 64, 64, 6],
        }
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }

    pub fn layer_count(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layer_count() {
            Activation::Sigmoid
        } else {
            Activation::Relu
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Weights `W_k` (`out × in`) and biases `b_k` of every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<T> {
    arch: MlpArchitecture,
    weights: Vec<Matrix<T>>,
    biases: Vec<Vec<T>>,
}

impl<T: Scalar> MlpParams<T> {
    pub fn zeros(arch: &MlpArchitecture) -> Self {
        let w = arch.widths();
        Self {
            arch: arch.clone(),
            weights: w.windows(2).map(|p| Matrix::zeros(p[1], p[0])).collect(),
            biases: w[1..].iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    /// Uniform on `±√(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(arch: &MlpArchitecture, rng: &mut R) -> Self {
        let mut p = Self::zeros(arch);
        for w in &mut p.weights {
            let limit = (6.0 / (w.rows() + w.cols()) as f64).sqrt();
            for v in w.as_mut_slice() {
                *v = T::of(rng.random_range(-limit..limit));
            }
        }
        p
    }

    pub fn from_parts(arch: MlpArchitecture, weights: Vec<Matrix<T>>, biases: Vec<Vec<T>>) -> Result<Self> {
        let w = arch.widths();
        if weights.len() != arch.layer_count() || biases.len() != arch.layer_count() {
            return Err(Error::DimensionMismatch {
                context: "layer count",
                expected: arch.layer_count(),
                actual: weights.len().min(biases.len()),
            });
        }
        for k in 0..arch.layer_count() {
            if weights[k].shape() != (w[k + 1], w[k]) {
                return Err(Error::DimensionMismatch {
                    context: "weight matrix",
                    expected: w[k + 1] * w[k],
                    actual: weights[k].rows() * weights[k].cols(),
                });
            }
            if biases[k].len() != w[k + 1] {
                return Err(Error::DimensionMismatch {
                    context: "bias vector",
                    expected: w[k + 1],
                    actual: biases[k].len(),
                });
            }
        }
        let p = Self { arch, weights, biases };
        if p.tensors().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("parameters", "all weights and biases must be finite"));
        }
        Ok(p)
    }

    pub fn architecture(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn weights(&self) -> &[Matrix<T>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<T>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix<T>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.biases
    }

    /// Every parameter tensor as a flat slice: `W₁, b₁, W₂, b₂, …`.
    pub fn tensors(&self) -> impl Iterator<Item = &[T]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [T]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
    }

    /// Fuzzy outputs for a batch (`batch × input_width`), without the cache.
    pub fn predict(&self, input: &Matrix<T>) -> Result<Matrix<T>> {
        let (out, _) = forward(self, input)?;
        Ok(out)
    }

    pub fn cast<U: Scalar>(&self) -> MlpParams<U> {
        MlpParams {
            arch: self.arch.clone(),
            weights: self.weights.iter().map(Matrix::cast).collect(),
            biases: self.biases.iter().map(|b| b.iter().map(|&v| U::of(v.as_f64())).collect()).collect(),
        }
    }
}

/// Layer outputs `z₁ … z₆` of one forward pass, one row per sample.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    activations: Vec<Matrix<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn activations(&self) -> &[Matrix<T>] {
        &self.activations
    }

    pub fn output(&self) -> &Matrix<T> {
        self.activations.last().expect("cache holds at least the input")
    }
}

/// `z_{k+1} = act(W_k z_k + b_k)` for every row of `input`.
pub fn forward<T: Scalar>(params: &MlpParams<T>, input: &Matrix<T>) -> Result<(Matrix<T>, ForwardCache<T>)> {
    let arch = &params.arch;
    if input.cols() != arch.input_width() {
        return Err(Error::DimensionMismatch {
            context: "network input",
            expected: arch.input_width(),
            actual: input.cols(),
        });
    }
    let batch = input.rows();
    let mut activations = Vec::with_capacity(arch.layer_count() + 1);
    activations.push(input.clone());
    for k in 0..arch.layer_count() {
        let w = &params.weights[k];
        let mut z = Matrix::zeros(batch, w.rows());
        matmul_into(&activations[k], &w.transpose(), &mut z);
        let act = arch.activation(k);
        let b = &params.biases[k];
        for r in 0..batch {
            for (v, &bias) in z.row_mut(r).iter_mut().zip(b) {
                *v = act.apply(*v + bias);
            }
        }
        activations.push(z);
    }
    let out = activations.last().expect("at least one layer").clone();
    if out.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            epoch: 0,
            what: "network output",
        });
    }
    Ok((out, ForwardCache { activations }))
}

/// `(1/S)·Σ_q (ẑ_q − b_q)²`, averaged over the batch.
pub fn mse_loss<T: Scalar>(output: &Matrix<T>, targets: &Matrix<T>) -> Result<T> {
    if output.shape() != targets.shape() {
        return Err(Error::DimensionMismatch {
            context: "loss targets",
            expected: output.rows() * output.cols(),
            actual: targets.rows() * targets.cols(),
        });
    }
    let n = output.as_slice().len();
    if n == 0 {
        return Ok(T::zero());
    }
    let sum = output
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .map(|(&z, &t)| (z - t) * (z - t))
        .sum::<T>();
    Ok(sum / T::of(n as f64))
}

/// Gradient of the batch-mean MSE with respect to every weight and bias.
pub fn backward<T: Scalar>(
    params: &MlpParams<T>,
    cache: &ForwardCache<T>,
    targets: &Matrix<T>,
) -> Result<MlpParams<T>> {
    let arch = &params.arch;
    let z = &cache.activations;
    let out = cache.output();
    if out.shape() != targets.shape() {
        return Err(Error::DimensionMismatch {
            context: "backward targets",
            expected: out.rows() * out.cols(),
            actual: targets.rows() * targets.cols(),
        });
    }
    let scale = T::of(2.0 / (out.rows() * out.cols()) as f64);
    // δ at the output pre-activation: dL/dz · σ'(a) with σ' = z(1 − z)
    let mut delta = Matrix::from_fn(out.rows(), out.cols(), |r, c| {
        let zo = out[(r, c)];
        scale * (zo - targets[(r, c)]) * zo * (T::one() - zo)
    });

    let mut grads = MlpParams::zeros(arch);
    for k in (0..arch.layer_count()).rev() {
        let delta_t = delta.transpose();
        matmul_into(&delta_t, &z[k], &mut grads.weights[k]);
        for (gb, col) in grads.biases[k].iter_mut().zip(delta_t.row_iter()) {
            *gb = col.iter().copied().sum();
        }
        if k > 0 {
            let mut dz = Matrix::zeros(delta.rows(), params.weights[k].cols());
            matmul_into(&delta, &params.weights[k], &mut dz);
            // ReLU': positive output ⇔ positive pre-activation
            for (d, &zk) in dz.as_mut_slice().iter_mut().zip(z[k].as_slice()) {
                if zk <= T::zero() {
                    *d = T::zero();
                }
            }
            delta = dz;
        }
    }
    Ok(grads)
}

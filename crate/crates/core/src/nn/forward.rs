//! Forward pass with per-ReLU activation capture.

use num_traits::Float;

use crate::tensor::{Shape3, Tensor3};

use super::arch::{LayerSpec, ModelArchitecture};
use super::params::ParameterSet;
use super::NnError;

/// Post-activation values of every ReLU layer for one input, in layer order.
///
/// The flat concatenation of these layers is the "hidden neuron" vector the
/// defense fingerprints; its length is fixed by the architecture.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationTrace<T = f32> {
    layers: Vec<Vec<T>>,
}

impl<T: Float> ActivationTrace<T> {
    pub fn layers(&self) -> &[Vec<T>] {
        &self.layers
    }

    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(|l| l.len()).sum()
    }

    /// All hidden activations in a fixed order (layer order, row-major).
    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.layers.iter().flat_map(|l| l.iter().copied())
    }
}

/// Everything backward needs from a forward pass over one example.
pub(crate) struct ForwardCache<T> {
    /// Input activation of each layer (data plus logical shape).
    pub inputs: Vec<(Vec<T>, Shape3)>,
    /// For each max-pool layer: flat input index of the selected maximum per
    /// output element.
    pub pool_argmax: Vec<Option<Vec<usize>>>,
    pub logits: Vec<T>,
}

fn conv_forward<T: Float>(
    input: &[T],
    in_shape: Shape3,
    out_shape: Shape3,
    weights: &[T],
    bias: &[T],
    kernel: (usize, usize),
    stride: usize,
) -> Vec<T> {
    let (cin, ih, iw) = in_shape;
    let (cout, oh, ow) = out_shape;
    let (kh, kw) = kernel;
    let mut out = vec![T::zero(); cout * oh * ow];
    for o in 0..cout {
        for y in 0..oh {
            for x in 0..ow {
                let mut acc = bias[o];
                for i in 0..cin {
                    for p in 0..kh {
                        let in_row = (i * ih + y * stride + p) * iw + x * stride;
                        let w_row = ((o * cin + i) * kh + p) * kw;
                        for q in 0..kw {
                            acc = acc + weights[w_row + q] * input[in_row + q];
                        }
                    }
                }
                out[(o * oh + y) * ow + x] = acc;
            }
        }
    }
    out
}

fn pool_forward<T: Float>(
    input: &[T],
    in_shape: Shape3,
    out_shape: Shape3,
    window: usize,
    stride: usize,
) -> (Vec<T>, Vec<usize>) {
    let (c, ih, iw) = in_shape;
    let (_, oh, ow) = out_shape;
    let mut out = vec![T::zero(); c * oh * ow];
    let mut argmax = vec![0usize; c * oh * ow];
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let mut best = T::neg_infinity();
                let mut best_idx = 0usize;
                for p in 0..window {
                    for q in 0..window {
                        let idx = (ch * ih + y * stride + p) * iw + x * stride + q;
                        // Strict > keeps the first maximum on ties, so the
                        // backward routing is deterministic.
                        if input[idx] > best {
                            best = input[idx];
                            best_idx = idx;
                        }
                    }
                }
                let out_idx = (ch * oh + y) * ow + x;
                out[out_idx] = best;
                argmax[out_idx] = best_idx;
            }
        }
    }
    (out, argmax)
}

fn dense_forward<T: Float>(input: &[T], weights: &[T], bias: &[T], out_dim: usize) -> Vec<T> {
    let in_dim = input.len();
    let mut out = Vec::with_capacity(out_dim);
    for o in 0..out_dim {
        let row = &weights[o * in_dim..(o + 1) * in_dim];
        let mut acc = bias[o];
        for (w, v) in row.iter().zip(input) {
            acc = acc + *w * *v;
        }
        out.push(acc);
    }
    out
}

pub(crate) fn forward_cached<T: Float>(
    arch: &ModelArchitecture,
    params: &ParameterSet<T>,
    input: &Tensor3<T>,
    trace: Option<&mut Vec<Vec<T>>>,
) -> Result<ForwardCache<T>, NnError> {
    if input.shape() != arch.input_shape {
        return Err(NnError::InputShapeMismatch {
            expected: arch.input_shape,
            got: input.shape(),
        });
    }
    let shapes = arch.layer_output_shapes()?;
    let mut inputs = Vec::with_capacity(arch.layers.len());
    let mut pool_argmax = Vec::with_capacity(arch.layers.len());
    let mut trace_sink = trace;
    let mut act = input.as_slice().to_vec();
    let mut act_shape = input.shape();

    for (idx, layer) in arch.layers.iter().enumerate() {
        let out_shape = shapes[idx];
        inputs.push((act.clone(), act_shape));
        let mut argmax = None;
        act = match layer {
            LayerSpec::Convolution { kernel, stride, .. } => {
                let lp = params.slot(idx).ok_or(NnError::MissingLayerParams { layer: idx })?;
                conv_forward(&act, act_shape, out_shape, &lp.weights, &lp.bias, *kernel, *stride)
            }
            LayerSpec::MaxPool { window, stride } => {
                let (out, indices) = pool_forward(&act, act_shape, out_shape, *window, *stride);
                argmax = Some(indices);
                out
            }
            LayerSpec::Dense { out_dim, .. } => {
                let lp = params.slot(idx).ok_or(NnError::MissingLayerParams { layer: idx })?;
                dense_forward(&act, &lp.weights, &lp.bias, *out_dim)
            }
            LayerSpec::Relu => {
                let out: Vec<T> = act
                    .iter()
                    .map(|&v| if v > T::zero() { v } else { T::zero() })
                    .collect();
                if let Some(sink) = trace_sink.as_deref_mut() {
                    sink.push(out.clone());
                }
                out
            }
            LayerSpec::Flatten => act,
        };
        act_shape = out_shape;
        pool_argmax.push(argmax);
    }

    Ok(ForwardCache {
        inputs,
        pool_argmax,
        logits: act,
    })
}

/// Runs the network on one input, returning the class logits and the
/// activation trace over all ReLU layers. Pure in all arguments.
pub fn forward<T: Float>(
    arch: &ModelArchitecture,
    params: &ParameterSet<T>,
    input: &Tensor3<T>,
) -> Result<(Vec<T>, ActivationTrace<T>), NnError> {
    let mut layers = Vec::new();
    let cache = forward_cached(arch, params, input, Some(&mut layers))?;
    Ok((cache.logits, ActivationTrace { layers }))
}

/// Predicted class: argmax of the logits, ties broken toward the smallest
/// class index.
pub fn predict<T: Float>(
    arch: &ModelArchitecture,
    params: &ParameterSet<T>,
    input: &Tensor3<T>,
) -> Result<usize, NnError> {
    let cache = forward_cached(arch, params, input, None)?;
    Ok(argmax(&cache.logits))
}

pub(crate) fn argmax<T: Float>(values: &[T]) -> usize {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

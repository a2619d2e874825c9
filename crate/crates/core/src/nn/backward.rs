//! Cross-entropy loss and backpropagation.

use num_traits::Float;

use crate::tensor::Tensor3;

use super::arch::{LayerSpec, ModelArchitecture};
use super::forward::forward_cached;
use super::params::ParameterSet;
use super::NnError;

/// Softmax cross-entropy of `logits` against `label`.
///
/// Returns the loss and its gradient w.r.t. the logits
/// (softmax(logits) - onehot(label)). Numerically stabilized by max
/// subtraction.
pub fn cross_entropy_grad<T: Float>(logits: &[T], label: usize) -> (T, Vec<T>) {
    assert!(label < logits.len(), "label {label} out of range");
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: T = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    let loss = -(logits[label] - max - sum.ln());
    let mut dlogits: Vec<T> = exps.iter().map(|&e| e / sum).collect();
    dlogits[label] = dlogits[label] - T::one();
    (loss, dlogits)
}

/// Loss and parameter gradients for one example via backpropagation.
///
/// The returned gradient set is slot-aligned with `params`.
pub fn loss_and_grads<T: Float>(
    arch: &ModelArchitecture,
    params: &ParameterSet<T>,
    input: &Tensor3<T>,
    label: usize,
) -> Result<(T, ParameterSet<T>), NnError> {
    if label >= arch.num_classes {
        return Err(NnError::LabelOutOfRange {
            label,
            num_classes: arch.num_classes,
        });
    }
    let cache = forward_cached(arch, params, input, None)?;
    let (loss, dlogits) = cross_entropy_grad(&cache.logits, label);

    let mut grads = ParameterSet::zeros(arch);
    let mut delta = dlogits;

    for (idx, layer) in arch.layers.iter().enumerate().rev() {
        let (layer_input, in_shape) = &cache.inputs[idx];
        match layer {
            LayerSpec::Dense { in_dim, out_dim } => {
                let lp = params.slot(idx).ok_or(NnError::MissingLayerParams { layer: idx })?;
                let g = grads.slot_mut(idx).expect("grads mirror params");
                let mut din = vec![T::zero(); *in_dim];
                for o in 0..*out_dim {
                    let d = delta[o];
                    g.bias[o] = g.bias[o] + d;
                    let w_row = o * in_dim;
                    for i in 0..*in_dim {
                        g.weights[w_row + i] = g.weights[w_row + i] + d * layer_input[i];
                        din[i] = din[i] + lp.weights[w_row + i] * d;
                    }
                }
                delta = din;
            }
            LayerSpec::Relu => {
                for (d, &x) in delta.iter_mut().zip(layer_input.iter()) {
                    if x <= T::zero() {
                        *d = T::zero();
                    }
                }
            }
            LayerSpec::MaxPool { .. } => {
                let argmax = cache.pool_argmax[idx]
                    .as_ref()
                    .expect("pool layers cache argmax");
                let mut din = vec![T::zero(); layer_input.len()];
                for (out_idx, &in_idx) in argmax.iter().enumerate() {
                    din[in_idx] = din[in_idx] + delta[out_idx];
                }
                delta = din;
            }
            LayerSpec::Flatten => {
                // Pure reshape; gradient flows through unchanged.
            }
            LayerSpec::Convolution {
                in_channels,
                out_channels,
                kernel: (kh, kw),
                stride,
            } => {
                let lp = params.slot(idx).ok_or(NnError::MissingLayerParams { layer: idx })?;
                let g = grads.slot_mut(idx).expect("grads mirror params");
                let (_, ih, iw) = *in_shape;
                let oh = (ih - kh) / stride + 1;
                let ow = (iw - kw) / stride + 1;
                let mut din = vec![T::zero(); layer_input.len()];
                for o in 0..*out_channels {
                    for y in 0..oh {
                        for x in 0..ow {
                            let d = delta[(o * oh + y) * ow + x];
                            g.bias[o] = g.bias[o] + d;
                            for i in 0..*in_channels {
                                for p in 0..*kh {
                                    let in_row = (i * ih + y * stride + p) * iw + x * stride;
                                    let w_row = ((o * in_channels + i) * kh + p) * kw;
                                    for q in 0..*kw {
                                        g.weights[w_row + q] =
                                            g.weights[w_row + q] + d * layer_input[in_row + q];
                                        din[in_row + q] =
                                            din[in_row + q] + lp.weights[w_row + q] * d;
                                    }
                                }
                            }
                        }
                    }
                }
                delta = din;
            }
        }
    }

    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_lose_ln_n() {
        let logits = vec![0.25f64; 10];
        let (loss, _) = cross_entropy_grad(&logits, 4);
        assert!((loss - 10.0f64.ln()).abs() < 1e-12);
        // ln(10) = 2.302585..., independent of the common logit value.
        let (loss2, _) = cross_entropy_grad(&vec![-3.0f64; 10], 0);
        assert!((loss2 - 2.302585).abs() < 1e-5);
    }

    #[test]
    fn dlogits_sum_to_zero() {
        let logits = vec![1.5f64, -0.25, 0.0, 3.25, -2.0];
        for label in 0..5 {
            let (_, d) = cross_entropy_grad(&logits, label);
            let sum: f64 = d.iter().sum();
            assert!(sum.abs() < 1e-12, "sum {sum} for label {label}");
        }
    }

    #[test]
    fn loss_decreases_along_negative_gradient() {
        let arch = ModelArchitecture::mlp((1, 3, 3), &[6], 4);
        let params = crate::nn::init_params(&arch, 21).to_f64();
        let input = Tensor3::from_vec(
            (1, 3, 3),
            (0..9).map(|i| 0.1 + 0.08 * i as f64).collect(),
        );
        let (loss, grads) = loss_and_grads(&arch, &params, &input, 2).unwrap();
        let mut stepped = params.clone();
        stepped.add_scaled(&grads, -0.05);
        let (loss_after, _) = loss_and_grads(&arch, &stepped, &input, 2).unwrap();
        assert!(loss_after < loss, "{loss_after} !< {loss}");
    }

    #[test]
    fn label_out_of_range_is_an_error() {
        let arch = ModelArchitecture::mlp((1, 2, 2), &[3], 2);
        let params = crate::nn::init_params(&arch, 0);
        let input = Tensor3::from_vec((1, 2, 2), vec![0.1; 4]);
        let err = loss_and_grads(&arch, &params, &input, 2).unwrap_err();
        assert!(matches!(err, NnError::LabelOutOfRange { .. }));
    }
}

//! Trainable parameters of one model and their initialization.

use num_traits::Float;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::arch::{LayerSpec, ModelArchitecture};

/// Weights and biases of one parameterized layer, flattened row-major.
///
/// Convolution weights are laid out `[out][in][kh][kw]`, dense weights
/// `[out][in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T = f32> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

/// All trainable weights of one model, slot-aligned with the architecture's
/// layer list (parameterless layers hold `None`).
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet<T = f32> {
    slots: Vec<Option<LayerParams<T>>>,
}

impl<T: Float> ParameterSet<T> {
    /// Zero-valued parameters shaped for `arch`.
    pub fn zeros(arch: &ModelArchitecture) -> Self {
        let slots = arch
            .layers
            .iter()
            .map(|layer| {
                let (w, b) = layer.parameter_counts();
                if w == 0 && b == 0 {
                    None
                } else {
                    Some(LayerParams {
                        weights: vec![T::zero(); w],
                        bias: vec![T::zero(); b],
                    })
                }
            })
            .collect();
        Self { slots }
    }

    pub fn from_slots(slots: Vec<Option<LayerParams<T>>>) -> Self {
        Self { slots }
    }

    pub fn slot(&self, layer_idx: usize) -> Option<&LayerParams<T>> {
        self.slots.get(layer_idx).and_then(|s| s.as_ref())
    }

    pub fn slot_mut(&mut self, layer_idx: usize) -> Option<&mut LayerParams<T>> {
        self.slots.get_mut(layer_idx).and_then(|s| s.as_mut())
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn total_parameter_count(&self) -> usize {
        self.slots
            .iter()
            .flatten()
            .map(|p| p.weights.len() + p.bias.len())
            .sum()
    }

    /// All parameter values in a fixed order: per layer, weights then bias.
    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.slots.iter().flatten().flat_map(|p| {
            p.weights.iter().copied().chain(p.bias.iter().copied())
        })
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.slots.iter_mut().flatten().flat_map(|p| {
            p.weights.iter_mut().chain(p.bias.iter_mut())
        })
    }

    /// Flattens to a single vector in `values()` order.
    pub fn to_flat(&self) -> Vec<T> {
        self.values().collect()
    }

    /// Rebuilds a parameter set shaped like `template` from a flat vector.
    ///
    /// Panics if the length does not match; callers own the shape agreement.
    pub fn from_flat_like(template: &Self, flat: &[T]) -> Self {
        assert_eq!(
            flat.len(),
            template.total_parameter_count(),
            "flat parameter vector length mismatch"
        );
        let mut out = template.clone();
        for (dst, &src) in out.values_mut().zip(flat.iter()) {
            *dst = src;
        }
        out
    }

    /// `self += factor * other`, elementwise. Shapes must match.
    pub fn add_scaled(&mut self, other: &Self, factor: T) {
        for (dst, src) in self.values_mut().zip(other.values()) {
            *dst = *dst + factor * src;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    /// True when the two sets agree on shape (slot layout and lengths).
    pub fn shape_matches(&self, other: &Self) -> bool {
        self.slots.len() == other.slots.len()
            && self.slots.iter().zip(&other.slots).all(|(a, b)| match (a, b) {
                (None, None) => true,
                (Some(a), Some(b)) => {
                    a.weights.len() == b.weights.len() && a.bias.len() == b.bias.len()
                }
                _ => false,
            })
    }
}

impl ParameterSet<f32> {
    /// Widens to f64, used by the numeric test oracles.
    pub fn to_f64(&self) -> ParameterSet<f64> {
        ParameterSet {
            slots: self
                .slots
                .iter()
                .map(|s| {
                    s.as_ref().map(|p| LayerParams {
                        weights: p.weights.iter().map(|&v| v as f64).collect(),
                        bias: p.bias.iter().map(|&v| v as f64).collect(),
                    })
                })
                .collect(),
        }
    }
}

impl ParameterSet<f64> {
    /// Narrows to f32 (rounds to nearest).
    pub fn to_f32(&self) -> ParameterSet<f32> {
        ParameterSet {
            slots: self
                .slots
                .iter()
                .map(|s| {
                    s.as_ref().map(|p| LayerParams {
                        weights: p.weights.iter().map(|&v| v as f32).collect(),
                        bias: p.bias.iter().map(|&v| v as f32).collect(),
                    })
                })
                .collect(),
        }
    }
}

/// Deterministic weight initialization: per layer, weights uniform in
/// (-b, b) with b = sqrt(6 / (fan_in + fan_out)); biases zero.
pub fn init_params(arch: &ModelArchitecture, seed: u64) -> ParameterSet<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots = arch
        .layers
        .iter()
        .map(|layer| {
            let (w_count, b_count) = layer.parameter_counts();
            if w_count == 0 && b_count == 0 {
                return None;
            }
            let bound = layer
                .init_bound()
                .expect("parameterized layers have an init bound") as f32;
            let weights = (0..w_count)
                .map(|_| (rng.random::<f32>() * 2.0 - 1.0) * bound)
                .collect();
            Some(LayerParams {
                weights,
                bias: vec![0.0; b_count],
            })
        })
        .collect();
    ParameterSet { slots }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::arch::ModelArchitecture;

    fn dense_arch(dim: usize) -> ModelArchitecture {
        ModelArchitecture::new(
            vec![
                LayerSpec::Dense {
                    in_dim: dim,
                    out_dim: dim,
                },
                LayerSpec::Relu,
            ],
            (dim, 1, 1),
            dim,
        )
        .unwrap()
    }

    #[test]
    fn init_is_bitwise_deterministic() {
        let arch = ModelArchitecture::conv_net(10);
        let a = init_params(&arch, 42);
        let b = init_params(&arch, 42);
        assert_eq!(a, b);
        let c = init_params(&arch, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn biases_start_at_zero() {
        let arch = dense_arch(2);
        let params = init_params(&arch, 1);
        assert_eq!(params.slot(0).unwrap().bias, vec![0.0, 0.0]);
    }

    #[test]
    fn weights_respect_glorot_bound() {
        let arch = dense_arch(4);
        let params = init_params(&arch, 7);
        let bound = (6.0f32 / 8.0).sqrt();
        for &w in &params.slot(0).unwrap().weights {
            assert!(w > -bound && w < bound, "weight {w} outside ({-bound}, {bound})");
        }
    }

    #[test]
    fn flat_round_trip() {
        let arch = ModelArchitecture::mlp((1, 3, 3), &[4], 2);
        let params = init_params(&arch, 5);
        let rebuilt = ParameterSet::from_flat_like(&params, &params.to_flat());
        assert_eq!(params, rebuilt);
    }

    #[test]
    fn parameter_count_matches_arch() {
        let arch = ModelArchitecture::conv_net(10);
        let params = init_params(&arch, 0);
        assert_eq!(
            params.total_parameter_count(),
            arch.total_parameter_count()
        );
    }
}

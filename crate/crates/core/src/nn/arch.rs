//! Model architectures: ordered layer specs with static shape checking.

use crate::tensor::Shape3;

use super::NnError;

/// One layer of a feed-forward network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    /// 2D convolution, no padding.
    Convolution {
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        stride: usize,
    },
    /// Square-window max pooling.
    MaxPool { window: usize, stride: usize },
    /// Fully connected layer over a flattened input.
    Dense { in_dim: usize, out_dim: usize },
    Relu,
    Flatten,
}

impl LayerSpec {
    /// Output shape for a given input shape, or why the shapes are incompatible.
    pub fn output_shape(&self, input: Shape3) -> Result<Shape3, String> {
        let (c, h, w) = input;
        match *self {
            LayerSpec::Convolution {
                in_channels,
                out_channels,
                kernel: (kh, kw),
                stride,
            } => {
                if stride == 0 || kh == 0 || kw == 0 || out_channels == 0 {
                    return Err("convolution kernel/stride/channels must be positive".into());
                }
                if c != in_channels {
                    return Err(format!(
                        "convolution expects {in_channels} input channels, got {c}"
                    ));
                }
                if h < kh || w < kw {
                    return Err(format!(
                        "convolution kernel {kh}x{kw} does not fit input {h}x{w}"
                    ));
                }
                Ok((out_channels, (h - kh) / stride + 1, (w - kw) / stride + 1))
            }
            LayerSpec::MaxPool { window, stride } => {
                if window == 0 || stride == 0 {
                    return Err("pool window/stride must be positive".into());
                }
                if h < window || w < window {
                    return Err(format!(
                        "pool window {window} does not fit input {h}x{w}"
                    ));
                }
                Ok((c, (h - window) / stride + 1, (w - window) / stride + 1))
            }
            LayerSpec::Dense { in_dim, out_dim } => {
                if out_dim == 0 {
                    return Err("dense output dimension must be positive".into());
                }
                if input != (in_dim, 1, 1) {
                    return Err(format!(
                        "dense expects flattened input ({in_dim},1,1), got {input:?}"
                    ));
                }
                Ok((out_dim, 1, 1))
            }
            LayerSpec::Relu => Ok(input),
            LayerSpec::Flatten => Ok((c * h * w, 1, 1)),
        }
    }

    /// (weights, biases) counts; zero for parameterless layers.
    pub fn parameter_counts(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Convolution {
                in_channels,
                out_channels,
                kernel: (kh, kw),
                ..
            } => (out_channels * in_channels * kh * kw, out_channels),
            LayerSpec::Dense { in_dim, out_dim } => (in_dim * out_dim, out_dim),
            _ => (0, 0),
        }
    }

    /// Glorot-style uniform bound sqrt(6 / (fan_in + fan_out)); None for
    /// parameterless layers.
    pub fn init_bound(&self) -> Option<f64> {
        let (fan_in, fan_out) = match *self {
            LayerSpec::Convolution {
                in_channels,
                out_channels,
                kernel: (kh, kw),
                ..
            } => (in_channels * kh * kw, out_channels * kh * kw),
            LayerSpec::Dense { in_dim, out_dim } => (in_dim, out_dim),
            _ => return None,
        };
        Some((6.0 / (fan_in + fan_out) as f64).sqrt())
    }
}

/// A validated stack of layers mapping an input image to class logits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelArchitecture {
    pub layers: Vec<LayerSpec>,
    pub input_shape: Shape3,
    pub num_classes: usize,
}

impl ModelArchitecture {
    pub fn new(
        layers: Vec<LayerSpec>,
        input_shape: Shape3,
        num_classes: usize,
    ) -> Result<Self, NnError> {
        let arch = Self {
            layers,
            input_shape,
            num_classes,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// Checks the layer chain: consecutive shapes compatible, final output is
    /// exactly `num_classes` logits, and at least one ReLU is present.
    pub fn validate(&self) -> Result<(), NnError> {
        let shapes = self.layer_output_shapes()?;
        let final_shape = shapes.last().copied().unwrap_or(self.input_shape);
        if final_shape != (self.num_classes, 1, 1) {
            return Err(NnError::InvalidArchitecture(format!(
                "final layer produces {final_shape:?}, expected ({},1,1)",
                self.num_classes
            )));
        }
        if !self.layers.iter().any(|l| matches!(l, LayerSpec::Relu)) {
            return Err(NnError::InvalidArchitecture(
                "architecture needs at least one ReLU layer".into(),
            ));
        }
        Ok(())
    }

    /// Output shape after each layer, in order.
    pub fn layer_output_shapes(&self) -> Result<Vec<Shape3>, NnError> {
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut current = self.input_shape;
        for (idx, layer) in self.layers.iter().enumerate() {
            current = layer.output_shape(current).map_err(|reason| {
                NnError::InvalidArchitecture(format!("layer {idx}: {reason}"))
            })?;
            shapes.push(current);
        }
        Ok(shapes)
    }

    /// Total hidden neurons: the summed sizes of every ReLU layer's output.
    ///
    /// Constant across all models sharing this architecture, which is what
    /// makes activation fingerprints comparable between clients.
    pub fn neuron_count(&self) -> usize {
        let shapes = self
            .layer_output_shapes()
            .expect("neuron_count requires a valid architecture");
        self.layers
            .iter()
            .zip(&shapes)
            .filter(|(l, _)| matches!(l, LayerSpec::Relu))
            .map(|(_, &(c, h, w))| c * h * w)
            .sum()
    }

    pub fn total_parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| {
                let (w, b) = l.parameter_counts();
                w + b
            })
            .sum()
    }

    /// Two-block convolutional network for 28x28 grayscale images:
    /// Conv(1->8, 5x5) -> ReLU -> MaxPool(2,2) -> Conv(8->16, 5x5) -> ReLU ->
    /// MaxPool(2,2) -> Flatten -> Dense(256->120) -> ReLU -> Dense(120->classes).
    pub fn conv_net(num_classes: usize) -> Self {
        Self::new(
            vec![
                LayerSpec::Convolution {
                    in_channels: 1,
                    out_channels: 8,
                    kernel: (5, 5),
                    stride: 1,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool { window: 2, stride: 2 },
                LayerSpec::Convolution {
                    in_channels: 8,
                    out_channels: 16,
                    kernel: (5, 5),
                    stride: 1,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool { window: 2, stride: 2 },
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    in_dim: 16 * 4 * 4,
                    out_dim: 120,
                },
                LayerSpec::Relu,
                LayerSpec::Dense {
                    in_dim: 120,
                    out_dim: num_classes,
                },
            ],
            (1, 28, 28),
            num_classes,
        )
        .expect("conv_net layout is statically valid")
    }

    /// Fully connected ReLU network: Flatten -> Dense -> ReLU -> ... -> Dense.
    pub fn mlp(input_shape: Shape3, hidden: &[usize], num_classes: usize) -> Self {
        let mut layers = vec![LayerSpec::Flatten];
        let mut in_dim = input_shape.0 * input_shape.1 * input_shape.2;
        for &out_dim in hidden {
            layers.push(LayerSpec::Dense { in_dim, out_dim });
            layers.push(LayerSpec::Relu);
            in_dim = out_dim;
        }
        layers.push(LayerSpec::Dense {
            in_dim,
            out_dim: num_classes,
        });
        Self::new(layers, input_shape, num_classes)
            .expect("mlp layout is statically valid")
    }

    /// Small MLP profile for 28x28 inputs (784 -> 64 -> 32 -> classes), used
    /// where training speed matters more than accuracy.
    pub fn fast_mlp(num_classes: usize) -> Self {
        Self::mlp((1, 28, 28), &[64, 32], num_classes)
    }
}

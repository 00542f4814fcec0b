//! Fully connected networks with hand-written backpropagation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::linalg::{axpy, Matrix};
use crate::{Error, Result};

/// Hidden-layer nonlinearity. The output layer is always linear.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    /// `max(x, slope·x)`; slope 0 is a plain rectifier.
    LeakyRelu(f64),
    Tanh,
    Linear,
}

impl Default for Activation {
    fn default() -> Self {
        Activation::LeakyRelu(0.2)
    }
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if x > 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative with respect to the pre-activation `x`.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if x > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Linear => 1.0,
        }
    }

    pub(crate) fn tag(self) -> (u8, f64) {
        match self {
            Activation::Linear => (0, 0.0),
            Activation::LeakyRelu(slope) => (1, slope),
            Activation::Tanh => (2, 0.0),
        }
    }

    pub(crate) fn from_tag(tag: u8, param: f64) -> Option<Self> {
        match tag {
            0 => Some(Activation::Linear),
            1 => Some(Activation::LeakyRelu(param)),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::LeakyRelu(slope) if *slope == 0.0 => f.write_str("relu"),
            Activation::LeakyRelu(slope) => write!(f, "leaky_relu:{slope}"),
            Activation::Tanh => f.write_str("tanh"),
            Activation::Linear => f.write_str("linear"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match (name, arg) {
            ("relu", None) => Ok(Activation::LeakyRelu(0.0)),
            ("leaky_relu", None) => Ok(Activation::default()),
            ("leaky_relu", Some(a)) => a
                .parse()
                .map(Activation::LeakyRelu)
                .map_err(|_| Error::InvalidArgument(format!("bad leaky slope `{a}`"))),
            ("tanh", None) => Ok(Activation::Tanh),
            ("linear", None) => Ok(Activation::Linear),
            _ => Err(Error::InvalidArgument(format!("unknown activation `{s}`"))),
        }
    }
}

/// Hidden widths and activation of one generator network. Input and
/// output width are the embedding dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpShape {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl MlpShape {
    /// One hidden layer of width `d`.
    pub fn default_for(d: usize) -> Self {
        MlpShape {
            hidden: vec![d],
            activation: Activation::default(),
        }
    }

    pub fn layer_dims(&self, d: usize) -> Vec<(usize, usize)> {
        let mut widths = vec![d];
        widths.extend(&self.hidden);
        widths.push(d);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `out × in`
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// Parameters of one generator network. Also used as the gradient
/// container for itself.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct MlpTrace {
    /// Input to each layer; `inputs[0]` is the network input.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl MlpTrace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn into_output(self) -> Vec<f64> {
        self.output
    }
}

impl MlpParams {
    /// Fan-in scaled uniform weights `U(-1/√in, 1/√in)`, zero biases.
    pub fn init<R: Rng + ?Sized>(d: usize, shape: &MlpShape, rng: &mut R) -> Self {
        let dims = shape.layer_dims(d);
        let last = dims.len() - 1;
        let layers = dims
            .into_iter()
            .enumerate()
            .map(|(i, (input, output))| {
                let bound = 1.0 / (input as f64).sqrt();
                Layer {
                    weight: Matrix::from_fn(output, input, |_, _| rng.random_range(-bound..=bound)),
                    bias: vec![0.0; output],
                    activation: if i == last { Activation::Linear } else { shape.activation },
                }
            })
            .collect();
        MlpParams { layers }
    }

    /// Builds a network from explicit layers after checking that the
    /// dimensions chain and the last layer is linear.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape(format!(
                    "layer output {} does not feed input {}",
                    pair[0].output_dim(),
                    pair[1].input_dim()
                )));
            }
        }
        for layer in &layers {
            if layer.bias.len() != layer.output_dim() {
                return Err(Error::Shape("bias length differs from layer output".into()));
            }
        }
        if layers.last().map(|l| l.activation) != Some(Activation::Linear) {
            return Err(Error::Shape("output layer must be linear".into()));
        }
        Ok(MlpParams { layers })
    }

    pub fn zeros_like(&self) -> Self {
        MlpParams {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weight: Matrix::zeros(l.weight.rows(), l.weight.cols()),
                    bias: vec![0.0; l.bias.len()],
                    activation: l.activation,
                })
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(Layer::output_dim).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.as_slice().len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    /// Flat views of every tensor, weight then bias per layer.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn forward(&self, z: &[f64]) -> Vec<f64> {
        let mut x = z.to_vec();
        for layer in &self.layers {
            let mut y = layer.bias.clone();
            for (r, yr) in y.iter_mut().enumerate() {
                *yr += crate::linalg::dot(layer.weight.row(r), &x);
                *yr = layer.activation.apply(*yr);
            }
            x = y;
        }
        x
    }

    pub fn forward_traced(&self, z: &[f64]) -> MlpTrace {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = z.to_vec();
        for layer in &self.layers {
            let mut a = vec![0.0; layer.output_dim()];
            layer.weight.matvec(&x, &mut a);
            for (ai, bi) in a.iter_mut().zip(&layer.bias) {
                *ai += bi;
            }
            let next: Vec<f64> = a.iter().map(|&v| layer.activation.apply(v)).collect();
            inputs.push(std::mem::replace(&mut x, next));
            pre.push(a);
        }
        MlpTrace { inputs, pre, output: x }
    }

    /// Accumulates `∂L/∂θ` into `grads` given `∂L/∂output`, and returns
    /// `∂L/∂input`.
    pub fn backward(&self, trace: &MlpTrace, grad_output: &[f64], grads: &mut MlpParams) -> Vec<f64> {
        let mut delta = grad_output.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            for (d, &a) in delta.iter_mut().zip(&trace.pre[i]) {
                *d *= layer.activation.derivative(a);
            }
            let g = &mut grads.layers[i];
            for (r, &dr) in delta.iter().enumerate() {
                if dr != 0.0 {
                    axpy(dr, &trace.inputs[i], g.weight.row_mut(r));
                }
                g.bias[r] += dr;
            }
            let mut below = vec![0.0; layer.input_dim()];
            layer.weight.matvec_transposed(&delta, &mut below);
            delta = below;
        }
        delta
    }

    /// `self += alpha · other` over every tensor.
    pub fn add_scaled(&mut self, alpha: f64, other: &MlpParams) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            axpy(alpha, b.weight.as_slice(), a.weight.as_mut_slice());
            axpy(alpha, &b.bias, &mut a.bias);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    /// Straight-line evaluation written independently of the layer loop.
    fn reference_two_layer(mlp: &MlpParams, z: &[f64]) -> Vec<f64> {
        let (l0, l1) = (&mlp.layers[0], &mlp.layers[1]);
        let hidden: Vec<f64> = (0..l0.output_dim())
            .map(|r| {
                let mut acc = l0.bias[r];
                for c in 0..l0.input_dim() {
                    acc += l0.weight.get(r, c) * z[c];
                }
                if acc > 0.0 {
                    acc
                } else {
                    0.2 * acc
                }
            })
            .collect();
        (0..l1.output_dim())
            .map(|r| {
                let mut acc = l1.bias[r];
                for c in 0..l1.input_dim() {
                    acc += l1.weight.get(r, c) * hidden[c];
                }
                acc
            })
            .collect()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mlp = MlpParams::init(4, &MlpShape::default_for(4), &mut stream(0, "m")).zeros_like();
        assert_eq!(mlp.forward(&[1.0, -2.0, 3.0, 0.5]), vec![0.0; 4]);
    }

    #[test]
    fn identity_layer_adds_bias() {
        let layer = Layer {
            weight: Matrix::identity(3),
            bias: vec![0.5, -1.0, 2.0],
            activation: Activation::Linear,
        };
        let mlp = MlpParams::from_layers(vec![layer]).unwrap();
        assert_eq!(mlp.forward(&[1.0, 2.0, 3.0]), vec![1.5, 1.0, 5.0]);
    }

    #[test]
    fn random_two_layer_matches_reference() {
        let mut rng = stream(3, "m");
        for _ in 0..20 {
            let mut mlp = MlpParams::init(6, &MlpShape::default_for(6), &mut rng);
            for b in mlp.layers.iter_mut().flat_map(|l| l.bias.iter_mut()) {
                *b = rng.random_range(-0.5..0.5);
            }
            let z: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let got = mlp.forward(&z);
            let want = reference_two_layer(&mlp, &z);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12);
            }
            assert_eq!(mlp.forward_traced(&z).output(), got.as_slice());
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = stream(4, "m");
        let shape = MlpShape {
            hidden: vec![5, 4],
            activation: Activation::Tanh,
        };
        let mlp = MlpParams::init(3, &shape, &mut rng);
        let z = [0.3, -0.7, 1.1];
        let w = [0.5, -1.0, 2.0];
        let objective = |m: &MlpParams, z: &[f64]| crate::linalg::dot(&m.forward(z), &w);

        let trace = mlp.forward_traced(&z);
        let mut grads = mlp.zeros_like();
        let dz = mlp.backward(&trace, &w, &mut grads);

        let h = 1e-6;
        for i in 0..3 {
            let mut zp = z;
            let mut zm = z;
            zp[i] += h;
            zm[i] -= h;
            let fd = (objective(&mlp, &zp) - objective(&mlp, &zm)) / (2.0 * h);
            assert!((fd - dz[i]).abs() < 1e-7);
        }
        for (li, layer) in mlp.layers.iter().enumerate() {
            for k in 0..layer.weight.as_slice().len() {
                let mut p = mlp.clone();
                p.layers[li].weight.as_mut_slice()[k] += h;
                let mut m = mlp.clone();
                m.layers[li].weight.as_mut_slice()[k] -= h;
                let fd = (objective(&p, &z) - objective(&m, &z)) / (2.0 * h);
                assert!((fd - grads.layers[li].weight.as_slice()[k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn from_layers_validates() {
        let l = |i, o, a| Layer {
            weight: Matrix::zeros(o, i),
            bias: vec![0.0; o],
            activation: a,
        };
        assert!(MlpParams::from_layers(vec![]).is_err());
        assert!(MlpParams::from_layers(vec![l(3, 4, Activation::Tanh), l(5, 3, Activation::Linear)]).is_err());
        assert!(MlpParams::from_layers(vec![l(3, 3, Activation::Tanh)]).is_err());
        assert!(MlpParams::from_layers(vec![l(3, 4, Activation::Tanh), l(4, 3, Activation::Linear)]).is_ok());
    }

    #[test]
    fn activation_parsing() {
        assert_eq!("relu".parse::<Activation>().unwrap(), Activation::LeakyRelu(0.0));
        assert_eq!("leaky_relu:0.1".parse::<Activation>().unwrap(), Activation::LeakyRelu(0.1));
        assert_eq!("tanh".parse::<Activation>().unwrap(), Activation::Tanh);
        for a in [Activation::LeakyRelu(0.2), Activation::Tanh, Activation::Linear, Activation::LeakyRelu(0.0)] {
            assert_eq!(a.to_string().parse::<Activation>().unwrap(), a);
        }
        assert!("swish".parse::<Activation>().is_err());
    }
}

//! Learnable parameters of the discriminator and the two generators,
//! their forward passes, losses and exact gradients.

pub mod checkpoint;
pub mod export;
mod loss;
pub mod mlp;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub use loss::{
    discriminator_loss_and_grads, draw_generator_noise, generator_loss_and_grads, generator_loss_with_noise,
    DiscriminatorGrads, GeneratorGrads, RowGrads,
};
pub use mlp::{Activation, Layer, MlpParams, MlpShape};

use crate::linalg::{dot, sigmoid, Matrix};
use crate::{Error, Result};

/// Architecture and noise settings shared by initialization and checkpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub dim: usize,
    /// Standard deviation of the latent noise.
    pub sigma: f64,
    /// Drop the source generator and produce only fake target neighbors.
    pub single_generator: bool,
    pub mlp_s: MlpShape,
    pub mlp_t: MlpShape,
}

impl ModelConfig {
    pub fn new(dim: usize) -> Self {
        ModelConfig {
            dim,
            sigma: 1.0,
            single_generator: false,
            mlp_s: MlpShape::default_for(dim),
            mlp_t: MlpShape::default_for(dim),
        }
    }
}

/// Source and target vectors of every real node.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorParams {
    pub source: Matrix,
    pub target: Matrix,
}

impl DiscriminatorParams {
    pub fn new(source: Matrix, target: Matrix) -> Result<Self> {
        if source.rows() != target.rows() || source.cols() != target.cols() {
            return Err(Error::Shape(format!(
                "source {}x{} vs target {}x{}",
                source.rows(),
                source.cols(),
                target.rows(),
                target.cols()
            )));
        }
        Ok(DiscriminatorParams { source, target })
    }

    pub fn node_count(&self) -> usize {
        self.source.rows()
    }

    pub fn dim(&self) -> usize {
        self.source.cols()
    }

    /// Raw directed score `s_u · t_v`.
    #[inline]
    pub fn score(&self, u: usize, v: usize) -> f64 {
        dot(self.source.row(u), self.target.row(v))
    }

    /// Probability that `u → v` is a real edge.
    pub fn probability(&self, u: usize, v: usize) -> f64 {
        sigmoid(self.score(u, v))
    }

    pub fn is_finite(&self) -> bool {
        self.source.is_finite() && self.target.is_finite()
    }
}

/// Latent means, noise scale and the generator networks.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub latent: Matrix,
    pub sigma: f64,
    /// Source-neighbor network; absent in single-generator mode.
    pub mlp_s: Option<MlpParams>,
    pub mlp_t: MlpParams,
}

impl GeneratorParams {
    pub fn node_count(&self) -> usize {
        self.latent.rows()
    }

    pub fn dim(&self) -> usize {
        self.latent.cols()
    }

    pub fn single_generator(&self) -> bool {
        self.mlp_s.is_none()
    }

    pub fn is_finite(&self) -> bool {
        self.latent.is_finite() && self.mlp_t.is_finite() && self.mlp_s.as_ref().is_none_or(MlpParams::is_finite)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Source,
    Target,
}

/// A generated neighbor of `owner`: a fake source vector (role `Source`)
/// or a fake target vector (role `Target`).
#[derive(Clone, Debug, PartialEq)]
pub struct FakeNeighbor {
    pub owner: usize,
    pub role: Role,
    pub embedding: Vec<f64>,
    pub latent: Vec<f64>,
}

/// Both fakes produced from one latent draw.
#[derive(Clone, Debug, PartialEq)]
pub struct FakePair {
    pub source: Option<FakeNeighbor>,
    pub target: FakeNeighbor,
}

impl FakePair {
    pub fn into_neighbors(self) -> impl Iterator<Item = FakeNeighbor> {
        self.source.into_iter().chain(std::iter::once(self.target))
    }
}

fn uniform_rows<R: Rng + ?Sized>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

/// Draws fresh parameters.
///
/// Embedding rows (source, target, latent) are uniform in `[-0.5/d, 0.5/d]`,
/// network weights use fan-in scaled uniform initialization and biases
/// start at zero.
pub fn init_params<R: Rng + ?Sized>(
    node_count: usize,
    config: &ModelConfig,
    rng: &mut R,
) -> Result<(DiscriminatorParams, GeneratorParams)> {
    let d = config.dim;
    if d == 0 || node_count == 0 {
        return Err(Error::InvalidArgument("dimension and node count must be positive".into()));
    }
    if !(config.sigma >= 0.0 && config.sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be finite and non-negative, got {}", config.sigma)));
    }
    let bound = 0.5 / d as f64;
    let source = uniform_rows(node_count, d, bound, rng);
    let target = uniform_rows(node_count, d, bound, rng);
    let latent = uniform_rows(node_count, d, bound, rng);
    let mlp_s = (!config.single_generator).then(|| MlpParams::init(d, &config.mlp_s, rng));
    let mlp_t = MlpParams::init(d, &config.mlp_t, rng);
    Ok((
        DiscriminatorParams { source, target },
        GeneratorParams {
            latent,
            sigma: config.sigma,
            mlp_s,
            mlp_t,
        },
    ))
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// `z_u + σ·ε` for the given noise vector.
pub(crate) fn latent_from_noise(gen: &GeneratorParams, u: usize, eps: &[f64]) -> Vec<f64> {
    gen.latent
        .row(u)
        .iter()
        .zip(eps)
        .map(|(m, e)| m + gen.sigma * e)
        .collect()
}

/// One draw from `N(z_u, σ²I)`.
pub fn sample_latent<R: Rng + ?Sized>(gen: &GeneratorParams, u: usize, rng: &mut R) -> Vec<f64> {
    let eps = standard_normal(gen.dim(), rng);
    latent_from_noise(gen, u, &eps)
}

fn fakes_from_latent(gen: &GeneratorParams, u: usize, z: Vec<f64>) -> FakePair {
    let source = gen.mlp_s.as_ref().map(|mlp| FakeNeighbor {
        owner: u,
        role: Role::Source,
        embedding: mlp.forward(&z),
        latent: z.clone(),
    });
    let target = FakeNeighbor {
        owner: u,
        role: Role::Target,
        embedding: gen.mlp_t.forward(&z),
        latent: z,
    };
    FakePair { source, target }
}

/// Generates a fake source and fake target neighbor for `u` from a single
/// shared latent draw.
pub fn generate_fake<R: Rng + ?Sized>(gen: &GeneratorParams, u: usize, rng: &mut R) -> FakePair {
    let z = sample_latent(gen, u, rng);
    fakes_from_latent(gen, u, z)
}

/// `draws` fake pairs for every anchor, flattened in anchor-major order.
///
/// Noise is drawn sequentially from `rng`; the network evaluations run in
/// parallel but the result order (and therefore any downstream reduction)
/// does not depend on scheduling.
pub fn generate_fakes<R: Rng + ?Sized>(gen: &GeneratorParams, anchors: &[usize], draws: usize, rng: &mut R) -> Vec<FakeNeighbor> {
    let d = gen.dim();
    let jobs: Vec<(usize, Vec<f64>)> = anchors
        .iter()
        .flat_map(|&u| std::iter::repeat_n(u, draws))
        .map(|u| (u, standard_normal(d, rng)))
        .collect();
    let pairs: Vec<FakePair> = jobs
        .into_par_iter()
        .map(|(u, eps)| fakes_from_latent(gen, u, latent_from_noise(gen, u, &eps)))
        .collect();
    pairs.into_iter().flat_map(FakePair::into_neighbors).collect()
}

/// `σ(s · t)`.
#[inline]
pub fn discriminate(source: &[f64], target: &[f64]) -> f64 {
    sigmoid(raw_score(source, target))
}

/// `s · t`.
#[inline]
pub fn raw_score(source: &[f64], target: &[f64]) -> f64 {
    dot(source, target)
}

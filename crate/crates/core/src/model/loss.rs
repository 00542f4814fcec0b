use std::collections::BTreeMap;

use rand::Rng;

use super::{latent_from_noise, standard_normal, DiscriminatorParams, FakeNeighbor, GeneratorParams, MlpParams, Role};
use crate::graph::Edge;
use crate::linalg::{axpy, dot, sigmoid, softplus, Matrix};
use crate::{Error, Result};

/// Row-sparse gradient of an embedding table. Rows are kept sorted so any
/// reduction over them happens in a fixed order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RowGrads {
    pub width: usize,
    pub rows: BTreeMap<usize, Vec<f64>>,
}

impl RowGrads {
    pub fn new(width: usize) -> Self {
        RowGrads {
            width,
            rows: BTreeMap::new(),
        }
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let width = self.width;
        self.rows.entry(r).or_insert_with(|| vec![0.0; width])
    }

    /// `row[r] += alpha · x`
    pub fn add(&mut self, r: usize, alpha: f64, x: &[f64]) {
        axpy(alpha, x, self.row_mut(r));
    }

    pub fn to_dense(&self, rows: usize) -> Matrix {
        let mut m = Matrix::zeros(rows, self.width);
        for (&r, g) in &self.rows {
            m.row_mut(r).copy_from_slice(g);
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.rows.values().flatten().all(|x| x.is_finite())
    }
}

/// Gradient of the discriminator loss with respect to the source and
/// target tables.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorGrads {
    pub source: RowGrads,
    pub target: RowGrads,
}

/// Gradient of the generator loss with respect to the latent table and
/// both networks.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorGrads {
    pub latent: RowGrads,
    pub mlp_s: Option<MlpParams>,
    pub mlp_t: MlpParams,
}

fn check_finite(value: f64, what: impl FnOnce() -> String) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what()))
    }
}

/// Discriminator objective and its gradient.
///
/// ```text
/// L = mean_{(u,v)} softplus(-s_u·t_v)            (= -log D(u, v))
///   + mean_{fakes} softplus(x)                    (= -log(1 - D))
/// ```
///
/// where `x = s_fake·t_u` for a fake source neighbor of `u` and
/// `x = s_u·t_fake` for a fake target neighbor. Fake embeddings are inputs
/// only; gradients reach the source and target rows of real nodes.
pub fn discriminator_loss_and_grads(
    disc: &DiscriminatorParams,
    positives: &[Edge],
    fakes: &[FakeNeighbor],
) -> Result<(f64, DiscriminatorGrads)> {
    if positives.is_empty() && fakes.is_empty() {
        return Err(Error::InvalidArgument("discriminator batch is empty".into()));
    }
    let d = disc.dim();
    let mut grads = DiscriminatorGrads {
        source: RowGrads::new(d),
        target: RowGrads::new(d),
    };
    let mut loss = 0.0;

    if !positives.is_empty() {
        let scale = 1.0 / positives.len() as f64;
        let mut sum = 0.0;
        for &(u, v) in positives {
            let x = disc.score(u, v);
            sum += check_finite(softplus(-x), || format!("positive pair ({u}, {v})"))?;
            // d softplus(-x) / dx = -σ(-x)
            let g = -sigmoid(-x) * scale;
            grads.source.add(u, g, disc.target.row(v));
            grads.target.add(v, g, disc.source.row(u));
        }
        loss += sum * scale;
    }

    if !fakes.is_empty() {
        let scale = 1.0 / fakes.len() as f64;
        let mut sum = 0.0;
        for fake in fakes {
            let u = fake.owner;
            let x = match fake.role {
                Role::Source => dot(&fake.embedding, disc.target.row(u)),
                Role::Target => dot(disc.source.row(u), &fake.embedding),
            };
            sum += check_finite(softplus(x), || format!("fake {:?} neighbor of node {u}", fake.role))?;
            let g = sigmoid(x) * scale;
            match fake.role {
                Role::Source => grads.target.add(u, g, &fake.embedding),
                Role::Target => grads.source.add(u, g, &fake.embedding),
            }
        }
        loss += sum * scale;
    }
    Ok((loss, grads))
}

/// Standard normal noise for `nodes.len() · draws` latent samples,
/// node-major, `d` values each.
pub fn draw_generator_noise<R: Rng + ?Sized>(d: usize, nodes: usize, draws: usize, rng: &mut R) -> Vec<f64> {
    (0..nodes * draws).flat_map(|_| standard_normal(d, rng)).collect()
}

/// Generator objective for fixed reparameterization noise.
///
/// ```text
/// L = mean_u mean_k [ log(1 - D(f_s(z_uk), u)) + log(1 - D(u, f_t(z_uk))) ]
/// z_uk = z_u + σ·ε_uk
/// ```
///
/// The discriminator is read-only. Gradients flow through it into the fake
/// embeddings, back through both networks and into `z_u`; when one draw
/// feeds both networks `z_u` receives the sum of the two paths.
pub fn generator_loss_with_noise(
    disc: &DiscriminatorParams,
    gen: &GeneratorParams,
    nodes: &[usize],
    draws: usize,
    noise: &[f64],
) -> Result<(f64, GeneratorGrads)> {
    if nodes.is_empty() || draws == 0 {
        return Err(Error::InvalidArgument("generator batch is empty".into()));
    }
    let d = gen.dim();
    if noise.len() != nodes.len() * draws * d {
        return Err(Error::Shape(format!(
            "noise has {} values, expected {}",
            noise.len(),
            nodes.len() * draws * d
        )));
    }
    let mut grads = GeneratorGrads {
        latent: RowGrads::new(d),
        mlp_s: gen.mlp_s.as_ref().map(MlpParams::zeros_like),
        mlp_t: gen.mlp_t.zeros_like(),
    };
    let scale = 1.0 / (nodes.len() * draws) as f64;
    let mut sum = 0.0;
    for (i, eps) in noise.chunks_exact(d).enumerate() {
        let u = nodes[i / draws];
        let z = latent_from_noise(gen, u, eps);
        let mut dz = vec![0.0; d];

        if let (Some(mlp_s), Some(grad_s)) = (gen.mlp_s.as_ref(), grads.mlp_s.as_mut()) {
            let trace = mlp_s.forward_traced(&z);
            let t_u = disc.target.row(u);
            let x = dot(trace.output(), t_u);
            // log(1 - σ(x)) = -softplus(x), derivative -σ(x)
            sum -= check_finite(softplus(x), || format!("fake source neighbor of node {u}"))?;
            let g = -sigmoid(x) * scale;
            let grad_out: Vec<f64> = t_u.iter().map(|t| g * t).collect();
            let back = mlp_s.backward(&trace, &grad_out, grad_s);
            axpy(1.0, &back, &mut dz);
        }

        let trace = gen.mlp_t.forward_traced(&z);
        let s_u = disc.source.row(u);
        let x = dot(s_u, trace.output());
        sum -= check_finite(softplus(x), || format!("fake target neighbor of node {u}"))?;
        let g = -sigmoid(x) * scale;
        let grad_out: Vec<f64> = s_u.iter().map(|s| g * s).collect();
        let back = gen.mlp_t.backward(&trace, &grad_out, &mut grads.mlp_t);
        axpy(1.0, &back, &mut dz);

        // ∂z/∂z_u = I
        grads.latent.add(u, 1.0, &dz);
    }
    Ok((sum * scale, grads))
}

/// Draws `draws` noise vectors per node and evaluates
/// [`generator_loss_with_noise`].
pub fn generator_loss_and_grads<R: Rng + ?Sized>(
    disc: &DiscriminatorParams,
    gen: &GeneratorParams,
    nodes: &[usize],
    draws: usize,
    rng: &mut R,
) -> Result<(f64, GeneratorGrads)> {
    let noise = draw_generator_noise(gen.dim(), nodes.len(), draws, rng);
    generator_loss_with_noise(disc, gen, nodes, draws, &noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_fakes, init_params, ModelConfig};
    use crate::rng::stream;
    use std::f64::consts::LN_2;

    fn zero_disc(n: usize, d: usize) -> DiscriminatorParams {
        DiscriminatorParams::new(Matrix::zeros(n, d), Matrix::zeros(n, d)).unwrap()
    }

    fn fake(owner: usize, role: Role, embedding: Vec<f64>) -> FakeNeighbor {
        FakeNeighbor {
            owner,
            role,
            latent: vec![0.0; embedding.len()],
            embedding,
        }
    }

    #[test]
    fn zero_scores_give_two_ln2() {
        let disc = zero_disc(3, 2);
        let fakes = vec![fake(0, Role::Source, vec![1.0, 2.0]), fake(1, Role::Target, vec![-1.0, 0.5])];
        let (loss, _) = discriminator_loss_and_grads(&disc, &[(0, 1), (1, 2)], &fakes).unwrap();
        assert!((loss - 2.0 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn positive_gradient_closed_form() {
        let s = Matrix::from_vec(2, 2, vec![0.3, -0.2, 0.1, 0.4]);
        let t = Matrix::from_vec(2, 2, vec![0.5, 0.7, -0.6, 0.9]);
        let disc = DiscriminatorParams::new(s, t).unwrap();
        let (_, grads) = discriminator_loss_and_grads(&disc, &[(0, 1)], &[]).unwrap();
        let d = sigmoid(disc.score(0, 1));
        let want: Vec<f64> = disc.target.row(1).iter().map(|t| -(1.0 - d) * t).collect();
        let got = &grads.source.rows[&0];
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-15);
        }
        assert_eq!(grads.source.rows.len(), 1);
        assert_eq!(grads.target.rows.len(), 1);
    }

    #[test]
    fn fake_embeddings_receive_no_gradient() {
        let (disc, _) = init_params(4, &ModelConfig::new(3), &mut stream(0, "i")).unwrap();
        let a = vec![fake(2, Role::Target, vec![0.2, 0.1, -0.3])];
        let b = vec![fake(2, Role::Target, vec![0.9, -0.4, 0.3])];
        let (la, ga) = discriminator_loss_and_grads(&disc, &[(0, 1)], &a).unwrap();
        let (lb, gb) = discriminator_loss_and_grads(&disc, &[(0, 1)], &b).unwrap();
        assert_ne!(la, lb);
        let keys = |g: &DiscriminatorGrads| {
            (
                g.source.rows.keys().copied().collect::<Vec<_>>(),
                g.target.rows.keys().copied().collect::<Vec<_>>(),
            )
        };
        assert_eq!(keys(&ga), keys(&gb));
        assert_eq!(keys(&ga), (vec![0, 2], vec![1]));
    }

    #[test]
    fn empty_batch_rejected() {
        let disc = zero_disc(2, 2);
        assert!(discriminator_loss_and_grads(&disc, &[], &[]).is_err());
    }

    #[test]
    fn non_finite_reports_pair() {
        let mut disc = zero_disc(2, 1);
        disc.source.set(0, 0, f64::NAN);
        match discriminator_loss_and_grads(&disc, &[(0, 1)], &[]) {
            Err(Error::NonFinite(msg)) => assert!(msg.contains("(0, 1)")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn generator_zero_scores() {
        let (_, gen) = init_params(4, &ModelConfig::new(3), &mut stream(0, "i")).unwrap();
        let disc = zero_disc(4, 3);
        let (loss, _) = generator_loss_and_grads(&disc, &gen, &[0, 1, 3], 2, &mut stream(0, "g")).unwrap();
        assert!((loss + 2.0 * LN_2).abs() < 1e-15);

        let mut config = ModelConfig::new(3);
        config.single_generator = true;
        let (_, gen) = init_params(4, &config, &mut stream(0, "i")).unwrap();
        let (loss, grads) = generator_loss_and_grads(&disc, &gen, &[2], 3, &mut stream(0, "g")).unwrap();
        assert!((loss + LN_2).abs() < 1e-15);
        assert!(grads.mlp_s.is_none());
    }

    #[test]
    fn fake_target_gradient_closed_form() {
        // ∂/∂t_fake log(1 - σ(s_u·t_fake)) = -σ(s_u·t_fake) s_u; check the
        // output-layer bias gradient of a linear single-layer network, which
        // equals the gradient at the fake embedding.
        let d = 2;
        let disc = DiscriminatorParams::new(
            Matrix::from_vec(1, d, vec![0.8, -0.5]),
            Matrix::from_vec(1, d, vec![0.0, 0.0]),
        )
        .unwrap();
        let layer = crate::model::Layer {
            weight: Matrix::identity(d),
            bias: vec![0.1, 0.2],
            activation: crate::model::Activation::Linear,
        };
        let gen = GeneratorParams {
            latent: Matrix::from_vec(1, d, vec![0.3, 0.6]),
            sigma: 0.0,
            mlp_s: None,
            mlp_t: MlpParams::from_layers(vec![layer]).unwrap(),
        };
        let (_, grads) = generator_loss_with_noise(&disc, &gen, &[0], 1, &[0.0, 0.0]).unwrap();
        let fake_t = [0.4, 0.8];
        let dval = sigmoid(0.8 * 0.4 - 0.5 * 0.8);
        let want = [-dval * 0.8, -dval * -0.5];
        for (g, w) in grads.mlp_t.layers[0].bias.iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
        assert_eq!(gen.mlp_t.forward(&[0.3, 0.6]), fake_t.to_vec());
    }

    #[test]
    fn shared_draw_sums_both_paths() {
        let (disc, gen) = init_params(3, &ModelConfig::new(4), &mut stream(2, "i")).unwrap();
        let noise = draw_generator_noise(4, 1, 1, &mut stream(0, "n"));
        let (_, both) = generator_loss_with_noise(&disc, &gen, &[1], 1, &noise).unwrap();
        let mut only_t = gen.clone();
        only_t.mlp_s = None;
        let (_, t_path) = generator_loss_with_noise(&disc, &only_t, &[1], 1, &noise).unwrap();
        let mut s_as_t = gen.clone();
        // Isolate the source path by evaluating it on its own.
        let s_net = s_as_t.mlp_s.take().unwrap();
        let z = latent_from_noise(&gen, 1, &noise);
        let trace = s_net.forward_traced(&z);
        let x = dot(trace.output(), disc.target.row(1));
        let g = -sigmoid(x);
        let grad_out: Vec<f64> = disc.target.row(1).iter().map(|t| g * t).collect();
        let s_path = s_net.backward(&trace, &grad_out, &mut s_net.zeros_like());
        for c in 0..4 {
            let want = t_path.latent.rows[&1][c] + s_path[c];
            assert!((both.latent.rows[&1][c] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn softplus_form_matches_naive_form() {
        let (disc, gen) = init_params(6, &ModelConfig::new(4), &mut stream(3, "i")).unwrap();
        let fakes = generate_fakes(&gen, &[0, 2, 5], 2, &mut stream(3, "f"));
        let positives = [(0, 1), (2, 3), (4, 5)];
        let (loss, _) = discriminator_loss_and_grads(&disc, &positives, &fakes).unwrap();
        let pos: f64 = positives.iter().map(|&(u, v)| -disc.probability(u, v).ln()).sum::<f64>() / 3.0;
        let neg: f64 = fakes
            .iter()
            .map(|f| {
                let x = match f.role {
                    Role::Source => dot(&f.embedding, disc.target.row(f.owner)),
                    Role::Target => dot(disc.source.row(f.owner), &f.embedding),
                };
                -(1.0 - 1.0 / (1.0 + (-x).exp())).ln()
            })
            .sum::<f64>()
            / fakes.len() as f64;
        assert!((loss - (pos + neg)).abs() < 1e-12);
    }
}

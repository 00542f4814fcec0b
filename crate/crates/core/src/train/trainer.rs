use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;

use super::optimizer::{optimizer_step, Grad, OptimizerKind, OptimizerState};
use crate::graph::{sample_edge_batch, sample_node_batch, DirectedGraph};
use crate::model::{
    discriminator_loss_and_grads, generate_fakes, generator_loss_and_grads, init_params, DiscriminatorGrads,
    DiscriminatorParams, GeneratorGrads, GeneratorParams, MlpShape, ModelConfig,
};
use crate::rng::{stream, StreamRng};
use crate::{Error, Result};

/// How one discriminator or generator iteration consumes the graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Schedule {
    /// One optimizer step on `batch_size` edges (or nodes) drawn uniformly
    /// with replacement.
    #[default]
    Sampled,
    /// A shuffled pass over every edge (or node) in mini-batches of
    /// `batch_size`, one optimizer step per mini-batch.
    FullPass,
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Schedule::Sampled => "sampled",
            Schedule::FullPass => "full",
        })
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sampled" => Ok(Schedule::Sampled),
            "full" => Ok(Schedule::FullPass),
            _ => Err(Error::InvalidArgument(format!("unknown schedule `{s}`"))),
        }
    }
}

/// Every hyperparameter of a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub n_epoch: usize,
    /// Generator iterations per epoch.
    pub n_g: usize,
    /// Discriminator iterations per epoch.
    pub n_d: usize,
    /// Latent draws per node (or per edge endpoint).
    pub n_s: usize,
    pub batch_size: usize,
    pub lr_d: f64,
    pub lr_g: f64,
    pub sigma: f64,
    pub seed: u64,
    pub single_generator: bool,
    pub optimizer: OptimizerKind,
    pub mlp_s: MlpShape,
    pub mlp_t: MlpShape,
    pub schedule: Schedule,
    pub deterministic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let dim = 128;
        TrainConfig {
            dim,
            n_epoch: 100,
            n_g: 5,
            n_d: 15,
            n_s: 5,
            batch_size: 1024,
            lr_d: 1e-3,
            lr_g: 1e-3,
            sigma: 1.0,
            seed: 0,
            single_generator: false,
            optimizer: OptimizerKind::adam(),
            mlp_s: MlpShape::default_for(dim),
            mlp_t: MlpShape::default_for(dim),
            schedule: Schedule::Sampled,
            deterministic: false,
        }
    }
}

impl TrainConfig {
    /// Defaults with embedding dimension `dim` (hidden widths follow it).
    pub fn with_dim(dim: usize) -> Self {
        TrainConfig {
            dim,
            mlp_s: MlpShape::default_for(dim),
            mlp_t: MlpShape::default_for(dim),
            ..Default::default()
        }
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            dim: self.dim,
            sigma: self.sigma,
            single_generator: self.single_generator,
            mlp_s: self.mlp_s.clone(),
            mlp_t: self.mlp_t.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.dim == 0 || self.n_g == 0 || self.n_d == 0 || self.n_s == 0 || self.batch_size == 0 {
            return bad("dim, n_g, n_d, n_s and batch_size must all be at least 1".into());
        }
        if !(self.lr_d > 0.0 && self.lr_g > 0.0 && self.lr_d.is_finite() && self.lr_g.is_finite()) {
            return bad(format!("learning rates must be positive, got {} / {}", self.lr_d, self.lr_g));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        for shape in [&self.mlp_s, &self.mlp_t] {
            if shape.hidden.contains(&0) {
                return bad("hidden layer widths must be positive".into());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Discriminator,
    Generator,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Discriminator => "D",
            Phase::Generator => "G",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainRecord {
    pub epoch: usize,
    pub phase: Phase,
    /// Running index over all iterations of the run.
    pub iteration: usize,
    pub loss: f64,
    /// Wall-clock seconds since training started.
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub records: Vec<TrainRecord>,
}

impl TrainReport {
    pub fn losses(&self, phase: Phase) -> Vec<f64> {
        self.records.iter().filter(|r| r.phase == phase).map(|r| r.loss).collect()
    }

    /// `epoch,phase,iter,loss,seconds`. With `with_time == false` the
    /// seconds column is left empty so the file depends only on the seed.
    pub fn to_csv(&self, with_time: bool) -> String {
        let mut out = String::from("epoch,phase,iter,loss,seconds\n");
        for r in &self.records {
            let _ = write!(out, "{},{},{},{:.12e},", r.epoch, r.phase.as_str(), r.iteration, r.loss);
            if with_time {
                let _ = write!(out, "{:.6}", r.seconds);
            }
            out.push('\n');
        }
        out
    }
}

fn disc_sizes(disc: &DiscriminatorParams) -> Vec<usize> {
    vec![disc.source.as_slice().len(), disc.target.as_slice().len()]
}

fn gen_sizes(gen: &GeneratorParams) -> Vec<usize> {
    let mut sizes = vec![gen.latent.as_slice().len()];
    for net in gen.mlp_s.iter().chain(std::iter::once(&gen.mlp_t)) {
        sizes.extend(net.tensors().iter().map(|t| t.len()));
    }
    sizes
}

/// Training state: parameters, optimizer moments and the training stream.
pub struct Trainer<'g> {
    graph: &'g DirectedGraph,
    config: TrainConfig,
    pub disc: DiscriminatorParams,
    pub gen: GeneratorParams,
    disc_state: OptimizerState,
    gen_state: OptimizerState,
    rng: StreamRng,
    iteration: usize,
    started: Instant,
    pub report: TrainReport,
}

impl<'g> Trainer<'g> {
    /// Validates the configuration and initializes parameters from the
    /// seed's `init` stream.
    pub fn new(graph: &'g DirectedGraph, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        if graph.edge_count() == 0 {
            return Err(Error::EmptyGraph);
        }
        let (disc, gen) = init_params(graph.node_count(), &config.model_config(), &mut stream(config.seed, "init"))?;
        let disc_state = OptimizerState::new(config.optimizer, &disc_sizes(&disc));
        let gen_state = OptimizerState::new(config.optimizer, &gen_sizes(&gen));
        Ok(Trainer {
            graph,
            config: config.clone(),
            disc,
            gen,
            disc_state,
            gen_state,
            rng: stream(config.seed, "train"),
            iteration: 0,
            started: Instant::now(),
            report: TrainReport::default(),
        })
    }

    fn batches<T: Copy>(&mut self, items: &[T], sample: impl Fn(&mut StreamRng) -> Vec<T>) -> Vec<Vec<T>> {
        match self.config.schedule {
            Schedule::Sampled => vec![sample(&mut self.rng)],
            Schedule::FullPass => {
                let mut all = items.to_vec();
                all.shuffle(&mut self.rng);
                all.chunks(self.config.batch_size).map(<[T]>::to_vec).collect()
            }
        }
    }

    fn apply_disc(&mut self, grads: &DiscriminatorGrads) -> Result<()> {
        let (kind, lr) = (self.config.optimizer, self.config.lr_d);
        let [s_state, t_state] = &mut self.disc_state.tensors[..] else {
            unreachable!("two discriminator tensors")
        };
        optimizer_step(kind, self.disc.source.as_mut_slice(), Grad::Rows(&grads.source), s_state, lr)?;
        optimizer_step(kind, self.disc.target.as_mut_slice(), Grad::Rows(&grads.target), t_state, lr)
    }

    fn apply_gen(&mut self, grads: &GeneratorGrads) -> Result<()> {
        let (kind, lr) = (self.config.optimizer, self.config.lr_g);
        let mut states = self.gen_state.tensors.iter_mut();
        optimizer_step(kind, self.gen.latent.as_mut_slice(), Grad::Rows(&grads.latent), states.next().unwrap(), lr)?;
        let nets = self.gen.mlp_s.iter_mut().chain(std::iter::once(&mut self.gen.mlp_t));
        let net_grads = grads.mlp_s.iter().chain(std::iter::once(&grads.mlp_t));
        for (net, g) in nets.zip(net_grads) {
            for (p, gt) in net.tensors_mut().into_iter().zip(g.tensors()) {
                optimizer_step(kind, p, Grad::Dense(gt), states.next().unwrap(), lr)?;
            }
        }
        Ok(())
    }

    /// One discriminator iteration with the generator frozen. Returns the
    /// mean loss over its optimizer steps.
    pub fn discriminator_iteration(&mut self) -> Result<f64> {
        let graph = self.graph;
        let batch_size = self.config.batch_size;
        let batches = self.batches(graph.edges(), |rng| sample_edge_batch(graph, batch_size, rng));
        let mut total = 0.0;
        for edges in &batches {
            let anchors: Vec<usize> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
            let fakes = generate_fakes(&self.gen, &anchors, self.config.n_s, &mut self.rng);
            let (loss, grads) = discriminator_loss_and_grads(&self.disc, edges, &fakes)?;
            self.apply_disc(&grads)?;
            total += loss;
        }
        Ok(total / batches.len() as f64)
    }

    /// One generator iteration with the discriminator frozen.
    pub fn generator_iteration(&mut self) -> Result<f64> {
        let n = self.graph.node_count();
        let batch_size = self.config.batch_size;
        let nodes: Vec<usize> = (0..n).collect();
        let batches = self.batches(&nodes, |rng| sample_node_batch(n, batch_size, rng));
        let mut total = 0.0;
        for nodes in &batches {
            let (loss, grads) = generator_loss_and_grads(&self.disc, &self.gen, nodes, self.config.n_s, &mut self.rng)?;
            self.apply_gen(&grads)?;
            total += loss;
        }
        Ok(total / batches.len() as f64)
    }

    fn record(&mut self, epoch: usize, phase: Phase, result: Result<f64>) -> Result<()> {
        let iteration = self.iteration;
        self.iteration += 1;
        let loss = result.map_err(|source| Error::Training {
            epoch,
            phase: phase.as_str(),
            iteration,
            source: Box::new(source),
        })?;
        self.report.records.push(TrainRecord {
            epoch,
            phase,
            iteration,
            loss,
            seconds: self.started.elapsed().as_secs_f64(),
        });
        Ok(())
    }

    /// `n_d` discriminator iterations followed by `n_g` generator iterations.
    pub fn run_epoch(&mut self, epoch: usize) -> Result<()> {
        for _ in 0..self.config.n_d {
            let r = self.discriminator_iteration();
            self.record(epoch, Phase::Discriminator, r)?;
        }
        for _ in 0..self.config.n_g {
            let r = self.generator_iteration();
            self.record(epoch, Phase::Generator, r)?;
        }
        Ok(())
    }

    pub fn finish(self) -> (DiscriminatorParams, GeneratorParams, TrainReport) {
        (self.disc, self.gen, self.report)
    }
}

/// Runs the full alternating schedule and returns the learned parameters.
pub fn train(g: &DirectedGraph, config: &TrainConfig) -> Result<(DiscriminatorParams, GeneratorParams, TrainReport)> {
    train_with_hook(g, config, |_, _, _| Ok(()))
}

/// Like [`train`], calling `hook(epoch, disc, gen)` after every epoch
/// (`epoch` counts completed epochs from 1).
pub fn train_with_hook(
    g: &DirectedGraph,
    config: &TrainConfig,
    mut hook: impl FnMut(usize, &DiscriminatorParams, &GeneratorParams) -> Result<()>,
) -> Result<(DiscriminatorParams, GeneratorParams, TrainReport)> {
    let mut trainer = Trainer::new(g, config)?;
    for epoch in 0..config.n_epoch {
        trainer.run_epoch(epoch)?;
        hook(epoch + 1, &trainer.disc, &trainer.gen)?;
    }
    Ok(trainer.finish())
}

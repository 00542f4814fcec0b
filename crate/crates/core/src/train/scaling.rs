//! Empirical per-epoch cost measurement.

use std::time::Instant;

use super::trainer::{Schedule, TrainConfig, Trainer};
use crate::graph::synthetic::random_directed;
use crate::rng::stream;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingPoint {
    pub nodes: usize,
    pub edges: usize,
    /// Median wall-clock seconds of the timed epochs.
    pub seconds_per_epoch: f64,
    /// `n_s · (n_d·|E| + n_g·|V|) · d²`
    pub cost: f64,
}

/// Times full-pass epochs on random graphs with `nodes` nodes and
/// `edges_per_node · nodes` edges for each entry of `sizes`.
///
/// The schedule is forced to [`Schedule::FullPass`] so that one epoch
/// visits every edge `n_d` times and every node `n_g` times. One warm-up
/// epoch is run before `timed_epochs` measured epochs.
pub fn measure_epoch_scaling(
    sizes: &[usize],
    edges_per_node: usize,
    config: &TrainConfig,
    timed_epochs: usize,
) -> Result<Vec<ScalingPoint>> {
    if sizes.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least three graph sizes to measure scaling, got {}",
            sizes.len()
        )));
    }
    if timed_epochs == 0 || edges_per_node == 0 {
        return Err(Error::InvalidArgument("timed epochs and edges per node must be positive".into()));
    }
    let config = TrainConfig {
        schedule: Schedule::FullPass,
        ..config.clone()
    };
    let d2 = (config.dim * config.dim) as f64;
    let mut points = Vec::with_capacity(sizes.len());
    for (i, &nodes) in sizes.iter().enumerate() {
        let g = random_directed(nodes, nodes * edges_per_node, &mut stream(config.seed, &format!("scaling/{i}")))?;
        let mut trainer = Trainer::new(&g, &config)?;
        trainer.run_epoch(0)?;
        let mut times = Vec::with_capacity(timed_epochs);
        for epoch in 1..=timed_epochs {
            let start = Instant::now();
            trainer.run_epoch(epoch)?;
            times.push(start.elapsed().as_secs_f64());
        }
        times.sort_by(f64::total_cmp);
        let cost = config.n_s as f64 * (config.n_d as f64 * g.edge_count() as f64 + config.n_g as f64 * nodes as f64) * d2;
        points.push(ScalingPoint {
            nodes,
            edges: g.edge_count(),
            seconds_per_epoch: times[times.len() / 2],
            cost,
        });
    }
    Ok(points)
}

/// Ordinary least squares `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("linear fit needs two or more paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        assert!(linear_fit(&[2.0, 2.0], &[1.0, 3.0]).is_err());
    }

    #[test]
    fn single_size_rejected() {
        let config = TrainConfig::with_dim(4);
        assert!(measure_epoch_scaling(&[100], 3, &config, 1).is_err());
        assert!(measure_epoch_scaling(&[100, 200], 3, &config, 1).is_err());
    }
}

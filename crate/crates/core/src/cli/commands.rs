use std::fmt::Write as _;

use rand::seq::IndexedRandom;

use super::manifest::{Outputs, RunManifest};
use super::settings::{CommandKind, Settings};
use crate::eval::{
    evaluate_auc, precision_at_k, run_classification, run_link_prediction, run_sparsity_sweep, ClassificationOptions,
    PairScorer,
};
use crate::graph::{load_edge_list, load_labels, read_split_manifest, write_split_manifest, LoadedGraph, SplitManifest};
use crate::model::export::format_embeddings;
use crate::model::{checkpoint, DiscriminatorParams};
use crate::rng::stream;
use crate::train::train_with_hook;
use crate::{Error, Result};

/// Embedding width the classification protocol expects per half.
const CLASSIFY_DIM: usize = 64;

pub fn run(settings: &Settings, manifest: &RunManifest, out: &mut Outputs) -> Result<()> {
    match settings.command {
        CommandKind::Train => train(settings, manifest, out),
        CommandKind::Linkpred => linkpred(settings, manifest, out),
        CommandKind::Reconstruct => reconstruct(settings, manifest, out),
        CommandKind::Classify => classify(settings, manifest, out),
        CommandKind::Sweep => sweep(settings, manifest, out),
        CommandKind::Stats => stats(settings, manifest, out),
    }
}

fn load_graph(settings: &Settings) -> Result<LoadedGraph> {
    let loaded = load_edge_list(settings.path("edges")?, settings.delimiter()?)?;
    if loaded.stats.self_loops + loaded.stats.duplicates > 0 {
        log::info!(
            "dropped {} self-loops and {} duplicate edges",
            loaded.stats.self_loops,
            loaded.stats.duplicates
        );
    }
    Ok(loaded)
}

fn load_checkpoint(settings: &Settings, node_count: usize) -> Result<DiscriminatorParams> {
    let (header, disc, _) = checkpoint::load(settings.path("checkpoint")?)?;
    if header.node_count != node_count {
        return Err(Error::Shape(format!(
            "checkpoint holds {} nodes but the graph has {node_count}",
            header.node_count
        )));
    }
    Ok(disc)
}

fn fraction_in(key: &str, v: f64, lo_closed: bool, hi_closed: bool) -> Result<()> {
    let lo_ok = if lo_closed { v >= 0.0 } else { v > 0.0 };
    let hi_ok = if hi_closed { v <= 1.0 } else { v < 1.0 };
    if lo_ok && hi_ok {
        Ok(())
    } else {
        let (l, r) = (if lo_closed { '[' } else { '(' }, if hi_closed { ']' } else { ')' });
        Err(Error::InvalidArgument(format!("--{key} must lie in {l}0, 1{r}, got {v}")))
    }
}

fn train(settings: &Settings, manifest: &RunManifest, out: &mut Outputs) -> Result<()> {
    let loaded = load_graph(settings)?;
    let graph = match settings.get("split") {
        Some(p) => read_split_manifest(p, &loaded.ids)?.train_graph(&loaded.graph),
        None => loaded.graph.clone(),
    };
    let config = settings.train_config(settings.single_seed()?)?;
    let every: usize = settings.parse("checkpoint-every")?;
    log::info!(
        "training on {} nodes / {} edges for {} epochs",
        graph.node_count(),
        graph.edge_count(),
        config.n_epoch
    );
    let (disc, gen, report) = train_with_hook(&graph, &config, |epoch, d, g| {
        if every > 0 && epoch % every == 0 {
            out.write(&format!("checkpoint_epoch{epoch}.bin"), checkpoint::encode(d, g))?;
        }
        Ok(())
    })?;
    out.write("checkpoint.bin", checkpoint::encode(&disc, &gen))?;
    out.write("embeddings.tsv", format_embeddings(&disc, &loaded.ids)?)?;
    let csv = manifest.csv_header() + &report.to_csv(!config.deterministic);
    out.write("train_report.csv", csv)?;
    Ok(())
}

fn linkpred(settings: &Settings, manifest: &RunManifest, out: &mut Outputs) -> Result<()> {
    let removal: f64 = settings.parse("removal")?;
    fraction_in("removal", removal, true, false)?;
    let reversed: Vec<f64> = settings.list("reversed")?;
    for &f in &reversed {
        fraction_in("reversed", f, true, true)?;
    }
    let loaded = load_graph(settings)?;
    let mut csv = manifest.csv_header() + "seed,reversed_fraction,auc\n";

    match (settings.get("checkpoint"), settings.get("split")) {
        (Some(_), Some(split_path)) => {
            let seed = settings.single_seed()?;
            let split = read_split_manifest(split_path, &loaded.ids)?;
            let disc = load_checkpoint(settings, loaded.graph.node_count())?;
            for f in &reversed {
                let (_, set) = split
                    .test_sets
                    .iter()
                    .find(|(g, _)| g == f)
                    .ok_or_else(|| Error::InvalidArgument(format!("split has no test set for reversed fraction {f}")))?;
                let auc = evaluate_auc(&disc, set, PairScorer::Directed)?;
                let _ = writeln!(csv, "{seed},{f},{auc}");
            }
        }
        (None, None) => {
            for seed in settings.seeds()? {
                let config = settings.train_config(seed)?;
                let run = run_link_prediction(&loaded.graph, &config, removal, &reversed, seed)?;
                for (f, auc) in &run.aucs {
                    log::info!("seed {seed} reversed {f}: AUC {auc:.4}");
                    let _ = writeln!(csv, "{seed},{f},{auc}");
                }
                let split = SplitManifest {
                    removal_fraction: removal,
                    held_out: run.split.held_out.clone(),
                    test_sets: run.test_sets.clone(),
                };
                let split_path = out.reserve(&format!("split_seed{seed}.tsv"));
                write_split_manifest(&split_path, &split, &loaded.ids)?;
                out.write(&format!("checkpoint_seed{seed}.bin"), checkpoint::encode(&run.disc, &run.gen))?;
            }
        }
        _ => {
            return Err(Error::InvalidArgument(
                "scoring a saved model needs both --checkpoint and --split".into(),
            ))
        }
    }
    out.write("linkpred.csv", csv)?;
    Ok(())
}

fn reconstruct(settings: &Settings, manifest: &RunManifest, out: &mut Outputs) -> Result<()> {
    let frac: f64 = settings.parse("sample-frac")?;
    fraction_in("sample-frac", frac, false, true)?;
    let ks: Vec<usize> = settings.list("k")?;
    let seed = settings.single_seed()?;
    let loaded = load_graph(settings)?;
    let graph = &loaded.graph;
    let disc = load_checkpoint(settings, graph.node_count())?;

    let eligible: Vec<usize> = (0..graph.node_count()).filter(|&u| graph.out_degree(u) > 0).collect();
    let count = ((frac * eligible.len() as f64).ceil() as usize).clamp(1, eligible.len());
    let mut sources: Vec<usize> = eligible
        .choose_multiple(&mut stream(seed, "reconstruct"), count)
        .copied()
        .collect();
    sources.sort_unstable();
    log::info!("ranking from {} of {} nodes with out-edges", sources.len(), eligible.len());

    let precision = precision_at_k(&disc, graph, &sources, &ks)?;
    let mut csv = manifest.csv_header();
    let _ = writeln!(csv, "# sampled_sources={}", sources.len());
    csv.push_str("k,mean_precision\n");
    for (k, p) in ks.iter().zip(&precision) {
        let _ = writeln!(csv, "{k},{p}");
    }
    out.write("reconstruct.csv", csv)?;
    Ok(())
}

fn classify(settings: &Settings, manifest: &RunManifest, out: &mut Outputs) -> Result<()> {
    let ratios: Vec<f64> = settings.list("train-ratios")?;
    for &r in &ratios {
        fraction_in("train-ratios", r, false, false)?;
    }
    let options = ClassificationOptions {
        repeats: settings.parse("repeats")?,
        l2: settings.parse("l2")?,
        iters: settings.parse("iters")?,
        lr: settings.parse("logreg-lr")?,
        shuffle_labels: settings.flag("shuffle-labels")?,
        ..Default::default()
    };
    let seed = settings.single_seed()?;
    let loaded = load_graph(settings)?;
    let disc = load_checkpoint(settings, loaded.graph.node_count())?;
    if disc.dim() != CLASSIFY_DIM {
        log::warn!("checkpoint has d = {}; classification is normally run at d = {CLASSIFY_DIM}", disc.dim());
    }
    let labels = load_labels(settings.path("labels")?, &loaded.ids, settings.delimiter()?)?;
    let rows = run_classification(&disc, &labels, &ratios, &options, &mut stream(seed, "classify"))?;
    let mut csv = manifest.csv_header() + "train_ratio,micro_f1,macro_f1\n";
    for r in rows {
        let _ = writeln!(csv, "{},{},{}", r.train_ratio, r.micro_f1, r.macro_f1);
    }
    out.write("classify.csv", csv)?;
    Ok(())
}

fn sweep(settings: &Settings, manifest: &RunManifest, out: &mut Outputs) -> Result<()> {
    let removal: f64 = settings.parse("removal")?;
    fraction_in("removal", removal, true, false)?;
    let ratios: Vec<f64> = settings.list("ratios")?;
    for &r in &ratios {
        fraction_in("ratios", r, false, true)?;
    }
    let seed = settings.single_seed()?;
    let config = settings.train_config(seed)?;
    let loaded = load_graph(settings)?;
    let points = run_sparsity_sweep(&loaded.graph, &config, removal, &ratios, seed)?;
    let mut csv = manifest.csv_header() + "edge_ratio,auc\n";
    for p in points {
        log::info!("edge ratio {} ({} edges): AUC {:.4}", p.edge_ratio, p.train_edges, p.auc);
        let _ = writeln!(csv, "{},{}", p.edge_ratio, p.auc);
    }
    out.write("sweep.csv", csv)?;
    Ok(())
}

fn stats(settings: &Settings, _manifest: &RunManifest, out: &mut Outputs) -> Result<()> {
    let loaded = load_graph(settings)?;
    let s = loaded.graph.summary();
    let mut text = String::new();
    let _ = writeln!(text, "nodes\t{}", s.nodes);
    let _ = writeln!(text, "edges\t{}", s.edges);
    let _ = writeln!(text, "avg_degree\t{:.4}", s.avg_degree);
    let _ = writeln!(text, "zero_in_degree\t{}", s.zero_in);
    let _ = writeln!(text, "zero_out_degree\t{}", s.zero_out);
    let _ = writeln!(text, "isolated\t{}", s.isolated);
    let _ = writeln!(text, "bidirectional_edges\t{}", s.bidirectional);
    let _ = writeln!(text, "self_loops_dropped\t{}", loaded.stats.self_loops);
    let _ = writeln!(text, "duplicates_dropped\t{}", loaded.stats.duplicates);
    print!("{text}");
    out.write("stats.txt", text)?;
    Ok(())
}

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::graph::Delimiter;
use crate::model::{Activation, MlpShape};
use crate::train::{OptimizerKind, Schedule, TrainConfig};
use crate::{Error, Result};

/// One configurable setting. `name` is both the long flag and the config
/// file key.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Key {
    pub name: &'static str,
    pub flag: bool,
    pub default: Option<&'static str>,
    pub value_name: &'static str,
    pub help: &'static str,
}

const fn value(name: &'static str, default: Option<&'static str>, value_name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        flag: false,
        default,
        value_name,
        help,
    }
}

const fn flag(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        flag: true,
        default: Some("false"),
        value_name: "",
        help,
    }
}

pub(crate) const GLOBAL: &[Key] = &[
    value("seed", Some("0"), "SEED", "Seed: a number, a list `1,2,5` or an inclusive range `1..10`"),
    flag("deterministic", "Omit wall-clock columns so reruns are byte-identical"),
    value("threads", Some("0"), "N", "Worker threads (0 = one per core)"),
];

/// Keys that are accepted but never recorded in a manifest.
pub(crate) const UNRECORDED: &[&str] = &["out"];

const INPUT: &[Key] = &[
    value("edges", None, "FILE", "Edge list, one `source target` pair per line"),
    value("delimiter", Some("whitespace"), "DELIM", "Field separator: whitespace, tab, comma, space or one character"),
];

const TRAINING: &[Key] = &[
    value("dim", Some("128"), "D", "Dimension of each of the source and target vectors"),
    value("epochs", Some("100"), "N", "Training epochs"),
    value("n-g", Some("5"), "N", "Generator iterations per epoch"),
    value("n-d", Some("15"), "N", "Discriminator iterations per epoch"),
    value("n-s", Some("5"), "N", "Latent draws per node"),
    value("batch-size", Some("1024"), "N", "Edges (discriminator) or nodes (generator) per step"),
    value("lr-d", Some("0.001"), "LR", "Discriminator learning rate"),
    value("lr-g", Some("0.001"), "LR", "Generator learning rate"),
    value("sigma", Some("1"), "S", "Standard deviation of the latent noise"),
    value("optimizer", Some("adam"), "NAME", "adam or sgd"),
    value("activation", Some("leaky_relu:0.2"), "ACT", "Hidden activation: relu, leaky_relu[:slope], tanh, linear"),
    value("mlp-s-layers", None, "WIDTHS", "Hidden widths of the source generator, or `none` [default: dim]"),
    value("mlp-t-layers", None, "WIDTHS", "Hidden widths of the target generator, or `none` [default: dim]"),
    flag("single-generator", "Train only the target generator"),
    value("schedule", Some("sampled"), "NAME", "sampled (one batch per iteration) or full (every edge per iteration)"),
];

const TRAIN_ONLY: &[Key] = &[
    value("split", None, "FILE", "Train on the training graph of a saved split"),
    value("checkpoint-every", Some("0"), "N", "Also save a checkpoint every N epochs (0 = off)"),
];

const LINKPRED: &[Key] = &[
    value("removal", Some("0.5"), "F", "Fraction of edges held out for testing"),
    value("reversed", Some("0,0.5,1"), "LIST", "Fractions of test positives whose reversal is used as a negative"),
    value("checkpoint", None, "FILE", "Score this checkpoint instead of training (needs --split)"),
    value("split", None, "FILE", "Saved split to score against (needs --checkpoint)"),
];

const RECONSTRUCT: &[Key] = &[
    value("checkpoint", None, "FILE", "Trained checkpoint"),
    value("sample-frac", Some("0.1"), "F", "Fraction of nodes with out-edges used as sources"),
    value("k", Some("1,2,5,10,20,50,100"), "LIST", "Cut-offs for precision@k"),
];

const CLASSIFY: &[Key] = &[
    value("checkpoint", None, "FILE", "Trained checkpoint"),
    value("labels", None, "FILE", "Node labels, one `node label` pair per line"),
    value("train-ratios", Some("0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"), "LIST", "Fractions of labeled nodes used for training"),
    value("repeats", Some("10"), "N", "Random splits averaged per ratio"),
    flag("shuffle-labels", "Permute labels first (null-model control)"),
    value("l2", Some("0.0001"), "L", "L2 penalty of the logistic regression"),
    value("iters", Some("500"), "N", "Gradient steps of the logistic regression"),
    value("logreg-lr", Some("0.1"), "LR", "Step size of the logistic regression"),
];

const SWEEP: &[Key] = &[
    value("removal", Some("0.5"), "F", "Fraction of edges held out for testing"),
    value("ratios", Some("0.2,0.4,0.6,0.8,1"), "LIST", "Fractions of training edges kept"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Train,
    Linkpred,
    Reconstruct,
    Classify,
    Sweep,
    Stats,
}

impl CommandKind {
    pub const ALL: [CommandKind; 6] = [
        CommandKind::Train,
        CommandKind::Linkpred,
        CommandKind::Reconstruct,
        CommandKind::Classify,
        CommandKind::Sweep,
        CommandKind::Stats,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Train => "train",
            CommandKind::Linkpred => "linkpred",
            CommandKind::Reconstruct => "reconstruct",
            CommandKind::Classify => "classify",
            CommandKind::Sweep => "sweep",
            CommandKind::Stats => "stats",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            CommandKind::Train => "Train embeddings and write a checkpoint, embeddings and a loss report",
            CommandKind::Linkpred => "Link prediction AUC with reversed-edge negatives",
            CommandKind::Reconstruct => "Precision@k of graph reconstruction from a checkpoint",
            CommandKind::Classify => "Node classification F1 from a checkpoint",
            CommandKind::Sweep => "Link prediction AUC as training edges are removed",
            CommandKind::Stats => "Print node, edge and degree counts of a graph",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Command-specific keys (globals excluded).
    pub(crate) fn keys(self) -> Vec<Key> {
        let groups: &[&[Key]] = match self {
            CommandKind::Train => &[INPUT, TRAINING, TRAIN_ONLY],
            CommandKind::Linkpred => &[INPUT, TRAINING, LINKPRED],
            CommandKind::Reconstruct => &[INPUT, RECONSTRUCT],
            CommandKind::Classify => &[INPUT, CLASSIFY],
            CommandKind::Sweep => &[INPUT, TRAINING, SWEEP],
            CommandKind::Stats => &[INPUT],
        };
        groups.iter().flat_map(|g| g.iter().copied()).collect()
    }

    fn all_keys(self) -> Vec<Key> {
        let mut keys = GLOBAL.to_vec();
        keys.extend(self.keys());
        keys
    }

    fn trains(self) -> bool {
        matches!(self, CommandKind::Train | CommandKind::Linkpred | CommandKind::Sweep)
    }
}

fn known_anywhere(name: &str) -> bool {
    UNRECORDED.contains(&name)
        || GLOBAL.iter().any(|k| k.name == name)
        || CommandKind::ALL.iter().any(|c| c.keys().iter().any(|k| k.name == name))
}

const PATH_KEYS: &[&str] = &["edges", "labels", "checkpoint", "split"];

/// Inputs whose digests are recorded, in manifest order.
pub(crate) fn input_keys() -> &'static [&'static str] {
    PATH_KEYS
}

/// Parses flat `key=value` text. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, val) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message: format!("expected key=value, got `{line}`"),
        })?;
        entries.push((key.trim().to_string(), val.trim().to_string()));
    }
    Ok(entries)
}

/// Fully resolved settings for one command: built-in defaults, then the
/// config file, then the command line.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub command: CommandKind,
    pub values: BTreeMap<String, String>,
    /// `meta.input.<key>.sha256` entries found in the config file.
    pub expected_digests: BTreeMap<String, String>,
}

impl Settings {
    pub fn resolve(
        command: CommandKind,
        config_file: Option<&Path>,
        cli: &BTreeMap<String, String>,
    ) -> Result<Settings> {
        let keys = command.all_keys();
        let applies = |name: &str| keys.iter().any(|k| k.name == name) || UNRECORDED.contains(&name);

        let mut values: BTreeMap<String, String> = keys
            .iter()
            .filter_map(|k| k.default.map(|d| (k.name.to_string(), d.to_string())))
            .collect();
        let mut explicit: Vec<String> = Vec::new();
        let mut expected_digests = BTreeMap::new();

        if let Some(path) = config_file {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (key, val) in parse_config(&text, path)? {
                if let Some(rest) = key.strip_prefix("meta.") {
                    if let Some(input) = rest.strip_prefix("input.").and_then(|r| r.strip_suffix(".sha256")) {
                        expected_digests.insert(input.to_string(), val);
                    }
                    continue;
                }
                if !known_anywhere(&key) {
                    return Err(Error::InvalidArgument(format!("unknown key `{key}` in {}", path.display())));
                }
                if !applies(&key) {
                    log::warn!("ignoring `{key}` from {}: not used by `{}`", path.display(), command.name());
                    continue;
                }
                explicit.push(key.clone());
                values.insert(key, val);
            }
        }
        for (key, val) in cli {
            if !applies(key) {
                return Err(Error::InvalidArgument(format!("`--{key}` is not accepted by `{}`", command.name())));
            }
            explicit.push(key.clone());
            values.insert(key.clone(), val.clone());
        }

        if command.trains() {
            let single = parse_bool("single-generator", &values["single-generator"])?;
            if single && explicit.iter().any(|k| k == "mlp-s-layers") {
                return Err(Error::InvalidArgument(
                    "--single-generator has no source generator; drop --mlp-s-layers".into(),
                ));
            }
            let dim = values["dim"].clone();
            if single {
                values.remove("mlp-s-layers");
            } else {
                values.entry("mlp-s-layers".into()).or_insert_with(|| dim.clone());
            }
            values.entry("mlp-t-layers".into()).or_insert(dim);
        }

        for key in PATH_KEYS {
            if let Some(p) = values.get_mut(*key) {
                if let Ok(abs) = fs::canonicalize(&*p) {
                    *p = abs.to_string_lossy().into_owned();
                }
            }
        }

        Ok(Settings {
            command,
            values,
            expected_digests,
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn required(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::InvalidArgument(format!("`{}` needs --{key}", self.command.name())))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        self.required(key).map(PathBuf::from)
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        parse_value(key, self.required(key)?)
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: Display,
    {
        let raw = self.required(key)?;
        let items: Vec<T> = raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_value(key, s))
            .collect::<Result<_>>()?;
        if items.is_empty() {
            return Err(Error::InvalidArgument(format!("--{key} is empty")));
        }
        Ok(items)
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        self.get(key).map_or(Ok(false), |v| parse_bool(key, v))
    }

    pub fn delimiter(&self) -> Result<Delimiter> {
        self.parse("delimiter")
    }

    pub fn seeds(&self) -> Result<Vec<u64>> {
        parse_seeds(self.required("seed")?)
    }

    pub fn single_seed(&self) -> Result<u64> {
        match self.seeds()?.as_slice() {
            [s] => Ok(*s),
            _ => Err(Error::InvalidArgument(format!("`{}` takes a single --seed", self.command.name()))),
        }
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig> {
        let dim: usize = self.parse("dim")?;
        let activation: Activation = self.parse("activation")?;
        let single_generator = self.flag("single-generator")?;
        let shape = |key: &str| -> Result<MlpShape> {
            let hidden = match self.required(key)? {
                "none" => Vec::new(),
                _ => self.list(key)?,
            };
            Ok(MlpShape { hidden, activation })
        };
        let config = TrainConfig {
            dim,
            n_epoch: self.parse("epochs")?,
            n_g: self.parse("n-g")?,
            n_d: self.parse("n-d")?,
            n_s: self.parse("n-s")?,
            batch_size: self.parse("batch-size")?,
            lr_d: self.parse("lr-d")?,
            lr_g: self.parse("lr-g")?,
            sigma: self.parse("sigma")?,
            seed,
            single_generator,
            optimizer: self.parse::<OptimizerKind>("optimizer")?,
            mlp_s: if single_generator {
                MlpShape::default_for(dim)
            } else {
                shape("mlp-s-layers")?
            },
            mlp_t: shape("mlp-t-layers")?,
            schedule: self.parse::<Schedule>("schedule")?,
            deterministic: self.flag("deterministic")?,
        };
        config.validate()?;
        Ok(config)
    }

    /// Entries written to manifests and CSV headers.
    pub fn recorded(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values
            .iter()
            .filter(|(k, _)| !UNRECORDED.contains(&k.as_str()))
            .map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: Display,
{
    raw.parse()
        .map_err(|e| Error::InvalidArgument(format!("invalid value `{raw}` for --{key}: {e}")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("invalid value `{raw}` for --{key}: expected true or false"))),
    }
}

/// `7`, `1,2,5` or the inclusive range `1..10`.
pub fn parse_seeds(raw: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = raw.split_once("..") {
        let lo: u64 = parse_value("seed", a.trim())?;
        let hi: u64 = parse_value("seed", b.trim())?;
        if lo > hi {
            return Err(Error::InvalidArgument(format!("empty seed range `{raw}`")));
        }
        return Ok((lo..=hi).collect());
    }
    let seeds: Vec<u64> = raw
        .split(',')
        .map(|s| parse_value("seed", s.trim()))
        .collect::<Result<_>>()?;
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn seed_forms() {
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("1,2,5").unwrap(), vec![1, 2, 5]);
        assert_eq!(parse_seeds("1..10").unwrap().len(), 10);
        assert!(parse_seeds("3..1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn three_layers_of_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "# comment\ndim = 32\nepochs=7\nmeta.command=train\n").unwrap();
        let s = Settings::resolve(CommandKind::Train, Some(&cfg), &cli(&[("dim", "16")])).unwrap();
        assert_eq!(s.get("dim"), Some("16"));
        assert_eq!(s.get("epochs"), Some("7"));
        assert_eq!(s.get("n-d"), Some("15"));
        assert_eq!(s.get("mlp-t-layers"), Some("16"));
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "dimension=3\n").unwrap();
        assert!(Settings::resolve(CommandKind::Train, Some(&cfg), &BTreeMap::new()).is_err());
        fs::write(&cfg, "dim\n").unwrap();
        assert!(Settings::resolve(CommandKind::Train, Some(&cfg), &BTreeMap::new()).is_err());
    }

    #[test]
    fn key_of_another_command_is_ignored_in_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "labels=x.tsv\n").unwrap();
        let s = Settings::resolve(CommandKind::Train, Some(&cfg), &BTreeMap::new()).unwrap();
        assert_eq!(s.get("labels"), None);
    }

    #[test]
    fn single_generator_conflicts_with_source_layers() {
        let args = cli(&[("single-generator", "true"), ("mlp-s-layers", "8")]);
        assert!(Settings::resolve(CommandKind::Train, None, &args).is_err());
        let s = Settings::resolve(CommandKind::Train, None, &cli(&[("single-generator", "true")])).unwrap();
        assert_eq!(s.get("mlp-s-layers"), None);
        assert!(s.train_config(0).unwrap().single_generator);
    }

    #[test]
    fn defaults_build_the_default_config() {
        let s = Settings::resolve(CommandKind::Train, None, &BTreeMap::new()).unwrap();
        assert_eq!(s.train_config(0).unwrap(), TrainConfig::default());
    }

    #[test]
    fn bad_values_name_their_key() {
        let s = Settings::resolve(CommandKind::Train, None, &cli(&[("dim", "abc")])).unwrap();
        let err = s.train_config(0).unwrap_err().to_string();
        assert!(err.contains("--dim"), "{err}");
    }
}

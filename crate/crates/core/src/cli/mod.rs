//! The `dggan` command-line front-end.
//!
//! Each setting is a long flag and, under the same name, a key in a flat
//! `key=value` config file. Values resolve command line first, then the
//! `--config` file, then built-in defaults. Every command writes
//! `manifest.txt` into `--out`; passing it back through `--config`
//! repeats the run.

mod commands;
mod manifest;
mod settings;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command};

pub use manifest::{sha256_file, Outputs, RunManifest, MANIFEST_FILE};
pub use settings::{parse_config, parse_seeds, CommandKind, Settings};

use settings::{Key, GLOBAL};
use crate::{Error, Result};

/// Exit status for bad flags, bad config values and violated preconditions.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for failures while running a well-formed command.
pub const EXIT_FAILURE: i32 = 1;

fn key_arg(key: &Key) -> Arg {
    let arg = Arg::new(key.name).long(key.name).help(key.help);
    if key.flag {
        return arg.action(ArgAction::SetTrue);
    }
    let arg = arg.value_name(key.value_name).action(ArgAction::Set);
    match key.default {
        // Shown in help only; defaults are applied during resolution so a
        // config file can still override them.
        Some(d) => arg.help(format!("{} [default: {d}]", key.help)),
        None => arg,
    }
}

pub fn command() -> Command {
    let mut root = Command::new("dggan")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Adversarial directed-graph embedding and evaluation")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .global(true)
                .help("Flat key=value file of settings (a manifest works)"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("DIR")
                .global(true)
                .help("Output directory [default: .]"),
        );
    for key in GLOBAL {
        root = root.arg(key_arg(key).global(true));
    }
    for kind in CommandKind::ALL {
        let sub = Command::new(kind.name())
            .about(kind.about())
            .args(kind.keys().iter().map(key_arg));
        root = root.subcommand(sub);
    }
    root
}

fn cli_values(kind: CommandKind, m: &ArgMatches) -> BTreeMap<String, String> {
    let mut values = BTreeMap::new();
    for key in GLOBAL.iter().copied().chain(kind.keys()) {
        if key.flag {
            if m.get_flag(key.name) {
                values.insert(key.name.to_string(), "true".to_string());
            }
        } else if let Some(v) = m.get_one::<String>(key.name) {
            values.insert(key.name.to_string(), v.clone());
        }
    }
    if let Some(out) = m.get_one::<String>("out") {
        values.insert("out".into(), out.clone());
    }
    values
}

/// Resolves settings for the command selected in `matches`.
pub fn resolve(matches: &ArgMatches) -> Result<Settings> {
    let (name, sub) = matches
        .subcommand()
        .ok_or_else(|| Error::InvalidArgument("no command given".into()))?;
    let kind = CommandKind::from_name(name).ok_or_else(|| Error::InvalidArgument(format!("unknown command `{name}`")))?;
    let config = sub.get_one::<String>("config").map(PathBuf::from);
    Settings::resolve(kind, config.as_deref(), &cli_values(kind, sub))
}

/// Runs a resolved command, writing outputs and the manifest. On failure
/// nothing written by this invocation is left behind.
pub fn execute(settings: &Settings) -> Result<Vec<PathBuf>> {
    let threads: usize = settings.parse("threads")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {threads} threads: {e}")))?;
    let out_dir = PathBuf::from(settings.get("out").unwrap_or("."));
    let mut manifest = RunManifest::begin(settings)?;
    let mut outputs = Outputs::create(&out_dir)?;
    match pool.install(|| commands::run(settings, &manifest, &mut outputs)) {
        Ok(()) => {
            manifest.finish();
            if let Err(e) = outputs.write(MANIFEST_FILE, manifest.render()) {
                outputs.discard();
                return Err(e);
            }
            Ok(outputs.written().to_vec())
        }
        Err(e) => {
            outputs.discard();
            Err(e)
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Training { source, .. } => exit_code(source),
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match resolve(&matches).and_then(|s| execute(&s)) {
        Ok(files) => {
            for f in files {
                log::info!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

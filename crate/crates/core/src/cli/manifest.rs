use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use super::settings::{input_keys, Settings};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Record of one command invocation. Every key other than `meta.*` can be
/// fed back through `--config`.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub settings: BTreeMap<String, String>,
    /// Input key to SHA-256 of the file contents.
    pub inputs: BTreeMap<String, String>,
    pub start: f64,
    pub end: Option<f64>,
    /// Leave the timestamps out of the rendered file.
    pub omit_times: bool,
}

impl RunManifest {
    /// Starts the clock and digests every input file named in `settings`.
    pub fn begin(settings: &Settings) -> Result<Self> {
        let start = unix_now();
        let mut inputs = BTreeMap::new();
        for key in input_keys() {
            if let Some(p) = settings.get(key) {
                let digest = sha256_file(Path::new(p))?;
                if let Some(expected) = settings.expected_digests.get(*key) {
                    if *expected != digest {
                        log::warn!("{key} `{p}` differs from the file recorded in the config (sha256 {expected})");
                    }
                }
                inputs.insert(key.to_string(), digest);
            }
        }
        Ok(RunManifest {
            command: settings.command.name().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            settings: settings.recorded().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            inputs,
            start,
            end: None,
            omit_times: settings.flag("deterministic")?,
        })
    }

    pub fn finish(&mut self) {
        let end = unix_now();
        self.end = Some(end);
        log::info!("{} finished in {:.3}s", self.command, end - self.start);
    }

    /// Lines shared by the manifest and every CSV header; free of
    /// timestamps so they are stable across reruns.
    pub fn stable_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("meta.command={}", self.command),
            format!("meta.version={}", self.version),
        ];
        lines.extend(self.inputs.iter().map(|(k, d)| format!("meta.input.{k}.sha256={d}")));
        lines.extend(self.settings.iter().map(|(k, v)| format!("{k}={v}")));
        lines
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# dggan run manifest\n");
        for line in self.stable_lines() {
            out.push_str(&line);
            out.push('\n');
        }
        if self.omit_times {
            return out;
        }
        let _ = writeln!(out, "meta.start={:.3}", self.start);
        if let Some(end) = self.end {
            let _ = writeln!(out, "meta.end={end:.3}");
        }
        out
    }

    /// `# key=value` lines to prefix CSV outputs with.
    pub fn csv_header(&self) -> String {
        self.stable_lines().iter().map(|l| format!("# {l}\n")).collect()
    }
}

/// Files written by one command, removed again if the command fails.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
        })
    }

    /// Path for a file the caller writes itself; it is still cleaned up on
    /// failure.
    pub fn reserve(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        if !self.written.contains(&path) {
            self.written.push(path.clone());
        }
        path
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.reserve(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Deletes everything written so far.
    pub fn discard(self) {
        for path in &self.written {
            if let Err(e) = fs::remove_file(path) {
                if e.kind() != std::io::ErrorKind::NotFound {
                    log::warn!("could not remove partial output {}: {e}", path.display());
                }
            }
        }
        if self.created_dir {
            // Only succeeds if nothing else landed there.
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn discard_removes_written_files_and_new_dir() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("run");
        let mut out = Outputs::create(&dir).unwrap();
        out.write("a.csv", "x").unwrap();
        out.write("b.csv", "y").unwrap();
        out.discard();
        assert!(!dir.exists());
    }

    #[test]
    fn discard_keeps_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("keep.txt"), "k").unwrap();
        let mut out = Outputs::create(dir.path()).unwrap();
        out.write("a.csv", "x").unwrap();
        out.discard();
        assert!(dir.path().join("keep.txt").exists());
        assert!(!dir.path().join("a.csv").exists());
    }
}

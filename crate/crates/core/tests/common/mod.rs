#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dggan::graph::DirectedGraph;

pub fn dggan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dggan"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("failed to launch dggan")
}

/// Runs `dggan` and panics with its stderr unless it exits 0.
pub fn dggan_ok(args: &[&str]) -> Output {
    let out = dggan(args);
    assert!(
        out.status.success(),
        "dggan {args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes `graph` as a tab-separated edge list with labels `n<id>`.
pub fn write_graph(dir: &Path, name: &str, graph: &DirectedGraph) -> PathBuf {
    let mut text = String::new();
    for &(u, v) in graph.edges() {
        let _ = writeln!(text, "n{u}\tn{v}");
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

/// Data rows of a CSV output (comment lines and the header dropped).
pub fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

pub fn csv_header(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    text.lines().find(|l| !l.starts_with('#')).unwrap().to_string()
}

/// Every regular file in `dir`, sorted by name.
pub fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    files
}

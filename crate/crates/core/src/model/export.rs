//! Text export of learned embeddings.
//!
//! First line `node_count dim`, then one line per node:
//! `label<TAB>s_1 … s_d<TAB>t_1 … t_d`, values in scientific notation with
//! nine significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::DiscriminatorParams;
use crate::graph::NodeIdMap;
use crate::{Error, Result};

fn push_row(out: &mut String, row: &[f64]) {
    for (i, x) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x:.8e}");
    }
}

pub fn format_embeddings(disc: &DiscriminatorParams, ids: &NodeIdMap) -> Result<String> {
    if ids.len() != disc.node_count() {
        return Err(Error::Shape(format!(
            "{} labels for {} embedded nodes",
            ids.len(),
            disc.node_count()
        )));
    }
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", disc.node_count(), disc.dim());
    for u in 0..disc.node_count() {
        out.push_str(ids.label(u));
        out.push('\t');
        push_row(&mut out, disc.source.row(u));
        out.push('\t');
        push_row(&mut out, disc.target.row(u));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_embeddings(path: impl AsRef<Path>, disc: &DiscriminatorParams, ids: &NodeIdMap) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_embeddings(disc, ids)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    #[test]
    fn layout() {
        let disc = DiscriminatorParams::new(
            Matrix::from_vec(2, 2, vec![1.0, -0.5, 0.123456789123, 0.0]),
            Matrix::from_vec(2, 2, vec![2.0, 3.0, -1e-10, 4.0]),
        )
        .unwrap();
        let mut ids = NodeIdMap::new();
        ids.intern("a");
        ids.intern("b");
        let text = format_embeddings(&disc, &ids).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "2 2");
        assert_eq!(lines[1], "a\t1.00000000e0 -5.00000000e-1\t2.00000000e0 3.00000000e0");
        assert_eq!(lines[2], "b\t1.23456789e-1 0.00000000e0\t-1.00000000e-10 4.00000000e0");
        let parsed: f64 = lines[2].split('\t').nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
        assert!((parsed - 0.123456789).abs() < 1e-12);
        assert!(format_embeddings(&disc, &NodeIdMap::identity(3)).is_err());
    }
}

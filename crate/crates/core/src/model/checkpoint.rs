//! Binary checkpoint format.
//!
//! ```text
//! magic            8 bytes  "DGGANCKP"
//! version          u32
//! node_count       u64
//! dim              u64
//! sigma            f64
//! single_generator u8
//! network count    u8       1 (target only) or 2 (source, target)
//! per network:     u32 layer count, then per layer
//!                  u64 input, u64 output, u8 activation tag, f64 activation parameter
//! S, T, Z          node_count × dim each
//! per network, per layer: weight (output × input), bias (output)
//! ```
//!
//! All integers and floats are little-endian; matrices are row-major.

use std::fs;
use std::path::Path;

use super::{Activation, DiscriminatorParams, GeneratorParams, Layer, MlpParams};
use crate::linalg::Matrix;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DGGANCKP";
pub const VERSION: u32 = 1;

/// Header fields, readable without decoding the tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointHeader {
    pub node_count: usize,
    pub dim: usize,
    pub sigma: f64,
    pub single_generator: bool,
    /// `(input, output, activation)` per layer, source network first when present.
    pub networks: Vec<Vec<(usize, usize, Activation)>>,
}

fn network_shape(mlp: &MlpParams) -> Vec<(usize, usize, Activation)> {
    mlp.layers
        .iter()
        .map(|l| (l.input_dim(), l.output_dim(), l.activation))
        .collect()
}

pub fn encode(disc: &DiscriminatorParams, gen: &GeneratorParams) -> Vec<u8> {
    let networks: Vec<&MlpParams> = gen.mlp_s.iter().chain(std::iter::once(&gen.mlp_t)).collect();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(disc.node_count() as u64).to_le_bytes());
    out.extend_from_slice(&(disc.dim() as u64).to_le_bytes());
    out.extend_from_slice(&gen.sigma.to_le_bytes());
    out.push(u8::from(gen.single_generator()));
    out.push(networks.len() as u8);
    for net in &networks {
        out.extend_from_slice(&(net.layers.len() as u32).to_le_bytes());
        for (input, output, act) in network_shape(net) {
            let (tag, param) = act.tag();
            out.extend_from_slice(&(input as u64).to_le_bytes());
            out.extend_from_slice(&(output as u64).to_le_bytes());
            out.push(tag);
            out.extend_from_slice(&param.to_le_bytes());
        }
    }
    let mut put = |values: &[f64]| {
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    put(disc.source.as_slice());
    put(disc.target.as_slice());
    put(gen.latent.as_slice());
    for net in &networks {
        for layer in &net.layers {
            put(layer.weight.as_slice());
            put(&layer.bias);
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| Error::Checkpoint(format!("size {v} too large")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n
            .checked_mul(8)
            .ok_or_else(|| Error::Checkpoint("tensor size overflows".into()))?;
        Ok(self
            .take(len)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn decode_header(r: &mut Reader<'_>) -> Result<CheckpointHeader> {
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let node_count = r.u64()?;
    let dim = r.u64()?;
    let sigma = r.f64()?;
    let single_generator = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(Error::Checkpoint(format!("bad generator flag {other}"))),
    };
    let count = r.u8()? as usize;
    if count != if single_generator { 1 } else { 2 } {
        return Err(Error::Checkpoint(format!("{count} networks inconsistent with generator flag")));
    }
    let mut networks = Vec::with_capacity(count);
    for _ in 0..count {
        let layers = r.u32()? as usize;
        let mut shape = Vec::with_capacity(layers);
        for _ in 0..layers {
            let input = r.u64()?;
            let output = r.u64()?;
            let tag = r.u8()?;
            let param = r.f64()?;
            let act = Activation::from_tag(tag, param)
                .ok_or_else(|| Error::Checkpoint(format!("unknown activation tag {tag}")))?;
            shape.push((input, output, act));
        }
        networks.push(shape);
    }
    Ok(CheckpointHeader {
        node_count,
        dim,
        sigma,
        single_generator,
        networks,
    })
}

pub fn decode(bytes: &[u8]) -> Result<(CheckpointHeader, DiscriminatorParams, GeneratorParams)> {
    let mut r = Reader { bytes, pos: 0 };
    let header = decode_header(&mut r)?;
    let (n, d) = (header.node_count, header.dim);
    let table = |r: &mut Reader<'_>| -> Result<Matrix> { Ok(Matrix::from_vec(n, d, r.f64s(n * d)?)) };
    let source = table(&mut r)?;
    let target = table(&mut r)?;
    let latent = table(&mut r)?;
    let mut nets = Vec::new();
    for shape in &header.networks {
        let mut layers = Vec::new();
        for &(input, output, activation) in shape {
            let weight = Matrix::from_vec(output, input, r.f64s(output * input)?);
            let bias = r.f64s(output)?;
            layers.push(Layer {
                weight,
                bias,
                activation,
            });
        }
        let mlp = MlpParams::from_layers(layers).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if mlp.input_dim() != d || mlp.output_dim() != d {
            return Err(Error::Checkpoint("network does not map dim → dim".into()));
        }
        nets.push(mlp);
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let mlp_t = nets.pop().expect("at least one network");
    let mlp_s = nets.pop();
    let disc = DiscriminatorParams { source, target };
    let gen = GeneratorParams {
        latent,
        sigma: header.sigma,
        mlp_s,
        mlp_t,
    };
    Ok((header, disc, gen))
}

pub fn save(path: impl AsRef<Path>, disc: &DiscriminatorParams, gen: &GeneratorParams) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(disc, gen)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<(CheckpointHeader, DiscriminatorParams, GeneratorParams)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn read_header(path: impl AsRef<Path>) -> Result<CheckpointHeader> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_header(&mut Reader { bytes: &bytes, pos: 0 })
}

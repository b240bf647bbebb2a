//! Model checkpoint file: `FINER-CKPT-1` magic, a JSON header (dims,
//! activation family, bias half-width, seed, optional encoder), then all
//! parameters as little-endian f64 in layer order (weights row-major, then
//! biases). Byte-identical for identical networks.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::encoding::PositionalEncoder;
use crate::error::{ensure, Error, Result};
use crate::init::InitScheme;
use crate::linalg::{Matrix, Vector};
use crate::net::{Layer, Mlp};

pub const MAGIC: &[u8; 12] = b"FINER-CKPT-1";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    dims: Vec<usize>,
    activation: Activation,
    bias_halfwidth: f64,
    seed: u64,
    /// Raw coordinate dimensionality before optional encoding.
    raw_input_dim: usize,
    encoder: Option<PositionalEncoder>,
}

/// A checkpoint loaded back from disk.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub mlp: Mlp,
    pub scheme: InitScheme,
    pub raw_input_dim: usize,
    pub encoder: Option<PositionalEncoder>,
}

pub fn save(
    path: &Path,
    mlp: &Mlp,
    scheme: &InitScheme,
    raw_input_dim: usize,
    encoder: Option<PositionalEncoder>,
) -> Result<()> {
    let header = Header {
        dims: mlp.dims().to_vec(),
        activation: mlp.hidden_activation(),
        bias_halfwidth: scheme.bias_halfwidth,
        seed: scheme.seed,
        raw_input_dim,
        encoder,
    };
    let header_json =
        serde_json::to_vec(&header).map_err(|e| Error::Format(format!("header encode: {e}")))?;
    let mut bytes = Vec::with_capacity(16 + header_json.len() + mlp.param_count() * 8);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&header_json);
    for layer in mlp.layers() {
        for v in layer.weights.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for v in layer.biases.as_slice() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path)?;
    ensure_format(bytes.len() >= 16, "file too short for header")?;
    ensure_format(&bytes[..12] == MAGIC, "bad magic string")?;
    let header_len = u32::from_le_bytes([bytes[12], bytes[13], bytes[14], bytes[15]]) as usize;
    ensure_format(bytes.len() >= 16 + header_len, "truncated header")?;
    let header: Header = serde_json::from_slice(&bytes[16..16 + header_len])
        .map_err(|e| Error::Format(format!("header decode: {e}")))?;
    ensure!(header.dims.len() >= 2, "checkpoint dims too short");

    let param_count: usize = header
        .dims
        .windows(2)
        .map(|w| w[0] * w[1] + w[1])
        .sum();
    let payload = &bytes[16 + header_len..];
    ensure_format(
        payload.len() == param_count * 8,
        &format!(
            "parameter payload has {} bytes, expected {}",
            payload.len(),
            param_count * 8
        ),
    )?;

    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    let mut layers = Vec::with_capacity(header.dims.len() - 1);
    for w in header.dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let weights: Vec<f64> = values.by_ref().take(fan_in * fan_out).collect();
        let biases: Vec<f64> = values.by_ref().take(fan_out).collect();
        layers.push(Layer {
            weights: Matrix::from_vec(fan_out, fan_in, weights)?,
            biases: Vector::from_vec(biases)?,
        });
    }
    let mlp = Mlp::from_layers(layers, header.activation)?;
    Ok(Checkpoint {
        mlp,
        scheme: InitScheme::new(header.bias_halfwidth, header.seed),
        raw_input_dim: header.raw_input_dim,
        encoder: header.encoder,
    })
}

fn ensure_format(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Format(format!("checkpoint: {msg}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_path(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("finer_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn roundtrip_preserves_everything() {
        let scheme = InitScheme::new(0.7071067811865476, 42);
        let mlp = Mlp::init(&[2, 16, 16, 3], Activation::finer(30.0), &scheme).unwrap();
        let pe = Some(PositionalEncoder::new(4, true));
        let path = temp_path("roundtrip.ckpt");
        save(&path, &mlp, &scheme, 2, pe).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(loaded.mlp, mlp);
        assert_eq!(loaded.scheme, scheme);
        assert_eq!(loaded.encoder, pe);
        assert_eq!(loaded.raw_input_dim, 2);
    }

    #[test]
    fn save_is_byte_deterministic() {
        let scheme = InitScheme::new(1.0, 7);
        let mlp = Mlp::init(&[1, 8, 1], Activation::sine(30.0), &scheme).unwrap();
        let pa = temp_path("det_a.ckpt");
        let pb = temp_path("det_b.ckpt");
        save(&pa, &mlp, &scheme, 1, None).unwrap();
        save(&pb, &mlp, &scheme, 1, None).unwrap();
        assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let scheme = InitScheme::new(1.0, 7);
        let mlp = Mlp::init(&[1, 4, 1], Activation::finer(1.0), &scheme).unwrap();
        let path = temp_path("corrupt.ckpt");
        save(&path, &mlp, &scheme, 1, None).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        let bad_magic = temp_path("bad_magic.ckpt");
        std::fs::write(&bad_magic, &bytes).unwrap();
        assert!(matches!(load(&bad_magic), Err(Error::Format(_))));

        let good = std::fs::read(&path).unwrap();
        let truncated_path = temp_path("truncated.ckpt");
        std::fs::write(&truncated_path, &good[..good.len() - 5]).unwrap();
        assert!(matches!(load(&truncated_path), Err(Error::Format(_))));
    }
}

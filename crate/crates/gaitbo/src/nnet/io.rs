//! Text serialization for trained nets.
//!
//! The format is line oriented: a version tag, layer sizes, the four
//! normalizer vectors, one line per layer for weights and biases, then a
//! sha256 checksum over everything above it. Floats are written with 17
//! significant digits, so save/load round-trips bitwise.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::data::fmt_f64;
use crate::error::{Error, Result};
use crate::nnet::mlp::{Layer, Mlp, Normalizer};

const MAGIC: &str = "gaitbo mlp v1";

fn push_vec(out: &mut String, tag: &str, v: &[f64]) {
    out.push_str(tag);
    for x in v {
        out.push(' ');
        out.push_str(&fmt_f64(*x));
    }
    out.push('\n');
}

/// Serializes a net, checksum line included.
pub fn model_to_string(mlp: &Mlp) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str("sizes");
    for s in mlp.sizes() {
        let _ = write!(out, " {s}");
    }
    out.push('\n');
    push_vec(&mut out, "x_shift", &mlp.x_norm.shift);
    push_vec(&mut out, "x_scale", &mlp.x_norm.scale);
    push_vec(&mut out, "y_shift", &mlp.y_norm.shift);
    push_vec(&mut out, "y_scale", &mlp.y_norm.scale);
    for (k, layer) in mlp.layers.iter().enumerate() {
        push_vec(&mut out, &format!("weights {k}"), &layer.weights);
        push_vec(&mut out, &format!("biases {k}"), &layer.biases);
    }
    let digest = Sha256::digest(out.as_bytes());
    out.push_str("checksum ");
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out.push('\n');
    out
}

fn parse_floats(line: &str, tag: &str, expect: usize) -> Result<Vec<f64>> {
    let rest = line
        .strip_prefix(tag)
        .ok_or_else(|| Error::Model(format!("expected '{tag}' line, got '{line}'")))?;
    let vals: Vec<f64> = rest
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Model(format!("bad float on '{tag}' line: {e}")))?;
    if vals.len() != expect {
        return Err(Error::Model(format!(
            "'{tag}' line has {} values, expected {expect}",
            vals.len()
        )));
    }
    Ok(vals)
}

/// Parses a serialized net, verifying the checksum first.
pub fn model_from_string(text: &str) -> Result<Mlp> {
    let body_end = text
        .rfind("checksum ")
        .ok_or_else(|| Error::Model("missing checksum line".into()))?;
    let (body, tail) = text.split_at(body_end);
    let stated = tail
        .trim_start_matches("checksum ")
        .trim();
    let digest = Sha256::digest(body.as_bytes());
    let mut actual = String::with_capacity(64);
    for byte in digest {
        let _ = write!(actual, "{byte:02x}");
    }
    if stated != actual {
        return Err(Error::Model("model checksum mismatch".into()));
    }

    let mut lines = body.lines();
    let first = lines.next().unwrap_or_default();
    if first != MAGIC {
        return Err(Error::Model(format!("unrecognized model header '{first}'")));
    }
    let sizes_line = lines
        .next()
        .ok_or_else(|| Error::Model("truncated model: no sizes".into()))?;
    let sizes: Vec<usize> = sizes_line
        .strip_prefix("sizes")
        .ok_or_else(|| Error::Model("expected 'sizes' line".into()))?
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Model(format!("bad layer size: {e}")))?;
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::Model("model needs at least two nonzero sizes".into()));
    }
    let d_in = sizes[0];
    let d_out = *sizes.last().unwrap();

    let mut next = || lines.next().ok_or_else(|| Error::Model("truncated model".into()));
    let x_shift = parse_floats(next()?, "x_shift", d_in)?;
    let x_scale = parse_floats(next()?, "x_scale", d_in)?;
    let y_shift = parse_floats(next()?, "y_shift", d_out)?;
    let y_scale = parse_floats(next()?, "y_scale", d_out)?;

    let mut layers = Vec::with_capacity(sizes.len() - 1);
    for (k, w) in sizes.windows(2).enumerate() {
        let (n_in, n_out) = (w[0], w[1]);
        let weights = parse_floats(next()?, &format!("weights {k}"), n_in * n_out)?;
        let biases = parse_floats(next()?, &format!("biases {k}"), n_out)?;
        layers.push(Layer {
            n_in,
            n_out,
            weights,
            biases,
        });
    }
    Ok(Mlp {
        layers,
        x_norm: Normalizer {
            shift: x_shift,
            scale: x_scale,
        },
        y_norm: Normalizer {
            shift: y_shift,
            scale: y_scale,
        },
    })
}

pub fn write_model(path: &Path, mlp: &Mlp) -> Result<()> {
    std::fs::write(path, model_to_string(mlp)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<Mlp> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_string(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::train::{train, TrainConfig};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn trained_net() -> Mlp {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let xs: Vec<Vec<f64>> = (0..80)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>() * 3.0])
            .collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![x[0] - x[1], x[0] * 0.5]).collect();
        let cfg = TrainConfig {
            hidden: vec![6],
            epochs: 8,
            ..TrainConfig::default()
        };
        train(&xs, &ys, &cfg).unwrap().0
    }

    #[test]
    fn round_trip_is_bitwise() {
        let net = trained_net();
        let text = model_to_string(&net);
        let back = model_from_string(&text).unwrap();
        assert_eq!(net, back);
        assert_eq!(model_to_string(&back), text);
    }

    #[test]
    fn file_round_trip() {
        let net = trained_net();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.mlp");
        write_model(&path, &net).unwrap();
        assert_eq!(read_model(&path).unwrap(), net);
    }

    #[test]
    fn corruption_is_detected() {
        let net = trained_net();
        let text = model_to_string(&net);
        // flip one digit somewhere in the middle of the weights
        let pos = text.len() / 2;
        let mut bytes = text.into_bytes();
        bytes[pos] = if bytes[pos] == b'3' { b'4' } else { b'3' };
        let tampered = String::from_utf8(bytes).unwrap();
        match model_from_string(&tampered) {
            Err(Error::Model(msg)) => assert!(msg.contains("checksum"), "{msg}"),
            other => panic!("expected checksum failure, got {other:?}"),
        }
    }

    #[test]
    fn truncation_is_detected() {
        let net = trained_net();
        let text = model_to_string(&net);
        assert!(model_from_string(&text[..text.len() / 3]).is_err());
    }
}

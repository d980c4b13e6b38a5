//! Parameter grids and gait datasets.

mod dataset;
mod sobol;

pub use dataset::{fmt_f64, generate_dataset, Dataset, GaitRecord};
pub use sobol::{sobol_grid, SobolSeq, MAX_DIM};

use sha2::{Digest, Sha256};

/// Hex SHA-256 of a value's canonical JSON rendering.  Struct field order is
/// fixed at compile time, so equal values digest equally.
pub fn digest_hex<T: serde::Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config types serialize infallibly");
    let hash = Sha256::digest(json.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in hash {
        use std::fmt::Write;
        write!(out, "{byte:02x}").unwrap();
    }
    out
}

//! Flat little-endian f64 array files with a JSON sidecar carrying shape
//! metadata and a SHA-256 checksum of the binary payload.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn write_f64_array(path: &Path, values: &[f64]) -> Result<String> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(hex_digest(&bytes))
}

pub fn read_f64_array(path: &Path, expected_checksum: Option<&str>) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Sidecar(format!(
            "array file {} has {} bytes, not a multiple of 8",
            path.display(),
            bytes.len()
        )));
    }
    if let Some(expect) = expected_checksum {
        let got = hex_digest(&bytes);
        if got != expect {
            return Err(Error::Sidecar(format!(
                "checksum mismatch for {}: sidecar {} vs file {}",
                path.display(),
                expect,
                got
            )));
        }
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

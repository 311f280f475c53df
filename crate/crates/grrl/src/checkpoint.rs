//! Binary parameter checkpoints.
//!
//! Layout, all little-endian: magic `GRRL`, version `u32`, embedding size `u32`,
//! depth `u32`, parameter count `u64`, then every tensor as row-major `f64` in
//! declaration order. The count depends on the embedding size only, so one
//! checkpoint serves graphs of any size.

use std::fs;
use std::path::Path;

use crate::error::GrrlError;
use crate::params::PolicyParams;

pub const MAGIC: &[u8; 4] = b"GRRL";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8;

pub fn to_bytes(params: &PolicyParams) -> Vec<u8> {
    let n = params.num_params();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(params.d() as u32).to_le_bytes());
    out.extend_from_slice(&(params.depth() as u32).to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for s in params.tensors() {
        for x in s {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

pub fn from_bytes(bytes: &[u8]) -> Result<PolicyParams, GrrlError> {
    let bad = |m: String| Err(GrrlError::Checkpoint(m));
    if bytes.len() < HEADER_LEN {
        return bad(format!("{} bytes is shorter than the header", bytes.len()));
    }
    if &bytes[..4] != MAGIC {
        return bad("bad magic".into());
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return bad(format!("unsupported version {version}"));
    }
    let d = u32_at(bytes, 8) as usize;
    let t = u32_at(bytes, 12) as usize;
    let n = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let mut params = PolicyParams::zeros(d, t)?;
    if n != params.num_params() {
        return bad(format!("header lists {n} parameters, embedding size {d} needs {}", params.num_params()));
    }
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * n {
        return bad(format!("expected {} payload bytes, found {}", 8 * n, body.len()));
    }
    let flat: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if flat.iter().any(|x| !x.is_finite()) {
        return bad("non-finite parameter".into());
    }
    params.set_flat(&flat)?;
    Ok(params)
}

pub fn save(params: &PolicyParams, path: impl AsRef<Path>) -> Result<(), GrrlError> {
    fs::write(path, to_bytes(params))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<PolicyParams, GrrlError> {
    from_bytes(&fs::read(path)?)
}

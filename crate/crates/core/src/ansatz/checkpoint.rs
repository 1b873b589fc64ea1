//! Binary checkpoint format for the parameter tensor.
//!
//! Little-endian layout: magic `CPDB`, u32 version (=1), u32 spin mode
//! (0 restricted, 1 generalized), u32 L, K, M, N_up, N_dn, the L*K lookup
//! table as u32 row-major, then the factor tensor as IEEE-754 f64 in flat
//! index order (`[mu][i][s][nu][m]`, up block before down block in
//! restricted mode).

use std::path::Path;

use super::{CpdParams, LookupTable};
use crate::error::CheckpointError;
use crate::fock::{SpinMode, SystemSpec};

const MAGIC: &[u8; 4] = b"CPDB";
const VERSION: u32 = 1;

pub fn save_checkpoint(p: &CpdParams) -> Vec<u8> {
    let l = p.spec.sites as u32;
    let k = p.range() as u32;
    let header = [
        VERSION,
        match p.spec.spin_mode {
            SpinMode::Restricted => 0,
            SpinMode::Generalized => 1,
        },
        l,
        k,
        p.support_dim as u32,
        p.spec.n_up as u32,
        p.spec.n_dn as u32,
    ];
    let mut out = Vec::with_capacity(4 + 7 * 4 + p.lookup.rows_flat().len() * 4 + p.factors().len() * 8);
    out.extend_from_slice(MAGIC);
    for v in header {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &w in p.lookup.rows_flat() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    for &f in p.factors() {
        out.extend_from_slice(&f.to_le_bytes());
    }
    out
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<CpdParams, CheckpointError> {
    if bytes.len() < 4 + 7 * 4 {
        return Err(CheckpointError::Length {
            expected: 4 + 7 * 4,
            got: bytes.len(),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut cursor = 4;
    let mut read_u32 = || {
        let v = u32::from_le_bytes(bytes[cursor..cursor + 4].try_into().unwrap());
        cursor += 4;
        v
    };
    let version = read_u32();
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let spin_mode = match read_u32() {
        0 => SpinMode::Restricted,
        1 => SpinMode::Generalized,
        other => return Err(CheckpointError::Shape(format!("spin mode {other}"))),
    };
    let l = read_u32() as usize;
    let k = read_u32() as usize;
    let m = read_u32() as usize;
    let n_up = read_u32() as usize;
    let n_dn = read_u32() as usize;
    if m == 0 {
        return Err(CheckpointError::Shape("support dimension is zero".into()));
    }
    let spec = SystemSpec::new(l, n_up, n_dn, spin_mode)
        .map_err(|e| CheckpointError::Shape(e.to_string()))?;

    let lookup_len = l * k;
    let mut pos = 4 + 7 * 4;
    let lookup_bytes = lookup_len * 4;
    if bytes.len() < pos + lookup_bytes {
        return Err(CheckpointError::Length {
            expected: pos + lookup_bytes,
            got: bytes.len(),
        });
    }
    let rows: Vec<u32> = (0..lookup_len)
        .map(|i| u32::from_le_bytes(bytes[pos + 4 * i..pos + 4 * i + 4].try_into().unwrap()))
        .collect();
    pos += lookup_bytes;
    let lookup =
        LookupTable::new(l, k, rows).map_err(|e| CheckpointError::Shape(e.to_string()))?;

    let mut p = CpdParams::zeros(spec, m, lookup);
    let expected = pos + p.n_params() * 8;
    if bytes.len() != expected {
        return Err(CheckpointError::Length {
            expected,
            got: bytes.len(),
        });
    }
    for (i, f) in p.factors_mut().iter_mut().enumerate() {
        *f = f64::from_le_bytes(bytes[pos + 8 * i..pos + 8 * i + 8].try_into().unwrap());
    }
    Ok(p)
}

pub fn write_checkpoint_file(p: &CpdParams, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    std::fs::write(path, save_checkpoint(p))?;
    Ok(())
}

pub fn read_checkpoint_file(path: impl AsRef<Path>) -> Result<CpdParams, CheckpointError> {
    load_checkpoint(&std::fs::read(path)?)
}

//! Finite dyadic model of `L_p[0,1]`: step functions on dyadic atoms, unions of
//! atoms as measurable sets, norms, truncation and sign predicates.

mod function;
mod set;
mod witness;

use std::io::{Read, Write};

pub(crate) use function::{check_exponent, weighted_norm};
pub use function::{is_mean_zero_sign, DyadicFunction};
pub use set::{split_set, DyadicSet};
pub use witness::SignWitness;

use crate::error::{Error, Result};

/// Hard upper bound on the working depth.
pub const MAX_DEPTH: u32 = 24;

/// Default working depth of an experiment.
pub const DEFAULT_DEPTH: u32 = 12;

/// Effective depth cap: [`MAX_DEPTH`], lowered by `NARROWLAB_MAX_DEPTH` if set.
pub fn max_depth() -> u32 {
    std::env::var("NARROWLAB_MAX_DEPTH")
        .ok()
        .and_then(|v| v.trim().parse::<u32>().ok())
        .map_or(MAX_DEPTH, |d| d.min(MAX_DEPTH))
}

pub(crate) fn check_depth(depth: u32) -> Result<()> {
    let cap = max_depth();
    if depth > cap {
        return Err(Error::ResolutionExhausted(format!(
            "depth {depth} exceeds the cap of {cap}"
        )));
    }
    Ok(())
}

/// Slack for "exact" identities: `1e-12` up to depth 12, `1e-9` above.
pub fn exactness_slack(depth: u32) -> f64 {
    if depth <= DEFAULT_DEPTH {
        1e-12
    } else {
        1e-9
    }
}

const FUNCTION_MAGIC: &[u8; 8] = b"NLABFN01";

/// Writes the raw binary form: magic `NLABFN01`, little-endian `u32` depth,
/// then `2^depth` little-endian `f64` values.
pub fn write_function<W: Write>(f: &DyadicFunction, mut out: W) -> Result<()> {
    out.write_all(FUNCTION_MAGIC)?;
    out.write_all(&f.depth().to_le_bytes())?;
    for v in f.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_function<R: Read>(mut input: R) -> Result<DyadicFunction> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != FUNCTION_MAGIC {
        return Err(Error::Format("bad magic; expected NLABFN01".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let depth = u32::from_le_bytes(word);
    check_depth(depth)?;
    let mut buf = vec![0u8; 8usize << depth];
    input.read_exact(&mut buf)?;
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    DyadicFunction::new(depth, values)
}

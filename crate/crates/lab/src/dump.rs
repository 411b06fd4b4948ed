//! Binary realization dump.
//!
//! ```text
//! magic    8 bytes  "SPINLAB\0"
//! version  u32
//! N        u64
//! terms    u32
//! per term p: u32, gamma_p^2: f64
//! seed     u64
//! per term N^p f64, row-major
//! ```
//! All integers and floats little endian.

use std::io::{Read, Write};

use spinlab_core::{Mixture, Realization};

use crate::error::{LabError, Result};

pub const MAGIC: &[u8; 8] = b"SPINLAB\0";
pub const VERSION: u32 = 1;

pub fn write_realization<W: Write>(mut w: W, h: &Realization) -> Result<()> {
    let terms: Vec<(usize, f64)> = h.mixture().terms().collect();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(h.dim() as u64).to_le_bytes())?;
    w.write_all(&(terms.len() as u32).to_le_bytes())?;
    for (p, c) in &terms {
        w.write_all(&(*p as u32).to_le_bytes())?;
        w.write_all(&c.to_le_bytes())?;
    }
    w.write_all(&h.seed().to_le_bytes())?;
    let mut buf = Vec::new();
    for coupling in h.couplings() {
        buf.clear();
        buf.reserve(coupling.data().len() * 8);
        for v in coupling.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_array<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b)
        .map_err(|e| LabError::Dump(format!("truncated header: {e}")))?;
    Ok(b)
}

pub fn read_realization<R: Read>(mut r: R) -> Result<Realization> {
    if &read_array::<8, _>(&mut r)? != MAGIC {
        return Err(LabError::Dump("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(LabError::Dump(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let count = u32::from_le_bytes(read_array(&mut r)?) as usize;
    if count == 0 || count > 64 {
        return Err(LabError::Dump(format!("implausible term count {count}")));
    }
    let mut terms = Vec::with_capacity(count);
    for _ in 0..count {
        let p = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let c = f64::from_le_bytes(read_array(&mut r)?);
        terms.push((p, c));
    }
    let seed = u64::from_le_bytes(read_array(&mut r)?);
    let mixture = Mixture::from_terms(&terms)?;
    Realization::check_capacity(&mixture, n, spinlab_core::hamiltonian::DEFAULT_MEMORY_CAP)?;
    let mut tensors = Vec::with_capacity(count);
    for &(p, _) in &terms {
        let len = n
            .checked_pow(p as u32)
            .ok_or_else(|| LabError::Dump("tensor size overflows".into()))?;
        let mut bytes = vec![0u8; len * 8];
        r.read_exact(&mut bytes)
            .map_err(|e| LabError::Dump(format!("truncated order-{p} tensor: {e}")))?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        tensors.push((p, data));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(LabError::Dump("trailing bytes after last tensor".into()));
    }
    Ok(Realization::from_tensors(&mixture, n, seed, tensors)?)
}

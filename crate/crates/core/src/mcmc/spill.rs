//! Binary sample spill.
//!
//! Little-endian layout:
//!
//! ```text
//! magic        8 bytes  "CVEVALSS"
//! version      u32      1
//! n_units      u64
//! n_theta      u64
//! names        n_theta x (u32 byte length, UTF-8 bytes)
//! n_chains     u64
//! draws        u64      draws per chain
//! flags        u32      bit 0: rows carry a log weight; bit 1: holdout present
//! holdout      u64      only with flag bit 1
//! records      n_chains x draws rows of (n_theta + n_units) f64,
//!              each followed by its f64 log weight with flag bit 0
//! ```

use std::io::{Read, Write};

use super::SampleStore;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CVEVALSS";
pub const VERSION: u32 = 1;

const FLAG_WEIGHTED: u32 = 1;
const FLAG_HOLDOUT: u32 = 2;

/// Longest parameter name accepted when reading.
const MAX_NAME: u32 = 1 << 16;

pub fn write_spill<W: Write>(store: &SampleStore, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(store.n_units() as u64).to_le_bytes())?;
    w.write_all(&(store.n_theta() as u64).to_le_bytes())?;
    for name in store.theta_names() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
    }
    w.write_all(&(store.n_chains() as u64).to_le_bytes())?;
    w.write_all(&(store.draws_per_chain() as u64).to_le_bytes())?;
    let mut flags = 0;
    if store.log_weights().is_some() {
        flags |= FLAG_WEIGHTED;
    }
    if store.holdout().is_some() {
        flags |= FLAG_HOLDOUT;
    }
    w.write_all(&flags.to_le_bytes())?;
    if let Some(h) = store.holdout() {
        w.write_all(&(h as u64).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(8 * (store.width() + 1));
    for s in 0..store.len() {
        buf.clear();
        for v in store.row(s) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(lw) = store.log_weights() {
            buf.extend_from_slice(&lw[s].to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_usize<R: Read>(r: &mut R, what: &str) -> Result<usize> {
    let v = read_u64(r)?;
    usize::try_from(v).map_err(|_| Error::arg(format!("spill {what} {v} does not fit in memory")))
}

pub fn read_spill<R: Read>(mut r: R) -> Result<SampleStore> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::arg("not a sample spill file (bad magic)"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::arg(format!("unsupported spill version {version}")));
    }
    let n_units = read_usize(&mut r, "unit count")?;
    let n_theta = read_usize(&mut r, "parameter count")?;
    let mut names = Vec::with_capacity(n_theta.min(1024));
    for _ in 0..n_theta {
        let len = read_u32(&mut r)?;
        if len > MAX_NAME {
            return Err(Error::arg(format!("spill parameter name of {len} bytes")));
        }
        let mut b = vec![0u8; len as usize];
        r.read_exact(&mut b)?;
        names.push(String::from_utf8(b).map_err(|e| Error::arg(format!("spill name not UTF-8: {e}")))?);
    }
    let n_chains = read_usize(&mut r, "chain count")?;
    let draws = read_usize(&mut r, "draw count")?;
    let flags = read_u32(&mut r)?;
    if flags & !(FLAG_WEIGHTED | FLAG_HOLDOUT) != 0 {
        return Err(Error::arg(format!("unknown spill flags {flags:#x}")));
    }
    let holdout = if flags & FLAG_HOLDOUT != 0 {
        Some(read_usize(&mut r, "holdout")?)
    } else {
        None
    };
    let weighted = flags & FLAG_WEIGHTED != 0;
    let width = n_theta + n_units;
    let rows = n_chains
        .checked_mul(draws)
        .ok_or_else(|| Error::arg("spill row count overflows"))?;
    let mut data = Vec::with_capacity(rows.saturating_mul(width).min(1 << 28));
    let mut lw = Vec::new();
    let mut b = [0u8; 8];
    for _ in 0..rows {
        for _ in 0..width {
            r.read_exact(&mut b)?;
            data.push(f64::from_le_bytes(b));
        }
        if weighted {
            r.read_exact(&mut b)?;
            lw.push(f64::from_le_bytes(b));
        }
    }
    let mut store = if weighted {
        if n_chains != 1 {
            return Err(Error::arg("weighted spill must hold a single chain"));
        }
        SampleStore::weighted(names, n_units, data, lw)?
    } else {
        SampleStore::new(names, n_units, n_chains, draws, data)?
    };
    store.set_holdout(holdout);
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_plain_and_weighted() {
        let data: Vec<f64> = (0..24).map(|v| v as f64 * 0.5 - 3.0).collect();
        let mut plain = SampleStore::new(vec!["mu".into(), "σ²".into()], 2, 2, 3, data).unwrap();
        plain.set_holdout(Some(1));
        let mut bytes = Vec::new();
        write_spill(&plain, &mut bytes).unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(read_spill(bytes.as_slice()).unwrap(), plain);

        let weighted = SampleStore::weighted(vec!["a".into()], 1, vec![1.0, 2.0, 3.0, 4.0], vec![-0.1, -2.0]).unwrap();
        let mut bytes = Vec::new();
        write_spill(&weighted, &mut bytes).unwrap();
        assert_eq!(read_spill(bytes.as_slice()).unwrap(), weighted);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(read_spill(&b"NOTSPILL\x01\0\0\0"[..]).is_err());
        let store = SampleStore::new(vec!["a".into()], 1, 1, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut bytes = Vec::new();
        write_spill(&store, &mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(read_spill(bytes.as_slice()).is_err());
    }
}

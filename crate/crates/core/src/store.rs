//! Waveform stores and their on-disk format.
//!
//! A [`WaveformStore`] holds one binary sample sequence per wire, all of the
//! same length. The binary file layout (integers little-endian):
//!
//! ```text
//! offset 0   magic  "HTDW"
//!        4   u32    format version (1)
//!        8   u32    wire count
//!        12  u64    cycle count
//!        20  u64    seed
//!        28  name table: wire count x (u32 length + UTF-8 bytes),
//!            in canonical wire order
//!        ..  rows: wire count x ceil(cycles/8) bytes, LSB-first within
//!            each byte, each row padded to a byte boundary
//! ```
//!
//! After the rows this writer appends a small provenance trailer (netlist
//! name, stimulus digest, primary-input names). Readers treat the trailer
//! as optional so that minimal third-party writers stay compatible.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::bits::Bits;

pub const MAGIC: [u8; 4] = *b"HTDW";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Error, Debug)]
pub enum StoreError {
    #[error("bad magic: not a waveform store file")]
    BadMagic,
    #[error("unsupported waveform store version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated waveform store ({0})")]
    Truncated(String),
    #[error("malformed wire name: {0}")]
    BadName(String),
    #[error("waveform store I/O: {0}")]
    Io(#[from] io::Error),
}

/// Per-wire binary sample sequences over a simulation campaign.
#[derive(Clone, Debug)]
pub struct WaveformStore {
    pub netlist_name: String,
    pub seed: u64,
    pub cycles: u64,
    /// Digest of the stimulus that produced the store (0 when unknown).
    pub stimulus_digest: u64,
    /// Names of the wires that were primary inputs, when known.
    pub pi_names: Vec<String>,
    names: Vec<String>,
    index: HashMap<String, usize>,
    rows: Vec<Bits>,
}

impl WaveformStore {
    pub fn new(
        netlist_name: impl Into<String>,
        seed: u64,
        cycles: u64,
        stimulus_digest: u64,
        names: Vec<String>,
        rows: Vec<Bits>,
        pi_names: Vec<String>,
    ) -> Self {
        assert_eq!(names.len(), rows.len());
        for r in &rows {
            assert_eq!(r.len() as u64, cycles, "all rows must have `cycles` samples");
        }
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        WaveformStore {
            netlist_name: netlist_name.into(),
            seed,
            cycles,
            stimulus_digest,
            pi_names,
            names,
            index,
            rows,
        }
    }

    pub fn wire_names(&self) -> &[String] {
        &self.names
    }

    pub fn num_wires(&self) -> usize {
        self.names.len()
    }

    pub fn wire_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn row(&self, idx: usize) -> &Bits {
        &self.rows[idx]
    }

    pub fn row_by_name(&self, name: &str) -> Option<&Bits> {
        self.wire_index(name).map(|i| &self.rows[i])
    }

    /// Wires to analyze: everything that is not a known primary input.
    /// When provenance is missing (`pi_names` empty) every wire is included.
    pub fn analysis_names(&self) -> Vec<String> {
        if self.pi_names.is_empty() {
            return self.names.clone();
        }
        let pis: std::collections::HashSet<&str> =
            self.pi_names.iter().map(|s| s.as_str()).collect();
        self.names
            .iter()
            .filter(|n| !pis.contains(n.as_str()))
            .cloned()
            .collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), StoreError> {
        w.write_all(&MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.names.len() as u32).to_le_bytes())?;
        w.write_all(&self.cycles.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for name in &self.names {
            write_lp_string(&mut w, name)?;
        }
        for row in &self.rows {
            w.write_all(&row.packed_bytes())?;
        }
        // provenance trailer
        write_lp_string(&mut w, &self.netlist_name)?;
        w.write_all(&self.stimulus_digest.to_le_bytes())?;
        w.write_all(&(self.pi_names.len() as u32).to_le_bytes())?;
        for name in &self.pi_names {
            write_lp_string(&mut w, name)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, StoreError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| StoreError::Truncated("header".into()))?;
        if magic != MAGIC {
            return Err(StoreError::BadMagic);
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(StoreError::UnsupportedVersion(version));
        }
        let wire_count = read_u32(&mut r)? as usize;
        let cycles = read_u64(&mut r)?;
        let seed = read_u64(&mut r)?;
        let mut names = Vec::with_capacity(wire_count);
        for _ in 0..wire_count {
            names.push(read_lp_string(&mut r)?);
        }
        let row_bytes = (cycles as usize).div_ceil(8);
        let mut rows = Vec::with_capacity(wire_count);
        let mut buf = vec![0u8; row_bytes];
        for i in 0..wire_count {
            r.read_exact(&mut buf)
                .map_err(|_| StoreError::Truncated(format!("row {}", i)))?;
            rows.push(
                Bits::from_packed_bytes(&buf, cycles as usize)
                    .expect("row buffer sized for cycle count"),
            );
        }
        // optional trailer
        let mut netlist_name = String::new();
        let mut stimulus_digest = 0u64;
        let mut pi_names = Vec::new();
        if let Ok(name) = read_lp_string(&mut r) {
            netlist_name = name;
            stimulus_digest = read_u64(&mut r).unwrap_or(0);
            if let Ok(n) = read_u32(&mut r) {
                for _ in 0..n {
                    match read_lp_string(&mut r) {
                        Ok(s) => pi_names.push(s),
                        Err(_) => break,
                    }
                }
            }
        }
        Ok(WaveformStore::new(
            netlist_name,
            seed,
            cycles,
            stimulus_digest,
            names,
            rows,
            pi_names,
        ))
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        let f = File::create(path)?;
        let mut w = BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let f = File::open(path)?;
        Self::read_from(BufReader::new(f))
    }

    /// Debug export for small stores: `{"wire": "0101...", ...}` plus
    /// provenance fields.
    pub fn to_debug_json(&self) -> serde_json::Value {
        let mut waves = serde_json::Map::new();
        for (name, row) in self.names.iter().zip(&self.rows) {
            waves.insert(name.clone(), row.to_bitstring().into());
        }
        serde_json::json!({
            "netlist_name": self.netlist_name,
            "seed": self.seed,
            "cycles": self.cycles,
            "stimulus_digest": format!("{:016x}", self.stimulus_digest),
            "inputs": self.pi_names,
            "waveforms": serde_json::Value::Object(waves),
        })
    }
}

fn write_lp_string<W: Write>(w: &mut W, s: &str) -> Result<(), StoreError> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, StoreError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| StoreError::Truncated("u32".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, StoreError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| StoreError::Truncated("u64".into()))?;
    Ok(u64::from_le_bytes(b))
}

fn read_lp_string<R: Read>(r: &mut R) -> Result<String, StoreError> {
    let len = read_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|_| StoreError::Truncated("string".into()))?;
    String::from_utf8(buf).map_err(|e| StoreError::BadName(e.to_string()))
}

/// FNV-1a 64-bit hash, used for provenance digests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// `Write` sink that only counts bytes; used to measure serialized size
/// without touching the filesystem.
#[derive(Default)]
pub struct CountingWriter {
    pub bytes: u64,
}

impl Write for CountingWriter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.bytes += buf.len() as u64;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

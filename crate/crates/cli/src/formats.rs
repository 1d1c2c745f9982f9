//! On-disk artifact formats.
//!
//! - MPS container (`.mps`): binary, little-endian, bit-exact floats.
//! - Circuit file: JSON with a `schema` tag wrapping the serialized
//!   circuit.
//! - Trace: JSON lines, one header object then one object per
//!   optimizer iteration.
//!
//! Every format carries an explicit version so readers can refuse
//! files they do not understand instead of misinterpreting them.

use crate::error::{CliError, Result};
use positivize_core::{C64, Circuit, MatrixProductState, Tensor};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::Path;

/// Magic prefix of the binary MPS container.
pub const MPS_MAGIC: &[u8; 4] = b"MPSC";
/// Container version this build reads and writes.
pub const MPS_VERSION: u32 = 1;
pub const CIRCUIT_SCHEMA: &str = "circuit_v1";
pub const TRACE_SCHEMA: &str = "trace_v1";

/// Layout: magic, version (u32), n_sites (u32), center (i64, -1 for
/// none), then per site three u32 extents (left, phys, right) followed
/// by the row-major complex entries as (re, im) f64 pairs. All integers
/// and floats little-endian.
pub fn write_mps(path: &Path, psi: &MatrixProductState) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MPS_MAGIC);
    buf.extend_from_slice(&MPS_VERSION.to_le_bytes());
    buf.extend_from_slice(&(psi.n_sites() as u32).to_le_bytes());
    let center = psi.center().map_or(-1i64, |c| c as i64);
    buf.extend_from_slice(&center.to_le_bytes());
    for i in 0..psi.n_sites() {
        let site = psi.site(i);
        for &d in site.shape() {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for z in site.data() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    std::fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

pub fn read_mps(path: &Path) -> Result<MatrixProductState> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut r = Cursor {
        bytes: &bytes,
        pos: 0,
        path,
    };
    let magic = r.take(4)?;
    if magic != MPS_MAGIC {
        return Err(CliError::format(path, "not an MPS container (bad magic)"));
    }
    let version = r.u32()?;
    if version != MPS_VERSION {
        return Err(CliError::format(
            path,
            format!("unsupported MPS container version {version}"),
        ));
    }
    let n_sites = r.u32()? as usize;
    let center = r.i64()?;
    let mut sites = Vec::with_capacity(n_sites);
    for _ in 0..n_sites {
        let left = r.u32()? as usize;
        let phys = r.u32()? as usize;
        let right = r.u32()? as usize;
        let len = left
            .checked_mul(phys)
            .and_then(|x| x.checked_mul(right))
            .ok_or_else(|| CliError::format(path, "site extent overflow"))?;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            let re = r.f64()?;
            let im = r.f64()?;
            data.push(C64::new(re, im));
        }
        sites.push(
            Tensor::new([left, phys, right], data)
                .map_err(|e| CliError::format(path, e.to_string()))?,
        );
    }
    if r.pos != bytes.len() {
        return Err(CliError::format(path, "trailing bytes after last site"));
    }
    let center = if center < 0 { None } else { Some(center as usize) };
    MatrixProductState::from_sites(sites, center)
        .map_err(|e| CliError::format(path, e.to_string()))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(CliError::format(self.path, "truncated file"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CircuitFile {
    pub schema: String,
    pub circuit: Circuit,
}

pub fn write_circuit(path: &Path, circuit: &Circuit) -> Result<()> {
    let doc = CircuitFile {
        schema: CIRCUIT_SCHEMA.to_string(),
        circuit: circuit.clone(),
    };
    write_json(path, &doc)
}

pub fn read_circuit(path: &Path) -> Result<Circuit> {
    let doc: CircuitFile = read_json(path)?;
    if doc.schema != CIRCUIT_SCHEMA {
        return Err(CliError::format(
            path,
            format!("unsupported circuit schema {:?}", doc.schema),
        ));
    }
    doc.circuit
        .validate()
        .map_err(|e| CliError::format(path, e.to_string()))?;
    Ok(doc.circuit)
}

/// Pretty JSON plus a trailing newline; stable field order via serde.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::format(path, e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))
}

/// Incremental JSON-lines writer; the header row names the schema.
pub struct JsonLines {
    file: std::io::BufWriter<std::fs::File>,
    path: std::path::PathBuf,
}

impl JsonLines {
    pub fn create(path: &Path, schema: &str) -> Result<Self> {
        let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut out = JsonLines {
            file: std::io::BufWriter::new(file),
            path: path.to_path_buf(),
        };
        out.push(&serde_json::json!({ "schema": schema }))?;
        Ok(out)
    }

    /// Serialize one value as a line and flush it to disk, so partial
    /// traces survive an abort.
    pub fn push<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let line = serde_json::to_string(value)
            .map_err(|e| CliError::format(&self.path, e.to_string()))?;
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.write_all(b"\n"))
            .and_then(|_| self.file.flush())
            .map_err(|e| CliError::io(&self.path, e))
    }
}

/// SHA-256 of a file's bytes, streamed, as a lowercase hex string.
pub fn file_sha256(path: &Path) -> Result<String> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = std::io::BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut chunk = [0u8; 8192];
    loop {
        let n = reader.read(&mut chunk).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&chunk[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

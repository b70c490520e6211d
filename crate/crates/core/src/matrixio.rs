//! Binary matrix persistence: row-major little-endian f32 payload behind an
//! 8-byte header holding (rows, cols) as little-endian u32 each.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub fn write_matrix_f32(path: &Path, rows: u32, cols: u32, data: &[f32]) -> io::Result<()> {
    if data.len() != rows as usize * cols as usize {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("matrix payload is {} values, header says {}×{}", data.len(), rows, cols),
        ));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&rows.to_le_bytes())?;
    w.write_all(&cols.to_le_bytes())?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn read_matrix_f32(path: &Path) -> io::Result<(u32, u32, Vec<f32>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 8];
    r.read_exact(&mut header)?;
    let rows = u32::from_le_bytes(header[0..4].try_into().unwrap());
    let cols = u32::from_le_bytes(header[4..8].try_into().unwrap());
    let count = rows as usize * cols as usize;
    let mut payload = Vec::with_capacity(count * 4);
    r.read_to_end(&mut payload)?;
    if payload.len() != count * 4 {
        return Err(io::Error::new(
            io::ErrorKind::UnexpectedEof,
            format!("expected {} payload bytes, found {}", count * 4, payload.len()),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rows, cols, data))
}

/// Structured-text descriptor stored next to a persisted connectivity matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub row_kind: String,
    pub threshold_db: f64,
    pub rows: u32,
    pub cols: u32,
}

pub fn write_sidecar(path: &Path, sidecar: &MatrixSidecar) -> io::Result<()> {
    let body = serde_json::to_string_pretty(sidecar)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    std::fs::write(path, body)
}

pub fn read_sidecar(path: &Path) -> io::Result<MatrixSidecar> {
    let body = std::fs::read_to_string(path)?;
    serde_json::from_str(&body).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let data = vec![1.5f32, -999.0, 0.0, 42.25, -3.0, 7.0];
        write_matrix_f32(&path, 2, 3, &data).unwrap();
        let (rows, cols, back) = read_matrix_f32(&path).unwrap();
        assert_eq!((rows, cols), (2, 3));
        assert_eq!(back, data);
        // Header layout: 8 bytes then 4 bytes per value.
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 8 + 6 * 4);
    }

    #[test]
    fn payload_size_must_match_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        assert!(write_matrix_f32(&path, 2, 3, &[0.0; 5]).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let sc = MatrixSidecar {
            row_kind: "beam".to_string(),
            threshold_db: -6.0,
            rows: 144,
            cols: 900,
        };
        write_sidecar(&path, &sc).unwrap();
        assert_eq!(read_sidecar(&path).unwrap(), sc);
    }
}

//! Feature matrices on disk: CSV, or a flat little-endian binary with a JSON
//! header giving the row length, variant and seed.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{FeatureError, SparseVec};

const MAGIC: &[u8; 8] = b"RMFEAT01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportHeader {
    pub length: usize,
    pub variant: String,
    pub seed: u64,
    pub rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Binary,
}

impl std::str::FromStr for ExportFormat {
    type Err = FeatureError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "bin" | "binary" => Ok(ExportFormat::Binary),
            other => Err(FeatureError::UnknownFormat(other.to_string())),
        }
    }
}

fn check_rows(rows: &[(String, SparseVec)], length: usize) -> Result<(), FeatureError> {
    match rows.iter().find(|(_, v)| v.dim != length) {
        Some((id, v)) => Err(FeatureError::DimensionMismatch { id: id.clone(), expected: length, found: v.dim }),
        None => Ok(()),
    }
}

/// One row per vector: `id,f0,...,f{n-1}`.
pub fn write_csv<W: Write>(out: W, length: usize, rows: &[(String, SparseVec)]) -> Result<(), FeatureError> {
    check_rows(rows, length)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend((0..length).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for (id, v) in rows {
        let mut rec = vec![id.clone()];
        rec.extend(v.to_dense().iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_binary<W: Write>(mut out: W, header: &ExportHeader, rows: &[SparseVec]) -> Result<(), FeatureError> {
    let named: Vec<(String, SparseVec)> = rows.iter().map(|v| (String::new(), v.clone())).collect();
    check_rows(&named, header.length)?;
    let json = serde_json::to_vec(&ExportHeader { rows: rows.len(), ..header.clone() })?;
    out.write_all(MAGIC)?;
    out.write_all(&(json.len() as u32).to_le_bytes())?;
    out.write_all(&json)?;
    for v in rows {
        for x in v.to_dense() {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<(ExportHeader, Vec<Vec<f64>>), FeatureError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(FeatureError::BadMagic);
    }
    let mut len = [0u8; 4];
    input.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    input.read_exact(&mut json)?;
    let header: ExportHeader = serde_json::from_slice(&json)?;
    let mut rows = Vec::with_capacity(header.rows);
    let mut buf = [0u8; 8];
    for _ in 0..header.rows {
        let mut row = Vec::with_capacity(header.length);
        for _ in 0..header.length {
            input.read_exact(&mut buf)?;
            row.push(f64::from_le_bytes(buf));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

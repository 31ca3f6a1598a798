//! Dataset files.
//!
//! CSV: one example per row, the `d` features followed by the label, no
//! header.
//!
//! Binary (little-endian): a 16-byte header made of the 4-byte magic
//! [`BINARY_MAGIC`], `d` as `u32` and `n` as `u64`, followed by `n` rows of
//! `d + 1` `f64` values (features then label).

use std::io::{Read, Write};
use std::path::Path;

use super::Example;
use crate::{Error, Result};

pub const BINARY_MAGIC: [u8; 4] = *b"PAI1";

fn dataset_err(msg: impl Into<String>) -> Error {
    Error::Dataset(msg.into())
}

pub fn read_csv(path: &Path) -> Result<Vec<Example>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| dataset_err(e.to_string()))?;
    let mut out = Vec::new();
    let mut width = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| dataset_err(e.to_string()))?;
        let values = record
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| dataset_err(format!("row {}: `{v}`: {e}", row + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() < 2 {
            return Err(dataset_err(format!("row {}: need at least one feature and a label", row + 1)));
        }
        if *width.get_or_insert(values.len()) != values.len() {
            return Err(dataset_err(format!("row {}: ragged row", row + 1)));
        }
        let (features, label) = values.split_at(values.len() - 1);
        out.push(Example::new(features.to_vec(), label[0]).map_err(|e| dataset_err(format!("row {}: {e}", row + 1)))?);
    }
    Ok(out)
}

pub fn write_csv(path: &Path, data: &[Example]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| dataset_err(e.to_string()))?;
    for x in data {
        let row: Vec<String> = x.features.iter().chain(std::iter::once(&x.label)).map(|v| format!("{v:?}")).collect();
        writer.write_record(&row).map_err(|e| dataset_err(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_binary(path: &Path, data: &[Example]) -> Result<()> {
    let d = data.first().map_or(0, |x| x.features.len());
    if data.iter().any(|x| x.features.len() != d) {
        return Err(dataset_err("ragged features"));
    }
    let d32 = u32::try_from(d).map_err(|_| dataset_err("dimension exceeds u32"))?;
    let mut buf = Vec::with_capacity(16 + data.len() * (d + 1) * 8);
    buf.extend_from_slice(&BINARY_MAGIC);
    buf.extend_from_slice(&d32.to_le_bytes());
    buf.extend_from_slice(&(data.len() as u64).to_le_bytes());
    for x in data {
        for v in x.features.iter().chain(std::iter::once(&x.label)) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<Vec<Example>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 16 {
        return Err(dataset_err("file shorter than the 16-byte header"));
    }
    if bytes[..4] != BINARY_MAGIC {
        return Err(dataset_err("bad magic"));
    }
    let d = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let expected = n
        .checked_mul(d + 1)
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(16))
        .ok_or_else(|| dataset_err("header sizes overflow"))?;
    if bytes.len() != expected {
        return Err(dataset_err(format!("expected {expected} bytes for n={n}, d={d}, found {}", bytes.len())));
    }
    let mut values = bytes[16..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    (0..n)
        .map(|row| {
            let features: Vec<f64> = values.by_ref().take(d).collect();
            let label = values.next().expect("length checked");
            Example::new(features, label).map_err(|e| dataset_err(format!("row {}: {e}", row + 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Example> {
        vec![
            Example::new(vec![0.1, -2.5, 1e-300], 1.0).unwrap(),
            Example::new(vec![3.0, 0.0, -0.1], -1.0).unwrap(),
        ]
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&path, &sample()).unwrap();
        assert_eq!(read_csv(&path).unwrap(), sample());
    }

    #[test]
    fn binary_round_trip_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.bin");
        write_binary(&path, &sample()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 16 + 2 * 4 * 8);
        assert_eq!(&bytes[..4], b"PAI1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 0.1);
        assert_eq!(read_binary(&path).unwrap(), sample());
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "1,2,3\n4,5\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Dataset(_))));
        std::fs::write(&path, "1,x\n").unwrap();
        assert!(read_csv(&path).is_err());
        let bin = dir.path().join("bad.bin");
        std::fs::write(&bin, b"PAI1\x01\0\0\0\x05\0\0\0\0\0\0\0").unwrap();
        assert!(read_binary(&bin).is_err());
        std::fs::write(&bin, b"XXXX").unwrap();
        assert!(read_binary(&bin).is_err());
    }
}

//! Edge-list and feature file formats.
//!
//! Edge lists are plain text, one `u v` pair per line; blank lines and lines
//! starting with `#` are skipped. Feature files are either the binary
//! `EHDMFEA1` layout (magic, `u64` N, `u64` F, then N·F little-endian `f32`
//! values row-major) or CSV with one row per node.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Edge, FeatureMatrix, NodeId};
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 8] = b"EHDMFEA1";

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Vec<Edge>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    parse_edge_list(reader, path)
}

pub fn parse_edge_list(reader: impl BufRead, path: &Path) -> Result<Vec<Edge>> {
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<NodeId> {
            let tok = tok.ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: "expected two node ids".into(),
            })?;
            tok.parse::<NodeId>().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: format!("bad node id {tok:?}: {e}"),
            })
        };
        let u = parse(it.next())?;
        let v = parse(it.next())?;
        if it.next().is_some() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: "expected exactly two node ids".into(),
            });
        }
        edges.push((u, v));
    }
    Ok(edges)
}

pub fn write_edge_list(path: impl AsRef<Path>, edges: &[Edge]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for &(u, v) in edges {
        writeln!(w, "{u} {v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Number of nodes implied by an edge list (largest id + 1).
pub fn implied_num_nodes(edges: &[Edge]) -> usize {
    edges
        .iter()
        .map(|&(u, v)| u.max(v) as usize + 1)
        .max()
        .unwrap_or(0)
}

/// Reads either format, detected by the magic bytes.
pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(FEATURE_MAGIC) {
        decode_features_binary(&bytes, path)
    } else {
        parse_features_csv(&bytes[..], path)
    }
}

fn decode_features_binary(bytes: &[u8], path: &Path) -> Result<FeatureMatrix> {
    if bytes.len() < 24 {
        return Err(Error::format(path, "truncated feature header"));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let f = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let body = &bytes[24..];
    let want = n
        .checked_mul(f)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::format(path, "feature shape overflows"))?;
    if body.len() != want {
        return Err(Error::format(
            path,
            format!("expected {want} bytes of feature data for {n}x{f}, found {}", body.len()),
        ));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(n, f, values)
}

pub fn parse_features_csv(reader: impl BufRead, path: &Path) -> Result<FeatureMatrix> {
    let mut values = Vec::new();
    let mut dim = None;
    let mut rows = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let before = values.len();
        for tok in t.split(',') {
            let v: f32 = tok.trim().parse().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                msg: format!("bad feature value {tok:?}: {e}"),
            })?;
            values.push(v);
        }
        let width = values.len() - before;
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    msg: format!("row has {width} columns, expected {d}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    FeatureMatrix::new(rows, dim.unwrap_or(0), values)
}

pub fn write_features_binary(path: impl AsRef<Path>, x: &FeatureMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&(x.num_nodes() as u64).to_le_bytes())?;
    w.write_all(&(x.dim() as u64).to_le_bytes())?;
    for v in x.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_features_csv(path: impl AsRef<Path>, x: &FeatureMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..x.num_nodes() {
        let row: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_skips_comments() {
        let text = "# header\n0 1\n\n  2\t3 \n# tail\n";
        let edges = parse_edge_list(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(edges, vec![(0, 1), (2, 3)]);
        assert_eq!(implied_num_nodes(&edges), 4);
    }

    #[test]
    fn edge_list_errors_carry_line_numbers() {
        let err = parse_edge_list("0 1\n0 x\n".as_bytes(), Path::new("e.txt")).unwrap_err();
        assert!(err.to_string().starts_with("e.txt:2:"), "{err}");
        assert!(parse_edge_list("0\n".as_bytes(), Path::new("e")).is_err());
        assert!(parse_edge_list("0 1 2\n".as_bytes(), Path::new("e")).is_err());
        assert!(parse_edge_list("-1 2\n".as_bytes(), Path::new("e")).is_err());
    }

    #[test]
    fn binary_features_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        let x = FeatureMatrix::new(2, 3, vec![1.0, -2.5, 0.0, 3.0, 0.25, 7.0]).unwrap();
        write_features_binary(&path, &x).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], FEATURE_MAGIC);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 3);
        assert_eq!(f32::from_le_bytes(bytes[28..32].try_into().unwrap()), -2.5);
        assert_eq!(bytes.len(), 24 + 6 * 4);
        assert_eq!(read_features(&path).unwrap(), x);

        std::fs::write(&path, &bytes[..30]).unwrap();
        assert!(read_features(&path).is_err());
    }

    #[test]
    fn csv_features() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let x = FeatureMatrix::new(2, 2, vec![1.0, 0.5, 0.0, -3.0]).unwrap();
        write_features_csv(&path, &x).unwrap();
        assert_eq!(read_features(&path).unwrap(), x);
        assert!(parse_features_csv("1,2\n3\n".as_bytes(), Path::new("m")).is_err());
    }
}

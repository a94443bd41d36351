//! CSV and JSON writers. Every CSV starts with one `#` version line followed
//! by a header row; vector-valued columns are `;`-joined.

use std::fmt::Display;
use std::path::Path;

use serde::Serialize;

use crate::error::{HarnessError, Result};

pub const VERSION_LINE: &str = concat!("# dms-harness ", env!("CARGO_PKG_VERSION"));

pub fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Rows are written in the given order.
pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(VERSION_LINE.as_bytes());
    buf.push(b'\n');
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| HarnessError::io(path, e))?;
    }
    std::fs::write(path, buf).map_err(|e| HarnessError::io(path, e))
}

/// Reads a CSV written by [`write_csv`], skipping the version line.
pub fn read_csv<R: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let body = text.strip_prefix('#').map_or(text.as_str(), |t| t.split_once('\n').map_or("", |(_, rest)| rest));
    let mut r = csv::Reader::from_reader(body.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<R>, _>>()?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

pub fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, serde::Deserialize)]
    struct Row {
        a: u32,
        b: String,
    }

    #[test]
    fn round_trip_skips_version() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        let rows = vec![Row { a: 1, b: join(&[1.5, 2.0]) }];
        write_csv(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# dms-harness "));
        assert!(text.contains("a,b\n1,1.5;2\n"));
        assert_eq!(read_csv::<Row>(&p).unwrap(), rows);
    }
}

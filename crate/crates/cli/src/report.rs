//! CSV and summary emission helpers.

use anyhow::{Context, Result};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Formats a float with 12 significant digits, leaving headroom for any
/// downstream comparison at 1e-6.
pub fn sig12(v: f64) -> String {
    format!("{v:.11e}")
}

/// CSV builder; plain joined rows, no quoting (no field here ever needs it).
#[derive(Default)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Csv::default();
        csv.row(header);
        csv
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            self.buf.push_str(f.as_ref());
            first = false;
        }
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

/// Writes a file under `dir`, creating the directory tree on demand.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

/// Renders a small JSON object from label/value pairs, in the given order.
pub fn json_object(fields: &[(&str, serde_json::Value)]) -> String {
    let mut map = serde_json::Map::new();
    for (k, v) in fields {
        map.insert((*k).to_string(), v.clone());
    }
    let mut out = serde_json::to_string_pretty(&serde_json::Value::Object(map))
        .expect("json encoding cannot fail");
    out.push('\n');
    out
}

/// `1,2,5..8` -> `[1, 2, 5, 6, 7, 8]`.
pub fn parse_seed_list(text: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().context("bad seed range start")?;
            let b: u64 = b.trim().parse().context("bad seed range end")?;
            anyhow::ensure!(a <= b, "seed range {part} is reversed");
            seeds.extend(a..=b);
        } else {
            seeds.push(part.parse().context("bad seed value")?);
        }
    }
    anyhow::ensure!(!seeds.is_empty(), "seed list is empty");
    Ok(seeds)
}

/// Comma-separated list of counts.
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.push(part.parse().context("bad count value")?);
    }
    anyhow::ensure!(!out.is_empty(), "list is empty");
    Ok(out)
}

/// Human-readable one-liner for a report table row.
pub fn kv_line(pairs: &[(&str, String)]) -> String {
    let mut line = String::new();
    for (i, (k, v)) in pairs.iter().enumerate() {
        if i > 0 {
            line.push_str("  ");
        }
        let _ = write!(line, "{k}={v}");
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_has_enough_digits() {
        assert_eq!(sig12(18.005672884425945), "1.80056728844e1");
        assert_eq!(sig12(0.0), "0.00000000000e0");
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seed_list("1,2,3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seed_list("5..8").unwrap(), vec![5, 6, 7, 8]);
        assert_eq!(parse_seed_list("1, 4..6").unwrap(), vec![1, 4, 5, 6]);
        assert!(parse_seed_list("8..5").is_err());
        assert!(parse_seed_list("").is_err());
    }

    #[test]
    fn csv_rows() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&["1", "2"]);
        assert_eq!(csv.into_string(), "a,b\n1,2\n");
    }
}

//! Text ingestion and emission: whitespace-delimited embedding files, TSV
//! vector files, and the paired TSV format.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::paired::PairedDataset;
use crate::data::vector_set::VectorSet;
use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// On-disk layouts understood by [`load_vector_set`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorFormat {
    /// One record per line: `key v1 v2 ... vd`, whitespace-delimited.
    #[default]
    GloveText,
    /// One record per line: `key <TAB> v1 <TAB> ... <TAB> vd`.
    Tsv,
}

impl fmt::Display for VectorFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorFormat::GloveText => write!(f, "glove_text"),
            VectorFormat::Tsv => write!(f, "tsv"),
        }
    }
}

impl FromStr for VectorFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glove_text" | "glove" => Ok(VectorFormat::GloveText),
            "tsv" => Ok(VectorFormat::Tsv),
            other => Err(Error::InvalidArgument(format!(
                "unknown vector format `{other}` (expected glove_text or tsv)"
            ))),
        }
    }
}

fn parse_value<S: Scalar>(token: &str, line: usize) -> Result<S> {
    let v: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("non-numeric token `{token}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value `{token}`"),
        });
    }
    Ok(cast(v))
}

/// Reads a vector set from disk. Keys keep file order; the dimension is
/// inferred from the first record and enforced on every later line.
pub fn load_vector_set<S: Scalar>(path: &Path, format: VectorFormat) -> Result<VectorSet<S>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut keys: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<S>> = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = match format {
            VectorFormat::GloveText => line.split_whitespace().collect(),
            VectorFormat::Tsv => line.split('\t').collect(),
        };
        let key = fields[0];
        let mut row = Vec::with_capacity(fields.len() - 1);
        for token in &fields[1..] {
            row.push(parse_value::<S>(token.trim(), line_no)?);
        }
        match dim {
            None => {
                if row.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "record has a key but no vector components".into(),
                    });
                }
                dim = Some(row.len());
            }
            Some(d) if row.len() != d => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {d} components, found {}", row.len()),
                });
            }
            Some(_) => {}
        }
        keys.push(key.to_string());
        rows.push(row);
    }
    VectorSet::from_rows(keys, rows)
}

fn format_components<S: Scalar>(row: &[S]) -> String {
    row.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_components<S: Scalar>(field: &str, line: usize) -> Result<Vec<S>> {
    field
        .split(',')
        .map(|token| parse_value(token.trim(), line))
        .collect()
}

/// Writes a paired dataset as TSV: `key TAB label TAB x TAB y` when labels
/// are present, `key TAB x TAB y` otherwise. Vector components are
/// comma-separated and formatted so that reading the file back reproduces
/// the same values bit for bit.
pub fn write_paired_tsv<S: Scalar>(path: &Path, dataset: &PairedDataset<S>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for i in 0..dataset.len() {
        let key = &dataset.keys()[i];
        let x = format_components(dataset.x().vector(i));
        let y = format_components(dataset.y().vector(i));
        let record = match dataset.label(i) {
            Some(label) => format!("{key}\t{label}\t{x}\t{y}\n"),
            None => format!("{key}\t{x}\t{y}\n"),
        };
        out.write_all(record.as_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads the paired TSV format written by [`write_paired_tsv`]. Whether the
/// label column is present is inferred from the first record (4 fields with
/// labels, 3 without) and enforced on every later line.
pub fn load_paired_tsv<S: Scalar>(path: &Path) -> Result<PairedDataset<S>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut keys: Vec<String> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut x_rows: Vec<Vec<S>> = Vec::new();
    let mut y_rows: Vec<Vec<S>> = Vec::new();
    let mut labeled: Option<bool> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let has_label = match fields.len() {
            3 => false,
            4 => true,
            n => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 3 or 4 tab-separated fields, found {n}"),
                })
            }
        };
        match labeled {
            None => labeled = Some(has_label),
            Some(expected) if expected != has_label => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "mixed labeled and unlabeled records".into(),
                });
            }
            Some(_) => {}
        }
        keys.push(fields[0].to_string());
        let (x_field, y_field) = if has_label {
            labels.push(fields[1].to_string());
            (fields[2], fields[3])
        } else {
            (fields[1], fields[2])
        };
        x_rows.push(parse_components(x_field, line_no)?);
        y_rows.push(parse_components(y_field, line_no)?);
    }
    let x = VectorSet::from_rows(keys.clone(), x_rows)?;
    let y = VectorSet::from_rows(keys, y_rows)?;
    let labels = if labeled == Some(true) { Some(labels) } else { None };
    PairedDataset::new(x, y, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn glove_text_parses_in_file_order() {
        let f = write_temp("a 1 0\nb 0 1\n");
        let v: VectorSet<f64> = load_vector_set(f.path(), VectorFormat::GloveText).unwrap();
        assert_eq!(v.keys(), &["a".to_string(), "b".to_string()]);
        assert_eq!(v.dim(), 2);
        assert_eq!(v.vector(0), &[1.0, 0.0]);
        assert_eq!(v.vector(1), &[0.0, 1.0]);
    }

    #[test]
    fn duplicate_key_names_the_key() {
        let f = write_temp("a 1 0\na 2 2\n");
        let err = load_vector_set::<f64>(f.path(), VectorFormat::GloveText).unwrap_err();
        assert!(matches!(err, Error::DuplicateKey(k) if k == "a"));
    }

    #[test]
    fn dimension_error_names_the_line() {
        let f = write_temp("a 1 0 2\nb 1 0\nc 3 1 4\n");
        let err = load_vector_set::<f64>(f.path(), VectorFormat::GloveText).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn non_numeric_token_names_the_line() {
        let f = write_temp("a 1 0\nb x 1\n");
        let err = load_vector_set::<f64>(f.path(), VectorFormat::GloveText).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn tsv_vectors_parse() {
        let f = write_temp("a\t1\t0\nb\t0\t1\n");
        let v: VectorSet<f64> = load_vector_set(f.path(), VectorFormat::Tsv).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.vector(1), &[0.0, 1.0]);
    }

    #[test]
    fn paired_tsv_round_trips_bit_for_bit() {
        let keys = vec!["a".to_string(), "b".to_string()];
        let x = VectorSet::from_rows(keys.clone(), vec![vec![0.1, -2.5], vec![1.0 / 3.0, 4.0]])
            .unwrap();
        let y = VectorSet::from_rows(keys, vec![vec![7.25], vec![-0.125]]).unwrap();
        let ds = PairedDataset::new(x, y, Some(vec!["p".to_string(), "q".to_string()])).unwrap();

        let f = tempfile::NamedTempFile::new().unwrap();
        write_paired_tsv(f.path(), &ds).unwrap();
        let back: PairedDataset<f64> = load_paired_tsv(f.path()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn paired_tsv_without_labels() {
        let f = write_temp("a\t1,2\t3\nb\t4,5\t6\n");
        let ds: PairedDataset<f64> = load_paired_tsv(f.path()).unwrap();
        assert_eq!(ds.len(), 2);
        assert!(ds.labels().is_none());
        assert_eq!(ds.x().dim(), 2);
        assert_eq!(ds.y().dim(), 1);
        assert_eq!(ds.y().vector(1), &[6.0]);
    }

    #[test]
    fn mixed_label_presence_rejected() {
        let f = write_temp("a\tlab\t1,2\t3\nb\t4,5\t6\n");
        let err = load_paired_tsv::<f64>(f.path()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn missing_file_reports_path() {
        let err =
            load_vector_set::<f64>(Path::new("/nonexistent/v.txt"), VectorFormat::GloveText)
                .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}

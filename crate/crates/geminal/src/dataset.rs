//! Line-oriented dataset files: one JSON record per labeled structure,
//! preceded by a single manifest line.
//!
//! The format is append-safe and grep-able: every line is a complete JSON
//! object, records are self-describing, and the manifest pins the seed and a
//! hash of the generating configuration so a rerun can be checked against
//! the file it is supposed to reproduce.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DATASET_SCHEMA: &str = "geminal.dataset.v1";

/// First line of every dataset file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    /// Version of the code that wrote the file.
    pub version: String,
    pub seed: u64,
    /// Hash of the generating configuration (flags / config text).
    pub config_hash: String,
    pub count: usize,
}

/// Where a record's label came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Exact diagonalization of the structure itself.
    FciLabel { source: String },
    /// Sum of previously labeled fragments, additive by construction.
    Composite { sources: Vec<String> },
}

/// One labeled structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub family_tag: String,
    pub params: Vec<(String, f64)>,
    pub n_electrons: usize,
    /// Sorted descriptor eigenvalues.
    pub features: Vec<f64>,
    pub e_infinity: f64,
    pub e_nuclear: f64,
    pub target_total: f64,
    pub target_electronic: f64,
    pub provenance: Provenance,
}

/// A manifest plus its records, held in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(seed: u64, config_hash: String) -> Self {
        Dataset {
            manifest: Manifest {
                schema: DATASET_SCHEMA.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                seed,
                config_hash,
                count: 0,
            },
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: Record) {
        self.records.push(record);
        self.manifest.count = self.records.len();
    }

    /// Write the manifest line followed by one record per line.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut manifest = self.manifest.clone();
        manifest.count = self.records.len();
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer(&mut out, &manifest)?;
        out.write_all(b"\n")?;
        for record in &self.records {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Read and validate a dataset file.
    pub fn read(path: &Path) -> Result<Self> {
        let show = path.display().to_string();
        let file = File::open(path)?;
        let mut lines = BufReader::new(file).lines().enumerate();

        let manifest: Manifest = match lines.next() {
            Some((_, line)) => serde_json::from_str(&line?).map_err(|e| Error::Parse {
                path: show.clone(),
                line: 1,
                msg: format!("bad manifest: {e}"),
            })?,
            None => {
                return Err(Error::Parse {
                    path: show,
                    line: 1,
                    msg: "empty file".into(),
                })
            }
        };
        if manifest.schema != DATASET_SCHEMA {
            return Err(Error::Parse {
                path: show,
                line: 1,
                msg: format!("unsupported schema {:?}", manifest.schema),
            });
        }

        let mut records = Vec::with_capacity(manifest.count);
        for (idx, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: show.clone(),
                line: idx + 1,
                msg: e.to_string(),
            })?;
            records.push(record);
        }
        if records.len() != manifest.count {
            return Err(Error::Parse {
                path: show,
                line: 1,
                msg: format!(
                    "manifest promises {} records, file holds {}",
                    manifest.count,
                    records.len()
                ),
            });
        }
        let ds = Dataset { manifest, records };
        ds.validate()?;
        Ok(ds)
    }

    /// Structural invariants: finite labels, consistent energy bookkeeping,
    /// and one feature length per electron-count class.
    pub fn validate(&self) -> Result<()> {
        let mut lengths: Vec<(usize, usize)> = Vec::new();
        for r in &self.records {
            if !(r.target_total.is_finite()
                && r.target_electronic.is_finite()
                && r.e_nuclear.is_finite()
                && r.e_infinity.is_finite()
                && r.features.iter().all(|f| f.is_finite()))
            {
                return Err(Error::Data(format!("record {} has non-finite values", r.id)));
            }
            if (r.target_total - (r.target_electronic + r.e_nuclear)).abs() > 1e-10 {
                return Err(Error::Data(format!(
                    "record {}: electronic + nuclear = {} but total = {}",
                    r.id,
                    r.target_electronic + r.e_nuclear,
                    r.target_total
                )));
            }
            match lengths.iter().find(|(n, _)| *n == r.n_electrons) {
                Some(&(_, len)) if len != r.features.len() => {
                    return Err(Error::Data(format!(
                        "record {}: {} features but earlier {}-electron records have {}",
                        r.id,
                        r.features.len(),
                        r.n_electrons,
                        len
                    )));
                }
                Some(_) => {}
                None => lengths.push((r.n_electrons, r.features.len())),
            }
        }
        Ok(())
    }
}

/// 64-bit FNV-1a of a configuration string, hex-encoded. Stable across
/// platforms; used to tie a dataset file to the flags that produced it.
pub fn config_hash(text: &str) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, n: usize, feats: usize) -> Record {
        Record {
            id: id.into(),
            family_tag: "chain".into(),
            params: vec![("r".into(), 1.0)],
            n_electrons: n,
            features: vec![0.5; feats],
            e_infinity: -1.0,
            e_nuclear: 0.7,
            target_total: -1.1,
            target_electronic: -1.8,
            provenance: Provenance::FciLabel {
                source: format!("{id}.xyz"),
            },
        }
    }

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        let mut ds = Dataset::new(11, config_hash("demo"));
        ds.push(record("a", 2, 6));
        ds.push(record("b", 2, 6));
        ds.push(record("c", 4, 28));
        ds.write(&path).unwrap();
        let back = Dataset::read(&path).unwrap();
        assert_eq!(ds, back);
        assert_eq!(back.manifest.count, 3);
        assert_eq!(back.manifest.seed, 11);
    }

    #[test]
    fn rewrites_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        let mut ds = Dataset::new(5, config_hash("x"));
        ds.push(record("r0", 2, 6));
        ds.write(&a).unwrap();
        ds.write(&b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.jsonl");
        let mut ds = Dataset::new(0, config_hash(""));
        ds.push(record("a", 2, 6));
        ds.write(&path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{not json\n");
        std::fs::write(&path, text).unwrap();
        match Dataset::read(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.jsonl");
        let mut ds = Dataset::new(0, config_hash(""));
        ds.push(record("a", 2, 6));
        ds.push(record("b", 2, 6));
        ds.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let kept: Vec<&str> = text.lines().take(2).collect();
        std::fs::write(&path, kept.join("\n")).unwrap();
        assert!(matches!(Dataset::read(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn validation_rejects_inconsistent_records() {
        let mut ds = Dataset::new(0, config_hash(""));
        ds.push(record("a", 2, 6));
        let mut odd = record("b", 2, 7);
        odd.provenance = Provenance::Composite {
            sources: vec!["a".into(), "c".into()],
        };
        ds.push(odd);
        assert!(matches!(ds.validate(), Err(Error::Data(_))));

        let mut ds = Dataset::new(0, config_hash(""));
        let mut bad = record("a", 2, 6);
        bad.target_total = -5.0; // breaks electronic + nuclear bookkeeping
        ds.push(bad);
        assert!(matches!(ds.validate(), Err(Error::Data(_))));
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        assert_eq!(config_hash(""), "cbf29ce484222325");
        assert_eq!(config_hash("a"), config_hash("a"));
        assert_ne!(config_hash("a"), config_hash("b"));
    }
}

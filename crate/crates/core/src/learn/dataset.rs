//! Labelled feature tables.
//!
//! A dataset is a dense numeric table: one row per subject-frame, one
//! column per feature, plus the yaw label in degrees and the subject each
//! row came from (training splits group by subject). Tables round-trip
//! through CSV with a JSON sidecar carrying the feature schema, so a
//! table built on one machine can be audited and retrained elsewhere.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSchema;
use crate::report::{csv_err, fmt_f64};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub schema: FeatureSchema,
    /// Row-major feature matrix; every row has `schema.len()` values.
    pub rows: Vec<Vec<f64>>,
    /// Yaw labels, degrees in `[-180, 180)`.
    pub labels: Vec<f64>,
    /// Owning subject per row.
    pub subjects: Vec<String>,
    /// Stable row identifier (for example `B03/17`).
    pub frame_ids: Vec<String>,
}

/// Sidecar written next to the CSV: the schema the columns came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SchemaSidecar {
    version: u32,
    hash: String,
    names: Vec<String>,
}

impl Dataset {
    pub fn new(schema: FeatureSchema) -> Dataset {
        Dataset {
            schema,
            ..Dataset::default()
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn push_row(
        &mut self,
        frame_id: String,
        subject: String,
        label: f64,
        values: Vec<f64>,
    ) -> Result<()> {
        if values.len() != self.schema.len() {
            return Err(Error::Dataset(format!(
                "row {frame_id}: {} values, schema has {}",
                values.len(),
                self.schema.len()
            )));
        }
        if !label.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dataset(format!("row {frame_id}: non-finite value")));
        }
        self.rows.push(values);
        self.labels.push(label);
        self.subjects.push(subject);
        self.frame_ids.push(frame_id);
        Ok(())
    }

    /// Distinct subjects in first-appearance order.
    pub fn unique_subjects(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.subjects {
            if !out.contains(s) {
                out.push(s.clone());
            }
        }
        out
    }

    /// Rows per subject.
    pub fn subject_counts(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for s in &self.subjects {
            match out.iter_mut().find(|(name, _)| name == s) {
                Some((_, c)) => *c += 1,
                None => out.push((s.clone(), 1)),
            }
        }
        out
    }

    /// A copy restricted to the given feature columns (in the given
    /// order). The schema shrinks with it, and its hash changes.
    pub fn select_features(&self, indices: &[usize]) -> Result<Dataset> {
        for &i in indices {
            if i >= self.schema.len() {
                return Err(Error::Dataset(format!(
                    "feature index {i} out of range ({} features)",
                    self.schema.len()
                )));
            }
        }
        let names: Vec<String> = indices
            .iter()
            .map(|&i| self.schema.names[i].clone())
            .collect();
        let schema = FeatureSchema {
            version: self.schema.version,
            names,
        };
        let rows = self
            .rows
            .iter()
            .map(|r| indices.iter().map(|&i| r[i]).collect())
            .collect();
        Ok(Dataset {
            schema,
            rows,
            labels: self.labels.clone(),
            subjects: self.subjects.clone(),
            frame_ids: self.frame_ids.clone(),
        })
    }

    /// A copy containing only the given row indices.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            subjects: rows.iter().map(|&i| self.subjects[i].clone()).collect(),
            frame_ids: rows.iter().map(|&i| self.frame_ids[i].clone()).collect(),
        }
    }

    fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("schema.json")
    }

    /// Write the table as CSV plus a schema sidecar.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        let mut header = vec!["frame_id".to_string(), "subject_id".into(), "label_deg".into()];
        header.extend(self.schema.names.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.n_rows() {
            let mut rec = vec![
                self.frame_ids[i].clone(),
                self.subjects[i].clone(),
                fmt_f64(self.labels[i]),
            ];
            rec.extend(self.rows[i].iter().map(|v| fmt_f64(*v)));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;

        let sidecar = SchemaSidecar {
            version: self.schema.version,
            hash: self.schema.hash(),
            names: self.schema.names.clone(),
        };
        let mut f = BufWriter::new(File::create(Self::sidecar_path(path))?);
        serde_json::to_writer_pretty(&mut f, &sidecar)
            .map_err(|e| Error::Dataset(format!("schema sidecar: {e}")))?;
        f.write_all(b"\n")?;
        Ok(())
    }

    /// Load a table written by [`Dataset::save_csv`]. The sidecar is
    /// required and must match the CSV columns and its own hash.
    pub fn load_csv(path: &Path) -> Result<Dataset> {
        let sidecar_path = Self::sidecar_path(path);
        let file = File::open(&sidecar_path).map_err(|e| {
            Error::Dataset(format!(
                "missing schema sidecar {}: {e}",
                sidecar_path.display()
            ))
        })?;
        let sidecar: SchemaSidecar = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Dataset(format!("schema sidecar: {e}")))?;
        let schema = FeatureSchema {
            version: sidecar.version,
            names: sidecar.names,
        };
        if schema.hash() != sidecar.hash {
            return Err(Error::SchemaMismatch {
                model: sidecar.hash,
                data: schema.hash(),
            });
        }

        let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
        let header = r.headers().map_err(csv_err)?.clone();
        let expected: Vec<&str> = ["frame_id", "subject_id", "label_deg"]
            .into_iter()
            .chain(schema.names.iter().map(String::as_str))
            .collect();
        let got: Vec<&str> = header.iter().collect();
        if got != expected {
            return Err(Error::Dataset(format!(
                "CSV columns do not match the schema sidecar (got {} columns, expected {})",
                got.len(),
                expected.len()
            )));
        }

        let mut ds = Dataset::new(schema);
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| Error::Dataset(format!("row {}: {e}", line + 2)))
            };
            let label = parse(&rec[2])?;
            let values: Vec<f64> = rec
                .iter()
                .skip(3)
                .map(parse)
                .collect::<Result<_>>()?;
            ds.push_row(rec[0].to_string(), rec[1].to_string(), label, values)?;
        }
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn tiny_schema() -> FeatureSchema {
        FeatureSchema {
            version: 1,
            names: vec!["a".into(), "b".into(), "c".into()],
        }
    }

    fn tiny_dataset() -> Dataset {
        let mut ds = Dataset::new(tiny_schema());
        ds.push_row("s1/0".into(), "s1".into(), 12.5, vec![1.0, -2.0, 0.125])
            .unwrap();
        ds.push_row("s1/1".into(), "s1".into(), -90.0, vec![0.1, 0.2, 0.3])
            .unwrap();
        ds.push_row("s2/0".into(), "s2".into(), 45.0, vec![9.0, 8.0, 7.0])
            .unwrap();
        ds
    }

    #[test]
    fn push_row_validates_width_and_finiteness() {
        let mut ds = Dataset::new(tiny_schema());
        assert!(ds
            .push_row("x".into(), "s".into(), 0.0, vec![1.0, 2.0])
            .is_err());
        assert!(ds
            .push_row("x".into(), "s".into(), f64::NAN, vec![1.0, 2.0, 3.0])
            .is_err());
        assert!(ds
            .push_row("x".into(), "s".into(), 0.0, vec![1.0, f64::INFINITY, 3.0])
            .is_err());
        assert_eq!(ds.n_rows(), 0);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("table.csv");
        let mut ds = tiny_dataset();
        // Awkward values that expose lossy formatting.
        ds.push_row(
            "s2/1".into(),
            "s2".into(),
            -179.99999999999997,
            vec![1e-300, 123456789.123456789, -0.0],
        )
        .unwrap();
        ds.save_csv(&path).unwrap();
        let back = Dataset::load_csv(&path).unwrap();
        assert_eq!(back.schema, ds.schema);
        assert_eq!(back.frame_ids, ds.frame_ids);
        assert_eq!(back.subjects, ds.subjects);
        for i in 0..ds.n_rows() {
            assert_eq!(back.labels[i].to_bits(), ds.labels[i].to_bits());
            for j in 0..ds.n_features() {
                assert_eq!(back.rows[i][j].to_bits(), ds.rows[i][j].to_bits());
            }
        }
    }

    #[test]
    fn load_requires_matching_sidecar() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("table.csv");
        let ds = tiny_dataset();
        ds.save_csv(&path).unwrap();
        std::fs::remove_file(dir.path().join("table.schema.json")).unwrap();
        assert!(Dataset::load_csv(&path).is_err());
    }

    #[test]
    fn select_features_reorders_and_rehashes() {
        let ds = tiny_dataset();
        let sel = ds.select_features(&[2, 0]).unwrap();
        assert_eq!(sel.schema.names, vec!["c".to_string(), "a".into()]);
        assert_eq!(sel.rows[0], vec![0.125, 1.0]);
        assert_ne!(sel.schema.hash(), ds.schema.hash());
        assert!(ds.select_features(&[3]).is_err());
    }

    #[test]
    fn select_rows_keeps_alignment() {
        let ds = tiny_dataset();
        let sel = ds.select_rows(&[2, 0]);
        assert_eq!(sel.subjects, vec!["s2".to_string(), "s1".into()]);
        assert_eq!(sel.labels, vec![45.0, 12.5]);
        assert_eq!(sel.frame_ids, vec!["s2/0".to_string(), "s1/0".into()]);
    }

    #[test]
    fn subject_bookkeeping() {
        let ds = tiny_dataset();
        assert_eq!(ds.unique_subjects(), vec!["s1".to_string(), "s2".into()]);
        assert_eq!(
            ds.subject_counts(),
            vec![("s1".to_string(), 2), ("s2".to_string(), 1)]
        );
    }
}

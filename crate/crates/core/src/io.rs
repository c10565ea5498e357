//! File formats: line-delimited trajectory records, persisted spatial
//! covariance models and run configuration.
//!
//! A trajectory file holds one JSON object per line. An optional first line
//! of the form `{"header": {...}}` carries free-form metadata.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bridge::{LatentTrajectory, SpatialCovariance};
use crate::error::{Error, Result};
use crate::numerics::SpdMatrix;
use crate::seeding;

pub const TOOL_VERSION: &str = concat!("bbscore ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRecord {
    pub id: String,
    pub domain: String,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl TrajectoryRecord {
    pub fn from_trajectory(traj: &LatentTrajectory, label: Option<String>) -> Self {
        Self {
            id: traj.id().to_string(),
            domain: traj.domain().to_string(),
            points: traj.to_rows(),
            label,
        }
    }

    pub fn to_trajectory(&self) -> Result<LatentTrajectory> {
        LatentTrajectory::from_rows(self.id.clone(), self.domain.clone(), &self.points)
    }

    /// Checks record invariants; `line` is only used for diagnostics.
    pub fn validate(&self, line: usize) -> Result<()> {
        let fail = |field: String, message: String| Error::Format { line, field, message };
        if self.id.is_empty() {
            return Err(fail("id".into(), "must be a non-empty string".into()));
        }
        if self.points.len() < 3 {
            return Err(fail(
                "points".into(),
                format!("need at least 3 points, got {}", self.points.len()),
            ));
        }
        let d = self.points[0].len();
        if d == 0 {
            return Err(fail("points[0]".into(), "points must have at least one coordinate".into()));
        }
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != d {
                return Err(fail(
                    format!("points[{i}]"),
                    format!("has {} coordinates, expected {d}", p.len()),
                ));
            }
            if let Some(j) = p.iter().position(|v| !v.is_finite()) {
                return Err(fail(format!("points[{i}][{j}]"), "not a finite number".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryFile {
    pub header: Option<Value>,
    pub records: Vec<TrajectoryRecord>,
}

impl TrajectoryFile {
    pub fn trajectories(&self) -> Result<Vec<LatentTrajectory>> {
        self.records.iter().map(TrajectoryRecord::to_trajectory).collect()
    }

    /// Records whose domain equals `domain` (all when `None`).
    pub fn filtered(&self, domain: Option<&str>) -> Vec<&TrajectoryRecord> {
        self.records
            .iter()
            .filter(|r| domain.is_none_or(|d| r.domain == d))
            .collect()
    }
}

/// Reads and validates a whole trajectory file. Line numbers are 1-based.
pub fn read_trajectories<R: BufRead>(reader: R) -> Result<TrajectoryFile> {
    let mut file = TrajectoryFile::default();
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Format {
            line: lineno,
            field: "<line>".into(),
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(trimmed).map_err(|e| Error::Format {
            line: lineno,
            field: "<json>".into(),
            message: e.to_string(),
        })?;
        if let Some(header) = value.get("header") {
            if file.header.is_some() || !file.records.is_empty() {
                return Err(Error::Format {
                    line: lineno,
                    field: "header".into(),
                    message: "header must be the first record".into(),
                });
            }
            file.header = Some(header.clone());
            continue;
        }
        let record: TrajectoryRecord = serde_json::from_value(value).map_err(|e| Error::Format {
            line: lineno,
            field: "<record>".into(),
            message: e.to_string(),
        })?;
        record.validate(lineno)?;
        if !ids.insert(record.id.clone()) {
            return Err(Error::Format {
                line: lineno,
                field: "id".into(),
                message: format!("duplicate id '{}'", record.id),
            });
        }
        file.records.push(record);
    }
    Ok(file)
}

pub fn write_trajectories<W: Write>(mut out: W, file: &TrajectoryFile) -> std::io::Result<()> {
    if let Some(header) = &file.header {
        serde_json::to_writer(&mut out, &serde_json::json!({ "header": header }))?;
        out.write_all(b"\n")?;
    }
    for r in &file.records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// A fitted spatial covariance persisted with enough metadata to audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaModelFile {
    pub d: usize,
    /// Pooled degrees of freedom `Σᵢ (Tᵢ − 1)`.
    pub weight: usize,
    pub domain: String,
    pub epsilon: f64,
    pub matrix: Vec<Vec<f64>>,
    pub created_by: String,
    pub source_corpus_digest: String,
}

impl SigmaModelFile {
    pub fn new(
        sigma: &SpatialCovariance,
        weight: usize,
        domain: impl Into<String>,
        epsilon: f64,
        source_corpus_digest: impl Into<String>,
    ) -> Self {
        let m = sigma.matrix();
        Self {
            d: sigma.dim(),
            weight,
            domain: domain.into(),
            epsilon,
            matrix: m.rows().into_iter().map(|r| r.to_vec()).collect(),
            created_by: TOOL_VERSION.to_string(),
            source_corpus_digest: source_corpus_digest.into(),
        }
    }

    /// Validates shape, symmetry, positive-definiteness and `weight ≥ d`.
    pub fn spatial(&self) -> Result<SpatialCovariance> {
        let fail = |field: &str, message: String| Error::Format {
            line: 1,
            field: field.to_string(),
            message,
        };
        if self.d == 0 {
            return Err(fail("d", "must be positive".into()));
        }
        if self.matrix.len() != self.d || self.matrix.iter().any(|r| r.len() != self.d) {
            return Err(fail("matrix", format!("must be {0}×{0}", self.d)));
        }
        if self.weight < self.d {
            return Err(Error::InsufficientData {
                weight: self.weight,
                dim: self.d,
            });
        }
        let m = Array2::from_shape_fn((self.d, self.d), |(i, j)| self.matrix[i][j]);
        if m.iter().any(|v| !v.is_finite()) {
            return Err(fail("matrix", "entries must be finite".into()));
        }
        Ok(SpatialCovariance::new(SpdMatrix::new(m)?))
    }

    pub fn read_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text).map_err(|e| Error::Format {
            line: e.line(),
            field: "<model>".into(),
            message: e.to_string(),
        })?;
        model.spatial()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }
}

/// Hex SHA-256 of raw file contents.
pub fn corpus_digest(bytes: &[u8]) -> String {
    seeding::digest_hex(bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub epsilon: f64,
    pub use_pvalue: bool,
    pub triplet_mode: bool,
    pub copies: usize,
    pub block_sizes: Vec<usize>,
    pub windows: Vec<usize>,
    pub window_size: usize,
    pub step_size: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            epsilon: 1e-7,
            use_pvalue: false,
            triplet_mode: false,
            copies: 20,
            block_sizes: vec![1, 2, 5, 10],
            windows: vec![1, 2, 3],
            window_size: 3,
            step_size: 1e-9,
            batch_size: 32,
            epochs: 100,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Domain(m.to_string()));
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if self.copies == 0 {
            return bad("copies must be positive");
        }
        if self.block_sizes.contains(&0) {
            return bad("block sizes must be positive");
        }
        if self.windows.contains(&0) {
            return bad("window counts must be positive");
        }
        if self.window_size < 2 {
            return bad("window size must be at least 2");
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return bad("step size must be positive and finite");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn parse(text: &str) -> Result<TrajectoryFile> {
        read_trajectories(text.as_bytes())
    }

    #[test]
    fn round_trip_with_header() {
        let file = TrajectoryFile {
            header: Some(serde_json::json!({"seed": 3})),
            records: vec![
                TrajectoryRecord {
                    id: "a".into(),
                    domain: "x".into(),
                    points: vec![vec![0.0, 1.0], vec![0.5, -0.25], vec![1.0, 0.0]],
                    label: Some("high".into()),
                },
                TrajectoryRecord {
                    id: "b".into(),
                    domain: "y".into(),
                    points: vec![vec![1e-300, 2.0], vec![0.1, 0.2], vec![3.0, 4.0], vec![5.0, 6.0]],
                    label: None,
                },
            ],
        };
        let mut buf = Vec::new();
        write_trajectories(&mut buf, &file).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.filtered(Some("y")).len(), 1);
        assert_eq!(back.trajectories().unwrap()[1].horizon(), 3);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let ragged = "{\"id\":\"a\",\"domain\":\"x\",\"points\":[[1,2],[3],[4,5]]}";
        match parse(ragged) {
            Err(Error::Format { line, field, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(field, "points[1]");
            }
            other => panic!("{other:?}"),
        }
        let short = "\n{\"id\":\"a\",\"domain\":\"x\",\"points\":[[1],[2]]}";
        assert!(matches!(parse(short), Err(Error::Format { line: 2, .. })));
        let dup = "{\"id\":\"a\",\"domain\":\"x\",\"points\":[[1],[2],[3]]}\n{\"id\":\"a\",\"domain\":\"x\",\"points\":[[1],[2],[3]]}";
        match parse(dup) {
            Err(Error::Format { line: 2, field, .. }) => assert_eq!(field, "id"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("{not json"), Err(Error::Format { line: 1, .. })));
        let late_header = "{\"id\":\"a\",\"domain\":\"x\",\"points\":[[1],[2],[3]]}\n{\"header\":{}}";
        assert!(matches!(parse(late_header), Err(Error::Format { line: 2, .. })));
    }

    #[test]
    fn empty_file_with_header_is_valid() {
        let f = parse("{\"header\":{\"n\":0}}\n").unwrap();
        assert!(f.records.is_empty());
        assert!(f.header.is_some());
    }

    #[test]
    fn sigma_model_validation() {
        let sigma = SpatialCovariance::from_matrix(array![[2.0, 0.5], [0.5, 1.0]]).unwrap();
        let model = SigmaModelFile::new(&sigma, 10, "x", 1e-7, "00");
        let back = SigmaModelFile::read_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.spatial().unwrap().matrix(), sigma.matrix());

        let mut asym = model.clone();
        asym.matrix[0][1] = 0.7;
        assert!(matches!(asym.spatial(), Err(Error::NotSymmetric { .. })));
        let mut indefinite = model.clone();
        indefinite.matrix = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(matches!(indefinite.spatial(), Err(Error::NotPositiveDefinite { .. })));
        let mut light = model.clone();
        light.weight = 1;
        assert!(matches!(light.spatial(), Err(Error::InsufficientData { .. })));
        let mut ragged = model;
        ragged.matrix[1].pop();
        assert!(matches!(ragged.spatial(), Err(Error::Format { .. })));
    }

    #[test]
    fn run_config_defaults_and_ranges() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.epsilon, 1e-7);
        assert_eq!(c.copies, 20);
        assert_eq!(c.block_sizes, vec![1, 2, 5, 10]);
        assert_eq!(c.window_size, 3);
        let parsed: RunConfig = serde_json::from_str("{\"seed\": 9}").unwrap();
        assert_eq!(parsed.seed, 9);
        assert_eq!(parsed.copies, 20);
        assert!(RunConfig { epsilon: 2.0, ..c.clone() }.validate().is_err());
        assert!(RunConfig { window_size: 1, ..c.clone() }.validate().is_err());
        assert!(RunConfig { block_sizes: vec![0], ..c }.validate().is_err());
    }
}

//! CSV ingestion.

use std::path::Path;

use rdd_core::{Observation, Sample};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Read { path: String, source: csv::Error },
    #[error("{0}: file is empty")]
    EmptyFile(String),
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: &'static str },
    #[error("{path}: line {line}: cannot parse {value:?} as a number")]
    UnparseableValue { path: String, line: u64, value: String },
    #[error("{path}: {source}")]
    Invalid { path: String, source: rdd_core::Error },
}

impl IngestError {
    pub fn name(&self) -> &'static str {
        match self {
            IngestError::Read { .. } => "Read",
            IngestError::EmptyFile(_) => "EmptyFile",
            IngestError::MissingColumn { .. } => "MissingColumn",
            IngestError::UnparseableValue { .. } => "UnparseableValue",
            IngestError::Invalid { .. } => "InvalidSample",
        }
    }
}

/// Reads columns `y` and `z` (any order, extra columns ignored), keeping
/// row order.
pub fn ingest_csv(path: &Path) -> Result<Sample, IngestError> {
    let name = path.display().to_string();
    let read_err = |source| IngestError::Read { path: name.clone(), source };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(read_err)?;
    let headers = reader.headers().map_err(read_err)?.clone();
    if headers.is_empty() {
        return Err(IngestError::EmptyFile(name));
    }
    let column = |column: &'static str| {
        headers
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| IngestError::MissingColumn { path: name.clone(), column })
    };
    let (iy, iz) = (column("y")?, column("z")?);

    let mut obs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(read_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let parse = |i: usize| {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>().map_err(|_| IngestError::UnparseableValue {
                path: name.clone(),
                line,
                value: raw.to_string(),
            })
        };
        obs.push(Observation { y: parse(iy)?, z: parse(iz)? });
    }
    if obs.is_empty() {
        return Err(IngestError::EmptyFile(name));
    }
    Sample::new(obs).map_err(|source| IngestError::Invalid { path: name, source })
}

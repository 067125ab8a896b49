//! JSON-lines persistence: `records.jsonl` carries the spec and one line
//! per replica; `summary.json` carries the evaluated summary. Loading
//! reproduces the record exactly.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentRecord, ExperimentSpec, ReplicaRecord, Summary};
use crate::{Error, Result};

const RECORDS_FILE: &str = "records.jsonl";
const SUMMARY_FILE: &str = "summary.json";

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Spec(ExperimentSpec),
    Replica(ReplicaRecord),
}

#[derive(Serialize, Deserialize)]
struct SummaryDoc {
    spec: ExperimentSpec,
    summary: Summary,
}

/// Writes the spec and raw replica lines; called before any verdict is
/// computed so a crash still leaves the data on disk.
pub fn write_replicas(
    dir: &Path,
    spec: &ExperimentSpec,
    replicas: &[ReplicaRecord],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join(RECORDS_FILE))?);
    serde_json::to_writer(&mut w, &Line::Spec(spec.clone()))?;
    w.write_all(b"\n")?;
    for r in replicas {
        serde_json::to_writer(&mut w, &Line::Replica(r.clone()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(dir: &Path, record: &ExperimentRecord) -> Result<()> {
    fs::create_dir_all(dir)?;
    let doc = SummaryDoc {
        spec: record.spec.clone(),
        summary: record.summary.clone(),
    };
    fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

/// Persists a complete record (replica lines plus summary).
pub fn persist(dir: &Path, record: &ExperimentRecord) -> Result<()> {
    write_replicas(dir, &record.spec, &record.replicas)?;
    write_summary(dir, record)
}

/// Loads a persisted record, verifying the summary belongs to the replica
/// file it sits next to.
pub fn load(dir: &Path) -> Result<ExperimentRecord> {
    let reader = BufReader::new(File::open(dir.join(RECORDS_FILE))?);
    let mut spec: Option<ExperimentSpec> = None;
    let mut replicas = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|e| Error::CorruptRecord {
            line: i + 1,
            reason: e.to_string(),
        })?;
        match (parsed, i) {
            (Line::Spec(s), 0) => spec = Some(s),
            (Line::Spec(_), _) => {
                return Err(Error::SchemaMismatch("spec line after the first".into()))
            }
            (Line::Replica(_), 0) => {
                return Err(Error::SchemaMismatch("first line must be the spec".into()))
            }
            (Line::Replica(r), _) => replicas.push(r),
        }
    }
    let spec = spec.ok_or_else(|| Error::SchemaMismatch("empty records file".into()))?;
    let text = fs::read_to_string(dir.join(SUMMARY_FILE))?;
    let doc: SummaryDoc = serde_json::from_str(&text)?;
    if doc.spec != spec {
        return Err(Error::SchemaMismatch(
            "summary spec disagrees with records file".into(),
        ));
    }
    if replicas.len() != spec.replicas {
        return Err(Error::SchemaMismatch(format!(
            "records file holds {} replicas, spec expects {}",
            replicas.len(),
            spec.replicas
        )));
    }
    Ok(ExperimentRecord {
        spec,
        replicas,
        summary: doc.summary,
    })
}

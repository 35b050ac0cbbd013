//! JSONL record files.
//!
//! The first line is a header object
//! `{"schema":"smoothcert-records","version":1,"kind":"<command>"}`; every
//! following line is one record. Lines are flushed as they are written, so
//! an interrupted run leaves a valid prefix.

use std::fs::{self, File};
use std::io::{self, LineWriter, Write};
use std::path::Path;

use anyhow::anyhow;
use serde::{Deserialize, Serialize};
use smoothcert::report::CertificationRecord;
use smoothcert::smoothing::Label;

use crate::failure::{Classify, Failure};

pub const SCHEMA: &str = "smoothcert-records";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub schema: String,
    pub version: u32,
    pub kind: String,
}

impl Header {
    pub fn new(kind: &str) -> Self {
        Self { schema: SCHEMA.into(), version: VERSION, kind: kind.into() }
    }
}

/// One `predict` result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRecord {
    pub example_index: u64,
    pub true_label: Label,
    /// `null` on abstention.
    pub predicted_label: Option<Label>,
    pub sigma: f64,
    pub n: u64,
    pub alpha: f64,
    pub seed: u64,
    pub wall_time_ms: Option<f64>,
}

/// One `attack` result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackRecord {
    pub example_index: u64,
    pub true_label: Label,
    pub radius: f64,
    pub success: bool,
    /// The success check's prediction at the perturbed point.
    pub predicted_label: Option<Label>,
    pub delta_norm: f64,
    pub delta: Vec<f64>,
    pub skipped_steps: usize,
    pub sigma: f64,
    pub seed: u64,
}

pub struct RecordWriter {
    out: Box<dyn Write>,
}

impl RecordWriter {
    /// Writes to `path`, or to standard output for `None`.
    pub fn create(path: Option<&Path>, kind: &str) -> Result<Self, Failure> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(LineWriter::new(
                File::create(p).input_ctx(|| format!("cannot create output file {}", p.display()))?,
            )),
            None => Box::new(LineWriter::new(io::stdout())),
        };
        let mut w = Self { out };
        w.write(&Header::new(kind))?;
        Ok(w)
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<(), Failure> {
        let line = serde_json::to_string(record).map_err(Failure::runtime)?;
        writeln!(self.out, "{line}").runtime_ctx(|| "cannot write record".into())?;
        self.out.flush().runtime_ctx(|| "cannot write record".into())
    }
}

/// Parses a certification record file, checking the header and every
/// record's invariants.
pub fn read_certify_records(path: &Path) -> Result<Vec<CertificationRecord>, Failure> {
    let text = fs::read_to_string(path).input_ctx(|| format!("cannot read records {}", path.display()))?;
    parse_certify_records(&text).input_ctx(|| format!("malformed records {}", path.display()))
}

pub fn parse_certify_records(text: &str) -> anyhow::Result<Vec<CertificationRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| anyhow!("empty file"))?;
    let header: Header = serde_json::from_str(first).map_err(|e| anyhow!("line 1: bad header: {e}"))?;
    if header.schema != SCHEMA || header.version != VERSION {
        return Err(anyhow!("unsupported schema {} version {}", header.schema, header.version));
    }
    if header.kind != "certify" {
        return Err(anyhow!("expected certify records, found `{}`", header.kind));
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let rec: CertificationRecord = serde_json::from_str(line).map_err(|e| anyhow!("line {}: {e}", i + 1))?;
        rec.validate().map_err(|e| anyhow!("line {}: {e}", i + 1))?;
        records.push(rec);
    }
    if records.is_empty() {
        return Err(anyhow!("no records"));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = r#"{"schema":"smoothcert-records","version":1,"kind":"certify"}"#;
    const RECORD: &str = r#"{"example_index":0,"true_label":1,"outcome":"certified","predicted_label":1,"radius":"inf","pa_lower":1.0,"sigma":1.0,"n0":100,"n":100,"alpha":0.001,"seed":0,"wall_time_ms":null}"#;

    #[test]
    fn header_serialization_is_frozen() {
        assert_eq!(serde_json::to_string(&Header::new("certify")).unwrap(), HEADER);
    }

    #[test]
    fn parses_valid_files() {
        let recs = parse_certify_records(&format!("{HEADER}\n{RECORD}\n\n")).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].radius.unwrap().is_unbounded());
    }

    #[test]
    fn rejects_bad_files() {
        let unknown = RECORD.replace("\"seed\"", "\"extra\":1,\"seed\"");
        let abstain_with_radius = RECORD.replace("\"certified\"", "\"abstain\"");
        let other_kind = HEADER.replace("certify", "predict");
        let other_version = HEADER.replace(":1,", ":2,");
        for text in [
            String::new(),
            RECORD.to_string(),
            format!("{HEADER}\n"),
            format!("{HEADER}\n{unknown}"),
            format!("{HEADER}\n{abstain_with_radius}"),
            format!("{other_kind}\n{RECORD}"),
            format!("{other_version}\n{RECORD}"),
        ] {
            assert!(parse_certify_records(&text).is_err(), "{text}");
        }
    }
}

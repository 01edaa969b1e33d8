//! Append-only newline-delimited audit logs.
//!
//! Every line is one self-contained JSON object with a leading `"v":1`
//! version field and a fixed field order. Lines never depend on each other,
//! so a log can be streamed, concatenated or split at any line boundary.
//!
//! SERP log line fields, in order: `v, audit_id, engine, bot_id, bot_type,
//! location, language, history_kind, query_text, query_category,
//! timestamp_ms, status, results`, where `results` is an array of
//! `{rank, url, domain, title, snippet}`.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    BotMeta, BotType, HistoryKind, Language, Location, ModelError, QueryCategory, RankedResult,
    SerpRecord, SerpStatus,
};

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unsupported log version {found} (expected {LOG_VERSION})")]
    Version { line: usize, found: u64 },
    #[error("line {line}: truncated record (no trailing newline)")]
    Truncated { line: usize },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: ModelError },
}

#[derive(Serialize, Deserialize)]
struct SerpLine {
    v: u32,
    audit_id: String,
    engine: String,
    bot_id: String,
    bot_type: BotType,
    location: Location,
    language: Language,
    history_kind: HistoryKind,
    query_text: String,
    query_category: QueryCategory,
    timestamp_ms: i64,
    status: SerpStatus,
    results: Vec<RankedResult>,
}

impl From<&SerpRecord> for SerpLine {
    fn from(r: &SerpRecord) -> Self {
        SerpLine {
            v: LOG_VERSION,
            audit_id: r.audit_id.clone(),
            engine: r.engine.clone(),
            bot_id: r.bot.bot_id.clone(),
            bot_type: r.bot.bot_type,
            location: r.bot.location.clone(),
            language: r.bot.language.clone(),
            history_kind: r.bot.history_kind,
            query_text: r.query_text.clone(),
            query_category: r.query_category,
            timestamp_ms: r.timestamp_ms,
            status: r.status,
            results: r.results.clone(),
        }
    }
}

impl TryFrom<SerpLine> for SerpRecord {
    type Error = ModelError;
    fn try_from(l: SerpLine) -> Result<Self, ModelError> {
        SerpRecord::new(
            l.audit_id,
            l.engine,
            BotMeta {
                bot_id: l.bot_id,
                bot_type: l.bot_type,
                location: l.location,
                language: l.language,
                history_kind: l.history_kind,
            },
            l.query_text,
            l.query_category,
            l.timestamp_ms,
            l.status,
            l.results,
        )
    }
}

/// Canonical single-line encoding of a record, including the trailing newline.
pub fn encode_serp_line(record: &SerpRecord) -> String {
    let mut s = serde_json::to_string(&SerpLine::from(record)).expect("log line serializes");
    s.push('\n');
    s
}

/// Decodes one line (with or without its newline). `line_no` is 1-based and
/// only used in errors.
pub fn decode_serp_line(line: &str, line_no: usize) -> Result<SerpRecord, LogError> {
    let value: serde_json::Value = serde_json::from_str(line.trim_end_matches(['\n', '\r']))
        .map_err(|e| LogError::Malformed { line: line_no, message: e.to_string() })?;
    check_version(&value, line_no)?;
    let parsed: SerpLine = serde_json::from_value(value)
        .map_err(|e| LogError::Malformed { line: line_no, message: e.to_string() })?;
    SerpRecord::try_from(parsed).map_err(|source| LogError::Invalid { line: line_no, source })
}

fn check_version(value: &serde_json::Value, line: usize) -> Result<(), LogError> {
    match value.get("v").and_then(|v| v.as_u64()) {
        Some(v) if v == LOG_VERSION as u64 => Ok(()),
        Some(found) => Err(LogError::Version { line, found }),
        None => Err(LogError::Malformed { line, message: "missing version field \"v\"".into() }),
    }
}

/// Single-writer appender. Each record is written with one `write_all` of a
/// complete line; if that fails the file is truncated back to its previous
/// length so no partial line survives.
#[derive(Debug)]
pub struct LogWriter {
    file: File,
    path: PathBuf,
    len: u64,
    written: usize,
}

impl LogWriter {
    pub fn append_to(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| LogError::Io { path: path.clone(), source };
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err)?;
        let len = file.metadata().map_err(io_err)?.len();
        Ok(LogWriter { file, path, len, written: 0 })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Lines written through this writer.
    pub fn written(&self) -> usize {
        self.written
    }

    pub fn append_line(&mut self, line: &str) -> Result<(), LogError> {
        debug_assert!(line.ends_with('\n') && !line[..line.len() - 1].contains('\n'));
        if let Err(source) = self.file.write_all(line.as_bytes()) {
            let _ = self.file.set_len(self.len);
            return Err(LogError::Io { path: self.path.clone(), source });
        }
        self.len += line.len() as u64;
        self.written += 1;
        Ok(())
    }

    pub fn append(&mut self, record: &SerpRecord) -> Result<(), LogError> {
        self.append_line(&encode_serp_line(record))
    }

    pub fn append_json<T: Serialize>(&mut self, value: &T) -> Result<(), LogError> {
        let mut s = serde_json::to_string(&Versioned { v: LOG_VERSION, inner: value })
            .expect("record serializes");
        s.push('\n');
        self.append_line(&s)
    }

    pub fn flush(&mut self) -> Result<(), LogError> {
        self.file
            .flush()
            .map_err(|source| LogError::Io { path: self.path.clone(), source })
    }
}

/// Appends `records` to the log at `path`; returns the number of lines written.
pub fn write_serp_log<'a>(
    records: impl IntoIterator<Item = &'a SerpRecord>,
    path: impl AsRef<Path>,
) -> Result<usize, LogError> {
    let mut w = LogWriter::append_to(path)?;
    for r in records {
        w.append(r)?;
    }
    w.flush()?;
    Ok(w.written())
}

/// Streaming reader over any newline-delimited log.
pub struct LogLines {
    inner: BufReader<File>,
    path: PathBuf,
    line_no: usize,
    done: bool,
}

impl LogLines {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|source| LogError::Io { path: path.clone(), source })?;
        Ok(LogLines { inner: BufReader::new(file), path, line_no: 0, done: false })
    }
}

impl Iterator for LogLines {
    /// `(line number, line text without newline)`
    type Item = Result<(usize, String), LogError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut buf = String::new();
        match self.inner.read_line(&mut buf) {
            Ok(0) => {
                self.done = true;
                None
            }
            Ok(_) => {
                self.line_no += 1;
                if !buf.ends_with('\n') {
                    self.done = true;
                    return Some(Err(LogError::Truncated { line: self.line_no }));
                }
                buf.pop();
                if buf.ends_with('\r') {
                    buf.pop();
                }
                Some(Ok((self.line_no, buf)))
            }
            Err(source) => {
                self.done = true;
                Some(Err(LogError::Io { path: self.path.clone(), source }))
            }
        }
    }
}

/// Streams SERP records in file order.
pub fn read_serp_log(
    path: impl AsRef<Path>,
) -> Result<impl Iterator<Item = Result<SerpRecord, LogError>>, LogError> {
    Ok(LogLines::open(path)?.map(|l| l.and_then(|(n, text)| decode_serp_line(&text, n))))
}

/// Reads a whole SERP log, failing on the first bad line.
pub fn read_serp_log_all(path: impl AsRef<Path>) -> Result<Vec<SerpRecord>, LogError> {
    read_serp_log(path)?.collect()
}

#[derive(Serialize)]
struct Versioned<'a, T> {
    v: u32,
    #[serde(flatten)]
    inner: &'a T,
}

/// Writes any serializable record type as a versioned line log (comparison
/// records, statistical results).
pub fn write_json_log<'a, T: Serialize + 'a>(
    records: impl IntoIterator<Item = &'a T>,
    path: impl AsRef<Path>,
) -> Result<usize, LogError> {
    let mut w = LogWriter::append_to(path)?;
    for r in records {
        w.append_json(r)?;
    }
    w.flush()?;
    Ok(w.written())
}

pub fn read_json_log<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, LogError> {
    LogLines::open(path)?
        .map(|l| {
            let (n, text) = l?;
            let mut value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| LogError::Malformed { line: n, message: e.to_string() })?;
            check_version(&value, n)?;
            if let Some(obj) = value.as_object_mut() {
                obj.remove("v");
            }
            serde_json::from_value(value).map_err(|e| LogError::Malformed { line: n, message: e.to_string() })
        })
        .collect()
}

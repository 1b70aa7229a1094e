use std::path::Path;

use fabric::annotations::AnnotationError;
use fabric::compiler::CompileError;
use fabric::featuredoc::FeatureDocError;
use fabric::ingest::IngestError;
use fabric::mql::QueryError;
use fabric::ImageError;
use serde_json::{json, Value};

pub const EXIT_USER: i32 = 1;
pub const EXIT_CORRUPT: i32 = 2;
pub const EXIT_INTERRUPTED: i32 = 130;

/// A failure with its exit status and a machine-readable description.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    pub detail: Value,
}

impl CliError {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            code,
            kind,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::new(EXIT_USER, "usage", message)
    }

    pub fn io(path: impl AsRef<Path>, e: std::io::Error) -> Self {
        let path = path.as_ref().display().to_string();
        let mut err = CliError::new(EXIT_USER, "io", format!("{path}: {e}"));
        err.detail = json!({ "path": path });
        err
    }

    pub fn corrupt(message: impl Into<String>) -> Self {
        CliError::new(EXIT_CORRUPT, "corrupt", message)
    }

    pub fn interrupted() -> Self {
        CliError::new(EXIT_INTERRUPTED, "interrupted", "interrupted")
    }

    pub fn to_json(&self) -> Value {
        let mut e = json!({ "kind": self.kind, "message": self.message });
        if let (Some(o), Value::Object(d)) = (e.as_object_mut(), &self.detail) {
            o.extend(d.clone());
        }
        json!({ "error": e })
    }
}

impl From<ImageError> for CliError {
    fn from(e: ImageError) -> Self {
        match e {
            ImageError::Io { .. } => CliError::new(EXIT_USER, "io", e.to_string()),
            other => CliError::corrupt(other.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match &e {
            IngestError::Io { .. } => CliError::new(EXIT_USER, "io", e.to_string()),
            IngestError::Syntax { file, line, .. } => {
                let mut err = CliError::new(EXIT_CORRUPT, "invalid-data", e.to_string());
                err.detail = json!({ "file": file, "line": line });
                err
            }
            IngestError::Invalid(report) => {
                let mut err = CliError::new(EXIT_CORRUPT, "invalid-data", e.to_string());
                err.detail = json!({ "errors": report.errors, "warnings": report.warnings });
                err
            }
        }
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::Invalid(r) => IngestError::Invalid(r).into(),
            CompileError::Io { .. } => CliError::new(EXIT_USER, "io", e.to_string()),
        }
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        let mut err = CliError::new(EXIT_USER, "query", e.to_string());
        err.detail = match &e {
            QueryError::Parse(p) => json!({
                "line": p.line, "column": p.column, "offset": p.offset, "expected": p.expected
            }),
            QueryError::UnknownOtype { pos, .. }
            | QueryError::UnknownFeature { pos, .. }
            | QueryError::NotInteger { pos, .. } => json!({ "line": pos.line, "column": pos.column }),
            QueryError::GuardExceeded { .. } => Value::Null,
        };
        err
    }
}

impl From<AnnotationError> for CliError {
    fn from(e: AnnotationError) -> Self {
        match e {
            AnnotationError::Query(q) => q.into(),
            AnnotationError::Format(_) | AnnotationError::UnsupportedVersion { .. } | AnnotationError::Invalid { .. } => {
                CliError::new(EXIT_CORRUPT, "invalid-store", e.to_string())
            }
            AnnotationError::Io { .. } => CliError::new(EXIT_USER, "io", e.to_string()),
            other => CliError::new(EXIT_USER, "annotation", other.to_string()),
        }
    }
}

impl From<FeatureDocError> for CliError {
    fn from(e: FeatureDocError) -> Self {
        let kind = match e {
            FeatureDocError::Io { .. } => "io",
            _ => "features",
        };
        CliError::new(EXIT_USER, kind, e.to_string())
    }
}

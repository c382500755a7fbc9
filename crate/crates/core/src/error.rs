use crate::validate::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Class-file decoding and encoding failures.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassError {
    #[error("bad magic {0:#010x}")]
    BadMagic(u32),
    #[error("unsupported constant-pool tag {tag} at entry {index}")]
    UnsupportedConstantTag { tag: u8, index: u16 },
    #[error("unsupported opcode {byte:#04x} at offset {offset}")]
    UnsupportedOpcode { byte: u8, offset: u32 },
    #[error("file truncated at byte {at}")]
    Truncated { at: usize },
    #[error("constant-pool entry {index} is missing or has the wrong type")]
    BadConstantRef { index: u16 },
    #[error("unsupported descriptor `{0}`")]
    BadDescriptor(String),
    #[error("malformed class file: {0}")]
    Malformed(String),
    #[error("cannot encode: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("line {line}: undefined label `{label}`")]
    UndefinedLabel { line: usize, label: String },
    #[error("method `{method}` is invalid: {report}")]
    Invalid { method: String, report: ValidationReport },
    #[error("{0} is not an instruction offset")]
    UnknownOffset(u32),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {message}")]
    KindMismatch { path: String, message: String },
    #[error("name `{0}` is not bound in this method")]
    UnboundName(String),
    #[error("name `{0}` is declared more than once")]
    DuplicateName(String),
    #[error("name `{0}` is reserved for outputs")]
    ReservedName(String),
    #[error("local index {index} is out of range (max_locals {max_locals})")]
    IndexOutOfRange { index: u16, max_locals: u16 },
    #[error("bad inputs: {0}")]
    Input(String),
    #[error("no method named `{0}`")]
    UnknownMethod(String),
    #[error("program has no methods")]
    NoMethod,
    #[error("no value specification fails; nothing to localize")]
    NoFailingSpec,
    #[error("dependencies are consistent; nothing to localize")]
    ConsistentSpec,
    #[error("diagnoses are for different methods (`{0}` and `{1}`)")]
    MethodMismatch(String, String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Stable machine-readable kind for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::UndefinedLabel { .. } => "label-resolution",
            Error::Invalid { .. } => "validation",
            Error::UnknownOffset(_) => "unknown-offset",
            Error::Class(e) => match e {
                ClassError::BadMagic(_) => "bad-magic",
                ClassError::UnsupportedConstantTag { .. } => "unsupported-constant-tag",
                ClassError::UnsupportedOpcode { .. } => "unsupported-opcode",
                ClassError::Truncated { .. } => "truncated-file",
                ClassError::BadConstantRef { .. } => "bad-constant-ref",
                ClassError::BadDescriptor(_) => "unsupported-descriptor",
                ClassError::Malformed(_) => "malformed-class",
                ClassError::Unsupported(_) => "unsupported-feature",
            },
            Error::Schema { .. } => "schema",
            Error::KindMismatch { .. } => "kind-mismatch",
            Error::UnboundName(_) => "unbound-name",
            Error::DuplicateName(_) => "duplicate-name",
            Error::ReservedName(_) => "reserved-name",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::Input(_) => "input",
            Error::UnknownMethod(_) => "unknown-method",
            Error::NoMethod => "no-method",
            Error::NoFailingSpec => "no-failing-spec",
            Error::ConsistentSpec => "consistent-spec",
            Error::MethodMismatch(..) => "method-mismatch",
            Error::Io { .. } => "io",
        }
    }

    /// Where the error occurred, when it has a position.
    pub fn location(&self) -> Option<String> {
        match self {
            Error::Parse { line, column, .. } => Some(format!("{line}:{column}")),
            Error::UndefinedLabel { line, .. } => Some(line.to_string()),
            Error::Schema { path, .. } | Error::KindMismatch { path, .. } => Some(path.clone()),
            Error::Io { path, .. } => Some(path.clone()),
            Error::Class(ClassError::UnsupportedOpcode { offset, .. }) => Some(offset.to_string()),
            Error::Class(ClassError::Truncated { at }) => Some(at.to_string()),
            _ => None,
        }
    }
}

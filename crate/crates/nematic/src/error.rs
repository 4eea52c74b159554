//! Error types shared across the crate.

use thiserror::Error;

/// Errors from grid/field construction and field algebra.
#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid size n = {0} is not supported (need an even n >= 8)")]
    BadGridSize(usize),
    #[error("domain length {0} is not a positive finite number")]
    BadLength(f64),
    #[error("fields live on different grids (n = {0} vs n = {1})")]
    GridMismatch(usize, usize),
}

/// Errors from configuration validation and the text config format.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{key}: {message}")]
    BadValue { key: String, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    BadLine { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("time step {dt:.3e} exceeds the stability bound {bound:.3e} ({rule})")]
    CflViolation { dt: f64, bound: f64, rule: &'static str },
    #[error("{0}")]
    Invalid(String),
}

/// Errors raised while integrating (abort conditions).
#[derive(Debug, Error)]
pub enum FlowError {
    #[error(
        "director norm collapsed to {value:.3e} (< {floor}) at node ({ix},{iy}), t = {t:.6}; \
         the constrained evolution is no longer meaningful"
    )]
    NormCollapse { t: f64, ix: usize, iy: usize, value: f64, floor: f64 },
    #[error("non-finite value in term `{term}` at node ({ix},{iy}), t = {t:.6}")]
    NonFinite { t: f64, term: &'static str, ix: usize, iy: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("observer I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors from snapshot and ledger file I/O.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected `NFLD`, found {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported snapshot version {0}")]
    BadVersion(u32),
    #[error("snapshot header is inconsistent: {0}")]
    BadHeader(String),
    #[error("snapshot payload truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("ledger line {line}: {message}")]
    BadLedgerLine { line: usize, message: String },
    #[error("ledger is missing required column `{0}`")]
    MissingColumn(String),
}

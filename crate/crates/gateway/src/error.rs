use std::io;
use std::path::PathBuf;

use thiserror::Error;
use vax_core::castore::CasError;
use vax_core::credentials::CredentialError;
use vax_core::identity::IdentityError;
use vax_core::ledger::LedgerError;
use vax_core::presentation::PresentationError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("port in use: {0}")]
    PortInUse(String),
    #[error("data dir {0} is in use by another vax process")]
    DataDirLocked(PathBuf),
    #[error("node unavailable: {0}")]
    NodeUnavailable(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Cas(#[from] CasError),
    #[error(transparent)]
    Credential(#[from] CredentialError),
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

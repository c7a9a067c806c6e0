//! Evaluation harness: model clients (live or replayed), per-cell runs,
//! snapshots, language selection, reports, and on-disk splits and
//! datasets. The `scenecode` binary wraps it.

pub mod client;
pub mod config;
pub mod dataset;
pub mod gen;
pub mod report;
pub mod run;
pub mod select;
pub mod snapshot;
pub mod split;
pub mod store;
pub mod synth;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use scenecode_core::metrics::MetricsError;
use scenecode_core::qa::QaError;
use scenecode_core::s3ft::S3ftError;
use scenecode_core::scenegen::GenError;

pub use client::{
    ChatRequest, ChatResponse, ClientError, LiveClient, ModelClient, ReplayClient, TeeClient,
};
pub use config::{ModeSpec, RunConfig, QA_LANGUAGE_SUBSET};
pub use report::{build_report, report, Report, ReportInput};
pub use run::{run_qa_eval, run_reconstruct_eval, RunOutcome};
pub use select::{best_worst_from_scores, select_best_worst_language};
pub use snapshot::CellSnapshot;
pub use split::Split;
pub use store::{ReplayKey, ReplayStore, StoreError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Invalid(String),
    #[error("missing cell: {0}")]
    MissingCell(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Qa(#[from] QaError),
    #[error(transparent)]
    S3ft(#[from] S3ftError),
}

impl HarnessError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

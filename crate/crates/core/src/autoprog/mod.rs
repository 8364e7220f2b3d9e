//! Automatic programming: turn a system into a self-contained model program
//! (an AMP document), execute it in-process, or generate source for it,
//! build it with the host toolchain, run it and compare the two routes.

mod amp;
mod codegen;
mod toolchain;

pub use amp::{emit, interpret, AmpDocument, ModelKind, UpdatePayload, FORMAT_VERSION};
pub use codegen::{generate_source, Backend, ProgramText};
pub use toolchain::{
    compare_trajectories, compile_and_run, verify_equivalence, verify_program, ToolchainConfig, Verdict,
    DEFAULT_BUILD_TEMPLATE, TOOLCHAIN_ENV,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutoprogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}", match .line { Some(l) => format!("line {l}: {message}"), None => message.clone() })]
    Semantic { line: Option<usize>, message: String },
    #[error("unsupported model kind {0:?}; supported kinds are ca and ann")]
    UnsupportedKind(String),
    #[error("no code generation backend named {0:?}; available: c")]
    NoBackendConfigured(String),
    #[error("invalid toolchain configuration: {0}")]
    InvalidToolchain(String),
    #[error("build failed ({status}):\n{diagnostics}")]
    CompileFailed { status: String, diagnostics: String },
    #[error("model program did not finish within {seconds} s")]
    RunTimeout { seconds: f64 },
    #[error("model program failed ({status}):\n{stderr}")]
    RunFailed { status: String, stderr: String },
    #[error("could not read model program output: {0}")]
    OutputParse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] crate::error::Error),
}

impl From<std::io::Error> for AutoprogError {
    fn from(e: std::io::Error) -> Self {
        AutoprogError::Io(e.to_string())
    }
}

impl AutoprogError {
    /// Toolchain failures, as opposed to bad documents or models.
    pub fn is_toolchain(&self) -> bool {
        matches!(
            self,
            AutoprogError::InvalidToolchain(_)
                | AutoprogError::CompileFailed { .. }
                | AutoprogError::RunTimeout { .. }
                | AutoprogError::RunFailed { .. }
                | AutoprogError::OutputParse(_)
                | AutoprogError::Io(_)
        )
    }
}

pub type Result<T, E = AutoprogError> = std::result::Result<T, E>;

//! Spectral pair descriptors and learned energy models for hydrogen clusters.
//!
//! The crate is organized as a pipeline:
//!
//! * [`geometry`] — parametric hydrogen-cluster families (chains, rings,
//!   prisms, …) and XYZ file I/O,
//! * [`integrals`] — STO-6G s-type Gaussian integrals (overlap, core
//!   Hamiltonian, two-electron repulsion) in atomic units,
//! * [`mf`] — Löwdin orthogonalization, restricted Hartree–Fock, and MP2,
//! * [`fci`] — full configuration interaction (dense and Davidson solvers)
//!   plus the two-particle reduced density matrix,
//! * [`descriptor`] — the pair-space ("geminal") matrix whose sorted
//!   eigenvalue spectrum is the rotation-, translation-, and
//!   orbital-rotation-invariant feature vector, plus the separated-limit
//!   energy estimate derived from it,
//! * [`ml`] — a deterministic from-scratch training stack (reverse-mode
//!   gradients, Adam, MLPs, and an attention-based set model with a
//!   dissociation-limit gate),
//! * [`dataset`] / [`pipeline`] — JSON-lines datasets, labeling,
//!   composition, training orchestration, named experiments, CSV reports,
//!   and SVG plots.
//!
//! The `geminal` binary exposes the pipeline as a thin CLI; the `examples/`
//! directory demonstrates each capability as a runnable program.

pub mod dataset;
pub mod descriptor;
pub mod fci;
pub mod geometry;
pub mod integrals;
pub mod linalg;
pub mod mf;
pub mod ml;
pub mod pipeline;

/// Crate-wide error type.
///
/// `exit_code` maps each variant onto the CLI contract: 2 for usage/config
/// problems, 3 for data problems, 4 for solver failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("unknown family `{family}` for {system}")]
    UnknownFamily { system: String, family: String },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("overlap matrix is near-singular (smallest eigenvalue {0:.3e})")]
    LinearDependence(f64),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("negative Boys-function argument {0}")]
    BoysArgument(f64),
    #[error("SCF did not converge within {0} iterations")]
    ScfNonConvergence(usize),
    #[error("HOMO-LUMO gap {0:.3e} hartree is too small for MP2 denominators")]
    DegenerateGap(f64),
    #[error("iterative eigensolver did not converge: {0}")]
    SolverNonConvergence(String),
    #[error("electron/orbital mismatch: {0}")]
    Electrons(String),
    #[error("integrals are not expressed in an orthonormal basis")]
    NotOrthonormal,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite loss at epoch {0}")]
    NonFiniteLoss(usize),
    #[error("dataset error: {0}")]
    Data(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code for this error (0 is success, handled by the caller).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownFamily { .. } | Error::Grid(_) => 2,
            Error::Parse { .. }
            | Error::Data(_)
            | Error::Geometry(_)
            | Error::Shape(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Electrons(_)
            | Error::NotOrthonormal => 3,
            Error::Linalg(_)
            | Error::LinearDependence(_)
            | Error::NonFinite(_)
            | Error::BoysArgument(_)
            | Error::ScfNonConvergence(_)
            | Error::DegenerateGap(_)
            | Error::SolverNonConvergence(_)
            | Error::NonFiniteLoss(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Joint waveform and polarization co-design for integrated polarimetric
//! sensing and communication with single-port polarization-reconfigurable
//! arrays.
//!
//! The library is organized in layers:
//!
//! * [`polar`] — polarization-aware array algebra: XPD matrices, steering
//!   vectors, net array responses and the vec/Kronecker lifting operators
//!   that every optimizer consumes.
//! * [`scene`] — targets, clutter patches, sensing covariances and
//!   synthetic multipath communication channels.
//! * [`metrics`] — measurement operator, LMMSE estimation, MSE/NMSE,
//!   target SINR and per-user SINR.
//! * [`conic`] — a small canonical conic-program layer (Hermitian PSD
//!   variables, LMIs, linear rows) solved by an interior-point backend.
//! * [`waveform`] — the two SDP waveform designs (Schur-complement MSE
//!   minimization, Charnes-Cooper target-SINR maximization) and precoder
//!   recovery.
//! * [`mm`] — majorization-minimization polarization optimization: linear
//!   majorizers, inner convex approximation of the user-SINR constraints,
//!   the K-bisection dual search, closed-form receive/user updates, the
//!   Dinkelbach loop and the outer alternation.
//! * [`dualpol`] — dual-polarized MIMO benchmark pipelines (1x / 2x).

pub mod conic;
pub mod dualpol;
pub mod linalg;
pub mod metrics;
pub mod mm;
pub mod par;
pub mod polar;
pub mod scene;
pub mod waveform;

use thiserror::Error;

/// Error type shared across the design pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Matrix/vector dimensions are inconsistent.
    #[error("shape error: {0}")]
    Shape(String),
    /// A matrix that must be invertible or PSD is not, beyond tolerance.
    #[error("conditioning error: {0}")]
    Conditioning(String),
    /// The conic solver terminated without an optimal solution.
    #[error("solver failure: {0}")]
    Solver(String),
    /// The problem instance is infeasible (e.g. SINR threshold too high).
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Precoder recovery failed (degenerate user or indefinite residual).
    #[error("recovery error: {0}")]
    Recovery(String),
    /// Invalid experiment or scene configuration.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

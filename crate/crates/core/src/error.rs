use std::path::PathBuf;

use thiserror::Error;

use crate::spectral::BasisLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis label {0} appears more than once")]
    DuplicateLabel(BasisLabel),

    #[error("label {0} does not belong to the operator's {1} basis")]
    ForeignLabel(BasisLabel, &'static str),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("operator has an empty domain")]
    EmptyOperator,

    #[error("relative tolerance {0} must lie in (0, 1)")]
    InvalidTolerance(f64),

    #[error("SVD did not converge for a {rows}x{cols} matrix; dumped to {}", path.display())]
    SvdNoConvergence {
        rows: usize,
        cols: usize,
        path: PathBuf,
    },

    #[error("expected an endomorphism (domain basis = codomain basis)")]
    NotEndomorphism,

    #[error("mixed chirality labels in the {0} basis")]
    MixedChirality(&'static str),

    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("aliasing risk: {samples} samples cannot resolve cutoff {cutoff} (need at least {needed})")]
    AliasingRisk {
        samples: usize,
        cutoff: usize,
        needed: usize,
    },

    #[error("insufficient Fourier cutoff: have {have}, need {need}")]
    InsufficientCutoff { have: usize, need: usize },

    #[error("Fourier coefficient for k = {0} requested beyond the series cutoff")]
    OutsideCutoff(i64),

    #[error("trigonometric product exceeds {0} terms")]
    TermOverflow(usize),

    #[error("mu is not positive: min {value:e} at (t, phi) = ({t}, {phi})")]
    MuNotPositive { value: f64, t: f64, phi: f64 },

    #[error("conformal function is not real-valued: {0}")]
    NotRealValued(String),

    #[error("quadrature grid too coarse: {have} points, need at least {need}")]
    GridTooCoarse { have: usize, need: usize },

    #[error("cannot parse angle {0:?}")]
    AngleParse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}, expected 1 or 2")]
    UnsupportedDimension(usize),

    #[error("grid too coarse: {0} cells per axis, need at least 2")]
    GridTooCoarse(usize),

    #[error("empty interval: lo {lo} must be strictly below hi {hi}")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("field length {got} does not match grid cell count {want}")]
    FieldLength { got: usize, want: usize },

    #[error("non-finite value at cell {0}")]
    NonFinite(usize),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid norm exponent p = {0}, need p >= 1")]
    BadExponent(f64),

    #[error("unknown flux `{0}`")]
    UnknownFlux(String),

    #[error("bad arguments for flux `{0}`")]
    BadFluxArgs(String),

    #[error("flux dimension {flux} does not match grid dimension {grid}")]
    DimensionMismatch { flux: usize, grid: usize },

    #[error("quadrature resolution {got} too coarse, need at least {min} points")]
    QuadratureTooCoarse { got: usize, min: usize },

    #[error("zero mode is excluded from the degeneracy functional")]
    ZeroMode,

    #[error("state {value} outside the flux validity range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("velocity grid [{kmin}, {kmax}] does not cover the state range [{lo}, {hi}]")]
    RangeViolation {
        kmin: f64,
        kmax: f64,
        lo: f64,
        hi: f64,
    },

    #[error("velocity bins {0} too few, need at least 2")]
    TooFewBins(usize),

    #[error("band [{lo}, {hi}] not covered by the velocity grid")]
    BandOutsideGrid { lo: f64, hi: f64 },

    #[error("step stream gap: step at t = {got} does not continue from t = {expected}")]
    StreamGap { expected: f64, got: f64 },

    #[error("invalid scheme configuration: {0}")]
    BadConfig(String),

    #[error("non-finite state detected at step {0}")]
    NanAtStep(usize),

    #[error("step budget exhausted after {0} steps")]
    TooManySteps(usize),

    #[error("invalid band parameters: {0}")]
    BadBandParams(String),

    #[error("delta {delta} outside (0, {delta0})")]
    DeltaOutOfRange { delta: f64, delta0: f64 },

    #[error("field mean {mean} outside (0, {r})")]
    MeanOutOfRange { mean: f64, r: f64 },

    #[error("empty time series")]
    EmptySeries,

    #[error("time horizon search failed: {0}")]
    HorizonSearch(String),
}

use thiserror::Error;

/// Errors raised by the channel, transceiver and metrics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// The auxiliary angle of receive element `m` is undefined: the receive
    /// radius and the lateral offset both vanish.
    #[error("degenerate geometry at receive element {m}: zeta denominator {denominator:e} is below tolerance")]
    DegenerateGeometry { m: usize, denominator: f64 },

    #[error("Bessel order {0} is outside the supported range [-64, 64]")]
    OrderOutOfRange(i32),

    #[error("geometry does not satisfy the special case: {0}")]
    CaseMismatch(&'static str),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    /// `|C_{m,l}|` is numerically zero, so mode `l` cannot be inverted at element `m`.
    #[error("mode {l} is unobservable at receive element {m} (|C| = {magnitude:e})")]
    ModeUnobservable { m: usize, l: i32, magnitude: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

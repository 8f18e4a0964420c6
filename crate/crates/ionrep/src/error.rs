use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric parameter violated its documented range.
    #[error("parameter `{field}` = {value} is out of range: {constraint}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// The herald probability is zero, so the link can never be established.
    #[error("elementary link is infeasible: herald probability per attempt is zero")]
    InfeasibleLink,

    /// A state handed to an operation was not normalized.
    #[error("state is not normalized: sum of |amplitude|^2 = {norm}")]
    Unnormalized { norm: f64 },

    /// A unitary operation drifted off norm beyond the alarm threshold.
    #[error("state norm drifted to {norm} after a unitary operation")]
    NormDrift { norm: f64 },

    /// Loss channels attach to signal modes only.
    #[error("loss can only be applied to a signal mode, got {mode}")]
    NotASignalMode { mode: String },

    /// Measurement requires the beam-splitter transform to have been applied.
    #[error("state still contains untransformed signal photons; apply the beam splitter before measuring")]
    NotInDetectionBasis,

    /// An ion index fell outside the chain it addresses.
    #[error("ion index {index} is out of bounds for a chain holding {size} ions per link side")]
    IonIndexOutOfBounds { index: usize, size: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            value,
            constraint: "must lie in [0, 1]",
        })
    }
}

pub(crate) fn check_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            value,
            constraint: "must be strictly positive",
        })
    }
}

pub(crate) fn check_non_negative(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            value,
            constraint: "must be non-negative",
        })
    }
}

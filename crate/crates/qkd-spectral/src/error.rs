//! Error type shared by all modules of the crate.

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Signal/decoy intensities do not satisfy `0 < nu < mu`, so the
    /// decoy-state denominator `mu*nu - nu^2` is not positive.
    #[error("degenerate decoy intensities: require 0 < nu < mu (mu*nu - nu^2 must be positive)")]
    DegenerateDecoy,

    /// A text input could not be parsed. Lines are 1-based and include the
    /// header line.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Wavelengths in a table were not strictly increasing.
    #[error("wavelength ordering violation at line {line}: {msg}")]
    Ordering { line: usize, msg: String },

    /// A wavelength lookup fell outside the covered range.
    #[error("wavelength {wavelength_nm} nm outside covered range [{min_nm}, {max_nm}] nm")]
    OutOfRange {
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },

    /// Two spectra share no common wavelength range.
    #[error("spectra do not overlap: {0}")]
    NoOverlap(String),

    /// A numerical procedure failed an internal consistency check.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Operator failed the Hermitian symmetry check.
    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:.3e} GHz")]
    NotHermitian { max_asymmetry: f64 },

    /// Two level solutions were produced at different static fields.
    #[error("field mismatch between level solutions: {0} mT vs {1} mT")]
    FieldMismatch(f64, f64),

    /// Two transition-label candidates coincide at zero field.
    #[error("transition labels {0} and {1} are ambiguous: separated by {2:.6} GHz < 1 MHz")]
    LabelAmbiguity(String, String, f64),

    /// Not enough observations to fit the requested parameters.
    #[error("underdetermined fit: {0}")]
    Underdetermined(String),

    /// An efficiency parameterization is incomplete.
    #[error("missing parameter: {0}")]
    MissingParameter(&'static str),

    /// Redundant efficiency parameterizations disagree.
    #[error("inconsistent parameterization: R = {0:.6e} from coupling/decay vs {1:.6e} from pump/material")]
    InconsistentParameters(f64, f64),

    /// The one-sided lineshape integral does not converge for this cutoff.
    #[error("cutoff too small for convergent integral: {0:.3e} Hz")]
    CutoffTooSmall(f64),

    /// A detuning in the four-level coupling formula is zero.
    #[error("zero detuning in coupling-strength denominator")]
    DivideByZeroDetuning,

    /// The heterodyne calibration anchor is absent.
    #[error("calibration chain has no heterodyne anchor")]
    MissingAnchor,

    /// The calibration anchor was taken at a different gain setting.
    #[error("gain setting {actual_db:.2} dB does not match anchor calibration at {anchor_db:.2} dB")]
    AnchorMismatch { actual_db: f64, anchor_db: f64 },

    /// An input microwave frequency has no tabulated coupling efficiency.
    #[error("no input efficiency tabulated for {0} GHz")]
    UnknownFrequency(f64),

    /// A log-model fit received a non-positive sample.
    #[error("non-positive signal value {value:.3e} at index {index}")]
    NonPositiveSignal { index: usize, value: f64 },

    /// The decay fit is degenerate (constant or growing trace).
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// The spectrum does not cover enough lines to identify temperature.
    #[error("only {0} model line(s) inside the spectrum range; need at least 2")]
    InsufficientLines(usize),

    /// Invalid argument or domain violation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Configuration file problem, with file and line context.
    #[error("{file}:{line}: {message}")]
    Config {
        file: String,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            file: file.into(),
            line,
            message: message.into(),
        }
    }

    /// Stable machine-readable tag for CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "not_hermitian",
            Error::FieldMismatch(..) => "field_mismatch",
            Error::LabelAmbiguity(..) => "label_ambiguity",
            Error::Underdetermined(..) => "underdetermined",
            Error::MissingParameter(..) => "missing_parameter",
            Error::InconsistentParameters(..) => "inconsistent_parameters",
            Error::CutoffTooSmall(..) => "cutoff_too_small",
            Error::DivideByZeroDetuning => "divide_by_zero_detuning",
            Error::MissingAnchor => "missing_anchor",
            Error::AnchorMismatch { .. } => "anchor_mismatch",
            Error::UnknownFrequency(..) => "unknown_frequency",
            Error::NonPositiveSignal { .. } => "non_positive_signal",
            Error::DegenerateFit(..) => "degenerate_fit",
            Error::InsufficientLines(..) => "insufficient_lines",
            Error::InvalidInput(..) => "invalid_input",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
        }
    }
}

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::measure_space::ValidationReport;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    EmptySpace,
    LengthMismatch { expected: usize, found: usize },
    NonFinite { index: usize },
    InvalidWeight { index: usize, value: f64 },
    NotProbability { total: f64 },
    InvalidFiltration(ValidationReport),
    MismatchedFiltration { expected: usize, found: usize },
    NoRootLevel,
    LevelOutOfRange { level: i32 },
    NotABlock { level: i32 },
    InvalidExponent { name: &'static str, value: f64 },
    InvalidParameter { name: &'static str, value: f64 },
    NotMeasurable { level: i32 },
    ZeroNorm { what: &'static str },
    NoBracket { what: &'static str },
    ParameterGate { rule: &'static str, lhs: f64, rhs: f64 },
    ConstructionFailed { attempts: usize, violations: usize },
    InvalidMetric { reason: String },
    MissingCoordinates,
    UnsupportedDimension { dim: usize },
    MissingLevelZero,
    CoveringFailed { constant: f64, uncovered: Vec<(usize, f64)> },
    NoCoveringCube { center: usize, radius: f64 },
    UnknownFamily(String),
    AllTrialsDegenerate { trials: usize },
    PointOutOfRange { point: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptySpace => write!(f, "space has no points"),
            Error::LengthMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected} values, found {found}")
            }
            Error::NonFinite { index } => write!(f, "non-finite value at index {index}"),
            Error::InvalidWeight { index, value } => {
                write!(f, "weight {value} at index {index} is not strictly positive")
            }
            Error::NotProbability { total } => {
                write!(f, "probability weights sum to {total}, not 1")
            }
            Error::InvalidFiltration(report) => write!(f, "invalid filtration: {report}"),
            Error::MismatchedFiltration { expected, found } => write!(
                f,
                "filtration covers {found} points but the space has {expected}"
            ),
            Error::NoRootLevel => write!(f, "regularity needs a root level"),
            Error::LevelOutOfRange { level } => write!(f, "level {level} is out of range"),
            Error::NotABlock { level } => write!(f, "set is not a block at level {level}"),
            Error::InvalidExponent { name, value } => {
                write!(f, "exponent {name} = {value} is out of range")
            }
            Error::InvalidParameter { name, value } => {
                write!(f, "parameter {name} = {value} is out of range")
            }
            Error::NotMeasurable { level } => {
                write!(f, "function is not measurable with respect to level {level}")
            }
            Error::ZeroNorm { what } => write!(f, "{what} vanishes"),
            Error::NoBracket { what } => write!(f, "could not bracket the root of {what}"),
            Error::ParameterGate { rule, lhs, rhs } => {
                write!(f, "parameter condition {rule} fails: {lhs} > {rhs}")
            }
            Error::ConstructionFailed { attempts, violations } => write!(
                f,
                "dyadic construction failed after {attempts} attempts ({violations} violations)"
            ),
            Error::InvalidMetric { reason } => write!(f, "invalid quasi-metric: {reason}"),
            Error::MissingCoordinates => write!(f, "operation needs point coordinates"),
            Error::UnsupportedDimension { dim } => write!(f, "dimension {dim} is not supported"),
            Error::MissingLevelZero => write!(f, "dyadic system has no level 0"),
            Error::CoveringFailed { constant, uncovered } => write!(
                f,
                "{} balls are not covered within constant {constant}",
                uncovered.len()
            ),
            Error::NoCoveringCube { center, radius } => {
                write!(f, "no cube covers the ball ({center}, {radius})")
            }
            Error::UnknownFamily(name) => write!(f, "unknown sampler family {name:?}"),
            Error::AllTrialsDegenerate { trials } => {
                write!(f, "all {trials} trials had a vanishing denominator")
            }
            Error::PointOutOfRange { point } => write!(f, "point {point} is out of range"),
        }
    }
}

impl core::error::Error for Error {}

use thiserror::Error;

use crate::operators::{FieldKind, PointLabel};
use crate::symbolic::ContractionSymbol;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WickError {
    /// Operator string with unequal numbers of creation-type and annihilation-type factors.
    #[error("malformed operator string: {missing} missing {kind} operator(s)")]
    MalformedString { kind: FieldKind, missing: usize },

    #[error("operator {kind}({point}) not found in operator string")]
    OperatorNotFound { kind: FieldKind, point: PointLabel },

    #[error("no table entry for contraction ({left}, {right})")]
    MissingEntry { left: PointLabel, right: PointLabel },

    #[error("unresolved symbol {0} during substitution")]
    MissingSymbol(ContractionSymbol),

    #[error("matching is not a bijection: {0}")]
    NonBijective(String),

    #[error("oracle limited to n <= {limit} pairs, got n = {n}; use the determinant/permanent path instead")]
    OracleLimit { n: usize, limit: usize },

    #[error("index {index} out of range for a {n}x{n} matrix")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid row subset: {0}")]
    InvalidRowSet(String),

    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("perturbation order {0} is not supported (only 0 and 1)")]
    UnsupportedOrder(u32),

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("cannot parse exact scalar from {0:?}")]
    ParseScalar(String),
}

pub type Result<T> = std::result::Result<T, WickError>;

//! Wick contraction engine.
//!
//! The time-ordered average of n fermionic pairs `(ψ_{i₁} ψ̄_{j₁}) … (ψ_{iₙ} ψ̄_{jₙ})`
//! equals `det Δ_{i_α j_β}` of the two-point contractions; for bosonic pairs
//! `(φ⁺ φ⁻)` it equals the permanent. This crate builds those matrices from
//! operator strings, evaluates them exactly or symbolically, cross-checks the
//! identity against a brute-force sum over complete pairings, and derives
//! first-order Green's functions and the first-order self-energy from it.

pub mod error;
pub mod evaluate;
pub mod matrix;
pub mod operators;
pub mod oracle;
pub mod perturbation;
pub mod scalar;
pub mod symbolic;

pub use error::{Result, WickError};
pub use evaluate::{
    det_elimination, det_expansion, det_leibniz, evaluate_pair_product, evaluate_pair_product_with,
    expand_along_column, expand_along_row, laplace_expand, perm_naive, perm_ryser, LaplaceExpansion, LaplaceTerm,
    MatrixScalar, RowExpansion, RowSummand,
};
pub use matrix::{
    build_matrix, zero_external_block, ContractionMatrix, Propagator, PropagatorProvider, SymbolicPropagator,
    TableEntry, TableFile, TablePropagator, Value,
};
pub use operators::{
    crossing_sign, label, pair_form, permutation_parity, sign_to_pair_product, FieldKind, FieldOperator,
    OperatorString, PairForm, PairProduct, PointLabel, Sign, Statistics,
};
pub use oracle::{
    enumerate_pairings, enumerate_string_pairings, oracle_expectation, oracle_pair_products, oracle_string,
    oracle_string_expectation, Pairing, DEFAULT_ORACLE_LIMIT,
};
pub use scalar::{ExactScalar, Ring};
pub use symbolic::{normalize, substitute, ContractionSymbol, Flavor, Monomial, SymbolicSum};

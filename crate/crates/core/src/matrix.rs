//! Contraction matrices `Δ_{i_α j_β}` and the providers that fill them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WickError};
use crate::operators::{PairProduct, PointLabel, Statistics};
use crate::scalar::{ExactScalar, Ring};
use crate::symbolic::{ContractionSymbol, Flavor, SymbolicSum};

/// Source of two-point contraction values.
///
/// Whether the average is a vacuum or a thermal one, and how equal-time
/// arguments are ordered, is entirely up to the implementation.
pub trait Propagator {
    type Value: Ring;

    fn contraction(&self, statistics: Statistics, left: &PointLabel, right: &PointLabel) -> Result<Self::Value>;
}

/// Emits the symbol Δ(l, r) for fermions and Δ̄(l, r) for bosons.
#[derive(Debug, Clone, Copy, Default)]
pub struct SymbolicPropagator;

impl Propagator for SymbolicPropagator {
    type Value = SymbolicSum;

    fn contraction(&self, statistics: Statistics, left: &PointLabel, right: &PointLabel) -> Result<SymbolicSum> {
        Ok(SymbolicSum::symbol(ContractionSymbol::new(Flavor::contraction(statistics), left.clone(), right.clone())))
    }
}

/// Exact values looked up by (left, right). Missing entries are errors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TablePropagator {
    entries: BTreeMap<(PointLabel, PointLabel), ExactScalar>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub left: PointLabel,
    pub right: PointLabel,
    pub value: ExactScalar,
}

/// On-disk table format: `{"entries": [{"left", "right", "value"}, ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    pub entries: Vec<TableEntry>,
}

impl TablePropagator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, left: PointLabel, right: PointLabel, value: ExactScalar) -> Option<ExactScalar> {
        self.entries.insert((left, right), value)
    }

    pub fn get(&self, left: &PointLabel, right: &PointLabel) -> Option<&ExactScalar> {
        self.entries.get(&(left.clone(), right.clone()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(PointLabel, PointLabel), &ExactScalar)> {
        self.entries.iter()
    }

    /// Fails on duplicate (left, right) keys.
    pub fn from_file(file: &TableFile) -> Result<Self> {
        let mut t = Self::new();
        for e in &file.entries {
            if t.insert(e.left.clone(), e.right.clone(), e.value.clone()).is_some() {
                return Err(WickError::Structural(format!("duplicate table entry ({}, {})", e.left, e.right)));
            }
        }
        Ok(t)
    }

    pub fn to_file(&self) -> TableFile {
        TableFile {
            entries: self
                .entries
                .iter()
                .map(|((l, r), v)| TableEntry { left: l.clone(), right: r.clone(), value: v.clone() })
                .collect(),
        }
    }

    /// The same table keyed by contraction symbols of the given statistics,
    /// for use with [`crate::symbolic::substitute`].
    pub fn symbol_table(&self, statistics: Statistics) -> BTreeMap<ContractionSymbol, ExactScalar> {
        let flavor = Flavor::contraction(statistics);
        self.entries
            .iter()
            .map(|((l, r), v)| (ContractionSymbol::new(flavor, l.clone(), r.clone()), v.clone()))
            .collect()
    }
}

impl Propagator for TablePropagator {
    type Value = ExactScalar;

    fn contraction(&self, _statistics: Statistics, left: &PointLabel, right: &PointLabel) -> Result<ExactScalar> {
        self.get(left, right)
            .cloned()
            .ok_or_else(|| WickError::MissingEntry { left: left.clone(), right: right.clone() })
    }
}

/// Runtime choice between the symbolic and table providers.
#[derive(Debug, Clone)]
pub enum PropagatorProvider {
    Symbolic,
    Table(TablePropagator),
}

/// A result that is symbolic or exact depending on the provider mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Symbolic(SymbolicSum),
    Exact(ExactScalar),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Symbolic(s) => write!(f, "{s}"),
            Value::Exact(x) => write!(f, "{x}"),
        }
    }
}

/// Square matrix of contractions, rows in ψ (φ⁺) order and columns in ψ̄ (φ⁻) order.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionMatrix<T> {
    statistics: Statistics,
    row_points: Vec<PointLabel>,
    col_points: Vec<PointLabel>,
    entries: Vec<T>,
}

impl<T: Ring> ContractionMatrix<T> {
    pub fn new(
        statistics: Statistics,
        row_points: Vec<PointLabel>,
        col_points: Vec<PointLabel>,
        entries: Vec<T>,
    ) -> Self {
        let n = row_points.len();
        assert_eq!(col_points.len(), n, "contraction matrix must be square");
        assert_eq!(entries.len(), n * n, "entry count must be n^2");
        ContractionMatrix { statistics, row_points, col_points, entries }
    }

    /// Matrix with generated labels `r1..rn` / `c1..cn`, for purely numeric use.
    pub fn from_rows(statistics: Statistics, rows: Vec<Vec<T>>) -> Self {
        let n = rows.len();
        let entries: Vec<T> =
            rows.into_iter().inspect(|r| assert_eq!(r.len(), n, "rows must have length n")).flatten().collect();
        let labels = |p: &str| (1..=n).map(|i| crate::operators::label(&format!("{p}{i}"))).collect();
        ContractionMatrix::new(statistics, labels("r"), labels("c"), entries)
    }

    pub fn n(&self) -> usize {
        self.row_points.len()
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn row_points(&self) -> &[PointLabel] {
        &self.row_points
    }

    pub fn col_points(&self) -> &[PointLabel] {
        &self.col_points
    }

    pub fn entry(&self, row: usize, col: usize) -> &T {
        &self.entries[row * self.n() + col]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.entries.chunks(self.n().max(1)).take(self.n()).map(|r| r.to_vec()).collect()
    }

    /// The submatrix on the given rows and columns (in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        assert_eq!(rows.len(), cols.len());
        let entries = rows.iter().flat_map(|&r| cols.iter().map(move |&c| self.entry(r, c).clone())).collect();
        ContractionMatrix {
            statistics: self.statistics,
            row_points: rows.iter().map(|&r| self.row_points[r].clone()).collect(),
            col_points: cols.iter().map(|&c| self.col_points[c].clone()).collect(),
            entries,
        }
    }

    pub fn transpose(&self) -> Self {
        let n = self.n();
        let entries = (0..n).flat_map(|c| (0..n).map(move |r| (r, c))).map(|(r, c)| self.entry(r, c).clone()).collect();
        ContractionMatrix {
            statistics: self.statistics,
            row_points: self.col_points.clone(),
            col_points: self.row_points.clone(),
            entries,
        }
    }

    pub fn map<U: Ring>(&self, f: impl FnMut(&T) -> U) -> ContractionMatrix<U> {
        ContractionMatrix {
            statistics: self.statistics,
            row_points: self.row_points.clone(),
            col_points: self.col_points.clone(),
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn try_map<U: Ring>(&self, f: impl FnMut(&T) -> Result<U>) -> Result<ContractionMatrix<U>> {
        Ok(ContractionMatrix {
            statistics: self.statistics,
            row_points: self.row_points.clone(),
            col_points: self.col_points.clone(),
            entries: self.entries.iter().map(f).collect::<Result<_>>()?,
        })
    }

    /// Swap two columns together with their labels.
    pub fn swap_columns(&mut self, a: usize, b: usize) {
        let n = self.n();
        for r in 0..n {
            self.entries.swap(r * n + a, r * n + b);
        }
        self.col_points.swap(a, b);
    }
}

/// Lays out `Δ(row_points[α], col_points[β])` for the pair product `p`.
pub fn build_matrix<P: Propagator>(p: &PairProduct, provider: &P) -> Result<ContractionMatrix<P::Value>> {
    let rows = p.row_points();
    let cols = p.col_points();
    let mut entries = Vec::with_capacity(rows.len() * cols.len());
    for r in &rows {
        for c in &cols {
            entries.push(provider.contraction(p.statistics, r, c)?);
        }
    }
    Ok(ContractionMatrix::new(p.statistics, rows, cols, entries))
}

/// Zeroes every entry whose row point and column point are both external.
pub fn zero_external_block<T: Ring>(
    m: &ContractionMatrix<T>,
    externals: &BTreeSet<PointLabel>,
) -> ContractionMatrix<T> {
    let n = m.n();
    let mut out = m.clone();
    for r in 0..n {
        for c in 0..n {
            if externals.contains(&m.row_points[r]) && externals.contains(&m.col_points[c]) {
                out.entries[r * n + c] = T::zero();
            }
        }
    }
    out
}

//! Canonical sums of monomials over contraction symbols.
//!
//! Symbols are opaque atoms `flavor(left, right)`. A [`SymbolicSum`] is kept
//! in canonical form at all times: terms sorted by their factor lists, like
//! terms merged, zero coefficients dropped.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WickError};
use crate::operators::{PointLabel, Statistics};
use crate::scalar::{ExactScalar, Ring};

/// Declaration order is the canonical rank: Δ < Δ̄ < G⁰ < V < δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// Fermionic contraction Δ(i,j) = ⟨T ψᵢ ψ̄ⱼ⟩.
    Fermion,
    /// Bosonic contraction Δ̄(i,j) = ⟨T φ⁺ᵢ φ⁻ⱼ⟩.
    Boson,
    /// Bare Green's function G⁰.
    G0,
    /// Interaction potential V(z₁−z₂), symmetric in its arguments.
    Potential,
    /// δ(z₁−z₂), symmetric in its arguments.
    Delta,
}

impl Flavor {
    pub fn is_symmetric(self) -> bool {
        matches!(self, Flavor::Potential | Flavor::Delta)
    }

    pub fn is_propagator(self) -> bool {
        matches!(self, Flavor::Fermion | Flavor::Boson | Flavor::G0)
    }

    pub fn contraction(statistics: Statistics) -> Self {
        match statistics {
            Statistics::Fermi => Flavor::Fermion,
            Statistics::Bose => Flavor::Boson,
        }
    }
}

/// Field order gives the symbol total order: (flavor, left, right).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContractionSymbol {
    flavor: Flavor,
    left: PointLabel,
    right: PointLabel,
}

impl ContractionSymbol {
    /// Symmetric flavors store their arguments sorted.
    pub fn new(flavor: Flavor, left: PointLabel, right: PointLabel) -> Self {
        let (left, right) = if flavor.is_symmetric() && right < left { (right, left) } else { (left, right) };
        ContractionSymbol { flavor, left, right }
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }
    pub fn left(&self) -> &PointLabel {
        &self.left
    }
    pub fn right(&self) -> &PointLabel {
        &self.right
    }

    /// Same symbol with both arguments passed through `f`, re-canonicalized.
    pub fn map_points(&self, mut f: impl FnMut(&PointLabel) -> PointLabel) -> Self {
        ContractionSymbol::new(self.flavor, f(&self.left), f(&self.right))
    }

    pub fn with_flavor(&self, flavor: Flavor) -> Self {
        ContractionSymbol::new(flavor, self.left.clone(), self.right.clone())
    }

    pub fn mentions(&self, p: &PointLabel) -> bool {
        self.left == *p || self.right == *p
    }
}

impl fmt::Display for ContractionSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.flavor {
            Flavor::Fermion => write!(f, "Δ({},{})", self.left, self.right),
            Flavor::Boson => write!(f, "Δ̄({},{})", self.left, self.right),
            Flavor::G0 => write!(f, "G0({},{})", self.left, self.right),
            Flavor::Potential => write!(f, "V({}-{})", self.left, self.right),
            Flavor::Delta => write!(f, "δ({}-{})", self.left, self.right),
        }
    }
}

impl fmt::Debug for ContractionSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for ContractionSymbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.flavor, &self.left, &self.right).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ContractionSymbol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (flavor, left, right) = <(Flavor, PointLabel, PointLabel)>::deserialize(d)?;
        Ok(ContractionSymbol::new(flavor, left, right))
    }
}

/// A rational coefficient times a sorted multiset of symbols.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    #[serde(rename = "coeff")]
    pub coefficient: ExactScalar,
    pub factors: Vec<ContractionSymbol>,
}

impl Monomial {
    pub fn new(coefficient: ExactScalar, mut factors: Vec<ContractionSymbol>) -> Self {
        factors.sort();
        Monomial { coefficient, factors }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut factors = Vec::with_capacity(self.factors.len() + other.factors.len());
        factors.extend_from_slice(&self.factors);
        factors.extend_from_slice(&other.factors);
        Monomial::new(&self.coefficient * &other.coefficient, factors)
    }

    /// Relabel every point, keeping the factor list sorted.
    pub fn map_points(&self, mut f: impl FnMut(&PointLabel) -> PointLabel) -> Monomial {
        Monomial::new(self.coefficient.clone(), self.factors.iter().map(|s| s.map_points(&mut f)).collect())
    }

    pub fn points(&self) -> impl Iterator<Item = &PointLabel> {
        self.factors.iter().flat_map(|s| [&s.left, &s.right])
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", SymbolicSum::from_monomials(vec![self.clone()]))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct SymbolicSum {
    terms: Vec<Monomial>,
}

impl SymbolicSum {
    pub fn zero() -> Self {
        SymbolicSum { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(ExactScalar::one())
    }

    pub fn constant(c: ExactScalar) -> Self {
        Self::from_monomials(vec![Monomial::new(c, Vec::new())])
    }

    pub fn symbol(sym: ContractionSymbol) -> Self {
        SymbolicSum { terms: vec![Monomial::new(ExactScalar::one(), vec![sym])] }
    }

    /// Builds a canonical sum from arbitrary (possibly unsorted, duplicated) monomials.
    pub fn from_monomials(terms: Vec<Monomial>) -> Self {
        normalize(SymbolicSum { terms })
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Monomial> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: &ExactScalar) -> Self {
        if Ring::is_zero(c) {
            return Self::zero();
        }
        SymbolicSum {
            terms: self
                .terms
                .iter()
                .map(|m| Monomial { coefficient: &m.coefficient * c, factors: m.factors.clone() })
                .collect(),
        }
    }

    /// Apply `f` to every monomial and renormalize.
    pub fn map_monomials(&self, f: impl FnMut(&Monomial) -> Monomial) -> Self {
        Self::from_monomials(self.terms.iter().map(f).collect())
    }

    pub fn retain(&self, mut keep: impl FnMut(&Monomial) -> bool) -> Self {
        SymbolicSum { terms: self.terms.iter().filter(|m| keep(m)).cloned().collect() }
    }

    /// Deterministic JSON, terms in canonical order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("symbolic sums always serialize")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Sort factors, merge like terms, drop zero coefficients, sort terms.
pub fn normalize(sum: SymbolicSum) -> SymbolicSum {
    let mut merged: BTreeMap<Vec<ContractionSymbol>, ExactScalar> = BTreeMap::new();
    for mut m in sum.terms {
        m.factors.sort();
        match merged.get_mut(&m.factors) {
            Some(c) => *c = &*c + &m.coefficient,
            None => {
                merged.insert(m.factors, m.coefficient);
            }
        }
    }
    SymbolicSum {
        terms: merged
            .into_iter()
            .filter(|(_, c)| !Ring::is_zero(c))
            .map(|(factors, coefficient)| Monomial { coefficient, factors })
            .collect(),
    }
}

/// Exact numeric value of `sum` under `table`.
pub fn substitute(sum: &SymbolicSum, table: &BTreeMap<ContractionSymbol, ExactScalar>) -> Result<ExactScalar> {
    let mut total = ExactScalar::zero();
    for m in &sum.terms {
        let mut prod = m.coefficient.clone();
        for s in &m.factors {
            let v = table.get(s).ok_or_else(|| WickError::MissingSymbol(s.clone()))?;
            prod = &prod * v;
        }
        total = &total + &prod;
    }
    Ok(total)
}

/// Merge two canonical term lists.
fn merge_sorted(a: &[Monomial], b: &[Monomial]) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].factors.cmp(&b[j].factors) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let c = &a[i].coefficient + &b[j].coefficient;
                if !Ring::is_zero(&c) {
                    out.push(Monomial { coefficient: c, factors: a[i].factors.clone() });
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl Ring for SymbolicSum {
    fn zero() -> Self {
        SymbolicSum::zero()
    }
    fn one() -> Self {
        SymbolicSum::one()
    }
    fn add(&self, other: &Self) -> Self {
        SymbolicSum { terms: merge_sorted(&self.terms, &other.terms) }
    }
    fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.mul(b));
            }
        }
        Self::from_monomials(terms)
    }
    fn neg(&self) -> Self {
        self.scale(&ExactScalar::integer(-1))
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn sum_all(items: Vec<Self>) -> Self {
        Self::from_monomials(items.into_iter().flat_map(|s| s.terms).collect())
    }
    fn from_integer(k: i64) -> Self {
        Self::constant(ExactScalar::integer(k))
    }
}

impl Serialize for SymbolicSum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.terms.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymbolicSum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<Monomial>::deserialize(d)?;
        Ok(SymbolicSum::from_monomials(terms))
    }
}

impl fmt::Display for SymbolicSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, m) in self.terms.iter().enumerate() {
            let negative = m.coefficient < ExactScalar::zero();
            let magnitude = m.coefficient.abs();
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let unit = magnitude == ExactScalar::one();
            if !unit || m.factors.is_empty() {
                write!(f, "{magnitude}")?;
                if !m.factors.is_empty() {
                    f.write_str("·")?;
                }
            }
            for (k, s) in m.factors.iter().enumerate() {
                if k > 0 {
                    f.write_str("·")?;
                }
                write!(f, "{s}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SymbolicSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `flavor(left, right)` as a one-symbol sum.
pub fn sym(flavor: Flavor, left: &str, right: &str) -> ContractionSymbol {
    ContractionSymbol::new(flavor, crate::operators::label(left), crate::operators::label(right))
}

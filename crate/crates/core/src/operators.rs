//! Time-ordered operator strings and their reduction to pair form.
//!
//! Chronology is not resolved here: the contraction values already encode
//! time ordering, so an operator string is purely an ordered word of field
//! operators. The only thing tracked when reordering is the fermionic sign.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, WickError};

/// Opaque point token standing for a combined (position, time, spin) argument.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointLabel(Arc<str>);

impl PointLabel {
    pub fn new(token: &str) -> Result<Self> {
        if token.is_empty() {
            return Err(WickError::InvalidLabel("empty point label".into()));
        }
        Ok(PointLabel(Arc::from(token)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Shorthand for labels known to be valid; panics on the empty string.
pub fn label(token: &str) -> PointLabel {
    PointLabel::new(token).expect("point labels must be nonempty")
}

impl std::borrow::Borrow<str> for PointLabel {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl Serialize for PointLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for PointLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        PointLabel::new(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Fermi,
    Bose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    #[serde(rename = "psi")]
    Psi,
    #[serde(rename = "psibar")]
    PsiBar,
    #[serde(rename = "phi-plus")]
    PhiPlus,
    #[serde(rename = "phi-minus")]
    PhiMinus,
}

impl FieldKind {
    pub fn statistics(self) -> Statistics {
        match self {
            FieldKind::Psi | FieldKind::PsiBar => Statistics::Fermi,
            FieldKind::PhiPlus | FieldKind::PhiMinus => Statistics::Bose,
        }
    }

    /// True for ψ and φ⁺, the kinds that index matrix rows.
    pub fn is_row_kind(self) -> bool {
        matches!(self, FieldKind::Psi | FieldKind::PhiPlus)
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::Psi => "psi",
            FieldKind::PsiBar => "psibar",
            FieldKind::PhiPlus => "phi-plus",
            FieldKind::PhiMinus => "phi-minus",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldOperator {
    pub kind: FieldKind,
    pub point: PointLabel,
}

impl FieldOperator {
    pub fn new(kind: FieldKind, point: PointLabel) -> Self {
        FieldOperator { kind, point }
    }

    pub fn psi(point: &str) -> Self {
        Self::new(FieldKind::Psi, label(point))
    }
    pub fn psibar(point: &str) -> Self {
        Self::new(FieldKind::PsiBar, label(point))
    }
    pub fn phi_plus(point: &str) -> Self {
        Self::new(FieldKind::PhiPlus, label(point))
    }
    pub fn phi_minus(point: &str) -> Self {
        Self::new(FieldKind::PhiMinus, label(point))
    }
}

/// A ±1 prefactor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_parity(odd: bool) -> Self {
        if odd {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        Sign::from_parity(self.is_minus() != rhs.is_minus())
    }
}

/// Operators as written left to right inside a T-product.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorString {
    pub ops: Vec<FieldOperator>,
}

impl OperatorString {
    pub fn new(ops: Vec<FieldOperator>) -> Self {
        OperatorString { ops }
    }

    /// Checks that ψ/ψ̄ and φ⁺/φ⁻ counts balance.
    pub fn validate(&self) -> Result<()> {
        let count = |k: FieldKind| self.ops.iter().filter(|op| op.kind == k).count();
        for (a, b) in [(FieldKind::Psi, FieldKind::PsiBar), (FieldKind::PhiPlus, FieldKind::PhiMinus)] {
            let (na, nb) = (count(a), count(b));
            if na > nb {
                return Err(WickError::MalformedString { kind: b, missing: na - nb });
            }
            if nb > na {
                return Err(WickError::MalformedString { kind: a, missing: nb - na });
            }
        }
        Ok(())
    }

    /// Positions of the operators of one kind, in string order.
    pub fn positions(&self, kind: FieldKind) -> Vec<usize> {
        self.ops.iter().enumerate().filter(|(_, op)| op.kind == kind).map(|(i, _)| i).collect()
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &OperatorString) -> OperatorString {
        let mut ops = self.ops.clone();
        ops.extend(other.ops.iter().cloned());
        OperatorString { ops }
    }
}

/// `(ψ_{i₁} ψ̄_{j₁}) (ψ_{i₂} ψ̄_{j₂}) …` for a single statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairProduct {
    pub statistics: Statistics,
    pub pairs: Vec<(PointLabel, PointLabel)>,
}

impl PairProduct {
    pub fn new(statistics: Statistics, pairs: Vec<(PointLabel, PointLabel)>) -> Self {
        PairProduct { statistics, pairs }
    }

    pub fn empty(statistics: Statistics) -> Self {
        PairProduct { statistics, pairs: Vec::new() }
    }

    /// Build from string tokens; panics on empty tokens.
    pub fn from_tokens(statistics: Statistics, pairs: &[(&str, &str)]) -> Self {
        PairProduct { statistics, pairs: pairs.iter().map(|(a, b)| (label(a), label(b))).collect() }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn row_points(&self) -> Vec<PointLabel> {
        self.pairs.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn col_points(&self) -> Vec<PointLabel> {
        self.pairs.iter().map(|(_, r)| r.clone()).collect()
    }

    fn kinds(&self) -> (FieldKind, FieldKind) {
        match self.statistics {
            Statistics::Fermi => (FieldKind::Psi, FieldKind::PsiBar),
            Statistics::Bose => (FieldKind::PhiPlus, FieldKind::PhiMinus),
        }
    }

    /// The interleaved string `ψ(l₁) ψ̄(r₁) ψ(l₂) ψ̄(r₂) …`.
    pub fn to_operator_string(&self) -> OperatorString {
        let (row, col) = self.kinds();
        let ops = self
            .pairs
            .iter()
            .flat_map(|(l, r)| [FieldOperator::new(row, l.clone()), FieldOperator::new(col, r.clone())])
            .collect();
        OperatorString { ops }
    }
}

/// Result of [`pair_form`]: `T[s] = sign · T[fermi] · T[bose]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairForm {
    pub fermi: PairProduct,
    pub bose: PairProduct,
    pub sign: Sign,
}

/// Parity of a permutation given as a sequence of distinct keys, by inversion count.
pub fn permutation_parity<T: Ord>(seq: &[T]) -> Sign {
    let mut odd = false;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                odd = !odd;
            }
        }
    }
    Sign::from_parity(odd)
}

/// Rewrites an operator string in positional pair form: the α-th ψ is paired
/// with the α-th ψ̄ (likewise φ⁺ with φ⁻). Only fermionic reordering is signed;
/// separating Fermi from Bose factors is free.
pub fn pair_form(s: &OperatorString) -> Result<PairForm> {
    s.validate()?;
    let psi = s.positions(FieldKind::Psi);
    let psibar = s.positions(FieldKind::PsiBar);
    let target: Vec<usize> = psi.iter().zip(&psibar).flat_map(|(&a, &b)| [a, b]).collect();
    let sign = permutation_parity(&target);

    let pairs_of = |rows: &[usize], cols: &[usize]| -> Vec<(PointLabel, PointLabel)> {
        rows.iter().zip(cols).map(|(&a, &b)| (s.ops[a].point.clone(), s.ops[b].point.clone())).collect()
    };
    let fermi = PairProduct::new(Statistics::Fermi, pairs_of(&psi, &psibar));
    let bose = PairProduct::new(
        Statistics::Bose,
        pairs_of(&s.positions(FieldKind::PhiPlus), &s.positions(FieldKind::PhiMinus)),
    );
    Ok(PairForm { fermi, bose, sign })
}

/// Sign picked up when reordering the fermionic part of `s` into the
/// interleaved layout of `target` (an arbitrary division into pairs).
///
/// Operators are matched by (kind, point), first unused occurrence first.
pub fn sign_to_pair_product(s: &OperatorString, target: &PairProduct) -> Result<Sign> {
    s.validate()?;
    if target.statistics != Statistics::Fermi {
        return Ok(Sign::Plus);
    }
    let mut used = vec![false; s.ops.len()];
    let mut order = Vec::with_capacity(2 * target.len());
    for op in target.to_operator_string().ops {
        let found = s
            .ops
            .iter()
            .enumerate()
            .position(|(i, cand)| !used[i] && *cand == op)
            .ok_or_else(|| WickError::OperatorNotFound { kind: op.kind, point: op.point.clone() })?;
        used[found] = true;
        order.push(found);
    }
    let fermions = s.ops.iter().filter(|op| op.kind.statistics() == Statistics::Fermi).count();
    if order.len() != fermions {
        return Err(WickError::Structural(format!(
            "target pair product covers {} of {} fermionic operators",
            order.len(),
            fermions
        )));
    }
    Ok(permutation_parity(&order))
}

/// Validates that `matching` is a bijection of `0..n`.
pub(crate) fn check_bijection(matching: &[usize], n: usize) -> Result<()> {
    if matching.len() != n {
        return Err(WickError::NonBijective(format!("matching has {} entries for {} slots", matching.len(), n)));
    }
    let mut seen = vec![false; n];
    for &m in matching {
        if m >= n || seen[m] {
            return Err(WickError::NonBijective(format!("target {m} repeated or out of range")));
        }
        seen[m] = true;
    }
    Ok(())
}

/// Sign of a complete fermionic contraction: `(−1)^(c + r)`, where `c` counts
/// crossing arcs and `r` counts pairs written ψ̄ before ψ.
///
/// Arc α joins `psi_positions[α]` to `psibar_positions[matching[α]]`. Two arcs
/// `(a,b)`, `(c,d)` (each oriented so that `a<b`, `c<d`) cross iff `a<c<b<d`.
/// The result is the parity of reordering the string so that every ψ stands
/// immediately left of the ψ̄ it is contracted with.
pub fn crossing_sign(psi_positions: &[usize], psibar_positions: &[usize], matching: &[usize]) -> Result<Sign> {
    let n = psi_positions.len();
    if psibar_positions.len() != n {
        return Err(WickError::NonBijective(format!("{} psi slots vs {} psibar slots", n, psibar_positions.len())));
    }
    check_bijection(matching, n)?;
    let arcs: Vec<(usize, usize)> = (0..n)
        .map(|a| {
            let (p, q) = (psi_positions[a], psibar_positions[matching[a]]);
            (p.min(q), p.max(q))
        })
        .collect();
    let mut odd = (0..n).filter(|&a| psibar_positions[matching[a]] < psi_positions[a]).count() % 2 == 1;
    for (i, &(a, b)) in arcs.iter().enumerate() {
        for &(c, d) in &arcs[i + 1..] {
            if (a < c && c < b && b < d) || (c < a && a < d && d < b) {
                odd = !odd;
            }
        }
    }
    Ok(Sign::from_parity(odd))
}

//! Brute-force Wick expansion: the sum over every complete contraction of an
//! operator string, each weighted by its fermionic crossing sign.
//!
//! Works on the interleaved positional form of a string and shares no sign
//! logic with the cofactor-based evaluators, so the two can check each other.

use itertools::Itertools;

use crate::error::{Result, WickError};
use crate::matrix::{Propagator, PropagatorProvider, SymbolicPropagator, Value};
use crate::operators::{crossing_sign, FieldKind, OperatorString, PairProduct, PointLabel, Sign, Statistics};
use crate::scalar::Ring;

/// 8! = 40320 pairings.
pub const DEFAULT_ORACLE_LIMIT: usize = 8;

/// A complete contraction: ψ-slot α is contracted with ψ̄-slot `matching[α]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    pub matching: Vec<usize>,
    pub sign: Sign,
}

struct Slots {
    statistics: Statistics,
    rows: Vec<(usize, PointLabel)>,
    cols: Vec<(usize, PointLabel)>,
}

fn slots(s: &OperatorString, statistics: Statistics) -> Slots {
    let (row_kind, col_kind) = match statistics {
        Statistics::Fermi => (FieldKind::Psi, FieldKind::PsiBar),
        Statistics::Bose => (FieldKind::PhiPlus, FieldKind::PhiMinus),
    };
    let pick = |kind| {
        s.ops
            .iter()
            .enumerate()
            .filter(|(_, op)| op.kind == kind)
            .map(|(i, op)| (i, op.point.clone()))
            .collect::<Vec<_>>()
    };
    Slots { statistics, rows: pick(row_kind), cols: pick(col_kind) }
}

fn pairings_of(slots: &Slots, limit: usize) -> Result<Vec<Pairing>> {
    let n = slots.rows.len();
    if n > limit {
        return Err(WickError::OracleLimit { n, limit });
    }
    let row_pos: Vec<usize> = slots.rows.iter().map(|(p, _)| *p).collect();
    let col_pos: Vec<usize> = slots.cols.iter().map(|(p, _)| *p).collect();
    (0..n)
        .permutations(n)
        .map(|matching| {
            let sign = match slots.statistics {
                Statistics::Bose => Sign::Plus,
                Statistics::Fermi => crossing_sign(&row_pos, &col_pos, &matching)?,
            };
            Ok(Pairing { matching, sign })
        })
        .collect()
}

/// All n! complete pairings of the interleaved string `ψ(l₁) ψ̄(r₁) ψ(l₂) …`,
/// in lexicographic order of the matching.
pub fn enumerate_pairings(p: &PairProduct, limit: usize) -> Result<Vec<Pairing>> {
    pairings_of(&slots(&p.to_operator_string(), p.statistics), limit)
}

/// Complete pairings of the operators of one statistics in an arbitrary string.
pub fn enumerate_string_pairings(s: &OperatorString, statistics: Statistics, limit: usize) -> Result<Vec<Pairing>> {
    s.validate()?;
    pairings_of(&slots(s, statistics), limit)
}

fn sum_over_pairings<P: Propagator>(slots: &Slots, provider: &P, limit: usize) -> Result<P::Value> {
    let pairings = pairings_of(slots, limit)?;
    let n = slots.rows.len();
    let mut cache: Vec<P::Value> = Vec::with_capacity(n * n);
    for (_, r) in &slots.rows {
        for (_, c) in &slots.cols {
            cache.push(provider.contraction(slots.statistics, r, c)?);
        }
    }
    let terms = pairings
        .iter()
        .map(|pairing| {
            let prod =
                pairing.matching.iter().enumerate().fold(P::Value::one(), |acc, (a, &b)| acc.mul(&cache[a * n + b]));
            if pairing.sign.is_minus() {
                prod.neg()
            } else {
                prod
            }
        })
        .collect();
    Ok(P::Value::sum_all(terms))
}

/// ⟨T[(l₁ r₁)(l₂ r₂)…]⟩ as the signed sum over all complete pairings.
pub fn oracle_expectation<P: Propagator>(p: &PairProduct, provider: &P, limit: usize) -> Result<P::Value> {
    sum_over_pairings(&slots(&p.to_operator_string(), p.statistics), provider, limit)
}

/// ⟨T[s]⟩ for an arbitrary interleaving; Fermi and Bose parts are averaged
/// independently and multiplied.
pub fn oracle_string_expectation<P: Propagator>(s: &OperatorString, provider: &P, limit: usize) -> Result<P::Value> {
    s.validate()?;
    let f = sum_over_pairings(&slots(s, Statistics::Fermi), provider, limit)?;
    let b = sum_over_pairings(&slots(s, Statistics::Bose), provider, limit)?;
    Ok(f.mul(&b))
}

/// Oracle value of `T[fermi] · T[bose]` under a runtime-selected provider.
pub fn oracle_pair_products(
    fermi: &PairProduct,
    bose: &PairProduct,
    provider: &PropagatorProvider,
    limit: usize,
) -> Result<Value> {
    fn go<P: Propagator>(f: &PairProduct, b: &PairProduct, p: &P, limit: usize) -> Result<P::Value> {
        Ok(oracle_expectation(f, p, limit)?.mul(&oracle_expectation(b, p, limit)?))
    }
    match provider {
        PropagatorProvider::Symbolic => go(fermi, bose, &SymbolicPropagator, limit).map(Value::Symbolic),
        PropagatorProvider::Table(t) => go(fermi, bose, t, limit).map(Value::Exact),
    }
}

/// Oracle value of an operator string under a runtime-selected provider.
pub fn oracle_string(s: &OperatorString, provider: &PropagatorProvider, limit: usize) -> Result<Value> {
    match provider {
        PropagatorProvider::Symbolic => oracle_string_expectation(s, &SymbolicPropagator, limit).map(Value::Symbolic),
        PropagatorProvider::Table(t) => oracle_string_expectation(s, t, limit).map(Value::Exact),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::TablePropagator;
    use crate::operators::{label, FieldOperator};
    use crate::scalar::ExactScalar;
    use crate::symbolic::{sym, Flavor, Monomial, SymbolicSum};

    fn fermi(pairs: &[(&str, &str)]) -> PairProduct {
        PairProduct::from_tokens(Statistics::Fermi, pairs)
    }

    #[test]
    fn pairing_counts_and_signs() {
        let one = enumerate_pairings(&fermi(&[("a", "b")]), DEFAULT_ORACLE_LIMIT).unwrap();
        assert_eq!(one, vec![Pairing { matching: vec![0], sign: Sign::Plus }]);

        let two = enumerate_pairings(&fermi(&[("1", "1"), ("2", "2")]), DEFAULT_ORACLE_LIMIT).unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(two[0], Pairing { matching: vec![0, 1], sign: Sign::Plus });
        assert_eq!(two[1], Pairing { matching: vec![1, 0], sign: Sign::Minus });

        let four = fermi(&[("a", "b"), ("c", "d"), ("e", "f"), ("g", "h")]);
        let all = enumerate_pairings(&four, DEFAULT_ORACLE_LIMIT).unwrap();
        assert_eq!(all.len(), 24);
        assert!(all.windows(2).all(|w| w[0].matching < w[1].matching));
    }

    #[test]
    fn over_limit_is_an_error() {
        let p = fermi(&[("a", "b"), ("c", "d"), ("e", "f")]);
        assert_eq!(enumerate_pairings(&p, 2).unwrap_err(), WickError::OracleLimit { n: 3, limit: 2 });
    }

    #[test]
    fn symbolic_small_cases() {
        let v = oracle_expectation(&fermi(&[("x1", "x2")]), &SymbolicPropagator, 8).unwrap();
        assert_eq!(v, SymbolicSum::symbol(sym(Flavor::Fermion, "x1", "x2")));

        let v = oracle_expectation(&fermi(&[("x1", "x3"), ("x2", "x4")]), &SymbolicPropagator, 8).unwrap();
        let d = |a, b| sym(Flavor::Fermion, a, b);
        let expected = SymbolicSum::from_monomials(vec![
            Monomial::new(ExactScalar::one(), vec![d("x1", "x3"), d("x2", "x4")]),
            Monomial::new(ExactScalar::integer(-1), vec![d("x1", "x4"), d("x2", "x3")]),
        ]);
        assert_eq!(v, expected);
    }

    #[test]
    fn reversed_pair_contributes_minus() {
        let s = OperatorString::new(vec![FieldOperator::psibar("b"), FieldOperator::psi("a")]);
        let v = oracle_string_expectation(&s, &SymbolicPropagator, 8).unwrap();
        assert_eq!(v, SymbolicSum::symbol(sym(Flavor::Fermion, "a", "b")).scale(&ExactScalar::integer(-1)));
    }

    #[test]
    fn all_ones_sums() {
        let mut t = TablePropagator::new();
        let names: Vec<String> = (0..6).map(|i| format!("p{i}")).collect();
        for a in &names {
            for b in &names {
                t.insert(label(a), label(b), ExactScalar::one());
            }
        }
        for n in 1..=6 {
            let pairs: Vec<(&str, &str)> = names[..n].iter().map(|a| (a.as_str(), a.as_str())).collect();
            let f = oracle_expectation(&PairProduct::from_tokens(Statistics::Fermi, &pairs), &t, 8).unwrap();
            let b = oracle_expectation(&PairProduct::from_tokens(Statistics::Bose, &pairs), &t, 8).unwrap();
            let fact: i64 = (1..=n as i64).product();
            assert_eq!(f, ExactScalar::integer(i64::from(n == 1)), "fermi n = {n}");
            assert_eq!(b, ExactScalar::integer(fact), "bose n = {n}");
        }
    }

    #[test]
    fn empty_product_is_one() {
        let v = oracle_expectation(&PairProduct::empty(Statistics::Fermi), &SymbolicPropagator, 8).unwrap();
        assert_eq!(v, SymbolicSum::one());
    }
}

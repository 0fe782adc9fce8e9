//! Determinants, permanents and their structured expansions.
//!
//! Fermionic pair products evaluate to the determinant of their contraction
//! matrix, bosonic ones to the permanent. Row expansion exposes the
//! one-contraction-at-a-time structure; Laplace expansion splits the
//! determinant into products of m-pair and (n−m)-pair averages.

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Result, WickError};
use crate::matrix::{build_matrix, ContractionMatrix, Propagator, PropagatorProvider, SymbolicPropagator, Value};
use crate::operators::{permutation_parity, PairProduct, Sign, Statistics};
use crate::scalar::{ExactScalar, Ring};
use crate::symbolic::SymbolicSum;

/// Scalars that know their preferred determinant and permanent algorithms.
pub trait MatrixScalar: Ring {
    fn det(m: &ContractionMatrix<Self>) -> Self {
        det_expansion(m)
    }

    fn perm(m: &ContractionMatrix<Self>) -> Self {
        perm_ryser(m)
    }

    /// Determinant for fermions, permanent for bosons.
    fn average(m: &ContractionMatrix<Self>) -> Self {
        match m.statistics() {
            Statistics::Fermi => Self::det(m),
            Statistics::Bose => Self::perm(m),
        }
    }
}

impl MatrixScalar for SymbolicSum {}

impl MatrixScalar for ExactScalar {
    fn det(m: &ContractionMatrix<Self>) -> Self {
        det_elimination(m)
    }
}

impl MatrixScalar for f64 {}

fn signed<T: Ring>(sign: Sign, x: T) -> T {
    match sign {
        Sign::Plus => x,
        Sign::Minus => x.neg(),
    }
}

/// Σ_σ sgn(σ) Π_α m[α, σ(α)], enumerating all n! permutations. Reference only.
pub fn det_leibniz<T: Ring>(m: &ContractionMatrix<T>) -> T {
    leibniz_sum(m, true)
}

/// Σ_σ Π_α m[α, σ(α)], enumerating all n! permutations.
pub fn perm_naive<T: Ring>(m: &ContractionMatrix<T>) -> T {
    leibniz_sum(m, false)
}

fn leibniz_sum<T: Ring>(m: &ContractionMatrix<T>, with_sign: bool) -> T {
    let n = m.n();
    let terms = (0..n)
        .permutations(n)
        .map(|sigma| {
            let prod = sigma.iter().enumerate().fold(T::one(), |acc, (r, &c)| acc.mul(m.entry(r, c)));
            if with_sign {
                signed(permutation_parity(&sigma), prod)
            } else {
                prod
            }
        })
        .collect();
    T::sum_all(terms)
}

/// Determinant by minor expansion memoized on column subsets: rows are
/// assigned top to bottom, and `partial[S]` holds the signed sum over all
/// assignments of the first |S| rows onto the columns in S.
pub fn det_expansion<T: Ring>(m: &ContractionMatrix<T>) -> T {
    subset_expansion(m, true)
}

fn subset_expansion<T: Ring>(m: &ContractionMatrix<T>, with_sign: bool) -> T {
    let n = m.n();
    assert!(n < usize::BITS as usize - 1, "matrix too large for subset expansion");
    let full = (1usize << n) - 1;
    let mut partial: Vec<Option<T>> = vec![None; full + 1];
    partial[0] = Some(T::one());
    for mask in 0..full {
        let Some(value) = partial[mask].take() else { continue };
        if value.is_zero() {
            continue;
        }
        let row = mask.count_ones() as usize;
        for col in (0..n).filter(|c| mask & (1 << c) == 0) {
            let entry = m.entry(row, col);
            if entry.is_zero() {
                continue;
            }
            // columns already used by earlier rows that lie right of `col` are inversions
            let inversions = (mask >> (col + 1)).count_ones();
            let mut term = value.mul(entry);
            if with_sign && inversions % 2 == 1 {
                term = term.neg();
            }
            let slot = &mut partial[mask | (1 << col)];
            *slot = Some(match slot.take() {
                Some(acc) => acc.add(&term),
                None => term,
            });
        }
    }
    partial[full].take().unwrap_or_else(T::zero)
}

/// Exact determinant by fraction-free (Bareiss) elimination.
///
/// Rows are first scaled to integers by the lcm of their denominators, so the
/// elimination runs entirely in `BigInt`; every Bareiss division is exact.
pub fn det_elimination(m: &ContractionMatrix<ExactScalar>) -> ExactScalar {
    let n = m.n();
    if n == 0 {
        return ExactScalar::one();
    }
    let mut scale = BigInt::one();
    let mut a: Vec<Vec<BigInt>> = (0..n)
        .map(|r| {
            let row: Vec<&ExactScalar> = (0..n).map(|c| m.entry(r, c)).collect();
            let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            scale *= &l;
            row.iter().map(|x| x.numer() * (&l / x.denom())).collect()
        })
        .collect();

    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    negate = !negate;
                }
                None => return ExactScalar::zero(),
            }
        }
        let (top, bottom) = a.split_at_mut(k + 1);
        let pivot = &top[k];
        bottom.par_iter_mut().for_each(|row| {
            for j in k + 1..n {
                let v = &row[j] * &pivot[k] - &row[k] * &pivot[j];
                row[j] = v / &prev;
            }
            row[k] = BigInt::zero();
        });
        prev = a[k][k].clone();
    }
    let det = ExactScalar::new(a[n - 1][n - 1].clone(), scale);
    if negate {
        -det
    } else {
        det
    }
}

/// Ryser's inclusion–exclusion formula with Gray-code column updates:
/// perm(A) = Σ_S (−1)^(n−|S|) Π_i Σ_{j∈S} a_ij, in O(2ⁿ·n).
///
/// Generic over the ring, so it also serves symbolic matrices (where the
/// inclusion–exclusion cancellations happen during normalization).
pub fn perm_ryser<T: Ring>(m: &ContractionMatrix<T>) -> T {
    let n = m.n();
    if n == 0 {
        return T::one();
    }
    assert!(n < 63, "matrix too large for Ryser enumeration");
    const BATCH: usize = 4096;
    let mut row_sums = vec![T::zero(); n];
    let mut pending: Vec<T> = Vec::with_capacity(BATCH);
    let mut total = T::zero();
    for k in 1u64..(1u64 << n) {
        let gray = k ^ (k >> 1);
        let col = k.trailing_zeros() as usize;
        let added = gray & (1 << col) != 0;
        for (r, s) in row_sums.iter_mut().enumerate() {
            *s = if added { s.add(m.entry(r, col)) } else { s.sub(m.entry(r, col)) };
        }
        let prod = row_sums.iter().fold(T::one(), |acc, s| acc.mul(s));
        if prod.is_zero() {
            continue;
        }
        let odd = (n - gray.count_ones() as usize) % 2 == 1;
        pending.push(if odd { prod.neg() } else { prod });
        if pending.len() == BATCH {
            pending.push(total);
            total = T::sum_all(std::mem::take(&mut pending));
        }
    }
    pending.push(total);
    T::sum_all(pending)
}

/// One summand `sign · entry · minor` of a row (or column) expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSummand<T> {
    pub column: usize,
    pub entry: T,
    pub sign: Sign,
    pub minor: T,
}

impl<T: Ring> RowSummand<T> {
    pub fn value(&self) -> T {
        signed(self.sign, self.entry.mul(&self.minor))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowExpansion<T> {
    pub row: usize,
    pub summands: Vec<RowSummand<T>>,
    pub total: T,
}

fn cofactor_sign(statistics: Statistics, parity: usize) -> Sign {
    match statistics {
        Statistics::Fermi => Sign::from_parity(parity % 2 == 1),
        Statistics::Bose => Sign::Plus,
    }
}

/// Expands along `row` (0-based): n summands, one per contraction of the
/// row's ψ with each ψ̄. Cofactor signs are (−1)^(row+β); all plus for bosons.
pub fn expand_along_row<T: MatrixScalar>(m: &ContractionMatrix<T>, row: usize) -> Result<RowExpansion<T>> {
    let n = m.n();
    if row >= n {
        return Err(WickError::IndexOutOfRange { index: row, n });
    }
    let other_rows: Vec<usize> = (0..n).filter(|&r| r != row).collect();
    let summands: Vec<RowSummand<T>> = (0..n)
        .map(|col| {
            let other_cols: Vec<usize> = (0..n).filter(|&c| c != col).collect();
            RowSummand {
                column: col,
                entry: m.entry(row, col).clone(),
                sign: cofactor_sign(m.statistics(), row + col),
                minor: T::average(&m.submatrix(&other_rows, &other_cols)),
            }
        })
        .collect();
    let total = T::sum_all(summands.iter().map(RowSummand::value).collect());
    Ok(RowExpansion { row, summands, total })
}

/// Column expansion, via the transpose; `column` plays the role of `row`
/// in the returned summands.
pub fn expand_along_column<T: MatrixScalar>(m: &ContractionMatrix<T>, column: usize) -> Result<RowExpansion<T>> {
    expand_along_row(&m.transpose(), column)
}

/// A term of the generalized Laplace expansion along a fixed row set.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceTerm<T> {
    pub row_set: Vec<usize>,
    pub col_set: Vec<usize>,
    pub minor_value: T,
    pub complement_value: T,
    pub sign: Sign,
}

impl<T: Ring> LaplaceTerm<T> {
    pub fn value(&self) -> T {
        signed(self.sign, self.minor_value.mul(&self.complement_value))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceExpansion<T> {
    pub terms: Vec<LaplaceTerm<T>>,
    pub total: T,
}

/// Generalized Laplace expansion over the (0-based) `rows`: one term per
/// m-column subset, C(n, m) in total, in lexicographic column order.
/// Sign is (−1)^(Σ rows + Σ cols) in 1-based indices (all plus for bosons).
pub fn laplace_expand<T: MatrixScalar>(m: &ContractionMatrix<T>, rows: &[usize]) -> Result<LaplaceExpansion<T>> {
    let n = m.n();
    let k = rows.len();
    if k == 0 || k >= n {
        return Err(WickError::InvalidRowSet(format!("need 1 <= m < n, got m = {k}, n = {n}")));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
        return Err(WickError::IndexOutOfRange { index: bad, n });
    }
    let mut row_set = rows.to_vec();
    row_set.sort_unstable();
    if row_set.windows(2).any(|w| w[0] == w[1]) {
        return Err(WickError::InvalidRowSet("rows must be distinct".into()));
    }
    let row_rest: Vec<usize> = (0..n).filter(|r| !row_set.contains(r)).collect();
    let row_weight: usize = row_set.iter().map(|r| r + 1).sum();

    let terms: Vec<LaplaceTerm<T>> = (0..n)
        .combinations(k)
        .map(|col_set| {
            let col_rest: Vec<usize> = (0..n).filter(|c| !col_set.contains(c)).collect();
            let col_weight: usize = col_set.iter().map(|c| c + 1).sum();
            LaplaceTerm {
                minor_value: T::average(&m.submatrix(&row_set, &col_set)),
                complement_value: T::average(&m.submatrix(&row_rest, &col_rest)),
                sign: cofactor_sign(m.statistics(), row_weight + col_weight),
                row_set: row_set.clone(),
                col_set,
            }
        })
        .collect();
    let total = T::sum_all(terms.iter().map(LaplaceTerm::value).collect());
    Ok(LaplaceExpansion { terms, total })
}

/// det(fermi matrix) · perm(bose matrix) with a statically chosen provider.
pub fn evaluate_pair_product_with<P>(fermi: &PairProduct, bose: &PairProduct, provider: &P) -> Result<P::Value>
where
    P: Propagator,
    P::Value: MatrixScalar,
{
    let f = build_matrix(fermi, provider)?;
    let b = build_matrix(bose, provider)?;
    let fv = P::Value::average(&f);
    if fv.is_zero() {
        return Ok(fv);
    }
    Ok(fv.mul(&P::Value::average(&b)))
}

/// Expectation value of `T[fermi] · T[bose]` under the given provider.
pub fn evaluate_pair_product(fermi: &PairProduct, bose: &PairProduct, provider: &PropagatorProvider) -> Result<Value> {
    match provider {
        PropagatorProvider::Symbolic => {
            evaluate_pair_product_with(fermi, bose, &SymbolicPropagator).map(Value::Symbolic)
        }
        PropagatorProvider::Table(t) => evaluate_pair_product_with(fermi, bose, t).map(Value::Exact),
    }
}

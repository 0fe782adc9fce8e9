//! First-order thermal Green's functions for a two-body density–density
//! interaction, derived entirely through contraction determinants.
//!
//! Pipeline for order one: append the vertex operators to the external
//! string, regroup into pairs (tracking the fermionic sign), build the
//! symbolic contraction matrix, zero the external–external block (the
//! linked-cluster prescription with ⟨S⟩₀ = 1), expand, attach the vertex
//! factor, merge terms that differ only by a relabeling of the integration
//! points, and finally rewrite Δ = −G⁰.

use std::collections::BTreeSet;

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Result, WickError};
use crate::evaluate::det_expansion;
use crate::matrix::{build_matrix, zero_external_block, SymbolicPropagator};
use crate::operators::{
    label, sign_to_pair_product, FieldKind, FieldOperator, OperatorString, PairProduct, PointLabel, Statistics,
};
use crate::scalar::{ExactScalar, Ring};
use crate::symbolic::{ContractionSymbol, Flavor, Monomial, SymbolicSum};

/// ½ ∫ dz₁ dz₂ ψ̄(z₁) ψ̄(z₂) V(z₁−z₂) ψ(z₂) ψ(z₁), with spin folded into the points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionSpec {
    pub prefactor: ExactScalar,
    pub vertex_points: Vec<PointLabel>,
    /// Operators of one vertex, in the order they appear in the Hamiltonian.
    pub vertex_operators: OperatorString,
    /// How the vertex operators are grouped into (ψ, ψ̄) pairs.
    pub pair_insertions: Vec<(PointLabel, PointLabel)>,
    pub potential: ContractionSymbol,
}

impl InteractionSpec {
    pub fn two_body(z1: PointLabel, z2: PointLabel) -> Self {
        let vertex_operators = OperatorString::new(vec![
            FieldOperator::new(FieldKind::PsiBar, z1.clone()),
            FieldOperator::new(FieldKind::PsiBar, z2.clone()),
            FieldOperator::new(FieldKind::Psi, z2.clone()),
            FieldOperator::new(FieldKind::Psi, z1.clone()),
        ]);
        InteractionSpec {
            prefactor: ExactScalar::new(1, 2),
            potential: ContractionSymbol::new(Flavor::Potential, z1.clone(), z2.clone()),
            pair_insertions: vec![(z1.clone(), z1.clone()), (z2.clone(), z2.clone())],
            vertex_points: vec![z1, z2],
            vertex_operators,
        }
    }
}

impl Default for InteractionSpec {
    fn default() -> Self {
        Self::two_body(label("z1"), label("z2"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Particles {
    One,
    Two,
}

impl Particles {
    pub fn external_count(self) -> usize {
        match self {
            Particles::One => 2,
            Particles::Two => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreensRequest {
    pub particles: Particles,
    pub order: u32,
    pub external_points: Vec<PointLabel>,
}

impl GreensRequest {
    /// Default labels `x1, x2` (one particle) or `x1..x4` (two particles).
    pub fn new(particles: Particles, order: u32) -> Self {
        let external_points = (1..=particles.external_count()).map(|i| label(&format!("x{i}"))).collect();
        GreensRequest { particles, order, external_points }
    }

    pub fn with_points(particles: Particles, order: u32, external_points: Vec<PointLabel>) -> Self {
        GreensRequest { particles, order, external_points }
    }

    fn validate(&self, spec: &InteractionSpec) -> Result<()> {
        if self.order > 1 {
            return Err(WickError::UnsupportedOrder(self.order));
        }
        let want = self.particles.external_count();
        if self.external_points.len() != want {
            return Err(WickError::InvalidLabel(format!(
                "expected {want} external labels, got {}",
                self.external_points.len()
            )));
        }
        let distinct: BTreeSet<&PointLabel> = self.external_points.iter().collect();
        if distinct.len() != want {
            return Err(WickError::InvalidLabel("external labels must be distinct".into()));
        }
        if let Some(z) = spec.vertex_points.iter().find(|z| distinct.contains(z)) {
            return Err(WickError::InvalidLabel(format!("vertex label {z} collides with an external label")));
        }
        Ok(())
    }

    fn externals(&self) -> BTreeSet<PointLabel> {
        self.external_points.iter().cloned().collect()
    }

    /// ψ(x₁) ψ̄(x₂), or ψ(x₁) ψ(x₂) ψ̄(x₃) ψ̄(x₄), and the matching pair division.
    fn external_factors(&self) -> (OperatorString, Vec<(PointLabel, PointLabel)>) {
        let x = &self.external_points;
        match self.particles {
            Particles::One => (
                OperatorString::new(vec![
                    FieldOperator::new(FieldKind::Psi, x[0].clone()),
                    FieldOperator::new(FieldKind::PsiBar, x[1].clone()),
                ]),
                vec![(x[0].clone(), x[1].clone())],
            ),
            Particles::Two => (
                OperatorString::new(vec![
                    FieldOperator::new(FieldKind::Psi, x[0].clone()),
                    FieldOperator::new(FieldKind::Psi, x[1].clone()),
                    FieldOperator::new(FieldKind::PsiBar, x[2].clone()),
                    FieldOperator::new(FieldKind::PsiBar, x[3].clone()),
                ]),
                vec![(x[0].clone(), x[2].clone()), (x[1].clone(), x[3].clone())],
            ),
        }
    }
}

/// The operator string inside ⟨T[…]⟩₀ at the requested order, and its pair division.
pub fn numerator_factors(req: &GreensRequest, spec: &InteractionSpec) -> (OperatorString, PairProduct) {
    let (mut string, mut pairs) = req.external_factors();
    if req.order == 1 {
        string = string.concat(&spec.vertex_operators);
        pairs.extend(spec.pair_insertions.iter().cloned());
    }
    (string, PairProduct::new(Statistics::Fermi, pairs))
}

/// The determinant of the full (unreduced) contraction matrix of the numerator, no prefactors.
pub fn numerator_determinant(req: &GreensRequest, spec: &InteractionSpec) -> Result<SymbolicSum> {
    req.validate(spec)?;
    let (_, pairs) = numerator_factors(req, spec);
    Ok(det_expansion(&build_matrix(&pairs, &SymbolicPropagator)?))
}

/// One order of −⟨T[ψ…ψ̄… S]⟩₀ in Δ form: overall −1 of the Green's function,
/// (−1)ᵏ·prefactor from the k-th order of S, the regrouping sign, the
/// determinant, and the potential symbol.
pub fn order_contribution(req: &GreensRequest, spec: &InteractionSpec, reduce: bool) -> Result<SymbolicSum> {
    req.validate(spec)?;
    let (string, pairs) = numerator_factors(req, spec);
    let mut matrix = build_matrix(&pairs, &SymbolicPropagator)?;
    if reduce && req.order == 1 {
        matrix = zero_external_block(&matrix, &req.externals());
    }
    let sign = sign_to_pair_product(&string, &pairs)?;
    let mut coefficient = ExactScalar::integer(-sign.value());
    let mut result = det_expansion(&matrix);
    if req.order == 1 {
        coefficient = -(&coefficient * &spec.prefactor);
        result = result.mul(&SymbolicSum::symbol(spec.potential.clone()));
    }
    Ok(result.scale(&coefficient))
}

/// Serialized as `{"externals": [...], "integration_vars": [...], "expression": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GreensResult {
    #[serde(rename = "externals")]
    pub external_points: Vec<PointLabel>,
    pub integration_vars: Vec<PointLabel>,
    pub expression: SymbolicSum,
}

impl GreensResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("greens results always serialize")
    }

    /// Terms that involve at least one integration variable.
    pub fn correction(&self) -> SymbolicSum {
        let vars: BTreeSet<&PointLabel> = self.integration_vars.iter().collect();
        self.expression.retain(|m| m.points().any(|p| vars.contains(p)))
    }
}

/// Green's function through the requested order, in G⁰/V/δ form.
pub fn greens(req: &GreensRequest, spec: &InteractionSpec) -> Result<GreensResult> {
    req.validate(spec)?;
    let zeroth = order_contribution(&GreensRequest { order: 0, ..req.clone() }, spec, true)?;
    let (expression, integration_vars) = if req.order == 0 {
        (zeroth, Vec::new())
    } else {
        let first = relabel_dummies(&order_contribution(req, spec, true)?, &spec.vertex_points);
        (zeroth.add(&first), spec.vertex_points.clone())
    };
    Ok(GreensResult {
        external_points: req.external_points.clone(),
        integration_vars,
        expression: rewrite_to_bare(&expression),
    })
}

pub fn first_order_one_particle(x1: PointLabel, x2: PointLabel, spec: &InteractionSpec) -> Result<GreensResult> {
    greens(&GreensRequest::with_points(Particles::One, 1, vec![x1, x2]), spec)
}

pub fn first_order_two_particle(x: [PointLabel; 4], spec: &InteractionSpec) -> Result<GreensResult> {
    greens(&GreensRequest::with_points(Particles::Two, 1, x.to_vec()), spec)
}

/// Rewrites every Δ(a,b) as −G⁰(a,b).
pub fn rewrite_to_bare(sum: &SymbolicSum) -> SymbolicSum {
    sum.map_monomials(|m| {
        let mut negate = false;
        let factors = m
            .factors
            .iter()
            .map(|s| {
                if s.flavor() == Flavor::Fermion {
                    negate = !negate;
                    s.with_flavor(Flavor::G0)
                } else {
                    s.clone()
                }
            })
            .collect();
        let c = if negate { -&m.coefficient } else { m.coefficient.clone() };
        Monomial::new(c, factors)
    })
}

/// Drops every monomial containing a propagator that joins two external points.
pub fn linked_cluster_reduce(sum: &SymbolicSum, externals: &BTreeSet<PointLabel>) -> SymbolicSum {
    sum.retain(|m| {
        !m.factors
            .iter()
            .any(|s| s.flavor().is_propagator() && externals.contains(s.left()) && externals.contains(s.right()))
    })
}

/// Replaces each monomial by its least representative over all permutations
/// of the dummy labels, then merges. Preserves the value of the sum under
/// any integration that is symmetric in the dummies.
pub fn relabel_dummies(sum: &SymbolicSum, dummies: &[PointLabel]) -> SymbolicSum {
    let k = dummies.len();
    let relabelings: Vec<Vec<usize>> = (0..k).permutations(k).collect();
    sum.map_monomials(|m| {
        relabelings
            .iter()
            .map(|perm| {
                m.map_points(|p| match dummies.iter().position(|d| d == p) {
                    Some(i) => dummies[perm[i]].clone(),
                    None => p.clone(),
                })
            })
            .min_by(|a, b| a.factors.cmp(&b.factors))
            .unwrap_or_else(|| m.clone())
    })
}

/// Σ(s₁, s₂) with its argument points and any inner integration points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelfEnergy {
    #[serde(rename = "externals")]
    pub arguments: [PointLabel; 2],
    pub integration_vars: Vec<PointLabel>,
    pub expression: SymbolicSum,
}

impl SelfEnergy {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("self-energies always serialize")
    }
}

fn fresh_label(taken: &BTreeSet<PointLabel>, index: usize) -> PointLabel {
    let mut name = if index == 0 { "z".to_string() } else { format!("z{}", "'".repeat(index)) };
    while taken.contains(name.as_str()) {
        name.push('\'');
    }
    label(&name)
}

/// Strips the legs G⁰(x₁, a) … G⁰(b, x₂) from each first-order term and
/// returns the kernel Σ(s₁, s₂), where s₁, s₂ are the first two integration
/// variables. When both legs attach to the same vertex (a = b) the kernel is
/// local and carries δ(s₁ − s₂); the leftover vertex becomes an inner
/// integration point.
pub fn extract_self_energy(result: &GreensResult) -> Result<SelfEnergy> {
    let [x1, x2] = match result.external_points.as_slice() {
        [a, b] => [a.clone(), b.clone()],
        _ => return Err(WickError::Structural("self-energy needs a one-particle result".into())),
    };
    let dummies = &result.integration_vars;
    if dummies.len() < 2 {
        return Err(WickError::Structural("no integration variables: not a first-order result".into()));
    }
    let correction = result.correction();
    if correction.is_empty() {
        return Err(WickError::Structural("no first-order terms to strip".into()));
    }
    let (s1, s2) = (dummies[0].clone(), dummies[1].clone());
    let mut taken: BTreeSet<PointLabel> = dummies.iter().cloned().collect();
    taken.insert(x1.clone());
    taken.insert(x2.clone());
    let inner: Vec<PointLabel> = (0..dummies.len()).map(|i| fresh_label(&taken, i)).collect();
    let is_dummy = |p: &PointLabel| dummies.contains(p);

    let mut terms = Vec::new();
    for m in correction.terms() {
        let leg = |pred: &dyn Fn(&ContractionSymbol) -> bool| -> Result<usize> {
            let hits: Vec<usize> = m
                .factors
                .iter()
                .enumerate()
                .filter(|(_, s)| s.flavor() == Flavor::G0 && pred(s))
                .map(|(i, _)| i)
                .collect();
            match hits.as_slice() {
                [i] => Ok(*i),
                _ => Err(WickError::Structural(format!("term {m:?} does not have exactly one leg"))),
            }
        };
        let incoming = leg(&|s| *s.left() == x1 && is_dummy(s.right()))?;
        let outgoing = leg(&|s| *s.right() == x2 && is_dummy(s.left()))?;
        if incoming == outgoing {
            return Err(WickError::Structural(format!("term {m:?} has a single shared leg")));
        }
        let a = m.factors[incoming].right().clone();
        let b = m.factors[outgoing].left().clone();
        let rest: Vec<ContractionSymbol> = m
            .factors
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != incoming && *i != outgoing)
            .map(|(_, s)| s.clone())
            .collect();
        if rest.iter().any(|s| s.mentions(&x1) || s.mentions(&x2)) {
            return Err(WickError::Structural(format!("term {m:?} is not leg-dressed")));
        }
        let others: Vec<PointLabel> = dummies.iter().filter(|d| **d != a && **d != b).cloned().collect();
        let mut mapping = vec![(a.clone(), s1.clone())];
        let local = a == b;
        if !local {
            mapping.push((b, s2.clone()));
        }
        mapping.extend(others.into_iter().zip(inner.iter().cloned()));
        let kernel = Monomial::new(m.coefficient.clone(), rest).map_points(|p| {
            mapping.iter().find(|(from, _)| from == p).map(|(_, to)| to.clone()).unwrap_or_else(|| p.clone())
        });
        terms.push(if local {
            kernel.mul(&Monomial::new(
                ExactScalar::one(),
                vec![ContractionSymbol::new(Flavor::Delta, s1.clone(), s2.clone())],
            ))
        } else {
            kernel
        });
    }
    let expression = SymbolicSum::from_monomials(terms);
    let used: BTreeSet<&PointLabel> = expression.terms().iter().flat_map(|m| m.points()).collect();
    Ok(SelfEnergy {
        arguments: [s1, s2],
        integration_vars: inner.into_iter().filter(|z| used.contains(z)).collect(),
        expression,
    })
}

/// ∫ ds₁ ds₂ G⁰(x₁, s₁) Σ(s₁, s₂) G⁰(s₂, x₂), with δ(s₁ − s₂) integrated out and
/// the result expressed over the dummies {s₁, s₂} in canonical labeling.
pub fn dress_with_legs(sigma: &SelfEnergy, x1: &PointLabel, x2: &PointLabel) -> SymbolicSum {
    let [s1, s2] = sigma.arguments.clone();
    let dummies = [s1.clone(), s2.clone()];
    let dressed = sigma.expression.map_monomials(|m| {
        let mut factors = m.factors.clone();
        factors.push(ContractionSymbol::new(Flavor::G0, x1.clone(), s1.clone()));
        factors.push(ContractionSymbol::new(Flavor::G0, s2.clone(), x2.clone()));
        let delta = ContractionSymbol::new(Flavor::Delta, s1.clone(), s2.clone());
        let mut mono = Monomial::new(m.coefficient.clone(), factors);
        if let Some(i) = mono.factors.iter().position(|s| *s == delta) {
            mono.factors.remove(i);
            mono = mono.map_points(|p| if *p == s2 { s1.clone() } else { p.clone() });
        }
        let present: BTreeSet<PointLabel> = mono.points().cloned().collect();
        let mut free = dummies.iter().filter(|d| !present.contains(*d));
        let renames: Vec<(PointLabel, PointLabel)> = sigma
            .integration_vars
            .iter()
            .filter(|z| present.contains(*z))
            .filter_map(|z| free.next().map(|d| (z.clone(), d.clone())))
            .collect();
        mono.map_points(|p| renames.iter().find(|(z, _)| z == p).map(|(_, d)| d.clone()).unwrap_or_else(|| p.clone()))
    });
    relabel_dummies(&dressed, &dummies)
}

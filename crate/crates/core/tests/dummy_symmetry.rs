use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wick_core::perturbation::{order_contribution, relabel_dummies, GreensRequest, InteractionSpec, Particles};
use wick_core::{label, substitute, ContractionSymbol, ExactScalar, PointLabel, SymbolicSum};

fn swap(p: &PointLabel, a: &PointLabel, b: &PointLabel) -> PointLabel {
    if p == a {
        b.clone()
    } else if p == b {
        a.clone()
    } else {
        p.clone()
    }
}

/// Values that are invariant under exchanging the two vertex points.
fn symmetric_table(sums: &[&SymbolicSum], rng: &mut ChaCha8Rng) -> BTreeMap<ContractionSymbol, ExactScalar> {
    let (z1, z2) = (label("z1"), label("z2"));
    let symbols: BTreeSet<ContractionSymbol> =
        sums.iter().flat_map(|s| s.terms().iter().flat_map(|m| m.factors.iter().cloned())).collect();
    let mut orbit_values: BTreeMap<ContractionSymbol, ExactScalar> = BTreeMap::new();
    let mut table = BTreeMap::new();
    for s in symbols {
        let image = s.map_points(|p| swap(p, &z1, &z2));
        let key = s.clone().min(image);
        let v = orbit_values
            .entry(key)
            .or_insert_with(|| ExactScalar::new(rng.gen_range(-7i64..=7), rng.gen_range(1i64..=5)))
            .clone();
        table.insert(s, v);
    }
    table
}

#[test]
fn merging_dummies_preserves_symmetric_evaluation() {
    let spec = InteractionSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for particles in [Particles::One, Particles::Two] {
        for reduce in [true, false] {
            let raw = order_contribution(&GreensRequest::new(particles, 1), &spec, reduce).unwrap();
            let merged = relabel_dummies(&raw, &spec.vertex_points);
            assert!(merged.len() <= raw.len());
            for _ in 0..20 {
                let table = symmetric_table(&[&raw, &merged], &mut rng);
                assert_eq!(substitute(&raw, &table).unwrap(), substitute(&merged, &table).unwrap());
            }
        }
    }
}

#[test]
fn merging_is_idempotent_and_label_blind() {
    let spec = InteractionSpec::default();
    let raw = order_contribution(&GreensRequest::new(Particles::Two, 1), &spec, true).unwrap();
    let once = relabel_dummies(&raw, &spec.vertex_points);
    assert_eq!(relabel_dummies(&once, &spec.vertex_points), once);

    let (z1, z2) = (label("z1"), label("z2"));
    let swapped = raw.map_monomials(|m| m.map_points(|p| swap(p, &z1, &z2)));
    assert_eq!(relabel_dummies(&swapped, &spec.vertex_points), once);
}

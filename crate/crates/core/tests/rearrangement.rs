mod common;

use common::*;
use summa::series::catalog_get;
use summa::transforms::rearrange_to;

const STEPS: usize = 100_000;

#[test]
fn sigma_matches_independent_greedy_replay() {
    let a = catalog_get("alt_harmonic", &[]).unwrap();
    for target in [0.0, 1.0, -2.5, 0.3] {
        let (_, sigma) = rearrange_to(&a, target, 1 << 16).unwrap();
        let (want, _) = greedy_replay(target, 20_000);
        assert_eq!(sigma.prefix(20_000), want, "target {target}");
    }
}

#[test]
fn error_is_bounded_by_the_last_crossing_term() {
    let a = catalog_get("alt_harmonic", &[]).unwrap();
    for target in [0.0, 1.0, -2.5] {
        let (r, _) = rearrange_to(&a, target, 1 << 16).unwrap();
        let mut sum = summa::series::CompensatedSum::default();
        let mut crossing: Option<f64> = None;
        for n in 0..STEPS {
            let t = r.term_f64(n as u64);
            let before = sum.value();
            sum.add(t);
            let after = sum.value();
            if (before <= target) != (after <= target) {
                crossing = Some(t.abs());
            }
            if let Some(bound) = crossing {
                assert!(
                    (after - target).abs() <= bound + 1e-12,
                    "target {target}, step {n}: |{after} - {target}| > {bound}"
                );
            }
        }
        assert!(crossing.is_some());
    }
}

#[test]
fn every_source_index_is_used_once() {
    let a = catalog_get("alt_harmonic", &[]).unwrap();
    let (_, sigma) = rearrange_to(&a, -2.5, 1 << 16).unwrap();
    let mut idx = sigma.prefix(STEPS);
    idx.sort_unstable();
    idx.dedup();
    assert_eq!(idx.len(), STEPS);
}

#[test]
fn absolutely_convergent_series_are_refused() {
    for name in ["basel", "telescoping", "ones", "grandi"] {
        let s = catalog_get(name, &[]).unwrap();
        assert!(rearrange_to(&s, 0.0, 1 << 16).is_err(), "{name}");
    }
}

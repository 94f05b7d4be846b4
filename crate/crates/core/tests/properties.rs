//! Property tests for the sequence algebra, the transforms, the rule
//! engine and the expression language.

mod common;

use proptest::prelude::*;

use common::*;
use summa::axioms::{apply_rule, AffineValue, Rule, RuleFamily, RuleSet};
use summa::canonical::SeqOp;

const CASES: u32 = 1000;

#[test]
fn canonical_ops_match_list_construction() {
    check_canonical_oracle(CASES).unwrap();
}

#[test]
fn normalize_is_idempotent_and_term_preserving() {
    check_normalize_idempotent(CASES).unwrap();
}

#[test]
fn equal_sequences_stay_equal_under_ops() {
    check_congruence(CASES).unwrap();
}

#[test]
fn prepend_first_term_undoes_shift() {
    check_prepend_shift_round_trip(CASES).unwrap();
}

#[test]
fn transforms_match_lists_and_canonical_forms() {
    check_transform_cross_oracle(CASES / 4).unwrap();
}

#[test]
fn rendered_expressions_reparse_identically() {
    check_dsl_round_trip(CASES).unwrap();
}

fn rule() -> impl Strategy<Value = Rule> {
    prop_oneof![
        small_rational().prop_map(Rule::Scale),
        Just(Rule::Add),
        Just(Rule::Shift),
        small_rational().prop_map(Rule::Prepend),
        (0usize..=2, 1usize..=2).prop_map(|(offset, every)| Rule::Comm { offset, every }),
        (0usize..=1).prop_map(|offset| Rule::Assoc { offset }),
        mask().prop_map(Rule::Dilute),
    ]
}

fn op_of(rule: &Rule, second: &summa::canonical::CanonicalSeq) -> SeqOp {
    match rule {
        Rule::Scale(k) => SeqOp::Scale(k.clone()),
        Rule::Add => SeqOp::Add(second.clone()),
        Rule::Shift => SeqOp::Shift,
        Rule::Prepend(v) => SeqOp::Prepend(v.clone()),
        Rule::Comm { offset, every } => SeqOp::SwapPairs {
            offset: *offset,
            every: *every,
        },
        Rule::Assoc { offset } => SeqOp::AssociatePairs { offset: *offset },
        Rule::Dilute(m) => SeqOp::Dilute(*m),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rule_conclusions_match_sequence_semantics(
        rule in rule(),
        a in raw_seq(),
        b in raw_seq(),
        c0 in small_rational(),
        c1 in small_rational(),
    ) {
        let all = RuleSet::core()
            .with(RuleFamily::Comm)
            .with(RuleFamily::Assoc)
            .with(RuleFamily::Dilute);
        let (a, b) = (a.normalize(), b.normalize());
        let v = AffineValue { c0, c1 };
        let premises = if rule.arity() == 2 {
            vec![(&a, &v), (&b, &v)]
        } else {
            vec![(&a, &v)]
        };
        let (seq, value) = apply_rule(&rule, &premises, &all).unwrap();
        let list = list_apply(&op_of(&rule, &b), &brute_terms(&a, 400));
        let n = 100.min(list.len());
        prop_assert_eq!(seq.terms(n), list[..n].to_vec());
        match &rule {
            Rule::Shift => prop_assert_eq!(value, v.add_constant(&-a.term(0))),
            Rule::Prepend(q) => prop_assert_eq!(value, v.add_constant(q)),
            Rule::Scale(k) => prop_assert_eq!(value, v.scale(k)),
            Rule::Add => prop_assert_eq!(value, v.add(&v)),
            _ => prop_assert_eq!(value, v),
        }
    }

    #[test]
    fn catalog_terms_match_closed_forms(idx in 0..CATALOG_NAMES.len(), r in small_rational(), n in 0u64..5000) {
        let name = CATALOG_NAMES[idx];
        let params = if name == "geometric" { vec![r.clone()] } else { vec![] };
        let s = summa::series::catalog_get(name, &params).unwrap();
        let n = if name == "geometric" { n % 64 } else { n };
        prop_assert_eq!(s.term(n), catalog_oracle(name, params.first())(n));
    }
}

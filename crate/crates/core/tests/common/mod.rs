//! Independent oracles and generators shared by the integration targets.
//!
//! Nothing here calls into the code under test to compute an expected
//! value: sequences are built as plain lists and transformed by direct
//! index manipulation.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use summa::canonical::{CanonicalSeq, DilutionMask, Placement, Poly, SeqOp};
use summa::dsl::parse_expr;
use summa::series::{catalog_get, Series};
use summa::transforms::{apply_transform, TransformSpec};

pub fn q(p: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(d))
}

pub fn qi(n: i64) -> BigRational {
    q(n, 1)
}

/// Closed-form terms of the catalog, written out independently.
pub fn catalog_oracle(name: &str, r: Option<&BigRational>) -> Box<dyn Fn(u64) -> BigRational> {
    let sign = |n: u64| if n % 2 == 0 { qi(1) } else { qi(-1) };
    match name {
        "grandi" => Box::new(sign),
        "ones" => Box::new(|_| qi(1)),
        "zeros" => Box::new(|_| qi(0)),
        "naturals" => Box::new(|n| qi(n as i64 + 1)),
        "alt_harmonic" => Box::new(move |n| sign(n) * q(1, n as i64 + 1)),
        "harmonic" => Box::new(|n| q(1, n as i64 + 1)),
        "basel" => Box::new(|n| q(1, (n as i64 + 1) * (n as i64 + 1))),
        "telescoping" => Box::new(|n| q(1, (n as i64 + 1) * (n as i64 + 2))),
        "geometric" => {
            let r = r.expect("ratio").clone();
            Box::new(move |n| num_traits::pow(r.clone(), n as usize))
        }
        other => panic!("no oracle for {other}"),
    }
}

pub const CATALOG_NAMES: &[&str] = &[
    "grandi",
    "ones",
    "naturals",
    "alt_harmonic",
    "geometric",
    "harmonic",
    "zeros",
    "basel",
    "telescoping",
];

/// Evaluates the raw representation directly: prefix, then tail
/// `(n - len) mod period` as a polynomial in the global index.
pub fn brute_terms(c: &CanonicalSeq, len: usize) -> Vec<BigRational> {
    let prefix = c.prefix();
    let tails = c.tails();
    (0..len)
        .map(|n| {
            if n < prefix.len() {
                return prefix[n].clone();
            }
            let poly = &tails[(n - prefix.len()) % tails.len()];
            let x = qi(n as i64);
            let mut power = qi(1);
            let mut acc = qi(0);
            for coeff in poly.coeffs() {
                acc += coeff * &power;
                power *= &x;
            }
            acc
        })
        .collect()
}

pub fn list_dilute(list: &[BigRational], m: &DilutionMask) -> Vec<BigRational> {
    let mut out = Vec::new();
    for block in list.chunks_exact(m.every) {
        for (i, a) in block.iter().enumerate() {
            let zeros = if i == m.residue { m.zeros } else { 0 };
            if m.placement == Placement::Before {
                out.extend(std::iter::repeat(qi(0)).take(zeros));
            }
            out.push(a.clone());
            if m.placement == Placement::After {
                out.extend(std::iter::repeat(qi(0)).take(zeros));
            }
        }
    }
    out
}

pub fn list_swap(list: &[BigRational], offset: usize, every: usize) -> Vec<BigRational> {
    let mut out = list.to_vec();
    let mut j = offset;
    while j + 1 < out.len() {
        out.swap(j, j + 1);
        j += 2 * every;
    }
    if j + 1 == out.len() {
        // its partner lies past the end of the list
        out.pop();
    }
    out
}

pub fn list_associate(list: &[BigRational], offset: usize) -> Vec<BigRational> {
    let mut out: Vec<BigRational> = list[..offset.min(list.len())].to_vec();
    if list.len() > offset {
        out.extend(list[offset..].chunks_exact(2).map(|p| &p[0] + &p[1]));
    }
    out
}

/// Pointwise oracle for one sequence operation. `other` supplies the
/// second operand's terms for `Add`.
pub fn list_apply(op: &SeqOp, list: &[BigRational]) -> Vec<BigRational> {
    match op {
        SeqOp::Scale(k) => list.iter().map(|a| a * k).collect(),
        SeqOp::Add(other) => {
            let b = brute_terms(other, list.len());
            list.iter().zip(b).map(|(a, b)| a + b).collect()
        }
        SeqOp::Shift => list[1..].to_vec(),
        SeqOp::Prepend(v) => std::iter::once(v.clone()).chain(list.iter().cloned()).collect(),
        SeqOp::Dilute(m) => list_dilute(list, m),
        SeqOp::SwapPairs { offset, every } => list_swap(list, *offset, *every),
        SeqOp::AssociatePairs { offset } => list_associate(list, *offset),
    }
}

pub fn seq_op_to_spec(op: &SeqOp) -> TransformSpec {
    match op {
        SeqOp::Scale(k) => TransformSpec::Scale(k.clone()),
        SeqOp::Add(c) => {
            let c = c.clone();
            TransformSpec::Add(Series::from_exact(c.to_string(), move |n| c.term(n)))
        }
        SeqOp::Shift => TransformSpec::Shift,
        SeqOp::Prepend(v) => TransformSpec::Prepend(v.clone()),
        SeqOp::Dilute(m) => TransformSpec::Dilute(*m),
        SeqOp::SwapPairs { offset, every } => TransformSpec::SwapPairs {
            offset: *offset,
            every: *every,
        },
        SeqOp::AssociatePairs { offset } => TransformSpec::AssociatePairs { offset: *offset },
    }
}

pub fn small_rational() -> impl Strategy<Value = BigRational> {
    (-4i64..=4, 1i64..=3).prop_map(|(p, d)| q(p, d))
}

pub fn poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec(small_rational(), 1..=3).prop_map(Poly::new)
}

/// An unnormalized representation.
pub fn raw_seq() -> impl Strategy<Value = CanonicalSeq> {
    (
        prop::collection::vec(small_rational(), 0..=4),
        prop::collection::vec(poly(), 1..=4),
    )
        .prop_map(|(p, t)| CanonicalSeq::raw(p, t))
}

pub fn mask() -> impl Strategy<Value = DilutionMask> {
    (1usize..=3, 0usize..3, 1usize..=2, any::<bool>()).prop_filter_map(
        "residue below period",
        |(every, residue, zeros, before)| {
            let m = DilutionMask {
                every,
                residue,
                zeros,
                placement: if before { Placement::Before } else { Placement::After },
            };
            m.is_valid().then_some(m)
        },
    )
}

pub fn seq_op() -> impl Strategy<Value = SeqOp> {
    prop_oneof![
        small_rational().prop_map(SeqOp::Scale),
        raw_seq().prop_map(|c| SeqOp::Add(c.normalize())),
        Just(SeqOp::Shift),
        small_rational().prop_map(SeqOp::Prepend),
        mask().prop_map(SeqOp::Dilute),
        (0usize..=3, 1usize..=3).prop_map(|(offset, every)| SeqOp::SwapPairs { offset, every }),
        (0usize..=1).prop_map(|offset| SeqOp::AssociatePairs { offset }),
    ]
}

pub const ORACLE_INDICES: usize = 200;
/// Long enough that three halvings still leave the checked window.
const LIST_LEN: usize = 8 * ORACLE_INDICES + 64;

fn config(cases: u32) -> Config {
    Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    }
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    TestRunner::new(config(cases))
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

/// Chains of one to three operations on random sequences agree with the
/// list oracle on indices 0..200.
pub fn check_canonical_oracle(cases: u32) -> Result<(), String> {
    run(
        cases,
        (raw_seq(), prop::collection::vec(seq_op(), 1..=3)),
        |(raw, ops)| {
            let mut list = brute_terms(&raw, LIST_LEN);
            let mut c = raw.normalize();
            for op in &ops {
                list = list_apply(op, &list);
                c = c.apply(op);
            }
            let n = ORACLE_INDICES.min(list.len());
            prop_assert_eq!(c.terms(n), list[..n].to_vec(), "ops {:?}", ops);
            Ok(())
        },
    )
}

pub fn check_normalize_idempotent(cases: u32) -> Result<(), String> {
    run(cases, raw_seq(), |raw| {
        let once = raw.clone().normalize();
        prop_assert_eq!(once.clone().normalize(), once.clone());
        prop_assert_eq!(once.terms(ORACLE_INDICES), brute_terms(&raw, ORACLE_INDICES));
        Ok(())
    })
}

/// Two different representations of one sequence: the tails unrolled to a
/// doubled period, with one more term moved into the prefix.
fn alternate_representation(c: &CanonicalSeq) -> CanonicalSeq {
    let mut prefix = c.prefix().to_vec();
    prefix.push(c.term(prefix.len() as u64));
    let mut tails: Vec<Poly> = c.tails().iter().chain(c.tails()).cloned().collect();
    tails.rotate_left(1);
    CanonicalSeq::raw(prefix, tails)
}

pub fn check_congruence(cases: u32) -> Result<(), String> {
    run(cases, (raw_seq(), seq_op()), |(raw, op)| {
        let a = raw.clone().normalize();
        let alt = alternate_representation(&raw);
        prop_assert_eq!(brute_terms(&alt, 100), brute_terms(&raw, 100));
        let b = alt.normalize();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.apply(&op), b.apply(&op));
        Ok(())
    })
}

pub fn check_prepend_shift_round_trip(cases: u32) -> Result<(), String> {
    run(cases, (raw_seq(), small_rational()), |(raw, v)| {
        let c = raw.normalize();
        prop_assert_eq!(c.shift().prepend(c.term(0)), c.clone());
        prop_assert_eq!(c.prepend(v).shift(), c);
        Ok(())
    })
}

/// Transforms applied to catalog series agree with list construction on
/// 0..500 and, where the series has a canonical form, with the canonical
/// operation as well.
pub fn check_transform_cross_oracle(cases: u32) -> Result<(), String> {
    const N: usize = 500;
    let strategy = (
        0..CATALOG_NAMES.len(),
        small_rational(),
        prop::collection::vec(seq_op(), 1..=2),
    );
    run(cases, strategy, |(idx, r, ops)| {
        let name = CATALOG_NAMES[idx];
        let params: Vec<BigRational> = if name == "geometric" { vec![r.clone()] } else { vec![] };
        let oracle = catalog_oracle(name, params.first());
        let mut list: Vec<BigRational> = (0..(4 * N + 16) as u64).map(oracle).collect();
        let mut series = catalog_get(name, &params).expect("catalog");
        let mut canonical = match name {
            "grandi" => Some(CanonicalSeq::grandi()),
            "ones" => Some(CanonicalSeq::ones()),
            "zeros" => Some(CanonicalSeq::zeros()),
            "naturals" => Some(CanonicalSeq::naturals()),
            _ => None,
        };
        for op in &ops {
            list = list_apply(op, &list);
            series = apply_transform(&seq_op_to_spec(op), &series).expect("valid transform");
            canonical = canonical.map(|c| c.apply(op));
        }
        let n = N.min(list.len());
        for (k, expected) in list[..n].iter().enumerate() {
            prop_assert_eq!(&series.term(k as u64), expected, "{} {:?} at {}", name, ops, k);
            if let Some(c) = &canonical {
                prop_assert_eq!(&c.term(k as u64), expected);
            }
        }
        Ok(())
    })
}

fn ws() -> impl Strategy<Value = String> {
    prop_oneof![Just(""), Just(""), Just(" "), Just("\n  "), Just("\t")].prop_map(String::from)
}

fn rational_src() -> impl Strategy<Value = String> {
    (-9i64..=9, 1i64..=4).prop_map(|(p, d)| if d == 1 { p.to_string() } else { format!("{p}/{d}") })
}

fn series_src() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(vec![
            "grandi",
            "ones",
            "naturals",
            "alt_harmonic",
            "harmonic",
            "zeros",
            "basel",
            "telescoping",
        ])
        .prop_map(String::from),
        (1i64..=9, 2i64..=9).prop_map(|(p, d)| format!("geometric({p}/{d})")),
    ]
}

fn mask_src() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(vec!["before_each", "after_each", "after_positives", "after_even"])
            .prop_map(String::from),
        mask().prop_map(|m| format!("\"{}\"", m.label())),
    ]
}

/// Source text generated from the grammar, with random whitespace.
pub fn expr_src() -> impl Strategy<Value = String> {
    let leaf = series_src();
    let transformed = leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), ws()).prop_map(|(x, w)| format!("shift({w}{x}{w})")),
            (inner.clone(), rational_src(), ws()).prop_map(|(x, v, w)| format!("prepend({x},{w}{v})")),
            (inner.clone(), rational_src()).prop_map(|(x, v)| format!("scale({x}, {v})")),
            (inner.clone(), 0usize..4, 1usize..4, 0usize..3).prop_map(|(x, o, e, form)| match form {
                0 => format!("swap_pairs({x})"),
                1 => format!("swap_pairs({x}, {o})"),
                _ => format!("swap_pairs({x}, {o}, {e})"),
            }),
            (inner.clone(), prop::option::of(0usize..2)).prop_map(|(x, o)| match o {
                Some(o) => format!("associate_pairs({x}, {o})"),
                None => format!("associate_pairs({x})"),
            }),
            (inner.clone(), mask_src(), ws()).prop_map(|(x, m, w)| format!("dilute({x},{w}{m})")),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| format!("add({x}, {y})")),
            (inner, -40i64..40).prop_map(|(x, k)| format!("rearrange_to({x}, {})", k as f64 / 8.0)),
        ]
    });
    (
        transformed,
        prop::option::of(prop::sample::select(vec!["classical", "cesaro", "abel", "zeta"])),
        ws(),
    )
        .prop_map(|(body, method, w)| match method {
            Some(m) => format!("{w}{m}({body}){w}"),
            None => body,
        })
}

pub fn check_dsl_round_trip(cases: u32) -> Result<(), String> {
    run(cases, expr_src(), |src| {
        let ast = parse_expr(&src).map_err(|e| TestCaseError::fail(format!("{src}: {e}")))?;
        prop_assert_eq!(ast.span.end, src.trim_end().len(), "span must cover the source");
        let rendered = ast.render();
        let again = parse_expr(&rendered).map_err(|e| TestCaseError::fail(format!("{rendered}: {e}")))?;
        prop_assert!(ast.same_shape(&again), "{} -> {}", src, rendered);
        prop_assert_eq!(again.render(), rendered);
        Ok(())
    })
}

/// Sum of the first `n` oracle terms of the alternating harmonic series.
pub fn alt_harmonic_f64(j: u64) -> f64 {
    let t = 1.0 / (j as f64 + 1.0);
    if j % 2 == 0 {
        t
    } else {
        -t
    }
}

/// Replays the greedy rule independently: the next unused positive term
/// while the running sum is at most `target`, else the next unused negative.
pub fn greedy_replay(target: f64, steps: usize) -> (Vec<u64>, Vec<f64>) {
    let (mut next_pos, mut next_neg) = (0u64, 1u64);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut sigma = Vec::with_capacity(steps);
    let mut sums = Vec::with_capacity(steps);
    for _ in 0..steps {
        let j = if sum + comp <= target {
            let j = next_pos;
            next_pos += 2;
            j
        } else {
            let j = next_neg;
            next_neg += 2;
            j
        };
        let t = alt_harmonic_f64(j);
        let s = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - s) + t } else { (t - s) + sum };
        sum = s;
        sigma.push(j);
        sums.push(sum + comp);
    }
    (sigma, sums)
}

pub fn is_zero_or_one(x: &BigRational) -> bool {
    x.is_zero() || x.is_one()
}

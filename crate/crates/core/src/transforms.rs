//! Series-level transformations: linear combinations, stability shifts,
//! associativity / commutativity / dilution rewrites, and the greedy
//! Riemann rearrangement.

use std::fmt;
use std::sync::{Arc, Mutex};

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::canonical::{swap_source, DilutionMask};
use crate::series::{rational_to_f64, CompensatedSum, Series, DIVERGENCE_THRESHOLD};

/// Terms below this magnitude count as "tending to zero" in the
/// conditionality report.
pub const TERM_DECAY_TOL: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("bad transform spec: {0}")]
    BadSpec(String),
    #[error("`{series}` has no {sign} terms within {budget} terms")]
    ExhaustedBudget {
        series: String,
        sign: &'static str,
        budget: u64,
    },
    #[error("`{0}` is not conditionally convergent (within budget)")]
    NotConditionallyConvergent(String),
}

#[derive(Debug, Clone)]
pub enum TransformSpec {
    Dilute(DilutionMask),
    SwapPairs { offset: usize, every: usize },
    /// `offset` is 0 (pair from `a_0`) or 1 (keep `a_0`, pair from `a_1`).
    AssociatePairs { offset: usize },
    Shift,
    Prepend(BigRational),
    Scale(BigRational),
    Add(Series),
    RearrangeTo { target: f64, budget: u64 },
}

impl TransformSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            TransformSpec::Dilute(_) => "dilute",
            TransformSpec::SwapPairs { .. } => "swap_pairs",
            TransformSpec::AssociatePairs { .. } => "associate_pairs",
            TransformSpec::Shift => "shift",
            TransformSpec::Prepend(_) => "prepend",
            TransformSpec::Scale(_) => "scale",
            TransformSpec::Add(_) => "add",
            TransformSpec::RearrangeTo { .. } => "rearrange_to",
        }
    }
}

pub fn apply_transform(spec: &TransformSpec, s: &Series) -> Result<Series, TransformError> {
    let exact = s.exact_fn();
    let approx = s.approx_fn();
    let hint = s.growth_hint();
    let out = match spec {
        TransformSpec::Dilute(mask) => {
            if !mask.is_valid() {
                return Err(TransformError::BadSpec(format!("dilution mask {mask:?}")));
            }
            let m = *mask;
            Series::new(
                format!("dilute({}, {})", s.name(), mask.label()),
                move |n| m.source_index(n).map_or_else(BigRational::zero, |j| exact(j)),
                move |n| m.source_index(n).map_or(0.0, |j| approx(j)),
            )
            .with_growth_hint(hint)
        }
        TransformSpec::SwapPairs { offset, every } => {
            if *every == 0 {
                return Err(TransformError::BadSpec("swap_pairs stride must be >= 1".into()));
            }
            let (o, e) = (*offset, *every);
            let name = if o == 0 && e == 1 {
                format!("swap_pairs({})", s.name())
            } else {
                format!("swap_pairs({}, {o}, {e})", s.name())
            };
            Series::new(
                name,
                move |n| exact(swap_source(n, o, e)),
                move |n| approx(swap_source(n, o, e)),
            )
            .with_growth_hint(hint)
        }
        TransformSpec::AssociatePairs { offset } => {
            if *offset > 1 {
                return Err(TransformError::BadSpec(format!(
                    "associate_pairs offset must be 0 or 1, got {offset}"
                )));
            }
            let o = *offset as u64;
            Series::new(
                format!("associate_pairs({}, {o})", s.name()),
                move |n| {
                    if n < o {
                        exact(n)
                    } else {
                        let j = 2 * n - o;
                        exact(j) + exact(j + 1)
                    }
                },
                move |n| {
                    if n < o {
                        approx(n)
                    } else {
                        let j = 2 * n - o;
                        approx(j) + approx(j + 1)
                    }
                },
            )
            .with_growth_hint(hint)
        }
        TransformSpec::Shift => Series::new(
            format!("shift({})", s.name()),
            move |n| exact(n + 1),
            move |n| approx(n + 1),
        )
        .with_growth_hint(hint),
        TransformSpec::Prepend(q) => {
            let q = q.clone();
            let qf = rational_to_f64(&q);
            Series::new(
                format!("prepend({}, {q})", s.name()),
                move |n| if n == 0 { q.clone() } else { exact(n - 1) },
                move |n| if n == 0 { qf } else { approx(n - 1) },
            )
            .with_growth_hint(hint)
        }
        TransformSpec::Scale(k) => {
            let k = k.clone();
            let kf = rational_to_f64(&k);
            Series::new(
                format!("scale({}, {k})", s.name()),
                move |n| exact(n) * &k,
                move |n| approx(n) * kf,
            )
            .with_growth_hint(hint)
        }
        TransformSpec::Add(other) => {
            let (e2, a2) = (other.exact_fn(), other.approx_fn());
            let hint = match (hint, other.growth_hint()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
            Series::new(
                format!("add({}, {})", s.name(), other.name()),
                move |n| exact(n) + e2(n),
                move |n| approx(n) + a2(n),
            )
            .with_growth_hint(hint)
        }
        TransformSpec::RearrangeTo { target, budget } => {
            if !target.is_finite() {
                return Err(TransformError::BadSpec(
                    "rearrangement target must be finite".into(),
                ));
            }
            return rearrange_to(s, *target, *budget).map(|(series, _)| series);
        }
    };
    Ok(out)
}

/// Heuristic conditional-convergence report from a sign decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalityReport {
    pub conditional: bool,
    pub degenerate: bool,
    pub terms_to_zero: bool,
    pub positive_sum: f64,
    pub negative_sum: f64,
    pub positive_count: u64,
    pub negative_count: u64,
    pub budget: u64,
}

impl fmt::Display for ConditionalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "conditional={} degenerate={} terms->0={} positive part {:.6} ({} terms), negative part {:.6} ({} terms), budget {}",
            self.conditional,
            self.degenerate,
            self.terms_to_zero,
            self.positive_sum,
            self.positive_count,
            self.negative_sum,
            self.negative_count,
            self.budget
        )
    }
}

/// Splits a series into its positive and negative subsequences (zero terms
/// belong to neither).
///
/// The conditionality verdict holds when the final terms are below
/// [`TERM_DECAY_TOL`] and both sign-restricted partial sums keep growing in
/// magnitude without decay over the budget, or cross the divergence
/// threshold.
pub fn decompose_signs(
    s: &Series,
    budget: u64,
) -> Result<(Series, Series, ConditionalityReport), TransformError> {
    let mut pos = CompensatedSum::default();
    let mut neg = CompensatedSum::default();
    let (mut np, mut nn) = (0u64, 0u64);
    let mut pos_samples = Vec::new();
    let mut neg_samples = Vec::new();
    let mut next_sample = 16u64;
    let mut tail_max: f64 = 0.0;
    for n in 0..budget {
        let t = s.term_f64(n);
        if t > 0.0 {
            pos.add(t);
            np += 1;
        } else if t < 0.0 {
            neg.add(t);
            nn += 1;
        }
        if n + 1 == next_sample {
            pos_samples.push(pos.value());
            neg_samples.push(neg.value());
            next_sample *= 2;
        }
        if n >= budget - budget / 8 {
            tail_max = tail_max.max(t.abs());
        }
    }

    let terms_to_zero = tail_max < TERM_DECAY_TOL;
    let unbounded = |samples: &[f64], total: f64| {
        total.abs() >= DIVERGENCE_THRESHOLD
            || crate::series::samples_grow_without_decay(samples).is_some()
    };
    let degenerate = np == 0 || nn == 0;
    let report = ConditionalityReport {
        conditional: !degenerate
            && terms_to_zero
            && unbounded(&pos_samples, pos.value())
            && unbounded(&neg_samples, neg.value()),
        degenerate,
        terms_to_zero,
        positive_sum: pos.value(),
        negative_sum: neg.value(),
        positive_count: np,
        negative_count: nn,
        budget,
    };
    if degenerate {
        return Err(TransformError::ExhaustedBudget {
            series: s.name().to_string(),
            sign: if np == 0 { "positive" } else { "negative" },
            budget,
        });
    }
    Ok((
        sign_subsequence(s, true, budget),
        sign_subsequence(s, false, budget),
        report,
    ))
}

/// Degenerate decompositions still produce a report; this variant returns it
/// alongside the error instead of discarding it.
pub fn conditionality(s: &Series, budget: u64) -> ConditionalityReport {
    match decompose_signs(s, budget) {
        Ok((_, _, report)) => report,
        Err(_) => ConditionalityReport {
            conditional: false,
            degenerate: true,
            terms_to_zero: false,
            positive_sum: 0.0,
            negative_sum: 0.0,
            positive_count: 0,
            negative_count: 0,
            budget,
        },
    }
}

fn sign_subsequence(s: &Series, positive: bool, scan_cap: u64) -> Series {
    let cursor = Arc::new(Mutex::new(SignCursor::default()));
    let src = s.clone();
    let src2 = s.clone();
    let c2 = cursor.clone();
    let label = if positive { "positives" } else { "negatives" };
    Series::new(
        format!("{label}({})", s.name()),
        move |n| match cursor.lock().unwrap().index(&src, positive, n, scan_cap) {
            Some(j) => src.term(j),
            None => BigRational::zero(),
        },
        move |n| match c2.lock().unwrap().index(&src2, positive, n, scan_cap) {
            Some(j) => src2.term_f64(j),
            None => 0.0,
        },
    )
    .with_growth_hint(s.growth_hint())
}

/// Memoized positions of the terms of one sign.
#[derive(Default)]
struct SignCursor {
    found: Vec<u64>,
    scanned: u64,
}

impl SignCursor {
    fn index(&mut self, s: &Series, positive: bool, n: u64, scan_cap: u64) -> Option<u64> {
        while self.found.len() as u64 <= n {
            if self.scanned >= scan_cap.saturating_mul(4) {
                return None;
            }
            let t = s.term_f64(self.scanned);
            if (positive && t > 0.0) || (!positive && t < 0.0) {
                self.found.push(self.scanned);
            }
            self.scanned += 1;
        }
        Some(self.found[n as usize])
    }
}

/// Greedy rearrangement state: positive terms while the running sum is at
/// most the target, negative terms otherwise.
struct Greedy {
    source: Series,
    target: f64,
    scan_cap: u64,
    next_pos: u64,
    next_neg: u64,
    sum: CompensatedSum,
    sigma: Vec<u64>,
}

impl Greedy {
    fn next_of_sign(&self, from: u64, positive: bool) -> Option<u64> {
        let mut j = from;
        while j < from.saturating_add(self.scan_cap) {
            let t = self.source.term_f64(j);
            if (positive && t > 0.0) || (!positive && t < 0.0) {
                return Some(j);
            }
            j += 1;
        }
        None
    }

    fn extend_to(&mut self, len: usize) -> bool {
        while self.sigma.len() < len {
            let positive = self.sum.value() <= self.target;
            let from = if positive { self.next_pos } else { self.next_neg };
            let Some(j) = self.next_of_sign(from, positive) else {
                return false;
            };
            if positive {
                self.next_pos = j + 1;
            } else {
                self.next_neg = j + 1;
            }
            self.sum.add(self.source.term_f64(j));
            self.sigma.push(j);
        }
        true
    }

    fn sigma(&mut self, n: u64) -> Option<u64> {
        if self.extend_to(n as usize + 1) {
            Some(self.sigma[n as usize])
        } else {
            None
        }
    }
}

/// The index map `sigma` of a rearranged series. Shares state with the
/// series it came with.
#[derive(Clone)]
pub struct IndexStream {
    state: Arc<Mutex<Greedy>>,
}

impl IndexStream {
    /// `sigma(n)`, or `None` if a sign class ran dry within the scan cap.
    pub fn get(&self, n: u64) -> Option<u64> {
        self.state.lock().unwrap().sigma(n)
    }

    /// `sigma(0..count)`, shorter if a sign class ran dry.
    pub fn prefix(&self, count: usize) -> Vec<u64> {
        let mut g = self.state.lock().unwrap();
        g.extend_to(count);
        g.sigma[..count.min(g.sigma.len())].to_vec()
    }
}

impl Iterator for IndexStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let mut g = self.state.lock().unwrap();
        let n = g.sigma.len();
        if g.extend_to(n + 1) {
            Some(g.sigma[n])
        } else {
            None
        }
    }
}

/// Riemann rearrangement of a conditionally convergent series toward `target`.
///
/// Fails with `NotConditionallyConvergent` unless [`decompose_signs`] over
/// `budget` terms reports the series conditional.
pub fn rearrange_to(
    s: &Series,
    target: f64,
    budget: u64,
) -> Result<(Series, IndexStream), TransformError> {
    let report = conditionality(s, budget);
    if !report.conditional {
        return Err(TransformError::NotConditionallyConvergent(s.name().to_string()));
    }
    let state = Arc::new(Mutex::new(Greedy {
        source: s.clone(),
        target,
        scan_cap: budget.max(1 << 20),
        next_pos: 0,
        next_neg: 0,
        sum: CompensatedSum::default(),
        sigma: Vec::new(),
    }));
    let (st1, st2) = (state.clone(), state.clone());
    let (src1, src2) = (s.clone(), s.clone());
    let series = Series::new(
        format!("rearrange_to({}, {target})", s.name()),
        move |n| match st1.lock().unwrap().sigma(n) {
            Some(j) => src1.term(j),
            None => BigRational::zero(),
        },
        move |n| match st2.lock().unwrap().sigma(n) {
            Some(j) => src2.term_f64(j),
            None => 0.0,
        },
    )
    .with_growth_hint(s.growth_hint());
    Ok((series, IndexStream { state }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{catalog_get, int, ratio};

    fn get(name: &str) -> Series {
        catalog_get(name, &[]).unwrap()
    }

    fn first(s: &Series, k: u64) -> Vec<BigRational> {
        (0..k).map(|n| s.term(n)).collect()
    }

    #[test]
    fn associate_grandi() {
        let g = get("grandi");
        let a0 = apply_transform(&TransformSpec::AssociatePairs { offset: 0 }, &g).unwrap();
        assert!(first(&a0, 50).iter().all(Zero::is_zero));
        let a1 = apply_transform(&TransformSpec::AssociatePairs { offset: 1 }, &g).unwrap();
        let mut expected = vec![int(0); 50];
        expected[0] = int(1);
        assert_eq!(first(&a1, 50), expected);
        assert!(matches!(
            apply_transform(&TransformSpec::AssociatePairs { offset: 2 }, &g),
            Err(TransformError::BadSpec(_))
        ));
    }

    #[test]
    fn swap_at_alternate_odd_pairs() {
        let g = get("grandi");
        let s = apply_transform(&TransformSpec::SwapPairs { offset: 1, every: 2 }, &g).unwrap();
        let expected: Vec<_> = [1, 1, -1, -1, 1, 1, -1, -1].into_iter().map(int).collect();
        assert_eq!(first(&s, 8), expected);
    }

    #[test]
    fn halved_dilution_pipeline_terms() {
        let a = get("alt_harmonic");
        let diluted = apply_transform(&TransformSpec::Dilute(DilutionMask::BEFORE_EACH), &a).unwrap();
        let halved = apply_transform(&TransformSpec::Scale(ratio(1, 2)), &diluted).unwrap();
        let combined = apply_transform(&TransformSpec::Add(halved), &a).unwrap();
        // 1 + 0, -1/2 + 1/2, 1/3 + 0, -1/4 - 1/4, ...
        assert_eq!(
            first(&combined, 4),
            vec![int(1), int(0), ratio(1, 3), ratio(-1, 2)]
        );
    }

    #[test]
    fn decompose_alt_harmonic() {
        let (pos, neg, report) = decompose_signs(&get("alt_harmonic"), 100_000).unwrap();
        assert_eq!(first(&pos, 3), vec![int(1), ratio(1, 3), ratio(1, 5)]);
        assert_eq!(first(&neg, 2), vec![ratio(-1, 2), ratio(-1, 4)]);
        assert!(report.conditional, "{report}");
    }

    #[test]
    fn decompose_degenerate_and_non_null() {
        let geo = catalog_get("geometric", &[ratio(1, 2)]).unwrap();
        assert!(matches!(
            decompose_signs(&geo, 10_000),
            Err(TransformError::ExhaustedBudget { sign: "negative", .. })
        ));
        assert!(!conditionality(&geo, 10_000).conditional);
        let (_, _, report) = decompose_signs(&get("grandi"), 10_000).unwrap();
        assert!(!report.terms_to_zero);
        assert!(!report.conditional);
    }

    #[test]
    fn rearrange_requires_conditional() {
        assert!(matches!(
            rearrange_to(&get("grandi"), 0.0, 10_000),
            Err(TransformError::NotConditionallyConvergent(_))
        ));
    }

    #[test]
    fn sigma_is_injective() {
        let (_, sigma) = rearrange_to(&get("alt_harmonic"), 0.3, 10_000).unwrap();
        let idx = sigma.prefix(100_000);
        assert_eq!(idx.len(), 100_000);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), idx.len());
    }

    #[test]
    fn rearranged_terms_follow_sigma() {
        let a = get("alt_harmonic");
        let (r, sigma) = rearrange_to(&a, 1.0, 10_000).unwrap();
        for n in 0..200 {
            assert_eq!(r.term(n), a.term(sigma.get(n).unwrap()));
        }
    }
}

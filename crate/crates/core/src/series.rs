//! Lazy exact-term series, the named catalog, partial sums and the
//! classical limit classifier.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

/// Number of partial sums kept as exact rationals unless configured otherwise.
pub const DEFAULT_EXACT_PREFIX: usize = 64;
/// Trailing window used by the oscillation test.
pub const DEFAULT_WINDOW: usize = 1024;
/// Magnitude past which a monotone sequence is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
/// Minimum ratio between consecutive dyadic increments for "non-decaying growth".
pub const GROWTH_RATIO: f64 = 0.98;

pub type ExactTerm = Arc<dyn Fn(u64) -> BigRational + Send + Sync>;
pub type ApproxTerm = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("unknown series `{0}`")]
    UnknownSeries(String),
    #[error("series `{name}` takes {expected} parameter(s), got {got}")]
    BadArity {
        name: String,
        expected: usize,
        got: usize,
    },
}

/// Identity of an untransformed catalog series. Used as a registry key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CatalogId {
    pub name: String,
    pub params: Vec<BigRational>,
}

impl fmt::Display for CatalogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.params.is_empty() {
            return f.write_str(&self.name);
        }
        let params: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
        write!(f, "{}({})", self.name, params.join(", "))
    }
}

/// A series given by its term rule `n -> a_n`, indexed from zero.
///
/// Every series carries two evaluators of the same rule: an exact rational
/// one and a fast `f64` one. Long partial sums use the latter.
#[derive(Clone)]
pub struct Series {
    name: String,
    identity: Option<CatalogId>,
    exact: ExactTerm,
    approx: ApproxTerm,
    growth_hint: Option<u32>,
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Series")
            .field("name", &self.name)
            .field("identity", &self.identity)
            .field("growth_hint", &self.growth_hint)
            .finish()
    }
}

impl Series {
    pub fn new(
        name: impl Into<String>,
        exact: impl Fn(u64) -> BigRational + Send + Sync + 'static,
        approx: impl Fn(u64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Series {
            name: name.into(),
            identity: None,
            exact: Arc::new(exact),
            approx: Arc::new(approx),
            growth_hint: None,
        }
    }

    /// Builds a series whose float evaluator is the rounded exact term.
    pub fn from_exact(
        name: impl Into<String>,
        exact: impl Fn(u64) -> BigRational + Send + Sync + 'static,
    ) -> Self {
        let exact: ExactTerm = Arc::new(exact);
        let e = exact.clone();
        Series {
            name: name.into(),
            identity: None,
            exact,
            approx: Arc::new(move |n| rational_to_f64(&e(n))),
            growth_hint: None,
        }
    }

    pub fn with_growth_hint(mut self, degree: Option<u32>) -> Self {
        self.growth_hint = degree;
        self
    }

    pub(crate) fn with_identity(mut self, id: CatalogId) -> Self {
        self.identity = Some(id);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn identity(&self) -> Option<&CatalogId> {
        self.identity.as_ref()
    }

    pub fn growth_hint(&self) -> Option<u32> {
        self.growth_hint
    }

    pub fn term(&self, n: u64) -> BigRational {
        (self.exact)(n)
    }

    pub fn term_f64(&self, n: u64) -> f64 {
        (self.approx)(n)
    }

    pub(crate) fn exact_fn(&self) -> ExactTerm {
        self.exact.clone()
    }

    pub(crate) fn approx_fn(&self) -> ApproxTerm {
        self.approx.clone()
    }

    /// Checks `|a_n| <= C (n+1)^p` at dyadic sample points up to `budget`,
    /// with `C` taken from the first 64 terms.
    pub fn validate_growth(&self, degree: u32, budget: u64) -> bool {
        let c = self.growth_constant(degree);
        let mut n = 1u64;
        while n <= budget {
            for m in [n - 1, n, n + n / 2] {
                let bound = c * ((m + 1) as f64).powi(degree as i32);
                if self.term_f64(m).abs() > bound * (1.0 + 1e-12) {
                    return false;
                }
            }
            n *= 2;
        }
        true
    }

    /// `max_{n<64} |a_n| / (n+1)^p`.
    pub fn growth_constant(&self, degree: u32) -> f64 {
        (0..64u64)
            .map(|n| self.term_f64(n).abs() / ((n + 1) as f64).powi(degree as i32))
            .fold(0.0, f64::max)
    }

    /// The declared growth degree if it validates, otherwise the smallest
    /// degree `<= 3` that does.
    pub fn effective_growth(&self, budget: u64) -> Option<u32> {
        if let Some(p) = self.growth_hint {
            if self.validate_growth(p, budget) {
                return Some(p);
            }
        }
        (0..=3).find(|&p| self.validate_growth(p, budget))
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn alternating(n: u64) -> i64 {
    if n % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Names accepted by [`catalog_get`].
pub const CATALOG: &[&str] = &[
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

/// Looks up a catalog series. `geometric` takes one rational ratio, every
/// other entry takes none.
pub fn catalog_get(name: &str, params: &[BigRational]) -> Result<Series, SeriesError> {
    let expected = match name {
        "geometric" => 1,
        n if CATALOG.contains(&n) => 0,
        other => return Err(SeriesError::UnknownSeries(other.to_string())),
    };
    if params.len() != expected {
        return Err(SeriesError::BadArity {
            name: name.to_string(),
            expected,
            got: params.len(),
        });
    }
    let id = CatalogId {
        name: name.to_string(),
        params: params.to_vec(),
    };
    let series = match name {
        "grandi" => Series::new("grandi", |n| int(alternating(n)), |n| alternating(n) as f64)
            .with_growth_hint(Some(0)),
        "ones" => Series::new("ones", |_| BigRational::one(), |_| 1.0).with_growth_hint(Some(0)),
        "zeros" => {
            Series::new("zeros", |_| BigRational::zero(), |_| 0.0).with_growth_hint(Some(0))
        }
        "naturals" => Series::new(
            "naturals",
            |n| BigRational::from_integer(BigInt::from(n) + 1),
            |n| (n + 1) as f64,
        )
        .with_growth_hint(Some(1)),
        "alt_harmonic" => Series::new(
            "alt_harmonic",
            |n| BigRational::new(BigInt::from(alternating(n)), BigInt::from(n) + 1),
            |n| alternating(n) as f64 / (n + 1) as f64,
        )
        .with_growth_hint(Some(0)),
        "harmonic" => Series::new(
            "harmonic",
            |n| BigRational::new(BigInt::one(), BigInt::from(n) + 1),
            |n| 1.0 / (n + 1) as f64,
        )
        .with_growth_hint(Some(0)),
        "basel" => Series::new(
            "basel",
            |n| {
                let m = BigInt::from(n) + 1;
                BigRational::new(BigInt::one(), &m * &m)
            },
            |n| {
                let m = (n + 1) as f64;
                1.0 / (m * m)
            },
        )
        .with_growth_hint(Some(0)),
        "telescoping" => Series::new(
            "telescoping",
            |n| BigRational::new(BigInt::one(), (BigInt::from(n) + 1) * (BigInt::from(n) + 2)),
            |n| 1.0 / ((n + 1) as f64 * (n + 2) as f64),
        )
        .with_growth_hint(Some(0)),
        "geometric" => {
            let r = params[0].clone();
            let rf = rational_to_f64(&r);
            let hint = if r.abs() <= BigRational::one() {
                Some(0)
            } else {
                None
            };
            Series::new(
                format!("geometric({r})"),
                move |n| pow_rational(&r, n),
                move |n| rf.powf(n as f64),
            )
            .with_growth_hint(hint)
        }
        _ => unreachable!("arity table covers the catalog"),
    };
    Ok(series.with_identity(id))
}

fn pow_rational(r: &BigRational, n: u64) -> BigRational {
    let mut base = r.clone();
    let mut acc = BigRational::one();
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    acc
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    correction: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.correction += (self.sum - t) + x;
        } else {
            self.correction += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.correction
    }
}

/// Lazy stream of partial sums `S_0, S_1, ...`, exact over the first
/// `exact_len` indices.
pub struct PartialSumStream<'a> {
    series: &'a Series,
    next: u64,
    exact_len: usize,
    exact: BigRational,
    approx: CompensatedSum,
}

/// One element of a [`PartialSumStream`].
#[derive(Debug, Clone)]
pub struct PartialSumItem {
    pub n: u64,
    pub term: f64,
    pub sum: f64,
    pub exact: Option<BigRational>,
}

impl<'a> PartialSumStream<'a> {
    pub fn new(series: &'a Series, exact_len: usize) -> Self {
        PartialSumStream {
            series,
            next: 0,
            exact_len,
            exact: BigRational::zero(),
            approx: CompensatedSum::default(),
        }
    }
}

impl Iterator for PartialSumStream<'_> {
    type Item = PartialSumItem;

    fn next(&mut self) -> Option<PartialSumItem> {
        let n = self.next;
        self.next += 1;
        let (term, exact) = if (n as usize) < self.exact_len {
            let t = self.series.term(n);
            self.exact += &t;
            (rational_to_f64(&t), Some(self.exact.clone()))
        } else {
            (self.series.term_f64(n), None)
        };
        self.approx.add(term);
        // inside the exact prefix the float value is the rounded exact sum
        let sum = match &exact {
            Some(e) => rational_to_f64(e),
            None => self.approx.value(),
        };
        Some(PartialSumItem {
            n,
            term,
            sum,
            exact,
        })
    }
}

/// Materialized partial sums `S_0 ..= S_budget`.
#[derive(Debug, Clone)]
pub struct PartialSums {
    source: Series,
    values: Vec<f64>,
    exact_prefix: Vec<BigRational>,
}

impl PartialSums {
    pub fn source(&self) -> &Series {
        &self.source
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exact_prefix(&self) -> &[BigRational] {
        &self.exact_prefix
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn partial_sums(s: &Series, budget: usize) -> PartialSums {
    partial_sums_with_prefix(s, budget, DEFAULT_EXACT_PREFIX)
}

pub fn partial_sums_with_prefix(s: &Series, budget: usize, exact_len: usize) -> PartialSums {
    let budget = budget.max(1);
    let mut values = Vec::with_capacity(budget + 1);
    let mut exact_prefix = Vec::with_capacity(exact_len.min(budget + 1));
    for item in PartialSumStream::new(s, exact_len).take(budget + 1) {
        values.push(item.sum);
        if let Some(e) = item.exact {
            exact_prefix.push(e);
        }
    }
    PartialSums {
        source: s.clone(),
        values,
        exact_prefix,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    Convergent,
    DivergesToPlusInf,
    DivergesToMinusInf,
    Indeterminate,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VerdictKind::Convergent => "Convergent",
            VerdictKind::DivergesToPlusInf => "DivergesToPlusInf",
            VerdictKind::DivergesToMinusInf => "DivergesToMinusInf",
            VerdictKind::Indeterminate => "Indeterminate",
        };
        f.write_str(s)
    }
}

/// Outcome of a limit test. `value` and `error_estimate` are present exactly
/// when the verdict is convergent.
#[derive(Debug, Clone, PartialEq)]
pub struct SumVerdict {
    kind: VerdictKind,
    value: Option<f64>,
    error_estimate: Option<f64>,
    pub terms_used: u64,
}

impl SumVerdict {
    pub fn convergent(value: f64, error_estimate: f64, terms_used: u64) -> Self {
        SumVerdict {
            kind: VerdictKind::Convergent,
            value: Some(value),
            error_estimate: Some(error_estimate),
            terms_used,
        }
    }

    pub fn divergent(positive: bool, terms_used: u64) -> Self {
        SumVerdict {
            kind: if positive {
                VerdictKind::DivergesToPlusInf
            } else {
                VerdictKind::DivergesToMinusInf
            },
            value: None,
            error_estimate: None,
            terms_used,
        }
    }

    pub fn indeterminate(terms_used: u64) -> Self {
        SumVerdict {
            kind: VerdictKind::Indeterminate,
            value: None,
            error_estimate: None,
            terms_used,
        }
    }

    pub fn kind(&self) -> VerdictKind {
        self.kind
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }

    pub fn error_estimate(&self) -> Option<f64> {
        self.error_estimate
    }

    pub fn is_convergent(&self) -> bool {
        self.kind == VerdictKind::Convergent
    }
}

impl fmt::Display for SumVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.value, self.error_estimate) {
            (Some(v), Some(e)) => write!(f, "Convergent({v} ± {e:.3e})"),
            _ => write!(f, "{}", self.kind),
        }
    }
}

/// Parameters of the trailing-window limit test.
#[derive(Debug, Clone, Copy)]
pub struct LimitConfig {
    pub window: usize,
    pub divergence_threshold: f64,
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig {
            window: DEFAULT_WINDOW,
            divergence_threshold: DIVERGENCE_THRESHOLD,
        }
    }
}

/// Classical verdict from the first `budget + 1` partial sums.
pub fn classify_limit(ps: &PartialSums, tol: f64, budget: usize) -> SumVerdict {
    let end = (budget + 1).min(ps.len());
    classify_sequence(&ps.values[..end], tol, &LimitConfig::default())
}

/// Heuristic limit of a real sequence.
///
/// Convergent when the final window oscillates by less than `tol`; the value
/// is the window mean. Divergent to infinity when the final window is
/// monotone and either crosses the threshold or keeps growing by
/// non-decaying dyadic increments. Otherwise indeterminate.
pub fn classify_sequence(values: &[f64], tol: f64, cfg: &LimitConfig) -> SumVerdict {
    let used = values.len() as u64;
    if values.is_empty() {
        return SumVerdict::indeterminate(0);
    }
    let w = cfg.window.min(values.len() / 2).max(1);
    let tail = &values[values.len() - w..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let oscillation = hi - lo;
    if oscillation.is_finite() && oscillation < tol {
        let mean = window_mean(tail);
        let drift = dyadic_tail_estimate(values, w);
        return SumVerdict::convergent(mean, oscillation.max(drift), used);
    }

    let increasing = tail.windows(2).all(|p| p[1] >= p[0]) && tail[w - 1] > tail[0];
    let decreasing = tail.windows(2).all(|p| p[1] <= p[0]) && tail[w - 1] < tail[0];
    if !(increasing || decreasing) {
        return SumVerdict::indeterminate(used);
    }
    let last = values[values.len() - 1];
    if last.abs() >= cfg.divergence_threshold || non_decaying_growth(values) {
        return SumVerdict::divergent(increasing, used);
    }
    SumVerdict::indeterminate(used)
}

fn window_mean(tail: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    for &v in tail {
        acc.add(v);
    }
    acc.value() / tail.len() as f64
}

/// Remaining-tail estimate from window means at `N`, `N/2`, `N/4`, assuming
/// power-law decay of the increments. Twice the estimate is returned.
fn dyadic_tail_estimate(values: &[f64], w: usize) -> f64 {
    let n = values.len();
    if n < 4 * w {
        return 0.0;
    }
    let mean_at = |end: usize| window_mean(&values[end - w..end]);
    let m1 = mean_at(n);
    let m2 = mean_at(n / 2);
    let m3 = mean_at(n / 4);
    let d1 = m1 - m2;
    let d2 = m2 - m3;
    if d1 == 0.0 {
        return 0.0;
    }
    let r = d2 / d1;
    let tail = if r > 1.0 + 1e-9 {
        d1.abs() / (r - 1.0)
    } else {
        d1.abs()
    };
    2.0 * tail
}

/// True when the last three dyadic blocks `v[N] - v[N/2]` have one sign and
/// do not shrink (ratio at least [`GROWTH_RATIO`]).
pub(crate) fn non_decaying_growth(values: &[f64]) -> bool {
    let n = values.len() - 1;
    if n < 16 {
        return false;
    }
    let at = |k: usize| values[n >> k];
    let g1 = at(0) - at(1);
    let g2 = at(1) - at(2);
    let g3 = at(2) - at(3);
    let same_sign = (g1 > 0.0 && g2 > 0.0 && g3 > 0.0) || (g1 < 0.0 && g2 < 0.0 && g3 < 0.0);
    same_sign && g1 / g2 >= GROWTH_RATIO && g2 / g3 >= GROWTH_RATIO
}

/// Increment-ratio growth test on an arbitrary sample sequence (used for
/// Abel samples at geometrically spaced points).
pub(crate) fn samples_grow_without_decay(samples: &[f64]) -> Option<bool> {
    if samples.len() < 4 {
        return None;
    }
    let k = samples.len();
    let d: Vec<f64> = (k - 3..k).map(|i| samples[i] - samples[i - 1]).collect();
    let increasing = d.iter().all(|&x| x > 0.0);
    let decreasing = d.iter().all(|&x| x < 0.0);
    if !(increasing || decreasing) {
        return None;
    }
    if d[1] / d[0] >= GROWTH_RATIO && d[2] / d[1] >= GROWTH_RATIO {
        Some(increasing)
    } else {
        None
    }
}

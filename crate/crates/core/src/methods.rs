//! Summation methods behind one interface: classical limits, Cesàro means,
//! Abel power-series limits and the zeta-value registry.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::series::{
    classify_limit, classify_sequence, partial_sums, ratio, rational_to_f64,
    samples_grow_without_decay, CompensatedSum, LimitConfig, PartialSumStream, Series,
    SumVerdict, DEFAULT_WINDOW, DIVERGENCE_THRESHOLD,
};

/// Hard cap on terms summed for a single Abel sample.
pub const ABEL_TERM_CAP: u64 = 10_000_000;
/// First and last exponent `j` of the Abel sample points `x_j = 1 - 2^-j`.
pub const ABEL_FIRST_J: u32 = 4;
pub const ABEL_LAST_J: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodId {
    Classical,
    Cesaro,
    Abel,
    Zeta,
}

impl MethodId {
    pub const ALL: [MethodId; 4] = [
        MethodId::Classical,
        MethodId::Cesaro,
        MethodId::Abel,
        MethodId::Zeta,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodId::Classical => "classical",
            MethodId::Cesaro => "cesaro",
            MethodId::Abel => "abel",
            MethodId::Zeta => "zeta",
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MethodError {
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("terms of `{0}` exceed every polynomial bound of degree <= 3")]
    GrowthUnbounded(String),
}

impl FromStr for MethodId {
    type Err = MethodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| MethodError::UnknownMethod(s.to_string()))
    }
}

/// A method's verdict on one series.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodAssignment {
    pub method: MethodId,
    pub verdict: SumVerdict,
    pub in_domain: bool,
    pub diagnostics: Vec<String>,
    /// Exact value for registry assignments.
    pub exact_value: Option<BigRational>,
}

impl MethodAssignment {
    fn new(method: MethodId, verdict: SumVerdict, diagnostics: Vec<String>) -> Self {
        MethodAssignment {
            method,
            verdict,
            in_domain: true,
            diagnostics,
            exact_value: None,
        }
    }

    fn out_of_domain(method: MethodId, terms_used: u64, reason: String) -> Self {
        MethodAssignment {
            method,
            verdict: SumVerdict::indeterminate(terms_used),
            in_domain: false,
            diagnostics: vec![reason],
            exact_value: None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.verdict.value()
    }
}

fn heuristic_note(budget: usize) -> String {
    format!(
        "heuristic verdict: trailing window {DEFAULT_WINDOW}, divergence threshold {DIVERGENCE_THRESHOLD:e}, budget {budget}"
    )
}

pub fn assign(method: MethodId, s: &Series, tol: f64, budget: usize) -> MethodAssignment {
    match method {
        MethodId::Classical => classical_sum(s, tol, budget),
        MethodId::Cesaro => cesaro_sum(s, tol, budget),
        MethodId::Abel => abel_sum(s, tol, budget),
        MethodId::Zeta => zeta_assign(s),
    }
}

/// Limit of the partial sums.
pub fn classical_sum(s: &Series, tol: f64, budget: usize) -> MethodAssignment {
    let budget = budget.max(DEFAULT_WINDOW);
    let ps = partial_sums(s, budget);
    let verdict = classify_limit(&ps, tol, budget);
    MethodAssignment::new(MethodId::Classical, verdict, vec![heuristic_note(budget)])
}

/// Cesàro means `Z_n = (1/n) * sum_{k<n} S_k` for `n = 1..=count`.
pub fn cesaro_means(s: &Series, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut acc = CompensatedSum::default();
    for item in PartialSumStream::new(s, 0).take(count) {
        acc.add(item.sum);
        out.push(acc.value() / (item.n + 1) as f64);
    }
    out
}

/// Exact Cesàro means `Z_1 ..= Z_count`.
pub fn cesaro_means_exact(s: &Series, count: usize) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(count);
    let mut acc = BigRational::zero();
    for item in PartialSumStream::new(s, count).take(count) {
        acc += item.exact.expect("inside exact prefix");
        out.push(&acc / BigRational::from_integer((item.n + 1).into()));
    }
    out
}

/// Cesàro sum with a `1/n` Richardson step: `2 Z_{2n} - Z_n` at three
/// successive doublings must agree within `tol`. Otherwise the means
/// themselves go through the trailing-window classifier.
pub fn cesaro_sum(s: &Series, tol: f64, budget: usize) -> MethodAssignment {
    let budget = budget.max(2 * DEFAULT_WINDOW);
    let z = cesaro_means(s, budget);
    let zn = |n: usize| z[n - 1];
    let mut diagnostics = vec![heuristic_note(budget)];

    // largest power of two with 8 * n0 <= budget
    let mut n0 = 1usize;
    while 16 * n0 <= budget {
        n0 *= 2;
    }
    let estimates: Vec<f64> = [n0, 2 * n0, 4 * n0]
        .iter()
        .map(|&n| 2.0 * zn(2 * n) - zn(n))
        .collect();
    let spread = estimates.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - estimates.iter().cloned().fold(f64::INFINITY, f64::min);
    diagnostics.push(format!(
        "richardson 2*Z(2n)-Z(n) at n = {n0}, {}, {}: {:?} (spread {spread:.3e})",
        2 * n0,
        4 * n0,
        estimates
    ));
    if spread.is_finite() && spread < tol {
        let verdict = SumVerdict::convergent(estimates[2], spread, (8 * n0) as u64);
        return MethodAssignment::new(MethodId::Cesaro, verdict, diagnostics);
    }
    diagnostics.push("richardson unstable; classifying the means directly".into());
    let verdict = classify_sequence(&z, tol, &LimitConfig::default());
    MethodAssignment::new(MethodId::Cesaro, verdict, diagnostics)
}

/// One evaluation of the power series at `x = 1 - 2^-j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbelSample {
    pub j: u32,
    pub x: f64,
    pub value: f64,
    pub terms: u64,
}

/// Tail bound for `sum_{m >= n} C (m+1)^p x^m`, or infinity if the ratio
/// test does not apply yet.
fn tail_bound(c: f64, p: u32, x: f64, n: u64) -> f64 {
    let t = c * ((n + 1) as f64).powi(p as i32) * x.powf(n as f64);
    let rho = x * ((n + 2) as f64 / (n + 1) as f64).powi(p as i32);
    if rho < 1.0 {
        t / (1.0 - rho)
    } else {
        f64::INFINITY
    }
}

/// Smallest term count whose tail bound is below `eps`, if within the cap.
fn terms_needed(c: f64, p: u32, x: f64, eps: f64) -> Option<u64> {
    if c == 0.0 {
        return Some(1);
    }
    let mut hi = 16u64;
    while tail_bound(c, p, x, hi) >= eps {
        if hi > ABEL_TERM_CAP {
            return None;
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if tail_bound(c, p, x, mid) < eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi <= ABEL_TERM_CAP).then_some(hi)
}

/// Power-series samples `f(x_j)` for `j = 4, 5, ...` while the truncation
/// fits within [`ABEL_TERM_CAP`], each accurate to `tol / 10`.
pub fn abel_samples(s: &Series, tol: f64, budget: usize) -> Result<Vec<AbelSample>, MethodError> {
    let probe = (budget as u64).clamp(1 << 10, 1 << 20);
    let p = s
        .effective_growth(probe)
        .ok_or_else(|| MethodError::GrowthUnbounded(s.name().to_string()))?;
    let c = s.growth_constant(p);
    let mut samples = Vec::new();
    for j in ABEL_FIRST_J..=ABEL_LAST_J {
        let x = 1.0 - (-(j as f64)).exp2();
        let Some(n_terms) = terms_needed(c, p, x, tol / 10.0) else {
            break;
        };
        let mut acc = CompensatedSum::default();
        let mut power = 1.0;
        for n in 0..n_terms {
            acc.add(s.term_f64(n) * power);
            power *= x;
        }
        samples.push(AbelSample {
            j,
            x,
            value: acc.value(),
            terms: n_terms,
        });
    }
    Ok(samples)
}

/// Least-squares line `f = a + b h` through three points; returns
/// `(a, b, max residual)`.
fn linear_fit(h: &[f64; 3], f: &[f64; 3]) -> (f64, f64, f64) {
    let hm = h.iter().sum::<f64>() / 3.0;
    let fm = f.iter().sum::<f64>() / 3.0;
    let sxy: f64 = h.iter().zip(f).map(|(a, b)| (a - hm) * (b - fm)).sum();
    let sxx: f64 = h.iter().map(|a| (a - hm) * (a - hm)).sum();
    let slope = sxy / sxx;
    let intercept = fm - slope * hm;
    let residual = h
        .iter()
        .zip(f)
        .map(|(a, b)| (b - intercept - slope * a).abs())
        .fold(0.0, f64::max);
    (intercept, slope, residual)
}

/// Value at `h = 0` of the parabola through three points.
fn quadratic_intercept(h: &[f64; 3], f: &[f64; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let others: Vec<usize> = (0..3).filter(|&k| k != i).collect();
            let w: f64 = others
                .iter()
                .map(|&k| (0.0 - h[k]) / (h[i] - h[k]))
                .product();
            w * f[i]
        })
        .sum()
}

fn last_three(samples: &[AbelSample], end: usize) -> ([f64; 3], [f64; 3]) {
    let w = &samples[end - 3..end];
    (
        [1.0 - w[0].x, 1.0 - w[1].x, 1.0 - w[2].x],
        [w[0].value, w[1].value, w[2].value],
    )
}

/// Abel sum: extrapolates `f(x) ~ L + c (1 - x)` from the last three
/// accurate samples.
pub fn abel_sum(s: &Series, tol: f64, budget: usize) -> MethodAssignment {
    let samples = match abel_samples(s, tol, budget) {
        Ok(v) => v,
        Err(e) => {
            return MethodAssignment::out_of_domain(MethodId::Abel, 64, format!("out of domain: {e}"))
        }
    };
    let terms_used = samples.iter().map(|x| x.terms).max().unwrap_or(0);
    let mut diagnostics = vec![format!(
        "abel samples at x = 1 - 2^-j for j = {}..={} (terms per sample up to {terms_used}, cap {ABEL_TERM_CAP})",
        ABEL_FIRST_J,
        samples.last().map_or(ABEL_FIRST_J, |x| x.j)
    )];
    if samples.len() < 4 {
        diagnostics.push("fewer than four accurate samples".into());
        return MethodAssignment::new(
            MethodId::Abel,
            SumVerdict::indeterminate(terms_used),
            diagnostics,
        );
    }
    let k = samples.len();
    let (h, f) = last_three(&samples, k);
    let (intercept, slope, residual) = linear_fit(&h, &f);
    let (h_prev, f_prev) = last_three(&samples, k - 1);
    let (prev_intercept, _, _) = linear_fit(&h_prev, &f_prev);
    diagnostics.push(format!(
        "linear fit f = {intercept} + {slope} (1-x), residual {residual:.3e}"
    ));
    diagnostics.push(format!(
        "quadratic refinement: {}",
        quadratic_intercept(&h, &f)
    ));

    let values: Vec<f64> = samples.iter().map(|x| x.value).collect();
    let monotone_up = values[k - 3..].windows(2).all(|w| w[1] > w[0]);
    let monotone_down = values[k - 3..].windows(2).all(|w| w[1] < w[0]);
    let last = values[k - 1];

    let verdict = if residual.is_finite() && residual < tol {
        let err = residual.max((intercept - prev_intercept).abs());
        SumVerdict::convergent(intercept, err, terms_used)
    } else if (monotone_up || monotone_down) && last.abs() >= DIVERGENCE_THRESHOLD {
        SumVerdict::divergent(monotone_up, terms_used)
    } else if let Some(up) = samples_grow_without_decay(&values) {
        diagnostics.push("samples grow by non-decaying increments".into());
        SumVerdict::divergent(up, terms_used)
    } else {
        SumVerdict::indeterminate(terms_used)
    };
    MethodAssignment::new(MethodId::Abel, verdict, diagnostics)
}

/// Documented assignment of the zeta-function method to a catalog series.
pub struct ZetaEntry {
    pub series: &'static str,
    pub value: (i64, i64),
    pub note: &'static str,
}

pub const ZETA_REGISTRY: &[ZetaEntry] = &[
    ZetaEntry {
        series: "naturals",
        value: (-1, 12),
        note: "zeta(-1) = -1/12 assigned to 1 + 2 + 3 + ...",
    },
    ZetaEntry {
        series: "ones",
        value: (-1, 2),
        note: "zeta(0) = -1/2 assigned to 1 + 1 + 1 + ...; the same literature also prints +1/2 for this series, the registry keeps the continuation value",
    },
];

pub const NOT_REGULAR_NOTE: &str =
    "not regular: a finite value for this series contradicts linearity and stability (see `summa audit theorem1` / `summa audit theorem2`)";

/// Registry lookup by catalog identity. Anything else is out of domain.
pub fn zeta_assign(s: &Series) -> MethodAssignment {
    let entry = s
        .identity()
        .filter(|id| id.params.is_empty())
        .and_then(|id| ZETA_REGISTRY.iter().find(|e| e.series == id.name));
    match entry {
        Some(e) => {
            let value = ratio(e.value.0, e.value.1);
            MethodAssignment {
                method: MethodId::Zeta,
                verdict: SumVerdict::convergent(rational_to_f64(&value), 0.0, 0),
                in_domain: true,
                diagnostics: vec![
                    format!("registry assignment {value} (exact); {}", e.note),
                    NOT_REGULAR_NOTE.to_string(),
                ],
                exact_value: Some(value),
            }
        }
        None => MethodAssignment::out_of_domain(
            MethodId::Zeta,
            0,
            format!(
                "`{}` is not in the zeta registry (registry keys are untransformed catalog series)",
                s.name()
            ),
        ),
    }
}

/// Two readings of `1 + 1 + 1 + ...`: the geometric power series
/// `1/(1-z)` at `z -> 1`, and the zeta registry.
#[derive(Debug, Clone)]
pub struct AmbiguityReport {
    /// `(j, 1/(1 - x_j))` at `x_j = 1 - 2^-j`.
    pub geometric_closed_form: Vec<(u32, f64)>,
    pub geometric: MethodAssignment,
    pub zeta: MethodAssignment,
    pub conflict: bool,
}

impl fmt::Display for AmbiguityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "series: 1 + 1 + 1 + ...")?;
        writeln!(f, "geometric continuation f(z) = 1/(1-z) near z = 1:")?;
        for (j, v) in &self.geometric_closed_form {
            writeln!(f, "  j = {j:2}  f(1 - 2^-{j}) = {v}")?;
        }
        writeln!(f, "  power-series verdict: {}", self.geometric.verdict)?;
        let zeta = self
            .zeta
            .exact_value
            .as_ref()
            .map_or("out of domain".to_string(), |v| v.to_string());
        writeln!(f, "zeta registry: {zeta}")?;
        write!(
            f,
            "conflict: {} (one reading diverges, the other is finite)",
            self.conflict
        )
    }
}

pub fn continuation_ambiguity_report(tol: f64, budget: usize) -> AmbiguityReport {
    let ones = crate::series::catalog_get("ones", &[]).expect("catalog entry");
    let geometric_closed_form = (1..=ABEL_LAST_J)
        .map(|j| (j, 1.0 / (-(j as f64)).exp2()))
        .collect();
    let geometric = abel_sum(&ones, tol, budget);
    let zeta = zeta_assign(&ones);
    let conflict = !geometric.verdict.is_convergent() && zeta.verdict.is_convergent();
    AmbiguityReport {
        geometric_closed_form,
        geometric,
        zeta,
        conflict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::DilutionMask;
    use crate::series::{catalog_get, VerdictKind};
    use crate::transforms::{apply_transform, TransformSpec};

    fn get(name: &str) -> Series {
        catalog_get(name, &[]).unwrap()
    }

    fn close(a: &MethodAssignment, expected: f64, tol: f64) -> bool {
        a.value().is_some_and(|v| (v - expected).abs() <= tol)
    }

    #[test]
    fn classical_examples() {
        let geo = catalog_get("geometric", &[ratio(1, 2)]).unwrap();
        assert!(close(&classical_sum(&geo, 1e-9, 10_000), 2.0, 1e-9));
        assert_eq!(
            classical_sum(&get("grandi"), 1e-9, 100_000).verdict.kind(),
            VerdictKind::Indeterminate
        );
    }

    #[test]
    fn cesaro_examples() {
        let g = get("grandi");
        assert!(close(&cesaro_sum(&g, 1e-6, 100_000), 0.5, 1e-6));
        let diluted = apply_transform(&TransformSpec::Dilute(DilutionMask::AFTER_EVEN), &g).unwrap();
        assert!(close(&cesaro_sum(&diluted, 1e-4, 100_000), 2.0 / 3.0, 1e-4));
        let ones = cesaro_sum(&get("ones"), 1e-6, 100_000);
        assert_eq!(ones.verdict.kind(), VerdictKind::DivergesToPlusInf);
    }

    #[test]
    fn cesaro_grandi_closed_form() {
        let z = cesaro_means_exact(&get("grandi"), 64);
        for (i, zn) in z.iter().enumerate() {
            let n = (i + 1) as i64;
            let c = (zn - ratio(1, 2)) * BigRational::from_integer(n.into());
            let expected = if n % 2 == 0 { ratio(0, 1) } else { ratio(1, 2) };
            assert_eq!(c, expected, "n = {n}");
        }
    }

    #[test]
    fn abel_examples() {
        assert!(close(&abel_sum(&get("grandi"), 1e-6, 1 << 20), 0.5, 1e-6));
        let geo = catalog_get("geometric", &[ratio(1, 2)]).unwrap();
        assert!(close(&abel_sum(&geo, 1e-6, 1 << 20), 2.0, 1e-6));
        assert_eq!(
            abel_sum(&get("ones"), 1e-6, 1 << 20).verdict.kind(),
            VerdictKind::DivergesToPlusInf
        );
    }

    #[test]
    fn abel_rejects_exponential_growth() {
        let g = catalog_get("geometric", &[ratio(2, 1)]).unwrap();
        let a = abel_sum(&g, 1e-6, 1 << 16);
        assert!(!a.in_domain);
        assert_eq!(a.verdict.kind(), VerdictKind::Indeterminate);
        assert!(a.diagnostics[0].contains("polynomial bound"));
    }

    #[test]
    fn zeta_registry() {
        let n = zeta_assign(&get("naturals"));
        assert_eq!(n.exact_value, Some(ratio(-1, 12)));
        assert!(n.diagnostics.iter().any(|d| d.starts_with("not regular")));
        let o = zeta_assign(&get("ones"));
        assert_eq!(o.exact_value, Some(ratio(-1, 2)));
        assert!(o.diagnostics[0].contains("+1/2"));
        let g = zeta_assign(&get("grandi"));
        assert!(!g.in_domain);
        assert_eq!(g.verdict.kind(), VerdictKind::Indeterminate);
        let shifted = apply_transform(&TransformSpec::Shift, &get("naturals")).unwrap();
        assert!(!zeta_assign(&shifted).in_domain);
    }

    #[test]
    fn ambiguity() {
        let r = continuation_ambiguity_report(1e-6, 1 << 20);
        assert_eq!(r.geometric_closed_form[9], (10, 1024.0));
        assert_eq!(r.zeta.exact_value, Some(ratio(-1, 2)));
        assert!(r.conflict);
    }

    #[test]
    fn method_ids_round_trip() {
        for m in MethodId::ALL {
            assert_eq!(m.as_str().parse::<MethodId>().unwrap(), m);
        }
        assert!("borel".parse::<MethodId>().is_err());
    }
}

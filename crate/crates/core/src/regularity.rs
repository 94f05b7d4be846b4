//! Regularity audits: does a method agree with the ordinary sum on
//! convergent series, and does it keep divergent-to-infinity series
//! divergent?
//!
//! A pass is always relative to a finite corpus.

use std::fmt;
use std::thread;

use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::axioms::{run_script, Script};
use crate::canonical::DilutionMask;
use crate::methods::{assign, cesaro_sum, MethodAssignment, MethodId};
use crate::series::{catalog_get, rational_to_f64, ratio, Series, SeriesError, VerdictKind};
use crate::transforms::{apply_transform, TransformSpec};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Series {
        line: usize,
        #[source]
        source: SeriesError,
    },
    #[error("corpus is empty")]
    Empty,
}

/// A convergent series with a closed-form sum.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub label: String,
    pub series: Series,
    pub known_sum: f64,
    pub known_sum_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub series: String,
    pub expected: String,
    pub got: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Pass { corpus_size: usize },
    Fail { witnesses: Vec<Witness> },
    NotApplicable { reason: String, linked: String },
}

impl Status {
    pub fn is_pass(&self) -> bool {
        matches!(self, Status::Pass { .. })
    }

    /// The first witness of a failure.
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Status::Fail { witnesses } => witnesses.first(),
            _ => None,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Pass { corpus_size } => {
                write!(f, "pass at desk scale (corpus of {corpus_size})")
            }
            Status::Fail { witnesses } => {
                write!(f, "fail")?;
                for w in witnesses {
                    write!(f, "\n    witness {}: expected {}, got {}", w.series, w.expected, w.got)?;
                }
                Ok(())
            }
            Status::NotApplicable { reason, linked } => {
                write!(f, "not applicable: {reason}\n    linked: {linked}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusRow {
    pub series: String,
    pub expected: String,
    pub kind: VerdictKind,
    pub value: Option<f64>,
    pub error_estimate: Option<f64>,
    pub in_domain: bool,
}

impl CorpusRow {
    fn new(series: &str, expected: String, a: &MethodAssignment) -> Self {
        CorpusRow {
            series: series.to_string(),
            expected,
            kind: a.verdict.kind(),
            value: a.value(),
            error_estimate: a.verdict.error_estimate(),
            in_domain: a.in_domain,
        }
    }

    fn got(&self) -> String {
        match (self.in_domain, self.value) {
            (false, _) => "out of domain".into(),
            (true, Some(v)) => format!("{} {v}", self.kind),
            (true, None) => self.kind.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub property: String,
    pub holds: bool,
    pub base: f64,
    pub witness_values: Vec<f64>,
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub method: MethodId,
    pub regular: Status,
    pub totally_regular: Option<Status>,
    pub property_checks: Vec<PropertyCheck>,
    pub corpus_rows: Vec<CorpusRow>,
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method: {}", self.method)?;
        writeln!(f, "  regular: {}", self.regular)?;
        if let Some(t) = &self.totally_regular {
            writeln!(f, "  totally regular: {t}")?;
        }
        for p in &self.property_checks {
            let values: Vec<String> = p.witness_values.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(
                f,
                "  {}: {} ({} gives {} vs base {:.6})",
                p.property,
                if p.holds { "holds" } else { "fails" },
                p.witnesses.join(", "),
                values.join(", "),
                p.base
            )?;
        }
        writeln!(f, "  corpus:")?;
        for r in &self.corpus_rows {
            writeln!(f, "    {:<16} expected {:<12} got {}", r.series, r.expected, r.got())?;
        }
        Ok(())
    }
}

pub fn default_corpus() -> Vec<CorpusEntry> {
    let entry = |name: &str, params: &[BigRational], sum: f64, text: &str, label: &str| CorpusEntry {
        label: label.to_string(),
        series: catalog_get(name, params).expect("catalog entry"),
        known_sum: sum,
        known_sum_text: text.to_string(),
    };
    vec![
        entry("geometric", &[ratio(1, 2)], 2.0, "2", "geometric(1/2)"),
        entry("telescoping", &[], 1.0, "1", "telescoping"),
        entry("alt_harmonic", &[], std::f64::consts::LN_2, "ln2", "alt_harmonic"),
        entry(
            "basel",
            &[],
            std::f64::consts::PI * std::f64::consts::PI / 6.0,
            "pi^2/6",
            "basel",
        ),
    ]
}

/// Series that diverge to `+inf`. Naturals come first so a method that
/// assigns them a finite value reports that witness first.
pub fn divergent_corpus() -> Vec<Series> {
    ["naturals", "ones", "harmonic"]
        .iter()
        .map(|n| catalog_get(n, &[]).expect("catalog entry"))
        .collect()
}

fn evaluate_all(method: MethodId, series: &[&Series], tol: f64, budget: usize) -> Vec<MethodAssignment> {
    thread::scope(|scope| {
        let handles: Vec<_> = series
            .iter()
            .map(|s| scope.spawn(move || assign(method, s, tol, budget)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("corpus evaluation panicked"))
            .collect()
    })
}

/// Regularity half of the audit.
pub fn regularity_report(
    method: MethodId,
    corpus: &[CorpusEntry],
    tol: f64,
    budget: usize,
) -> AuditReport {
    let series: Vec<&Series> = corpus.iter().map(|e| &e.series).collect();
    let results = evaluate_all(method, &series, tol, budget);
    let rows: Vec<CorpusRow> = corpus
        .iter()
        .zip(&results)
        .map(|(e, a)| CorpusRow::new(&e.label, e.known_sum_text.clone(), a))
        .collect();

    let regular = if results.iter().all(|a| !a.in_domain) {
        let proof = run_script(Script::Naturals, &Script::Naturals.default_rules());
        Status::NotApplicable {
            reason: format!(
                "{method} declares every corpus entry out of domain; its non-regularity follows from the axioms"
            ),
            linked: format!(
                "summa audit theorem2 -> {}",
                proof.outcome.render(proof.symbol, proof.determination())
            ),
        }
    } else {
        let witnesses: Vec<Witness> = corpus
            .iter()
            .zip(&rows)
            .filter(|(e, r)| {
                !(r.in_domain
                    && r.kind == VerdictKind::Convergent
                    && r.value.is_some_and(|v| (v - e.known_sum).abs() <= tol))
            })
            .map(|(e, r)| Witness {
                series: e.label.clone(),
                expected: e.known_sum_text.clone(),
                got: r.got(),
            })
            .collect();
        if witnesses.is_empty() {
            Status::Pass {
                corpus_size: corpus.len(),
            }
        } else {
            Status::Fail { witnesses }
        }
    };
    AuditReport {
        method,
        regular,
        totally_regular: None,
        property_checks: Vec::new(),
        corpus_rows: rows,
    }
}

/// Total-regularity half: every divergent series must stay divergent to `+inf`.
pub fn total_regularity_report(
    method: MethodId,
    divergent: &[Series],
    tol: f64,
    budget: usize,
) -> (Status, Vec<CorpusRow>) {
    let series: Vec<&Series> = divergent.iter().collect();
    let results = evaluate_all(method, &series, tol, budget);
    let rows: Vec<CorpusRow> = divergent
        .iter()
        .zip(&results)
        .map(|(s, a)| CorpusRow::new(s.name(), "+inf".into(), a))
        .collect();
    let witnesses: Vec<Witness> = divergent
        .iter()
        .zip(&results)
        .zip(&rows)
        .filter(|((_, a), r)| !(a.in_domain && r.kind == VerdictKind::DivergesToPlusInf))
        .map(|((s, a), r)| Witness {
            series: s.name().to_string(),
            expected: "+inf".into(),
            got: a
                .exact_value
                .as_ref()
                .map_or_else(|| r.got(), |v| v.to_string()),
        })
        .collect();
    let status = if witnesses.is_empty() {
        Status::Pass {
            corpus_size: divergent.len(),
        }
    } else {
        Status::Fail { witnesses }
    };
    (status, rows)
}

/// Grandi's series under pair association, pair swapping and dilution,
/// each compared with its own Cesàro sum of 1/2.
pub fn cesaro_property_check(tol: f64, budget: usize) -> Vec<PropertyCheck> {
    let grandi = catalog_get("grandi", &[]).expect("catalog entry");
    let base = cesaro_sum(&grandi, tol, budget).value().unwrap_or(f64::NAN);
    let value_under = |spec: TransformSpec| {
        let s = apply_transform(&spec, &grandi).expect("transform of a catalog series");
        cesaro_sum(&s, tol, budget).value().unwrap_or(f64::NAN)
    };
    let check = |property: &str, cases: Vec<(&str, TransformSpec)>| {
        let (witnesses, witness_values): (Vec<String>, Vec<f64>) = cases
            .into_iter()
            .map(|(label, spec)| (label.to_string(), value_under(spec)))
            .unzip();
        PropertyCheck {
            property: property.to_string(),
            holds: witness_values.iter().all(|v| (v - base).abs() <= tol),
            base,
            witness_values,
            witnesses,
        }
    };
    vec![
        check(
            "associativity",
            vec![
                ("associate_pairs(0)", TransformSpec::AssociatePairs { offset: 0 }),
                ("associate_pairs(1)", TransformSpec::AssociatePairs { offset: 1 }),
            ],
        ),
        check(
            "commutativity",
            vec![("swap_pairs(1, 2)", TransformSpec::SwapPairs { offset: 1, every: 2 })],
        ),
        check(
            "dilution",
            vec![(
                "dilute(after_positives)",
                TransformSpec::Dilute(DilutionMask::AFTER_EVEN),
            )],
        ),
    ]
}

/// Regularity, total regularity and (for Cesàro) the property checks.
pub fn full_audit(method: MethodId, corpus: &[CorpusEntry], tol: f64, budget: usize) -> AuditReport {
    let mut report = regularity_report(method, corpus, tol, budget);
    let (total, rows) = total_regularity_report(method, &divergent_corpus(), tol, budget);
    report.totally_regular = Some(total);
    report.corpus_rows.extend(rows);
    if method == MethodId::Cesaro {
        report.property_checks = cesaro_property_check(tol, budget);
    }
    report
}

/// Parses a corpus table. One entry per line, `#` starts a comment:
///
/// ```text
/// geometric(1/2) = 2
/// alt_harmonic   = ln2
/// basel          = pi^2/6
/// ```
///
/// A known sum is a rational or decimal, one of `ln2`, `pi`, `pi^2`,
/// `pi^2/6`, or a rational multiple written `q*const`.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |message: String| CorpusError::Syntax { line, message };
        let (lhs, rhs) = content
            .split_once('=')
            .ok_or_else(|| syntax("expected `series = known_sum`".into()))?;
        let lhs = lhs.trim();
        let (name, params) = match lhs.split_once('(') {
            Some((name, rest)) => {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| syntax(format!("unclosed parameter list in `{lhs}`")))?;
                let params = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|p| !p.is_empty())
                    .map(|p| parse_rational(p).ok_or_else(|| syntax(format!("bad parameter `{p}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                (name.trim(), params)
            }
            None => (lhs, Vec::new()),
        };
        let series = catalog_get(name, &params).map_err(|source| CorpusError::Series { line, source })?;
        let rhs = rhs.trim();
        let known_sum = parse_known_sum(rhs).ok_or_else(|| syntax(format!("bad known sum `{rhs}`")))?;
        out.push(CorpusEntry {
            label: lhs.to_string(),
            series,
            known_sum,
            known_sum_text: rhs.to_string(),
        });
    }
    if out.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(out)
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigRational = p.trim().parse::<num_bigint::BigInt>().ok()?.into();
        let q: BigRational = q.trim().parse::<num_bigint::BigInt>().ok()?.into();
        if q == BigRational::from_integer(0.into()) {
            return None;
        }
        return Some(p / q);
    }
    s.parse::<num_bigint::BigInt>().ok().map(BigRational::from_integer)
}

fn parse_known_sum(s: &str) -> Option<f64> {
    use std::f64::consts::{LN_2, PI};
    let constant = |c: &str| match c.replace(' ', "").as_str() {
        "ln2" => Some(LN_2),
        "pi" => Some(PI),
        "pi^2" => Some(PI * PI),
        "pi^2/6" => Some(PI * PI / 6.0),
        _ => None,
    };
    if let Some(c) = constant(s) {
        return Some(c);
    }
    if let Some((k, c)) = s.split_once('*') {
        return Some(rational_to_f64(&parse_rational(k)?) * constant(c.trim())?);
    }
    parse_rational(s)
        .map(|q| rational_to_f64(&q))
        .or_else(|| s.parse::<f64>().ok().filter(|v| v.is_finite()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-4;
    const BUDGET: usize = 1 << 17;

    #[test]
    fn corpus_parsing() {
        let corpus = parse_corpus(
            "# convergent\ngeometric(1/2) = 2\ntelescoping = 1\nalt_harmonic = ln2 # log\nbasel = pi^2/6\ngeometric(1/3)=3/2\nbasel = 1*pi^2/6\n",
        )
        .unwrap();
        assert_eq!(corpus.len(), 6);
        assert_eq!(corpus[0].label, "geometric(1/2)");
        assert!((corpus[2].known_sum - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(corpus[4].known_sum, 1.5);
        assert_eq!(corpus[3].known_sum, corpus[5].known_sum);
    }

    #[test]
    fn corpus_errors() {
        assert!(matches!(parse_corpus("# nothing\n"), Err(CorpusError::Empty)));
        assert!(matches!(parse_corpus("basel 3"), Err(CorpusError::Syntax { line: 1, .. })));
        assert!(matches!(
            parse_corpus("basel = 1\nnope = 2"),
            Err(CorpusError::Series { line: 2, .. })
        ));
        assert!(matches!(parse_corpus("basel = tau"), Err(CorpusError::Syntax { .. })));
    }

    #[test]
    fn classical_is_regular() {
        let r = regularity_report(MethodId::Classical, &default_corpus(), TOL, BUDGET);
        assert_eq!(r.regular, Status::Pass { corpus_size: 4 }, "{r}");
    }

    #[test]
    fn zeta_not_applicable() {
        let r = regularity_report(MethodId::Zeta, &default_corpus(), TOL, BUDGET);
        match &r.regular {
            Status::NotApplicable { linked, .. } => assert!(linked.contains("CONTRADICTION")),
            s => panic!("unexpected {s:?}"),
        }
        let (total, _) = total_regularity_report(MethodId::Zeta, &divergent_corpus(), TOL, BUDGET);
        let w = total.witness().unwrap();
        assert_eq!((w.series.as_str(), w.got.as_str()), ("naturals", "-1/12"));
    }

    #[test]
    fn classical_total_regularity() {
        let (total, rows) = total_regularity_report(MethodId::Classical, &divergent_corpus(), TOL, BUDGET);
        assert!(total.is_pass(), "{total} {rows:?}");
    }

    #[test]
    fn property_checks_fail_for_cesaro() {
        let checks = cesaro_property_check(TOL, BUDGET);
        let expected: [&[f64]; 3] = [&[0.0, 1.0], &[1.0], &[2.0 / 3.0]];
        for (c, want) in checks.iter().zip(expected) {
            assert!(!c.holds, "{} should fail", c.property);
            assert!((c.base - 0.5).abs() <= TOL);
            for (got, want) in c.witness_values.iter().zip(want) {
                assert!((got - want).abs() <= TOL, "{}: {got} vs {want}", c.property);
            }
        }
    }

    #[test]
    fn failing_witness_lists_series() {
        let wrong = parse_corpus("telescoping = 2").unwrap();
        let r = regularity_report(MethodId::Classical, &wrong, TOL, BUDGET);
        let w = r.regular.witness().unwrap();
        assert_eq!(w.series, "telescoping");
        assert!(w.got.starts_with("Convergent"));
    }
}

//! The expression language.
//!
//! ```text
//! expr := call
//! call := IDENT "(" args? ")" | IDENT
//! args := arg ("," arg)*
//! arg  := expr | NUMBER | RATIONAL | STRING
//! ```
//!
//! Parsing produces a generic call tree which is then validated into an
//! [`ExprAst`]: every identifier resolves to a method, transform or catalog
//! series, and every argument has the right arity and type.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::axioms::AffineValue;
use crate::canonical::{CanonicalSeq, DilutionMask};
use crate::methods::{assign, MethodAssignment, MethodId};
use crate::series::{catalog_get, Series, VerdictKind, CATALOG};
use crate::transforms::{apply_transform, TransformError, TransformSpec};

/// Byte range plus the 1-based line and column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("{at}: expected {}, found {found}", expected.join(" or "))]
    Parse {
        at: Span,
        found: String,
        expected: Vec<String>,
    },
    #[error("{at}: {message}")]
    Validation { at: Span, message: String },
}

impl DslError {
    pub fn span(&self) -> Span {
        match self {
            DslError::Parse { at, .. } | DslError::Validation { at, .. } => *at,
        }
    }
}

#[derive(Debug, Error)]
#[error("{at}: {source}")]
pub struct EvalError {
    pub at: Span,
    #[source]
    pub source: TransformError,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Rational(BigInt, BigInt),
    Decimal(f64, String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Rational(p, q) => format!("`{p}/{q}`"),
            Tok::Decimal(_, text) => format!("`{text}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span {
            start: self.pos,
            end: self.pos,
            line: self.line,
            col: self.col,
        }
    }

    fn digits(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            s.push(c);
            self.bump();
        }
        s
    }

    fn tokens(mut self) -> Result<Vec<(Tok, Span)>, DslError> {
        let mut out = Vec::new();
        loop {
            while self.peek().is_some_and(char::is_whitespace) {
                self.bump();
            }
            let mut span = self.here();
            let Some(c) = self.peek() else {
                out.push((Tok::Eof, span));
                return Ok(out);
            };
            let tok = match c {
                '(' | ')' | ',' => {
                    self.bump();
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        _ => Tok::Comma,
                    }
                }
                '"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some('"') => break,
                            Some(ch) => s.push(ch),
                            None => {
                                return Err(DslError::Parse {
                                    at: self.here(),
                                    found: "end of input".into(),
                                    expected: vec!["`\"`".into()],
                                })
                            }
                        }
                    }
                    Tok::Str(s)
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut s = String::new();
                    while let Some(ch) = self.peek().filter(|ch| ch.is_ascii_alphanumeric() || *ch == '_') {
                        s.push(ch);
                        self.bump();
                    }
                    Tok::Ident(s)
                }
                c if c.is_ascii_digit() || c == '-' => self.number()?,
                other => {
                    return Err(DslError::Parse {
                        at: span,
                        found: format!("`{other}`"),
                        expected: vec!["identifier".into(), "number".into(), "string".into()],
                    })
                }
            };
            span.end = self.pos;
            out.push((tok, span));
        }
    }

    fn number(&mut self) -> Result<Tok, DslError> {
        let mut text = String::new();
        if self.peek() == Some('-') {
            text.push('-');
            self.bump();
        }
        let whole = self.digits();
        if whole.is_empty() {
            return Err(DslError::Parse {
                at: self.here(),
                found: self.peek().map_or("end of input".into(), |c| format!("`{c}`")),
                expected: vec!["digit".into()],
            });
        }
        text.push_str(&whole);
        let int: BigInt = text.parse().expect("digits");
        match self.peek() {
            Some('/') => {
                self.bump();
                let den = self.digits();
                if den.is_empty() {
                    return Err(DslError::Parse {
                        at: self.here(),
                        found: self.peek().map_or("end of input".into(), |c| format!("`{c}`")),
                        expected: vec!["denominator".into()],
                    });
                }
                Ok(Tok::Rational(int, den.parse().expect("digits")))
            }
            Some('.') => {
                self.bump();
                let frac = self.digits();
                text.push('.');
                text.push_str(&frac);
                let value: f64 = text.parse().map_err(|_| DslError::Parse {
                    at: self.here(),
                    found: format!("`{text}`"),
                    expected: vec!["decimal number".into()],
                })?;
                Ok(Tok::Decimal(value, text))
            }
            _ => Ok(Tok::Int(int)),
        }
    }
}

#[derive(Debug, Clone)]
enum RawArg {
    Call(RawCall),
    Rational(BigRational),
    Decimal(f64),
    Str(String),
}

#[derive(Debug, Clone)]
struct RawCall {
    name: String,
    args: Vec<(RawArg, Span)>,
    span: Span,
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, Span) {
        &self.toks[self.at]
    }

    fn next(&mut self) -> (Tok, Span) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, DslError> {
        let (tok, span) = self.peek();
        Err(DslError::Parse {
            at: *span,
            found: tok.describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn call(&mut self) -> Result<RawCall, DslError> {
        let (tok, span) = self.peek().clone();
        let Tok::Ident(name) = tok else {
            return self.fail(&["identifier"]);
        };
        self.next();
        let mut call = RawCall {
            name,
            args: Vec::new(),
            span,
        };
        if self.peek().0 == Tok::LParen {
            self.next();
            if self.peek().0 != Tok::RParen {
                loop {
                    call.args.push(self.arg()?);
                    match self.peek().0 {
                        Tok::Comma => {
                            self.next();
                        }
                        Tok::RParen => break,
                        _ => return self.fail(&["`,`", "`)`"]),
                    }
                }
            }
            let (_, close) = self.next();
            call.span.end = close.end;
        }
        Ok(call)
    }

    fn arg(&mut self) -> Result<(RawArg, Span), DslError> {
        let (tok, span) = self.peek().clone();
        let arg = match tok {
            Tok::Ident(_) => {
                let c = self.call()?;
                let span = c.span;
                return Ok((RawArg::Call(c), span));
            }
            Tok::Int(i) => RawArg::Rational(BigRational::from_integer(i)),
            Tok::Rational(p, q) => {
                if q.is_zero() {
                    return Err(DslError::Validation {
                        at: span,
                        message: "zero denominator".into(),
                    });
                }
                RawArg::Rational(BigRational::new(p, q))
            }
            Tok::Decimal(v, _) => RawArg::Decimal(v),
            Tok::Str(s) => RawArg::Str(s),
            _ => return self.fail(&["identifier", "number", "string"]),
        };
        self.next();
        Ok((arg, span))
    }
}

/// A validated expression. Equality compares spans too; use
/// [`ExprAst::same_shape`] to ignore them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprAst {
    pub node: Node,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    SeriesRef {
        name: String,
        params: Vec<BigRational>,
    },
    Transform {
        child: Box<ExprAst>,
        args: TransformArgs,
    },
    MethodCall {
        method: MethodId,
        child: Box<ExprAst>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransformArgs {
    Dilute(DilutionMask),
    SwapPairs { offset: usize, every: usize },
    AssociatePairs { offset: usize },
    Shift,
    Prepend(BigRational),
    Scale(BigRational),
    Add(Box<ExprAst>),
    RearrangeTo(f64),
}

impl TransformArgs {
    pub fn kind(&self) -> &'static str {
        match self {
            TransformArgs::Dilute(_) => "dilute",
            TransformArgs::SwapPairs { .. } => "swap_pairs",
            TransformArgs::AssociatePairs { .. } => "associate_pairs",
            TransformArgs::Shift => "shift",
            TransformArgs::Prepend(_) => "prepend",
            TransformArgs::Scale(_) => "scale",
            TransformArgs::Add(_) => "add",
            TransformArgs::RearrangeTo(_) => "rearrange_to",
        }
    }
}

const TRANSFORMS: &[&str] = &[
    "dilute",
    "swap_pairs",
    "associate_pairs",
    "shift",
    "prepend",
    "scale",
    "add",
    "rearrange_to",
];

pub fn parse_expr(input: &str) -> Result<ExprAst, DslError> {
    let toks = Lexer::new(input).tokens()?;
    let mut p = Parser { toks, at: 0 };
    let call = p.call()?;
    if p.peek().0 != Tok::Eof {
        return p.fail(&["end of input"]);
    }
    validate(call, true)
}

fn invalid<T>(at: Span, message: impl Into<String>) -> Result<T, DslError> {
    Err(DslError::Validation {
        at,
        message: message.into(),
    })
}

fn validate(call: RawCall, top: bool) -> Result<ExprAst, DslError> {
    let span = call.span;
    let name = call.name.as_str();
    if let Ok(method) = name.parse::<MethodId>() {
        if !top {
            return invalid(span, format!("method `{name}` may only appear outermost"));
        }
        let [(arg, arg_span)] = <[_; 1]>::try_from(call.args).map_err(|args: Vec<_>| DslError::Validation {
            at: span,
            message: format!("`{name}` takes 1 argument, got {}", args.len()),
        })?;
        let child = series_arg(arg, arg_span, name)?;
        return Ok(ExprAst {
            node: Node::MethodCall {
                method,
                child: Box::new(child),
            },
            span,
        });
    }
    if TRANSFORMS.contains(&name) {
        return validate_transform(call);
    }
    if CATALOG.contains(&name) {
        let params = call
            .args
            .into_iter()
            .map(|(a, s)| match a {
                RawArg::Rational(q) => Ok(q),
                _ => invalid(s, format!("`{name}` parameters must be rationals")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Err(e) = catalog_get(name, &params) {
            return invalid(span, e.to_string());
        }
        return Ok(ExprAst {
            node: Node::SeriesRef {
                name: name.to_string(),
                params,
            },
            span,
        });
    }
    invalid(
        span,
        format!("unknown identifier `{name}` (not a method, transform or catalog series)"),
    )
}

fn series_arg(arg: RawArg, span: Span, owner: &str) -> Result<ExprAst, DslError> {
    match arg {
        RawArg::Call(c) => validate(c, false),
        _ => invalid(span, format!("`{owner}` expects a series expression here")),
    }
}

fn rational_arg(arg: &RawArg, span: Span, owner: &str) -> Result<BigRational, DslError> {
    match arg {
        RawArg::Rational(q) => Ok(q.clone()),
        RawArg::Decimal(_) => invalid(
            span,
            format!("`{owner}` needs an exact number; write a rational such as 1/2"),
        ),
        _ => invalid(span, format!("`{owner}` expects a number here")),
    }
}

fn count_arg(arg: &RawArg, span: Span, owner: &str) -> Result<usize, DslError> {
    let q = rational_arg(arg, span, owner)?;
    if !q.is_integer() || q < BigRational::zero() {
        return invalid(span, format!("`{owner}` expects a non-negative integer here"));
    }
    q.to_integer()
        .try_into()
        .or_else(|_| invalid(span, "integer too large"))
}

fn validate_transform(call: RawCall) -> Result<ExprAst, DslError> {
    let span = call.span;
    let name = call.name.clone();
    let (min, max) = match name.as_str() {
        "shift" => (1, 1),
        "swap_pairs" => (1, 3),
        "associate_pairs" => (1, 2),
        _ => (2, 2),
    };
    let n = call.args.len();
    if n < min || n > max {
        let want = if min == max {
            min.to_string()
        } else {
            format!("{min} to {max}")
        };
        return invalid(span, format!("`{name}` takes {want} arguments, got {n}"));
    }
    let mut args = call.args.into_iter();
    let (first, first_span) = args.next().expect("arity checked");
    let child = series_arg(first, first_span, &name)?;
    let rest: Vec<(RawArg, Span)> = args.collect();
    let targs = match name.as_str() {
        "shift" => TransformArgs::Shift,
        "prepend" => TransformArgs::Prepend(rational_arg(&rest[0].0, rest[0].1, &name)?),
        "scale" => TransformArgs::Scale(rational_arg(&rest[0].0, rest[0].1, &name)?),
        "swap_pairs" => {
            let offset = rest.first().map_or(Ok(0), |(a, s)| count_arg(a, *s, &name))?;
            let every = rest.get(1).map_or(Ok(1), |(a, s)| count_arg(a, *s, &name))?;
            if every == 0 {
                return invalid(rest[1].1, "swap_pairs stride must be at least 1");
            }
            TransformArgs::SwapPairs { offset, every }
        }
        "associate_pairs" => {
            let offset = rest.first().map_or(Ok(0), |(a, s)| count_arg(a, *s, &name))?;
            if offset > 1 {
                return invalid(rest[0].1, "associate_pairs offset must be 0 or 1");
            }
            TransformArgs::AssociatePairs { offset }
        }
        "dilute" => {
            let (arg, s) = &rest[0];
            let label = match arg {
                RawArg::Call(c) if c.args.is_empty() => c.name.as_str(),
                RawArg::Str(text) => text.as_str(),
                _ => return invalid(*s, "dilute expects a mask such as after_positives or \"after:2:0:1\""),
            };
            match DilutionMask::from_label(label) {
                Some(mask) => TransformArgs::Dilute(mask),
                None => return invalid(*s, format!("unknown dilution mask `{label}`")),
            }
        }
        "add" => {
            let (arg, s) = rest.into_iter().next().expect("arity checked");
            TransformArgs::Add(Box::new(series_arg(arg, s, "add")?))
        }
        "rearrange_to" => match &rest[0].0 {
            RawArg::Decimal(v) => TransformArgs::RearrangeTo(*v),
            RawArg::Rational(q) => TransformArgs::RearrangeTo(crate::series::rational_to_f64(q)),
            _ => return invalid(rest[0].1, "rearrange_to expects a numeric target"),
        },
        _ => unreachable!("transform names are fixed"),
    };
    Ok(ExprAst {
        node: Node::Transform {
            child: Box::new(child),
            args: targs,
        },
        span,
    })
}

impl ExprAst {
    /// Canonical source text. Reparsing it gives the same tree up to spans.
    pub fn render(&self) -> String {
        match &self.node {
            Node::SeriesRef { name, params } if params.is_empty() => name.clone(),
            Node::SeriesRef { name, params } => {
                let ps: Vec<String> = params.iter().map(ToString::to_string).collect();
                format!("{name}({})", ps.join(", "))
            }
            Node::MethodCall { method, child } => format!("{method}({})", child.render()),
            Node::Transform { child, args } => {
                let c = child.render();
                match args {
                    TransformArgs::Shift => format!("shift({c})"),
                    TransformArgs::Prepend(q) => format!("prepend({c}, {q})"),
                    TransformArgs::Scale(q) => format!("scale({c}, {q})"),
                    TransformArgs::SwapPairs { offset, every } => {
                        format!("swap_pairs({c}, {offset}, {every})")
                    }
                    TransformArgs::AssociatePairs { offset } => {
                        format!("associate_pairs({c}, {offset})")
                    }
                    TransformArgs::Dilute(mask) => {
                        let label = mask.label();
                        if label.contains(':') {
                            format!("dilute({c}, \"{label}\")")
                        } else {
                            format!("dilute({c}, {label})")
                        }
                    }
                    TransformArgs::Add(other) => format!("add({c}, {})", other.render()),
                    TransformArgs::RearrangeTo(k) => format!("rearrange_to({c}, {k})"),
                }
            }
        }
    }

    /// Structural equality ignoring source spans.
    pub fn same_shape(&self, other: &ExprAst) -> bool {
        match (&self.node, &other.node) {
            (Node::SeriesRef { .. }, Node::SeriesRef { .. }) => self.node == other.node,
            (
                Node::MethodCall { method: m1, child: c1 },
                Node::MethodCall { method: m2, child: c2 },
            ) => m1 == m2 && c1.same_shape(c2),
            (Node::Transform { child: c1, args: a1 }, Node::Transform { child: c2, args: a2 }) => {
                c1.same_shape(c2)
                    && match (a1, a2) {
                        (TransformArgs::Add(x), TransformArgs::Add(y)) => x.same_shape(y),
                        _ => a1 == a2,
                    }
            }
            _ => false,
        }
    }

    /// The method of an outer call, and the series expression beneath it.
    pub fn split_method(&self) -> (Option<MethodId>, &ExprAst) {
        match &self.node {
            Node::MethodCall { method, child } => (Some(*method), child),
            _ => (None, self),
        }
    }

    /// Builds the lazy series this expression denotes.
    pub fn build_series(&self, budget: u64) -> Result<Series, EvalError> {
        let wrap = |source| EvalError {
            at: self.span,
            source,
        };
        match &self.node {
            Node::SeriesRef { name, params } => {
                Ok(catalog_get(name, params).expect("validated at parse time"))
            }
            Node::MethodCall { child, .. } => child.build_series(budget),
            Node::Transform { child, args } => {
                let base = child.build_series(budget)?;
                let spec = match args {
                    TransformArgs::Dilute(m) => TransformSpec::Dilute(*m),
                    TransformArgs::SwapPairs { offset, every } => TransformSpec::SwapPairs {
                        offset: *offset,
                        every: *every,
                    },
                    TransformArgs::AssociatePairs { offset } => {
                        TransformSpec::AssociatePairs { offset: *offset }
                    }
                    TransformArgs::Shift => TransformSpec::Shift,
                    TransformArgs::Prepend(q) => TransformSpec::Prepend(q.clone()),
                    TransformArgs::Scale(q) => TransformSpec::Scale(q.clone()),
                    TransformArgs::Add(other) => TransformSpec::Add(other.build_series(budget)?),
                    TransformArgs::RearrangeTo(k) => TransformSpec::RearrangeTo { target: *k, budget },
                };
                apply_transform(&spec, &base).map_err(wrap)
            }
        }
    }

    /// The canonical form of the expression, when it has one: the eventually
    /// periodic-polynomial catalog series under any exact transform.
    pub fn to_canonical(&self) -> Option<CanonicalSeq> {
        match &self.node {
            Node::SeriesRef { name, params } => match (name.as_str(), params.as_slice()) {
                ("zeros", []) => Some(CanonicalSeq::zeros()),
                ("ones", []) => Some(CanonicalSeq::ones()),
                ("grandi", []) => Some(CanonicalSeq::grandi()),
                ("naturals", []) => Some(CanonicalSeq::naturals()),
                ("geometric", [r]) if r.is_one() => Some(CanonicalSeq::ones()),
                ("geometric", [r]) if *r == -BigRational::one() => Some(CanonicalSeq::grandi()),
                ("geometric", [r]) if r.is_zero() => Some(CanonicalSeq::new(vec![BigRational::one()], vec![])),
                _ => None,
            },
            Node::MethodCall { child, .. } => child.to_canonical(),
            Node::Transform { child, args } => {
                let c = child.to_canonical()?;
                Some(match args {
                    TransformArgs::Dilute(m) => c.dilute(*m),
                    TransformArgs::SwapPairs { offset, every } => c.swap_pairs(*offset, *every),
                    TransformArgs::AssociatePairs { offset } => c.associate_pairs(*offset),
                    TransformArgs::Shift => c.shift(),
                    TransformArgs::Prepend(q) => c.prepend(q.clone()),
                    TransformArgs::Scale(q) => c.scale(q),
                    TransformArgs::Add(other) => c.add(&other.to_canonical()?),
                    TransformArgs::RearrangeTo(_) => return None,
                })
            }
        }
    }
}

/// Parses `SERIES=VALUE` for the axiom search. The value is a rational, a
/// one-letter symbol, or a negated symbol.
pub fn parse_hypothesis(text: &str) -> Result<(CanonicalSeq, AffineValue, Option<char>), DslError> {
    let (lhs, rhs) = text.rsplit_once('=').ok_or_else(|| DslError::Validation {
        at: Span {
            start: 0,
            end: text.len(),
            line: 1,
            col: 1,
        },
        message: "hypothesis must look like SERIES=VALUE".into(),
    })?;
    let ast = parse_expr(lhs.trim())?;
    let seq = ast.to_canonical().ok_or_else(|| DslError::Validation {
        at: ast.span,
        message: format!(
            "`{}` has no exact canonical form (use zeros, ones, grandi, naturals and exact transforms)",
            ast.render()
        ),
    })?;
    let v = rhs.trim();
    let value_at = Span {
        start: lhs.len() + 1,
        end: text.len(),
        line: 1,
        col: lhs.chars().count() + 2,
    };
    let (neg, body) = match v.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, v),
    };
    let mut chars = body.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if c.is_ascii_alphabetic() {
            let sym = AffineValue::symbol();
            let value = if neg { sym.scale(&-BigRational::one()) } else { sym };
            return Ok((seq, value, Some(c)));
        }
    }
    let toks = Lexer::new(v).tokens()?;
    let q = match toks.as_slice() {
        [(Tok::Int(i), _), (Tok::Eof, _)] => BigRational::from_integer(i.clone()),
        [(Tok::Rational(p, q), _), (Tok::Eof, _)] if !q.is_zero() => BigRational::new(p.clone(), q.clone()),
        _ => {
            return Err(DslError::Validation {
                at: value_at,
                message: format!("hypothesis value `{v}` must be a rational or a one-letter symbol"),
            })
        }
    };
    Ok((seq, AffineValue::constant(q), None))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Settings {
    pub tol: f64,
    pub budget: usize,
}

/// Result of evaluating one statement.
#[derive(Debug, Clone)]
pub struct Report {
    pub expr: String,
    pub assignment: MethodAssignment,
    pub settings: Settings,
}

#[derive(Serialize)]
struct VerdictJson {
    kind: VerdictKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_estimate: Option<f64>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    expr: &'a str,
    method: MethodId,
    verdict: VerdictJson,
    terms_used: u64,
    settings: Settings,
    diagnostics: &'a [String],
}

impl Report {
    pub fn to_json(&self) -> serde_json::Value {
        let v = &self.assignment.verdict;
        serde_json::to_value(ReportJson {
            expr: &self.expr,
            method: self.assignment.method,
            verdict: VerdictJson {
                kind: v.kind(),
                value: v.value(),
                error_estimate: v.error_estimate(),
            },
            terms_used: v.terms_used,
            settings: self.settings,
            diagnostics: &self.assignment.diagnostics,
        })
        .expect("report serializes")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = &self.assignment;
        writeln!(f, "expr:     {}", self.expr)?;
        writeln!(f, "method:   {}", a.method)?;
        write!(f, "verdict:  {}", a.verdict.kind())?;
        if let Some(exact) = &a.exact_value {
            write!(f, " {exact}")?;
        } else if let Some(v) = a.verdict.value() {
            write!(f, " {v}")?;
            if let Some(e) = a.verdict.error_estimate() {
                write!(f, " (error estimate {e:.3e})")?;
            }
        }
        writeln!(f)?;
        if !a.in_domain {
            writeln!(f, "domain:   outside the method's domain")?;
        }
        writeln!(f, "terms:    {}", a.verdict.terms_used)?;
        write!(f, "settings: tol {:e}, budget {}", self.settings.tol, self.settings.budget)?;
        for d in &a.diagnostics {
            write!(f, "\nnote:     {d}")?;
        }
        Ok(())
    }
}

/// Evaluates an expression. A bare series is summed classically.
pub fn eval_statement(ast: &ExprAst, settings: Settings) -> Result<Report, EvalError> {
    let (method, body) = ast.split_method();
    let series = body.build_series(settings.budget as u64)?;
    let method = method.unwrap_or(MethodId::Classical);
    Ok(Report {
        expr: ast.render(),
        assignment: assign(method, &series, settings.tol, settings.budget),
        settings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{int, ratio};

    fn series_ref(name: &str) -> Node {
        Node::SeriesRef {
            name: name.into(),
            params: vec![],
        }
    }

    #[test]
    fn parses_method_over_transform() {
        let ast = parse_expr("cesaro(dilute(grandi, after_positives))").unwrap();
        let Node::MethodCall { method, child } = &ast.node else {
            panic!("{ast:?}")
        };
        assert_eq!(*method, MethodId::Cesaro);
        let Node::Transform { child, args } = &child.node else {
            panic!()
        };
        assert_eq!(child.node, series_ref("grandi"));
        assert_eq!(*args, TransformArgs::Dilute(DilutionMask::AFTER_EVEN));
        assert_eq!((ast.span.start, ast.span.end), (0, 39));
    }

    #[test]
    fn parses_rational_param() {
        let ast = parse_expr("abel(geometric(1/2))").unwrap();
        let (m, body) = ast.split_method();
        assert_eq!(m, Some(MethodId::Abel));
        assert_eq!(
            body.node,
            Node::SeriesRef {
                name: "geometric".into(),
                params: vec![ratio(1, 2)]
            }
        );
    }

    #[test]
    fn unbalanced_paren_reports_position() {
        let err = parse_expr("cesaro(swap_pairs(grandi)").unwrap_err();
        match &err {
            DslError::Parse { at, found, expected } => {
                assert_eq!((at.line, at.col), (1, 26));
                assert_eq!(found, "end of input");
                assert!(expected.contains(&"`)`".to_string()));
            }
            e => panic!("{e:?}"),
        }
        assert!(err.to_string().starts_with("1:26: expected"));
    }

    #[test]
    fn multiline_positions() {
        let err = parse_expr("cesaro(\n  grandi\n  grandi)").unwrap_err();
        assert_eq!((err.span().line, err.span().col), (3, 3));
    }

    #[test]
    fn validation_errors() {
        for (src, needle) in [
            ("cesaro(nope)", "unknown identifier"),
            ("scale(grandi, 0.5)", "exact number"),
            ("scale(grandi)", "takes 2 arguments"),
            ("geometric", "takes 1 parameter"),
            ("shift(cesaro(grandi))", "outermost"),
            ("dilute(grandi, sideways)", "unknown dilution mask"),
            ("associate_pairs(grandi, 2)", "0 or 1"),
            ("cesaro(grandi, 1)", "takes 1 argument"),
            ("scale(grandi, 1/0)", "zero denominator"),
        ] {
            let e = parse_expr(src).unwrap_err();
            assert!(e.to_string().contains(needle), "{src}: {e}");
        }
    }

    #[test]
    fn render_round_trip() {
        for src in [
            "cesaro(swap_pairs(grandi, 1, 2))",
            "scale(prepend(naturals, -3/4), 2)",
            "classical(add(alt_harmonic, scale(dilute(alt_harmonic, before_each), 1/2)))",
            "dilute(ones, \"before:3:1:2\")",
            "rearrange_to(alt_harmonic, -2.5)",
            "zeta(naturals)",
        ] {
            let a = parse_expr(src).unwrap();
            let b = parse_expr(&a.render()).unwrap();
            assert!(a.same_shape(&b), "{src} -> {}", a.render());
        }
        assert_eq!(parse_expr("swap_pairs(grandi)").unwrap().render(), "swap_pairs(grandi, 0, 1)");
    }

    #[test]
    fn eval_examples() {
        let settings = Settings {
            tol: 1e-9,
            budget: 1 << 16,
        };
        let run = |src: &str| eval_statement(&parse_expr(src).unwrap(), settings).unwrap();
        let r = run("cesaro(grandi)");
        assert!((r.assignment.value().unwrap() - 0.5).abs() < 1e-9);
        let r = run("zeta(naturals)");
        assert_eq!(r.assignment.exact_value, Some(ratio(-1, 12)));
        assert!(r.assignment.diagnostics.iter().any(|d| d.starts_with("not regular")));
        let r = run("classical(zeros)");
        assert_eq!(r.assignment.verdict.kind(), VerdictKind::Convergent);
        assert_eq!(r.assignment.value(), Some(0.0));
        let r = run("grandi");
        assert_eq!(r.assignment.method, MethodId::Classical);
    }

    #[test]
    fn eval_error_carries_span() {
        let ast = parse_expr("cesaro(rearrange_to(geometric(1/2), 1))").unwrap();
        let settings = Settings { tol: 1e-6, budget: 1000 };
        let err = eval_statement(&ast, settings).unwrap_err();
        assert_eq!(err.at.col, 8);
    }

    #[test]
    fn json_schema_fields() {
        let ast = parse_expr("cesaro(grandi)").unwrap();
        let r = eval_statement(&ast, Settings { tol: 1e-9, budget: 1 << 14 }).unwrap();
        let j = r.to_json();
        let keys: Vec<&str> = j.as_object().unwrap().keys().map(String::as_str).collect();
        let mut want = vec!["expr", "method", "verdict", "terms_used", "settings", "diagnostics"];
        want.sort();
        let mut keys = keys;
        keys.sort();
        assert_eq!(keys, want);
        assert_eq!(j["method"], "cesaro");
        assert_eq!(j["verdict"]["kind"], "Convergent");
        assert_eq!(j["settings"]["budget"], 1 << 14);
    }

    #[test]
    fn canonical_of_expressions() {
        let c = parse_expr("prepend(scale(naturals, -1), 0)").unwrap().to_canonical().unwrap();
        assert_eq!(c.terms(3), vec![int(0), int(-1), int(-2)]);
        assert!(parse_expr("basel").unwrap().to_canonical().is_none());
    }

    #[test]
    fn hypotheses() {
        let (seq, v, sym) = parse_hypothesis("naturals=s").unwrap();
        assert_eq!(seq, CanonicalSeq::naturals());
        assert_eq!((v, sym), (AffineValue::symbol(), Some('s')));
        let (seq, v, _) = parse_hypothesis("ones = -1/2").unwrap();
        assert_eq!(seq, CanonicalSeq::ones());
        assert_eq!(v, AffineValue::constant(ratio(-1, 2)));
        assert!(parse_hypothesis("ones").is_err());
        assert!(parse_hypothesis("basel=1").is_err());
        assert!(parse_hypothesis("ones=1.5").is_err());
    }
}

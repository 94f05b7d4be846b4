//! Linearity and stability as rewrite rules over valued sequences.
//!
//! A [`Judgment`] states that a summation method assigns the affine value
//! `c0 + c1*s` to a [`CanonicalSeq`], where `s` is a single hypothesis
//! symbol. Rules derive new judgments; the store is keyed by normal form,
//! so two judgments about the same sequence are compared automatically and
//! either determine `s` or contradict each other.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::canonical::{CanonicalSeq, DilutionMask};
use crate::series::int;

/// Deepest search the engine accepts.
pub const MAX_SEARCH_DEPTH: u32 = 8;
pub const DEFAULT_SEARCH_DEPTH: u32 = 4;
pub const DEFAULT_MAX_SEQ_SIZE: usize = 12;
pub const DEFAULT_MAX_JUDGMENTS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AxiomError {
    #[error("rule {0} is disabled")]
    RuleDisabled(String),
    #[error("rule {rule} takes {expected} premise(s), got {got}")]
    ArityMismatch {
        rule: String,
        expected: usize,
        got: usize,
    },
    #[error("search depth {0} exceeds the maximum of {MAX_SEARCH_DEPTH}")]
    DepthTooLarge(u32),
    #[error("unknown rule `{0}` (expected A, B, C, comm, assoc, dilute)")]
    UnknownRule(String),
    #[error("unknown script `{0}` (expected theorem1, theorem2, lemma-commutative)")]
    UnknownScript(String),
}

/// `c0 + c1 * s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineValue {
    pub c0: BigRational,
    pub c1: BigRational,
}

impl AffineValue {
    pub fn constant(c0: BigRational) -> Self {
        AffineValue {
            c0,
            c1: BigRational::zero(),
        }
    }

    /// The bare symbol `s`.
    pub fn symbol() -> Self {
        AffineValue {
            c0: BigRational::zero(),
            c1: BigRational::one(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.c1.is_zero()
    }

    pub fn add(&self, other: &AffineValue) -> AffineValue {
        AffineValue {
            c0: &self.c0 + &other.c0,
            c1: &self.c1 + &other.c1,
        }
    }

    pub fn scale(&self, k: &BigRational) -> AffineValue {
        AffineValue {
            c0: &self.c0 * k,
            c1: &self.c1 * k,
        }
    }

    pub fn add_constant(&self, q: &BigRational) -> AffineValue {
        AffineValue {
            c0: &self.c0 + q,
            c1: self.c1.clone(),
        }
    }

    pub fn eval(&self, s: &BigRational) -> BigRational {
        &self.c0 + &self.c1 * s
    }

    pub fn display(&self, symbol: char) -> String {
        let sym = if self.c1.is_zero() {
            None
        } else if self.c1 == BigRational::one() {
            Some(symbol.to_string())
        } else if self.c1 == -BigRational::one() {
            Some(format!("-{symbol}"))
        } else {
            Some(format!("{}{symbol}", self.c1))
        };
        match sym {
            None => self.c0.to_string(),
            Some(sym) if self.c0.is_zero() => sym,
            Some(sym) if self.c1.is_negative() => {
                format!("{} - {}", self.c0, sym.trim_start_matches('-'))
            }
            Some(sym) if self.c0.is_negative() => format!("{sym} - {}", -&self.c0),
            Some(sym) => format!("{sym} + {}", self.c0),
        }
    }
}

/// Families of rules that can be switched on or off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RuleFamily {
    A,
    B,
    C,
    Comm,
    Assoc,
    Dilute,
}

impl RuleFamily {
    pub fn name(&self) -> &'static str {
        match self {
            RuleFamily::A => "A",
            RuleFamily::B => "B",
            RuleFamily::C => "C",
            RuleFamily::Comm => "comm",
            RuleFamily::Assoc => "assoc",
            RuleFamily::Dilute => "dilute",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleSet {
    enabled: [bool; 6],
}

impl RuleSet {
    /// Linearity and stability only.
    pub fn core() -> Self {
        Self::of(&[RuleFamily::A, RuleFamily::B, RuleFamily::C])
    }

    pub fn of(families: &[RuleFamily]) -> Self {
        let mut enabled = [false; 6];
        for f in families {
            enabled[*f as usize] = true;
        }
        RuleSet { enabled }
    }

    pub fn with(mut self, family: RuleFamily) -> Self {
        self.enabled[family as usize] = true;
        self
    }

    pub fn without(mut self, family: RuleFamily) -> Self {
        self.enabled[family as usize] = false;
        self
    }

    pub fn allows(&self, family: RuleFamily) -> bool {
        self.enabled[family as usize]
    }
}

impl FromStr for RuleSet {
    type Err = AxiomError;

    /// Comma-separated list such as `A,B,C,comm`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = RuleSet::of(&[]);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let fam = match part.to_ascii_lowercase().as_str() {
                "a" => RuleFamily::A,
                "b" => RuleFamily::B,
                "c" => RuleFamily::C,
                "comm" => RuleFamily::Comm,
                "assoc" => RuleFamily::Assoc,
                "dilute" => RuleFamily::Dilute,
                _ => return Err(AxiomError::UnknownRule(part.to_string())),
            };
            out = out.with(fam);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    Scale(BigRational),
    Add,
    Shift,
    Prepend(BigRational),
    Comm { offset: usize, every: usize },
    Assoc { offset: usize },
    Dilute(DilutionMask),
}

impl Rule {
    pub fn family(&self) -> RuleFamily {
        match self {
            Rule::Scale(_) => RuleFamily::A,
            Rule::Add => RuleFamily::B,
            Rule::Shift | Rule::Prepend(_) => RuleFamily::C,
            Rule::Comm { .. } => RuleFamily::Comm,
            Rule::Assoc { .. } => RuleFamily::Assoc,
            Rule::Dilute(_) => RuleFamily::Dilute,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Rule::Add => 2,
            _ => 1,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Rule::Scale(k) => format!("A-scale[{k}]"),
            Rule::Add => "B-add".into(),
            Rule::Shift => "C-shift".into(),
            Rule::Prepend(q) => format!("C-prepend[{q}]"),
            Rule::Comm { offset: 0, every: 1 } => "opt-Comm".into(),
            Rule::Comm { offset, every } => format!("opt-Comm[{offset},{every}]"),
            Rule::Assoc { offset } => format!("opt-Assoc[{offset}]"),
            Rule::Dilute(mask) => format!("opt-Dilute[{}]", mask.label()),
        }
    }
}

/// Applies one rule to its premises, returning the normalized conclusion.
pub fn apply_rule(
    rule: &Rule,
    premises: &[(&CanonicalSeq, &AffineValue)],
    rules: &RuleSet,
) -> Result<(CanonicalSeq, AffineValue), AxiomError> {
    if !rules.allows(rule.family()) {
        return Err(AxiomError::RuleDisabled(rule.tag()));
    }
    if premises.len() != rule.arity() {
        return Err(AxiomError::ArityMismatch {
            rule: rule.tag(),
            expected: rule.arity(),
            got: premises.len(),
        });
    }
    let (seq, value) = premises[0];
    Ok(match rule {
        Rule::Scale(k) => (seq.scale(k), value.scale(k)),
        Rule::Add => {
            let (seq2, value2) = premises[1];
            (seq.add(seq2), value.add(value2))
        }
        Rule::Shift => (seq.shift(), value.add_constant(&-seq.term(0))),
        Rule::Prepend(q) => (seq.prepend(q.clone()), value.add_constant(q)),
        Rule::Comm { offset, every } => (seq.swap_pairs(*offset, *every), value.clone()),
        Rule::Assoc { offset } => (seq.associate_pairs(*offset), value.clone()),
        Rule::Dilute(mask) => (seq.dilute(*mask), value.clone()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Hypothesis,
    Derived { rule: Rule, parents: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Judgment {
    pub id: usize,
    pub seq: CanonicalSeq,
    pub value: AffineValue,
    pub provenance: Provenance,
    pub depth: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SearchStats {
    pub judgments: usize,
    pub depth_reached: u32,
    pub pruned_by_size: usize,
    pub budget_exceeded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// One sequence, two values that cannot both hold.
    Contradiction {
        seq: CanonicalSeq,
        first: AffineValue,
        second: AffineValue,
        judgments: (usize, usize),
    },
    /// Two values with different symbol coefficients fix `s`.
    Determination {
        seq: CanonicalSeq,
        value: BigRational,
        judgments: (usize, usize),
    },
    Exhausted,
}

impl Outcome {
    pub fn is_contradiction(&self) -> bool {
        matches!(self, Outcome::Contradiction { .. })
    }

    pub fn render(&self, symbol: char, determined: Option<&BigRational>) -> String {
        match self {
            Outcome::Contradiction {
                seq, first, second, ..
            } => {
                let mut line = format!(
                    "CONTRADICTION: {seq} = {} and = {}",
                    first.display(symbol),
                    second.display(symbol)
                );
                if !(first.is_constant() && second.is_constant()) {
                    if let Some(s) = determined {
                        line.push_str(&format!(
                            " (with {symbol} = {s}: {} vs {})",
                            first.eval(s),
                            second.eval(s)
                        ));
                    }
                }
                line
            }
            Outcome::Determination { value, .. } => format!("DETERMINATION: {symbol} = {value}"),
            Outcome::Exhausted => "EXHAUSTED: no contradiction derived".into(),
        }
    }
}

/// Ordered record of a derivation run.
#[derive(Debug, Clone)]
pub struct DerivationTrace {
    pub symbol: char,
    pub judgments: Vec<Judgment>,
    /// Determinations and contradictions in the order they arose, with the
    /// id of the judgment that triggered each.
    pub events: Vec<(usize, Outcome)>,
    pub outcome: Outcome,
    pub notes: Vec<String>,
    pub stats: SearchStats,
}

impl DerivationTrace {
    pub fn determination(&self) -> Option<&BigRational> {
        self.events.iter().find_map(|(_, e)| match e {
            Outcome::Determination { value, .. } => Some(value),
            _ => None,
        })
    }

    pub fn contains(&self, seq: &CanonicalSeq, value: &AffineValue) -> bool {
        self.judgments
            .iter()
            .any(|j| &j.seq == seq && &j.value == value)
    }

    pub fn step_line(&self, j: &Judgment) -> String {
        let head = match &j.provenance {
            Provenance::Hypothesis => "hypothesis".to_string(),
            Provenance::Derived { rule, parents } => {
                let ps: Vec<String> = parents.iter().map(|p| p.to_string()).collect();
                format!("{}({})", rule.tag(), ps.join(","))
            }
        };
        format!(
            "[{}] {head}: {} = {}",
            j.id,
            j.seq,
            j.value.display(self.symbol)
        )
    }

    /// Re-derives every judgment from its provenance and checks it matches.
    pub fn replays(&self) -> bool {
        let all = RuleSet::core()
            .with(RuleFamily::Comm)
            .with(RuleFamily::Assoc)
            .with(RuleFamily::Dilute);
        self.judgments.iter().all(|j| match &j.provenance {
            Provenance::Hypothesis => true,
            Provenance::Derived { rule, parents } => {
                let premises: Vec<_> = parents
                    .iter()
                    .map(|&p| (&self.judgments[p].seq, &self.judgments[p].value))
                    .collect();
                apply_rule(rule, &premises, &all)
                    .map(|(seq, value)| seq == j.seq && value == j.value)
                    .unwrap_or(false)
            }
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Step {
            id: usize,
            rule: String,
            parents: Vec<usize>,
            seq: String,
            value: String,
            c0: String,
            c1: String,
        }
        let steps: Vec<Step> = self
            .judgments
            .iter()
            .map(|j| {
                let (rule, parents) = match &j.provenance {
                    Provenance::Hypothesis => ("hypothesis".to_string(), vec![]),
                    Provenance::Derived { rule, parents } => (rule.tag(), parents.clone()),
                };
                Step {
                    id: j.id,
                    rule,
                    parents,
                    seq: j.seq.to_string(),
                    value: j.value.display(self.symbol),
                    c0: j.value.c0.to_string(),
                    c1: j.value.c1.to_string(),
                }
            })
            .collect();
        let events: Vec<serde_json::Value> = self
            .events
            .iter()
            .map(|(at, e)| serde_json::json!({"at": at, "event": self.outcome_json(e)}))
            .collect();
        serde_json::json!({
            "symbol": self.symbol.to_string(),
            "steps": steps,
            "events": events,
            "outcome": self.outcome_json(&self.outcome),
            "notes": self.notes,
            "stats": self.stats,
        })
    }

    fn outcome_json(&self, o: &Outcome) -> serde_json::Value {
        match o {
            Outcome::Contradiction {
                seq,
                first,
                second,
                judgments,
            } => serde_json::json!({
                "kind": "Contradiction",
                "seq": seq.to_string(),
                "first": first.display(self.symbol),
                "second": second.display(self.symbol),
                "judgments": [judgments.0, judgments.1],
            }),
            Outcome::Determination {
                seq,
                value,
                judgments,
            } => serde_json::json!({
                "kind": "Determination",
                "seq": seq.to_string(),
                "value": value.to_string(),
                "judgments": [judgments.0, judgments.1],
            }),
            Outcome::Exhausted => serde_json::json!({"kind": "Exhausted"}),
        }
    }
}

impl fmt::Display for DerivationTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in &self.judgments {
            writeln!(f, "{}", self.step_line(j))?;
            for (at, e) in &self.events {
                if *at == j.id {
                    writeln!(f, "    => {}", e.render(self.symbol, self.determination()))?;
                }
            }
        }
        for note in &self.notes {
            writeln!(f, "note: {note}")?;
        }
        write!(f, "{}", self.outcome.render(self.symbol, self.determination()))
    }
}

/// Judgment store for one run. Keyed by normal form.
struct Store {
    symbol: char,
    judgments: Vec<Judgment>,
    by_seq: HashMap<CanonicalSeq, usize>,
    seen: HashSet<(CanonicalSeq, AffineValue)>,
    determined: Option<BigRational>,
    events: Vec<(usize, Outcome)>,
}

impl Store {
    fn new(symbol: char) -> Self {
        Store {
            symbol,
            judgments: Vec::new(),
            by_seq: HashMap::new(),
            seen: HashSet::new(),
            determined: None,
            events: Vec::new(),
        }
    }

    fn first_contradiction(&self) -> Option<&Outcome> {
        self.events
            .iter()
            .map(|(_, e)| e)
            .find(|e| e.is_contradiction())
    }

    /// Records a judgment and compares it with the first judgment on the
    /// same sequence. Returns the new id, or `None` for an exact duplicate
    /// when `dedup` is set.
    fn insert(
        &mut self,
        seq: CanonicalSeq,
        value: AffineValue,
        provenance: Provenance,
        depth: u32,
        dedup: bool,
    ) -> Option<usize> {
        let key = (seq.clone(), value.clone());
        if dedup && self.seen.contains(&key) {
            return None;
        }
        self.seen.insert(key);
        let id = self.judgments.len();
        if let Some(&prior) = self.by_seq.get(&seq) {
            let old = self.judgments[prior].value.clone();
            if let Some(event) = self.compare(&seq, &old, &value, (prior, id)) {
                self.events.push((id, event));
            }
        } else {
            self.by_seq.insert(seq.clone(), id);
        }
        self.judgments.push(Judgment {
            id,
            seq,
            value,
            provenance,
            depth,
        });
        Some(id)
    }

    fn compare(
        &mut self,
        seq: &CanonicalSeq,
        old: &AffineValue,
        new: &AffineValue,
        ids: (usize, usize),
    ) -> Option<Outcome> {
        if old == new {
            return None;
        }
        let contradiction = || Outcome::Contradiction {
            seq: seq.clone(),
            first: old.clone(),
            second: new.clone(),
            judgments: ids,
        };
        if old.c1 == new.c1 {
            return Some(contradiction());
        }
        match &self.determined {
            Some(s) if old.eval(s) == new.eval(s) => None,
            Some(_) => Some(contradiction()),
            None => {
                let s = (&new.c0 - &old.c0) / (&old.c1 - &new.c1);
                self.determined = Some(s.clone());
                Some(Outcome::Determination {
                    seq: seq.clone(),
                    value: s,
                    judgments: ids,
                })
            }
        }
    }

    fn into_trace(self, outcome: Outcome, notes: Vec<String>, stats: SearchStats) -> DerivationTrace {
        DerivationTrace {
            symbol: self.symbol,
            judgments: self.judgments,
            events: self.events,
            outcome,
            notes,
            stats,
        }
    }
}

/// The replayable proofs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Script {
    /// A finite value for `1 + 1 + 1 + ...` forces `0 + 0 + ... = 1` and `= -1`.
    Ones,
    /// A finite value for `1 + 2 + 3 + ...` forces `1 + 1 + ... = 0, -1, -2, ...`.
    Naturals,
    /// Pair swaps on Grandi's series force `r = 1/2` and `r = -r`.
    GrandiSwap,
}

impl FromStr for Script {
    type Err = AxiomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "theorem1" => Ok(Script::Ones),
            "theorem2" => Ok(Script::Naturals),
            "lemma-commutative" | "lemma_commutative" => Ok(Script::GrandiSwap),
            other => Err(AxiomError::UnknownScript(other.to_string())),
        }
    }
}

impl Script {
    pub fn name(&self) -> &'static str {
        match self {
            Script::Ones => "theorem1",
            Script::Naturals => "theorem2",
            Script::GrandiSwap => "lemma-commutative",
        }
    }

    pub fn default_rules(&self) -> RuleSet {
        match self {
            Script::Ones | Script::Naturals => RuleSet::core(),
            Script::GrandiSwap => RuleSet::core().with(RuleFamily::Comm),
        }
    }

    fn symbol(&self) -> char {
        match self {
            Script::GrandiSwap => 'r',
            _ => 's',
        }
    }

    fn hypothesis(&self) -> CanonicalSeq {
        match self {
            Script::Ones => CanonicalSeq::ones(),
            Script::Naturals => CanonicalSeq::naturals(),
            Script::GrandiSwap => CanonicalSeq::grandi(),
        }
    }

    /// Rule applications after the hypothesis (judgment 0), each naming
    /// its premises by judgment id.
    fn steps(&self) -> Vec<(Rule, Vec<usize>)> {
        match self {
            Script::Ones => vec![
                (Rule::Prepend(int(0)), vec![0]), // 1: {0,1,1,...} = s
                (Rule::Scale(int(-1)), vec![1]),  // 2: {0,-1,-1,...} = -s
                (Rule::Add, vec![0, 2]),          // 3: {1,0,0,...} = 0
                (Rule::Scale(int(-1)), vec![0]),  // 4: {-1,-1,-1,...} = -s
                (Rule::Add, vec![4, 1]),          // 5: {-1,0,0,...} = 0
                (Rule::Shift, vec![5]),           // 6: {0,0,0,...} = 1
                (Rule::Shift, vec![3]),           // 7: {0,0,0,...} = -1
            ],
            Script::Naturals => vec![
                (Rule::Prepend(int(0)), vec![0]), // 1: {0,1,2,...} = s
                (Rule::Scale(int(-1)), vec![1]),  // 2: {0,-1,-2,...} = -s
                (Rule::Add, vec![0, 2]),          // 3: {1,1,1,...} = 0
                (Rule::Shift, vec![3]),           // 4..8: {1,1,1,...} = -N
                (Rule::Shift, vec![4]),
                (Rule::Shift, vec![5]),
                (Rule::Shift, vec![6]),
                (Rule::Shift, vec![7]),
            ],
            Script::GrandiSwap => vec![
                (Rule::Scale(int(-1)), vec![0]),          // 1: {-1,1,...} = -r
                (Rule::Prepend(int(1)), vec![1]),         // 2: {1,-1,...} = 1 - r
                (Rule::Comm { offset: 0, every: 1 }, vec![0]), // 3: {-1,1,...} = r
            ],
        }
    }
}

/// Replays a proof step by step. Every step is recorded even after a clash;
/// a step whose rule is disabled ends the script.
pub fn run_script(script: Script, rules: &RuleSet) -> DerivationTrace {
    let mut store = Store::new(script.symbol());
    let mut notes = Vec::new();
    store.insert(
        script.hypothesis(),
        AffineValue::symbol(),
        Provenance::Hypothesis,
        0,
        false,
    );
    for (k, (rule, parents)) in script.steps().into_iter().enumerate() {
        let premises: Vec<_> = parents
            .iter()
            .map(|&p| (&store.judgments[p].seq, &store.judgments[p].value))
            .collect();
        match apply_rule(&rule, &premises, rules) {
            Ok((seq, value)) => {
                let depth = parents
                    .iter()
                    .map(|&p| store.judgments[p].depth)
                    .max()
                    .unwrap_or(0)
                    + 1;
                store.insert(
                    seq,
                    value,
                    Provenance::Derived { rule, parents },
                    depth,
                    false,
                );
            }
            Err(e) => {
                notes.push(format!("step {} not applied: {e}; script stops", k + 1));
                break;
            }
        }
    }
    let outcome = store
        .first_contradiction()
        .cloned()
        .unwrap_or(Outcome::Exhausted);
    let stats = SearchStats {
        judgments: store.judgments.len(),
        depth_reached: store.judgments.iter().map(|j| j.depth).max().unwrap_or(0),
        ..SearchStats::default()
    };
    store.into_trace(outcome, notes, stats)
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub rules: RuleSet,
    pub max_depth: u32,
    pub max_seq_size: usize,
    pub max_judgments: usize,
    /// Factors tried by rule A.
    pub scale_factors: Vec<BigRational>,
    /// First terms tried by C-prepend.
    pub prepend_values: Vec<BigRational>,
    pub symbol: char,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            rules: RuleSet::core(),
            max_depth: DEFAULT_SEARCH_DEPTH,
            max_seq_size: DEFAULT_MAX_SEQ_SIZE,
            max_judgments: DEFAULT_MAX_JUDGMENTS,
            scale_factors: vec![int(-1)],
            prepend_values: vec![int(0)],
            symbol: 's',
        }
    }
}

impl SearchConfig {
    fn unary_rules(&self) -> Vec<Rule> {
        let mut out = Vec::new();
        if self.rules.allows(RuleFamily::C) {
            out.push(Rule::Shift);
            out.extend(self.prepend_values.iter().cloned().map(Rule::Prepend));
        }
        if self.rules.allows(RuleFamily::A) {
            out.extend(self.scale_factors.iter().cloned().map(Rule::Scale));
        }
        if self.rules.allows(RuleFamily::Comm) {
            out.push(Rule::Comm { offset: 0, every: 1 });
        }
        if self.rules.allows(RuleFamily::Assoc) {
            out.push(Rule::Assoc { offset: 0 });
            out.push(Rule::Assoc { offset: 1 });
        }
        if self.rules.allows(RuleFamily::Dilute) {
            out.push(Rule::Dilute(DilutionMask::BEFORE_EACH));
        }
        out
    }
}

/// Breadth-first closure of the hypotheses under the enabled rules. Stops
/// at the first contradiction. Without one, the outcome is the first
/// determination if any, otherwise `Exhausted`.
pub fn search_contradiction(
    hypotheses: &[(CanonicalSeq, AffineValue)],
    config: &SearchConfig,
) -> Result<DerivationTrace, AxiomError> {
    if config.max_depth > MAX_SEARCH_DEPTH {
        return Err(AxiomError::DepthTooLarge(config.max_depth));
    }
    let mut store = Store::new(config.symbol);
    let mut stats = SearchStats::default();
    for (seq, value) in hypotheses {
        store.insert(seq.clone(), value.clone(), Provenance::Hypothesis, 0, true);
    }
    let unary = config.unary_rules();
    let mut frontier: Vec<usize> = (0..store.judgments.len()).collect();

    'levels: for depth in 1..=config.max_depth {
        if frontier.is_empty() {
            break;
        }
        stats.depth_reached = depth;
        let known = store.judgments.len();
        let mut candidates: Vec<(Rule, Vec<usize>)> = Vec::new();
        for &i in &frontier {
            candidates.extend(unary.iter().map(|r| (r.clone(), vec![i])));
        }
        if config.rules.allows(RuleFamily::B) {
            let in_frontier: HashSet<usize> = frontier.iter().copied().collect();
            for &i in &frontier {
                for j in 0..known {
                    if in_frontier.contains(&j) && j < i {
                        continue;
                    }
                    candidates.push((Rule::Add, vec![i, j]));
                }
            }
        }
        let mut next = Vec::new();
        for (rule, parents) in candidates {
            let premises: Vec<_> = parents
                .iter()
                .map(|&p| (&store.judgments[p].seq, &store.judgments[p].value))
                .collect();
            let (seq, value) = apply_rule(&rule, &premises, &config.rules)?;
            if seq.size() > config.max_seq_size {
                stats.pruned_by_size += 1;
                continue;
            }
            if let Some(id) = store.insert(
                seq,
                value,
                Provenance::Derived { rule, parents },
                depth,
                true,
            ) {
                next.push(id);
                if store.first_contradiction().is_some() {
                    break 'levels;
                }
                if store.judgments.len() >= config.max_judgments {
                    stats.budget_exceeded = true;
                    break 'levels;
                }
            }
        }
        frontier = next;
    }
    stats.judgments = store.judgments.len();
    let outcome = store
        .first_contradiction()
        .cloned()
        .or_else(|| store.events.first().map(|(_, e)| e.clone()))
        .unwrap_or(Outcome::Exhausted);
    let mut notes = Vec::new();
    if stats.budget_exceeded {
        notes.push(format!(
            "judgment budget of {} exceeded",
            config.max_judgments
        ));
    }
    Ok(store.into_trace(outcome, notes, stats))
}

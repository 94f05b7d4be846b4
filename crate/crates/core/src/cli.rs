//! Command-line front end.
//!
//! Exit codes: 0 for any completed run (an indeterminate verdict or a found
//! contradiction is a result), 1 for parse and usage errors, 2 when
//! evaluation itself fails.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;

use crate::axioms::{run_script, search_contradiction, RuleSet, Script, SearchConfig, DEFAULT_SEARCH_DEPTH};
use crate::dsl::{eval_statement, parse_expr, parse_hypothesis, Settings};
use crate::methods::{cesaro_means, cesaro_means_exact, continuation_ambiguity_report, MethodId};
use crate::regularity::{default_corpus, full_audit, parse_corpus};
use crate::series::{partial_sums, DEFAULT_EXACT_PREFIX};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_EVAL: i32 = 2;

pub const BUDGET_ENV: &str = "SUMMA_DEFAULT_BUDGET";
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Term budget from the environment, falling back to 10^6.
pub fn default_budget() -> usize {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&b: &usize| b > 0)
        .unwrap_or(DEFAULT_BUDGET)
}

#[derive(Debug, Parser)]
#[command(name = "summa", version, about = "Summation laboratory for divergent series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct Numerics {
    /// Term budget (defaults to $SUMMA_DEFAULT_BUDGET or 1000000).
    #[arg(long = "terms")]
    terms: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate an expression such as `cesaro(grandi)`.
    Eval {
        expr: String,
        #[command(flatten)]
        numerics: Numerics,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Replay a proof script or search for a contradiction.
    Audit {
        #[command(subcommand)]
        target: AuditTarget,
    },
    /// Regularity and total-regularity audit of one or all methods.
    Regularity {
        #[arg(long)]
        method: Option<String>,
        /// Corpus table, one `series = known_sum` per line.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long = "terms")]
        terms: Option<usize>,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print n, a_n, S_n and the Cesàro mean for the first terms.
    Table {
        expr: String,
        #[arg(long = "terms")]
        terms: usize,
    },
    /// Compare the power-series and zeta readings of 1 + 1 + 1 + ...
    Ambiguity {
        #[command(flatten)]
        numerics: Numerics,
    },
}

#[derive(Debug, Args)]
struct ScriptArgs {
    /// Comma-separated rule families (A,B,C,comm,assoc,dilute).
    #[arg(long)]
    rules: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum AuditTarget {
    /// Constant series 1 + 1 + 1 + ... has no finite value.
    #[command(name = "theorem1")]
    Ones(ScriptArgs),
    /// 1 + 2 + 3 + ... has no finite value.
    #[command(name = "theorem2")]
    Naturals(ScriptArgs),
    /// Pair swaps on Grandi's series, needs the comm rule.
    #[command(name = "lemma-commutative")]
    GrandiSwap(ScriptArgs),
    /// Breadth-first search from hypotheses `SERIES=VALUE`.
    Search {
        #[arg(long = "hypothesis", required = true)]
        hypotheses: Vec<String>,
        #[arg(long, default_value = "A,B,C")]
        rules: String,
        #[arg(long, default_value_t = DEFAULT_SEARCH_DEPTH)]
        depth: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(Failure { code, message }) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

fn eval_failure(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_EVAL,
        message: message.to_string(),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    writeln!(out, "{text}").map_err(eval_failure)
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Eval {
            expr,
            numerics,
            format,
        } => {
            let ast = parse_expr(&expr).map_err(usage)?;
            let settings = Settings {
                tol: numerics.tol,
                budget: numerics.terms.unwrap_or_else(default_budget),
            };
            let report = eval_statement(&ast, settings).map_err(eval_failure)?;
            match format {
                Format::Text => emit(out, &report.to_string()),
                Format::Json => emit(out, &report.to_json().to_string()),
            }
        }
        Command::Audit { target } => audit(target, out),
        Command::Regularity {
            method,
            corpus,
            terms,
            tol,
            format,
        } => {
            let methods = match method {
                Some(m) => vec![m.parse::<MethodId>().map_err(usage)?],
                None => MethodId::ALL.to_vec(),
            };
            let corpus = match corpus {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
                    parse_corpus(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
                }
                None => default_corpus(),
            };
            let budget = terms.unwrap_or_else(default_budget);
            let reports: Vec<_> = methods
                .into_iter()
                .map(|m| full_audit(m, &corpus, tol, budget))
                .collect();
            match format {
                Format::Text => {
                    for r in &reports {
                        emit(out, &r.to_string())?;
                    }
                    Ok(())
                }
                Format::Json => emit(
                    out,
                    &serde_json::to_string(&reports).map_err(eval_failure)?,
                ),
            }
        }
        Command::Table { expr, terms } => {
            let ast = parse_expr(&expr).map_err(usage)?;
            let (_, body) = ast.split_method();
            let series = body.build_series(default_budget() as u64).map_err(eval_failure)?;
            emit(out, &table(&series, terms))
        }
        Command::Ambiguity { numerics } => {
            let report = continuation_ambiguity_report(
                numerics.tol,
                numerics.terms.unwrap_or_else(default_budget),
            );
            emit(out, &report.to_string())
        }
    }
}

fn audit(target: AuditTarget, out: &mut dyn Write) -> Result<(), Failure> {
    let (trace, format) = match target {
        AuditTarget::Search {
            hypotheses,
            rules,
            depth,
            format,
        } => {
            let rules: RuleSet = rules.parse().map_err(usage)?;
            let mut symbol = None;
            let mut parsed = Vec::new();
            for h in &hypotheses {
                let (seq, value, sym) = parse_hypothesis(h).map_err(|e| usage(format!("hypothesis `{h}`: {e}")))?;
                symbol = symbol.or(sym);
                parsed.push((seq, value));
            }
            let config = SearchConfig {
                rules,
                max_depth: depth,
                symbol: symbol.unwrap_or('s'),
                ..SearchConfig::default()
            };
            (search_contradiction(&parsed, &config).map_err(usage)?, format)
        }
        AuditTarget::Ones(a) => script(Script::Ones, a)?,
        AuditTarget::Naturals(a) => script(Script::Naturals, a)?,
        AuditTarget::GrandiSwap(a) => script(Script::GrandiSwap, a)?,
    };
    match format {
        Format::Text => emit(out, &trace.to_string()),
        Format::Json => emit(out, &trace.to_json().to_string()),
    }
}

fn script(s: Script, args: ScriptArgs) -> Result<(crate::axioms::DerivationTrace, Format), Failure> {
    let rules = match args.rules {
        Some(r) => r.parse().map_err(usage)?,
        None => s.default_rules(),
    };
    Ok((run_script(s, &rules), args.format))
}

fn table(series: &crate::series::Series, terms: usize) -> String {
    let ps = partial_sums(series, terms);
    let exact_len = terms.min(DEFAULT_EXACT_PREFIX);
    let z = cesaro_means(series, terms);
    let z_exact: Vec<BigRational> = cesaro_means_exact(series, exact_len);
    let mut lines = vec![format!("{:>8}  {:>20}  {:>20}  {:>20}", "n", "a_n", "S_n", "Z_n")];
    for n in 0..terms {
        let row = if n < exact_len {
            [
                series.term(n as u64).to_string(),
                ps.exact_prefix()[n].to_string(),
                z_exact[n].to_string(),
            ]
        } else {
            [
                series.term_f64(n as u64).to_string(),
                ps.values()[n].to_string(),
                z[n].to_string(),
            ]
        };
        lines.push(format!("{n:>8}  {:>20}  {:>20}  {:>20}", row[0], row[1], row[2]));
    }
    lines.join("\n")
}

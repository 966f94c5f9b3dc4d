//! Command-line front end.

mod spec;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use serde_json::json;

use crate::engine::{monomialize_with, verify_monomial, EngineError, Options};
use crate::expr::{eval_value, parse_lexvec};
use crate::lexgroup::{echelon_reduce, LexVec, RowOp};

pub use spec::{SpecError, SpecFile};

#[derive(Parser, Debug)]
#[command(name = "valmono", version, about = "Monomialization of rank-m discrete valuations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Echelon-reduce value rows and read the reduction as monoidal maps.
    Basis {
        /// A rows file (one tuple per line) or a specification file.
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Value of a Laurent expression in the variables.
    Value {
        file: PathBuf,
        expr: String,
        #[command(flatten)]
        budgets: BudgetArgs,
        #[arg(long)]
        json: bool,
    },
    /// Run the monomialization.
    Monomialize {
        file: PathBuf,
        #[command(flatten)]
        budgets: BudgetArgs,
        /// Only finite subtractions; families are never used as limits.
        #[arg(long)]
        no_limits: bool,
        #[arg(long)]
        json: bool,
    },
    /// Monomialize, then compare random polynomials against the monomial valuation.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        budgets: BudgetArgs,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug, Default)]
pub struct BudgetArgs {
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub max_terms: Option<usize>,
    #[arg(long)]
    pub trunc_degree: Option<u32>,
    /// Tuple such as `(1,0,0)`.
    #[arg(long)]
    pub lex_ceiling: Option<String>,
}

/// What a command printed and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, stderr: String::new(), code: 0 }
    }

    fn fail(code: i32, stderr: String) -> Self {
        Outcome { stdout: String::new(), stderr, code }
    }
}

pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                Outcome::ok(text)
            } else {
                Outcome::fail(code, text)
            }
        }
    }
}

pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Basis { file, json } => cmd_basis(&file, json),
        Command::Value { file, expr, budgets, json } => cmd_value(&file, &expr, &budgets, json),
        Command::Monomialize { file, budgets, no_limits, json } => cmd_monomialize(&file, &budgets, no_limits, json),
        Command::Verify { file, budgets, count, seed, json } => cmd_verify(&file, &budgets, count, seed, json),
    }
}

fn read(path: &Path) -> Result<String, Outcome> {
    std::fs::read_to_string(path).map_err(|e| Outcome::fail(2, format!("cannot read {}: {e}\n", path.display())))
}

fn load(path: &Path, over: &BudgetArgs) -> Result<SpecFile, Outcome> {
    let text = read(path)?;
    let mut spec = SpecFile::parse(&text).map_err(|e| Outcome::fail(2, format!("{}: {e}\n", path.display())))?;
    if let Some(x) = over.max_steps {
        spec.budgets.max_steps = x;
    }
    if let Some(x) = over.max_terms {
        spec.budgets.max_terms = x;
    }
    if let Some(x) = over.trunc_degree {
        spec.budgets.trunc_degree = x;
    }
    if let Some(c) = &over.lex_ceiling {
        let v = parse_lexvec(c, spec.rank).map_err(|e| Outcome::fail(2, format!("--lex-ceiling: {e}\n")))?;
        spec.budgets.lex_ceiling = Some(v);
    }
    Ok(spec)
}

fn engine_failure(e: &EngineError, json: bool) -> Outcome {
    if !json {
        return Outcome::fail(e.exit_code(), format!("error: {e}\n"));
    }
    let kind = match e {
        EngineError::Inconclusive { .. } => "inconclusive",
        EngineError::Purity { .. } => "purity",
        EngineError::Dimension(_) => "dimension",
        EngineError::InvalidSpec(_) => "invalid",
        EngineError::Internal(_) => "internal",
    };
    let mut body = json!({"error": kind, "message": e.to_string()});
    if let EngineError::Inconclusive { prefix, slot, .. } = e {
        body["slot"] = json!(slot);
        body["prefix"] = json!(prefix.iter().map(|p| p.to_string()).collect::<Vec<_>>());
    }
    Outcome { stdout: format!("{}\n", pretty(&body)), stderr: format!("error: {e}\n"), code: e.exit_code() }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn looks_like_spec(text: &str) -> bool {
    text.lines().any(|l| {
        let w = l.split('#').next().unwrap_or("").split_whitespace().next();
        matches!(w, Some("field" | "vars" | "image" | "rank"))
    })
}

fn parse_rows(text: &str) -> Result<Vec<LexVec<BigInt>>, SpecError> {
    let mut rows = Vec::new();
    let mut width = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let t = raw.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        let inner = t.strip_prefix('(').and_then(|x| x.strip_suffix(')')).unwrap_or(t);
        let coords: Vec<BigInt> = inner
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|x| !x.is_empty())
            .map(|x| x.parse::<BigInt>())
            .collect::<Result<_, _>>()
            .map_err(|_| SpecError { line, msg: format!("malformed row '{t}'") })?;
        if coords.is_empty() {
            return Err(SpecError { line, msg: "empty row".into() });
        }
        if *width.get_or_insert(coords.len()) != coords.len() {
            return Err(SpecError { line, msg: format!("row has {} entries, expected {}", coords.len(), width.unwrap()) });
        }
        let row = LexVec::new(coords);
        if !row.is_positive() {
            return Err(SpecError { line, msg: format!("row {row} is not lexicographically positive") });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(SpecError { line: text.lines().count().max(1), msg: "no rows".into() });
    }
    Ok(rows)
}

fn cmd_basis(path: &Path, json: bool) -> Outcome {
    let text = match read(path) {
        Ok(t) => t,
        Err(o) => return o,
    };
    let (rows, names) = if looks_like_spec(&text) {
        let spec = match SpecFile::parse(&text) {
            Ok(s) => s.valuation(),
            Err(e) => return Outcome::fail(2, format!("{}: {e}\n", path.display())),
        };
        let budget = spec.budgets.stream_budget();
        let mut rows = Vec::new();
        for (j, img) in spec.images.iter().enumerate() {
            match img.nu_t(&budget) {
                Ok(Some(v)) if v.is_positive() => rows.push(v),
                Ok(_) => return Outcome::fail(2, format!("{}: value of {} is not positive\n", path.display(), spec.vars[j])),
                Err(e) => return engine_failure(&EngineError::from_hahn(&spec.vars[j], e), json),
            }
        }
        (rows, spec.vars)
    } else {
        match parse_rows(&text) {
            Ok(r) => {
                let n = r.len();
                (r, (1..=n).map(|i| format!("X{i}")).collect())
            }
            Err(e) => return Outcome::fail(2, format!("{}: {e}\n", path.display())),
        }
    };
    let (basis, log) = match echelon_reduce(&rows) {
        Ok(x) => x,
        Err(e) => return Outcome::fail(2, format!("{}: {e}\n", path.display())),
    };
    let maps: Vec<String> = log
        .ops
        .iter()
        .map(|op| match op {
            RowOp::AddRow { target, source, factor } => {
                let q = -factor;
                let pow = if q == BigInt::from(1) { String::new() } else { format!("^{q}") };
                format!("{} -> Y{}*Y{}{}", names[*target], target + 1, source + 1, pow)
            }
            other => other.to_string(),
        })
        .collect();
    if json {
        let body = json!({
            "rows": rows.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            "basis": basis.rows.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            "pivots": basis.pivots.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "pivot_columns": basis.pivot_cols,
            "operations": log.ops.iter().map(|o| o.to_string()).collect::<Vec<_>>(),
            "monoidal": maps,
        });
        return Outcome::ok(format!("{}\n", pretty(&body)));
    }
    let mut out = String::new();
    out.push_str("basis:\n");
    for (r, p) in basis.rows.iter().zip(&basis.pivots) {
        out.push_str(&format!("  {r}  pivot {p}\n"));
    }
    if maps.is_empty() {
        out.push_str("already a basis\n");
    } else {
        out.push_str("monoidal transformations:\n");
        for (op, m) in log.ops.iter().zip(&maps) {
            out.push_str(&format!("  {m}    [{op}]\n"));
        }
    }
    Outcome::ok(out)
}

fn cmd_value(path: &Path, src: &str, over: &BudgetArgs, json: bool) -> Outcome {
    let spec = match load(path, over) {
        Ok(s) => s.valuation(),
        Err(o) => return o,
    };
    let budget = spec.budgets.stream_budget();
    let stream = match eval_value(&spec.ctx(), &spec.vars, &spec.images, spec.rank, src, &budget) {
        Ok(s) => s,
        Err(crate::expr::ExprError::Hahn(e)) => return engine_failure(&EngineError::from_hahn("value", e), json),
        Err(e) => return Outcome::fail(2, format!("expression: {e}\n")),
    };
    match stream.nu_t(&budget) {
        Ok(v) => {
            let text = v.map_or("infinity".to_string(), |x| x.to_string());
            if json {
                Outcome::ok(format!("{}\n", pretty(&json!({"expression": src, "value": text}))))
            } else {
                Outcome::ok(format!("{text}\n"))
            }
        }
        Err(e) => {
            let msg = format!("inconclusive: {e}\n");
            if json {
                Outcome { stdout: format!("{}\n", pretty(&json!({"expression": src, "value": "inconclusive"}))), stderr: msg, code: 3 }
            } else {
                Outcome { stdout: "inconclusive\n".into(), stderr: msg, code: 3 }
            }
        }
    }
}

fn cmd_monomialize(path: &Path, over: &BudgetArgs, no_limits: bool, json: bool) -> Outcome {
    let spec = match load(path, over) {
        Ok(s) => s.valuation(),
        Err(o) => return o,
    };
    let opts = Options { use_limits: !no_limits };
    match monomialize_with(&spec, &opts) {
        Ok(res) if json => Outcome::ok(format!("{}\n", pretty(&res.to_json(&spec.budgets.stream_budget())))),
        Ok(res) => Outcome::ok(res.text()),
        Err(e) => engine_failure(&e, json),
    }
}

fn cmd_verify(path: &Path, over: &BudgetArgs, count: usize, seed: u64, json: bool) -> Outcome {
    let spec = match load(path, over) {
        Ok(s) => s.valuation(),
        Err(o) => return o,
    };
    let res = match monomialize_with(&spec, &Options::default()) {
        Ok(r) => r,
        Err(e) => return engine_failure(&e, json),
    };
    let report = match verify_monomial(&spec, &res, count, seed) {
        Ok(r) => r,
        Err(e) => return engine_failure(&e, json),
    };
    let code = if report.passed() { 0 } else { 1 };
    let stdout = if json {
        let mism: Vec<_> = report
            .mismatches
            .iter()
            .map(|m| {
                json!({
                    "polynomial": m.polynomial,
                    "expected": m.expected.as_ref().map(|x| x.to_string()),
                    "found": m.found.as_ref().map(|x| x.to_string()),
                })
            })
            .collect();
        format!(
            "{}\n",
            pretty(&json!({"checked": report.checked, "skipped": report.skipped, "mismatches": mism, "passed": report.passed()}))
        )
    } else {
        let mut s = format!("checked {}, skipped {}, mismatches {}\n", report.checked, report.skipped, report.mismatches.len());
        for m in &report.mismatches {
            let show = |x: &Option<crate::hahn::Exp>| x.as_ref().map_or("infinity".to_string(), |v| v.to_string());
            s.push_str(&format!("  {}: expected {}, found {}\n", m.polynomial, show(&m.expected), show(&m.found)));
        }
        s
    };
    Outcome { stdout, stderr: String::new(), code }
}

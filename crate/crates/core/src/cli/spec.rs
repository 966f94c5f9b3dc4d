//! Text format for valuation specifications.
//!
//! ```text
//! # comment
//! field prime 5
//! rank 3
//! vars X1 X2 X3 X4
//! symbols u3
//! image X1 = terms[(0,0,1): 1]
//! image X2 = family[start=(0,0,1), step=(0,0,1), coeff=i, i=1..inf] + terms[(0,1,0): 1]
//! budgets max_steps=64 max_terms=4096 trunc_degree=4
//! ```
//!
//! `field` is `rationals` or `prime p`. Every variable needs exactly one
//! `image` line. `symbols` and `budgets` are optional; `budgets` also takes
//! `lex_ceiling=(..)`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::coeff::{GroundField, SymbolTable};
use crate::engine::{Budgets, ValuationSpec};
use crate::expr::{parse_lexvec, TowerCtx};
use crate::hahn::HahnStream;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct SpecError {
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> SpecError {
    SpecError { line, msg: msg.into() }
}

/// A parsed specification file; image sources are kept verbatim.
#[derive(Clone, Debug)]
pub struct SpecFile {
    pub field: GroundField,
    pub rank: usize,
    pub vars: Vec<String>,
    pub symbols: Vec<String>,
    pub images: Vec<String>,
    pub budgets: Budgets,
    spec: ValuationSpec,
}

impl SpecFile {
    pub fn parse(src: &str) -> Result<SpecFile, SpecError> {
        let mut field = None;
        let mut rank = None;
        let mut vars: Option<(usize, Vec<String>)> = None;
        let mut symbols: Option<Vec<String>> = None;
        let mut images: Vec<(usize, String, String)> = Vec::new();
        let mut budgets = None;
        for (k, raw) in src.lines().enumerate() {
            let line = k + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let (key, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
            let rest = rest.trim();
            let dup = |seen: bool| if seen { Err(err(line, format!("duplicate '{key}' line"))) } else { Ok(()) };
            match key {
                "field" => {
                    dup(field.is_some())?;
                    field = Some(parse_field(rest).map_err(|m| err(line, m))?);
                }
                "rank" => {
                    dup(rank.is_some())?;
                    let m: usize = rest.parse().map_err(|_| err(line, format!("bad rank '{rest}'")))?;
                    if m == 0 {
                        return Err(err(line, "rank must be positive"));
                    }
                    rank = Some(m);
                }
                "vars" => {
                    dup(vars.is_some())?;
                    let names = names(rest, line)?;
                    if names.is_empty() {
                        return Err(err(line, "no variables"));
                    }
                    vars = Some((line, names));
                }
                "symbols" => {
                    dup(symbols.is_some())?;
                    symbols = Some(names(rest, line)?);
                }
                "image" => {
                    let (var, body) = rest.split_once('=').ok_or_else(|| err(line, "expected 'image <var> = <segments>'"))?;
                    images.push((line, var.trim().to_string(), body.trim().to_string()));
                }
                "budgets" => {
                    dup(budgets.is_some())?;
                    budgets = Some(rest.to_string());
                }
                other => return Err(err(line, format!("unknown key '{other}'"))),
            }
        }
        let last = src.lines().count().max(1);
        let field = field.ok_or_else(|| err(last, "missing 'field' line"))?;
        let rank = rank.ok_or_else(|| err(last, "missing 'rank' line"))?;
        let (vars_line, vars) = vars.ok_or_else(|| err(last, "missing 'vars' line"))?;
        let symbols = symbols.unwrap_or_default();
        for s in &symbols {
            if vars.contains(s) {
                return Err(err(last, format!("'{s}' is both a variable and a symbol")));
            }
        }
        let budgets = match budgets {
            Some(b) => parse_budgets(&b, rank).map_err(|m| err(last, m))?,
            None => Budgets::default(),
        };
        let table = Arc::new(SymbolTable::new(symbols.clone()));
        let ctx = TowerCtx::new(field, table.clone());
        let mut slots: Vec<Option<(String, HahnStream<_>)>> = vec![None; vars.len()];
        for (line, var, body) in images {
            let j = vars.iter().position(|v| *v == var).ok_or_else(|| err(line, format!("unknown variable '{var}'")))?;
            if slots[j].is_some() {
                return Err(err(line, format!("second image for '{var}'")));
            }
            let seg = ctx.parse_segments(rank, &body).map_err(|e| err(line, e.to_string()))?;
            slots[j] = Some((body, HahnStream::from_segments(seg)));
        }
        let mut sources = Vec::with_capacity(vars.len());
        let mut streams = Vec::with_capacity(vars.len());
        for (j, s) in slots.into_iter().enumerate() {
            let (src, stream) = s.ok_or_else(|| err(vars_line, format!("no image for '{}'", vars[j])))?;
            sources.push(src);
            streams.push(stream);
        }
        let spec = ValuationSpec {
            field,
            rank,
            vars: vars.clone(),
            symbols: table,
            images: streams,
            budgets: budgets.clone(),
        };
        spec.validate().map_err(|e| err(vars_line, e.to_string()))?;
        Ok(SpecFile { field, rank, vars, symbols, images: sources, budgets, spec })
    }

    /// The engine input, with the budgets currently held by this file.
    pub fn valuation(&self) -> ValuationSpec {
        ValuationSpec { budgets: self.budgets.clone(), ..self.spec.clone() }
    }
}

fn parse_field(s: &str) -> Result<GroundField, String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    match parts.as_slice() {
        ["rationals"] => Ok(GroundField::Rationals),
        ["prime", p] => {
            let p: u64 = p.parse().map_err(|_| format!("bad prime '{p}'"))?;
            GroundField::prime(p).map_err(|e| e.to_string())
        }
        _ => Err(format!("expected 'rationals' or 'prime <p>', found '{s}'")),
    }
}

fn names(s: &str, line: usize) -> Result<Vec<String>, SpecError> {
    let mut out: Vec<String> = Vec::new();
    for w in s.split_whitespace() {
        let ok = w.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && w.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && w != "i"
            && w != "t";
        if !ok {
            return Err(err(line, format!("bad name '{w}'")));
        }
        if out.iter().any(|x| x == w) {
            return Err(err(line, format!("name '{w}' repeated")));
        }
        out.push(w.to_string());
    }
    Ok(out)
}

fn parse_budgets(s: &str, rank: usize) -> Result<Budgets, String> {
    let mut b = Budgets::default();
    for item in s.split_whitespace() {
        let (k, v) = item.split_once('=').ok_or_else(|| format!("budget '{item}' lacks '='"))?;
        let int = |v: &str| v.parse::<usize>().map_err(|_| format!("bad value '{v}' for {k}"));
        match k {
            "max_steps" => b.max_steps = int(v)?,
            "max_terms" => b.max_terms = int(v)?,
            "trunc_degree" => b.trunc_degree = int(v)? as u32,
            "lex_ceiling" => b.lex_ceiling = Some(parse_lexvec(v, rank).map_err(|e| e.to_string())?),
            other => return Err(format!("unknown budget '{other}'")),
        }
    }
    Ok(b)
}

impl fmt::Display for SpecFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "field {}", self.field)?;
        writeln!(f, "rank {}", self.rank)?;
        writeln!(f, "vars {}", self.vars.join(" "))?;
        if !self.symbols.is_empty() {
            writeln!(f, "symbols {}", self.symbols.join(" "))?;
        }
        for (v, src) in self.vars.iter().zip(&self.images) {
            writeln!(f, "image {v} = {src}")?;
        }
        let b = &self.budgets;
        write!(f, "budgets max_steps={} max_terms={} trunc_degree={}", b.max_steps, b.max_terms, b.trunc_degree)?;
        if let Some(c) = &b.lex_ceiling {
            let coords: Vec<String> = c.coords().iter().map(|x| x.to_string()).collect();
            write!(f, " lex_ceiling=({})", coords.join(","))?;
        }
        writeln!(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "field prime 5
rank 3
vars X1 X2 X3 X4
symbols u3
image X1 = terms[(0,0,1): 1]
image X2 = family[start=(0,0,1), step=(0,0,1), coeff=i, i=1..inf] + terms[(0,1,0): 1]
image X3 = terms[(0,0,1): u3]
image X4 = family[start=(0,0,3), step=(0,0,3), coeff=u3^(3*i), i=1..inf] + terms[(1,0,0): 1]
budgets max_steps=64 max_terms=4096 trunc_degree=4
";

    #[test]
    fn canonical_file_round_trips() {
        let s = SpecFile::parse(EXAMPLE).unwrap();
        assert_eq!(s.to_string(), EXAMPLE);
        assert_eq!(s.valuation().images.len(), 4);
    }

    #[test]
    fn comments_and_ceiling() {
        let src = "# test\nfield rationals\nrank 1\nvars x  # one var\nimage x = terms[(1): 1]\nbudgets max_steps=2 lex_ceiling=(9)\n";
        let s = SpecFile::parse(src).unwrap();
        assert_eq!(s.budgets.max_steps, 2);
        assert_eq!(
            s.to_string(),
            "field rationals\nrank 1\nvars x\nimage x = terms[(1): 1]\nbudgets max_steps=2 max_terms=4096 trunc_degree=4 lex_ceiling=(9)\n"
        );
    }

    #[test]
    fn rejects_bad_input_with_line_numbers() {
        let e = SpecFile::parse("field prime 5\nrank 1\nvars x\ncolour red\n").unwrap_err();
        assert_eq!(e.line, 4);
        let e = SpecFile::parse("field prime 5\nrank 1\nvars x\nimage y = terms[(1): 1]\n").unwrap_err();
        assert_eq!(e.line, 4);
        let e = SpecFile::parse("field prime 5\nrank 1\nvars x y\nimage x = terms[(1): 1]\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = SpecFile::parse("field prime 6\nrank 1\nvars x\nimage x = terms[(1): 1]\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(SpecFile::parse("field prime 5\nrank 1\nvars x\nimage x = terms[(1): 1]\nbudgets speed=3\n").is_err());
        assert!(SpecFile::parse("field prime 5\nrank 1\nvars x\nimage x = terms[(1,0): 1]\n").is_err());
    }
}

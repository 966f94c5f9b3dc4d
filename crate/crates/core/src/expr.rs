//! Text syntax for residue-field elements, segment lists and Laurent value
//! expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' exp)?
//! exp    := int | '-' int | 'i' | '(' int ')' | '(' int '*' 'i' ')'
//! atom   := int | ident | '(' expr ')'
//! ```
//!
//! Segment lists join `terms[...]` and `family[...]` blocks with `+`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::coeff::{GroundField, SymbolTable, TowerElem};
use crate::hahn::{APFamily, Budget, Exp, HahnError, HahnStream, Segments};
use crate::scalar::Coeff;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at column {col}: {msg}")]
    Syntax { col: usize, msg: String },
    #[error("unknown name {0}")]
    UnknownName(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Hahn(#[from] HahnError),
}

fn syntax(col: usize, msg: impl Into<String>) -> ExprError {
    ExprError::Syntax { col: col + 1, msg: msg.into() }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let ch = chars[k];
        if ch.is_whitespace() {
            k += 1;
        } else if ch.is_ascii_digit() {
            let s = k;
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            let text: String = chars[s..k].iter().collect();
            out.push((s, Tok::Int(text.parse().expect("digits"))));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let s = k;
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            out.push((s, Tok::Ident(chars[s..k].iter().collect())));
        } else if "+-*/^()".contains(ch) {
            out.push((k, Tok::Sym(ch)));
            k += 1;
        } else {
            return Err(syntax(k, format!("unexpected character '{ch}'")));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
enum Pow {
    Int(i64),
    /// `^(k*i)`
    Index(i64),
}

#[derive(Clone, Debug, PartialEq)]
enum Ast {
    Int(BigInt),
    Name(String),
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, Pow),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn parse(src: &str) -> Result<Ast, ExprError> {
        let toks = lex(src)?;
        if toks.is_empty() {
            return Err(syntax(0, "empty expression"));
        }
        let mut p = Parser { toks, pos: 0, end: src.chars().count() };
        let ast = p.expr()?;
        if p.pos < p.toks.len() {
            return Err(syntax(p.col(), "trailing input"));
        }
        Ok(ast)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(syntax(self.col(), format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Ast, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = Ast::Add(Box::new(acc), Box::new(self.term()?));
            } else if self.eat('-') {
                acc = Ast::Sub(Box::new(acc), Box::new(self.term()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Ast, ExprError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = Ast::Mul(Box::new(acc), Box::new(self.unary()?));
            } else if self.eat('/') {
                acc = Ast::Div(Box::new(acc), Box::new(self.unary()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Ast, ExprError> {
        if self.eat('-') {
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let exp = self.exponent()?;
        Ok(Ast::Pow(Box::new(base), exp))
    }

    fn int(&mut self) -> Result<i64, ExprError> {
        let neg = self.eat('-');
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                let n = n.to_i64().ok_or_else(|| syntax(self.col(), "exponent too large"))?;
                Ok(if neg { -n } else { n })
            }
            _ => Err(syntax(self.col(), "expected an integer exponent")),
        }
    }

    fn is_index(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == "i")
    }

    fn exponent(&mut self) -> Result<Pow, ExprError> {
        if self.is_index() {
            self.pos += 1;
            return Ok(Pow::Index(1));
        }
        if self.eat('(') {
            let k = self.int()?;
            let p = if self.eat('*') {
                if !self.is_index() {
                    return Err(syntax(self.col(), "expected 'i'"));
                }
                self.pos += 1;
                Pow::Index(k)
            } else {
                Pow::Int(k)
            };
            self.expect(')')?;
            return Ok(p);
        }
        Ok(Pow::Int(self.int()?))
    }

    fn atom(&mut self) -> Result<Ast, ExprError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Ast::Int(n))
            }
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(Ast::Name(s))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            _ => Err(syntax(col, "expected a number, a name or '('")),
        }
    }
}

/// Ground field and symbol names used to build [`TowerElem`] values.
#[derive(Clone, Debug)]
pub struct TowerCtx {
    pub field: GroundField,
    pub symbols: Arc<SymbolTable>,
}

impl TowerCtx {
    pub fn new(field: GroundField, symbols: Arc<SymbolTable>) -> Self {
        TowerCtx { field, symbols }
    }

    pub fn int(&self, n: i64) -> TowerElem {
        TowerElem::int(self.field, n, self.symbols.clone())
    }

    fn big(&self, n: &BigInt) -> Result<TowerElem, ExprError> {
        let c = self.field.reduce(&BigRational::from_integer(n.clone())).map_err(|e| ExprError::Invalid(e.to_string()))?;
        Ok(TowerElem::constant(self.field, c, self.symbols.clone()))
    }

    fn eval(&self, ast: &Ast) -> Result<TowerElem, ExprError> {
        Ok(match ast {
            Ast::Int(n) => self.big(n)?,
            Ast::Name(s) => match self.symbols.index_of(s) {
                Some(k) => TowerElem::symbol(self.field, k, self.symbols.clone()),
                None => return Err(ExprError::UnknownName(s.clone())),
            },
            Ast::Neg(a) => self.eval(a)?.neg(),
            Ast::Add(a, b) => self.eval(a)?.add(&self.eval(b)?),
            Ast::Sub(a, b) => self.eval(a)?.sub(&self.eval(b)?),
            Ast::Mul(a, b) => self.eval(a)?.mul(&self.eval(b)?),
            Ast::Div(a, b) => self.eval(a)?.div(&self.eval(b)?).map_err(|e| ExprError::Invalid(e.to_string()))?,
            Ast::Pow(a, Pow::Int(k)) => {
                self.eval(a)?.powi(*k).ok_or_else(|| ExprError::Invalid("zero raised to a negative power".into()))?
            }
            Ast::Pow(_, Pow::Index(_)) => return Err(ExprError::Invalid("index power outside a family rule".into())),
        })
    }

    /// Parses a residue-field element such as `(u - 3)/(u + 2)`.
    pub fn parse_elem(&self, src: &str) -> Result<TowerElem, ExprError> {
        self.eval(&Parser::parse(src)?)
    }

    /// Parses a family coefficient rule `c*i^e*r^i` into `(c, e, r)`.
    pub fn parse_rule(&self, src: &str) -> Result<(TowerElem, u32, TowerElem), ExprError> {
        let ast = Parser::parse(src)?;
        let mut factors = Vec::new();
        flatten_product(&ast, false, &mut factors)?;
        let mut c = self.int(1);
        let mut e = 0u32;
        let mut r = self.int(1);
        for (f, inverse) in factors {
            let (val, idx) = match f {
                Ast::Name(s) if s == "i" => (None, 1),
                Ast::Pow(b, Pow::Int(k)) if matches!(b.as_ref(), Ast::Name(s) if s == "i") => {
                    (None, u32::try_from(*k).map_err(|_| ExprError::Invalid("negative power of i".into()))?)
                }
                Ast::Pow(b, Pow::Index(k)) => {
                    let base = self.eval(b)?.powi(*k).ok_or_else(|| ExprError::Invalid("zero ratio".into()))?;
                    (Some((base, true)), 0)
                }
                other => (Some((self.eval(other)?, false)), 0),
            };
            if idx > 0 {
                if inverse {
                    return Err(ExprError::Invalid("i may not appear in a denominator".into()));
                }
                e += idx;
                continue;
            }
            let (mut x, is_ratio) = val.expect("constant factor");
            if inverse {
                x = x.inv().map_err(|e| ExprError::Invalid(e.to_string()))?;
            }
            if is_ratio {
                r = r.mul(&x);
            } else {
                c = c.mul(&x);
            }
        }
        if c.is_zero() || r.is_zero() {
            return Err(ExprError::Invalid(format!("coefficient rule {src} vanishes")));
        }
        Ok((c, e, r))
    }

    /// Parses a `+`-joined list of `terms[...]` and `family[...]` blocks.
    pub fn parse_segments(&self, rank: usize, src: &str) -> Result<Segments<TowerElem>, ExprError> {
        let src = src.trim();
        if src == "0" {
            return Ok(Segments::zero(rank));
        }
        let mut terms = Vec::new();
        let mut families = Vec::new();
        for block in split_top(src, '+') {
            let block = block.trim();
            let (head, body) = block
                .split_once('[')
                .ok_or_else(|| ExprError::Invalid(format!("expected terms[...] or family[...], found '{block}'")))?;
            let body = body
                .strip_suffix(']')
                .ok_or_else(|| ExprError::Invalid(format!("unterminated block '{block}'")))?;
            match head.trim() {
                "terms" => {
                    for entry in split_top(body, ',') {
                        let (exp, coeff) = split_top_once(entry, ':')
                            .ok_or_else(|| ExprError::Invalid(format!("term '{}' lacks ':'", entry.trim())))?;
                        let exp = parse_lexvec(exp, rank)?;
                        terms.push((exp, self.parse_elem(coeff)?));
                    }
                }
                "family" => families.push(self.parse_family(rank, body)?),
                other => return Err(ExprError::Invalid(format!("unknown segment kind '{other}'"))),
            }
        }
        Ok(Segments::new(rank, terms, families)?)
    }

    fn parse_family(&self, rank: usize, body: &str) -> Result<APFamily<TowerElem>, ExprError> {
        let (mut start, mut step, mut rule, mut range) = (None, None, None, None);
        for field in split_top(body, ',') {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| ExprError::Invalid(format!("family field '{}' lacks '='", field.trim())))?;
            let slot = match k.trim() {
                "start" => &mut start,
                "step" => &mut step,
                "coeff" => &mut rule,
                "i" => &mut range,
                other => return Err(ExprError::Invalid(format!("unknown family field '{other}'"))),
            };
            if slot.replace(v.trim().to_string()).is_some() {
                return Err(ExprError::Invalid(format!("family field '{}' repeated", k.trim())));
            }
        }
        let need = |x: Option<String>, name: &str| x.ok_or_else(|| ExprError::Invalid(format!("family lacks '{name}'")));
        let start = parse_lexvec(&need(start, "start")?, rank)?;
        let step = parse_lexvec(&need(step, "step")?, rank)?;
        let (c, e, r) = self.parse_rule(&need(rule, "coeff")?)?;
        let range = need(range, "i")?;
        let (lo, hi) = range
            .split_once("..")
            .ok_or_else(|| ExprError::Invalid(format!("index range '{range}' lacks '..'")))?;
        let lo: u64 = lo.trim().parse().map_err(|_| ExprError::Invalid(format!("bad range start '{lo}'")))?;
        let hi = match hi.trim() {
            "inf" => None,
            h => Some(h.parse().map_err(|_| ExprError::Invalid(format!("bad range end '{h}'")))?),
        };
        Ok(APFamily::new(start, step, lo, hi, c, e, r)?)
    }
}

fn flatten_product<'a>(ast: &'a Ast, inverse: bool, out: &mut Vec<(&'a Ast, bool)>) -> Result<(), ExprError> {
    match ast {
        Ast::Mul(a, b) => {
            flatten_product(a, inverse, out)?;
            flatten_product(b, inverse, out)
        }
        Ast::Div(a, b) => {
            flatten_product(a, inverse, out)?;
            flatten_product(b, !inverse, out)
        }
        _ => {
            out.push((ast, inverse));
            Ok(())
        }
    }
}

/// Splits on `sep` outside parentheses and brackets.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut last = 0;
    for (k, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[last..k]);
                last = k + ch.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[last..]);
    out
}

fn split_top_once(s: &str, sep: char) -> Option<(&str, &str)> {
    let parts = split_top(s, sep);
    if parts.len() < 2 {
        return None;
    }
    let cut = parts[0].len();
    Some((&s[..cut], &s[cut + 1..]))
}

/// Parses `(a,b,c)`.
pub fn parse_lexvec(s: &str, rank: usize) -> Result<Exp, ExprError> {
    let s = s.trim();
    let inner = s
        .strip_prefix('(')
        .and_then(|x| x.strip_suffix(')'))
        .ok_or_else(|| ExprError::Invalid(format!("expected a tuple '(..)', found '{s}'")))?;
    let coords: Vec<BigInt> = inner
        .split(',')
        .map(|x| x.trim().parse::<BigInt>().map_err(|_| ExprError::Invalid(format!("bad integer '{}' in {s}", x.trim()))))
        .collect::<Result<_, _>>()?;
    if rank > 0 && coords.len() != rank {
        return Err(ExprError::Invalid(format!("tuple {s} has {} entries, expected {rank}", coords.len())));
    }
    Ok(Exp::new(coords))
}

/// Evaluates a Laurent expression in variables and symbols to a stream,
/// given the images of the variables.
pub fn eval_value(
    ctx: &TowerCtx,
    vars: &[String],
    images: &[HahnStream<TowerElem>],
    rank: usize,
    src: &str,
    budget: &Budget,
) -> Result<HahnStream<TowerElem>, ExprError> {
    let ast = Parser::parse(src)?;
    eval_stream(ctx, vars, images, rank, &ast, budget)
}

fn eval_stream(
    ctx: &TowerCtx,
    vars: &[String],
    images: &[HahnStream<TowerElem>],
    rank: usize,
    ast: &Ast,
    budget: &Budget,
) -> Result<HahnStream<TowerElem>, ExprError> {
    let rec = |a: &Ast| eval_stream(ctx, vars, images, rank, a, budget);
    let constant = |c: TowerElem| {
        if c.is_zero() {
            HahnStream::zero(rank)
        } else {
            HahnStream::one(rank, c)
        }
    };
    Ok(match ast {
        Ast::Int(_) => constant(ctx.eval(ast)?),
        Ast::Name(s) => match vars.iter().position(|v| v == s) {
            Some(k) => images[k].clone(),
            None => constant(ctx.eval(ast)?),
        },
        Ast::Neg(a) => rec(a)?.neg(),
        Ast::Add(a, b) => rec(a)?.add(&rec(b)?),
        Ast::Sub(a, b) => rec(a)?.sub(&rec(b)?),
        Ast::Mul(a, b) => rec(a)?.mul(&rec(b)?),
        Ast::Div(a, b) => rec(a)?.mul(&rec(b)?.inv(budget)?),
        Ast::Pow(a, Pow::Int(k)) => rec(a)?.pow(&BigInt::from(*k), budget)?,
        Ast::Pow(_, Pow::Index(_)) => return Err(ExprError::Invalid("index power outside a family rule".into())),
    })
}

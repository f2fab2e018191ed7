//! The `.pseq` pulse-sequence text format: parsing into an AST, compiling
//! against gate parameters into a [`Schedule`], and serializing schedules
//! back to text.
//!
//! Format (UTF-8, line-based, `#` starts a comment):
//!
//! ```text
//! # bindings: name = expression
//! t = pi/(2*omega13)
//! pulse target=a levels=1,3 rabi=omega13 phase=pi dur=t
//! wait dur=pi/(2*ga)
//! ```
//!
//! Expressions support literals, identifiers, `pi`, `+ - * /`, unary minus,
//! and parentheses; `*` and `/` bind tighter and everything is
//! left-associative. The names `ga`, `gb`, `delta_c`, `omega13`, `omega02`,
//! and `omega12` are implicitly bound to the gate parameters at compile
//! time; a file binding of the same name shadows the implicit value from
//! its line onward.
//!
//! Units: values are in g_b units (angular frequencies as multiples of g_b,
//! durations as multiples of 1/g_b) unless a binding's name ends in `_si`,
//! which marks its value as SI (rad/s or seconds). SI values convert at the
//! point of use — Rabi frequencies divide by, durations multiply by, the
//! SI value of g_b supplied to [`compile`] — and combining SI and natural
//! quantities inside one expression is a compile error.
//!
//! The grammar has no construct for simultaneous pulses, so compilation
//! merges *adjacent* `pulse` statements whose evaluated durations are
//! exactly equal (`==`) and whose targets differ into one two-drive
//! segment; this is how the shipped `cpgate.pseq` reproduces the built-in
//! schedule's simultaneous step-(ii)/(iv) pulse pairs. Insert `wait dur=0`
//! between two such pulses to keep them sequential.

use crate::dynamics::{GateParams, Squid};
use crate::protocol::{DriveTerm, Schedule, Segment};
use std::collections::{HashMap, HashSet};
use std::fmt;
use thiserror::Error;

/// Default SI value of g_b (rad/s) used to convert `_si` quantities.
pub const DEFAULT_GB_SI: f64 = 3.0e9;

/// Names bound implicitly from [`GateParams`] at compile time.
pub const IMPLICIT_BINDINGS: [&str; 6] =
    ["ga", "gb", "delta_c", "omega13", "omega02", "omega12"];

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("line {line}, column {column}: {message} (near `{token}`)")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub token: String,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CompileError {
    #[error("line {line}: {message}")]
    AtLine { line: usize, message: String },
    #[error("SI conversion requires a positive g_b value, got {0}")]
    BadGbSi(f64),
}

/// Either phase of turning text into a schedule can fail.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum PulseSeqError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Arithmetic expression; evaluated at compile time.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Ident(String),
    Pi,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

/// One parsed line of consequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Binding {
        name: String,
        expr: Expr,
        line: usize,
    },
    Pulse {
        target: Squid,
        levels: (usize, usize),
        rabi: Expr,
        phase: Expr,
        dur: Expr,
        line: usize,
    },
    Wait {
        dur: Expr,
        line: usize,
    },
}

/// Parsed sequence; items retain document order (binding scope is lexical).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceAst {
    pub items: Vec<Item>,
}

// ---------------------------------------------------------------------------
// Lexing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Equals,
    Comma,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Slash,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Number(v) => write!(f, "{v}"),
            Tok::Equals => write!(f, "="),
            Tok::Comma => write!(f, ","),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::Slash => write!(f, "/"),
        }
    }
}

struct Spanned {
    tok: Tok,
    column: usize, // 1-based
}

fn lex_line(text: &str, line_no: usize) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                i += 1;
            }
            '=' => {
                out.push(Spanned {
                    tok: Tok::Equals,
                    column,
                });
                i += 1;
            }
            ',' => {
                out.push(Spanned {
                    tok: Tok::Comma,
                    column,
                });
                i += 1;
            }
            '(' => {
                out.push(Spanned {
                    tok: Tok::LParen,
                    column,
                });
                i += 1;
            }
            ')' => {
                out.push(Spanned {
                    tok: Tok::RParen,
                    column,
                });
                i += 1;
            }
            '+' => {
                out.push(Spanned {
                    tok: Tok::Plus,
                    column,
                });
                i += 1;
            }
            '-' => {
                out.push(Spanned {
                    tok: Tok::Minus,
                    column,
                });
                i += 1;
            }
            '*' => {
                out.push(Spanned {
                    tok: Tok::Star,
                    column,
                });
                i += 1;
            }
            '/' => {
                out.push(Spanned {
                    tok: Tok::Slash,
                    column,
                });
                i += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = text.parse::<f64>().map_err(|_| ParseError {
                    line: line_no,
                    column,
                    message: format!("malformed number `{text}`"),
                    token: text.clone(),
                })?;
                out.push(Spanned {
                    tok: Tok::Number(value),
                    column,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Spanned {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    column,
                });
            }
            other => {
                return Err(ParseError {
                    line: line_no,
                    column,
                    message: format!("unexpected character `{other}`"),
                    token: other.to_string(),
                });
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct LineParser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    bound: &'a HashSet<String>,
}

impl<'a> LineParser<'a> {
    fn err_at(&self, column: usize, token: &str, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column,
            message: message.into(),
            token: token.to_string(),
        }
    }

    fn err_here(&self, message: impl Into<String>) -> ParseError {
        match self.toks.get(self.pos) {
            Some(s) => self.err_at(s.column, &s.tok.to_string(), message),
            None => {
                let column = self
                    .toks
                    .last()
                    .map(|s| s.column + s.tok.to_string().len())
                    .unwrap_or(1);
                self.err_at(column, "end of line", message)
            }
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn next(&mut self) -> Option<&Spanned> {
        let s = self.toks.get(self.pos);
        if s.is_some() {
            self.pos += 1;
        }
        s
    }

    fn expect_equals(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Equals) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err_here("expected `=`")),
        }
    }

    fn expect_key(&mut self, key: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Ident(name)) if name == key => {
                self.pos += 1;
                self.expect_equals()
            }
            _ => Err(self.err_here(format!("expected `{key}=`"))),
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.err_here("unexpected trailing input"))
        }
    }

    fn level_int(&mut self) -> Result<usize, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Number(v)) if v.fract() == 0.0 && (0.0..=3.0).contains(&v) => {
                self.pos += 1;
                Ok(v as usize)
            }
            _ => Err(self.err_here("expected a level index 0..3")),
        }
    }

    // expr = term {("+"|"-") term}
    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            acc = Expr::Bin(op, Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    // term = factor {("*"|"/") factor}
    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            acc = Expr::Bin(op, Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    // factor = NUMBER | IDENT | "(" expr ")" | "-" factor
    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Number(v)) => {
                self.pos += 1;
                Ok(Expr::Number(v))
            }
            Some(Tok::Ident(name)) => {
                let column = self.toks[self.pos].column;
                self.pos += 1;
                if name == "pi" {
                    Ok(Expr::Pi)
                } else if self.bound.contains(&name) {
                    Ok(Expr::Ident(name))
                } else {
                    Err(self.err_at(column, &name, format!("unbound identifier `{name}`")))
                }
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(self.err_here("expected `)`")),
                }
            }
            _ => Err(self.err_here("expected an expression")),
        }
    }
}

/// Parses `.pseq` source. Identifiers must be bound before use (the
/// implicit gate-parameter names count as bound from the start); the first
/// error wins.
pub fn parse(source: &str) -> Result<SequenceAst, ParseError> {
    let mut bound: HashSet<String> = IMPLICIT_BINDINGS.iter().map(|s| s.to_string()).collect();
    let mut file_bindings: HashSet<String> = HashSet::new();
    let mut items = Vec::new();

    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex_line(raw, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = LineParser {
            toks: &toks,
            pos: 0,
            line: line_no,
            bound: &bound,
        };
        let first = p.next().expect("nonempty").tok.clone();
        match first {
            Tok::Ident(ref kw) if kw == "pulse" => {
                p.expect_key("target")?;
                let target = match p.peek().cloned() {
                    Some(Tok::Ident(t)) if t == "a" => {
                        p.pos += 1;
                        Squid::A
                    }
                    Some(Tok::Ident(t)) if t == "b" => {
                        p.pos += 1;
                        Squid::B
                    }
                    _ => return Err(p.err_here("unknown target (expected `a` or `b`)")),
                };
                p.expect_key("levels")?;
                let low = p.level_int()?;
                match p.peek() {
                    Some(Tok::Comma) => p.pos += 1,
                    _ => return Err(p.err_here("expected `,` between level indices")),
                }
                let high = p.level_int()?;
                p.expect_key("rabi")?;
                let rabi = p.expr()?;
                p.expect_key("phase")?;
                let phase = p.expr()?;
                p.expect_key("dur")?;
                let dur = p.expr()?;
                p.expect_end()?;
                items.push(Item::Pulse {
                    target,
                    levels: (low, high),
                    rabi,
                    phase,
                    dur,
                    line: line_no,
                });
            }
            Tok::Ident(ref kw) if kw == "wait" => {
                p.expect_key("dur")?;
                let dur = p.expr()?;
                p.expect_end()?;
                items.push(Item::Wait { dur, line: line_no });
            }
            Tok::Ident(name) => {
                // binding: IDENT "=" expr
                let name_col = toks[0].column;
                if name == "pi" {
                    return Err(ParseError {
                        line: line_no,
                        column: name_col,
                        message: "`pi` is a builtin constant and cannot be rebound".into(),
                        token: name,
                    });
                }
                p.expect_equals()?;
                if file_bindings.contains(&name) {
                    return Err(ParseError {
                        line: line_no,
                        column: name_col,
                        message: format!("duplicate binding `{name}`"),
                        token: name,
                    });
                }
                let expr = p.expr()?;
                p.expect_end()?;
                file_bindings.insert(name.clone());
                bound.insert(name.clone());
                items.push(Item::Binding {
                    name,
                    expr,
                    line: line_no,
                });
            }
            other => {
                return Err(ParseError {
                    line: line_no,
                    column: toks[0].column,
                    message: "expected `pulse`, `wait`, or a binding".into(),
                    token: other.to_string(),
                });
            }
        }
    }
    Ok(SequenceAst { items })
}

// ---------------------------------------------------------------------------
// Compilation
// ---------------------------------------------------------------------------

/// Provenance tag of an evaluated quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unit {
    /// Bare numbers and `pi`.
    Neutral,
    /// g_b-unit quantities (the implicit bindings and anything built from
    /// them).
    Nat,
    /// SI quantities (bindings whose name ends in `_si`).
    Si,
}

fn join_units(a: Unit, b: Unit, line: usize) -> Result<Unit, CompileError> {
    match (a, b) {
        (Unit::Neutral, x) | (x, Unit::Neutral) => Ok(x),
        (x, y) if x == y => Ok(x),
        _ => Err(CompileError::AtLine {
            line,
            message: "expression mixes SI (`_si`) and natural-unit quantities".into(),
        }),
    }
}

fn eval(
    expr: &Expr,
    env: &HashMap<String, (f64, Unit)>,
    line: usize,
) -> Result<(f64, Unit), CompileError> {
    match expr {
        Expr::Number(v) => Ok((*v, Unit::Neutral)),
        Expr::Pi => Ok((std::f64::consts::PI, Unit::Neutral)),
        Expr::Ident(name) => env.get(name).copied().ok_or_else(|| CompileError::AtLine {
            line,
            message: format!("internal: identifier `{name}` missing from environment"),
        }),
        Expr::Neg(inner) => {
            let (v, u) = eval(inner, env, line)?;
            Ok((-v, u))
        }
        Expr::Bin(op, lhs, rhs) => {
            let (a, ua) = eval(lhs, env, line)?;
            let (b, ub) = eval(rhs, env, line)?;
            let unit = join_units(ua, ub, line)?;
            let v = match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
            };
            if !v.is_finite() {
                return Err(CompileError::AtLine {
                    line,
                    message: "expression does not evaluate to a finite number".into(),
                });
            }
            Ok((v, unit))
        }
    }
}

/// Evaluates every statement against the gate parameters and emits a
/// [`Schedule`]. `gb_si` is g_b in rad/s, used only to convert `_si`
/// quantities (Rabi frequencies divide by it, durations multiply by it).
/// Adjacent single-pulse statements with exactly equal durations on
/// different targets merge into one simultaneous segment.
pub fn compile(
    ast: &SequenceAst,
    p: &GateParams,
    gb_si: f64,
) -> Result<Schedule, CompileError> {
    if !(gb_si > 0.0) || !gb_si.is_finite() {
        return Err(CompileError::BadGbSi(gb_si));
    }
    let mut env: HashMap<String, (f64, Unit)> = HashMap::new();
    for (name, value) in IMPLICIT_BINDINGS.iter().zip([
        p.g_a,
        p.g_b,
        p.delta_c,
        p.omega_13,
        p.omega_02,
        p.omega_12,
    ]) {
        env.insert(name.to_string(), (value, Unit::Nat));
    }

    let mut segments: Vec<Segment> = Vec::new();
    for item in &ast.items {
        match item {
            Item::Binding { name, expr, line } => {
                let (value, unit) = eval(expr, &env, *line)?;
                if !(value > 0.0) {
                    return Err(CompileError::AtLine {
                        line: *line,
                        message: format!("binding `{name}` must be positive, got {value}"),
                    });
                }
                let declared = if name.ends_with("_si") {
                    if unit == Unit::Nat {
                        return Err(CompileError::AtLine {
                            line: *line,
                            message: format!(
                                "binding `{name}` is declared SI but its expression has \
                                 natural units"
                            ),
                        });
                    }
                    Unit::Si
                } else {
                    if unit == Unit::Si {
                        return Err(CompileError::AtLine {
                            line: *line,
                            message: format!(
                                "binding `{name}` holds an SI value; its name must end in `_si`"
                            ),
                        });
                    }
                    unit
                };
                env.insert(name.clone(), (value, declared));
            }
            Item::Wait { dur, line } => {
                let duration = eval_duration(dur, &env, *line, gb_si)?;
                segments.push(Segment {
                    label: None,
                    drives: vec![],
                    duration,
                });
            }
            Item::Pulse {
                target,
                levels,
                rabi,
                phase,
                dur,
                line,
            } => {
                let (low, high) = *levels;
                if low >= high || high > 3 {
                    return Err(CompileError::AtLine {
                        line: *line,
                        message: format!(
                            "invalid level pair ({low}, {high}): need low < high, both in 0..=3"
                        ),
                    });
                }
                let (rabi_v, rabi_u) = eval(rabi, &env, *line)?;
                let omega = match rabi_u {
                    Unit::Si => rabi_v / gb_si,
                    _ => rabi_v,
                };
                if !(omega > 0.0) {
                    return Err(CompileError::AtLine {
                        line: *line,
                        message: format!("Rabi frequency must be positive, got {omega}"),
                    });
                }
                let (phase_v, phase_u) = eval(phase, &env, *line)?;
                if phase_u == Unit::Si {
                    return Err(CompileError::AtLine {
                        line: *line,
                        message: "phase is dimensionless and cannot carry SI units".into(),
                    });
                }
                let duration = eval_duration(dur, &env, *line, gb_si)?;
                let term = DriveTerm {
                    squid: *target,
                    pair: (low, high),
                    omega,
                    phase: phase_v,
                };
                // merge rule: adjacent single pulses, equal duration,
                // different targets → one simultaneous segment
                let merged = match segments.last_mut() {
                    Some(prev)
                        if prev.drives.len() == 1
                            && prev.duration == duration
                            && prev.drives[0].squid != term.squid =>
                    {
                        prev.drives.push(term.clone());
                        true
                    }
                    _ => false,
                };
                if !merged {
                    segments.push(Segment {
                        label: None,
                        drives: vec![term],
                        duration,
                    });
                }
            }
        }
    }
    Ok(Schedule { segments })
}

fn eval_duration(
    expr: &Expr,
    env: &HashMap<String, (f64, Unit)>,
    line: usize,
    gb_si: f64,
) -> Result<f64, CompileError> {
    let (v, u) = eval(expr, env, line)?;
    let duration = match u {
        Unit::Si => v * gb_si,
        _ => v,
    };
    if duration < 0.0 {
        return Err(CompileError::AtLine {
            line,
            message: format!("duration must be nonnegative, got {duration}"),
        });
    }
    Ok(duration)
}

/// Parse-and-compile convenience used by the CLI.
pub fn compile_source(
    source: &str,
    p: &GateParams,
    gb_si: f64,
) -> Result<Schedule, PulseSeqError> {
    Ok(compile(&parse(source)?, p, gb_si)?)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn fm(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes a schedule to `.pseq` text. Durations and drive parameters
/// print with 17 significant digits, so parse ∘ compile of the output
/// reproduces the schedule exactly; labels become comments (they do not
/// survive the round trip, and schedule equality ignores them). Segments
/// with two drives emit two adjacent `pulse` lines with identical
/// durations, which the compile-time merge rule reunites; a valid schedule
/// therefore carries at most one drive per SQUID per segment.
pub fn serialize(s: &Schedule) -> String {
    let mut out = String::from("# cpgate pulse sequence\n");
    for segment in &s.segments {
        if let Some(label) = &segment.label {
            out.push_str(&format!("# step {label}\n"));
        }
        if segment.is_wait() {
            out.push_str(&format!("wait dur={}\n", fm(segment.duration)));
        } else {
            for d in &segment.drives {
                out.push_str(&format!(
                    "pulse target={} levels={},{} rabi={} phase={} dur={}\n",
                    d.squid,
                    d.pair.0,
                    d.pair.1,
                    fm(d.omega),
                    fm(d.phase),
                    fm(segment.duration),
                ));
            }
        }
    }
    out
}

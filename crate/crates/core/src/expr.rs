//! Arithmetic expressions for user-supplied profile functions.
//!
//! Grammar, loosest to tightest: `+ -`, `* /`, unary `-`, `^` (right
//! associative). Function calls: `sin cos tan exp log sqrt abs` take one
//! argument, `min max` take two. `pi` is a built-in constant.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable '{name}' at offset {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("unknown function '{name}' at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownVariable { offset, .. }
            | ParseError::UnknownFunction { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no binding for variable '{0}'")]
    MissingBinding(String),
    #[error("domain error: {function}({argument})")]
    Domain { function: String, argument: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(usize, Tok<'a>), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&b) = bytes.get(start) else {
            return Ok((start, Tok::End));
        };
        let tok = match b {
            b'0'..=b'9' | b'.' => {
                let mut end = start;
                while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                    end += 1;
                }
                if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                    let mut k = end + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        end = k;
                    }
                }
                let text = &self.src[start..end];
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number '{text}'"),
                })?;
                if !value.is_finite() {
                    return Err(ParseError::Syntax {
                        offset: start,
                        message: format!("number '{text}' out of range"),
                    });
                }
                self.pos = end;
                return Ok((start, Tok::Num(value)));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = start;
                while end < bytes.len()
                    && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_')
                {
                    end += 1;
                }
                self.pos = end;
                return Ok((start, Tok::Ident(&self.src[start..end])));
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(b as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character '{ch}'"),
                });
            }
        };
        self.pos = start + 1;
        Ok((start, tok))
    }
}

struct Parser<'a, 'v> {
    lexer: Lexer<'a>,
    peeked: (usize, Tok<'a>),
    allowed: &'v BTreeSet<String>,
    depth: usize,
}

// binding powers
const BP_ADD: u8 = 1;
const BP_MUL: u8 = 3;
const BP_NEG: u8 = 5;
const BP_POW: u8 = 7;

impl<'a, 'v> Parser<'a, 'v> {
    fn bump(&mut self) -> Result<(usize, Tok<'a>), ParseError> {
        let next = self.lexer.next_token()?;
        Ok(std::mem::replace(&mut self.peeked, next))
    }

    fn syntax<T>(&self, offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset,
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok<'static>, what: &str) -> Result<(), ParseError> {
        let (off, tok) = self.bump()?;
        if tok == want {
            Ok(())
        } else {
            self.syntax(off, format!("expected {what}"))
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.syntax(self.peeked.0, "expression nested too deeply");
        }
        let mut lhs = self.prefix()?;
        loop {
            let (off, tok) = self.peeked;
            let op = match tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                Tok::Op('^') => BinOp::Pow,
                Tok::End | Tok::RParen | Tok::Comma => break,
                _ => return self.syntax(off, "expected an operator"),
            };
            let (l_bp, r_bp) = match op {
                BinOp::Add | BinOp::Sub => (BP_ADD, BP_ADD + 1),
                BinOp::Mul | BinOp::Div => (BP_MUL, BP_MUL + 1),
                // right associative, and the exponent may carry a unary minus
                BinOp::Pow => (BP_POW, BP_NEG),
            };
            if l_bp < min_bp {
                break;
            }
            self.bump()?;
            let rhs = self.expr(r_bp)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let (off, tok) = self.bump()?;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('-') => {
                let inner = self.expr(BP_NEG)?;
                Ok(Expr::Neg(Box::new(inner)))
            }
            Tok::LParen => {
                let inner = self.expr(0)?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if self.peeked.1 == Tok::LParen {
                    let Some(func) = Func::from_name(name) else {
                        return Err(ParseError::UnknownFunction {
                            name: name.to_string(),
                            offset: off,
                        });
                    };
                    self.bump()?;
                    let mut args = vec![self.expr(0)?];
                    while self.peeked.1 == Tok::Comma {
                        self.bump()?;
                        args.push(self.expr(0)?);
                    }
                    let close = self.peeked.0;
                    self.expect(Tok::RParen, "')'")?;
                    if args.len() != func.arity() {
                        return self.syntax(
                            close,
                            format!(
                                "{} takes {} argument(s), got {}",
                                func.name(),
                                func.arity(),
                                args.len()
                            ),
                        );
                    }
                    Ok(Expr::Call(func, args))
                } else if self.allowed.contains(name) {
                    Ok(Expr::Var(name.to_string()))
                } else if name == "pi" {
                    Ok(Expr::Num(std::f64::consts::PI))
                } else if Func::from_name(name).is_some() {
                    self.syntax(self.peeked.0, format!("expected '(' after {name}"))
                } else {
                    Err(ParseError::UnknownVariable {
                        name: name.to_string(),
                        offset: off,
                    })
                }
            }
            Tok::End => self.syntax(off, "unexpected end of input"),
            _ => self.syntax(off, "expected a number, variable, function or '('"),
        }
    }
}

/// Parses `text`, accepting only variables listed in `allowed_vars`.
pub fn parse<S: AsRef<str>>(text: &str, allowed_vars: &[S]) -> Result<Expr, ParseError> {
    let allowed: BTreeSet<String> = allowed_vars
        .iter()
        .map(|s| s.as_ref().to_string())
        .collect();
    let mut lexer = Lexer { src: text, pos: 0 };
    let first = lexer.next_token()?;
    let mut parser = Parser {
        lexer,
        peeked: first,
        allowed: &allowed,
        depth: 0,
    };
    let expr = parser.expr(0)?;
    match parser.peeked {
        (_, Tok::End) => Ok(expr),
        (off, _) => parser.syntax(off, "unexpected trailing input"),
    }
}

fn domain(function: &str, argument: f64) -> EvalError {
    EvalError::Domain {
        function: function.to_string(),
        argument,
    }
}

impl Expr {
    /// Evaluates with variable values supplied by `lookup`.
    pub fn eval_with<F>(&self, lookup: &F) -> Result<f64, EvalError>
    where
        F: Fn(&str) -> Option<f64> + ?Sized,
    {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(name) => {
                lookup(name).ok_or_else(|| EvalError::MissingBinding(name.clone()))?
            }
            Expr::Neg(e) => -e.eval_with(lookup)?,
            Expr::Binary(op, a, b) => {
                let x = a.eval_with(lookup)?;
                let y = b.eval_with(lookup)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(domain("/", x));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        if x < 0.0 && y.fract() != 0.0 {
                            return Err(domain("^", x));
                        }
                        if x == 0.0 && y < 0.0 {
                            return Err(domain("^", x));
                        }
                        if y == 2.0 {
                            x * x
                        } else {
                            x.powf(y)
                        }
                    }
                }
            }
            Expr::Call(func, args) => {
                let x = args[0].eval_with(lookup)?;
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(domain("log", x));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(domain("sqrt", x));
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                    Func::Min => x.min(args[1].eval_with(lookup)?),
                    Func::Max => x.max(args[1].eval_with(lookup)?),
                }
            }
        })
    }

    pub fn eval(&self, bindings: &HashMap<String, f64>) -> Result<f64, EvalError> {
        self.eval_with(&|name: &str| bindings.get(name).copied())
    }

    /// Variables referenced by the expression.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }
}

/// Fully parenthesized rendering that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

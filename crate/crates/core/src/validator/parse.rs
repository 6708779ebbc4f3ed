//! Surface syntax for validator expressions.
//!
//! ```text
//! expr    := and (("||" | "OR") and)*
//! and     := unary (("&&" | "AND") unary)*
//! unary   := ("!" | "NOT") unary | primary
//! primary := "(" expr ")" | "true" | "false" | ident [cmp literal]
//! cmp     := "<" | "<=" | "=" | "==" | "!=" | ">=" | ">"
//! literal := ["-"] digits ["." digits] | ident
//! ```

use thiserror::Error;

use super::{BoolExpr, Literal};
use crate::condition::CompareOp;

/// Parse failure; `column` is 1-based and counts characters.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct ExprParseError {
    pub column: usize,
    pub message: String,
}

/// A parsed expression plus where each identifier reference starts.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedExpr {
    pub expr: BoolExpr,
    /// `(variable, 1-based column)` for every variable reference.
    pub references: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    And,
    Or,
    Not,
    LParen,
    RParen,
    Cmp(CompareOp),
    Minus,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::And => "`&&`".into(),
            Tok::Or => "`||`".into(),
            Tok::Not => "`!`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Cmp(op) => format!("`{op}`"),
            Tok::Minus => "`-`".into(),
            Tok::End => "end of expression".into(),
        }
    }
}

fn err(column: usize, message: impl Into<String>) -> ExprParseError {
    ExprParseError {
        column,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let next = chars.get(i + 1).copied();
        let (tok, width) = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '-' => (Tok::Minus, 1),
            '&' if next == Some('&') => (Tok::And, 2),
            '|' if next == Some('|') => (Tok::Or, 2),
            '!' if next == Some('=') => (Tok::Cmp(CompareOp::Ne), 2),
            '!' => (Tok::Not, 1),
            '<' if next == Some('=') => (Tok::Cmp(CompareOp::Le), 2),
            '<' => (Tok::Cmp(CompareOp::Lt), 1),
            '>' if next == Some('=') => (Tok::Cmp(CompareOp::Ge), 2),
            '>' => (Tok::Cmp(CompareOp::Gt), 1),
            '=' if next == Some('=') => (Tok::Cmp(CompareOp::Eq), 2),
            '=' => (Tok::Cmp(CompareOp::Eq), 1),
            '≤' => (Tok::Cmp(CompareOp::Le), 1),
            '≥' => (Tok::Cmp(CompareOp::Ge), 1),
            '≠' => (Tok::Cmp(CompareOp::Ne), 1),
            '∧' => (Tok::And, 1),
            '∨' => (Tok::Or, 1),
            '¬' => (Tok::Not, 1),
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                (Tok::Number(chars[i..j].iter().collect()), j - i)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let tok = match word.as_str() {
                    "AND" => Tok::And,
                    "OR" => Tok::Or,
                    "NOT" => Tok::Not,
                    _ => Tok::Ident(word),
                };
                (tok, j - i)
            }
            other => return Err(err(col, format!("unexpected character `{other}`"))),
        };
        out.push((tok, col));
        i += width;
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    references: Vec<(String, usize)>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ExprParseError {
        err(
            self.column(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        )
    }

    fn or(&mut self) -> Result<BoolExpr, ExprParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = BoolExpr::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<BoolExpr, ExprParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            lhs = BoolExpr::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<BoolExpr, ExprParseError> {
        if *self.peek() == Tok::Not {
            self.bump();
            return Ok(BoolExpr::not(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<BoolExpr, ExprParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.or()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                let (_, col) = self.bump();
                match name.as_str() {
                    "true" => return Ok(BoolExpr::Const(true)),
                    "false" => return Ok(BoolExpr::Const(false)),
                    _ => {}
                }
                self.references.push((name.clone(), col));
                if let Tok::Cmp(op) = *self.peek() {
                    self.bump();
                    let literal = self.literal()?;
                    return Ok(BoolExpr::cmp(name, op, literal));
                }
                Ok(BoolExpr::Var(name))
            }
            _ => Err(self.unexpected("a variable, `!` or `(`")),
        }
    }

    fn literal(&mut self) -> Result<Literal, ExprParseError> {
        let negative = *self.peek() == Tok::Minus;
        if negative {
            self.bump();
        }
        let col = self.column();
        match self.peek().clone() {
            Tok::Number(text) => {
                self.bump();
                let text = if negative { format!("-{text}") } else { text };
                if text.contains('.') {
                    text.parse()
                        .map(Literal::Float)
                        .map_err(|_| err(col, format!("invalid number `{text}`")))
                } else {
                    text.parse()
                        .map(Literal::Int)
                        .map_err(|_| err(col, format!("integer `{text}` out of range")))
                }
            }
            Tok::Ident(sym) if !negative => {
                self.bump();
                Ok(Literal::Symbol(sym))
            }
            _ => Err(self.unexpected("a number or enum symbol")),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<ParsedExpr, ExprParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        references: Vec::new(),
    };
    let expr = p.or()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("`&&`, `||` or end of expression"));
    }
    Ok(ParsedExpr {
        expr,
        references: p.references,
    })
}

//! Parser for the line-oriented `.sketch` format.
//!
//! ```text
//! # comment
//! sketch ade_relation
//! task relation                 # or `sentence` (the default)
//! labels 0 1
//!
//! variables:
//!   drug: bool = false  question "Is the DRUG mentioned?"
//!   negated: bool       phrase "negation"
//!   dose: float = 0.0
//!   route: enum{oral, iv} = oral
//!
//! conditions:
//!   drug <- keywords("DRUG")
//!   negated <- regex("did not cause|no evidence of") as negation
//!   dose <- numeric(>=, 400, "dose of \d+ mg")
//!   drug <- semantic("patient received a drug", 0.5)
//!
//! validator: normal-form        # or `if-then` (the default)
//!   label 1 if drug && effect && !negated
//!   default 0
//! ```
//!
//! String literals use double quotes; `\"` and `\\` are the only escapes, every
//! other backslash is kept verbatim so regex classes like `\d` need no doubling.

use std::collections::BTreeMap;

use indexmap::IndexMap;

use super::{placeholders_in, PromptHint, SketchDocument, TaskKind};
use crate::condition::{CompareOp, ConditionFamily, ConditionSpec, Keyword, Pattern};
use crate::error::{Diagnostic, Diagnostics};
use crate::store::{Datatype, UpdateKind, Value, VariableSpec};
use crate::validator::{
    check_wellformed, parse_expr, BoolExpr, Clause, IfThenChain, Label, Location,
    NormalFormRuleSet, Rule, Validator,
};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    Sym(&'static str),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Num(n) => format!("number {n}"),
            Tok::Sym(s) => format!("`{s}`"),
        }
    }
}

const SYMBOLS: [&str; 16] = [
    "<-", "<=", ">=", "==", "!=", "≤", "≥", "≠", "<", ">", "=", ":", "(", ")", ",", "{",
];

/// Strips a trailing `#` comment that is not inside a string literal.
fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_str => escaped = true,
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Tokens with 1-based character columns.
fn lex_line(line: &str, line_no: usize) -> Result<Vec<(Tok, usize)>, Diagnostic> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            let mut j = i + 1;
            loop {
                match chars.get(j) {
                    None => return Err(Diagnostic::new(line_no, col, "unterminated string")),
                    Some('"') => break,
                    Some('\\') if matches!(chars.get(j + 1), Some('"') | Some('\\')) => {
                        s.push(chars[j + 1]);
                        j += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        j += 1;
                    }
                }
            }
            out.push((Tok::Str(s), col));
            i = j + 1;
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()));
        if starts_number {
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                j += 1;
            }
            out.push((Tok::Num(chars[i..j].iter().collect()), col));
            i = j;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut j = i + 1;
            while j < chars.len()
                && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '-')
            {
                j += 1;
            }
            out.push((Tok::Ident(chars[i..j].iter().collect()), col));
            i = j;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS
            .iter()
            .chain(["}"].iter())
            .find(|s| rest.starts_with(**s))
        {
            Some(sym) => {
                out.push((Tok::Sym(sym), col));
                i += sym.chars().count();
            }
            None => {
                return Err(Diagnostic::new(
                    line_no,
                    col,
                    format!("unexpected character `{c}`"),
                ))
            }
        }
    }
    Ok(out)
}

/// Cursor over one line's tokens.
struct Cursor<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [(Tok, usize)], line: usize, end_col: usize) -> Self {
        Cursor {
            toks,
            pos: 0,
            line,
            end_col,
        }
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn next(&mut self) -> Option<(&'a Tok, usize)> {
        let t = self.toks.get(self.pos).map(|(t, c)| (t, *c));
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, wanted: &str) -> Diagnostic {
        let found = self
            .peek()
            .map_or_else(|| "end of line".to_string(), Tok::describe);
        Diagnostic::new(
            self.line,
            self.col(),
            format!("expected {wanted}, found {found}"),
        )
    }

    fn ident(&mut self, wanted: &str) -> Result<(String, usize), Diagnostic> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let col = self.col();
                self.pos += 1;
                Ok((s.clone(), col))
            }
            _ => Err(self.error(wanted)),
        }
    }

    fn sym(&mut self, sym: &str) -> Result<(), Diagnostic> {
        match self.peek() {
            Some(Tok::Sym(s)) if *s == sym => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(&format!("`{sym}`"))),
        }
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn string(&mut self, wanted: &str) -> Result<(String, usize), Diagnostic> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let col = self.col();
                self.pos += 1;
                Ok((s.clone(), col))
            }
            _ => Err(self.error(wanted)),
        }
    }

    fn number(&mut self, wanted: &str) -> Result<(f64, usize), Diagnostic> {
        match self.peek() {
            Some(Tok::Num(n)) => {
                let col = self.col();
                let value: f64 = n.parse().map_err(|_| {
                    Diagnostic::new(self.line, col, format!("invalid number `{n}`"))
                })?;
                self.pos += 1;
                Ok((value, col))
            }
            _ => Err(self.error(wanted)),
        }
    }

    fn finish(&self) -> Result<(), Diagnostic> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.error("end of line")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Header,
    Variables,
    Conditions,
    Validator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Style {
    IfThen,
    NormalForm,
}

struct VarLine {
    spec: VariableSpec,
    hint: PromptHint,
    line: usize,
    col: usize,
}

struct CondLine {
    target: String,
    target_col: usize,
    id: Option<String>,
    family: FamilyArgs,
    line: usize,
    args_col: usize,
}

enum FamilyArgs {
    Regex(String),
    Keywords(Vec<String>),
    Numeric {
        op: CompareOp,
        threshold: f64,
        scope: Option<String>,
    },
    Semantic {
        query: String,
        threshold: f64,
    },
}

struct ClauseLine {
    label: Label,
    label_col: usize,
    expr: BoolExpr,
    references: Vec<(String, usize)>,
    line: usize,
    expr_col: usize,
}

#[derive(Default)]
struct Draft {
    name: Option<String>,
    task: Option<(TaskKind, usize)>,
    labels: Option<(Vec<(Label, usize)>, usize)>,
    variables: Vec<VarLine>,
    conditions: Vec<CondLine>,
    style: Option<(Style, usize)>,
    clauses: Vec<ClauseLine>,
    default: Option<(Label, usize, usize)>,
}

/// Parses and statically checks a sketch document. Either the whole document
/// is returned or at least one located diagnostic.
pub fn parse_sketch(source: &str) -> Result<SketchDocument, Diagnostics> {
    let mut diags = Vec::new();
    let mut draft = Draft::default();
    let mut section = Section::Header;
    let mut saw_header = false;

    for (idx, raw_line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw_line);
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.chars().take_while(|c| c.is_whitespace()).count();
        let end_col = line.trim_end().chars().count() + 1;

        if !saw_header {
            saw_header = true;
            match header_name(trimmed) {
                Some(name) => {
                    draft.name = Some(name);
                    continue;
                }
                None => {
                    diags.push(Diagnostic::new(
                        line_no,
                        indent + 1,
                        "expected sketch header",
                    ));
                    break;
                }
            }
        }

        if let Some(next) = section_header(trimmed) {
            match next {
                Ok((sec, style)) => {
                    if sec <= section {
                        diags.push(Diagnostic::new(
                            line_no,
                            indent + 1,
                            format!("section `{}` is repeated or out of order", trimmed),
                        ));
                    }
                    section = sec;
                    if sec == Section::Validator {
                        draft.style = Some((style.unwrap_or(Style::IfThen), line_no));
                    }
                }
                Err(d) => diags.push(Diagnostic { line: line_no, ..d }),
            }
            continue;
        }

        let result = match section {
            Section::Header => {
                lex_line(line, line_no).and_then(|t| header_line(&t, line_no, end_col, &mut draft))
            }
            Section::Variables => lex_line(line, line_no)
                .and_then(|t| variable_line(&t, line_no, end_col))
                .map(|v| draft.variables.push(v)),
            Section::Conditions => lex_line(line, line_no)
                .and_then(|t| condition_line(&t, line_no, end_col))
                .map(|c| draft.conditions.push(c)),
            Section::Validator => validator_line(line, line_no, &mut draft),
        };
        if let Err(d) = result {
            diags.push(d);
        }
    }

    if !saw_header {
        diags.push(Diagnostic::new(1, 1, "expected sketch header"));
    }
    if !diags.is_empty() {
        return Err(Diagnostics(diags));
    }
    assemble(draft).map_err(Diagnostics)
}

fn header_name(line: &str) -> Option<String> {
    let rest = line.strip_prefix("sketch")?;
    if !rest.starts_with(char::is_whitespace) {
        return None;
    }
    let name = rest.trim();
    let valid = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == '.');
    valid.then(|| name.to_string())
}

#[allow(clippy::type_complexity)]
fn section_header(line: &str) -> Option<Result<(Section, Option<Style>), Diagnostic>> {
    let (head, rest) = line.split_once(':')?;
    let section = match head.trim() {
        "variables" => Section::Variables,
        "conditions" => Section::Conditions,
        "validator" => Section::Validator,
        _ => return None,
    };
    let mode = rest.trim();
    if section != Section::Validator {
        if !mode.is_empty() {
            return Some(Err(Diagnostic::new(
                0,
                head.len() + 2,
                format!("unexpected `{mode}` after section header"),
            )));
        }
        return Some(Ok((section, None)));
    }
    let style = match mode {
        "" | "if-then" => Style::IfThen,
        "normal-form" | "cnf" | "dnf" => Style::NormalForm,
        other => {
            return Some(Err(Diagnostic::new(
                0,
                head.len() + 2,
                format!("unknown validator style `{other}` (expected if-then or normal-form)"),
            )))
        }
    };
    Some(Ok((section, Some(style))))
}

fn label_token(tok: &Tok) -> Option<Label> {
    match tok {
        Tok::Ident(s) | Tok::Num(s) => Some(Label::new(s.clone())),
        _ => None,
    }
}

fn header_line(
    toks: &[(Tok, usize)],
    line: usize,
    end_col: usize,
    draft: &mut Draft,
) -> Result<(), Diagnostic> {
    let mut c = Cursor::new(toks, line, end_col);
    let (word, col) = c.ident("`task`, `labels` or a section header")?;
    match word.as_str() {
        "task" => {
            let (kind, kcol) = c.ident("`sentence` or `relation`")?;
            let kind = match kind.as_str() {
                "sentence" => TaskKind::Sentence,
                "relation" => TaskKind::Relation,
                other => {
                    return Err(Diagnostic::new(
                        line,
                        kcol,
                        format!("unknown task kind `{other}`"),
                    ))
                }
            };
            c.finish()?;
            if draft.task.is_some() {
                return Err(Diagnostic::new(line, col, "task declared twice"));
            }
            draft.task = Some((kind, line));
            Ok(())
        }
        "labels" => {
            let mut labels = Vec::new();
            while let Some((tok, lcol)) = c.next() {
                let label = label_token(tok)
                    .ok_or_else(|| Diagnostic::new(line, lcol, "expected a label"))?;
                labels.push((label, lcol));
            }
            if labels.is_empty() {
                return Err(Diagnostic::new(
                    line,
                    end_col,
                    "expected at least one label",
                ));
            }
            if draft.labels.is_some() {
                return Err(Diagnostic::new(line, col, "labels declared twice"));
            }
            draft.labels = Some((labels, line));
            Ok(())
        }
        "sketch" => Err(Diagnostic::new(line, col, "sketch header repeated")),
        other => Err(Diagnostic::new(
            line,
            col,
            format!("unknown directive `{other}`"),
        )),
    }
}

fn variable_line(
    toks: &[(Tok, usize)],
    line: usize,
    end_col: usize,
) -> Result<VarLine, Diagnostic> {
    let mut c = Cursor::new(toks, line, end_col);
    let (name, col) = c.ident("a variable name")?;
    c.sym(":")?;
    let (ty, ty_col) = c.ident("a type (bool, int, float, enum)")?;
    let datatype = match ty.as_str() {
        "bool" | "boolean" => Datatype::Boolean,
        "int" | "integer" => Datatype::Integer,
        "float" => Datatype::Float,
        "enum" => {
            let close = if c.eat_sym("{") {
                "}"
            } else if c.eat_sym("(") {
                ")"
            } else {
                return Err(c.error("`{`"));
            };
            let mut symbols = Vec::new();
            loop {
                let (sym, _) = c.ident("an enum symbol")?;
                symbols.push(sym);
                if c.eat_sym(",") {
                    continue;
                }
                c.sym(close)?;
                break;
            }
            Datatype::enumeration(symbols)
                .map_err(|e| Diagnostic::new(line, ty_col, e.to_string()))?
        }
        other => {
            return Err(Diagnostic::new(
                line,
                ty_col,
                format!("unknown type `{other}`"),
            ))
        }
    };

    let default = if c.eat_sym("=") {
        let dcol = c.col();
        let value = match (c.next(), &datatype) {
            (Some((Tok::Ident(b), _)), Datatype::Boolean) if b == "true" || b == "false" => {
                Value::Bool(b == "true")
            }
            (Some((Tok::Num(n), _)), Datatype::Integer) => Value::Int(
                n.parse()
                    .map_err(|_| Diagnostic::new(line, dcol, format!("`{n}` is not an integer")))?,
            ),
            (Some((Tok::Num(n), _)), Datatype::Float) => {
                let x: f64 = n
                    .parse()
                    .map_err(|_| Diagnostic::new(line, dcol, format!("invalid number `{n}`")))?;
                Value::Float(x)
            }
            (Some((Tok::Ident(s), _)), Datatype::Enum(_)) => Value::Symbol(s.clone()),
            (Some((tok, _)), _) => {
                return Err(Diagnostic::new(
                    line,
                    dcol,
                    format!("default {} does not fit type {datatype}", tok.describe()),
                ))
            }
            (None, _) => return Err(Diagnostic::new(line, dcol, "expected a default value")),
        };
        if !datatype.accepts(&value) {
            return Err(Diagnostic::new(
                line,
                dcol,
                format!("default `{value}` does not fit type {datatype}"),
            ));
        }
        value
    } else {
        match &datatype {
            Datatype::Boolean => Value::Bool(false),
            Datatype::Integer => Value::Int(0),
            Datatype::Float => Value::Float(0.0),
            Datatype::Enum(set) => Value::Symbol(set[0].clone()),
        }
    };

    let mut hint = PromptHint::default();
    while c.peek().is_some() {
        let (kw, kcol) = c.ident("`question` or `phrase`")?;
        let (text, _) = c.string("a quoted string")?;
        match kw.as_str() {
            "question" => hint.question = Some(text),
            "phrase" => hint.phrase = Some(text),
            other => {
                return Err(Diagnostic::new(
                    line,
                    kcol,
                    format!("unknown annotation `{other}`"),
                ))
            }
        }
    }

    Ok(VarLine {
        spec: VariableSpec::new(name, datatype, default),
        hint,
        line,
        col,
    })
}

fn condition_line(
    toks: &[(Tok, usize)],
    line: usize,
    end_col: usize,
) -> Result<CondLine, Diagnostic> {
    let mut c = Cursor::new(toks, line, end_col);
    let (target, target_col) = c.ident("a target variable")?;
    c.sym("<-")?;
    let (family, fcol) = c.ident("a condition family (regex, keywords, numeric, semantic)")?;
    c.sym("(")?;
    let args_col = c.col();
    let args = match family.as_str() {
        "regex" => FamilyArgs::Regex(c.string("a quoted pattern")?.0),
        "keywords" => {
            let mut phrases = vec![c.string("a quoted phrase")?.0];
            while c.eat_sym(",") {
                phrases.push(c.string("a quoted phrase")?.0);
            }
            FamilyArgs::Keywords(phrases)
        }
        "numeric" => {
            let op = match c.next() {
                Some((Tok::Sym(s), _)) => CompareOp::parse(s),
                _ => None,
            }
            .ok_or_else(|| Diagnostic::new(line, args_col, "expected a comparison operator"))?;
            c.sym(",")?;
            let (threshold, _) = c.number("a numeric threshold")?;
            let scope = if c.eat_sym(",") {
                Some(c.string("a quoted scope pattern")?.0)
            } else {
                None
            };
            FamilyArgs::Numeric {
                op,
                threshold,
                scope,
            }
        }
        "semantic" => {
            let (query, _) = c.string("a quoted query")?;
            c.sym(",")?;
            let (threshold, tcol) = c.number("a similarity threshold")?;
            if !(0.0..=1.0).contains(&threshold) {
                return Err(Diagnostic::new(
                    line,
                    tcol,
                    format!("similarity threshold {threshold} outside [0, 1]"),
                ));
            }
            FamilyArgs::Semantic { query, threshold }
        }
        other => {
            return Err(Diagnostic::new(
                line,
                fcol,
                format!("unknown condition family `{other}`"),
            ))
        }
    };
    c.sym(")")?;
    let id = if matches!(c.peek(), Some(Tok::Ident(s)) if s == "as") {
        c.next();
        Some(c.ident("a condition id")?.0)
    } else {
        None
    };
    c.finish()?;
    Ok(CondLine {
        target,
        target_col,
        id,
        family: args,
        line,
        args_col,
    })
}

fn validator_line(line: &str, line_no: usize, draft: &mut Draft) -> Result<(), Diagnostic> {
    let chars: Vec<char> = line.chars().collect();
    let mut pos = 0;
    let word = |pos: &mut usize| -> Option<(String, usize)> {
        while *pos < chars.len() && chars[*pos].is_whitespace() {
            *pos += 1;
        }
        let start = *pos;
        while *pos < chars.len() && !chars[*pos].is_whitespace() {
            *pos += 1;
        }
        (start < *pos).then(|| (chars[start..*pos].iter().collect(), start + 1))
    };
    let valid_label = |s: &str| {
        s.chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == '.')
    };

    let (kw, kw_col) = word(&mut pos).expect("non-empty line");
    match kw.as_str() {
        "default" => {
            let (label, lcol) = word(&mut pos)
                .ok_or_else(|| Diagnostic::new(line_no, chars.len() + 1, "expected a label"))?;
            if !valid_label(&label) {
                return Err(Diagnostic::new(
                    line_no,
                    lcol,
                    format!("invalid label `{label}`"),
                ));
            }
            if let Some((extra, col)) = word(&mut pos) {
                return Err(Diagnostic::new(
                    line_no,
                    col,
                    format!("unexpected `{extra}` after default label"),
                ));
            }
            if draft.default.is_some() {
                return Err(Diagnostic::new(line_no, kw_col, "default declared twice"));
            }
            draft.default = Some((Label::new(label), line_no, lcol));
            Ok(())
        }
        "label" => {
            let (label, label_col) = word(&mut pos)
                .ok_or_else(|| Diagnostic::new(line_no, chars.len() + 1, "expected a label"))?;
            if !valid_label(&label) {
                return Err(Diagnostic::new(
                    line_no,
                    label_col,
                    format!("invalid label `{label}`"),
                ));
            }
            match word(&mut pos) {
                Some((w, _)) if w == "if" => {}
                Some((w, col)) => {
                    return Err(Diagnostic::new(
                        line_no,
                        col,
                        format!("expected `if`, found `{w}`"),
                    ))
                }
                None => return Err(Diagnostic::new(line_no, chars.len() + 1, "expected `if`")),
            }
            if draft.default.is_some() {
                return Err(Diagnostic::new(
                    line_no,
                    kw_col,
                    "clauses must come before the default",
                ));
            }
            let expr_src: String = chars[pos..].iter().collect();
            let offset = pos;
            let parsed = parse_expr(&expr_src)
                .map_err(|e| Diagnostic::new(line_no, offset + e.column, e.message))?;
            let expr_col = offset + 1 + expr_src.chars().take_while(|c| c.is_whitespace()).count();
            draft.clauses.push(ClauseLine {
                label: Label::new(label),
                label_col,
                expr: parsed.expr,
                references: parsed
                    .references
                    .into_iter()
                    .map(|(n, c)| (n, offset + c))
                    .collect(),
                line: line_no,
                expr_col,
            });
            Ok(())
        }
        other => Err(Diagnostic::new(
            line_no,
            kw_col,
            format!("expected `label` or `default`, found `{other}`"),
        )),
    }
}

fn substitute_dummy(text: &str) -> String {
    super::substitute(text, "drug", "effect", false)
}

fn assemble(draft: Draft) -> Result<SketchDocument, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let name = draft.name.expect("header checked");
    let task = draft.task.map_or(TaskKind::Sentence, |(k, _)| k);

    let labels: Vec<Label> = match &draft.labels {
        Some((labels, _)) => {
            for (i, (label, col)) in labels.iter().enumerate() {
                if labels[..i].iter().any(|(l, _)| l == label) {
                    diags.push(Diagnostic::new(
                        draft.labels.as_ref().unwrap().1,
                        *col,
                        format!("label {label} declared twice"),
                    ));
                }
            }
            labels.iter().map(|(l, _)| l.clone()).collect()
        }
        None => {
            diags.push(Diagnostic::new(1, 1, "missing `labels` declaration"));
            Vec::new()
        }
    };

    let mut variables: Vec<VariableSpec> = Vec::new();
    let mut hints: IndexMap<String, PromptHint> = IndexMap::new();
    for v in &draft.variables {
        if variables.iter().any(|s| s.name == v.spec.name) {
            diags.push(Diagnostic::new(
                v.line,
                v.col,
                format!("variable {} declared twice", v.spec.name),
            ));
            continue;
        }
        variables.push(v.spec.clone());
        hints.insert(v.spec.name.clone(), v.hint.clone());
    }
    if variables.is_empty() {
        diags.push(Diagnostic::new(1, 1, "sketch declares no variables"));
    }

    let mut conditions: Vec<ConditionSpec> = Vec::new();
    let mut used_placeholders: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut id_counts: BTreeMap<String, usize> = BTreeMap::new();
    for cl in &draft.conditions {
        let Some(spec) = variables.iter().find(|s| s.name == cl.target) else {
            diags.push(Diagnostic::new(
                cl.line,
                cl.target_col,
                format!("unknown variable {}", cl.target),
            ));
            continue;
        };
        let strings: Vec<&str> = match &cl.family {
            FamilyArgs::Regex(p) => vec![p],
            FamilyArgs::Keywords(ps) => ps.iter().map(String::as_str).collect(),
            FamilyArgs::Numeric { scope, .. } => scope.iter().map(String::as_str).collect(),
            FamilyArgs::Semantic { query, .. } => vec![query],
        };
        for s in &strings {
            for p in placeholders_in(s) {
                used_placeholders.entry(p).or_insert(cl.line);
            }
        }

        let compile = |source: &str| -> Result<Pattern, Diagnostic> {
            Pattern::new(substitute_dummy(source))
                .and_then(|_| Pattern::new(source))
                .map_err(|e| {
                    Diagnostic::new(
                        cl.line,
                        cl.args_col,
                        format!("invalid pattern: {}", last_line(&e.to_string())),
                    )
                })
        };

        let family = match &cl.family {
            FamilyArgs::Regex(p) => match compile(p) {
                Ok(pattern) => ConditionFamily::Regex { pattern },
                Err(d) => {
                    diags.push(d);
                    continue;
                }
            },
            FamilyArgs::Keywords(phrases) => {
                let keywords: Vec<Keyword> = phrases.iter().map(Keyword::new).collect();
                if let Some(k) = keywords.iter().find(|k| k.tokens().is_empty()) {
                    diags.push(Diagnostic::new(
                        cl.line,
                        cl.args_col,
                        format!("keyword \"{}\" contains no word characters", k.phrase),
                    ));
                    continue;
                }
                ConditionFamily::Keywords { phrases: keywords }
            }
            FamilyArgs::Numeric {
                op,
                threshold,
                scope,
            } => {
                let scope = match scope.as_deref().map(compile).transpose() {
                    Ok(s) => s,
                    Err(d) => {
                        diags.push(d);
                        continue;
                    }
                };
                ConditionFamily::NumericCompare {
                    op: *op,
                    threshold: *threshold,
                    scope,
                }
            }
            FamilyArgs::Semantic { query, threshold } => ConditionFamily::SemanticSim {
                query: query.clone(),
                threshold: *threshold,
            },
        };

        if let Some(problem) = target_problem(&spec.datatype, &family) {
            diags.push(Diagnostic::new(
                cl.line,
                cl.target_col,
                format!(
                    "{} cannot update {} ({}): {problem}",
                    family.name(),
                    spec.name,
                    spec.datatype
                ),
            ));
            continue;
        }

        let id = match &cl.id {
            Some(id) => id.clone(),
            None => {
                let n = id_counts.entry(cl.target.clone()).or_insert(0);
                *n += 1;
                if *n == 1 {
                    cl.target.clone()
                } else {
                    format!("{}.{}", cl.target, n)
                }
            }
        };
        if conditions.iter().any(|c| c.id == id) {
            diags.push(Diagnostic::new(
                cl.line,
                cl.target_col,
                format!("condition id {id} is not unique"),
            ));
            continue;
        }
        conditions.push(ConditionSpec {
            id,
            target: cl.target.clone(),
            update: UpdateKind::for_datatype(&spec.datatype),
            family,
        });
    }

    let placeholders: Vec<String> = used_placeholders.keys().map(|p| p.to_string()).collect();
    match task {
        TaskKind::Relation => {
            for p in super::PLACEHOLDERS {
                if !used_placeholders.contains_key(p) {
                    let line = draft.task.map_or(1, |(_, l)| l);
                    diags.push(Diagnostic::new(
                        line,
                        1,
                        format!("relation sketch never uses the {p} placeholder"),
                    ));
                }
            }
        }
        TaskKind::Sentence => {
            for (p, line) in &used_placeholders {
                diags.push(Diagnostic::new(
                    *line,
                    1,
                    format!("placeholder {p} requires `task relation`"),
                ));
            }
        }
    }

    let Some((style, style_line)) = draft.style else {
        diags.push(Diagnostic::new(1, 1, "missing `validator:` section"));
        return Err(diags);
    };
    let Some((default, default_line, default_col)) = draft.default.clone() else {
        diags.push(Diagnostic::new(
            style_line,
            1,
            "validator has no `default` label",
        ));
        return Err(diags);
    };
    let validator = match style {
        Style::IfThen => Validator::IfThen(IfThenChain {
            clauses: draft
                .clauses
                .iter()
                .map(|c| Clause {
                    guard: c.expr.clone(),
                    label: c.label.clone(),
                })
                .collect(),
            default,
        }),
        Style::NormalForm => Validator::NormalForm(NormalFormRuleSet {
            rules: draft
                .clauses
                .iter()
                .map(|c| Rule {
                    label: c.label.clone(),
                    formula: c.expr.clone(),
                })
                .collect(),
            default,
        }),
    };

    if let Err(problems) = check_wellformed(&validator, &variables, &labels) {
        for p in problems {
            let (line, col) = match p.location {
                Location::Default => (default_line, default_col),
                Location::Clause(i) => {
                    let c = &draft.clauses[i];
                    let col = match &p.variable {
                        Some(v) => c
                            .references
                            .iter()
                            .find(|(n, _)| n == v)
                            .map_or(c.expr_col, |(_, col)| *col),
                        None if p.message.starts_with("label") => c.label_col,
                        None => c.expr_col,
                    };
                    (c.line, col)
                }
            };
            diags.push(Diagnostic::new(line, col, p.message));
        }
    }

    if !diags.is_empty() {
        diags.sort_by_key(|d| (d.line, d.column));
        return Err(diags);
    }
    Ok(SketchDocument {
        name,
        task,
        labels,
        variables,
        hints,
        conditions,
        validator,
        placeholders,
        bound: task == TaskKind::Sentence,
    })
}

fn last_line(s: &str) -> String {
    s.lines()
        .map(str::trim)
        .rfind(|l| !l.is_empty())
        .unwrap_or(s)
        .to_string()
}

/// Why a condition family cannot assign a target of this type, if it cannot.
fn target_problem(datatype: &Datatype, family: &ConditionFamily) -> Option<String> {
    match (datatype, family) {
        (Datatype::Boolean, _) => None,
        (Datatype::Integer, ConditionFamily::NumericCompare { .. }) => None,
        (Datatype::Float, ConditionFamily::NumericCompare { .. })
        | (Datatype::Float, ConditionFamily::SemanticSim { .. }) => None,
        (Datatype::Enum(_), ConditionFamily::Regex { .. }) => None,
        (Datatype::Enum(set), ConditionFamily::Keywords { phrases }) => phrases
            .iter()
            .find(|k| !set.iter().any(|s| s.eq_ignore_ascii_case(k.phrase.trim())))
            .map(|k| format!("keyword \"{}\" is not an enum symbol", k.phrase)),
        _ => Some("no capture of a compatible type".into()),
    }
}

//! Deterministic validators mapping a final variable state to a label.
//!
//! Two formulations share one semantics: an ordered IF-THEN chain, and an
//! ordered set of rules whose formulas must be in conjunctive or disjunctive
//! normal form. In both, the first clause that holds wins and a mandatory
//! default covers the rest, so every well-formed validator is total.

mod oracle;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::condition::CompareOp;
use crate::error::EvalError;
use crate::store::{Datatype, FinalState, Value, VariableSpec};

pub use oracle::{truth_table_oracle, OracleError, TruthTable};
pub use parse::{parse_expr, ExprParseError, ParsedExpr};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub String);

impl Label {
    pub fn new(s: impl Into<String>) -> Self {
        Label(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// `Some(0|1)` for the two binary labels.
    pub fn as_binary(&self) -> Option<u8> {
        match self.0.as_str() {
            "0" => Some(0),
            "1" => Some(1),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Symbol(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Float(x) => write!(f, "{x:?}"),
            Literal::Symbol(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoolExpr {
    Const(bool),
    Var(String),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Cmp {
        var: String,
        op: CompareOp,
        literal: Literal,
    },
}

impl BoolExpr {
    pub fn var(name: impl Into<String>) -> Self {
        BoolExpr::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(e))
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn all(items: impl IntoIterator<Item = BoolExpr>) -> Self {
        items
            .into_iter()
            .reduce(BoolExpr::and)
            .unwrap_or(BoolExpr::Const(true))
    }

    /// Left-nested disjunction; `false` when empty.
    pub fn any(items: impl IntoIterator<Item = BoolExpr>) -> Self {
        items
            .into_iter()
            .reduce(BoolExpr::or)
            .unwrap_or(BoolExpr::Const(false))
    }

    pub fn cmp(var: impl Into<String>, op: CompareOp, literal: Literal) -> Self {
        BoolExpr::Cmp {
            var: var.into(),
            op,
            literal,
        }
    }

    /// Every variable name referenced, in first-occurrence order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            BoolExpr::Const(_) => {}
            BoolExpr::Var(v) | BoolExpr::Cmp { var: v, .. } => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            BoolExpr::Not(e) => e.collect_vars(out),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    fn is_literal(&self) -> bool {
        match self {
            BoolExpr::Const(_) | BoolExpr::Var(_) | BoolExpr::Cmp { .. } => true,
            BoolExpr::Not(e) => matches!(
                **e,
                BoolExpr::Const(_) | BoolExpr::Var(_) | BoolExpr::Cmp { .. }
            ),
            _ => false,
        }
    }

    /// Operands of a chain of the same binary operator, flattened.
    pub fn conjuncts(&self) -> Vec<&BoolExpr> {
        let mut out = Vec::new();
        flatten(self, true, &mut out);
        out
    }

    pub fn disjuncts(&self) -> Vec<&BoolExpr> {
        let mut out = Vec::new();
        flatten(self, false, &mut out);
        out
    }

    /// A conjunction of clauses, each a disjunction of literals.
    pub fn is_cnf(&self) -> bool {
        self.conjuncts()
            .iter()
            .all(|c| c.disjuncts().iter().all(|l| l.is_literal()))
    }

    /// A disjunction of terms, each a conjunction of literals.
    pub fn is_dnf(&self) -> bool {
        self.disjuncts()
            .iter()
            .all(|t| t.conjuncts().iter().all(|l| l.is_literal()))
    }
}

fn flatten<'a>(e: &'a BoolExpr, and: bool, out: &mut Vec<&'a BoolExpr>) {
    match (e, and) {
        (BoolExpr::And(a, b), true) | (BoolExpr::Or(a, b), false) => {
            flatten(a, and, out);
            flatten(b, and, out);
        }
        _ => out.push(e),
    }
}

impl fmt::Display for BoolExpr {
    /// Surface syntax that [`parse_expr`] reads back to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn prec(e: &BoolExpr) -> u8 {
            match e {
                BoolExpr::Or(..) => 1,
                BoolExpr::And(..) => 2,
                _ => 3,
            }
        }
        fn write_operand(f: &mut fmt::Formatter<'_>, e: &BoolExpr, min: u8) -> fmt::Result {
            if prec(e) < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            BoolExpr::Const(b) => write!(f, "{b}"),
            BoolExpr::Var(v) => f.write_str(v),
            BoolExpr::Cmp { var, op, literal } => write!(f, "{var} {op} {literal}"),
            BoolExpr::Not(e) => {
                f.write_str("!")?;
                write_operand(f, e, 3)
            }
            // Both operators are left-associative: the right operand needs
            // parentheses at equal precedence.
            BoolExpr::And(a, b) => {
                write_operand(f, a, 2)?;
                f.write_str(" && ")?;
                write_operand(f, b, 3)
            }
            BoolExpr::Or(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str(" || ")?;
                write_operand(f, b, 2)
            }
        }
    }
}

fn cmp_values(
    var: &str,
    value: &Value,
    op: CompareOp,
    literal: &Literal,
) -> Result<bool, EvalError> {
    let mismatch =
        || EvalError::Validator(format!("cannot compare `{var}` = {value} with {literal}"));
    match (value, literal) {
        (Value::Int(_) | Value::Float(_), Literal::Int(_) | Literal::Float(_)) => {
            let x = value.as_f64().ok_or_else(mismatch)?;
            let y = match literal {
                Literal::Int(i) => *i as f64,
                Literal::Float(y) => *y,
                Literal::Symbol(_) => unreachable!(),
            };
            Ok(op.compare(x, y))
        }
        (Value::Symbol(s), Literal::Symbol(t)) if op.is_equality() => {
            Ok((s == t) == (op == CompareOp::Eq))
        }
        _ => Err(mismatch()),
    }
}

/// Evaluates `expr` over a final state with ordinary boolean semantics.
pub fn eval_expr(expr: &BoolExpr, state: &FinalState) -> Result<bool, EvalError> {
    let lookup = |name: &str| {
        state
            .get(name)
            .ok_or_else(|| EvalError::Validator(format!("unknown variable `{name}`")))
    };
    Ok(match expr {
        BoolExpr::Const(b) => *b,
        BoolExpr::Var(name) => lookup(name)?
            .as_bool()
            .ok_or_else(|| EvalError::Validator(format!("variable `{name}` is not boolean")))?,
        BoolExpr::Not(e) => !eval_expr(e, state)?,
        BoolExpr::And(a, b) => eval_expr(a, state)? && eval_expr(b, state)?,
        BoolExpr::Or(a, b) => eval_expr(a, state)? || eval_expr(b, state)?,
        BoolExpr::Cmp { var, op, literal } => cmp_values(var, lookup(var)?, *op, literal)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub guard: BoolExpr,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfThenChain {
    pub clauses: Vec<Clause>,
    pub default: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub label: Label,
    pub formula: BoolExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormRuleSet {
    pub rules: Vec<Rule>,
    pub default: Label,
}

pub fn validate_if_then(chain: &IfThenChain, state: &FinalState) -> Result<Label, EvalError> {
    for clause in &chain.clauses {
        if eval_expr(&clause.guard, state)? {
            return Ok(clause.label.clone());
        }
    }
    Ok(chain.default.clone())
}

/// First rule in declaration order whose formula holds; overlapping rules are
/// resolved by that order.
pub fn validate_normal_form(
    rules: &NormalFormRuleSet,
    state: &FinalState,
) -> Result<Label, EvalError> {
    for rule in &rules.rules {
        if eval_expr(&rule.formula, state)? {
            return Ok(rule.label.clone());
        }
    }
    Ok(rules.default.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "style", rename_all = "snake_case")]
pub enum Validator {
    IfThen(IfThenChain),
    NormalForm(NormalFormRuleSet),
}

impl Validator {
    pub fn decide(&self, state: &FinalState) -> Result<Label, EvalError> {
        match self {
            Validator::IfThen(c) => validate_if_then(c, state),
            Validator::NormalForm(r) => validate_normal_form(r, state),
        }
    }

    /// `(guard, label)` pairs in evaluation order.
    pub fn clauses(&self) -> Vec<(&BoolExpr, &Label)> {
        match self {
            Validator::IfThen(c) => c.clauses.iter().map(|c| (&c.guard, &c.label)).collect(),
            Validator::NormalForm(r) => r.rules.iter().map(|r| (&r.formula, &r.label)).collect(),
        }
    }

    pub fn default_label(&self) -> &Label {
        match self {
            Validator::IfThen(c) => &c.default,
            Validator::NormalForm(r) => &r.default,
        }
    }
}

/// Where a validator diagnostic points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Zero-based clause or rule index.
    Clause(usize),
    Default,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatorDiagnostic {
    pub location: Location,
    /// Offending variable, when the problem is about one.
    pub variable: Option<String>,
    pub message: String,
}

fn check_expr(
    expr: &BoolExpr,
    specs: &[VariableSpec],
    location: Location,
    out: &mut Vec<ValidatorDiagnostic>,
) {
    let diag = |var: &str, message: String| ValidatorDiagnostic {
        location,
        variable: Some(var.to_string()),
        message,
    };
    match expr {
        BoolExpr::Const(_) => {}
        BoolExpr::Var(name) => match specs.iter().find(|s| &s.name == name) {
            None => out.push(diag(name, format!("unknown variable {name}"))),
            Some(s) if !s.datatype.is_boolean() => out.push(diag(
                name,
                format!(
                    "variable {name} is {} and cannot be used as a condition",
                    s.datatype
                ),
            )),
            Some(_) => {}
        },
        BoolExpr::Cmp { var, op, literal } => match specs.iter().find(|s| &s.name == var) {
            None => out.push(diag(var, format!("unknown variable {var}"))),
            Some(s) => {
                let ok = match (&s.datatype, literal) {
                    (Datatype::Integer | Datatype::Float, Literal::Int(_) | Literal::Float(_)) => {
                        true
                    }
                    (Datatype::Enum(set), Literal::Symbol(sym)) => {
                        op.is_equality() && set.contains(sym)
                    }
                    _ => false,
                };
                if !ok {
                    out.push(diag(
                        var,
                        format!("cannot compare {var} ({}) {op} {literal}", s.datatype),
                    ));
                }
            }
        },
        BoolExpr::Not(e) => check_expr(e, specs, location, out),
        BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
            check_expr(a, specs, location, out);
            check_expr(b, specs, location, out);
        }
    }
}

/// Static checks: references, types, label membership and normal-form shape.
pub fn check_wellformed(
    validator: &Validator,
    specs: &[VariableSpec],
    labels: &[Label],
) -> Result<(), Vec<ValidatorDiagnostic>> {
    let mut out = Vec::new();
    let label_diag = |label: &Label, location| ValidatorDiagnostic {
        location,
        variable: None,
        message: format!("label {label} is not in the declared label set"),
    };
    for (i, (expr, label)) in validator.clauses().into_iter().enumerate() {
        let loc = Location::Clause(i);
        check_expr(expr, specs, loc, &mut out);
        if !labels.contains(label) {
            out.push(label_diag(label, loc));
        }
        if matches!(validator, Validator::NormalForm(_)) && !expr.is_cnf() && !expr.is_dnf() {
            out.push(ValidatorDiagnostic {
                location: loc,
                variable: None,
                message: "formula is neither in conjunctive nor disjunctive normal form".into(),
            });
        }
    }
    if !labels.contains(validator.default_label()) {
        out.push(label_diag(validator.default_label(), Location::Default));
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

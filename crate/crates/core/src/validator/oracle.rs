//! Exhaustive truth tables for all-Boolean validators.
//!
//! Evaluation here is bit-parallel: every expression becomes a bitset over all
//! `2^k` assignments (bit `m` is assignment `m`, variable `i` set iff bit `i`
//! of `m` is set). It shares no code with [`super::eval_expr`], which walks the
//! tree once per state, so the two can check each other.

use thiserror::Error;

use super::{BoolExpr, Label, Validator};
use crate::store::{FinalState, Value, VariableSpec};

pub const MAX_ORACLE_VARIABLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("variable `{0}` is not boolean")]
    NonBoolean(String),
    #[error("{0} variables exceed the oracle limit of {MAX_ORACLE_VARIABLES}")]
    TooManyVariables(usize),
    #[error("expression references unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("comparisons are not allowed over boolean variables")]
    Comparison,
}

/// The label of every Boolean assignment, indexed by assignment bitmask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub variables: Vec<String>,
    pub labels: Vec<Label>,
}

impl TruthTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, assignment: usize) -> &Label {
        &self.labels[assignment]
    }

    /// The state corresponding to an assignment bitmask.
    pub fn state(&self, assignment: usize) -> FinalState {
        self.variables
            .iter()
            .enumerate()
            .map(|(i, name)| (name.clone(), Value::Bool(assignment >> i & 1 == 1)))
            .collect()
    }

    pub fn count(&self, label: &Label) -> usize {
        self.labels.iter().filter(|l| *l == label).count()
    }
}

struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    fn filled(len: usize, value: bool) -> Self {
        let n = len.div_ceil(64);
        let mut b = Bits {
            words: vec![if value { u64::MAX } else { 0 }; n],
            len,
        };
        b.trim();
        b
    }

    fn trim(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    fn variable(len: usize, index: usize) -> Self {
        let mut b = Bits::filled(len, false);
        for m in 0..len {
            if m >> index & 1 == 1 {
                b.words[m / 64] |= 1 << (m % 64);
            }
        }
        b
    }

    fn get(&self, m: usize) -> bool {
        self.words[m / 64] >> (m % 64) & 1 == 1
    }

    fn zip(mut self, other: &Bits, f: impl Fn(u64, u64) -> u64) -> Self {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a = f(*a, *b);
        }
        self.trim();
        self
    }

    fn negate(mut self) -> Self {
        for w in &mut self.words {
            *w = !*w;
        }
        self.trim();
        self
    }
}

fn column(expr: &BoolExpr, vars: &[String], len: usize) -> Result<Bits, OracleError> {
    Ok(match expr {
        BoolExpr::Const(b) => Bits::filled(len, *b),
        BoolExpr::Var(name) => {
            let i = vars
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| OracleError::UnknownVariable(name.clone()))?;
            Bits::variable(len, i)
        }
        BoolExpr::Not(e) => column(e, vars, len)?.negate(),
        BoolExpr::And(a, b) => column(a, vars, len)?.zip(&column(b, vars, len)?, |x, y| x & y),
        BoolExpr::Or(a, b) => column(a, vars, len)?.zip(&column(b, vars, len)?, |x, y| x | y),
        BoolExpr::Cmp { .. } => return Err(OracleError::Comparison),
    })
}

/// Enumerates every Boolean assignment of `specs` and records the label the
/// validator's clause list assigns to it.
pub fn truth_table_oracle(
    validator: &Validator,
    specs: &[VariableSpec],
) -> Result<TruthTable, OracleError> {
    if let Some(s) = specs.iter().find(|s| !s.datatype.is_boolean()) {
        return Err(OracleError::NonBoolean(s.name.clone()));
    }
    if specs.len() > MAX_ORACLE_VARIABLES {
        return Err(OracleError::TooManyVariables(specs.len()));
    }
    let vars: Vec<String> = specs.iter().map(|s| s.name.clone()).collect();
    let len = 1usize << vars.len();

    let mut labels: Vec<Option<Label>> = vec![None; len];
    for (guard, label) in validator.clauses() {
        let bits = column(guard, &vars, len)?;
        for (m, slot) in labels.iter_mut().enumerate() {
            if slot.is_none() && bits.get(m) {
                *slot = Some(label.clone());
            }
        }
    }
    let default = validator.default_label();
    Ok(TruthTable {
        variables: vars,
        labels: labels
            .into_iter()
            .map(|l| l.unwrap_or_else(|| default.clone()))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Datatype;
    use crate::validator::{Clause, IfThenChain, NormalFormRuleSet, Rule};

    #[test]
    fn single_clause_one_variable() {
        let v = Validator::IfThen(IfThenChain {
            clauses: vec![Clause {
                guard: BoolExpr::var("a"),
                label: "L1".into(),
            }],
            default: "D".into(),
        });
        let t = truth_table_oracle(&v, &[VariableSpec::boolean("a")]).unwrap();
        assert_eq!(t.labels, vec![Label::from("D"), Label::from("L1")]);
    }

    #[test]
    fn constant_default() {
        let v = Validator::NormalForm(NormalFormRuleSet {
            rules: vec![],
            default: "0".into(),
        });
        let specs: Vec<_> = (0..5)
            .map(|i| VariableSpec::boolean(format!("v{i}")))
            .collect();
        let t = truth_table_oracle(&v, &specs).unwrap();
        assert_eq!(t.len(), 32);
        assert_eq!(t.count(&"0".into()), 32);
    }

    #[test]
    fn ade_rule_fires_on_three_assignments() {
        let names = ["drug", "effect", "scope", "explicit", "temporal", "negated"];
        let specs: Vec<_> = names.iter().map(|n| VariableSpec::boolean(*n)).collect();
        let v = Validator::NormalForm(NormalFormRuleSet {
            rules: vec![Rule {
                label: "1".into(),
                formula: BoolExpr::all([
                    BoolExpr::var("drug"),
                    BoolExpr::var("effect"),
                    BoolExpr::var("scope"),
                    BoolExpr::or(BoolExpr::var("explicit"), BoolExpr::var("temporal")),
                    BoolExpr::not(BoolExpr::var("negated")),
                ]),
            }],
            default: "0".into(),
        });
        let t = truth_table_oracle(&v, &specs).unwrap();
        let positives: Vec<usize> = (0..64).filter(|&m| t.label(m).as_str() == "1").collect();
        // bits: drug=1 effect=2 scope=4 explicit=8 temporal=16 negated=32
        assert_eq!(positives, vec![7 | 8, 7 | 16, 7 | 8 | 16]);
    }

    #[test]
    fn preconditions() {
        let v = Validator::IfThen(IfThenChain {
            clauses: vec![],
            default: "0".into(),
        });
        let float = [VariableSpec::new("x", Datatype::Float, Value::Float(0.0))];
        assert_eq!(
            truth_table_oracle(&v, &float),
            Err(OracleError::NonBoolean("x".into()))
        );
        let many: Vec<_> = (0..21)
            .map(|i| VariableSpec::boolean(format!("v{i}")))
            .collect();
        assert_eq!(
            truth_table_oracle(&v, &many),
            Err(OracleError::TooManyVariables(21))
        );
    }
}

//! The formula language used for comprehension, individualization and
//! metadata classification.
//!
//! A [`Predicate`] is validated once against a [`Shape`] (the attribute
//! names and kinds visible at the target) and then evaluated against any
//! object implementing [`Attributes`]. Evaluation of a validated predicate
//! never fails: an attribute missing from a particular object makes the
//! enclosing atomic formula false.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::{Kind, Value};

/// Attribute names visible to a predicate, with their kinds.
pub type Shape = BTreeMap<String, Kind>;

/// Read access to the attributes of one object.
pub trait Attributes {
    fn attribute(&self, name: &str) -> Option<Value>;
}

impl Attributes for BTreeMap<String, Value> {
    fn attribute(&self, name: &str) -> Option<Value> {
        self.get(name).cloned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operand {
    Field(String),
    Literal(Value),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Predicate {
    Const(bool),
    /// A boolean attribute used directly as a formula.
    Flag(String),
    Compare {
        op: CmpOp,
        left: Operand,
        right: Operand,
    },
    Member {
        operand: Operand,
        set: Vec<Value>,
    },
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredicateError {
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("cannot compare {left} with {right}")]
    KindMismatch { left: String, right: String },
    #[error("operator `{op}` is not defined for {kind}")]
    UnorderedKind { op: &'static str, kind: String },
    #[error("field `{0}` is not boolean")]
    NotBoolean(String),
}

/// Static type of an operand. Literals are looser than fields: a text
/// literal may stand for a media path or a reference id.
#[derive(Debug, Clone, PartialEq)]
enum OperandType {
    Field(Kind),
    Number,
    TextLiteral,
    Boolean,
    Exact(Kind),
}

impl OperandType {
    fn of(operand: &Operand, shape: &Shape) -> Result<Self, PredicateError> {
        match operand {
            Operand::Field(name) => shape
                .get(name)
                .cloned()
                .map(OperandType::Field)
                .ok_or_else(|| PredicateError::UnknownField(name.clone())),
            Operand::Literal(v) => Ok(OperandType::of_literal(v)),
        }
    }

    fn of_literal(v: &Value) -> Self {
        match v {
            Value::Integer(_) | Value::Real(_) => OperandType::Number,
            Value::Text(_) => OperandType::TextLiteral,
            Value::Boolean(_) => OperandType::Boolean,
            Value::Media(_) => OperandType::Exact(Kind::Media),
            Value::Ref(_) => OperandType::Exact(Kind::Ref(String::new())),
        }
    }

    fn kind(&self) -> Kind {
        match self {
            OperandType::Field(k) | OperandType::Exact(k) => k.clone(),
            OperandType::Number => Kind::Real,
            OperandType::TextLiteral => Kind::Text,
            OperandType::Boolean => Kind::Boolean,
        }
    }

    fn describe(&self) -> String {
        match self {
            OperandType::Field(k) => k.to_string(),
            OperandType::Number => "number".into(),
            OperandType::TextLiteral => "text".into(),
            OperandType::Boolean => "boolean".into(),
            OperandType::Exact(k) => k.to_string(),
        }
    }

    fn is_numeric(&self) -> bool {
        matches!(self, OperandType::Number) || self.kind().is_numeric()
    }

    fn compatible(&self, other: &OperandType) -> bool {
        use OperandType::*;
        if self.is_numeric() && other.is_numeric() {
            return true;
        }
        match (self, other) {
            (TextLiteral, TextLiteral) => true,
            (TextLiteral, t) | (t, TextLiteral) => {
                matches!(t.kind(), Kind::Text | Kind::Media | Kind::Ref(_))
            }
            (Boolean, t) | (t, Boolean) => t.kind() == Kind::Boolean,
            (a, b) => match (a.kind(), b.kind()) {
                (Kind::Ref(x), Kind::Ref(y)) => x == y || x.is_empty() || y.is_empty(),
                (x, y) => x == y,
            },
        }
    }

    fn is_ordered(&self) -> bool {
        matches!(self, OperandType::Number | OperandType::TextLiteral) || self.kind().is_ordered()
    }
}

impl Predicate {
    pub fn field_eq(field: &str, value: Value) -> Self {
        Predicate::Compare {
            op: CmpOp::Eq,
            left: Operand::Field(field.into()),
            right: Operand::Literal(value),
        }
    }

    pub fn and(self, other: Predicate) -> Self {
        Predicate::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Predicate) -> Self {
        Predicate::Or(Box::new(self), Box::new(other))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Predicate::Not(Box::new(self))
    }

    /// Checks that every field exists in `shape` and every comparison is
    /// well-kinded.
    pub fn validate(&self, shape: &Shape) -> Result<(), PredicateError> {
        match self {
            Predicate::Const(_) => Ok(()),
            Predicate::Flag(name) => match shape.get(name) {
                Some(Kind::Boolean) => Ok(()),
                Some(_) => Err(PredicateError::NotBoolean(name.clone())),
                None => Err(PredicateError::UnknownField(name.clone())),
            },
            Predicate::Compare { op, left, right } => {
                let l = OperandType::of(left, shape)?;
                let r = OperandType::of(right, shape)?;
                if !l.compatible(&r) {
                    return Err(PredicateError::KindMismatch {
                        left: l.describe(),
                        right: r.describe(),
                    });
                }
                if !op.is_equality() && !(l.is_ordered() && r.is_ordered()) {
                    let kind = if l.is_ordered() { r } else { l };
                    return Err(PredicateError::UnorderedKind {
                        op: op.symbol(),
                        kind: kind.describe(),
                    });
                }
                Ok(())
            }
            Predicate::Member { operand, set } => {
                let t = OperandType::of(operand, shape)?;
                for v in set {
                    let lt = OperandType::of_literal(v);
                    if !t.compatible(&lt) {
                        return Err(PredicateError::KindMismatch {
                            left: t.describe(),
                            right: lt.describe(),
                        });
                    }
                }
                Ok(())
            }
            Predicate::And(a, b) | Predicate::Or(a, b) => {
                a.validate(shape)?;
                b.validate(shape)
            }
            Predicate::Not(a) => a.validate(shape),
        }
    }

    pub fn evaluate<A: Attributes + ?Sized>(&self, obj: &A) -> bool {
        match self {
            Predicate::Const(b) => *b,
            Predicate::Flag(name) => obj
                .attribute(name)
                .and_then(|v| v.as_bool())
                .unwrap_or(false),
            Predicate::Compare { op, left, right } => {
                let (Some(l), Some(r)) = (resolve(left, obj), resolve(right, obj)) else {
                    return false;
                };
                compare(*op, &l, &r)
            }
            Predicate::Member { operand, set } => match resolve(operand, obj) {
                Some(v) => set.iter().any(|m| v.loosely_equals(m)),
                None => false,
            },
            Predicate::And(a, b) => a.evaluate(obj) && b.evaluate(obj),
            Predicate::Or(a, b) => a.evaluate(obj) || b.evaluate(obj),
            Predicate::Not(a) => !a.evaluate(obj),
        }
    }

    /// Nesting depth of the formula tree.
    pub fn depth(&self) -> usize {
        match self {
            Predicate::And(a, b) | Predicate::Or(a, b) => 1 + a.depth().max(b.depth()),
            Predicate::Not(a) => 1 + a.depth(),
            _ => 1,
        }
    }
}

fn resolve<A: Attributes + ?Sized>(operand: &Operand, obj: &A) -> Option<Value> {
    match operand {
        Operand::Field(name) => obj.attribute(name),
        Operand::Literal(v) => Some(v.clone()),
    }
}

fn compare(op: CmpOp, l: &Value, r: &Value) -> bool {
    match op {
        CmpOp::Eq => l.loosely_equals(r),
        CmpOp::Ne => !l.loosely_equals(r),
        _ => match l.compare(r) {
            Some(ord) => match op {
                CmpOp::Lt => ord.is_lt(),
                CmpOp::Le => ord.is_le(),
                CmpOp::Gt => ord.is_gt(),
                CmpOp::Ge => ord.is_ge(),
                CmpOp::Eq | CmpOp::Ne => unreachable!(),
            },
            None => false,
        },
    }
}

// Precedence levels for printing: or < and < unary.
const PREC_OR: u8 = 0;
const PREC_AND: u8 = 1;
const PREC_UNARY: u8 = 2;

impl Predicate {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let (prec, parens) = match self {
            Predicate::Or(..) => (PREC_OR, PREC_OR < min),
            Predicate::And(..) => (PREC_AND, PREC_AND < min),
            _ => (PREC_UNARY, false),
        };
        if parens {
            f.write_str("(")?;
        }
        match self {
            Predicate::Const(b) => write!(f, "{b}")?,
            Predicate::Flag(name) => f.write_str(name)?,
            Predicate::Compare { op, left, right } => {
                write!(f, "{} {} {}", OperandDisplay(left), op.symbol(), OperandDisplay(right))?
            }
            Predicate::Member { operand, set } => {
                write!(f, "{} in {{", OperandDisplay(operand))?;
                for (i, v) in set.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", LiteralDisplay(v))?;
                }
                f.write_str("}")?;
            }
            Predicate::And(a, b) => {
                a.fmt_prec(f, prec)?;
                f.write_str(" and ")?;
                b.fmt_prec(f, prec + 1)?;
            }
            Predicate::Or(a, b) => {
                a.fmt_prec(f, prec)?;
                f.write_str(" or ")?;
                b.fmt_prec(f, prec + 1)?;
            }
            Predicate::Not(a) => {
                f.write_str("not ")?;
                a.fmt_prec(f, PREC_UNARY)?;
            }
        }
        if parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, PREC_OR)
    }
}

struct OperandDisplay<'a>(&'a Operand);

impl fmt::Display for OperandDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Operand::Field(name) => f.write_str(name),
            Operand::Literal(v) => write!(f, "{}", LiteralDisplay(v)),
        }
    }
}

/// Literal syntax inside formulas: reference ids are quoted, since a bare
/// identifier there names a field.
struct LiteralDisplay<'a>(&'a Value);

impl fmt::Display for LiteralDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Value::Ref(id) => f.write_str(&crate::value::quote(id)),
            v => write!(f, "{v}"),
        }
    }
}

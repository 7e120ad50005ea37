//! Attribute kinds and values shared by every store in the engine.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// The closed set of attribute kinds a concept field may declare.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Integer,
    Real,
    Text,
    Boolean,
    /// Opaque reference to a media payload (path or URL).
    Media,
    /// Reference to an individual of the named concept.
    Ref(String),
}

impl Kind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Kind::Integer | Kind::Real)
    }

    /// Whether `<`, `<=`, `>`, `>=` are defined for values of this kind.
    pub fn is_ordered(&self) -> bool {
        matches!(self, Kind::Integer | Kind::Real | Kind::Text)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Integer => f.write_str("integer"),
            Kind::Real => f.write_str("real"),
            Kind::Text => f.write_str("text"),
            Kind::Boolean => f.write_str("boolean"),
            Kind::Media => f.write_str("media"),
            Kind::Ref(c) => write!(f, "ref {c}"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Value {
    Integer(i64),
    Real(f64),
    Text(String),
    Boolean(bool),
    Media(String),
    Ref(String),
}

impl Value {
    /// Whether this value may be stored in a field of `kind`.
    ///
    /// Reference values carry only the target id; the concept of the target
    /// is checked by the store, not here.
    pub fn conforms_to(&self, kind: &Kind) -> bool {
        matches!(
            (self, kind),
            (Value::Integer(_), Kind::Integer)
                | (Value::Real(_), Kind::Real)
                | (Value::Text(_), Kind::Text)
                | (Value::Boolean(_), Kind::Boolean)
                | (Value::Media(_), Kind::Media)
                | (Value::Ref(_), Kind::Ref(_))
        )
    }

    /// Coerces a literal into `kind` where the conversion is lossless in
    /// intent: integers widen to reals, text becomes a media or reference
    /// id. Returns `None` when no coercion applies.
    pub fn coerce_to(self, kind: &Kind) -> Option<Value> {
        match (self, kind) {
            (v, k) if v.conforms_to(k) => Some(v),
            (Value::Integer(i), Kind::Real) => Some(Value::Real(i as f64)),
            (Value::Text(s), Kind::Media) => Some(Value::Media(s)),
            (Value::Text(s), Kind::Ref(_)) => Some(Value::Ref(s)),
            _ => None,
        }
    }

    /// Reads a plain JSON scalar as a value of `kind`.
    pub fn from_json(kind: &Kind, json: &serde_json::Value) -> Option<Value> {
        let raw = match json {
            serde_json::Value::Bool(b) => Value::Boolean(*b),
            serde_json::Value::String(s) => Value::Text(s.clone()),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => Value::Integer(i),
                None => Value::Real(n.as_f64()?),
            },
            _ => return None,
        };
        raw.coerce_to(kind)
    }

    /// Plain JSON scalar; the inverse of [`Value::from_json`] up to kind.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Integer(i) => (*i).into(),
            Value::Real(r) => serde_json::Number::from_f64(*r)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Value::Boolean(b) => (*b).into(),
            Value::Text(s) | Value::Media(s) | Value::Ref(s) => s.clone().into(),
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Boolean(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) | Value::Media(s) | Value::Ref(s) => Some(s),
            _ => None,
        }
    }

    /// Compares two values under the predicate semantics: numbers compare
    /// numerically across integer/real, text by code point, everything
    /// else only for equality. `None` means the pair is incomparable.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Integer(a), Value::Integer(b)) => Some(a.cmp(b)),
            (a, b) if a.as_f64().is_some() && b.as_f64().is_some() => {
                Some(a.as_f64()?.total_cmp(&b.as_f64()?))
            }
            (Value::Text(a), Value::Text(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    /// Equality under the predicate semantics. Text literals compare equal
    /// to media and reference values carrying the same string.
    pub fn loosely_equals(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Boolean(a), Value::Boolean(b)) => a == b,
            (a, b) if a.as_f64().is_some() && b.as_f64().is_some() => {
                self.compare(other) == Some(Ordering::Equal)
            }
            (a, b) => match (a.as_str(), b.as_str()) {
                (Some(x), Some(y)) => x == y,
                _ => false,
            },
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Integer(a), Value::Integer(b)) => a == b,
            (Value::Real(a), Value::Real(b)) => a.to_bits() == b.to_bits(),
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Boolean(a), Value::Boolean(b)) => a == b,
            (Value::Media(a), Value::Media(b)) => a == b,
            (Value::Ref(a), Value::Ref(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Integer(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r:?}"),
            Value::Text(s) | Value::Media(s) => f.write_str(&quote(s)),
            Value::Boolean(b) => write!(f, "{b}"),
            Value::Ref(id) => f.write_str(id),
        }
    }
}

/// Renders `s` as a double-quoted literal with the escapes the schema
/// lexer understands.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_numeric_comparison() {
        assert_eq!(
            Value::Integer(2).compare(&Value::Real(2.5)),
            Some(Ordering::Less)
        );
        assert!(Value::Integer(3).loosely_equals(&Value::Real(3.0)));
    }

    #[test]
    fn text_orders_by_code_point() {
        let a = Value::Text("Z".into());
        let b = Value::Text("a".into());
        assert_eq!(a.compare(&b), Some(Ordering::Less));
    }

    #[test]
    fn media_is_unordered() {
        let a = Value::Media("x".into());
        assert_eq!(a.compare(&a), None);
        assert!(a.loosely_equals(&Value::Text("x".into())));
    }

    #[test]
    fn coercions() {
        assert_eq!(
            Value::Integer(4).coerce_to(&Kind::Real),
            Some(Value::Real(4.0))
        );
        assert_eq!(
            Value::Text("e1".into()).coerce_to(&Kind::Ref("Employee".into())),
            Some(Value::Ref("e1".into()))
        );
        assert_eq!(Value::Real(1.5).coerce_to(&Kind::Integer), None);
    }
}

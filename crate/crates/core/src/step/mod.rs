//! Reader for ISO 10303-21 ("STEP Part 21") exchange files.
//!
//! The reader produces a flat entity table keyed by instance number. It does
//! not interpret any schema; [`crate::ifc`] does that on top of [`StepFile`].

mod escape;
mod lexer;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use parser::{parse_step, parse_step_bytes};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {reason}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("duplicate instance id #{0}")]
    DuplicateId(u64),
    #[error("file has no DATA section")]
    MissingDataSection,
}

/// A single attribute value of an entity instance.
#[derive(Debug, Clone, PartialEq)]
pub enum StepValue {
    Integer(i64),
    Real(f64),
    String(String),
    /// Enumeration literal without the surrounding dots, e.g. `SOURCE`.
    Enum(String),
    Ref(u64),
    /// Typed parameter such as `IFCLABEL('x')`.
    Typed(String, Box<StepValue>),
    List(Vec<StepValue>),
    Null,
    Derived,
}

impl StepValue {
    /// Looks through a typed wrapper, e.g. `IFCLABEL('x')` yields `'x'`.
    pub fn untyped(&self) -> &StepValue {
        match self {
            StepValue::Typed(_, inner) => inner.untyped(),
            v => v,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self.untyped() {
            StepValue::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_ref_id(&self) -> Option<u64> {
        match self {
            StepValue::Ref(id) => Some(*id),
            _ => None,
        }
    }

    /// Numeric value; integers are widened.
    pub fn as_real(&self) -> Option<f64> {
        match self.untyped() {
            StepValue::Real(v) => Some(*v),
            StepValue::Integer(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_enum(&self) -> Option<&str> {
        match self.untyped() {
            StepValue::Enum(e) => Some(e),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[StepValue]> {
        match self.untyped() {
            StepValue::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, StepValue::Null)
    }

    /// Every instance reference nested anywhere inside this value.
    pub fn refs(&self) -> Vec<u64> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs(&self, out: &mut Vec<u64>) {
        match self {
            StepValue::Ref(id) => out.push(*id),
            StepValue::Typed(_, inner) => inner.collect_refs(out),
            StepValue::List(items) => items.iter().for_each(|v| v.collect_refs(out)),
            _ => {}
        }
    }
}

impl fmt::Display for StepValue {
    /// Writes the value back in Part 21 syntax.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepValue::Integer(v) => write!(f, "{v}"),
            StepValue::Real(v) => f.write_str(&format_real(*v)),
            StepValue::String(s) => f.write_str(&escape::encode_string(s)),
            StepValue::Enum(e) => write!(f, ".{e}."),
            StepValue::Ref(id) => write!(f, "#{id}"),
            StepValue::Typed(name, inner) => write!(f, "{name}({inner})"),
            StepValue::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
            StepValue::Null => f.write_str("$"),
            StepValue::Derived => f.write_str("*"),
        }
    }
}

/// Shortest round-tripping representation that still carries the mandatory
/// decimal point, e.g. `0.`, `-1.5`, `1.E-7`.
fn format_real(v: f64) -> String {
    let s = format!("{v:?}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let mantissa = if mantissa.contains('.') { mantissa.to_string() } else { format!("{mantissa}.") };
            format!("{mantissa}E{exp}")
        }
        None => s,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepEntity {
    pub id: u64,
    /// Upper-case entity name, e.g. `IFCSPACE`.
    pub type_name: String,
    pub args: Vec<StepValue>,
}

impl StepEntity {
    pub fn arg(&self, index: usize) -> Option<&StepValue> {
        self.args.get(index)
    }

    pub fn str_arg(&self, index: usize) -> Option<&str> {
        self.arg(index).and_then(StepValue::as_str)
    }

    pub fn ref_arg(&self, index: usize) -> Option<u64> {
        self.arg(index).and_then(StepValue::as_ref_id)
    }

    pub fn real_arg(&self, index: usize) -> Option<f64> {
        self.arg(index).and_then(StepValue::as_real)
    }

    pub fn enum_arg(&self, index: usize) -> Option<&str> {
        self.arg(index).and_then(StepValue::as_enum)
    }

    /// References held in a list-valued argument, skipping anything else.
    pub fn ref_list_arg(&self, index: usize) -> Vec<u64> {
        self.arg(index)
            .and_then(StepValue::as_list)
            .map(|items| items.iter().filter_map(StepValue::as_ref_id).collect())
            .unwrap_or_default()
    }
}

impl fmt::Display for StepEntity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}={}(", self.id, self.type_name)?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{arg}")?;
        }
        f.write_str(");")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepHeader {
    pub description: Vec<String>,
    pub name: String,
    pub schema: Vec<String>,
}

/// A reference `#to` held by entity `#from` that points at no entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DanglingRef {
    pub from: u64,
    pub to: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepFile {
    pub header: StepHeader,
    pub entities: BTreeMap<u64, StepEntity>,
    /// Filled by [`resolve_refs`]; sorted by `(from, to)`.
    pub dangling: Vec<DanglingRef>,
}

impl StepFile {
    pub fn get(&self, id: u64) -> Option<&StepEntity> {
        self.entities.get(&id)
    }

    /// Entities of one type in instance-id order. `type_name` is matched
    /// case-insensitively.
    pub fn of_type<'a>(&'a self, type_name: &'a str) -> impl Iterator<Item = &'a StepEntity> + 'a {
        self.entities.values().filter(move |e| e.type_name.eq_ignore_ascii_case(type_name))
    }

    pub fn is_dangling(&self, from: u64, to: u64) -> bool {
        self.dangling.binary_search(&DanglingRef { from, to }).is_ok()
    }
}

/// Checks every reference in the file and records the ones that point at a
/// missing instance. Never fails; downstream code decides what a dangling
/// reference means.
pub fn resolve_refs(mut file: StepFile) -> StepFile {
    let mut dangling: Vec<DanglingRef> = file
        .entities
        .values()
        .flat_map(|e| e.args.iter().flat_map(StepValue::refs).map(move |to| DanglingRef { from: e.id, to }))
        .filter(|r| !file.entities.contains_key(&r.to))
        .collect();
    dangling.sort();
    dangling.dedup();
    file.dangling = dangling;
    file
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_keep_a_decimal_point() {
        assert_eq!(format_real(0.0), "0.0");
        assert_eq!(format_real(-2.5), "-2.5");
        assert_eq!(format_real(1e-7), "1.E-7");
        assert_eq!(format_real(1.5e300), "1.5E300");
    }

    #[test]
    fn nested_refs_are_collected() {
        let v = StepValue::List(vec![
            StepValue::Ref(3),
            StepValue::Typed("X".into(), Box::new(StepValue::List(vec![StepValue::Ref(4)]))),
            StepValue::Null,
        ]);
        assert_eq!(v.refs(), vec![3, 4]);
    }
}

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

/// Identifier of a device in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeviceId(pub u32);

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValueError {
    #[error("cannot compare {0} with {1}")]
    Incomparable(String, String),
}

/// A local value: a tree of data constructors with primitive leaves.
///
/// Tuples are `Constructor("Tuple", ..)` and 2-D vectors are
/// `Constructor("Vec2", [x, y])`.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalValue {
    Num(f64),
    Bool(bool),
    Str(String),
    Null,
    Device(DeviceId),
    Constructor(String, Vec<LocalValue>),
}

impl LocalValue {
    pub fn tuple(items: Vec<LocalValue>) -> Self {
        LocalValue::Constructor("Tuple".into(), items)
    }

    pub fn vec2(x: f64, y: f64) -> Self {
        LocalValue::Constructor("Vec2".into(), vec![LocalValue::Num(x), LocalValue::Num(y)])
    }

    pub fn symbol(name: &str) -> Self {
        LocalValue::Constructor(name.into(), Vec::new())
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            LocalValue::Num(n) => Some(*n),
            LocalValue::Device(d) => Some(d.0 as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            LocalValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_vec2(&self) -> Option<(f64, f64)> {
        match self {
            LocalValue::Constructor(name, args) if name == "Vec2" && args.len() == 2 => {
                Some((args[0].as_num()?, args[1].as_num()?))
            }
            _ => None,
        }
    }

    /// Components of a tuple value.
    pub fn tuple_items(&self) -> Option<&[LocalValue]> {
        match self {
            LocalValue::Constructor(name, args) if name == "Tuple" => Some(args),
            _ => None,
        }
    }

    /// Short name of the value's kind, used in diagnostics.
    pub fn kind_name(&self) -> String {
        match self {
            LocalValue::Num(_) => "number".into(),
            LocalValue::Bool(_) => "boolean".into(),
            LocalValue::Str(_) => "string".into(),
            LocalValue::Null => "null".into(),
            LocalValue::Device(_) => "device id".into(),
            LocalValue::Constructor(name, args) => format!("{}/{}", name, args.len()),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            LocalValue::Constructor(_, args) => 1 + args.iter().map(|a| a.depth()).max().unwrap_or(0),
            _ => 1,
        }
    }
}

/// Total order within each comparable class of local values.
///
/// Numbers (with device ids read as numbers) order with `-infinity < finite <
/// +infinity`; booleans order `False < True`; strings lexicographically;
/// constructor trees of the same name and arity lexicographically by
/// argument. Anything else is incomparable.
pub fn compare(a: &LocalValue, b: &LocalValue) -> Result<Ordering, ValueError> {
    use LocalValue::*;
    match (a, b) {
        (Device(x), Device(y)) => Ok(x.cmp(y)),
        (Num(_) | Device(_), Num(_) | Device(_)) => Ok(a.as_num().unwrap().total_cmp(&b.as_num().unwrap())),
        (Bool(x), Bool(y)) => Ok(x.cmp(y)),
        (Str(x), Str(y)) => Ok(x.cmp(y)),
        (Null, Null) => Ok(Ordering::Equal),
        (Constructor(n1, a1), Constructor(n2, a2)) if n1 == n2 && a1.len() == a2.len() => {
            for (x, y) in a1.iter().zip(a2) {
                match compare(x, y)? {
                    Ordering::Equal => continue,
                    other => return Ok(other),
                }
            }
            Ok(Ordering::Equal)
        }
        _ => Err(ValueError::Incomparable(a.kind_name(), b.kind_name())),
    }
}

/// Structural equality, used by `==` and by the reactive wake rule.
///
/// Numbers compare exactly; a device id equals the number with the same value.
pub fn local_equal(a: &LocalValue, b: &LocalValue) -> bool {
    use LocalValue::*;
    match (a, b) {
        (Device(x), Num(n)) | (Num(n), Device(x)) => x.0 as f64 == *n,
        (Constructor(n1, a1), Constructor(n2, a2)) => {
            n1 == n2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| local_equal(x, y))
        }
        _ => a == b,
    }
}

/// Formats a number the way the surface syntax writes it.
pub fn format_number(n: f64) -> String {
    if n.is_nan() {
        "nan".into()
    } else if n == f64::INFINITY {
        "infinity".into()
    } else if n == f64::NEG_INFINITY {
        "-infinity".into()
    } else if n == 0.0 {
        // normalise -0
        "0".into()
    } else {
        format!("{}", n)
    }
}

pub(crate) fn escape_str(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}

impl fmt::Display for LocalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalValue::Num(n) => f.write_str(&format_number(*n)),
            LocalValue::Bool(true) => f.write_str("True"),
            LocalValue::Bool(false) => f.write_str("False"),
            LocalValue::Str(s) => {
                let mut out = String::new();
                escape_str(s, &mut out);
                f.write_str(&out)
            }
            LocalValue::Null => f.write_str("Null"),
            LocalValue::Device(d) => write!(f, "#{}", d.0),
            LocalValue::Constructor(name, args) => {
                f.write_str(name)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{}", a)?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

//! Runtime values: local values, neighbouring values and value trees.

mod encode;
mod local;
mod tree;

use std::collections::BTreeMap;
use std::fmt;

pub use encode::{decode_tree, decode_value, encode_tree, encode_value, DecodeError};
pub(crate) use local::escape_str;
pub use local::{compare, format_number, local_equal, DeviceId, LocalValue, ValueError};
pub use tree::{vt_lookup, Branch, Path, PathStep, Tag, ValueTree};

/// A neighbouring value: a map from device ids to local values.
///
/// The entry for `self_id` is always present and carries the device's own
/// evaluation; folds decide whether to count it.
#[derive(Debug, Clone, PartialEq)]
pub struct NbrValue {
    pub self_id: DeviceId,
    pub entries: BTreeMap<DeviceId, LocalValue>,
}

impl NbrValue {
    /// A field holding only the self entry.
    pub fn singleton(self_id: DeviceId, own: LocalValue) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(self_id, own);
        NbrValue { self_id, entries }
    }

    pub fn own(&self) -> &LocalValue {
        &self.entries[&self.self_id]
    }

    pub fn get(&self, id: DeviceId) -> Option<&LocalValue> {
        self.entries.get(&id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries other than the self entry.
    pub fn others(&self) -> impl Iterator<Item = (DeviceId, &LocalValue)> {
        let me = self.self_id;
        self.entries
            .iter()
            .filter(move |(k, _)| **k != me)
            .map(|(k, v)| (*k, v))
    }
}

/// Either kind of value an expression can produce.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Local(LocalValue),
    Field(NbrValue),
}

impl Value {
    pub fn as_local(&self) -> Option<&LocalValue> {
        match self {
            Value::Local(v) => Some(v),
            Value::Field(_) => None,
        }
    }

    pub fn into_local(self) -> Option<LocalValue> {
        match self {
            Value::Local(v) => Some(v),
            Value::Field(_) => None,
        }
    }
}

impl From<LocalValue> for Value {
    fn from(v: LocalValue) -> Self {
        Value::Local(v)
    }
}

impl From<NbrValue> for Value {
    fn from(v: NbrValue) -> Self {
        Value::Field(v)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&encode_value(self))
    }
}

/// Structural equality over values. Neighbouring values are equal when their
/// entry maps are, regardless of insertion order.
pub fn equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Local(x), Value::Local(y)) => local_equal(x, y),
        (Value::Field(x), Value::Field(y)) => {
            x.self_id == y.self_id
                && x.entries.len() == y.entries.len()
                && x.entries
                    .iter()
                    .zip(&y.entries)
                    .all(|((k1, v1), (k2, v2))| k1 == k2 && local_equal(v1, v2))
        }
        _ => false,
    }
}

/// Structural equality over whole value trees.
pub fn trees_equal(a: &ValueTree, b: &ValueTree) -> bool {
    a.tag == b.tag
        && equal(&a.value, &b.value)
        && a.children.len() == b.children.len()
        && a.children.iter().zip(&b.children).all(|(x, y)| trees_equal(x, y))
}

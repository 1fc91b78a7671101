//! Stable text encoding of values and value trees.
//!
//! Local values print in surface syntax (`3`, `infinity`, `True`, `"s"`,
//! `Tuple(1, 2)`), device ids as `#4`. A neighbouring value prints as
//! `{@self; id: value, ...}` with entries in ascending id order. A tree node
//! prints as `(value tag? child*)` where the tag is `/then`, `/else` or
//! `:function`.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{escape_str, Branch, DeviceId, LocalValue, NbrValue, Tag, Value, ValueTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed value encoding at byte {offset}: {message}")]
pub struct DecodeError {
    pub offset: usize,
    pub message: String,
}

pub fn encode_value(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out
}

pub fn encode_tree(t: &ValueTree) -> String {
    let mut out = String::new();
    write_tree(t, &mut out);
    out
}

fn write_local(v: &LocalValue, out: &mut String) {
    match v {
        LocalValue::Str(s) => escape_str(s, out),
        LocalValue::Constructor(name, args) if !args.is_empty() => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_local(a, out);
            }
            out.push(')');
        }
        other => out.push_str(&other.to_string()),
    }
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Local(l) => write_local(l, out),
        Value::Field(f) => {
            out.push_str(&format!("{{@{};", f.self_id.0));
            for (i, (k, v)) in f.entries.iter().enumerate() {
                out.push_str(if i == 0 { " " } else { ", " });
                out.push_str(&format!("{}: ", k.0));
                write_local(v, out);
            }
            out.push('}');
        }
    }
}

fn write_tree(t: &ValueTree, out: &mut String) {
    out.push('(');
    write_value(&t.value, out);
    match &t.tag {
        Tag::None => {}
        Tag::Branch(Branch::Then) => out.push_str(" /then"),
        Tag::Branch(Branch::Else) => out.push_str(" /else"),
        Tag::Frame(name) => {
            out.push_str(" :");
            out.push_str(name);
        }
    }
    for c in &t.children {
        out.push(' ');
        write_tree(c, out);
    }
    out.push(')');
}

pub fn decode_value(text: &str) -> Result<Value, DecodeError> {
    let mut d = Decoder {
        src: text.as_bytes(),
        pos: 0,
    };
    let v = d.value()?;
    d.finish()?;
    Ok(v)
}

pub fn decode_tree(text: &str) -> Result<ValueTree, DecodeError> {
    let mut d = Decoder {
        src: text.as_bytes(),
        pos: 0,
    };
    let t = d.tree()?;
    d.finish()?;
    Ok(t)
}

struct Decoder<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Decoder<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, DecodeError> {
        Err(DecodeError {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), DecodeError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn finish(&mut self) -> Result<(), DecodeError> {
        self.skip_ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            self.err("trailing input")
        }
    }

    fn word(&mut self) -> &str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, b'_' | b'-' | b'.' | b'+') {
                self.pos += 1;
            } else {
                break;
            }
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn tree(&mut self) -> Result<ValueTree, DecodeError> {
        self.expect(b'(')?;
        let value = self.value()?;
        self.skip_ws();
        let tag = match self.peek() {
            Some(b'/') => {
                self.pos += 1;
                match self.word() {
                    "then" => Tag::Branch(Branch::Then),
                    "else" => Tag::Branch(Branch::Else),
                    other => {
                        let other = other.to_string();
                        return self.err(format!("unknown branch tag '{}'", other));
                    }
                }
            }
            Some(b':') => {
                self.pos += 1;
                let name = self.word().to_string();
                if name.is_empty() {
                    return self.err("empty frame name");
                }
                Tag::Frame(name.into())
            }
            _ => Tag::None,
        };
        let mut children = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                Some(b'(') => children.push(self.tree()?),
                _ => return self.err("expected child or ')'"),
            }
        }
        Ok(ValueTree { value, tag, children })
    }

    fn value(&mut self) -> Result<Value, DecodeError> {
        self.skip_ws();
        if self.peek() == Some(b'{') {
            self.pos += 1;
            self.expect(b'@')?;
            let self_id = self.device_number()?;
            self.expect(b';')?;
            let mut entries = BTreeMap::new();
            self.skip_ws();
            if self.peek() != Some(b'}') {
                loop {
                    self.skip_ws();
                    let id = self.device_number()?;
                    self.expect(b':')?;
                    let v = self.local()?;
                    entries.insert(id, v);
                    self.skip_ws();
                    if self.peek() == Some(b',') {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
            }
            self.expect(b'}')?;
            if !entries.contains_key(&self_id) {
                return self.err("neighbouring value lacks its self entry");
            }
            Ok(Value::Field(NbrValue { self_id, entries }))
        } else {
            Ok(Value::Local(self.local()?))
        }
    }

    fn device_number(&mut self) -> Result<DeviceId, DecodeError> {
        self.skip_ws();
        let w = self.word().to_string();
        match w.parse::<u32>() {
            Ok(n) => Ok(DeviceId(n)),
            Err(_) => self.err(format!("bad device id '{}'", w)),
        }
    }

    fn local(&mut self) -> Result<LocalValue, DecodeError> {
        self.skip_ws();
        match self.peek() {
            Some(b'"') => self.string().map(LocalValue::Str),
            Some(b'#') => {
                self.pos += 1;
                self.device_number().map(LocalValue::Device)
            }
            Some(c) if c.is_ascii_uppercase() => {
                let name = self.word().to_string();
                match name.as_str() {
                    "True" => return Ok(LocalValue::Bool(true)),
                    "False" => return Ok(LocalValue::Bool(false)),
                    "Null" => return Ok(LocalValue::Null),
                    _ => {}
                }
                let mut args = Vec::new();
                if self.peek() == Some(b'(') {
                    self.pos += 1;
                    loop {
                        args.push(self.local()?);
                        self.skip_ws();
                        match self.peek() {
                            Some(b',') => self.pos += 1,
                            Some(b')') => {
                                self.pos += 1;
                                break;
                            }
                            _ => return self.err("expected ',' or ')'"),
                        }
                    }
                }
                Ok(LocalValue::Constructor(name, args))
            }
            Some(c) if c == b'-' || c.is_ascii_digit() || c == b'i' || c == b'n' => {
                let w = self.word().to_string();
                let n = match w.as_str() {
                    "infinity" => f64::INFINITY,
                    "-infinity" => f64::NEG_INFINITY,
                    "nan" => f64::NAN,
                    _ => match w.parse::<f64>() {
                        Ok(n) => n,
                        Err(_) => return self.err(format!("bad number '{}'", w)),
                    },
                };
                Ok(LocalValue::Num(n))
            }
            _ => self.err("expected a value"),
        }
    }

    fn string(&mut self) -> Result<String, DecodeError> {
        self.pos += 1;
        let mut bytes = Vec::new();
        loop {
            match self.peek() {
                None => return self.err("unterminated string"),
                Some(b'"') => {
                    self.pos += 1;
                    break;
                }
                Some(b'\\') => {
                    self.pos += 1;
                    let c = match self.peek() {
                        Some(b'n') => b'\n',
                        Some(b't') => b'\t',
                        Some(b'"') => b'"',
                        Some(b'\\') => b'\\',
                        _ => return self.err("bad escape"),
                    };
                    bytes.push(c);
                    self.pos += 1;
                }
                Some(c) => {
                    bytes.push(c);
                    self.pos += 1;
                }
            }
        }
        String::from_utf8(bytes).or_else(|_| self.err("invalid utf-8 in string"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_local() -> impl Strategy<Value = LocalValue> {
        let leaf = prop_oneof![
            any::<f64>()
                .prop_filter("nan never compares equal", |n| !n.is_nan())
                .prop_map(LocalValue::Num),
            Just(LocalValue::Num(f64::INFINITY)),
            Just(LocalValue::Num(f64::NEG_INFINITY)),
            (-1000i32..1000).prop_map(|n| LocalValue::Num(n as f64)),
            any::<bool>().prop_map(LocalValue::Bool),
            "[a-z \"\\\\]{0,6}".prop_map(LocalValue::Str),
            Just(LocalValue::Null),
            (0u32..50).prop_map(|n| LocalValue::Device(DeviceId(n))),
            "[A-Z][a-z]{0,4}"
                .prop_filter("reserved", |s| !matches!(s.as_str(), "True" | "False" | "Null"))
                .prop_map(|s| LocalValue::Constructor(s, vec![])),
        ];
        leaf.prop_recursive(3, 16, 3, |inner| {
            ("[A-Z][a-z]{0,4}", prop::collection::vec(inner, 1..3))
                .prop_filter("reserved", |(s, _)| !matches!(s.as_str(), "True" | "False" | "Null"))
                .prop_map(|(name, args)| LocalValue::Constructor(name, args))
        })
    }

    fn arb_value() -> impl Strategy<Value = Value> {
        prop_oneof![
            arb_local().prop_map(Value::Local),
            (
                0u32..5,
                prop::collection::btree_map(0u32..8, arb_local(), 0..4),
                arb_local()
            )
                .prop_map(|(me, entries, own)| {
                    let mut entries: BTreeMap<DeviceId, LocalValue> =
                        entries.into_iter().map(|(k, v)| (DeviceId(k), v)).collect();
                    entries.insert(DeviceId(me), own);
                    Value::Field(NbrValue {
                        self_id: DeviceId(me),
                        entries,
                    })
                }),
        ]
    }

    pub(crate) fn arb_tree() -> impl Strategy<Value = ValueTree> {
        let tag = prop_oneof![
            Just(Tag::None),
            Just(Tag::Branch(Branch::Then)),
            Just(Tag::Branch(Branch::Else)),
            "[a-z][a-z0-9_-]{0,6}".prop_map(|s| Tag::Frame(s.into())),
        ];
        let leaf = (arb_value(), tag.clone()).prop_map(|(value, tag)| ValueTree {
            value,
            tag,
            children: vec![],
        });
        leaf.prop_recursive(4, 32, 4, move |inner| {
            (arb_value(), tag.clone(), prop::collection::vec(inner, 0..4))
                .prop_map(|(value, tag, children)| ValueTree { value, tag, children })
        })
    }

    proptest! {
        #[test]
        fn tree_encoding_round_trips(t in arb_tree()) {
            let text = encode_tree(&t);
            let back = decode_tree(&text).unwrap();
            prop_assert_eq!(&back, &t);
            prop_assert_eq!(encode_tree(&back), text);
        }
    }

    #[test]
    fn field_encoding_is_ordered() {
        let mut f = NbrValue::singleton(DeviceId(2), LocalValue::Num(1.0));
        f.entries.insert(DeviceId(0), LocalValue::Bool(true));
        assert_eq!(encode_value(&Value::Field(f)), "{@2; 0: True, 2: 1}");
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode_value("Tuple(1,").is_err());
        assert!(decode_tree("(1 /sideways)").is_err());
        assert!(decode_value("{@1; 0: 3}").is_err());
    }
}

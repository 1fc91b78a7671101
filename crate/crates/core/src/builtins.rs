//! Built-in functions: operators, tuple access, hood folds and geometry.
//!
//! Operators on local values are lifted pointwise by the evaluator when an
//! argument is a neighbouring value; folds consume neighbouring values.

use std::cmp::Ordering;

use thiserror::Error;

use crate::value::{compare, local_equal, LocalValue, NbrValue, ValueError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuiltinError {
    #[error("{op}: expected {expected}, found {found}")]
    Type {
        op: &'static str,
        expected: &'static str,
        found: String,
    },
    #[error("{0}")]
    Value(#[from] ValueError),
    #[error("{op}: index {index} out of range for {value}")]
    Index {
        op: &'static str,
        index: f64,
        value: String,
    },
    #[error("angle: zero-length vector")]
    ZeroVector,
}

fn type_err(op: &'static str, expected: &'static str, found: &LocalValue) -> BuiltinError {
    BuiltinError::Type {
        op,
        expected,
        found: found.to_string(),
    }
}

/// Hood fold operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FoldKind {
    Min,
    Max,
    Sum,
    Any,
    All,
}

/// Whether a fold counts the device's own entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelfPolicy {
    Include,
    Exclude,
}

/// Built-ins that operate on local values (lifted pointwise over fields).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Not,
    Neg,
    Mux,
    Min,
    Max,
    First,
    Second,
    Nth,
    Angle,
}

/// Every built-in name the evaluator recognises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Local(LocalOp),
    Fold(FoldKind, SelfPolicy),
    MyId,
    NbrVector,
}

impl Builtin {
    /// Look up a built-in by surface name and argument count. Unary and
    /// binary minus share a name.
    pub fn lookup(name: &str, argc: usize) -> Option<Builtin> {
        use LocalOp::*;
        let local = |op| Some(Builtin::Local(op));
        let fold = |k, p| Some(Builtin::Fold(k, p));
        match (name, argc) {
            ("-", 1) => local(Neg),
            ("-", _) => local(Sub),
            ("+", _) => local(Add),
            ("*", _) => local(Mul),
            ("/", _) => local(Div),
            ("%", _) => local(Rem),
            ("==", _) => local(Eq),
            ("!=", _) => local(Ne),
            ("<", _) => local(Lt),
            ("<=", _) => local(Le),
            (">", _) => local(Gt),
            (">=", _) => local(Ge),
            ("&&", _) => local(And),
            ("||", _) => local(Or),
            ("!", _) => local(Not),
            ("mux", _) => local(Mux),
            ("min", _) => local(Min),
            ("max", _) => local(Max),
            ("1st", _) => local(First),
            ("2nd", _) => local(Second),
            ("nth", _) => local(Nth),
            ("angle", _) => local(Angle),
            ("minHood", _) => fold(FoldKind::Min, SelfPolicy::Exclude),
            ("maxHood", _) => fold(FoldKind::Max, SelfPolicy::Exclude),
            ("sumHood", _) => fold(FoldKind::Sum, SelfPolicy::Exclude),
            ("anyHood", _) => fold(FoldKind::Any, SelfPolicy::Exclude),
            ("allHood", _) => fold(FoldKind::All, SelfPolicy::Exclude),
            ("minHoodPlusSelf", _) => fold(FoldKind::Min, SelfPolicy::Include),
            ("maxHoodPlusSelf", _) => fold(FoldKind::Max, SelfPolicy::Include),
            ("sumHoodPlusSelf", _) => fold(FoldKind::Sum, SelfPolicy::Include),
            ("anyHoodPlusSelf", _) => fold(FoldKind::Any, SelfPolicy::Include),
            ("allHoodPlusSelf", _) => fold(FoldKind::All, SelfPolicy::Include),
            ("myID", _) => Some(Builtin::MyId),
            ("nbrVector", _) => Some(Builtin::NbrVector),
            _ => None,
        }
    }

    pub fn arity(self) -> usize {
        use LocalOp::*;
        match self {
            Builtin::Local(Not | Neg | First | Second) => 1,
            Builtin::Local(Mux) => 3,
            Builtin::Local(_) => 2,
            Builtin::Fold(..) => 1,
            Builtin::MyId | Builtin::NbrVector => 0,
        }
    }
}

/// All surface names of built-in functions.
pub const BUILTIN_NAMES: &[&str] = &[
    "1st",
    "2nd",
    "nth",
    "Tuple",
    "mux",
    "min",
    "max",
    "minHood",
    "maxHood",
    "sumHood",
    "anyHood",
    "allHood",
    "minHoodPlusSelf",
    "maxHoodPlusSelf",
    "sumHoodPlusSelf",
    "anyHoodPlusSelf",
    "allHoodPlusSelf",
    "angle",
    "myID",
    "nbrVector",
];

fn num(op: &'static str, v: &LocalValue) -> Result<f64, BuiltinError> {
    v.as_num().ok_or_else(|| type_err(op, "a number", v))
}

fn boolean(op: &'static str, v: &LocalValue) -> Result<bool, BuiltinError> {
    v.as_bool().ok_or_else(|| type_err(op, "a Boolean", v))
}

fn vec2(op: &'static str, v: &LocalValue) -> Result<(f64, f64), BuiltinError> {
    v.as_vec2().ok_or_else(|| type_err(op, "a Vec2", v))
}

fn arith(
    op: &'static str,
    a: &LocalValue,
    b: &LocalValue,
    f: impl Fn(f64, f64) -> f64,
) -> Result<LocalValue, BuiltinError> {
    match (a.as_vec2(), b.as_vec2()) {
        (Some((ax, ay)), Some((bx, by))) => Ok(LocalValue::vec2(f(ax, bx), f(ay, by))),
        _ => Ok(LocalValue::Num(f(num(op, a)?, num(op, b)?))),
    }
}

// Relational operators follow IEEE semantics on numbers (NaN compares false)
// and the value order elsewhere.
fn relational(a: &LocalValue, b: &LocalValue, test: fn(Ordering) -> bool) -> Result<LocalValue, BuiltinError> {
    if let (LocalValue::Num(x), LocalValue::Num(y)) = (a, b) {
        return Ok(LocalValue::Bool(x.partial_cmp(y).is_some_and(test)));
    }
    Ok(LocalValue::Bool(test(compare(a, b)?)))
}

fn item<'v>(op: &'static str, t: &'v LocalValue, index: f64) -> Result<&'v LocalValue, BuiltinError> {
    let items = match t {
        LocalValue::Constructor(_, items) => items,
        other => return Err(type_err(op, "a tuple", other)),
    };
    if index.fract() != 0.0 || index < 1.0 || index > items.len() as f64 {
        return Err(BuiltinError::Index {
            op,
            index,
            value: t.to_string(),
        });
    }
    Ok(&items[index as usize - 1])
}

/// Signed angle in degrees from `u` to `v`, in (-180, 180].
pub fn angle_degrees(u: (f64, f64), v: (f64, f64)) -> Result<f64, BuiltinError> {
    if (u.0 == 0.0 && u.1 == 0.0) || (v.0 == 0.0 && v.1 == 0.0) {
        return Err(BuiltinError::ZeroVector);
    }
    let cross = u.0 * v.1 - u.1 * v.0;
    let dot = u.0 * v.0 + u.1 * v.1;
    let deg = cross.atan2(dot).to_degrees();
    Ok(if deg <= -180.0 { 180.0 } else { deg })
}

/// Apply a local operator to local arguments (arity already checked).
pub fn apply_local(op: LocalOp, args: &[LocalValue]) -> Result<LocalValue, BuiltinError> {
    use LocalOp::*;
    let a = &args[0];
    Ok(match op {
        Add => match (a, &args[1]) {
            (LocalValue::Str(x), LocalValue::Str(y)) => LocalValue::Str(format!("{}{}", x, y)),
            (_, b) => arith("+", a, b, |x, y| x + y)?,
        },
        Sub => arith("-", a, &args[1], |x, y| x - y)?,
        Mul => match (a.as_vec2(), &args[1]) {
            (Some((x, y)), b) if b.as_num().is_some() => {
                let k = b.as_num().unwrap();
                LocalValue::vec2(x * k, y * k)
            }
            _ => match args[1].as_vec2() {
                Some((x, y)) => {
                    let k = num("*", a)?;
                    LocalValue::vec2(k * x, k * y)
                }
                None => LocalValue::Num(num("*", a)? * num("*", &args[1])?),
            },
        },
        Div => LocalValue::Num(num("/", a)? / num("/", &args[1])?),
        Rem => LocalValue::Num(num("%", a)? % num("%", &args[1])?),
        Eq => LocalValue::Bool(local_equal(a, &args[1])),
        Ne => LocalValue::Bool(!local_equal(a, &args[1])),
        Lt => relational(a, &args[1], |o| o == Ordering::Less)?,
        Le => relational(a, &args[1], |o| o != Ordering::Greater)?,
        Gt => relational(a, &args[1], |o| o == Ordering::Greater)?,
        Ge => relational(a, &args[1], |o| o != Ordering::Less)?,
        And => LocalValue::Bool(boolean("&&", a)? & boolean("&&", &args[1])?),
        Or => LocalValue::Bool(boolean("||", a)? | boolean("||", &args[1])?),
        Not => LocalValue::Bool(!boolean("!", a)?),
        Neg => match a.as_vec2() {
            Some((x, y)) => LocalValue::vec2(-x, -y),
            None => LocalValue::Num(-num("-", a)?),
        },
        Mux => {
            if boolean("mux", a)? {
                args[1].clone()
            } else {
                args[2].clone()
            }
        }
        Min => {
            if compare(&args[1], a)? == Ordering::Less {
                args[1].clone()
            } else {
                a.clone()
            }
        }
        Max => {
            if compare(&args[1], a)? == Ordering::Greater {
                args[1].clone()
            } else {
                a.clone()
            }
        }
        First => item("1st", a, 1.0)?.clone(),
        Second => item("2nd", a, 2.0)?.clone(),
        Nth => item("nth", a, num("nth", &args[1])?)?.clone(),
        Angle => LocalValue::Num(angle_degrees(vec2("angle", a)?, vec2("angle", &args[1])?)?),
    })
}

/// Fold a neighbouring value into a local value.
///
/// Ties in `min`/`max` go to the entry with the smallest device id. When the
/// policy excludes self and no other entry exists, `sum` gives 0, `any`
/// False, `all` True, and `min`/`max` fall back to the self entry.
pub fn hood_fold(kind: FoldKind, policy: SelfPolicy, field: &NbrValue) -> Result<LocalValue, BuiltinError> {
    let me = field.self_id;
    let entries = field
        .entries
        .iter()
        .filter(|(id, _)| policy == SelfPolicy::Include || **id != me)
        .map(|(_, v)| v);
    let name = match kind {
        FoldKind::Min => "minHood",
        FoldKind::Max => "maxHood",
        FoldKind::Sum => "sumHood",
        FoldKind::Any => "anyHood",
        FoldKind::All => "allHood",
    };
    match kind {
        FoldKind::Sum => {
            let mut total = 0.0;
            for v in entries {
                total += num(name, v)?;
            }
            Ok(LocalValue::Num(total))
        }
        FoldKind::Any => {
            let mut acc = false;
            for v in entries {
                acc |= boolean(name, v)?;
            }
            Ok(LocalValue::Bool(acc))
        }
        FoldKind::All => {
            let mut acc = true;
            for v in entries {
                acc &= boolean(name, v)?;
            }
            Ok(LocalValue::Bool(acc))
        }
        FoldKind::Min | FoldKind::Max => {
            let wanted = if kind == FoldKind::Min {
                Ordering::Less
            } else {
                Ordering::Greater
            };
            let mut best: Option<&LocalValue> = None;
            for v in entries {
                best = match best {
                    Some(b) if compare(v, b)? != wanted => Some(b),
                    _ => Some(v),
                };
            }
            Ok(best.unwrap_or_else(|| field.own()).clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::DeviceId;
    use proptest::prelude::*;
    use LocalValue::*;

    fn field(self_id: u32, entries: Vec<(u32, LocalValue)>) -> NbrValue {
        NbrValue {
            self_id: DeviceId(self_id),
            entries: entries.into_iter().map(|(k, v)| (DeviceId(k), v)).collect(),
        }
    }

    #[test]
    fn min_excluding_self() {
        let f = field(0, vec![(0, Num(9.0)), (1, Num(3.0)), (2, Num(5.0))]);
        assert_eq!(hood_fold(FoldKind::Min, SelfPolicy::Exclude, &f), Ok(Num(3.0)));
    }

    #[test]
    fn empty_domain_identities() {
        for v in [Num(4.0), Bool(true), Null] {
            let f = field(3, vec![(3, v.clone())]);
            assert_eq!(hood_fold(FoldKind::Sum, SelfPolicy::Exclude, &f), Ok(Num(0.0)));
            assert_eq!(hood_fold(FoldKind::Any, SelfPolicy::Exclude, &f), Ok(Bool(false)));
            assert_eq!(hood_fold(FoldKind::All, SelfPolicy::Exclude, &f), Ok(Bool(true)));
            assert_eq!(hood_fold(FoldKind::Min, SelfPolicy::Exclude, &f), Ok(v.clone()));
            assert_eq!(hood_fold(FoldKind::Max, SelfPolicy::Exclude, &f), Ok(v));
        }
    }

    #[test]
    fn lexicographic_min_with_self() {
        let t = |a: f64, d: u32| LocalValue::tuple(vec![Num(a), Device(DeviceId(d))]);
        let f = field(0, vec![(0, t(2.0, 0)), (1, t(3.0, 1))]);
        assert_eq!(hood_fold(FoldKind::Min, SelfPolicy::Include, &f), Ok(t(2.0, 0)));
    }

    #[test]
    fn min_ties_go_to_smallest_id() {
        let t = |a: f64, tag: &str| LocalValue::tuple(vec![Num(a), Str(tag.into())]);
        let f = field(5, vec![(5, Num(1.0)), (2, Num(1.0)), (7, Num(1.0))]);
        assert_eq!(hood_fold(FoldKind::Min, SelfPolicy::Include, &f), Ok(Num(1.0)));
        let g = field(5, vec![(5, t(1.0, "a")), (2, t(1.0, "a"))]);
        assert_eq!(hood_fold(FoldKind::Max, SelfPolicy::Include, &g), Ok(t(1.0, "a")));
    }

    #[test]
    fn mux_and_operators() {
        assert_eq!(
            apply_local(LocalOp::Mux, &[Bool(true), Num(0.0), Num(7.0)]),
            Ok(Num(0.0))
        );
        assert!(apply_local(LocalOp::Mux, &[Num(1.0), Num(0.0), Num(7.0)]).is_err());
        assert_eq!(apply_local(LocalOp::Lt, &[Num(f64::NAN), Num(1.0)]), Ok(Bool(false)));
        assert_eq!(apply_local(LocalOp::Gt, &[Num(f64::NAN), Num(1.0)]), Ok(Bool(false)));
        assert!(apply_local(LocalOp::Lt, &[Bool(true), Num(3.0)]).is_err());
        assert_eq!(
            apply_local(
                LocalOp::Nth,
                &[LocalValue::tuple(vec![Num(1.0), Num(2.0), Num(3.0)]), Num(3.0)]
            ),
            Ok(Num(3.0))
        );
        assert_eq!(
            apply_local(LocalOp::Neg, &[LocalValue::vec2(1.0, -2.0)]),
            Ok(LocalValue::vec2(-1.0, 2.0))
        );
        assert_eq!(
            apply_local(LocalOp::Rem, &[Device(DeviceId(7)), Num(2.0)]),
            Ok(Num(1.0))
        );
    }

    #[test]
    fn angle_cases() {
        assert_eq!(angle_degrees((1.0, 0.0), (0.0, 1.0)), Ok(90.0));
        assert_eq!(angle_degrees((1.0, 0.0), (1.0, 0.0)), Ok(0.0));
        assert_eq!(angle_degrees((1.0, 0.0), (-1.0, 0.0)), Ok(180.0));
        let near = angle_degrees((1.0, 0.0), (-1.0, -1e-9)).unwrap();
        assert!(near < -179.999 && near > -180.0);
        assert_eq!(angle_degrees((0.0, 0.0), (1.0, 0.0)), Err(BuiltinError::ZeroVector));
    }

    fn arb_field() -> impl Strategy<Value = NbrValue> {
        (0u32..6, prop::collection::btree_map(0u32..6, -100i32..100, 0..6)).prop_map(|(me, m)| {
            let mut f = NbrValue::singleton(DeviceId(me), Num(0.0));
            for (k, v) in m {
                f.entries.insert(DeviceId(k), Num(v as f64));
            }
            f
        })
    }

    fn arb_bool_field() -> impl Strategy<Value = NbrValue> {
        (0u32..6, prop::collection::btree_map(0u32..6, any::<bool>(), 1..6)).prop_map(|(me, m)| {
            let mut f = NbrValue::singleton(DeviceId(me), Bool(false));
            for (k, v) in m {
                f.entries.insert(DeviceId(k), Bool(v));
            }
            f
        })
    }

    fn plus_fresh_copy(f: &NbrValue) -> NbrValue {
        let mut g = f.clone();
        g.entries.insert(DeviceId(1000), f.own().clone());
        g
    }

    proptest! {
        #[test]
        fn plus_self_matches_fresh_copy(f in arb_field(), b in arb_bool_field()) {
            for k in [FoldKind::Min, FoldKind::Max, FoldKind::Sum] {
                prop_assert_eq!(
                    hood_fold(k, SelfPolicy::Include, &f),
                    hood_fold(k, SelfPolicy::Exclude, &plus_fresh_copy(&f))
                );
            }
            for k in [FoldKind::Any, FoldKind::All] {
                prop_assert_eq!(
                    hood_fold(k, SelfPolicy::Include, &b),
                    hood_fold(k, SelfPolicy::Exclude, &plus_fresh_copy(&b))
                );
            }
        }

        #[test]
        fn min_selection_invariant_under_positive_scaling(f in arb_field(), k in 1u32..50) {
            let chosen = |g: &NbrValue| {
                let m = hood_fold(FoldKind::Min, SelfPolicy::Include, g).unwrap();
                g.entries.iter().find(|(_, v)| **v == m).map(|(id, _)| *id)
            };
            let mut g = f.clone();
            for v in g.entries.values_mut() {
                *v = Num(v.as_num().unwrap() * k as f64);
            }
            prop_assert_eq!(chosen(&f), chosen(&g));
        }

        #[test]
        fn angle_antisymmetric(ux in -10.0f64..10.0, uy in -10.0f64..10.0, vx in -10.0f64..10.0, vy in -10.0f64..10.0) {
            let cross = ux * vy - uy * vx;
            prop_assume!(cross.abs() > 1e-6);
            let a = angle_degrees((ux, uy), (vx, vy)).unwrap();
            let b = angle_degrees((vx, vy), (ux, uy)).unwrap();
            prop_assert!((a + b).abs() < 1e-9);
            prop_assert!(a > -180.0 && a <= 180.0);
        }
    }
}

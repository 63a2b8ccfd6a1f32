//! Element values stored in the modeled collections.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::profile::ElementTypeTag;

/// An opaque element.
///
/// Primitive variants model values whose declared type is one of the eight
/// primitive types; `Object` is a reference to some caller-owned object,
/// identified by a number. Floating point payloads are stored as raw bits so
/// equality and hashing are total, matching boxed-float `equals` semantics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "t", content = "v")]
pub enum Value {
    Null,
    Byte(i8),
    Short(i16),
    Int(i32),
    Long(i64),
    Float(u32),
    Double(u64),
    Char(u16),
    Boolean(bool),
    Object(u64),
}

impl Value {
    pub fn float(v: f32) -> Self {
        Value::Float(v.to_bits())
    }

    pub fn double(v: f64) -> Self {
        Value::Double(v.to_bits())
    }

    /// The declared element type. `Null` and references are `OBJECT`.
    pub fn tag(&self) -> ElementTypeTag {
        match self {
            Value::Null | Value::Object(_) => ElementTypeTag::Object,
            Value::Byte(_) => ElementTypeTag::Byte,
            Value::Short(_) => ElementTypeTag::Short,
            Value::Int(_) => ElementTypeTag::Int,
            Value::Long(_) => ElementTypeTag::Long,
            Value::Float(_) => ElementTypeTag::Float,
            Value::Double(_) => ElementTypeTag::Double,
            Value::Char(_) => ElementTypeTag::Char,
            Value::Boolean(_) => ElementTypeTag::Boolean,
        }
    }

    pub fn is_primitive(&self) -> bool {
        self.tag().is_primitive()
    }

    /// Java-style hash code. Deterministic across runs.
    pub fn hash_code(&self) -> i32 {
        match *self {
            Value::Null => 0,
            Value::Byte(v) => v as i32,
            Value::Short(v) => v as i32,
            Value::Int(v) => v,
            Value::Long(v) => (v ^ ((v as u64) >> 32) as i64) as i32,
            Value::Float(bits) => bits as i32,
            Value::Double(bits) => (bits ^ (bits >> 32)) as i32,
            Value::Char(v) => v as i32,
            Value::Boolean(v) => {
                if v {
                    1231
                } else {
                    1237
                }
            }
            Value::Object(id) => {
                // splitmix64 finalizer stands in for an identity hash
                let mut z = id.wrapping_add(0x9e37_79b9_7f4a_7c15);
                z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
                (z ^ (z >> 31)) as i32
            }
        }
    }

    /// Raw primitive payload, used by primitive-specialized storage.
    /// Returns `None` for `Null` and references.
    pub fn primitive_bits(&self) -> Option<u64> {
        Some(match *self {
            Value::Byte(v) => v as u8 as u64,
            Value::Short(v) => v as u16 as u64,
            Value::Int(v) => v as u32 as u64,
            Value::Long(v) => v as u64,
            Value::Float(bits) => bits as u64,
            Value::Double(bits) => bits,
            Value::Char(v) => v as u64,
            Value::Boolean(v) => v as u64,
            Value::Null | Value::Object(_) => return None,
        })
    }

    /// Inverse of [`Value::primitive_bits`] for the given primitive tag.
    pub fn from_primitive_bits(tag: ElementTypeTag, bits: u64) -> Option<Self> {
        Some(match tag {
            ElementTypeTag::Byte => Value::Byte(bits as u8 as i8),
            ElementTypeTag::Short => Value::Short(bits as u16 as i16),
            ElementTypeTag::Int => Value::Int(bits as u32 as i32),
            ElementTypeTag::Long => Value::Long(bits as i64),
            ElementTypeTag::Float => Value::Float(bits as u32),
            ElementTypeTag::Double => Value::Double(bits),
            ElementTypeTag::Char => Value::Char(bits as u16),
            ElementTypeTag::Boolean => Value::Boolean(bits != 0),
            ElementTypeTag::Object => return None,
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Value::Null => f.write_str("null"),
            Value::Byte(v) => write!(f, "{v}b"),
            Value::Short(v) => write!(f, "{v}s"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Long(v) => write!(f, "{v}L"),
            Value::Float(bits) => write!(f, "{}f", f32::from_bits(bits)),
            Value::Double(bits) => write!(f, "{}d", f64::from_bits(bits)),
            Value::Char(v) => write!(f, "'\\u{v:04x}'"),
            Value::Boolean(v) => write!(f, "{v}"),
            Value::Object(id) => write!(f, "obj#{id}"),
        }
    }
}

/// Spreads the high bits of a hash code into the low bits before masking,
/// so tables indexed by the low bits see the whole hash.
pub(crate) fn spread(hash: i32) -> u32 {
    let h = hash as u32;
    h ^ (h >> 16)
}

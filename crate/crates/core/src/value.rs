use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

/// Kind of a 32-bit runtime value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Int,
    Float,
}

impl Kind {
    /// Descriptor letter (`I` / `F`).
    pub fn descriptor(self) -> char {
        match self {
            Kind::Int => 'I',
            Kind::Float => 'F',
        }
    }

    pub fn from_descriptor(c: char) -> Option<Kind> {
        match c {
            'I' => Some(Kind::Int),
            'F' => Some(Kind::Float),
            _ => None,
        }
    }
}

/// Method return kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReturnKind {
    Int,
    Float,
    Void,
}

impl ReturnKind {
    pub fn descriptor(self) -> char {
        match self {
            ReturnKind::Int => 'I',
            ReturnKind::Float => 'F',
            ReturnKind::Void => 'V',
        }
    }

    pub fn from_descriptor(c: char) -> Option<ReturnKind> {
        match c {
            'I' => Some(ReturnKind::Int),
            'F' => Some(ReturnKind::Float),
            'V' => Some(ReturnKind::Void),
            _ => None,
        }
    }

    pub fn value_kind(self) -> Option<Kind> {
        match self {
            ReturnKind::Int => Some(Kind::Int),
            ReturnKind::Float => Some(Kind::Float),
            ReturnKind::Void => None,
        }
    }
}

/// A runtime value: two's-complement int32 or IEEE-754 binary32.
///
/// Equality, ordering and hashing of floats are by bit pattern, so `NaN`
/// equals itself and `0.0 != -0.0`.
#[derive(Clone, Copy, Debug)]
pub enum Value {
    Int(i32),
    Float(f32),
}

impl Value {
    pub fn kind(self) -> Kind {
        match self {
            Value::Int(_) => Kind::Int,
            Value::Float(_) => Kind::Float,
        }
    }

    pub fn as_int(self) -> Option<i32> {
        match self {
            Value::Int(v) => Some(v),
            Value::Float(_) => None,
        }
    }

    pub fn as_float(self) -> Option<f32> {
        match self {
            Value::Float(v) => Some(v),
            Value::Int(_) => None,
        }
    }

    fn key(self) -> (Kind, u32) {
        match self {
            Value::Int(v) => (Kind::Int, v as u32),
            Value::Float(v) => (Kind::Float, v.to_bits()),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            _ => self.kind().cmp(&other.kind()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => f.write_str(&format_f32(*v)),
        }
    }
}

/// Shortest decimal text that parses back to the same `f32` bit pattern.
///
/// Finite values always carry a `.` or an exponent (`3.0`, `1e-7`).
/// NaNs with the canonical quiet payload print as `NaN`; any other NaN
/// prints its bits as `NaN:0x7fc00001`.
pub fn format_f32(v: f32) -> String {
    if v.is_nan() {
        if v.to_bits() == f32::NAN.to_bits() {
            "NaN".to_owned()
        } else {
            format!("NaN:{:#010x}", v.to_bits())
        }
    } else {
        // Debug formatting is shortest-round-trip and keeps the `.0`.
        format!("{v:?}")
    }
}

/// Inverse of [`format_f32`]; also accepts plain decimal and integer text.
pub fn parse_f32(text: &str) -> Option<f32> {
    if let Some(bits) = text.strip_prefix("NaN:") {
        let bits = u32::from_str_radix(bits.strip_prefix("0x")?, 16).ok()?;
        let v = f32::from_bits(bits);
        return v.is_nan().then_some(v);
    }
    match text {
        "NaN" => Some(f32::NAN),
        "inf" | "+inf" | "Infinity" => Some(f32::INFINITY),
        "-inf" | "-Infinity" => Some(f32::NEG_INFINITY),
        _ => {
            // Reject the spellings `f32::from_str` accepts beyond plain decimals.
            if text.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
                return None;
            }
            text.parse::<f32>().ok()
        }
    }
}

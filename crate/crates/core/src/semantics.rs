//! Integer semantics shared by the symbolic evaluator, the solver and the
//! replay interpreter.
//!
//! Every value is carried as an `i64` holding the mathematical value of the
//! integer at its declared type: signed types hold values in
//! `[-2^(w-1), 2^(w-1))`, unsigned types hold values in `[0, 2^w)`. All
//! arithmetic wraps at the declared width (two's complement), including
//! signed overflow. Division truncates toward zero and the remainder takes
//! the sign of the dividend. Shift counts are reduced modulo the width.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A fixed-width integer type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntTy {
    pub bits: u8,
    pub signed: bool,
}

impl IntTy {
    pub const I8: IntTy = IntTy { bits: 8, signed: true };
    pub const U8: IntTy = IntTy { bits: 8, signed: false };
    pub const I16: IntTy = IntTy { bits: 16, signed: true };
    pub const U16: IntTy = IntTy { bits: 16, signed: false };
    pub const I32: IntTy = IntTy { bits: 32, signed: true };
    pub const U32: IntTy = IntTy { bits: 32, signed: false };
    /// Internal type for byte offsets; never produced by subject source.
    pub const I64: IntTy = IntTy { bits: 64, signed: true };

    pub fn min(self) -> i64 {
        if self.signed {
            if self.bits == 64 {
                i64::MIN
            } else {
                -(1i64 << (self.bits - 1))
            }
        } else {
            0
        }
    }

    pub fn max(self) -> i64 {
        if self.signed {
            if self.bits == 64 {
                i64::MAX
            } else {
                (1i64 << (self.bits - 1)) - 1
            }
        } else {
            debug_assert!(self.bits < 64);
            (1i64 << self.bits) - 1
        }
    }

    pub fn contains(self, v: i128) -> bool {
        v >= self.min() as i128 && v <= self.max() as i128
    }

    /// Number of distinct values, saturating at `u64::MAX`.
    pub fn cardinality(self) -> u64 {
        if self.bits >= 64 {
            u64::MAX
        } else {
            1u64 << self.bits
        }
    }

    /// Reduce an arbitrary integer to this type by two's-complement wraparound.
    pub fn wrap(self, v: i128) -> i64 {
        if self.bits == 64 {
            return v as i64;
        }
        let mask: i128 = (1i128 << self.bits) - 1;
        let low = v & mask;
        if self.signed && low >= (1i128 << (self.bits - 1)) {
            (low - (1i128 << self.bits)) as i64
        } else {
            low as i64
        }
    }

    pub fn size_bytes(self) -> u32 {
        u32::from(self.bits / 8)
    }

    /// The usual arithmetic conversions restricted to our integer set:
    /// everything narrower than 32 bits promotes to `int`; if either side is
    /// `unsigned int` the result is `unsigned int`.
    pub fn common(a: IntTy, b: IntTy) -> IntTy {
        if a.bits == 64 || b.bits == 64 {
            return IntTy::I64;
        }
        if (a == IntTy::U32) || (b == IntTy::U32) {
            IntTy::U32
        } else {
            IntTy::I32
        }
    }

    /// Integer promotion of a single operand.
    pub fn promote(self) -> IntTy {
        if self.bits < 32 {
            IntTy::I32
        } else {
            self
        }
    }
}

impl fmt::Display for IntTy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.signed { "i" } else { "u" }, self.bits)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    BitAnd,
    BitOr,
    BitXor,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    /// Non-short-circuit logical conjunction over truthiness.
    LogAnd,
    /// Non-short-circuit logical disjunction over truthiness.
    LogOr,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::LogAnd | BinOp::LogOr)
    }

    /// True when the result is a 0/1 `int` rather than a value of the operand type.
    pub fn is_boolean(self) -> bool {
        self.is_comparison() || self.is_logical()
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::LogAnd => "&&",
            BinOp::LogOr => "||",
        }
    }

    /// Logical negation of a comparison operator.
    pub fn negate_comparison(self) -> Option<BinOp> {
        Some(match self {
            BinOp::Lt => BinOp::Ge,
            BinOp::Le => BinOp::Gt,
            BinOp::Gt => BinOp::Le,
            BinOp::Ge => BinOp::Lt,
            BinOp::Eq => BinOp::Ne,
            BinOp::Ne => BinOp::Eq,
            _ => return None,
        })
    }

    /// Operator with swapped operands (`a < b` is `b > a`).
    pub fn mirror_comparison(self) -> Option<BinOp> {
        Some(match self {
            BinOp::Lt => BinOp::Gt,
            BinOp::Le => BinOp::Ge,
            BinOp::Gt => BinOp::Lt,
            BinOp::Ge => BinOp::Le,
            BinOp::Eq => BinOp::Eq,
            BinOp::Ne => BinOp::Ne,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnOp {
    /// Logical not; yields a 0/1 `int`.
    Not,
    Neg,
    BitNot,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Not => "!",
            UnOp::Neg => "-",
            UnOp::BitNot => "~",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
}

/// Apply a binary operator. `ty` is the operand type (both operands are
/// already converted to it); boolean operators return 0 or 1.
pub fn binop(op: BinOp, ty: IntTy, a: i64, b: i64) -> Result<i64, ArithError> {
    let (a, b) = (a as i128, b as i128);
    let r: i128 = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0 {
                return Err(ArithError::DivisionByZero);
            }
            // i128 division truncates toward zero.
            a / b
        }
        BinOp::Rem => {
            if b == 0 {
                return Err(ArithError::DivisionByZero);
            }
            a % b
        }
        BinOp::Shl => {
            let k = shift_count(ty, b);
            let bits = (ty.wrap(a) as i128) & ((1i128 << ty.bits.min(64)) - 1);
            bits << k
        }
        BinOp::Shr => {
            let k = shift_count(ty, b);
            // values are already in range for `ty`, so an arithmetic shift on
            // the mathematical value is arithmetic for signed and logical for
            // unsigned types.
            a >> k
        }
        BinOp::BitAnd => a & b,
        BinOp::BitOr => a | b,
        BinOp::BitXor => a ^ b,
        BinOp::Lt => (a < b) as i128,
        BinOp::Le => (a <= b) as i128,
        BinOp::Gt => (a > b) as i128,
        BinOp::Ge => (a >= b) as i128,
        BinOp::Eq => (a == b) as i128,
        BinOp::Ne => (a != b) as i128,
        BinOp::LogAnd => (a != 0 && b != 0) as i128,
        BinOp::LogOr => (a != 0 || b != 0) as i128,
    };
    if op.is_boolean() {
        Ok(r as i64)
    } else {
        Ok(ty.wrap(r))
    }
}

fn shift_count(ty: IntTy, b: i128) -> u32 {
    (b.rem_euclid(i128::from(ty.bits))) as u32
}

pub fn unop(op: UnOp, ty: IntTy, a: i64) -> i64 {
    match op {
        UnOp::Not => (a == 0) as i64,
        UnOp::Neg => ty.wrap(-(a as i128)),
        UnOp::BitNot => ty.wrap(!(a as i128)),
    }
}

/// Convert a value of some integer type to `to`.
pub fn cast(to: IntTy, v: i64) -> i64 {
    to.wrap(v as i128)
}

/// Result type of a binary operator applied at operand type `ty`.
pub fn result_ty(op: BinOp, ty: IntTy) -> IntTy {
    if op.is_boolean() {
        IntTy::I32
    } else {
        ty
    }
}

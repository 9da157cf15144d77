//! Prime-field arithmetic `F_q` and field-size selection.
//!
//! Every symbol handled by the codecs is a residue modulo a prime `q`.
//! A [`FieldElement`] is bound to the [`FieldCtx`] it was created from;
//! mixing elements of different fields is reported as an error rather
//! than coerced.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("field mismatch: F_{left} vs F_{right}")]
    FieldMismatch { left: u64, right: u64 },
    #[error("division by zero")]
    DivisionByZero,
}

/// A prime field, identified by its modulus.
///
/// Primality is checked once at construction; all element operations can
/// then assume a valid modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldCtx {
    q: u64,
}

impl FieldCtx {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        if is_prime(q) {
            Ok(FieldCtx { q })
        } else {
            Err(FieldError::NotPrime(q))
        }
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Builds an element from an arbitrary integer, reducing modulo `q`.
    #[inline]
    pub fn elem(&self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.q,
            q: self.q,
        }
    }

    /// Builds an element from a signed integer, mapping negatives to their
    /// residue (handy for `-1` style constants in tests).
    pub fn elem_i64(&self, value: i64) -> FieldElement {
        let q = self.q as i64;
        self.elem(value.rem_euclid(q) as u64)
    }

    #[inline]
    pub fn zero(&self) -> FieldElement {
        self.elem(0)
    }

    #[inline]
    pub fn one(&self) -> FieldElement {
        self.elem(1)
    }

    /// All field elements in value order; intended for exhaustive checks.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.q).map(move |v| self.elem(v))
    }

    #[inline]
    pub(crate) fn add_raw(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.q as u128) as u64
    }

    #[inline]
    pub(crate) fn sub_raw(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + (self.q - b) as u128) % self.q as u128) as u64
    }

    #[inline]
    pub(crate) fn mul_raw(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    pub(crate) fn pow_raw(&self, mut base: u64, mut exp: u64) -> u64 {
        // 0^0 = 1 so that evaluating the constant column of a Vandermonde
        // row is total.
        let mut acc = 1 % self.q;
        base %= self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            exp >>= 1;
        }
        acc
    }

    pub(crate) fn inv_raw(&self, a: u64) -> Result<u64, FieldError> {
        if a.is_multiple_of(self.q) {
            return Err(FieldError::DivisionByZero);
        }
        Ok(self.pow_raw(a, self.q - 2))
    }
}

/// A residue in `[0, q)` tagged with its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    q: u64,
}

impl FieldElement {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn ctx(&self) -> FieldCtx {
        FieldCtx { q: self.q }
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    #[inline]
    fn same_field(&self, rhs: &FieldElement) -> Result<(), FieldError> {
        if self.q == rhs.q {
            Ok(())
        } else {
            Err(FieldError::FieldMismatch {
                left: self.q,
                right: rhs.q,
            })
        }
    }

    pub fn try_add(self, rhs: FieldElement) -> Result<FieldElement, FieldError> {
        self.same_field(&rhs)?;
        Ok(FieldElement {
            value: self.ctx().add_raw(self.value, rhs.value),
            q: self.q,
        })
    }

    pub fn try_sub(self, rhs: FieldElement) -> Result<FieldElement, FieldError> {
        self.same_field(&rhs)?;
        Ok(FieldElement {
            value: self.ctx().sub_raw(self.value, rhs.value),
            q: self.q,
        })
    }

    pub fn try_mul(self, rhs: FieldElement) -> Result<FieldElement, FieldError> {
        self.same_field(&rhs)?;
        Ok(FieldElement {
            value: self.ctx().mul_raw(self.value, rhs.value),
            q: self.q,
        })
    }

    /// Multiplicative inverse; errors on zero.
    pub fn inv(self) -> Result<FieldElement, FieldError> {
        Ok(FieldElement {
            value: self.ctx().inv_raw(self.value)?,
            q: self.q,
        })
    }

    /// Exponentiation by squaring, with the convention `x^0 = 1` for all `x`.
    pub fn pow(self, exp: u64) -> FieldElement {
        FieldElement {
            value: self.ctx().pow_raw(self.value, exp),
            q: self.q,
        }
    }
}

impl std::ops::Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        self.try_add(rhs).expect("field mismatch in +")
    }
}

impl std::ops::Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        self.try_sub(rhs).expect("field mismatch in -")
    }
}

impl std::ops::Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        self.try_mul(rhs).expect("field mismatch in *")
    }
}

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement {
            value: self.ctx().sub_raw(0, self.value),
            q: self.q,
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Deterministic Miller–Rabin over the full `u64` range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    // This witness set is known to be exact for all n < 3.3e24.
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime greater than or equal to `lower_bound`.
pub fn smallest_valid_prime(lower_bound: u64) -> u64 {
    let mut candidate = lower_bound.max(2);
    while !is_prime(candidate) {
        candidate += 1;
    }
    candidate
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

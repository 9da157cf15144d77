//! Code parameters, the information-flow bound they must meet, and the
//! default field-size policy.
//!
//! A valid parameter set always has `beta = 1` (file striping reduces the
//! general case to this one) and a message size `B` that meets the flow
//! bound with equality.

use std::fmt;
use std::str::FromStr;

use crate::error::CodeError;
use crate::ffield::{is_prime, smallest_valid_prime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeKind {
    Mbr,
    Msr,
    Miser,
}

impl CodeKind {
    /// Stable one-byte code used in share headers.
    pub fn wire_code(&self) -> u8 {
        match self {
            CodeKind::Mbr => 1,
            CodeKind::Msr => 2,
            CodeKind::Miser => 3,
        }
    }

    pub fn from_wire_code(code: u8) -> Option<CodeKind> {
        match code {
            1 => Some(CodeKind::Mbr),
            2 => Some(CodeKind::Msr),
            3 => Some(CodeKind::Miser),
            _ => None,
        }
    }
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CodeKind::Mbr => "mbr",
            CodeKind::Msr => "msr",
            CodeKind::Miser => "miser",
        };
        f.write_str(s)
    }
}

impl FromStr for CodeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mbr" => Ok(CodeKind::Mbr),
            "msr" => Ok(CodeKind::Msr),
            "miser" => Ok(CodeKind::Miser),
            other => Err(format!("unknown code kind `{other}`")),
        }
    }
}

/// Flow-bound value: the largest message size supportable by `k`-node
/// reconstruction when a repair downloads `beta` symbols from each of `d`
/// helpers and every node stores `alpha` symbols.
pub fn cutset_bound(k: usize, d: usize, alpha: usize, beta: usize) -> usize {
    cutset_terms(k, d, alpha, beta).iter().sum()
}

/// The individual terms `min(alpha, (d - i) * beta)` for `i = 0..k`.
pub fn cutset_terms(k: usize, d: usize, alpha: usize, beta: usize) -> Vec<usize> {
    (0..k).map(|i| alpha.min((d - i) * beta)).collect()
}

/// A validated parameter set for one code instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeParams {
    pub kind: CodeKind,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    /// Symbols stored per node.
    pub alpha: usize,
    /// Symbols downloaded from each helper per repair; always 1 here.
    pub beta: usize,
    /// Message symbols per stripe.
    pub message_len: usize,
    /// Field modulus.
    pub q: u64,
}

impl CodeParams {
    /// Validates `(kind, n, k, d)`, fills in the derived quantities and picks
    /// the field per policy unless `q_override` is given.
    pub fn derive(
        kind: CodeKind,
        n: usize,
        k: usize,
        d: usize,
        q_override: Option<u64>,
    ) -> Result<CodeParams, CodeError> {
        if k == 0 {
            return Err(CodeError::InfeasibleParameters(
                "k must be at least 1".into(),
            ));
        }
        if !(k <= d && d < n) {
            return Err(CodeError::InfeasibleParameters(format!(
                "need k <= d <= n-1, got n={n} k={k} d={d}"
            )));
        }
        let (alpha, message_len) = match kind {
            CodeKind::Mbr => {
                // alpha = d, B = kd - C(k,2)
                (d, k * d - k * (k - 1) / 2)
            }
            CodeKind::Msr => {
                if k < 2 {
                    return Err(CodeError::InfeasibleParameters(
                        "storage-optimal codes need k >= 2".into(),
                    ));
                }
                if d < 2 * k - 2 {
                    return Err(CodeError::InfeasibleParameters(format!(
                        "storage-optimal codes need d >= 2k-2, got d={d} < {}",
                        2 * k - 2
                    )));
                }
                ((d - k + 1), k * (d - k + 1))
            }
            CodeKind::Miser => {
                if n != d + 1 {
                    return Err(CodeError::InfeasibleParameters(format!(
                        "this family requires n = d+1, got n={n} d={d}"
                    )));
                }
                if d < 2 * k - 1 {
                    return Err(CodeError::InfeasibleParameters(format!(
                        "this family requires d >= 2k-1, got d={d} < {}",
                        2 * k - 1
                    )));
                }
                ((d - k + 1), k * (d - k + 1))
            }
        };
        let q = match q_override {
            Some(q) => {
                if !is_prime(q) {
                    return Err(CodeError::BadFieldOverride(format!("{q} is not prime")));
                }
                if (q - 1) < n as u64 {
                    return Err(CodeError::BadFieldOverride(format!(
                        "F_{q} has fewer than n={n} nonzero elements"
                    )));
                }
                q
            }
            None => default_modulus(kind, n)?,
        };
        let params = CodeParams {
            kind,
            n,
            k,
            d,
            alpha,
            beta: 1,
            message_len,
            q,
        };
        debug_assert_eq!(
            params.message_len,
            cutset_bound(k, d, alpha, params.beta),
            "derived B must meet the flow bound with equality"
        );
        Ok(params)
    }

    /// Total download per repaired node per stripe, in symbols.
    pub fn repair_bandwidth(&self) -> usize {
        self.d * self.beta
    }
}

/// Field policy: bandwidth-optimal codes need about `2n` points, the
/// storage-optimal families about `n^2`; the 257 floor keeps the byte-to-
/// symbol map injective for stripe encoding.
pub fn default_modulus(kind: CodeKind, n: usize) -> Result<u64, CodeError> {
    let floor = match kind {
        CodeKind::Mbr => 2u64.checked_mul(n as u64),
        CodeKind::Msr | CodeKind::Miser => (n as u64).checked_mul(n as u64),
    }
    .ok_or_else(|| CodeError::InfeasibleParameters("n too large for field policy".into()))?;
    Ok(smallest_valid_prime(floor.max(257)))
}

//! File striping and the share container format.
//!
//! A payload is split into stripes of `B` bytes, one byte per field symbol
//! (which is why the field must have at least 257 elements), and each stripe
//! is encoded independently. Share files are bit-exact:
//!
//! ```text
//! magic  b"PMRC"                       4 bytes
//! version u8 = 1                       1
//! kind    u8 (1 mbr, 2 msr, 3 miser)   1
//! reserved u16 = 0                     2
//! q, n, k, d, node_index,
//! stripe_count, payload_len            7 x u64 LE
//! symbols                              stripe_count * alpha * w bytes LE
//! crc32 of everything above            u32 LE
//! ```
//!
//! with `w = ceil(bitlen(q - 1) / 8)`. The trailing stripe is zero padded;
//! `payload_len` restores the exact byte length on decode.

use std::path::Path;

use thiserror::Error;

use crate::codec::{NodeId, RegeneratingCodec};
use crate::error::CodeError;
use crate::ffield::{FieldCtx, FieldElement};
use crate::params::{CodeKind, CodeParams};

pub const SHARE_MAGIC: [u8; 4] = *b"PMRC";
pub const SHARE_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum ShareError {
    #[error("field F_{q} cannot embed bytes injectively (need q >= 257)")]
    FieldTooSmallForBytes { q: u64 },
    #[error("share header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("expected {expected} shares, got {got}")]
    BadShareCount { expected: usize, got: usize },
    #[error("corrupt share: {0}")]
    CorruptShare(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Striping geometry for one payload under one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StripePlan {
    pub message_len: usize,
    pub payload_len: u64,
    pub stripe_count: u64,
}

impl StripePlan {
    pub fn new(params: &CodeParams, payload_len: u64) -> Result<Self, ShareError> {
        if params.q < 257 {
            return Err(ShareError::FieldTooSmallForBytes { q: params.q });
        }
        let b = params.message_len as u64;
        Ok(StripePlan {
            message_len: params.message_len,
            payload_len,
            stripe_count: payload_len.div_ceil(b),
        })
    }
}

/// Fields every share of one encoded payload agrees on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShareMeta {
    pub kind: CodeKind,
    pub q: u64,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub stripe_count: u64,
    pub payload_len: u64,
}

impl ShareMeta {
    pub fn new(params: &CodeParams, plan: &StripePlan) -> Self {
        ShareMeta {
            kind: params.kind,
            q: params.q,
            n: params.n,
            k: params.k,
            d: params.d,
            stripe_count: plan.stripe_count,
            payload_len: plan.payload_len,
        }
    }

    pub fn alpha(&self) -> usize {
        match self.kind {
            CodeKind::Mbr => self.d,
            CodeKind::Msr | CodeKind::Miser => self.d - self.k + 1,
        }
    }

    /// Bytes per stored symbol.
    pub fn symbol_width(&self) -> usize {
        let bits = 64 - (self.q - 1).leading_zeros() as usize;
        bits.div_ceil(8)
    }

    fn matches_params(&self, params: &CodeParams) -> bool {
        self.kind == params.kind
            && self.q == params.q
            && self.n == params.n
            && self.k == params.k
            && self.d == params.d
    }
}

/// One node's slice of an encoded payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Share {
    pub meta: ShareMeta,
    /// 1-based node index.
    pub node_index: NodeId,
    /// `stripe_count * alpha` raw symbol values, stripe-major.
    symbols: Vec<u64>,
}

impl Share {
    pub fn symbols(&self) -> &[u64] {
        &self.symbols
    }

    pub fn stripe_symbols(&self, stripe: u64) -> &[u64] {
        let alpha = self.meta.alpha();
        let start = stripe as usize * alpha;
        &self.symbols[start..start + alpha]
    }

    fn stripe_row(&self, ctx: FieldCtx, stripe: u64) -> Vec<FieldElement> {
        self.stripe_symbols(stripe)
            .iter()
            .map(|&v| ctx.elem(v))
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let w = self.meta.symbol_width();
        let mut out = Vec::with_capacity(68 + self.symbols.len() * w);
        out.extend_from_slice(&SHARE_MAGIC);
        out.push(SHARE_VERSION);
        out.push(self.meta.kind.wire_code());
        out.extend_from_slice(&0u16.to_le_bytes());
        for v in [
            self.meta.q,
            self.meta.n as u64,
            self.meta.k as u64,
            self.meta.d as u64,
            self.node_index as u64,
            self.meta.stripe_count,
            self.meta.payload_len,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &s in &self.symbols {
            out.extend_from_slice(&s.to_le_bytes()[..w]);
        }
        let crc = crc32(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Share, ShareError> {
        if bytes.len() < 68 {
            return Err(ShareError::CorruptShare("truncated header".into()));
        }
        let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
        let stored_crc = u32::from_le_bytes(crc_bytes.try_into().unwrap());
        if crc32(body) != stored_crc {
            return Err(ShareError::CorruptShare("checksum mismatch".into()));
        }
        if body[0..4] != SHARE_MAGIC {
            return Err(ShareError::CorruptShare("bad magic".into()));
        }
        if body[4] != SHARE_VERSION {
            return Err(ShareError::CorruptShare(format!(
                "unsupported version {}",
                body[4]
            )));
        }
        let kind = CodeKind::from_wire_code(body[5])
            .ok_or_else(|| ShareError::CorruptShare(format!("unknown kind byte {}", body[5])))?;
        if body[6] != 0 || body[7] != 0 {
            return Err(ShareError::CorruptShare("nonzero reserved field".into()));
        }
        let mut u64s = [0u64; 7];
        for (i, slot) in u64s.iter_mut().enumerate() {
            let off = 8 + i * 8;
            *slot = u64::from_le_bytes(body[off..off + 8].try_into().unwrap());
        }
        let [q, n, k, d, node_index, stripe_count, payload_len] = u64s;
        let meta = ShareMeta {
            kind,
            q,
            n: n as usize,
            k: k as usize,
            d: d as usize,
            stripe_count,
            payload_len,
        };
        if meta.k == 0 || meta.k > meta.d || meta.d + 1 > meta.n {
            return Err(ShareError::CorruptShare("inconsistent parameters".into()));
        }
        if node_index == 0 || node_index > n {
            return Err(ShareError::CorruptShare(format!(
                "node index {node_index} out of range"
            )));
        }
        let w = meta.symbol_width();
        let count = stripe_count as usize * meta.alpha();
        if body.len() != 64 + count * w {
            return Err(ShareError::CorruptShare(format!(
                "expected {} symbol bytes, found {}",
                count * w,
                body.len() - 64
            )));
        }
        let mut symbols = Vec::with_capacity(count);
        for idx in 0..count {
            let off = 64 + idx * w;
            let mut buf = [0u8; 8];
            buf[..w].copy_from_slice(&body[off..off + w]);
            let v = u64::from_le_bytes(buf);
            if v >= q {
                return Err(ShareError::CorruptShare(format!(
                    "symbol value {v} outside F_{q}"
                )));
            }
            symbols.push(v);
        }
        Ok(Share {
            meta,
            node_index: node_index as usize,
            symbols,
        })
    }

    pub fn write_file(&self, path: &Path) -> Result<(), ShareError> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn read_file(path: &Path) -> Result<Share, ShareError> {
        Share::from_bytes(&std::fs::read(path)?)
    }
}

/// One symbol of repair traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepairSymbol {
    pub helper_id: NodeId,
    pub failed_id: NodeId,
    pub stripe_index: u64,
    pub value: FieldElement,
}

/// Download accounting for one share repair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepairTraffic {
    pub symbols: u64,
    pub bytes: u64,
}

/// Encodes a payload into `n` shares, one per node.
pub fn encode_payload(
    codec: &dyn RegeneratingCodec,
    payload: &[u8],
) -> Result<Vec<Share>, ShareError> {
    let params = codec.params();
    let plan = StripePlan::new(params, payload.len() as u64)?;
    let meta = ShareMeta::new(params, &plan);
    let ctx = FieldCtx::new(params.q).map_err(CodeError::from)?;
    let b = params.message_len;
    let mut shares: Vec<Share> = (1..=params.n)
        .map(|node_index| Share {
            meta,
            node_index,
            symbols: Vec::with_capacity(plan.stripe_count as usize * params.alpha),
        })
        .collect();
    for stripe in 0..plan.stripe_count {
        let start = (stripe as usize) * b;
        let mut message = vec![ctx.zero(); b];
        for (slot, &byte) in message
            .iter_mut()
            .zip(payload[start..payload.len().min(start + b)].iter())
        {
            *slot = ctx.elem(byte as u64);
        }
        let c = codec.encode(&message)?;
        for (i, share) in shares.iter_mut().enumerate() {
            share
                .symbols
                .extend((0..params.alpha).map(|j| c.get(i, j).value()));
        }
    }
    Ok(shares)
}

fn check_share_set(
    params: &CodeParams,
    shares: &[&Share],
    expected: usize,
) -> Result<(), ShareError> {
    if shares.len() != expected {
        return Err(ShareError::BadShareCount {
            expected,
            got: shares.len(),
        });
    }
    let first = shares[0].meta;
    if !first.matches_params(params) {
        return Err(ShareError::HeaderMismatch(
            "share parameters do not match the codec".into(),
        ));
    }
    let mut seen = vec![false; params.n + 1];
    for share in shares {
        if share.meta != first {
            return Err(ShareError::HeaderMismatch(
                "shares come from different encodings".into(),
            ));
        }
        if std::mem::replace(&mut seen[share.node_index], true) {
            return Err(ShareError::HeaderMismatch(format!(
                "node {} appears twice",
                share.node_index
            )));
        }
    }
    Ok(())
}

/// Recovers the exact payload from any `k` shares.
pub fn decode_payload(
    codec: &dyn RegeneratingCodec,
    shares: &[&Share],
) -> Result<Vec<u8>, ShareError> {
    let params = codec.params();
    check_share_set(params, shares, params.k)?;
    let meta = shares[0].meta;
    let ctx = FieldCtx::new(params.q).map_err(CodeError::from)?;
    let ids: Vec<NodeId> = shares.iter().map(|s| s.node_index).collect();
    let mut payload = Vec::with_capacity(meta.payload_len as usize);
    for stripe in 0..meta.stripe_count {
        let rows: Vec<Vec<FieldElement>> =
            shares.iter().map(|s| s.stripe_row(ctx, stripe)).collect();
        let message = codec.reconstruct(&ids, &rows)?;
        for v in message {
            if v.value() > 255 {
                return Err(ShareError::CorruptShare(format!(
                    "decoded symbol {} is not a byte",
                    v.value()
                )));
            }
            payload.push(v.value() as u8);
        }
    }
    payload.truncate(meta.payload_len as usize);
    Ok(payload)
}

/// What one helper sends to rebuild `failed`: one symbol per stripe.
pub fn helper_stream(
    codec: &dyn RegeneratingCodec,
    share: &Share,
    failed: NodeId,
) -> Result<Vec<RepairSymbol>, ShareError> {
    let ctx = FieldCtx::new(share.meta.q).map_err(CodeError::from)?;
    let mut out = Vec::with_capacity(share.meta.stripe_count as usize);
    for stripe in 0..share.meta.stripe_count {
        let row = share.stripe_row(ctx, stripe);
        let value = codec.helper_symbol(share.node_index, &row, failed)?;
        out.push(RepairSymbol {
            helper_id: share.node_index,
            failed_id: failed,
            stripe_index: stripe,
            value,
        });
    }
    Ok(out)
}

/// Rebuilds the failed node's share from `d` helper streams.
pub fn repair_share_from_streams(
    codec: &dyn RegeneratingCodec,
    meta: &ShareMeta,
    failed: NodeId,
    streams: &[Vec<RepairSymbol>],
) -> Result<Share, ShareError> {
    let params = codec.params();
    if streams.len() != params.d {
        return Err(ShareError::BadShareCount {
            expected: params.d,
            got: streams.len(),
        });
    }
    let helper_ids: Vec<NodeId> = streams
        .iter()
        .map(|stream| {
            if stream.len() != meta.stripe_count as usize {
                return Err(ShareError::HeaderMismatch(format!(
                    "stream length {} does not cover {} stripes",
                    stream.len(),
                    meta.stripe_count
                )));
            }
            let id = stream
                .first()
                .map(|s| s.helper_id)
                .ok_or_else(|| ShareError::HeaderMismatch("empty repair stream".into()))?;
            for (idx, sym) in stream.iter().enumerate() {
                if sym.helper_id != id || sym.failed_id != failed || sym.stripe_index != idx as u64
                {
                    return Err(ShareError::HeaderMismatch(
                        "repair stream is inconsistent".into(),
                    ));
                }
            }
            Ok(id)
        })
        .collect::<Result<_, _>>()?;
    let mut symbols = Vec::with_capacity(meta.stripe_count as usize * params.alpha);
    for stripe in 0..meta.stripe_count {
        let stripe_symbols: Vec<FieldElement> =
            streams.iter().map(|s| s[stripe as usize].value).collect();
        let row = codec.repair(failed, &helper_ids, &stripe_symbols)?;
        symbols.extend(row.iter().map(|v| v.value()));
    }
    Ok(Share {
        meta: *meta,
        node_index: failed,
        symbols,
    })
}

/// Full repair path from helper shares, with download accounting.
pub fn repair_share(
    codec: &dyn RegeneratingCodec,
    failed: NodeId,
    helpers: &[&Share],
) -> Result<(Share, RepairTraffic), ShareError> {
    let params = codec.params();
    check_share_set(params, helpers, params.d)?;
    let meta = helpers[0].meta;
    let streams: Vec<Vec<RepairSymbol>> = helpers
        .iter()
        .map(|h| helper_stream(codec, h, failed))
        .collect::<Result<_, _>>()?;
    let share = repair_share_from_streams(codec, &meta, failed, &streams)?;
    let symbols: u64 = streams.iter().map(|s| s.len() as u64).sum();
    // Exactly d symbols of download per stripe, in symbols and bytes.
    assert_eq!(symbols, params.d as u64 * meta.stripe_count);
    let traffic = RepairTraffic {
        symbols,
        bytes: symbols * meta.symbol_width() as u64,
    };
    Ok((share, traffic))
}

const CRC32_TABLE: [u32; 256] = {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u32;
        let mut bit = 0;
        while bit < 8 {
            c = if c & 1 != 0 {
                0xEDB8_8320 ^ (c >> 1)
            } else {
                c >> 1
            };
            bit += 1;
        }
        table[i as usize] = c;
        i += 1;
    }
    table
};

pub(crate) fn crc32(data: &[u8]) -> u32 {
    let mut c = u32::MAX;
    for &byte in data {
        c = CRC32_TABLE[((c ^ byte as u32) & 0xFF) as usize] ^ (c >> 8);
    }
    c ^ u32::MAX
}

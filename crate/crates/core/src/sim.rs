//! Deterministic in-process storage-network simulator.
//!
//! A cluster of `n` virtual nodes holds the shares of one payload. A
//! schedule of fail / repair / collect events runs on a single logical
//! event loop; helpers compute their repair symbols from their own share
//! and the failed node's identity only. All randomness flows from one
//! seeded generator, so identical configs produce identical reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::{build_codec, NodeId};
use crate::error::CodeError;
use crate::params::CodeKind;
use crate::stripe::{self, Share, ShareError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),
    #[error("repair of node {node} blocked: {alive} alive helpers, {needed} needed")]
    RepairBlocked {
        node: NodeId,
        alive: usize,
        needed: usize,
    },
    #[error(transparent)]
    Share(#[from] ShareError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HelperPolicy {
    LowestId,
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PayloadSpec {
    File(PathBuf),
    Synthetic(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventSpec {
    Fail(NodeId),
    Repair(NodeId, HelperPolicy),
    Collect(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub kind: CodeKind,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub q: Option<u64>,
    pub seed: u64,
    pub payload: PayloadSpec,
    pub events: Vec<EventSpec>,
    /// Optional directory where surviving shares are written after the run.
    pub spill: Option<PathBuf>,
}

impl SimConfig {
    /// Parses the line-oriented `key=value` format. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<SimConfig, SimError> {
        let mut kind = None;
        let mut n = None;
        let mut k = None;
        let mut d = None;
        let mut q = None;
        let mut seed = 0u64;
        let mut payload = None;
        let mut spill = None;
        let mut events = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SimError::Config(format!("line {}: missing `=`", lineno + 1)))?;
            let bad = |msg: &str| SimError::Config(format!("line {}: {}", lineno + 1, msg));
            match key.trim() {
                "kind" => kind = Some(value.trim().parse::<CodeKind>().map_err(|e| bad(&e))?),
                "n" => n = Some(parse_num(value).map_err(|e| bad(&e))?),
                "k" => k = Some(parse_num(value).map_err(|e| bad(&e))?),
                "d" => d = Some(parse_num(value).map_err(|e| bad(&e))?),
                "q" => q = Some(parse_num(value).map_err(|e| bad(&e))?),
                "seed" => seed = parse_num(value).map_err(|e| bad(&e))?,
                "payload" => {
                    let v = value.trim();
                    payload = Some(if let Some(bytes) = v.strip_prefix("synthetic:") {
                        PayloadSpec::Synthetic(parse_num(bytes).map_err(|e| bad(&e))?)
                    } else {
                        PayloadSpec::File(PathBuf::from(v))
                    });
                }
                "spill" => spill = Some(PathBuf::from(value.trim())),
                "event" => events.push(parse_event(value.trim()).map_err(|e| bad(&e))?),
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        let config = SimConfig {
            kind: kind.ok_or_else(|| SimError::Config("missing `kind`".into()))?,
            n: n.ok_or_else(|| SimError::Config("missing `n`".into()))? as usize,
            k: k.ok_or_else(|| SimError::Config("missing `k`".into()))? as usize,
            d: d.ok_or_else(|| SimError::Config("missing `d`".into()))? as usize,
            q,
            seed,
            payload: payload.ok_or_else(|| SimError::Config("missing `payload`".into()))?,
            events,
            spill,
        };
        for event in &config.events {
            let check = |id: NodeId| {
                if id == 0 || id > config.n {
                    Err(SimError::Config(format!("node {id} out of range")))
                } else {
                    Ok(())
                }
            };
            match event {
                EventSpec::Fail(id) | EventSpec::Repair(id, _) => check(*id)?,
                EventSpec::Collect(ids) => {
                    let mut seen = vec![false; config.n + 1];
                    for &id in ids {
                        check(id)?;
                        if std::mem::replace(&mut seen[id], true) {
                            return Err(SimError::Config(format!("collect lists node {id} twice")));
                        }
                    }
                    if ids.len() != config.k {
                        return Err(SimError::Config(format!(
                            "collect wants exactly k={} nodes, got {}",
                            config.k,
                            ids.len()
                        )));
                    }
                }
            }
        }
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<SimConfig, SimError> {
        SimConfig::parse(&std::fs::read_to_string(path)?)
    }
}

fn parse_num(s: &str) -> Result<u64, String> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| format!("`{}` is not a number", s.trim()))
}

fn parse_event(s: &str) -> Result<EventSpec, String> {
    let (op, rest) = s
        .split_once(':')
        .ok_or_else(|| format!("event `{s}` needs `op:args`"))?;
    match op {
        "fail" => Ok(EventSpec::Fail(parse_num(rest)? as usize)),
        "repair" => {
            let (node, policy) = match rest.split_once(':') {
                Some((node, policy)) => {
                    let policy = match policy {
                        "lowest-id" => HelperPolicy::LowestId,
                        "random" => HelperPolicy::Random,
                        other => return Err(format!("unknown helper policy `{other}`")),
                    };
                    (node, policy)
                }
                None => (rest, HelperPolicy::LowestId),
            };
            Ok(EventSpec::Repair(parse_num(node)? as usize, policy))
        }
        "collect" => {
            let ids = rest
                .split(',')
                .map(|p| parse_num(p).map(|v| v as usize))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(EventSpec::Collect(ids))
        }
        other => Err(format!("unknown event `{other}`")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventStatus {
    Ok,
    Blocked,
}

impl std::fmt::Display for EventStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EventStatus::Ok => f.write_str("ok"),
            EventStatus::Blocked => f.write_str("blocked"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EventRecord {
    pub index: usize,
    pub label: &'static str,
    pub nodes: Vec<NodeId>,
    pub helpers: Vec<NodeId>,
    pub symbols: u64,
    pub bytes: u64,
    pub status: EventStatus,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Totals {
    pub repair_symbols: u64,
    pub repair_bytes: u64,
    pub collect_symbols: u64,
    pub collect_bytes: u64,
}

#[derive(Debug, Clone)]
pub struct SimReport {
    pub config: SimConfig,
    pub q: u64,
    pub alpha: usize,
    pub message_len: usize,
    pub stripe_count: u64,
    pub payload_len: u64,
    pub symbol_width: usize,
    pub original_sha256: String,
    pub final_sha256: Option<String>,
    pub events: Vec<EventRecord>,
    pub totals: Totals,
}

impl SimReport {
    /// Whether any repair in the schedule was blocked by a helper shortage.
    pub fn any_blocked(&self) -> bool {
        self.events.iter().any(|e| e.status == EventStatus::Blocked)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(out, "pmrc simulation report");
        let _ = writeln!(
            out,
            "kind={} n={} k={} d={} q={} seed={}",
            c.kind, c.n, c.k, c.d, self.q, c.seed
        );
        let _ = writeln!(
            out,
            "alpha={} B={} beta=1 stripe_count={} payload_len={} symbol_bytes={}",
            self.alpha, self.message_len, self.stripe_count, self.payload_len, self.symbol_width
        );
        let _ = writeln!(out, "original_sha256={}", self.original_sha256);
        for e in &self.events {
            let _ = write!(
                out,
                "event idx={} type={} nodes={}",
                e.index,
                e.label,
                join_ids(&e.nodes)
            );
            if !e.helpers.is_empty() {
                let _ = write!(out, " helpers={}", join_ids(&e.helpers));
            }
            let _ = writeln!(
                out,
                " symbols={} bytes={} status={}{}",
                e.symbols,
                e.bytes,
                e.status,
                if e.detail.is_empty() {
                    String::new()
                } else {
                    format!(" {}", e.detail)
                }
            );
        }
        let _ = writeln!(
            out,
            "final_sha256={}",
            self.final_sha256.as_deref().unwrap_or("unavailable")
        );
        let _ = writeln!(
            out,
            "totals repair_symbols={} repair_bytes={} collect_symbols={} collect_bytes={}",
            self.totals.repair_symbols,
            self.totals.repair_bytes,
            self.totals.collect_symbols,
            self.totals.collect_bytes
        );
        out
    }

    /// Per-event bandwidth as CSV.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("index,type,nodes,helpers,symbols,bytes,status\n");
        for e in &self.events {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                e.index,
                e.label,
                join_ids(&e.nodes),
                join_ids(&e.helpers),
                e.symbols,
                e.bytes,
                e.status
            );
        }
        out
    }

    pub fn report_hash(&self) -> String {
        sha256_hex(self.render_text().as_bytes())
    }
}

fn join_ids(ids: &[NodeId]) -> String {
    if ids.is_empty() {
        return "-".into();
    }
    ids.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    digest.iter().fold(String::new(), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

/// Runs the schedule. Blocked repairs are recorded (and leave the node down)
/// rather than aborting the run; schedule misuse is a hard error.
pub fn sim_run(config: &SimConfig) -> Result<SimReport, SimError> {
    let codec = build_codec(config.kind, config.n, config.k, config.d, config.q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let payload = match &config.payload {
        PayloadSpec::File(path) => std::fs::read(path)?,
        PayloadSpec::Synthetic(len) => {
            use rand::RngCore;
            let mut bytes = vec![0u8; *len as usize];
            rng.fill_bytes(&mut bytes);
            bytes
        }
    };
    let shares = stripe::encode_payload(codec.as_ref(), &payload)?;
    let meta = shares[0].meta;
    let mut nodes: Vec<Option<Share>> = shares.into_iter().map(Some).collect();
    let original_sha256 = sha256_hex(&payload);

    let mut events = Vec::with_capacity(config.events.len());
    let mut totals = Totals::default();
    for (idx, event) in config.events.iter().enumerate() {
        let index = idx + 1;
        let record = match event {
            EventSpec::Fail(node) => {
                let slot = &mut nodes[node - 1];
                if slot.is_none() {
                    return Err(SimError::Config(format!(
                        "event {index}: node {node} is already failed"
                    )));
                }
                *slot = None;
                EventRecord {
                    index,
                    label: "fail",
                    nodes: vec![*node],
                    helpers: vec![],
                    symbols: 0,
                    bytes: 0,
                    status: EventStatus::Ok,
                    detail: String::new(),
                }
            }
            EventSpec::Repair(node, policy) => {
                if nodes[node - 1].is_some() {
                    return Err(SimError::Config(format!(
                        "event {index}: node {node} is alive, nothing to repair"
                    )));
                }
                let alive: Vec<NodeId> =
                    (1..=config.n).filter(|&i| nodes[i - 1].is_some()).collect();
                if alive.len() < config.d {
                    events.push(EventRecord {
                        index,
                        label: "repair",
                        nodes: vec![*node],
                        helpers: vec![],
                        symbols: 0,
                        bytes: 0,
                        status: EventStatus::Blocked,
                        detail: format!("alive={} needed={}", alive.len(), config.d),
                    });
                    continue;
                }
                let mut chosen: Vec<NodeId> = match policy {
                    HelperPolicy::LowestId => alive[..config.d].to_vec(),
                    HelperPolicy::Random => {
                        alive.choose_multiple(&mut rng, config.d).copied().collect()
                    }
                };
                chosen.sort_unstable();
                let helper_shares: Vec<&Share> = chosen
                    .iter()
                    .map(|&i| nodes[i - 1].as_ref().expect("chosen from alive"))
                    .collect();
                let (share, traffic) = stripe::repair_share(codec.as_ref(), *node, &helper_shares)?;
                totals.repair_symbols += traffic.symbols;
                totals.repair_bytes += traffic.bytes;
                nodes[node - 1] = Some(share);
                EventRecord {
                    index,
                    label: "repair",
                    nodes: vec![*node],
                    helpers: chosen,
                    symbols: traffic.symbols,
                    bytes: traffic.bytes,
                    status: EventStatus::Ok,
                    detail: String::new(),
                }
            }
            EventSpec::Collect(ids) => {
                let mut picked = Vec::with_capacity(ids.len());
                for &id in ids {
                    picked.push(nodes[id - 1].as_ref().ok_or_else(|| {
                        SimError::Config(format!("event {index}: node {id} is failed"))
                    })?);
                }
                let decoded = stripe::decode_payload(codec.as_ref(), &picked)?;
                let symbols = ids.len() as u64 * meta.alpha() as u64 * meta.stripe_count;
                let bytes = symbols * meta.symbol_width() as u64;
                totals.collect_symbols += symbols;
                totals.collect_bytes += bytes;
                let ok = decoded == payload;
                EventRecord {
                    index,
                    label: "collect",
                    nodes: ids.clone(),
                    helpers: vec![],
                    symbols,
                    bytes,
                    status: EventStatus::Ok,
                    detail: format!("hash={} match={}", sha256_hex(&decoded), ok),
                }
            }
        };
        events.push(record);
    }

    let alive: Vec<NodeId> = (1..=config.n).filter(|&i| nodes[i - 1].is_some()).collect();
    let final_sha256 = if alive.len() >= config.k {
        let picked: Vec<&Share> = alive[..config.k]
            .iter()
            .map(|&i| nodes[i - 1].as_ref().unwrap())
            .collect();
        Some(sha256_hex(&stripe::decode_payload(
            codec.as_ref(),
            &picked,
        )?))
    } else {
        None
    };

    if let Some(dir) = &config.spill {
        std::fs::create_dir_all(dir)?;
        for share in nodes.iter().flatten() {
            share.write_file(&dir.join(format!("share_{}.pmrc", share.node_index)))?;
        }
    }

    Ok(SimReport {
        config: config.clone(),
        q: codec.params().q,
        alpha: meta.alpha(),
        message_len: codec.params().message_len,
        stripe_count: meta.stripe_count,
        payload_len: meta.payload_len,
        symbol_width: meta.symbol_width(),
        original_sha256,
        final_sha256,
        events,
        totals,
    })
}

/// Per-repair bandwidth against the download-everything baseline.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub event_index: usize,
    pub symbols_per_stripe: u64,
    pub naive_symbols_per_stripe: u64,
    pub ratio: String,
    pub per_helper_upload: u64,
}

#[derive(Debug, Clone)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "repair event={} symbols_per_stripe={} naive={} ratio={} per_helper_upload={}",
                r.event_index,
                r.symbols_per_stripe,
                r.naive_symbols_per_stripe,
                r.ratio,
                r.per_helper_upload
            );
        }
        out
    }
}

/// Summarizes repair traffic; asserts each repair downloaded exactly
/// `d * beta` symbols per stripe.
pub fn sim_metrics(report: &SimReport) -> MetricsTable {
    let d = report.config.d as u64;
    let b = report.message_len as u64;
    let rows = report
        .events
        .iter()
        .filter(|e| e.label == "repair" && e.status == EventStatus::Ok)
        .map(|e| {
            let per_stripe = e.symbols.checked_div(report.stripe_count).unwrap_or(d);
            assert_eq!(per_stripe, d, "repair bandwidth must be d*beta symbols");
            MetricsRow {
                event_index: e.index,
                symbols_per_stripe: per_stripe,
                naive_symbols_per_stripe: b,
                ratio: format!("{per_stripe}/{b}"),
                per_helper_upload: 1,
            }
        })
        .collect();
    MetricsTable { rows }
}

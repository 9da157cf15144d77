//! `pmrc`: encode files into regenerating-code shares, repair lost shares,
//! reconstruct payloads, verify constructions and drive the simulator.
//!
//! Exit codes: 0 success, 2 usage error, 3 infeasible parameters,
//! 4 corrupt or mismatched shares, 5 repair blocked.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pmrc_core::codec::{build_codec, NodeId, RegeneratingCodec};
use pmrc_core::error::CodeError;
use pmrc_core::matfq::{verify_mbr_psi, verify_msr_psi, PsiReport, PsiViolation};
use pmrc_core::mbr::MbrCodec;
use pmrc_core::miser::MiserCodec;
use pmrc_core::msr::MsrCodec;
use pmrc_core::params::{cutset_terms, CodeKind, CodeParams};
use pmrc_core::sim::{sim_metrics, sim_run, SimConfig, SimError};
use pmrc_core::stripe::{decode_payload, encode_payload, repair_share, Share, ShareError};
use pmrc_core::systematic::RemappedCodec;

#[derive(Parser)]
#[command(
    name = "pmrc",
    version,
    about = "Regenerating-code toolkit: encode, repair, reconstruct, simulate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived parameters and the flow-bound table
    Params(CodeArgs),
    /// Encode a file into n share files
    Encode(EncodeArgs),
    /// Rebuild a payload from k share files
    Reconstruct(ReconstructArgs),
    /// Regenerate a lost share from d helper share files
    Repair(RepairArgs),
    /// Run a failure/repair schedule from a config file
    Simulate(SimulateArgs),
    /// Check the construction's rank conditions
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct CodeArgs {
    /// Code family: mbr, msr or miser
    #[arg(long)]
    kind: CodeKind,
    #[arg(short)]
    n: usize,
    #[arg(short)]
    k: usize,
    #[arg(short)]
    d: usize,
    /// Field modulus override (must be prime)
    #[arg(long)]
    q: Option<u64>,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Input file
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory for `share_<i>.pmrc`
    #[arg(long = "out")]
    output: PathBuf,
    /// Make these k nodes store the message verbatim
    #[arg(long, value_delimiter = ',')]
    systematic: Option<Vec<NodeId>>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Exactly k share files
    #[arg(long = "shares", num_args = 1.., required = true)]
    shares: Vec<PathBuf>,
    #[arg(long = "out")]
    output: PathBuf,
    /// Must match the flag used at encode time, if any
    #[arg(long, value_delimiter = ',')]
    systematic: Option<Vec<NodeId>>,
}

#[derive(Args)]
struct RepairArgs {
    /// 1-based index of the failed node
    #[arg(long)]
    failed: NodeId,
    /// Exactly d helper share files
    #[arg(long = "helpers", num_args = 1.., required = true)]
    helpers: Vec<PathBuf>,
    #[arg(long = "out")]
    output: PathBuf,
    /// Must match the flag used at encode time, if any
    #[arg(long, value_delimiter = ',')]
    systematic: Option<Vec<NodeId>>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Write the per-event bandwidth CSV here instead of stdout
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Additionally check the interference-alignment identity (msr only)
    #[arg(long)]
    ia: bool,
}

enum CliError {
    Code(CodeError),
    Share(ShareError),
    Sim(SimError),
    Io(std::io::Error),
    Usage(String),
    Blocked,
}

impl From<CodeError> for CliError {
    fn from(e: CodeError) -> Self {
        CliError::Code(e)
    }
}

impl From<ShareError> for CliError {
    fn from(e: ShareError) -> Self {
        CliError::Share(e)
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Sim(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Code(e) => code_exit(e),
            CliError::Share(e) => share_exit(e),
            CliError::Sim(e) => match e {
                SimError::Config(_) => 2,
                SimError::RepairBlocked { .. } => 5,
                SimError::Share(inner) => share_exit(inner),
                SimError::Code(inner) => code_exit(inner),
                SimError::Io(_) => 1,
            },
            CliError::Io(_) => 1,
            CliError::Blocked => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Code(e) => e.to_string(),
            CliError::Share(e) => e.to_string(),
            CliError::Sim(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
            CliError::Usage(msg) => msg.clone(),
            CliError::Blocked => "repair blocked: not enough alive helpers".into(),
        }
    }
}

fn code_exit(e: &CodeError) -> u8 {
    match e {
        CodeError::InfeasibleParameters(_)
        | CodeError::BadFieldOverride(_)
        | CodeError::FieldTooSmall(_) => 3,
        _ => 1,
    }
}

fn share_exit(e: &ShareError) -> u8 {
    match e {
        ShareError::FieldTooSmallForBytes { .. }
        | ShareError::HeaderMismatch(_)
        | ShareError::BadShareCount { .. }
        | ShareError::CorruptShare(_) => 4,
        ShareError::Code(inner) => code_exit(inner),
        ShareError::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Params(args) => cmd_params(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Reconstruct(args) => cmd_reconstruct(args),
        Command::Repair(args) => cmd_repair(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

/// Builds the codec a share set is meant to be handled with. The share
/// header pins (kind, n, k, d, q); a systematic layout is not recorded in
/// the header, so the same `--systematic` flag must be repeated when
/// decoding or repairing.
fn build_cli_codec(
    kind: CodeKind,
    n: usize,
    k: usize,
    d: usize,
    q: Option<u64>,
    systematic: Option<&[NodeId]>,
) -> Result<Box<dyn RegeneratingCodec>, CliError> {
    let Some(ids) = systematic else {
        return Ok(build_codec(kind, n, k, d, q)?);
    };
    if ids.len() != k {
        return Err(CliError::Usage(format!(
            "--systematic wants exactly k={k} node ids, got {}",
            ids.len()
        )));
    }
    let mut seen = vec![false; n + 1];
    for &id in ids {
        if id == 0 || id > n || std::mem::replace(&mut seen[id], true) {
            return Err(CliError::Usage(format!(
                "--systematic needs {k} distinct node ids in 1..={n}"
            )));
        }
    }
    let params = CodeParams::derive(kind, n, k, d, q)?;
    let first_k: Vec<NodeId> = (1..=k).collect();
    Ok(match kind {
        CodeKind::Mbr if ids == first_k => Box::new(MbrCodec::new_systematic(params)?),
        CodeKind::Msr => Box::new(MsrCodec::new(params)?.systematic_remap(ids)?),
        // This family already stores the message on nodes 1..=k.
        CodeKind::Miser if ids == first_k => Box::new(MiserCodec::new(params)?),
        _ => {
            let base = build_codec(kind, n, k, d, q)?;
            Box::new(RemappedCodec::new(base, ids)?)
        }
    })
}

fn cmd_params(args: CodeArgs) -> Result<(), CliError> {
    let p = CodeParams::derive(args.kind, args.n, args.k, args.d, args.q)?;
    println!("kind={} n={} k={} d={}", p.kind, p.n, p.k, p.d);
    println!(
        "q={} alpha={} beta={} B={}",
        p.q, p.alpha, p.beta, p.message_len
    );
    println!("repair_bandwidth={}", p.repair_bandwidth());
    let terms = cutset_terms(p.k, p.d, p.alpha, p.beta);
    for (i, t) in terms.iter().enumerate() {
        println!("cutset i={i} term={t}");
    }
    println!("cutset total={}", terms.iter().sum::<usize>());
    Ok(())
}

fn cmd_encode(args: EncodeArgs) -> Result<(), CliError> {
    let c = &args.code;
    let codec = build_cli_codec(c.kind, c.n, c.k, c.d, c.q, args.systematic.as_deref())?;
    let payload = std::fs::read(&args.input)?;
    let shares = encode_payload(codec.as_ref(), &payload)?;
    std::fs::create_dir_all(&args.output)?;
    for share in &shares {
        let path = args.output.join(format!("share_{}.pmrc", share.node_index));
        share.write_file(&path)?;
        println!("wrote {}", path.display());
    }
    println!(
        "encoded {} bytes into {} shares ({} stripes)",
        payload.len(),
        shares.len(),
        shares[0].meta.stripe_count
    );
    Ok(())
}

fn read_shares(paths: &[PathBuf]) -> Result<Vec<Share>, CliError> {
    paths
        .iter()
        .map(|p| Ok(Share::read_file(p)?))
        .collect::<Result<Vec<_>, CliError>>()
}

fn codec_for_shares(
    shares: &[Share],
    systematic: Option<&[NodeId]>,
) -> Result<Box<dyn RegeneratingCodec>, CliError> {
    let meta = shares
        .first()
        .ok_or_else(|| CliError::Usage("no share files given".into()))?
        .meta;
    build_cli_codec(meta.kind, meta.n, meta.k, meta.d, Some(meta.q), systematic)
}

fn cmd_reconstruct(args: ReconstructArgs) -> Result<(), CliError> {
    let shares = read_shares(&args.shares)?;
    let codec = codec_for_shares(&shares, args.systematic.as_deref())?;
    let refs: Vec<&Share> = shares.iter().collect();
    let payload = decode_payload(codec.as_ref(), &refs)?;
    std::fs::write(&args.output, &payload)?;
    println!(
        "reconstructed {} bytes from {} shares",
        payload.len(),
        shares.len()
    );
    Ok(())
}

fn cmd_repair(args: RepairArgs) -> Result<(), CliError> {
    let helpers = read_shares(&args.helpers)?;
    let codec = codec_for_shares(&helpers, args.systematic.as_deref())?;
    let refs: Vec<&Share> = helpers.iter().collect();
    let (share, traffic) = repair_share(codec.as_ref(), args.failed, &refs)?;
    share.write_file(&args.output)?;
    println!(
        "regenerated node {} into {} (downloaded {} symbols, {} bytes)",
        args.failed,
        args.output.display(),
        traffic.symbols,
        traffic.bytes
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let config = SimConfig::from_file(&args.config)?;
    let report = sim_run(&config)?;
    print!("{}", report.render_text());
    print!("{}", sim_metrics(&report).render_text());
    println!("report_sha256={}", report.report_hash());
    match &args.csv {
        Some(path) => std::fs::write(path, report.render_csv())?,
        None => {
            println!("-- bandwidth csv --");
            print!("{}", report.render_csv());
        }
    }
    if report.any_blocked() {
        return Err(CliError::Blocked);
    }
    Ok(())
}

fn render_psi_report(report: &PsiReport) -> bool {
    if report.ok {
        println!("rank conditions: pass");
        return true;
    }
    println!("rank conditions: FAIL");
    for v in &report.failures {
        match v {
            PsiViolation::RankDeficientRows { matrix, rows } => {
                let ids: Vec<String> = rows.iter().map(|r| (r + 1).to_string()).collect();
                println!("  rank-deficient rows of {}: {}", matrix, ids.join(","));
            }
            PsiViolation::DuplicateLambda { first, second } => {
                println!(
                    "  duplicate diagonal value at rows {},{}",
                    first + 1,
                    second + 1
                );
            }
        }
    }
    false
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let c = &args.code;
    if args.ia && c.kind != CodeKind::Msr {
        return Err(CliError::Usage("--ia applies to --kind msr only".into()));
    }
    let params = CodeParams::derive(c.kind, c.n, c.k, c.d, c.q)?;
    println!(
        "kind={} n={} k={} d={} q={} alpha={} B={}",
        params.kind, params.n, params.k, params.d, params.q, params.alpha, params.message_len
    );
    let ok = match c.kind {
        CodeKind::Mbr => {
            let codec = MbrCodec::new(params)?;
            render_psi_report(&verify_mbr_psi(codec.psi(), params.k))
        }
        CodeKind::Msr => {
            let codec = MsrCodec::new(params)?;
            if codec.shortening_depth() > 0 {
                println!(
                    "shortening_depth={} (conditions checked on the parent construction)",
                    codec.shortening_depth()
                );
            }
            let d_parent = params.d + codec.shortening_depth();
            let ok =
                render_psi_report(&verify_msr_psi(codec.full_phi(), codec.lambdas(), d_parent));
            if ok && args.ia {
                verify_ia(&codec, &params)?;
            }
            ok
        }
        CodeKind::Miser => {
            let codec = MiserCodec::new(params)?;
            let report = codec.verify_construction();
            if report.ok {
                println!(
                    "submatrix and scalar conditions: pass (rho={})",
                    codec.rho()
                );
                true
            } else {
                println!("submatrix and scalar conditions: FAIL");
                for f in &report.failures {
                    println!("  {f}");
                }
                false
            }
        }
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::Code(CodeError::Corrupt(
            "construction failed verification".into(),
        )))
    }
}

fn verify_ia(codec: &MsrCodec, params: &CodeParams) -> Result<(), CliError> {
    if codec.shortening_depth() != 0 {
        return Err(CliError::Usage(
            "--ia applies to unshortened instances (d = 2k-2) only".into(),
        ));
    }
    let basis: Vec<NodeId> = (1..=params.k - 1).collect();
    let trials = 100u64;
    let mut pairs = 0usize;
    for helper in params.k..=params.d {
        for failed in 1..=params.n {
            if failed == helper || basis.contains(&failed) {
                continue;
            }
            let witness = codec.ia_witness(failed, helper, &basis)?;
            let mut state = 0xD6E8FEB8_6659FD93u64 ^ ((failed as u64) << 32 | helper as u64);
            let ctx = codec.ctx();
            for _ in 0..trials {
                let message: Vec<_> = (0..params.message_len)
                    .map(|_| {
                        state = state
                            .wrapping_mul(6364136223846793005)
                            .wrapping_add(1442695040888963407);
                        ctx.elem(state >> 16)
                    })
                    .collect();
                if !witness.holds_for(codec, &message)? {
                    println!("alignment identity: FAIL at failed={failed} helper={helper}");
                    return Err(CliError::Code(CodeError::Corrupt(
                        "alignment identity failed".into(),
                    )));
                }
            }
            pairs += 1;
        }
    }
    println!("alignment identity: pass ({pairs} pairs x {trials} messages)");
    Ok(())
}

//! The `vax` command line. Each subcommand opens the node in the data
//! directory, makes one call and prints JSON on stdout. Diagnostics go to
//! stderr.
//!
//! Exit codes: 0 success, 1 usage, 2 operation failed, 3 presentation
//! rejected.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use vax_core::credentials::{CredentialType, DoseInfo, HeldCredential, TestInfo, TestResult};
use vax_core::identity::Address;
use vax_core::presentation::{
    create_presentation, holder_validate_challenge, Approval, ChallengeRequest, PresentationOutcome, WalletCredential,
};
use vax_core::time::Timestamp;

use crate::api::{parse_holder, DEFAULT_ISSUER};
use crate::bench::{self, BenchOptions, Target};
use crate::config::{NodeConfig, DATA_DIR_ENV};
use crate::error::{Error, Result};
use crate::node::{Authority, Node, SealMode, OWNER_KEY};
use crate::server;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_REJECTED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vax", version, about = "Vaccination credentials: registry node, issuer, wallet and verifier")]
pub struct Cli {
    /// Node data directory (overrides the config file).
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,
    /// node.toml
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Keys and DIDs in the node keystore.
    #[command(subcommand)]
    Id(IdCmd),
    /// Registry whitelist of vaccination centres.
    #[command(subcommand)]
    Centre(CentreCmd),
    /// Issue a signed credential (printed, not yet anchored).
    #[command(subcommand)]
    Issue(IssueCmd),
    /// Store encrypted credentials and anchor their ids.
    #[command(subcommand)]
    Anchor(AnchorCmd),
    /// Verifier challenges.
    #[command(subcommand)]
    Challenge(ChallengeCmd),
    /// Answer a challenge as a holder.
    Present(PresentArgs),
    /// Verify a presentation against a challenge.
    Verify(VerifyArgs),
    /// Run the load harness.
    Bench(BenchArgs),
    /// Run the HTTP node until SIGINT/SIGTERM.
    Serve,
}

#[derive(Debug, Subcommand)]
pub enum IdCmd {
    New {
        #[arg(long, default_value = "default")]
        name: String,
        /// 32-byte Ed25519 seed as hex; random if omitted.
        #[arg(long)]
        seed: Option<String>,
    },
    Show {
        #[arg(long, default_value = "default")]
        name: String,
    },
}

#[derive(Debug, Args)]
pub struct SignerArg {
    /// Keystore key that signs the transaction.
    #[arg(long, default_value = OWNER_KEY)]
    signer: String,
}

#[derive(Debug, Subcommand)]
pub enum CentreCmd {
    /// `centre` may be an address, a DID or a keystore name.
    Add {
        centre: String,
        #[command(flatten)]
        signer: SignerArg,
    },
    Rm {
        centre: String,
        #[command(flatten)]
        signer: SignerArg,
    },
    Check {
        centre: String,
    },
}

#[derive(Debug, Args)]
pub struct IssueCommon {
    /// Keystore name of the issuing centre.
    #[arg(long, default_value = DEFAULT_ISSUER)]
    issuer: String,
    /// Subject DID, or a keystore name.
    #[arg(long)]
    subject: String,
}

#[derive(Debug, Subcommand)]
pub enum IssueCmd {
    Dose {
        #[command(flatten)]
        common: IssueCommon,
        #[arg(long)]
        product: String,
        #[arg(long)]
        batch: String,
        #[arg(long)]
        dose_number: u8,
        /// Unix milliseconds; defaults to now.
        #[arg(long)]
        administered_at: Option<u64>,
        #[arg(long, default_value = "")]
        centre_id: String,
    },
    Full {
        #[command(flatten)]
        common: IssueCommon,
        /// The two dose credentials (JSON files).
        #[arg(long, num_args = 2, required = true)]
        doses: Vec<PathBuf>,
    },
    Test {
        #[command(flatten)]
        common: IssueCommon,
        #[arg(long, default_value = "antigen")]
        test_type: String,
        #[arg(long)]
        result: TestResult,
        /// Unix milliseconds; defaults to now.
        #[arg(long)]
        sampled_at: Option<u64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum AnchorCmd {
    /// Encrypts the credential for its subject, stores it and anchors its Cid.
    Put {
        credential: PathBuf,
        #[arg(long, default_value = DEFAULT_ISSUER)]
        issuer: String,
    },
    List {
        holder: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum ChallengeCmd {
    New {
        /// Comma-separated claim names.
        #[arg(long, value_delimiter = ',', required = true)]
        claims: Vec<String>,
        #[arg(long = "type", value_delimiter = ',', value_parser = parse_type)]
        types: Vec<CredentialType>,
        #[arg(long, default_value = "/presentations")]
        callback: String,
        /// Also write the bare token here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct PresentArgs {
    /// Keystore name of the holder.
    #[arg(long)]
    holder: String,
    #[arg(long)]
    challenge: PathBuf,
    /// Wallet credentials (as printed by `anchor put`).
    #[arg(long = "credential", required = true)]
    credentials: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    disclose: Vec<String>,
    #[arg(long)]
    decline: bool,
    /// Also write the bare token here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    challenge: PathBuf,
    #[arg(long)]
    presentation: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value = "1,5,10")]
    levels: String,
    #[arg(long, default_value_t = 30)]
    samples: usize,
    #[arg(long)]
    block_interval_ms: Option<u64>,
    #[arg(long)]
    block_batch: Option<usize>,
    #[arg(long)]
    node_workers: Option<usize>,
    /// Bench a running node instead of a throwaway one.
    #[arg(long)]
    node: Option<String>,
    /// Directory for the report JSON and CSVs.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_type(s: &str) -> std::result::Result<CredentialType, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|_| format!("unknown credential type `{s}`"))
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let rt = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    match rt.block_on(execute(cli)) {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::Rejected) => EXIT_REJECTED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

enum Outcome {
    Done,
    Rejected,
}

fn print<T: Serialize>(value: &T) -> Result<Outcome> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(Outcome::Done),
    }
}

fn config_of(cli: &Cli) -> Result<NodeConfig> {
    let mut config = NodeConfig::load(cli.config.as_deref())?;
    if let Some(dir) = &cli.data_dir {
        config.data_dir = dir.clone();
    }
    Ok(config)
}

fn open(cli: &Cli) -> Result<Node> {
    let node = Node::open(config_of(cli)?, SealMode::Immediate)?;
    if node.bootstrapped() {
        eprintln!("deployed a new registry in {}", node.data_dir().display());
    }
    Ok(node)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::BadRequest(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::BadRequest(format!("{}: {e}", path.display())))
}

/// A token file holds the bare token, or JSON with a `token` field.
fn read_token(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::BadRequest(format!("{}: {e}", path.display())))?;
    let text = text.trim();
    if text.starts_with('{') {
        let v: Value = serde_json::from_str(text)?;
        return v["token"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::BadRequest(format!("{}: no `token` field", path.display())));
    }
    Ok(text.to_string())
}

/// `anchor put` output (with `wallet`) or a bare wallet credential.
fn read_wallet(path: &Path) -> Result<WalletCredential> {
    let v: Value = read_json(path)?;
    let inner = if v.get("wallet").is_some() { v["wallet"].clone() } else { v };
    serde_json::from_value(inner).map_err(|e| Error::BadRequest(format!("{}: {e}", path.display())))
}

/// Address, DID, or the name of a keystore key.
fn resolve_address(node: &Node, who: &str) -> Result<Address> {
    match parse_holder(who) {
        Ok(a) => Ok(a),
        Err(_) if node.keys().exists(who) => Ok(node.key_info(who)?.address),
        Err(e) => Err(e),
    }
}

fn resolve_did(node: &Node, who: &str) -> Result<vax_core::identity::Did> {
    if who.starts_with("did:") {
        return Ok(who.parse()?);
    }
    Ok(node.key_info(who)?.did)
}

fn write_token(out: &Option<PathBuf>, token: &str) -> Result<()> {
    if let Some(path) = out {
        std::fs::write(path, format!("{token}\n"))?;
    }
    Ok(())
}

async fn execute(cli: Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Serve => {
            server::serve(config_of(&cli)?).await?;
            Ok(Outcome::Done)
        }
        Command::Bench(args) => bench_cmd(&cli, args).await,
        Command::Id(cmd) => {
            let node = open(&cli)?;
            match cmd {
                IdCmd::New { name, seed } => {
                    let seed = seed.as_deref().map(hex::decode).transpose().map_err(|e| Error::BadRequest(format!("seed: {e}")))?;
                    print(&node.create_key(name, seed.as_deref())?)
                }
                IdCmd::Show { name } => print(&node.key_info(name)?),
            }
        }
        Command::Centre(cmd) => {
            let node = open(&cli)?;
            match cmd {
                CentreCmd::Add { centre, signer } => {
                    let address = resolve_address(&node, centre)?;
                    print(&node.add_centre(address, Authority::Keystore { signer: signer.signer.clone() }).await?)
                }
                CentreCmd::Rm { centre, signer } => {
                    let address = resolve_address(&node, centre)?;
                    print(&node.remove_centre(address, Authority::Keystore { signer: signer.signer.clone() }).await?)
                }
                CentreCmd::Check { centre } => print(&node.centre_status(resolve_address(&node, centre)?)?),
            }
        }
        Command::Issue(cmd) => {
            let node = open(&cli)?;
            match cmd {
                IssueCmd::Dose { common, product, batch, dose_number, administered_at, centre_id } => {
                    let dose = DoseInfo {
                        vaccine_product: product.clone(),
                        batch: batch.clone(),
                        dose_number: *dose_number,
                        administered_at: administered_at.map(Timestamp).unwrap_or_else(|| node.now()),
                        centre_id: centre_id.clone(),
                    };
                    print(&node.issue_dose(&common.issuer, &resolve_did(&node, &common.subject)?, &dose)?)
                }
                IssueCmd::Full { common, doses } => {
                    let first: HeldCredential = read_json(&doses[0])?;
                    let second: HeldCredential = read_json(&doses[1])?;
                    print(&node.issue_full(&common.issuer, &resolve_did(&node, &common.subject)?, &first, &second)?)
                }
                IssueCmd::Test { common, test_type, result, sampled_at } => {
                    let test = TestInfo {
                        test_type: test_type.clone(),
                        result: *result,
                        sampled_at: sampled_at.map(Timestamp).unwrap_or_else(|| node.now()),
                    };
                    print(&node.issue_test(&common.issuer, &resolve_did(&node, &common.subject)?, &test)?)
                }
            }
        }
        Command::Anchor(cmd) => {
            let node = open(&cli)?;
            match cmd {
                AnchorCmd::Put { credential, issuer } => {
                    let held: HeldCredential = read_json(credential)?;
                    print(&node.anchor(issuer, &held).await?)
                }
                AnchorCmd::List { holder } => print(&node.anchors(resolve_address(&node, holder)?)?),
            }
        }
        Command::Challenge(ChallengeCmd::New { claims, types, callback, out }) => {
            let node = open(&cli)?;
            let request =
                ChallengeRequest { requested_claims: claims.clone(), required_types: types.clone(), callback: callback.clone() };
            let issued = node.create_challenge(&request)?;
            write_token(out, issued.token.as_str())?;
            print(&issued)
        }
        Command::Present(args) => {
            let node = open(&cli)?;
            let holder = node.keys().load(&args.holder)?;
            let challenge = holder_validate_challenge(&read_token(&args.challenge)?, node.now())?;
            let wallet = args.credentials.iter().map(|p| read_wallet(p)).collect::<Result<Vec<_>>>()?;
            let disclose: Vec<&str> = args.disclose.iter().map(String::as_str).collect();
            let approval = if args.decline { Approval::Decline } else { Approval::Approve };
            match create_presentation(&holder, &challenge, &wallet, &disclose, approval, node.now())? {
                PresentationOutcome::Presented(token) => {
                    write_token(&args.out, token.as_str())?;
                    print(&json!({ "outcome": "Presented", "token": token.as_str() }))
                }
                PresentationOutcome::HolderDeclined => print(&json!({ "outcome": "HolderDeclined" })),
            }
        }
        Command::Verify(args) => {
            let node = open(&cli)?;
            let report = node.verify_against(&read_token(&args.presentation)?, &read_token(&args.challenge)?)?;
            print(&report)?;
            if report.accepted() {
                Ok(Outcome::Done)
            } else {
                eprintln!("rejected: {}", report.reject_code.map(|c| c.to_string()).unwrap_or_else(|| "policy".into()));
                Ok(Outcome::Rejected)
            }
        }
    }
}

async fn bench_cmd(cli: &Cli, args: &BenchArgs) -> Result<Outcome> {
    let mut opts = BenchOptions { levels: bench::parse_levels(&args.levels)?, samples: args.samples, ..Default::default() };
    if let Some(ms) = args.block_interval_ms {
        opts.block_interval_ms = ms;
    }
    if let Some(b) = args.block_batch {
        opts.block_batch = b;
    }
    if let Some(w) = args.node_workers {
        opts.node_workers = w;
    }
    let report = match &args.node {
        Some(url) => bench::run(Target::http(url.clone()), &opts).await?,
        None => bench::run_spawned(opts).await?,
    };
    let out = match &args.out {
        Some(dir) => dir.clone(),
        None => config_of(cli)?.data_dir.join("bench"),
    };
    for path in report.write(&out)? {
        eprintln!("wrote {}", path.display());
    }
    print(&report)
}

//! Load harness: simulated holders run issue → anchor → challenge →
//! present → verify loops at several concurrency levels, against a node
//! over HTTP or in-process.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{watch, Barrier};
use tokio::time::Instant;

use vax_core::credentials::{CredentialType, HeldCredential, TestInfo, TestResult};
use vax_core::identity::{Address, KeyPair};
use vax_core::ledger::Receipt;
use vax_core::presentation::{
    create_presentation, holder_validate_challenge, Approval, ChallengeRequest, VerificationReport, WalletCredential,
};
use vax_core::time::{Clock, SystemClock, Timestamp};

use crate::api::DEFAULT_ISSUER;
use crate::config::NodeConfig;
use crate::error::{Error, Result};
use crate::node::{Anchored, Authority, CentreStatus, GasReport, IssuedChallenge, Node, SealMode};
use crate::server;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub levels: Vec<usize>,
    pub samples: usize,
    pub block_interval_ms: u64,
    pub block_batch: usize,
    /// Worker threads of a spawned node: its serving capacity.
    pub node_workers: usize,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            levels: vec![1, 5, 10],
            samples: 30,
            block_interval_ms: 1_000,
            block_batch: 10,
            node_workers: 1,
            seed: 7,
        }
    }
}

pub fn parse_levels(s: &str) -> Result<Vec<usize>> {
    let levels: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| Error::BadRequest(format!("level `{p}`: {e}"))))
        .collect::<Result<_>>()?;
    if levels.is_empty() || levels.contains(&0) {
        return Err(Error::BadRequest("levels must be positive".into()));
    }
    Ok(levels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub samples: usize,
    pub p50: f64,
    pub p95: f64,
    pub mean: f64,
}

impl Stats {
    /// Nearest-rank percentiles over millisecond samples.
    pub fn from_samples(samples: &[f64]) -> Stats {
        let mut v = samples.to_vec();
        v.sort_by(f64::total_cmp);
        let rank = |q: f64| {
            if v.is_empty() {
                return 0.0;
            }
            let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
            v[idx]
        };
        let mean = if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        Stats { samples: v.len(), p50: rank(0.50), p95: rank(0.95), mean }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub concurrency_levels: Vec<usize>,
    pub challenge_creation_ms: BTreeMap<usize, Stats>,
    pub full_verification_ms: BTreeMap<usize, Stats>,
    pub issuance_ms: BTreeMap<usize, Stats>,
    /// Gas per transaction of each operation observed, plus `view`.
    pub gas_by_op: BTreeMap<String, u64>,
    pub options: BenchOptions,
    pub transport: String,
}

impl BenchReport {
    fn metrics(&self) -> [(&'static str, &BTreeMap<usize, Stats>); 3] {
        [
            ("challenge_creation_ms", &self.challenge_creation_ms),
            ("full_verification_ms", &self.full_verification_ms),
            ("issuance_ms", &self.issuance_ms),
        ]
    }

    /// Writes `bench_report.json`, `bench_latency.csv` and `bench_gas.csv`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let json_path = dir.join("bench_report.json");
        std::fs::write(&json_path, serde_json::to_vec_pretty(self)?)?;

        let latency_path = dir.join("bench_latency.csv");
        let mut w = csv::Writer::from_path(&latency_path).map_err(csv_err)?;
        w.write_record(["metric", "level", "samples", "p50_ms", "p95_ms", "mean_ms"]).map_err(csv_err)?;
        for (name, per_level) in self.metrics() {
            for (level, s) in per_level {
                w.write_record([
                    name.to_string(),
                    level.to_string(),
                    s.samples.to_string(),
                    format!("{:.3}", s.p50),
                    format!("{:.3}", s.p95),
                    format!("{:.3}", s.mean),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;

        let gas_path = dir.join("bench_gas.csv");
        let mut w = csv::Writer::from_path(&gas_path).map_err(csv_err)?;
        w.write_record(["op", "gas"]).map_err(csv_err)?;
        for (op, gas) in &self.gas_by_op {
            w.write_record([op.clone(), gas.to_string()]).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(vec![json_path, latency_path, gas_path])
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Where requests go.
#[derive(Clone)]
pub enum Target {
    Http { client: reqwest::Client, base: String },
    Local(Arc<Node>),
}

impl Target {
    pub fn http(base: impl Into<String>) -> Self {
        Target::Http { client: reqwest::Client::new(), base: base.into().trim_end_matches('/').to_string() }
    }

    fn name(&self) -> &'static str {
        match self {
            Target::Http { .. } => "http",
            Target::Local(_) => "in-process",
        }
    }

    async fn call<T: serde::de::DeserializeOwned>(
        &self,
        method: reqwest::Method,
        path: &str,
        body: Option<serde_json::Value>,
    ) -> Result<T> {
        let Target::Http { client, base } = self else { unreachable!("http only") };
        let mut req = client.request(method, format!("{base}{path}"));
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().await.map_err(|e| Error::NodeUnavailable(e.to_string()))?;
        let status = resp.status();
        let bytes = resp.bytes().await.map_err(|e| Error::NodeUnavailable(e.to_string()))?;
        if !status.is_success() {
            return Err(Error::BadRequest(format!("{path}: {status} {}", String::from_utf8_lossy(&bytes))));
        }
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub fn now(&self) -> Timestamp {
        match self {
            Target::Http { .. } => SystemClock.now(),
            Target::Local(node) => node.now(),
        }
    }

    pub async fn ping(&self) -> Result<()> {
        match self {
            Target::Http { .. } => self.call::<serde_json::Value>(reqwest::Method::GET, "/status", None).await.map(|_| ()),
            Target::Local(_) => Ok(()),
        }
    }

    async fn ensure_key(&self, name: &str) -> Result<Address> {
        match self {
            Target::Http { .. } => {
                let got: Result<serde_json::Value> =
                    self.call(reqwest::Method::GET, &format!("/keys/{name}"), None).await;
                let info = match got {
                    Ok(v) => v,
                    Err(_) => self.call(reqwest::Method::POST, "/keys", Some(json!({ "name": name }))).await?,
                };
                Ok(serde_json::from_value(info["address"].clone())?)
            }
            Target::Local(node) => {
                let kp = node.keys().load_or_create(name)?;
                Ok(kp.address())
            }
        }
    }

    async fn tx(&self, path: &str, body: serde_json::Value, local: impl AsyncFnOnce(&Node) -> Result<Receipt>) -> Result<Receipt> {
        match self {
            Target::Http { .. } => self.call(reqwest::Method::POST, path, Some(body)).await,
            Target::Local(node) => local(node).await,
        }
    }

    async fn add_centre(&self, address: Address, signer: &str) -> Result<Receipt> {
        let auth = Authority::Keystore { signer: signer.into() };
        self.tx("/centres", json!({ "address": address, "signer": signer }), async |n| n.add_centre(address, auth).await)
            .await
    }

    async fn remove_centre(&self, address: Address, signer: &str) -> Result<Receipt> {
        match self {
            Target::Http { .. } => {
                self.call(reqwest::Method::DELETE, &format!("/centres/{address}"), Some(json!({ "signer": signer })))
                    .await
            }
            Target::Local(node) => node.remove_centre(address, Authority::Keystore { signer: signer.into() }).await,
        }
    }

    async fn set_delegate(&self, delegate: Address, signer: &str) -> Result<Receipt> {
        let auth = Authority::Keystore { signer: signer.into() };
        self.tx("/delegates", json!({ "delegate": delegate, "signer": signer }), async |n| {
            n.set_delegate(delegate, auth).await
        })
        .await
    }

    async fn recover(&self, old: Address, new: Address, signer: &str) -> Result<Receipt> {
        let auth = Authority::Keystore { signer: signer.into() };
        self.tx(
            "/recoveries",
            json!({ "old_address": old, "new_address": new, "signer": signer }),
            async |n| n.recover(old, new, auth).await,
        )
        .await
    }

    async fn centre_status(&self, address: Address) -> Result<CentreStatus> {
        match self {
            Target::Http { .. } => self.call(reqwest::Method::GET, &format!("/centres/{address}"), None).await,
            Target::Local(node) => node.centre_status(address),
        }
    }

    async fn issue_test(&self, holder: &KeyPair) -> Result<HeldCredential> {
        match self {
            Target::Http { .. } => {
                let body = json!({ "subject": holder.did(), "test_type": "antigen", "result": "negative" });
                self.call(reqwest::Method::POST, "/credentials/test", Some(body)).await
            }
            Target::Local(node) => {
                let info = TestInfo { test_type: "antigen".into(), result: TestResult::Negative, sampled_at: node.now() };
                node.issue_test(DEFAULT_ISSUER, &holder.did(), &info)
            }
        }
    }

    async fn anchor(&self, held: &HeldCredential) -> Result<Anchored> {
        match self {
            Target::Http { .. } => self.call(reqwest::Method::POST, "/anchors", Some(json!({ "credential": held }))).await,
            Target::Local(node) => node.anchor(DEFAULT_ISSUER, held).await,
        }
    }

    async fn challenge(&self, request: &ChallengeRequest) -> Result<IssuedChallenge> {
        match self {
            Target::Http { .. } => self.call(reqwest::Method::POST, "/challenges", Some(json!(request))).await,
            Target::Local(node) => node.create_challenge(request),
        }
    }

    async fn verify(&self, presentation: &str) -> Result<VerificationReport> {
        match self {
            Target::Http { client, base } => {
                let resp = client
                    .post(format!("{base}/presentations"))
                    .header("content-type", "text/plain")
                    .body(presentation.to_string())
                    .send()
                    .await
                    .map_err(|e| Error::NodeUnavailable(e.to_string()))?;
                let bytes = resp.bytes().await.map_err(|e| Error::NodeUnavailable(e.to_string()))?;
                Ok(serde_json::from_slice(&bytes)?)
            }
            Target::Local(node) => node.verify(presentation),
        }
    }

    pub async fn gas(&self) -> Result<GasReport> {
        match self {
            Target::Http { .. } => self.call(reqwest::Method::GET, "/ledger/gas", None).await,
            Target::Local(node) => Ok(node.gas()),
        }
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1_000.0
}

#[derive(Default)]
struct Samples {
    issuance: Vec<f64>,
    challenge: Vec<f64>,
    verification: Vec<f64>,
}

const CLAIMS: [&str; 1] = ["result"];

/// One holder agent: `rounds` full loops, phases aligned with the other
/// agents at this level by `barrier`.
async fn agent(target: Target, holder: KeyPair, rounds: usize, barrier: Arc<Barrier>) -> Result<Samples> {
    let mut out = Samples::default();
    let request = ChallengeRequest {
        requested_claims: CLAIMS.iter().map(|s| s.to_string()).collect(),
        required_types: vec![CredentialType::TestCredential],
        callback: "/presentations".into(),
    };
    for _ in 0..rounds {
        barrier.wait().await;
        let t = Instant::now();
        let held = target.issue_test(&holder).await?;
        let anchored = target.anchor(&held).await?;
        out.issuance.push(ms_since(t));
        let wallet: WalletCredential = anchored.wallet;

        barrier.wait().await;
        let t = Instant::now();
        target.challenge(&request).await?;
        out.challenge.push(ms_since(t));

        barrier.wait().await;
        let t = Instant::now();
        let issued = target.challenge(&request).await?;
        let parsed = holder_validate_challenge(issued.token.as_str(), target.now())?;
        let outcome = create_presentation(&holder, &parsed, std::slice::from_ref(&wallet), &CLAIMS, Approval::Approve, target.now())?;
        let token = outcome.token().expect("approved").clone();
        let report = target.verify(token.as_str()).await?;
        out.verification.push(ms_since(t));
        if !report.accepted() {
            return Err(Error::BadRequest(format!("bench presentation rejected: {:?}", report.reject_code)));
        }
    }
    Ok(out)
}

/// Registers the bench centre and exercises every write once so the gas
/// table covers all operations.
async fn setup(target: &Target) -> Result<()> {
    let centre = target.ensure_key(DEFAULT_ISSUER).await?;
    target.add_centre(centre, crate::node::OWNER_KEY).await?;
    if !target.centre_status(centre).await?.whitelisted {
        return Err(Error::NodeUnavailable("bench centre was not whitelisted".into()));
    }
    let spare = target.ensure_key("bench-spare").await?;
    target.add_centre(spare, crate::node::OWNER_KEY).await?;
    target.remove_centre(spare, crate::node::OWNER_KEY).await?;
    let guardian = target.ensure_key("bench-guardian").await?;
    let lost = target.ensure_key("bench-lost").await?;
    let fresh = target.ensure_key("bench-fresh").await?;
    target.set_delegate(guardian, "bench-lost").await?;
    target.recover(lost, fresh, "bench-guardian").await?;
    Ok(())
}

/// Runs every level against `target`.
pub async fn run(target: Target, opts: &BenchOptions) -> Result<BenchReport> {
    if opts.samples == 0 || opts.levels.is_empty() || opts.levels.contains(&0) {
        return Err(Error::BadRequest("levels and samples must be positive".into()));
    }
    target.ping().await?;
    setup(&target).await?;
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let mut report = BenchReport {
        concurrency_levels: opts.levels.clone(),
        challenge_creation_ms: BTreeMap::new(),
        full_verification_ms: BTreeMap::new(),
        issuance_ms: BTreeMap::new(),
        gas_by_op: BTreeMap::new(),
        options: opts.clone(),
        transport: target.name().to_string(),
    };
    for &level in &opts.levels {
        let rounds = opts.samples.div_ceil(level);
        let barrier = Arc::new(Barrier::new(level));
        let handles: Vec<_> = (0..level)
            .map(|_| tokio::spawn(agent(target.clone(), KeyPair::generate_with(&mut rng), rounds, barrier.clone())))
            .collect();
        let mut all = Samples::default();
        for h in handles {
            let s = h.await.map_err(|e| Error::NodeUnavailable(e.to_string()))??;
            all.issuance.extend(s.issuance);
            all.challenge.extend(s.challenge);
            all.verification.extend(s.verification);
        }
        report.issuance_ms.insert(level, Stats::from_samples(&all.issuance));
        report.challenge_creation_ms.insert(level, Stats::from_samples(&all.challenge));
        report.full_verification_ms.insert(level, Stats::from_samples(&all.verification));
    }
    let gas = target.gas().await?;
    report.gas_by_op = gas.by_op.into_iter().map(|(op, e)| (op, e.per_tx)).collect();
    report.gas_by_op.insert("view".into(), gas.view);
    Ok(report)
}

fn bench_config(opts: &BenchOptions, dir: &Path) -> NodeConfig {
    NodeConfig {
        data_dir: dir.to_path_buf(),
        listen_addr: "127.0.0.1:0".into(),
        block_batch: opts.block_batch,
        block_interval_ms: opts.block_interval_ms,
        ..NodeConfig::default()
    }
}

/// Starts a throwaway node on its own runtime with `node_workers` threads,
/// benches it over loopback HTTP and shuts it down.
pub async fn run_spawned(opts: BenchOptions) -> Result<BenchReport> {
    let dir = tempfile::tempdir()?;
    let config = bench_config(&opts, dir.path());
    let (addr_tx, addr_rx) = tokio::sync::oneshot::channel();
    let (stop_tx, mut stop_rx) = watch::channel(false);
    let workers = opts.node_workers.max(1);
    let thread = std::thread::spawn(move || -> Result<()> {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(workers).enable_all().build()?;
        rt.block_on(async move {
            let started = async {
                let listener = server::bind(&config.listen_addr).await?;
                server::start(Node::open(config, SealMode::Timer)?, listener)
            }
            .await;
            let running = match started {
                Ok(r) => r,
                Err(e) => {
                    let _ = addr_tx.send(Err(e.to_string()));
                    return Ok(());
                }
            };
            let _ = addr_tx.send(Ok(running.base_url()));
            let _ = stop_rx.wait_for(|s| *s).await;
            running.stop().await
        })
    });
    let base = addr_rx
        .await
        .map_err(|_| Error::NodeUnavailable("bench node thread exited".into()))?
        .map_err(Error::NodeUnavailable)?;
    let result = run(Target::http(base), &opts).await;
    stop_tx.send_replace(true);
    tokio::task::spawn_blocking(move || thread.join())
        .await
        .map_err(|e| Error::NodeUnavailable(e.to_string()))?
        .map_err(|_| Error::NodeUnavailable("bench node panicked".into()))??;
    drop(dir);
    result
}

/// Benches an in-process node sharing the caller's runtime (and clock).
pub async fn run_local(opts: BenchOptions, dir: &Path) -> Result<BenchReport> {
    let node = Arc::new(Node::open(bench_config(&opts, dir), SealMode::Timer)?);
    let (stop, rx) = watch::channel(false);
    let sealer = tokio::spawn(node.clone().run_sealer(rx));
    let result = run(Target::Local(node.clone()), &opts).await;
    stop.send_replace(true);
    sealer.await.map_err(|e| Error::NodeUnavailable(e.to_string()))??;
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_stats() {
        let s = Stats::from_samples(&(1..=100).map(f64::from).collect::<Vec<_>>());
        assert_eq!((s.p50, s.p95, s.mean, s.samples), (50.0, 95.0, 50.5, 100));
        let one = Stats::from_samples(&[3.0]);
        assert_eq!((one.p50, one.p95), (3.0, 3.0));
    }

    #[test]
    fn level_parsing() {
        assert_eq!(parse_levels("1, 5,10").unwrap(), vec![1, 5, 10]);
        assert!(parse_levels("0").is_err());
        assert!(parse_levels("a").is_err());
    }
}

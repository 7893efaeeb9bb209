use std::path::Path;

use serde_json::{json, Value};

use vax_core::identity::KeyPair;
use vax_core::presentation::token;
use vax_gateway::config::NodeConfig;
use vax_gateway::node::{Node, SealMode};
use vax_gateway::server::{self, RunningNode};
use vax_gateway::Error;

fn config(dir: &Path) -> NodeConfig {
    NodeConfig {
        data_dir: dir.to_path_buf(),
        listen_addr: "127.0.0.1:0".into(),
        block_interval_ms: 20,
        ..NodeConfig::default()
    }
}

async fn spawn(dir: &Path) -> RunningNode {
    let c = config(dir);
    let listener = server::bind(&c.listen_addr).await.unwrap();
    server::start(Node::open(c, SealMode::Timer).unwrap(), listener).unwrap()
}

struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    fn new(node: &RunningNode) -> Self {
        Client { http: reqwest::Client::new(), base: node.base_url() }
    }

    async fn get(&self, path: &str) -> (u16, Value) {
        let r = self.http.get(format!("{}{path}", self.base)).send().await.unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self.http.post(format!("{}{path}", self.base)).json(&body).send().await.unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    async fn post_text(&self, path: &str, body: &str) -> Value {
        let r = self.http.post(format!("{}{path}", self.base)).body(body.to_string()).send().await.unwrap();
        assert_eq!(r.status().as_u16(), 200);
        r.json().await.unwrap()
    }

    async fn ok(&self, path: &str, body: Value) -> Value {
        let (code, v) = self.post(path, body).await;
        assert_eq!(code, 200, "{path}: {v}");
        v
    }
}

const ALICE_SEED: [u8; 32] = [0xa1; 32];

#[tokio::test(flavor = "multi_thread")]
async fn full_protocol_over_http_and_restart() {
    let dir = tempfile::tempdir().unwrap();
    let node = spawn(dir.path()).await;
    let c = Client::new(&node);

    let centre = c.ok("/keys", json!({ "name": "centre" })).await;
    let alice = c.ok("/keys", json!({ "name": "alice", "seed": hex::encode(ALICE_SEED) })).await;
    let alice_kp = KeyPair::from_seed(&ALICE_SEED);
    assert_eq!(alice["did"], json!(alice_kp.did()));

    // Only the owner edits the whitelist.
    let r = c.ok("/centres", json!({ "address": centre["address"], "signer": "alice" })).await;
    assert_eq!(r["status"], "Reverted");
    assert_eq!(r["revert_reason"], "only owner");
    let r = c.ok("/centres", json!({ "address": centre["address"] })).await;
    assert_eq!(r["status"], "Applied");
    assert_eq!(r["gas_used"], 45_000);
    let (_, status) = c.get(&format!("/centres/{}", centre["address"].as_str().unwrap())).await;
    assert_eq!(status["whitelisted"], true);
    assert_eq!(status["gas_used"], 0);

    let held = c
        .ok("/credentials/test", json!({ "subject": alice["did"], "test_type": "antigen", "result": "negative" }))
        .await;
    let anchored = c.ok("/anchors", json!({ "credential": held })).await;
    assert_eq!(anchored["receipt"]["status"], "Applied");
    let cid = anchored["cid"].as_str().unwrap().to_string();

    let (_, list) = c.get(&format!("/anchors/{}", alice["did"].as_str().unwrap())).await;
    assert_eq!(list["anchors"], json!([cid]));
    // The stored blob is ciphertext only.
    let (code, blob) = c.get(&format!("/blobs/{cid}")).await;
    assert_eq!(code, 200);
    let text = blob.to_string();
    assert!(!text.contains("negative") && !text.contains("antigen"), "{text}");
    assert_eq!(c.get("/blobs/sha256-00").await.0, 400);

    let request = json!({ "requested_claims": ["result"], "required_types": ["TestCredential"], "callback": "/presentations" });
    let issued = c.ok("/challenges", request.clone()).await;
    let presented = c
        .ok(
            "/holder/presentations",
            json!({
                "holder_did": alice["did"], "challenge": issued["token"],
                "credentials": [anchored["wallet"]], "disclose": ["result"], "signer": "alice"
            }),
        )
        .await;
    let tok = presented["token"].as_str().unwrap();
    let report = c.post_text("/presentations", tok).await;
    assert_eq!(report["decision"]["accept"], true, "{report:#}");
    assert_eq!(report["reject_code"], Value::Null);
    let (_, stored) = c.get(&format!("/presentations/{}", issued["nonce"].as_str().unwrap())).await;
    assert_eq!(stored, report);
    let replay = c.post_text("/presentations", tok).await;
    assert_eq!(replay["reject_code"], "Replay");

    // Holder signs elsewhere: the node hands out the payload and signing input.
    let issued = c.ok("/challenges", request).await;
    let unsigned = c
        .ok(
            "/holder/presentations",
            json!({
                "holder_did": alice["did"], "challenge": issued["token"],
                "credentials": [anchored["wallet"]], "disclose": ["result"]
            }),
        )
        .await;
    let input = unsigned["signing_input"].as_str().unwrap();
    let signed = token::attach_signature(input, &alice_kp.sign(input.as_bytes()));
    let report = c.ok("/presentations", json!({ "presentation": signed, "challenge": issued["token"] })).await;
    assert_eq!(report["decision"]["accept"], true, "{report:#}");

    let (_, blocks) = c.get("/ledger/blocks?from=1").await;
    assert!(!blocks.as_array().unwrap().is_empty());
    assert_eq!(blocks[0]["height"], 1);
    let (_, gas) = c.get("/ledger/gas").await;
    assert_eq!(gas["by_op"]["deploy"]["per_tx"], 1_000_000);
    assert_eq!(gas["view"], 0);

    let (_, before) = c.get("/status").await;
    node.stop().await.unwrap();

    // Reopen: the journal replays to the same state.
    let reopened = Node::open(config(dir.path()), SealMode::Immediate).unwrap();
    let after = serde_json::to_value(reopened.status()).unwrap();
    assert!(!reopened.bootstrapped());
    assert_eq!(after["state_root"], before["state_root"]);
    assert_eq!(after["sealed_state_root"], before["state_root"]);
    assert_eq!(after["height"], before["height"]);
    // And the verifier still remembers consumed nonces.
    assert_eq!(reopened.verify(tok).unwrap().reject_code.map(|c| c.to_string()).as_deref(), Some("Replay"));
}

#[tokio::test(flavor = "multi_thread")]
async fn bad_requests_map_to_4xx() {
    let dir = tempfile::tempdir().unwrap();
    let node = spawn(dir.path()).await;
    let c = Client::new(&node);
    assert_eq!(c.get("/keys/nobody").await.0, 404);
    assert_eq!(c.get("/centres/not-an-address").await.0, 400);
    assert_eq!(c.get("/presentations/unknown").await.0, 404);
    let (code, body) = c.post("/keys", json!({ "name": "../escape" })).await;
    assert_eq!(code, 400, "{body}");
    // A signed transaction must be the one the route describes.
    let owner = node.node.keys().load("owner").unwrap();
    let tx = vax_core::ledger::Transaction::sign(
        &owner,
        9,
        vax_core::ledger::TxPayload::RemoveCentre { address: owner.address() },
    );
    let (code, _) = c.post("/centres", json!({ "address": owner.address(), "transaction": tx })).await;
    assert_eq!(code, 400);
    node.stop().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn empty_data_dir_bootstraps_a_registry() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("fresh");
    let node = Node::open(config(&data), SealMode::Timer).unwrap();
    assert!(node.bootstrapped());
    let owner = node.keys().info("owner").unwrap();
    let status = node.status();
    assert_eq!(status.owner, Some(owner.address));
    assert_eq!(status.height, 1);
    assert!(data.join("ledger.jsonl").exists() && data.join("blocks.jsonl").exists());
    drop(node);
    assert!(!Node::open(config(&data), SealMode::Timer).unwrap().bootstrapped());
}

#[tokio::test]
async fn config_and_startup_errors() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    std::fs::write(&file, b"x").unwrap();
    assert!(matches!(Node::open(config(&file), SealMode::Immediate), Err(Error::Config(_))));
    let bad = NodeConfig { block_interval_ms: 0, ..config(dir.path()) };
    assert!(matches!(server::serve(bad).await, Err(Error::Config(_))));
    assert!(matches!(NodeConfig::from_toml("colour = 1"), Err(Error::Config(_))));

    let taken = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    assert!(matches!(server::bind(&addr).await, Err(Error::PortInUse(_))));
    let busy = NodeConfig { listen_addr: addr, ..config(&dir.path().join("d")) };
    assert!(matches!(server::serve(busy).await, Err(Error::PortInUse(_))));

    let first = Node::open(config(&dir.path().join("d")), SealMode::Immediate).unwrap();
    let second = Node::open(config(&dir.path().join("d")), SealMode::Immediate);
    assert!(matches!(second, Err(Error::DataDirLocked(_))));
    drop(first);
    Node::open(config(&dir.path().join("d")), SealMode::Immediate).unwrap();
}

#[tokio::test(start_paused = true)]
async fn writes_wait_for_their_block() {
    let dir = tempfile::tempdir().unwrap();
    let c = NodeConfig { block_interval_ms: 13_000, block_batch: 100, ..config(dir.path()) };
    let node = std::sync::Arc::new(Node::open(c, SealMode::Timer).unwrap());
    let (stop, rx) = tokio::sync::watch::channel(false);
    let sealer = tokio::spawn(node.clone().run_sealer(rx));
    let centre = node.keys().load_or_create("centre").unwrap();
    let start = tokio::time::Instant::now();
    let t0 = node.now();
    let r = node
        .add_centre(centre.address(), vax_gateway::node::Authority::Keystore { signer: "owner".into() })
        .await
        .unwrap();
    let waited = start.elapsed().as_millis();
    assert!((13_000..=13_100).contains(&waited), "{waited}");
    assert_eq!(node.blocks_from(r.block_height)[0].timestamp, t0.plus_millis(13_000));
    stop.send_replace(true);
    sealer.await.unwrap().unwrap();
}

//! A node on an ephemeral port, driven over HTTP by the three parties:
//! the centre issues and anchors, the citizen's wallet presents, and the
//! verifier challenges and checks.
//!
//!     cargo run -p vax-gateway --example http_node

use serde_json::{json, Value};
use vax_gateway::config::NodeConfig;
use vax_gateway::node::{Node, SealMode};
use vax_gateway::server;

async fn post(http: &reqwest::Client, url: String, body: Value) -> Value {
    let r = http.post(&url).json(&body).send().await.unwrap();
    let status = r.status();
    let text = r.text().await.unwrap();
    assert!(status.is_success(), "{url}: {status} {text}");
    serde_json::from_str(&text).unwrap()
}

#[tokio::main]
async fn main() {
    let dir = tempfile::tempdir().unwrap();
    let config = NodeConfig {
        data_dir: dir.path().to_path_buf(),
        listen_addr: "127.0.0.1:0".into(),
        block_interval_ms: 50,
        ..NodeConfig::default()
    };
    let listener = server::bind(&config.listen_addr).await.unwrap();
    let node = server::start(Node::open(config, SealMode::Timer).unwrap(), listener).unwrap();
    let base = node.base_url();
    let http = reqwest::Client::new();
    println!("node listening on {base}");

    // Registry owner whitelists the centre.
    let centre = post(&http, format!("{base}/keys"), json!({ "name": "centre" })).await;
    let citizen = post(&http, format!("{base}/keys"), json!({ "name": "citizen" })).await;
    let r = post(&http, format!("{base}/centres"), json!({ "address": centre["address"] })).await;
    println!("add_centre         {} in block {}", r["status"], r["block_height"]);

    // Centre issues a test credential and anchors it.
    let held = post(
        &http,
        format!("{base}/credentials/test"),
        json!({ "subject": citizen["did"], "test_type": "PCR", "result": "negative" }),
    )
    .await;
    let anchored = post(&http, format!("{base}/anchors"), json!({ "credential": held })).await;
    println!("anchored           {}", anchored["cid"]);

    // Verifier asks for the result only.
    let challenge = post(
        &http,
        format!("{base}/challenges"),
        json!({ "requested_claims": ["result"], "required_types": ["TestCredential"] }),
    )
    .await;
    println!("challenge nonce    {}", challenge["nonce"]);

    // The wallet builds and signs the presentation.
    let presented = post(
        &http,
        format!("{base}/holder/presentations"),
        json!({
            "holder_did": citizen["did"], "challenge": challenge["token"],
            "credentials": [anchored["wallet"]], "disclose": ["result"], "signer": "citizen"
        }),
    )
    .await;
    let token = presented["token"].as_str().unwrap().to_string();

    for attempt in ["first", "replayed"] {
        let report: Value =
            http.post(format!("{base}/presentations")).body(token.clone()).send().await.unwrap().json().await.unwrap();
        println!("{attempt:<8} submit    accept={} reject_code={}", report["decision"]["accept"], report["reject_code"]);
    }

    let gas: Value = http.get(format!("{base}/ledger/gas")).send().await.unwrap().json().await.unwrap();
    for (op, entry) in gas["by_op"].as_object().unwrap() {
        println!("gas {op:<14} {}", entry["per_tx"]);
    }
    node.stop().await.unwrap();
}

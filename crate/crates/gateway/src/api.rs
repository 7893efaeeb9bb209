//! HTTP routes. Each handler decodes the request, makes one `Node` call and
//! encodes the result.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use vax_core::castore::{CasError, Cid, Envelope};
use vax_core::credentials::{DoseInfo, HeldCredential, TestInfo, TestResult};
use vax_core::identity::{Address, Did};
use vax_core::ledger::{LedgerError, Transaction};
use vax_core::presentation::{ChallengeRequest, WalletCredential};
use vax_core::time::Timestamp;

use crate::bench::{self, BenchOptions};
use crate::error::Error;
use crate::node::{Authority, Node, OWNER_KEY};

pub const DEFAULT_ISSUER: &str = "centre";

pub fn router(node: Arc<Node>) -> Router {
    Router::new()
        .route("/status", get(status))
        .route("/keys", post(create_key))
        .route("/keys/{name}", get(key_info))
        .route("/centres", post(add_centre))
        .route("/centres/{addr}", get(centre_status).delete(remove_centre))
        .route("/delegates", post(set_delegate))
        .route("/recoveries", post(recover))
        .route("/credentials/dose", post(issue_dose))
        .route("/credentials/full", post(issue_full))
        .route("/credentials/test", post(issue_test))
        .route("/anchors", post(anchor))
        .route("/anchors/{address}", get(anchors))
        .route("/blobs/{cid}", get(blob))
        .route("/challenges", post(create_challenge))
        .route("/presentations", post(verify_presentation))
        .route("/presentations/{nonce}", get(report))
        .route("/holder/presentations", post(holder_presentation))
        .route("/ledger/blocks", get(blocks))
        .route("/ledger/gas", get(gas))
        .route("/bench/run", get(bench_run))
        .with_state(node)
}

type Shared = State<Arc<Node>>;
type ApiResult = Result<Response, ApiError>;

pub struct ApiError(Error);

impl<E: Into<Error>> From<E> for ApiError {
    fn from(e: E) -> Self {
        ApiError(e.into())
    }
}

fn status_of(e: &Error) -> (StatusCode, &'static str) {
    match e {
        Error::BadRequest(_) | Error::Json(_) | Error::Identity(_) => (StatusCode::BAD_REQUEST, "bad_request"),
        Error::NotFound(_) | Error::Cas(CasError::NotFound(_)) => (StatusCode::NOT_FOUND, "not_found"),
        Error::Ledger(LedgerError::BadNonce { .. } | LedgerError::AlreadyDeployed) => (StatusCode::CONFLICT, "conflict"),
        Error::Ledger(LedgerError::BadSignature) => (StatusCode::BAD_REQUEST, "bad_signature"),
        Error::Cas(CasError::UnencryptedPayload(_) | CasError::MalformedEnvelope(_)) => {
            (StatusCode::BAD_REQUEST, "unencrypted_payload")
        }
        Error::Credential(_) | Error::Presentation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "rejected"),
        Error::NodeUnavailable(_) => (StatusCode::SERVICE_UNAVAILABLE, "unavailable"),
        _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, kind) = status_of(&self.0);
        (code, Json(json!({ "error": kind, "message": self.0.to_string() }))).into_response()
    }
}

fn ok<T: serde::Serialize>(value: T) -> ApiResult {
    Ok(Json(value).into_response())
}

fn parse<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError(Error::BadRequest(e.to_string())))
}

/// Accepts either `0x…` or a `did:vax:` identifier.
pub fn parse_holder(s: &str) -> Result<Address, Error> {
    if s.starts_with("did:") {
        Ok(s.parse::<Did>()?.address())
    } else {
        Ok(s.parse::<Address>()?)
    }
}

#[derive(Deserialize, Default)]
struct AuthBody {
    signer: Option<String>,
    transaction: Option<Transaction>,
}

impl AuthBody {
    fn authority(self, default_signer: &str) -> Authority {
        match (self.transaction, self.signer) {
            (Some(transaction), _) => Authority::Signed { transaction },
            (None, signer) => Authority::Keystore { signer: signer.unwrap_or_else(|| default_signer.to_string()) },
        }
    }
}

async fn status(State(node): Shared) -> ApiResult {
    ok(node.status())
}

#[derive(Deserialize)]
struct KeyBody {
    name: String,
    seed: Option<String>,
}

async fn create_key(State(node): Shared, Json(body): Json<KeyBody>) -> ApiResult {
    let seed = body.seed.map(hex::decode).transpose().map_err(|e| Error::BadRequest(format!("seed: {e}")))?;
    ok(node.create_key(&body.name, seed.as_deref())?)
}

async fn key_info(State(node): Shared, Path(name): Path<String>) -> ApiResult {
    ok(node.key_info(&name)?)
}

#[derive(Deserialize)]
struct CentreBody {
    address: Address,
    #[serde(flatten)]
    auth: AuthBody,
}

async fn add_centre(State(node): Shared, Json(body): Json<CentreBody>) -> ApiResult {
    ok(node.add_centre(body.address, body.auth.authority(OWNER_KEY)).await?)
}

async fn remove_centre(State(node): Shared, Path(addr): Path<String>, body: Bytes) -> ApiResult {
    let auth: AuthBody = if body.is_empty() { AuthBody::default() } else { parse(&body)? };
    ok(node.remove_centre(parse_holder(&addr)?, auth.authority(OWNER_KEY)).await?)
}

async fn centre_status(State(node): Shared, Path(addr): Path<String>) -> ApiResult {
    ok(node.centre_status(parse_holder(&addr)?)?)
}

#[derive(Deserialize)]
struct DelegateBody {
    delegate: Address,
    #[serde(flatten)]
    auth: AuthBody,
}

async fn set_delegate(State(node): Shared, Json(body): Json<DelegateBody>) -> ApiResult {
    let auth = body.auth.authority("");
    ok(node.set_delegate(body.delegate, auth).await?)
}

#[derive(Deserialize)]
struct RecoverBody {
    old_address: Address,
    new_address: Address,
    #[serde(flatten)]
    auth: AuthBody,
}

async fn recover(State(node): Shared, Json(body): Json<RecoverBody>) -> ApiResult {
    ok(node.recover(body.old_address, body.new_address, body.auth.authority("")).await?)
}

fn issuer_or_default(issuer: &Option<String>) -> &str {
    issuer.as_deref().unwrap_or(DEFAULT_ISSUER)
}

#[derive(Deserialize)]
struct DoseBody {
    issuer: Option<String>,
    subject: Did,
    dose: DoseInfo,
}

async fn issue_dose(State(node): Shared, Json(body): Json<DoseBody>) -> ApiResult {
    ok(node.issue_dose(issuer_or_default(&body.issuer), &body.subject, &body.dose)?)
}

#[derive(Deserialize)]
struct FullBody {
    issuer: Option<String>,
    subject: Did,
    doses: [HeldCredential; 2],
}

async fn issue_full(State(node): Shared, Json(body): Json<FullBody>) -> ApiResult {
    let [first, second] = &body.doses;
    ok(node.issue_full(issuer_or_default(&body.issuer), &body.subject, first, second)?)
}

#[derive(Deserialize)]
struct TestBody {
    issuer: Option<String>,
    subject: Did,
    test_type: String,
    result: TestResult,
    /// Defaults to the node's current time.
    sampled_at: Option<Timestamp>,
}

async fn issue_test(State(node): Shared, Json(body): Json<TestBody>) -> ApiResult {
    let test = TestInfo {
        test_type: body.test_type,
        result: body.result,
        sampled_at: body.sampled_at.unwrap_or_else(|| node.now()),
    };
    ok(node.issue_test(issuer_or_default(&body.issuer), &body.subject, &test)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnchorBody {
    ClientSigned { envelope: Envelope, transaction: Transaction },
    Issuer { issuer: Option<String>, credential: HeldCredential },
}

async fn anchor(State(node): Shared, Json(body): Json<AnchorBody>) -> ApiResult {
    match body {
        AnchorBody::ClientSigned { envelope, transaction } => ok(node.anchor_signed(&envelope, transaction).await?),
        AnchorBody::Issuer { issuer, credential } => ok(node.anchor(issuer_or_default(&issuer), &credential).await?),
    }
}

async fn anchors(State(node): Shared, Path(address): Path<String>) -> ApiResult {
    ok(node.anchors(parse_holder(&address)?)?)
}

async fn blob(State(node): Shared, Path(cid): Path<String>) -> ApiResult {
    let cid: Cid = cid.parse().map_err(|_| Error::BadRequest(format!("bad cid `{cid}`")))?;
    ok(node.blob(&cid)?)
}

async fn create_challenge(State(node): Shared, Json(request): Json<ChallengeRequest>) -> ApiResult {
    ok(node.create_challenge(&request)?)
}

#[derive(Deserialize)]
struct PresentationBody {
    presentation: String,
    challenge: Option<String>,
}

/// Body is the raw token, or `{"presentation": …, "challenge": …}`.
async fn verify_presentation(State(node): Shared, body: Bytes) -> ApiResult {
    let text = String::from_utf8_lossy(&body);
    let text = text.trim();
    let report = if text.starts_with('{') {
        let b: PresentationBody = parse(text.as_bytes())?;
        match b.challenge {
            Some(c) => node.verify_against(&b.presentation, &c)?,
            None => node.verify(&b.presentation)?,
        }
    } else {
        node.verify(text)?
    };
    ok(report)
}

async fn report(State(node): Shared, Path(nonce): Path<String>) -> ApiResult {
    match node.report(&nonce) {
        Some(r) => ok(r),
        None => Err(Error::NotFound(format!("no presentation received for {nonce}")).into()),
    }
}

#[derive(Deserialize)]
struct HolderBody {
    holder_did: Did,
    challenge: String,
    credentials: Vec<WalletCredential>,
    #[serde(default)]
    disclose: Vec<String>,
    /// Keystore name to sign with; omitted means return the unsigned payload.
    signer: Option<String>,
}

async fn holder_presentation(State(node): Shared, Json(body): Json<HolderBody>) -> ApiResult {
    let disclose: Vec<&str> = body.disclose.iter().map(String::as_str).collect();
    let unsigned = node.holder_presentation(&body.holder_did, &body.challenge, &body.credentials, &disclose)?;
    match body.signer {
        Some(name) => ok(json!({ "token": node.sign_as(&name, &unsigned.payload)? })),
        None => ok(unsigned),
    }
}

#[derive(Deserialize)]
struct FromQuery {
    #[serde(default)]
    from: u64,
}

async fn blocks(State(node): Shared, Query(q): Query<FromQuery>) -> ApiResult {
    ok(node.blocks_from(q.from))
}

async fn gas(State(node): Shared) -> ApiResult {
    ok(node.gas())
}

#[derive(Deserialize)]
struct BenchQuery {
    levels: Option<String>,
    samples: Option<usize>,
    block_interval_ms: Option<u64>,
}

/// Runs the harness against a throwaway node, not this one.
async fn bench_run(Query(q): Query<BenchQuery>) -> ApiResult {
    let mut opts = BenchOptions::default();
    if let Some(levels) = q.levels {
        opts.levels = bench::parse_levels(&levels)?;
    }
    if let Some(s) = q.samples {
        opts.samples = s;
    }
    if let Some(ms) = q.block_interval_ms {
        opts.block_interval_ms = ms;
    }
    ok(bench::run_spawned(opts).await?)
}

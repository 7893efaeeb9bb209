//! `serve`: bind, run the API and the sealer, stop cleanly on a signal.

use std::net::SocketAddr;
use std::sync::Arc;

use serde_json::json;
use tokio::sync::watch;
use tokio::task::JoinHandle;

use crate::api;
use crate::config::NodeConfig;
use crate::error::{Error, Result};
use crate::node::{Node, SealMode};

/// A node with its HTTP listener and sealer running.
pub struct RunningNode {
    pub addr: SocketAddr,
    pub node: Arc<Node>,
    shutdown: watch::Sender<bool>,
    http: JoinHandle<std::io::Result<()>>,
    sealer: JoinHandle<Result<()>>,
}

impl RunningNode {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting requests, seals pending transactions and persists
    /// verifier sessions.
    pub async fn stop(self) -> Result<()> {
        self.shutdown.send_replace(true);
        self.http.await.map_err(|e| Error::NodeUnavailable(e.to_string()))??;
        self.sealer.await.map_err(|e| Error::NodeUnavailable(e.to_string()))??;
        Ok(())
    }
}

pub async fn bind(listen_addr: &str) -> Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(listen_addr).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => Error::PortInUse(listen_addr.to_string()),
        _ => Error::Config(format!("listen_addr {listen_addr}: {e}")),
    })
}

/// Starts serving `node` on `listener`.
pub fn start(node: Node, listener: tokio::net::TcpListener) -> Result<RunningNode> {
    let addr = listener.local_addr()?;
    let node = Arc::new(node);
    let (shutdown, rx) = watch::channel(false);
    let sealer = tokio::spawn(node.clone().run_sealer(rx.clone()));
    let mut http_rx = rx;
    let app = api::router(node.clone());
    let http = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = http_rx.wait_for(|stop| *stop).await;
            })
            .await
    });
    Ok(RunningNode { addr, node, shutdown, http, sealer })
}

/// Opens the data dir, binds and serves until SIGINT/SIGTERM.
pub async fn serve(config: NodeConfig) -> Result<()> {
    config.validate()?;
    let listener = bind(&config.listen_addr).await?;
    let node = Node::open(config, SealMode::Timer)?;
    let running = start(node, listener)?;
    let status = running.node.status();
    println!(
        "{}",
        json!({
            "event": "listening",
            "addr": running.addr.to_string(),
            "bootstrapped": running.node.bootstrapped(),
            "owner_did": running.node.keys().info(crate::node::OWNER_KEY).ok().map(|k| k.did),
            "owner": status.owner,
            "verifier_did": status.verifier_did,
            "height": status.height,
            "state_root": status.state_root,
        })
    );
    shutdown_signal().await;
    eprintln!("shutting down");
    running.stop().await
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}

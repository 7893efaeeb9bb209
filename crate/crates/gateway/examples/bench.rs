//! Load test: concurrent agents issue, challenge and verify against a
//! throwaway node, then the report is written as JSON and CSV.
//!
//!     cargo run --release -p vax-gateway --example bench [levels] [out-dir]
//!
//! With `--emulate-13s` the node seals on a 13 s interval in virtual time,
//! so issuance latency shows the block wait without actually waiting.

use vax_gateway::bench::{self, BenchOptions};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let emulate = args.iter().any(|a| a == "--emulate-13s");
    let mut rest = args.iter().filter(|a| !a.starts_with("--"));
    let levels = rest.next().map(|s| bench::parse_levels(s).unwrap()).unwrap_or_else(|| vec![1, 5, 10]);
    let out = rest.next().cloned().unwrap_or_else(|| ".".into());

    let report = if emulate {
        let opts = BenchOptions { levels, samples: 10, block_interval_ms: 13_000, ..Default::default() };
        let dir = tempfile::tempdir().unwrap();
        tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .start_paused(true)
            .build()
            .unwrap()
            .block_on(bench::run_local(opts, dir.path()))
    } else {
        let opts = BenchOptions { levels, samples: 30, block_interval_ms: 20, ..Default::default() };
        tokio::runtime::Runtime::new().unwrap().block_on(bench::run_spawned(opts))
    }
    .unwrap();

    println!("{:>5} {:>12} {:>12} {:>12}", "agents", "challenge", "verify", "issue");
    for level in &report.concurrency_levels {
        let p = |m: &std::collections::BTreeMap<usize, bench::Stats>| format!("{:.1}/{:.1}", m[level].p50, m[level].p95);
        println!(
            "{level:>5} {:>12} {:>12} {:>12}",
            p(&report.challenge_creation_ms),
            p(&report.full_verification_ms),
            p(&report.issuance_ms)
        );
    }
    println!("(p50/p95 ms)");
    for path in report.write(std::path::Path::new(&out)).unwrap() {
        println!("wrote {}", path.display());
    }
}

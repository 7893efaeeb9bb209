use vax_gateway::bench::{self, BenchOptions, Target};
use vax_gateway::Error;

#[tokio::test(flavor = "multi_thread")]
async fn report_covers_every_level_and_writes_json_and_csv() {
    let opts = BenchOptions { levels: vec![1, 10], samples: 30, block_interval_ms: 10, ..Default::default() };
    let report = bench::run_spawned(opts).await.unwrap();
    assert_eq!(report.concurrency_levels, vec![1, 10]);
    for per_level in [&report.challenge_creation_ms, &report.full_verification_ms, &report.issuance_ms] {
        assert_eq!(per_level.keys().copied().collect::<Vec<_>>(), vec![1, 10]);
        for s in per_level.values() {
            assert!(s.samples >= 30);
            assert!(s.p50 <= s.p95 && s.p50 > 0.0);
        }
    }
    for op in ["deploy", "add_centre", "remove_centre", "anchor", "set_delegate", "recover", "view"] {
        assert!(report.gas_by_op.contains_key(op), "{op} missing");
    }

    let dir = tempfile::tempdir().unwrap();
    let files = report.write(dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    let back: bench::BenchReport = serde_json::from_slice(&std::fs::read(&files[0]).unwrap()).unwrap();
    assert_eq!(back, report);
    let latency = std::fs::read_to_string(&files[1]).unwrap();
    assert_eq!(latency.lines().count(), 1 + 3 * 2);
    let gas = std::fs::read_to_string(&files[2]).unwrap();
    assert!(gas.contains("deploy,1000000") && gas.contains("view,0"));
}

#[tokio::test]
async fn unreachable_node_is_reported() {
    // Grab a free port and release it so nothing listens there.
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let target = Target::http(format!("http://127.0.0.1:{port}"));
    let err = bench::run(target, &BenchOptions::default()).await.unwrap_err();
    assert!(matches!(err, Error::NodeUnavailable(_)), "{err}");
    let bad = BenchOptions { samples: 0, ..Default::default() };
    assert!(matches!(bench::run_spawned(bad).await, Err(Error::BadRequest(_))));
}

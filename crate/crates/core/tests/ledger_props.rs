use std::collections::BTreeSet;
use std::fs;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use vax_core::castore::Cid;
use vax_core::identity::{Address, KeyPair};
use vax_core::ledger::{
    replay, state_root, verify_chain, Block, GasSchedule, Ledger, LedgerConfig, LedgerError, Transaction, TxKind,
    TxPayload,
};
use vax_core::time::Timestamp;
use vax_core::Hash32;

const T0: Timestamp = Timestamp(1_622_505_600_000);

struct Actors {
    owner: KeyPair,
    others: Vec<KeyPair>,
}

impl Actors {
    fn new(rng: &mut ChaCha20Rng) -> Self {
        Actors { owner: KeyPair::generate_with(rng), others: (0..6).map(|_| KeyPair::generate_with(rng)).collect() }
    }

    fn any<'a>(&'a self, rng: &mut ChaCha20Rng) -> &'a KeyPair {
        if rng.gen_bool(0.2) {
            &self.owner
        } else {
            &self.others[rng.gen_range(0..self.others.len())]
        }
    }

    fn addr(&self, rng: &mut ChaCha20Rng) -> Address {
        self.any(rng).address()
    }
}

/// What a scenario run observed, for cross-checking.
struct Run {
    ledger: Ledger,
    /// State root after each journaled transaction.
    roots: Vec<Hash32>,
    /// Transactions rejected before journaling, with the journal length at the time.
    rejected: Vec<(usize, Transaction)>,
    now: Timestamp,
}

fn random_payload(rng: &mut ChaCha20Rng, a: &Actors) -> TxPayload {
    match rng.gen_range(0..10) {
        0..=2 => TxPayload::AddCentre { address: a.addr(rng) },
        3 => TxPayload::RemoveCentre { address: a.addr(rng) },
        4..=6 => TxPayload::AnchorCertificate { holder: a.addr(rng), cid: Cid::of(&rng.gen::<[u8; 8]>()) },
        7 => TxPayload::SetDelegate { delegate: a.addr(rng) },
        8 => TxPayload::Recover { old_address: a.addr(rng), new_address: a.addr(rng) },
        _ => TxPayload::Deploy,
    }
}

fn run_scenario(seed: u64, steps: usize, dir: Option<&std::path::Path>) -> Run {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let actors = Actors::new(&mut rng);
    let config = LedgerConfig { block_batch: rng.gen_range(1..8), block_interval_ms: 1000, ..LedgerConfig::default() };
    let mut ledger = match dir {
        Some(d) => Ledger::open(d, config, T0).unwrap(),
        None => Ledger::new(config),
    };
    let mut now = T0;
    let mut roots = Vec::new();
    let mut rejected = Vec::new();
    ledger.deploy_registry(&actors.owner, now).unwrap();
    roots.push(ledger.state_root());
    for _ in 0..steps {
        now = now.plus_millis(rng.gen_range(0..700));
        let signer = actors.any(&mut rng);
        let payload = random_payload(&mut rng, &actors);
        let mut nonce = ledger.next_nonce(&signer.address());
        if rng.gen_bool(0.05) {
            nonce += rng.gen_range(1..3);
        }
        let tx = Transaction::sign(signer, nonce, payload);
        match ledger.submit(tx.clone(), now) {
            Ok(_) => roots.push(ledger.state_root()),
            Err(LedgerError::BadNonce { .. } | LedgerError::AlreadyDeployed) => {
                rejected.push((ledger.transactions().len(), tx))
            }
            Err(e) => panic!("unexpected {e}"),
        }
    }
    Run { ledger, roots, rejected, now }
}

#[test]
fn replay_matches_live_state_in_100_scenarios() {
    let mut matched = 0;
    for seed in 0..100u64 {
        let run = run_scenario(seed, 60, None);
        let replayed = replay(run.ledger.transactions()).unwrap();
        if state_root(replayed.as_ref()) == run.ledger.state_root() && replayed.as_ref() == run.ledger.state() {
            matched += 1;
        }
    }
    assert_eq!(matched, 100);
}

#[test]
fn scenarios_are_deterministic() {
    for seed in [1, 2, 3] {
        let a = run_scenario(seed, 80, None);
        let b = run_scenario(seed, 80, None);
        assert_eq!(a.ledger.journal_text(), b.ledger.journal_text());
        assert_eq!(a.ledger.blocks(), b.ledger.blocks());
        assert_eq!(a.roots, b.roots);
    }
}

#[test]
fn reopen_restores_state_blocks_and_nonces() {
    for seed in 0..10u64 {
        let dir = tempfile::tempdir().unwrap();
        let run = run_scenario(seed, 50, Some(dir.path()));
        let reopened = Ledger::open(dir.path(), *run.ledger.config(), run.now).unwrap();
        assert_eq!(reopened.state_root(), run.ledger.state_root());
        assert_eq!(reopened.blocks(), run.ledger.blocks());
        assert_eq!(reopened.pending(), run.ledger.pending());
        assert_eq!(reopened.journal_text(), fs::read_to_string(dir.path().join("ledger.jsonl")).unwrap());
        for tx in run.ledger.transactions() {
            assert_eq!(reopened.next_nonce(&tx.sender), run.ledger.next_nonce(&tx.sender));
        }
        verify_chain(reopened.blocks()).unwrap();
    }
}

/// Cuts both files at a random byte, the way a crash mid-write would leave
/// them (blocks are written after the transactions they cover), and checks
/// that reopening yields the live state at that prefix.
#[test]
fn torn_journal_recovers_to_a_prefix() {
    let mut rng = ChaCha20Rng::seed_from_u64(0xc4a5);
    for seed in 0..40u64 {
        let dir = tempfile::tempdir().unwrap();
        let run = run_scenario(seed, 40, Some(dir.path()));
        let journal = fs::read(dir.path().join("ledger.jsonl")).unwrap();
        let blocks_text = fs::read_to_string(dir.path().join("blocks.jsonl")).unwrap();
        let cut = rng.gen_range(0..=journal.len());
        let survivors = journal[..cut].iter().filter(|&&b| b == b'\n').count();

        // Keep the blocks whose transactions all survived, then tear the next one.
        let mut kept = String::new();
        let mut covered = 0usize;
        let mut torn_block = None;
        for line in blocks_text.lines() {
            let block: Block = serde_json::from_str(line).unwrap();
            if covered + block.tx_hashes.len() > survivors {
                torn_block = Some(line.to_string());
                break;
            }
            covered += block.tx_hashes.len();
            kept.push_str(line);
            kept.push('\n');
        }
        if let Some(line) = torn_block {
            kept.push_str(&line[..rng.gen_range(0..line.len())]);
        }
        fs::write(dir.path().join("ledger.jsonl"), &journal[..cut]).unwrap();
        fs::write(dir.path().join("blocks.jsonl"), kept).unwrap();

        let reopened = Ledger::open(dir.path(), *run.ledger.config(), run.now).unwrap();
        assert_eq!(reopened.transactions().len(), survivors);
        let expected = if survivors == 0 { state_root(None) } else { run.roots[survivors - 1] };
        assert_eq!(reopened.state_root(), expected, "seed {seed} cut {cut}");
        assert_eq!(reopened.transactions(), &run.ledger.transactions()[..survivors]);
        // The torn tail was truncated away, so appending continues cleanly.
        let on_disk = fs::read(dir.path().join("ledger.jsonl")).unwrap();
        assert!(on_disk.is_empty() || on_disk.ends_with(b"\n"));
    }
}

#[test]
fn rejected_transactions_stay_rejected_on_replay() {
    for seed in 0..20u64 {
        let run = run_scenario(seed, 60, None);
        for (at, bad) in run.rejected.iter().take(3) {
            let mut log = run.ledger.transactions()[..*at].to_vec();
            log.push(bad.clone());
            assert!(matches!(replay(&log), Err(LedgerError::CorruptLog { .. })));
        }
    }
}

#[test]
fn tampered_journal_or_blocks_refuse_to_open() {
    let dir = tempfile::tempdir().unwrap();
    let mut run = run_scenario(5, 30, Some(dir.path()));
    run.ledger.seal(run.now).unwrap();
    let path = dir.path().join("ledger.jsonl");
    let original = fs::read_to_string(&path).unwrap();

    // Swap two journaled transactions.
    let mut lines: Vec<&str> = original.lines().collect();
    lines.swap(1, 2);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    assert!(matches!(Ledger::open(dir.path(), LedgerConfig::default(), run.now), Err(LedgerError::CorruptLog { .. })));
    fs::write(&path, &original).unwrap();

    // Rewrite a sealed state root.
    let bpath = dir.path().join("blocks.jsonl");
    let blocks_text = fs::read_to_string(&bpath).unwrap();
    let mut blocks: Vec<Block> = blocks_text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let last = blocks.len() - 1;
    blocks[last].state_root = Hash32([1; 32]);
    let text: String = blocks.iter().map(|b| String::from_utf8(b.canonical_bytes()).unwrap() + "\n").collect();
    fs::write(&bpath, text).unwrap();
    assert!(Ledger::open(dir.path(), LedgerConfig::default(), run.now).is_err());
}

#[test]
fn block_chain_detects_any_field_change() {
    let run = run_scenario(8, 50, None);
    let blocks = run.ledger.blocks().to_vec();
    assert!(blocks.len() >= 3);
    verify_chain(&blocks).unwrap();
    for i in 0..blocks.len() - 1 {
        let mutations: [fn(&mut Block); 4] = [
            |b| b.height += 1,
            |b| b.state_root = Hash32([9; 32]),
            |b| b.timestamp = b.timestamp.plus_millis(1),
            |b| b.tx_hashes.reverse(),
        ];
        for (m, mutate) in mutations.iter().enumerate() {
            let mut chain = blocks.clone();
            let before = chain[i].clone();
            mutate(&mut chain[i]);
            if chain[i] == before {
                continue; // reversing a single-tx block
            }
            assert!(verify_chain(&chain).is_err(), "block {i} mutation {m}");
        }
    }
}

#[test]
fn gas_schedule_shape() {
    let gas = GasSchedule::default();
    assert!(gas.is_well_formed());
    for kind in TxKind::ALL {
        if kind != TxKind::Deploy {
            assert!(gas.cost(TxKind::Deploy) > gas.cost(kind));
        }
    }
    assert_eq!(gas.view, 0);

    let run = run_scenario(4, 100, None);
    let mut total = 0;
    for tx in run.ledger.transactions() {
        let r = run.ledger.receipt(&tx.hash()).unwrap();
        assert_eq!(r.gas_used, gas.cost(tx.kind()), "reverts are charged in full too");
        total += r.gas_used;
    }
    assert_eq!(run.ledger.gas_by_kind().values().sum::<u64>(), total);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Whitelist equals a simple add/remove model, and only the owner moves it.
    #[test]
    fn whitelist_follows_owner_only_model(seed in any::<u64>(), steps in 1usize..60) {
        let run = run_scenario(seed, steps, None);
        let owner = run.ledger.owner().unwrap();
        let mut model = BTreeSet::new();
        let mut anchored: std::collections::BTreeMap<Address, Vec<Cid>> = Default::default();
        let mut revoked = BTreeSet::new();
        for tx in run.ledger.transactions() {
            let r = run.ledger.receipt(&tx.hash()).unwrap();
            match tx.payload {
                TxPayload::AddCentre { address } | TxPayload::RemoveCentre { address } => {
                    prop_assert_eq!(r.is_applied(), tx.sender == owner);
                    if tx.sender != owner {
                        prop_assert_eq!(r.revert_reason.as_deref(), Some("only owner"));
                    } else if matches!(tx.payload, TxPayload::AddCentre { .. }) {
                        model.insert(address);
                    } else {
                        model.remove(&address);
                    }
                }
                TxPayload::AnchorCertificate { holder, cid } => {
                    let allowed = model.contains(&tx.sender) && !revoked.contains(&holder);
                    prop_assert_eq!(r.is_applied(), allowed);
                    if !model.contains(&tx.sender) {
                        prop_assert_eq!(r.revert_reason.as_deref(), Some("not whitelisted"));
                    }
                    if allowed {
                        anchored.entry(holder).or_default().push(cid);
                    }
                }
                TxPayload::Recover { old_address, new_address } if r.is_applied() => {
                    let moved = anchored.remove(&old_address).unwrap_or_default();
                    anchored.entry(new_address).or_default().extend(moved);
                    revoked.insert(old_address);
                }
                _ => {}
            }
        }
        let state = run.ledger.state().unwrap();
        prop_assert_eq!(state.centres(), model);
        for (holder, cids) in &anchored {
            prop_assert_eq!(&state.anchors_of(holder), cids);
        }
        for addr in &revoked {
            prop_assert!(state.anchors_of(addr).is_empty());
        }
    }

    /// Anchor lists only grow, except when a recovery moves them wholesale.
    #[test]
    fn anchors_are_append_only(seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let actors = Actors::new(&mut rng);
        let mut ledger = Ledger::new(LedgerConfig::default());
        ledger.deploy_registry(&actors.owner, T0).unwrap();
        let watched: Vec<Address> = actors.others.iter().map(KeyPair::address).collect();
        let mut before: Vec<Vec<Cid>> = watched.iter().map(|a| ledger.get_anchors(a).unwrap()).collect();
        for _ in 0..60 {
            let signer = actors.any(&mut rng);
            let payload = random_payload(&mut rng, &actors);
            let recovering = matches!(payload, TxPayload::Recover { .. });
            let Ok(r) = ledger.submit_signed(signer, payload, T0) else { continue };
            for (i, a) in watched.iter().enumerate() {
                let now = ledger.get_anchors(a).unwrap();
                if !(recovering && r.is_applied()) {
                    prop_assert!(now.starts_with(&before[i]));
                }
                before[i] = now;
            }
        }
    }
}

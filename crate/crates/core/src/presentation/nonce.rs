use std::collections::BTreeMap;
use std::sync::Mutex;

use crate::time::Timestamp;

/// Live challenge nonces with their expiry. Consumption is an atomic
/// check-and-remove, so each nonce is accepted at most once.
#[derive(Debug, Default)]
pub struct NonceStore {
    live: Mutex<BTreeMap<String, Timestamp>>,
}

impl NonceStore {
    pub fn new() -> Self {
        NonceStore::default()
    }

    pub fn from_snapshot(entries: BTreeMap<String, Timestamp>) -> Self {
        NonceStore { live: Mutex::new(entries) }
    }

    pub fn snapshot(&self) -> BTreeMap<String, Timestamp> {
        self.live.lock().expect("nonce lock poisoned").clone()
    }

    pub fn register(&self, nonce: String, expires_at: Timestamp) {
        self.live.lock().expect("nonce lock poisoned").insert(nonce, expires_at);
    }

    /// True exactly once for a live nonce; false for unknown, expired or
    /// already consumed nonces.
    pub fn consume(&self, nonce: &str, now: Timestamp) -> bool {
        let mut live = self.live.lock().expect("nonce lock poisoned");
        live.retain(|_, exp| now < *exp);
        live.remove(nonce).is_some()
    }

    /// Whether `nonce` would be accepted now, without using it up.
    pub fn is_live(&self, nonce: &str, now: Timestamp) -> bool {
        self.live.lock().expect("nonce lock poisoned").get(nonce).is_some_and(|exp| now < *exp)
    }

    /// Drops every nonce whose challenge has expired.
    pub fn purge(&self, now: Timestamp) -> usize {
        let mut live = self.live.lock().expect("nonce lock poisoned");
        let before = live.len();
        live.retain(|_, exp| now < *exp);
        before - live.len()
    }

    pub fn len(&self) -> usize {
        self.live.lock().expect("nonce lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn single_use() {
        let store = NonceStore::new();
        store.register("n1".into(), Timestamp(1_000));
        assert!(store.is_live("n1", Timestamp(0)));
        assert!(!store.is_live("n1", Timestamp(1_000)));
        assert!(store.consume("n1", Timestamp(0)));
        assert!(!store.is_live("n1", Timestamp(0)));
        assert!(!store.consume("n1", Timestamp(0)));
        assert!(!store.consume("unknown", Timestamp(0)));
    }

    #[test]
    fn expired_nonces_purge() {
        let store = NonceStore::new();
        store.register("old".into(), Timestamp(1_000));
        store.register("new".into(), Timestamp(5_000));
        assert_eq!(store.purge(Timestamp(1_000)), 1);
        assert_eq!(store.len(), 1);
        assert!(!store.consume("old", Timestamp(1_000)));
        store.register("late".into(), Timestamp(2_000));
        assert!(!store.consume("late", Timestamp(2_000)));
    }

    #[test]
    fn concurrent_consumers_win_once() {
        let store = Arc::new(NonceStore::new());
        store.register("race".into(), Timestamp(u64::MAX));
        let wins = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..16)
            .map(|_| {
                let (store, wins) = (store.clone(), wins.clone());
                std::thread::spawn(move || {
                    if store.consume("race", Timestamp(0)) {
                        wins.fetch_add(1, Ordering::SeqCst);
                    }
                })
            })
            .collect();
        handles.into_iter().for_each(|h| h.join().unwrap());
        assert_eq!(wins.load(Ordering::SeqCst), 1);
    }
}

//! Synthetic interaction stream generators for tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::ingest::TemporalInteractionNetwork;

/// Configuration of the repeat-consumption generator: every user cycles
/// deterministically through a small personal item set drawn from a shared
/// pool (so users overlap on items), with exponential inter-event times.
#[derive(Debug, Clone, Copy)]
pub struct RepeatStreamConfig {
    pub users: usize,
    /// Size of each user's personal item set.
    pub personal_items: usize,
    /// Size of the shared item pool the personal sets are drawn from.
    pub item_pool: usize,
    pub events: usize,
    /// Mean of the exponential inter-event gap, in seconds.
    pub mean_gap_secs: f64,
    pub seed: u64,
}

impl Default for RepeatStreamConfig {
    fn default() -> Self {
        Self {
            users: 50,
            personal_items: 3,
            item_pool: 30,
            events: 2000,
            mean_gap_secs: 3600.0,
            seed: 17,
        }
    }
}

/// Generates a stream with strong repeat-consumption and co-interaction
/// structure.
pub fn repeat_consumption_stream(cfg: &RepeatStreamConfig) -> TemporalInteractionNetwork {
    assert!(cfg.users > 0 && cfg.personal_items > 0 && cfg.item_pool > 0 && cfg.events > 0);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let personal: Vec<Vec<usize>> = (0..cfg.users)
        .map(|_| {
            let mut set = Vec::with_capacity(cfg.personal_items);
            while set.len() < cfg.personal_items {
                let item = rng.gen_range(0..cfg.item_pool);
                if !set.contains(&item) {
                    set.push(item);
                }
            }
            set
        })
        .collect();
    let mut cursor = vec![0usize; cfg.users];
    let mut t = 0.0f64;
    let mut events = Vec::with_capacity(cfg.events);
    for _ in 0..cfg.events {
        t += exponential(&mut rng, cfg.mean_gap_secs);
        let u = rng.gen_range(0..cfg.users);
        let item = personal[u][cursor[u] % cfg.personal_items];
        cursor[u] += 1;
        events.push((format!("u{u}"), format!("i{item}"), t));
    }
    TemporalInteractionNetwork::from_events(events).expect("non-empty synthetic stream")
}

/// Uniformly random stream over fixed user/item universes, time-sorted.
pub fn random_stream(
    users: usize,
    items: usize,
    events: usize,
    horizon_secs: f64,
    seed: u64,
) -> TemporalInteractionNetwork {
    assert!(users > 0 && items > 0 && events > 0);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut evs = Vec::with_capacity(events);
    for _ in 0..events {
        let u = rng.gen_range(0..users);
        let v = rng.gen_range(0..items);
        let t = rng.gen_range(0.0..horizon_secs);
        evs.push((format!("u{u}"), format!("i{v}"), t));
    }
    TemporalInteractionNetwork::from_events(evs).expect("non-empty synthetic stream")
}

fn exponential(rng: &mut ChaCha20Rng, mean: f64) -> f64 {
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    -u.ln() * mean
}

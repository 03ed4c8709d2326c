//! The learner's view of past examples: unbounded storage, the FIFO buffer,
//! or an optional reservoir-sampling buffer for empirical comparison.
//!
//! FIFO is the default bounded strategy and the only one the bound
//! guarantees cover; after `t - 1` insertions a FIFO buffer holds exactly the
//! most recent `min(t - 1, capacity)` examples in arrival order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::types::Example;

/// Eviction policy for bounded buffers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BufferStrategy {
    Fifo,
    /// Uniform reservoir sampling, deterministic given the seed. Interface
    /// conformance only; no bound applies to it.
    Reservoir,
}

impl Default for BufferStrategy {
    fn default() -> Self {
        BufferStrategy::Fifo
    }
}

/// History buffer; `capacity = None` never evicts.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    capacity: Option<usize>,
    strategy: BufferStrategy,
    contents: Vec<Example>,
    inserted: usize,
    rng: Option<ChaCha8Rng>,
}

impl HistoryBuffer {
    pub fn infinite() -> Self {
        HistoryBuffer {
            capacity: None,
            strategy: BufferStrategy::Fifo,
            contents: Vec::new(),
            inserted: 0,
            rng: None,
        }
    }

    /// Bounded FIFO buffer. `capacity` must be at least 1.
    pub fn fifo(capacity: usize) -> Self {
        assert!(capacity >= 1, "buffer capacity must be positive");
        HistoryBuffer {
            capacity: Some(capacity),
            strategy: BufferStrategy::Fifo,
            contents: Vec::with_capacity(capacity),
            inserted: 0,
            rng: None,
        }
    }

    /// Bounded reservoir buffer, seeded for replayability.
    pub fn reservoir(capacity: usize, seed: u64) -> Self {
        assert!(capacity >= 1, "buffer capacity must be positive");
        HistoryBuffer {
            capacity: Some(capacity),
            strategy: BufferStrategy::Reservoir,
            contents: Vec::with_capacity(capacity),
            inserted: 0,
            rng: Some(ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.contents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contents.is_empty()
    }

    /// Total insertions so far (independent of evictions).
    pub fn inserted(&self) -> usize {
        self.inserted
    }

    /// Appends `z`; under FIFO the oldest element is evicted iff the
    /// capacity would be exceeded, under reservoir sampling `z` replaces a
    /// uniformly random slot with probability `capacity / inserted`.
    pub fn insert(&mut self, z: Example) {
        self.inserted += 1;
        match self.capacity {
            None => self.contents.push(z),
            Some(cap) => match self.strategy {
                BufferStrategy::Fifo => {
                    self.contents.push(z);
                    if self.contents.len() > cap {
                        self.contents.remove(0);
                    }
                }
                BufferStrategy::Reservoir => {
                    if self.contents.len() < cap {
                        self.contents.push(z);
                    } else {
                        let rng = self.rng.as_mut().expect("reservoir buffer has an rng");
                        let coin: f64 = rng.gen_range(0.0..1.0);
                        if (cap as f64) / (self.inserted as f64) > coin {
                            let slot = rng.gen_range(0..cap);
                            self.contents[slot] = z;
                        }
                    }
                }
            },
        }
    }

    /// Contents in stored order (arrival order for FIFO), as an owned copy.
    pub fn snapshot(&self) -> Vec<Example> {
        self.contents.clone()
    }

    /// Borrowed view of the contents; used on the hot path.
    pub fn as_slice(&self) -> &[Example] {
        &self.contents
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex(v: f64) -> Example {
        Example::new(vec![v], 1)
    }

    #[test]
    fn fifo_evicts_oldest() {
        let mut buf = HistoryBuffer::fifo(2);
        buf.insert(ex(1.0));
        buf.insert(ex(2.0));
        buf.insert(ex(3.0));
        let snap = buf.snapshot();
        assert_eq!(snap.len(), 2);
        assert_eq!(snap[0].x[0], 2.0);
        assert_eq!(snap[1].x[0], 3.0);
    }

    #[test]
    fn infinite_never_evicts() {
        let mut buf = HistoryBuffer::infinite();
        for i in 0..10 {
            buf.insert(ex(i as f64));
        }
        assert_eq!(buf.len(), 10);
        assert_eq!(buf.snapshot()[0].x[0], 0.0);
    }

    #[test]
    fn under_capacity_keeps_order() {
        let mut buf = HistoryBuffer::fifo(3);
        buf.insert(ex(1.0));
        buf.insert(ex(2.0));
        let snap = buf.snapshot();
        assert_eq!(snap.len(), 2);
        assert_eq!(snap[0].x[0], 1.0);
        assert_eq!(snap[1].x[0], 2.0);
    }

    #[test]
    fn empty_snapshot() {
        let buf = HistoryBuffer::infinite();
        assert!(buf.snapshot().is_empty());
    }

    #[test]
    fn reservoir_is_deterministic_and_bounded() {
        let run = || {
            let mut buf = HistoryBuffer::reservoir(4, 99);
            for i in 0..100 {
                buf.insert(ex(i as f64));
            }
            buf.snapshot()
                .iter()
                .map(|z| z.x[0])
                .collect::<Vec<_>>()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
    }

    proptest! {
        /// With capacity >= n the FIFO buffer matches the infinite one
        /// element for element.
        #[test]
        fn fifo_matches_infinite_when_large(vals in proptest::collection::vec(-100.0f64..100.0, 1..40)) {
            let mut fifo = HistoryBuffer::fifo(vals.len());
            let mut inf = HistoryBuffer::infinite();
            for &v in &vals {
                fifo.insert(ex(v));
                inf.insert(ex(v));
            }
            prop_assert_eq!(fifo.snapshot(), inf.snapshot());
        }

        /// After n >= capacity insertions the buffer holds exactly the last
        /// `capacity` items in order, and never more than capacity before.
        #[test]
        fn fifo_holds_suffix(vals in proptest::collection::vec(-100.0f64..100.0, 5..60), cap in 1usize..8) {
            let mut buf = HistoryBuffer::fifo(cap);
            for (i, &v) in vals.iter().enumerate() {
                buf.insert(ex(v));
                prop_assert_eq!(buf.len(), (i + 1).min(cap));
            }
            let expect: Vec<f64> = vals[vals.len().saturating_sub(cap)..].to_vec();
            let got: Vec<f64> = buf.snapshot().iter().map(|z| z.x[0]).collect();
            prop_assert_eq!(got, expect);
        }
    }
}

use std::collections::VecDeque;

use rand::Rng;

pub const DEFAULT_REPLAY_CAPACITY: usize = 5000;

/// Fixed-capacity FIFO of transitions; the oldest entry is evicted first.
#[derive(Clone, Debug)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: VecDeque<T>,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// Uniform sample with replacement. Empty when the buffer is empty.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<&T> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..batch)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect()
    }
}

impl<T> Default for ReplayBuffer<T> {
    fn default() -> Self {
        Self::new(DEFAULT_REPLAY_CAPACITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn fifo_eviction(capacity in 1usize..50, extra in 0usize..80) {
            let mut b = ReplayBuffer::new(capacity);
            for i in 0..capacity + extra {
                b.push(i);
            }
            prop_assert_eq!(b.len(), capacity);
            let kept: Vec<usize> = b.iter().copied().collect();
            let expected: Vec<usize> = (extra..capacity + extra).collect();
            prop_assert_eq!(kept, expected);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let mut b = ReplayBuffer::new(10);
        for i in 0..10 {
            b.push(i);
        }
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(b.sample(16, &mut r1), b.sample(16, &mut r2));
        assert!(ReplayBuffer::<u8>::new(3).sample(4, &mut r1).is_empty());
        assert_eq!(ReplayBuffer::<u8>::default().capacity(), 5000);
    }
}

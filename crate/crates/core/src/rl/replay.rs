//! Ring-buffer experience replay.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub done: bool,
}

impl Transition {
    pub fn is_valid(&self) -> bool {
        self.s.len() == self.s_next.len()
            && self.r.is_finite()
            && self.s.iter().chain(&self.a).chain(&self.s_next).all(|v| v.is_finite())
    }
}

/// Fixed-capacity FIFO store; the oldest transition is overwritten once full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    data: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            data: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if !t.is_valid() {
            return Err(Error::Contract("non-finite or malformed transition".into()));
        }
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
        Ok(())
    }

    /// Stored transitions, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.data.len() < self.capacity { 0 } else { self.next };
        self.data[split..].iter().chain(&self.data[..split])
    }

    /// `n` storage slots drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.data.len() < n || self.data.is_empty() {
            return Err(Error::InsufficientData {
                available: self.data.len(),
                requested: n,
            });
        }
        Ok((0..n).map(|_| rng.random_range(0..self.data.len())).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Batch> {
        let idx = self.sample_indices(n, rng)?;
        Ok(Batch::from_transitions(idx.iter().map(|&i| &self.data[i])))
    }
}

/// Column-stacked minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub s: Array2<f64>,
    pub a: Array2<f64>,
    pub r: Array1<f64>,
    pub s_next: Array2<f64>,
    /// 1 for terminal transitions.
    pub done: Array1<f64>,
}

impl Batch {
    pub fn from_transitions<'a>(ts: impl IntoIterator<Item = &'a Transition>) -> Self {
        let ts: Vec<&Transition> = ts.into_iter().collect();
        let n = ts.len();
        let sd = ts.first().map_or(0, |t| t.s.len());
        let ad = ts.first().map_or(0, |t| t.a.len());
        Self {
            s: Array2::from_shape_fn((n, sd), |(i, j)| ts[i].s[j]),
            a: Array2::from_shape_fn((n, ad), |(i, j)| ts[i].a[j]),
            r: Array1::from_shape_fn(n, |i| ts[i].r),
            s_next: Array2::from_shape_fn((n, sd), |(i, j)| ts[i].s_next[j]),
            done: Array1::from_shape_fn(n, |i| if ts[i].done { 1.0 } else { 0.0 }),
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(i: usize) -> Transition {
        Transition {
            s: vec![i as f64, 0.0],
            a: vec![0.5],
            r: i as f64,
            s_next: vec![i as f64 + 1.0, 0.0],
            done: false,
        }
    }

    #[test]
    fn push_grows_until_capacity() {
        let mut b = ReplayBuffer::new(3);
        b.push(tr(0)).unwrap();
        assert_eq!(b.len(), 1);
        for i in 1..4 {
            b.push(tr(i)).unwrap();
        }
        assert_eq!(b.len(), 3);
        let rs: Vec<f64> = b.iter().map(|t| t.r).collect();
        assert_eq!(rs, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn single_transition_sampled_back() {
        let mut b = ReplayBuffer::new(10);
        b.push(tr(7)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batch = b.sample(1, &mut rng).unwrap();
        assert_eq!(batch, Batch::from_transitions([&tr(7)]));
    }

    #[test]
    fn rejects_non_finite() {
        let mut b = ReplayBuffer::new(2);
        let mut t = tr(0);
        t.r = f64::NAN;
        assert!(matches!(b.push(t), Err(Error::Contract(_))));
        let mut t = tr(0);
        t.s_next.push(1.0);
        assert!(b.push(t).is_err());
        assert!(b.is_empty());
    }

    #[test]
    fn insufficient_data() {
        let mut b = ReplayBuffer::new(5);
        b.push(tr(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            b.sample(2, &mut rng),
            Err(Error::InsufficientData { available: 1, requested: 2 })
        ));
    }

    #[test]
    fn samples_are_members_and_seeded() {
        let mut b = ReplayBuffer::new(200);
        for i in 0..100 {
            b.push(tr(i)).unwrap();
        }
        let draw = |seed| b.sample_indices(32, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let idx = draw(9);
        assert_eq!(idx.len(), 32);
        assert!(idx.iter().all(|&i| i < 100));
        assert_eq!(idx, draw(9));
        let batch = b.sample(32, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert!(batch.r.iter().all(|r| r.fract() == 0.0 && *r < 100.0));
    }

    #[test]
    fn sampling_is_uniform() {
        let mut b = ReplayBuffer::new(10);
        for i in 0..10 {
            b.push(tr(i)).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let draws = 100_000;
        let mut counts = [0usize; 10];
        for _ in 0..draws {
            counts[b.sample_indices(1, &mut rng).unwrap()[0]] += 1;
        }
        let expected = draws as f64 / 10.0;
        for c in counts {
            assert!((c as f64 - expected).abs() <= 0.05 * expected, "{counts:?}");
        }
    }
}

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Dense `n x d` design matrix (row-major) with one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    features: Vec<f64>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(d: usize, features: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Data("feature dimension must be positive".into()));
        }
        if features.len() != d * targets.len() {
            return Err(Error::Data(format!(
                "{} feature values do not fill {} rows of dimension {d}",
                features.len(),
                targets.len()
            )));
        }
        if let Some(pos) = features.iter().chain(&targets).position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at flat position {pos}")));
        }
        Ok(Self { n: targets.len(), d, features, targets })
    }

    /// Dataset with no rows.
    pub fn empty(d: usize) -> Result<Self> {
        Self::new(d, Vec::new(), Vec::new())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.d);
        let mut targets = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            targets.push(self.targets[r]);
        }
        Dataset { n: rows.len(), d: self.d, features, targets }
    }
}

/// Rows owned by one agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shard {
    pub agent: usize,
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMode {
    /// Seeded random permutation, then contiguous blocks.
    Random,
    /// Blocks of the original order.
    Contiguous,
}

/// Splits `0..n` into `m` blocks whose sizes differ by at most one.
pub fn partition(n: usize, m: usize, mode: PartitionMode, seed: u64) -> Result<Vec<Shard>> {
    if m == 0 || m > n {
        return Err(Error::arg(format!("cannot split {n} samples across {m} agents")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if mode == PartitionMode::Random {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let (base, extra) = (n / m, n % m);
    let mut start = 0;
    Ok((0..m)
        .map(|agent| {
            let len = base + usize::from(agent < extra);
            let indices = order[start..start + len].to_vec();
            start += len;
            Shard { agent, indices }
        })
        .collect())
}

/// Seeded split into `(train, test)` with `round(test_fraction * n)` test rows.
pub fn train_test_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::arg(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let n_test = ((ds.len() as f64) * test_fraction).round() as usize;
    if n_test == 0 || n_test >= ds.len() {
        return Err(Error::arg("split leaves an empty train or test set"));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (test, train) = order.split_at(n_test);
    Ok((ds.subset(train), ds.subset(test)))
}

/// Draws a minibatch of `batch` rows (with replacement) from `rows` and
/// returns it with the factor `|rows| / batch` that makes the batch sum an
/// unbiased estimate of the full-shard sum. A batch at least as large as
/// the shard uses the whole shard with factor 1.
pub fn sample_batch<R: Rng + ?Sized>(rows: &[usize], batch: usize, rng: &mut R) -> (Vec<usize>, f64) {
    if batch == 0 || batch >= rows.len() {
        return (rows.to_vec(), 1.0);
    }
    let picked = (0..batch).map(|_| rows[rng.random_range(0..rows.len())]).collect();
    (picked, rows.len() as f64 / batch as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn full_size_partition() {
        let shards = partition(800, 4, PartitionMode::Random, 3).unwrap();
        assert!(shards.iter().all(|s| s.indices.len() == 200));
        let single = partition(10, 1, PartitionMode::Random, 3).unwrap();
        assert_eq!(single[0].indices.iter().copied().collect::<BTreeSet<_>>().len(), 10);
    }

    #[test]
    fn partition_is_a_disjoint_cover() {
        for (n, m) in [(7, 3), (10, 10), (101, 4), (5, 2)] {
            for mode in [PartitionMode::Random, PartitionMode::Contiguous] {
                let shards = partition(n, m, mode, 11).unwrap();
                let mut seen = BTreeSet::new();
                for s in &shards {
                    for &i in &s.indices {
                        assert!(seen.insert(i), "index {i} twice");
                    }
                }
                assert_eq!(seen, (0..n).collect());
                let sizes: Vec<usize> = shards.iter().map(|s| s.indices.len()).collect();
                assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            }
        }
        assert!(partition(3, 4, PartitionMode::Random, 0).is_err());
    }

    #[test]
    fn dataset_rejects_bad_shapes() {
        assert!(Dataset::new(2, vec![1.0, 2.0, 3.0], vec![1.0, 2.0]).is_err());
        assert!(Dataset::new(1, vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn split_sizes() {
        let ds = Dataset::new(1, (0..100).map(f64::from).collect(), vec![0.0; 100]).unwrap();
        let (train, test) = train_test_split(&ds, 0.2, 9).unwrap();
        assert_eq!((train.len(), test.len()), (80, 20));
    }

    #[test]
    fn full_batch_has_unit_scale() {
        let rows = [4, 5, 6];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_batch(&rows, 5, &mut rng), (rows.to_vec(), 1.0));
        let (b, s) = sample_batch(&rows, 1, &mut rng);
        assert_eq!(b.len(), 1);
        assert_eq!(s, 3.0);
    }
}

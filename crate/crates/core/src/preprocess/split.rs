use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::PreprocessError;

/// Partition sizes for `total` items under `ratio`, by largest remainder:
/// floors of the exact quotas, then leftover items go to the parts with the
/// largest fractional quota (earlier parts win ties).
pub fn split_sizes(total: usize, ratio: [u32; 3]) -> [usize; 3] {
    let weight: u64 = ratio.iter().map(|&r| u64::from(r)).sum();
    let mut sizes = [0usize; 3];
    let mut remainders = [(0u64, 0usize); 3];
    for (i, &r) in ratio.iter().enumerate() {
        let exact = total as u64 * u64::from(r);
        sizes[i] = (exact / weight) as usize;
        remainders[i] = (exact % weight, i);
    }
    let mut left = total - sizes.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub valid: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded shuffle followed by a train/valid/test partition.
pub fn split_dataset<T>(mut items: Vec<T>, ratio: [u32; 3], seed: u64) -> Result<Split<T>, PreprocessError> {
    if items.len() < 10 {
        return Err(PreprocessError::TooFewPhrases(items.len()));
    }
    if ratio.iter().all(|&r| r == 0) {
        return Err(PreprocessError::BadConfig("split ratio must not be all zero"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    items.shuffle(&mut rng);
    let [n_train, n_valid, _] = split_sizes(items.len(), ratio);
    let test = items.split_off(n_train + n_valid);
    let valid = items.split_off(n_train);
    Ok(Split { train: items, valid, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(split_sizes(10, [8, 1, 1]), [8, 1, 1]);
        assert_eq!(split_sizes(14_176, [8, 1, 1]), [11_341, 1_418, 1_417]);
        assert_eq!(split_sizes(11, [8, 1, 1]), [9, 1, 1]);
    }

    #[test]
    fn deterministic_partition() {
        let items: Vec<u32> = (0..57).collect();
        let a = split_dataset(items.clone(), [8, 1, 1], 7).unwrap();
        let b = split_dataset(items.clone(), [8, 1, 1], 7).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<u32> = a.train.iter().chain(&a.valid).chain(&a.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, items);
        assert!(split_dataset((0..9).collect::<Vec<u32>>(), [8, 1, 1], 0).is_err());
    }
}

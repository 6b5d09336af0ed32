//! Seed derivation, train/test partitions and cross-validation folds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Child seed number `index` of `root` (SplitMix64 finaliser over a
/// counter), so repeated fits get independent streams regardless of the
/// order they run in.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random partition of `0..n` into `⌈fraction·n⌉` training rows and the
/// rest, both returned in ascending order.
pub fn split_train_test(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "need at least 4 rows to split, got {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((fraction * n as f64).ceil() as usize).clamp(1, n - 1);
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Shuffled `folds`-way partition of `0..n`; returns the held-out rows of
/// each fold.
pub fn kfold(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(Error::Config(format!(
            "cannot make {folds} folds from {n} rows"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Vec::new(); folds];
    for (pos, i) in idx.into_iter().enumerate() {
        out[pos % folds].push(i);
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_rows() {
        let (train, test) = split_train_test(8, 0.75, 42).unwrap();
        assert_eq!((train.len(), test.len()), (6, 2));
        let mut all: Vec<_> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..8).collect::<Vec<_>>());
        assert_eq!(split_train_test(8, 0.75, 42).unwrap(), (train, test));
    }

    #[test]
    fn split_errors() {
        assert!(split_train_test(8, 1.0, 0).is_err());
        assert!(split_train_test(8, 0.0, 0).is_err());
        assert!(split_train_test(3, 0.75, 0).is_err());
    }

    #[test]
    fn rounding_up() {
        let (train, test) = split_train_test(114, 0.75, 1).unwrap();
        assert_eq!((train.len(), test.len()), (86, 28));
    }

    #[test]
    fn seeds_differ_by_index() {
        let a: Vec<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }

    #[test]
    fn folds_partition_rows() {
        let folds = kfold(23, 5, 3).unwrap();
        let mut all: Vec<_> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(folds.iter().all(|f| f.len() == 4 || f.len() == 5));
        assert!(kfold(3, 5, 0).is_err());
    }
}

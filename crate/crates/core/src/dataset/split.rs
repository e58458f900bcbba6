use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subject-disjoint train/validation/test partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

impl SplitPlan {
    pub fn all(&self) -> impl Iterator<Item = &String> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }
}

/// Fractions for train, validation and test.
pub const SPLIT_FRACTIONS: [f64; 3] = [0.70, 0.15, 0.15];

/// Largest-remainder apportionment of `n` over [`SPLIT_FRACTIONS`].
pub fn split_sizes(n: usize) -> [usize; 3] {
    let quotas = SPLIT_FRACTIONS.map(|f| f * n as f64);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| {
        (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor()))
    });
    let mut left = n - sizes.iter().sum::<usize>();
    for i in order {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Splits subjects 70/15/15, stratified by each subject's positive-example
/// fraction.
///
/// Subjects are shuffled under `seed`, stably ordered by positive fraction,
/// and dealt in that order to whichever set lags furthest behind its
/// proportional share, so every quantile of the fraction distribution is
/// spread across the three sets.
pub fn split_subjects(subjects: &[(String, f64)], seed: u64) -> Result<SplitPlan> {
    let n = subjects.len();
    if n < 3 {
        return Err(Error::Split(format!(
            "need >= 3 subjects to split, got {n}"
        )));
    }
    let unique: BTreeSet<&String> = subjects.iter().map(|(s, _)| s).collect();
    if unique.len() != n {
        return Err(Error::Split("duplicate subject ids".into()));
    }
    let mut order: Vec<&(String, f64)> = subjects.iter().collect();
    order.sort_by(|a, b| a.0.cmp(&b.0));
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.sort_by(|a, b| a.1.total_cmp(&b.1));

    let sizes = split_sizes(n);
    let mut sets: [Vec<String>; 3] = Default::default();
    for (k, (id, _)) in order.into_iter().enumerate() {
        let progress = (k + 1) as f64 / n as f64;
        let pick = (0..3)
            .filter(|&s| sets[s].len() < sizes[s])
            .max_by(|&a, &b| {
                let lag = |s: usize| sizes[s] as f64 * progress - sets[s].len() as f64;
                lag(a).total_cmp(&lag(b)).then(b.cmp(&a))
            })
            .expect("sizes sum to n");
        sets[pick].push(id.clone());
    }
    let [train, validation, test] = sets;
    Ok(SplitPlan {
        train,
        validation,
        test,
        seed,
    })
}

/// `k` subject-disjoint folds of sizes differing by at most one.
pub fn cv_folds(subjects: &[String], k: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    if k < 2 {
        return Err(Error::Split(format!(
            "cross-validation needs k >= 2, got {k}"
        )));
    }
    if subjects.len() < k {
        return Err(Error::Split(format!(
            "{} subjects cannot fill {k} folds",
            subjects.len()
        )));
    }
    let mut order = subjects.to_vec();
    order.sort();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); k];
    for (i, s) in order.into_iter().enumerate() {
        folds[i % k].push(s);
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<(String, f64)> {
        (0..n)
            .map(|i| (format!("S{i:02}"), (i % 4) as f64 / 4.0))
            .collect()
    }

    #[test]
    fn thirty_two_subjects_split_22_5_5() {
        let plan = split_subjects(&ids(32), 3).unwrap();
        assert_eq!(
            (plan.train.len(), plan.validation.len(), plan.test.len()),
            (22, 5, 5)
        );
        let all: BTreeSet<_> = plan.all().collect();
        assert_eq!(all.len(), 32);
        assert_eq!(plan, split_subjects(&ids(32), 3).unwrap());
        assert_ne!(plan, split_subjects(&ids(32), 4).unwrap());
        assert!(split_subjects(&ids(2), 0).is_err());
    }

    #[test]
    fn sizes_use_largest_remainder() {
        assert_eq!(split_sizes(32), [22, 5, 5]);
        assert_eq!(split_sizes(3), [2, 1, 0]);
        assert_eq!(split_sizes(10), [7, 2, 1]);
        for n in 3..100 {
            assert_eq!(split_sizes(n).iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn strata_are_spread() {
        let plan = split_subjects(&ids(40), 1).unwrap();
        let frac = |set: &[String]| {
            let all = ids(40);
            set.iter()
                .map(|s| all.iter().find(|(id, _)| id == s).unwrap().1)
                .sum::<f64>()
                / set.len() as f64
        };
        assert!((frac(&plan.train) - frac(&plan.test)).abs() <= 0.15);
    }

    #[test]
    fn folds_partition_the_train_set() {
        let train: Vec<String> = ids(22).into_iter().map(|(s, _)| s).collect();
        let folds = cv_folds(&train, 5, 9).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, vec![5, 5, 4, 4, 4]);
        let union: BTreeSet<_> = folds.iter().flatten().collect();
        assert_eq!(union.len(), 22);
        assert!(cv_folds(&train, 1, 0).is_err());
        assert!(cv_folds(&train[..3], 5, 0).is_err());
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, SplitInfo};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::config(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.90,
            val: 0.05,
            test: 0.05,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::config(format!("split fractions must lie in [0, 1]: {all:?}")));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    fn classes(&self) -> usize {
        [self.train, self.val, self.test].iter().filter(|f| **f > 0.0).count()
    }
}

/// Group counts per split: val and test are floor-rounded, train takes the rest.
pub fn split_counts(groups: usize, fractions: &SplitFractions) -> (usize, usize, usize) {
    // Absorbs representation error such as 0.29 * 100 = 28.999999999999996.
    let floor = |f: f64| ((f * groups as f64) + 1e-9).floor() as usize;
    let val = floor(fractions.val);
    let test = floor(fractions.test);
    (groups - val - test, val, test)
}

/// Assigns every manifest entry to a split, grouping all tuples that share a
/// `source_id`. The assignment depends only on the seed and the set of source ids.
pub fn split_dataset(
    manifest: &mut DatasetManifest,
    fractions: SplitFractions,
    seed: u64,
) -> Result<()> {
    fractions.validate()?;
    let sources: Vec<String> = manifest
        .tuples
        .iter()
        .map(|e| e.source_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if sources.len() < fractions.classes() {
        return Err(Error::config(format!(
            "{} source tuples cannot fill {} non-empty splits",
            sources.len(),
            fractions.classes()
        )));
    }
    let (_, n_val, n_test) = split_counts(sources.len(), &fractions);

    let mut order = sources;
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let assignment: BTreeMap<&str, Split> = order
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let split = if i < n_test {
                Split::Test
            } else if i < n_test + n_val {
                Split::Val
            } else {
                Split::Train
            };
            (s.as_str(), split)
        })
        .collect();

    for e in &mut manifest.tuples {
        e.split = Some(assignment[e.source_id.as_str()]);
    }
    manifest.split = Some(SplitInfo { fractions, seed });
    Ok(())
}

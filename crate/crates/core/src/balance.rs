//! Class-distribution regimes: natural (unequal), undersampling of the
//! majority classes, oversampling of the minority classes.
//!
//! Undersampling deletes uniformly chosen surplus items until every class
//! matches the smallest; survivors keep their original relative order.
//! Oversampling appends copies of minority items, cycling through each
//! class in a seed-shuffled order until every class matches the largest.
//! Both are pure functions of (set, seed).

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LabeledSet, PolarityClass};
use crate::seed::seeded_rng;

/// How class counts are shaped before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingRegime {
    #[serde(rename = "natural")]
    Natural,
    #[serde(rename = "under")]
    Undersample,
    #[serde(rename = "over")]
    Oversample,
}

impl SamplingRegime {
    pub const ALL: [SamplingRegime; 3] = [
        SamplingRegime::Natural,
        SamplingRegime::Undersample,
        SamplingRegime::Oversample,
    ];

    pub fn flag(self) -> &'static str {
        match self {
            SamplingRegime::Natural => "natural",
            SamplingRegime::Undersample => "under",
            SamplingRegime::Oversample => "over",
        }
    }
}

impl std::fmt::Display for SamplingRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.flag())
    }
}

impl std::str::FromStr for SamplingRegime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SamplingRegime::ALL
            .into_iter()
            .find(|r| r.flag() == s)
            .ok_or_else(|| {
                format!("unknown sampling regime `{s}` (expected natural, under, or over)")
            })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BalanceError {
    #[error("class {0} has no items; resampling needs every class non-empty")]
    EmptyClass(PolarityClass),
}

fn check_non_empty(counts: [usize; 3]) -> Result<(), BalanceError> {
    for class in PolarityClass::ALL {
        if counts[class.index()] == 0 {
            return Err(BalanceError::EmptyClass(class));
        }
    }
    Ok(())
}

/// Delete uniformly chosen surplus items until every class matches the minimum.
pub fn undersample<T: Clone>(ds: &LabeledSet<T>, seed: u64) -> Result<LabeledSet<T>, BalanceError> {
    let counts = ds.class_counts();
    check_non_empty(counts)?;
    let target = *counts.iter().min().expect("three classes");

    let mut rng = seeded_rng(seed);
    let mut keep = vec![true; ds.len()];
    for class in PolarityClass::ALL {
        let positions: Vec<usize> = ds
            .items()
            .iter()
            .enumerate()
            .filter(|(_, (_, c))| *c == class)
            .map(|(i, _)| i)
            .collect();
        if positions.len() == target {
            continue;
        }
        let mut chosen = index::sample(&mut rng, positions.len(), target).into_vec();
        chosen.sort_unstable();
        for pos in &positions {
            keep[*pos] = false;
        }
        for local in chosen {
            keep[positions[local]] = true;
        }
    }

    let items = ds
        .items()
        .iter()
        .zip(&keep)
        .filter(|(_, keep)| **keep)
        .map(|((item, class), _)| (item.clone(), *class))
        .collect();
    Ok(LabeledSet::new(items))
}

/// Copy minority items cyclically, in a seed-shuffled order, until every
/// class matches the maximum. Originals keep their order; copies are
/// appended class by class.
pub fn oversample<T: Clone>(ds: &LabeledSet<T>, seed: u64) -> Result<LabeledSet<T>, BalanceError> {
    let counts = ds.class_counts();
    check_non_empty(counts)?;
    let target = *counts.iter().max().expect("three classes");

    let mut rng = seeded_rng(seed);
    let mut items: Vec<(T, PolarityClass)> = ds.items().to_vec();
    for class in PolarityClass::ALL {
        let have = counts[class.index()];
        if have == target {
            continue;
        }
        let mut positions: Vec<usize> = ds
            .items()
            .iter()
            .enumerate()
            .filter(|(_, (_, c))| *c == class)
            .map(|(i, _)| i)
            .collect();
        positions.shuffle(&mut rng);
        for extra in 0..(target - have) {
            let pos = positions[extra % positions.len()];
            let (item, c) = &ds.items()[pos];
            items.push((item.clone(), *c));
        }
    }
    Ok(LabeledSet::new(items))
}

/// Apply a regime; `Natural` leaves the set untouched.
pub fn resample<T: Clone>(
    ds: &LabeledSet<T>,
    regime: SamplingRegime,
    seed: u64,
) -> Result<LabeledSet<T>, BalanceError> {
    match regime {
        SamplingRegime::Natural => Ok(ds.clone()),
        SamplingRegime::Undersample => undersample(ds, seed),
        SamplingRegime::Oversample => oversample(ds, seed),
    }
}

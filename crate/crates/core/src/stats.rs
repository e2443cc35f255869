//! Statistics over grown forests and scoreboard sequences, with CSV emitters.
//!
//! Tallies are exact integer counts; shares are formed only when emitting.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arboreal::{ForestReport, TotientTree};
use crate::error::{Error, Result};
use crate::scoreboard::{phi_fast, scoreboard_sequence, scoreboard_value};
use crate::sequence::IncrementSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountingMode {
    /// Distinct partial-evaluation values per height.
    #[default]
    Distinct,
    /// Root-to-node paths per height.
    Multiplicity,
}

/// `(height, node_count)` for every materialized level, distinct-value mode.
pub fn tree_size_profile(tree: &TotientTree) -> Vec<(u64, u64)> {
    tree.levels
        .iter()
        .enumerate()
        .map(|(h, level)| (h as u64, level.len() as u64))
        .collect()
}

/// Size profile in either counting mode. Path counts are propagated along
/// the edge relation `x = phi(a_{k+1} + y)`.
pub fn tree_size_profile_with(
    tree: &TotientTree,
    seq: &IncrementSequence,
    mode: CountingMode,
) -> Result<Vec<(u64, u64)>> {
    if mode == CountingMode::Distinct {
        return Ok(tree_size_profile(tree));
    }
    let mut out = Vec::with_capacity(tree.levels.len());
    let mut paths: HashMap<u64, u64> = HashMap::from([(tree.root, 1)]);
    out.push((0, 1));
    for (h, level) in tree.levels.iter().enumerate().skip(1) {
        let a = seq.term(h as u64)?;
        let mut next = HashMap::with_capacity(level.len());
        for &y in level {
            let parent = phi_fast(a + y)?;
            let count = *paths.get(&parent).ok_or_else(|| {
                Error::Inconsistent(format!("value {y} at height {h} has no parent in tree {}", tree.root))
            })?;
            *next.entry(y).or_insert(0) += count;
        }
        out.push((h as u64, next.values().sum()));
        paths = next;
    }
    Ok(out)
}

/// Node counts of every tree at one height.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanopyLevel {
    pub height: u64,
    pub total: u64,
    /// `(root, count)` in root order, zero counts included.
    pub counts: Vec<(u64, u64)>,
}

impl CanopyLevel {
    /// `count / total`, or `None` at a height where nothing is alive.
    pub fn share(&self, root: u64) -> Option<f64> {
        if self.total == 0 {
            return None;
        }
        let count = self.counts.iter().find(|(r, _)| *r == root).map_or(0, |c| c.1);
        Some(count as f64 / self.total as f64)
    }
}

/// Per-height share of nodes belonging to each tree.
///
/// Heights stop where some tree's levels stop being materialized (a
/// witnessed or capped tree), or at the tallest tree otherwise.
pub fn canopy_density(forest: &ForestReport) -> Vec<CanopyLevel> {
    let known = forest
        .trees
        .iter()
        .filter(|t| !t.is_complete())
        .map(|t| t.height())
        .min();
    let tallest = forest.trees.iter().map(|t| t.height()).max().unwrap_or(0);
    let top = known.map_or(tallest, |h| h.min(tallest));
    (0..=top)
        .map(|h| {
            let counts: Vec<(u64, u64)> = forest
                .trees
                .iter()
                .map(|t| (t.root, t.levels.get(h as usize).map_or(0, |l| l.len() as u64)))
                .collect();
            CanopyLevel {
                height: h,
                total: counts.iter().map(|c| c.1).sum(),
                counts,
            }
        })
        .collect()
}

/// Trailing-window value counts: `rows[i]` covers `(n - window, n]` for
/// `n = window + i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollingShares {
    pub window: u64,
    pub rows: Vec<(u64, BTreeMap<u64, u64>)>,
}

pub fn rolling_shares_of(values: &[u64], window: u64) -> Result<RollingShares> {
    if window == 0 || window > values.len() as u64 {
        return Err(Error::Domain(format!(
            "window must be between 1 and n_max = {}, got {window}",
            values.len()
        )));
    }
    let w = window as usize;
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut rows = Vec::with_capacity(values.len() - w + 1);
    for (i, &v) in values.iter().enumerate() {
        *counts.entry(v).or_insert(0) += 1;
        if i >= w {
            let old = values[i - w];
            let c = counts.get_mut(&old).expect("counted on entry");
            *c -= 1;
            if *c == 0 {
                counts.remove(&old);
            }
        }
        if i + 1 >= w {
            rows.push((i as u64 + 1, counts.clone()));
        }
    }
    Ok(RollingShares { window, rows })
}

/// Share of each value of `A(m)` over `m` in the trailing window ending at
/// `n`, for `n = window ..= n_max`.
pub fn fruit_rolling_share(seq: &IncrementSequence, n_max: u64, window: u64) -> Result<RollingShares> {
    if window == 0 || window > n_max {
        return Err(Error::Domain(format!(
            "window must be between 1 and n_max = {n_max}, got {window}"
        )));
    }
    rolling_shares_of(&scoreboard_sequence(seq, n_max)?, window)
}

/// Occurrences of each scoreboard value over a range of `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub first: u64,
    pub last: u64,
    /// value -> every `n` in range with that value, ascending.
    pub occurrences: BTreeMap<u64, Vec<u64>>,
}

impl FrequencyTable {
    /// Tallies `values[i] = A(first + i)`.
    pub fn from_values(first: u64, values: &[u64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("frequency range is empty".into()));
        }
        let mut occurrences: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for (i, &v) in values.iter().enumerate() {
            occurrences.entry(v).or_default().push(first + i as u64);
        }
        Ok(FrequencyTable {
            first,
            last: first + values.len() as u64 - 1,
            occurrences,
        })
    }

    pub fn total(&self) -> u64 {
        self.last - self.first + 1
    }

    pub fn count(&self, value: u64) -> u64 {
        self.occurrences.get(&value).map_or(0, |ns| ns.len() as u64)
    }

    pub fn share(&self, value: u64) -> f64 {
        self.count(value) as f64 / self.total() as f64
    }

    pub fn n_list(&self, value: u64) -> &[u64] {
        self.occurrences.get(&value).map_or(&[], |ns| ns.as_slice())
    }

    pub fn values(&self) -> impl Iterator<Item = u64> + '_ {
        self.occurrences.keys().copied()
    }
}

pub fn value_frequencies(seq: &IncrementSequence, range: RangeInclusive<u64>) -> Result<FrequencyTable> {
    let (first, last) = (*range.start(), *range.end());
    if first == 0 || first > last {
        return Err(Error::Domain(format!(
            "frequency range {first}..={last} is empty or starts at 0"
        )));
    }
    let values = (first..=last)
        .into_par_iter()
        .map(|n| scoreboard_value(seq, n))
        .collect::<Result<Vec<_>>>()?;
    FrequencyTable::from_values(first, &values)
}

fn share(count: u64, total: u64) -> String {
    if total == 0 {
        return String::new();
    }
    format!("{:.6}", count as f64 / total as f64)
}

/// `height,root,count,share`; the share is blank where no tree is alive.
pub fn write_canopy_csv<W: Write + ?Sized>(out: &mut W, canopy: &[CanopyLevel]) -> io::Result<()> {
    writeln!(out, "height,root,count,share")?;
    for level in canopy {
        for &(root, count) in &level.counts {
            writeln!(out, "{},{root},{count},{}", level.height, share(count, level.total))?;
        }
    }
    Ok(())
}

/// `n,value,share`, one row per value present in each window.
pub fn write_rolling_csv<W: Write + ?Sized>(out: &mut W, rolling: &RollingShares) -> io::Result<()> {
    writeln!(out, "n,value,share")?;
    for (n, counts) in &rolling.rows {
        for (&value, &count) in counts {
            writeln!(out, "{n},{value},{}", share(count, rolling.window))?;
        }
    }
    Ok(())
}

/// `value,count,share`.
pub fn write_frequency_csv<W: Write + ?Sized>(out: &mut W, table: &FrequencyTable) -> io::Result<()> {
    writeln!(out, "value,count,share")?;
    for (&value, ns) in &table.occurrences {
        writeln!(out, "{value},{},{}", ns.len(), share(ns.len() as u64, table.total()))?;
    }
    Ok(())
}

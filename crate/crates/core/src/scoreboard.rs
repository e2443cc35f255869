//! Direct evaluation of scoreboard functions
//! `A(n) = phi(a_1 + phi(a_2 + ... + phi(a_n)))` and their partial evaluations.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{euler_phi, phi_sieve};
use crate::error::{Error, Result};
use crate::sequence::IncrementSequence;

/// Arguments below this are looked up in a shared sieve table.
const TABLE_LIMIT: u64 = 1 << 20;

fn phi_table() -> &'static [u32] {
    static TABLE: OnceLock<Vec<u32>> = OnceLock::new();
    TABLE.get_or_init(|| {
        phi_sieve(TABLE_LIMIT)
            .expect("positive limit")
            .into_iter()
            .map(|v| v as u32)
            .collect()
    })
}

/// `phi(n)` for `n >= 1`, served from a table when small.
pub fn phi_fast(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Domain("phi(0) is undefined".into()));
    }
    if n <= TABLE_LIMIT {
        Ok(phi_table()[n as usize] as u64)
    } else {
        euler_phi(n)
    }
}

/// All partial evaluations `A(n, k)` for one `n`.
///
/// `values[k]` is `A(n, k)`: `values[n] = 0` and
/// `values[k - 1] = phi(a_k + values[k])`, so `values[0]` is the scoreboard value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialEvaluationTrace {
    pub n: u64,
    pub values: Vec<u64>,
}

impl PartialEvaluationTrace {
    pub fn value(&self) -> u64 {
        self.values[0]
    }

    /// `A(n, k)`, or `None` when `k > n`.
    pub fn at(&self, k: u64) -> Option<u64> {
        self.values.get(k as usize).copied()
    }
}

fn step(seq: &IncrementSequence, k: u64, inner: u64) -> Result<u64> {
    let a = seq.term(k)?;
    let arg = a
        .checked_add(inner)
        .ok_or_else(|| Error::Overflow(format!("a_{k} + {inner} exceeds u64")))?;
    phi_fast(arg)
}

pub fn evaluate_trace(seq: &IncrementSequence, n: u64) -> Result<PartialEvaluationTrace> {
    if n == 0 {
        return Err(Error::Domain("scoreboard index n must be at least 1".into()));
    }
    let mut values = vec![0u64; n as usize + 1];
    for k in (1..=n).rev() {
        values[k as usize - 1] = step(seq, k, values[k as usize])?;
    }
    Ok(PartialEvaluationTrace { n, values })
}

/// `A(n)` without materializing the trace.
pub fn scoreboard_value(seq: &IncrementSequence, n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Domain("scoreboard index n must be at least 1".into()));
    }
    (1..=n).rev().try_fold(0, |inner, k| step(seq, k, inner))
}

/// `[A(1), ..., A(n_max)]`. Each entry is evaluated independently.
pub fn scoreboard_sequence(seq: &IncrementSequence, n_max: u64) -> Result<Vec<u64>> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    (1..=n_max).into_par_iter().map(|n| scoreboard_value(seq, n)).collect()
}

//! Increment sequences `a_1, a_2, ...` that feed the adversarial iteration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scan length used to certify that a polynomial stays positive when its
/// coefficients alone do not settle the question.
const POSITIVITY_SCAN: i128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "terms", rename_all = "lowercase")]
pub enum SequenceKind {
    Naturals,
    Squares,
    Cubes,
    Odds,
    /// Coefficients in ascending degree: `[c0, c1, ..., cd]` is `c0 + c1 j + ... + cd j^d`.
    Polynomial(Vec<i64>),
    Explicit(Vec<u64>),
}

/// An immutable, validated increment sequence. Every term it returns is at
/// least 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IncrementSequence {
    kind: SequenceKind,
}

impl IncrementSequence {
    pub fn naturals() -> Self {
        Self {
            kind: SequenceKind::Naturals,
        }
    }

    pub fn squares() -> Self {
        Self {
            kind: SequenceKind::Squares,
        }
    }

    pub fn cubes() -> Self {
        Self {
            kind: SequenceKind::Cubes,
        }
    }

    pub fn odds() -> Self {
        Self {
            kind: SequenceKind::Odds,
        }
    }

    /// A polynomial sequence. Rejected unless `f(j) >= 1` for every `j >= 1`;
    /// the error names the first offending index.
    pub fn polynomial(coefficients: Vec<i64>) -> Result<Self> {
        let mut coefficients = coefficients;
        while coefficients.len() > 1 && coefficients.last() == Some(&0) {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            return Err(Error::Domain("polynomial needs at least one coefficient".into()));
        }
        check_positive(&coefficients)?;
        Ok(Self {
            kind: SequenceKind::Polynomial(coefficients),
        })
    }

    /// A finite sequence of explicit terms, all of which must be positive.
    pub fn explicit(terms: Vec<u64>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain("explicit sequence needs at least one term".into()));
        }
        if let Some(pos) = terms.iter().position(|&t| t == 0) {
            return Err(Error::Domain(format!(
                "term a_{} is 0; increments must be positive",
                pos + 1
            )));
        }
        Ok(Self {
            kind: SequenceKind::Explicit(terms),
        })
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    /// Number of available terms, `None` for generated kinds.
    pub fn len(&self) -> Option<u64> {
        match &self.kind {
            SequenceKind::Explicit(terms) => Some(terms.len() as u64),
            _ => None,
        }
    }

    /// Whether `a_j` exists, i.e. `j >= 1` and `j` is within a finite sequence.
    pub fn has_term(&self, j: u64) -> bool {
        j >= 1 && self.len().is_none_or(|len| j <= len)
    }

    /// The coefficients of the generating polynomial, if there is one.
    pub fn polynomial_coefficients(&self) -> Option<Vec<i64>> {
        match &self.kind {
            SequenceKind::Naturals => Some(vec![0, 1]),
            SequenceKind::Squares => Some(vec![0, 0, 1]),
            SequenceKind::Cubes => Some(vec![0, 0, 0, 1]),
            SequenceKind::Odds => Some(vec![-1, 2]),
            SequenceKind::Polynomial(c) => Some(c.clone()),
            SequenceKind::Explicit(_) => None,
        }
    }

    /// `a_j` for `j >= 1`.
    pub fn term(&self, j: u64) -> Result<u64> {
        if j == 0 {
            return Err(Error::Domain("sequence indices start at 1".into()));
        }
        let overflow = || Error::Overflow(format!("term a_{j} of {self} exceeds u64"));
        match &self.kind {
            SequenceKind::Naturals => Ok(j),
            SequenceKind::Squares => j.checked_mul(j).ok_or_else(overflow),
            SequenceKind::Cubes => j.checked_pow(3).ok_or_else(overflow),
            SequenceKind::Odds => j.checked_mul(2).map(|v| v - 1).ok_or_else(overflow),
            SequenceKind::Polynomial(c) => {
                let value = eval_poly(c, j as i128).ok_or_else(overflow)?;
                u64::try_from(value).map_err(|_| overflow())
            }
            SequenceKind::Explicit(terms) => terms.get(j as usize - 1).copied().ok_or_else(|| Error::Range {
                sequence: self.to_string(),
                index: j,
                available: terms.len() as u64,
            }),
        }
    }

    /// `[a_1, ..., a_n]`.
    pub fn terms(&self, n: u64) -> Result<Vec<u64>> {
        (1..=n).map(|j| self.term(j)).collect()
    }
}

fn eval_poly(coefficients: &[i64], x: i128) -> Option<i128> {
    coefficients
        .iter()
        .rev()
        .try_fold(0i128, |acc, &c| acc.checked_mul(x)?.checked_add(c as i128))
}

/// Coefficients of `p(x + 1)`.
fn shift_by_one(coefficients: &[i64]) -> Option<Vec<i128>> {
    let mut shifted: Vec<i128> = coefficients.iter().map(|&c| c as i128).collect();
    // Repeated synthetic division by (x - (-1)) gives the Taylor shift.
    let n = shifted.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            shifted[j] = shifted[j].checked_add(shifted[j + 1])?;
        }
    }
    Some(shifted)
}

fn check_positive(coefficients: &[i64]) -> Result<()> {
    // f(j) >= 1 for all j >= 1  <=>  f(x + 1) - 1 >= 0 for all x >= 0.
    if let Some(mut shifted) = shift_by_one(coefficients) {
        shifted[0] -= 1;
        if shifted.iter().all(|&c| c >= 0) {
            return Ok(());
        }
    }
    let lead = *coefficients.last().unwrap() as i128;
    // Past the Cauchy root bound f has the sign of its leading coefficient.
    let cauchy = 1 + coefficients[..coefficients.len() - 1]
        .iter()
        .map(|&c| ((c as i128).abs() + lead.abs() - 1) / lead.abs())
        .max()
        .unwrap_or(0);
    let scan_to = if lead > 0 { cauchy } else { cauchy.max(1) + 1 };
    if lead > 0 && scan_to > POSITIVITY_SCAN {
        return Err(Error::Domain(format!(
            "cannot certify positivity of polynomial {coefficients:?}: root bound {cauchy} exceeds scan limit"
        )));
    }
    for j in 1..=scan_to.min(POSITIVITY_SCAN) {
        match eval_poly(coefficients, j) {
            Some(v) if v >= 1 => {}
            _ => {
                return Err(Error::Domain(format!(
                    "polynomial {coefficients:?} has non-positive term at j = {j}"
                )))
            }
        }
    }
    if lead < 0 {
        // Unreachable in practice: a negative leading term goes negative
        // within the scanned range.
        return Err(Error::Domain(format!(
            "polynomial {coefficients:?} is eventually negative"
        )));
    }
    Ok(())
}

impl fmt::Display for IncrementSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(",");
        match &self.kind {
            SequenceKind::Naturals => write!(f, "naturals"),
            SequenceKind::Squares => write!(f, "squares"),
            SequenceKind::Cubes => write!(f, "cubes"),
            SequenceKind::Odds => write!(f, "odds"),
            SequenceKind::Polynomial(c) => write!(f, "poly:{}", join(&mut c.iter().map(|x| x.to_string()))),
            SequenceKind::Explicit(t) => write!(f, "list:{}", join(&mut t.iter().map(|x| x.to_string()))),
        }
    }
}

impl FromStr for IncrementSequence {
    type Err = Error;

    /// `naturals | squares | cubes | odds | poly:c0,c1,...,cd | list:a1,a2,...`
    fn from_str(s: &str) -> Result<Self> {
        fn numbers<T: FromStr>(body: &str) -> Result<Vec<T>> {
            body.split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad number {t:?} in sequence spec")))
                })
                .collect()
        }
        match s.trim() {
            "naturals" => Ok(Self::naturals()),
            "squares" => Ok(Self::squares()),
            "cubes" => Ok(Self::cubes()),
            "odds" => Ok(Self::odds()),
            other => {
                if let Some(body) = other.strip_prefix("poly:") {
                    Self::polynomial(numbers(body)?)
                } else if let Some(body) = other.strip_prefix("list:") {
                    Self::explicit(numbers(body)?)
                } else {
                    Err(Error::Parse(format!("unknown sequence {other:?}")))
                }
            }
        }
    }
}

//! Upper bounds `b_k` on partial evaluations, used to prune totient trees
//! from above.
//!
//! A polynomial provider uses one polynomial on odd heights and another on
//! even heights. For an increment polynomial `f` the heights split into a
//! *halving* class `H` (those `k` with `f(k + 1)` even) and a *carry* class.
//! The bound `A(n, k) <= b_k` for all `n` follows by downward induction on
//! `k` from three inequalities:
//!
//! * carry: for `k` in `H`, `b_{k-1} >= tighten(f(k) + b_k - 1)`, since
//!   `phi(x) < x` for `x > 1`;
//! * halving: for `k` in `H`, `b_{k-2} >= tighten(max(f(k-1), (f(k-1) + b_{k-1}) / 2))`,
//!   since `f(k-1)` is even and `phi` at least halves even numbers;
//! * base: for `n` not in `H`, `b_{n-1} >= tighten(f(n) - 1)`,
//!
//! where `tighten(v)` rounds an odd `v > 1` down to the next even number
//! (every totient value is even or 1). The checks run exactly for every
//! `k <= checked_through`, and past that point each inequality is settled from
//! the polynomial difference of its two sides.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoreboard::evaluate_trace;
use crate::sequence::{IncrementSequence, SequenceKind};

/// Heights checked exactly when verifying a polynomial bound.
pub const DEFAULT_CHECK_RANGE: u64 = 10_000;

/// How far the constant term may be raised while searching for a bound.
const CONSTANT_BUDGET: i128 = 1 << 20;

/// `2k + 4` for odd `k`, `3k + 6` for even `k`.
pub fn bound_naturals(k: u64) -> u64 {
    if k % 2 == 1 {
        2 * k + 4
    } else {
        3 * k + 6
    }
}

/// `2k^2 + 14k + 40` for odd `k`, `3k^2 + 20k + 57` for even `k`.
pub fn bound_squares(k: u64) -> u64 {
    if k % 2 == 1 {
        2 * k * k + 14 * k + 40
    } else {
        3 * k * k + 20 * k + 57
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundKind {
    Naturals,
    Squares,
    /// Coefficients ascending in degree, one polynomial per height parity.
    GenericPolynomial {
        odd: Vec<i128>,
        even: Vec<i128>,
    },
    Constant {
        value: u64,
    },
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundProvider {
    pub kind: BoundKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<BoundEvidence>,
}

impl BoundProvider {
    pub fn naturals() -> Self {
        Self {
            kind: BoundKind::Naturals,
            evidence: None,
        }
    }

    pub fn squares() -> Self {
        Self {
            kind: BoundKind::Squares,
            evidence: None,
        }
    }

    pub fn constant(value: u64) -> Self {
        Self {
            kind: BoundKind::Constant { value },
            evidence: None,
        }
    }

    pub fn unbounded() -> Self {
        Self {
            kind: BoundKind::Unbounded,
            evidence: None,
        }
    }

    pub fn polynomial(odd: Vec<i128>, even: Vec<i128>) -> Self {
        Self {
            kind: BoundKind::GenericPolynomial { odd, even },
            evidence: None,
        }
    }

    /// Default bound for a sequence: the closed forms for naturals
    /// and squares, a derived bound for other polynomial sequences, and no
    /// bound when derivation is impossible.
    pub fn auto_for(seq: &IncrementSequence) -> Self {
        match seq.kind() {
            SequenceKind::Naturals => Self::naturals(),
            SequenceKind::Squares => Self::squares(),
            _ => derive_polynomial_bound(seq).unwrap_or_else(|_| Self::unbounded()),
        }
    }

    /// `b_k`, or `None` when there is no bound.
    pub fn at(&self, k: u64) -> Option<u64> {
        match &self.kind {
            BoundKind::Naturals => Some(bound_naturals(k)),
            BoundKind::Squares => Some(bound_squares(k)),
            BoundKind::GenericPolynomial { odd, even } => {
                let p = if k % 2 == 1 { odd } else { even };
                let v = Poly(p.clone()).eval(k as i128);
                Some(v.clamp(0, u64::MAX as i128) as u64)
            }
            BoundKind::Constant { value } => Some(*value),
            BoundKind::Unbounded => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self.kind, BoundKind::Unbounded)
    }

    /// The two parity polynomials, when the provider has them.
    pub fn parity_polynomials(&self) -> Option<(Vec<i128>, Vec<i128>)> {
        match &self.kind {
            BoundKind::Naturals => Some((vec![4, 2], vec![6, 3])),
            BoundKind::Squares => Some((vec![40, 14, 2], vec![57, 20, 3])),
            BoundKind::GenericPolynomial { odd, even } => Some((odd.clone(), even.clone())),
            BoundKind::Constant { value } => Some((vec![*value as i128], vec![*value as i128])),
            BoundKind::Unbounded => None,
        }
    }
}

impl fmt::Display for BoundProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            BoundKind::Naturals => write!(f, "naturals"),
            BoundKind::Squares => write!(f, "squares"),
            BoundKind::GenericPolynomial { odd, even } => {
                write!(f, "poly(odd: {}, even: {})", Poly(odd.clone()), Poly(even.clone()))
            }
            BoundKind::Constant { value } => write!(f, "constant:{value}"),
            BoundKind::Unbounded => write!(f, "none"),
        }
    }
}

/// Integer polynomial, coefficients ascending in degree.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Poly(Vec<i128>);

impl Poly {
    fn from_i64(c: &[i64]) -> Self {
        Poly(c.iter().map(|&x| x as i128).collect()).trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.0.len() > 1 && self.0.last() == Some(&0) {
            self.0.pop();
        }
        if self.0.is_empty() {
            self.0.push(0);
        }
        self
    }

    fn degree(&self) -> usize {
        self.0.len() - 1
    }

    fn lead(&self) -> i128 {
        *self.0.last().unwrap()
    }

    fn eval(&self, x: i128) -> i128 {
        self.0
            .iter()
            .rev()
            .fold(0i128, |acc, &c| acc.saturating_mul(x).saturating_add(c))
    }

    /// `p(x + s)`.
    fn shift(&self, s: i128) -> Self {
        let mut c = self.0.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                c[j] += s * c[j + 1];
            }
        }
        Poly(c).trimmed()
    }

    fn add(&self, other: &Poly) -> Self {
        let n = self.0.len().max(other.0.len());
        let get = |p: &Poly, i: usize| p.0.get(i).copied().unwrap_or(0);
        Poly((0..n).map(|i| get(self, i) + get(other, i)).collect()).trimmed()
    }

    fn scale(&self, s: i128) -> Self {
        Poly(self.0.iter().map(|&c| c * s).collect()).trimmed()
    }

    fn sub(&self, other: &Poly) -> Self {
        self.add(&other.scale(-1))
    }

    fn plus_const(&self, c: i128) -> Self {
        self.add(&Poly(vec![c]))
    }

    /// An `R` with `p(x) > 0` for all `x > R` (Cauchy bound), assuming
    /// a positive leading coefficient.
    fn positivity_threshold(&self) -> i128 {
        let lead = self.lead();
        1 + self.0[..self.degree()]
            .iter()
            .map(|&c| (c.abs() + lead - 1) / lead)
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (i, &c) in self.0.iter().enumerate().rev() {
            if c == 0 && self.0.len() > 1 {
                continue;
            }
            terms.push(match i {
                0 => format!("{c}"),
                1 => format!("{c}k"),
                _ => format!("{c}k^{i}"),
            });
        }
        write!(f, "{}", terms.join(" + ").replace("+ -", "- "))
    }
}

fn tighten(v: i128) -> i128 {
    if v > 1 && v % 2 == 1 {
        v - 1
    } else {
        v.max(1)
    }
}

/// How an inductive inequality is known to hold beyond the exactly checked range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TailArgument {
    /// The difference polynomial is positive past `threshold`.
    EventuallyPositive { threshold: i128, difference: String },
    /// The difference is a nonnegative constant.
    NonnegativeConstant { difference: i128 },
    /// The difference is a negative constant; the inequality then depends
    /// only on `k mod 4`, which the exact range covers.
    Periodic { difference: i128 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionEvidence {
    pub name: String,
    pub tail: TailArgument,
}

/// Record of a successful inductive verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundEvidence {
    pub increments: Vec<i64>,
    /// Parity of the heights on which the halving step applies.
    pub halving_parity: String,
    pub odd_bound: String,
    pub even_bound: String,
    pub odd_coefficients: Vec<i128>,
    pub even_coefficients: Vec<i128>,
    pub checked_through: u64,
    pub conditions: Vec<ConditionEvidence>,
}

fn tail_argument(name: &str, difference: &Poly, checked_through: u64) -> Result<ConditionEvidence> {
    let tail = if difference.degree() == 0 {
        let c = difference.lead();
        if c >= 0 {
            TailArgument::NonnegativeConstant { difference: c }
        } else {
            TailArgument::Periodic { difference: c }
        }
    } else if difference.lead() > 0 {
        let threshold = difference.positivity_threshold();
        if threshold > checked_through as i128 {
            return Err(Error::Derivation(format!(
                "{name}: difference {difference} only provably positive beyond {threshold}"
            )));
        }
        TailArgument::EventuallyPositive {
            threshold,
            difference: difference.to_string(),
        }
    } else {
        return Err(Error::Derivation(format!(
            "{name}: difference {difference} is eventually negative"
        )));
    };
    Ok(ConditionEvidence {
        name: name.to_string(),
        tail,
    })
}

/// Verifies that a pair of parity polynomials bounds every partial
/// evaluation of the polynomial sequence `f`, for all `n` and `k`.
pub fn verify_polynomial_bound(
    increments: &[i64],
    odd: &[i128],
    even: &[i128],
    checked_through: u64,
) -> Result<BoundEvidence> {
    let f = Poly::from_i64(increments);
    let odd_p = Poly(odd.to_vec()).trimmed();
    let even_p = Poly(even.to_vec()).trimmed();
    if checked_through < 8 {
        return Err(Error::Derivation("check range must cover at least 8 heights".into()));
    }
    let f_even_at_even = f.eval(0) % 2 == 0;
    let f_even_at_odd = f.eval(1) % 2 == 0;
    // halving class H: heights k with f(k + 1) even
    let halving_parity = if f_even_at_even {
        1
    } else if f_even_at_odd {
        0
    } else {
        return Err(Error::Derivation(format!(
            "increments {increments:?} are odd everywhere; no halving step exists"
        )));
    };
    let (halving, carry) = if halving_parity == 1 {
        (&odd_p, &even_p)
    } else {
        (&even_p, &odd_p)
    };
    let in_h = |k: i128| k.rem_euclid(2) == halving_parity;
    let b = |k: i128| if in_h(k) { halving.eval(k) } else { carry.eval(k) };

    for k in 0..=checked_through as i128 {
        if b(k) < 0 {
            return Err(Error::Derivation(format!("bound is negative at k = {k}")));
        }
        if in_h(k) && k >= 1 {
            let need = tighten(f.eval(k) + b(k) - 1);
            if b(k - 1) < need {
                return Err(Error::Derivation(format!(
                    "carry step fails at k = {k}: b_{} = {} < {need}",
                    k - 1,
                    b(k - 1)
                )));
            }
        }
        if in_h(k) && k >= 2 {
            let fk1 = f.eval(k - 1);
            let need = tighten((fk1 + b(k - 1)).div_euclid(2)).max(tighten(fk1));
            if b(k - 2) < need {
                return Err(Error::Derivation(format!(
                    "halving step fails at k = {k}: b_{} = {} < {need}",
                    k - 2,
                    b(k - 2)
                )));
            }
        }
        if !in_h(k) && k >= 1 {
            let need = tighten(f.eval(k) - 1);
            if b(k - 1) < need {
                return Err(Error::Derivation(format!(
                    "base case fails at n = {k}: b_{} = {} < {need}",
                    k - 1,
                    b(k - 1)
                )));
            }
        }
    }

    // carry: B_G(k-1) - f(k) - B_H(k) + 1
    let carry_diff = carry.shift(-1).sub(&f).sub(halving).plus_const(1);
    // halving: 2 B_H(k-2) - f(k-1) - B_G(k-1), and B_H(k-2) - f(k-1)
    let halving_diff = halving.shift(-2).scale(2).sub(&f.shift(-1)).sub(&carry.shift(-1));
    let small_diff = halving.shift(-2).sub(&f.shift(-1));
    // base: B_H(n-1) - f(n) + 1
    let base_diff = halving.shift(-1).sub(&f).plus_const(1);
    // Smallest constant difference that parity rounding can still absorb.
    let checks = [
        ("halving bound nonnegative", halving.clone(), 0),
        ("carry bound nonnegative", carry.clone(), 0),
        ("carry step", carry_diff, -1),
        ("halving step", halving_diff, -3),
        ("halving step (small inner value)", small_diff, 0),
        ("base case", base_diff, -1),
    ];
    let mut conditions = Vec::new();
    for (name, diff, allowed) in &checks {
        let evidence = tail_argument(name, diff, checked_through)?;
        if let TailArgument::Periodic { difference } = evidence.tail {
            if difference < *allowed {
                return Err(Error::Derivation(format!(
                    "{name}: constant shortfall {difference} cannot be absorbed by parity"
                )));
            }
        }
        conditions.push(evidence);
    }

    Ok(BoundEvidence {
        increments: increments.to_vec(),
        halving_parity: if halving_parity == 1 { "odd" } else { "even" }.into(),
        odd_bound: odd_p.to_string(),
        even_bound: even_p.to_string(),
        odd_coefficients: odd_p.0.clone(),
        even_coefficients: even_p.0.clone(),
        checked_through,
        conditions,
    })
}

/// Attaches inductive evidence to the provider, failing if it does not verify.
pub fn verify_provider(
    seq: &IncrementSequence,
    provider: &BoundProvider,
    checked_through: u64,
) -> Result<BoundEvidence> {
    let f = seq
        .polynomial_coefficients()
        .ok_or_else(|| Error::Derivation(format!("{seq} is not a polynomial sequence")))?;
    let (odd, even) = provider
        .parity_polynomials()
        .ok_or_else(|| Error::Derivation("an unbounded provider has nothing to verify".into()))?;
    verify_polynomial_bound(&f, &odd, &even, checked_through)
}

/// Builds a pruning bound for a polynomial increment sequence.
///
/// The halving-class polynomial has leading coefficient `2c` (for `f` with
/// leading coefficient `c`) and lower coefficients chosen so that the halving
/// inequality's difference polynomial vanishes; the carry-class polynomial is
/// `f(k + 1) + B_H(k + 1) - 1`. The constant term is then raised until every
/// check passes and lowered while they still pass.
pub fn derive_polynomial_bound(seq: &IncrementSequence) -> Result<BoundProvider> {
    derive_polynomial_bound_checked(seq, DEFAULT_CHECK_RANGE)
}

pub fn derive_polynomial_bound_checked(seq: &IncrementSequence, checked_through: u64) -> Result<BoundProvider> {
    let coefficients = seq
        .polynomial_coefficients()
        .ok_or_else(|| Error::Derivation(format!("{seq} is not a polynomial sequence")))?;
    let f = Poly::from_i64(&coefficients);
    if f.lead() <= 0 {
        return Err(Error::Derivation("leading coefficient must be positive".into()));
    }
    if f.eval(0) % 2 != 0 && f.eval(1) % 2 != 0 {
        return Err(Error::Derivation(format!("{seq} is odd-valued everywhere")));
    }
    let halving_parity_odd = f.eval(0) % 2 == 0;
    let d = f.degree();

    // Solve for B_H top-down so that 2 B_H(k-2) - f(k-1) - f(k) - B_H(k) + 1 == 0
    // coefficient by coefficient; B_H's x^j coefficient enters the x^j
    // coefficient of that difference with weight 1.
    let mut h = vec![0i128; d + 1];
    h[d] = 2 * f.lead();
    for j in (0..d).rev() {
        let trial = Poly(h.clone());
        let diff = trial
            .shift(-2)
            .scale(2)
            .sub(&f.shift(-1))
            .sub(&f)
            .sub(&trial)
            .plus_const(1);
        let coeff = diff.0.get(j).copied().unwrap_or(0);
        h[j] = -coeff;
    }

    let build = |h: &[i128]| {
        let halving = Poly(h.to_vec()).trimmed();
        let carry = f.shift(1).add(&halving.shift(1)).plus_const(-1);
        if halving_parity_odd {
            (halving.0, carry.0)
        } else {
            (carry.0, halving.0)
        }
    };
    let check = |h: &[i128]| {
        let (odd, even) = build(h);
        verify_polynomial_bound(&coefficients, &odd, &even, checked_through).map(|e| (odd, even, e))
    };

    let mut raise = 0i128;
    let mut passing = loop {
        let mut trial = h.clone();
        trial[0] += raise;
        if let Ok(found) = check(&trial) {
            h = trial;
            break found;
        }
        raise = if raise == 0 { 1 } else { raise * 2 };
        if raise > CONSTANT_BUDGET {
            return Err(Error::Derivation(format!(
                "no bound found for {seq} within constant budget {CONSTANT_BUDGET}"
            )));
        }
    };
    // Lower the constant term as far as the checks allow.
    loop {
        let mut trial = h.clone();
        trial[0] -= 1;
        match check(&trial) {
            Ok(found) => {
                h = trial;
                passing = found;
            }
            Err(_) => break,
        }
    }
    let (odd, even, evidence) = passing;
    Ok(BoundProvider {
        kind: BoundKind::GenericPolynomial { odd, even },
        evidence: Some(evidence),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub n: u64,
    pub k: u64,
    pub value: u64,
    pub bound: u64,
}

/// Every `(n, k)` with `n <= n_max` where `A(n, k)` exceeds `b_k`.
pub fn validate_bound_empirically(
    seq: &IncrementSequence,
    bound: &BoundProvider,
    n_max: u64,
) -> Result<Vec<Violation>> {
    let mut violations = Vec::new();
    if !bound.is_bounded() {
        return Ok(violations);
    }
    let bounds: Vec<u64> = (0..=n_max).map(|k| bound.at(k).unwrap()).collect();
    for n in 1..=n_max {
        let trace = evaluate_trace(seq, n)?;
        for (k, &value) in trace.values.iter().enumerate() {
            if value > bounds[k] {
                violations.push(Violation {
                    n,
                    k: k as u64,
                    value,
                    bound: bounds[k],
                });
            }
        }
    }
    Ok(violations)
}

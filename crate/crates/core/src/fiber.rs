//! Totient fibers `phi^-1(m)`: every `n` with `phi(n) = m`.

use serde::{Deserialize, Serialize};

use crate::arith::{factorize, is_prime, phi_sieve, DivisorOrder};
use crate::error::{Error, Result};

/// Largest sieve the brute-force oracle will allocate unless told otherwise.
pub const DEFAULT_SIEVE_BUDGET: u64 = 20_000_000;

/// The complete, ascending preimage set of `m` under Euler's totient.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TotientFiber {
    pub m: u64,
    pub members: Vec<u64>,
}

impl TotientFiber {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, n: u64) -> bool {
        self.members.binary_search(&n).is_ok()
    }

    fn from_unsorted(m: u64, mut members: Vec<u64>) -> Self {
        members.sort_unstable();
        members.dedup();
        TotientFiber { m, members }
    }
}

/// Computes `phi^-1(m)` by growing candidate products of prime powers.
///
/// Every prime dividing a preimage is one more than a divisor of `m`. For
/// each such prime `p` (visited in `order` over the divisors), every existing
/// candidate `c` with `phi(c) | m` is multiplied by `p, p^2, ...` while the
/// totient still divides `m`. Products whose totient equals `m` are emitted,
/// together with their double when odd; the rest become candidates for later
/// primes. The factor `2^1` is never tried directly since the doubling rule
/// already covers it.
pub fn totient_fiber_ordered(m: u64, order: DivisorOrder) -> Result<TotientFiber> {
    if m == 0 {
        return Err(Error::Domain("the totient fiber of 0 is undefined".into()));
    }
    let overflow = || Error::Overflow(format!("preimage of {m} exceeds u64"));
    let mut found = Vec::new();
    if m == 1 {
        found.extend([1, 2]);
    }
    // (n, phi(n)) with phi(n) a proper divisor of m
    let mut candidates: Vec<(u64, u64)> = vec![(1, 1)];
    let mut grown = Vec::new();
    for d in factorize(m)?.divisors(order) {
        let p = match d.checked_add(1) {
            Some(p) if is_prime(p) => p,
            _ => continue,
        };
        // p^k and phi(p^k), starting at k = 1 (k = 2 for p = 2)
        let (first_pk, first_phi) = if p == 2 { (4, 2) } else { (p, d) };
        for &(n, phi_n) in &candidates {
            let mut pk = first_pk;
            let mut phi_pk = first_phi;
            loop {
                let Some(phi_x) = phi_n.checked_mul(phi_pk) else { break };
                if m % phi_x != 0 {
                    break;
                }
                let x = n.checked_mul(pk).ok_or_else(overflow)?;
                if phi_x == m {
                    found.push(x);
                    if x % 2 == 1 {
                        found.push(x.checked_mul(2).ok_or_else(overflow)?);
                    }
                } else {
                    grown.push((x, phi_x));
                }
                let (Some(next_pk), Some(next_phi)) = (pk.checked_mul(p), phi_pk.checked_mul(p)) else {
                    break;
                };
                pk = next_pk;
                phi_pk = next_phi;
            }
        }
        candidates.append(&mut grown);
    }
    Ok(TotientFiber::from_unsorted(m, found))
}

/// `totient_fiber_ordered` with descending divisor order.
pub fn totient_fiber(m: u64) -> Result<TotientFiber> {
    totient_fiber_ordered(m, DivisorOrder::Descending)
}

/// Upper bound on any preimage of `m`: `phi(n) >= sqrt(n / 2)` for all `n`,
/// so `phi(n) = m` forces `n <= 2 m^2`.
pub fn preimage_ceiling(m: u64) -> Option<u64> {
    m.checked_mul(m)?.checked_mul(2)
}

/// Brute-force oracle: sieve `phi` up to `2 m^2` and collect matches.
pub fn totient_fiber_bruteforce(m: u64) -> Result<TotientFiber> {
    totient_fiber_bruteforce_with_budget(m, DEFAULT_SIEVE_BUDGET)
}

pub fn totient_fiber_bruteforce_with_budget(m: u64, budget: u64) -> Result<TotientFiber> {
    if m == 0 {
        return Err(Error::Domain("the totient fiber of 0 is undefined".into()));
    }
    let mut fibers = bruteforce_fibers_upto(m, budget)?;
    let members = fibers.pop().map(|f| f.members).unwrap_or_default();
    Ok(TotientFiber { m, members })
}

/// Oracle fibers for every `1 <= m <= max_m` from a single sieve to
/// `2 max_m^2`. Entry `i` of the result is the fiber of `i + 1`.
pub fn bruteforce_fibers_upto(max_m: u64, budget: u64) -> Result<Vec<TotientFiber>> {
    if max_m == 0 {
        return Err(Error::Domain("max_m must be positive".into()));
    }
    let limit = preimage_ceiling(max_m).ok_or(Error::Resource {
        attempted: u64::MAX,
        budget,
    })?;
    if limit > budget {
        return Err(Error::Resource {
            attempted: limit,
            budget,
        });
    }
    let phi = phi_sieve(limit)?;
    let mut buckets: Vec<Vec<u64>> = vec![Vec::new(); max_m as usize];
    for (n, &value) in phi.iter().enumerate().skip(1) {
        if value <= max_m {
            buckets[value as usize - 1].push(n as u64);
        }
    }
    Ok(buckets
        .into_iter()
        .enumerate()
        .map(|(i, members)| TotientFiber {
            m: i as u64 + 1,
            members,
        })
        .collect())
}

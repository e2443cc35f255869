//! Exact 64-bit arithmetic kernels: primality, factorization, divisors and
//! Euler's totient, both per value and as a batch sieve.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest prime used for trial division before falling back to Pollard rho.
const TRIAL_LIMIT: u32 = 1 << 10;

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = TRIAL_LIMIT as usize;
        let mut composite = vec![false; limit + 1];
        let mut primes = Vec::new();
        for i in 2..=limit {
            if !composite[i] {
                primes.push(i as u32);
                let mut j = i * i;
                while j <= limit {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        primes
    })
}

/// Prime factorization `n = ∏ p^e`, primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct Factorization {
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Multiplies the factorization back out. Fails on overflow, which can
    /// only happen for hand-built factorizations.
    pub fn product(&self) -> Result<u64> {
        self.factors.iter().try_fold(1u64, |acc, &(p, e)| {
            checked_pow(p, e)
                .and_then(|pe| acc.checked_mul(pe))
                .ok_or_else(|| Error::Overflow(format!("product of {:?}", self.factors)))
        })
    }

    /// `∏ (p-1) p^(e-1)`.
    pub fn totient(&self) -> u64 {
        // φ(n) <= n, so this never overflows for a factorization of a u64.
        self.factors.iter().map(|&(p, e)| (p - 1) * p.pow(e - 1)).product()
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn divisors(&self, order: DivisorOrder) -> Vec<u64> {
        let count: usize = self.factors.iter().map(|&(_, e)| e as usize + 1).product();
        let mut out = Vec::with_capacity(count);
        out.push(1u64);
        for &(p, e) in &self.factors {
            let existing = out.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..existing {
                    out.push(out[i] * pk);
                }
            }
        }
        out.sort_unstable();
        if order == DivisorOrder::Descending {
            out.reverse();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DivisorOrder {
    Ascending,
    #[default]
    Descending,
}

fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut result = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    result
}

/// Strong probable-prime test of odd `n > 2` to base `a`.
fn strong_probable_prime(n: u64, a: u64) -> bool {
    let a = a % n;
    if a == 0 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    let mut x = pow_mod(a, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Deterministic primality over all of `u64`.
///
/// Trial division by the primes below 1024, then Miller-Rabin with a base set
/// known to have no strong pseudoprimes below 2^64 (bases 2, 7, 61 suffice
/// below 2^32).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in small_primes() {
        let p = p as u64;
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
        if p * p > n {
            return true;
        }
    }
    let bases: &[u64] = if n < (1 << 32) {
        &[2, 7, 61]
    } else {
        &[2, 325, 9375, 28178, 450775, 9780504, 1795265022]
    };
    bases.iter().all(|&a| strong_probable_prime(n, a))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Brent's variant of Pollard rho. `n` must be odd and composite. The
/// polynomial constant is stepped deterministically, so results are
/// reproducible.
fn pollard_brent(n: u64) -> u64 {
    const BATCH: u64 = 128;
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let mut y = 2u64;
        let mut x;
        let mut ys;
        let mut q = 1u64;
        let mut g;
        let mut r = 1u64;
        loop {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            loop {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += BATCH;
                if k >= r || g != 1 {
                    break;
                }
            }
            r *= 2;
            if g != 1 {
                break;
            }
        }
        if g == n {
            // Batched product collapsed; retrace one step at a time.
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g != 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

fn split_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_brent(n);
    split_into(d, out);
    split_into(n / d, out);
}

/// Factorizes `n >= 1`. `factorize(1)` is the empty factorization.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::Domain("cannot factorize 0".into()));
    }
    let mut rest = n;
    let mut factors = Vec::new();
    for &p in small_primes() {
        let p = p as u64;
        if p * p > rest {
            break;
        }
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    if rest > 1 {
        let mut large = Vec::new();
        split_into(rest, &mut large);
        large.sort_unstable();
        for p in large {
            match factors.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => factors.push((p, 1)),
            }
        }
    }
    Ok(Factorization { factors })
}

/// Euler's totient: the number of `1 <= y <= n` with `gcd(y, n) = 1`.
pub fn euler_phi(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Domain("phi(0) is undefined".into()));
    }
    Ok(factorize(n)?.totient())
}

/// All divisors of `n`, generated from its factorization.
pub fn divisors(n: u64, order: DivisorOrder) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::Domain("0 has no finite divisor list".into()));
    }
    Ok(factorize(n)?.divisors(order))
}

/// Totients of `0..=limit` from a linear sieve. Index 0 holds 0 and is not a
/// totient value; entry `i` is `phi(i)` for `1 <= i <= limit`.
///
/// Memory is `8 * (limit + 1)` bytes for the result plus roughly `limit / 2`
/// bytes of scratch, so a limit of 10^7 costs about 85 MB.
pub fn phi_sieve(limit: u64) -> Result<Vec<u64>> {
    if limit == 0 {
        return Err(Error::Domain("sieve limit must be positive".into()));
    }
    let limit =
        usize::try_from(limit).map_err(|_| Error::Overflow(format!("sieve limit {limit} exceeds address space")))?;
    let mut phi = vec![0u64; limit + 1];
    let mut primes: Vec<u64> = Vec::new();
    phi[1] = 1;
    for i in 2..=limit {
        if phi[i] == 0 {
            phi[i] = i as u64 - 1;
            primes.push(i as u64);
        }
        let pi = phi[i];
        for &p in &primes {
            let j = i * p as usize;
            if j > limit {
                break;
            }
            if i as u64 % p == 0 {
                phi[j] = pi * p;
                break;
            }
            phi[j] = pi * (p - 1);
        }
    }
    Ok(phi)
}

//! Orders of symplectic groups over Z/mZ and the theta-null counting bounds
//! built from them.

use crate::algebra::is_prime;
use crate::error::{Error, Result};

/// Largest rank accepted.
pub const MAX_RANK: u32 = 4;
/// Largest modulus accepted.
pub const MAX_MODULUS: u64 = 10_000;

fn overflow(what: &str) -> Error {
    Error::CapExceeded(format!("{what} does not fit in 128 bits"))
}

fn checked_pow(base: u128, exp: u64) -> Result<u128> {
    let exp = u32::try_from(exp).map_err(|_| overflow("power"))?;
    base.checked_pow(exp).ok_or_else(|| overflow("power"))
}

fn factor(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            let mut k = 0;
            while m % p == 0 {
                m /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += 1;
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

fn check_query(n: u32, m: u64) -> Result<()> {
    if n == 0 || n > MAX_RANK {
        return Err(Error::InvalidArgument(format!("rank n = {n} outside 1..={MAX_RANK}")));
    }
    if !(2..=MAX_MODULUS).contains(&m) {
        return Err(Error::InvalidArgument(format!("modulus m = {m} outside 2..={MAX_MODULUS}")));
    }
    Ok(())
}

/// |Sp_2n(Z/p^k)| = p^((k-1)(2n^2+n)) p^(n^2) prod_{i=1..n} (p^(2i) - 1).
fn sp_order_prime_power(n: u32, p: u64, k: u32) -> Result<u128> {
    debug_assert!(is_prime(p));
    let n = n as u64;
    let p128 = p as u128;
    let mut acc = checked_pow(p128, (k as u64 - 1) * (2 * n * n + n))?;
    acc = acc.checked_mul(checked_pow(p128, n * n)?).ok_or_else(|| overflow("order"))?;
    for i in 1..=n {
        let term = checked_pow(p128, 2 * i)? - 1;
        acc = acc.checked_mul(term).ok_or_else(|| overflow("order"))?;
    }
    Ok(acc)
}

/// Order of Sp_2n(Z/mZ), multiplicative over the prime powers of m.
pub fn sp_order(n: u32, m: u64) -> Result<u128> {
    check_query(n, m)?;
    factor(m).into_iter().try_fold(1u128, |acc, (p, k)| {
        acc.checked_mul(sp_order_prime_power(n, p, k)?)
            .ok_or_else(|| overflow("order"))
    })
}

/// m^(2n) |Sp_2n(Z/mZ)|, an upper bound on the number of level-m theta nulls
/// above one abelian variety.
pub fn theta_null_bound(n: u32, m: u64) -> Result<u128> {
    let sp = sp_order(n, m)?;
    checked_pow(m as u128, 2 * n as u64)?
        .checked_mul(sp)
        .ok_or_else(|| overflow("bound"))
}

/// m^4 |Sp_4(Z/mZ)|.
pub fn prop_b6_threshold(m: u64) -> Result<u128> {
    if m % 4 != 0 {
        return Err(Error::BadLevel(m));
    }
    checked_pow(m as u128, 4)?
        .checked_mul(sp_order(2, m)?)
        .ok_or_else(|| overflow("threshold"))
}

/// True when h exceeds m^4 |Sp_4(Z/mZ)|, so that level-m theta nulls cannot
/// serve as an invariant of unpolarized products at class number h.
pub fn prop_b6_feasible(h: u128, m: u64) -> Result<bool> {
    Ok(h > prop_b6_threshold(m)?)
}

/// The smallest q with sqrt(q) > threshold(m), using h ~ sqrt(q) as a
/// heuristic for the class number.
pub fn heuristic_min_field_size(m: u64) -> Result<u128> {
    let th = prop_b6_threshold(m)?;
    let sq = th.checked_add(1).and_then(|s| s.checked_mul(s)).ok_or_else(|| overflow("field size"))?;
    Ok(sq)
}

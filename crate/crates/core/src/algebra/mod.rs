//! Prime-field, polynomial and quotient-ring arithmetic.

mod factor;
mod field;
mod poly;
mod quotient;

pub use factor::{is_irreducible, poly_factor, poly_roots};
pub use field::{
    frobenius_roots_mod_ell, is_prime, legendre, sqrt_mod_prime, FpElement, PrimeField, SplitType,
};
pub(crate) use field::char_poly_roots;
pub use poly::{poly_powmod, FpPoly};
pub use quotient::QuotientRing;

/// Trial-division factorization of `n` (n >= 1), ascending primes.
pub fn factor_integer(mut n: u128) -> Vec<(u128, u32)> {
    let mut out = Vec::new();
    let mut d: u128 = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

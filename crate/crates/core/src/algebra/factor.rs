//! Factorization over F_p: squarefree split, distinct-degree, then
//! Cantor-Zassenhaus equal-degree splitting driven by a caller-supplied RNG.

use rand::Rng;

use super::poly::{poly_powmod, FpPoly};
use crate::error::{Error, Result};

/// Factor `f` into monic irreducibles with multiplicities, sorted canonically
/// (by degree, then coefficients from the constant term up). The product of
/// the factors times `f.leading()` reproduces `f`.
pub fn poly_factor<R: Rng + ?Sized>(f: &FpPoly, rng: &mut R) -> Result<Vec<(FpPoly, usize)>> {
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let mut out = Vec::new();
    for (part, mult) in squarefree_decomposition(&f.monic()) {
        for (deg, block) in distinct_degree(&part)? {
            let mut pieces = Vec::new();
            equal_degree(&block, deg, rng, &mut pieces)?;
            out.extend(pieces.into_iter().map(|g| (g, mult)));
        }
    }
    // Squarefree parts are coprime, so merging is only needed for safety.
    out.sort_by(|a, b| canonical_cmp(&a.0, &b.0));
    let mut merged: Vec<(FpPoly, usize)> = Vec::with_capacity(out.len());
    for (g, m) in out {
        match merged.last_mut() {
            Some((last, lm)) if *last == g => *lm += m,
            _ => merged.push((g, m)),
        }
    }
    Ok(merged)
}

pub(crate) fn canonical_cmp(a: &FpPoly, b: &FpPoly) -> std::cmp::Ordering {
    a.deg().cmp(&b.deg()).then_with(|| a.coeffs().cmp(b.coeffs()))
}

/// Distinct roots of `f` in F_p, ascending.
pub fn poly_roots<R: Rng + ?Sized>(f: &FpPoly, rng: &mut R) -> Result<Vec<u64>> {
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let f = f.monic();
    if f.deg() == 0 {
        return Ok(Vec::new());
    }
    let field = f.field();
    let xp = poly_powmod(&FpPoly::x(field), field.modulus() as u128, &f)?;
    let split = f.gcd(&xp.sub(&FpPoly::x(field)));
    let mut linear = Vec::new();
    if split.deg() > 0 {
        equal_degree(&split, 1, rng, &mut linear)?;
    }
    let mut roots: Vec<u64> = linear.iter().map(|g| field.neg(g.coeff(0))).collect();
    roots.sort_unstable();
    Ok(roots)
}

/// Monic squarefree decomposition: pairs (squarefree part, multiplicity).
fn squarefree_decomposition(f: &FpPoly) -> Vec<(FpPoly, usize)> {
    let field = f.field();
    let p = field.modulus() as usize;
    let mut out = Vec::new();
    if f.deg() == 0 {
        return out;
    }
    let df = f.derivative();
    if df.is_zero() {
        // f is a p-th power.
        for (g, m) in squarefree_decomposition(&pth_root(f)) {
            out.push((g, m * p));
        }
        return out;
    }
    let mut c = f.gcd(&df);
    let mut w = f.div_exact(&c);
    let mut i = 1;
    while w.deg() > 0 {
        let y = w.gcd(&c);
        let fac = w.div_exact(&y);
        if fac.deg() > 0 {
            out.push((fac, i));
        }
        w = y;
        c = c.div_exact(&w);
        i += 1;
    }
    if c.deg() > 0 {
        for (g, m) in squarefree_decomposition(&pth_root(&c)) {
            out.push((g, m * p));
        }
    }
    out
}

/// For f(x) = g(x^p) over F_p, returns g (Frobenius is the identity on F_p).
fn pth_root(f: &FpPoly) -> FpPoly {
    let p = f.field().modulus() as usize;
    let coeffs: Vec<u64> = f.coeffs().iter().step_by(p).copied().collect();
    FpPoly::new(f.field(), coeffs)
}

/// Splits a monic squarefree polynomial into (degree, product of all
/// irreducible factors of that degree).
fn distinct_degree(f: &FpPoly) -> Result<Vec<(usize, FpPoly)>> {
    let field = f.field();
    let p = field.modulus() as u128;
    let x = FpPoly::x(field);
    let mut out = Vec::new();
    let mut rest = f.clone();
    let mut h = x.clone();
    let mut d = 0;
    while rest.deg() >= 2 * (d + 1) {
        d += 1;
        h = poly_powmod(&h, p, &rest)?;
        let g = rest.gcd(&h.sub(&x));
        if g.deg() > 0 {
            rest = rest.div_exact(&g);
            h = h.rem(&rest);
            out.push((d, g));
        }
    }
    if rest.deg() > 0 {
        out.push((rest.deg(), rest));
    }
    Ok(out)
}

/// Cantor-Zassenhaus for odd p: `f` monic squarefree with all factors of degree `d`.
fn equal_degree<R: Rng + ?Sized>(
    f: &FpPoly,
    d: usize,
    rng: &mut R,
    out: &mut Vec<FpPoly>,
) -> Result<()> {
    let n = f.deg();
    if n == 0 {
        return Ok(());
    }
    if n == d {
        out.push(f.monic());
        return Ok(());
    }
    let field = f.field();
    let p = field.modulus() as u128;
    let one = FpPoly::one(field);
    loop {
        let r = FpPoly::random(field, n - 1, rng);
        if r.deg() == 0 {
            continue;
        }
        let g = f.gcd(&r);
        if g.deg() > 0 && g.deg() < n {
            equal_degree(&g, d, rng, out)?;
            return equal_degree(&f.div_exact(&g), d, rng, out);
        }
        // r^((p^d - 1)/2) = (r * r^p * ... * r^(p^(d-1)))^((p-1)/2)
        let mut norm = r.rem(f);
        let mut cur = norm.clone();
        for _ in 1..d {
            cur = poly_powmod(&cur, p, f)?;
            norm = norm.mul_mod(&cur, f);
        }
        let u = poly_powmod(&norm, (p - 1) / 2, f)?;
        let g = f.gcd(&u.sub(&one));
        if g.deg() > 0 && g.deg() < n {
            equal_degree(&g, d, rng, out)?;
            return equal_degree(&f.div_exact(&g), d, rng, out);
        }
    }
}

/// True when `f` (nonconstant) is irreducible over F_p (Rabin's test).
pub fn is_irreducible(f: &FpPoly) -> bool {
    let n = f.deg();
    if n == 0 {
        return false;
    }
    let f = f.monic();
    let field = f.field();
    let p = field.modulus() as u128;
    let x = FpPoly::x(field);
    let frob_pow = |k: usize| -> FpPoly {
        let mut h = x.clone();
        for _ in 0..k {
            h = poly_powmod(&h, p, &f).expect("nonconstant modulus");
        }
        h
    };
    if !frob_pow(n).sub(&x).rem(&f).is_zero() {
        return false;
    }
    let mut m = n;
    let mut primes = Vec::new();
    let mut q = 2;
    while q * q <= m {
        if m % q == 0 {
            primes.push(q);
            while m % q == 0 {
                m /= q;
            }
        }
        q += 1;
    }
    if m > 1 {
        primes.push(m);
    }
    primes
        .into_iter()
        .all(|q| f.gcd(&frob_pow(n / q).sub(&x)).deg() == 0)
}

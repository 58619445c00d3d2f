use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for small in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % small == 0 {
            return n == small;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The prime field F_p for an odd prime p < 2^32.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p < 3 || p >= 1 << 32 || !is_prime(p) {
            return Err(Error::InvalidModulus(p));
        }
        Ok(PrimeField { p })
    }

    /// For moduli already checked by `new`.
    pub(crate) fn from_validated(p: u64) -> Self {
        debug_assert!(p >= 3 && p < 1 << 32);
        PrimeField { p }
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn elem(&self, value: u64) -> FpElement {
        FpElement {
            value: value % self.p,
            modulus: self.p,
        }
    }

    #[inline]
    pub fn reduce_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn reduce_i128(&self, v: i128) -> u64 {
        v.rem_euclid(self.p as i128) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.p
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(&self, a: u64) -> Option<u64> {
        let a = a % self.p;
        if a == 0 {
            return None;
        }
        let (mut r0, mut r1) = (self.p as i64, a as i64);
        let (mut s0, mut s1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        Some(self.reduce_i64(s0))
    }

    /// Legendre symbol via Euler's criterion.
    pub fn legendre(&self, a: u64) -> i8 {
        let a = a % self.p;
        if a == 0 {
            return 0;
        }
        if self.pow(a, (self.p - 1) / 2) == 1 {
            1
        } else {
            -1
        }
    }

    /// Smaller square root of `a`, if one exists (Tonelli-Shanks).
    pub fn sqrt(&self, a: u64) -> Option<u64> {
        let a = a % self.p;
        if a == 0 {
            return Some(0);
        }
        if self.legendre(a) != 1 {
            return None;
        }
        let p = self.p;
        let root = if p % 4 == 3 {
            self.pow(a, (p + 1) / 4)
        } else {
            let mut q = p - 1;
            let mut s = 0;
            while q % 2 == 0 {
                q /= 2;
                s += 1;
            }
            let mut z = 2;
            while self.legendre(z) != -1 {
                z += 1;
            }
            let mut m = s;
            let mut c = self.pow(z, q);
            let mut t = self.pow(a, q);
            let mut r = self.pow(a, (q + 1) / 2);
            while t != 1 {
                let mut i = 0;
                let mut t2 = t;
                while t2 != 1 {
                    t2 = self.mul(t2, t2);
                    i += 1;
                }
                let b = self.pow(c, 1 << (m - i - 1));
                m = i;
                c = self.mul(b, b);
                t = self.mul(t, c);
                r = self.mul(r, b);
            }
            r
        };
        Some(root.min(p - root))
    }
}

/// An element of F_p carrying its modulus.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FpElement {
    value: u64,
    modulus: u64,
}

impl FpElement {
    pub fn new(value: u64, modulus: u64) -> Result<Self> {
        Ok(PrimeField::new(modulus)?.elem(value))
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { p: self.modulus }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn inv(&self) -> Option<FpElement> {
        self.field().inv(self.value).map(|v| self.field().elem(v))
    }

    pub fn pow(&self, e: u64) -> FpElement {
        self.field().elem(self.field().pow(self.value, e))
    }

    fn check(&self, other: &FpElement) {
        assert_eq!(
            self.modulus, other.modulus,
            "arithmetic across different prime fields"
        );
    }
}

impl fmt::Debug for FpElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

impl fmt::Display for FpElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for FpElement {
    type Output = FpElement;
    fn add(self, rhs: FpElement) -> FpElement {
        self.check(&rhs);
        self.field().elem(self.field().add(self.value, rhs.value))
    }
}

impl Sub for FpElement {
    type Output = FpElement;
    fn sub(self, rhs: FpElement) -> FpElement {
        self.check(&rhs);
        self.field().elem(self.field().sub(self.value, rhs.value))
    }
}

impl Mul for FpElement {
    type Output = FpElement;
    fn mul(self, rhs: FpElement) -> FpElement {
        self.check(&rhs);
        self.field().elem(self.field().mul(self.value, rhs.value))
    }
}

impl Neg for FpElement {
    type Output = FpElement;
    fn neg(self) -> FpElement {
        self.field().elem(self.field().neg(self.value))
    }
}

/// Legendre symbol (a / p) for an odd prime p.
pub fn legendre(a: i64, p: u64) -> Result<i8> {
    let field = PrimeField::new(p)?;
    Ok(field.legendre(field.reduce_i64(a)))
}

/// Both square roots of `a`, smaller first; `[0]` for zero, `None` for non-residues.
pub fn sqrt_mod_prime(a: FpElement) -> Option<Vec<FpElement>> {
    let field = a.field();
    let r = field.sqrt(a.value)?;
    if r == 0 {
        Some(vec![field.elem(0)])
    } else {
        Some(vec![field.elem(r), field.elem(field.p - r)])
    }
}

/// How x^2 - t x + q factors modulo a small prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitType {
    Split { mu: u64, mu_bar: u64 },
    Ramified { mu: u64 },
    Inert,
}

/// Roots of x^2 - t x + q modulo `ell` by exhaustive search; works for ell = 2 too.
pub(crate) fn char_poly_roots(t: i64, q: u64, ell: u64) -> Vec<u64> {
    let tm = t.rem_euclid(ell as i64) as u64;
    let qm = q % ell;
    (0..ell)
        .filter(|&x| (x * x + qm + (ell - tm) * x) % ell == 0)
        .collect()
}

/// Classify x^2 - t x + q modulo the odd prime `ell`.
pub fn frobenius_roots_mod_ell(t: i64, q: u64, ell: u64) -> Result<SplitType> {
    if ell < 3 || !is_prime(ell) {
        return Err(Error::InvalidModulus(ell));
    }
    if q % ell == 0 {
        return Err(Error::EllEqualsP(ell));
    }
    let roots = char_poly_roots(t, q, ell);
    Ok(match roots.as_slice() {
        [] => SplitType::Inert,
        [mu] => SplitType::Ramified { mu: *mu },
        [mu, mu_bar] => SplitType::Split {
            mu: *mu,
            mu_bar: *mu_bar,
        },
        _ => unreachable!("a quadratic has at most two roots mod a prime"),
    })
}

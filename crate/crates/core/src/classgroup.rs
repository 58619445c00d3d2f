//! Binary quadratic forms as ideal classes of Z[pi], the prime forms above
//! split and ramified primes, and the Frobenius-module dictionary.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::char_poly_roots;
use crate::error::{Error, Result};
use crate::isogeny::{IdealEntry, IdealVector};

/// Default cap on |D| for enumerating reduced forms.
pub const DEFAULT_DISC_CAP: i128 = 10_000_000_000;

/// Positive definite primitive form a x^2 + b x y + c y^2.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawForm", into = "RawForm")]
pub struct QuadForm {
    a: i128,
    b: i128,
    c: i128,
}

#[derive(Serialize, Deserialize)]
struct RawForm {
    a: i128,
    b: i128,
    c: i128,
}

impl TryFrom<RawForm> for QuadForm {
    type Error = Error;
    fn try_from(r: RawForm) -> Result<QuadForm> {
        QuadForm::new(r.a, r.b, r.c)
    }
}

impl From<QuadForm> for RawForm {
    fn from(f: QuadForm) -> RawForm {
        RawForm {
            a: f.a,
            b: f.b,
            c: f.c,
        }
    }
}

impl fmt::Debug for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.a, self.b, self.c)
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub(crate) fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// (u, v, g) with u a + v b = g = gcd(a, b) >= 0.
pub(crate) fn xgcd_i128(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-s0, -t0, -r0)
    } else {
        (s0, t0, r0)
    }
}

impl QuadForm {
    pub fn new(a: i128, b: i128, c: i128) -> Result<Self> {
        if a <= 0 || c <= 0 {
            return Err(Error::InvalidForm(format!("({a},{b},{c}) is not positive definite")));
        }
        let d = b
            .checked_mul(b)
            .and_then(|bb| a.checked_mul(c).and_then(|ac| ac.checked_mul(4)).map(|ac4| bb - ac4))
            .ok_or_else(|| Error::CapExceeded("form coefficients overflow".into()))?;
        if d >= 0 {
            return Err(Error::InvalidForm(format!("({a},{b},{c}) has discriminant {d} >= 0")));
        }
        if gcd_i128(gcd_i128(a, b), c) != 1 {
            return Err(Error::InvalidForm(format!("({a},{b},{c}) is not primitive")));
        }
        Ok(QuadForm { a, b, c })
    }

    /// Builds (a, b, (b^2 - D)/(4a)).
    pub fn from_ab(a: i128, b: i128, d: i128) -> Result<Self> {
        let num = b * b - d;
        if a <= 0 || num % (4 * a) != 0 {
            return Err(Error::InvalidForm(format!("no form ({a},{b},*) of discriminant {d}")));
        }
        QuadForm::new(a, b, num / (4 * a))
    }

    pub fn a(&self) -> i128 {
        self.a
    }

    pub fn b(&self) -> i128 {
        self.b
    }

    pub fn c(&self) -> i128 {
        self.c
    }

    pub fn discriminant(&self) -> i128 {
        self.b * self.b - 4 * self.a * self.c
    }

    /// The principal form of discriminant `d`.
    pub fn identity(d: i128) -> Result<Self> {
        match d.rem_euclid(4) {
            0 => QuadForm::new(1, 0, -d / 4),
            1 => QuadForm::new(1, 1, (1 - d) / 4),
            _ => Err(Error::InvalidForm(format!("{d} is not a discriminant"))),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.a == 1 && self.is_reduced()
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        b.abs() <= a && a <= c && !((b.abs() == a || a == c) && b < 0)
    }

    /// Gauss reduction to the canonical representative.
    pub fn reduce(&self) -> QuadForm {
        let d = self.discriminant();
        let (mut a, mut b, mut c) = (self.a, self.b, self.c);
        loop {
            if !(-a < b && b <= a) {
                let k = (a - b).div_euclid(2 * a);
                b += 2 * a * k;
                c = (b * b - d) / (4 * a);
            }
            if a > c {
                (a, b, c) = (c, -b, a);
            } else {
                break;
            }
        }
        if a == c && b < 0 {
            b = -b;
        }
        QuadForm { a, b, c }
    }

    pub fn invert(&self) -> QuadForm {
        QuadForm {
            a: self.a,
            b: -self.b,
            c: self.c,
        }
        .reduce()
    }

    /// Composition (Shanks/Cohen), reduced.
    pub fn compose(&self, other: &QuadForm) -> Result<QuadForm> {
        let d = self.discriminant();
        if d != other.discriminant() {
            return Err(Error::DiscriminantMismatch(d, other.discriminant()));
        }
        let (f1, f2) = if self.a > other.a {
            (other, self)
        } else {
            (self, other)
        };
        let (a1, b1) = (f1.a, f1.b);
        let (a2, b2, c2) = (f2.a, f2.b, f2.c);
        let s = (b1 + b2) / 2;
        let n = b2 - s;
        let (y1, dd) = if a2 % a1 == 0 {
            (0, a1)
        } else {
            let (u, _, g) = xgcd_i128(a2, a1);
            (u, g)
        };
        let (x2, y2, d1) = if s % dd == 0 {
            (0, -1, dd)
        } else {
            let (x2, y2, g) = xgcd_i128(s, dd);
            (x2, -y2, g)
        };
        let v1 = a1 / d1;
        let v2 = a2 / d1;
        let r = (y1 * y2 * n - x2 * c2).rem_euclid(v1);
        let b3 = b2 + 2 * v2 * r;
        let a3 = v1 * v2;
        let c3 = (c2 * d1 + r * (b2 + v2 * r)) / v1;
        Ok(QuadForm {
            a: a3,
            b: b3,
            c: c3,
        }
        .reduce())
    }

    pub fn pow(&self, e: i64) -> QuadForm {
        let base = if e < 0 { self.invert() } else { self.reduce() };
        let mut acc = QuadForm::identity(self.discriminant()).expect("valid discriminant");
        let mut cur = base;
        let mut k = e.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.compose(&cur).expect("same discriminant");
            }
            k >>= 1;
            if k > 0 {
                cur = cur.compose(&cur).expect("same discriminant");
            }
        }
        acc
    }

    /// Canonical 48-byte encoding: a, b, c as big-endian 16-byte lanes.
    pub fn encoding(&self) -> [u8; 48] {
        let mut out = [0u8; 48];
        out[..16].copy_from_slice(&self.a.to_be_bytes());
        out[16..32].copy_from_slice(&self.b.to_be_bytes());
        out[32..].copy_from_slice(&self.c.to_be_bytes());
        out
    }

    pub fn from_encoding(bytes: &[u8; 48]) -> Result<QuadForm> {
        let lane = |i: usize| i128::from_be_bytes(bytes[16 * i..16 * (i + 1)].try_into().unwrap());
        QuadForm::new(lane(0), lane(1), lane(2))
    }
}

/// All reduced forms of one discriminant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGroupTable {
    #[serde(rename = "D")]
    pub d: i128,
    pub reduced_forms: Vec<QuadForm>,
}

impl ClassGroupTable {
    pub fn class_number(&self) -> usize {
        self.reduced_forms.len()
    }

    pub fn index_of(&self, f: &QuadForm) -> Option<usize> {
        self.reduced_forms.binary_search(&f.reduce()).ok()
    }
}

pub fn check_discriminant(d: i128) -> Result<()> {
    if d >= 0 || !matches!(d.rem_euclid(4), 0 | 1) {
        return Err(Error::InvalidForm(format!("{d} is not a negative discriminant")));
    }
    Ok(())
}

pub fn enumerate_reduced(d: i128) -> Result<ClassGroupTable> {
    enumerate_reduced_capped(d, DEFAULT_DISC_CAP)
}

pub fn enumerate_reduced_capped(d: i128, cap: i128) -> Result<ClassGroupTable> {
    check_discriminant(d)?;
    if -d > cap {
        return Err(Error::CapExceeded(format!("|D| = {} exceeds {cap}", -d)));
    }
    let mut forms = Vec::new();
    let mut a = 1i128;
    while 3 * a * a <= -d {
        let mut b = -a + 1;
        if (b - d).rem_euclid(2) != 0 {
            b += 1;
        }
        while b <= a {
            let num = b * b - d;
            if num % (4 * a) == 0 {
                let c = num / (4 * a);
                if c >= a && !(a == c && b < 0) && gcd_i128(gcd_i128(a, b), c) == 1 {
                    forms.push(QuadForm { a, b, c });
                }
            }
            b += 2;
        }
        a += 1;
    }
    forms.sort();
    Ok(ClassGroupTable {
        d,
        reduced_forms: forms,
    })
}

/// The Frobenius eigenvalue mu mod ell attached to the prime (ell, sign).
///
/// sign = +1 picks the root whose form (ell, 2 mu - t mod 2 ell, .) has the
/// smaller middle coefficient; sign = -1 the conjugate root.
pub fn prime_eigenvalue(ell: u64, sign: i8, t: i64, q: u64) -> Result<u64> {
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
    }
    if !crate::algebra::is_prime(ell) {
        return Err(Error::InvalidModulus(ell));
    }
    if q % ell == 0 {
        return Err(Error::EllEqualsP(ell));
    }
    let roots = char_poly_roots(t, q, ell);
    let two_ell = 2 * ell as i128;
    let middle = |mu: u64| {
        let b = (2 * mu as i128 - t as i128).rem_euclid(two_ell);
        if b == 0 {
            two_ell
        } else {
            b
        }
    };
    match roots.as_slice() {
        [] => Err(Error::InertPrime(ell)),
        [mu] => Ok(*mu),
        [m1, m2] => {
            let (small, large) = if middle(*m1) <= middle(*m2) {
                (*m1, *m2)
            } else {
                (*m2, *m1)
            };
            Ok(if sign == 1 { small } else { large })
        }
        _ => unreachable!(),
    }
}

/// Reduced form of the prime ideal (ell, pi - mu) selected by `sign`.
pub fn prime_form(d: i128, ell: u64, sign: i8, t: i64, q: u64) -> Result<QuadForm> {
    let d_pi = t as i128 * t as i128 - 4 * q as i128;
    if d != d_pi {
        return Err(Error::DiscriminantMismatch(d, d_pi));
    }
    let mu = prime_eigenvalue(ell, sign, t, q)?;
    let two_ell = 2 * ell as i128;
    let mut b = (2 * mu as i128 - t as i128).rem_euclid(two_ell);
    if b == 0 {
        b = two_ell;
    }
    Ok(QuadForm::from_ab(ell as i128, b, d)?.reduce())
}

/// The reduced form of a prime ideal above `ell` for discriminant `d`
/// alone: (ell, b, .) with the least b > 0 such that b^2 = d mod 4 ell.
pub fn form_above(d: i128, ell: u64) -> Result<QuadForm> {
    check_discriminant(d)?;
    let ell = ell as i128;
    (1..=2 * ell)
        .find(|b| (b * b - d).rem_euclid(4 * ell) == 0)
        .ok_or(Error::InertPrime(ell as u64))
        .and_then(|b| Ok(QuadForm::from_ab(ell, b, d)?.reduce()))
}

/// True when `ell` is split or ramified in Z[pi] (and does not divide q).
pub fn is_usable_prime(ell: u64, t: i64, q: u64) -> bool {
    q % ell != 0 && !char_poly_roots(t, q, ell).is_empty()
}

/// Odd primes <= bound that split in Z[pi], excluding those dividing q.
pub fn split_primes(bound: u64, t: i64, q: u64) -> Vec<u64> {
    (3..=bound)
        .filter(|&l| crate::algebra::is_prime(l) && q % l != 0)
        .filter(|&l| char_poly_roots(t, q, l).len() == 2)
        .collect()
}

/// Class of an ideal word as the product of its prime forms.
pub fn ideal_vector_class(v: &IdealVector, t: i64, q: u64) -> Result<QuadForm> {
    let d = t as i128 * t as i128 - 4 * q as i128;
    let mut acc = QuadForm::identity(d)?;
    for e in v.entries() {
        let g = prime_form(d, e.ell, e.sign, t, q)?;
        acc = acc.compose(&g.pow(e.exp as i64))?;
    }
    Ok(acc)
}

fn generators(basis: &[u64], t: i64, q: u64) -> Result<Vec<(u64, i8, QuadForm)>> {
    let d = t as i128 * t as i128 - 4 * q as i128;
    let mut sorted = basis.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut gens = Vec::new();
    for ell in sorted {
        let ramified = char_poly_roots(t, q, ell).len() == 1;
        for sign in [1i8, -1] {
            if ramified && sign == -1 {
                continue;
            }
            gens.push((ell, sign, prime_form(d, ell, sign, t, q)?));
        }
    }
    Ok(gens)
}

/// Breadth-first tree of the Cayley graph from the identity: maps each
/// reached class to its parent and the (ell, sign) edge used.
pub fn cayley_tree(
    basis: &[u64],
    t: i64,
    q: u64,
) -> Result<HashMap<QuadForm, Option<(QuadForm, u64, i8)>>> {
    let d = t as i128 * t as i128 - 4 * q as i128;
    let gens = generators(basis, t, q)?;
    let id = QuadForm::identity(d)?;
    let mut parent = HashMap::new();
    parent.insert(id, None);
    let mut queue = VecDeque::from([id]);
    while let Some(f) = queue.pop_front() {
        for &(ell, sign, g) in &gens {
            let next = f.compose(&g)?;
            if let std::collections::hash_map::Entry::Vacant(slot) = parent.entry(next) {
                slot.insert(Some((f, ell, sign)));
                queue.push_back(next);
            }
        }
    }
    Ok(parent)
}

/// Whether the prime forms above `basis` generate the whole class group.
pub fn generates(basis: &[u64], t: i64, q: u64) -> Result<bool> {
    let d = t as i128 * t as i128 - 4 * q as i128;
    Ok(cayley_tree(basis, t, q)?.len() == enumerate_reduced(d)?.class_number())
}

/// Shortest word over `basis` whose class is `target`.
pub fn decompose(target: &QuadForm, basis: &[u64], t: i64, q: u64) -> Result<IdealVector> {
    let d = t as i128 * t as i128 - 4 * q as i128;
    if target.discriminant() != d {
        return Err(Error::DiscriminantMismatch(target.discriminant(), d));
    }
    let tree = cayley_tree(basis, t, q)?;
    let h = enumerate_reduced(d)?.class_number();
    if tree.len() != h {
        return Err(Error::NotGenerated {
            reached: tree.len(),
            expected: h,
        });
    }
    let mut steps = Vec::new();
    let mut cur = target.reduce();
    while let Some(Some((prev, ell, sign))) = tree.get(&cur) {
        steps.push(IdealEntry::new(*ell, *sign, 1));
        cur = *prev;
    }
    steps.reverse();
    Ok(IdealVector::new(steps))
}

/// Matrix of Frobenius on a rank-2 lattice with trace t and determinant q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrobeniusMatrix {
    pub m11: i128,
    pub m12: i128,
    pub m21: i128,
    pub m22: i128,
    pub t: i128,
    pub q: i128,
}

impl FrobeniusMatrix {
    pub fn new(rows: [[i128; 2]; 2], t: i128, q: i128) -> Result<Self> {
        let m = FrobeniusMatrix {
            m11: rows[0][0],
            m12: rows[0][1],
            m21: rows[1][0],
            m22: rows[1][1],
            t,
            q,
        };
        if m.m11 + m.m22 != t || m.m11 * m.m22 - m.m12 * m.m21 != q {
            return Err(Error::NotAModuleMatrix(format!(
                "trace/determinant of {:?} differ from ({t}, {q})",
                m.rows()
            )));
        }
        if t * t - 4 * q >= 0 {
            return Err(Error::NotAModuleMatrix("characteristic polynomial is reducible".into()));
        }
        Ok(m)
    }

    /// Multiplication by pi on the basis {1, pi}.
    pub fn companion(t: i128, q: i128) -> Result<Self> {
        FrobeniusMatrix::new([[0, -q], [1, t]], t, q)
    }

    pub fn rows(&self) -> [[i128; 2]; 2] {
        [[self.m11, self.m12], [self.m21, self.m22]]
    }
}

fn module_class(m: &FrobeniusMatrix) -> Result<QuadForm> {
    let (a, b) = (m.m11, m.m21);
    if b == 0 {
        return Err(Error::DegenerateBasis);
    }
    let fa = a * a - m.t * a + m.q;
    if fa % b != 0 {
        return Err(Error::NotAModuleMatrix(format!("{b} does not divide f({a}) = {fa}")));
    }
    let n = b.abs();
    let d = m.t * m.t - 4 * m.q;
    Ok(QuadForm::from_ab(n, (2 * a - m.t).rem_euclid(2 * n), d)?.reduce())
}

/// Class a1 * a2^{-1} of the two Frobenius modules.
pub fn deligne_to_class(m1: &FrobeniusMatrix, m2: &FrobeniusMatrix) -> Result<QuadForm> {
    if (m1.t, m1.q) != (m2.t, m2.q) {
        return Err(Error::Mismatch(format!(
            "(t, q) = ({}, {}) vs ({}, {})",
            m1.t, m1.q, m2.t, m2.q
        )));
    }
    module_class(m1)?.compose(&module_class(m2)?.invert())
}

/// Frobenius matrix on the lattice of the ideal class `f`.
pub fn class_to_module(f: &QuadForm, t: i128, q: i128) -> Result<FrobeniusMatrix> {
    let d = t * t - 4 * q;
    if f.discriminant() != d {
        return Err(Error::DiscriminantMismatch(f.discriminant(), d));
    }
    let a = f.a;
    let s = ((f.b + t) / 2).rem_euclid(a);
    let b = 2 * s - t;
    let c = (b * b - d) / (4 * a);
    FrobeniusMatrix::new([[s, -c], [a, t - s]], t, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qf(a: i128, b: i128, c: i128) -> QuadForm {
        QuadForm::new(a, b, c).unwrap()
    }

    /// Oracle: multiply the ideals a Z + ((-b + sqrt D)/2) Z as lattices in
    /// the basis {1, w}, w = (delta + sqrt D)/2, and read the primitive part
    /// off the Hermite normal form.
    fn lattice_compose(f: &QuadForm, g: &QuadForm) -> QuadForm {
        let d = f.discriminant();
        let delta = d.rem_euclid(2);
        let m = (d - delta * delta) / 4; // w^2 = delta w + m
        let mul = |(x1, y1): (i128, i128), (x2, y2): (i128, i128)| {
            (x1 * x2 + y1 * y2 * m, x1 * y2 + x2 * y1 + y1 * y2 * delta)
        };
        let gens = |h: &QuadForm| [(h.a, 0), ((-h.b - delta) / 2, 1)];
        let mut vecs = Vec::new();
        for u in gens(f) {
            for v in gens(g) {
                vecs.push(mul(u, v));
            }
        }
        // Row-reduce on the w-coordinate to get {n1, m0 + n2 w}.
        let mut n1 = 0i128;
        let mut top = vecs[0];
        for &v in &vecs[1..] {
            let (mut p, mut r) = (top, v);
            while r.1 != 0 {
                let k = p.1.div_euclid(r.1);
                p = (p.0 - k * r.0, p.1 - k * r.1);
                std::mem::swap(&mut p, &mut r);
            }
            n1 = gcd_i128(n1, r.0);
            top = p;
        }
        if top.1 < 0 {
            top = (-top.0, -top.1);
        }
        let n2 = top.1;
        // The x-coordinate of the w-vector is only defined modulo n1.
        let m0 = top.0.rem_euclid(n1);
        assert_eq!(n1 % n2, 0);
        assert_eq!(m0 % n2, 0);
        let a3 = n1 / n2;
        let b3 = -(2 * (m0 / n2) + delta);
        QuadForm::from_ab(a3, b3, d).unwrap().reduce()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(qf(1, 0, 10).reduce(), qf(1, 0, 10));
        assert_eq!(qf(5, 0, 2).reduce(), qf(2, 0, 5));
        assert_eq!(qf(2, 4, 7).reduce(), qf(2, 0, 5));
        let f = qf(7, 10, 5).reduce();
        assert!(f.is_reduced());
        assert_eq!(f.reduce(), f);
    }

    #[test]
    fn compose_examples() {
        let id = QuadForm::identity(-40).unwrap();
        assert_eq!(id.compose(&qf(2, 0, 5)).unwrap(), qf(2, 0, 5));
        assert_eq!(qf(2, 0, 5).compose(&qf(2, 0, 5)).unwrap(), qf(1, 0, 10));
        assert_eq!(qf(2, 1, 3).compose(&qf(2, 1, 3)).unwrap(), qf(2, -1, 3));
        assert_eq!(
            qf(2, 0, 5).compose(&qf(2, 1, 3)),
            Err(Error::DiscriminantMismatch(-40, -23))
        );
    }

    #[test]
    fn invert_examples() {
        assert_eq!(qf(1, 0, 10).invert(), qf(1, 0, 10));
        assert_eq!(qf(2, 0, 5).invert(), qf(2, 0, 5));
        assert_eq!(qf(2, 1, 3).invert(), qf(2, -1, 3));
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(enumerate_reduced(-40).unwrap().reduced_forms, vec![qf(1, 0, 10), qf(2, 0, 5)]);
        assert_eq!(
            enumerate_reduced(-59).unwrap().reduced_forms,
            vec![qf(1, 1, 15), qf(3, -1, 5), qf(3, 1, 5)]
        );
        assert_eq!(enumerate_reduced(-3).unwrap().reduced_forms, vec![qf(1, 1, 1)]);
        assert!(matches!(enumerate_reduced_capped(-10_007, 1000), Err(Error::CapExceeded(_))));
    }

    #[test]
    fn class_numbers_known_values() {
        for (d, h) in [(-3, 1), (-4, 1), (-23, 3), (-47, 5), (-71, 7), (-84, 4), (-163, 1), (-199, 9), (-420, 8)] {
            assert_eq!(enumerate_reduced(d).unwrap().class_number(), h, "D = {d}");
        }
    }

    #[test]
    fn composition_matches_lattice_oracle() {
        for d in [-23i128, -40, -47, -59, -84, -104, -231, -420, -4004, -3299] {
            let forms = enumerate_reduced(d).unwrap().reduced_forms;
            for f in &forms {
                for g in &forms {
                    assert_eq!(f.compose(g).unwrap(), lattice_compose(f, g), "{f} * {g}");
                }
            }
        }
    }

    #[test]
    fn group_axioms_exhaustive() {
        for d in [-40i128, -59, -84, -104, -231, -420] {
            let forms = enumerate_reduced(d).unwrap().reduced_forms;
            assert!(forms.len() <= 16);
            let id = QuadForm::identity(d).unwrap();
            for f in &forms {
                assert_eq!(f.compose(&id).unwrap(), *f);
                assert_eq!(f.compose(&f.invert()).unwrap(), id);
                for g in &forms {
                    assert_eq!(f.compose(g).unwrap(), g.compose(f).unwrap());
                    for h in &forms {
                        let l = f.compose(g).unwrap().compose(h).unwrap();
                        let r = f.compose(&g.compose(h).unwrap()).unwrap();
                        assert_eq!(l, r);
                    }
                }
            }
        }
    }

    #[test]
    fn prime_form_examples() {
        assert_eq!(prime_form(-40, 7, 1, -2, 11).unwrap(), qf(2, 0, 5));
        assert_eq!(prime_form(-40, 7, -1, -2, 11).unwrap(), qf(2, 0, 5));
        assert_eq!(prime_form(-40, 5, 1, -2, 11).unwrap(), qf(2, 0, 5));
        assert_eq!(prime_form(-40, 3, 1, -2, 11), Err(Error::InertPrime(3)));
        // D = -59, ell = 3: mu = 2 gives b = 1, mu = 1 gives b = 5.
        assert_eq!(prime_eigenvalue(3, 1, 3, 17).unwrap(), 2);
        assert_eq!(prime_eigenvalue(3, -1, 3, 17).unwrap(), 1);
        let f = prime_form(-59, 3, 1, 3, 17).unwrap();
        assert_eq!(f, qf(3, 1, 5));
        assert_eq!(prime_form(-59, 3, -1, 3, 17).unwrap(), f.invert());
    }

    #[test]
    fn conjugate_prime_forms_are_inverse() {
        for (t, q) in [(3i64, 17u64), (-2, 11), (5, 101), (-7, 263)] {
            let d = t as i128 * t as i128 - 4 * q as i128;
            for ell in split_primes(60, t, q) {
                let f = prime_form(d, ell, 1, t, q).unwrap();
                let g = prime_form(d, ell, -1, t, q).unwrap();
                assert_eq!(f.compose(&g).unwrap(), QuadForm::identity(d).unwrap());
            }
        }
    }

    #[test]
    fn decompose_examples() {
        let id = QuadForm::identity(-40).unwrap();
        assert!(decompose(&id, &[7], -2, 11).unwrap().is_empty());
        let v = decompose(&qf(2, 0, 5), &[7], -2, 11).unwrap();
        assert_eq!(v.entries(), &[IdealEntry::new(7, 1, 1)]);
        assert!(matches!(
            decompose(&QuadForm::identity(-84).unwrap(), &[5], 8, 37),
            Err(Error::NotGenerated { .. })
        ));
    }

    #[test]
    fn decompose_recomposes_and_bfs_matches_class_number() {
        for (t, q) in [(3i64, 17u64), (-2, 11), (5, 101), (-7, 263), (1, 1009)] {
            let d = t as i128 * t as i128 - 4 * q as i128;
            let table = enumerate_reduced(d).unwrap();
            let basis = split_primes(80, t, q);
            assert_eq!(cayley_tree(&basis, t, q).unwrap().len(), table.class_number());
            for f in &table.reduced_forms {
                let v = decompose(f, &basis, t, q).unwrap();
                assert_eq!(ideal_vector_class(&v, t, q).unwrap(), *f);
            }
        }
    }

    #[test]
    fn deligne_examples() {
        let comp = FrobeniusMatrix::companion(-2, 11).unwrap();
        assert_eq!(comp.rows(), [[0, -11], [1, -2]]);
        assert_eq!(deligne_to_class(&comp, &comp).unwrap(), QuadForm::identity(-40).unwrap());
        let m = FrobeniusMatrix::new([[1, -7], [2, -3]], -2, 11).unwrap();
        assert_eq!(deligne_to_class(&m, &comp).unwrap(), qf(2, 0, 5));
        assert_eq!(deligne_to_class(&m, &m).unwrap(), QuadForm::identity(-40).unwrap());
        assert_eq!(class_to_module(&qf(1, 0, 10), -2, 11).unwrap(), comp);
        assert_eq!(class_to_module(&qf(2, 0, 5), -2, 11).unwrap(), m);
    }

    #[test]
    fn deligne_errors() {
        assert!(FrobeniusMatrix::new([[1, 0], [0, 1]], -2, 11).is_err());
        let m = FrobeniusMatrix::new([[-2, -11], [0, 0]], -2, 11);
        assert!(m.is_err());
        // Trace and determinant are right but 3 does not divide f(1) = 14.
        let bad = FrobeniusMatrix { m11: 1, m12: -14 / 3, m21: 3, m22: -3, t: -2, q: 11 };
        let comp = FrobeniusMatrix::companion(-2, 11).unwrap();
        assert!(matches!(deligne_to_class(&bad, &comp), Err(Error::NotAModuleMatrix(_))));
        let other = FrobeniusMatrix::companion(3, 17).unwrap();
        assert!(matches!(deligne_to_class(&comp, &other), Err(Error::Mismatch(_))));
        assert!(matches!(
            class_to_module(&qf(2, 0, 5), 3, 17),
            Err(Error::DiscriminantMismatch(-40, -59))
        ));
    }

    #[test]
    fn deligne_round_trip_exhaustive() {
        for (t, q) in [(-2i128, 11i128), (3, 17), (5, 101), (-7, 263), (1, 1009)] {
            let d = t * t - 4 * q;
            let comp = FrobeniusMatrix::companion(t, q).unwrap();
            for f in enumerate_reduced(d).unwrap().reduced_forms {
                let m = class_to_module(&f, t, q).unwrap();
                assert_eq!(deligne_to_class(&m, &comp).unwrap(), f);
                for g in enumerate_reduced(d).unwrap().reduced_forms {
                    let n = class_to_module(&g, t, q).unwrap();
                    assert_eq!(deligne_to_class(&m, &n).unwrap(), f.compose(&g.invert()).unwrap());
                }
            }
        }
    }

    #[test]
    fn encoding_round_trip() {
        let f = qf(3, -1, 5);
        let bytes = f.encoding();
        assert_eq!(&bytes[..16], &3i128.to_be_bytes());
        assert_eq!(&bytes[16..32], &[0xff; 16]);
        assert_eq!(QuadForm::from_encoding(&bytes).unwrap(), f);
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"a":3,"b":-1,"c":5}"#);
    }

    #[test]
    fn forms_above_primes() {
        assert_eq!(form_above(-40, 7).unwrap(), qf(2, 0, 5));
        assert_eq!(form_above(-40, 2).unwrap(), qf(2, 0, 5));
        assert!(form_above(-59, 17).unwrap().is_identity());
        assert_eq!(form_above(-40, 3), Err(Error::InertPrime(3)));
        for ell in [3u64, 5, 7, 19, 29] {
            let f = form_above(-59, ell).unwrap();
            let g = prime_form(-59, ell, 1, 3, 17).unwrap();
            assert!(f == g || f == g.invert());
        }
    }
}

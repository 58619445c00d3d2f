//! Short Weierstrass curves over prime fields: group law, point counting,
//! Frobenius data and random parameter generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{factor_integer, is_prime, poly_roots, FpElement, FpPoly, PrimeField};
use crate::error::{Error, Result};

/// Naive counting is used below this bound, baby-step giant-step above it.
pub const NAIVE_COUNT_LIMIT: u64 = 1 << 20;
/// Cap on |D_pi| for trial factorization.
pub const FACTOR_CAP: u128 = 1 << 48;

/// y^2 = x^3 + a x + b over F_p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawCurve", into = "RawCurve")]
pub struct Curve {
    p: u64,
    a: u64,
    b: u64,
}

#[derive(Serialize, Deserialize)]
struct RawCurve {
    p: u64,
    a: u64,
    b: u64,
}

impl TryFrom<RawCurve> for Curve {
    type Error = Error;
    fn try_from(raw: RawCurve) -> Result<Curve> {
        Curve::new(raw.p, raw.a, raw.b)
    }
}

impl From<Curve> for RawCurve {
    fn from(c: Curve) -> RawCurve {
        RawCurve {
            p: c.p,
            a: c.a,
            b: c.b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Point {
    Infinity,
    Affine { x: u64, y: u64 },
}

impl Point {
    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }

    pub fn x(&self) -> Option<u64> {
        match self {
            Point::Infinity => None,
            Point::Affine { x, .. } => Some(*x),
        }
    }
}

impl Curve {
    pub fn new(p: u64, a: u64, b: u64) -> Result<Self> {
        let field = PrimeField::new(p)?;
        if p == 3 {
            return Err(Error::InvalidModulus(p));
        }
        let (a, b) = (a % p, b % p);
        let disc = field.add(
            field.mul(4, field.pow(a, 3)),
            field.mul(27, field.mul(b, b)),
        );
        if disc == 0 {
            return Err(Error::SingularCurve { p, a, b });
        }
        Ok(Curve { p, a, b })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn field(&self) -> PrimeField {
        PrimeField::from_validated(self.p)
    }

    /// x^3 + a x + b as a polynomial.
    pub fn rhs_poly(&self) -> FpPoly {
        FpPoly::new(self.field(), vec![self.b, self.a, 0, 1])
    }

    pub fn rhs(&self, x: u64) -> u64 {
        let f = self.field();
        f.add(f.mul(f.add(f.mul(x, x), self.a), x), self.b)
    }

    pub fn j_invariant(&self) -> FpElement {
        let f = self.field();
        let a3 = f.mul(4, f.pow(self.a, 3));
        let den = f.add(a3, f.mul(27, f.mul(self.b, self.b)));
        let inv = f.inv(den).expect("nonsingular curve");
        f.elem(f.mul(f.mul(1728 % self.p, a3), inv))
    }

    pub fn j(&self) -> u64 {
        self.j_invariant().value()
    }

    pub fn contains(&self, pt: &Point) -> bool {
        match *pt {
            Point::Infinity => true,
            Point::Affine { x, y } => {
                x < self.p && y < self.p && self.field().mul(y, y) == self.rhs(x)
            }
        }
    }

    pub fn neg(&self, pt: &Point) -> Point {
        match *pt {
            Point::Infinity => Point::Infinity,
            Point::Affine { x, y } => Point::Affine {
                x,
                y: self.field().neg(y),
            },
        }
    }

    pub fn add(&self, p1: &Point, p2: &Point) -> Point {
        let f = self.field();
        match (*p1, *p2) {
            (Point::Infinity, q) | (q, Point::Infinity) => q,
            (Point::Affine { x: x1, y: y1 }, Point::Affine { x: x2, y: y2 }) => {
                let lambda = if x1 == x2 {
                    if f.add(y1, y2) == 0 {
                        return Point::Infinity;
                    }
                    let num = f.add(f.mul(3, f.mul(x1, x1)), self.a);
                    f.mul(num, f.inv(f.mul(2, y1)).expect("y != 0"))
                } else {
                    f.mul(f.sub(y2, y1), f.inv(f.sub(x2, x1)).expect("x1 != x2"))
                };
                let x3 = f.sub(f.sub(f.mul(lambda, lambda), x1), x2);
                let y3 = f.sub(f.mul(lambda, f.sub(x1, x3)), y1);
                Point::Affine { x: x3, y: y3 }
            }
        }
    }

    pub fn double(&self, pt: &Point) -> Point {
        self.add(pt, pt)
    }

    pub fn mul(&self, pt: &Point, k: i128) -> Point {
        let base = if k < 0 { self.neg(pt) } else { *pt };
        let mut e = k.unsigned_abs();
        let mut acc = Point::Infinity;
        let mut cur = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.add(&acc, &cur);
            }
            e >>= 1;
            if e > 0 {
                cur = self.double(&cur);
            }
        }
        acc
    }

    /// A uniformly random affine point.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let f = self.field();
        loop {
            let x = rng.gen_range(0..self.p);
            if let Some(y) = f.sqrt(self.rhs(x)) {
                let y = if rng.gen_bool(0.5) { f.neg(y) } else { y };
                return Point::Affine { x, y };
            }
        }
    }

    /// Every point, infinity first (for small fields and oracles).
    pub fn points(&self) -> Vec<Point> {
        let f = self.field();
        let mut out = vec![Point::Infinity];
        for x in 0..self.p {
            if let Some(y) = f.sqrt(self.rhs(x)) {
                out.push(Point::Affine { x, y });
                if y != 0 {
                    out.push(Point::Affine { x, y: f.neg(y) });
                }
            }
        }
        out
    }

    /// A quadratic twist y^2 = x^3 + a d^2 x + b d^3 with d the least non-residue.
    pub fn quadratic_twist(&self) -> Curve {
        let f = self.field();
        let d = (2..self.p).find(|&d| f.legendre(d) == -1).expect("odd p");
        Curve::new(
            self.p,
            f.mul(self.a, f.mul(d, d)),
            f.mul(self.b, f.pow(d, 3)),
        )
        .expect("twists are nonsingular")
    }

    /// Image under (x, y) -> (u^2 x, u^3 y), the curve (u^4 a, u^6 b).
    pub fn scaled(&self, u: u64) -> Curve {
        let f = self.field();
        Curve::new(self.p, f.mul(f.pow(u, 4), self.a), f.mul(f.pow(u, 6), self.b))
            .expect("u != 0")
    }

    pub fn map_isomorphism(&self, u: u64, pt: &Point) -> Point {
        let f = self.field();
        match *pt {
            Point::Infinity => Point::Infinity,
            Point::Affine { x, y } => Point::Affine {
                x: f.mul(f.mul(u, u), x),
                y: f.mul(f.pow(u, 3), y),
            },
        }
    }
}

/// Group order by a sweep over x with a table of quadratic residues.
pub fn count_points_naive(e: &Curve) -> u64 {
    let p = e.p as usize;
    let f = e.field();
    let mut square = vec![false; p];
    for x in 1..=(p / 2) as u64 {
        square[f.mul(x, x) as usize] = true;
    }
    let mut n = 1u64;
    for x in 0..e.p {
        let r = e.rhs(x);
        if r == 0 {
            n += 1;
        } else if square[r as usize] {
            n += 2;
        }
    }
    n
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Some m in [lo, hi] with [m]P = O, by baby-step giant-step.
fn bsgs_annihilator(e: &Curve, pt: &Point, lo: u64, hi: u64) -> Option<u64> {
    let width = hi - lo + 1;
    let s = isqrt(width) + 1;
    let mut baby = std::collections::HashMap::with_capacity(s as usize + 1);
    let mut cur = Point::Infinity;
    for j in 0..s {
        baby.entry(cur).or_insert(j);
        cur = e.add(&cur, pt);
    }
    let giant = e.mul(pt, s as i128);
    // R_i = [lo + i s]P; looking for R_i = -[j]P, i.e. [lo + i s + j]P = O.
    let mut r = e.mul(pt, lo as i128);
    let mut i = 0;
    while i * s < width {
        if let Some(&j) = baby.get(&e.neg(&r)) {
            let m = lo + i * s + j;
            if m <= hi {
                return Some(m);
            }
        }
        r = e.add(&r, &giant);
        i += 1;
    }
    None
}

/// Exact order of P from any annihilating multiple m.
fn order_from_multiple(e: &Curve, pt: &Point, m: u64) -> u64 {
    let mut order = m;
    for (q, _) in factor_integer(m as u128) {
        let q = q as u64;
        while order % q == 0 && e.mul(pt, (order / q) as i128).is_infinity() {
            order /= q;
        }
    }
    order
}

/// Group order by baby-step giant-step in the Hasse interval, pinning the
/// answer with point orders on both the curve and its quadratic twist.
pub fn count_points_bsgs(e: &Curve) -> Result<u64> {
    let p = e.p;
    let w = isqrt(4 * p);
    let (lo, hi) = (p + 1 - w, p + 1 + w);
    let twist = e.quadratic_twist();
    let mut rng = ChaCha8Rng::seed_from_u64(p ^ (e.a << 20) ^ (e.b << 40));
    let (mut l, mut l_twist) = (1u64, 1u64);
    for _ in 0..64 {
        for (curve, acc) in [(e, &mut l), (&twist, &mut l_twist)] {
            let pt = curve.random_point(&mut rng);
            let m = bsgs_annihilator(curve, &pt, lo, hi).ok_or(Error::CountAmbiguous)?;
            let ord = order_from_multiple(curve, &pt, m);
            *acc = *acc / gcd(*acc, ord) * ord;
        }
        let mut candidates =
            (lo..=hi).filter(|&n| n % l == 0 && (2 * p + 2 - n) % l_twist == 0);
        if let (Some(n), None) = (candidates.next(), candidates.next()) {
            return Ok(n);
        }
    }
    Err(Error::CountAmbiguous)
}

/// Exact group order #E(F_p).
pub fn count_points(e: &Curve) -> Result<u64> {
    if e.p < NAIVE_COUNT_LIMIT {
        Ok(count_points_naive(e))
    } else {
        count_points_bsgs(e)
    }
}

/// Frobenius trace, discriminant and conductor data of an ordinary curve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrobeniusData {
    pub t: i64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "D_pi")]
    pub d_pi: i64,
    #[serde(rename = "conductor_m")]
    pub conductor: u64,
    #[serde(rename = "D_fund")]
    pub d_fund: i64,
    /// Prime factorization of |D_pi|.
    pub factorization: Vec<(u64, u32)>,
}

/// Splits a negative discriminant as m^2 * D_fund.
pub fn conductor_split(d_pi: i64) -> Result<(u64, i64, Vec<(u64, u32)>)> {
    let abs = d_pi.unsigned_abs() as u128;
    if abs > FACTOR_CAP {
        return Err(Error::FactorCapExceeded(abs));
    }
    let factorization: Vec<(u64, u32)> = factor_integer(abs)
        .into_iter()
        .map(|(q, e)| (q as u64, e))
        .collect();
    let m0: i64 = factorization
        .iter()
        .map(|&(q, e)| (q as i64).pow(e / 2))
        .product();
    let d0 = d_pi / (m0 * m0);
    let (m, d_fund) = if d0.rem_euclid(4) == 1 {
        (m0, d0)
    } else {
        (m0 / 2, 4 * d0)
    };
    Ok((m as u64, d_fund, factorization))
}

pub fn frobenius_data(e: &Curve) -> Result<FrobeniusData> {
    let n = count_points(e)?;
    let t = e.p as i64 + 1 - n as i64;
    if t.rem_euclid(e.p as i64) == 0 {
        return Err(Error::SupersingularCurve(t));
    }
    let d_pi = t * t - 4 * e.p as i64;
    let (conductor, d_fund, factorization) = conductor_split(d_pi)?;
    Ok(FrobeniusData {
        t,
        n,
        d_pi,
        conductor,
        d_fund,
        factorization,
    })
}

/// All u with (a2, b2) = (u^4 a1, u^6 b1), ascending.
pub fn isomorphisms(e1: &Curve, e2: &Curve) -> Vec<u64> {
    if e1.p != e2.p || e1.j() != e2.j() {
        return Vec::new();
    }
    let f = e1.field();
    let mut rng = ChaCha8Rng::seed_from_u64(0x150);
    // u^k = r  <=>  u is a root of X^k - r
    let mut roots_of = |k: usize, r: u64| -> Vec<u64> {
        let mut coeffs = vec![0u64; k + 1];
        coeffs[0] = f.neg(r);
        coeffs[k] = 1;
        poly_roots(&FpPoly::new(f, coeffs), &mut rng).expect("nonzero polynomial")
    };
    let candidates = if e1.a != 0 {
        let ra = f.mul(e2.a, f.inv(e1.a).expect("a1 != 0"));
        roots_of(4, ra)
    } else {
        let rb = f.mul(e2.b, f.inv(e1.b).expect("b1 != 0"));
        roots_of(6, rb)
    };
    candidates
        .into_iter()
        .filter(|&u| u != 0 && e1.scaled(u) == *e2)
        .collect()
}

/// An F_p-isomorphism E1 -> E2 as the scaling u, smallest first.
pub fn find_isomorphism(e1: &Curve, e2: &Curve) -> Option<FpElement> {
    isomorphisms(e1, e2)
        .first()
        .map(|&u| e1.field().elem(u))
}

/// Acceptance test for the fundamental discriminant during parameter search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscriminantPolicy {
    AnyFundamental,
    PrimeDiscriminant,
    /// |D| = s * P with s squarefree and s <= 64, P a prime larger than s.
    SmallSquarefreeTimesPrime,
}

const SMALL_SQUAREFREE_MAX: u64 = 64;

impl DiscriminantPolicy {
    pub fn accepts(&self, data: &FrobeniusData) -> bool {
        if data.conductor != 1 {
            return false;
        }
        let abs = data.d_fund.unsigned_abs();
        match self {
            DiscriminantPolicy::AnyFundamental => true,
            DiscriminantPolicy::PrimeDiscriminant => is_prime(abs),
            DiscriminantPolicy::SmallSquarefreeTimesPrime => {
                let largest = data.factorization.last().map(|&(q, _)| q).unwrap_or(1);
                let s = abs / largest;
                is_prime(largest) && s <= SMALL_SQUAREFREE_MAX && s < largest
            }
        }
    }
}

impl std::str::FromStr for DiscriminantPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "any" | "AnyFundamental" => Ok(DiscriminantPolicy::AnyFundamental),
            "prime" | "PrimeDiscriminant" => Ok(DiscriminantPolicy::PrimeDiscriminant),
            "small-times-prime" | "SmallSquarefreeTimesPrime" => {
                Ok(DiscriminantPolicy::SmallSquarefreeTimesPrime)
            }
            other => Err(Error::InvalidArgument(format!("unknown policy {other}"))),
        }
    }
}

pub const MAPGEN_BUDGET: usize = 20_000;

fn random_prime<R: Rng + ?Sized>(bits: u32, rng: &mut R) -> u64 {
    loop {
        let n = rng.gen_range(1u64 << (bits - 1)..1u64 << bits) | 1;
        if n >= 5 && is_prime(n) {
            return n;
        }
    }
}

/// Random search for an ordinary curve with conductor 1 whose fundamental
/// discriminant satisfies `policy`; deterministic given the RNG state.
pub fn mapgen<R: Rng + ?Sized>(
    bits: u32,
    policy: DiscriminantPolicy,
    rng: &mut R,
) -> Result<(Curve, FrobeniusData)> {
    if !(4..=24).contains(&bits) {
        return Err(Error::UnsupportedSize(format!(
            "bits = {bits}, supported range is 4..=24"
        )));
    }
    for _ in 0..MAPGEN_BUDGET {
        let p = random_prime(bits, rng);
        let a = rng.gen_range(0..p);
        let b = rng.gen_range(0..p);
        let Ok(curve) = Curve::new(p, a, b) else {
            continue;
        };
        match frobenius_data(&curve) {
            Ok(data) if policy.accepts(&data) => return Ok((curve, data)),
            Ok(_) | Err(Error::SupersingularCurve(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SearchExhausted(MAPGEN_BUDGET))
}

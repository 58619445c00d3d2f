//! The class-group action on curves: division polynomials, Frobenius
//! eigenspace kernels, Kohel/Velu steps, ideal words and random walks.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{is_prime, poly_factor, poly_powmod, FpPoly, QuotientRing};
use crate::classgroup::{form_above, prime_eigenvalue, split_primes, QuadForm};
use crate::curve::{count_points, Curve, Point};
use crate::error::{Error, Result};

/// f_0, ..., f_n with psi_k = f_k for odd k and psi_k = y f_k for even k.
pub fn division_polys(e: &Curve, n: usize) -> Vec<FpPoly> {
    let field = e.field();
    let (a, b) = (e.a(), e.b());
    let fl = |v: u64| v % field.modulus();
    let big_f = e.rhs_poly();
    let f2 = big_f.square();
    let half = field.inv(2).expect("odd p");
    let f = &field;
    let f3 = FpPoly::new(
        field,
        vec![f.neg(f.mul(a, a)), f.mul(fl(12), b), f.mul(fl(6), a), 0, fl(3)],
    );
    let f4 = FpPoly::new(
        field,
        vec![
            f.neg(f.add(f.mul(fl(8), f.mul(b, b)), f.pow(a, 3))),
            f.neg(f.mul(fl(4), f.mul(a, b))),
            f.neg(f.mul(fl(5), f.mul(a, a))),
            f.mul(fl(20), b),
            f.mul(fl(5), a),
            0,
            1,
        ],
    )
    .scale(fl(4));
    let mut fs = vec![FpPoly::zero(field), FpPoly::one(field), FpPoly::constant(field, 2), f3, f4];
    for k in 5..=n {
        let m = k / 2;
        let next = if k % 2 == 1 {
            let left = fs[m + 2].mul(&fs[m].pow(3));
            let right = fs[m - 1].mul(&fs[m + 1].pow(3));
            if m % 2 == 0 {
                f2.mul(&left).sub(&right)
            } else {
                left.sub(&f2.mul(&right))
            }
        } else {
            let inner = fs[m + 2]
                .mul(&fs[m - 1].square())
                .sub(&fs[m - 2].mul(&fs[m + 1].square()));
            fs[m].mul(&inner).scale(half)
        };
        fs.push(next);
    }
    fs.truncate(n + 1);
    fs
}

/// The ell-division polynomial psi_ell(x) for odd ell.
pub fn division_poly(e: &Curve, ell: u64) -> Result<FpPoly> {
    check_odd_ell(e, ell)?;
    Ok(division_polys(e, ell as usize).pop().expect("nonempty"))
}

fn check_odd_ell(e: &Curve, ell: u64) -> Result<()> {
    if ell == e.p() {
        return Err(Error::EllEqualsP(ell));
    }
    if ell < 3 || !is_prime(ell) {
        return Err(Error::InvalidArgument(format!("{ell} is not an odd prime")));
    }
    Ok(())
}

/// Kernel polynomial of the subgroup of E[ell] on which Frobenius acts as mu.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelPoly {
    pub h: FpPoly,
    pub ell: u64,
    pub mu: u64,
}

/// Points written as (X(x), Y(x) * y) over F_p[x]/(g).
#[derive(Clone, Debug, PartialEq, Eq)]
enum GenericPoint {
    Infinity,
    Affine(FpPoly, FpPoly),
}

struct GenericCurve<'a> {
    ring: &'a QuotientRing,
    /// x^3 + a x + b reduced mod g.
    rhs: FpPoly,
    a: u64,
}

impl GenericCurve<'_> {
    fn inv(&self, v: &FpPoly) -> FpPoly {
        self.ring.inv(v).expect("nonzero element of a field")
    }

    fn add(&self, p1: &GenericPoint, p2: &GenericPoint) -> GenericPoint {
        let r = self.ring;
        match (p1, p2) {
            (GenericPoint::Infinity, q) | (q, GenericPoint::Infinity) => q.clone(),
            (GenericPoint::Affine(x1, y1), GenericPoint::Affine(x2, y2)) => {
                let lam = if x1 == x2 {
                    if y1.add(y2).is_zero() {
                        return GenericPoint::Infinity;
                    }
                    let num = r.mul(x1, x1).scale(3).add(&r.constant(self.a));
                    let den = r.mul(&y1.scale(2), &self.rhs);
                    r.mul(&num, &self.inv(&den))
                } else {
                    r.mul(&y2.sub(y1), &self.inv(&x2.sub(x1)))
                };
                let x3 = r.mul(&r.mul(&lam, &lam), &self.rhs).sub(x1).sub(x2);
                let y3 = r.mul(&lam, &x1.sub(&x3)).sub(y1);
                GenericPoint::Affine(x3, y3)
            }
        }
    }

    fn mul(&self, pt: &GenericPoint, k: u64) -> GenericPoint {
        let mut acc = GenericPoint::Infinity;
        let mut cur = pt.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(&acc, &cur);
            }
            k >>= 1;
            if k > 0 {
                cur = self.add(&cur, &cur);
            }
        }
        acc
    }
}

/// Checks pi(P) = [mu]P for a point P with x-coordinate a root of the
/// irreducible polynomial `g`.
pub fn frobenius_acts_as(e: &Curve, g: &FpPoly, mu: u64) -> bool {
    let ring = QuotientRing::new(g.clone()).expect("nonconstant factor");
    let p = e.p() as u128;
    let rhs = ring.reduce(&e.rhs_poly());
    let curve = GenericCurve {
        ring: &ring,
        rhs: rhs.clone(),
        a: e.a(),
    };
    let pt = GenericPoint::Affine(ring.gen(), ring.constant(1));
    let frob = GenericPoint::Affine(ring.frobenius(&ring.gen()), ring.pow(&rhs, (p - 1) / 2));
    curve.mul(&pt, mu) == frob
}

/// Kernel polynomial for the eigenvalue `mu`, given the trace `t` of E.
pub fn eigen_kernel_with_trace(e: &Curve, t: i64, ell: u64, mu: u64) -> Result<KernelPoly> {
    if ell == e.p() {
        return Err(Error::EllEqualsP(ell));
    }
    if !is_prime(ell) {
        return Err(Error::InvalidArgument(format!("{ell} is not prime")));
    }
    let roots = crate::algebra::char_poly_roots(t, e.p(), ell);
    if roots.is_empty() {
        return Err(Error::InertPrime(ell));
    }
    if !roots.contains(&(mu % ell)) {
        return Err(Error::BadEigenvalue { ell, mu });
    }
    let mu = mu % ell;
    let field = e.field();
    let x = FpPoly::x(field);
    if ell == 2 {
        // Frobenius fixes exactly one 2-torsion point in the ramified case.
        let xp = poly_powmod(&x, e.p() as u128, &e.rhs_poly())?;
        let h = e.rhs_poly().gcd(&xp.sub(&x));
        if h.deg() != 1 {
            return Err(Error::InvalidKernel(format!(
                "expected one rational 2-torsion point, found {}",
                h.deg()
            )));
        }
        return Ok(KernelPoly { h, ell, mu });
    }
    let fs = division_polys(e, ell as usize);
    let psi = fs[ell as usize].clone();
    let big_f = e.rhs_poly().rem(&psi);
    let m = mu.min(ell - mu) as usize;
    // X([m]P) = x - A/B
    let (num, den) = {
        let nn = fs[m - 1].mul(&fs[m + 1]).rem(&psi);
        let dd = fs[m].square().rem(&psi);
        if m % 2 == 1 {
            (nn.mul_mod(&big_f, &psi), dd)
        } else {
            (nn, dd.mul_mod(&big_f, &psi))
        }
    };
    let xp = poly_powmod(&x, e.p() as u128, &psi)?;
    let cond = xp.sub(&x).mul_mod(&den, &psi).add(&num).rem(&psi);
    let candidates = psi.gcd(&cond);
    let mut rng = ChaCha8Rng::seed_from_u64(e.p() ^ (ell << 32));
    let mut h = FpPoly::one(field);
    for (g, _) in poly_factor(&candidates, &mut rng)? {
        if frobenius_acts_as(e, &g, mu) {
            h = h.mul(&g);
        }
    }
    if h.deg() as u64 != (ell - 1) / 2 {
        return Err(Error::InvalidKernel(format!(
            "eigenspace for mu = {mu} mod {ell} has x-degree {}",
            h.deg()
        )));
    }
    Ok(KernelPoly { h, ell, mu })
}

pub fn eigen_kernel(e: &Curve, ell: u64, mu: u64) -> Result<KernelPoly> {
    if ell == e.p() {
        return Err(Error::EllEqualsP(ell));
    }
    let t = e.p() as i64 + 1 - count_points(e)? as i64;
    eigen_kernel_with_trace(e, t, ell, mu)
}

/// A separable isogeny of prime degree with its rational maps:
/// X = x_num / x_den and Y = y * y_num / y_den.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsogenyStep {
    pub domain: Curve,
    pub codomain: Curve,
    pub kernel: KernelPoly,
    pub x_num: FpPoly,
    pub x_den: FpPoly,
    pub y_num: FpPoly,
    pub y_den: FpPoly,
}

impl IsogenyStep {
    pub fn degree(&self) -> u64 {
        self.kernel.ell
    }

    pub fn eval(&self, pt: &Point) -> Point {
        let f = self.domain.field();
        match *pt {
            Point::Infinity => Point::Infinity,
            Point::Affine { x, y } => {
                let dx = self.x_den.eval(x);
                let dy = self.y_den.eval(x);
                if dx == 0 || dy == 0 {
                    return Point::Infinity;
                }
                let xx = f.mul(self.x_num.eval(x), f.inv(dx).expect("nonzero"));
                let yy = f.mul(y, f.mul(self.y_num.eval(x), f.inv(dy).expect("nonzero")));
                Point::Affine { x: xx, y: yy }
            }
        }
    }
}

/// Codomain and rational maps from the kernel polynomial (Kohel's formulas).
pub fn velu_step(e: &Curve, k: &KernelPoly) -> Result<IsogenyStep> {
    let field = e.field();
    let h = k.h.monic();
    let big_f = e.rhs_poly();
    let (a, b) = (e.a(), e.b());
    if k.ell == 2 {
        if h.deg() != 1 || !h.divides(&big_f) {
            return Err(Error::InvalidKernel("not a 2-torsion point".into()));
        }
        let x0 = field.neg(h.coeff(0));
        let v = field.add(field.mul(3, field.mul(x0, x0)), a);
        let w = field.mul(x0, v);
        let codomain = Curve::new(
            e.p(),
            field.sub(a, field.mul(5, v)),
            field.sub(b, field.mul(7, w)),
        )?;
        let vc = FpPoly::constant(field, v);
        return Ok(IsogenyStep {
            domain: *e,
            codomain,
            kernel: KernelPoly { h: h.clone(), ..k.clone() },
            x_num: FpPoly::x(field).mul(&h).add(&vc),
            x_den: h.clone(),
            y_num: h.square().sub(&vc),
            y_den: h.square(),
        });
    }
    check_odd_ell(e, k.ell)?;
    let d = h.deg();
    if d as u64 != (k.ell - 1) / 2 || !h.divides(&division_poly(e, k.ell)?) {
        return Err(Error::InvalidKernel(format!(
            "degree-{d} polynomial is not a kernel for ell = {}",
            k.ell
        )));
    }
    let c = |i: isize| if i < 0 { 0 } else { h.coeff(i as usize) };
    let di = d as isize;
    let e1 = field.neg(c(di - 1));
    let e2 = if d >= 2 { c(di - 2) } else { 0 };
    let e3 = if d >= 3 { field.neg(c(di - 3)) } else { 0 };
    let p1 = e1;
    let p2 = field.sub(field.mul(e1, e1), field.mul(2, e2));
    let p3 = field.add(
        field.sub(field.pow(e1, 3), field.mul(3, field.mul(e1, e2))),
        field.mul(3, e3),
    );
    let dm = d as u64 % e.p();
    let v = field.add(field.mul(6, p2), field.mul(2, field.mul(a, dm)));
    let w = field.add(
        field.add(field.mul(10, p3), field.mul(6, field.mul(a, p1))),
        field.mul(4, field.mul(b, dm)),
    );
    let codomain = Curve::new(
        e.p(),
        field.sub(a, field.mul(5, v)),
        field.sub(b, field.mul(7, w)),
    )?;

    let dh = h.derivative();
    let ddh = dh.derivative();
    let df = big_f.derivative();
    let lin = FpPoly::new(field, vec![field.neg(field.mul(2, p1)), k.ell % e.p()]);
    let x_num = lin
        .mul(&h.square())
        .sub(&df.mul(&dh).mul(&h).scale(2))
        .add(&big_f.mul(&dh.square().sub(&h.mul(&ddh))).scale(4));
    let y_num = x_num.derivative().mul(&h).sub(&x_num.mul(&dh).scale(2));
    Ok(IsogenyStep {
        domain: *e,
        codomain,
        kernel: KernelPoly { h: h.clone(), ..k.clone() },
        x_num,
        x_den: h.square(),
        y_num,
        y_den: h.pow(3),
    })
}

/// Trace of Frobenius of an ordinary curve.
pub fn trace_of(e: &Curve) -> Result<i64> {
    let t = e.p() as i64 + 1 - count_points(e)? as i64;
    if t.rem_euclid(e.p() as i64) == 0 {
        return Err(Error::SupersingularCurve(t));
    }
    Ok(t)
}

/// The isogeny for the prime (ell, sign) out of `e`, whose trace is `t`.
pub fn prime_step(e: &Curve, t: i64, ell: u64, sign: i8) -> Result<IsogenyStep> {
    let mu = prime_eigenvalue(ell, sign, t, e.p())?;
    let k = eigen_kernel_with_trace(e, t, ell, mu)?;
    velu_step(e, &k)
}

type StepKey = (Curve, u64, i8);

fn step_cache() -> &'static Mutex<HashMap<StepKey, Curve>> {
    static CACHE: OnceLock<Mutex<HashMap<StepKey, Curve>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Codomain of the (ell, sign) step; results are memoized per process.
pub fn apply_prime_with_trace(e: &Curve, t: i64, ell: u64, sign: i8) -> Result<Curve> {
    let key = (*e, ell, sign);
    if let Some(c) = step_cache().lock().expect("cache lock").get(&key) {
        return Ok(*c);
    }
    let codomain = prime_step(e, t, ell, sign)?.codomain;
    step_cache().lock().expect("cache lock").insert(key, codomain);
    Ok(codomain)
}

pub fn apply_prime(e: &Curve, ell: u64, sign: i8) -> Result<Curve> {
    if ell == e.p() {
        return Err(Error::EllEqualsP(ell));
    }
    apply_prime_with_trace(e, trace_of(e)?, ell, sign)
}

/// One letter of an ideal word: the prime (ell, pi - mu) (or its conjugate
/// when sign = -1) raised to `exp`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(u64, i8, u32)", into = "(u64, i8, u32)")]
pub struct IdealEntry {
    pub ell: u64,
    pub sign: i8,
    pub exp: u32,
}

impl IdealEntry {
    pub fn new(ell: u64, sign: i8, exp: u32) -> Self {
        IdealEntry { ell, sign, exp }
    }
}

impl From<(u64, i8, u32)> for IdealEntry {
    fn from((ell, sign, exp): (u64, i8, u32)) -> Self {
        IdealEntry { ell, sign, exp }
    }
}

impl From<IdealEntry> for (u64, i8, u32) {
    fn from(e: IdealEntry) -> Self {
        (e.ell, e.sign, e.exp)
    }
}

/// A word in prime ideals, applied left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IdealVector {
    entries: Vec<IdealEntry>,
}

impl IdealVector {
    /// Drops zero exponents and merges adjacent repeats of the same prime.
    pub fn new(entries: Vec<IdealEntry>) -> Self {
        let mut out: Vec<IdealEntry> = Vec::with_capacity(entries.len());
        for e in entries.into_iter().filter(|e| e.exp > 0) {
            match out.last_mut() {
                Some(last) if last.ell == e.ell && last.sign == e.sign => last.exp += e.exp,
                _ => out.push(e),
            }
        }
        IdealVector { entries: out }
    }

    pub fn empty() -> Self {
        IdealVector::default()
    }

    pub fn entries(&self) -> &[IdealEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of prime steps.
    pub fn len(&self) -> usize {
        self.entries.iter().map(|e| e.exp as usize).sum()
    }

    /// Signs flipped and order reversed.
    pub fn inverse(&self) -> Self {
        IdealVector::new(
            self.entries
                .iter()
                .rev()
                .map(|e| IdealEntry::new(e.ell, -e.sign, e.exp))
                .collect(),
        )
    }

    pub fn concat(&self, other: &IdealVector) -> Self {
        IdealVector::new(self.entries.iter().chain(&other.entries).copied().collect())
    }

    /// Reduces exponents of primes ramified in Z[pi] modulo 2.
    pub fn reduce_ramified(&self, t: i64, q: u64) -> Self {
        IdealVector::new(
            self.entries
                .iter()
                .map(|e| {
                    let ramified = crate::algebra::char_poly_roots(t, q, e.ell).len() == 1;
                    let exp = if ramified { e.exp % 2 } else { e.exp };
                    IdealEntry::new(e.ell, e.sign, exp)
                })
                .collect(),
        )
    }
}

/// Left-to-right fold of prime steps.
pub fn apply_ideal_vector(e: &Curve, v: &IdealVector) -> Result<Curve> {
    if v.is_empty() {
        return Ok(*e);
    }
    apply_ideal_vector_with_trace(e, trace_of(e)?, v)
}

pub fn apply_ideal_vector_with_trace(e: &Curve, t: i64, v: &IdealVector) -> Result<Curve> {
    let mut cur = *e;
    for entry in v.entries() {
        for _ in 0..entry.exp {
            cur = apply_prime_with_trace(&cur, t, entry.ell, entry.sign)?;
        }
    }
    Ok(cur)
}

/// Parameters of the random walk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    /// Exponent B in the prime bound x = (ln|D|)^B.
    pub b_exponent: f64,
    pub eps: f64,
    pub delta: f64,
    /// The absolute constant C in the walk length.
    pub c: f64,
    /// The basis always contains the split primes up to this value.
    pub floor_min: u64,
    /// Optional cap on the primes used, to keep curve steps affordable.
    pub max_prime: Option<u64>,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            b_exponent: 2.5,
            eps: 0.5,
            delta: 5.0,
            c: 3.0,
            floor_min: 11,
            max_prime: None,
        }
    }
}

impl WalkParams {
    pub fn prime_bound(&self, d: i128) -> u64 {
        let x = (-(d as f64)).ln().max(0.0).powf(self.b_exponent);
        let bound = (x.floor() as u64).max(self.floor_min);
        match self.max_prime {
            Some(cap) => bound.min(cap),
            None => bound,
        }
    }

    /// r = ceil(C (delta + ln sqrt|D|) / (eps max(1, ln ln|D|))).
    pub fn walk_length(&self, d: i128) -> usize {
        let abs = -(d as f64);
        let num = self.c * (self.delta + abs.sqrt().ln());
        let den = self.eps * abs.ln().ln().max(1.0);
        (num / den).ceil().max(0.0) as usize
    }
}

/// Odd primes up to the walk bound that split for D, minus `exclude`.
pub fn walk_basis(d: i128, params: &WalkParams, exclude: &[u64]) -> Result<Vec<u64>> {
    crate::classgroup::check_discriminant(d)?;
    let bound = params.prime_bound(d);
    let basis: Vec<u64> = (3..=bound)
        .filter(|&l| is_prime(l) && !exclude.contains(&l))
        .filter(|&l| crate::algebra::legendre(d.rem_euclid(l as i128) as i64, l) == Ok(1))
        .collect();
    if basis.is_empty() {
        return Err(Error::EmptyPrimeBasis);
    }
    Ok(basis)
}

/// A walk of `params.walk_length(d)` uniform steps over basis x {+1, -1},
/// collected into one entry per (ell, sign).
pub fn sample_walk<R: Rng + ?Sized>(d: i128, params: &WalkParams, rng: &mut R) -> Result<IdealVector> {
    sample_walk_excluding(d, params, &[], rng)
}

pub fn sample_walk_excluding<R: Rng + ?Sized>(
    d: i128,
    params: &WalkParams,
    exclude: &[u64],
    rng: &mut R,
) -> Result<IdealVector> {
    if params.eps <= 0.0 {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let basis = walk_basis(d, params, exclude)?;
    let mut counts: BTreeMap<(u64, std::cmp::Reverse<i8>), u32> = BTreeMap::new();
    for _ in 0..params.walk_length(d) {
        let ell = basis[rng.gen_range(0..basis.len())];
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        *counts.entry((ell, std::cmp::Reverse(sign))).or_default() += 1;
    }
    Ok(IdealVector::new(
        counts
            .into_iter()
            .map(|((ell, sign), exp)| IdealEntry::new(ell, sign.0, exp))
            .collect(),
    ))
}

/// Exact statistical distance to uniform of the class reached after
/// r = 0, 1, ..., r_max walk steps from the identity.
pub fn walk_distance_profile(d: i128, params: &WalkParams, exclude: &[u64], r_max: usize) -> Result<Vec<f64>> {
    let basis = walk_basis(d, params, exclude)?;
    let classes = crate::classgroup::enumerate_reduced(d)?.reduced_forms;
    let h = classes.len();
    let index = |f: &QuadForm| classes.binary_search(f).expect("reduced forms are sorted");
    let weight = 1.0 / (2 * basis.len()) as f64;
    let mut moves = Vec::with_capacity(2 * basis.len());
    for &ell in &basis {
        let g = form_above(d, ell)?;
        moves.push(g);
        moves.push(g.invert());
    }
    let mut dist = vec![0f64; h];
    dist[index(&QuadForm::identity(d)?)] = 1.0;
    let distance = |p: &[f64]| p.iter().map(|x| (x - 1.0 / h as f64).abs()).sum::<f64>() / 2.0;
    let mut out = vec![distance(&dist)];
    for _ in 0..r_max {
        let mut next = vec![0f64; h];
        for (i, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for g in &moves {
                next[index(&classes[i].compose(g)?)] += mass * weight;
            }
        }
        dist = next;
        out.push(distance(&dist));
    }
    Ok(out)
}

/// Odd split primes <= bound for the curve, excluding p.
pub fn curve_split_primes(e: &Curve, bound: u64) -> Result<Vec<u64>> {
    Ok(split_primes(bound, trace_of(e)?, e.p()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{poly_roots, PrimeField};
    use crate::classgroup::{enumerate_reduced, ideal_vector_class, prime_form, QuadForm};
    use crate::curve::{count_points_naive, find_isomorphism, isomorphisms};
    use std::collections::BTreeSet;

    fn c(p: u64, a: u64, b: u64) -> Curve {
        Curve::new(p, a, b).unwrap()
    }

    /// Oracle: nonzero ell-torsion x-coordinates over F_p by enumeration.
    fn rational_torsion_x(e: &Curve, ell: i128) -> BTreeSet<u64> {
        e.points()
            .into_iter()
            .filter(|pt| !pt.is_infinity() && e.mul(pt, ell).is_infinity())
            .filter_map(|pt| pt.x())
            .collect()
    }

    #[test]
    fn psi3_examples() {
        let e = c(11, 1, 1);
        let f11 = PrimeField::new(11).unwrap();
        assert_eq!(division_poly(&e, 3).unwrap(), FpPoly::new(f11, vec![10, 1, 6, 0, 3]));
        assert_eq!(division_poly(&e, 5).unwrap().deg(), 12);
        assert_eq!(division_poly(&e, 11), Err(Error::EllEqualsP(11)));
    }

    #[test]
    fn division_poly_roots_are_torsion() {
        for (p, a, b) in [(11, 1, 1), (17, 1, 5), (101, 3, 7), (103, 0, 5), (109, 4, 0)] {
            let e = c(p, a, b);
            for ell in [3u64, 5, 7] {
                let psi = division_poly(&e, ell).unwrap();
                assert_eq!(psi.deg() as u64, (ell * ell - 1) / 2);
                assert_eq!(psi.leading(), ell % p);
                let mut rng = ChaCha8Rng::seed_from_u64(1);
                let roots: BTreeSet<u64> = poly_roots(&psi, &mut rng).unwrap().into_iter().collect();
                let torsion = rational_torsion_x(&e, ell as i128);
                // Rational roots whose y is rational are exactly the torsion x-coordinates.
                let field = e.field();
                let with_y: BTreeSet<u64> =
                    roots.iter().copied().filter(|&x| field.sqrt(e.rhs(x)).is_some()).collect();
                assert_eq!(with_y, torsion, "{e:?} ell={ell}");
            }
        }
    }

    #[test]
    fn multiplication_formula_matches_group_law() {
        let e = c(101, 3, 7);
        let fs = division_polys(&e, 9);
        let f = e.field();
        let big_f = e.rhs_poly();
        for pt in e.points().into_iter().skip(1).take(20) {
            let Point::Affine { x, .. } = pt else { unreachable!() };
            for n in 2..8usize {
                let mut num = fs[n - 1].mul(&fs[n + 1]);
                let mut den = fs[n].square();
                if n % 2 == 1 {
                    num = num.mul(&big_f);
                } else {
                    den = den.mul(&big_f);
                }
                let expect = e.mul(&pt, n as i128);
                if den.eval(x) == 0 {
                    assert!(expect.is_infinity());
                    continue;
                }
                let xn = f.sub(x, f.mul(num.eval(x), f.inv(den.eval(x)).unwrap()));
                assert_eq!(Some(xn), expect.x());
            }
        }
    }

    #[test]
    fn eigen_kernel_examples() {
        let e = c(11, 1, 1);
        let k = eigen_kernel(&e, 7, 4).unwrap();
        assert_eq!(k.h.deg(), 3);
        assert!(k.h.is_monic());
        assert!(k.h.divides(&division_poly(&e, 7).unwrap()));
        assert_eq!(eigen_kernel(&e, 3, 1), Err(Error::InertPrime(3)));
        let k5 = eigen_kernel(&e, 5, 4).unwrap();
        assert_eq!(k5.h.deg(), 2);
        assert_eq!(eigen_kernel(&e, 7, 2), Err(Error::BadEigenvalue { ell: 7, mu: 2 }));
        assert_eq!(eigen_kernel(&e, 11, 1), Err(Error::EllEqualsP(11)));
    }

    #[test]
    fn eigenvalue_soundness_on_factors() {
        for (e, t) in [(c(11, 1, 1), -2i64), (c(17, 1, 5), 3)] {
            for ell in [5u64, 7, 13] {
                if e.p() % ell == 0 {
                    continue;
                }
                for mu in crate::algebra::char_poly_roots(t, e.p(), ell) {
                    let k = eigen_kernel(&e, ell, mu).unwrap();
                    let mut rng = ChaCha8Rng::seed_from_u64(2);
                    for (g, _) in poly_factor(&k.h, &mut rng).unwrap() {
                        assert!(frobenius_acts_as(&e, &g, mu));
                        let other = (ell - mu) % ell;
                        if other != mu {
                            assert!(!frobenius_acts_as(&e, &g, other));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn kernel_from_rational_points_oracle() {
        // When mu = 1 the kernel is made of rational points; compare Kohel's
        // codomain against Velu's sum taken directly over those points.
        let mut checked = 0;
        for p in [101u64, 103, 107, 109, 113] {
            for a in 1..6 {
                for b in 1..6 {
                    let Ok(e) = Curve::new(p, a, b) else { continue };
                    let n = count_points_naive(&e);
                    let t = p as i64 + 1 - n as i64;
                    for ell in [3u64, 5, 7] {
                        let roots = crate::algebra::char_poly_roots(t, p, ell);
                        if roots.len() != 2 || !roots.contains(&1) || n % ell != 0 {
                            continue;
                        }
                        let xs = rational_torsion_x(&e, ell as i128);
                        if xs.len() as u64 != (ell - 1) / 2 {
                            continue;
                        }
                        let f = e.field();
                        let (mut v, mut w) = (0, 0);
                        for &x in &xs {
                            let tq = f.add(f.mul(6, f.mul(x, x)), f.mul(2, a));
                            let uq = f.mul(4, e.rhs(x));
                            v = f.add(v, tq);
                            w = f.add(w, f.add(uq, f.mul(x, tq)));
                        }
                        let expect = c(p, f.sub(a, f.mul(5, v)), f.sub(b, f.mul(7, w)));
                        let step = prime_step(&e, t, ell, if prime_eigenvalue(ell, 1, t, p).unwrap() == 1 { 1 } else { -1 }).unwrap();
                        assert_eq!(step.codomain, expect);
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked >= 5, "only {checked} cases");
    }

    #[test]
    fn velu_preserves_counts_and_maps_points() {
        let e = c(11, 1, 1);
        let n = count_points_naive(&e);
        for (ell, mu) in [(5u64, 4u64), (7, 4), (7, 1)] {
            let k = eigen_kernel(&e, ell, mu).unwrap();
            let step = velu_step(&e, &k).unwrap();
            assert_eq!(count_points_naive(&step.codomain), n);
            assert_eq!(step.degree(), ell);
            for pt in e.points() {
                let img = step.eval(&pt);
                assert!(step.codomain.contains(&img));
                if let Point::Affine { x, .. } = pt {
                    if k.h.eval(x) == 0 {
                        assert!(img.is_infinity());
                    }
                }
                for q in e.points().iter().take(5) {
                    let lhs = step.eval(&e.add(&pt, q));
                    let rhs = step.codomain.add(&img, &step.eval(q));
                    assert_eq!(lhs, rhs, "homomorphism");
                }
            }
        }
    }

    #[test]
    fn velu_rejects_bad_kernel() {
        let e = c(11, 1, 1);
        let f11 = e.field();
        let bad = KernelPoly { h: FpPoly::new(f11, vec![1, 0, 0, 1]), ell: 7, mu: 4 };
        assert!(matches!(velu_step(&e, &bad), Err(Error::InvalidKernel(_))));
    }

    #[test]
    fn apply_prime_examples() {
        let e = c(11, 1, 1);
        assert_eq!(e.j(), 9);
        let e1 = apply_prime(&e, 7, 1).unwrap();
        assert_ne!(e1.j(), 9);
        let others: BTreeSet<u64> = (0..11u64)
            .flat_map(|a| (0..11u64).map(move |b| (a, b)))
            .filter_map(|(a, b)| Curve::new(11, a, b).ok())
            .filter(|x| count_points_naive(x) == 14)
            .map(|x| x.j())
            .filter(|&j| j != 9)
            .collect();
        assert_eq!(others, BTreeSet::from([e1.j()]));
        assert_eq!(apply_prime(&e1, 7, 1).unwrap().j(), 9);
        assert_eq!(apply_prime(&e1, 7, -1).unwrap().j(), 9);
        assert_eq!(apply_prime(&e, 3, 1), Err(Error::InertPrime(3)));
    }

    #[test]
    fn ideal_vector_basics() {
        let e = c(17, 1, 5);
        assert_eq!(apply_ideal_vector(&e, &IdealVector::empty()).unwrap(), e);
        let v = IdealVector::new(vec![
            IdealEntry::new(3, 1, 2),
            IdealEntry::new(5, -1, 1),
            IdealEntry::new(7, 1, 1),
        ]);
        let there = apply_ideal_vector(&e, &v).unwrap();
        assert_eq!(apply_ideal_vector(&there, &v.inverse()).unwrap().j(), e.j());
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, "[[3,1,2],[5,-1,1],[7,1,1]]");
        assert_eq!(serde_json::from_str::<IdealVector>(&json).unwrap(), v);
    }

    #[test]
    fn order_independence_exhaustive_small() {
        let e = c(17, 1, 5);
        let letters = [(3u64, 1i8), (3, -1), (5, 1), (5, -1), (7, 1), (7, -1)];
        for x in letters {
            for y in letters {
                let v1 = IdealVector::new(vec![IdealEntry::new(x.0, x.1, 1), IdealEntry::new(y.0, y.1, 1)]);
                let v2 = IdealVector::new(vec![IdealEntry::new(y.0, y.1, 1), IdealEntry::new(x.0, x.1, 1)]);
                assert_eq!(
                    apply_ideal_vector(&e, &v1).unwrap().j(),
                    apply_ideal_vector(&e, &v2).unwrap().j()
                );
            }
        }
    }

    #[test]
    fn action_is_homomorphism_d59() {
        // Curves in one class reached by words with the same class share j.
        let e = c(17, 1, 5);
        let t = trace_of(&e).unwrap();
        assert_eq!(t, 3);
        let forms = enumerate_reduced(-59).unwrap().reduced_forms;
        let mut by_class: HashMap<QuadForm, u64> = HashMap::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = WalkParams { max_prime: Some(7), ..WalkParams::default() };
        for _ in 0..100 {
            let v = sample_walk_excluding(-59, &params, &[17], &mut rng).unwrap();
            let w = sample_walk_excluding(-59, &params, &[17], &mut rng).unwrap();
            let vw = apply_ideal_vector(&apply_ideal_vector(&e, &v).unwrap(), &w).unwrap();
            assert_eq!(vw.j(), apply_ideal_vector(&e, &v.concat(&w)).unwrap().j());
            let class = ideal_vector_class(&v.concat(&w), t, 17).unwrap();
            let j = *by_class.entry(class).or_insert(vw.j());
            assert_eq!(j, vw.j());
        }
        assert_eq!(by_class.len(), forms.len());
        let js: BTreeSet<u64> = by_class.values().copied().collect();
        assert_eq!(js.len(), 3);
    }

    #[test]
    fn orbit_closure_d59() {
        let e = c(17, 1, 5);
        let mut seen = BTreeSet::from([e]);
        let mut frontier = vec![e];
        let mut js = BTreeSet::from([e.j()]);
        let basis = curve_split_primes(&e, 20).unwrap();
        assert_eq!(basis, vec![3, 5, 7, 19]);
        while let Some(cur) = frontier.pop() {
            for &ell in &basis {
                for sign in [1, -1] {
                    let next = apply_prime(&cur, ell, sign).unwrap();
                    js.insert(next.j());
                    if seen.insert(next) && seen.len() < 40 {
                        frontier.push(next);
                    }
                }
            }
        }
        assert_eq!(js.len(), 3);
    }

    #[test]
    fn step_then_conjugate_is_multiplication() {
        for (e, ells) in [(c(11, 1, 1), vec![7u64, 13]), (c(17, 1, 5), vec![3, 5, 7])] {
            let t = trace_of(&e).unwrap();
            for ell in ells {
                let phi = prime_step(&e, t, ell, 1).unwrap();
                let back = prime_step(&phi.codomain, t, ell, -1).unwrap();
                let us = isomorphisms(&back.codomain, &e);
                assert!(!us.is_empty());
                let mut rng = ChaCha8Rng::seed_from_u64(5);
                let pts: Vec<Point> = (0..20).map(|_| e.random_point(&mut rng)).collect();
                let ok = us.iter().any(|&u| {
                    pts.iter().all(|pt| {
                        let img = back.codomain.map_isomorphism(u, &back.eval(&phi.eval(pt)));
                        img == e.mul(pt, ell as i128)
                    })
                });
                assert!(ok, "ell = {ell}");
                assert!(find_isomorphism(&back.codomain, &e).is_some());
            }
        }
    }

    #[test]
    fn prime_form_class_matches_step() {
        // The class of a step agrees with the class group law on D = -59.
        let e = c(17, 1, 5);
        let t = 3;
        for ell in [3u64, 5, 7] {
            let g = prime_form(-59, ell, 1, t, 17).unwrap();
            let once = apply_prime(&e, ell, 1).unwrap();
            let thrice = apply_ideal_vector(&e, &IdealVector::new(vec![IdealEntry::new(ell, 1, 3)])).unwrap();
            assert_eq!(g.pow(3), QuadForm::identity(-59).unwrap());
            assert_eq!(thrice.j(), e.j());
            assert_ne!(once.j(), e.j());
        }
    }

    #[test]
    fn walk_examples() {
        let params = WalkParams::default();
        let basis = walk_basis(-40, &params, &[]).unwrap();
        assert!(basis.contains(&7));
        assert!(!basis.contains(&3));
        assert!(!basis.contains(&5));
        let b59 = walk_basis(-59, &params, &[]).unwrap();
        assert_eq!(b59, vec![3, 5, 7, 17, 19, 29]);
        assert_eq!(params.walk_length(-59), 31);
        let mut last = 0;
        for delta in [0.0, 1.0, 2.5, 5.0, 10.0, 40.0] {
            let r = WalkParams { delta, ..params }.walk_length(-59);
            assert!(r >= last);
            last = r;
        }
        let run = |seed| {
            sample_walk(-59, &params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
        };
        assert_eq!(run(3), run(3));
        assert_eq!(run(3).len(), 31);
        let capped = WalkParams { max_prime: Some(2), floor_min: 2, ..params };
        assert_eq!(walk_basis(-59, &capped, &[]), Err(Error::EmptyPrimeBasis));
    }

    #[test]
    fn two_isogeny_ramified() {
        let e = c(11, 1, 1);
        let k = eigen_kernel(&e, 2, 1).unwrap();
        let step = velu_step(&e, &k).unwrap();
        assert_eq!(count_points_naive(&step.codomain), 14);
        for pt in e.points() {
            assert!(step.codomain.contains(&step.eval(&pt)));
        }
        // (2, pi - 1) has class (2,0,5) for D = -40.
        assert_ne!(step.codomain.j(), 9);
        assert_eq!(step.codomain.j(), apply_prime(&e, 7, 1).unwrap().j());
    }

    #[test]
    fn distance_profile_d59() {
        let params = WalkParams::default();
        let r = params.walk_length(-59);
        let prof = walk_distance_profile(-59, &params, &[], r).unwrap();
        assert_eq!(prof.len(), r + 1);
        assert!((prof[0] - 2.0 / 3.0).abs() < 1e-12);
        // 12 moves: both primes above 17 are principal, the other ten split
        // five and five over the two nontrivial classes, so the chain on
        // Z/3 has eigenvalue 2/12 - 5/12 and distance (2/3)|lambda|^r
        let lambda: f64 = (2.0 - 5.0) / 12.0;
        for (k, d) in prof.iter().enumerate() {
            assert!((d - 2.0 / 3.0 * lambda.abs().powi(k as i32)).abs() < 1e-12, "r = {k}");
        }
        assert!(prof[r] <= 0.01);
    }
}

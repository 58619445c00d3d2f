//! Explicit isomorphisms E x E' -> E/K1 x E/K2 for coprime subgroups, and the
//! class criterion for isomorphism of products of curves.

use std::collections::HashSet;

use rand::Rng;
use serde_json::{json, Value};

use crate::classgroup::{gcd_i128, prime_eigenvalue, prime_form, xgcd_i128, QuadForm};
use crate::curve::{isomorphisms, Curve, Point};
use crate::error::{Error, Result};
use crate::isogeny::{
    eigen_kernel_with_trace, prime_step, trace_of, velu_step, IdealEntry, IdealVector, IsogenyStep, KernelPoly,
};

/// A finite subgroup of E given by an ideal word or by the kernel
/// polynomial of a single prime-degree step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubgroupDescriptor {
    Word(IdealVector),
    Kernel(KernelPoly),
}

impl SubgroupDescriptor {
    /// The subgroup order, i.e. the norm of the ideal.
    pub fn order(&self) -> u64 {
        match self {
            SubgroupDescriptor::Word(w) => w.entries().iter().map(|e| e.ell.pow(e.exp)).product(),
            SubgroupDescriptor::Kernel(k) => k.ell,
        }
    }

    /// The equivalent ideal word; a kernel must be a Frobenius eigenspace.
    pub fn word(&self, e: &Curve, t: i64) -> Result<IdealVector> {
        match self {
            SubgroupDescriptor::Word(w) => Ok(w.clone()),
            SubgroupDescriptor::Kernel(k) => {
                for sign in [1i8, -1] {
                    if prime_eigenvalue(k.ell, sign, t, e.p())? == k.mu % k.ell {
                        let expect = eigen_kernel_with_trace(e, t, k.ell, k.mu)?;
                        if expect.h != k.h.monic() {
                            return Err(Error::InvalidKernel("not the eigenspace of its mu".into()));
                        }
                        return Ok(IdealVector::new(vec![IdealEntry::new(k.ell, sign, 1)]));
                    }
                }
                Err(Error::BadEigenvalue { ell: k.ell, mu: k.mu })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Piece {
    Step(IsogenyStep),
    /// (x, y) -> (u^2 x, u^3 y) out of `from`.
    Iso { from: Curve, u: u64 },
}

impl Piece {
    fn codomain(&self) -> Curve {
        match self {
            Piece::Step(s) => s.codomain,
            Piece::Iso { from, u } => from.scaled(*u),
        }
    }

    fn eval(&self, pt: &Point) -> Point {
        match self {
            Piece::Step(s) => s.eval(pt),
            Piece::Iso { from, u } => from.map_isomorphism(*u, pt),
        }
    }
}

/// A composition of prime-degree steps and isomorphisms, kept symbolic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Isogeny {
    domain: Curve,
    pieces: Vec<Piece>,
}

impl Isogeny {
    pub fn identity(e: &Curve) -> Self {
        Isogeny {
            domain: *e,
            pieces: Vec::new(),
        }
    }

    /// The chain of steps for an ideal word out of `e`.
    pub fn from_word(e: &Curve, t: i64, w: &IdealVector) -> Result<Self> {
        let mut chain = Isogeny::identity(e);
        for entry in w.entries() {
            for _ in 0..entry.exp {
                let step = prime_step(&chain.codomain(), t, entry.ell, entry.sign)?;
                chain.pieces.push(Piece::Step(step));
            }
        }
        Ok(chain)
    }

    pub fn domain(&self) -> Curve {
        self.domain
    }

    pub fn codomain(&self) -> Curve {
        self.pieces.last().map_or(self.domain, Piece::codomain)
    }

    pub fn degree(&self) -> u64 {
        self.pieces
            .iter()
            .map(|p| match p {
                Piece::Step(s) => s.degree(),
                Piece::Iso { .. } => 1,
            })
            .product()
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn eval(&self, pt: &Point) -> Point {
        self.pieces.iter().fold(*pt, |acc, p| p.eval(&acc))
    }

    pub fn then_iso(mut self, u: u64) -> Self {
        if u != 1 {
            let from = self.codomain();
            self.pieces.push(Piece::Iso { from, u });
        }
        self
    }

    /// The dual chain, each step replaced by its normalized dual.
    pub fn dual(&self, t: i64) -> Result<Self> {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for piece in self.pieces.iter().rev() {
            pieces.push(match piece {
                Piece::Step(s) => Piece::Step(dual_with_trace(s, t)?),
                Piece::Iso { from, u } => {
                    let f = from.field();
                    Piece::Iso {
                        from: from.scaled(*u),
                        u: f.inv(*u).expect("u != 0"),
                    }
                }
            });
        }
        Ok(Isogeny {
            domain: self.codomain(),
            pieces,
        })
    }

    pub fn to_json(&self) -> Value {
        let pieces: Vec<Value> = self
            .pieces
            .iter()
            .map(|p| match p {
                Piece::Step(s) => json!({
                    "step": {"ell": s.degree(), "mu": s.kernel.mu, "domain": s.domain, "codomain": s.codomain}
                }),
                Piece::Iso { from, u } => json!({"iso": {"from": from, "u": u}}),
            })
            .collect();
        json!({
            "domain": self.domain,
            "codomain": self.codomain(),
            "degree": self.degree(),
            "pieces": pieces,
        })
    }
}

const DUAL_SAMPLES: usize = 20;

/// Sample points used for pointwise normalization, fixed per curve.
fn sample_points(e: &Curve, n: usize) -> Vec<Point> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(e.p() ^ e.a() << 20 ^ e.b() << 40);
    (0..n).map(|_| e.random_point(&mut rng)).collect()
}

/// Composes an isomorphism by u into the rational maps of a step.
fn fold_iso(step: &IsogenyStep, u: u64) -> IsogenyStep {
    let f = step.domain.field();
    IsogenyStep {
        codomain: step.codomain.scaled(u),
        x_num: step.x_num.scale(f.pow(u, 2)),
        y_num: step.y_num.scale(f.pow(u, 3)),
        ..step.clone()
    }
}

fn dual_with_trace(step: &IsogenyStep, t: i64) -> Result<IsogenyStep> {
    let ell = step.degree();
    let mu_bar = (t - step.kernel.mu as i64).rem_euclid(ell as i64) as u64;
    let back = velu_step(&step.codomain, &eigen_kernel_with_trace(&step.codomain, t, ell, mu_bar)?)?;
    let samples = sample_points(&step.domain, DUAL_SAMPLES);
    for u in isomorphisms(&back.codomain, &step.domain) {
        let candidate = fold_iso(&back, u);
        if samples
            .iter()
            .all(|pt| candidate.eval(&step.eval(pt)) == step.domain.mul(pt, ell as i128))
        {
            return Ok(candidate);
        }
    }
    Err(Error::DualAmbiguous)
}

/// The dual of a prime-degree step: the complementary eigenspace step out
/// of the codomain, followed by the isomorphism making it compose to [ell].
pub fn dual_isogeny(step: &IsogenyStep) -> Result<IsogenyStep> {
    dual_with_trace(step, trace_of(&step.domain)?)
}

/// An integer multiple of an isogeny.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixEntry {
    pub mult: i64,
    pub map: Isogeny,
}

impl MatrixEntry {
    fn new(mult: i64, map: Isogeny) -> Self {
        MatrixEntry { mult, map }
    }

    pub fn eval(&self, pt: &Point) -> Point {
        self.map.codomain().mul(&self.map.eval(pt), self.mult as i128)
    }

    fn to_json(&self) -> Value {
        json!({"mult": self.mult, "map": self.map.to_json()})
    }
}

/// A 2x2 matrix of morphisms from domain[0] x domain[1] to codomain[0] x codomain[1].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsogenyMatrix {
    pub rows: [[MatrixEntry; 2]; 2],
}

impl IsogenyMatrix {
    pub fn domains(&self) -> [Curve; 2] {
        [self.rows[0][0].map.domain(), self.rows[0][1].map.domain()]
    }

    pub fn codomains(&self) -> [Curve; 2] {
        [self.rows[0][0].map.codomain(), self.rows[1][0].map.codomain()]
    }

    pub fn apply(&self, pts: &[Point; 2]) -> [Point; 2] {
        let row = |r: &[MatrixEntry; 2]| {
            let target = r[0].map.codomain();
            target.add(&r[0].eval(&pts[0]), &r[1].eval(&pts[1]))
        };
        [row(&self.rows[0]), row(&self.rows[1])]
    }

    fn to_json(&self) -> Value {
        let rows: Vec<Vec<Value>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(MatrixEntry::to_json).collect())
            .collect();
        json!(rows)
    }
}

/// f : E x E12 -> E1 x E2 and its inverse g, with a m1 + b m2 = 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsogenyMatrixPair {
    pub m1: u64,
    pub m2: u64,
    pub a: i64,
    pub b: i64,
    pub f: IsogenyMatrix,
    pub g: IsogenyMatrix,
}

impl IsogenyMatrixPair {
    pub fn to_json(&self) -> Value {
        json!({
            "m1": self.m1,
            "m2": self.m2,
            "a": self.a,
            "b": self.b,
            "f": self.f.to_json(),
            "g": self.g.to_json(),
        })
    }
}

/// Finds u with u o psi2 o phi2 = psi1 o phi1 on sample points of E.
fn align(e: &Curve, lhs: &Isogeny, rhs_first: &Isogeny, rhs_second: Isogeny) -> Result<Isogeny> {
    let samples = sample_points(e, DUAL_SAMPLES);
    let want: Vec<Point> = samples.iter().map(|p| lhs.eval(p)).collect();
    for u in isomorphisms(&rhs_second.codomain(), &lhs.codomain()) {
        let candidate = rhs_second.clone().then_iso(u);
        if samples
            .iter()
            .zip(&want)
            .all(|(p, w)| candidate.eval(&rhs_first.eval(p)) == *w)
        {
            return Ok(candidate);
        }
    }
    Err(Error::Mismatch("the two paths around the square do not agree".into()))
}

fn compose(first: &Isogeny, second: &Isogeny) -> Isogeny {
    let mut pieces = first.pieces.clone();
    pieces.extend(second.pieces.iter().cloned());
    Isogeny {
        domain: first.domain,
        pieces,
    }
}

/// Builds Mat(f) = [[phi1, psi1^], [-b phi2, a psi2^]] and
/// Mat(g) = [[a phi1^, -phi2^], [b psi1, psi2]].
pub fn build_product_isomorphism(
    e: &Curve,
    k1: &SubgroupDescriptor,
    k2: &SubgroupDescriptor,
) -> Result<IsogenyMatrixPair> {
    let (m1, m2) = (k1.order(), k2.order());
    if gcd_i128(m1 as i128, m2 as i128) != 1 {
        return Err(Error::NotCoprime(m1, m2));
    }
    for m in [m1, m2] {
        if m % e.p() == 0 {
            return Err(Error::EllEqualsP(e.p()));
        }
    }
    let t = trace_of(e)?;
    let w1 = k1.word(e, t)?;
    let w2 = k2.word(e, t)?;
    let phi1 = Isogeny::from_word(e, t, &w1)?;
    let phi2 = Isogeny::from_word(e, t, &w2)?;
    let psi1 = Isogeny::from_word(&phi1.codomain(), t, &w2)?;
    let psi2_raw = Isogeny::from_word(&phi2.codomain(), t, &w1)?;
    let psi2 = align(e, &compose(&phi1, &psi1), &phi2, psi2_raw)?;

    let (x, _, _) = xgcd_i128(m1 as i128, m2 as i128);
    let a = (x - 1).rem_euclid(m2 as i128) + 1;
    let b = (1 - a * m1 as i128) / m2 as i128;
    let (a, b) = (a as i64, b as i64);

    let (phi1_d, phi2_d) = (phi1.dual(t)?, phi2.dual(t)?);
    let (psi1_d, psi2_d) = (psi1.dual(t)?, psi2.dual(t)?);
    let f = IsogenyMatrix {
        rows: [
            [MatrixEntry::new(1, phi1), MatrixEntry::new(1, psi1_d)],
            [MatrixEntry::new(-b, phi2), MatrixEntry::new(a, psi2_d)],
        ],
    };
    let g = IsogenyMatrix {
        rows: [
            [MatrixEntry::new(a, phi1_d), MatrixEntry::new(-1, phi2_d)],
            [MatrixEntry::new(b, psi1), MatrixEntry::new(1, psi2)],
        ],
    };
    Ok(IsogenyMatrixPair { m1, m2, a, b, f, g })
}

/// Outcome of a pointwise check; `vacuous` is set when no points were tried.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub ok: bool,
    pub vacuous: bool,
}

/// Evaluates g o f and f o g on random points of both product surfaces.
pub fn verify_matrix_identity<R: Rng + ?Sized>(pair: &IsogenyMatrixPair, samples: usize, rng: &mut R) -> Verdict {
    let [e, e12] = pair.f.domains();
    let [e1, e2] = pair.f.codomains();
    for _ in 0..samples {
        let src = [e.random_point(rng), e12.random_point(rng)];
        if pair.g.apply(&pair.f.apply(&src)) != src {
            return Verdict { ok: false, vacuous: false };
        }
        let src = [e1.random_point(rng), e2.random_point(rng)];
        if pair.f.apply(&pair.g.apply(&src)) != src {
            return Verdict { ok: false, vacuous: false };
        }
    }
    Verdict {
        ok: true,
        vacuous: samples == 0,
    }
}

/// The n-fold statement by induction: (E; K1, K2), then (E; K1K2, K3), and so on.
pub fn verify_iterated<R: Rng + ?Sized>(
    e: &Curve,
    words: &[IdealVector],
    samples: usize,
    rng: &mut R,
) -> Result<bool> {
    let Some((first, rest)) = words.split_first() else {
        return Ok(true);
    };
    let mut acc = first.clone();
    for w in rest {
        let pair = build_product_isomorphism(
            e,
            &SubgroupDescriptor::Word(acc.clone()),
            &SubgroupDescriptor::Word(w.clone()),
        )?;
        if !verify_matrix_identity(&pair, samples, rng).ok {
            return Ok(false);
        }
        acc = acc.concat(w);
    }
    Ok(true)
}

const POOL_LIMIT: u64 = 10_000;

/// One word per class with pairwise coprime norms: each nontrivial class is
/// represented by a single unused prime whose prime form lies in it.
pub fn coprime_representatives(classes: &[QuadForm], t: i64, q: u64) -> Result<Vec<IdealVector>> {
    let d = t as i128 * t as i128 - 4 * q as i128;
    let mut pool: Vec<(u64, Vec<i8>)> = Vec::new();
    if t.rem_euclid(2) == 0 {
        pool.push((2, vec![1]));
    }
    for ell in (3..=POOL_LIMIT).filter(|&l| crate::algebra::is_prime(l) && q % l != 0) {
        if crate::algebra::char_poly_roots(t, q, ell).len() == 2 {
            pool.push((ell, vec![1, -1]));
        }
    }
    let mut used = HashSet::new();
    let mut out = Vec::with_capacity(classes.len());
    for class in classes {
        if class.discriminant() != d {
            return Err(Error::DiscriminantMismatch(class.discriminant(), d));
        }
        let target = class.reduce();
        if target.is_identity() {
            out.push(IdealVector::empty());
            continue;
        }
        let mut found = None;
        'search: for (ell, signs) in &pool {
            if used.contains(ell) {
                continue;
            }
            for &sign in signs {
                if prime_form(d, *ell, sign, t, q)? == target {
                    found = Some((*ell, sign));
                    break 'search;
                }
            }
        }
        let (ell, sign) = found.ok_or(Error::PoolExhausted)?;
        used.insert(ell);
        out.push(IdealVector::new(vec![IdealEntry::new(ell, sign, 1)]));
    }
    Ok(out)
}

/// Whether E_1 x ... x E_n and E'_1 x ... x E'_n with the given classes are
/// isomorphic: the products of the classes must agree.
pub fn check_class_condition(classes1: &[QuadForm], classes2: &[QuadForm]) -> Result<bool> {
    if classes1.len() != classes2.len() {
        return Err(Error::Mismatch(format!(
            "tuples of length {} and {}",
            classes1.len(),
            classes2.len()
        )));
    }
    let Some(first) = classes1.first().or(classes2.first()) else {
        return Ok(true);
    };
    let d = first.discriminant();
    if let Some(bad) = classes1.iter().chain(classes2).find(|c| c.discriminant() != d) {
        return Err(Error::Mismatch(format!(
            "discriminants {d} and {}",
            bad.discriminant()
        )));
    }
    let product = |cs: &[QuadForm]| -> Result<QuadForm> {
        cs.iter()
            .try_fold(QuadForm::identity(d)?, |acc, c| acc.compose(c))
    };
    Ok(product(classes1)? == product(classes2)?)
}

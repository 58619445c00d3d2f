//! Protocols over an invariant map: n-party key exchange, unique
//! signatures and a bit-fixing constrained PRF.
//!
//! Group elements are carried as ideal words and only ever act on curves;
//! the class group itself is touched by the key authority in `prf_constrain`
//! and by the oracle.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classgroup::{decompose, generates, ideal_vector_class, QuadForm};
use crate::curve::{mapgen, Curve, DiscriminantPolicy};
use crate::error::{Error, Result};
use crate::invariantmap::{build_orbit_table_auto, invariant_e_n, solve_isogeny, InvariantValue, IsogenyTable};
use crate::isogeny::{apply_ideal_vector_with_trace, sample_walk_excluding, walk_basis, IdealVector, WalkParams};

/// Largest walk prime used by default in the protocols.
pub const DEFAULT_PROTOCOL_PRIME_CAP: u64 = 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SecurityLevel {
    Toy,
    Small,
}

impl SecurityLevel {
    /// Bit size of p: toy = 12, small = 20.
    pub fn bits(&self) -> u32 {
        match self {
            SecurityLevel::Toy => 12,
            SecurityLevel::Small => 20,
        }
    }
}

impl std::str::FromStr for SecurityLevel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy" => Ok(SecurityLevel::Toy),
            "small" => Ok(SecurityLevel::Small),
            other => Err(Error::UnsupportedSize(format!("security level {other}"))),
        }
    }
}

/// Public parameters: the base curve x = E0, its orbit table (the invariant
/// map handle) and the walk used to sample group elements.
#[derive(Clone, Debug)]
pub struct PublicParams {
    pub lambda: Option<SecurityLevel>,
    pub walk: WalkParams,
    walk_basis: Vec<u64>,
    table: IsogenyTable,
}

impl PublicParams {
    /// Parameters over a given ordinary curve with conductor 1. When the
    /// prime cap leaves a basis that does not generate the class group, the
    /// cap is raised until it does.
    pub fn from_curve(base: &Curve, walk: WalkParams) -> Result<Self> {
        let table = build_orbit_table_auto(base, 11)?;
        let (d, t, q) = (table.d(), table.trace(), table.q());
        let mut walk = walk;
        loop {
            let basis = walk_basis(d, &walk, &[q]);
            if let Ok(basis) = &basis {
                if generates(basis, t, q)? {
                    return Ok(PublicParams {
                        lambda: None,
                        walk,
                        walk_basis: basis.clone(),
                        table,
                    });
                }
            }
            match walk.max_prime {
                Some(cap) if cap < 1 << 16 => walk.max_prime = Some(cap * 2),
                _ => {
                    return Err(match basis {
                        Err(e) => e,
                        Ok(b) => Error::NotGenerated {
                            reached: crate::classgroup::cayley_tree(&b, t, q)?.len(),
                            expected: table.class_number(),
                        },
                    })
                }
            }
        }
    }

    pub fn x(&self) -> Curve {
        *self.table.base()
    }

    pub fn d(&self) -> i128 {
        self.table.d()
    }

    pub fn trace(&self) -> i64 {
        self.table.trace()
    }

    pub fn table(&self) -> &IsogenyTable {
        &self.table
    }

    pub fn walk_basis(&self) -> &[u64] {
        &self.walk_basis
    }

    /// A random group element as a walk word.
    pub fn sample_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<IdealVector> {
        sample_walk_excluding(self.d(), &self.walk, &[self.table.q()], rng)
    }

    /// g * E by curve steps.
    pub fn act(&self, g: &IdealVector, e: &Curve) -> Result<Curve> {
        apply_ideal_vector_with_trace(e, self.trace(), g)
    }

    /// The class of a word (key-authority and test use only).
    pub fn class_of_word(&self, g: &IdealVector) -> Result<QuadForm> {
        ideal_vector_class(g, self.trace(), self.table.q())
    }

    fn e_n(&self, curves: &[Curve]) -> Result<InvariantValue> {
        invariant_e_n(&self.table, curves)
    }
}

/// Runs MapGen at the level's bit size, takes x = E0 and builds the table.
pub fn nike_setup<R: Rng + ?Sized>(lambda: SecurityLevel, rng: &mut R) -> Result<PublicParams> {
    let (base, _) = mapgen(lambda.bits(), DiscriminantPolicy::AnyFundamental, rng)?;
    let walk = WalkParams {
        max_prime: Some(DEFAULT_PROTOCOL_PRIME_CAP),
        ..WalkParams::default()
    };
    let mut pp = PublicParams::from_curve(&base, walk)?;
    pp.lambda = Some(lambda);
    Ok(pp)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartySecret {
    pub secret: IdealVector,
}

/// One row of the public bulletin board.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardEntry {
    pub party: usize,
    pub share: Curve,
}

pub fn nike_publish<R: Rng + ?Sized>(pp: &PublicParams, rng: &mut R) -> Result<(PartySecret, Curve)> {
    let g = pp.sample_element(rng)?;
    let share = pp.act(&g, &pp.x())?;
    Ok((PartySecret { secret: g }, share))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedKey {
    pub value: InvariantValue,
    /// SHA-256 of the value's canonical encoding, hex.
    pub key: String,
}

impl DerivedKey {
    fn from_value(value: InvariantValue) -> Self {
        DerivedKey {
            value,
            key: crate::invariantmap::hex(&value.hash()),
        }
    }
}

/// Party i's view: e_{n-1} over all shares but x_i, with g_i applied to the
/// share of the smallest other index.
pub fn nike_derive(pp: &PublicParams, i: usize, secret: &PartySecret, shares: &[Curve]) -> Result<DerivedKey> {
    let n = shares.len();
    if n < 2 {
        return Err(Error::InvalidArgument("key exchange needs at least two parties".into()));
    }
    if i >= n {
        return Err(Error::InvalidArgument(format!("party {i} out of range for {n} shares")));
    }
    let j = if i == 0 { 1 } else { 0 };
    let mut curves = Vec::with_capacity(n - 1);
    for (k, share) in shares.iter().enumerate() {
        if k == i {
            continue;
        }
        curves.push(if k == j { pp.act(&secret.secret, share)? } else { *share });
    }
    Ok(DerivedKey::from_value(pp.e_n(&curves)?))
}

/// What anyone holding the oracle can do without a secret: read every
/// share's class off the table and multiply.
pub fn nike_oracle_attack(pp: &PublicParams, shares: &[Curve]) -> Result<DerivedKey> {
    let table = pp.table();
    let mut acc = QuadForm::identity(pp.d())?;
    for share in shares {
        acc = acc.compose(&solve_isogeny(table, share)?)?;
    }
    let x_class = solve_isogeny(table, &pp.x())?;
    acc = acc.compose(&x_class.invert())?;
    Ok(DerivedKey::from_value(InvariantValue::new(&acc)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigPublic {
    pub x: Curve,
    /// y[i][b] = g_{i,b} * x
    pub y: Vec<[Curve; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigKeys {
    pub secrets: Vec<[IdealVector; 2]>,
    pub publics: SigPublic,
}

pub fn sig_keygen<R: Rng + ?Sized>(pp: &PublicParams, n: usize, rng: &mut R) -> Result<SigKeys> {
    if n == 0 {
        return Err(Error::InvalidArgument("message length must be positive".into()));
    }
    let x = pp.x();
    let x_class = solve_isogeny(pp.table(), &x)?;
    let mut secrets = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let g0 = pp.sample_element(rng)?;
        let g1 = pp.sample_element(rng)?;
        let y0 = pp.act(&g0, &x)?;
        let y1 = pp.act(&g1, &x)?;
        for (g, yy) in [(&g0, &y0), (&g1, &y1)] {
            let expect = pp.class_of_word(g)?.compose(&x_class)?;
            if solve_isogeny(pp.table(), yy)? != expect {
                return Err(Error::Mismatch("public key does not match its secret".into()));
            }
        }
        secrets.push([g0, g1]);
        y.push([y0, y1]);
    }
    Ok(SigKeys {
        secrets,
        publics: SigPublic { x, y },
    })
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::MessageLength { got, expected });
    }
    Ok(())
}

/// sigma = (prod_i g_{i,m_i}) * x
pub fn sig_sign(pp: &PublicParams, keys: &SigKeys, m: &[bool]) -> Result<Curve> {
    check_len(m.len(), keys.secrets.len())?;
    let word = m
        .iter()
        .zip(&keys.secrets)
        .fold(IdealVector::empty(), |acc, (&bit, g)| acc.concat(&g[bit as usize]));
    pp.act(&word, &keys.publics.x)
}

/// Checks e_n(sigma, x, ..., x) = e_n(y_{1,m_1}, ..., y_{n,m_n}).
pub fn sig_verify(pp: &PublicParams, publics: &SigPublic, m: &[bool], sigma: &Curve) -> Result<bool> {
    check_len(m.len(), publics.y.len())?;
    let mut lhs = vec![*sigma];
    lhs.extend(std::iter::repeat_n(publics.x, m.len() - 1));
    let rhs: Vec<Curve> = m.iter().zip(&publics.y).map(|(&b, y)| y[b as usize]).collect();
    match pp.e_n(&lhs) {
        Ok(v) => Ok(v == pp.e_n(&rhs)?),
        Err(Error::NotInIsogenyClass(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrfKey {
    pub alpha: IdealVector,
    pub d: Vec<[IdealVector; 2]>,
}

impl PrfKey {
    pub fn n(&self) -> usize {
        self.d.len()
    }
}

pub fn prf_setup<R: Rng + ?Sized>(pp: &PublicParams, n: usize, rng: &mut R) -> Result<PrfKey> {
    if n == 0 {
        return Err(Error::InvalidArgument("domain size must be positive".into()));
    }
    let alpha = pp.sample_element(rng)?;
    let mut d = Vec::with_capacity(n);
    for _ in 0..n {
        d.push([pp.sample_element(rng)?, pp.sample_element(rng)?]);
    }
    Ok(PrfKey { alpha, d })
}

/// F(k, a) = e_n((alpha prod d_{i,a_i}) * x, x, ..., x)
pub fn prf_eval(pp: &PublicParams, k: &PrfKey, a: &[bool]) -> Result<InvariantValue> {
    check_len(a.len(), k.n())?;
    let word = a
        .iter()
        .zip(&k.d)
        .fold(k.alpha.clone(), |acc, (&bit, d)| acc.concat(&d[bit as usize]));
    let mut curves = vec![pp.act(&word, &pp.x())?];
    curves.extend(std::iter::repeat_n(pp.x(), a.len() - 1));
    pp.e_n(&curves)
}

/// Key for the inputs matching `v` on its support; holds curves only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstrainedKey {
    pub v: Vec<Option<bool>>,
    /// D_{i,b} = d_{i,b} * x for i outside the support.
    pub d_curves: Vec<Option<[Curve; 2]>>,
    /// h_i = g_i * x for i in the support.
    pub h: Vec<Option<Curve>>,
}

pub fn prf_constrain<R: Rng + ?Sized>(
    pp: &PublicParams,
    k: &PrfKey,
    v: &[Option<bool>],
    rng: &mut R,
) -> Result<ConstrainedKey> {
    check_len(v.len(), k.n())?;
    let support: Vec<usize> = (0..v.len()).filter(|&i| v[i].is_some()).collect();
    let Some(&i0) = support.first() else {
        return Err(Error::EmptyConstraint);
    };
    let x = pp.x();
    let mut d_curves = vec![None; v.len()];
    let mut h = vec![None; v.len()];
    for i in 0..v.len() {
        if v[i].is_none() {
            d_curves[i] = Some([pp.act(&k.d[i][0], &x)?, pp.act(&k.d[i][1], &x)?]);
        }
    }
    let mut target = pp.class_of_word(&k.alpha)?;
    for &i in &support {
        let bit = v[i].expect("in support") as usize;
        target = target.compose(&pp.class_of_word(&k.d[i][bit])?)?;
    }
    for &i in &support[1..] {
        let g = pp.sample_element(rng)?;
        target = target.compose(&pp.class_of_word(&g)?.invert())?;
        h[i] = Some(pp.act(&g, &x)?);
    }
    let g0 = decompose(&target, pp.walk_basis(), pp.trace(), pp.table().q())?;
    h[i0] = Some(pp.act(&g0, &x)?);
    Ok(ConstrainedKey {
        v: v.to_vec(),
        d_curves,
        h,
    })
}

/// e_n(C_1, ..., C_n) on matching inputs, `None` (the symbol for "not
/// allowed") elsewhere.
pub fn prf_eval_constrained(pp: &PublicParams, ck: &ConstrainedKey, a: &[bool]) -> Result<Option<InvariantValue>> {
    check_len(a.len(), ck.v.len())?;
    if a.iter().zip(&ck.v).any(|(&bit, fixed)| fixed.is_some_and(|f| f != bit)) {
        return Ok(None);
    }
    let mut curves = Vec::with_capacity(a.len());
    for (i, &bit) in a.iter().enumerate() {
        curves.push(match (&ck.h[i], &ck.d_curves[i]) {
            (Some(hi), _) => *hi,
            (None, Some(d)) => d[bit as usize],
            (None, None) => return Err(Error::Mismatch(format!("constrained key has no entry {i}"))),
        });
    }
    pp.e_n(&curves).map(Some)
}

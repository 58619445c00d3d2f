//! The invariant map e_n realized by an orbit-table oracle: every curve in
//! the isogeny class is labeled by its ideal class relative to a base curve.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classgroup::{
    class_to_module, enumerate_reduced, prime_form, split_primes, FrobeniusMatrix, QuadForm,
};
use crate::curve::{count_points, frobenius_data, Curve};
use crate::error::{Error, Result};
use crate::isogeny::apply_prime_with_trace;

/// Default cap on the class number for orbit tables.
pub const DEFAULT_CLASS_CAP: usize = 100_000;

/// An element of the target set S: a reduced form with its canonical bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawValue", into = "RawValue")]
pub struct InvariantValue {
    form: QuadForm,
}

#[derive(Serialize, Deserialize)]
struct RawValue {
    form: QuadForm,
    encoding: String,
}

impl TryFrom<RawValue> for InvariantValue {
    type Error = Error;
    fn try_from(raw: RawValue) -> Result<Self> {
        let v = InvariantValue::new(&raw.form);
        if v.form != raw.form || v.encoding_hex() != raw.encoding {
            return Err(Error::InvalidForm("encoding does not match the reduced form".into()));
        }
        Ok(v)
    }
}

impl From<InvariantValue> for RawValue {
    fn from(v: InvariantValue) -> Self {
        RawValue {
            form: v.form,
            encoding: v.encoding_hex(),
        }
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl InvariantValue {
    pub fn new(form: &QuadForm) -> Self {
        InvariantValue {
            form: form.reduce(),
        }
    }

    pub fn form(&self) -> QuadForm {
        self.form
    }

    pub fn encoding(&self) -> [u8; 48] {
        self.form.encoding()
    }

    pub fn encoding_hex(&self) -> String {
        hex(&self.encoding())
    }

    /// SHA-256 of the canonical encoding.
    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(self.encoding()).into()
    }
}

/// An invariant map X^n -> S. The orbit table is one implementation; any
/// other realization of the same classification can be swapped in.
pub trait InvariantMap {
    fn discriminant(&self) -> i128;

    fn evaluate(&self, curves: &[Curve]) -> Result<InvariantValue>;
}

/// Every curve of the isogeny class (up to isomorphism, keyed by j)
/// labeled with the class a such that a * E0 is that curve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsogenyTable {
    base: Curve,
    d: i128,
    t: i64,
    order: u64,
    entries: BTreeMap<u64, QuadForm>,
    curves: BTreeMap<QuadForm, Curve>,
    prime_basis: Vec<u64>,
}

#[derive(Serialize)]
struct TableEntry {
    j: u64,
    form: QuadForm,
}

#[derive(Serialize)]
struct TableExport<'a> {
    base: &'a Curve,
    #[serde(rename = "D")]
    d: i128,
    entries: Vec<TableEntry>,
}

pub fn build_orbit_table(e0: &Curve, prime_bound: u64) -> Result<IsogenyTable> {
    build_orbit_table_capped(e0, prime_bound, DEFAULT_CLASS_CAP)
}

/// Breadth-first search over classes: each new class is reached by one
/// isogeny step from an already realized neighbour.
pub fn build_orbit_table_capped(e0: &Curve, prime_bound: u64, class_cap: usize) -> Result<IsogenyTable> {
    let fd = frobenius_data(e0)?;
    if fd.conductor != 1 {
        return Err(Error::InvalidArgument(format!(
            "Z[pi] has conductor {} (only the maximal order is supported)",
            fd.conductor
        )));
    }
    let (d, t, q) = (fd.d_pi as i128, fd.t, e0.p());
    let h = enumerate_reduced(d)?.class_number();
    if h > class_cap {
        return Err(Error::CapExceeded(format!("h(D) = {h} exceeds {class_cap}")));
    }
    let basis = split_primes(prime_bound, t, q);
    let mut gens = Vec::new();
    for &ell in &basis {
        for sign in [1i8, -1] {
            gens.push((ell, sign, prime_form(d, ell, sign, t, q)?));
        }
    }
    let id = QuadForm::identity(d)?;
    let mut entries = BTreeMap::from([(e0.j(), id)]);
    let mut curves = BTreeMap::from([(id, *e0)]);
    let mut queue = VecDeque::from([id]);
    'bfs: while let Some(f) = queue.pop_front() {
        for &(ell, sign, g) in &gens {
            if entries.len() == h {
                break 'bfs;
            }
            let next = f.compose(&g)?;
            if curves.contains_key(&next) {
                continue;
            }
            let c = apply_prime_with_trace(&curves[&f], t, ell, sign)?;
            if entries.insert(c.j(), next).is_some() {
                return Err(Error::OrbitCollision(c.j()));
            }
            curves.insert(next, c);
            queue.push_back(next);
        }
    }
    if entries.len() < h {
        return Err(Error::NotGenerated {
            reached: entries.len(),
            expected: h,
        });
    }
    Ok(IsogenyTable {
        base: *e0,
        d,
        t,
        order: fd.n,
        entries,
        curves,
        prime_basis: basis,
    })
}

/// Builds a table, doubling the prime bound until the basis generates.
pub fn build_orbit_table_auto(e0: &Curve, start_bound: u64) -> Result<IsogenyTable> {
    let mut bound = start_bound.max(3);
    loop {
        match build_orbit_table(e0, bound) {
            Err(Error::NotGenerated { .. }) if bound < 1 << 16 => bound *= 2,
            other => return other,
        }
    }
}

impl IsogenyTable {
    pub fn base(&self) -> &Curve {
        &self.base
    }

    pub fn d(&self) -> i128 {
        self.d
    }

    pub fn trace(&self) -> i64 {
        self.t
    }

    pub fn q(&self) -> u64 {
        self.base.p()
    }

    pub fn class_number(&self) -> usize {
        self.entries.len()
    }

    pub fn prime_basis(&self) -> &[u64] {
        &self.prime_basis
    }

    /// (j, class) pairs in ascending j.
    pub fn entries(&self) -> impl Iterator<Item = (u64, QuadForm)> + '_ {
        self.entries.iter().map(|(&j, &f)| (j, f))
    }

    /// The realized curve a * E0 for the class a.
    pub fn curve_of(&self, class: &QuadForm) -> Result<Curve> {
        self.curves
            .get(&class.reduce())
            .copied()
            .ok_or_else(|| Error::InvalidForm(format!("{class} is not a class of D = {}", self.d)))
    }

    pub fn classes(&self) -> impl Iterator<Item = QuadForm> + '_ {
        self.curves.keys().copied()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(TableExport {
            base: &self.base,
            d: self.d,
            entries: self.entries().map(|(j, form)| TableEntry { j, form }).collect(),
        })
        .expect("serializable")
    }

    /// Frobenius module attached to E: the lattice of the class of E,
    /// inverted so that deligne_to_class(T(E1), T(E2)) carries E1 to E2.
    pub fn deligne_module(&self, e: &Curve) -> Result<FrobeniusMatrix> {
        let c = solve_isogeny(self, e)?;
        class_to_module(&c.invert(), self.t as i128, self.q() as i128)
    }
}

impl InvariantMap for IsogenyTable {
    fn discriminant(&self) -> i128 {
        self.d
    }

    fn evaluate(&self, curves: &[Curve]) -> Result<InvariantValue> {
        invariant_e_n(self, curves)
    }
}

/// The class a with a * E0 isomorphic to E.
pub fn solve_isogeny(table: &IsogenyTable, e: &Curve) -> Result<QuadForm> {
    if e.p() != table.base.p() {
        return Err(Error::NotInIsogenyClass(e.j()));
    }
    let form = table
        .entries
        .get(&e.j())
        .copied()
        .ok_or(Error::NotInIsogenyClass(e.j()))?;
    // Same j but the quadratic twist has a different group order.
    if count_points(e)? != table.order {
        return Err(Error::NotInIsogenyClass(e.j()));
    }
    Ok(form)
}

/// e_n(E_1, ..., E_n) = reduced product of the classes of the E_i.
pub fn invariant_e_n(table: &IsogenyTable, curves: &[Curve]) -> Result<InvariantValue> {
    if curves.is_empty() {
        return Err(Error::InvalidArgument("e_n needs n >= 1".into()));
    }
    let mut acc = QuadForm::identity(table.d)?;
    for e in curves {
        acc = acc.compose(&solve_isogeny(table, e)?)?;
    }
    Ok(InvariantValue::new(&acc))
}

/// Decides whether y = (g_1 ... g_n) * x given the shares g_i * x.
pub fn ddh_distinguish(table: &IsogenyTable, x: &Curve, shares: &[Curve], y: &Curve) -> Result<bool> {
    let mut lhs = vec![*y];
    lhs.extend(std::iter::repeat_n(*x, shares.len().saturating_sub(1)));
    Ok(invariant_e_n(table, &lhs)? == invariant_e_n(table, shares)?)
}

/// Decides whether cE = (ab) * E for E the table base, given aE and bE.
pub fn isogeny_ddh_decide(table: &IsogenyTable, ae: &Curve, be: &Curve, ce: &Curve) -> Result<bool> {
    Ok(invariant_e_n(table, &[*ae, *be])? == invariant_e_n(table, &[*ce, table.base])?)
}

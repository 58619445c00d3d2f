use super::poly::{poly_powmod, FpPoly};
use crate::error::{Error, Result};

/// The ring F_p[x]/(m). When `m` is irreducible this is the field F_{p^deg m}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientRing {
    modulus: FpPoly,
}

impl QuotientRing {
    pub fn new(modulus: FpPoly) -> Result<Self> {
        if modulus.deg() == 0 {
            return Err(Error::DegenerateModulus);
        }
        Ok(QuotientRing {
            modulus: modulus.monic(),
        })
    }

    pub fn modulus(&self) -> &FpPoly {
        &self.modulus
    }

    pub fn reduce(&self, a: &FpPoly) -> FpPoly {
        a.rem(&self.modulus)
    }

    /// Residue class of x.
    pub fn gen(&self) -> FpPoly {
        self.reduce(&FpPoly::x(self.modulus.field()))
    }

    pub fn constant(&self, c: u64) -> FpPoly {
        FpPoly::constant(self.modulus.field(), c)
    }

    pub fn mul(&self, a: &FpPoly, b: &FpPoly) -> FpPoly {
        a.mul_mod(b, &self.modulus)
    }

    pub fn pow(&self, a: &FpPoly, e: u128) -> FpPoly {
        poly_powmod(a, e, &self.modulus).expect("nonconstant modulus")
    }

    /// Inverse, or `None` when `a` shares a factor with the modulus.
    pub fn inv(&self, a: &FpPoly) -> Option<FpPoly> {
        let (g, s, _) = self.reduce(a).xgcd(&self.modulus);
        if g.is_one() {
            Some(self.reduce(&s))
        } else {
            None
        }
    }

    /// The p-power Frobenius a -> a^p.
    pub fn frobenius(&self, a: &FpPoly) -> FpPoly {
        self.pow(a, self.modulus.field().modulus() as u128)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::PrimeField;

    #[test]
    fn inverse_in_extension_field() {
        let f = PrimeField::new(7).unwrap();
        let ring = QuotientRing::new(FpPoly::from_i64(f, &[1, 0, 1])).unwrap();
        for c0 in 0..7 {
            for c1 in 0..7 {
                let a = FpPoly::new(f, vec![c0, c1]);
                if a.is_zero() {
                    assert!(ring.inv(&a).is_none());
                    continue;
                }
                let inv = ring.inv(&a).unwrap();
                assert!(ring.mul(&a, &inv).is_one());
            }
        }
        // F_49^* has order 48.
        let g = ring.gen();
        assert!(ring.pow(&FpPoly::from_i64(f, &[3, 1]), 48).is_one());
        assert_eq!(ring.frobenius(&g), FpPoly::from_i64(f, &[0, -1]));
    }
}

//! Dyadic numbers `mant * 2^exp` with odd (or zero) mantissa, the coordinate
//! type of all local field elements.  Arithmetic truncates mantissas to a
//! working number of bits; a truncated-to-zero value means "valuation at
//! least the working precision".

use num::{BigInt, One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dyadic {
    /// Odd, or zero for the zero value.
    pub mant: BigInt,
    pub exp: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { mant: BigInt::one(), exp: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    fn normalize(mut mant: BigInt, mut exp: i64) -> Self {
        if mant.is_zero() {
            return Dyadic::zero();
        }
        let tz = mant.trailing_zeros().unwrap_or(0) as i64;
        if tz > 0 {
            mant >>= tz as usize;
            exp += tz;
        }
        Dyadic { mant, exp }
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Dyadic::normalize(n, 0)
    }

    pub fn from_i64(n: i64) -> Self {
        Dyadic::from_bigint(BigInt::from(n))
    }

    /// Build from a rational with the odd part of the denominator inverted
    /// modulo `2^bits`.
    pub fn from_rat(q: &crate::exactq::Rat, bits: i64) -> Self {
        if q.numer().is_zero() {
            return Dyadic::zero();
        }
        let vn = q.numer().trailing_zeros().unwrap_or(0) as i64;
        let vd = q.denom().trailing_zeros().unwrap_or(0) as i64;
        let exp = vn - vd;
        let n_odd = q.numer() >> (vn as usize);
        let d_odd = q.denom() >> (vd as usize);
        if d_odd.is_one() {
            return Dyadic { mant: n_odd, exp }.truncate(bits + exp);
        }
        let modulus = BigInt::one() << (bits as usize);
        let inv = inv_mod_pow2(&d_odd, bits as usize);
        let mant = (n_odd * inv) % &modulus;
        Dyadic::normalize(mant, exp).truncate(bits + exp)
    }

    pub fn val(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exp)
        }
    }

    /// Reduce modulo `2^bits` (absolute); values of valuation >= bits become
    /// zero.
    pub fn truncate(&self, bits: i64) -> Self {
        if self.is_zero() || self.exp >= bits {
            return Dyadic::zero();
        }
        let k = (bits - self.exp) as usize;
        let modulus = BigInt::one() << k;
        let mut m = &self.mant % &modulus;
        if m.is_negative() {
            m += &modulus;
        }
        Dyadic::normalize(m, self.exp)
    }

    pub fn add(&self, o: &Dyadic, bits: i64) -> Dyadic {
        if self.is_zero() {
            return o.truncate(bits);
        }
        if o.is_zero() {
            return self.truncate(bits);
        }
        let e = self.exp.min(o.exp);
        let a = &self.mant << ((self.exp - e) as usize);
        let b = &o.mant << ((o.exp - e) as usize);
        Dyadic::normalize(a + b, e).truncate(bits)
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic { mant: -self.mant.clone(), exp: self.exp }
    }

    pub fn sub(&self, o: &Dyadic, bits: i64) -> Dyadic {
        self.add(&o.neg(), bits)
    }

    pub fn mul(&self, o: &Dyadic, bits: i64) -> Dyadic {
        if self.is_zero() || o.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mant: &self.mant * &o.mant, exp: self.exp + o.exp }.truncate(bits)
    }

    /// Inverse of an odd mantissa value; exponent negates.
    pub fn inv(&self, bits: i64) -> Dyadic {
        assert!(!self.is_zero(), "inverting zero dyadic");
        let k = (bits - (-self.exp)).max(1) as usize;
        let inv = inv_mod_pow2(&self.mant, k);
        Dyadic::normalize(inv, -self.exp).truncate(bits)
    }

    /// Halve: exact division by 2^k.
    pub fn shift(&self, k: i64) -> Dyadic {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mant: self.mant.clone(), exp: self.exp + k }
    }

    pub fn residue_bit(&self) -> bool {
        !self.is_zero() && self.exp == 0
    }
}

/// Inverse of an odd integer modulo `2^k` by Newton iteration.
pub fn inv_mod_pow2(a: &BigInt, k: usize) -> BigInt {
    debug_assert!(a.bit(0));
    let modulus = BigInt::one() << k;
    let mut x = BigInt::one(); // inverse mod 2
    let mut prec = 1usize;
    while prec < k {
        prec = (2 * prec).min(k);
        let m = BigInt::one() << prec;
        let two = BigInt::from(2u32);
        x = (&x * (two - ((a % &m) * &x) % &m)) % &m;
    }
    let mut x = x % &modulus;
    if x.is_negative() {
        x += &modulus;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactq::parse_rat;

    #[test]
    fn inverse_roundtrip() {
        let a = Dyadic::from_rat(&parse_rat("3/8").unwrap(), 64);
        assert_eq!(a.val(), Some(-3));
        let inv = a.inv(64);
        let prod = a.mul(&inv, 64);
        assert_eq!(prod.val(), Some(0));
        let err = prod.sub(&Dyadic::one(), 64);
        assert!(err.val().map(|v| v >= 60).unwrap_or(true));
    }

    #[test]
    fn rational_with_odd_denominator() {
        // 1/3 = 0b...01010101011 with mantissa inverse of 3 mod 2^k.
        let a = Dyadic::from_rat(&parse_rat("1/3").unwrap(), 32);
        let three = Dyadic::from_i64(3);
        let prod = a.mul(&three, 32);
        let err = prod.sub(&Dyadic::one(), 32);
        assert!(err.val().map(|v| v >= 30).unwrap_or(true));
    }
}

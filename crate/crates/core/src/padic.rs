//! Elements of Q_p known to a fixed absolute precision.
//!
//! A [`PadicScalar`] is `p^valuation * unit + O(p^precision)`. The unit is
//! stored reduced modulo `p^(precision - valuation)`, so two scalars that
//! agree as p-adic numbers at the same precision compare equal.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

thread_local! {
    static POW_CACHE: RefCell<HashMap<u64, Vec<BigInt>>> = RefCell::new(HashMap::new());
}

/// `p^k` as a big integer, memoised per thread.
pub fn ppow(p: u64, k: u32) -> BigInt {
    POW_CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        let table = cache.entry(p).or_insert_with(|| vec![BigInt::one()]);
        while table.len() <= k as usize {
            let next = table.last().unwrap() * p;
            table.push(next);
        }
        table[k as usize].clone()
    })
}

/// Splits `x` into `(v, u)` with `x = p^v * u` and `p` not dividing `u`.
/// `x` must be nonzero.
pub(crate) fn split_p(p: u64, mut x: BigInt) -> (i64, BigInt) {
    debug_assert!(!x.is_zero());
    let mut v = 0i64;
    if p == 2 {
        let tz = x.trailing_zeros().unwrap_or(0);
        return (tz as i64, x >> tz);
    }
    let pb = BigInt::from(p);
    loop {
        let (q, r) = x.div_rem(&pb);
        if !r.is_zero() {
            return (v, x);
        }
        x = q;
        v += 1;
    }
}

/// Nonnegative p-adic valuation of a nonzero integer.
pub(crate) fn vp_int(p: u64, x: &BigInt) -> i64 {
    split_p(p, x.clone()).0
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    p: u64,
    val: i64,
    unit: BigInt,
    prec: i64,
}

impl PadicScalar {
    /// The value `p^val * x + O(p^prec)` for an arbitrary integer `x`.
    pub fn from_scaled(p: u64, val: i64, x: BigInt, prec: i64) -> Self {
        if prec <= val || x.is_zero() {
            return Self::zero(p, prec);
        }
        let width = (prec - val) as u32;
        let x = x.mod_floor(&ppow(p, width));
        if x.is_zero() {
            return Self::zero(p, prec);
        }
        let (shift, unit) = split_p(p, x);
        let val = val + shift;
        if val >= prec {
            return Self::zero(p, prec);
        }
        let unit = if shift > 0 {
            unit.mod_floor(&ppow(p, (prec - val) as u32))
        } else {
            unit
        };
        PadicScalar { p, val, unit, prec }
    }

    pub fn from_bigint(p: u64, x: BigInt, prec: i64) -> Self {
        Self::from_scaled(p, 0, x, prec)
    }

    pub fn from_i64(p: u64, x: i64, prec: i64) -> Self {
        Self::from_scaled(p, 0, BigInt::from(x), prec)
    }

    /// `num / den` as a p-adic number. Fails on a zero denominator.
    pub fn from_ratio(p: u64, num: &BigInt, den: &BigInt, prec: i64) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        let (dv, du) = split_p(p, den.clone());
        let den_unit = PadicScalar {
            p,
            val: 0,
            unit: du.mod_floor(&ppow(p, (prec + dv).max(1) as u32)),
            prec: (prec + dv).max(1),
        };
        let n = Self::from_scaled(p, -dv, num.clone(), prec);
        if n.is_zero() {
            return Ok(n);
        }
        Ok(&n * &den_unit.inv()?)
    }

    /// The zero marker: known to be `0 mod p^prec`.
    pub fn zero(p: u64, prec: i64) -> Self {
        PadicScalar {
            p,
            val: prec,
            unit: BigInt::zero(),
            prec,
        }
    }

    pub fn one(p: u64, prec: i64) -> Self {
        Self::from_i64(p, 1, prec)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }

    /// `None` when the scalar is indistinguishable from zero.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Valuation, or the precision for the zero marker. This is the
    /// largest `v` for which the scalar is certainly in `p^v Z_p`.
    pub fn val_or_prec(&self) -> i64 {
        self.val
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn relative_precision(&self) -> i64 {
        self.prec - self.val
    }

    pub fn unit(&self) -> &BigInt {
        &self.unit
    }

    /// Integral means certainly in `Z_p`.
    pub fn is_integral(&self) -> bool {
        self.val >= 0
    }

    pub fn with_precision(&self, prec: i64) -> Self {
        if prec >= self.prec {
            return self.clone();
        }
        if self.is_zero() {
            return Self::zero(self.p, prec);
        }
        Self::from_scaled(self.p, self.val, self.unit.clone(), prec)
    }

    /// Integer representative in `[0, p^k)` of an integral scalar, reduced
    /// modulo `p^k`. Requires `k <= precision`.
    pub fn residue_mod_pk(&self, k: u32) -> Result<BigInt> {
        if self.val < 0 && !self.is_zero() {
            return Err(Error::NotIntegral);
        }
        if (k as i64) > self.prec {
            return Err(Error::exhausted(format!(
                "need {k} digits, have {}",
                self.prec
            )));
        }
        if self.is_zero() || self.val >= k as i64 {
            return Ok(BigInt::zero());
        }
        let m = ppow(self.p, k);
        Ok((ppow(self.p, self.val as u32) * &self.unit).mod_floor(&m))
    }

    /// Residue class in `F_p`.
    pub fn residue(&self) -> Result<u64> {
        Ok(self.residue_mod_pk(1)?.to_u64().unwrap())
    }

    /// The integer `p^val * unit` when `val >= 0`; this is the canonical
    /// representative in `[0, p^prec)`.
    pub fn to_bigint(&self) -> Result<BigInt> {
        if self.val < 0 && !self.is_zero() {
            return Err(Error::NotIntegral);
        }
        if self.is_zero() {
            return Ok(BigInt::zero());
        }
        Ok(ppow(self.p, self.val as u32) * &self.unit)
    }

    /// The representative as `(shift, integer)` with value `p^shift * integer`.
    pub(crate) fn scaled_parts(&self) -> (i64, &BigInt) {
        (self.val, &self.unit)
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::exhausted("inverting a scalar indistinguishable from zero"));
        }
        let r = self.prec - self.val;
        let m = ppow(self.p, r as u32);
        let u = self
            .unit
            .modinv(&m)
            .ok_or_else(|| Error::Internal("unit not invertible".into()))?;
        Ok(PadicScalar {
            p: self.p,
            val: -self.val,
            unit: u,
            prec: r - self.val,
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, n: u32) -> Self {
        if n == 0 {
            return Self::one(self.p, self.relative_precision().max(1));
        }
        let mut acc: Option<Self> = None;
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => &a * &base,
                });
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc.unwrap()
    }

    /// `sum a_i * b_i` with a single normalisation at the end. Precision is
    /// the minimum over terms of `min(prec_a + v_b, prec_b + v_a)`.
    pub fn sum_of_products<'a, I>(p: u64, pairs: I, cap: i64) -> Self
    where
        I: IntoIterator<Item = (&'a PadicScalar, &'a PadicScalar)>,
    {
        let mut prec = cap;
        let mut terms: Vec<(i64, BigInt)> = Vec::new();
        for (a, b) in pairs {
            prec = prec.min(a.prec + b.val).min(b.prec + a.val);
            if a.is_zero() || b.is_zero() {
                continue;
            }
            terms.push((a.val + b.val, &a.unit * &b.unit));
        }
        Self::collect_terms(p, terms, prec)
    }

    fn collect_terms(p: u64, terms: Vec<(i64, BigInt)>, prec: i64) -> Self {
        let vmin = match terms.iter().map(|t| t.0).min() {
            Some(v) if v < prec => v,
            _ => return Self::zero(p, prec),
        };
        let mut total = BigInt::zero();
        for (v, x) in terms {
            let shift = v - vmin;
            if v >= prec {
                continue;
            }
            if shift == 0 {
                total += x;
            } else {
                total += x * ppow(p, shift as u32);
            }
        }
        Self::from_scaled(p, vmin, total, prec)
    }

    /// `sum` of many scalars at once.
    pub fn sum<'a, I>(p: u64, items: I, cap: i64) -> Self
    where
        I: IntoIterator<Item = &'a PadicScalar>,
    {
        let mut prec = cap;
        let mut terms = Vec::new();
        for a in items {
            prec = prec.min(a.prec);
            if !a.is_zero() {
                terms.push((a.val, a.unit.clone()));
            }
        }
        Self::collect_terms(p, terms, prec)
    }

    /// Rational approximation `num / den` with `den` a power of `p`, useful
    /// for display.
    pub fn to_ratio(&self) -> (BigInt, BigInt) {
        if self.is_zero() {
            return (BigInt::zero(), BigInt::one());
        }
        let m = ppow(self.p, (self.prec - self.val) as u32);
        let mut u = self.unit.clone();
        // balanced representative reads better for small negatives
        if &u * 2 > m {
            u -= &m;
        }
        if self.val >= 0 {
            (u * ppow(self.p, self.val as u32), BigInt::one())
        } else {
            (u, ppow(self.p, (-self.val) as u32))
        }
    }
}

impl fmt::Debug for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = self.to_ratio();
        if d.is_one() {
            write!(f, "{n} + O({}^{})", self.p, self.prec)
        } else {
            write!(f, "{n}/{d} + O({}^{})", self.p, self.prec)
        }
    }
}

impl<'a> Add<&'a PadicScalar> for &'a PadicScalar {
    type Output = PadicScalar;
    fn add(self, rhs: &'a PadicScalar) -> PadicScalar {
        debug_assert_eq!(self.p, rhs.p);
        PadicScalar::sum(self.p, [self, rhs], i64::MAX)
    }
}

impl<'a> Sub<&'a PadicScalar> for &'a PadicScalar {
    type Output = PadicScalar;
    fn sub(self, rhs: &'a PadicScalar) -> PadicScalar {
        self + &(-rhs)
    }
}

impl Neg for &PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        if self.is_zero() {
            return self.clone();
        }
        let m = ppow(self.p, (self.prec - self.val) as u32);
        PadicScalar {
            p: self.p,
            val: self.val,
            unit: (&m - &self.unit).mod_floor(&m),
            prec: self.prec,
        }
    }
}

impl Neg for PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        -&self
    }
}

impl<'a> Mul<&'a PadicScalar> for &'a PadicScalar {
    type Output = PadicScalar;
    fn mul(self, rhs: &'a PadicScalar) -> PadicScalar {
        debug_assert_eq!(self.p, rhs.p);
        let prec = (self.prec + rhs.val).min(rhs.prec + self.val);
        if self.is_zero() || rhs.is_zero() {
            return PadicScalar::zero(self.p, prec);
        }
        PadicScalar::from_scaled(self.p, self.val + rhs.val, &self.unit * &rhs.unit, prec)
    }
}

impl Add for PadicScalar {
    type Output = PadicScalar;
    fn add(self, rhs: PadicScalar) -> PadicScalar {
        &self + &rhs
    }
}

impl Sub for PadicScalar {
    type Output = PadicScalar;
    fn sub(self, rhs: PadicScalar) -> PadicScalar {
        &self - &rhs
    }
}

impl Mul for PadicScalar {
    type Output = PadicScalar;
    fn mul(self, rhs: PadicScalar) -> PadicScalar {
        &self * &rhs
    }
}

/// Is `n` prime? Trial division is plenty for the primes used here.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Sign-aware helper: `x mod p^k` as a nonnegative integer.
pub(crate) fn reduce(p: u64, x: &BigInt, k: u32) -> BigInt {
    if k == 0 {
        return BigInt::zero();
    }
    if !x.is_negative() && x.bits() < (k as u64) {
        return x.clone();
    }
    x.mod_floor(&ppow(p, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: i64) -> PadicScalar {
        PadicScalar::from_i64(5, x, 20)
    }

    #[test]
    fn normalises_valuation_and_unit() {
        let a = PadicScalar::from_i64(5, 75, 10);
        assert_eq!(a.valuation(), Some(2));
        assert_eq!(a.unit(), &BigInt::from(3));
        assert_eq!(a.precision(), 10);
    }

    #[test]
    fn zero_marker() {
        let a = PadicScalar::from_i64(3, 81, 4);
        assert!(a.is_zero());
        assert_eq!(a.valuation(), None);
        assert_eq!(a.val_or_prec(), 4);
    }

    #[test]
    fn inverse_keeps_relative_precision() {
        let a = PadicScalar::from_i64(5, 10, 20);
        let b = a.inv().unwrap();
        assert_eq!(b.valuation(), Some(-1));
        assert_eq!(b.relative_precision(), a.relative_precision());
        let one = &a * &b;
        assert_eq!(one, PadicScalar::one(5, one.precision()));
    }

    #[test]
    fn ratio_matches_product() {
        let third = PadicScalar::from_ratio(5, &BigInt::from(1), &BigInt::from(3), 20).unwrap();
        assert_eq!((&third * &s(3)).with_precision(19), s(1).with_precision(19));
        let fifth = PadicScalar::from_ratio(5, &BigInt::from(2), &BigInt::from(5), 20).unwrap();
        assert_eq!(fifth.valuation(), Some(-1));
        assert_eq!(fifth.to_ratio(), (BigInt::from(2), BigInt::from(5)));
    }

    #[test]
    fn sum_of_products_matches_naive() {
        let a = [s(3), s(10), s(-7)];
        let b = [s(25), s(4), s(1)];
        let fast = PadicScalar::sum_of_products(5, a.iter().zip(b.iter()), i64::MAX);
        let slow = a
            .iter()
            .zip(b.iter())
            .fold(PadicScalar::zero(5, 20), |acc, (x, y)| &acc + &(x * y));
        assert_eq!(fast, slow);
    }

    #[test]
    fn negation_and_subtraction() {
        assert!((&s(7) - &s(7)).is_zero());
        assert_eq!(-&s(1), s(-1));
    }

    #[test]
    fn primes() {
        assert!(is_prime(2) && is_prime(3) && is_prime(5) && is_prime(101));
        assert!(!is_prime(1) && !is_prime(9) && !is_prime(0));
    }
}

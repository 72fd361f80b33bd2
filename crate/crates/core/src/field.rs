//! Two-step towers `L = Q_p(zeta)(varpi)`: an unramified extension of degree
//! `f` cut out by a lift of an irreducible polynomial mod p, followed by an
//! Eisenstein extension of degree `e` over it.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpoly::{self, ResidueField};
use crate::padic::{is_prime, reduce, vp_int};

/// Default absolute precision in uniformiser digits.
pub const DEFAULT_PRECISION: i64 = 64;

/// A JSON integer that falls back to a decimal string when it does not fit
/// in an `i64`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonInt {
    Small(i64),
    Big(String),
}

impl JsonInt {
    pub fn from_bigint(x: &BigInt) -> Self {
        match x.to_i64() {
            Some(v) => JsonInt::Small(v),
            None => JsonInt::Big(x.to_string()),
        }
    }

    pub fn to_bigint(&self) -> Result<BigInt> {
        match self {
            JsonInt::Small(v) => Ok(BigInt::from(*v)),
            JsonInt::Big(s) => s
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer {s:?}"))),
        }
    }
}

/// One coefficient of the Eisenstein polynomial: an integer, or an element
/// of the unramified subring written on the basis `1, zeta, ..., zeta^(f-1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EisCoeff {
    Int(JsonInt),
    Unram(Vec<JsonInt>),
}

/// Serialisable field descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerSpec {
    pub p: u64,
    pub f: usize,
    pub e: usize,
    /// Eisenstein polynomial, lowest degree first, leading 1 included.
    pub eis: Vec<EisCoeff>,
    #[serde(rename = "N")]
    pub precision: i64,
    /// Residue polynomial of the unramified step, lowest degree first.
    /// Omitted means the default irreducible polynomial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unram: Option<Vec<u64>>,
}

struct FieldInner {
    spec: TowerSpec,
    p: u64,
    f: usize,
    e: usize,
    residue: ResidueField,
    /// Monic integer lift of the residue polynomial, length `f + 1`.
    unram_lift: Vec<BigInt>,
    /// Lower Eisenstein coefficients `c_0 .. c_{e-1}`, each of length `f`.
    eis: Vec<Vec<BigInt>>,
}

/// An immutable, cheaply clonable tower descriptor.
#[derive(Clone)]
pub struct LocalField {
    inner: Arc<FieldInner>,
}

impl PartialEq for LocalField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.spec == other.inner.spec
    }
}

impl Eq for LocalField {}

impl fmt::Debug for LocalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LocalField(p={}, f={}, e={}, eis={:?})",
            self.p(),
            self.f(),
            self.e(),
            self.inner.eis
        )
    }
}

pub(crate) fn ceil_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b) + if a.rem_euclid(b) == 0 { 0 } else { 1 }
}

impl LocalField {
    /// Builds and validates a tower. `eis` lists the Eisenstein polynomial
    /// from the constant term up, leading 1 included; each coefficient is a
    /// vector over `1, zeta, ..., zeta^(f-1)` (shorter vectors are padded).
    pub fn make_tower(
        p: u64,
        f: usize,
        e: usize,
        eis: &[Vec<BigInt>],
        unram: Option<Vec<u64>>,
        precision: i64,
    ) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::BadPrime(p));
        }
        if f == 0 || e == 0 {
            return Err(Error::NotEisenstein("degrees must be at least 1".into()));
        }
        if precision < 1 {
            return Err(Error::exhausted("precision must be at least 1"));
        }
        let residue_poly = match &unram {
            Some(g) => {
                let mut g = g.iter().map(|c| c % p).collect::<Vec<_>>();
                fpoly::trim(&mut g);
                if g.len() != f + 1 || g[f] != 1 {
                    return Err(Error::NotIrreducible);
                }
                g
            }
            None => fpoly::default_irreducible(p, f),
        };
        if !fpoly::is_irreducible(p, &residue_poly) {
            return Err(Error::NotIrreducible);
        }
        if eis.len() != e + 1 {
            return Err(Error::NotEisenstein(format!(
                "expected {} coefficients, got {}",
                e + 1,
                eis.len()
            )));
        }
        let pad = |c: &Vec<BigInt>| -> Result<Vec<BigInt>> {
            if c.len() > f {
                return Err(Error::NotEisenstein(
                    "coefficient has more than f components".into(),
                ));
            }
            let mut v = c.clone();
            v.resize(f, BigInt::zero());
            Ok(v)
        };
        let lead = pad(&eis[e])?;
        if !lead[0].is_one() || lead[1..].iter().any(|c| !c.is_zero()) {
            return Err(Error::NotEisenstein("leading coefficient must be 1".into()));
        }
        let lower = eis[..e].iter().map(pad).collect::<Result<Vec<_>>>()?;
        let uval = |c: &[BigInt]| c.iter().filter(|x| !x.is_zero()).map(|x| vp_int(p, x)).min();
        for (j, c) in lower.iter().enumerate() {
            match uval(c) {
                None if j == 0 => {
                    return Err(Error::NotEisenstein("constant term is zero".into()))
                }
                None => {}
                Some(v) if j == 0 && v != 1 => {
                    return Err(Error::NotEisenstein(
                        "constant term must have valuation exactly 1".into(),
                    ))
                }
                Some(0) => {
                    return Err(Error::NotEisenstein(format!(
                        "coefficient of degree {j} is a unit"
                    )))
                }
                Some(_) => {}
            }
        }
        let spec = TowerSpec {
            p,
            f,
            e,
            eis: eis
                .iter()
                .map(|c| {
                    let mut c = c.clone();
                    while c.len() > 1 && c.last().is_some_and(|x| x.is_zero()) {
                        c.pop();
                    }
                    if c.len() <= 1 {
                        EisCoeff::Int(JsonInt::from_bigint(c.first().unwrap_or(&BigInt::zero())))
                    } else {
                        EisCoeff::Unram(c.iter().map(JsonInt::from_bigint).collect())
                    }
                })
                .collect(),
            precision,
            unram: match unram {
                Some(_) if residue_poly != fpoly::default_irreducible(p, f) => {
                    Some(residue_poly.clone())
                }
                _ => None,
            },
        };
        let unram_lift = residue_poly.iter().map(|&c| BigInt::from(c)).collect();
        Ok(LocalField {
            inner: Arc::new(FieldInner {
                spec,
                p,
                f,
                e,
                residue: ResidueField::new(p, residue_poly),
                unram_lift,
                eis: lower,
            }),
        })
    }

    /// `Q_p(zeta)(p^(1/e))`: the tower with Eisenstein polynomial `X^e - p`.
    pub fn pure(p: u64, f: usize, e: usize, precision: i64) -> Result<Self> {
        let mut eis = vec![vec![BigInt::zero()]; e + 1];
        eis[0] = vec![-BigInt::from(p)];
        eis[e] = vec![BigInt::one()];
        Self::make_tower(p, f, e, &eis, None, precision)
    }

    pub fn from_spec(spec: &TowerSpec) -> Result<Self> {
        let eis = spec
            .eis
            .iter()
            .map(|c| match c {
                EisCoeff::Int(x) => Ok(vec![x.to_bigint()?]),
                EisCoeff::Unram(v) => v.iter().map(JsonInt::to_bigint).collect(),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::make_tower(spec.p, spec.f, spec.e, &eis, spec.unram.clone(), spec.precision)
    }

    pub fn spec(&self) -> &TowerSpec {
        &self.inner.spec
    }

    pub fn p(&self) -> u64 {
        self.inner.p
    }

    pub fn f(&self) -> usize {
        self.inner.f
    }

    pub fn e(&self) -> usize {
        self.inner.e
    }

    /// `[L : Q_p]`.
    pub fn degree(&self) -> usize {
        self.inner.e * self.inner.f
    }

    pub fn default_precision(&self) -> i64 {
        self.inner.spec.precision
    }

    pub fn residue_field(&self) -> &ResidueField {
        &self.inner.residue
    }

    pub(crate) fn unram_lift(&self) -> &[BigInt] {
        &self.inner.unram_lift
    }

    pub(crate) fn eis_lower(&self) -> &[Vec<BigInt>] {
        &self.inner.eis
    }

    /// Digits of `p`-adic precision needed in column `j` for an element
    /// known modulo `varpi^prec` and stored with scale `p^scale`.
    pub(crate) fn column_width(&self, prec: i64, scale: i64, j: usize) -> i64 {
        ceil_div(prec - j as i64, self.e() as i64) - scale
    }

    // ---- arithmetic in the unramified subring Z_p[zeta] -----------------

    /// Product in `Z[zeta]/(g)` without reducing modulo a power of p.
    pub(crate) fn u_mul(&self, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        let f = self.f();
        if f == 1 {
            return vec![&a[0] * &b[0]];
        }
        let mut prod = vec![BigInt::zero(); 2 * f - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if !y.is_zero() {
                    prod[i + j] += x * y;
                }
            }
        }
        self.u_reduce_degree(prod)
    }

    /// Reduces a polynomial in zeta modulo the monic lift `g`.
    pub(crate) fn u_reduce_degree(&self, mut poly: Vec<BigInt>) -> Vec<BigInt> {
        let f = self.f();
        let g = self.unram_lift();
        for d in (f..poly.len()).rev() {
            if poly[d].is_zero() {
                continue;
            }
            let c = std::mem::take(&mut poly[d]);
            for k in 0..f {
                if !g[k].is_zero() {
                    poly[d - f + k] -= &c * &g[k];
                }
            }
        }
        poly.truncate(f);
        poly.resize(f, BigInt::zero());
        poly
    }

    pub(crate) fn u_mod(&self, a: &[BigInt], k: u32) -> Vec<BigInt> {
        a.iter().map(|x| reduce(self.p(), x, k)).collect()
    }

    pub(crate) fn u_residue(&self, a: &[BigInt]) -> Vec<u64> {
        a.iter()
            .map(|x| reduce(self.p(), x, 1).to_u64().unwrap())
            .collect()
    }

    fn u_from_residue(&self, r: &[u64]) -> Vec<BigInt> {
        let mut v: Vec<BigInt> = r.iter().map(|&c| BigInt::from(c)).collect();
        v.resize(self.f(), BigInt::zero());
        v
    }

    /// Inverse of a unit of `Z_p[zeta]` modulo `p^k` by Newton iteration.
    pub(crate) fn u_inv(&self, a: &[BigInt], k: u32) -> Result<Vec<BigInt>> {
        let res = self.u_residue(a);
        let rinv = self
            .residue_field()
            .inv(&res)
            .ok_or_else(|| Error::exhausted("inverting a non-unit of the unramified ring"))?;
        let mut b = self.u_from_residue(&rinv);
        let mut digits = 1u32;
        while digits < k {
            digits = (2 * digits).min(k);
            let ab = self.u_mod(&self.u_mul(a, &b), digits);
            let mut two_minus = ab.iter().map(|x| -x).collect::<Vec<_>>();
            two_minus[0] += 2;
            b = self.u_mod(&self.u_mul(&b, &two_minus), digits);
        }
        Ok(self.u_mod(&b, k.max(1)))
    }

    fn u_pow(&self, a: &[BigInt], mut n: u64, k: u32) -> Vec<BigInt> {
        let mut acc = self.u_from_residue(&[1]);
        let mut base = self.u_mod(a, k);
        while n > 0 {
            if n & 1 == 1 {
                acc = self.u_mod(&self.u_mul(&acc, &base), k);
            }
            base = self.u_mod(&self.u_mul(&base, &base), k);
            n >>= 1;
        }
        acc
    }

    /// Teichmuller lift of the residue class `r` modulo `p^k`: the unique
    /// root of `X^(p^f) = X` reducing to `r`, found by Newton iteration.
    pub(crate) fn u_teichmuller(&self, r: &[u64], k: u32) -> Result<Vec<BigInt>> {
        let q = self.residue_field().size();
        let mut t = self.u_from_residue(r);
        if self.residue_field().is_zero(r) {
            return Ok(t);
        }
        let qb = BigInt::from(q);
        for _ in 0..64 {
            let tq1 = self.u_pow(&t, q - 1, k + 1);
            let tq = self.u_mod(&self.u_mul(&tq1, &t), k + 1);
            let value: Vec<BigInt> = tq.iter().zip(&t).map(|(x, y)| x - y).collect();
            if self.u_mod(&value, k).iter().all(|x| x.is_zero()) {
                return Ok(self.u_mod(&t, k));
            }
            let mut deriv: Vec<BigInt> = tq1.iter().map(|x| x * &qb).collect();
            deriv[0] -= 1;
            let dinv = self.u_inv(&deriv, k + 1)?;
            let step = self.u_mod(&self.u_mul(&value, &dinv), k + 1);
            t = t.iter().zip(step).map(|(x, s)| x - s).collect();
            t = self.u_mod(&t, k + 1);
        }
        Err(Error::Internal("Teichmuller iteration did not converge".into()))
    }

    /// Valuation in `Z_p[zeta]` (minimum coordinate valuation).
    pub(crate) fn u_val(&self, a: &[BigInt]) -> Option<i64> {
        a.iter()
            .filter(|x| !x.is_zero())
            .map(|x| vp_int(self.p(), x))
            .min()
    }

    /// `c_0 / p`, the unit part of the constant Eisenstein coefficient.
    pub(crate) fn eis_constant_unit(&self) -> Vec<BigInt> {
        let p = BigInt::from(self.p());
        self.eis_lower()[0].iter().map(|x| x.div_floor(&p)).collect()
    }

    /// Residue of a unit, i.e. its class in `k_L`, from an integer vector.
    pub(crate) fn residue_of(&self, a: &[BigInt]) -> Vec<u64> {
        self.u_residue(a)
    }
}

impl fmt::Display for LocalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q_{}", self.p())?;
        if self.f() > 1 {
            write!(f, "(zeta_{})", self.f())?;
        }
        if self.e() > 1 {
            write!(f, "(varpi), varpi^{} + ...", self.e())?;
        }
        Ok(())
    }
}

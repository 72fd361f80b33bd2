//! Elements of a tower `L`, stored as `p^scale * sum A[j][i] zeta^i varpi^j`
//! with integer digits, known modulo `varpi^prec`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{LocalField, TowerSpec};
use crate::padic::{ppow, split_p, vp_int, PadicScalar};

#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    field: LocalField,
    scale: i64,
    /// Column-major: digit of `zeta^i varpi^j` sits at `j * f + i`.
    digits: Vec<BigInt>,
    prec: i64,
}

fn width_u32(w: i64) -> u32 {
    w.clamp(0, u32::MAX as i64) as u32
}

impl FieldElement {
    /// Canonical form: every column reduced to its width, and the common
    /// power of p pulled into the scale.
    fn canonical(field: &LocalField, scale: i64, mut digits: Vec<BigInt>, prec: i64) -> Self {
        let (p, f, e) = (field.p(), field.f(), field.e());
        for j in 0..e {
            let w = field.column_width(prec, scale, j);
            for d in &mut digits[j * f..(j + 1) * f] {
                if w <= 0 {
                    *d = BigInt::zero();
                } else if !d.is_zero() {
                    *d = d.mod_floor(&ppow(p, w as u32));
                }
            }
        }
        let shift = digits
            .iter()
            .filter(|d| !d.is_zero())
            .map(|d| vp_int(p, d))
            .min();
        match shift {
            None => FieldElement {
                field: field.clone(),
                scale: 0,
                digits,
                prec,
            },
            Some(0) => FieldElement {
                field: field.clone(),
                scale,
                digits,
                prec,
            },
            Some(m) => {
                let pm = ppow(p, m as u32);
                for d in &mut digits {
                    if !d.is_zero() {
                        *d /= &pm;
                    }
                }
                FieldElement {
                    field: field.clone(),
                    scale: scale + m,
                    digits,
                    prec,
                }
            }
        }
    }

    pub fn zero(field: &LocalField, prec: i64) -> Self {
        Self::canonical(field, 0, vec![BigInt::zero(); field.degree()], prec)
    }

    pub fn one(field: &LocalField, prec: i64) -> Self {
        Self::from_int(field, &BigInt::one(), prec)
    }

    pub fn from_int(field: &LocalField, x: &BigInt, prec: i64) -> Self {
        let mut d = vec![BigInt::zero(); field.degree()];
        d[0] = x.clone();
        Self::canonical(field, 0, d, prec)
    }

    pub fn from_i64(field: &LocalField, x: i64, prec: i64) -> Self {
        Self::from_int(field, &BigInt::from(x), prec)
    }

    /// Embeds a scalar of `Q_p`; precision converts to uniformiser units.
    pub fn from_scalar(field: &LocalField, a: &PadicScalar) -> Self {
        let prec = a.precision().saturating_mul(field.e() as i64);
        let mut d = vec![BigInt::zero(); field.degree()];
        if a.is_zero() {
            return Self::canonical(field, 0, d, prec);
        }
        let (v, u) = a.scaled_parts();
        d[0] = u.clone();
        Self::canonical(field, v, d, prec)
    }

    /// Builds an element from an unramified-subring vector placed in
    /// column `j`.
    pub(crate) fn from_column(field: &LocalField, scale: i64, j: usize, col: &[BigInt], prec: i64) -> Self {
        let f = field.f();
        let mut d = vec![BigInt::zero(); field.degree()];
        d[j * f..j * f + col.len()].clone_from_slice(col);
        Self::canonical(field, scale, d, prec)
    }

    /// The tower uniformiser `varpi`.
    pub fn uniformizer(field: &LocalField, prec: i64) -> Self {
        if field.e() > 1 {
            Self::from_column(field, 0, 1, &[BigInt::one()], prec)
        } else {
            let c0: Vec<BigInt> = field.eis_lower()[0].iter().map(|x| -x).collect();
            Self::from_column(field, 0, 0, &c0, prec)
        }
    }

    /// `varpi^(-1)`, from `varpi (varpi^(e-1) + c_(e-1) varpi^(e-2) + ... + c_1) = -c_0`.
    pub fn uniformizer_inverse(field: &LocalField, prec: i64) -> Result<Self> {
        let (f, e) = (field.f(), field.e());
        // needs relative precision prec + 1 on a value of valuation -1
        let width = width_u32(prec / e as i64 + 3);
        let c0u = field.eis_constant_unit();
        let inv = field.u_inv(&c0u, width)?;
        let neg_inv: Vec<BigInt> = inv.iter().map(|x| -x).collect();
        let mut d = vec![BigInt::zero(); e * f];
        for j in 0..e {
            let c = if j + 1 == e {
                let mut one = vec![BigInt::zero(); f];
                one[0] = BigInt::one();
                one
            } else {
                field.eis_lower()[j + 1].clone()
            };
            let prod = field.u_mul(&c, &neg_inv);
            d[j * f..(j + 1) * f].clone_from_slice(&prod);
        }
        Ok(Self::canonical(field, -1, d, prec))
    }

    /// The generator `zeta` of the unramified step.
    pub fn zeta(field: &LocalField, prec: i64) -> Self {
        if field.f() == 1 {
            let root = -field.unram_lift()[0].clone();
            return Self::from_int(field, &root, prec);
        }
        Self::from_column(field, 0, 0, &[BigInt::zero(), BigInt::one()], prec)
    }

    /// Teichmuller lift of the residue class with coordinates `r` on
    /// `1, zeta, ..., zeta^(f-1)`.
    pub fn teichmuller(field: &LocalField, r: &[u64], prec: i64) -> Result<Self> {
        let width = width_u32(prec / field.e() as i64 + 2);
        let t = field.u_teichmuller(r, width)?;
        Ok(Self::from_column(field, 0, 0, &t, prec))
    }

    /// The residue lifts `zeta_1, ..., zeta_f`: Teichmuller lifts of the
    /// F_p-basis `1, zeta, ..., zeta^(f-1)` of the residue field.
    pub fn residue_basis(field: &LocalField, prec: i64) -> Result<Vec<Self>> {
        (0..field.f())
            .map(|i| {
                let mut r = vec![0u64; field.f()];
                r[i] = 1;
                Self::teichmuller(field, &r, prec)
            })
            .collect()
    }

    /// `sum c_i zeta_i * varpi^j`, a lift of a residue vector to level `j`.
    pub fn lift_residue(field: &LocalField, coords: &[u64], j: i64, prec: i64) -> Result<Self> {
        let basis = Self::residue_basis(field, prec + 1)?;
        let mut acc = Self::zero(field, prec + 1);
        for (c, z) in coords.iter().zip(&basis) {
            if *c != 0 {
                acc = &acc + &z.mul_int(&BigInt::from(*c));
            }
        }
        let w = Self::uniformizer(field, prec + 1).powi(j)?;
        Ok((&acc * &w).with_precision(prec))
    }

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|d| d.is_zero())
    }

    /// Exact `v_L`, or `None` when the element is zero at its precision.
    pub fn try_valuation(&self) -> Option<i64> {
        let (f, e) = (self.field.f(), self.field.e());
        (0..e)
            .filter_map(|j| {
                self.field
                    .u_val(&self.digits[j * f..(j + 1) * f])
                    .map(|v| e as i64 * (self.scale + v) + j as i64)
            })
            .min()
    }

    pub fn valuation(&self) -> Result<i64> {
        self.try_valuation().ok_or_else(|| {
            Error::exhausted(format!("element is zero modulo varpi^{}", self.prec))
        })
    }

    /// Valuation, or the precision for an element indistinguishable from 0.
    pub fn val_or_prec(&self) -> i64 {
        self.try_valuation().unwrap_or(self.prec)
    }

    pub fn relative_precision(&self) -> i64 {
        self.prec - self.val_or_prec()
    }

    pub fn with_precision(&self, prec: i64) -> Self {
        if prec >= self.prec {
            return self.clone();
        }
        Self::canonical(&self.field, self.scale, self.digits.clone(), prec)
    }

    /// Coefficient of `zeta^i varpi^j` as a scalar, known to the precision
    /// that column carries.
    pub fn coeff(&self, i: usize, j: usize) -> PadicScalar {
        let (f, e) = (self.field.f(), self.field.e());
        let prec = crate::field::ceil_div(self.prec - j as i64, e as i64);
        PadicScalar::from_scaled(self.field.p(), self.scale, self.digits[j * f + i].clone(), prec)
    }

    /// Builds an element from coefficients `coeffs[i][j]` of `zeta^i varpi^j`.
    pub fn from_coeffs(field: &LocalField, coeffs: &[Vec<PadicScalar>], prec: i64) -> Result<Self> {
        let (f, e) = (field.f(), field.e());
        if coeffs.len() != f || coeffs.iter().any(|r| r.len() != e) {
            return Err(Error::Parse(format!("coefficient array must be {f} x {e}")));
        }
        let mut prec = prec;
        let mut scale = i64::MAX;
        for row in coeffs {
            for (j, c) in row.iter().enumerate() {
                prec = prec.min(c.precision().saturating_mul(e as i64).saturating_add(j as i64));
                if !c.is_zero() {
                    scale = scale.min(c.scaled_parts().0);
                }
            }
        }
        if scale == i64::MAX {
            return Ok(Self::zero(field, prec));
        }
        let mut d = vec![BigInt::zero(); f * e];
        for (i, row) in coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    let (v, u) = c.scaled_parts();
                    d[j * f + i] = u * ppow(field.p(), (v - scale) as u32);
                }
            }
        }
        Ok(Self::canonical(field, scale, d, prec))
    }

    pub(crate) fn column(&self, j: usize) -> &[BigInt] {
        let f = self.field.f();
        &self.digits[j * f..(j + 1) * f]
    }

    fn check_field(&self, other: &Self) {
        debug_assert!(self.field == other.field, "elements from different fields");
    }

    pub fn mul_int(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return Self::zero(&self.field, self.prec);
        }
        let (v, u) = split_p(self.field.p(), c.clone());
        let d = self.digits.iter().map(|x| x * &u).collect();
        Self::canonical(&self.field, self.scale + v, d, self.prec + self.field.e() as i64 * v)
    }

    pub fn mul_scalar(&self, a: &PadicScalar) -> Self {
        self * &Self::from_scalar(&self.field, a)
    }

    /// Power with a nonnegative exponent.
    pub fn pow(&self, n: u64) -> Self {
        if n == 0 {
            return Self::one(&self.field, self.relative_precision().max(1));
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

    /// Power with a signed exponent.
    pub fn powi(&self, n: i64) -> Result<Self> {
        if n >= 0 {
            Ok(self.pow(n as u64))
        } else {
            Ok(self.inv()?.pow(n.unsigned_abs()))
        }
    }

    /// Multiplicative inverse by Newton iteration `y <- y + y (1 - x y)`.
    /// The result has the same relative precision as `self`.
    pub fn inv(&self) -> Result<Self> {
        let v = self.valuation()?;
        let field = &self.field;
        let e = field.e() as i64;
        let (a, b) = (v.div_euclid(e), v.rem_euclid(e));
        let target = self.prec - 2 * v;
        let work = target + 2 * e + 2;
        // leading residue of the column that carries the valuation
        let lead = self.column(b as usize);
        let shift = a - self.scale;
        let pk = ppow(field.p(), shift as u32);
        let unit_res: Vec<u64> = field.residue_of(&lead.iter().map(|x| x / &pk).collect::<Vec<_>>());
        let rinv = field
            .residue_field()
            .inv(&unit_res)
            .ok_or_else(|| Error::Internal("leading residue vanished".into()))?;
        let rinv: Vec<BigInt> = rinv.iter().map(|&c| BigInt::from(c)).collect();
        let mut y = Self::from_column(field, -a, 0, &rinv, work);
        if b > 0 {
            let wi = Self::uniformizer_inverse(field, work + b + 2)?;
            y = &y * &wi.pow(b as u64);
        }
        let one = Self::one(field, work + v + 2);
        for _ in 0..80 {
            let err = &one - &(self * &y);
            if err.is_zero() {
                return Ok(y.with_precision(target));
            }
            y = &y + &(&y * &err);
        }
        Err(Error::Internal("Newton inversion did not converge".into()))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    /// `self / varpi^k` for `k >= 0`.
    pub fn div_by_uniformizer(&self, k: u64) -> Result<Self> {
        if k == 0 {
            return Ok(self.clone());
        }
        let need = self.prec - self.val_or_prec() + 2;
        let wi = Self::uniformizer_inverse(&self.field, need)?.pow(k);
        Ok(self * &wi)
    }

    /// Residue coordinates of the class of `self` in `m_L^j / m_L^(j+1)`,
    /// written on the basis `zeta_1 varpi^j, ..., zeta_f varpi^j`.
    pub fn residue_decompose(&self, j: i64) -> Result<Vec<u64>> {
        let v = match self.try_valuation() {
            Some(v) => v,
            None if self.prec <= j => {
                return Err(Error::exhausted(format!(
                    "element known only modulo varpi^{}",
                    self.prec
                )))
            }
            None => {
                return Err(Error::WrongLevel {
                    expected: j,
                    found: self.prec,
                })
            }
        };
        if v != j {
            return Err(Error::WrongLevel { expected: j, found: v });
        }
        let field = &self.field;
        let e = field.e() as i64;
        let (a, b) = (j.div_euclid(e), j.rem_euclid(e));
        let pk = ppow(field.p(), (a - self.scale) as u32);
        let lead: Vec<BigInt> = self.column(b as usize).iter().map(|x| x / &pk).collect();
        let mut res = field.residue_of(&lead);
        // p^a = varpi^(ea) * (-1/c0')^a mod varpi^(ea+1)
        if a != 0 {
            let c0u = field.residue_of(&field.eis_constant_unit());
            let kf = field.residue_field();
            let mut factor = kf.inv(&c0u).expect("Eisenstein constant is a unit times p");
            factor = kf.scale(field.p() - 1, &factor);
            let factor = if a > 0 {
                kf.pow(&factor, a as u128)
            } else {
                kf.pow(&kf.inv(&factor).unwrap(), (-a) as u128)
            };
            res = kf.mul(&res, &factor);
        }
        Ok(res)
    }

    /// Random element of `O_L` known modulo `varpi^prec`.
    pub fn random_integral<R: Rng + ?Sized>(field: &LocalField, rng: &mut R, prec: i64) -> Self {
        let (f, e, p) = (field.f(), field.e(), field.p());
        let mut d = Vec::with_capacity(f * e);
        for j in 0..e {
            let w = field.column_width(prec, 0, j);
            let bound = ppow(p, width_u32(w));
            for _ in 0..f {
                d.push(rng.gen_bigint_range(&BigInt::zero(), &bound));
            }
        }
        Self::canonical(field, 0, d, prec)
    }

    /// Random element of exact valuation `v` known modulo `varpi^prec`.
    pub fn random_with_valuation<R: Rng + ?Sized>(
        field: &LocalField,
        rng: &mut R,
        v: i64,
        prec: i64,
    ) -> Result<Self> {
        let unit = Self::random_unit(field, rng, prec - v)?;
        let w = Self::uniformizer(field, prec - v + 2).powi(v)?;
        Ok((&unit * &w).with_precision(prec))
    }

    pub fn random_unit<R: Rng + ?Sized>(field: &LocalField, rng: &mut R, prec: i64) -> Result<Self> {
        loop {
            let x = Self::random_integral(field, rng, prec.max(1));
            if x.try_valuation() == Some(0) {
                return Ok(x);
            }
        }
    }

    /// Plain-data view used by the JSON layer.
    pub fn to_json(&self) -> ElementJson {
        let (f, e) = (self.field.f(), self.field.e());
        let coeffs = (0..f)
            .map(|i| {
                (0..e)
                    .map(|j| {
                        let c = self.coeff(i, j);
                        match c.valuation() {
                            None => ScalarJson(0, "0".into()),
                            Some(v) => ScalarJson(v, c.unit().to_str_radix(16)),
                        }
                    })
                    .collect()
            })
            .collect();
        ElementJson {
            field: self.field.spec().clone(),
            coeffs,
            prec: self.prec,
        }
    }

    pub fn from_json(j: &ElementJson) -> Result<Self> {
        let field = LocalField::from_spec(&j.field)?;
        Self::from_json_in(&field, j)
    }

    pub fn from_json_in(field: &LocalField, j: &ElementJson) -> Result<Self> {
        let e = field.e() as i64;
        let coeffs = j
            .coeffs
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(jj, s)| {
                        let prec = crate::field::ceil_div(j.prec - jj as i64, e);
                        let u = BigInt::parse_bytes(s.1.as_bytes(), 16)
                            .ok_or_else(|| Error::Parse(format!("bad hex mantissa {:?}", s.1)))?;
                        Ok(PadicScalar::from_scaled(field.p(), s.0, u, prec))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_coeffs(field, &coeffs, j.prec)
    }
}

/// A scalar as `[valuation, "hex mantissa"]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarJson(pub i64, pub String);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementJson {
    pub field: TowerSpec,
    pub coeffs: Vec<Vec<ScalarJson>>,
    pub prec: i64,
}

impl<'a> Add<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &'a FieldElement) -> FieldElement {
        self.check_field(rhs);
        let prec = self.prec.min(rhs.prec);
        if self.is_zero() {
            return rhs.with_precision(prec);
        }
        if rhs.is_zero() {
            return self.with_precision(prec);
        }
        let s = self.scale.min(rhs.scale);
        let p = self.field.p();
        let la = ppow(p, (self.scale - s) as u32);
        let lb = ppow(p, (rhs.scale - s) as u32);
        let d = self
            .digits
            .iter()
            .zip(&rhs.digits)
            .map(|(x, y)| x * &la + y * &lb)
            .collect();
        FieldElement::canonical(&self.field, s, d, prec)
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        let d = self.digits.iter().map(|x| -x).collect();
        FieldElement::canonical(&self.field, self.scale, d, self.prec)
    }
}

impl<'a> Sub<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &'a FieldElement) -> FieldElement {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: &'a FieldElement) -> FieldElement {
        self.check_field(rhs);
        let field = &self.field;
        let prec = (self.prec + rhs.val_or_prec()).min(rhs.prec + self.val_or_prec());
        if self.is_zero() || rhs.is_zero() {
            return FieldElement::zero(field, prec);
        }
        let (f, e) = (field.f(), field.e());
        let mut conv: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); f]; 2 * e - 1];
        for a in 0..e {
            let ca = self.column(a);
            if ca.iter().all(|x| x.is_zero()) {
                continue;
            }
            for b in 0..e {
                let cb = rhs.column(b);
                if cb.iter().all(|x| x.is_zero()) {
                    continue;
                }
                let prod = field.u_mul(ca, cb);
                for (acc, x) in conv[a + b].iter_mut().zip(prod) {
                    *acc += x;
                }
            }
        }
        let eis = field.eis_lower();
        for m in (e..2 * e - 1).rev() {
            let col = std::mem::replace(&mut conv[m], vec![BigInt::zero(); f]);
            if col.iter().all(|x| x.is_zero()) {
                continue;
            }
            for (j, c) in eis.iter().enumerate() {
                if c.iter().all(|x| x.is_zero()) {
                    continue;
                }
                let prod = field.u_mul(&col, c);
                for (acc, x) in conv[m - e + j].iter_mut().zip(prod) {
                    *acc -= x;
                }
            }
        }
        let digits = conv.into_iter().take(e).flatten().collect();
        FieldElement::canonical(field, self.scale + rhs.scale, digits, prec)
    }
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        &self + &rhs
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        &self - &rhs
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        &self * &rhs
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (f, e) = (self.field.f(), self.field.e());
        let mut first = true;
        for j in 0..e {
            for i in 0..f {
                let c = self.coeff(i, j);
                if c.is_zero() {
                    continue;
                }
                if !first {
                    write!(out, " + ")?;
                }
                first = false;
                let (n, d) = c.to_ratio();
                if d.is_one() {
                    write!(out, "({n})")?;
                } else {
                    write!(out, "({n}/{d})")?;
                }
                if i > 0 {
                    write!(out, "*z^{i}")?;
                }
                if j > 0 {
                    write!(out, "*w^{j}")?;
                }
            }
        }
        if first {
            write!(out, "0")?;
        }
        write!(out, " + O(w^{})", self.prec)
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q3_root4() -> LocalField {
        LocalField::pure(3, 1, 4, 40).unwrap()
    }

    #[test]
    fn valuation_examples() {
        let l = q3_root4();
        let w = FieldElement::uniformizer(&l, 40);
        assert_eq!(FieldElement::from_i64(&l, 3, 40).valuation().unwrap(), 4);
        let x = &w + &FieldElement::from_i64(&l, 3, 40);
        assert_eq!(x.valuation().unwrap(), 1);
        let rel = &w.pow(4) - &FieldElement::from_i64(&l, 3, 40);
        assert!(matches!(rel.valuation(), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn residue_decompose_examples() {
        let l = LocalField::pure(5, 2, 4, 40).unwrap();
        let w = FieldElement::uniformizer(&l, 40);
        let z = FieldElement::zeta(&l, 40);
        let x = (&z * &w.pow(3)).mul_int(&BigInt::from(2));
        assert_eq!(x.residue_decompose(3).unwrap(), vec![0, 2]);
        let y = &w.pow(3) + &w.pow(5);
        assert_eq!(y.residue_decompose(3).unwrap(), vec![1, 0]);
        let one = FieldElement::one(&l, 40);
        let u = &(&one + &z) * &w.pow(2);
        assert_eq!(u.residue_decompose(2).unwrap(), vec![1, 1]);
        assert!(matches!(
            u.residue_decompose(3),
            Err(Error::WrongLevel { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn residue_lift_round_trip_across_p_levels() {
        let l = LocalField::make_tower(
            3,
            2,
            2,
            &[vec![BigInt::from(3), BigInt::from(3)], vec![BigInt::from(6)], vec![BigInt::one()]],
            None,
            30,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for j in 1..9 {
            let x = FieldElement::random_with_valuation(&l, &mut rng, j, 30).unwrap();
            let r = x.residue_decompose(j).unwrap();
            let back = FieldElement::lift_residue(&l, &r, j, 30).unwrap();
            assert!((&x - &back).val_or_prec() > j, "level {j}");
        }
    }

    #[test]
    fn inverse_and_uniformizer_inverse() {
        let l = q3_root4();
        let w = FieldElement::uniformizer(&l, 40);
        let wi = FieldElement::uniformizer_inverse(&l, 40).unwrap();
        assert_eq!(wi.valuation().unwrap(), -1);
        let one = &w * &wi;
        assert!((&one - &FieldElement::one(&l, 40)).is_zero());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for v in 0..6 {
            let x = FieldElement::random_with_valuation(&l, &mut rng, v, 40).unwrap();
            let y = x.inv().unwrap();
            assert_eq!(y.valuation().unwrap(), -v);
            let prod = &x * &y;
            assert!((&prod - &FieldElement::one(&l, 80)).is_zero());
            assert!(prod.precision() >= 40 - 2 * v);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let l = LocalField::pure(5, 2, 3, 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = FieldElement::random_integral(&l, &mut rng, 30);
            let back = FieldElement::from_json(&x.to_json()).unwrap();
            assert_eq!(x, back);
        }
    }

    #[test]
    fn teichmuller_has_order_dividing_q_minus_one() {
        let l = LocalField::pure(3, 2, 2, 30).unwrap();
        let t = FieldElement::teichmuller(&l, &[1, 1], 30).unwrap();
        let t8 = t.pow(8);
        assert!((&t8 - &FieldElement::one(&l, 30)).is_zero());
    }
}

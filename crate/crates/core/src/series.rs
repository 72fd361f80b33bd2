//! Truncated power series over `Q_p` in one and two variables.
//!
//! Coefficients carry their own absolute precision. Coefficients that are
//! exactly zero (padding of a polynomial, say) use the precision [`EXACT`].

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::element::FieldElement;
use crate::error::{Error, Result};
use crate::padic::PadicScalar;

/// Precision used for coefficients known to be exactly zero.
pub const EXACT: i64 = 1 << 40;

/// Coefficient precision below which coefficientwise solving gives up.
pub const PRECISION_FLOOR: i64 = 8;

pub(crate) fn exact_zero(p: u64) -> PadicScalar {
    PadicScalar::zero(p, EXACT)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncSeries1 {
    p: u64,
    coeffs: Vec<PadicScalar>,
    /// Exact degree bound when the series is known to be a polynomial.
    poly_degree: Option<usize>,
}

impl TruncSeries1 {
    /// A series known through degree `coeffs.len() - 1`.
    pub fn new(p: u64, coeffs: Vec<PadicScalar>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least a constant term");
        TruncSeries1 {
            p,
            coeffs,
            poly_degree: None,
        }
    }

    /// A polynomial, stored through degree `d` with exact zero padding.
    pub fn polynomial(p: u64, mut coeffs: Vec<PadicScalar>, d: usize) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        let deg = coeffs.len() - 1;
        coeffs.resize(d + 1, exact_zero(p));
        TruncSeries1 {
            p,
            coeffs,
            poly_degree: if deg <= d { Some(deg) } else { None },
        }
    }

    /// Polynomial with integer coefficients held at precision `prec`.
    pub fn from_ints(p: u64, ints: &[BigInt], d: usize, prec: i64) -> Self {
        let coeffs = ints
            .iter()
            .map(|c| {
                if c.is_zero() {
                    exact_zero(p)
                } else {
                    PadicScalar::from_bigint(p, c.clone(), prec)
                }
            })
            .collect();
        Self::polynomial(p, coeffs, d)
    }

    pub fn identity(p: u64, d: usize, prec: i64) -> Self {
        Self::from_ints(p, &[BigInt::zero(), BigInt::from(1)], d, prec)
    }

    pub fn zero(p: u64, d: usize) -> Self {
        Self::polynomial(p, vec![exact_zero(p)], d)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Truncation degree `D`.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &PadicScalar {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[PadicScalar] {
        &self.coeffs
    }

    /// `Some(deg)` when the series is a polynomial of degree `deg <= D`.
    pub fn poly_degree(&self) -> Option<usize> {
        self.poly_degree
    }

    pub fn is_polynomial(&self) -> bool {
        self.poly_degree.is_some()
    }

    /// Smallest coefficient valuation, ignoring zeros.
    pub fn min_valuation(&self) -> Option<i64> {
        self.coeffs.iter().filter_map(|c| c.valuation()).min()
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero() || c.is_integral())
    }

    /// Smallest coefficient precision, ignoring exact zeros.
    pub fn precision(&self) -> i64 {
        self.coeffs.iter().map(|c| c.precision()).min().unwrap_or(EXACT)
    }

    pub fn truncate(&self, d: usize) -> Self {
        if d >= self.degree() {
            let mut out = self.clone();
            if d > self.degree() {
                assert!(self.is_polynomial(), "cannot extend a truncated series");
                out.coeffs.resize(d + 1, exact_zero(self.p));
            }
            return out;
        }
        TruncSeries1 {
            p: self.p,
            coeffs: self.coeffs[..=d].to_vec(),
            poly_degree: self.poly_degree.filter(|&k| k <= d),
        }
    }

    pub fn with_precision(&self, prec: i64) -> Self {
        TruncSeries1 {
            p: self.p,
            coeffs: self.coeffs.iter().map(|c| c.with_precision(prec)).collect(),
            poly_degree: self.poly_degree,
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&PadicScalar, &PadicScalar) -> PadicScalar) -> Self {
        let d = self.degree().min(other.degree());
        TruncSeries1 {
            p: self.p,
            coeffs: (0..=d).map(|n| f(&self.coeffs[n], &other.coeffs[n])).collect(),
            poly_degree: match (self.poly_degree, other.poly_degree) {
                (Some(a), Some(b)) => Some(a.max(b).min(d)),
                _ => None,
            },
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        TruncSeries1 {
            p: self.p,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            poly_degree: self.poly_degree,
        }
    }

    pub fn scale(&self, a: &PadicScalar) -> Self {
        TruncSeries1 {
            p: self.p,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
            poly_degree: self.poly_degree,
        }
    }

    /// Product truncated at the smaller of the two degrees.
    pub fn mul(&self, other: &Self) -> Self {
        let d = self.degree().min(other.degree());
        let coeffs = (0..=d)
            .map(|n| {
                let pairs = (0..=n).map(|i| (&self.coeffs[i], &other.coeffs[n - i]));
                PadicScalar::sum_of_products(self.p, pairs, EXACT)
            })
            .collect();
        TruncSeries1 {
            p: self.p,
            coeffs,
            poly_degree: match (self.poly_degree, other.poly_degree) {
                (Some(a), Some(b)) if a + b <= d => Some(a + b),
                _ => None,
            },
        }
    }

    /// `self^0, self^1, ..., self^kmax`, each truncated at `D`.
    pub fn powers(&self, kmax: usize) -> Vec<Self> {
        let d = self.degree();
        let mut out = Vec::with_capacity(kmax + 1);
        let mut one = vec![exact_zero(self.p); d + 1];
        one[0] = PadicScalar::one(self.p, self.precision().clamp(1, 4096));
        out.push(TruncSeries1 {
            p: self.p,
            coeffs: one,
            poly_degree: Some(0),
        });
        for k in 1..=kmax {
            let next = if k == 1 {
                self.clone()
            } else {
                out[k - 1].mul(self)
            };
            out.push(next);
        }
        out
    }

    /// `self(inner(X))`. The inner series must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if !inner.coeffs[0].is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let d = self.degree().min(inner.degree());
        let inner = inner.truncate(d);
        let kmax = match self.poly_degree {
            Some(k) => k.min(d),
            None => d,
        };
        let pows = inner.powers(kmax);
        let coeffs = (0..=d)
            .map(|n| {
                let pairs = (0..=kmax.min(n)).map(|k| (&self.coeffs[k], &pows[k].coeffs[n]));
                PadicScalar::sum_of_products(self.p, pairs, EXACT)
            })
            .collect();
        let poly_degree = match (self.poly_degree, inner.poly_degree) {
            (Some(a), Some(b)) if a * b <= d => Some(a * b),
            _ => None,
        };
        Ok(TruncSeries1 {
            p: self.p,
            coeffs,
            poly_degree,
        })
    }

    /// `sum_(n <= upto) c_n x^n` with terms below the target precision
    /// skipped. No tail accounting; see [`Self::eval`].
    pub fn eval_partial(&self, x: &FieldElement, upto: usize, target: i64) -> FieldElement {
        let field = x.field();
        let e = field.e() as i64;
        let vx = x.val_or_prec();
        let mut acc = FieldElement::zero(field, target);
        let mut pw = FieldElement::one(field, target.max(1) + 1);
        let upto = upto.min(self.degree());
        for n in 0..=upto {
            if n > 0 {
                pw = &pw * x;
            }
            let c = &self.coeffs[n];
            if c.is_zero() {
                let bound = e.saturating_mul(c.precision()).saturating_add(n as i64 * vx);
                if bound < acc.precision() {
                    acc = acc.with_precision(bound);
                }
                continue;
            }
            let term = pw.mul_scalar(c);
            acc = &acc + &term;
            if n as i64 * vx >= acc.precision() + e * 64 && vx > 0 {
                break;
            }
        }
        acc
    }

    /// Value of an integral series at `x` with `v_L(x) >= 1`. Terms past the
    /// truncation degree are bounded by `(D + 1) v_L(x)` unless the series is
    /// a polynomial.
    pub fn eval(&self, x: &FieldElement) -> Result<FieldElement> {
        let v = x.val_or_prec();
        if v < 1 {
            return Err(Error::OutsideMaximalIdeal);
        }
        let mut target = x.precision() + x.field().e() as i64 * 2 * self.precision().min(EXACT / 4);
        let upto = match self.poly_degree {
            Some(k) => k,
            None => {
                target = target.min((self.degree() as i64 + 1) * v);
                self.degree()
            }
        };
        // terms with n v >= target vanish (coefficients are integral)
        let upto = upto.min((target / v) as usize + 1);
        Ok(self.eval_partial(x, upto, target))
    }

    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            vars: 1,
            d: self.degree(),
            coeffs: serde_json::to_value(self.coeffs.iter().map(scalar_to_json).collect::<Vec<_>>())
                .expect("plain data"),
            terminates: self.poly_degree.map(|_| true),
        }
    }

    pub fn from_json(p: u64, j: &SeriesJson) -> Result<Self> {
        if j.vars != 1 {
            return Err(Error::Parse("expected a univariate series".into()));
        }
        let raw: Vec<ScalarTriple> =
            serde_json::from_value(j.coeffs.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.len() != j.d + 1 {
            return Err(Error::Parse("coefficient count does not match D".into()));
        }
        let coeffs = raw.iter().map(|t| scalar_from_json(p, t)).collect::<Result<Vec<_>>>()?;
        Ok(if j.terminates == Some(true) {
            Self::polynomial(p, coeffs, j.d)
        } else {
            Self::new(p, coeffs)
        })
    }
}

/// A scalar as `[valuation, "hex unit", precision]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarTriple(pub i64, pub String, pub i64);

pub fn scalar_to_json(c: &PadicScalar) -> ScalarTriple {
    match c.valuation() {
        None => ScalarTriple(0, "0".into(), c.precision()),
        Some(v) => ScalarTriple(v, c.unit().to_str_radix(16), c.precision()),
    }
}

pub fn scalar_from_json(p: u64, t: &ScalarTriple) -> Result<PadicScalar> {
    let u = BigInt::parse_bytes(t.1.as_bytes(), 16)
        .ok_or_else(|| Error::Parse(format!("bad hex mantissa {:?}", t.1)))?;
    Ok(PadicScalar::from_scaled(p, t.0, u, t.2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub vars: u8,
    #[serde(rename = "D")]
    pub d: usize,
    pub coeffs: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminates: Option<bool>,
}

/// Triangular bivariate series, `rows[i][j]` the coefficient of `X^i Y^j`
/// for `i + j <= D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncSeries2 {
    p: u64,
    rows: Vec<Vec<PadicScalar>>,
}

impl TruncSeries2 {
    pub fn from_fn(p: u64, d: usize, mut f: impl FnMut(usize, usize) -> PadicScalar) -> Self {
        let rows = (0..=d).map(|i| (0..=d - i).map(|j| f(i, j)).collect()).collect();
        TruncSeries2 { p, rows }
    }

    pub fn zero(p: u64, d: usize) -> Self {
        Self::from_fn(p, d, |_, _| exact_zero(p))
    }

    /// `X + Y`.
    pub fn additive(p: u64, d: usize, prec: i64) -> Self {
        Self::from_fn(p, d, |i, j| {
            if i + j == 1 {
                PadicScalar::one(p, prec)
            } else {
                exact_zero(p)
            }
        })
    }

    /// `X + Y + XY`.
    pub fn multiplicative(p: u64, d: usize, prec: i64) -> Self {
        Self::from_fn(p, d, |i, j| {
            if (i, j) == (1, 0) || (i, j) == (0, 1) || (i, j) == (1, 1) {
                PadicScalar::one(p, prec)
            } else {
                exact_zero(p)
            }
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn coeff(&self, i: usize, j: usize) -> &PadicScalar {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<PadicScalar>] {
        &self.rows
    }

    pub fn truncate(&self, d: usize) -> Self {
        let d = d.min(self.degree());
        Self::from_fn(self.p, d, |i, j| self.rows[i][j].clone())
    }

    pub fn precision(&self) -> i64 {
        self.rows
            .iter()
            .flatten()
            .map(|c| c.precision())
            .min()
            .unwrap_or(EXACT)
    }

    pub fn with_precision(&self, prec: i64) -> Self {
        Self::from_fn(self.p, self.degree(), |i, j| self.rows[i][j].with_precision(prec))
    }

    pub fn is_integral(&self) -> bool {
        self.rows.iter().flatten().all(|c| c.is_zero() || c.is_integral())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.p, self.degree(), |i, j| self.rows[j][i].clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let d = self.degree().min(other.degree());
        Self::from_fn(self.p, d, |i, j| &self.rows[i][j] - &other.rows[i][j])
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.degree().min(other.degree());
        Self::from_fn(self.p, d, |i, j| &self.rows[i][j] + &other.rows[i][j])
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().flatten().all(|c| c.is_zero())
    }

    /// Schoolbook product, `O(D^4)`; for small checks only.
    pub fn mul(&self, other: &Self) -> Self {
        let d = self.degree().min(other.degree());
        Self::from_fn(self.p, d, |i, j| {
            let mut pairs = Vec::new();
            for a in 0..=i {
                for b in 0..=j {
                    pairs.push((&self.rows[a][b], &other.rows[i - a][j - b]));
                }
            }
            PadicScalar::sum_of_products(self.p, pairs, EXACT)
        })
    }

    /// `F(g(X), h(X))` as a univariate series.
    pub fn substitute(&self, g: &TruncSeries1, h: &TruncSeries1) -> Result<TruncSeries1> {
        if !g.coeff(0).is_zero() || !h.coeff(0).is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let d = self.degree().min(g.degree()).min(h.degree());
        let gp = g.truncate(d).powers(d);
        let hp = h.truncate(d).powers(d);
        // T_i = sum_j F_ij h^j, then sum_i g^i T_i
        let mut out: Option<TruncSeries1> = None;
        for i in 0..=d {
            let t_coeffs = (0..=d)
                .map(|n| {
                    let pairs = (0..=(d - i).min(n)).map(|j| (&self.rows[i][j], &hp[j].coeffs[n]));
                    PadicScalar::sum_of_products(self.p, pairs, EXACT)
                })
                .collect();
            let t = TruncSeries1::new(self.p, t_coeffs);
            let term = gp[i].mul(&t);
            out = Some(match out {
                None => term,
                Some(acc) => acc.add(&term),
            });
        }
        Ok(out.expect("degree is nonnegative"))
    }

    /// `F(g(X), h(Y))` as a bivariate series, via `G^T F H` with the power
    /// matrices of `g` and `h`.
    pub fn substitute_bi(&self, g: &TruncSeries1, h: &TruncSeries1) -> Result<Self> {
        if !g.coeff(0).is_zero() || !h.coeff(0).is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let d = self.degree().min(g.degree()).min(h.degree());
        let gp = g.truncate(d).powers(d);
        let hp = h.truncate(d).powers(d);
        // M[i][b] = sum_j F_ij (h^j)_b
        let m: Vec<Vec<PadicScalar>> = (0..=d)
            .map(|i| {
                (0..=d - i.min(d))
                    .map(|b| {
                        let pairs = (0..=(d - i).min(b)).map(|j| (&self.rows[i][j], &hp[j].coeffs[b]));
                        PadicScalar::sum_of_products(self.p, pairs, EXACT)
                    })
                    .collect()
            })
            .collect();
        Ok(Self::from_fn(self.p, d, |a, b| {
            let pairs = (0..=a.min(d - b)).map(|i| (&gp[i].coeffs[a], &m[i][b]));
            PadicScalar::sum_of_products(self.p, pairs, EXACT)
        }))
    }

    /// `outer(F(X, Y))`, schoolbook; for small checks only.
    pub fn compose_outer(&self, outer: &TruncSeries1) -> Result<Self> {
        if !self.rows[0][0].is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let d = self.degree().min(outer.degree());
        let base = self.truncate(d);
        let mut acc = Self::zero(self.p, d);
        let mut pw = Self::from_fn(self.p, d, |i, j| {
            if i == 0 && j == 0 {
                PadicScalar::one(self.p, self.precision().clamp(1, 4096))
            } else {
                exact_zero(self.p)
            }
        });
        for k in 0..=d {
            if k > 0 {
                pw = pw.mul(&base);
            }
            let c = outer.coeff(k);
            if c.is_zero() {
                continue;
            }
            let term = Self::from_fn(self.p, d, |i, j| &pw.rows[i][j] * c);
            acc = acc.add(&term);
        }
        Ok(acc)
    }

    /// `F(x, y)` for `x, y` in the maximal ideal of a field, with the tail
    /// past total degree `D` bounded by `(D + 1) min(v(x), v(y))`.
    pub fn eval(&self, x: &FieldElement, y: &FieldElement) -> Result<FieldElement> {
        let (vx, vy) = (x.val_or_prec(), y.val_or_prec());
        if vx < 1 || vy < 1 {
            return Err(Error::OutsideMaximalIdeal);
        }
        let field = x.field();
        let d = self.degree();
        let target = x
            .precision()
            .min(y.precision())
            .min((d as i64 + 1) * vx.min(vy));
        let mut ypows = vec![FieldElement::one(field, target + 1)];
        let jmax = ((target / vy) as usize + 1).min(d);
        for j in 1..=jmax {
            let next = &ypows[j - 1] * y;
            ypows.push(next);
        }
        let mut acc = FieldElement::zero(field, target);
        let mut xp = FieldElement::one(field, target + 1);
        for i in 0..=d {
            if i > 0 {
                xp = &xp * x;
            }
            let ix = i as i64 * vx;
            if ix >= target {
                break;
            }
            let mut row = FieldElement::zero(field, target - ix);
            for (j, yp) in ypows.iter().enumerate().take(d - i + 1) {
                if ix + j as i64 * vy >= target {
                    break;
                }
                let c = &self.rows[i][j];
                if !c.is_zero() {
                    row = &row + &yp.mul_scalar(c);
                }
            }
            acc = &acc + &(&xp * &row);
        }
        Ok(acc.with_precision(target))
    }

    pub fn to_json(&self) -> SeriesJson {
        let rows: Vec<Vec<ScalarTriple>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(scalar_to_json).collect())
            .collect();
        SeriesJson {
            vars: 2,
            d: self.degree(),
            coeffs: serde_json::to_value(rows).expect("plain data"),
            terminates: None,
        }
    }

    pub fn from_json(p: u64, j: &SeriesJson) -> Result<Self> {
        if j.vars != 2 {
            return Err(Error::Parse("expected a bivariate series".into()));
        }
        let raw: Vec<Vec<ScalarTriple>> =
            serde_json::from_value(j.coeffs.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.len() != j.d + 1 || raw.iter().enumerate().any(|(i, r)| r.len() != j.d + 1 - i) {
            return Err(Error::Parse("coefficient triangle does not match D".into()));
        }
        let rows = raw
            .iter()
            .map(|r| r.iter().map(|t| scalar_from_json(p, t)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(TruncSeries2 { p, rows })
    }
}

/// Coefficients of `S^2, S^3, ...` filled in one degree at a time while
/// `S` itself is being solved for. `(S^k)_n` only needs `S_1 .. S_(n-1)`
/// once `k >= 2`, so each degree costs `O(D^2)`.
pub struct OnlinePowers {
    p: u64,
    /// `pw[k][n]` is `(S^k)_n`; row 1 is `S` itself.
    pw: Vec<Vec<PadicScalar>>,
}

impl OnlinePowers {
    pub fn new(p: u64, d: usize) -> Self {
        OnlinePowers {
            p,
            pw: vec![vec![exact_zero(p); d + 1]; d + 1],
        }
    }

    /// Records `S_n`.
    pub fn set(&mut self, n: usize, s_n: PadicScalar) {
        self.pw[1][n] = s_n;
    }

    /// Computes `(S^k)_n` for `2 <= k <= n`, assuming `S_1 .. S_(n-1)` set.
    pub fn advance(&mut self, n: usize) {
        for k in 2..=n {
            let val = {
                let pairs = (1..=n + 1 - k).map(|m| (&self.pw[1][m], &self.pw[k - 1][n - m]));
                PadicScalar::sum_of_products(self.p, pairs, EXACT)
            };
            self.pw[k][n] = val;
        }
    }

    /// `(S^k)_n`; valid once `advance(n)` has run (or `k = 1`).
    pub fn get(&self, k: usize, n: usize) -> &PadicScalar {
        &self.pw[k][n]
    }
}

/// Compositional inverse of a series `c_1 X + c_2 X^2 + ...` with `c_1` a
/// unit of `Q_p`, solved one degree at a time.
pub fn reversion(s: &TruncSeries1) -> Result<TruncSeries1> {
    let p = s.p();
    let d = s.degree();
    if !s.coeff(0).is_zero() {
        return Err(Error::NonzeroConstantTerm);
    }
    let c1_inv = s.coeff(1).inv()?;
    let mut online = OnlinePowers::new(p, d);
    let mut g = vec![exact_zero(p); d + 1];
    for n in 1..=d {
        online.advance(n);
        let rest = PadicScalar::sum_of_products(p, (2..=n).map(|k| (s.coeff(k), online.get(k, n))), EXACT);
        let rhs = if n == 1 {
            &PadicScalar::one(p, c1_inv.precision()) - &rest
        } else {
            -&rest
        };
        g[n] = &rhs * &c1_inv;
        online.set(n, g[n].clone());
    }
    Ok(TruncSeries1::new(p, g))
}

/// Successive approximation for equations `E(S) = 0` whose degree-`d`
/// linearisation is multiplication by `pi^d - pi`.
///
/// `start` fixes the coefficients below `first`; for each `d` from `first`
/// to `dmax`, `residual(d, s)` must return the degree-`d` coefficient of
/// `E(S)` computed with `S_d = 0`, and then `S_d = -residual / (pi^d - pi)`.
/// With `integral` set every produced coefficient must lie in `Z_p`.
pub fn solve_coefficientwise<F>(
    pi: &PadicScalar,
    start: &[PadicScalar],
    first: usize,
    dmax: usize,
    integral: bool,
    mut residual: F,
) -> Result<TruncSeries1>
where
    F: FnMut(usize, &[PadicScalar]) -> Result<PadicScalar>,
{
    let p = pi.p();
    let mut s: Vec<PadicScalar> = start[..first.min(start.len())].to_vec();
    s.resize(first, exact_zero(p));
    let mut pi_pow = pi.pow(first as u32);
    for d in first..=dmax {
        if d > first {
            pi_pow = &pi_pow * pi;
        }
        s.push(exact_zero(p));
        let r = residual(d, &s)?;
        let denom = &pi_pow - pi;
        let sd = -&r.div(&denom)?;
        if integral && !sd.is_zero() && !sd.is_integral() {
            return Err(Error::NonIntegralCoefficient { degree: d });
        }
        if sd.precision() < PRECISION_FLOOR {
            return Err(Error::exhausted(format!(
                "coefficient of degree {d} known to only {} digits",
                sd.precision()
            )));
        }
        s[d] = sd;
    }
    Ok(TruncSeries1::new(p, s))
}

/// Coefficientwise solution `S` of `dst(S(X)) = S(src(X))` with `S = a X + ...`.
/// `src_powers[k]` must hold `src^k`. Both series have linear term `pi`.
pub fn solve_commuting(
    pi: &PadicScalar,
    a: &PadicScalar,
    dst: &TruncSeries1,
    src_powers: &[TruncSeries1],
    d: usize,
) -> Result<TruncSeries1> {
    let p = pi.p();
    let mut online = OnlinePowers::new(p, d);
    online.set(1, a.clone());
    let start = vec![exact_zero(p), a.clone()];
    let dst_deg = dst.poly_degree().unwrap_or(d).min(d);
    solve_coefficientwise(pi, &start, 2, d, true, |n, s| {
        online.set(n - 1, s[n - 1].clone());
        online.advance(n);
        // S(src)_n with S_n = 0, minus dst(S)_n without its linear term
        let inner = PadicScalar::sum_of_products(
            p,
            (1..n).map(|k| (&s[k], src_powers[k].coeff(n))),
            EXACT,
        );
        let outer = PadicScalar::sum_of_products(
            p,
            (2..=dst_deg.min(n)).map(|k| (dst.coeff(k), online.get(k, n))),
            EXACT,
        );
        Ok(&inner - &outer)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(p: u64, v: &[i64], d: usize) -> TruncSeries1 {
        let v: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        TruncSeries1::from_ints(p, &v, d, 30)
    }

    fn assert_same(a: &TruncSeries1, b: &TruncSeries1) {
        assert_eq!(a.degree(), b.degree());
        for n in 0..=a.degree() {
            assert!((a.coeff(n) - b.coeff(n)).is_zero(), "degree {n}: {} vs {}", a.coeff(n), b.coeff(n));
        }
    }

    #[test]
    fn compose_examples() {
        let s = ints(5, &[0, 3, 1, 4], 6);
        let x = ints(5, &[0, 1], 6);
        assert_same(&x.compose(&s).unwrap(), &s);
        let sq = ints(5, &[0, 0, 1], 6);
        let pix = ints(5, &[0, 5], 6);
        assert_same(&sq.compose(&pix).unwrap(), &ints(5, &[0, 0, 25], 6));
        let m = ints(2, &[0, 2, 1], 8);
        assert_same(&m.compose(&m).unwrap(), &ints(2, &[0, 4, 6, 4, 1], 8));
        assert_eq!(sq.compose(&ints(5, &[1, 1], 6)).unwrap_err(), Error::NonzeroConstantTerm);
    }

    #[test]
    fn substitute_examples() {
        let s = ints(3, &[0, 2, 5, 1], 7);
        let add = TruncSeries2::additive(3, 7, 30);
        assert_same(&add.substitute(&s, &s).unwrap(), &s.scale(&PadicScalar::from_i64(3, 2, 30)));
        let mul = TruncSeries2::multiplicative(3, 7, 30);
        let x = ints(3, &[0, 1], 7);
        assert_same(&mul.substitute(&x, &x).unwrap(), &ints(3, &[0, 2, 1], 7));
        let mul2 = TruncSeries2::multiplicative(2, 8, 30);
        let g = ints(2, &[0, 2, 1], 8);
        assert_same(&mul2.substitute(&g, &g).unwrap(), &ints(2, &[0, 4, 6, 4, 1], 8));
    }

    #[test]
    fn substitute_bi_matches_schoolbook() {
        let f = TruncSeries2::from_fn(3, 6, |i, j| PadicScalar::from_i64(3, (i * 7 + j * 3) as i64 % 11, 30));
        let g = ints(3, &[0, 3, 1, 2], 6);
        let h = ints(3, &[0, 1, 0, 5], 6);
        let fast = f.substitute_bi(&g, &h).unwrap();
        // schoolbook: sum F_ij g(X)^i h(Y)^j
        let gp = g.powers(6);
        let hp = h.powers(6);
        let slow = TruncSeries2::from_fn(3, 6, |a, b| {
            let mut acc = PadicScalar::zero(3, EXACT);
            for i in 0..=6 {
                for j in 0..=6 - i {
                    acc = &acc + &(&(f.coeff(i, j) * gp[i].coeff(a)) * hp[j].coeff(b));
                }
            }
            acc
        });
        assert!(fast.sub(&slow).is_zero());
    }

    #[test]
    fn compose_is_associative() {
        let a = ints(5, &[0, 2, 7, 1, 3], 9);
        let b = ints(5, &[0, 5, 1, 0, 2], 9);
        let c = ints(5, &[0, 1, 4, 4], 9);
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        assert_same(&left, &right);
    }

    #[test]
    fn online_powers_match_batch_powers() {
        let s = ints(3, &[0, 2, 5, 1, 7, 1], 8);
        let batch = s.powers(8);
        let mut online = OnlinePowers::new(3, 8);
        for n in 1..=8 {
            online.advance(n);
            online.set(n, s.coeff(n).clone());
        }
        for k in 2..=8 {
            for n in k..=8 {
                assert!((online.get(k, n) - batch[k].coeff(n)).is_zero(), "k={k} n={n}");
            }
        }
    }

    #[test]
    fn commuting_series_recovers_identity_and_pi() {
        let p = 3;
        let pi = PadicScalar::from_i64(p, 3, 40);
        let lt = ints(p, &[0, 3, 0, 1], 12);
        let pw = lt.powers(12);
        let one = PadicScalar::one(p, 40);
        let id = solve_commuting(&pi, &one, &lt, &pw, 12).unwrap();
        assert_same(&id, &TruncSeries1::identity(p, 12, 40));
        let again = solve_commuting(&pi, &pi, &lt, &pw, 12).unwrap();
        assert_same(&again, &lt);
    }

    #[test]
    fn reversion_inverts() {
        let s = ints(3, &[0, 1, 3, 1, 9], 10);
        let r = reversion(&s).unwrap();
        assert_same(&s.compose(&r).unwrap(), &TruncSeries1::identity(3, 10, 30));
        assert_same(&r.compose(&s).unwrap(), &TruncSeries1::identity(3, 10, 30));
    }

    #[test]
    fn json_round_trip() {
        let s = ints(5, &[0, 3, -2, 4], 6);
        let back = TruncSeries1::from_json(5, &s.to_json()).unwrap();
        assert_eq!(s, back);
        let f = TruncSeries2::multiplicative(5, 4, 20);
        assert_eq!(TruncSeries2::from_json(5, &f.to_json()).unwrap(), f);
    }
}

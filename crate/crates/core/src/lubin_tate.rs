//! Lubin-Tate contexts over `Q_p`: the series `[pi](X)`, its formal group
//! law, endomorphisms, logarithm and exponential, and certified evaluation
//! of these on the maximal ideal of a tower.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::element::FieldElement;
use crate::error::{Error, Result};
use crate::field::LocalField;
use crate::padic::{vp_int, PadicScalar};
use crate::series::{
    exact_zero, reversion, solve_coefficientwise, solve_commuting, TruncSeries1, TruncSeries2, EXACT,
};

/// How `[pi](X)` is specified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeriesKind {
    /// `X^q + pi X`.
    Basic,
    /// `(1 + X)^p - 1`, with `pi = p`.
    Multiplicative,
    /// An integer polynomial, lowest degree first.
    Polynomial(Vec<BigInt>),
    /// A truncated series known to finite precision.
    Given(TruncSeries1),
}

impl SeriesKind {
    pub fn name(&self) -> &'static str {
        match self {
            SeriesKind::Basic => "basic",
            SeriesKind::Multiplicative => "multiplicative",
            SeriesKind::Polynomial(_) => "polynomial",
            SeriesKind::Given(_) => "custom",
        }
    }
}

/// Truncation degree policy: `p^(gamma + 2)`, at least 64, where `gamma`
/// is the minimal-valuation exponent for ramification `e`.
pub fn default_degree(p: u64, e: usize) -> usize {
    let g = gamma(p, e as i64).max(0) as u32;
    let d = (p as u128).saturating_pow(g + 2).min(1 << 20) as usize;
    d.max(64)
}

/// `gamma = floor(log_q(e / (q - 1))) + 1`, by exact comparison: the least
/// `g >= 0` with `q^g (q - 1) > e`.
pub fn gamma(q: u64, e: i64) -> i64 {
    ell_for(q, 1, e)
}

/// `ell_x` for `v_L(x) = v`: the least `n >= 0` with `q^n v (q - 1) > e`.
pub fn ell_for(q: u64, v: i64, e: i64) -> i64 {
    let lhs0 = BigInt::from(v) * BigInt::from(q - 1);
    let e = BigInt::from(e);
    let mut n = 0;
    let mut lhs = lhs0;
    while lhs <= e {
        lhs *= q;
        n += 1;
    }
    n
}

/// Is `x` with `v_L(x) = v` inside the disc `v_L(x) > e / (q - 1)`?
pub fn in_disc(q: u64, v: i64, e: i64) -> bool {
    v * (q as i64 - 1) > e
}

fn floor_log(p: u64, n: u64) -> i64 {
    let mut k = 0;
    let mut m = n;
    while m >= p {
        m /= p;
        k += 1;
    }
    k
}

/// Lower bound `n v - e floor(log_p n)` for the valuation of the degree-n
/// log term at an element of valuation `v`.
fn term_bound(p: u64, n: u64, v: i64, e: i64) -> i64 {
    n as i64 * v - e * floor_log(p, n)
}

/// Smallest `M` such that every term of degree `> M` has valuation at
/// least `target`. Valid when `v (p - 1) > e`: then the bound at `n` is
/// below the bound at any `m` with `floor(m / p) = n`, so it suffices to
/// check `(M, p (M + 1))`.
fn tail_cutoff(p: u64, v: i64, e: i64, target: i64) -> u64 {
    let mut m = 0u64;
    'outer: loop {
        for n in m + 1..p * (m + 1) {
            if term_bound(p, n, v, e) < target {
                m = n;
                continue 'outer;
            }
        }
        return m;
    }
}

/// Lower bound on `v(z - log z)` for `z` of valuation `v` in the disc.
fn log_defect(p: u64, v: i64, e: i64) -> i64 {
    (2..2 * p).map(|n| term_bound(p, n, v, e)).min().unwrap()
}

/// A validated Lubin-Tate context.
pub struct LtContext {
    p: u64,
    pi: BigInt,
    kind: SeriesKind,
    d: usize,
    prec: i64,
    /// Internal precision at which log, exp and F are computed.
    inner_prec: i64,
    lt: TruncSeries1,
    lt_powers: Vec<TruncSeries1>,
    log: TruncSeries1,
    exp: OnceLock<Result<TruncSeries1>>,
    fgl: OnceLock<Result<TruncSeries2>>,
    endo_cache: RwLock<HashMap<PadicScalar, TruncSeries1>>,
}

impl std::fmt::Debug for LtContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "LtContext(p={}, pi={}, kind={}, D={}, W={})",
            self.p,
            self.pi,
            self.kind.name(),
            self.d,
            self.prec
        )
    }
}

fn binomial_row(p: u64) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 0..p {
        let next = row[k as usize].clone() * BigInt::from(p - k) / BigInt::from(k + 1);
        row.push(next);
    }
    row
}

impl LtContext {
    /// `X^p + pi X` with an integer uniformiser `pi` of `Z_p`.
    pub fn basic(p: u64, pi: &BigInt, d: usize, prec: i64) -> Result<Self> {
        let mut c = vec![BigInt::zero(); p as usize + 1];
        c[1] = pi.clone();
        c[p as usize] += 1;
        Self::build(p, pi.clone(), SeriesKind::Basic, &c, d, prec)
    }

    /// `(1 + X)^p - 1`.
    pub fn multiplicative(p: u64, d: usize, prec: i64) -> Result<Self> {
        let mut c = binomial_row(p);
        c[0] = BigInt::zero();
        Self::build(p, BigInt::from(p), SeriesKind::Multiplicative, &c, d, prec)
    }

    /// An integer polynomial `[pi](X)`; `pi` is read off the linear term.
    pub fn from_polynomial(p: u64, coeffs: &[BigInt], d: usize, prec: i64) -> Result<Self> {
        let pi = coeffs.get(1).cloned().unwrap_or_default();
        Self::build(p, pi, SeriesKind::Polynomial(coeffs.to_vec()), coeffs, d, prec)
    }

    /// Validates a series given to finite precision. `pi` must be an
    /// integer uniformiser equal to the linear coefficient.
    pub fn validate_lt_series(pi: &PadicScalar, s: &TruncSeries1) -> Result<Self> {
        let p = pi.p();
        let pi_int = pi.to_bigint().map_err(|_| Error::NotLubinTate("pi must lie in Z_p".into()))?;
        let d = s.degree();
        let prec = s.precision();
        Self::check_series(p, &pi_int, s)?;
        Self::assemble(p, pi_int, SeriesKind::Given(s.clone()), s.clone(), d, prec, prec)
    }

    fn build(p: u64, pi: BigInt, kind: SeriesKind, coeffs: &[BigInt], d: usize, prec: i64) -> Result<Self> {
        if !crate::padic::is_prime(p) {
            return Err(Error::BadPrime(p));
        }
        let inner = prec + d as i64 + 32;
        let lt = TruncSeries1::from_ints(p, coeffs, d, inner);
        Self::check_series(p, &pi, &lt)?;
        Self::assemble(p, pi, kind, lt, d, prec, inner)
    }

    fn check_series(p: u64, pi: &BigInt, s: &TruncSeries1) -> Result<()> {
        if pi.is_zero() || vp_int(p, pi) != 1 {
            return Err(Error::NotLubinTate("linear coefficient must have valuation 1".into()));
        }
        if s.degree() < 2 {
            return Err(Error::NotLubinTate("truncation degree must be at least 2".into()));
        }
        if !s.coeff(0).is_zero() {
            return Err(Error::NotLubinTate("nonzero constant term".into()));
        }
        let pi_s = PadicScalar::from_bigint(p, pi.clone(), s.coeff(1).precision());
        if !(s.coeff(1) - &pi_s).is_zero() {
            return Err(Error::NotLubinTate("linear term is not pi X".into()));
        }
        for n in 2..=s.degree() {
            let c = s.coeff(n);
            if !c.is_zero() && !c.is_integral() {
                return Err(Error::NonIntegralCoefficient { degree: n });
            }
            let want = u64::from(n as u64 == p);
            let r = if c.is_zero() && c.precision() >= 1 {
                0
            } else {
                c.residue()?
            };
            if r != want {
                return Err(Error::NotLubinTate(format!(
                    "coefficient of X^{n} is {r} mod p, expected {want}"
                )));
            }
        }
        Ok(())
    }

    fn assemble(
        p: u64,
        pi: BigInt,
        kind: SeriesKind,
        lt: TruncSeries1,
        d: usize,
        prec: i64,
        inner: i64,
    ) -> Result<Self> {
        let lt_powers = lt.powers(d);
        let pi_s = PadicScalar::from_bigint(p, pi.clone(), inner);
        let log = Self::solve_log(&pi_s, &lt_powers, d)?;
        Ok(LtContext {
            p,
            pi,
            kind,
            d,
            prec,
            inner_prec: inner,
            lt,
            lt_powers,
            log,
            exp: OnceLock::new(),
            fgl: OnceLock::new(),
            endo_cache: RwLock::new(HashMap::new()),
        })
    }

    /// `log = X + ...` with `log([pi](X)) = pi log(X)`.
    fn solve_log(pi: &PadicScalar, lt_powers: &[TruncSeries1], d: usize) -> Result<TruncSeries1> {
        let p = pi.p();
        let start = vec![exact_zero(p), PadicScalar::one(p, pi.precision())];
        solve_coefficientwise(pi, &start, 2, d, false, |n, s| {
            Ok(PadicScalar::sum_of_products(
                p,
                (1..n).map(|k| (&s[k], lt_powers[k].coeff(n))),
                EXACT,
            ))
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// `q`, the residue field size of the base; equal to `p` here.
    pub fn q(&self) -> u64 {
        self.p
    }

    pub fn pi_int(&self) -> &BigInt {
        &self.pi
    }

    pub fn pi(&self) -> PadicScalar {
        PadicScalar::from_bigint(self.p, self.pi.clone(), self.inner_prec)
    }

    pub fn kind(&self) -> &SeriesKind {
        &self.kind
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn lt_series(&self) -> &TruncSeries1 {
        &self.lt
    }

    pub fn log_series(&self) -> &TruncSeries1 {
        &self.log
    }

    pub fn exp_series(&self) -> Result<&TruncSeries1> {
        self.exp
            .get_or_init(|| reversion(&self.log))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `F(X, Y) = exp(log X + log Y)`, assembled as `A^T M A` where
    /// `A[k] = log^k` and `M[k][l] = e_(k+l) binom(k+l, k)`.
    pub fn fgl(&self) -> Result<&TruncSeries2> {
        self.fgl
            .get_or_init(|| self.build_fgl())
            .as_ref()
            .map_err(Clone::clone)
    }

    fn build_fgl(&self) -> Result<TruncSeries2> {
        let p = self.p;
        let d = self.d;
        let exp = self.exp_series()?;
        let a = self.log.powers(d);
        // M[k][l] for k + l <= d
        let mut binom = vec![vec![BigInt::one()]];
        for n in 1..=d {
            let prev = &binom[n - 1];
            let mut row = vec![BigInt::one(); n + 1];
            for k in 1..n {
                row[k] = &prev[k - 1] + &prev[k];
            }
            binom.push(row);
        }
        let m: Vec<Vec<PadicScalar>> = (0..=d)
            .map(|k| {
                (0..=d - k)
                    .map(|l| {
                        let c = exp.coeff(k + l);
                        if c.is_zero() {
                            return c.clone();
                        }
                        c * &PadicScalar::from_bigint(p, binom[k + l][k].clone(), EXACT.min(self.inner_prec * 4))
                    })
                    .collect()
            })
            .collect();
        // N[k][b] = sum_l M[k][l] (A_l)_b
        let nmat: Vec<Vec<PadicScalar>> = (0..=d)
            .map(|k| {
                (0..=d - k)
                    .map(|b| {
                        let pairs = (0..=b.min(d - k)).map(|l| (&m[k][l], a[l].coeff(b)));
                        PadicScalar::sum_of_products(p, pairs, EXACT)
                    })
                    .collect()
            })
            .collect();
        let f = TruncSeries2::from_fn(p, d, |i, j| {
            let pairs = (0..=i.min(d - j)).map(|k| (a[k].coeff(i), &nmat[k][j]));
            PadicScalar::sum_of_products(p, pairs, EXACT)
        });
        for (i, row) in f.rows().iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if c.precision() < self.prec.min(self.inner_prec) {
                    return Err(Error::exhausted(format!(
                        "coefficient X^{i} Y^{j} of F known to {} digits",
                        c.precision()
                    )));
                }
                if !c.is_zero() && !c.is_integral() {
                    return Err(Error::NonIntegralCoefficient { degree: i + j });
                }
            }
        }
        Ok(f.with_precision(self.prec))
    }

    /// `[a](X)` for `a` in `Z_p`, memoised.
    pub fn endo(&self, a: &PadicScalar) -> Result<TruncSeries1> {
        if !a.is_zero() && !a.is_integral() {
            return Err(Error::NotIntegral);
        }
        let a = a.with_precision(self.inner_prec);
        if let Some(s) = self.endo_cache.read().expect("endo cache poisoned").get(&a) {
            return Ok(s.clone());
        }
        let s = if a.is_zero() {
            TruncSeries1::zero(self.p, self.d)
        } else {
            solve_commuting(&self.pi(), &a, &self.lt, &self.lt_powers, self.d)?
        };
        self.endo_cache
            .write()
            .expect("endo cache poisoned")
            .entry(a)
            .or_insert_with(|| s.clone());
        Ok(s)
    }

    pub fn endo_int(&self, a: i64) -> Result<TruncSeries1> {
        self.endo(&PadicScalar::from_i64(self.p, a, self.inner_prec))
    }

    /// `[pi^n](X)`, checked against `X^(q^n) + pi^n X mod pi X^2`.
    pub fn iterate_pi(&self, n: u32) -> Result<TruncSeries1> {
        let mut s = TruncSeries1::identity(self.p, self.d, self.inner_prec);
        for _ in 0..n {
            s = self.lt.compose(&s)?;
        }
        let pin = self.pi().pow(n);
        if !(s.coeff(1) - &pin).is_zero() {
            return Err(Error::Internal("linear term of the iterate is not pi^n".into()));
        }
        let qn = (self.p as u128).checked_pow(n);
        for k in 2..=self.d {
            let c = s.coeff(k);
            if c.precision() < 1 {
                return Err(Error::exhausted(format!("coefficient of X^{k} of the iterate")));
            }
            let want = u64::from(qn == Some(k as u128));
            let r = if c.is_zero() { 0 } else { c.residue()? };
            if r != want {
                return Err(Error::Internal(format!(
                    "iterate violates the congruence at X^{k}"
                )));
            }
        }
        Ok(s)
    }

    /// The morphism `theta = X + ...` with `dst(theta) = theta(src)`.
    pub fn build_lt_morphism(src: &LtContext, dst: &LtContext) -> Result<TruncSeries1> {
        if src.p != dst.p || src.pi != dst.pi {
            return Err(Error::Mismatch("contexts have different uniformisers".into()));
        }
        let d = src.d.min(dst.d);
        let one = PadicScalar::one(src.p, src.inner_prec.min(dst.inner_prec));
        let dst_lt = dst.lt.truncate(d);
        let powers: Vec<TruncSeries1> = src.lt_powers.iter().take(d + 1).map(|s| s.truncate(d)).collect();
        solve_commuting(&src.pi().with_precision(one.precision()), &one, &dst_lt, &powers, d)
    }

    // ---- element level -------------------------------------------------

    /// `[pi](x)`.
    pub fn apply_pi(&self, x: &FieldElement) -> Result<FieldElement> {
        self.lt.eval(x)
    }

    /// `[pi^n](x)`.
    pub fn apply_pi_n(&self, x: &FieldElement, n: u32) -> Result<FieldElement> {
        let mut y = x.clone();
        for _ in 0..n {
            if y.is_zero() {
                // [pi] fixes 0 and at least adds v_L(pi) digits
                let e = y.field().e() as i64;
                y = FieldElement::zero(y.field(), y.precision() + e);
                continue;
            }
            y = self.apply_pi(&y)?;
        }
        Ok(y)
    }

    /// `[a](x)`.
    pub fn apply_endo(&self, a: &PadicScalar, x: &FieldElement) -> Result<FieldElement> {
        self.endo(a)?.eval(x)
    }

    /// `F(x, y)`.
    pub fn add_points(&self, x: &FieldElement, y: &FieldElement) -> Result<FieldElement> {
        if x.is_zero() {
            return Ok(y.with_precision(x.precision()));
        }
        if y.is_zero() {
            return Ok(x.with_precision(y.precision()));
        }
        self.fgl()?.eval(x, y)
    }

    /// `F(x, [-1](y))`.
    pub fn sub_points(&self, x: &FieldElement, y: &FieldElement) -> Result<FieldElement> {
        let neg = self.apply_endo(&PadicScalar::from_i64(self.p, -1, self.inner_prec), y)?;
        self.add_points(x, &neg)
    }

    /// `pi^(-k)` embedded in `field` at precision large enough for an
    /// operand known to `prec` digits.
    fn pi_inverse_power(&self, field: &LocalField, k: i64, prec: i64) -> Result<FieldElement> {
        let e = field.e() as i64;
        let digits = prec.div_euclid(e) + 2 * k + 4;
        let pk = self.pi.pow(k as u32);
        let s = PadicScalar::from_ratio(self.p, &BigInt::one(), &pk, digits)?;
        Ok(FieldElement::from_scalar(field, &s))
    }

    /// `log(y)` by the series, for `y` inside the disc. When the tail cutoff
    /// exceeds the truncation degree, `log([pi^k](y)) / pi^k` is used
    /// instead; `k` is returned alongside the value.
    fn log_series_route(&self, y: &FieldElement) -> Result<(FieldElement, i64)> {
        let field = y.field();
        let e = field.e() as i64;
        let p = self.p;
        let mut y = y.clone();
        let mut extra = 0i64;
        loop {
            if y.is_zero() {
                return Ok((FieldElement::zero(field, y.precision()), extra));
            }
            let v = y.valuation()?;
            if !in_disc(p, v, e) {
                return Err(Error::Internal("series route called outside the disc".into()));
            }
            let target = y.precision();
            let cutoff = tail_cutoff(p, v, e, target);
            if cutoff as usize <= self.d {
                for n in 1..=cutoff {
                    let c = self.log.coeff(n as usize);
                    if let Some(vc) = c.valuation() {
                        if vc < -floor_log(p, n) {
                            return Err(Error::TailBoundViolated { degree: n as usize });
                        }
                    }
                }
                let value = self.log.eval_partial(&y, cutoff as usize, target);
                if extra == 0 {
                    return Ok((value, 0));
                }
                let inv = self.pi_inverse_power(field, extra, value.precision())?;
                return Ok((&value * &inv, extra));
            }
            if extra > 256 {
                return Err(Error::exhausted("log tail cutoff exceeds the truncation degree"));
            }
            y = self.apply_pi(&y)?;
            extra += 1;
        }
    }

    /// Certified `log_[pi](x)` for `x` in the maximal ideal.
    pub fn eval_log(&self, x: &FieldElement) -> Result<FieldElement> {
        Ok(self.eval_log_detailed(x)?.value)
    }

    pub fn eval_log_detailed(&self, x: &FieldElement) -> Result<LogEval> {
        let field = x.field();
        let e = field.e() as i64;
        let p = self.p;
        if x.is_zero() {
            if in_disc(p, x.precision(), e) {
                return Ok(LogEval {
                    value: FieldElement::zero(field, x.precision()),
                    ell: 0,
                    extra: 0,
                    wiles_depth: 0,
                    series_precision: x.precision(),
                    wiles_precision: x.precision(),
                });
            }
            return Err(Error::exhausted("input is zero at a precision outside the disc"));
        }
        let v = x.valuation()?;
        if v < 1 {
            return Err(Error::OutsideMaximalIdeal);
        }
        let ell = ell_for(p, v, e);
        let mut prev = x.clone();
        let mut y = x.clone();
        for _ in 0..ell {
            prev = y.clone();
            y = self.apply_pi(&y)?;
        }
        if ell > 0 {
            let vp = prev.valuation()?;
            if in_disc(p, vp, e) {
                return Err(Error::Internal("ell_x is not minimal".into()));
            }
        }
        if let Some(vy) = y.try_valuation() {
            if !in_disc(p, vy, e) {
                return Err(Error::Internal("[pi^ell](x) is not in the disc".into()));
            }
        } else if !in_disc(p, y.precision(), e) {
            return Err(Error::exhausted("[pi^ell](x) vanished before reaching the disc"));
        }
        let (log_y, extra) = self.log_series_route(&y)?;
        let total = ell + extra;
        let series_value = if ell == 0 {
            log_y
        } else {
            let inv = self.pi_inverse_power(field, ell, log_y.precision())?;
            &log_y * &inv
        };
        let target = series_value.precision();

        // quotient route: [pi^m](x) / pi^m agrees with log(x) to
        // defect(v(z)) - m e digits, z = [pi^m](x)
        let mut m = total;
        let mut z = self.apply_pi_n(&y, extra as u32)?;
        let cert = |z: &FieldElement, m: i64| -> i64 {
            let vz = z.val_or_prec();
            log_defect(p, vz, e).min(z.precision()) - m * e
        };
        let limit = total + 4 * target.max(1) / e.max(1) + 64;
        while cert(&z, m) < target && m < limit {
            z = self.apply_pi(&z)?;
            m += 1;
        }
        let z_next = self.apply_pi(&z)?;
        let w1 = &z * &self.pi_inverse_power(field, m, z.precision())?;
        let w2 = &z_next * &self.pi_inverse_power(field, m + 1, z_next.precision())?;
        let c1 = cert(&z, m);
        let c2 = cert(&z_next, m + 1);
        let w1 = w1.with_precision(c1);
        let w2 = w2.with_precision(c2);
        if !(&w1 - &w2).is_zero() {
            return Err(Error::Internal("quotient route disagrees at depths m and m+1".into()));
        }
        if !(&series_value - &w1).is_zero() {
            return Err(Error::Internal("series and quotient routes disagree".into()));
        }
        let prec = target.min(c1);
        Ok(LogEval {
            value: series_value.with_precision(prec),
            ell,
            extra,
            wiles_depth: m,
            series_precision: target,
            wiles_precision: c1,
        })
    }

    /// `exp(x)` for `x` inside the disc `v_L(x) > v_L(pi) / (q - 1)`.
    pub fn eval_exp(&self, x: &FieldElement) -> Result<FieldElement> {
        let field = x.field();
        let e = field.e() as i64;
        if x.is_zero() {
            return Ok(x.clone());
        }
        let v = x.valuation()?;
        if !in_disc(self.p, v, e) {
            return Err(Error::OutsideConvergenceDisc);
        }
        let target = x.precision();
        let exp = self.exp_series()?;
        let mut z = exp.eval_partial(x, self.d, target);
        if z.is_zero() || z.try_valuation() != Some(v) {
            z = x.clone();
        }
        // log is an isometry on the disc and log'(z) = 1 mod varpi, so the
        // correction z += x - log z converges linearly
        for _ in 0..(4 * target.max(1) + 16) {
            let (lz, _) = self.log_series_route(&z)?;
            let r = x - &lz;
            if r.is_zero() {
                return Ok(z.with_precision(r.precision().min(target)));
            }
            z = &z + &r;
        }
        Err(Error::exhausted("exp correction did not converge"))
    }

    /// The level-`n` torsion field `K_(pi^n)`: the tower cut out by
    /// `h([pi^(n-1)](X))` where `[pi](X) = X h(X)`, with `lambda = varpi`.
    pub fn torsion_field(&self, n: u32, prec: i64) -> Result<TorsionField> {
        if n == 0 {
            return Err(Error::Parse("torsion level must be at least 1".into()));
        }
        let coeffs: Vec<BigInt> = match &self.kind {
            SeriesKind::Given(_) => return Err(Error::SeriesNotPolynomial),
            _ => {
                let deg = self.lt.poly_degree().ok_or(Error::SeriesNotPolynomial)?;
                (0..=deg)
                    .map(|k| self.lt.coeff(k).to_bigint())
                    .collect::<Result<_>>()?
            }
        };
        let h: Vec<BigInt> = coeffs[1..].to_vec();
        let mut inner = vec![BigInt::zero(), BigInt::one()];
        for _ in 1..n {
            inner = int_compose(&coeffs, &inner);
        }
        let def = int_compose(&h, &inner);
        let e = def.len() - 1;
        let eis: Vec<Vec<BigInt>> = def.iter().map(|c| vec![c.clone()]).collect();
        let field = LocalField::make_tower(self.p, 1, e, &eis, None, prec)?;
        let lambda = FieldElement::uniformizer(&field, prec);
        let level_n = self.apply_pi_n(&lambda, n)?;
        let level_n1 = self.apply_pi_n(&lambda, n - 1)?;
        if !level_n.is_zero() || level_n1.is_zero() || lambda.valuation()? != 1 {
            return Err(Error::Internal("torsion point check failed".into()));
        }
        Ok(TorsionField {
            level: n,
            field,
            lambda,
            defining_poly: def,
        })
    }

    /// Bivariate coefficientwise solution of `[pi](F) = F([pi]X, [pi]Y)`,
    /// `O(D^5)`; an independent check on [`Self::fgl`] at small degree.
    pub fn fgl_coefficientwise(&self, d: usize) -> Result<TruncSeries2> {
        let p = self.p;
        let d = d.min(self.d);
        let lt = self.lt.truncate(d);
        let pi = self.pi();
        let mut f = TruncSeries2::additive(p, d, self.inner_prec);
        let mut pi_pow = pi.clone();
        for deg in 2..=d {
            pi_pow = &pi_pow * &pi;
            let inner = f.substitute_bi(&lt, &lt)?;
            let outer = f.compose_outer(&lt)?;
            let denom = &pi_pow - &pi;
            let mut updates = Vec::new();
            for i in 0..=deg {
                let j = deg - i;
                let r = inner.coeff(i, j) - outer.coeff(i, j);
                let c = -&r.div(&denom)?;
                if !c.is_zero() && !c.is_integral() {
                    return Err(Error::NonIntegralCoefficient { degree: deg });
                }
                updates.push((i, j, c));
            }
            let prev = f.clone();
            f = TruncSeries2::from_fn(p, d, |i, j| {
                if i + j == deg {
                    updates[i].2.clone()
                } else {
                    prev.coeff(i, j).clone()
                }
            });
        }
        Ok(f)
    }

    pub fn inner_precision(&self) -> i64 {
        self.inner_prec
    }
}

/// Composition of integer polynomials, exact.
pub(crate) fn int_compose(outer: &[BigInt], inner: &[BigInt]) -> Vec<BigInt> {
    let mut acc: Vec<BigInt> = vec![BigInt::zero()];
    for c in outer.iter().rev() {
        // acc = acc * inner + c
        let mut next = vec![BigInt::zero(); acc.len() + inner.len() - 1];
        for (i, a) in acc.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in inner.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        next[0] += c;
        while next.len() > 1 && next.last().is_some_and(|x| x.is_zero()) {
            next.pop();
        }
        acc = next;
    }
    acc
}

/// Details of a certified log evaluation.
#[derive(Clone, Debug)]
pub struct LogEval {
    pub value: FieldElement,
    pub ell: i64,
    /// Extra `[pi]` steps taken beyond `ell` by the series route.
    pub extra: i64,
    /// Depth `m` of the quotient `[pi^m](x) / pi^m` used as a cross-check.
    pub wiles_depth: i64,
    pub series_precision: i64,
    pub wiles_precision: i64,
}

/// `K_(pi^n)` with its uniformiser `lambda`, a generator of the
/// `[pi^n]`-torsion.
#[derive(Clone, Debug)]
pub struct TorsionField {
    pub level: u32,
    pub field: LocalField,
    pub lambda: FieldElement,
    pub defining_poly: Vec<BigInt>,
}

/// `log` coefficient sanity for the multiplicative context:
/// `(-1)^(n-1) / n` as an exact scalar.
pub fn mercator_coefficient(p: u64, n: usize, prec: i64) -> Result<PadicScalar> {
    let sign = if n % 2 == 1 { 1 } else { -1 };
    PadicScalar::from_ratio(p, &BigInt::from(sign), &BigInt::from(n), prec)
}

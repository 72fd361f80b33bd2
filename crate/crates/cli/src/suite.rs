//! The verification suite: one finite-precision check per theorem id, run
//! over a configurable family of towers, primes and torsion levels.

use std::collections::BTreeMap;
use std::sync::Arc;

use ltforge::lubin_tate::{LtContext, TorsionField};
use ltforge::padic::PadicScalar;
use ltforge::series::{TruncSeries1, TruncSeries2};
use ltforge::structure::{self, GeneratingSet, Relation};
use ltforge::{Error, FieldElement, LocalField, Result};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::expr::parse_element;

pub const THEOREMS: &[&str] = &[
    "ltseries",
    "fgl",
    "endo",
    "log-hom",
    "valpix",
    "genlemgen",
    "wiles",
    "kernel",
    "FV",
    "regisolem",
    "FV3",
    "basisthm1",
    "basisthm2",
    "logval",
    "unitinv",
    "minval",
    "genspan",
    "genval2",
    "mincor",
    "ltbasis",
    "example-p3",
    "example-zetap",
];

#[derive(Clone, Debug)]
pub enum SeriesChoice {
    Basic { pi: Option<BigInt> },
    Multiplicative,
    /// A user-supplied series; its linear coefficient is `pi`.
    Custom(TruncSeries1),
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub primes: Vec<u64>,
    /// `(p, f, e, Eisenstein polynomial)`, coefficients lowest first.
    pub towers: Vec<(u64, usize, usize, Vec<Vec<BigInt>>)>,
    pub lt_levels: Vec<(u64, u32)>,
    pub series: SeriesChoice,
    pub precision: i64,
    pub degree: usize,
    /// Overrides every per-theorem sample count.
    pub samples: Option<usize>,
    pub seed: u64,
}

fn pure_eis(p: u64, e: usize) -> Vec<Vec<BigInt>> {
    let mut eis = vec![vec![BigInt::from(0)]; e + 1];
    eis[0] = vec![-BigInt::from(p)];
    eis[e] = vec![BigInt::from(1)];
    eis
}

/// `X^e + sign * p`.
fn binomial_eis(p: u64, e: usize, sign: i64) -> Vec<Vec<BigInt>> {
    let mut eis = pure_eis(p, e);
    eis[0] = vec![BigInt::from(sign * p as i64)];
    eis
}

impl SuiteConfig {
    /// The default family: `p` in {2, 3, 5}, `e <= 8`, `f <= 2`, `n <= 2`.
    pub fn default_suite() -> Self {
        let pure = |p: u64, f: usize, e: usize| (p, f, e, pure_eis(p, e));
        let towers = vec![
            pure(2, 1, 1),
            pure(2, 1, 3),
            pure(2, 2, 2),
            pure(3, 1, 1),
            pure(3, 1, 2),
            (3, 1, 2, binomial_eis(3, 2, 1)),
            pure(3, 1, 4),
            pure(3, 1, 8),
            pure(3, 2, 1),
            pure(3, 2, 2),
            pure(5, 1, 4),
            (5, 1, 4, binomial_eis(5, 4, 1)),
            pure(5, 1, 6),
            pure(5, 1, 8),
            pure(5, 2, 2),
        ];
        SuiteConfig {
            primes: vec![2, 3, 5],
            towers,
            lt_levels: vec![(3, 1), (5, 1), (2, 2), (3, 2)],
            series: SeriesChoice::Multiplicative,
            precision: 64,
            degree: 128,
            samples: None,
            seed: 0,
        }
    }

    fn samples(&self, default: usize) -> usize {
        self.samples.unwrap_or(default).max(1)
    }
}

#[derive(Clone, Debug)]
pub enum Target {
    Prime(u64),
    Tower(LocalField),
    Level { p: u64, n: u32 },
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub theorem: String,
    pub field: Value,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    pub precision: i64,
    pub details: Value,
}

impl Report {
    pub fn violated(&self) -> bool {
        self.status == "violated"
    }
}

/// Accumulates the outcome of one check; the first failure is kept as the
/// witness.
struct Check {
    status: &'static str,
    witness: Option<Value>,
    details: Map<String, Value>,
}

impl Check {
    fn new() -> Self {
        Check {
            status: "consistent",
            witness: None,
            details: Map::new(),
        }
    }

    fn not_applicable(reason: &str) -> Self {
        let mut c = Check::new();
        c.status = "not-applicable";
        c.set("reason", reason);
        c
    }

    fn set(&mut self, key: &str, v: impl Serialize) {
        self.details.insert(key.into(), serde_json::to_value(v).unwrap());
    }

    fn require(&mut self, cond: bool, what: &str, witness: impl FnOnce() -> Value) {
        if !cond && self.status != "violated" {
            self.status = "violated";
            self.witness = Some(witness());
            self.set("failed", what);
        }
    }
}

fn elem(x: &FieldElement) -> Value {
    serde_json::to_value(x.to_json()).unwrap()
}

fn fnv(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Built contexts and fields shared by every check.
pub struct Env {
    pub cfg: SuiteConfig,
    ctx: BTreeMap<u64, Arc<LtContext>>,
    mult: BTreeMap<u64, Arc<LtContext>>,
    towers: Vec<LocalField>,
}

impl Env {
    pub fn new(cfg: SuiteConfig) -> Result<Self> {
        let (n, d) = (cfg.precision, cfg.degree);
        let mut primes: Vec<u64> = cfg.primes.clone();
        primes.extend(cfg.towers.iter().map(|t| t.0));
        primes.extend(cfg.lt_levels.iter().map(|t| t.0));
        if let SeriesChoice::Custom(s) = &cfg.series {
            primes = vec![s.p()];
        }
        primes.sort_unstable();
        primes.dedup();
        let mut ctx = BTreeMap::new();
        let mut mult = BTreeMap::new();
        for &p in &primes {
            let m = Arc::new(LtContext::multiplicative(p, d, n)?);
            let c = match &cfg.series {
                SeriesChoice::Multiplicative => m.clone(),
                SeriesChoice::Basic { pi } => {
                    let pi = pi.clone().unwrap_or_else(|| BigInt::from(p));
                    Arc::new(LtContext::basic(p, &pi, d, n)?)
                }
                SeriesChoice::Custom(s) => Arc::new(LtContext::validate_lt_series(&s.coeff(1).clone(), s)?),
            };
            ctx.insert(p, c);
            mult.insert(p, m);
        }
        let towers = cfg
            .towers
            .iter()
            .filter(|t| ctx.contains_key(&t.0))
            .map(|(p, f, e, eis)| LocalField::make_tower(*p, *f, *e, eis, None, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Env { cfg, ctx, mult, towers })
    }

    pub fn ctx(&self, p: u64) -> Result<&LtContext> {
        self.ctx
            .get(&p)
            .map(|c| c.as_ref())
            .ok_or_else(|| Error::Mismatch(format!("no context for p = {p}")))
    }

    fn mult(&self, p: u64) -> Result<&LtContext> {
        self.mult
            .get(&p)
            .map(|c| c.as_ref())
            .ok_or_else(|| Error::Mismatch(format!("no context for p = {p}")))
    }

    fn n(&self) -> i64 {
        self.cfg.precision
    }

    fn is_regular(&self, l: &LocalField) -> bool {
        self.ctx(l.p())
            .and_then(|c| structure::regularity_check(l, c))
            .map(|r| r.is_regular)
            .unwrap_or(false)
    }

    fn ratio_integral(&self, l: &LocalField) -> bool {
        self.ctx(l.p())
            .map(|c| structure::v_pi(l, c) % (c.q() as i64 - 1) == 0)
            .unwrap_or(false)
    }

    fn primes(&self) -> Vec<u64> {
        self.ctx.keys().copied().collect()
    }

    fn levels(&self) -> Vec<Target> {
        self.cfg
            .lt_levels
            .iter()
            .filter(|(p, _)| self.ctx.contains_key(p))
            .map(|&(p, n)| Target::Level { p, n })
            .collect()
    }

    fn towers_where(&self, pred: impl Fn(&LocalField) -> bool) -> Vec<Target> {
        self.towers.iter().filter(|l| pred(l)).cloned().map(Target::Tower).collect()
    }

    /// Targets a theorem runs over under this configuration.
    pub fn targets(&self, theorem: &str) -> Vec<Target> {
        match theorem {
            "ltseries" | "fgl" | "endo" => self.primes().into_iter().map(Target::Prime).collect(),
            "log-hom" | "valpix" | "genlemgen" | "wiles" | "FV" | "FV3" | "minval" => self.towers_where(|_| true),
            "regisolem" => {
                let mut t = self.towers_where(|l| self.ratio_integral(l));
                t.extend(self.levels().into_iter().filter(|t| matches!(t, Target::Level { n: 1, .. })));
                t
            }
            "basisthm1" | "basisthm2" | "logval" | "unitinv" => self.towers_where(|l| self.is_regular(l)),
            "genspan" | "genval2" => {
                let mut t = self.towers_where(|l| !self.is_regular(l));
                t.extend(self.levels());
                t
            }
            "kernel" | "mincor" | "ltbasis" => self.levels(),
            "example-p3" => {
                let mut t = Vec::new();
                if self.mult.contains_key(&3) {
                    t.push(Target::Tower(LocalField::pure(3, 1, 4, self.n()).unwrap()));
                }
                if self.mult.contains_key(&5) {
                    t.push(Target::Tower(LocalField::pure(5, 1, 6, self.n()).unwrap()));
                }
                t
            }
            "example-zetap" => [3u64, 5]
                .into_iter()
                .filter(|p| self.mult.contains_key(p))
                .map(|p| Target::Level { p, n: 1 })
                .collect(),
            _ => Vec::new(),
        }
    }

    fn torsion(&self, ctx: &LtContext, n: u32) -> Result<TorsionField> {
        ctx.torsion_field(n, self.n())
    }

    fn field_json(&self, theorem: &str, target: &Target) -> Value {
        match target {
            Target::Prime(p) => json!({ "p": p }),
            Target::Tower(l) => serde_json::to_value(l.spec()).unwrap(),
            Target::Level { p, n } => {
                let ctx = if theorem == "example-zetap" { self.mult(*p) } else { self.ctx(*p) };
                let tower = ctx
                    .and_then(|c| self.torsion(c, *n))
                    .map(|tf| serde_json::to_value(tf.field.spec()).unwrap())
                    .unwrap_or(Value::Null);
                json!({ "p": p, "lt_level": n, "tower": tower })
            }
        }
    }

    /// Runs one theorem on one target. Errors are reported as violations.
    pub fn run(&self, theorem: &str, target: &Target, index: usize) -> Report {
        let seed = self.cfg.seed ^ fnv(theorem) ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let check = self.dispatch(theorem, target, &mut rng).unwrap_or_else(|e| {
            let mut c = Check::new();
            c.require(false, "error", || json!(e.to_string()));
            c
        });
        Report {
            theorem: theorem.to_string(),
            field: self.field_json(theorem, target),
            status: check.status,
            witness: check.witness,
            precision: self.n(),
            details: Value::Object(check.details),
        }
    }

    /// All reports for the given theorem ids, in deterministic order.
    pub fn run_all(&self, theorems: &[&str]) -> Vec<Report> {
        let jobs: Vec<(&str, Target, usize)> = theorems
            .iter()
            .flat_map(|t| self.targets(t).into_iter().enumerate().map(move |(i, x)| (*t, x, i)))
            .collect();
        jobs.par_iter().map(|(t, x, i)| self.run(t, x, *i)).collect()
    }

    fn dispatch(&self, theorem: &str, target: &Target, rng: &mut ChaCha8Rng) -> Result<Check> {
        match (theorem, target) {
            ("ltseries", Target::Prime(p)) => self.ltseries(*p),
            ("fgl", Target::Prime(p)) => self.fgl(*p, rng),
            ("endo", Target::Prime(p)) => self.endo(*p, rng),
            ("kernel", Target::Level { p, n }) => self.kernel(*p, *n, rng),
            ("mincor", Target::Level { p, n }) => self.mincor(*p, *n, rng),
            ("ltbasis", Target::Level { p, n }) => self.ltbasis(*p, *n, rng),
            ("example-zetap", Target::Level { p, .. }) => self.example_zetap(*p),
            ("example-p3", Target::Tower(l)) => self.example_p3(l),
            (_, Target::Tower(l)) => {
                let ctx = self.ctx(l.p())?;
                self.field_check(theorem, l, ctx, None, rng)
            }
            (_, Target::Level { p, n }) => {
                let ctx = self.ctx(*p)?;
                let tf = self.torsion(ctx, *n)?;
                self.field_check(theorem, &tf.field, ctx, Some(&tf.lambda), rng)
            }
            _ => Err(Error::Mismatch(format!("{theorem} does not apply to this target"))),
        }
    }

    fn field_check(
        &self,
        theorem: &str,
        l: &LocalField,
        ctx: &LtContext,
        lambda: Option<&FieldElement>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Check> {
        match theorem {
            "log-hom" => self.log_hom(l, ctx, rng, self.cfg.samples(50)),
            "valpix" => self.valpix(l, ctx, rng),
            "genlemgen" => self.genlemgen(l, ctx, rng),
            "wiles" => self.wiles(l, ctx, rng),
            "FV" => self.fv(l, ctx, rng),
            "regisolem" => self.regisolem(l, ctx, rng),
            "FV3" => self.fv3(l, ctx, rng),
            "basisthm1" => self.basisthm1(l, ctx, rng),
            "basisthm2" => self.basisthm2(l, ctx, rng),
            "logval" => self.logval(l, ctx, rng),
            "unitinv" => self.unitinv(l, ctx, rng),
            "minval" => self.minval(l, ctx, rng),
            "genspan" => self.genspan(l, ctx, rng),
            "genval2" => self.genval2(l, ctx, lambda, rng),
            _ => Err(Error::Mismatch(format!("{theorem} does not apply to this target"))),
        }
    }
}

// ---- helpers ------------------------------------------------------------

/// First degree `<= upto` where `a` and `b` differ, and the least precision
/// at which they were compared.
fn series_diff(a: &TruncSeries1, b: &TruncSeries1, upto: usize) -> (Option<usize>, i64) {
    let mut min_prec = i64::MAX;
    for n in 0..=upto.min(a.degree()).min(b.degree()) {
        let d = a.coeff(n) - b.coeff(n);
        min_prec = min_prec.min(d.precision());
        if !d.is_zero() {
            return (Some(n), min_prec);
        }
    }
    (None, min_prec)
}

fn random_point<R: Rng>(l: &LocalField, rng: &mut R, vmin: i64, vmax: i64, prec: i64) -> Result<FieldElement> {
    let v = rng.gen_range(vmin..=vmax);
    FieldElement::random_with_valuation(l, rng, v, prec)
}

fn random_zp<R: Rng>(p: u64, rng: &mut R, prec: i64) -> PadicScalar {
    let digits: Vec<u64> = (0..prec).map(|_| rng.gen_range(0..p)).collect();
    let x = digits.iter().rev().fold(BigInt::from(0), |acc, d| acc * p + d);
    PadicScalar::from_bigint(p, x, prec)
}

/// Every coordinate of `x` against `basis` lies in `O_K`.
fn integral_in(x: &FieldElement, basis: &[FieldElement]) -> Result<bool> {
    let c = structure::coords_in_span(x, basis)?;
    Ok(c.iter().all(|a| a.is_integral()))
}

fn top_level(q: u64, vpi: i64) -> i64 {
    q as i64 * vpi / (q as i64 - 1)
}

// ---- series-level checks ------------------------------------------------

impl Env {
    fn ltseries(&self, p: u64) -> Result<Check> {
        let ctx = self.ctx(p)?;
        let mut c = Check::new();
        let s = ctx.lt_series();
        let pi = ctx.pi();
        let q = ctx.q() as usize;
        c.require(s.coeff(0).is_zero(), "constant term", || json!({ "degree": 0 }));
        c.require((s.coeff(1) - &pi).is_zero(), "linear term is pi X", || json!({ "degree": 1 }));
        for n in 2..=s.degree() {
            let r = s.coeff(n);
            let want = if n == q { PadicScalar::one(p, r.precision()) } else { PadicScalar::zero(p, 1) };
            let diff = r - &want;
            c.require(diff.val_or_prec() >= 1, "congruence to X^q mod p", || json!({ "degree": n }));
        }
        // log(X) = X + ..., log([pi](X)) = pi log(X)
        let log = ctx.log_series();
        let d = ctx.degree();
        c.require(log.coeff(0).is_zero(), "log has no constant term", || json!({ "degree": 0 }));
        c.require(
            (log.coeff(1) - &PadicScalar::one(p, self.n())).is_zero(),
            "log is X mod deg 2",
            || json!({ "degree": 1 }),
        );
        let lhs = log.compose(s)?;
        let rhs = log.scale(&pi);
        let (bad, prec) = series_diff(&lhs, &rhs, d);
        c.require(bad.is_none(), "log([pi](X)) = pi log(X)", || json!({ "degree": bad }));
        c.require(prec >= self.n(), "functional equation precision", || json!({ "precision": prec }));
        c.set("functional_equation_precision", prec);
        c.set("degree", d);
        if matches!(ctx.kind(), ltforge::lubin_tate::SeriesKind::Multiplicative) {
            let mut min_prec = i64::MAX;
            for n in 1..=d {
                let want = ltforge::lubin_tate::mercator_coefficient(p, n, log.coeff(n).precision())?;
                let diff = log.coeff(n) - &want;
                min_prec = min_prec.min(log.coeff(n).precision());
                c.require(diff.is_zero(), "log coefficients (-1)^(n-1)/n", || json!({ "degree": n }));
            }
            c.require(min_prec >= self.n(), "log coefficient precision", || json!({ "precision": min_prec }));
            c.set("mercator_precision", min_prec);
        }
        Ok(c)
    }

    fn fgl(&self, p: u64, rng: &mut ChaCha8Rng) -> Result<Check> {
        let ctx = self.ctx(p)?;
        let f = ctx.fgl()?;
        let d = f.degree();
        let prec = ctx.inner_precision();
        let mut c = Check::new();
        c.require(f.is_integral(), "integral coefficients", || json!({}));
        for i in 0..=d {
            let delta = |k: usize| if k == 1 { PadicScalar::one(p, prec) } else { PadicScalar::zero(p, prec) };
            c.require((f.coeff(i, 0) - &delta(i)).is_zero(), "F(X, 0) = X", || json!({ "i": i }));
            c.require((f.coeff(0, i) - &delta(i)).is_zero(), "F(0, Y) = Y", || json!({ "j": i }));
        }
        c.require(f.sub(&f.transpose()).is_zero(), "F(X, Y) = F(Y, X)", || json!({}));
        let t = TruncSeries1::identity(p, d, prec);
        let lt = ctx.lt_series();
        let mut min_prec = i64::MAX;
        for _ in 0..self.cfg.samples(3) {
            // restrict to the line (X, Y, Z) = (T, bT, cT)
            let b = PadicScalar::from_i64(p, rng.gen_range(-30..=30), prec);
            let cc = PadicScalar::from_i64(p, rng.gen_range(-30..=30), prec);
            let (bt, ct) = (t.scale(&b), t.scale(&cc));
            let lhs = f.substitute(&t, &f.substitute(&bt, &ct)?)?;
            let rhs = f.substitute(&f.substitute(&t, &bt)?, &ct)?;
            let (bad, pr) = series_diff(&lhs, &rhs, d);
            min_prec = min_prec.min(pr);
            c.require(bad.is_none(), "associativity", || json!({ "b": b.to_string(), "c": cc.to_string(), "degree": bad }));
            // F([pi] T, [pi] bT) = [pi] F(T, bT)
            let lhs = f.substitute(lt, &lt.compose(&bt)?)?;
            let rhs = lt.compose(&f.substitute(&t, &bt)?)?;
            let (bad, pr) = series_diff(&lhs, &rhs, d);
            min_prec = min_prec.min(pr);
            c.require(bad.is_none(), "[pi] is an endomorphism", || json!({ "b": b.to_string(), "degree": bad }));
        }
        c.require(min_prec >= self.n(), "axiom precision", || json!({ "precision": min_prec }));
        // independent coefficientwise construction on a short prefix
        let small = 10.min(d);
        let oracle: TruncSeries2 = ctx.fgl_coefficientwise(small)?;
        let agree = f.truncate(small).sub(&oracle).is_zero();
        c.require(agree, "agreement with the coefficientwise solver", || json!({ "degree": small }));
        c.set("degree", d);
        c.set("axiom_precision", min_prec);
        Ok(c)
    }

    fn endo(&self, p: u64, rng: &mut ChaCha8Rng) -> Result<Check> {
        let ctx = self.ctx(p)?;
        let f = ctx.fgl()?;
        let d = ctx.degree();
        let prec = ctx.inner_precision();
        let mut c = Check::new();
        let t = TruncSeries1::identity(p, d, prec);
        let lt = ctx.lt_series();
        let (bad, _) = series_diff(&ctx.endo(&ctx.pi())?, lt, d);
        c.require(bad.is_none(), "[pi] is the Lubin-Tate series", || json!({ "degree": bad }));
        let (bad, _) = series_diff(&ctx.endo_int(1)?, &t, d);
        c.require(bad.is_none(), "[1] = X", || json!({ "degree": bad }));
        let mut min_prec = i64::MAX;
        for _ in 0..self.cfg.samples(3) {
            // sampled scalars are exact integers, known to the inner precision
            let a = random_zp(p, rng, prec);
            let b = PadicScalar::from_i64(p, rng.gen_range(1..=5 * p as i64), prec);
            let ea = ctx.endo(&a)?;
            let eb = ctx.endo(&b)?;
            let w = || json!({ "a": a.to_string(), "b": b.to_string() });
            c.require((ea.coeff(1) - &a).is_zero(), "[a] = aX mod deg 2", w);
            let (bad, pr) = series_diff(&ea.compose(lt)?, &lt.compose(&ea)?, d);
            min_prec = min_prec.min(pr);
            c.require(bad.is_none(), "[a] commutes with [pi]", w);
            let (bad, pr) = series_diff(&ea.compose(&eb)?, &ctx.endo(&(&a * &b))?, d);
            min_prec = min_prec.min(pr);
            c.require(bad.is_none(), "[a] o [b] = [ab]", w);
            let (bad, pr) = series_diff(&f.substitute(&ea, &eb)?, &ctx.endo(&(&a + &b))?, d);
            min_prec = min_prec.min(pr);
            c.require(bad.is_none(), "F([a], [b]) = [a + b]", w);
        }
        c.require(min_prec >= self.n(), "endomorphism precision", || json!({ "precision": min_prec }));
        c.set("precision_reached", min_prec);
        Ok(c)
    }
}

// ---- element-level checks -----------------------------------------------

impl Env {
    fn log_hom(&self, l: &LocalField, ctx: &LtContext, rng: &mut ChaCha8Rng, samples: usize) -> Result<Check> {
        let mut c = Check::new();
        let top = 2 * top_level(ctx.q(), structure::v_pi(l, ctx)).max(1);
        let mut min_prec = i64::MAX;
        for _ in 0..samples {
            let x = random_point(l, rng, 1, top, self.n())?;
            let y = random_point(l, rng, 1, top, self.n())?;
            let lhs = ctx.eval_log(&ctx.add_points(&x, &y)?)?;
            let rhs = &ctx.eval_log(&x)? + &ctx.eval_log(&y)?;
            let diff = &lhs - &rhs;
            min_prec = min_prec.min(diff.precision());
            c.require(diff.is_zero(), "log F(x, y) = log x + log y", || json!({ "x": elem(&x), "y": elem(&y) }));
        }
        c.set("pairs", samples);
        c.set("min_precision", min_prec);
        Ok(c)
    }

    fn valpix(&self, l: &LocalField, ctx: &LtContext, rng: &mut ChaCha8Rng) -> Result<Check> {
        let mut c = Check::new();
        let q = ctx.q() as i64;
        let vpi = structure::v_pi(l, ctx);
        let top = 2 * top_level(ctx.q(), vpi) + 1;
        let mut boundary = 0;
        for _ in 0..self.cfg.samples(50) {
            let x = random_point(l, rng, 1, top, self.n())?;
            let v = x.valuation()?;
            let y = ctx.apply_pi(&x)?;
            let w = y.val_or_prec();
            let holds = match (v * (q - 1)).cmp(&vpi) {
                std::cmp::Ordering::Less => w == q * v,
                std::cmp::Ordering::Greater => w == vpi + v,
                std::cmp::Ordering::Equal => {
                    boundary += 1;
                    w >= q * v
                }
            };
            c.require(holds, "v([pi] x)", || json!({ "x": elem(&x), "observed": w }));
        }
        c.set("boundary_samples", boundary);
        Ok(c)
    }

    fn genlemgen(&self, l: &LocalField, ctx: &LtContext, rng: &mut ChaCha8Rng) -> Result<Check> {
        let mut c = Check::new();
        let q = ctx.q();
        let vpi = structure::v_pi(l, ctx);
        let p = ctx.p();
        let mut levels = Vec::new();
        for n in 1..=2u32 {
            if (q as usize).pow(n) > ctx.degree() {
                continue;
            }
            levels.push(n);
            // [pi^n](X) = X^(q^n) + pi^n X mod pi X^2
            let s = ctx.iterate_pi(n)?;
            let qn = (q as usize).pow(n);
            c.require(
                (s.coeff(1) - &ctx.pi().pow(n)).is_zero(),
                "linear coefficient pi^n",
                || json!({ "n": n }),
            );
            for k in 2..=s.degree() {
                let want = if k == qn { PadicScalar::one(p, s.coeff(k).precision()) } else { PadicScalar::zero(p, 1) };
                c.require((s.coeff(k) - &want).val_or_prec() >= 1, "[pi^n] mod pi X^2", || json!({ "n": n, "degree": k }));
            }
            for _ in 0..self.cfg.samples(20) {
                let x = random_point(l, rng, 1, 2 * top_level(q, vpi), self.n())?;
                let z = &ctx.apply_pi_n(&x, n)? - &x.pow(qn as u64);
                // z lies in the disc v > v(pi) / (q - 1)
                let ok = match z.try_valuation() {
                    Some(v) => v * (q as i64 - 1) > vpi,
                    None => z.precision() * (q as i64 - 1) > vpi,
                };
                c.require(ok, "[pi^n](x) = x^(q^n) mod disc", || json!({ "n": n, "x": elem(&x) }));
            }
        }
        c.set("levels", levels);
        Ok(c)
    }

    fn wiles(&self, l: &LocalField, ctx: &LtContext, rng: &mut ChaCha8Rng) -> Result<Check> {
        let mut c = Check::new();
        let top = 2 * top_level(ctx.q(), structure::v_pi(l, ctx)).max(1);
        let mut min_digits = i64::MAX;
        let mut max_depth = 0;
        for _ in 0..self.cfg.samples(20) {
            let x = random_point(l, rng, 1, top, self.n())?;
            let d = ctx.eval_log_detailed(&x)?;
            for m in [d.wiles_depth, d.wiles_depth + 1] {
                let z = ctx.apply_pi_n(&x, m as u32)?;
                let quotient = z.mul_scalar(&ctx.pi().pow(m as u32).inv()?);
                let cert = d.wiles_precision.min(d.value.precision());
                let diff = (&quotient - &d.value).with_precision(cert);
                min_digits = min_digits.min(cert);
                c.require(diff.is_zero(), "[pi^m](x) / pi^m agrees with log", || json!({ "x": elem(&x), "m": m }));
            }
            max_depth = max_depth.max(d.wiles_depth);
        }
        c.set("certified_digits", min_digits);
        c.set("max_depth", max_depth);
        Ok(c)
    }

    fn kernel(&self, p: u64, n: u32, rng: &mut ChaCha8Rng) -> Result<Check> {
        let ctx = self.ctx(p)?;
        let tf = self.torsion(ctx, n)?;
        let l = &tf.field;
        let lam = &tf.lambda;
        let mut c = Check::new();
        c.require(ctx.apply_pi_n(lam, n)?.is_zero(), "[pi^n](lambda) = 0", || elem(lam));
        if n > 1 {
            c.require(!ctx.apply_pi_n(lam, n - 1)?.is_zero(), "lambda is primitive", || elem(lam));
        }
        for a in 1..p as i64 {
            let t = ctx.apply_endo(&PadicScalar::from_i64(p, a, ctx.inner_precision()), lam)?;
            let lg = ctx.eval_log(&t)?;
            c.require(lg.is_zero(), "log vanishes on torsion", || elem(&t));
            if a == 1 {
                c.set("log_lambda_precision", lg.precision());
            }
        }
        // log is injective on the disc
        let vpi = structure::v_pi(l, ctx);
        let first = vpi / (ctx.q() as i64 - 1) + 1;
        for _ in 0..self.cfg.samples(20) {
            let x = random_point(l, rng, first, first + vpi, self.n())?;
            let lg = ctx.eval_log(&x)?;
            c.require(lg.try_valuation() == Some(x.valuation()?), "log is isometric on the disc", || elem(&x));
        }
        Ok(c)
    }
}

// ---- graded pieces --------------------------------------------------------

impl Env {
    fn induced(&self, l: &LocalField, ctx: &LtContext, i: i64, rng: &mut ChaCha8Rng) -> Result<structure::InducedMapReport> {
        structure::induced_map_check(l, ctx, i, rng)
    }

    fn fv(&self, l: &LocalField, ctx: &LtContext, rng: &mut ChaCha8Rng) -> Result<Check> {
        let mut c = Check::new();
        let q1 = ctx.q() as i64 - 1;
        let vpi = structure::v_pi(l, ctx);
        let mut reports = Vec::new();
        for i in 1..=vpi / q1 {
            let r = self.induced(l, ctx, i, rng)?;
            let hom = r.lands_in_target && r.additive && r.well_defined;
            c.require(hom, "homomorphism into level q i", || json!({ "level": i }));
            c.require(r.target_level == ctx.q() as i64 * i, "target level", || json!({ "level": i }));
            if i * q1 < vpi {
                c.require(r.is_isomorphism(), "isomorphism below v(pi)/(q-1)", || json!({ "level": i }));
            }
            reports.push(r);
        }
        c.set("levels", reports);
        Ok(c)
    }

    fn regisolem(&self, l: &LocalField, ctx: &LtContext, rng: &mut ChaCha8Rng) -> Result<Check> {
        let q1 = ctx.q() as i64 - 1;
        let vpi = structure::v_pi(l, ctx);
        if vpi % q1 != 0 {
            return Ok(Check::not_applicable("(q - 1) does not divide v(pi)"));
        }
        let mut c = Check::new();
        let reg = structure::regularity_check(l, ctx)?;
        let r = self.induced(l, ctx, vpi / q1, rng)?;
        c.require(
            r.is_isomorphism() == reg.is_regular,
            "isomorphism at v(pi)/(q-1) exactly when regular",
            || json!({ "regular": reg.is_regular, "kernel": r.kernel_witness }),
        );
        if !reg.is_regular {
            c.require(r.kernel_witness.is_some(), "non-injective witness", || json!({}));
        }
        c.set("regular", reg.is_regular);
        c.set("regularity_witness", &reg.witness);
        c.set("map", r);
        Ok(c)
    }

    fn fv3(&self, l: &LocalField, ctx: &LtContext, rng: &mut ChaCha8Rng) -> Result<Check> {
        let mut c = Check::new();
        let q1 = ctx.q() as i64 - 1;
        let vpi = structure::v_pi(l, ctx);
        let first = vpi / q1 + 1;
        let mut reports = Vec::new();
        for i in first..first + vpi.min(6) {
            let r = self.induced(l, ctx, i, rng)?;
            c.require(r.target_level == i + vpi, "target level i + v(pi)", || json!({ "level": i }));
            c.require(r.is_isomorphism(), "isomorphism above v(pi)/(q-1)", || json!({ "level": i }));
            reports.push(r);
        }
        c.set("levels", reports);
        Ok(c)
    }
}

// ---- bases, spanning sets, valuations -------------------------------------

impl Env {
    fn expansion_checks(
        &self,
        c: &mut Check,
        l: &LocalField,
        ctx: &LtContext,
        gens: &GeneratingSet,
        rng: &mut ChaCha8Rng,
        samples: usize,
    ) -> Result<()> {
        let top = 2 * top_level(ctx.q(), structure::v_pi(l, ctx)).max(1);
        let mut steps = 0;
        for _ in 0..samples {
            let x = random_point(l, rng, 1, top, self.n())?;
            match structure::expand_in_generators(&x, gens, ctx) {
                Ok(ex) => steps = steps.max(ex.steps.len()),
                Err(Error::StuckLevel { level }) => {
                    c.require(false, "expansion stuck", || json!({ "x": elem(&x), "level": level }));
                }
                Err(e) => return Err(e),
            }
        }
        // a generator is its own expansion
        let g = &gens.generators[0].element;
        let ex = structure::expand_in_generators(g, gens, ctx)?;
        let unit_on_first = ex.digits[0].valuation() == Some(0) && ex.digits[1..].iter().all(|d| d.is_zero());
        c.require(unit_on_first, "x = g_1 expands to a unit digit on g_1", || elem(g));
        c.set("max_steps", steps);
        Ok(())
    }

    fn basisthm1(&self, l: &LocalField, ctx: &LtContext, rng: &mut ChaCha8Rng) -> Result<Check> {
        let mut c = Check::new();
        let b = structure::basis_bl(l, ctx)?;
        c.require(b.len() == l.degree(), "|B_L| = [L:K]", || json!({ "size": b.len() }));
        self.expansion_checks(&mut c, l, ctx, &b, rng, self.cfg.samples(4))?;
        c.set("size", b.len());
        c.set("levels", b.generators.iter().map(|g| g.level).collect::<Vec<_>>());
        Ok(c)
    }

    fn basisthm2(&self, l: &LocalField, ctx: &LtContext, rng: &mut ChaCha8Rng) -> Result<Check> {
        let mut c = Check::new();
        let lb = structure::log_basis(l, ctx)?;
        let basis = lb.elements();
        let det = structure::coordinate_determinant(&basis)?;
        c.require(!det.is_zero(), "log basis is independent", || json!({}));
        c.set("det_valuation", det.valuation());
        let vpi = structure::v_pi(l, ctx);
        let zetas = FieldElement::residue_basis(l, self.n())?;
        let w = FieldElement::uniformizer(l, self.n());
        for j in 1..=ctx.q() as i64 * top_level(ctx.q(), vpi) {
            for z in &zetas {
                let x = z * &w.pow(j as u64);
                let lx = ctx.eval_log(&x)?;
                c.require(integral_in(&lx, &basis)?, "log(zeta varpi^j) has integral coordinates", || elem(&x));
            }
        }
        for _ in 0..self.cfg.samples(10) {
            let x = random_point(l, rng, 1, 2 * top_level(ctx.q(), vpi), self.n())?;
            c.require(integral_in(&ctx.eval_log(&x)?, &basis)?, "random log has integral coordinates", || elem(&x));
        }
        Ok(c)
    }

    fn logval(&self, l: &LocalField, ctx: &LtContext, rng: &mut ChaCha8Rng) -> Result<Check> {
        let mut c = Check::new();
        let top = top_level(ctx.q(), structure::v_pi(l, ctx)).max(1);
        let samples = self.cfg.samples(200);
        let mut mismatches = 0;
        for k in 0..samples {
            let v = 1 + (k as i64 % top);
            let x = FieldElement::random_with_valuation(l, rng, v, self.n())?;
            let cert = structure::valuation_certificate(l, ctx, &x, true)?;
            if !cert.holds || cert.relation != Relation::Equality {
                mismatches += 1;
            }
            c.require(cert.holds, "v(log x) = q^l v(x) - l v(pi)", || {
                json!({ "x": elem(&x), "predicted": cert.predicted, "observed": cert.observed })
            });
        }
        c.set("samples", samples);
        c.set("mismatches", mismatches);
        Ok(c)
    }

    fn unitinv(&self, l: &LocalField, ctx: &LtContext, rng: &mut ChaCha8Rng) -> Result<Check> {
        let mut c = Check::new();
        let top = 2 * top_level(ctx.q(), structure::v_pi(l, ctx)).max(1);
        for _ in 0..self.cfg.samples(50) {
            let x = random_point(l, rng, 1, top, self.n())?;
            let u = FieldElement::random_unit(l, rng, self.n())?;
            let a = ctx.eval_log(&(&u * &x))?.try_valuation();
            let b = ctx.eval_log(&x)?.try_valuation();
            c.require(a.is_some() && a == b, "v(log(u x)) = v(log x)", || json!({ "x": elem(&x), "u": elem(&u) }));
        }
        Ok(c)
    }

    fn minval(&self, l: &LocalField, ctx: &LtContext, rng: &mut ChaCha8Rng) -> Result<Check> {
        let mut c = Check::new();
        let top = 2 * top_level(ctx.q(), structure::v_pi(l, ctx)).max(1);
        let m = match structure::min_valuation(l, ctx) {
            Err(Error::RatioTooSmall) => {
                // the log image is the maximal ideal itself
                for _ in 0..self.cfg.samples(20) {
                    let x = random_point(l, rng, 1, top, self.n())?;
                    let lv = ctx.eval_log(&x)?.try_valuation();
                    c.require(lv == Some(x.valuation()?), "log is isometric when v(pi) < q - 1", || elem(&x));
                }
                c.set("method", "ratio-too-small");
                c.set("value", 1);
                return Ok(c);
            }
            r => r?,
        };
        if m.method == "formula" {
            c.require(m.log_uniformizer == Some(m.value), "v(log varpi) = q^gamma - gamma v(pi)", || json!(m));
            c.require(m.generator_minimum == m.value, "basis-image minimum", || json!(m));
        }
        for _ in 0..self.cfg.samples(20) {
            let x = random_point(l, rng, 1, top, self.n())?;
            let lv = ctx.eval_log(&x)?.val_or_prec();
            c.require(lv >= m.value, "sampled logs respect the minimum", || elem(&x));
        }
        c.set("gamma", m.gamma);
        c.set("value", m.value);
        c.set("method", m.method);
        c.set("log_uniformizer", m.log_uniformizer);
        c.set("generator_minimum", m.generator_minimum);
        Ok(c)
    }

    fn genspan(&self, l: &LocalField, ctx: &LtContext, rng: &mut ChaCha8Rng) -> Result<Check> {
        let mut c = Check::new();
        let s = structure::spanning_sl(l, ctx)?;
        c.require(s.len() == l.degree() + l.f(), "|S_L| = [L:K] + f", || json!({ "size": s.len() }));
        self.expansion_checks(&mut c, l, ctx, &s, rng, self.cfg.samples(4))?;
        let vpi = structure::v_pi(l, ctx);
        let top = top_level(ctx.q(), vpi);
        if l.f() == 1 {
            // minimality evidence: the top level cannot be dropped
            let mut reduced = s.clone();
            reduced.generators.retain(|g| g.level != top);
            let x = FieldElement::uniformizer(l, self.n()).pow(top as u64);
            let stuck = matches!(
                structure::expand_in_generators(&x, &reduced, ctx),
                Err(Error::StuckLevel { .. })
            );
            c.require(stuck, "dropping the top level loses the span", || elem(&x));
            c.set("top_level_needed", stuck);
        }
        c.set("size", s.len());
        Ok(c)
    }

    fn genval2(&self, l: &LocalField, ctx: &LtContext, lambda: Option<&FieldElement>, rng: &mut ChaCha8Rng) -> Result<Check> {
        let mut c = Check::new();
        let top = top_level(ctx.q(), structure::v_pi(l, ctx)).max(1);
        let mut strict = 0;
        for k in 0..self.cfg.samples(50) {
            let v = 1 + (k as i64 % top);
            let x = FieldElement::random_with_valuation(l, rng, v, self.n())?;
            let cert = structure::valuation_certificate(l, ctx, &x, false)?;
            if cert.relation == Relation::AtLeast {
                strict += 1;
            }
            c.require(cert.holds, "v(log x) >= q^l v(x) - l v(pi)", || {
                json!({ "x": elem(&x), "predicted": cert.predicted, "observed": cert.observed })
            });
        }
        if let Some(lam) = lambda {
            let cert = structure::valuation_certificate(l, ctx, lam, false)?;
            c.require(
                cert.holds && cert.relation == Relation::AtLeast && cert.observed.is_none(),
                "log(lambda) = 0 exceeds the prediction",
                || elem(lam),
            );
            c.set("lambda_predicted", cert.predicted);
        }
        c.set("strict_samples", strict);
        Ok(c)
    }

    fn mincor(&self, p: u64, n: u32, rng: &mut ChaCha8Rng) -> Result<Check> {
        let ctx = self.ctx(p)?;
        let (tf, sn, _) = structure::lt_sets(ctx, n, self.n())?;
        let q = ctx.q() as usize;
        let want = q.pow(n) - q.pow(n - 1) + 1;
        let mut c = Check::new();
        c.require(sn.len() == want, "|S_n| = q^n - q^(n-1) + 1", || json!({ "size": sn.len() }));
        self.expansion_checks(&mut c, &tf.field, ctx, &sn, rng, self.cfg.samples(3))?;
        let top = q.pow(n) as i64;
        let mut reduced = sn.clone();
        reduced.generators.retain(|g| g.level != top);
        let x = tf.lambda.pow(top as u64);
        let stuck = matches!(
            structure::expand_in_generators(&x, &reduced, ctx),
            Err(Error::StuckLevel { .. })
        );
        c.require(stuck, "lambda^(q^n) cannot be dropped", || elem(&x));
        c.set("size", sn.len());
        Ok(c)
    }

    fn ltbasis_with(&self, ctx: &LtContext, n: u32, rng: &mut ChaCha8Rng) -> Result<Check> {
        let (tf, _, bn) = structure::lt_sets(ctx, n, self.n())?;
        let q = ctx.q() as usize;
        let mut c = Check::new();
        let want = q.pow(n) - q.pow(n - 1);
        c.require(bn.len() == want, "|B_n| = q^n - q^(n-1)", || json!({ "size": bn.len() }));
        c.require(bn.len() == tf.field.degree(), "|B_n| = [K_(pi^n):K]", || json!({ "size": bn.len() }));
        let basis = bn.elements();
        let det = structure::coordinate_determinant(&basis)?;
        c.require(!det.is_zero(), "B_n is independent", || json!({}));
        c.set("det_valuation", det.valuation());
        for j in 1..=(q.pow(n) + q) as u64 {
            let x = tf.lambda.pow(j);
            let lx = ctx.eval_log(&x)?;
            c.require(integral_in(&lx, &basis)?, "log(lambda^j) has integral coordinates", || json!({ "j": j }));
        }
        for _ in 0..self.cfg.samples(10) {
            let x = random_point(&tf.field, rng, 1, 2 * q.pow(n) as i64, self.n())?;
            c.require(integral_in(&ctx.eval_log(&x)?, &basis)?, "random log has integral coordinates", || elem(&x));
        }
        c.set("size", bn.len());
        Ok(c)
    }

    fn ltbasis(&self, p: u64, n: u32, rng: &mut ChaCha8Rng) -> Result<Check> {
        self.ltbasis_with(self.ctx(p)?, n, rng)
    }
}

// ---- worked examples ------------------------------------------------------

/// Bases of the log image written out by hand for `Q_3(3^(1/4))` and
/// `Q_p(p^(1/(p+1)))`.
pub fn hand_basis(p: u64) -> Vec<String> {
    if p == 3 {
        ["w^2", "1/w - w", "w^3", "w^4"].map(String::from).to_vec()
    } else {
        let mut v = vec!["w + 1/w".to_string()];
        v.extend((2..=p + 1).map(|i| format!("w^{i}")));
        v
    }
}

impl Env {
    fn example_p3(&self, l: &LocalField) -> Result<Check> {
        let p = l.p();
        let ctx = self.mult(p)?;
        let mut c = Check::new();
        let reg = structure::regularity_check(l, ctx)?;
        c.require(reg.is_regular, "regular", || json!({ "witness": reg.witness }));
        let m = structure::min_valuation(l, ctx)?;
        c.require(m.gamma == Some(1), "gamma = 1", || json!(m));
        c.require(m.value == -1 && m.log_uniformizer == Some(-1), "minimum valuation -1", || json!(m));
        let lb = structure::log_basis(l, ctx)?.elements();
        c.require(lb.len() == l.degree(), "basis size", || json!({ "size": lb.len() }));
        let hand = hand_basis(p)
            .iter()
            .map(|s| parse_element(l, s, self.n()))
            .collect::<Result<Vec<_>>>()?;
        for (s, h) in hand_basis(p).iter().zip(&hand) {
            c.require(integral_in(h, &lb)?, "hand basis lies in the log lattice", || json!(s));
        }
        for (k, g) in lb.iter().enumerate() {
            c.require(integral_in(g, &hand)?, "log basis lies in the hand lattice", || json!({ "index": k }));
        }
        c.set("hand_basis", hand_basis(p));
        c.set("min", m.value);
        Ok(c)
    }

    fn example_zetap(&self, p: u64) -> Result<Check> {
        let ctx = self.mult(p)?;
        let tf = self.torsion(ctx, 1)?;
        let l = &tf.field;
        let lam = &tf.lambda;
        let mut c = Check::new();
        // lambda = zeta_p - 1
        let one = FieldElement::one(l, self.n());
        let u = (&one + lam).pow(p);
        c.require((&u - &one).is_zero(), "(1 + lambda)^p = 1", || elem(lam));
        let m = structure::min_valuation(l, ctx)?;
        c.require(m.value == 2, "log(1 + m) has minimum valuation 2", || json!(m));
        for j in 2..=p {
            let x = lam.pow(j);
            let d = &ctx.eval_log(&x)? - &x;
            c.require(d.val_or_prec() > j as i64, "log(1 + lambda^j) = lambda^j mod m^(j+1)", || json!({ "j": j }));
        }
        // the log basis and the standard basis of m^2 span the same lattice
        let (_, _, bn) = structure::lt_sets(ctx, 1, self.n())?;
        let b = bn.elements();
        let standard: Vec<FieldElement> = (2..=p).map(|j| lam.pow(j)).collect();
        for (k, g) in b.iter().enumerate() {
            c.require(integral_in(g, &standard)?, "log basis lies in m^2", || json!({ "index": k }));
        }
        for (k, s) in standard.iter().enumerate() {
            c.require(integral_in(s, &b)?, "m^2 lies in the log lattice", || json!({ "j": k + 2 }));
        }
        c.set("min", m.value);
        Ok(c)
    }
}

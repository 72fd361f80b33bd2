use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ltforge::element::ElementJson;
use ltforge::field::EisCoeff;
use ltforge::lubin_tate::LtContext;
use ltforge::series::{SeriesJson, TruncSeries1};
use ltforge::structure::{self, GeneratingSet};
use ltforge::{Error, FieldElement, LocalField, TowerSpec};
use ltforge_cli::expr::parse_element;
use ltforge_cli::suite::{Env, SeriesChoice, SuiteConfig, THEOREMS};
use num_bigint::BigInt;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "lt-forge", version, about = "Lubin-Tate formal groups over p-adic towers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Describe a tower
    Field(Opts),
    /// Build a Lubin-Tate context and print its series
    Ctx(Opts),
    /// Evaluate the formal logarithm at an element
    Log(Opts),
    /// Basis or spanning set of F(m_L), with log images
    Basis(Opts),
    /// Regularity test
    Regular(Opts),
    /// Minimal valuation on the log image
    Minval(Opts),
    /// Run theorem checks
    Verify(Opts),
}

#[derive(Args, Clone)]
struct Opts {
    /// Tower as p,f,e
    #[arg(long)]
    tower: Option<String>,
    /// Eisenstein polynomial as a JSON list, constant term first, leading 1 included
    #[arg(long)]
    eis: Option<String>,
    /// basic, multiplicative, a series JSON, or @file holding one
    #[arg(long, default_value = "multiplicative")]
    series: String,
    /// Uniformiser for the basic series (defaults to p)
    #[arg(long)]
    pi: Option<String>,
    /// Residue characteristic; restricts verify to this prime
    #[arg(long)]
    p: Option<u64>,
    /// Use the Lubin-Tate extension of this level instead of a tower
    #[arg(long = "lt-level")]
    lt_level: Option<u32>,
    /// Working precision N
    #[arg(long, env = "LT_FORGE_PRECISION", default_value_t = 64)]
    precision: i64,
    /// Series truncation degree D
    #[arg(long, default_value_t = 128)]
    degree: usize,
    /// Random samples per check, overriding each check's default
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Theorem id; repeatable
    #[arg(long)]
    theorem: Vec<String>,
    /// Run every theorem
    #[arg(long)]
    all: bool,
    /// Expression over p, w, z or element JSON
    #[arg(long)]
    element: Option<String>,
}

enum Failure {
    Usage(String),
    Violation(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_)
            | Error::BadPrime(_)
            | Error::NotEisenstein(_)
            | Error::NotIrreducible
            | Error::NotLubinTate(_)
            | Error::NonIntegralCoefficient { .. } => Failure::Usage(e.to_string()),
            other => Failure::Violation(json!({ "error": other.to_string() })),
        }
    }
}

type CmdResult = std::result::Result<Vec<Value>, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read_arg(s: &str) -> std::result::Result<String, Failure> {
    match s.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}"))),
        None => Ok(s.to_string()),
    }
}

fn parse_tower(s: &str) -> std::result::Result<(u64, usize, usize), Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(usage("--tower expects p,f,e"));
    }
    let bad = |_| usage(format!("bad --tower {s:?}"));
    Ok((
        parts[0].parse().map_err(bad)?,
        parts[1].parse().map_err(bad)?,
        parts[2].parse().map_err(bad)?,
    ))
}

fn eis_poly(o: &Opts, p: u64, e: usize) -> std::result::Result<Vec<Vec<BigInt>>, Failure> {
    match &o.eis {
        None => {
            let mut eis = vec![vec![BigInt::from(0)]; e + 1];
            eis[0] = vec![-BigInt::from(p)];
            eis[e] = vec![BigInt::from(1)];
            Ok(eis)
        }
        Some(s) => {
            let coeffs: Vec<EisCoeff> = serde_json::from_str(&read_arg(s)?).map_err(|e| usage(format!("--eis: {e}")))?;
            let spec = TowerSpec {
                p,
                f: 1,
                e,
                eis: coeffs,
                precision: 1,
                unram: None,
            };
            spec.eis
                .iter()
                .map(|c| match c {
                    EisCoeff::Int(x) => Ok(vec![x.to_bigint()?]),
                    EisCoeff::Unram(v) => v.iter().map(|x| x.to_bigint()).collect(),
                })
                .collect::<ltforge::Result<Vec<_>>>()
                .map_err(Failure::from)
        }
    }
}

fn field_of(o: &Opts) -> std::result::Result<LocalField, Failure> {
    let t = o.tower.as_deref().ok_or_else(|| usage("--tower is required"))?;
    let (p, f, e) = parse_tower(t)?;
    let eis = eis_poly(o, p, e)?;
    Ok(LocalField::make_tower(p, f, e, &eis, None, o.precision)?)
}

fn prime_of(o: &Opts) -> std::result::Result<u64, Failure> {
    if let Some(p) = o.p {
        return Ok(p);
    }
    match &o.tower {
        Some(t) => Ok(parse_tower(t)?.0),
        None => Err(usage("--p or --tower is required")),
    }
}

fn series_choice(o: &Opts, p: Option<u64>) -> std::result::Result<SeriesChoice, Failure> {
    match o.series.as_str() {
        "multiplicative" => Ok(SeriesChoice::Multiplicative),
        "basic" => {
            let pi = match &o.pi {
                Some(s) => Some(s.parse::<BigInt>().map_err(|_| usage("bad --pi"))?),
                None => None,
            };
            Ok(SeriesChoice::Basic { pi })
        }
        other => {
            let p = p.ok_or_else(|| usage("a custom series needs --p or --tower"))?;
            let j: SeriesJson = serde_json::from_str(&read_arg(other)?).map_err(|e| usage(format!("--series: {e}")))?;
            Ok(SeriesChoice::Custom(TruncSeries1::from_json(p, &j)?))
        }
    }
}

fn context(o: &Opts, p: u64) -> std::result::Result<LtContext, Failure> {
    Ok(match series_choice(o, Some(p))? {
        SeriesChoice::Multiplicative => LtContext::multiplicative(p, o.degree, o.precision)?,
        SeriesChoice::Basic { pi } => LtContext::basic(p, &pi.unwrap_or_else(|| BigInt::from(p)), o.degree, o.precision)?,
        SeriesChoice::Custom(s) => LtContext::validate_lt_series(&s.coeff(1).clone(), &s)?,
    })
}

fn elem(x: &FieldElement) -> Value {
    serde_json::to_value(x.to_json()).unwrap()
}

fn element_of(o: &Opts, l: &LocalField) -> std::result::Result<FieldElement, Failure> {
    let src = read_arg(o.element.as_deref().ok_or_else(|| usage("--element is required"))?)?;
    if src.trim_start().starts_with('{') {
        let j: ElementJson = serde_json::from_str(&src).map_err(|e| usage(format!("--element: {e}")))?;
        Ok(FieldElement::from_json_in(l, &j)?)
    } else {
        Ok(parse_element(l, &src, o.precision)?)
    }
}

fn set_json(ctx: &LtContext, set: &GeneratingSet) -> std::result::Result<Value, Failure> {
    let gens: Vec<Value> = set
        .generators
        .iter()
        .map(|g| {
            Ok(json!({
                "level": g.level,
                "index": g.index,
                "element": elem(&g.element),
                "log": elem(&ctx.eval_log(&g.element)?),
            }))
        })
        .collect::<std::result::Result<_, Error>>()?;
    Ok(json!({ "kind": set.kind, "size": set.len(), "generators": gens }))
}

fn cmd_field(o: &Opts) -> CmdResult {
    let l = field_of(o)?;
    Ok(vec![json!({
        "tower": l.spec(),
        "degree": l.degree(),
        "residue_modulus": l.residue_field().modulus,
        "uniformizer": elem(&FieldElement::uniformizer(&l, o.precision)),
    })])
}

fn cmd_ctx(o: &Opts) -> CmdResult {
    let p = prime_of(o)?;
    let ctx = context(o, p)?;
    Ok(vec![json!({
        "p": p,
        "pi": ctx.pi_int().to_string(),
        "kind": ctx.kind().name(),
        "D": ctx.degree(),
        "N": ctx.precision(),
        "lt_series": ctx.lt_series().to_json(),
        "log_series": ctx.log_series().with_precision(ctx.precision()).to_json(),
    })])
}

fn cmd_log(o: &Opts) -> CmdResult {
    let l = field_of(o)?;
    let ctx = context(o, l.p())?;
    let x = element_of(o, &l)?;
    let d = ctx.eval_log_detailed(&x)?;
    Ok(vec![json!({
        "element": elem(&x),
        "log": elem(&d.value),
        "valuation": d.value.try_valuation(),
        "precision": d.value.precision(),
        "ell": d.ell,
        "wiles_depth": d.wiles_depth,
    })])
}

fn cmd_basis(o: &Opts) -> CmdResult {
    if let Some(n) = o.lt_level {
        let p = prime_of(o)?;
        let ctx = context(o, p)?;
        let (tf, sn, bn) = structure::lt_sets(&ctx, n, o.precision)?;
        let b: Vec<Value> = bn.generators.iter().map(|g| json!({ "j": g.level, "log": elem(&g.element) })).collect();
        return Ok(vec![json!({
            "tower": tf.field.spec(),
            "lambda": elem(&tf.lambda),
            "S_n": set_json(&ctx, &sn)?,
            "B_n": b,
        })]);
    }
    let l = field_of(o)?;
    let ctx = context(o, l.p())?;
    let set = if structure::regularity_check(&l, &ctx)?.is_regular {
        structure::basis_bl(&l, &ctx)?
    } else {
        structure::spanning_sl(&l, &ctx)?
    };
    Ok(vec![set_json(&ctx, &set)?])
}

fn cmd_regular(o: &Opts) -> CmdResult {
    let l = field_of(o)?;
    let ctx = context(o, l.p())?;
    let r = structure::regularity_check(&l, &ctx)?;
    Ok(vec![json!({
        "tower": l.spec(),
        "regular": r.is_regular,
        "ratio_integral": r.ratio_integral,
        "epsilon": elem(&r.epsilon),
        "witness": r.witness,
    })])
}

fn cmd_minval(o: &Opts) -> CmdResult {
    let l = field_of(o)?;
    let ctx = context(o, l.p())?;
    match structure::min_valuation(&l, &ctx) {
        Ok(m) => Ok(vec![json!({ "tower": l.spec(), "min": m.value, "details": m })]),
        Err(Error::RatioTooSmall) => Ok(vec![json!({ "tower": l.spec(), "min": 1, "details": { "method": "ratio-too-small" } })]),
        Err(e) => Err(e.into()),
    }
}

fn cmd_verify(o: &Opts) -> CmdResult {
    let ids: Vec<&str> = if o.all {
        THEOREMS.to_vec()
    } else if o.theorem.is_empty() {
        return Err(usage("--theorem or --all is required"));
    } else {
        o.theorem.iter().map(String::as_str).collect()
    };
    if let Some(bad) = ids.iter().find(|t| !THEOREMS.contains(t)) {
        return Err(usage(format!("unknown theorem {bad:?}")));
    }
    let mut cfg = SuiteConfig::default_suite();
    cfg.precision = o.precision;
    cfg.degree = o.degree;
    cfg.samples = o.samples;
    cfg.seed = o.seed;
    if let Some(t) = &o.tower {
        let (p, f, e) = parse_tower(t)?;
        cfg.primes = vec![p];
        cfg.towers = vec![(p, f, e, eis_poly(o, p, e)?)];
        cfg.lt_levels = match o.lt_level {
            Some(n) => vec![(p, n)],
            None => Vec::new(),
        };
    } else if let Some(p) = o.p {
        cfg.primes = vec![p];
        cfg.towers.retain(|t| t.0 == p);
        cfg.lt_levels = match o.lt_level {
            Some(n) => vec![(p, n)],
            None => cfg.lt_levels.iter().copied().filter(|l| l.0 == p).collect(),
        };
    } else if o.lt_level.is_some() {
        return Err(usage("--lt-level needs --p"));
    }
    let p = o.p.or(cfg.primes.first().copied().filter(|_| cfg.primes.len() == 1));
    cfg.series = series_choice(o, p)?;
    let env = Env::new(cfg)?;
    let reports = env.run_all(&ids);
    let violated = reports.iter().any(|r| r.violated());
    let lines: Vec<Value> = reports.iter().map(|r| serde_json::to_value(r).unwrap()).collect();
    if violated {
        for l in &lines {
            println!("{l}");
        }
        return Err(Failure::Violation(Value::Null));
    }
    Ok(lines)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match &cli.cmd {
        Cmd::Field(o) => cmd_field(o),
        Cmd::Ctx(o) => cmd_ctx(o),
        Cmd::Log(o) => cmd_log(o),
        Cmd::Basis(o) => cmd_basis(o),
        Cmd::Regular(o) => cmd_regular(o),
        Cmd::Minval(o) => cmd_minval(o),
        Cmd::Verify(o) => cmd_verify(o),
    };
    match out {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("lt-forge: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Violation(v)) => {
            if !v.is_null() {
                println!("{v}");
            }
            ExitCode::from(1)
        }
    }
}

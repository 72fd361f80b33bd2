use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    BadPrime(u64),
    #[error("residue polynomial is not irreducible over F_p")]
    NotIrreducible,
    #[error("polynomial is not Eisenstein: {0}")]
    NotEisenstein(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("element has valuation {found}, expected level {expected}")]
    WrongLevel { expected: i64, found: i64 },
    #[error("inner series has a nonzero constant term")]
    NonzeroConstantTerm,
    #[error("coefficient of degree {degree} is not integral")]
    NonIntegralCoefficient { degree: usize },
    #[error("not a Lubin-Tate series: {0}")]
    NotLubinTate(String),
    #[error("scalar is not in Z_p")]
    NotIntegral,
    #[error("element lies outside the convergence disc of exp")]
    OutsideConvergenceDisc,
    #[error("element is not in the maximal ideal")]
    OutsideMaximalIdeal,
    #[error("log coefficient of degree {degree} violates the tail bound")]
    TailBoundViolated { degree: usize },
    #[error("Lubin-Tate series is not a polynomial")]
    SeriesNotPolynomial,
    #[error("field is not pi-regular")]
    NotRegular,
    #[error("field is pi-regular; the spanning set S_L needs nontrivial torsion")]
    RegularFieldGiven,
    #[error("target is not in the span of the generators")]
    NotInSpan,
    #[error("generators are linearly dependent")]
    RankDeficient,
    #[error("v_L(pi) < q - 1: the log image is the maximal ideal, minimum valuation 1")]
    RatioTooSmall,
    #[error("no generator covers level {level}")]
    StuckLevel { level: i64 },
    #[error("operands live in different structures: {0}")]
    Mismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn exhausted(what: impl Into<String>) -> Self {
        Error::PrecisionExhausted(what.into())
    }
}

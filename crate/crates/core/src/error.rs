use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus {0} is invalid: must be at least 2")]
    InvalidModulus(u64),
    #[error("modulus {0} exceeds the trial-division limit 2^40")]
    ModulusTooLarge(u64),
    #[error("generator {g} is not coprime to modulus {n}")]
    NotCoprime { n: u64, g: u64 },
    #[error("{g} does not generate (Z/{n}Z)^x: order {order} < phi(n) = {totient}")]
    NotAGenerator { n: u64, g: u64, order: u64, totient: u64 },
    #[error("invalid group table: {0}")]
    InvalidGroupTable(String),
    #[error("group order {order} is too large to enumerate (limit {limit})")]
    OrderTooLarge { order: u64, limit: u64 },
    #[error("{0} is not an element of the group")]
    NotInGroup(u64),
    #[error("{s} has no inverse mod {m}")]
    NoInverse { s: u64, m: u64 },
    #[error("label {label} is not valid for register {register}")]
    BadLabel { register: usize, label: u64 },
    #[error("matrix is not unitary: deviation {0:e}")]
    NotUnitary(f64),
    #[error("index table is not a bijection")]
    NotBijective,
    #[error("state norm {0:e} is degenerate")]
    DegenerateNorm(f64),
    #[error("layouts do not match")]
    LayoutMismatch,
    #[error("state is not a product state: residual {0:e}")]
    NotAProductState(f64),
    #[error("register {0} is not an exponent register")]
    WrongRegisterKind(usize),
    #[error("operator expects layout {expected}")]
    WrongLayout { expected: &'static str },
    #[error("state dimension {requested} exceeds cap {cap}")]
    CapExceeded { requested: usize, cap: usize },
    #[error("chi handle is unverified or has power {power} instead of 1")]
    UnverifiedChi { power: u64 },
    #[error("gave up after {0} preparation attempts")]
    RetryCapExceeded(usize),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("artifact does not match the configured group: {0}")]
    ArtifactMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
}

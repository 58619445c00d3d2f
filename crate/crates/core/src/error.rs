use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus {0} is not an odd prime below 2^32")]
    InvalidModulus(u64),
    #[error("elements belong to different fields ({0} vs {1})")]
    FieldMismatch(u64, u64),
    #[error("ell = {0} equals the characteristic")]
    EllEqualsP(u64),
    #[error("modulus polynomial is constant")]
    DegenerateModulus,
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("curve y^2 = x^3 + {a}x + {b} over F_{p} is singular")]
    SingularCurve { p: u64, a: u64, b: u64 },
    #[error("baby-step giant-step could not pin the group order")]
    CountAmbiguous,
    #[error("curve is supersingular (trace {0})")]
    SupersingularCurve(i64),
    #[error("trial factorization cap exceeded for {0}")]
    FactorCapExceeded(u128),
    #[error("parameter search exhausted after {0} attempts")]
    SearchExhausted(usize),
    #[error("unsupported size: {0}")]
    UnsupportedSize(String),
    #[error("prime {0} is inert")]
    InertPrime(u64),
    #[error("{mu} is not a Frobenius eigenvalue mod {ell}")]
    BadEigenvalue { ell: u64, mu: u64 },
    #[error("kernel polynomial does not cut out a subgroup: {0}")]
    InvalidKernel(String),
    #[error("no split primes below the walk bound")]
    EmptyPrimeBasis,
    #[error("discriminant mismatch: {0} vs {1}")]
    DiscriminantMismatch(i128, i128),
    #[error("invalid quadratic form: {0}")]
    InvalidForm(String),
    #[error("size cap exceeded: {0}")]
    CapExceeded(String),
    #[error("prime basis does not generate the class group (reached {reached} of {expected})")]
    NotGenerated { reached: usize, expected: usize },
    #[error("degenerate lattice basis (b = 0)")]
    DegenerateBasis,
    #[error("matrix does not define a module over Z[pi]: {0}")]
    NotAModuleMatrix(String),
    #[error("curve with j = {0} is not in the isogeny class")]
    NotInIsogenyClass(u64),
    #[error("isogeny class violates j-uniqueness at j = {0}")]
    OrbitCollision(u64),
    #[error("message has {got} bits, expected {expected}")]
    MessageLength { got: usize, expected: usize },
    #[error("constraint support is empty")]
    EmptyConstraint,
    #[error("no coprime prime representative found")]
    PoolExhausted,
    #[error("subgroup orders {0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("could not normalize dual isogeny")]
    DualAmbiguous,
    #[error("mismatched inputs: {0}")]
    Mismatch(String),
    #[error("level {0} is not divisible by 4")]
    BadLevel(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable name, used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModulus(_) => "InvalidModulus",
            Error::FieldMismatch(..) => "FieldMismatch",
            Error::EllEqualsP(_) => "EllEqualsP",
            Error::DegenerateModulus => "DegenerateModulus",
            Error::ZeroPolynomial => "ZeroPolynomial",
            Error::SingularCurve { .. } => "SingularCurve",
            Error::CountAmbiguous => "CountAmbiguous",
            Error::SupersingularCurve(_) => "SupersingularCurve",
            Error::FactorCapExceeded(_) => "FactorCapExceeded",
            Error::SearchExhausted(_) => "SearchExhausted",
            Error::UnsupportedSize(_) => "UnsupportedSize",
            Error::InertPrime(_) => "InertPrime",
            Error::BadEigenvalue { .. } => "BadEigenvalue",
            Error::InvalidKernel(_) => "InvalidKernel",
            Error::EmptyPrimeBasis => "EmptyPrimeBasis",
            Error::DiscriminantMismatch(..) => "DiscriminantMismatch",
            Error::InvalidForm(_) => "InvalidForm",
            Error::CapExceeded(_) => "CapExceeded",
            Error::NotGenerated { .. } => "NotGenerated",
            Error::DegenerateBasis => "DegenerateBasis",
            Error::NotAModuleMatrix(_) => "NotAModuleMatrix",
            Error::NotInIsogenyClass(_) => "NotInIsogenyClass",
            Error::OrbitCollision(_) => "OrbitCollision",
            Error::MessageLength { .. } => "MessageLength",
            Error::EmptyConstraint => "EmptyConstraint",
            Error::PoolExhausted => "PoolExhausted",
            Error::NotCoprime(..) => "NotCoprime",
            Error::DualAmbiguous => "DualAmbiguous",
            Error::Mismatch(_) => "Mismatch",
            Error::BadLevel(_) => "BadLevel",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

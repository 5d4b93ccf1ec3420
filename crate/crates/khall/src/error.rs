use thiserror::Error;

/// Errors shared by the whole kernel.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator `{0}` is marked invertible but has no inverse modulo the relations")]
    NonInvertibleGenerator(String),
    #[error("generator `{0}` is not invertible; negative powers are not allowed")]
    NotInvertible(String),
    #[error("name collision: `{0}` is already a generator")]
    NameCollision(String),
    #[error("relation is not a monic univariate integer polynomial in a single generator: {0}")]
    BadRelation(String),
    #[error("elements belong to different rings")]
    RingMismatch,
    #[error("variable sets differ: {0}")]
    VariableMismatch(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("substitution kills the denominator factor ({0})")]
    DenominatorVanishes(String),
    #[error("not a Laurent polynomial: division leaves a remainder")]
    NotPolynomial,
    #[error("not symmetric under {0}")]
    NotSymmetric(String),
    #[error("denominator is not in tracked factored form: {0}")]
    UnfactoredDenominator(String),
    #[error("product would square the diagonal class")]
    DiagonalSquare,
    #[error("product would square a delta with identical argument")]
    DeltaSquare,
    #[error("truncation windows are incompatible: {0}")]
    IncompatibleTruncation(String),
    #[error("expansion coefficient is not polynomial in the remaining variables")]
    NonPolynomialCoefficient,
    #[error("element is not a unit monomial: {0}")]
    NotUnitMonomial(String),
    #[error("exact division by {0} failed")]
    NotDivisible(String),
    #[error("class has nonzero rank")]
    RankNotZero,
    #[error("no table entry for monomial {0}")]
    UnknownMonomial(String),
    #[error("delta argument cannot be solved for a substitution variable: {0}")]
    UnsupportedDeltaArgument(String),
    #[error("exponent overflow")]
    ExponentOverflow,
}

pub type Result<T> = std::result::Result<T, AlgebraError>;

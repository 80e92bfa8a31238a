use std::fmt;

/// Support regions, ordered by inclusion `R ⊂ U ⊂ V ⊂ M`.
///
/// `Exterior` marks configurations outside `U`, where the cutoff vanishes
/// but no on-shell condition holds.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Region {
    R,
    U,
    V,
    M,
    Exterior,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::R => "R",
            Region::U => "U",
            Region::V => "V",
            Region::M => "M",
            Region::Exterior => "exterior",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("malformed index: {0}")]
    MalformedIndex(String),
    #[error("mixed grade: {0}")]
    MixedGrade(String),
    #[error("derivative order {found} exceeds bound {bound}")]
    OrderExceeded { found: usize, bound: usize },
    #[error("basis size {size} exceeds cap {cap}")]
    BasisOverflow { size: usize, cap: usize },
    #[error("rule `{rule}` is not valid on region {region}")]
    RuleNotValidOnRegion { rule: &'static str, region: Region },
    #[error("unknown generator {0}")]
    UnknownGenerator(String),
    #[error("gauge-fixing fermion contains antifields")]
    PsiContainsAntifields,
    #[error("variation target does not match the theory: {0}")]
    TargetMismatch(String),
    #[error("field-dependent variations are not supported")]
    FieldDependentVariationUnsupported,
    #[error("invalid Lie algebra: {0}")]
    InvalidAlgebra(String),
    #[error("polynomials live on different spaces ({0} vs {1})")]
    SpaceMismatch(usize, usize),
    #[error("grading mismatch: {0}")]
    GradingMismatch(String),
    #[error("CFL violation: dt/dx = {0} exceeds 0.9")]
    CflViolation(f64),
    #[error("non-finite value in lattice evolution")]
    NonFinite,
    #[error("backgrounds differ outside the interaction region")]
    SupportMismatch,
    #[error("difference quotient does not converge for step {0}")]
    StepTooLarge(f64),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("suite `{suite}` is incompatible with theory {theory}")]
    IncompatibleTheory { suite: String, theory: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    ConfigParse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

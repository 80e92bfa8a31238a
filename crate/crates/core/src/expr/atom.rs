//! Generators and their jet occurrences.

use smallvec::SmallVec;
use std::fmt;

/// Concrete spacetime index values (`0..dim`).
pub type Idx = SmallVec<[u8; 2]>;
/// Covariant derivative indices, outermost first.
pub type Ders = SmallVec<[u8; 4]>;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    DynField,
    Antifield,
    Background,
    Variation,
    External,
    Param,
}

/// Generator symbols of the two model theories.
///
/// The derived ordering is the canonical order of atoms inside a monomial.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gen {
    Mass,
    Lambda,
    Test(u8),
    Fbar,
    Phibar,
    Var(u8),
    PhiVar(u8),
    A,
    B,
    C,
    Cbar,
    Phi,
    AStar,
    BStar,
    CStar,
    CbarStar,
}

impl Gen {
    pub fn kind(self) -> Kind {
        use Gen::*;
        match self {
            A | B | C | Cbar | Phi => Kind::DynField,
            AStar | BStar | CStar | CbarStar => Kind::Antifield,
            Fbar | Phibar => Kind::Background,
            Var(_) | PhiVar(_) => Kind::Variation,
            Lambda | Test(_) => Kind::External,
            Mass => Kind::Param,
        }
    }

    /// Carries one adjoint Lie index.
    pub fn adjoint(self) -> bool {
        use Gen::*;
        matches!(
            self,
            A | B | C | Cbar | AStar | BStar | CStar | CbarStar | Fbar | Var(_)
        )
    }

    pub fn ghost(self) -> i32 {
        use Gen::*;
        match self {
            C => 1,
            Cbar | AStar | BStar => -1,
            CStar => -2,
            _ => 0,
        }
    }

    pub fn odd(self) -> bool {
        self.ghost().rem_euclid(2) == 1
    }

    /// Mass dimension; antifields include their density weight.
    pub fn mass_dim(self) -> i32 {
        use Gen::*;
        match self {
            A | Var(_) | Phi | Phibar | PhiVar(_) | Mass => 1,
            B | Cbar | Fbar | BStar | CbarStar => 2,
            C | Lambda | Test(_) => 0,
            AStar => 3,
            CStar => 4,
        }
    }

    /// Number of spacetime index slots.
    pub fn nidx(self) -> usize {
        use Gen::*;
        match self {
            A | AStar | Var(_) => 1,
            Fbar => 2,
            _ => 0,
        }
    }

    /// Spacetime slots are contravariant (only `A‡`).
    pub fn upper(self) -> bool {
        self == Gen::AStar
    }

    /// Atoms of this generator never carry derivatives.
    pub fn constant(self) -> bool {
        self == Gen::Mass
    }

    pub fn is_field_like(self) -> bool {
        matches!(self.kind(), Kind::DynField | Kind::Antifield)
    }

    pub fn name(self) -> String {
        use Gen::*;
        match self {
            Mass => "m".into(),
            Lambda => "lambda".into(),
            Test(k) => format!("test{k}"),
            Fbar => "Fbar".into(),
            Phibar => "phibar".into(),
            Var(k) => format!("avar{k}"),
            PhiVar(k) => format!("pvar{k}"),
            A => "A".into(),
            B => "B".into(),
            C => "C".into(),
            Cbar => "Cbar".into(),
            Phi => "phi".into(),
            AStar => "A*".into(),
            BStar => "B*".into(),
            CStar => "C*".into(),
            CbarStar => "Cbar*".into(),
        }
    }

    pub fn from_name(s: &str) -> Option<Gen> {
        use Gen::*;
        let fixed = match s {
            "m" => Some(Mass),
            "lambda" => Some(Lambda),
            "Fbar" => Some(Fbar),
            "phibar" => Some(Phibar),
            "A" => Some(A),
            "B" => Some(B),
            "C" => Some(C),
            "Cbar" => Some(Cbar),
            "phi" => Some(Phi),
            "A*" => Some(AStar),
            "B*" => Some(BStar),
            "C*" => Some(CStar),
            "Cbar*" => Some(CbarStar),
            _ => None,
        };
        if fixed.is_some() {
            return fixed;
        }
        for (prefix, mk) in [
            ("test", Test as fn(u8) -> Gen),
            ("avar", Var as fn(u8) -> Gen),
            ("pvar", PhiVar as fn(u8) -> Gen),
        ] {
            if let Some(rest) = s.strip_prefix(prefix) {
                if let Ok(k) = rest.parse::<u8>() {
                    return Some(mk(k));
                }
            }
        }
        None
    }

    /// Antifield partner of a gauge field, and back.
    pub fn partner(self) -> Option<Gen> {
        use Gen::*;
        match self {
            A => Some(AStar),
            B => Some(BStar),
            C => Some(CStar),
            Cbar => Some(CbarStar),
            AStar => Some(A),
            BStar => Some(B),
            CStar => Some(C),
            CbarStar => Some(Cbar),
            _ => None,
        }
    }
}

/// One occurrence `∇̄_{d1}…∇̄_{dk} X_{idx}` of a generator.
///
/// `comp` is the Lie component in the su(2) backend and 0 otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub gen: Gen,
    pub idx: Idx,
    pub ders: Ders,
    pub comp: u8,
}

impl Atom {
    pub fn new(gen: Gen, idx: &[u8]) -> Atom {
        Atom {
            gen,
            idx: Idx::from_slice(idx),
            ders: Ders::new(),
            comp: 0,
        }
    }

    pub fn with_ders(mut self, ders: &[u8]) -> Atom {
        self.ders = Ders::from_slice(ders);
        self
    }

    /// `∇̄_mu` applied on the outside.
    pub fn prepend(&self, mu: u8) -> Atom {
        let mut a = self.clone();
        a.ders.insert(0, mu);
        a
    }

    pub fn bare(&self) -> Atom {
        let mut a = self.clone();
        a.comp = 0;
        a
    }

    pub fn odd(&self) -> bool {
        self.gen.odd()
    }

    pub fn order(&self) -> usize {
        self.ders.len()
    }

    pub fn ders_sorted(&self) -> bool {
        self.ders.windows(2).all(|w| w[0] <= w[1])
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.gen.name())?;
        if self.gen.adjoint() {
            write!(f, "^{}", self.comp)?;
        }
        for i in &self.idx {
            write!(f, "_{i}")?;
        }
        if !self.ders.is_empty() {
            write!(f, ";")?;
            for d in &self.ders {
                write!(f, "{d}")?;
            }
        }
        Ok(())
    }
}

/// Minkowski metric diag(−1, 1, …, 1) on a single index value.
pub fn eta(mu: u8) -> i64 {
    if mu == 0 {
        -1
    } else {
        1
    }
}

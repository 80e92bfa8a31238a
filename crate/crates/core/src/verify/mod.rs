//! Named identity suites.  Each suite is deterministic given the seed and
//! returns a [`Report`] carrying the offending residual on failure.

pub mod grid;
mod numeric;
pub mod random;
mod symbolic;

use crate::error::{Error, Result};
use crate::models::{AlgebraMode, Mutations, TheoryKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Instant;

pub use symbolic::{expected_s0_square, kp_residual};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Trials {
    pub dhat: usize,
    pub jacobi: usize,
    pub star_assoc: usize,
    pub star_derivation: usize,
}

impl Default for Trials {
    fn default() -> Self {
        Trials {
            dhat: 20,
            jacobi: 50,
            star_assoc: 100,
            star_derivation: 24,
        }
    }
}

/// Grid and model parameters of the 1+1 dimensional experiments.  The
/// configured grid is the finest of the `refine` levels; each coarser level
/// doubles both spacings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    pub nx: usize,
    pub nt: usize,
    pub dx: f64,
    pub dt: f64,
    pub m: f64,
    pub lambda0: f64,
    pub tolerance: f64,
    pub refine: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            nx: 128,
            nt: 256,
            dx: 1.0 / 8.0,
            dt: 1.0 / 16.0,
            m: 1.0,
            lambda0: 1.0,
            tolerance: 1e-8,
            refine: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub theory: TheoryKind,
    pub algebra: AlgebraMode,
    pub seed: u64,
    /// Spacetime dimension of the symbolic models.
    pub dim: u8,
    pub max_field_degree: usize,
    pub max_der_order: usize,
    pub trials: Trials,
    pub lattice: LatticeConfig,
    pub output: Option<PathBuf>,
    pub mutations: Mutations,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            theory: TheoryKind::Ym,
            algebra: AlgebraMode::Su2,
            seed: 20240917,
            dim: 4,
            max_field_degree: 4,
            max_der_order: 2,
            trials: Trials::default(),
            lattice: LatticeConfig::default(),
            output: None,
            mutations: Mutations::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        let c: Config = serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigParse(m.to_string()));
        if !(2..=4).contains(&self.dim) {
            return bad("dim must be 2, 3 or 4");
        }
        if self.max_field_degree == 0 || self.max_der_order == 0 {
            return bad("degree bounds must be positive");
        }
        let t = &self.trials;
        if t.dhat == 0 || t.jacobi == 0 || t.star_assoc == 0 || t.star_derivation == 0 {
            return bad("trial counts must be positive");
        }
        let l = &self.lattice;
        if l.nx < 8 || l.nt < 8 || l.refine == 0 {
            return bad("lattice sizes must be at least 8 and refine positive");
        }
        if !l.nx.is_multiple_of(1 << (l.refine - 1)) || !l.nt.is_multiple_of(1 << (l.refine - 1)) {
            return bad("lattice sizes must be divisible by 2^(refine-1)");
        }
        if !(l.dx > 0.0 && l.dt > 0.0 && l.tolerance > 0.0 && l.m >= 0.0 && l.lambda0.is_finite()) {
            return bad("lattice spacings and tolerance must be positive");
        }
        if l.dt / l.dx > 0.9 {
            return Err(Error::CflViolation(l.dt / l.dx));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// A printed expression (symbolic suites) or a numeric defect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Residual {
    Expr(String),
    Norm(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub status: Status,
    pub residual: Residual,
    pub seed: u64,
    pub millis: u64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

/// Verdict of one suite before timing is attached.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub residual: Residual,
    pub detail: String,
}

impl Outcome {
    fn exact(pass: bool, residual: String, detail: String) -> Outcome {
        Outcome {
            pass,
            residual: Residual::Expr(if pass { "0".into() } else { residual }),
            detail,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Scope {
    /// Needs the gauge theory.
    Gauge,
    /// Independent of the selected theory.
    Any,
}

pub struct SuiteSpec {
    pub id: &'static str,
    pub claim: &'static str,
    pub scope: Scope,
}

pub const SUITES: &[SuiteSpec] = &[
    SuiteSpec { id: "master_equation", claim: "(S, S) vanishes modulo total derivatives where the cutoff is 1 and the background is on shell", scope: Scope::Gauge },
    SuiteSpec { id: "scalar_split", claim: "the split scalar action depends on the background and the perturbation only through their sum", scope: Scope::Any },
    SuiteSpec { id: "ym_shift_prop", claim: "background derivative of S minus dynamical derivative of S_int equals s of the background derivative of the gauge-fixing fermion", scope: Scope::Gauge },
    SuiteSpec { id: "cD_S_corollary", claim: "the split derivative of S is s-exact: cD S = s(cD Psi)", scope: Scope::Gauge },
    SuiteSpec { id: "dhat_leibniz", claim: "the corrected split derivative is a derivation of the anti-bracket", scope: Scope::Gauge },
    SuiteSpec { id: "dhat_commutes_s", claim: "the corrected split derivative commutes with s on functionals supported where the cutoff is 1", scope: Scope::Gauge },
    SuiteSpec { id: "dhat_flat", claim: "corrected split derivatives along constant variations commute", scope: Scope::Gauge },
    SuiteSpec { id: "jacobi", claim: "the anti-bracket is graded antisymmetric and satisfies the graded Jacobi identity", scope: Scope::Gauge },
    SuiteSpec { id: "s0_table_crosscheck", claim: "the free BRST table agrees with (S0, -) and with the P/K-hat decomposition", scope: Scope::Gauge },
    SuiteSpec { id: "s0_square_offshell", claim: "s0 squared on the gauge antifield is a commutator with the background equation of motion", scope: Scope::Gauge },
    SuiteSpec { id: "current_divergence", claim: "off-shell divergence identity of the linearized BRST current", scope: Scope::Gauge },
    SuiteSpec { id: "KP_adjoint", claim: "P-bar K plus sign times K-hat P-bar vanishes on the on-shell background", scope: Scope::Gauge },
    SuiteSpec { id: "cohomology_closedness", claim: "C.[C,C] and F.F are s-closed, A.A is not", scope: Scope::Gauge },
    SuiteSpec { id: "star_commutator", claim: "the star commutator of linear fields is the antisymmetric kernel part and central", scope: Scope::Any },
    SuiteSpec { id: "star_assoc", claim: "the finite star product is associative and additive in Deg", scope: Scope::Any },
    SuiteSpec { id: "star_derivation", claim: "a linear differential is a star derivation exactly when it intertwines the kernel", scope: Scope::Any },
    SuiteSpec { id: "lattice_green", claim: "retarded Green columns: support, free closed form, antisymmetry of the causal propagator", scope: Scope::Any },
    SuiteSpec { id: "lattice_rop", claim: "the retarded wave operator maps solutions to solutions, composes, and is the identity outside the future of the change", scope: Scope::Any },
    SuiteSpec { id: "lattice_retvar", claim: "the retarded variation of a split-independent functional matches the transport of the evaluation point", scope: Scope::Any },
];

pub fn suite_ids() -> impl Iterator<Item = &'static str> {
    SUITES.iter().map(|s| s.id)
}

fn spec(id: &str) -> Result<&'static SuiteSpec> {
    SUITES
        .iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::UnknownSuite(id.to_string()))
}

fn theory_name(t: TheoryKind) -> &'static str {
    match t {
        TheoryKind::Scalar => "scalar",
        TheoryKind::Ym => "ym",
    }
}

fn dispatch(id: &str, cfg: &Config) -> Result<Outcome> {
    match id {
        "star_commutator" | "star_assoc" | "star_derivation" => numeric::run(id, cfg),
        "lattice_green" | "lattice_rop" | "lattice_retvar" => grid::run(id, cfg),
        _ => symbolic::run(id, cfg),
    }
}

/// Run one suite.  Computational errors inside a suite are reported as
/// failures; only selection errors are returned as `Err`.
pub fn run_suite(id: &str, cfg: &Config) -> Result<Report> {
    let s = spec(id)?;
    if s.scope == Scope::Gauge && cfg.theory != TheoryKind::Ym {
        return Err(Error::IncompatibleTheory {
            suite: id.to_string(),
            theory: theory_name(cfg.theory).to_string(),
        });
    }
    let start = Instant::now();
    let outcome = dispatch(id, cfg).unwrap_or_else(|e| Outcome {
        pass: false,
        residual: Residual::Expr(format!("error: {e}")),
        detail: String::new(),
    });
    Ok(Report {
        suite: id.to_string(),
        status: if outcome.pass { Status::Pass } else { Status::Fail },
        residual: outcome.residual,
        seed: cfg.seed,
        millis: start.elapsed().as_millis() as u64,
        detail: outcome.detail,
    })
}

fn skipped(id: &str, cfg: &Config) -> Report {
    Report {
        suite: id.to_string(),
        status: Status::Skipped,
        residual: Residual::Expr(String::new()),
        seed: cfg.seed,
        millis: 0,
        detail: format!("not applicable to the {} theory", theory_name(cfg.theory)),
    }
}

/// Run the given suites in parallel; incompatible ones are reported as
/// skipped.  Reports come back in registry order.
pub fn run_many(ids: &[&str], cfg: &Config) -> Result<Vec<Report>> {
    for id in ids {
        spec(id)?;
    }
    let mut order: Vec<&str> = SUITES.iter().map(|s| s.id).filter(|s| ids.contains(s)).collect();
    order.dedup();
    Ok(order
        .par_iter()
        .map(|id| match run_suite(id, cfg) {
            Ok(r) => r,
            Err(_) => skipped(id, cfg),
        })
        .collect())
}

pub fn run_all(cfg: &Config) -> Vec<Report> {
    let ids: Vec<&str> = suite_ids().collect();
    run_many(&ids, cfg).expect("registered suites")
}

pub fn all_pass(reports: &[Report]) -> bool {
    reports.iter().all(|r| r.status != Status::Fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys_and_bad_bounds() {
        assert!(Config::from_json("{}").is_ok());
        assert!(matches!(
            Config::from_json(r#"{"sede": 1}"#),
            Err(Error::ConfigParse(_))
        ));
        assert!(matches!(
            Config::from_json(r#"{"lattice": {"dt": 0.12}}"#),
            Err(Error::CflViolation(_))
        ));
        assert!(Config::from_json(r#"{"trials": {"jacobi": 0}}"#).is_err());
        assert!(Config::from_json(r#"{"lattice": {"nx": 100, "refine": 4}}"#).is_err());
        let c = Config::from_json(r#"{"theory": "scalar", "seed": 7, "mutations": {"psi_sign": true}}"#).unwrap();
        assert_eq!((c.theory, c.seed, c.mutations.psi_sign), (TheoryKind::Scalar, 7, true));
    }

    #[test]
    fn selection_errors() {
        let cfg = Config {
            theory: TheoryKind::Scalar,
            ..Config::default()
        };
        assert!(matches!(run_suite("nosuch", &cfg), Err(Error::UnknownSuite(_))));
        assert!(matches!(
            run_suite("jacobi", &cfg),
            Err(Error::IncompatibleTheory { .. })
        ));
        let r = run_many(&["star_commutator", "jacobi"], &cfg).unwrap();
        assert_eq!(
            r.iter().map(|r| (r.suite.as_str(), r.status)).collect::<Vec<_>>(),
            [("jacobi", Status::Skipped), ("star_commutator", Status::Pass)]
        );
    }

    #[test]
    fn registry_ids_are_unique() {
        let mut ids: Vec<_> = suite_ids().collect();
        let n = ids.len();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!((ids.len(), n), (19, 19));
    }

    #[test]
    fn reports_are_reproducible_up_to_timing() {
        let cfg = Config::default();
        let strip = |mut r: Report| {
            r.millis = 0;
            serde_json::to_string(&r).unwrap()
        };
        let a = strip(run_suite("star_assoc", &cfg).unwrap());
        let b = strip(run_suite("star_assoc", &cfg).unwrap());
        assert_eq!(a, b);
    }
}

//! Acceptance run: one PASS/FAIL line per criterion.  Built without the
//! test harness so the lines always reach the output.
//!
//! Every threshold used below is pinned here.  The run asserts on all lines
//! except the one comparing `s₀²A‡` with the sign as printed in the source
//! formula, which is reported for the record (the derived sign is checked by
//! its own line).

use bvcheck::cli;
use bvcheck::expr::{Atom, Ctx, Gen, Su2};
use bvcheck::models::{AlgebraMode, Mutations, Theory};
use bvcheck::verify::grid::{green_study, retvar_study, rop_study, FREE_KERNEL_C, MIN_ORDER, ORDER_WINDOW, ROUNDING};
use bvcheck::verify::{expected_s0_square, run_many, Config, Report, Residual, Status};
use bvcheck::Region;
use std::time::{Duration, Instant};

const MASTER_BUDGET: Duration = Duration::from_secs(120);
const LATTICE_BUDGET: Duration = Duration::from_secs(60);
const MIN_DHAT_TRIALS: usize = 20;
const MAX_DHAT_DEGREE: usize = 4;
const MAX_DHAT_DERS: usize = 2;
const MIN_JACOBI_TRIALS: usize = 50;
const MIN_ASSOC_TRIPLES: usize = 100;
const MIN_DERIVATION_KERNELS: usize = 20;
const MIN_INCOMPATIBLE: usize = 5;

struct Sheet {
    lines: Vec<(String, bool, bool)>,
}

impl Sheet {
    fn record(&mut self, name: &str, pass: bool, note: String) {
        self.push(name, pass, note, true);
    }

    /// A line reported without failing the run.
    fn inform(&mut self, name: &str, pass: bool, note: String) {
        self.push(name, pass, note, false);
    }

    fn push(&mut self, name: &str, pass: bool, note: String, gating: bool) {
        println!("{} {name}: {note}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((name.to_string(), pass, gating));
    }
}

fn verify_all(extra: &[&str]) -> (i32, String, Vec<Report>) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let mut args = vec!["bvcheck", "verify", "--all", "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(args, &mut out, &mut err);
    let reports = std::fs::read_to_string(&path)
        .map(|t| serde_json::from_str(&t).unwrap())
        .unwrap_or_default();
    (
        code,
        String::from_utf8(out).unwrap() + &String::from_utf8(err).unwrap(),
        reports,
    )
}

fn find<'a>(reports: &'a [Report], id: &str) -> &'a Report {
    reports
        .iter()
        .find(|r| r.suite == id)
        .unwrap_or_else(|| panic!("no report for {id}"))
}

fn zero_residual(r: &Report) -> bool {
    r.status == Status::Pass && r.residual == Residual::Expr("0".into())
}

fn brief(r: &Report) -> String {
    format!("{} {:?} in {} ms {}", r.suite, r.status, r.millis, r.detail)
}

fn failing(reports: &[Report]) -> Vec<&str> {
    reports
        .iter()
        .filter(|r| r.status == Status::Fail)
        .map(|r| r.suite.as_str())
        .collect()
}

/// Leading integer of the phrase `"<n> <word>"` inside a suite detail.
fn count_in(detail: &str, word: &str) -> usize {
    let toks: Vec<&str> = detail.split([' ', ',']).filter(|t| !t.is_empty()).collect();
    toks.windows(2)
        .find(|w| w[1] == word)
        .and_then(|w| w[0].parse().ok())
        .unwrap_or(0)
}

fn main() {
    let mut sheet = Sheet { lines: Vec::new() };
    let cfg = Config::default();
    let (code, _, reports) = verify_all(&[]);
    assert_eq!(reports.len(), 19, "default run produced no report");

    let me = find(&reports, "master_equation");
    sheet.record(
        "master_equation exact on R, under 120 s",
        zero_residual(me) && Duration::from_millis(me.millis) < MASTER_BUDGET,
        brief(me),
    );

    let psi_cfg = Config {
        mutations: Mutations::single("psi_sign").unwrap(),
        ..Config::default()
    };
    let mutated = run_many(&["ym_shift_prop", "cD_S_corollary"], &psi_cfg).unwrap();
    let ok = ["ym_shift_prop", "cD_S_corollary"]
        .iter()
        .all(|id| zero_residual(find(&reports, id)))
        && mutated
            .iter()
            .all(|r| r.status == Status::Fail && r.residual != Residual::Expr("0".into()));
    sheet.record(
        "ym_shift_prop and cD_S_corollary exact; psi_sign mutation fails both",
        ok,
        format!(
            "mutated: {:?}",
            mutated.iter().map(|r| (&r.suite, r.status)).collect::<Vec<_>>()
        ),
    );

    let dhat = ["dhat_leibniz", "dhat_commutes_s", "dhat_flat"];
    let shape_ok = cfg.trials.dhat >= MIN_DHAT_TRIALS
        && cfg.max_field_degree <= MAX_DHAT_DEGREE
        && cfg.max_der_order <= MAX_DHAT_DERS;
    let ok = shape_ok
        && dhat.iter().all(|id| {
            let r = find(&reports, id);
            zero_residual(r) && r.detail.contains("backend_disagreements=0")
        });
    sheet.record(
        "D-hat identities exact, backends agree",
        ok,
        format!(
            "{} functionals each, field degree <= {}, derivative order <= {}; {}",
            cfg.trials.dhat,
            cfg.max_field_degree,
            cfg.max_der_order,
            dhat.iter()
                .map(|id| find(&reports, id).detail.clone())
                .collect::<Vec<_>>()
                .join("; ")
        ),
    );

    let sq = find(&reports, "s0_square_offshell");
    sheet.record(
        "s0 squared on A* off shell (derived sign), zero on shell",
        zero_residual(sq),
        brief(sq),
    );
    let ctx = Ctx::<Su2>::for_region(4, Region::M);
    let th = Theory::ym(&ctx, Mutations::default());
    let printed = (0..4).all(|mu| {
        let a = ctx.nf(&Atom::new(Gen::AStar, &[mu]));
        let got = th.s0_apply(&ctx, &th.s0_apply(&ctx, &a).unwrap()).unwrap();
        got == expected_s0_square(&ctx, mu).neg()
    });
    sheet.inform(
        "s0 squared on A* matches the printed sign",
        printed,
        "the direct computation gives the opposite overall sign; see the decisions ledger".into(),
    );

    let jac = find(&reports, "jacobi");
    sheet.record(
        "anti-bracket graded symmetry and Jacobi exact",
        zero_residual(jac) && cfg.trials.jacobi >= MIN_JACOBI_TRIALS,
        brief(jac),
    );

    let ok = ["current_divergence", "KP_adjoint"]
        .iter()
        .all(|id| zero_residual(find(&reports, id)));
    sheet.record(
        "current divergence and K-P adjoint identities exact",
        ok,
        format!(
            "{}; {}",
            brief(find(&reports, "current_divergence")),
            brief(find(&reports, "KP_adjoint"))
        ),
    );

    let (sc, sa, sd) = (
        find(&reports, "star_commutator"),
        find(&reports, "star_assoc"),
        find(&reports, "star_derivation"),
    );
    let kernels = count_in(&sd.detail, "kernels");
    let incompatible = count_in(&sd.detail, "incompatible");
    let ok = zero_residual(sc)
        && zero_residual(sa)
        && zero_residual(sd)
        && count_in(&sa.detail, "triples") >= MIN_ASSOC_TRIPLES
        && kernels >= MIN_DERIVATION_KERNELS
        && incompatible >= MIN_INCOMPATIBLE;
    sheet.record(
        "star product: commutator, Deg, associativity, derivation verdicts",
        ok,
        format!("{}; {}; {}", sc.detail, sa.detail, sd.detail),
    );

    // lattice, default 128x256 with one halving
    let start = Instant::now();
    let green = green_study(&cfg).unwrap();
    let rop = rop_study(&cfg).unwrap();
    let retvar = retvar_study(&cfg).unwrap();
    let lattice_time = start.elapsed();
    let tol = cfg.lattice.tolerance;
    sheet.record(
        "retarded Green columns supported in the discrete future",
        green.support_exact,
        format!("|P G - delta| = {:.1e}", green.delta_residual),
    );
    let p = green.free_order().unwrap();
    sheet.record(
        "free Green kernel error <= C dx^2, order 2.0 +/- 0.2",
        (p - 2.0).abs() <= ORDER_WINDOW && green.free_constant() <= FREE_KERNEL_C,
        format!(
            "errors {:?}, order {p:.3}, C = {:.3} (bound {FREE_KERNEL_C})",
            green.free_errors,
            green.free_constant()
        ),
    );
    let p = rop.solution_order().unwrap();
    sheet.record(
        "retarded wave operator maps solutions to solutions, order >= 1.8",
        p >= MIN_ORDER && rop.identity_exact && rop.coincidence_exact && rop.discrete_residual <= tol,
        format!(
            "continuum residuals {:?}, order {p:.3}; discrete residual {:.1e}",
            rop.continuum_residuals, rop.discrete_residual
        ),
    );
    let comp = rop.composition.iter().cloned().fold(0.0, f64::max);
    sheet.record(
        "retarded wave operator composition",
        comp <= ROUNDING,
        format!(
            "defect {:?}: exact to rounding on every level, so no convergence order applies",
            rop.composition
        ),
    );
    let indep = retvar.independence_defects.iter().cloned().fold(0.0, f64::max);
    sheet.record(
        "retarded variation background independence",
        indep <= tol && retvar.constant_defect <= tol && retvar.chain_step_order() >= MIN_ORDER,
        format!(
            "relative defect {:?}: exact to rounding on every level, so no convergence order applies; chain rule step order {:.3}",
            retvar.independence_defects,
            retvar.chain_step_order()
        ),
    );
    sheet.record(
        "lattice studies under 60 s at 128x256",
        lattice_time < LATTICE_BUDGET,
        format!("{lattice_time:.2?}"),
    );

    // end to end
    sheet.record(
        "verify --all exits 0 on defaults",
        code == cli::EXIT_PASS && failing(&reports).is_empty(),
        format!("exit {code}"),
    );
    let mut notes = Vec::new();
    let mut ok = true;
    for name in Mutations::NAMES {
        let (code, out, reports) = verify_all(&["--mutation", name]);
        let failed = failing(&reports);
        let named = !failed.is_empty() && failed.iter().all(|id| out.contains(&format!("FAIL {id}")));
        ok &= code == cli::EXIT_FAIL && named;
        notes.push(format!("{name} -> exit {code}, {failed:?}"));
    }
    sheet.record(
        "each mutation exits 1 and names the failing suite",
        ok,
        notes.join("; "),
    );

    // backend agreement of every symbolic verdict
    let abs_cfg = Config {
        algebra: AlgebraMode::Abstract,
        ..Config::default()
    };
    let ids: Vec<&str> = reports
        .iter()
        .map(|r| r.suite.as_str())
        .filter(|id| !id.starts_with("star_") && !id.starts_with("lattice_"))
        .collect();
    let abs = run_many(&ids, &abs_cfg).unwrap();
    let differ: Vec<&str> = abs
        .iter()
        .filter(|r| r.status != find(&reports, &r.suite).status)
        .map(|r| r.suite.as_str())
        .collect();
    sheet.record(
        "abstract and su(2) backends give the same verdicts",
        differ.is_empty(),
        format!("{} symbolic suites compared, differing: {differ:?}", ids.len()),
    );

    let failed: Vec<&str> = sheet
        .lines
        .iter()
        .filter(|(_, pass, gating)| *gating && !pass)
        .map(|(n, _, _)| n.as_str())
        .collect();
    let gating = sheet.lines.iter().filter(|l| l.2).count();
    println!("acceptance: {} of {gating} gating criteria pass", gating - failed.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

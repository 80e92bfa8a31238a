//! Command-line front end.  Every command is a thin wrapper over library
//! calls; [`run`] returns the process exit code.

use crate::error::{Error, Region, Result};
use crate::expr::grade::grade_of;
use crate::expr::{print, Abstract, Ctx, Parser as ExprParser, Printable, RuleSet, Su2};
use crate::models::{AlgebraMode, Mutations, Theory, TheoryKind};
use crate::verify::{self, grid, Config, Report, Status};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "bvcheck",
    version,
    about = "Check classical BV-BRST identities of background-split gauge theories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run identity suites and write a JSON report.
    Verify(VerifyArgs),
    /// Run the lattice suites, report convergence orders, optionally dump fields.
    Lattice(LatticeArgs),
    /// Normalize an s-expression and print its grading.
    Expr(ExprArgs),
    /// List the registered suites.
    Suites,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Enable a named negative-control mutation (repeatable).
    #[arg(long = "mutation")]
    mutations: Vec<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Suite to run (repeatable).
    #[arg(long = "suite")]
    suites: Vec<String>,
    /// Run every registered suite (the default when no suite is named).
    #[arg(long, conflicts_with = "suites")]
    all: bool,
    #[arg(long, value_enum)]
    theory: Option<TheoryArg>,
    #[arg(long, value_enum)]
    algebra: Option<AlgebraArg>,
}

#[derive(Args, Debug)]
struct LatticeArgs {
    #[command(flatten)]
    common: Common,
    /// Number of grid levels; the configured grid is the finest.
    #[arg(long)]
    refine: Option<usize>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    dx: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Directory for plain-text field matrices.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExprArgs {
    /// Expression text; `-` reads standard input.
    text: String,
    #[arg(long, value_enum, default_value = "abstract")]
    algebra: AlgebraArg,
    #[arg(long, default_value_t = 4)]
    dim: u8,
    /// Apply the rewrite rules valid on a region.
    #[arg(long, value_enum)]
    region: Option<RegionArg>,
    /// Apply a differential of the gauge theory before normalizing.
    #[arg(long, value_enum)]
    apply: Option<ApplyArg>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TheoryArg {
    Scalar,
    Ym,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum AlgebraArg {
    Abstract,
    Su2,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RegionArg {
    R,
    U,
    V,
    M,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ApplyArg {
    /// The full BRST differential `(S, −)`.
    S,
    /// The free differential from the table of linearized transformations.
    S0,
}

/// Parse `args` (including the program name) and execute.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Verify(a) => cmd_verify(a, out),
        Command::Lattice(a) => cmd_lattice(a, out),
        Command::Expr(a) => cmd_expr(a, out),
        Command::Suites => {
            for s in verify::SUITES {
                let _ = writeln!(out, "{:<22} {}", s.id, s.claim);
            }
            Ok(EXIT_PASS)
        }
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_USAGE
    })
}

pub fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            Config::from_json(&text)
        }
    }
}

fn apply_common(cfg: &mut Config, c: &Common) -> Result<()> {
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output = Some(o.clone());
    }
    for name in &c.mutations {
        let m = Mutations::single(name).ok_or_else(|| {
            Error::ConfigParse(format!(
                "unknown mutation `{name}`; known: {}",
                Mutations::NAMES.join(", ")
            ))
        })?;
        let cur = &mut cfg.mutations;
        cur.psi_sign |= m.psi_sign;
        cur.drop_fbar_cross |= m.drop_fbar_cross;
        cur.s0_table_sign |= m.s0_table_sign;
        cur.antibracket_sign |= m.antibracket_sign;
        cur.lattice_source_scale |= m.lattice_source_scale;
    }
    Ok(())
}

pub fn write_reports(path: &Path, reports: &[Report]) -> Result<()> {
    let text = serde_json::to_string_pretty(reports).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn emit(cfg: &Config, reports: &[Report], out: &mut dyn Write) -> Result<i32> {
    for r in reports {
        let status = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        let _ = writeln!(out, "{status} {:<22} {:>6} ms", r.suite, r.millis);
        if !r.detail.is_empty() {
            let _ = writeln!(out, "     {}", r.detail);
        }
        if r.status == Status::Fail {
            let _ = writeln!(
                out,
                "     residual: {}",
                serde_json::to_string(&r.residual).unwrap_or_default()
            );
        }
    }
    if let Some(p) = &cfg.output {
        write_reports(p, reports)?;
    }
    Ok(if verify::all_pass(reports) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = load_config(a.common.config.as_deref())?;
    apply_common(&mut cfg, &a.common)?;
    if let Some(t) = a.theory {
        cfg.theory = match t {
            TheoryArg::Scalar => TheoryKind::Scalar,
            TheoryArg::Ym => TheoryKind::Ym,
        };
    }
    if let Some(al) = a.algebra {
        cfg.algebra = algebra(al);
    }
    cfg.validate()?;
    let reports = if a.all || a.suites.is_empty() {
        verify::run_all(&cfg)
    } else {
        let ids: Vec<&str> = a.suites.iter().map(String::as_str).collect();
        verify::run_many(&ids, &cfg)?
    };
    emit(&cfg, &reports, out)
}

fn cmd_lattice(a: LatticeArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = load_config(a.common.config.as_deref())?;
    apply_common(&mut cfg, &a.common)?;
    let l = &mut cfg.lattice;
    if let Some(r) = a.refine {
        l.refine = r;
    }
    l.nx = a.nx.unwrap_or(l.nx);
    l.nt = a.nt.unwrap_or(l.nt);
    l.dx = a.dx.unwrap_or(l.dx);
    l.dt = a.dt.unwrap_or(l.dt);
    cfg.validate()?;
    let reports = verify::run_many(&["lattice_green", "lattice_rop", "lattice_retvar"], &cfg)?;
    if let Some(dir) = &a.dump {
        for p in grid::dump_fields(&cfg, dir)? {
            let _ = writeln!(out, "wrote {}", p.display());
        }
    }
    emit(&cfg, &reports, out)
}

fn algebra(a: AlgebraArg) -> AlgebraMode {
    match a {
        AlgebraArg::Abstract => AlgebraMode::Abstract,
        AlgebraArg::Su2 => AlgebraMode::Su2,
    }
}

fn cmd_expr(a: ExprArgs, out: &mut dyn Write) -> Result<i32> {
    let text = if a.text == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| Error::Io(e.to_string()))?
    } else {
        a.text.clone()
    };
    if !(2..=4).contains(&a.dim) {
        return Err(Error::ConfigParse("dim must be 2, 3 or 4".into()));
    }
    let (normal, grading) = match algebra(a.algebra) {
        AlgebraMode::Abstract => normal_form::<Abstract>(&a, &text)?,
        AlgebraMode::Su2 => normal_form::<Su2>(&a, &text)?,
    };
    let _ = writeln!(out, "{normal}");
    let _ = writeln!(out, "{grading}");
    Ok(EXIT_PASS)
}

fn normal_form<B: Printable>(a: &ExprArgs, text: &str) -> Result<(String, String)> {
    let ctx = match a.region {
        None => Ctx::<B>::new(a.dim, RuleSet::NONE),
        Some(r) => Ctx::<B>::for_region(
            a.dim,
            match r {
                RegionArg::R => Region::R,
                RegionArg::U => Region::U,
                RegionArg::V => Region::V,
                RegionArg::M => Region::M,
            },
        ),
    };
    let mut p = ExprParser::new(&ctx).parse(text)?;
    if let Some(d) = a.apply {
        let th = Theory::ym(&ctx, Mutations::default());
        p = match d {
            ApplyArg::S => th.s_apply(&ctx, &p),
            ApplyArg::S0 => th.s0_apply(&ctx, &p)?,
        };
    }
    let p = ctx.normalize(&p);
    let grading = match grade_of(&p) {
        Ok(g) => g.to_string(),
        Err(e) => format!("grading: {e}"),
    };
    Ok((print(&p), grading))
}

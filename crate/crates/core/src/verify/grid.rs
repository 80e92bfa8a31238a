//! Lattice experiments behind the `lattice_*` suites.  Each study runs on
//! every refinement level (coarsest first) and keeps the raw measurements so
//! that callers can report orders and defects.

use super::{Config, Outcome, Residual};
use crate::error::{Error, Result};
use crate::lattice::{causal_future, continuum_residual, order, plateau, Field, Grid, Lattice};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// Allowed deviation of a measured convergence order from 2.
pub const ORDER_WINDOW: f64 = 0.2;
/// Smallest accepted order for residuals that only need to converge.
pub const MIN_ORDER: f64 = 1.8;
/// Constant `C` in the free-kernel bound `error ≤ C dx²`.
pub const FREE_KERNEL_C: f64 = 0.25;
/// Relative size below which a defect counts as rounding noise.
pub const ROUNDING: f64 = 1e-10;

/// Lattices of all refinement levels, coarsest first.
pub fn levels(cfg: &Config) -> Result<Vec<Lattice>> {
    let l = &cfg.lattice;
    let fine = Grid::new(l.nx, l.nt, l.dx, l.dt)?;
    let scale = if cfg.mutations.lattice_source_scale { 2.0 } else { 1.0 };
    (0..l.refine as u32)
        .rev()
        .map(|k| Ok(Lattice::new(fine.coarsened(k), l.m, l.lambda0)?.with_source_scale(scale)))
        .collect()
}

/// Grid point of the coarsest level nearest to the fractional position
/// `(τ T, ξ L)`, as physical coordinates shared by all levels.
fn snap(cfg: &Config, tau: f64, xi: f64) -> Result<(f64, f64)> {
    let l = &cfg.lattice;
    let coarse = Grid::new(l.nx, l.nt, l.dx, l.dt)?.coarsened(l.refine as u32 - 1);
    let (n, i) = coarse.point(tau * coarse.duration(), xi * coarse.length());
    Ok((coarse.t(n), coarse.x(i)))
}

fn at(lat: &Lattice, p: (f64, f64)) -> (usize, usize) {
    lat.grid.point(p.0, p.1)
}

fn cauchy(g: &Grid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..g.nx).map(|i| f(g.x(i))).collect()
}

fn background(lat: &Lattice, s: f64) -> Result<Field> {
    let g = lat.grid;
    let k = 2.0 * PI / g.length();
    let phi0 = cauchy(&g, |x| {
        0.8 * (k * x).cos() + 0.4 * (2.0 * k * x + 0.5).sin() + s * 0.5 * (2.0 * k * x + 0.2).cos()
    });
    let v0 = cauchy(&g, |x| 0.3 * (k * x).sin() + s * 0.2 * (k * x).cos());
    lat.solve_background(&phi0, &v0)
}

/// A solution of `P_φ̄ u = 0` from fixed smooth Cauchy data.
fn test_solution(lat: &Lattice, pot: &Field) -> Result<Field> {
    let g = lat.grid;
    let k = 2.0 * PI / g.length();
    lat.solve_linear(
        pot,
        &cauchy(&g, |x| 0.5 * (k * x).cos() + 0.2),
        &cauchy(&g, |x| 0.4 * (k * x).sin()),
    )
}

fn finest_order(errs: &[f64]) -> Option<f64> {
    (errs.len() >= 2).then(|| order(errs[errs.len() - 2], errs[errs.len() - 1]))
}

// ---------------------------------------------------------------- Green

#[derive(Clone, Debug)]
pub struct GreenStudy {
    /// Every retarded column vanishes bit-exactly outside the discrete cone.
    pub support_exact: bool,
    /// `max |P Δ^r − δ| · dx dt` over columns and levels.
    pub delta_residual: f64,
    /// `max |Δ(p;q) + Δ(q;p)| / max |Δ|` over point pairs and levels.
    pub antisymmetry: f64,
    /// Free-kernel error per level, coarsest first.
    pub free_errors: Vec<f64>,
    pub free_dx: Vec<f64>,
}

impl GreenStudy {
    pub fn free_order(&self) -> Option<f64> {
        finest_order(&self.free_errors)
    }

    /// Largest `error / dx²` over the levels.
    pub fn free_constant(&self) -> f64 {
        self.free_errors
            .iter()
            .zip(&self.free_dx)
            .map(|(e, dx)| e / (dx * dx))
            .fold(0.0, f64::max)
    }
}

/// Smooth test function `exp(−((t−t₀)/σ_t)² − ((x−x₀)/σ_x)²)`.
#[derive(Copy, Clone, Debug)]
struct Gauss {
    t0: f64,
    st: f64,
    x0: f64,
    sx: f64,
}

impl Gauss {
    fn eval(&self, t: f64, x: f64) -> f64 {
        (-((t - self.t0) / self.st).powi(2) - ((x - self.x0) / self.sx).powi(2)).exp()
    }

    /// `∫_a^b` of the spatial factor, restricted to `[0, L]`.
    fn x_integral(&self, a: f64, b: f64, l: f64) -> f64 {
        let (a, b) = (a.max(0.0), b.min(l));
        if b <= a {
            return 0.0;
        }
        0.5 * self.sx * PI.sqrt() * (libm::erf((b - self.x0) / self.sx) - libm::erf((a - self.x0) / self.sx))
    }
}

/// `∫ h(t, x) G(t, x; q)` for the continuum kernel `G = −½ θ(t − t_q − |x − x_q|)`
/// of `□` on the circle of length `l`, integrated up to time `tmax`.
fn free_kernel_oracle(h: &Gauss, q: (f64, f64), l: f64, tmax: f64) -> f64 {
    let inner = |t: f64| {
        let tau = t - q.0;
        let width = if 2.0 * tau >= l {
            h.x_integral(0.0, l, l)
        } else {
            (-1..=1)
                .map(|k| h.x_integral(q.1 - tau + k as f64 * l, q.1 + tau + k as f64 * l, l))
                .sum()
        };
        (-((t - h.t0) / h.st).powi(2)).exp() * width
    };
    // Simpson on both sides of the wrap-around time, where the integrand has a kink
    let simpson = |a: f64, b: f64| {
        if b <= a {
            return 0.0;
        }
        let n = 20_000;
        let step = (b - a) / n as f64;
        let mut s = inner(a) + inner(b);
        for j in 1..n {
            s += inner(a + j as f64 * step) * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * step / 3.0
    };
    let wrap = (q.0 + 0.5 * l).min(tmax);
    -0.5 * (simpson(q.0, wrap) + simpson(wrap, tmax))
}

pub fn green_study(cfg: &Config) -> Result<GreenStudy> {
    let lats = levels(cfg)?;
    let points = [snap(cfg, 0.3, 0.5)?, snap(cfg, 0.45, 0.4)?, snap(cfg, 0.55, 0.6)?];
    let mut study = GreenStudy {
        support_exact: true,
        delta_residual: 0.0,
        antisymmetry: 0.0,
        free_errors: Vec::new(),
        free_dx: Vec::new(),
    };
    for lat in &lats {
        let g = lat.grid;
        let pot = lat.potential(&background(lat, 0.0)?);
        let qs: Vec<(usize, usize)> = points.iter().map(|p| at(lat, *p)).collect();
        let cols: Vec<(Field, Field)> = qs
            .par_iter()
            .map(|q| Ok((lat.green_retarded(&pot, *q)?, lat.green_advanced(&pot, *q)?)))
            .collect::<Result<_>>()?;
        let unit = 1.0 / (g.dx * g.dt);
        for (q, (ret, _)) in qs.iter().zip(&cols) {
            let cone = causal_future(&g, &|n, i| (n, i) == *q);
            let outside_zero = ret.data.iter().zip(&cone).all(|(v, inside)| *inside || *v == 0.0);
            study.support_exact &= outside_zero && ret.at(q.0 + 1, q.1) != 0.0;
            let mut r = lat.apply(&pot, ret);
            r.set(q.0, q.1, r.at(q.0, q.1) - unit);
            study.delta_residual = study.delta_residual.max(r.max_abs() / unit);
        }
        let causal = |p: usize, q: usize| cols[q].1.at(qs[p].0, qs[p].1) - cols[q].0.at(qs[p].0, qs[p].1);
        let mut scale: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for p in 0..qs.len() {
            for q in 0..qs.len() {
                scale = scale.max(causal(p, q).abs());
                worst = worst.max((causal(p, q) + causal(q, p)).abs());
            }
        }
        study.antisymmetry = study.antisymmetry.max(worst / scale.max(f64::MIN_POSITIVE));

        let free =
            Lattice::new(g, 0.0, 0.0)?.with_source_scale(if cfg.mutations.lattice_source_scale { 2.0 } else { 1.0 });
        let zero = Field::zeros(g);
        let (tt, ll) = (g.duration(), g.length());
        let tests = [
            Gauss {
                t0: 0.6 * tt,
                st: 0.075 * tt,
                x0: 0.45 * ll,
                sx: 0.09 * ll,
            },
            Gauss {
                t0: 0.7 * tt,
                st: 0.06 * tt,
                x0: 0.6 * ll,
                sx: 0.07 * ll,
            },
        ];
        let mut err: f64 = 0.0;
        for p in &points {
            let col = free.green_retarded(&zero, at(&free, *p))?;
            for h in &tests {
                let num = Field::from_fn(g, |t, x| h.eval(t, x)).pair(&col);
                err = err.max((num - free_kernel_oracle(h, *p, ll, tt)).abs());
            }
        }
        study.free_errors.push(err);
        study.free_dx.push(g.dx);
    }
    Ok(study)
}

// ---------------------------------------------------------------- r

#[derive(Clone, Debug)]
pub struct RopStudy {
    /// `r` at coinciding backgrounds returns its input bit-exactly.
    pub identity_exact: bool,
    /// `r u = u` bit-exactly outside the discrete future of the change.
    pub coincidence_exact: bool,
    /// Discrete `max |P_to(r u)|` relative to `max |u| / dt²`.
    pub discrete_residual: f64,
    /// Fourth-order continuum residual of `P_to(r u)` per level.
    pub continuum_residuals: Vec<f64>,
    /// `max |r₃₂ r₂₁ u − r₃₁ u| / max |u|` per level.
    pub composition: Vec<f64>,
}

impl RopStudy {
    pub fn solution_order(&self) -> Option<f64> {
        finest_order(&self.continuum_residuals)
    }
}

/// Compact smooth bump centred at the fractional position `(τ, ξ)`.
fn bump(g: &Grid, tau: f64, xi: f64) -> Field {
    let (tt, ll) = (g.duration(), g.length());
    Field::from_fn(*g, |t, x| {
        let (a, b) = (t / tt - tau, x / ll - xi);
        plateau(a, -0.15, -0.03, 0.03, 0.15) * plateau(b, -0.15, -0.03, 0.03, 0.15)
    })
}

pub fn rop_study(cfg: &Config) -> Result<RopStudy> {
    let lats = levels(cfg)?;
    let mut study = RopStudy {
        identity_exact: true,
        coincidence_exact: true,
        discrete_residual: 0.0,
        continuum_residuals: Vec::new(),
        composition: Vec::new(),
    };
    for lat in &lats {
        let g = lat.grid;
        let bg1 = background(lat, 0.0)?;
        let (b1, b2) = (bump(&g, 0.45, 0.45), bump(&g, 0.55, 0.55));
        let bg2 = bg1.zip(&b1, |p, b| p + 0.5 * b);
        let bg3 = bg1.zip(&b2, |p, b| p + 0.4 * b).zip(&b1, |p, b| p - 0.3 * b);
        let (p1, p2, p3) = (lat.potential(&bg1), lat.potential(&bg2), lat.potential(&bg3));
        let u = test_solution(lat, &p1)?;
        let umax = u.max_abs();

        study.identity_exact &= lat.retarded_wave_op(&p1, &p1, &u)? == u;

        let r21 = lat.retarded_wave_op(&p1, &p2, &u)?;
        let future = causal_future(&g, &|n, i| p1.at(n, i) != p2.at(n, i));
        study.coincidence_exact &= r21
            .data
            .iter()
            .zip(&u.data)
            .zip(&future)
            .all(|((a, b), inside)| *inside || a == b);
        let moved = future
            .iter()
            .zip(r21.data.iter().zip(&u.data))
            .any(|(inside, (a, b))| *inside && a != b);
        study.coincidence_exact &= moved;

        let discrete = lat.apply(&p2, &r21).max_abs() * g.dt * g.dt / umax;
        study.discrete_residual = study.discrete_residual.max(discrete);
        study
            .continuum_residuals
            .push(continuum_residual(&r21, lat.m, Some(&p2), None));

        let r32_21 = lat.retarded_wave_op(&p2, &p3, &r21)?;
        let r31 = lat.retarded_wave_op(&p1, &p3, &u)?;
        study.composition.push(r32_21.zip(&r31, |a, b| a - b).max_abs() / umax);
    }
    Ok(study)
}

// ---------------------------------------------------------------- δ^r

#[derive(Clone, Debug)]
pub struct RetvarStudy {
    /// `|δ^r F − 2|` for `F_s = 3 + 2s + s²`.
    pub constant_defect: f64,
    /// Pullback difference quotient minus the chain-rule value for
    /// `F = φ(p)²`, at steps `h` and `h/2` on the finest level.
    pub chain_defects: [f64; 2],
    pub chain_value: f64,
    /// `|δ^r F − δF| / |δ^r F|` for a split-independent interacting
    /// observable, per level.
    pub independence_defects: Vec<f64>,
    pub independence_values: Vec<f64>,
}

impl RetvarStudy {
    pub fn chain_step_order(&self) -> f64 {
        order(self.chain_defects[0], self.chain_defects[1])
    }
}

/// Step of the background difference quotients.
pub const RETVAR_STEP: f64 = 0.05;

/// `G(Φ) = Φ + Φ²/2 + Φ³/3` at one point.
fn eval_poly(v: f64) -> f64 {
    v + v * v / 2.0 + v * v * v / 3.0
}

pub fn retvar_study(cfg: &Config) -> Result<RetvarStudy> {
    let lats = levels(cfg)?;
    let p = snap(cfg, 0.8, 0.6)?;
    let h = RETVAR_STEP;
    let mut study = RetvarStudy {
        constant_defect: 0.0,
        chain_defects: [0.0; 2],
        chain_value: 0.0,
        independence_defects: Vec::new(),
        independence_values: Vec::new(),
    };
    let last = lats.len() - 1;
    for (k, lat) in lats.iter().enumerate() {
        let pt = at(lat, p);
        let family = |s: f64| background(lat, s);
        let bg = family(0.0)?;
        let pot = lat.potential(&bg);
        let phi = test_solution(lat, &pot)?;

        let c = lat.retarded_variation(&family, &|s, _, _| Ok(3.0 + 2.0 * s + s * s), &phi, h)?;
        study.constant_defect = study.constant_defect.max((c - 2.0).abs());

        // exact tangent of the family: levels 0 and 1 are affine in s
        let tangent = {
            let (plus, minus) = (family(1.0)?, bg.clone());
            let init = plus.zip(&minus, |a, b| a - b);
            lat.continue_linear(&pot, &init)?
        };

        // naive split derivative δF in the direction of the tangent
        let interacting_value = |chi: &Field| -> Result<f64> {
            let psi = lat.interacting(&bg, chi)?;
            Ok(eval_poly(bg.at(pt.0, pt.1) + psi.at(pt.0, pt.1)))
        };
        let shifted = |e: f64| phi.zip(&tangent, |a, b| a + e * b);
        let naive = (interacting_value(&shifted(h))? - interacting_value(&shifted(-h))?) / (2.0 * h);
        let ret = lat.retarded_variation(
            &family,
            &|_, bg_s, chi| {
                let psi = lat.interacting(bg_s, chi)?;
                Ok(eval_poly(bg_s.at(pt.0, pt.1) + psi.at(pt.0, pt.1)))
            },
            &phi,
            h,
        )?;
        study
            .independence_defects
            .push((ret - naive).abs() / ret.abs().max(f64::MIN_POSITIVE));
        study.independence_values.push(ret);

        if k == last {
            // ∂_s r_{s,0}φ = Δ^r(λ φ̄ φ̄' φ)
            let src = lat
                .lambda
                .zip(&bg, |l, b| l * b)
                .zip(&tangent, |a, t| a * t)
                .zip(&phi, |a, f| a * f);
            let w = lat.retarded(&pot, &src)?;
            let chain = 2.0 * phi.at(pt.0, pt.1) * w.at(pt.0, pt.1);
            let square = |_: f64, _: &Field, chi: &Field| Ok(chi.at(pt.0, pt.1).powi(2));
            for (j, step) in [h, h / 2.0].into_iter().enumerate() {
                study.chain_defects[j] = (lat.retarded_variation(&family, &square, &phi, step)? - chain).abs();
            }
            study.chain_value = chain;
        }
    }
    Ok(study)
}

// ---------------------------------------------------------------- dumps

/// Write the finest-level background, one retarded and one advanced Green
/// column, a test solution `u` and `r u` as plain-text matrices (one time
/// level per line) into `dir`.
pub fn dump_fields(cfg: &Config, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let lat = levels(cfg)?.pop().expect("at least one level");
    let g = lat.grid;
    let bg = background(&lat, 0.0)?;
    let pot = lat.potential(&bg);
    let q = at(&lat, snap(cfg, 0.45, 0.4)?);
    let bg2 = bg.zip(&bump(&g, 0.45, 0.45), |p, b| p + 0.5 * b);
    let u = test_solution(&lat, &pot)?;
    let ru = lat.retarded_wave_op(&pot, &lat.potential(&bg2), &u)?;
    let fields = [
        ("background", bg.clone()),
        ("green_retarded", lat.green_retarded(&pot, q)?),
        ("green_advanced", lat.green_advanced(&pot, q)?),
        ("solution", u),
        ("moved_solution", ru),
    ];
    let mut out = Vec::new();
    for (name, f) in fields {
        let path = dir.join(format!("{name}.txt"));
        f.write_text(&path)?;
        out.push(path);
    }
    Ok(out)
}

// ---------------------------------------------------------------- suites

fn outcome(pass: bool, residual: f64, detail: String) -> Outcome {
    Outcome {
        pass,
        residual: Residual::Norm(residual),
        detail,
    }
}

fn fmt_order(o: Option<f64>) -> String {
    o.map_or("n/a (single level)".into(), |o| format!("{o:.3}"))
}

pub(super) fn run(id: &str, cfg: &Config) -> Result<Outcome> {
    let tol = cfg.lattice.tolerance;
    match id {
        "lattice_green" => {
            let s = green_study(cfg)?;
            let order_ok = s.free_order().is_none_or(|o| (o - 2.0).abs() <= ORDER_WINDOW);
            let pass = s.support_exact
                && s.delta_residual <= tol
                && s.antisymmetry <= tol
                && order_ok
                && s.free_constant() <= FREE_KERNEL_C;
            let detail = format!(
                "support exact: {}; |PΔ−δ|: {:.2e}; antisymmetry: {:.2e}; free kernel errors {:?}, order {}, C = {:.3}",
                s.support_exact,
                s.delta_residual,
                s.antisymmetry,
                s.free_errors,
                fmt_order(s.free_order()),
                s.free_constant()
            );
            Ok(outcome(pass, s.delta_residual.max(s.antisymmetry), detail))
        }
        "lattice_rop" => {
            let s = rop_study(cfg)?;
            let comp = s.composition.iter().cloned().fold(0.0, f64::max);
            let order_ok = s.solution_order().is_none_or(|o| o >= MIN_ORDER);
            let pass =
                s.identity_exact && s.coincidence_exact && s.discrete_residual <= tol && comp <= ROUNDING && order_ok;
            let detail = format!(
                "identity exact: {}; coincidence exact: {}; discrete residual {:.2e}; continuum residuals {:?}, order {}; composition {:?}",
                s.identity_exact,
                s.coincidence_exact,
                s.discrete_residual,
                s.continuum_residuals,
                fmt_order(s.solution_order()),
                s.composition
            );
            Ok(outcome(pass, comp.max(s.discrete_residual), detail))
        }
        "lattice_retvar" => {
            let s = retvar_study(cfg)?;
            let indep = s.independence_defects.iter().cloned().fold(0.0, f64::max);
            let pass = s.constant_defect <= tol && s.chain_step_order() >= MIN_ORDER && indep <= tol;
            let detail = format!(
                "constant: {:.2e}; chain rule defects {:?} (step order {:.3}); independence defects {:?} at δ^r F = {:?}",
                s.constant_defect,
                s.chain_defects,
                s.chain_step_order(),
                s.independence_defects,
                s.independence_values
            );
            Ok(outcome(pass, indep, detail))
        }
        _ => unreachable!("not a lattice suite: {id}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_total_mass() {
        // once the cone covers the circle the weight is the full integral
        let h = Gauss {
            t0: 10.0,
            st: 1.0,
            x0: 8.0,
            sx: 1.0,
        };
        let late = free_kernel_oracle(&h, (0.0, 8.0), 16.0, 16.0);
        let full = -0.5 * PI; // (√π σ_t)(√π σ_x) / 2
        assert!((late - full).abs() < 1e-9, "{late}");
    }
}

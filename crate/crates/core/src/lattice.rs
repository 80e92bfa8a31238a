//! The scalar model on a 1+1 dimensional lattice: periodic space, explicit
//! leapfrog in time, `□ = −∂_t² + ∂_x²`.
//!
//! Background equation `(□ − m²)φ̄ − λφ̄³/6 = 0`, linearized operator
//! `P_φ̄ = □ − m² − V` with potential `V = λφ̄²/2`, where `λ(t, x)` is a
//! smooth cutoff profile.  A field is stored on time levels `0..=nt`; the
//! discrete operator acts on levels `1..nt`.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

/// Largest admissible Courant number `dt/dx`.
pub const CFL_MAX: f64 = 0.9;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub nt: usize,
    pub dx: f64,
    pub dt: f64,
}

impl Grid {
    pub fn new(nx: usize, nt: usize, dx: f64, dt: f64) -> Result<Grid> {
        if nx < 3 || nt < 2 || !(dx > 0.0) || !(dt > 0.0) {
            return Err(Error::ConfigParse(format!(
                "invalid grid {nx}×{nt}, dx = {dx}, dt = {dt}"
            )));
        }
        if dt / dx > CFL_MAX {
            return Err(Error::CflViolation(dt / dx));
        }
        Ok(Grid { nx, nt, dx, dt })
    }

    /// The grid with `2^k` times the spacings on the same domain.
    pub fn coarsened(&self, k: u32) -> Grid {
        let f = 1usize << k;
        Grid {
            nx: self.nx / f,
            nt: self.nt / f,
            dx: self.dx * f as f64,
            dt: self.dt * f as f64,
        }
    }

    pub fn length(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn duration(&self) -> f64 {
        self.nt as f64 * self.dt
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn right(&self, i: usize) -> usize {
        if i + 1 == self.nx {
            0
        } else {
            i + 1
        }
    }

    pub fn left(&self, i: usize) -> usize {
        if i == 0 {
            self.nx - 1
        } else {
            i - 1
        }
    }

    /// Periodic distance between two sites.
    pub fn dist(&self, i: usize, j: usize) -> usize {
        let d = i.abs_diff(j);
        d.min(self.nx - d)
    }

    /// Grid point nearest to `(t, x)`.
    pub fn point(&self, t: f64, x: f64) -> (usize, usize) {
        let n = (t / self.dt).round() as usize;
        let i = (x / self.dx).round() as usize % self.nx;
        (n.min(self.nt), i)
    }
}

/// Real values on all `(nt + 1) × nx` grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Field {
        Field {
            grid,
            data: vec![0.0; (grid.nt + 1) * grid.nx],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Field {
        let mut out = Field::zeros(grid);
        for n in 0..=grid.nt {
            for i in 0..grid.nx {
                out.data[n * grid.nx + i] = f(grid.t(n), grid.x(i));
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, n: usize, i: usize) -> f64 {
        self.data[n * self.grid.nx + i]
    }

    #[inline]
    pub fn set(&mut self, n: usize, i: usize, v: f64) {
        self.data[n * self.grid.nx + i] = v;
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.grid.nx..(n + 1) * self.grid.nx]
    }

    pub fn zip(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid, other.grid, "fields on different grids");
        Field {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            data: self.data.iter().map(|a| f(*a)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Time reflection `n ↦ nt − n`.
    pub fn reflected(&self) -> Field {
        let g = self.grid;
        let mut out = Field::zeros(g);
        for n in 0..=g.nt {
            out.data[n * g.nx..(n + 1) * g.nx].copy_from_slice(self.row(g.nt - n));
        }
        out
    }

    /// `Σ f g dx dt` over all grid points.
    pub fn pair(&self, other: &Field) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>() * self.grid.dx * self.grid.dt
    }

    /// One line per time level, whitespace separated.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for n in 0..=self.grid.nt {
            let row: Vec<String> = self.row(n).iter().map(|v| format!("{v:.12e}")).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        f.write_all(self.to_text().as_bytes())
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

/// Smooth step from 0 at `y ≤ 0` to 1 at `y ≥ 1`.
fn smooth_step(y: f64) -> f64 {
    let e = |z: f64| if z <= 0.0 { 0.0 } else { (-1.0 / z).exp() };
    if y <= 0.0 {
        0.0
    } else if y >= 1.0 {
        1.0
    } else {
        e(y) / (e(y) + e(1.0 - y))
    }
}

/// Compactly supported smooth bump in `z`: support `(a0, b1)`, equal to 1
/// on `[a1, b0]`.
pub fn plateau(z: f64, a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    smooth_step((z - a0) / (a1 - a0)) * smooth_step((b1 - z) / (b1 - b0))
}

/// The cutoff profile `λ(t, x) = λ₀ χ(t/T) χ(x/L)` with `χ` equal to 1 on
/// `[3/8, 5/8]` (the region where the coupling is constant) and supported
/// in `(1/4, 3/4)`.
pub fn cutoff_profile(grid: Grid, lambda0: f64) -> Field {
    let (tt, ll) = (grid.duration(), grid.length());
    Field::from_fn(grid, |t, x| {
        lambda0 * plateau(t / tt, 0.25, 0.375, 0.625, 0.75) * plateau(x / ll, 0.25, 0.375, 0.625, 0.75)
    })
}

/// Discrete `∂_x²` of one time level at site `i`.
#[inline]
fn lap(row: &[f64], g: &Grid, i: usize) -> f64 {
    (row[g.right(i)] - 2.0 * row[i] + row[g.left(i)]) / (g.dx * g.dx)
}

/// The scalar model on a grid: mass, cutoff coupling and the scale applied
/// to point sources.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub grid: Grid,
    pub m: f64,
    pub lambda: Field,
    source_scale: f64,
}

impl Lattice {
    pub fn new(grid: Grid, m: f64, lambda0: f64) -> Result<Lattice> {
        Grid::new(grid.nx, grid.nt, grid.dx, grid.dt)?;
        Ok(Lattice {
            grid,
            m,
            lambda: cutoff_profile(grid, lambda0),
            source_scale: 1.0,
        })
    }

    /// Multiply every point source by `s` (a fault-injection hook).
    pub fn with_source_scale(mut self, s: f64) -> Lattice {
        self.source_scale = s;
        self
    }

    /// `V = λφ̄²/2`.
    pub fn potential(&self, bg: &Field) -> Field {
        bg.zip(&self.lambda, |p, l| 0.5 * l * p * p)
    }

    /// Second-order start: levels 0 and 1 from Cauchy data `(u, ∂_t u)` at
    /// `t = 0` for `∂_t²u = ∂_x²u − m²u + rhs(0, i, u)`.
    fn start(&self, u0: &[f64], v0: &[f64], rhs: &dyn Fn(usize, usize, f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let row1 = (0..g.nx)
            .map(|i| {
                let acc = lap(u0, g, i) - self.m * self.m * u0[i] + rhs(0, i, u0[i]);
                u0[i] + g.dt * v0[i] + 0.5 * g.dt * g.dt * acc
            })
            .collect();
        (u0.to_vec(), row1)
    }

    /// Leapfrog for `∂_t²u = ∂_x²u − m²u + rhs(n, i, u)` from levels 0 and 1.
    fn evolve(&self, rows: (&[f64], &[f64]), rhs: &dyn Fn(usize, usize, f64) -> f64) -> Result<Field> {
        let g = self.grid;
        let mut u = Field::zeros(g);
        u.data[..g.nx].copy_from_slice(rows.0);
        u.data[g.nx..2 * g.nx].copy_from_slice(rows.1);
        let (dt2, m2) = (g.dt * g.dt, self.m * self.m);
        for n in 1..g.nt {
            let (past, rest) = u.data.split_at_mut(n * g.nx);
            let (cur, fut) = rest.split_at_mut(g.nx);
            let prev = &past[(n - 1) * g.nx..];
            for i in 0..g.nx {
                let acc = lap(cur, &g, i) - m2 * cur[i] + rhs(n, i, cur[i]);
                fut[i] = 2.0 * cur[i] - prev[i] + dt2 * acc;
            }
            if !fut[..g.nx].iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(u)
    }

    fn first_rows<'a>(&self, f: &'a Field) -> (&'a [f64], &'a [f64]) {
        let nx = self.grid.nx;
        (&f.data[..nx], &f.data[nx..2 * nx])
    }

    /// Background solution from Cauchy data at `t = 0`.
    pub fn solve_background(&self, phi0: &[f64], v0: &[f64]) -> Result<Field> {
        let lam = &self.lambda;
        let rhs = |n: usize, i: usize, u: f64| -lam.at(n, i) * u * u * u / 6.0;
        let (r0, r1) = self.start(phi0, v0, &rhs);
        self.evolve((&r0, &r1), &rhs)
    }

    /// Solution of `P_φ̄ u = 0` with potential `pot` from Cauchy data.
    pub fn solve_linear(&self, pot: &Field, u0: &[f64], v0: &[f64]) -> Result<Field> {
        let rhs = |n: usize, i: usize, u: f64| -pot.at(n, i) * u;
        let (r0, r1) = self.start(u0, v0, &rhs);
        self.evolve((&r0, &r1), &rhs)
    }

    /// Solution of `P_φ̄ u = 0` continuing the first two levels of `init`.
    pub fn continue_linear(&self, pot: &Field, init: &Field) -> Result<Field> {
        self.evolve(self.first_rows(init), &|n, i, u| -pot.at(n, i) * u)
    }

    /// Interacting perturbation `ψ` on the background `bg`, evolved in the
    /// split variables: `P_φ̄ψ − λ(φ̄ψ²/2 + ψ³/6) = 0`, starting from the
    /// first two levels of `chi`.
    pub fn interacting(&self, bg: &Field, chi: &Field) -> Result<Field> {
        let pot = self.potential(bg);
        let lam = &self.lambda;
        self.evolve(self.first_rows(chi), &|n, i, u| {
            -pot.at(n, i) * u - lam.at(n, i) * (0.5 * bg.at(n, i) * u * u + u * u * u / 6.0)
        })
    }

    /// `Δ^r f`: the solution of `P u = f` vanishing on levels 0 and 1.
    pub fn retarded(&self, pot: &Field, f: &Field) -> Result<Field> {
        let zero = vec![0.0; self.grid.nx];
        self.evolve((&zero, &zero), &|n, i, u| -pot.at(n, i) * u - f.at(n, i))
    }

    /// Discrete `(P u)` on levels `1..nt`; levels 0 and `nt` are zero.
    pub fn apply(&self, pot: &Field, u: &Field) -> Field {
        let g = self.grid;
        let mut out = Field::zeros(g);
        let m2 = self.m * self.m;
        for n in 1..g.nt {
            let (prev, cur, next) = (u.row(n - 1), u.row(n), u.row(n + 1));
            for i in 0..g.nx {
                let dtt = (next[i] - 2.0 * cur[i] + prev[i]) / (g.dt * g.dt);
                out.set(n, i, -dtt + lap(cur, &g, i) - (m2 + pot.at(n, i)) * cur[i]);
            }
        }
        out
    }

    fn check_source_point(&self, q: (usize, usize)) -> Result<()> {
        if q.0 == 0 || q.0 >= self.grid.nt || q.1 >= self.grid.nx {
            return Err(Error::ConfigParse(format!(
                "source point {q:?} outside levels 1..{}",
                self.grid.nt
            )));
        }
        Ok(())
    }

    /// Kronecker source of unit weight at `q`: `1/(dx dt)` at one point.
    pub fn point_source(&self, q: (usize, usize)) -> Field {
        let mut f = Field::zeros(self.grid);
        f.set(q.0, q.1, self.source_scale / (self.grid.dx * self.grid.dt));
        f
    }

    /// Retarded Green column `Δ^r(·; q)`.
    pub fn green_retarded(&self, pot: &Field, q: (usize, usize)) -> Result<Field> {
        self.check_source_point(q)?;
        self.retarded(pot, &self.point_source(q))
    }

    /// Advanced Green column, computed as the time reflection of the
    /// retarded column of the reflected potential.
    pub fn green_advanced(&self, pot: &Field, q: (usize, usize)) -> Result<Field> {
        self.check_source_point(q)?;
        let qr = (self.grid.nt - q.0, q.1);
        Ok(self.green_retarded(&pot.reflected(), qr)?.reflected())
    }

    /// `r u = u + Δ^r_to((P_from − P_to) u)`.
    pub fn retarded_wave_op(&self, pot_from: &Field, pot_to: &Field, u: &Field) -> Result<Field> {
        let g = self.grid;
        let diff = pot_to.zip(pot_from, |a, b| a - b);
        if diff.data[..2 * g.nx].iter().any(|v| *v != 0.0) {
            return Err(Error::SupportMismatch);
        }
        // (P_from − P_to) u = (V_to − V_from) u
        let src = diff.zip(u, |d, x| d * x);
        let z = self.retarded(pot_to, &src)?;
        Ok(u.zip(&z, |a, b| a + b))
    }

    /// Central difference of the Møller pullback `s ↦ F_s[r_{s,0} φ]` at
    /// `s = 0`, where `family(s)` is the background at `s` and `functional`
    /// receives `(s, φ̄_s, r_{s,0}φ)`.  The estimate at step `h` is checked
    /// against the one at `h/2`.
    pub fn retarded_variation(
        &self,
        family: &dyn Fn(f64) -> Result<Field>,
        functional: &dyn Fn(f64, &Field, &Field) -> Result<f64>,
        phi: &Field,
        h: f64,
    ) -> Result<f64> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::StepTooLarge(h));
        }
        let pot0 = self.potential(&family(0.0)?);
        let eval = |s: f64| -> Result<f64> {
            let bg = family(s)?;
            let moved = self.retarded_wave_op(&pot0, &self.potential(&bg), phi)?;
            functional(s, &bg, &moved)
        };
        let coarse = (eval(h)? - eval(-h)?) / (2.0 * h);
        let fine = (eval(h / 2.0)? - eval(-h / 2.0)?) / h;
        if !coarse.is_finite() || (coarse - fine).abs() > 0.25 * fine.abs().max(coarse.abs()) + 1e-12 {
            return Err(Error::StepTooLarge(h));
        }
        Ok(coarse)
    }
}

/// Discrete causal future of the points where `mask` is true: `(n, i)` with
/// `n ≥ n' + 1` and `dist(i, i') ≤ n − n' − 1` for some marked `(n', i')`.
pub fn causal_future(grid: &Grid, mask: &dyn Fn(usize, usize) -> bool) -> Vec<bool> {
    let nx = grid.nx;
    let mut out = vec![false; (grid.nt + 1) * nx];
    for n in 0..grid.nt {
        for i in 0..nx {
            let reached = mask(n, i) || out[n * nx + i] || out[n * nx + grid.left(i)] || out[n * nx + grid.right(i)];
            out[(n + 1) * nx + i] = reached;
        }
    }
    out
}

/// Fourth-order residual of `(□ − m² − V)u − c u³/6` on levels `2..=nt−2`
/// (max norm): a consistency measure that vanishes as the grid is refined
/// for any convergent approximation of a solution.
pub fn continuum_residual(u: &Field, m: f64, pot: Option<&Field>, cubic: Option<&Field>) -> f64 {
    let g = u.grid;
    let mut worst: f64 = 0.0;
    let d4 =
        |a: f64, b: f64, c: f64, d: f64, e: f64, h: f64| (-a + 16.0 * b - 30.0 * c + 16.0 * d - e) / (12.0 * h * h);
    for n in 2..=g.nt - 2 {
        for i in 0..g.nx {
            let (l, r) = (g.left(i), g.right(i));
            let (ll, rr) = (g.left(l), g.right(r));
            let c = u.at(n, i);
            let utt = d4(u.at(n - 2, i), u.at(n - 1, i), c, u.at(n + 1, i), u.at(n + 2, i), g.dt);
            let uxx = d4(u.at(n, ll), u.at(n, l), c, u.at(n, r), u.at(n, rr), g.dx);
            let mut res = -utt + uxx - m * m * c;
            if let Some(v) = pot {
                res -= v.at(n, i) * c;
            }
            if let Some(k) = cubic {
                res -= k.at(n, i) * c.powi(3) / 6.0;
            }
            worst = worst.max(res.abs());
        }
    }
    worst
}

/// `log₂(coarse/fine)`.
pub fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(nx: usize, nt: usize) -> Grid {
        Grid::new(nx, nt, 16.0 / nx as f64, 16.0 / nt as f64).unwrap()
    }

    #[test]
    fn cfl_enforced() {
        assert_eq!(Grid::new(8, 8, 0.1, 0.1), Err(Error::CflViolation(1.0)));
        assert!(Grid::new(8, 8, 0.1, 0.09).is_ok());
    }

    #[test]
    fn periodic_indexing() {
        let g = grid(8, 16);
        assert_eq!((g.left(0), g.right(7)), (7, 0));
        assert_eq!(g.dist(1, 7), 2);
        assert_eq!(
            g.coarsened(1),
            Grid {
                nx: 4,
                nt: 8,
                dx: 4.0,
                dt: 2.0
            }
        );
    }

    #[test]
    fn zero_data_stays_zero() {
        let lat = Lattice::new(grid(32, 64), 1.0, 0.0).unwrap();
        let z = vec![0.0; 32];
        assert_eq!(lat.solve_background(&z, &z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn constant_data_oscillates() {
        // spatially constant data with λ₀ = 0: u = cos(m t)
        let errs: Vec<f64> = [64, 128]
            .iter()
            .map(|&nt| {
                let lat = Lattice::new(grid(16, nt), 1.0, 0.0).unwrap();
                let u = lat.solve_background(&[1.0; 16], &[0.0; 16]).unwrap();
                (0..=nt)
                    .map(|n| (u.at(n, 3) - lat.grid.t(n).cos()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[1] < 0.01, "{errs:?}");
        assert!((order(errs[0], errs[1]) - 2.0).abs() < 0.2, "{errs:?}");
    }

    #[test]
    fn background_residual_is_second_order() {
        let res: Vec<f64> = [(64, 128), (128, 256)]
            .iter()
            .map(|&(nx, nt)| {
                let lat = Lattice::new(grid(nx, nt), 1.0, 1.0).unwrap();
                let g = lat.grid;
                let p0: Vec<f64> = (0..nx).map(|i| (-(g.x(i) - 8.0).powi(2) / 2.0).exp() * 1.5).collect();
                let bg = lat.solve_background(&p0, &vec![0.0; nx]).unwrap();
                continuum_residual(&bg, 1.0, None, Some(&lat.lambda))
            })
            .collect();
        let p = order(res[0], res[1]);
        assert!((p - 2.0).abs() < 0.2, "{res:?} → {p}");
    }

    #[test]
    fn causal_future_of_a_point() {
        let g = grid(8, 16);
        let f = causal_future(&g, &|n, i| (n, i) == (2, 4));
        let inside = |n: usize, i: usize| f[n * 8 + i];
        assert!(!inside(2, 4) && inside(3, 4) && !inside(3, 5) && inside(4, 5) && !inside(4, 6));
    }

    #[test]
    fn reflection_is_an_involution() {
        let g = grid(8, 16);
        let f = Field::from_fn(g, |t, x| t * 3.0 + x);
        assert_eq!(f.reflected().reflected(), f);
        assert_eq!(f.reflected().at(0, 2), f.at(16, 2));
    }

    #[test]
    fn plateau_profile() {
        assert_eq!(plateau(0.1, 0.25, 0.375, 0.625, 0.75), 0.0);
        assert_eq!(plateau(0.5, 0.25, 0.375, 0.625, 0.75), 1.0);
        let mid = plateau(0.3, 0.25, 0.375, 0.625, 0.75);
        assert!(mid > 0.0 && mid < 1.0);
    }
}

//! Physical fields from the spectral solution.
//!
//! The transform `U(z) = sum_m u_{m,0} z^{-m}` is inverted by the trapezoid
//! rule on the integration contour:
//! `u_{m,n} = (1 / 2 pi i) oint U(z) lambda(z)^n z^{m-1} dz`.
//! Rows below the crack line follow from anti-symmetry.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use image::{Rgb, RgbImage};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iter::{CrackLayout, SpectralState};
use crate::kernel::Contour;
use crate::lattice::{lambda_continued, lambda_of_z, FieldGrid, IncidentWave, LatticeParams};
use crate::rfun::LaurentPF;

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
pub const MIN_QUAD_POINTS: usize = 2048;
/// Quadrature points per unit of `max|m| + span`.
pub const POINTS_PER_COLUMN: usize = 16;
/// Pixels per lattice node in heatmaps.
pub const PIXELS_PER_NODE: u32 = 6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Rectangular block of nodes, inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridExtent {
    pub m_min: i64,
    pub m_max: i64,
    pub n_min: i64,
    pub n_max: i64,
}

impl GridExtent {
    pub fn new(m_min: i64, m_max: i64, n_min: i64, n_max: i64) -> Result<Self> {
        if m_min > m_max || n_min > n_max {
            return Err(Error::InvalidParameter(format!(
                "empty grid m in [{m_min}, {m_max}], n in [{n_min}, {n_max}]"
            )));
        }
        Ok(Self { m_min, m_max, n_min, n_max })
    }

    pub fn max_abs_m(&self) -> i64 {
        self.m_min.abs().max(self.m_max.abs())
    }

    pub fn zeros(&self) -> FieldGrid {
        FieldGrid::zeros(self.m_min, self.m_max, self.n_min, self.n_max)
    }
}

/// Full transform `U = U_-^(1) + sum_l z^{-m_l} U_+^(l)`.
pub fn assemble_u(state: &SpectralState, layout: &CrackLayout) -> LaurentPF {
    let mut u = state.u_minus[0].clone();
    for (plus, &m) in state.u_plus.iter().zip(layout.edges()) {
        u = u.add(&plus.mul_monomial(-m));
    }
    u
}

/// Quadrature settings and target grid for `reconstruct`.
#[derive(Debug, Clone)]
pub struct ReconstructionPlan {
    pub contour: Contour,
    pub quad_points: usize,
    pub grid: GridExtent,
    /// Fill rows `n < 0` by `u_{m,-1-n} = -u_{m,n}`.
    pub mirror: bool,
    pub quad_tol: f64,
}

/// `max(2048, 16 (max|m| + span))`.
pub fn default_quad_points(grid: &GridExtent, layout: &CrackLayout) -> usize {
    let columns = (grid.max_abs_m() + layout.span()) as usize;
    MIN_QUAD_POINTS.max(POINTS_PER_COLUMN * columns)
}

impl ReconstructionPlan {
    pub fn new(contour: Contour, grid: GridExtent, layout: &CrackLayout) -> Self {
        Self {
            contour,
            quad_points: default_quad_points(&grid, layout),
            grid,
            mirror: true,
            quad_tol: DEFAULT_QUAD_TOL,
        }
    }

    /// Check the oscillation rule against `layout`.
    pub fn validate(&self, layout: &CrackLayout) -> Result<()> {
        let needed = POINTS_PER_COLUMN * (self.grid.max_abs_m() + layout.span()) as usize;
        if self.quad_points < needed {
            return Err(Error::InvalidParameter(format!(
                "quad_points = {} below the required {needed}",
                self.quad_points
            )));
        }
        if !(self.quad_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("quad_tol = {}", self.quad_tol)));
        }
        if self.grid.n_min < 0 && !self.mirror {
            return Err(Error::InvalidParameter("rows n < 0 need the mirror rule".into()));
        }
        Ok(())
    }
}

/// Pole of `U` close enough to the contour to spoil the trapezoid rule.
///
/// The quadrature error of `rho / (z - p)` is computed once and the missing
/// part `rho lambda(p)^n p^(m-1) * error` is added to every node.
struct PoleCorrection {
    pole: Complex64,
    residue: Complex64,
    lambda: Complex64,
    error: Complex64,
}

struct Integrand {
    z: Vec<Complex64>,
    lambda: Vec<Complex64>,
    /// `U(z_k) w_k / (2 pi i)`.
    weight: Vec<Complex64>,
    corrections: Vec<PoleCorrection>,
}

impl Integrand {
    fn new(u: &LaurentPF, params: &LatticeParams, contour: &Contour, points: usize) -> Result<Self> {
        let quad = contour.quadrature(points);
        let z: Vec<Complex64> = quad.iter().map(|q| q.0).collect();
        let lambda = z.iter().map(|&z| lambda_of_z(z, params)).collect::<Result<Vec<_>>>()?;
        let scale = (2.0 * PI * I).inv();
        let weight: Vec<Complex64> = quad.par_iter().map(|&(z, w)| u.eval_unchecked(z) * w * scale).collect();

        let near = 0.1 * contour.indent_radius();
        let mut corrections = Vec::new();
        for pole in u.poles() {
            let distance = contour.distance_to(pole);
            if distance >= near {
                continue;
            }
            if distance < 1e-12 {
                return Err(Error::PoleOnContour { pole, distance });
            }
            let Some(residue) = u.residue_at(pole) else { continue };
            let nearest = (0..z.len())
                .min_by(|&a, &b| (z[a] - pole).norm().total_cmp(&(z[b] - pole).norm()))
                .expect("nonempty quadrature");
            let trapezoid: Complex64 = quad.iter().map(|&(z, w)| w / (z - pole)).sum();
            let exact = 2.0 * PI * I * contour.winding_number(pole) as f64;
            corrections.push(PoleCorrection {
                pole,
                residue,
                lambda: lambda_continued(pole, params, lambda[nearest]),
                error: (exact - trapezoid) * scale,
            });
        }
        Ok(Self { z, lambda, weight, corrections })
    }

    /// `u_{m,n}` for `m` in `m_min..=m_max` on row `n >= 0`.
    fn row(&self, n: i64, m_min: i64, m_max: i64) -> Vec<Complex64> {
        let mut acc: Vec<Complex64> = self
            .weight
            .iter()
            .zip(&self.lambda)
            .zip(&self.z)
            .map(|((w, l), z)| w * l.powi(n as i32) * z.powi((m_min - 1) as i32))
            .collect();
        let mut out = Vec::with_capacity((m_max - m_min + 1) as usize);
        for m in m_min..=m_max {
            let mut value: Complex64 = acc.iter().sum();
            for c in &self.corrections {
                value += c.residue * c.lambda.powi(n as i32) * c.pole.powi((m - 1) as i32) * c.error;
            }
            out.push(value);
            for (a, z) in acc.iter_mut().zip(&self.z) {
                *a *= z;
            }
        }
        out
    }

    fn rows(&self, rows: &[i64], m_min: i64, m_max: i64) -> Vec<Vec<Complex64>> {
        rows.par_iter().map(|&n| self.row(n, m_min, m_max)).collect()
    }
}

fn max_change(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Rows computed at `quad_points` and at twice that; returns the finer ones.
fn resolved_rows(u: &LaurentPF, params: &LatticeParams, plan: &ReconstructionPlan, rows: &[i64]) -> Result<Vec<Vec<Complex64>>> {
    let g = &plan.grid;
    let coarse = Integrand::new(u, params, &plan.contour, plan.quad_points)?.rows(rows, g.m_min, g.m_max);
    let fine = Integrand::new(u, params, &plan.contour, 2 * plan.quad_points)?.rows(rows, g.m_min, g.m_max);
    let change = max_change(&coarse, &fine);
    if !(change <= plan.quad_tol) {
        return Err(Error::QuadratureUnresolved { change });
    }
    Ok(fine)
}

/// Scattered field on the plan's grid.
pub fn reconstruct(u: &LaurentPF, params: &LatticeParams, plan: &ReconstructionPlan) -> Result<FieldGrid> {
    let g = plan.grid;
    if g.n_min < 0 && !plan.mirror {
        return Err(Error::InvalidParameter("rows n < 0 need the mirror rule".into()));
    }
    let top = g.n_max.max(-1 - g.n_min);
    let rows: Vec<i64> = (0..=top).collect();
    let values = resolved_rows(u, params, plan, &rows)?;
    let mut grid = g.zeros();
    for n in g.n_min..=g.n_max {
        let (row, sign) = if n >= 0 { (n, 1.0) } else { (-1 - n, -1.0) };
        for (i, m) in (g.m_min..=g.m_max).enumerate() {
            grid.set(m, n, sign * values[row as usize][i]);
        }
    }
    Ok(grid)
}

/// `u_{m,0}` for `m` in the plan's column range.
pub fn row_values(u: &LaurentPF, params: &LatticeParams, plan: &ReconstructionPlan) -> Result<Vec<Complex64>> {
    Ok(resolved_rows(u, params, plan, &[0])?.remove(0))
}

/// Field CSV with scattered and total values at every node.
pub fn write_field_csv(scattered: &FieldGrid, wave: &IncidentWave, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "m,n,re_u,im_u,re_utot,im_utot,abs_utot")?;
    for (m, n) in scattered.nodes() {
        let u = scattered.get(m, n).unwrap_or(ZERO);
        let total = u + wave.u_in(m, n);
        writeln!(out, "{m},{n},{},{},{},{},{}", u.re, u.im, total.re, total.im, total.norm())?;
    }
    Ok(())
}

/// Quantity shown in a heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapKind {
    /// Real part, symmetric scale around zero.
    Real,
    /// Modulus on `[0, max]`.
    Modulus,
}

fn diverging(t: f64) -> Rgb<u8> {
    let t = t.clamp(-1.0, 1.0);
    let fade = |s: f64| (255.0 * (1.0 - s)).round() as u8;
    if t >= 0.0 {
        Rgb([255, fade(t), fade(t)])
    } else {
        Rgb([fade(-t), fade(-t), 255])
    }
}

fn sequential(t: f64) -> Rgb<u8> {
    const STOPS: [[f64; 3]; 5] = [
        [0.0, 0.0, 4.0],
        [87.0, 16.0, 110.0],
        [188.0, 55.0, 84.0],
        [249.0, 142.0, 9.0],
        [252.0, 255.0, 164.0],
    ];
    let x = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let mix = |c: usize| (STOPS[i][c] + f * (STOPS[i + 1][c] - STOPS[i][c])).round() as u8;
    Rgb([mix(0), mix(1), mix(2)])
}

/// Heatmap with one square block of pixels per node, `n` increasing upwards.
pub fn heatmap(grid: &FieldGrid, kind: HeatmapKind) -> RgbImage {
    let scale = match kind {
        HeatmapKind::Real => grid.values().iter().map(|v| v.re.abs()).fold(0.0, f64::max),
        HeatmapKind::Modulus => grid.max_abs(),
    };
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let (w, h) = (grid.width() as u32, grid.height() as u32);
    RgbImage::from_fn(w * PIXELS_PER_NODE, h * PIXELS_PER_NODE, |x, y| {
        let m = grid.m_min + (x / PIXELS_PER_NODE) as i64;
        let n = grid.n_max - (y / PIXELS_PER_NODE) as i64;
        let v = grid.get(m, n).unwrap_or(ZERO);
        match kind {
            HeatmapKind::Real => diverging(v.re / scale),
            HeatmapKind::Modulus => sequential(v.norm() / scale),
        }
    })
}

pub fn write_heatmap_png(grid: &FieldGrid, kind: HeatmapKind, path: &Path) -> Result<()> {
    heatmap(grid, kind)
        .save(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_contour;
    use crate::lattice::dispersion_omega;
    use std::f64::consts::FRAC_PI_4;

    fn setup(grid: GridExtent) -> (LatticeParams, ReconstructionPlan) {
        let params = dispersion_omega(0.5 * PI, FRAC_PI_4).unwrap();
        let contour = build_contour(&params, 0.05, 720).unwrap();
        let layout = CrackLayout::single(10).unwrap();
        (params, ReconstructionPlan::new(contour, grid, &layout))
    }

    #[test]
    fn zero_transform_gives_zero_field() {
        let (params, plan) = setup(GridExtent::new(-3, 3, -2, 2).unwrap());
        let grid = reconstruct(&LaurentPF::zero(), &params, &plan).unwrap();
        assert_eq!(grid.max_abs(), 0.0);
    }

    #[test]
    fn single_coefficient_is_recovered() {
        let (params, plan) = setup(GridExtent::new(-5, 5, 0, 0).unwrap());
        let row = row_values(&LaurentPF::monomial(-1, Complex64::new(1.0, 0.0)), &params, &plan).unwrap();
        for (i, m) in (-5..=5).enumerate() {
            let expected = if m == 1 { 1.0 } else { 0.0 };
            assert!((row[i] - expected).norm() < 1e-10, "m = {m}: {}", row[i]);
        }
    }

    #[test]
    fn mirror_rows_are_antisymmetric() {
        let (params, plan) = setup(GridExtent::new(-4, 4, -3, 2).unwrap());
        let u = LaurentPF::simple_pole(Complex64::new(0.3, 0.1), Complex64::new(1.0, -0.5))
            .add(&LaurentPF::simple_pole(Complex64::new(-2.0, 0.5), Complex64::new(0.2, 0.0)));
        let grid = reconstruct(&u, &params, &plan).unwrap();
        for m in -4..=4 {
            for n in 0..=2 {
                assert_eq!(grid.get(m, -1 - n).unwrap(), -grid.get(m, n).unwrap());
            }
        }
    }

    #[test]
    fn pole_next_to_contour_is_corrected() {
        let (params, plan) = setup(GridExtent::new(-3, 3, 0, 0).unwrap());
        let p = Complex64::from_polar(1.0 + 1e-4, -1.1);
        let row = row_values(&LaurentPF::simple_pole(p, Complex64::new(1.0, 0.0)), &params, &plan).unwrap();
        // 1/(z - p) = -sum_{k >= 0} z^k / p^{k+1} for |z| < |p|, so u_{m,0} = -p^{m-1} for m <= 0.
        for (i, m) in (-3..=3).enumerate() {
            let expected = if m <= 0 { -p.powi((m - 1) as i32) } else { ZERO };
            assert!((row[i] - expected).norm() < 1e-10, "m = {m}");
        }
    }

    #[test]
    fn oscillation_rule_is_enforced() {
        let (_, mut plan) = setup(GridExtent::new(-200, 200, 0, 1).unwrap());
        let layout = CrackLayout::single(10).unwrap();
        assert!(plan.validate(&layout).is_ok());
        plan.quad_points = 1000;
        assert!(matches!(plan.validate(&layout), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let grid = FieldGrid::zeros(0, 2, 0, 1);
        let wave = IncidentWave::new(0.5 * PI, FRAC_PI_4).unwrap();
        let mut out = Vec::new();
        write_field_csv(&grid, &wave, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("m,n,re_u,im_u,re_utot,im_utot,abs_utot\n0,0,0,0,1,0,1"));
    }

    #[test]
    fn heatmap_pixels_follow_grid() {
        let grid = FieldGrid::from_fn(0, 1, 0, 1, |m, n| Complex64::new((m - n) as f64, 0.0));
        let img = heatmap(&grid, HeatmapKind::Real);
        assert_eq!(img.dimensions(), (2 * PIXELS_PER_NODE, 2 * PIXELS_PER_NODE));
        assert_eq!(*img.get_pixel(0, 0), Rgb([0, 0, 255]));
        assert_eq!(*img.get_pixel(2 * PIXELS_PER_NODE - 1, 2 * PIXELS_PER_NODE - 1), Rgb([255, 0, 0]));
    }
}

//! Physical consistency checks shared by the invariant suite and the tests.

use num_complex::Complex64;

use crate::error::Result;
use crate::greens::GreensTable;
use crate::iter::CrackLayout;
use crate::kernel::{Contour, KernelFactors};
use crate::lattice::{helmholtz_residual, FaceForcing, FieldGrid, LatticeParams};

/// Largest residuals of the scattered field, `(off_faces, on_faces)`, over
/// the grid interior.
pub fn helmholtz_residuals(
    field: &FieldGrid,
    params: &LatticeParams,
    layout: &CrackLayout,
    forcing: &FaceForcing,
) -> Result<(f64, f64)> {
    let broken = |m: i64| layout.is_broken(m);
    let (mut off, mut on) = (0.0f64, 0.0f64);
    for n in field.n_min + 1..field.n_max {
        for m in field.m_min + 1..field.m_max {
            let r = helmholtz_residual(field, params, (m, n), &broken, Some(forcing))?.norm();
            if (n == 0 || n == -1) && broken(m) {
                on = on.max(r);
            } else {
                off = off.max(r);
            }
        }
    }
    Ok((off, on))
}

/// `Delta G + Omega^2 G` at `(m, n)`, which is 1 at the origin and 0 elsewhere.
pub fn greens_stencil(m: i64, n: i64, table: &GreensTable) -> Result<Complex64> {
    let g = |a, b| table.get(a, b);
    let centre = g(m, n)?;
    Ok(g(m + 1, n)? + g(m - 1, n)? + g(m, n + 1)? + g(m, n - 1)? + (table.params().omega_sq() - 4.0) * centre)
}

/// `max |K+(z) - K-(1/z)|` over the contour vertices.
pub fn factor_symmetry_error(factors: &KernelFactors, contour: &Contour) -> f64 {
    contour
        .vertices()
        .iter()
        .map(|&z| (factors.k_plus.eval(z) - factors.k_minus.eval(z.inv())).norm())
        .fold(0.0, f64::max)
}

/// `max |u_{m,-1-n} + u_{m,n}|` over mirrored pairs inside the grid.
pub fn antisymmetry_defect(field: &FieldGrid) -> f64 {
    field
        .nodes()
        .filter(|&(_, n)| n >= 0)
        .filter_map(|(m, n)| Some((field.get(m, -1 - n)? + field.get(m, n)?).norm()))
        .fold(0.0, f64::max)
}

//! Lattice Green's function and the exact single-crack solution.
//!
//! `G_{m,n} = (1 / 4 pi^2) iint e^{i(m xi + n eta)} / sigma(xi, eta) dxi deta`
//! with `sigma = Omega^2 - 4 + 2 cos xi + 2 cos eta`, so that
//! `Delta G + Omega^2 G = delta`. The eta integral is done by residues:
//! with `t + 1/t = -(Omega^2 - 4 + 2 cos xi)` and `|t| < 1`,
//! `G_{m,n} = (1 / pi) int_0^pi cos(m xi) t^|n| / (t - 1/t) dxi`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::RwLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::GridExtent;
use crate::lattice::{FieldGrid, IncidentWave, LatticeParams};
use crate::quad::{integrate, integrate_endpoint_singular};

/// Absolute accuracy of single-integral Green's function values.
pub const GREENS_TOL: f64 = 1e-10;
/// Largest acceptable 1-norm condition number of `I - F`.
pub const MAX_CONDITION: f64 = 1e12;
/// Crack lengths the oracle accepts.
pub const ORACLE_LENGTHS: std::ops::RangeInclusive<i64> = 2..=200;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Root of `t^2 + a t + 1 = 0` inside the unit circle; `Im t > 0` when both
/// are unimodular.
fn decaying_root(a: Complex64) -> Complex64 {
    let d = (a * a - 4.0).sqrt();
    let r1 = 0.5 * (-a + d);
    let r2 = 0.5 * (-a - d);
    let (small, big) = if r1.norm() <= r2.norm() { (r1, r2) } else { (r2, r1) };
    if (big.norm() - small.norm()).abs() > 1e-12 {
        small
    } else if small.im > 0.0 {
        small
    } else {
        big
    }
}

/// Angles in `(0, pi)` where `Omega^2 - 4 + 2 cos xi = +-2` for real `Omega`.
fn band_edges(params: &LatticeParams) -> Vec<f64> {
    let w2 = params.omega().re.powi(2);
    [(2.0 - w2) / 2.0, (6.0 - w2) / 2.0]
        .into_iter()
        .filter(|c| c.abs() < 1.0)
        .map(f64::acos)
        .collect()
}

fn breakpoints(singular: &[f64]) -> Vec<f64> {
    let mut points = vec![0.0, PI];
    points.extend_from_slice(singular);
    points.sort_by(f64::total_cmp);
    points
}

/// `G_{m,n}` from the single integral.
pub fn greens(m: i64, n: i64, params: &LatticeParams) -> Result<Complex64> {
    let (m, n) = (m.abs() as f64, n.unsigned_abs() as i32);
    let omega_sq = params.omega_sq();
    let integrand = |xi: f64| {
        let a = omega_sq - 4.0 + 2.0 * xi.cos();
        let t = decaying_root(a);
        (m * xi).cos() * t.powi(n) / (t - t.inv())
    };
    let mut total = ZERO;
    for w in breakpoints(&band_edges(params)).windows(2) {
        total += integrate_endpoint_singular(integrand, w[0], w[1], GREENS_TOL / PI)?;
    }
    Ok(total / PI)
}

/// `G_{m,n}` by nested adaptive quadrature of the defining double integral.
/// Needs `eps_omega > 0`; slow, used only to check `greens`.
pub fn greens_double(m: i64, n: i64, params: &LatticeParams, tol: f64) -> Result<Complex64> {
    if !(params.eps_omega() > 0.0) {
        return Err(Error::InvalidParameter("the double integral needs eps_omega > 0".into()));
    }
    let (m, n) = (m.abs() as f64, n.abs() as f64);
    let omega_sq = params.omega_sq();
    let inner = |xi: f64| -> Result<Complex64> {
        let a = omega_sq - 4.0 + 2.0 * xi.cos();
        let mut singular = Vec::new();
        if a.re.abs() < 2.0 {
            singular.push((-a.re / 2.0).acos());
        }
        let mut sum = ZERO;
        for w in breakpoints(&singular).windows(2) {
            sum += integrate(|eta| (n * eta).cos() / (a + 2.0 * eta.cos()), w[0], w[1], 0.1 * tol)?;
        }
        Ok(sum * (m * xi).cos())
    };
    let mut failure = None;
    let mut total = ZERO;
    for w in breakpoints(&band_edges(params)).windows(2) {
        total += integrate(
            |xi| {
                inner(xi).unwrap_or_else(|e| {
                    failure.get_or_insert(e);
                    ZERO
                })
            },
            w[0],
            w[1],
            tol * PI,
        )?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(total / (PI * PI)),
    }
}

/// Memoized Green's function values, keyed by `(min, max)` of `(|m|, |n|)`.
#[derive(Debug)]
pub struct GreensTable {
    params: LatticeParams,
    cache: RwLock<HashMap<(u64, u64), Complex64>>,
}

fn key(m: i64, n: i64) -> (u64, u64) {
    let (a, b) = (m.unsigned_abs(), n.unsigned_abs());
    (a.min(b), a.max(b))
}

impl GreensTable {
    pub fn new(params: LatticeParams) -> Self {
        Self { params, cache: RwLock::new(HashMap::new()) }
    }

    pub fn params(&self) -> &LatticeParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, m: i64, n: i64) -> Result<Complex64> {
        let k = key(m, n);
        if let Some(v) = self.cache.read().expect("cache lock").get(&k) {
            return Ok(*v);
        }
        let v = greens(k.0 as i64, k.1 as i64, &self.params)?;
        self.cache.write().expect("cache lock").insert(k, v);
        Ok(v)
    }

    /// Compute all missing values among `nodes` in parallel.
    pub fn prefetch(&self, nodes: impl IntoIterator<Item = (i64, i64)>) -> Result<()> {
        let missing: Vec<(u64, u64)> = {
            let cache = self.cache.read().expect("cache lock");
            let mut keys: Vec<_> = nodes.into_iter().map(|(m, n)| key(m, n)).filter(|k| !cache.contains_key(k)).collect();
            keys.sort_unstable();
            keys.dedup();
            keys
        };
        let values = missing
            .par_iter()
            .map(|k| greens(k.0 as i64, k.1 as i64, &self.params))
            .collect::<Result<Vec<_>>>()?;
        self.cache.write().expect("cache lock").extend(missing.into_iter().zip(values));
        Ok(())
    }
}

/// `[F]_{ij} = 2 G_{i-j,1} - 2 G_{i-j,0}` over the `l - 1` broken links.
pub fn toeplitz_matrix(l: i64, table: &GreensTable) -> Result<DMatrix<Complex64>> {
    let size = (l - 1) as usize;
    table.prefetch((0..l).flat_map(|d| [(d, 0), (d, 1)]))?;
    let mut diag = Vec::with_capacity(size);
    for d in 0..size as i64 {
        diag.push(2.0 * table.get(d, 1)? - 2.0 * table.get(d, 0)?);
    }
    Ok(DMatrix::from_fn(size, size, |i, j| diag[i.abs_diff(j)]))
}

fn norm1(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Link jumps `v_j = u_{j,-1} - u_{j,0}` of the scattered field for the
/// broken links `j = 1 .. l-1` of a single crack, from `(I - F) v = F v^in`.
pub fn exact_crack_jumps(l: i64, wave: &IncidentWave, table: &GreensTable) -> Result<Vec<Complex64>> {
    if !ORACLE_LENGTHS.contains(&l) {
        return Err(Error::InvalidParameter(format!("oracle crack length {l} outside 2..=200")));
    }
    let f = toeplitz_matrix(l, table)?;
    let size = f.nrows();
    let forcing = wave.face_forcing();
    let v_in = DVector::from_fn(size, |i, _| forcing.v(i as i64 + 1));
    let system = DMatrix::<Complex64>::identity(size, size) - &f;
    let lu = system.clone().lu();
    let inverse = lu.try_inverse().ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
    let condition = norm1(&system) * norm1(&inverse);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularSystem { condition });
    }
    let rhs = &f * v_in;
    Ok((inverse * rhs).iter().copied().collect())
}

/// Exact scattered field of a single crack of length `l` on `grid`. Rows
/// `n < 0` follow from anti-symmetry.
pub fn exact_crack_field(l: i64, wave: &IncidentWave, table: &GreensTable, grid: &GridExtent) -> Result<FieldGrid> {
    let v = exact_crack_jumps(l, wave, table)?;
    let forcing = wave.face_forcing();
    let w: Vec<Complex64> = v.iter().enumerate().map(|(i, v)| v + forcing.v(i as i64 + 1)).collect();
    let top = grid.n_max.max(-1 - grid.n_min);
    let (m_lo, m_hi) = (grid.m_min - (l - 1), grid.m_max - 1);
    table.prefetch((m_lo..=m_hi).flat_map(|d| (0..=top + 1).map(move |n| (d, n))))?;
    let rows: Vec<Vec<Complex64>> = (0..=top)
        .into_par_iter()
        .map(|n| {
            (grid.m_min..=grid.m_max)
                .map(|m| {
                    w.iter().enumerate().try_fold(ZERO, |acc, (i, w)| {
                        let d = m - (i as i64 + 1);
                        Ok(acc + w * (table.get(d, n)? - table.get(d, n + 1)?))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = grid.zeros();
    for n in grid.n_min..=grid.n_max {
        let (row, sign) = if n >= 0 { (n, 1.0) } else { (-1 - n, -1.0) };
        for (i, m) in (grid.m_min..=grid.m_max).enumerate() {
            out.set(m, n, sign * rows[row as usize][i]);
        }
    }
    Ok(out)
}

/// Perimeter of the rectangle `m in [-margin, l + margin]`, `n in [0, height]`.
pub fn region_d(l: i64, margin: i64, height: i64) -> Vec<(i64, i64)> {
    let (m0, m1) = (-margin, l + margin);
    let mut nodes: Vec<(i64, i64)> = Vec::new();
    for m in m0..=m1 {
        nodes.push((m, 0));
        nodes.push((m, height));
    }
    for n in 1..height {
        nodes.push((m0, n));
        nodes.push((m1, n));
    }
    nodes.sort_unstable();
    nodes.dedup();
    nodes
}

/// Largest `|a - b|` over `region`; nodes outside either grid are skipped.
pub fn compare(a: &FieldGrid, b: &FieldGrid, region: &[(i64, i64)]) -> f64 {
    region
        .iter()
        .filter_map(|&(m, n)| Some((a.get(m, n)? - b.get(m, n)?).norm()))
        .fold(0.0, f64::max)
}

//! Exact lattice physics: dispersion relation, the propagation factor
//! `lambda(z)`, the Wiener-Hopf kernel `K(z)`, incident forcing and the
//! discrete Helmholtz operators used to check reconstructed fields.
//!
//! The kernel is never evaluated through a square root. Instead the root of
//! `lambda^2 - (H + 2) lambda + 1 = 0` with `|lambda| < 1` is selected, which
//! encodes the radiation condition directly. When both roots are unimodular
//! (real frequency, propagating spectrum) the root obtained as the limit of a
//! small positive imaginary part of `Omega` is taken, i.e. the one with
//! `Im lambda > 0`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum distance of `Re(Omega)` from the resonant values 0, 2 and 2*sqrt(2).
pub const DEGENERACY_TOL: f64 = 1e-3;
/// Tolerance used to decide that the two quadratic roots coincide or are
/// both unimodular.
pub const ROOT_TOL: f64 = 1e-9;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Lattice frequency, possibly with a small absorbing imaginary part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    omega: Complex64,
    eps_omega: f64,
}

impl LatticeParams {
    /// `omega = omega_re + i eps_omega`.
    pub fn new(omega_re: f64, eps_omega: f64) -> Result<Self> {
        if !omega_re.is_finite() || !eps_omega.is_finite() {
            return Err(Error::InvalidParameter("non-finite frequency".into()));
        }
        if eps_omega < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "eps_omega must be nonnegative, got {eps_omega}"
            )));
        }
        for resonant in [0.0, 2.0, 2.0 * SQRT_2] {
            if (omega_re - resonant).abs() <= DEGENERACY_TOL {
                return Err(Error::DegenerateFrequency { omega: omega_re });
            }
        }
        if omega_re <= 0.0 || omega_re >= 2.0 * SQRT_2 {
            return Err(Error::InvalidParameter(format!(
                "Re(omega) = {omega_re} lies outside the propagation band (0, 2*sqrt(2))"
            )));
        }
        Ok(Self {
            omega: Complex64::new(omega_re, eps_omega),
            eps_omega,
        })
    }

    pub fn omega(&self) -> Complex64 {
        self.omega
    }

    pub fn omega_sq(&self) -> Complex64 {
        self.omega * self.omega
    }

    pub fn eps_omega(&self) -> f64 {
        self.eps_omega
    }

    /// Same real frequency with a different absorption.
    pub fn with_absorption(&self, eps_omega: f64) -> Result<Self> {
        Self::new(self.omega.re, eps_omega)
    }
}

/// Incident plane wave `u_in(m, n) = exp(-i (k_m m + k_n n))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidentWave {
    pub k_m: f64,
    pub k_n: f64,
    pub k: f64,
    pub phi_in: f64,
}

impl IncidentWave {
    pub fn new(k: f64, phi_in: f64) -> Result<Self> {
        if !(k > 0.0 && k <= PI * SQRT_2 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "wavenumber magnitude {k} outside (0, pi*sqrt(2)]"
            )));
        }
        if !(0.0..2.0 * PI).contains(&phi_in) {
            return Err(Error::InvalidParameter(format!(
                "incidence angle {phi_in} outside [0, 2*pi)"
            )));
        }
        let (k_m, k_n) = (k * phi_in.cos(), k * phi_in.sin());
        if k_m.abs() > PI + 1e-12 || k_n.abs() > PI + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "Bloch wavenumbers ({k_m}, {k_n}) leave the Brillouin zone"
            )));
        }
        Ok(Self {
            k_m,
            k_n,
            k,
            phi_in,
        })
    }

    /// Wave of direction `phi_in` whose dispersion frequency is `omega`.
    ///
    /// Solves `omega^2 = 4 - 2 cos(k cos phi) - 2 cos(k sin phi)` for `k` by
    /// bisection; the right-hand side is increasing in `k` up to the zone edge.
    pub fn from_omega(omega: f64, phi_in: f64) -> Result<Self> {
        let (c, s) = (phi_in.cos(), phi_in.sin());
        let k_edge = PI / c.abs().max(s.abs());
        let target = omega * omega;
        let disp = |k: f64| 4.0 - 2.0 * (k * c).cos() - 2.0 * (k * s).cos();
        if !(target > 0.0 && target <= disp(k_edge)) {
            return Err(Error::InvalidParameter(format!(
                "no propagating wave with omega = {omega} in direction {phi_in}"
            )));
        }
        let (mut lo, mut hi) = (0.0, k_edge);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if disp(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self::new(0.5 * (lo + hi), phi_in)
    }

    /// Incident displacement at node `(m, n)`.
    pub fn u_in(&self, m: i64, n: i64) -> Complex64 {
        Complex64::from_polar(1.0, -(self.k_m * m as f64 + self.k_n * n as f64))
    }

    /// `z_p = exp(-i k_m)`.
    pub fn z_p(&self) -> Complex64 {
        Complex64::from_polar(1.0, -self.k_m)
    }

    /// Crack-face forcing `v_m = u_in(m, -1) - u_in(m, 0)`.
    pub fn face_forcing(&self) -> FaceForcing {
        FaceForcing {
            log_z_p: Complex64::new(0.0, -self.k_m),
            jump: (I * self.k_n).exp() - 1.0,
        }
    }
}

/// Geometric crack-face forcing `v_m = z_p^m * jump`.
///
/// For the exact incident wave `z_p` is unimodular; semi-infinite scenarios
/// use a radially offset `z_p` so that the forcing sum converges on the contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceForcing {
    pub log_z_p: Complex64,
    pub jump: Complex64,
}

impl FaceForcing {
    pub fn z_p(&self) -> Complex64 {
        self.log_z_p.exp()
    }

    pub fn v(&self, m: i64) -> Complex64 {
        (self.log_z_p * m as f64).exp() * self.jump
    }

    /// Same forcing with `|z_p|` scaled by `scale`.
    pub fn with_radius_scale(&self, scale: f64) -> Self {
        Self {
            log_z_p: self.log_z_p + scale.ln(),
            jump: self.jump,
        }
    }
}

/// `Omega^2 = 4 - 2 cos(K_m) - 2 cos(K_n)` for the wave `(k, phi_in)`.
pub fn dispersion_omega(k: f64, phi_in: f64) -> Result<LatticeParams> {
    let wave = IncidentWave::new(k, phi_in)?;
    let omega_sq = 4.0 - 2.0 * wave.k_m.cos() - 2.0 * wave.k_n.cos();
    LatticeParams::new(omega_sq.max(0.0).sqrt(), 0.0)
}

/// `H(z) = 2 - z - 1/z - Omega^2`.
pub fn h_of_z(z: Complex64, params: &LatticeParams) -> Complex64 {
    2.0 - z - z.inv() - params.omega_sq()
}

/// `R(z) = H(z) + 4`.
pub fn r_of_z(z: Complex64, params: &LatticeParams) -> Complex64 {
    h_of_z(z, params) + 4.0
}

/// Both roots of `lambda^2 - s lambda + 1 = 0`, larger modulus first.
fn quadratic_roots(s: Complex64) -> (Complex64, Complex64) {
    let d = (s * s - 4.0).sqrt();
    let a = 0.5 * (s + d);
    let b = 0.5 * (s - d);
    let big = if a.norm_sqr() >= b.norm_sqr() { a } else { b };
    (big, big.inv())
}

/// Select the decaying root of the propagation quadratic.
fn select_root(s: Complex64, z: Complex64) -> Result<Complex64> {
    // The roots differ by sqrt(s^2 - 4); test the discriminant itself.
    if (s * s - 4.0).norm() < ROOT_TOL {
        return Err(Error::BranchAmbiguity { z });
    }
    let (big, small) = quadratic_roots(s);
    if (big.norm() - small.norm()).abs() > ROOT_TOL {
        return Ok(small);
    }
    // Both unimodular: limiting absorption picks Im(lambda) > 0.
    Ok(if big.im > 0.0 { big } else { small })
}

/// Vertical propagation factor: the root of `lambda + 1/lambda = H(z) + 2`
/// carrying the field from row 0 to row n.
pub fn lambda_of_z(z: Complex64, params: &LatticeParams) -> Result<Complex64> {
    if z.norm() == 0.0 || !z.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda undefined at z = {z}"
        )));
    }
    select_root(h_of_z(z, params) + 2.0, z)
}

/// The root of the propagation quadratic at `z` closest to `reference`.
///
/// Used to continue `lambda` analytically off the contour, where the
/// `|lambda| < 1` rule may select the other sheet.
pub fn lambda_continued(z: Complex64, params: &LatticeParams, reference: Complex64) -> Complex64 {
    let (big, small) = quadratic_roots(h_of_z(z, params) + 2.0);
    if (big - reference).norm() < (small - reference).norm() {
        big
    } else {
        small
    }
}

/// Wiener-Hopf kernel `K(z) = (1 - lambda) / (1 + lambda)`, a branch of
/// `sqrt(H / R)` satisfying `K(z) = K(1/z)`.
pub fn kernel_k_of_z(z: Complex64, params: &LatticeParams) -> Result<Complex64> {
    let lambda = lambda_of_z(z, params)?;
    let denom = 1.0 + lambda;
    if denom.norm() < ROOT_TOL {
        return Err(Error::PoleHit { z });
    }
    Ok((1.0 - lambda) / denom)
}

/// `v_m^in = u_in(m, -1) - u_in(m, 0)`.
pub fn incident_v(m: i64, wave: &IncidentWave) -> Complex64 {
    wave.face_forcing().v(m)
}

/// Complex field sampled on a rectangular block of lattice nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub m_min: i64,
    pub m_max: i64,
    pub n_min: i64,
    pub n_max: i64,
    values: Vec<Complex64>,
}

impl FieldGrid {
    pub fn zeros(m_min: i64, m_max: i64, n_min: i64, n_max: i64) -> Self {
        assert!(m_min <= m_max && n_min <= n_max, "empty grid");
        let count = ((m_max - m_min + 1) * (n_max - n_min + 1)) as usize;
        Self {
            m_min,
            m_max,
            n_min,
            n_max,
            values: vec![Complex64::new(0.0, 0.0); count],
        }
    }

    /// Grid filled by evaluating `f` at every node.
    pub fn from_fn(
        m_min: i64,
        m_max: i64,
        n_min: i64,
        n_max: i64,
        mut f: impl FnMut(i64, i64) -> Complex64,
    ) -> Self {
        let mut grid = Self::zeros(m_min, m_max, n_min, n_max);
        for n in n_min..=n_max {
            for m in m_min..=m_max {
                grid.set(m, n, f(m, n));
            }
        }
        grid
    }

    pub fn width(&self) -> usize {
        (self.m_max - self.m_min + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn contains(&self, m: i64, n: i64) -> bool {
        (self.m_min..=self.m_max).contains(&m) && (self.n_min..=self.n_max).contains(&n)
    }

    fn index(&self, m: i64, n: i64) -> usize {
        (n - self.n_min) as usize * self.width() + (m - self.m_min) as usize
    }

    pub fn get(&self, m: i64, n: i64) -> Option<Complex64> {
        self.contains(m, n).then(|| self.values[self.index(m, n)])
    }

    pub fn set(&mut self, m: i64, n: i64, value: Complex64) {
        assert!(self.contains(m, n), "node ({m}, {n}) outside grid");
        let idx = self.index(m, n);
        self.values[idx] = value;
    }

    /// Nodes in row-major order (n outer, m inner).
    pub fn nodes(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (self.n_min..=self.n_max).flat_map(move |n| (self.m_min..=self.m_max).map(move |m| (m, n)))
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Scattered field plus the incident plane wave.
    pub fn total(&self, wave: &IncidentWave) -> FieldGrid {
        let mut out = self.clone();
        for (m, n) in self.nodes() {
            let idx = out.index(m, n);
            out.values[idx] += wave.u_in(m, n);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Residual of the lattice equations at `node`.
///
/// `broken(m)` tells whether the vertical link between `(m, -1)` and `(m, 0)`
/// is cut. Away from crack faces this is `Delta u + Omega^2 u`. On the faces
/// the three-point operators are used; with `forcing` given the scattered-field
/// form is checked, `Delta^{S0} u + Omega^2 u - v_m` on row 0 and
/// `Delta^{S-1} u + Omega^2 u + v_m` on row -1. Without forcing the unforced
/// (total-field) form is returned.
pub fn helmholtz_residual(
    grid: &FieldGrid,
    params: &LatticeParams,
    node: (i64, i64),
    broken: &dyn Fn(i64) -> bool,
    forcing: Option<&FaceForcing>,
) -> Result<Complex64> {
    let (m, n) = node;
    let at = |mm: i64, nn: i64| grid.get(mm, nn).ok_or(Error::OutOfGrid { m: mm, n: nn });
    let u = at(m, n)?;
    let horizontal = at(m + 1, n)? + at(m - 1, n)?;
    let omega_sq = params.omega_sq();
    let face = (n == 0 || n == -1) && broken(m);
    if !face {
        let vertical = at(m, n + 1)? + at(m, n - 1)?;
        return Ok(horizontal + vertical - 4.0 * u + omega_sq * u);
    }
    let v = forcing.map(|f| f.v(m)).unwrap_or_default();
    if n == 0 {
        Ok(horizontal + at(m, 1)? - 3.0 * u + omega_sq * u - v)
    } else {
        Ok(horizontal + at(m, -2)? - 3.0 * u + omega_sq * u + v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn baseline() -> LatticeParams {
        dispersion_omega(0.5 * PI, FRAC_PI_4).unwrap()
    }

    #[test]
    fn dispersion_examples() {
        assert!((baseline().omega().re - 1.4913).abs() < 5e-5);
        let normal = dispersion_omega(0.5 * PI, 0.5 * PI).unwrap();
        assert!((normal.omega().re - SQRT_2).abs() < 1e-12);
        assert!(matches!(
            dispersion_omega(1e-6, 0.3),
            Err(Error::DegenerateFrequency { .. })
        ));
    }

    #[test]
    fn degeneracy_window() {
        assert!(matches!(
            LatticeParams::new(2.0005, 0.0),
            Err(Error::DegenerateFrequency { .. })
        ));
        assert!(LatticeParams::new(2.01, 0.0).is_ok());
        assert!(LatticeParams::new(1.2, -1e-3).is_err());
        assert!(LatticeParams::new(3.0, 0.0).is_err());
    }

    #[test]
    fn lambda_and_kernel_at_five() {
        let p = LatticeParams::new(1.49, 0.0).unwrap();
        let z = c(5.0, 0.0);
        let lambda = lambda_of_z(z, &p).unwrap();
        // lambda^2 + 3.4201 lambda + 1 = 0, decaying root
        let s: f64 = 3.4201;
        let expected = (-s + (s * s - 4.0).sqrt()) / 2.0;
        assert!((lambda - c(expected, 0.0)).norm() < 1e-12);
        assert!((lambda.re + 0.3229).abs() < 1e-4);
        let k = kernel_k_of_z(z, &p).unwrap();
        assert!((k.re - 1.9536).abs() < 1e-3);
        let root = (h_of_z(z, &p) / r_of_z(z, &p)).sqrt();
        assert!((k - root).norm() < 1e-12);
    }

    #[test]
    fn kernel_at_one() {
        let p = baseline();
        let k = kernel_k_of_z(c(1.0, 0.0), &p).unwrap();
        let w2 = p.omega_sq();
        assert!((k * k + w2 / (4.0 - w2)).norm() < 1e-12);
    }

    #[test]
    fn unimodular_roots_follow_limiting_absorption() {
        let p = baseline();
        let z = Complex64::from_polar(1.0, 0.3);
        let lam = lambda_of_z(z, &p).unwrap();
        assert!((lam.norm() - 1.0).abs() < 1e-12);
        let damped = p.with_absorption(1e-7).unwrap();
        let lam_eps = lambda_of_z(z, &damped).unwrap();
        assert!(lam_eps.norm() < 1.0);
        assert!((lam - lam_eps).norm() < 1e-5);
    }

    #[test]
    fn coincident_roots_are_ambiguous() {
        let p = baseline();
        // H(z) = 0 on the unit circle: both roots equal 1.
        let cos_t = (2.0 - p.omega_sq().re) / 2.0;
        let z = Complex64::from_polar(1.0, cos_t.acos());
        assert!(matches!(
            lambda_of_z(z, &p),
            Err(Error::BranchAmbiguity { .. })
        ));
    }

    #[test]
    fn incident_forcing_examples() {
        let w = IncidentWave::new(0.25 * PI * SQRT_2, FRAC_PI_4).unwrap();
        assert!((w.k_m - FRAC_PI_4).abs() < 1e-12 && (w.k_n - FRAC_PI_4).abs() < 1e-12);
        assert!((incident_v(0, &w) - ((I * w.k_n).exp() - 1.0)).norm() < 1e-15);
        let v1 = incident_v(1, &w);
        assert!((v1 - c(0.2929, 0.7071)).norm() < 1e-4);
        let grazing = IncidentWave::new(1.0, 0.0).unwrap();
        for m in -5..5 {
            assert_eq!(incident_v(m, &grazing).norm(), 0.0);
        }
    }

    #[test]
    fn from_omega_inverts_dispersion() {
        let w = IncidentWave::from_omega(1.49, FRAC_PI_4).unwrap();
        let p = dispersion_omega(w.k, w.phi_in).unwrap();
        assert!((p.omega().re - 1.49).abs() < 1e-12);
    }

    #[test]
    fn plane_wave_satisfies_stencil() {
        let wave = IncidentWave::new(0.5 * PI, FRAC_PI_4).unwrap();
        let p = dispersion_omega(wave.k, wave.phi_in).unwrap();
        let grid = FieldGrid::from_fn(-6, 6, -6, 6, |m, n| wave.u_in(m, n));
        for m in -5..=5 {
            for n in -5..=5 {
                let r = helmholtz_residual(&grid, &p, (m, n), &|_| false, None).unwrap();
                assert!(r.norm() < 1e-12);
            }
        }
        let zero = FieldGrid::zeros(-2, 2, -2, 2);
        let r = helmholtz_residual(&zero, &p, (0, 0), &|_| true, None).unwrap();
        assert_eq!(r.norm(), 0.0);
        assert!(matches!(
            helmholtz_residual(&zero, &p, (2, 0), &|_| false, None),
            Err(Error::OutOfGrid { .. })
        ));
    }
}

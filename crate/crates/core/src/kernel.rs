//! Integration contour, rational kernel approximation and its factorization.
//!
//! The contour is the unit circle pushed radially outward around the upper
//! special point `e^{i theta*}` and inward around `e^{-i theta*}`. Its radius
//! profile is odd in the angle, so the lower half is the reciprocal image of
//! the upper half (`z(-t) = 1 / z(t)`). The kernel is fitted in the variable
//! `alpha = z + 1/z` on the upper half only, which makes the approximant
//! symmetric under `z -> 1/z` exactly.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{kernel_k_of_z, LatticeParams};
use crate::rfun::{Zpk, UNIT_CIRCLE_GUARD};

pub const DEFAULT_INDENT_RADIUS: f64 = 0.05;
pub const DEFAULT_N_VERTICES: usize = 720;
pub const DEFAULT_APPROX_TOL: f64 = 1e-7;
pub const MAX_SUPPORT_POINTS: usize = 120;
/// Number of fit samples on the upper half of the contour.
pub const FIT_SAMPLES: usize = 2000;
/// Number of fresh contour points used to measure the fit error.
pub const CHECK_SAMPLES: usize = 4000;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Closed counterclockwise integration contour around the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    vertices: Vec<Complex64>,
    indent_radius: f64,
    special_points: Vec<Complex64>,
    /// Angles in `(0, pi)` of the special points on the upper half.
    thetas: Vec<f64>,
}

/// Angles in `(0, pi)` where `H` or `R` vanishes on the unit circle.
fn special_angles(params: &LatticeParams) -> Vec<f64> {
    let w2 = params.omega().re.powi(2);
    [2.0 - w2, 6.0 - w2]
        .into_iter()
        .map(|two_cos| two_cos / 2.0)
        .filter(|c| c.abs() < 1.0)
        .map(f64::acos)
        .collect()
}

/// Build the indented contour.
pub fn build_contour(params: &LatticeParams, indent_radius: f64, n_vertices: usize) -> Result<Contour> {
    if n_vertices < 256 {
        return Err(Error::InvalidParameter(format!("n_vertices = {n_vertices} is below 256")));
    }
    if !(indent_radius > 0.0 && indent_radius < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "indent_radius = {indent_radius} outside (0, 0.5)"
        )));
    }
    let thetas = special_angles(params);
    let special_points = thetas
        .iter()
        .flat_map(|&t| [Complex64::from_polar(1.0, t), Complex64::from_polar(1.0, -t)])
        .collect();
    let mut contour = Contour {
        vertices: Vec::new(),
        indent_radius,
        special_points,
        thetas,
    };
    let step = 2.0 * PI / n_vertices as f64;
    contour.vertices = (0..n_vertices).map(|k| contour.point(-PI + k as f64 * step)).collect();
    Ok(contour)
}

impl Contour {
    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn indent_radius(&self) -> f64 {
        self.indent_radius
    }

    pub fn special_points(&self) -> &[Complex64] {
        &self.special_points
    }

    fn width(&self) -> f64 {
        2.0 * self.indent_radius
    }

    /// `log |z(t)|` and its derivative in `t`.
    fn log_radius(&self, t: f64) -> (f64, f64) {
        let w = self.width();
        let amp = self.indent_radius.ln_1p();
        let (mut val, mut der) = (0.0, 0.0);
        for &theta in &self.thetas {
            for (centre, sign) in [(theta, 1.0), (-theta, -1.0)] {
                for j in -1..=1 {
                    let x = (t - centre + 2.0 * PI * j as f64) / w;
                    let g = (-x * x).exp();
                    val += sign * g;
                    der += sign * g * (-2.0 * x / w);
                }
            }
        }
        (amp * val, amp * der)
    }

    /// Point of the smooth contour at parameter angle `t`.
    pub fn point(&self, t: f64) -> Complex64 {
        Complex64::from_polar(self.log_radius(t).0.exp(), t)
    }

    /// `dz/dt` at parameter angle `t`.
    pub fn derivative(&self, t: f64) -> Complex64 {
        let (_, der) = self.log_radius(t);
        self.point(t) * (der + I)
    }

    /// Trapezoid nodes and weights for `oint f(z) dz` with `n` points,
    /// spectrally accurate for integrands analytic near the contour.
    pub fn quadrature(&self, n: usize) -> Vec<(Complex64, Complex64)> {
        let h = 2.0 * PI / n as f64;
        (0..n)
            .map(|k| {
                let t = -PI + (k as f64 + 0.5) * h;
                (self.point(t), self.derivative(t) * h)
            })
            .collect()
    }

    /// `n` contour points uniformly spaced in the parameter, offset from the
    /// vertices by a fraction `shift` of a step.
    pub fn samples(&self, n: usize, shift: f64) -> Vec<Complex64> {
        let h = 2.0 * PI / n as f64;
        (0..n).map(|k| self.point(-PI + (k as f64 + shift) * h)).collect()
    }

    /// Distance from `p` to the closed polyline.
    pub fn distance_to(&self, p: Complex64) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|k| segment_distance(p, self.vertices[k], self.vertices[(k + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Winding number of the polyline about `p`.
    pub fn winding_number(&self, p: Complex64) -> i64 {
        let n = self.vertices.len();
        let total: f64 = (0..n)
            .map(|k| ((self.vertices[(k + 1) % n] - p) / (self.vertices[k] - p)).arg())
            .sum();
        (total / (2.0 * PI)).round() as i64
    }

    /// Fit samples on the upper half, equally spaced in arc length weighted
    /// four times more densely within `5 * indent_radius` of special points.
    fn fit_samples(&self, count: usize) -> Vec<Complex64> {
        let fine = 40 * count;
        let h = PI / fine as f64;
        let near = 5.0 * self.indent_radius;
        let mut cumulative = Vec::with_capacity(fine + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for k in 0..fine {
            let t = (k as f64 + 0.5) * h;
            let density = if self.thetas.iter().any(|&th| (t - th).abs() < near) { 4.0 } else { 1.0 };
            acc += density * self.derivative(t).norm() * h;
            cumulative.push(acc);
        }
        let mut out = Vec::with_capacity(count);
        let mut k = 0;
        for i in 0..count {
            let target = acc * i as f64 / (count - 1) as f64;
            while k + 1 < fine && cumulative[k + 1] < target {
                k += 1;
            }
            let span = cumulative[k + 1] - cumulative[k];
            let frac = if span > 0.0 { (target - cumulative[k]) / span } else { 0.0 };
            out.push(self.point((k as f64 + frac.clamp(0.0, 1.0)) * h));
        }
        out
    }
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a) * d.conj()).re / len2;
    (p - (a + d * s.clamp(0.0, 1.0))).norm()
}

/// Barycentric rational approximant from the adaptive (AAA) greedy scheme.
#[derive(Debug, Clone)]
struct Barycentric {
    support: Vec<Complex64>,
    values: Vec<Complex64>,
    weights: Vec<Complex64>,
    error: f64,
}

fn aaa(x: &[Complex64], f: &[Complex64], target: f64, max_support: usize) -> Barycentric {
    let n = x.len();
    let mean = f.iter().sum::<Complex64>() / n as f64;
    let mut approx = vec![mean; n];
    let mut in_support = vec![false; n];
    let mut support_idx: Vec<usize> = Vec::new();
    let mut best: Option<Barycentric> = None;

    for _ in 0..max_support.min(n - 1) {
        let next = (0..n)
            .filter(|&i| !in_support[i])
            .max_by(|&a, &b| (f[a] - approx[a]).norm().total_cmp(&(f[b] - approx[b]).norm()))
            .expect("samples remain");
        in_support[next] = true;
        support_idx.push(next);
        let rows: Vec<usize> = (0..n).filter(|&i| !in_support[i]).collect();
        let m = support_idx.len();

        let cauchy = DMatrix::from_fn(rows.len(), m, |r, c| (x[rows[r]] - x[support_idx[c]]).inv());
        let loewner = DMatrix::from_fn(rows.len(), m, |r, c| {
            (f[rows[r]] - f[support_idx[c]]) * cauchy[(r, c)]
        });
        let svd = loewner.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let (min_idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty spectrum");
        let weights: Vec<Complex64> = (0..m).map(|c| v_t[(min_idx, c)].conj()).collect();
        let values: Vec<Complex64> = support_idx.iter().map(|&j| f[j]).collect();

        for &j in &support_idx {
            approx[j] = f[j];
        }
        for (r, &i) in rows.iter().enumerate() {
            let (mut num, mut den) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for c in 0..m {
                num += cauchy[(r, c)] * weights[c] * values[c];
                den += cauchy[(r, c)] * weights[c];
            }
            approx[i] = num / den;
        }
        let error = (0..n).map(|i| (f[i] - approx[i]).norm()).fold(0.0, f64::max);
        let candidate = Barycentric {
            support: support_idx.iter().map(|&j| x[j]).collect(),
            values,
            weights,
            error,
        };
        if best.as_ref().is_none_or(|b| error < b.error) {
            best = Some(candidate);
        }
        if error <= target {
            break;
        }
    }
    best.expect("at least one AAA step")
}

/// Roots of `sum_j a_j / (x - x_j)`.
///
/// They are the nonzero eigenvalues `mu` of `(I - 1 a^T / sum(a)) (D - s I)`,
/// shifted back by `s`; the projection contributes one spurious zero.
fn barycentric_roots(nodes: &[Complex64], a: &[Complex64]) -> Vec<Complex64> {
    let m = nodes.len();
    if m < 2 {
        return Vec::new();
    }
    let sigma: Complex64 = a.iter().sum();
    let radius = nodes.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let shift = Complex64::new(3.0 * radius + 1.0, 0.0);
    let mat = DMatrix::from_fn(m, m, |i, j| {
        let proj = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) } - a[j] / sigma;
        proj * (nodes[j] - shift)
    });
    let eig = mat.schur().eigenvalues().expect("complex Schur form always yields eigenvalues");
    let mut mus: Vec<Complex64> = eig.iter().copied().collect();
    let spurious = mus
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .expect("nonempty");
    mus.remove(spurious);
    mus.into_iter().map(|mu| mu + shift).collect()
}

/// Both preimages `z` and `1/z` of `alpha = z + 1/z`, larger modulus first.
fn preimages(alpha: Complex64) -> (Complex64, Complex64) {
    let root = (alpha * alpha - 4.0).sqrt();
    let a = 0.5 * (alpha + root);
    let b = 0.5 * (alpha - root);
    let big = if a.norm_sqr() >= b.norm_sqr() { a } else { b };
    (big, big.inv())
}

/// Rational kernel approximant together with its fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFit {
    pub zpk: Zpk,
    /// Sup-norm error against the exact kernel at fresh contour points.
    pub approx_error: f64,
    pub support_points: usize,
}

/// Fit `K(z)` on the contour by a rational function of `z + 1/z`.
pub fn approximate_kernel(params: &LatticeParams, contour: &Contour, tol: f64) -> Result<KernelFit> {
    if !(tol >= 1e-13) {
        return Err(Error::InvalidParameter(format!("approximation tol {tol} below 1e-13")));
    }
    let samples = contour.fit_samples(FIT_SAMPLES);
    let alphas: Vec<Complex64> = samples.iter().map(|z| z + z.inv()).collect();
    let values = samples
        .iter()
        .map(|&z| kernel_k_of_z(z, params))
        .collect::<Result<Vec<_>>>()?;

    let fit = aaa(&alphas, &values, 0.1 * tol, MAX_SUPPORT_POINTS);
    let fail = |error| Error::ApproximationFailed { error, support_points: fit.support.len() };
    if fit.error > tol {
        return Err(fail(fit.error));
    }

    let den_weights = fit.weights.clone();
    let num_weights: Vec<Complex64> = fit.weights.iter().zip(&fit.values).map(|(w, f)| w * f).collect();
    let alpha_poles = barycentric_roots(&fit.support, &den_weights);
    let alpha_zeros = barycentric_roots(&fit.support, &num_weights);
    if alpha_poles.len() != alpha_zeros.len() {
        return Err(fail(fit.error));
    }

    let split = |roots: &[Complex64]| -> Vec<Complex64> {
        roots
            .iter()
            .flat_map(|&a| {
                let (big, small) = preimages(a);
                [small, big]
            })
            .collect()
    };
    let z_poles = split(&alpha_poles);
    let z_zeros = split(&alpha_zeros);
    let clearance = 0.5 * contour.indent_radius();
    for &p in &z_poles {
        let distance = contour.distance_to(p);
        if distance < clearance {
            return Err(Error::PoleOnContour { pole: p, distance });
        }
    }

    // Least-squares gain over the fit samples.
    let shape = Zpk::new(Complex64::new(1.0, 0.0), z_zeros, z_poles)?;
    let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
    for (&z, &k) in samples.iter().zip(&values) {
        let q = shape.eval(z);
        num += q.conj() * k;
        den += q.norm_sqr();
    }
    let mut zpk = shape;
    zpk.gain = num / den;

    let approx_error = contour
        .samples(CHECK_SAMPLES, 0.37)
        .into_iter()
        .map(|z| Ok((zpk.eval(z) - kernel_k_of_z(z, params)?).norm()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if approx_error > tol {
        return Err(Error::ApproximationFailed { error: approx_error, support_points: fit.support.len() });
    }
    Ok(KernelFit { zpk, approx_error, support_points: fit.support.len() })
}

/// Plus and minus factors of the approximated kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFactors {
    pub k_full: Zpk,
    /// Zeros and poles strictly inside the unit circle.
    pub k_plus: Zpk,
    /// Zeros and poles strictly outside the unit circle.
    pub k_minus: Zpk,
    pub approx_error: f64,
}

impl KernelFactors {
    /// `C3 = K^-(0)`.
    pub fn c3(&self) -> Complex64 {
        self.k_minus.eval(Complex64::new(0.0, 0.0))
    }

    /// `C4 = lim K^+(z)` as `z -> infinity`.
    pub fn c4(&self) -> Complex64 {
        self.k_plus.at_infinity()
    }
}

/// Split `k_full` by modulus, with gains chosen so that `K^+(z) = K^-(1/z)`.
pub fn factorize(k_full: &Zpk, approx_error: f64) -> Result<KernelFactors> {
    let one = Complex64::new(1.0, 0.0);
    for &point in k_full.zeros().iter().chain(k_full.poles()) {
        if (point.norm() - 1.0).abs() < UNIT_CIRCLE_GUARD {
            return Err(Error::CircleStraddle { point });
        }
    }
    let inside = |v: &[Complex64]| v.iter().copied().filter(|x| x.norm() < 1.0).collect::<Vec<_>>();
    let outside = |v: &[Complex64]| v.iter().copied().filter(|x| x.norm() > 1.0).collect::<Vec<_>>();
    let plus_shape = Zpk::new(one, inside(k_full.zeros()), inside(k_full.poles()))?;
    let minus_shape = Zpk::new(one, outside(k_full.zeros()), outside(k_full.poles()))?;
    let c_plus = (k_full.gain * minus_shape.eval(one) / plus_shape.eval(one)).sqrt();
    let c_minus = k_full.gain / c_plus;
    let mut k_plus = plus_shape;
    k_plus.gain = c_plus;
    let mut k_minus = minus_shape;
    k_minus.gain = c_minus;
    Ok(KernelFactors { k_full: k_full.clone(), k_plus, k_minus, approx_error })
}

/// Write contour vertices and factor zeros/poles as `re,im,kind` rows.
pub fn write_debug_csv(factors: &KernelFactors, contour: &Contour, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "re,im,kind")?;
    let groups: [(&[Complex64], &str); 5] = [
        (factors.k_plus.poles(), "pole+"),
        (factors.k_minus.poles(), "pole-"),
        (factors.k_plus.zeros(), "zero+"),
        (factors.k_minus.zeros(), "zero-"),
        (contour.vertices(), "vertex"),
    ];
    for (points, kind) in groups {
        for p in points {
            writeln!(out, "{},{},{}", p.re, p.im, kind)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{dispersion_omega, lambda_of_z};
    use std::f64::consts::FRAC_PI_4;

    fn baseline() -> LatticeParams {
        dispersion_omega(0.5 * PI, FRAC_PI_4).unwrap()
    }

    #[test]
    fn special_angle_for_baseline() {
        let p = LatticeParams::new(1.49, 0.0).unwrap();
        let contour = build_contour(&p, 0.05, 720).unwrap();
        let theta = contour.special_points()[0].arg();
        assert!((theta.cos() + 0.1100).abs() < 1e-4);
        assert!((theta - 1.681).abs() < 2e-3);
    }

    #[test]
    fn contour_geometry() {
        let p = baseline();
        let c = build_contour(&p, 0.05, 720).unwrap();
        assert_eq!(c.winding_number(Complex64::new(0.0, 0.0)), 1);
        let theta = c.special_points()[0].arg();
        assert!((c.point(theta).norm() - 1.05).abs() < 1e-3);
        assert!((c.point(-theta).norm() - 1.0 / 1.05).abs() < 1e-3);
        for t in [0.1, 0.9, 2.7, -2.5] {
            assert!((c.point(-t) * c.point(t) - 1.0).norm() < 1e-14);
        }
        let on_circle = c
            .vertices()
            .iter()
            .filter(|z| c.special_points().iter().all(|s| (*z - s).norm() > 0.6))
            .all(|z| (z.norm() - 1.0).abs() < 1e-12);
        assert!(on_circle);
        assert!(build_contour(&p, 0.05, 100).is_err());
    }

    #[test]
    fn above_two_uses_r_zeros() {
        let p = LatticeParams::new(2.5, 0.0).unwrap();
        let c = build_contour(&p, 0.05, 720).unwrap();
        assert_eq!(c.special_points().len(), 2);
        let theta = c.special_points()[0].arg();
        assert!((2.0 * theta.cos() - (6.0 - 6.25)).abs() < 1e-12);
    }

    #[test]
    fn lambda_decays_on_contour_under_absorption() {
        let p = baseline().with_absorption(1e-6).unwrap();
        let c = build_contour(&p, 0.05, 720).unwrap();
        for &z in c.vertices() {
            assert!(lambda_of_z(z, &p).unwrap().norm() < 1.0);
        }
    }

    #[test]
    fn quadrature_integrates_analytic_functions() {
        let c = build_contour(&baseline(), 0.05, 720).unwrap();
        let q = c.quadrature(1024);
        let one_over_z: Complex64 = q.iter().map(|(z, w)| w / z).sum();
        assert!((one_over_z - 2.0 * PI * I).norm() < 1e-12);
        let z3: Complex64 = q.iter().map(|(z, w)| w * z.powi(3)).sum();
        assert!(z3.norm() < 1e-12);
    }

    #[test]
    fn barycentric_roots_match_hand_example() {
        // 1/(x-0) + 1/(x-2) vanishes at x = 1.
        let roots = barycentric_roots(
            &[Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)],
            &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
        );
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 1.0).norm() < 1e-12);
    }

    #[test]
    fn factorize_hand_built() {
        let r = |x: f64| Complex64::new(x, 0.0);
        let full = Zpk::new(r(3.0), vec![r(0.5), r(2.0)], vec![r(0.25), r(4.0)]).unwrap();
        let f = factorize(&full, 0.0).unwrap();
        assert_eq!(f.k_plus.zeros(), &[r(0.5)]);
        assert_eq!(f.k_plus.poles(), &[r(0.25)]);
        assert_eq!(f.k_minus.zeros(), &[r(2.0)]);
        assert_eq!(f.k_minus.poles(), &[r(4.0)]);
        for t in [0.1, 1.0, 2.2] {
            let z = Complex64::from_polar(1.0, t);
            assert!((f.k_plus.eval(z) * f.k_minus.eval(z) - full.eval(z)).norm() < 1e-13);
            assert!((f.k_plus.eval(z) - f.k_minus.eval(z.inv())).norm() < 1e-13);
        }
        let bad = Zpk::new(r(1.0), vec![Complex64::from_polar(1.0, 0.3)], vec![r(0.2)]).unwrap();
        assert!(matches!(factorize(&bad, 0.0), Err(Error::CircleStraddle { .. })));
    }

    #[test]
    fn baseline_fit_and_factors() {
        let p = baseline();
        let c = build_contour(&p, 0.05, 720).unwrap();
        let fit = approximate_kernel(&p, &c, 1e-7).unwrap();
        assert!(fit.approx_error <= 1e-7);
        let f = factorize(&fit.zpk, fit.approx_error).unwrap();
        for z in c.samples(500, 0.21) {
            assert!((fit.zpk.eval(z) - fit.zpk.eval(z.inv())).norm() < 1e-6);
            assert!((f.k_plus.eval(z) * f.k_minus.eval(z) - fit.zpk.eval(z)).norm() < 1e-12);
            assert!((f.k_plus.eval(z) - f.k_minus.eval(z.inv())).norm() < 1e-10);
        }
        assert!((f.c3() - f.c4()).norm() < 1e-12);
    }
}

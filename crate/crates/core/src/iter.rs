//! Iterative Wiener-Hopf engine.
//!
//! The crack row is cut at the edge nodes `m_1 = 0 < m_2 < ... < m_J` into
//! segments; segment `l` lies right of `m_l` (segment 0 left of `m_1`). Crack
//! segments hold the nodes strictly between their edges, intact segments
//! include their edges. The transform of the row satisfies
//! `sum_seg E_seg(z) U_seg(z) = f(z)` with `E = K` on cracks and `E = 1` on
//! intact segments. Row `l` of the matrix problem is this identity multiplied
//! by `z^{m_l}`, written in terms of `U_-^(q)` (segment `q - 1` relative to
//! `m_q`) for segments left of `m_l` and `U_+^(p)` (segment `p` relative to
//! `m_p`) for the rest. Each row is a scalar Wiener-Hopf equation in the pair
//! `(U_-^(l), U_+^(l))`, the remaining unknowns being taken from the latest
//! iterate.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Contour, KernelFactors};
use crate::lattice::{FaceForcing, IncidentWave};
use crate::rfun::{LaurentPF, LaurentPoly, Zpk};

/// Default radial offset of the forcing pole for semi-infinite cracks.
pub const DEFAULT_POLE_OFFSET: f64 = 1e-4;
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 30;

/// Collinear cracks along the row boundary between `n = -1` and `n = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrackLayout {
    edges: Vec<i64>,
    left_semi_infinite: bool,
    right_semi_infinite: bool,
}

impl CrackLayout {
    /// Layout from its edge nodes. Segment types alternate starting from the
    /// left, which is a crack iff `left_semi_infinite`.
    pub fn new(edges: Vec<i64>, left_semi_infinite: bool, right_semi_infinite: bool) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidLayout("no crack edges".into()));
        }
        if edges[0] != 0 {
            return Err(Error::InvalidLayout(format!("first edge must be 0, got {}", edges[0])));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidLayout("edges must be strictly increasing".into()));
        }
        let last_is_crack = (edges.len() % 2 == 1) != left_semi_infinite;
        if last_is_crack != right_semi_infinite {
            return Err(Error::InvalidLayout(
                "edge count is inconsistent with the semi-infinite flags".into(),
            ));
        }
        let layout = Self { edges, left_semi_infinite, right_semi_infinite };
        for seg in 1..layout.edges.len() {
            if layout.is_crack_segment(seg) && layout.edges[seg] - layout.edges[seg - 1] < 2 {
                return Err(Error::InvalidLayout(format!(
                    "crack between edges {} and {} has no broken link",
                    layout.edges[seg - 1],
                    layout.edges[seg]
                )));
            }
        }
        Ok(layout)
    }

    /// Finite cracks occupying `(start, end)` edge pairs.
    pub fn finite(cracks: &[(i64, i64)]) -> Result<Self> {
        let edges = cracks.iter().flat_map(|&(a, b)| [a, b]).collect();
        Self::new(edges, false, false)
    }

    /// Single finite crack of length `l` (edges `0` and `l`).
    pub fn single(l: i64) -> Result<Self> {
        Self::finite(&[(0, l)])
    }

    pub fn edges(&self) -> &[i64] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn left_semi_infinite(&self) -> bool {
        self.left_semi_infinite
    }

    pub fn right_semi_infinite(&self) -> bool {
        self.right_semi_infinite
    }

    /// Whether segment `seg` (0 = left of the first edge) is a crack.
    pub fn is_crack_segment(&self, seg: usize) -> bool {
        (seg % 2 == 1) != self.left_semi_infinite
    }

    /// Segment containing node `m`; edges belong to both neighbours, report
    /// the right one.
    fn segment_of(&self, m: i64) -> usize {
        self.edges.iter().take_while(|&&e| e <= m).count()
    }

    /// Whether the vertical link at column `m` is broken.
    pub fn is_broken(&self, m: i64) -> bool {
        if self.edges.contains(&m) {
            return false;
        }
        self.is_crack_segment(self.segment_of(m))
    }

    /// Rightmost finite edge, the horizontal span of the layout.
    pub fn span(&self) -> i64 {
        *self.edges.last().expect("nonempty")
    }
}

/// Iteration sweep order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Rows `1..=J` every iteration.
    ForwardForward,
    /// Rows `1..=J` then `J-1..=1`.
    ForwardBackward,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::ForwardForward => "forward_forward",
            Strategy::ForwardBackward => "forward_backward",
        }
    }

    fn rows(self, count: usize) -> Vec<usize> {
        let mut rows: Vec<usize> = (0..count).collect();
        if self == Strategy::ForwardBackward && count > 1 {
            rows.extend((0..count - 1).rev());
        }
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterationConfig {
    pub strategy: Strategy,
    pub max_iter: usize,
    pub spectral_tol: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::ForwardForward,
            max_iter: DEFAULT_MAX_ITER,
            spectral_tol: DEFAULT_SPECTRAL_TOL,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.spectral_tol > 0.0) {
            return Err(Error::InvalidParameter("spectral_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Unknown plus/minus functions after some number of sweeps.
///
/// Index `l` (0-based) refers to edge `m_{l+1}`. `c1` holds the diagnostic
/// constants of rows with a crack to the right, `c2` the Liouville constants
/// of rows with an intact segment to the right; entries of the other kind
/// are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub u_plus: Vec<LaurentPF>,
    pub u_minus: Vec<LaurentPF>,
    pub c1: Vec<Complex64>,
    pub c2: Vec<Complex64>,
    pub iteration: usize,
    pub history: Vec<f64>,
    /// Full transform at the contour vertices; empty for the zero state.
    contour_values: Vec<Complex64>,
}

impl SpectralState {
    pub fn zero(layout: &CrackLayout) -> Self {
        let j = layout.edge_count();
        Self {
            u_plus: vec![LaurentPF::zero(); j],
            u_minus: vec![LaurentPF::zero(); j],
            c1: vec![Complex64::new(0.0, 0.0); j],
            c2: vec![Complex64::new(0.0, 0.0); j],
            iteration: 0,
            history: Vec::new(),
            contour_values: Vec::new(),
        }
    }

    /// `U(z) = U_-^(1)(z) + sum_l z^{-m_l} U_+^(l)(z)` evaluated pointwise.
    pub fn eval_full(&self, layout: &CrackLayout, z: Complex64) -> Complex64 {
        let mut sum = self.u_minus[0].eval_unchecked(z);
        for (u, &m) in self.u_plus.iter().zip(layout.edges()) {
            sum += z.powi(-m as i32) * u.eval_unchecked(z);
        }
        sum
    }

    fn sample_contour(&self, layout: &CrackLayout, contour: &Contour) -> Vec<Complex64> {
        contour.vertices().par_iter().map(|&z| self.eval_full(layout, z)).collect()
    }
}

/// Crack-face forcing, regularized for semi-infinite cracks.
///
/// A semi-infinite crack turns the forcing sum into a geometric series with a
/// pole at `z_p`. On the left the pole must lie outside the unit circle,
/// which requires `cos(phi_in) > 0`; on the right it must lie inside, which
/// requires `cos(phi_in) < 0`. The pole is moved radially off the circle by
/// `pole_offset`.
pub fn effective_forcing(layout: &CrackLayout, wave: &IncidentWave, pole_offset: f64) -> Result<FaceForcing> {
    let base = wave.face_forcing();
    let semi = layout.left_semi_infinite() || layout.right_semi_infinite();
    if !semi {
        return Ok(base);
    }
    if layout.left_semi_infinite() && layout.right_semi_infinite() {
        return Err(Error::SemiInfiniteUnsupportedAngle(
            "cracks unbounded on both sides leave no forcing side".into(),
        ));
    }
    if !(pole_offset > 0.0) {
        return Err(Error::SemiInfiniteUnsupportedAngle(
            "a semi-infinite crack needs a positive pole offset".into(),
        ));
    }
    let cos_phi = wave.phi_in.cos();
    if layout.left_semi_infinite() && cos_phi <= 1e-12 {
        return Err(Error::SemiInfiniteUnsupportedAngle(format!(
            "left semi-infinite crack needs cos(phi_in) > 0, got {cos_phi}"
        )));
    }
    if layout.right_semi_infinite() && cos_phi >= -1e-12 {
        return Err(Error::SemiInfiniteUnsupportedAngle(format!(
            "right semi-infinite crack needs cos(phi_in) < 0, got {cos_phi}"
        )));
    }
    let scale = if layout.left_semi_infinite() { 1.0 + pole_offset } else { 1.0 / (1.0 + pole_offset) };
    Ok(base.with_radius_scale(scale))
}

/// `S(z) = sum over broken columns of (z_p / z)^m`.
fn crack_sum(layout: &CrackLayout, forcing: &FaceForcing) -> Result<LaurentPF> {
    let z_p = forcing.z_p();
    let edges = layout.edges();
    let mut sum = LaurentPF::zero();
    for seg in 0..=edges.len() {
        if !layout.is_crack_segment(seg) {
            continue;
        }
        if seg == 0 {
            // sum_{m <= e-1} (z_p/z)^m = -z_p^e z^{1-e} / (z - z_p)
            let e = edges[0];
            let r = -(forcing.log_z_p * e as f64).exp();
            sum = sum.add(&LaurentPF::pole_term(z_p, LaurentPoly::monomial(1 - e, r)));
        } else if seg == edges.len() {
            // sum_{m >= e+1} (z_p/z)^m = z_p^{e+1} z^{-e} / (z - z_p)
            let e = edges[seg - 1];
            let r = (forcing.log_z_p * (e + 1) as f64).exp();
            sum = sum.add(&LaurentPF::pole_term(z_p, LaurentPoly::monomial(-e, r)));
        } else {
            // sum_{m=a}^{b} (z_p/z)^m = (M(z) - M(z_p)) / (z - z_p),
            // M(z) = z_p^a z^{1-a} - z_p^{b+1} z^{-b}
            let (a, b) = (edges[seg - 1] + 1, edges[seg] - 1);
            let pow = |m: i64| (forcing.log_z_p * m as f64).exp();
            let numerator = LaurentPoly::from_terms(vec![(1 - a, pow(a)), (-b, -pow(b + 1))]);
            sum = sum.add(&LaurentPF::difference_quotient(z_p, &numerator)?);
        }
    }
    Ok(sum)
}

/// `f(z) = (jump / 2) (K(z) - 1) S(z)`.
pub fn forcing_f_n(layout: &CrackLayout, forcing: &FaceForcing, k_full: &Zpk) -> Result<LaurentPF> {
    let s = crack_sum(layout, forcing)?.scale(0.5 * forcing.jump);
    Ok(s.mul_zpk(k_full)?.sub(&s))
}

/// Row selector for `assemble_ftilde`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Everything fixed during the iteration.
#[derive(Debug, Clone)]
pub struct WhProblem {
    pub layout: CrackLayout,
    pub factors: KernelFactors,
    pub forcing: LaurentPF,
    pub contour: Contour,
    inv_k_plus: Zpk,
    inv_k_minus: Zpk,
}

impl WhProblem {
    pub fn new(layout: CrackLayout, factors: KernelFactors, forcing: LaurentPF, contour: Contour) -> Self {
        let inv_k_plus = factors.k_plus.reciprocal();
        let inv_k_minus = factors.k_minus.reciprocal();
        Self { layout, factors, forcing, contour, inv_k_plus, inv_k_minus }
    }

    /// `E_seg U`: multiplication by `K` on crack segments.
    fn weighted(&self, seg: usize, u: &LaurentPF) -> Result<LaurentPF> {
        if self.layout.is_crack_segment(seg) {
            u.mul_zpk(&self.factors.k_full)
        } else {
            Ok(u.clone())
        }
    }
}

/// Right-hand side of row `ell` (0-based): `z^{m_l} f` minus every
/// off-diagonal term, using the unknowns currently stored in `state`.
///
/// The sweep direction does not change the formula; under Gauss-Seidel
/// updating the state already holds the latest iterate of each unknown.
pub fn assemble_ftilde(ell: usize, state: &SpectralState, problem: &WhProblem, _direction: Direction) -> Result<LaurentPF> {
    let edges = problem.layout.edges();
    let m_l = edges[ell];
    let mut rhs = problem.forcing.mul_monomial(m_l);
    for q in 0..ell {
        let u = &state.u_minus[q];
        if !u.is_zero() {
            rhs = rhs.sub(&problem.weighted(q, u)?.mul_monomial(m_l - edges[q]));
        }
    }
    for p in ell + 1..edges.len() {
        let u = &state.u_plus[p];
        if !u.is_zero() {
            rhs = rhs.sub(&problem.weighted(p + 1, u)?.mul_monomial(m_l - edges[p]));
        }
    }
    Ok(rhs)
}

/// Solve `U_- + K U_+ = F` (intact left, crack right) returning
/// `(U_+, U_-, C1)` with `C1 = (F / K^-)_-(0)`.
pub fn solve_odd(f: &LaurentPF, factors: &KernelFactors) -> Result<(LaurentPF, LaurentPF, Complex64)> {
    solve_odd_with(f, factors, &factors.k_plus.reciprocal(), &factors.k_minus.reciprocal())
}

fn solve_odd_with(
    f: &LaurentPF,
    factors: &KernelFactors,
    inv_k_plus: &Zpk,
    inv_k_minus: &Zpk,
) -> Result<(LaurentPF, LaurentPF, Complex64)> {
    if f.is_zero() {
        return Ok((LaurentPF::zero(), LaurentPF::zero(), Complex64::new(0.0, 0.0)));
    }
    let (g_minus, g_plus) = f.mul_zpk(inv_k_minus)?.additive_split()?;
    let c1 = g_minus.eval_at_origin()?;
    let u_plus = g_plus.mul_zpk(inv_k_plus)?;
    let u_minus = g_minus.mul_zpk(&factors.k_minus)?;
    Ok((u_plus, u_minus, c1))
}

/// Solve `K U_- + U_+ = F` (crack left, intact right) with `U_-(0) = 0`,
/// returning `(U_+, U_-, C2)` with `C2 = (F / K^+)_-(0)`.
pub fn solve_even(f: &LaurentPF, factors: &KernelFactors) -> Result<(LaurentPF, LaurentPF, Complex64)> {
    solve_even_with(f, factors, &factors.k_plus.reciprocal(), &factors.k_minus.reciprocal())
}

fn solve_even_with(
    f: &LaurentPF,
    factors: &KernelFactors,
    inv_k_plus: &Zpk,
    inv_k_minus: &Zpk,
) -> Result<(LaurentPF, LaurentPF, Complex64)> {
    if f.is_zero() {
        return Ok((LaurentPF::zero(), LaurentPF::zero(), Complex64::new(0.0, 0.0)));
    }
    let (g_minus, g_plus) = f.mul_zpk(inv_k_plus)?.additive_split()?;
    let c2 = g_minus.eval_at_origin()?;
    let shift = LaurentPF::constant(c2);
    let u_plus = g_plus.add(&shift).mul_zpk(&factors.k_plus)?;
    let u_minus = g_minus.sub(&shift).mul_zpk(inv_k_minus)?;
    Ok((u_plus, u_minus, c2))
}

/// One full sweep in the configured order; appends the spectral difference
/// to the previous iterate.
pub fn iterate(state: &SpectralState, config: &IterationConfig, problem: &WhProblem) -> Result<SpectralState> {
    let mut next = state.clone();
    let count = problem.layout.edge_count();
    for (step, ell) in config.strategy.rows(count).into_iter().enumerate() {
        let direction = if step < count { Direction::Forward } else { Direction::Backward };
        let rhs = assemble_ftilde(ell, &next, problem, direction)?;
        if problem.layout.is_crack_segment(ell + 1) {
            let (up, um, c1) = solve_odd_with(&rhs, &problem.factors, &problem.inv_k_plus, &problem.inv_k_minus)?;
            next.u_plus[ell] = up;
            next.u_minus[ell] = um;
            next.c1[ell] = c1;
        } else {
            let (up, um, c2) = solve_even_with(&rhs, &problem.factors, &problem.inv_k_plus, &problem.inv_k_minus)?;
            next.u_plus[ell] = up;
            next.u_minus[ell] = um;
            next.c2[ell] = c2;
        }
    }
    next.iteration += 1;
    next.contour_values = next.sample_contour(&problem.layout, &problem.contour);
    let diff = if state.contour_values.len() == next.contour_values.len() {
        max_distance(&state.contour_values, &next.contour_values)
    } else {
        next.contour_values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    };
    next.history.push(diff);
    Ok(next)
}

/// Iterate from zero until the spectral difference drops below tolerance or
/// `max_iter` sweeps are done. Every intermediate state is returned.
pub fn solve(problem: &WhProblem, config: &IterationConfig) -> Result<Vec<SpectralState>> {
    config.validate()?;
    let mut states = vec![SpectralState::zero(&problem.layout)];
    for _ in 0..config.max_iter {
        let next = iterate(states.last().expect("nonempty"), config, problem)?;
        let diff = *next.history.last().expect("pushed");
        states.push(next);
        if diff < config.spectral_tol {
            break;
        }
    }
    Ok(states)
}

/// `max |U_a(z) - U_b(z)|` over the contour vertices.
pub fn spectral_diff(a: &SpectralState, b: &SpectralState, layout: &CrackLayout, contour: &Contour) -> f64 {
    max_distance(&a.sample_contour(layout, contour), &b.sample_contour(layout, contour))
}

fn max_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Write `iter,max_spectral_diff,strategy` rows.
pub fn write_convergence_csv(history: &[f64], strategy: Strategy, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "iter,max_spectral_diff,strategy")?;
    for (i, d) in history.iter().enumerate() {
        writeln!(out, "{},{:e},{}", i + 1, d, strategy.name())?;
    }
    Ok(())
}

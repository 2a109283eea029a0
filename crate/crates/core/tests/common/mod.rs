#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_4, PI};

use lattice_wh::iter::{effective_forcing, forcing_f_n, solve, CrackLayout, IterationConfig, SpectralState, Strategy, WhProblem};
use lattice_wh::kernel::{approximate_kernel, build_contour, factorize, Contour, KernelFactors, KernelFit};
use lattice_wh::lattice::{dispersion_omega, IncidentWave, LatticeParams};

pub struct Baseline {
    pub params: LatticeParams,
    pub wave: IncidentWave,
    pub contour: Contour,
    pub fit: KernelFit,
    pub factors: KernelFactors,
}

/// `k = pi/2`, `phi_in = pi/4`, default contour and tolerance.
pub fn baseline() -> Baseline {
    let wave = IncidentWave::new(0.5 * PI, FRAC_PI_4).unwrap();
    let params = dispersion_omega(wave.k, wave.phi_in).unwrap();
    let contour = build_contour(&params, 0.05, 720).unwrap();
    let fit = approximate_kernel(&params, &contour, 1e-7).unwrap();
    let factors = factorize(&fit.zpk, fit.approx_error).unwrap();
    Baseline { params, wave, contour, fit, factors }
}

impl Baseline {
    pub fn problem(&self, layout: &CrackLayout) -> WhProblem {
        let forcing = effective_forcing(layout, &self.wave, 1e-4).unwrap();
        let f = forcing_f_n(layout, &forcing, &self.fit.zpk).unwrap();
        WhProblem::new(layout.clone(), self.factors.clone(), f, self.contour.clone())
    }

    pub fn solve(&self, layout: &CrackLayout, strategy: Strategy, max_iter: usize, tol: f64) -> Vec<SpectralState> {
        let cfg = IterationConfig { strategy, max_iter, spectral_tol: tol };
        solve(&self.problem(layout), &cfg).unwrap()
    }
}

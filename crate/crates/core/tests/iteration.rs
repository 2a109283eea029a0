mod common;

use lattice_wh::iter::{
    assemble_ftilde, effective_forcing, forcing_f_n, iterate, solve, solve_even, solve_odd, spectral_diff, CrackLayout,
    Direction, IterationConfig, SpectralState, Strategy,
};
use lattice_wh::lattice::IncidentWave;
use lattice_wh::rfun::{LaurentPF, Zpk};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn forcing_matches_pointwise_product() {
    let b = common::baseline();
    let layout = CrackLayout::single(10).unwrap();
    let forcing = b.wave.face_forcing();
    let f = forcing_f_n(&layout, &forcing, &b.fit.zpk).unwrap();
    for z in b.contour.samples(20, 0.3) {
        let sum: Complex64 = (1..10).map(|m| (forcing.z_p() / z).powi(m)).sum();
        let expected = 0.5 * (b.fit.zpk.eval(z) - 1.0) * forcing.jump * sum;
        assert!((f.eval(z).unwrap() - expected).norm() < 1e-10);
    }
}

#[test]
fn grazing_incidence_has_no_forcing() {
    let b = common::baseline();
    let wave = IncidentWave::new(1.0, 0.0).unwrap();
    let layout = CrackLayout::single(6).unwrap();
    let f = forcing_f_n(&layout, &effective_forcing(&layout, &wave, 1e-4).unwrap(), &b.fit.zpk).unwrap();
    assert!(f.is_zero());
}

#[test]
fn first_right_hand_side_is_shifted_forcing() {
    let b = common::baseline();
    let layout = CrackLayout::finite(&[(0, 10), (13, 28)]).unwrap();
    let problem = b.problem(&layout);
    let zero = SpectralState::zero(&layout);
    for (ell, m) in [(0, 0), (2, 13)] {
        let rhs = assemble_ftilde(ell, &zero, &problem, Direction::Forward).unwrap();
        let expected = problem.forcing.mul_monomial(m);
        for z in b.contour.samples(10, 0.2) {
            assert!((rhs.eval_unchecked(z) - expected.eval_unchecked(z)).norm() < 1e-12);
        }
    }
}

#[test]
fn scalar_equations_hold_after_solves() {
    let b = common::baseline();
    let layout = CrackLayout::single(10).unwrap();
    let problem = b.problem(&layout);
    let state = SpectralState::zero(&layout);
    let f = assemble_ftilde(0, &state, &problem, Direction::Forward).unwrap();
    let (up, um, _) = solve_odd(&f, &b.factors).unwrap();
    for z in b.contour.samples(50, 0.45) {
        let lhs = um.eval_unchecked(z) + b.fit.zpk.eval(z) * up.eval_unchecked(z);
        let rhs = f.eval_unchecked(z);
        assert!((lhs - rhs).norm() <= 1e-9 * rhs.norm().max(1.0));
    }
    let (up, um, _) = solve_even(&f, &b.factors).unwrap();
    for z in b.contour.samples(50, 0.45) {
        let lhs = b.fit.zpk.eval(z) * um.eval_unchecked(z) + up.eval_unchecked(z);
        let rhs = f.eval_unchecked(z);
        assert!((lhs - rhs).norm() <= 1e-9 * rhs.norm().max(1.0));
    }
    for p in up.poles() {
        assert!(p.norm() < 1.0);
    }
    for p in um.poles() {
        assert!(p.norm() > 1.0);
    }
    assert!(um.eval_at_origin().unwrap().norm() < 1e-12);
}

#[test]
fn zero_right_hand_sides() {
    let b = common::baseline();
    let (up, um, c1) = solve_odd(&LaurentPF::zero(), &b.factors).unwrap();
    assert!(up.is_zero() && um.is_zero() && c1 == c(0.0, 0.0));
    let (up, um, c2) = solve_even(&LaurentPF::zero(), &b.factors).unwrap();
    assert!(up.is_zero() && um.is_zero() && c2 == c(0.0, 0.0));
}

#[test]
fn even_constant_is_minus_part_at_origin() {
    // With unit factors (F / K+)_- = 3 + 1/(z - 2), whose value at 0 is 2.5.
    let one = Zpk::constant(c(1.0, 0.0));
    let factors = lattice_wh::kernel::factorize(&one, 0.0).unwrap();
    let f = LaurentPF::constant(c(3.0, 0.0)).add(&LaurentPF::simple_pole(c(2.0, 0.0), c(1.0, 0.0)));
    let (_, _, c2) = solve_even(&f, &factors).unwrap();
    assert!((c2 - c(2.5, 0.0)).norm() < 1e-14);
}

#[test]
fn single_crack_history_decreases() {
    let b = common::baseline();
    let states = b.solve(&CrackLayout::single(10).unwrap(), Strategy::ForwardForward, 10, 1e-16);
    let h = &states.last().unwrap().history;
    for w in h[..8].windows(2) {
        assert!(w[1] < w[0], "{h:?}");
    }
    assert!(h.iter().take(10).any(|&d| d <= 1e-10), "{h:?}");
    let five_six = spectral_diff(&states[5], &states[6], &CrackLayout::single(10).unwrap(), &b.contour);
    assert!(five_six < 1e-6, "{five_six:e}");
}

#[test]
fn two_cracks_converge_slower() {
    let b = common::baseline();
    let single = b.solve(&CrackLayout::single(10).unwrap(), Strategy::ForwardForward, 12, 1e-16);
    let double = b.solve(&CrackLayout::finite(&[(0, 10), (13, 28)]).unwrap(), Strategy::ForwardForward, 12, 1e-16);
    let (hs, hd) = (&single.last().unwrap().history, &double.last().unwrap().history);
    for j in 1..8 {
        assert!(hd[j] > hs[j], "iteration {}: {:e} vs {:e}", j + 1, hd[j], hs[j]);
    }
}

#[test]
fn zero_incidence_keeps_state_zero() {
    let b = common::baseline();
    let layout = CrackLayout::single(8).unwrap();
    let wave = IncidentWave::new(1.0, 0.0).unwrap();
    let forcing = effective_forcing(&layout, &wave, 1e-4).unwrap();
    let f = forcing_f_n(&layout, &forcing, &b.fit.zpk).unwrap();
    let problem = lattice_wh::iter::WhProblem::new(layout.clone(), b.factors.clone(), f, b.contour.clone());
    let cfg = IterationConfig { strategy: Strategy::ForwardForward, max_iter: 3, spectral_tol: 1e-30 };
    let states = solve(&problem, &cfg).unwrap();
    let last = states.last().unwrap();
    assert!(last.history.iter().all(|&d| d == 0.0));
    assert!(last.u_plus.iter().chain(&last.u_minus).all(LaurentPF::is_zero));
}

#[test]
fn spectral_diff_examples() {
    let b = common::baseline();
    let layout = CrackLayout::single(10).unwrap();
    let states = b.solve(&layout, Strategy::ForwardForward, 3, 1e-16);
    let zero = SpectralState::zero(&layout);
    assert_eq!(spectral_diff(&states[2], &states[2], &layout, &b.contour), 0.0);
    let max_u = b
        .contour
        .vertices()
        .iter()
        .map(|&z| states[2].eval_full(&layout, z).norm())
        .fold(0.0, f64::max);
    assert!((spectral_diff(&states[2], &zero, &layout, &b.contour) - max_u).abs() < 1e-14);
}

#[test]
fn fixed_point_is_stable() {
    let b = common::baseline();
    let layout = CrackLayout::single(10).unwrap();
    let problem = b.problem(&layout);
    let cfg = IterationConfig { strategy: Strategy::ForwardForward, max_iter: 20, spectral_tol: 1e-12 };
    let states = solve(&problem, &cfg).unwrap();
    let last = states.last().unwrap();
    let next = iterate(last, &cfg, &problem).unwrap();
    assert!(*next.history.last().unwrap() <= 10.0 * 1e-12);
}

#[test]
fn strategies_reach_the_same_solution() {
    let b = common::baseline();
    let layout = CrackLayout::finite(&[(0, 10), (13, 28)]).unwrap();
    let ff = b.solve(&layout, Strategy::ForwardForward, 25, 1e-12);
    let fb = b.solve(&layout, Strategy::ForwardBackward, 25, 1e-12);
    let d = spectral_diff(ff.last().unwrap(), fb.last().unwrap(), &layout, &b.contour);
    assert!(d < 1e-9, "{d:e}");
}

#[test]
fn semi_infinite_layout_converges() {
    let b = common::baseline();
    let layout = CrackLayout::new(vec![0, 10, 20], true, false).unwrap();
    let states = b.solve(&layout, Strategy::ForwardForward, 20, 1e-10);
    assert!(*states.last().unwrap().history.last().unwrap() < 1e-10);
}

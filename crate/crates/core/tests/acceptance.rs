//! One line per acceptance criterion; the target fails if any of them does.

use std::f64::consts::{FRAC_PI_4, PI};
use std::time::Instant;

use lattice_wh::checks::{antisymmetry_defect, factor_symmetry_error, greens_stencil, helmholtz_residuals};
use lattice_wh::field::assemble_u;
use lattice_wh::greens::{greens, greens_double, GreensTable};
use lattice_wh::iter::{solve, CrackLayout, IterationConfig, Strategy};
use lattice_wh::kernel::{approximate_kernel, build_contour, factorize};
use lattice_wh::lattice::{dispersion_omega, kernel_k_of_z, LatticeParams};
use lattice_wh::scenario::{
    benchmark, invariant_suite, kernel_stage, oracle_error, run, wh_problem, Prepared, ScenarioConfig, DEFAULT_SEED,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn baseline() -> Prepared {
    ScenarioConfig::single_crack(10).prepare().unwrap()
}

fn history(prepared: &Prepared, layout: &CrackLayout, max_iter: usize) -> Vec<f64> {
    let kernel = kernel_stage(prepared).unwrap();
    let problem = wh_problem(prepared, &kernel, layout).unwrap();
    let cfg = IterationConfig { strategy: Strategy::ForwardForward, max_iter, spectral_tol: 1e-30 };
    solve(&problem, &cfg).unwrap().last().unwrap().history.clone()
}

fn dispersion() -> Verdict {
    let omega = dispersion_omega(0.5 * PI, FRAC_PI_4).unwrap().omega().re;
    verdict((omega - 1.4913).abs() <= 0.005, format!("omega = {omega:.6}"))
}

fn kernel_floor() -> Verdict {
    let params = dispersion_omega(0.5 * PI, FRAC_PI_4).unwrap();
    let contour = build_contour(&params, 0.05, 720).unwrap();
    let fit = approximate_kernel(&params, &contour, 1e-7).unwrap();
    let factors = factorize(&fit.zpk, fit.approx_error).unwrap();
    let out_of_sample = contour
        .samples(2000, 0.377)
        .into_iter()
        .map(|z| (fit.zpk.eval(z) - kernel_k_of_z(z, &params).unwrap()).norm())
        .fold(0.0, f64::max);
    let symmetry = factor_symmetry_error(&factors, &contour);
    verdict(
        out_of_sample <= 1e-7 && symmetry <= 1e-6,
        format!("out-of-sample {out_of_sample:.2e}, factor symmetry {symmetry:.2e}"),
    )
}

fn single_crack_convergence() -> Verdict {
    let prepared = baseline();
    let h = history(&prepared, &prepared.layout, 10);
    let first_below = h.iter().position(|&d| d < 1e-10);
    let monotone = match first_below {
        Some(i) => h[..=i].windows(2).all(|w| w[1] < w[0]),
        None => false,
    };
    verdict(
        monotone && first_below.is_some(),
        format!("below 1e-10 after {} iterations, monotone {monotone}", first_below.map_or(0, |i| i + 1)),
    )
}

fn oracle_agreement() -> Verdict {
    let mut cfg = ScenarioConfig::single_crack(10);
    cfg.validation.oracle = true;
    let prepared = cfg.prepare().unwrap();
    let kernel = kernel_stage(&prepared).unwrap();
    let problem = wh_problem(&prepared, &kernel, &prepared.layout).unwrap();
    let iteration = IterationConfig { strategy: Strategy::ForwardForward, max_iter: 5, spectral_tol: 1e-30 };
    let states = solve(&problem, &iteration).unwrap();
    let u = assemble_u(states.last().unwrap(), &prepared.layout);
    let error = oracle_error(&prepared, &kernel.contour, &u).unwrap();
    verdict(error <= 1e-5, format!("max error over D after 5 iterations {error:.2e}"))
}

fn two_crack_convergence() -> Verdict {
    let prepared = baseline();
    let single = history(&prepared, &CrackLayout::single(10).unwrap(), 20);
    let double = history(&prepared, &CrackLayout::finite(&[(0, 10), (13, 28)]).unwrap(), 20);
    let reached = double.iter().position(|&d| d < 1e-8);
    // Compare while the single crack is above its quadrature floor.
    let slower = (1..single.len().min(double.len()))
        .take_while(|&j| single[j] > 1e-13)
        .all(|j| double[j] > single[j]);
    verdict(
        reached.is_some() && slower,
        format!("below 1e-8 after {} iterations, slower from index 2 {slower}", reached.map_or(0, |i| i + 1)),
    )
}

fn length_independence() -> Verdict {
    let rows = benchmark(&ScenarioConfig::default(), &[10, 20, 40, 80]).unwrap();
    let iters: Vec<Option<usize>> = rows.iter().map(|r| r.iters).collect();
    let non_increasing = iters.iter().all(Option::is_some) && iters.windows(2).all(|w| w[1] <= w[0]);
    let times: Vec<f64> = rows.iter().map(|r| r.iter_time).collect();
    let ratio = times.iter().copied().fold(0.0, f64::max) / times.iter().copied().fold(f64::INFINITY, f64::min);
    let growth = rows[3].oracle_time / rows[0].oracle_time;
    verdict(
        non_increasing && ratio < 2.0 && growth > 8.0,
        format!(
            "iters {:?}, per-iteration time ratio {ratio:.2}, oracle time ratio L=80/L=10 {growth:.1}",
            iters.iter().map(|i| i.unwrap_or(0)).collect::<Vec<_>>()
        ),
    )
}

fn invariants() -> Verdict {
    let prepared = baseline();
    let outcome = run(&prepared).unwrap();
    let checks = invariant_suite(&prepared, &outcome, DEFAULT_SEED).unwrap();
    let wanted = ["helmholtz_residual_off_crack", "boundary_residual_on_faces", "antisymmetry", "jump_matches_row"];
    let picked: Vec<_> = checks.iter().filter(|c| wanted.contains(&c.name.as_str())).collect();
    let detail = picked.iter().map(|c| format!("{} {:.2e}", c.name, c.value)).collect::<Vec<_>>().join(", ");
    verdict(picked.len() == wanted.len() && picked.iter().all(|c| c.passed), detail)
}

fn greens_self_test() -> Verdict {
    let params = dispersion_omega(0.5 * PI, FRAC_PI_4).unwrap();
    let table = GreensTable::new(params);
    let origin = (greens_stencil(0, 0, &table).unwrap() - 1.0).norm();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut off = 0.0f64;
    let mut drawn = 0;
    while drawn < 50 {
        let (m, n) = (rng.random_range(-30..=30), rng.random_range(-30..=30));
        if (m, n) == (0, 0) {
            continue;
        }
        off = off.max(greens_stencil(m, n, &table).unwrap().norm());
        drawn += 1;
    }
    let absorbing = LatticeParams::new(params.omega().re, 1e-3).unwrap();
    let agreement = [(0, 0), (1, 0), (2, 3), (-4, 1), (6, -5)]
        .iter()
        .map(|&(m, n)| (greens(m, n, &absorbing).unwrap() - greens_double(m, n, &absorbing, 1e-9).unwrap()).norm())
        .fold(0.0, f64::max);
    verdict(
        origin <= 1e-8 && off <= 1e-8 && agreement <= 1e-5,
        format!("origin {origin:.2e}, 50 random nodes {off:.2e}, single vs double {agreement:.2e}"),
    )
}

fn semi_infinite_scenario() -> Verdict {
    let mut cfg = ScenarioConfig::single_crack(5);
    cfg.cracks = vec![[None, Some(0)], [Some(3), Some(8)]];
    cfg.semi_inf_left = true;
    let prepared = cfg.prepare().unwrap();
    let outcome = run(&prepared).unwrap();
    let (off, on) = helmholtz_residuals(&outcome.field, &prepared.params, &prepared.layout, &prepared.forcing).unwrap();
    let antisymmetry = antisymmetry_defect(&outcome.field);
    let reflected = outcome
        .field
        .nodes()
        .filter(|&(m, n)| m <= -5 && n >= 1)
        .map(|(m, n)| outcome.field.get(m, n).unwrap().norm())
        .fold(0.0, f64::max);
    verdict(
        outcome.summary.converged && off <= 1e-6 && on <= 1e-6 && antisymmetry == 0.0 && reflected > 0.1,
        format!("residuals {off:.2e} / {on:.2e}, max |u| in reflection quadrant {reflected:.3}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("dispersion reproduction", dispersion),
        ("kernel approximation floor", kernel_floor),
        ("single-crack convergence", single_crack_convergence),
        ("oracle agreement", oracle_agreement),
        ("two-crack convergence", two_crack_convergence),
        ("length independence", length_independence),
        ("physics invariant suite", invariants),
        ("Green's function self-test", greens_self_test),
        ("semi-infinite plus finite scenario", semi_infinite_scenario),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let status = if v.passed { "PASS" } else { "FAIL" };
        println!("criterion {}: {status} {name}: {} ({:.2} s)", i + 1, v.detail, start.elapsed().as_secs_f64());
        if !v.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

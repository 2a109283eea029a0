//! Scenario configuration, the end-to-end pipeline and its file outputs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checks::{antisymmetry_defect, factor_symmetry_error, greens_stencil, helmholtz_residuals};
use crate::error::{Error, Result};
use crate::field::{assemble_u, reconstruct, row_values, write_field_csv, write_heatmap_png, GridExtent, HeatmapKind, ReconstructionPlan};
use crate::greens::{compare, exact_crack_field, region_d, GreensTable, ORACLE_LENGTHS};
use crate::iter::{effective_forcing, forcing_f_n, solve, write_convergence_csv, CrackLayout, IterationConfig, WhProblem, DEFAULT_POLE_OFFSET};
use crate::kernel::{approximate_kernel, build_contour, factorize, write_debug_csv, Contour, KernelFactors, KernelFit, DEFAULT_APPROX_TOL, DEFAULT_INDENT_RADIUS, DEFAULT_N_VERTICES};
use crate::lattice::{dispersion_omega, FaceForcing, FieldGrid, IncidentWave, LatticeParams};

/// Spectral tolerance used to count iterations in benchmarks.
pub const BENCHMARK_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 20_240_917;
/// Nodes drawn for the random stencil check of the invariant suite.
pub const STENCIL_SAMPLES: usize = 50;

/// Incident wave given by wavenumber or by frequency, plus direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrequencySpec {
    Wavenumber { k: f64, phi_in: f64 },
    Omega { omega: f64, phi_in: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourSettings {
    pub indent_radius: f64,
    pub n_vertices: usize,
}

impl Default for ContourSettings {
    fn default() -> Self {
        Self { indent_radius: DEFAULT_INDENT_RADIUS, n_vertices: DEFAULT_N_VERTICES }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub field_csv: bool,
    pub convergence_csv: bool,
    pub summary_json: bool,
    pub heatmap_png: bool,
    pub kernel_debug_csv: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self { field_csv: true, convergence_csv: true, summary_json: true, heatmap_png: false, kernel_debug_csv: false }
    }
}

/// Oracle comparison over the perimeter of `m in [-margin, L + margin]`,
/// `n in [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Validation {
    pub oracle: bool,
    pub region_margin: i64,
    pub region_height: i64,
}

impl Default for Validation {
    fn default() -> Self {
        Self { oracle: false, region_margin: 10, region_height: 10 }
    }
}

/// One scenario as read from a JSON file.
///
/// Cracks are `[start, end]` pairs. A semi-infinite crack on the left is
/// written with `null` as the start of the first pair, one on the right with
/// `null` as the end of the last pair; the matching flag must be set. The
/// first finite edge must be node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub frequency: FrequencySpec,
    #[serde(default)]
    pub eps_omega: f64,
    pub cracks: Vec<[Option<i64>; 2]>,
    #[serde(default)]
    pub semi_inf_left: bool,
    #[serde(default)]
    pub semi_inf_right: bool,
    #[serde(default = "default_pole_offset")]
    pub pole_offset: f64,
    #[serde(default = "default_approx_tol")]
    pub approx_tol: f64,
    #[serde(default)]
    pub contour: ContourSettings,
    #[serde(default)]
    pub iteration: IterationConfig,
    /// Defaults to `m in [-20, span + 20]`, `n in [-20, 20]`.
    #[serde(default)]
    pub grid: Option<GridExtent>,
    /// Defaults to the oscillation rule `max(2048, 16 (max|m| + span))`.
    #[serde(default)]
    pub quad_points: Option<usize>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub validation: Validation,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_pole_offset() -> f64 {
    DEFAULT_POLE_OFFSET
}

fn default_approx_tol() -> f64 {
    DEFAULT_APPROX_TOL
}

impl Default for ScenarioConfig {
    /// Single crack of length 10, `k = pi/2`, `phi_in = pi/4`.
    fn default() -> Self {
        Self::single_crack(10)
    }
}

impl ScenarioConfig {
    pub fn single_crack(l: i64) -> Self {
        Self {
            frequency: FrequencySpec::Wavenumber {
                k: std::f64::consts::FRAC_PI_2,
                phi_in: std::f64::consts::FRAC_PI_4,
            },
            eps_omega: 0.0,
            cracks: vec![[Some(0), Some(l)]],
            semi_inf_left: false,
            semi_inf_right: false,
            pole_offset: DEFAULT_POLE_OFFSET,
            approx_tol: DEFAULT_APPROX_TOL,
            contour: ContourSettings::default(),
            iteration: IterationConfig::default(),
            grid: None,
            quad_points: None,
            outputs: Outputs::default(),
            validation: Validation::default(),
            seed: None,
        }
    }

    fn layout(&self) -> Result<CrackLayout> {
        let count = self.cracks.len();
        if count == 0 {
            return Err(Error::InvalidLayout("no cracks given".into()));
        }
        let mut edges = Vec::with_capacity(2 * count);
        for (i, [start, end]) in self.cracks.iter().enumerate() {
            let open_left = self.semi_inf_left && i == 0;
            let open_right = self.semi_inf_right && i + 1 == count;
            match (start, open_left) {
                (None, true) => {}
                (Some(s), false) => edges.push(*s),
                (None, false) => return Err(Error::InvalidLayout(format!("crack {i} has no start"))),
                (Some(_), true) => {
                    return Err(Error::InvalidLayout("semi_inf_left needs a null start on the first crack".into()))
                }
            }
            match (end, open_right) {
                (None, true) => {}
                (Some(e), false) => edges.push(*e),
                (None, false) => return Err(Error::InvalidLayout(format!("crack {i} has no end"))),
                (Some(_), true) => {
                    return Err(Error::InvalidLayout("semi_inf_right needs a null end on the last crack".into()))
                }
            }
        }
        CrackLayout::new(edges, self.semi_inf_left, self.semi_inf_right)
    }

    fn physics(&self) -> Result<(LatticeParams, IncidentWave)> {
        if !(self.eps_omega >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps_omega = {} is negative", self.eps_omega)));
        }
        match self.frequency {
            FrequencySpec::Wavenumber { k, phi_in } => {
                let wave = IncidentWave::new(k, phi_in)?;
                let params = dispersion_omega(k, phi_in)?.with_absorption(self.eps_omega)?;
                Ok((params, wave))
            }
            FrequencySpec::Omega { omega, phi_in } => {
                let params = LatticeParams::new(omega, self.eps_omega)?;
                Ok((params, IncidentWave::from_omega(omega, phi_in)?))
            }
        }
    }

    /// Validate everything and collect every problem found.
    pub fn prepare(&self) -> std::result::Result<Prepared, ConfigErrors> {
        let mut errors = Vec::new();
        let physics = self.physics().map_err(|e| errors.push(e)).ok();
        let layout = self.layout().map_err(|e| errors.push(e)).ok();
        if !(self.approx_tol >= 1e-13 && self.approx_tol < 1.0) {
            errors.push(Error::InvalidParameter(format!("approx_tol = {} outside [1e-13, 1)", self.approx_tol)));
        }
        let contour_ok = self.contour.n_vertices >= 256 && self.contour.indent_radius > 0.0 && self.contour.indent_radius < 0.5;
        if !contour_ok {
            errors.push(Error::InvalidParameter(format!(
                "contour needs n_vertices >= 256 and indent_radius in (0, 0.5), got {} and {}",
                self.contour.n_vertices, self.contour.indent_radius
            )));
        }
        if let Err(e) = self.iteration.validate() {
            errors.push(e);
        }
        let forcing = match (&physics, &layout) {
            (Some((_, wave)), Some(layout)) => effective_forcing(layout, wave, self.pole_offset).map_err(|e| errors.push(e)).ok(),
            _ => None,
        };
        let grid = layout.as_ref().and_then(|layout| {
            let grid = match self.grid {
                Some(g) => GridExtent::new(g.m_min, g.m_max, g.n_min, g.n_max),
                None => GridExtent::new(-20, layout.span() + 20, -20, 20),
            };
            grid.map_err(|e| errors.push(e)).ok()
        });
        if let (Some(layout), Some(grid)) = (&layout, &grid) {
            if grid.m_max - grid.m_min < 2 || grid.n_max - grid.n_min < 2 {
                errors.push(Error::InvalidParameter("grid needs at least 3 nodes in each direction".into()));
            }
            let needed = crate::field::default_quad_points(grid, layout);
            if let Some(q) = self.quad_points {
                let rule = crate::field::POINTS_PER_COLUMN * (grid.max_abs_m() + layout.span()) as usize;
                if q < rule {
                    errors.push(Error::InvalidParameter(format!("quad_points = {q} below the required {rule} (default {needed})")));
                }
            }
        }
        if self.validation.oracle {
            match &layout {
                Some(l) if single_finite_length(l).is_some_and(|len| ORACLE_LENGTHS.contains(&len)) => {}
                Some(_) => errors.push(Error::InvalidParameter(
                    "oracle comparison needs a single finite crack of length 2..=200".into(),
                )),
                None => {}
            }
            if self.validation.region_margin < 0 || self.validation.region_height < 1 {
                errors.push(Error::InvalidParameter("region D needs margin >= 0 and height >= 1".into()));
            }
        }
        match (physics, layout, forcing, grid) {
            (Some((params, wave)), Some(layout), Some(forcing), Some(grid)) if errors.is_empty() => Ok(Prepared {
                config: self.clone(),
                params,
                wave,
                layout,
                forcing,
                grid,
            }),
            _ => Err(ConfigErrors(errors)),
        }
    }
}

fn single_finite_length(layout: &CrackLayout) -> Option<i64> {
    let e = layout.edges();
    (e.len() == 2 && !layout.left_semi_infinite() && !layout.right_semi_infinite()).then(|| e[1] - e[0])
}

/// Every problem found while validating a configuration.
#[derive(Debug)]
pub struct ConfigErrors(pub Vec<Error>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let messages: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", messages.join("; "))
    }
}

impl std::error::Error for ConfigErrors {}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ScenarioConfig,
    pub params: LatticeParams,
    pub wave: IncidentWave,
    pub layout: CrackLayout,
    pub forcing: FaceForcing,
    pub grid: GridExtent,
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub kernel: f64,
    pub factorization: f64,
    pub iteration: f64,
    pub reconstruction: f64,
    pub oracle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub omega: f64,
    pub eps_omega: f64,
    pub k: f64,
    pub phi_in: f64,
    pub approx_error: f64,
    pub support_points: usize,
    pub iterations_used: usize,
    pub final_spectral_diff: f64,
    pub converged: bool,
    pub strategy: String,
    pub oracle_max_error: Option<f64>,
    pub timings: Timings,
}

/// Kernel fit and factors of a prepared scenario.
#[derive(Debug, Clone)]
pub struct KernelStage {
    pub contour: Contour,
    pub fit: KernelFit,
    pub factors: KernelFactors,
    pub fit_time: f64,
    pub factor_time: f64,
}

pub fn kernel_stage(prepared: &Prepared) -> Result<KernelStage> {
    let cfg = &prepared.config;
    let start = Instant::now();
    let contour = build_contour(&prepared.params, cfg.contour.indent_radius, cfg.contour.n_vertices)?;
    let fit = approximate_kernel(&prepared.params, &contour, cfg.approx_tol)?;
    let fit_time = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let factors = factorize(&fit.zpk, fit.approx_error)?;
    Ok(KernelStage { contour, fit, factors, fit_time, factor_time: start.elapsed().as_secs_f64() })
}

/// Wiener-Hopf problem for `layout` on a fitted kernel.
pub fn wh_problem(prepared: &Prepared, kernel: &KernelStage, layout: &CrackLayout) -> Result<WhProblem> {
    let forcing = effective_forcing(layout, &prepared.wave, prepared.config.pole_offset)?;
    let f = forcing_f_n(layout, &forcing, &kernel.fit.zpk)?;
    Ok(WhProblem::new(layout.clone(), kernel.factors.clone(), f, kernel.contour.clone()))
}

pub fn reconstruction_plan(prepared: &Prepared, contour: &Contour, grid: GridExtent) -> ReconstructionPlan {
    let mut plan = ReconstructionPlan::new(contour.clone(), grid, &prepared.layout);
    if let Some(q) = prepared.config.quad_points {
        plan.quad_points = q;
    }
    plan
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub history: Vec<f64>,
    pub kernel: KernelStage,
    /// Scattered field on the configured grid.
    pub field: FieldGrid,
    pub u: crate::rfun::LaurentPF,
}

/// Kernel fit, factorization, iteration, reconstruction and, if enabled, the
/// oracle comparison.
pub fn run(prepared: &Prepared) -> Result<Outcome> {
    let cfg = &prepared.config;
    let kernel = kernel_stage(prepared)?;
    let problem = wh_problem(prepared, &kernel, &prepared.layout)?;

    let start = Instant::now();
    let states = solve(&problem, &cfg.iteration)?;
    let iteration = start.elapsed().as_secs_f64();
    let last = states.last().expect("initial state");
    let history = last.history.clone();
    let final_diff = history.last().copied().unwrap_or(0.0);

    let start = Instant::now();
    let u = assemble_u(last, &prepared.layout);
    let field = reconstruct(&u, &prepared.params, &reconstruction_plan(prepared, &kernel.contour, prepared.grid))?;
    let reconstruction = start.elapsed().as_secs_f64();

    let (oracle_max_error, oracle) = if cfg.validation.oracle {
        let start = Instant::now();
        let error = oracle_error(prepared, &kernel.contour, &u)?;
        (Some(error), Some(start.elapsed().as_secs_f64()))
    } else {
        (None, None)
    };

    let summary = Summary {
        omega: prepared.params.omega().re,
        eps_omega: prepared.params.eps_omega(),
        k: prepared.wave.k,
        phi_in: prepared.wave.phi_in,
        approx_error: kernel.fit.approx_error,
        support_points: kernel.fit.support_points,
        iterations_used: history.len(),
        final_spectral_diff: final_diff,
        converged: final_diff < cfg.iteration.spectral_tol,
        strategy: cfg.iteration.strategy.name().to_string(),
        oracle_max_error,
        timings: Timings {
            kernel: kernel.fit_time,
            factorization: kernel.factor_time,
            iteration,
            reconstruction,
            oracle,
        },
    };
    Ok(Outcome { summary, history, kernel, field, u })
}

/// Max difference to the exact single-crack field over region D.
pub fn oracle_error(prepared: &Prepared, contour: &Contour, u: &crate::rfun::LaurentPF) -> Result<f64> {
    let l = single_finite_length(&prepared.layout)
        .ok_or_else(|| Error::InvalidParameter("oracle needs a single finite crack".into()))?;
    let v = &prepared.config.validation;
    let extent = GridExtent::new(-v.region_margin, l + v.region_margin, 0, v.region_height)?;
    let iterative = reconstruct(u, &prepared.params, &reconstruction_plan(prepared, contour, extent))?;
    let table = GreensTable::new(prepared.params);
    let exact = exact_crack_field(l, &prepared.wave, &table, &extent)?;
    Ok(compare(&iterative, &exact, &region_d(l, v.region_margin, v.region_height)))
}

/// Write the outputs enabled in the configuration to `dir`.
pub fn write_outputs(prepared: &Prepared, outcome: &Outcome, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let out = &prepared.config.outputs;
    let create = |name: &str| File::create(dir.join(name)).map(BufWriter::new);
    if out.field_csv {
        let mut w = create("field.csv")?;
        write_field_csv(&outcome.field, &prepared.wave, &mut w)?;
        w.flush()?;
    }
    if out.convergence_csv {
        let mut w = create("convergence.csv")?;
        write_convergence_csv(&outcome.history, prepared.config.iteration.strategy, &mut w)?;
        w.flush()?;
    }
    if out.summary_json {
        let mut w = create("summary.json")?;
        serde_json::to_writer_pretty(&mut w, &outcome.summary)?;
        writeln!(w)?;
        w.flush()?;
    }
    if out.kernel_debug_csv {
        let mut w = create("kernel_debug.csv")?;
        write_debug_csv(&outcome.kernel.factors, &outcome.kernel.contour, &mut w)?;
        w.flush()?;
    }
    if out.heatmap_png {
        let total = outcome.field.total(&prepared.wave);
        let images = [
            (&outcome.field, HeatmapKind::Real, "re_u.png"),
            (&total, HeatmapKind::Real, "re_utot.png"),
            (&total, HeatmapKind::Modulus, "abs_utot.png"),
        ];
        for (grid, kind, name) in images {
            write_heatmap_png(grid, kind, &dir.join(name)).map_err(std::io::Error::other)?;
        }
    }
    Ok(())
}

/// One row of the length benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub l: i64,
    /// Sweeps until the spectral difference drops below `BENCHMARK_TOL`;
    /// `None` if `max_iter` was not enough.
    pub iters: Option<usize>,
    /// Mean wall-clock seconds per sweep.
    pub iter_time: f64,
    /// Seconds for the exact solution over region D, Green's functions included.
    pub oracle_time: f64,
}

/// Iterative solver and oracle timings for single cracks of each length.
pub fn benchmark(config: &ScenarioConfig, lengths: &[i64]) -> Result<Vec<BenchmarkRow>> {
    if lengths.is_empty() {
        return Ok(Vec::new());
    }
    let mut base = config.clone();
    base.cracks = vec![[Some(0), Some(lengths[0])]];
    base.semi_inf_left = false;
    base.semi_inf_right = false;
    base.validation.oracle = false;
    let prepared = base.prepare().map_err(|e| e.0.into_iter().next().expect("nonempty"))?;
    let kernel = kernel_stage(&prepared)?;
    let iteration = IterationConfig { spectral_tol: BENCHMARK_TOL, ..config.iteration };
    let v = config.validation;
    let mut rows = Vec::with_capacity(lengths.len());
    for &l in lengths {
        if !ORACLE_LENGTHS.contains(&l) {
            return Err(Error::InvalidParameter(format!("benchmark length {l} outside 2..=200")));
        }
        let layout = CrackLayout::single(l)?;
        let problem = wh_problem(&prepared, &kernel, &layout)?;
        let start = Instant::now();
        let states = solve(&problem, &iteration)?;
        let elapsed = start.elapsed().as_secs_f64();
        let history = &states.last().expect("initial state").history;
        let iters = history.iter().position(|&d| d < BENCHMARK_TOL).map(|i| i + 1);

        let extent = GridExtent::new(-v.region_margin, l + v.region_margin, 0, v.region_height)?;
        let start = Instant::now();
        let table = GreensTable::new(prepared.params);
        exact_crack_field(l, &prepared.wave, &table, &extent)?;
        let oracle_time = start.elapsed().as_secs_f64();
        rows.push(BenchmarkRow { l, iters, iter_time: elapsed / history.len().max(1) as f64, oracle_time });
    }
    Ok(rows)
}

pub fn write_benchmark_csv(rows: &[BenchmarkRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "L,iters,iter_time,oracle_time")?;
    for r in rows {
        let iters = r.iters.map(|i| i.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{:e},{:e}", r.l, iters, r.iter_time, r.oracle_time)?;
    }
    Ok(())
}

/// Result of one invariant check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tol, passed: value <= tol }
    }
}

/// Physics invariants of a solved scenario plus the Green's function stencil
/// at random nodes drawn with `seed`.
pub fn invariant_suite(prepared: &Prepared, outcome: &Outcome, seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let (off, on) = helmholtz_residuals(&outcome.field, &prepared.params, &prepared.layout, &prepared.forcing)?;
    checks.push(Check::new("helmholtz_residual_off_crack", off, 1e-6));
    checks.push(Check::new("boundary_residual_on_faces", on, 1e-6));
    checks.push(Check::new("antisymmetry", antisymmetry_defect(&outcome.field), 0.0));

    let g = prepared.grid;
    let mut plan = reconstruction_plan(prepared, &outcome.kernel.contour, GridExtent::new(g.m_min, g.m_max, 0, 0)?);
    plan.quad_points = plan.quad_points * 3 / 2 + 7;
    let row = row_values(&outcome.u, &prepared.params, &plan)?;
    let jump = (g.m_min..=g.m_max)
        .zip(&row)
        .filter_map(|(m, u0)| {
            let v = outcome.field.get(m, -1)? - outcome.field.get(m, 0)?;
            Some((v + 2.0 * u0).norm())
        })
        .fold(0.0, f64::max);
    checks.push(Check::new("jump_matches_row", jump, 1e-8));
    checks.push(Check::new(
        "factor_symmetry",
        factor_symmetry_error(&outcome.kernel.factors, &outcome.kernel.contour),
        1e-6,
    ));

    let table = GreensTable::new(prepared.params);
    checks.push(Check::new("greens_stencil_origin", (greens_stencil(0, 0, &table)? - 1.0).norm(), 1e-8));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..STENCIL_SAMPLES {
        let (m, n) = loop {
            let node = (rng.random_range(-30..=30), rng.random_range(-30..=30));
            if node != (0, 0) {
                break node;
            }
        };
        worst = worst.max(greens_stencil(m, n, &table)?.norm());
    }
    checks.push(Check::new("greens_stencil_off_origin", worst, 1e-8));
    Ok(checks)
}

//! Manufactured reference solutions, refinement and vanishing-viscosity
//! studies, sup-norm errors, and log-log rate fitting.
//!
//! The manufactured family is v_i(x) = c_i sin(x) (stationary) and
//! v_i(x, t) = c_i sin(x) e^{−t} (Cauchy) with Σ c_i = B.  The per-edge
//! sources follow by substitution in closed form, the junction values agree
//! (sin 0 = 0), and the Kirchhoff flux is exact, so the reformulated
//! junction residuals of the exact solution vanish and it is the reference
//! the solvers must converge to.
//!
//! Stationary studies measure errors against the manufactured exact
//! solution.  Cauchy refinement studies measure self-convergence against a
//! nested fine-grid reference (with the exact solution kept as a secondary
//! cross-check), because the grids and time lattices embed exactly when Δx
//! is halved.  The Cauchy viscosity sweep compares time snapshots against a
//! fine-grid minimal-viscosity reference through piecewise-linear
//! interpolation, since the ε^{3/2} spacing rule does not produce nested
//! grids.

use crate::cauchy::{
    march_cauchy, suggest_dt, BoundaryTrace, CauchyParams, CauchyProblem, InitialData,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianKind, HamiltonianSpec, SchemeConstants, SourceTerm};
use crate::netgrid::{sample_function, GridFunction, NetworkGrid, SpaceTimeGridFunction};
use crate::par::{map_indexed, Parallelism};
use crate::stationary::{solve_stationary, SchemeParams, SolveSeed, StationaryProblem};

/// Sampling density (intervals per edge) used when deriving constants for
/// manufactured problems.  Fixed so that every row of a study shares the
/// same constants.
const MANUFACTURED_DENSITY: usize = 2000;

/// Sweep budget for study solves; the defaults in `SchemeParams` target
/// interactive use, studies are allowed to grind.
const STUDY_MAX_SWEEPS: u64 = 5_000_000;

/// Snapshot count for viscosity-sweep comparisons in time.
const SNAPSHOT_COUNT: usize = 50;

/// Default ceiling on total allocated grid nodes per study.
pub const DEFAULT_NODE_BUDGET: u64 = 5_000_000;

/// Tolerance on the flux-coefficient constraint Σ c_i = B.
const COEFF_TOL: f64 = 1e-12;

/// Manufactured stationary problem with exact solution v_i(x) = c_i sin(x).
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedStationary {
    pub coeffs: Vec<f64>,
    pub b: f64,
    pub edge_length: f64,
    pub kind: HamiltonianKind,
    pub spec: HamiltonianSpec,
    pub consts: SchemeConstants,
}

impl ManufacturedStationary {
    pub fn exact(&self, edge: usize, x: f64) -> f64 {
        self.coeffs[edge] * x.sin()
    }

    pub fn exact_slope(&self, edge: usize, x: f64) -> f64 {
        self.coeffs[edge] * x.cos()
    }

    pub fn exact_grid(&self, grid: &NetworkGrid) -> GridFunction {
        sample_function(grid, |i, x| self.exact(i, x)).expect("sin(0) glues exactly")
    }

    /// Junction state of the exact solution: u(0) = 0 and ξ_i = c_i.
    pub fn exact_junction_state(&self) -> crate::analysis::JunctionState {
        crate::analysis::JunctionState::new(0.0, self.coeffs.clone())
    }

    pub fn problem(&self) -> StationaryProblem {
        let far_end = (0..self.coeffs.len())
            .map(|i| self.exact(i, -self.edge_length))
            .collect();
        StationaryProblem::new(
            self.spec.clone(),
            self.consts,
            self.edge_length,
            self.b,
            far_end,
        )
        .expect("manufactured far-end data is within the sup bound")
    }
}

/// Build a manufactured stationary problem.  The coefficients must satisfy
/// Σ c_i = B so that the exact solution meets the Kirchhoff condition.
pub fn manufactured_stationary(
    coeffs: &[f64],
    kind: HamiltonianKind,
    edge_length: f64,
    b: f64,
) -> Result<ManufacturedStationary> {
    let sum: f64 = coeffs.iter().sum();
    if (sum - b).abs() > COEFF_TOL {
        return Err(Error::InvalidCoefficients(format!(
            "Σc = {sum} but B = {b}"
        )));
    }
    let spec = HamiltonianSpec::uniform(
        coeffs.len(),
        kind.clone(),
        SourceTerm::StationaryManufactured {
            coeffs: coeffs.to_vec(),
            hamiltonian: kind.clone(),
        },
    )?;
    let consts = SchemeConstants::derive(&spec, edge_length, 0.0, MANUFACTURED_DENSITY)?;
    Ok(ManufacturedStationary {
        coeffs: coeffs.to_vec(),
        b,
        edge_length,
        kind,
        spec,
        consts,
    })
}

/// Manufactured Cauchy problem with exact solution
/// v_i(x, t) = c_i sin(x) e^{−t}.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCauchy {
    pub coeffs: Vec<f64>,
    pub edge_length: f64,
    pub horizon: f64,
    pub kind: HamiltonianKind,
    pub spec: HamiltonianSpec,
    pub consts: SchemeConstants,
}

impl ManufacturedCauchy {
    pub fn exact(&self, edge: usize, x: f64, t: f64) -> f64 {
        self.coeffs[edge] * x.sin() * (-t).exp()
    }

    pub fn exact_slope(&self, edge: usize, x: f64, t: f64) -> f64 {
        self.coeffs[edge] * x.cos() * (-t).exp()
    }

    pub fn problem(&self) -> CauchyProblem {
        let k = self.coeffs.len();
        let far: Vec<f64> = (0..k)
            .map(|i| self.exact(i, -self.edge_length, 0.0))
            .collect();
        CauchyProblem::new(
            self.spec.clone(),
            self.consts,
            InitialData::SinProfile(self.coeffs.clone()),
            self.horizon,
            0.0,
            BoundaryTrace::ExpDecay {
                values: far,
                rate: 1.0,
            },
            self.edge_length,
        )
        .expect("manufactured initial data glues exactly")
    }
}

/// Build a manufactured Cauchy problem; the decaying flux e^{−t} Σ c_i is
/// constant in time only for Σ c_i = 0, so B = 0 is required.
pub fn manufactured_cauchy(
    coeffs: &[f64],
    kind: HamiltonianKind,
    edge_length: f64,
    horizon: f64,
) -> Result<ManufacturedCauchy> {
    let sum: f64 = coeffs.iter().sum();
    if sum.abs() > COEFF_TOL {
        return Err(Error::InvalidCoefficients(format!(
            "Σc = {sum}; the decaying manufactured flux needs Σc = 0"
        )));
    }
    let spec = HamiltonianSpec::uniform(
        coeffs.len(),
        kind.clone(),
        SourceTerm::CauchyManufactured {
            coeffs: coeffs.to_vec(),
            hamiltonian: kind.clone(),
        },
    )?;
    let consts = SchemeConstants::derive(&spec, edge_length, horizon, MANUFACTURED_DENSITY)?;
    Ok(ManufacturedCauchy {
        coeffs: coeffs.to_vec(),
        edge_length,
        horizon,
        kind,
        spec,
        consts,
    })
}

/// Max absolute nodewise difference of two grid functions on one grid.
pub fn sup_error(u: &GridFunction, reference: &GridFunction) -> Result<f64> {
    u.sup_diff(reference)
}

/// Max absolute difference against an exact closure g(edge, x).
pub fn sup_error_vs_exact<F>(u: &GridFunction, g: F) -> f64
where
    F: Fn(usize, f64) -> f64,
{
    let grid = u.grid();
    let mut worst = (u.junction() - g(0, 0.0)).abs();
    for i in 0..grid.edges() {
        for m in 1..=grid.nodes_per_edge() {
            worst = worst.max((u.value(i, m) - g(i, grid.x(m))).abs());
        }
    }
    worst
}

/// Max absolute difference of two space-time functions over all levels.
pub fn sup_error_spacetime(
    u: &SpaceTimeGridFunction,
    reference: &SpaceTimeGridFunction,
) -> Result<f64> {
    if u.steps() != reference.steps() || u.dt() != reference.dt() {
        return Err(Error::ShapeMismatch(
            "space-time functions differ in time lattice".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for s in 0..=u.steps() {
        worst = worst.max(u.level(s).sup_diff(reference.level(s))?);
    }
    Ok(worst)
}

/// Least-squares fit of log e against log h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    /// Slope: the observed convergence order.
    pub order: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fit a power law e ≈ C·h^order through (h, e) pairs.
pub fn fit_loglog_order(rows: &[(f64, f64)]) -> Result<LogLogFit> {
    if rows.len() < 3 {
        return Err(Error::InvalidConstants(format!(
            "need at least 3 rows to fit, got {}",
            rows.len()
        )));
    }
    if rows.iter().any(|&(_, e)| e == 0.0) {
        return Err(Error::DegenerateFit);
    }
    if rows.iter().any(|&(h, e)| !(h > 0.0) || !(e > 0.0)) {
        return Err(Error::InvalidConstants(
            "fit requires positive resolutions and errors".into(),
        ));
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|&(h, _)| h.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|&(_, e)| e.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let order = sxy / sxx;
    let intercept = ybar - order * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = intercept + order * x;
            (y - fit) * (y - fit)
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LogLogFit {
        order,
        intercept,
        r_squared,
    })
}

/// One row of a rate study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    /// Resolution parameter the fit runs over (Δx or ε).
    pub h: f64,
    pub eps: f64,
    /// Time step; 0 for stationary solves.
    pub dt: f64,
    pub nodes: u64,
    /// Sweeps (stationary) or time steps (Cauchy).
    pub work: u64,
    pub sup_error: f64,
    /// Secondary error against the manufactured exact solution, when the
    /// primary comparison is a self-convergence reference.
    pub cross_error: Option<f64>,
}

/// Rate study outcome: rows ordered by decreasing resolution and the
/// fitted order.  `fit` is `None` when some error sits at machine
/// precision and the log-log fit would be degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub fit: Option<LogLogFit>,
    pub cross_fit: Option<LogLogFit>,
}

impl RateReport {
    fn build(rows: Vec<RateRow>) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.sup_error)).collect();
        let fit = match fit_loglog_order(&pairs) {
            Ok(f) => Some(f),
            Err(Error::DegenerateFit) => None,
            Err(e) => return Err(e),
        };
        let cross_pairs: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.cross_error.map(|e| (r.h, e)))
            .collect();
        let cross_fit = if cross_pairs.len() == rows.len() {
            match fit_loglog_order(&cross_pairs) {
                Ok(f) => Some(f),
                Err(Error::DegenerateFit) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        Ok(RateReport {
            rows,
            fit,
            cross_fit,
        })
    }

    /// Rows as CSV with the stable schema
    /// `h,eps,dt,nodes,sweeps_or_steps,sup_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,eps,dt,nodes,sweeps_or_steps,sup_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.h, r.eps, r.dt, r.nodes, r.work, r.sup_error
            ));
        }
        out
    }

    /// Summary record as CSV:
    /// `status,fitted_order,intercept,r_squared,threshold,pass`.
    /// Status is `machine_precision` when errors vanished and no fit exists.
    pub fn summary_csv(&self, threshold: Option<f64>) -> String {
        let mut out = String::from("status,fitted_order,intercept,r_squared,threshold,pass\n");
        match (&self.fit, threshold) {
            (Some(f), Some(th)) => out.push_str(&format!(
                "fitted,{},{},{},{},{}\n",
                f.order,
                f.intercept,
                f.r_squared,
                th,
                f.order >= th
            )),
            (Some(f), None) => out.push_str(&format!(
                "fitted,{},{},{},,\n",
                f.order, f.intercept, f.r_squared
            )),
            (None, th) => out.push_str(&format!(
                "machine_precision,,,,{},true\n",
                th.map(|t| t.to_string()).unwrap_or_default()
            )),
        }
        out
    }

    /// Whether the fitted order clears the threshold; a machine-precision
    /// study passes trivially.
    pub fn passes(&self, threshold: f64) -> bool {
        match &self.fit {
            Some(f) => f.order >= threshold,
            None => true,
        }
    }
}

fn check_decreasing(list: &[f64], what: &str) -> Result<()> {
    if list.len() < 3 {
        return Err(Error::InvalidConstants(format!(
            "{what} needs at least 3 entries, got {}",
            list.len()
        )));
    }
    if list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidConstants(format!(
            "{what} must be strictly decreasing"
        )));
    }
    Ok(())
}

fn guard_budget(total_nodes: u64, budget: u64) -> Result<()> {
    if total_nodes > budget {
        return Err(Error::ResourceGuard {
            nodes: total_nodes,
            budget,
        });
    }
    Ok(())
}

/// Grid refinement study of the stationary scheme: for each Δx the
/// artificial viscosity is coupled to the monotone lower edge ε = 2L₁Δx
/// and the error is measured against the manufactured exact solution.
pub fn refinement_study_stationary(
    m: &ManufacturedStationary,
    dx_list: &[f64],
    budget: u64,
    par: Parallelism,
) -> Result<RateReport> {
    check_decreasing(dx_list, "dx_list")?;
    let prob = m.problem();
    let k = m.coeffs.len() as u64;
    let mut total = 0u64;
    for &dx in dx_list {
        total += k * prob.grid(dx)?.nodes_per_edge() as u64 + 1;
    }
    guard_budget(total, budget)?;

    let rows: Vec<Result<RateRow>> = map_indexed(par, dx_list.len(), |idx| {
        let dx = dx_list[idx];
        let eps = 2.0 * m.consts.l1 * dx;
        let params = SchemeParams::new(dx, eps, &m.consts).with_max_sweeps(STUDY_MAX_SWEEPS);
        let (u, stats) = solve_stationary(&prob, &params, SolveSeed::Lower)?;
        let err = sup_error_vs_exact(&u, |i, x| m.exact(i, x));
        Ok(RateRow {
            h: dx,
            eps,
            dt: 0.0,
            nodes: u.grid().node_count() as u64,
            work: stats.sweeps,
            sup_error: err,
            cross_error: None,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    RateReport::build(rows)
}

/// Streaming snapshot capture used for cross-grid Cauchy comparisons: the
/// march is sampled at fixed target times by linear interpolation between
/// the bracketing levels.
struct SnapshotCollector {
    targets: Vec<f64>,
    next: usize,
    prev_t: f64,
    prev: Option<GridFunction>,
    pub snaps: Vec<GridFunction>,
}

impl SnapshotCollector {
    fn new(targets: Vec<f64>) -> Self {
        SnapshotCollector {
            targets,
            next: 0,
            prev_t: 0.0,
            prev: None,
            snaps: Vec::new(),
        }
    }

    fn offer(&mut self, t: f64, level: &GridFunction) {
        while self.next < self.targets.len() && self.targets[self.next] <= t + 1e-12 {
            let target = self.targets[self.next];
            let snap = match &self.prev {
                Some(prev) if t > self.prev_t && target > self.prev_t => {
                    let w = ((target - self.prev_t) / (t - self.prev_t)).clamp(0.0, 1.0);
                    lerp_grid(prev, level, w)
                }
                _ => level.clone(),
            };
            self.snaps.push(snap);
            self.next += 1;
        }
        match &mut self.prev {
            Some(p) => p.clone_from(level),
            None => self.prev = Some(level.clone()),
        }
        self.prev_t = t;
    }
}

fn lerp_grid(a: &GridFunction, b: &GridFunction, w: f64) -> GridFunction {
    let grid = *a.grid();
    let mut out = a.clone();
    out.set_value(0, 0, (1.0 - w) * a.junction() + w * b.junction());
    for i in 0..grid.edges() {
        for mm in 1..=grid.nodes_per_edge() {
            out.set_value(i, mm, (1.0 - w) * a.value(i, mm) + w * b.value(i, mm));
        }
    }
    out
}

/// Piecewise-linear evaluation of a grid function at x ∈ [−ℓ, 0] on edge i.
fn interp_x(u: &GridFunction, edge: usize, x: f64) -> f64 {
    let grid = u.grid();
    let pos = (-x / grid.dx()).max(0.0);
    let ne = grid.nodes_per_edge();
    let j0 = (pos.floor() as usize).min(ne);
    if j0 >= ne {
        return u.value(edge, ne);
    }
    let frac = pos - j0 as f64;
    (1.0 - frac) * u.value(edge, j0) + frac * u.value(edge, j0 + 1)
}

/// Self-convergence refinement study of the Cauchy scheme.
///
/// Δx halving keeps node positions and (via the Δt helper) time lattices
/// exactly nested, so each row is compared to the reference march at
/// Δx_min/`ref_divisor` by direct injection at shared nodes and shared
/// times t ≤ T.  The manufactured exact solution is recorded per row as a
/// secondary cross-check.
pub fn refinement_study_cauchy(
    m: &ManufacturedCauchy,
    dx_list: &[f64],
    ref_divisor: u32,
    budget: u64,
    par: Parallelism,
) -> Result<RateReport> {
    check_decreasing(dx_list, "dx_list")?;
    if ref_divisor < 2 || !ref_divisor.is_power_of_two() {
        return Err(Error::InvalidConstants(
            "reference divisor must be a power of two ≥ 2".into(),
        ));
    }
    for w in dx_list.windows(2) {
        let ratio = w[0] / w[1];
        if (ratio - ratio.round()).abs() > 1e-9 || !(ratio.round() as u64).is_power_of_two() {
            return Err(Error::InvalidConstants(
                "cauchy refinement needs power-of-two nested dx ratios".into(),
            ));
        }
    }

    let prob = m.problem();
    let l1 = m.consts.l1;
    let dx_min = *dx_list.last().unwrap();
    let dx_ref = dx_min / ref_divisor as f64;
    let dx_fine = dx_min;

    let k = m.coeffs.len() as u64;
    let mut total = k * prob.grid(dx_ref)?.nodes_per_edge() as u64 + 1;
    for &dx in dx_list {
        total += k * prob.grid(dx)?.nodes_per_edge() as u64 + 1;
    }
    guard_budget(total, budget)?;

    // reference march, captured on the finest row's space-time lattice
    let eps_ref = 2.0 * l1 * dx_ref;
    let dt_ref = suggest_dt(dx_ref, eps_ref, l1);
    let params_ref = CauchyParams {
        dx: dx_ref,
        dt: dt_ref,
        eps: eps_ref,
    };
    let fine_grid = prob.grid(dx_fine)?;
    let dt_fine = suggest_dt(dx_fine, 2.0 * l1 * dx_fine, l1);
    let stride_t = (dt_fine / dt_ref).round() as usize;
    let stride_x = (dx_fine / dx_ref).round() as usize;
    debug_assert!((dt_fine / dt_ref - stride_t as f64).abs() < 1e-9);

    let mut captured: Vec<GridFunction> = Vec::new();
    {
        let horizon = m.horizon;
        march_cauchy(&prob, &params_ref, par, |s, t, level| {
            if s % stride_t == 0 && t <= horizon * (1.0 + 1e-12) {
                let mut snap = GridFunction::constant(fine_grid, level.junction());
                for i in 0..fine_grid.edges() {
                    for mm in 1..=fine_grid.nodes_per_edge() {
                        snap.set_value(i, mm, level.value(i, mm * stride_x));
                    }
                }
                captured.push(snap);
            }
        })?;
    }

    let rows: Vec<Result<RateRow>> = map_indexed(par, dx_list.len(), |idx| {
        let dx = dx_list[idx];
        let eps = 2.0 * l1 * dx;
        let dt = suggest_dt(dx, eps, l1);
        let params = CauchyParams { dx, dt, eps };
        let ratio = (dx / dx_fine).round() as usize; // row node -> fine node
        let tratio = (dt / dt_fine).round() as usize; // row level -> captured level
        let grid = prob.grid(dx)?;
        let ne = grid.nodes_per_edge();
        let mut err: f64 = 0.0;
        let mut cross: f64 = 0.0;
        let horizon = m.horizon;
        let steps = march_cauchy(&prob, &params, Parallelism::Sequential, |s, t, level| {
            if t > horizon * (1.0 + 1e-12) {
                return;
            }
            let ci = s * tratio;
            if ci < captured.len() {
                let snap = &captured[ci];
                err = err.max((level.junction() - snap.junction()).abs());
                for i in 0..grid.edges() {
                    for mm in 1..=ne {
                        err = err.max((level.value(i, mm) - snap.value(i, mm * ratio)).abs());
                    }
                }
            }
            cross = cross.max((level.junction() - m.exact(0, 0.0, t)).abs());
            for i in 0..grid.edges() {
                for mm in 1..=ne {
                    cross = cross.max((level.value(i, mm) - m.exact(i, grid.x(mm), t)).abs());
                }
            }
        })?;
        Ok(RateRow {
            h: dx,
            eps,
            dt,
            nodes: grid.node_count() as u64,
            work: steps as u64,
            sup_error: err,
            cross_error: Some(cross),
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    RateReport::build(rows)
}

/// Spacing rule of the viscosity sweeps: Δx = scale·ε^power, capped at
/// ε/(2L₁) so the monotonicity bound 2L₁Δx ≤ ε always holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DxRule {
    pub scale: f64,
    pub power: f64,
}

impl Default for DxRule {
    fn default() -> Self {
        DxRule {
            scale: 0.25,
            power: 1.5,
        }
    }
}

impl DxRule {
    pub fn dx(&self, eps: f64, l1: f64) -> f64 {
        (self.scale * eps.powf(self.power)).min(eps / (2.0 * l1))
    }
}

/// Vanishing-viscosity sweep of the stationary scheme: each ε is held
/// fixed while Δx follows the spacing rule, and the error against the
/// manufactured inviscid exact solution is fitted in ε.
pub fn viscosity_sweep_stationary(
    m: &ManufacturedStationary,
    eps_list: &[f64],
    rule: DxRule,
    budget: u64,
    par: Parallelism,
) -> Result<RateReport> {
    check_decreasing(eps_list, "eps_list")?;
    let prob = m.problem();
    let k = m.coeffs.len() as u64;
    let mut total = 0u64;
    for &eps in eps_list {
        total += k * prob.grid(rule.dx(eps, m.consts.l1))?.nodes_per_edge() as u64 + 1;
    }
    guard_budget(total, budget)?;

    let rows: Vec<Result<RateRow>> = map_indexed(par, eps_list.len(), |idx| {
        let eps = eps_list[idx];
        let dx = rule.dx(eps, m.consts.l1);
        let params = SchemeParams::new(dx, eps, &m.consts).with_max_sweeps(STUDY_MAX_SWEEPS);
        let (u, stats) = solve_stationary(&prob, &params, SolveSeed::Lower)?;
        let err = sup_error_vs_exact(&u, |i, x| m.exact(i, x));
        Ok(RateRow {
            h: eps,
            eps,
            dt: 0.0,
            nodes: u.grid().node_count() as u64,
            work: stats.sweeps,
            sup_error: err,
            cross_error: None,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    RateReport::build(rows)
}

/// Vanishing-viscosity sweep of the Cauchy scheme against a fine-grid
/// minimal-viscosity reference.  Grids are not nested under the ε^{3/2}
/// rule, so rows and reference are compared on `SNAPSHOT_COUNT` + 1 shared
/// snapshot times through piecewise-linear interpolation in space.
pub fn viscosity_sweep_cauchy(
    m: &ManufacturedCauchy,
    eps_list: &[f64],
    rule: DxRule,
    budget: u64,
    par: Parallelism,
) -> Result<RateReport> {
    check_decreasing(eps_list, "eps_list")?;
    let l1 = m.consts.l1;

    struct RowPlan {
        eps: f64,
        dx: f64,
        dt: f64,
    }
    let mut plans: Vec<RowPlan> = eps_list
        .iter()
        .map(|&eps| {
            let dx = rule.dx(eps, l1);
            RowPlan {
                eps,
                dx,
                dt: suggest_dt(dx, eps, l1),
            }
        })
        .collect();
    let dx_ref = plans.last().unwrap().dx / 2.0;
    let eps_ref = 2.0 * l1 * dx_ref;
    plans.push(RowPlan {
        eps: eps_ref,
        dx: dx_ref,
        dt: suggest_dt(dx_ref, eps_ref, l1),
    });

    // the upper CFL constant is recorded as the largest Δx/Δt of the study
    let mut consts = m.consts;
    consts.l2 = plans.iter().map(|p| p.dx / p.dt).fold(consts.l2, f64::max);
    let mut prob = m.problem();
    prob.consts = consts;

    let k = m.coeffs.len() as u64;
    let mut total = 0u64;
    for p in &plans {
        total += k * prob.grid(p.dx)?.nodes_per_edge() as u64 + 1;
    }
    guard_budget(total, budget)?;

    let targets: Vec<f64> = (0..=SNAPSHOT_COUNT)
        .map(|j| m.horizon * j as f64 / SNAPSHOT_COUNT as f64)
        .collect();

    let reference = plans.pop().unwrap();
    let mut ref_collect = SnapshotCollector::new(targets.clone());
    let params_ref = CauchyParams {
        dx: reference.dx,
        dt: reference.dt,
        eps: reference.eps,
    };
    march_cauchy(&prob, &params_ref, par, |_, t, level| {
        ref_collect.offer(t, level)
    })?;
    let ref_snaps = ref_collect.snaps;

    let rows: Vec<Result<RateRow>> = map_indexed(par, plans.len(), |idx| {
        let plan = &plans[idx];
        let params = CauchyParams {
            dx: plan.dx,
            dt: plan.dt,
            eps: plan.eps,
        };
        let mut collect = SnapshotCollector::new(targets.clone());
        let steps = march_cauchy(&prob, &params, Parallelism::Sequential, |_, t, level| {
            collect.offer(t, level)
        })?;
        let grid = prob.grid(plan.dx)?;
        let mut err: f64 = 0.0;
        for (snap, ref_snap) in collect.snaps.iter().zip(&ref_snaps) {
            err = err.max((snap.junction() - ref_snap.junction()).abs());
            for i in 0..grid.edges() {
                for mm in 1..=grid.nodes_per_edge() {
                    err = err.max((snap.value(i, mm) - interp_x(ref_snap, i, grid.x(mm))).abs());
                }
            }
        }
        Ok(RateRow {
            h: plan.eps,
            eps: plan.eps,
            dt: plan.dt,
            nodes: grid.node_count() as u64,
            work: steps as u64,
            sup_error: err,
            cross_error: None,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    RateReport::build(rows)
}

//! Explicit time marching for the discrete Cauchy problem
//!
//!   (U(m, s+1) − U(m, s))/Δt + F_i(D⁺U(m, s), D⁻U(m, s)) = f_i(sΔt, −mΔx)
//!
//! on interior nodes, followed by the far-end Dirichlet trace at m = N_e
//! and the junction average U(0, s+1) = (1/K)(Σ_i U(1_i, s+1) + BΔx) from
//! the freshly updated neighbors.  Under the CFL window
//! 4L₁ ≤ 2ε/Δx ≤ Δx/Δt ≤ L₂ (plus ε ≥ 2L₁Δx and
//! Δx/Δt − ε/Δx − 2L₁ ≥ 0) the one-step map is nondecreasing in every
//! input node value, which yields the discrete comparison principle.

use crate::error::{Error, Result};
use crate::hamiltonian::{
    make_numerical_hamiltonian, HamiltonianKind, HamiltonianSpec, NumericalHamiltonian,
    SchemeConstants, SourceTerm,
};
use crate::netgrid::{GridFunction, NetworkGrid, SpaceTimeGridFunction, JUNCTION_TOL};
use crate::par::{fill_indexed, Parallelism};

/// Below this many nodes per edge a threaded step falls back to the
/// sequential loop; the spawn overhead would dominate.
const PAR_MIN_NODES: usize = 8192;

/// Initial data u₀, Lipschitz by construction of each variant.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Constant(f64),
    /// u₀(x) = c_i sin(x) on edge i.
    SinProfile(Vec<f64>),
    /// Per-edge piecewise-linear tables of (x, value), x ascending.
    Table(Vec<Vec<(f64, f64)>>),
}

impl InitialData {
    pub fn eval(&self, edge: usize, x: f64) -> f64 {
        match self {
            InitialData::Constant(c) => *c,
            InitialData::SinProfile(c) => c[edge] * x.sin(),
            InitialData::Table(tabs) => {
                let tab = &tabs[edge];
                match tab.len() {
                    0 => 0.0,
                    1 => tab[0].1,
                    _ => {
                        if x <= tab[0].0 {
                            tab[0].1
                        } else if x >= tab[tab.len() - 1].0 {
                            tab[tab.len() - 1].1
                        } else {
                            let k = tab.partition_point(|&(xs, _)| xs <= x).max(1) - 1;
                            let (x0, y0) = tab[k];
                            let (x1, y1) = tab[k + 1];
                            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                        }
                    }
                }
            }
        }
    }

    /// Analytic Lipschitz constant of u₀.
    pub fn lipschitz(&self) -> f64 {
        match self {
            InitialData::Constant(_) => 0.0,
            InitialData::SinProfile(c) => c.iter().fold(0.0, |a: f64, &v| a.max(v.abs())),
            InitialData::Table(tabs) => {
                let mut worst: f64 = 0.0;
                for tab in tabs {
                    for w in tab.windows(2) {
                        let dxs = w[1].0 - w[0].0;
                        if dxs > 0.0 {
                            worst = worst.max(((w[1].1 - w[0].1) / dxs).abs());
                        }
                    }
                }
                worst
            }
        }
    }
}

/// Far-end Dirichlet trace t ↦ U(N_e, t) per edge.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryTrace {
    Constant(Vec<f64>),
    /// values_i · e^{−rate·t}; the trace of the decaying manufactured solution.
    ExpDecay {
        values: Vec<f64>,
        rate: f64,
    },
    /// values_i + slope · t; covers traces like u(x, t) = t.
    TimeRamp {
        values: Vec<f64>,
        slope: f64,
    },
}

impl BoundaryTrace {
    pub fn eval(&self, edge: usize, t: f64) -> f64 {
        match self {
            BoundaryTrace::Constant(v) => v[edge],
            BoundaryTrace::ExpDecay { values, rate } => values[edge] * (-rate * t).exp(),
            BoundaryTrace::TimeRamp { values, slope } => values[edge] + slope * t,
        }
    }
}

/// Discrete Cauchy problem on the truncated star network.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyProblem {
    pub spec: HamiltonianSpec,
    pub consts: SchemeConstants,
    pub u0: InitialData,
    pub horizon: f64,
    pub b: f64,
    pub far_end: BoundaryTrace,
    pub edge_length: f64,
}

impl CauchyProblem {
    pub fn new(
        spec: HamiltonianSpec,
        consts: SchemeConstants,
        u0: InitialData,
        horizon: f64,
        b: f64,
        far_end: BoundaryTrace,
        edge_length: f64,
    ) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidConstants(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let base = u0.eval(0, 0.0);
        for i in 1..spec.edges() {
            let d = (u0.eval(i, 0.0) - base).abs();
            if d > JUNCTION_TOL {
                return Err(Error::JunctionMismatch {
                    edge: i,
                    difference: d,
                });
            }
        }
        Ok(CauchyProblem {
            spec,
            consts,
            u0,
            horizon,
            b,
            far_end,
            edge_length,
        })
    }

    pub fn grid(&self, dx: f64) -> Result<NetworkGrid> {
        NetworkGrid::new(self.spec.edges(), self.edge_length, dx)
    }
}

/// Numerical parameters of one march.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyParams {
    pub dx: f64,
    pub dt: f64,
    pub eps: f64,
}

/// Time step satisfying the CFL window with a strict 1e−6 margin:
/// Δx/Δt = max(2ε/Δx, ε/Δx + 2L₁) + 1e−6.  At the coupled viscosity
/// ε = 2L₁Δx both arguments of the max agree and the formula reduces to
/// Δt = Δx²/(ε + 2L₁Δx + 1e−6·Δx).
pub fn suggest_dt(dx: f64, eps: f64, l1: f64) -> f64 {
    let denom = (2.0 * eps).max(eps + 2.0 * l1 * dx) + dx * 1e-6;
    dx * dx / denom
}

/// Relative slack for CFL comparisons: parameters coupled exactly to a
/// CFL boundary (ε = 2L₁Δx, Δx/Δt = 2ε/Δx) must not be rejected because a
/// recomputed ratio rounds one ulp past the bound.
const CFL_FP_SLACK: f64 = 1e-12;

#[inline]
fn cfl_le(a: f64, b: f64) -> bool {
    a <= b + CFL_FP_SLACK * (1.0 + a.abs().max(b.abs()))
}

/// Validate the Cauchy CFL conditions, reporting the first failing
/// inequality by name.
pub fn check_cfl_cauchy(params: &CauchyParams, consts: &SchemeConstants) -> Result<()> {
    let l1 = consts.l1;
    let ratio_x = 2.0 * params.eps / params.dx;
    let ratio_t = params.dx / params.dt;
    if !cfl_le(4.0 * l1, ratio_x) {
        return Err(Error::CflViolation {
            inequality: "4·L1 ≤ 2ε/Δx".into(),
            detail: format!("4·{l1} = {} > 2ε/Δx = {ratio_x}", 4.0 * l1),
        });
    }
    if !cfl_le(ratio_x, ratio_t) {
        return Err(Error::CflViolation {
            inequality: "2ε/Δx ≤ Δx/Δt".into(),
            detail: format!("2ε/Δx = {ratio_x} > Δx/Δt = {ratio_t}"),
        });
    }
    if !cfl_le(ratio_t, consts.l2) {
        return Err(Error::CflViolation {
            inequality: "Δx/Δt ≤ L2".into(),
            detail: format!("Δx/Δt = {ratio_t} > L2 = {}", consts.l2),
        });
    }
    if !cfl_le(2.0 * l1 * params.dx, params.eps) {
        return Err(Error::CflViolation {
            inequality: "ε ≥ 2·L1·Δx".into(),
            detail: format!("ε = {} < {}", params.eps, 2.0 * l1 * params.dx),
        });
    }
    let slack = ratio_t - params.eps / params.dx - 2.0 * l1;
    if !(slack >= -CFL_FP_SLACK * (1.0 + ratio_t.abs())) {
        return Err(Error::CflViolation {
            inequality: "Δx/Δt − ε/Δx − 2·L1 ≥ 0".into(),
            detail: format!("slack = {slack}"),
        });
    }
    Ok(())
}

/// Precomputed one-step map of the explicit scheme.
///
/// Building the stepper validates the data but deliberately not the CFL
/// conditions: monotonicity certification drives the step with violating
/// parameters on purpose.  [`march_cauchy`] and [`solve_cauchy`] do check.
pub struct CauchyStepper<'a> {
    prob: &'a CauchyProblem,
    params: CauchyParams,
    grid: NetworkGrid,
    g: NumericalHamiltonian,
    par: Parallelism,
    // per-node trig caches make manufactured sources O(1) per node per level
    sin_x: Vec<f64>,
    cos_x: Vec<f64>,
    xs: Vec<f64>,
}

impl<'a> CauchyStepper<'a> {
    pub fn new(prob: &'a CauchyProblem, params: CauchyParams, par: Parallelism) -> Result<Self> {
        let grid = prob.grid(params.dx)?;
        let g = make_numerical_hamiltonian(&prob.spec, &prob.consts)?;
        let ne = grid.nodes_per_edge();
        let xs: Vec<f64> = (0..=ne).map(|m| grid.x(m)).collect();
        let sin_x = xs.iter().map(|x| x.sin()).collect();
        let cos_x = xs.iter().map(|x| x.cos()).collect();
        Ok(CauchyStepper {
            prob,
            params,
            grid,
            g,
            par,
            sin_x,
            cos_x,
            xs,
        })
    }

    pub fn grid(&self) -> &NetworkGrid {
        &self.grid
    }

    /// Sample the initial level U(·, 0) = u₀(−mΔx).
    pub fn initial_level(&self) -> GridFunction {
        let mut u = GridFunction::constant(self.grid, self.prob.u0.eval(0, 0.0));
        for i in 0..self.grid.edges() {
            for m in 1..=self.grid.nodes_per_edge() {
                u.set_value(i, m, self.prob.u0.eval(i, self.xs[m]));
            }
        }
        u
    }

    /// Source values f_i(t, −mΔx) for m = 1..N_e, written into `out`.
    fn fill_source(&self, edge: usize, t: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.grid.nodes_per_edge() - 1);
        match self.prob.spec.source_term() {
            SourceTerm::Zero => out.fill(0.0),
            SourceTerm::Constant(v) => out.fill(*v),
            SourceTerm::SinProfile(c) => {
                let ci = c[edge];
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = ci * self.sin_x[j + 1];
                }
            }
            SourceTerm::StationaryManufactured {
                coeffs,
                hamiltonian,
            } => {
                let ci = coeffs[edge];
                fill_manufactured(
                    hamiltonian,
                    ci,
                    1.0,
                    0.0,
                    &self.sin_x[1..],
                    &self.cos_x[1..],
                    out,
                );
            }
            SourceTerm::CauchyManufactured {
                coeffs,
                hamiltonian,
            } => {
                let ci = coeffs[edge];
                let decay = (-t).exp();
                fill_manufactured(
                    hamiltonian,
                    ci,
                    decay,
                    -1.0,
                    &self.sin_x[1..],
                    &self.cos_x[1..],
                    out,
                );
            }
            other => {
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = other.eval(edge, t, self.xs[j + 1]);
                }
            }
        }
    }

    /// One explicit step from level s to level s + 1.
    pub fn step(&self, u: &GridFunction, s: usize) -> GridFunction {
        let mut out = u.clone();
        self.step_into(u, s, &mut out);
        out
    }

    pub fn step_into(&self, u: &GridFunction, s: usize, out: &mut GridFunction) {
        let ne = self.grid.nodes_per_edge();
        let k = self.grid.edges();
        let dx = self.params.dx;
        let dt = self.params.dt;
        let eps = self.params.eps;
        let inv_dx = 1.0 / dx;
        let t = s as f64 * dt;
        let t_next = (s + 1) as f64 * dt;

        let mut fbuf = vec![0.0; ne - 1];
        for i in 0..k {
            self.fill_source(i, t, &mut fbuf);
            let junction = u.junction();
            let src = u.edge_slice(i);
            let g = &self.g;
            let fvals = &fbuf;
            {
                let dst = out.edge_slice_mut(i);
                // interior nodes m = 1..N_e−1, slot j = m−1
                fill_indexed(self.par, &mut dst[..ne - 1], PAR_MIN_NODES, |j| {
                    let um = src[j];
                    let up = if j == 0 { junction } else { src[j - 1] };
                    let un = src[j + 1];
                    let dplus = (up - um) * inv_dx;
                    let dminus = (um - un) * inv_dx;
                    um - dt * (g.flux(i, eps, dx, dplus, dminus) - fvals[j])
                });
            }
            out.set_value(i, ne, self.prob.far_end.eval(i, t_next));
        }
        let mut sum1 = self.prob.b * dx;
        for i in 0..k {
            sum1 += out.value(i, 1);
        }
        out.set_value(0, 0, sum1 / k as f64);
    }
}

fn fill_manufactured(
    h: &HamiltonianKind,
    c: f64,
    decay: f64,
    sin_sign: f64,
    sin_x: &[f64],
    cos_x: &[f64],
    out: &mut [f64],
) {
    for j in 0..out.len() {
        out[j] = sin_sign * c * sin_x[j] * decay + h.eval(c * cos_x[j] * decay);
    }
}

/// One explicit step as a standalone operation (builds the stepper, no CFL
/// check; monotonicity diagnostics rely on that).
pub fn step_cauchy(
    u: &GridFunction,
    s: usize,
    prob: &CauchyProblem,
    params: &CauchyParams,
) -> Result<GridFunction> {
    let stepper = CauchyStepper::new(prob, *params, Parallelism::Sequential)?;
    Ok(stepper.step(u, s))
}

/// March from the sampled initial data to N = ⌈T/Δt⌉ steps, invoking
/// `on_level(s, t, level)` for every level including s = 0.  Streaming
/// access keeps long fine-grid marches at O(one level) memory.
pub fn march_cauchy<F>(
    prob: &CauchyProblem,
    params: &CauchyParams,
    par: Parallelism,
    mut on_level: F,
) -> Result<usize>
where
    F: FnMut(usize, f64, &GridFunction),
{
    check_cfl_cauchy(params, &prob.consts)?;
    let stepper = CauchyStepper::new(prob, *params, par)?;
    let steps = (prob.horizon / params.dt).ceil() as usize;
    let mut cur = stepper.initial_level();
    let mut next = cur.clone();
    on_level(0, 0.0, &cur);
    for s in 0..steps {
        stepper.step_into(&cur, s, &mut next);
        std::mem::swap(&mut cur, &mut next);
        on_level(s + 1, (s + 1) as f64 * params.dt, &cur);
    }
    Ok(steps)
}

/// March and keep every level.
pub fn solve_cauchy(
    prob: &CauchyProblem,
    params: &CauchyParams,
    par: Parallelism,
) -> Result<SpaceTimeGridFunction> {
    let mut levels = Vec::new();
    march_cauchy(prob, params, par, |_, _, level| levels.push(level.clone()))?;
    SpaceTimeGridFunction::new(levels, params.dt)
}

/// Discrete space-time Lipschitz seminorm: max |U(m,s) − U(k,r)| over
/// pairs with |m − k| + |s − r| ≤ 1, with junction-to-1_i adjacency on
/// every edge.
pub fn spacetime_lipschitz(u: &SpaceTimeGridFunction) -> f64 {
    let grid = *u.grid();
    let ne = grid.nodes_per_edge();
    let mut lip: f64 = 0.0;
    for s in 0..=u.steps() {
        let level = u.level(s);
        for i in 0..grid.edges() {
            for m in 0..ne {
                lip = lip.max((level.value(i, m + 1) - level.value(i, m)).abs());
            }
        }
        if s < u.steps() {
            let next = u.level(s + 1);
            lip = lip.max((next.junction() - level.junction()).abs());
            for i in 0..grid.edges() {
                for m in 1..=ne {
                    lip = lip.max((next.value(i, m) - level.value(i, m)).abs());
                }
            }
        }
    }
    lip
}

//! Constructive monotone solver for the discrete stationary Kirchhoff
//! problem
//!
//!   U(m) + F_i(D⁺U(m), D⁻U(m)) = f_i(−mΔx)          m = 1, …, N_e − 1,
//!   U(0) = (1/K) (Σ_i U(1_i) + BΔx),
//!   U(N_e) = far-end Dirichlet value,
//!
//! by Gauss-Seidel sweeps seeded from the constant sub/super-solutions ∓M.
//! Under the CFL bound 2L₁Δx ≤ ε ≤ L₂ every node map is nondecreasing in
//! its neighbors, so lower-seeded iterates climb and upper-seeded iterates
//! descend to the unique bounded fixed point.
//!
//! Because the numerical Hamiltonian is a central average, G evaluated on
//! (D⁺U(m), D⁻U(m)) does not depend on U(m): the interior node equation is
//! affine in the unknown and the sweep uses its exact root.  The public
//! [`node_update`] keeps the general bracketing bisection so that bracket
//! failures still surface CFL or cap misconfiguration; both routes agree to
//! the bisection tolerance and a test pins that.

use crate::error::{Error, Result};
use crate::hamiltonian::{
    make_numerical_hamiltonian, HamiltonianSpec, NumericalHamiltonian, SchemeConstants,
};
use crate::netgrid::{GridFunction, NetworkGrid};

/// Bisection tolerance of the scalar node equation.
const NODE_ROOT_TOL: f64 = 1e-13;
/// Slack when tracking sweep-wise monotonicity of the iterates.
const MONOTONE_SLACK: f64 = 1e-12;

/// Discrete stationary problem: continuous data, scheme constants, junction
/// flux constant B, and per-edge far-end Dirichlet values.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryProblem {
    pub spec: HamiltonianSpec,
    pub consts: SchemeConstants,
    pub edge_length: f64,
    pub b: f64,
    pub far_end: Vec<f64>,
}

impl StationaryProblem {
    pub fn new(
        spec: HamiltonianSpec,
        consts: SchemeConstants,
        edge_length: f64,
        b: f64,
        far_end: Vec<f64>,
    ) -> Result<Self> {
        if far_end.len() != spec.edges() {
            return Err(Error::InvalidConstants(format!(
                "{} far-end values for {} edges",
                far_end.len(),
                spec.edges()
            )));
        }
        let bound = consts.m + 1.0;
        if let Some(v) = far_end.iter().find(|v| v.abs() > bound) {
            return Err(Error::InvalidConstants(format!(
                "far-end value {v} outside [-(M+1), M+1] = [-{bound}, {bound}]"
            )));
        }
        if !(edge_length > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "edge length must be positive, got {edge_length}"
            )));
        }
        Ok(StationaryProblem {
            spec,
            consts,
            edge_length,
            b,
            far_end,
        })
    }

    pub fn grid(&self, dx: f64) -> Result<NetworkGrid> {
        NetworkGrid::new(self.spec.edges(), self.edge_length, dx)
    }
}

/// Numerical parameters of one stationary solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub dx: f64,
    pub eps: f64,
    pub tol_solve: f64,
    pub max_sweeps: u64,
}

impl SchemeParams {
    /// Default tolerance 1e−10·(1 + M) and sweep budget 10⁶.
    pub fn new(dx: f64, eps: f64, consts: &SchemeConstants) -> Self {
        SchemeParams {
            dx,
            eps,
            tol_solve: 1e-10 * (1.0 + consts.m),
            max_sweeps: 1_000_000,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol_solve = tol;
        self
    }

    pub fn with_max_sweeps(mut self, sweeps: u64) -> Self {
        self.max_sweeps = sweeps;
        self
    }
}

/// Which constant the Gauss-Seidel iteration starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveSeed {
    /// U ≡ −M; iterates are sweep-wise nondecreasing.
    Lower,
    /// U ≡ +M; iterates are sweep-wise nonincreasing.
    Upper,
}

/// Iteration diagnostics of a converged solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub sweeps: u64,
    pub final_update: f64,
    /// Whether every sweep moved every node in the seed's direction.
    pub monotone: bool,
}

/// Relative slack so boundary-coupled parameters survive rounding; see the
/// matching constant in the Cauchy checker.
const CFL_FP_SLACK: f64 = 1e-12;

/// Validate the stationary CFL window 2L₁Δx ≤ ε ≤ L₂.
pub fn check_cfl_stationary(params: &SchemeParams, consts: &SchemeConstants) -> Result<()> {
    let lower = 2.0 * consts.l1 * params.dx;
    if !(lower <= params.eps + CFL_FP_SLACK * (1.0 + lower.abs())) {
        return Err(Error::CflViolation {
            inequality: "2·L1·Δx ≤ ε".into(),
            detail: format!(
                "2·{}·{} = {lower} > ε = {}",
                consts.l1, params.dx, params.eps
            ),
        });
    }
    if !(params.eps <= consts.l2 + CFL_FP_SLACK * (1.0 + consts.l2.abs())) {
        return Err(Error::CflViolation {
            inequality: "ε ≤ L2".into(),
            detail: format!("ε = {} > L2 = {}", params.eps, consts.l2),
        });
    }
    Ok(())
}

/// Scheme residual of U: interior nodes get U + F(D⁺U, D⁻U) − f, the
/// junction gets U(0) − (1/K)(Σ U(1_i) + BΔx), the far end gets
/// U(N_e) − far_end.
pub fn stationary_residual(
    u: &GridFunction,
    prob: &StationaryProblem,
    params: &SchemeParams,
) -> Result<GridFunction> {
    let g = make_numerical_hamiltonian(&prob.spec, &prob.consts)?;
    let grid = *u.grid();
    let ne = grid.nodes_per_edge();
    let k = grid.edges();
    let dx = grid.dx();
    let mut res = GridFunction::constant(grid, 0.0);

    let mut sum1 = prob.b * dx;
    for i in 0..k {
        sum1 += u.value(i, 1);
    }
    res.set_value(0, 0, u.junction() - sum1 / k as f64);

    for i in 0..k {
        for m in 1..ne {
            let dplus = (u.value(i, m - 1) - u.value(i, m)) / dx;
            let dminus = (u.value(i, m) - u.value(i, m + 1)) / dx;
            let f = prob.spec.source(i, 0.0, grid.x(m));
            res.set_value(
                i,
                m,
                u.value(i, m) + g.flux(i, params.eps, dx, dplus, dminus) - f,
            );
        }
        res.set_value(i, ne, u.value(i, ne) - prob.far_end[i]);
    }
    Ok(res)
}

/// Scalar map whose root is the updated node value:
/// φ(v) = v + F_i((a − v)/Δx, (v − b)/Δx) − f.  Strictly increasing in v
/// with slope ≥ 1 under the CFL bound.
#[inline]
fn node_equation(
    g: &NumericalHamiltonian,
    edge: usize,
    eps: f64,
    dx: f64,
    a: f64,
    b: f64,
    f: f64,
    v: f64,
) -> f64 {
    let dplus = (a - v) / dx;
    let dminus = (v - b) / dx;
    v + g.flux(edge, eps, dx, dplus, dminus) - f
}

/// Exact root of the interior node equation.  The central-average G sees
/// only (D⁺ + D⁻)/2 = (a − b)/(2Δx), which is independent of v, so the
/// equation is affine: v(1 + 2ε/Δx²) = f − G + (ε/Δx²)(a + b).  The sweep
/// kernel inlines this formula; the tests pin it against the bisection.
#[cfg(test)]
#[inline]
fn node_root_closed_form(
    g: &NumericalHamiltonian,
    edge: usize,
    eta: f64,
    inv_two_dx: f64,
    a: f64,
    b: f64,
    f: f64,
) -> f64 {
    let gc = g.g_central(edge, (a - b) * inv_two_dx);
    (f - gc + eta * (a + b)) / (1.0 + 2.0 * eta)
}

/// Coefficients shared by every node update of one sweep.
#[derive(Clone, Copy)]
struct SweepCoeffs {
    eta: f64,
    inv_two_dx: f64,
    denom: f64,
    cap: f64,
    radius: f64,
    /// +1 for a lower seed (updates must not decrease), −1 for an upper seed.
    dir: f64,
}

/// One Gauss-Seidel pass over an edge, far end to junction, with the
/// Hamiltonian evaluation monomorphized out of the node loop.  `vals`
/// holds m = 1..=N_e (far-end slot pinned), `fv` the per-node sources for
/// m = 1..N_e.  Returns the largest update and whether all updates moved
/// in the seed direction.
#[inline(always)]
fn sweep_edge<H: Fn(f64) -> f64>(
    h: H,
    c: SweepCoeffs,
    junction: f64,
    vals: &mut [f64],
    fv: &[f64],
) -> (f64, bool) {
    debug_assert_eq!(fv.len() + 1, vals.len());
    let mut max_change: f64 = 0.0;
    let mut monotone = true;
    // descending sweep: the value just written is the next node's b-neighbor
    let mut b = vals[vals.len() - 1];
    for j in (1..vals.len() - 1).rev() {
        let a = vals[j - 1];
        let q = ((a - b) * c.inv_two_dx).clamp(-c.radius, c.radius);
        let v = (fv[j] - h(q).min(c.cap) + c.eta * (a + b)) * c.denom;
        let delta = v - vals[j];
        max_change = max_change.max(delta.abs());
        if delta * c.dir < -MONOTONE_SLACK {
            monotone = false;
        }
        vals[j] = v;
        b = v;
    }
    // node m = 1 reads the junction as its junction-ward neighbor
    let q = ((junction - b) * c.inv_two_dx).clamp(-c.radius, c.radius);
    let v = (fv[0] - h(q).min(c.cap) + c.eta * (junction + b)) * c.denom;
    let delta = v - vals[0];
    max_change = max_change.max(delta.abs());
    if delta * c.dir < -MONOTONE_SLACK {
        monotone = false;
    }
    vals[0] = v;
    (max_change, monotone)
}

/// Bisection for the node equation with a prebuilt numerical Hamiltonian.
/// Brackets on [−(M+1), M+1], retries once on the tenfold bracket, then
/// reports the missing sign change.
pub(crate) fn node_root_bisect(
    g: &NumericalHamiltonian,
    edge: usize,
    m: usize,
    eps: f64,
    dx: f64,
    a: f64,
    b: f64,
    f: f64,
    m_bound: f64,
) -> Result<f64> {
    let phi = |v: f64| node_equation(g, edge, eps, dx, a, b, f, v);
    let half = m_bound + 1.0;
    let mut lo = -half;
    let mut hi = half;
    if !(phi(lo) <= 0.0 && phi(hi) >= 0.0) {
        lo = -10.0 * half;
        hi = 10.0 * half;
        if !(phi(lo) <= 0.0 && phi(hi) >= 0.0) {
            return Err(Error::BracketFailure {
                edge,
                node: m,
                lo,
                hi,
            });
        }
    }
    while hi - lo > NODE_ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if phi(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solve the node equation at (edge, m) holding the neighbors fixed, by
/// bisection on [−(M+1), M+1] with one expansion retry on the tenfold
/// bracket.  A missing sign change signals CFL or cap misconfiguration.
pub fn node_update(
    u: &GridFunction,
    edge: usize,
    m: usize,
    prob: &StationaryProblem,
    params: &SchemeParams,
) -> Result<f64> {
    let ne = u.grid().nodes_per_edge();
    if m == 0 || m >= ne {
        return Err(Error::IndexError(format!(
            "node_update needs an interior node, got m = {m} with N_e = {ne}"
        )));
    }
    let g = make_numerical_hamiltonian(&prob.spec, &prob.consts)?;
    let dx = u.grid().dx();
    let a = u.value(edge, m - 1);
    let b = u.value(edge, m + 1);
    let f = prob.spec.source(edge, 0.0, u.grid().x(m));
    node_root_bisect(&g, edge, m, params.eps, dx, a, b, f, prob.consts.m)
}

/// Gauss-Seidel solve of the stationary scheme from a constant seed.
///
/// Each sweep updates interior nodes far-end-to-junction on every edge,
/// then the junction from the freshly updated neighbors.  The far-end
/// Dirichlet values are pinned throughout.
///
/// Termination: the sweep updates decay geometrically with the contraction
/// factor of the node maps, so the distance to the fixed point is about
/// (update)·ρ/(1 − ρ).  The iteration stops once that extrapolated tail is
/// below `tol_solve`; the final update is then below `tol_solve` as well,
/// and lower- and upper-seeded runs land within a few `tol_solve` of each
/// other even on diffusion-dominated grids where ρ is close to one.
pub fn solve_stationary(
    prob: &StationaryProblem,
    params: &SchemeParams,
    seed: SolveSeed,
) -> Result<(GridFunction, SolveStats)> {
    check_cfl_stationary(params, &prob.consts)?;
    let grid = prob.grid(params.dx)?;
    let g = make_numerical_hamiltonian(&prob.spec, &prob.consts)?;

    let k = grid.edges();
    let ne = grid.nodes_per_edge();
    let dx = grid.dx();
    let eta = params.eps / (dx * dx);
    let inv_two_dx = 1.0 / (2.0 * dx);

    let seed_value = match seed {
        SolveSeed::Lower => -prob.consts.m,
        SolveSeed::Upper => prob.consts.m,
    };
    let mut u = GridFunction::constant(grid, seed_value);
    for i in 0..k {
        u.set_value(i, ne, prob.far_end[i]);
    }

    // source values are time-independent here; hoist them out of the sweeps
    let fvals: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (1..ne)
                .map(|m| prob.spec.source(i, 0.0, grid.x(m)))
                .collect()
        })
        .collect();

    let coeffs = SweepCoeffs {
        eta,
        inv_two_dx,
        denom: 1.0 / (1.0 + 2.0 * eta),
        cap: g.cap(),
        radius: g.radius(),
        dir: match seed {
            SolveSeed::Lower => 1.0,
            SolveSeed::Upper => -1.0,
        },
    };

    let mut monotone = true;
    let mut junction = u.junction();
    let mut last_update = f64::INFINITY;
    let mut prev_change = f64::INFINITY;
    for sweep in 1..=params.max_sweeps {
        let mut max_change: f64 = 0.0;
        for i in 0..k {
            let fv = &fvals[i][..];
            let vals = u.edge_slice_mut(i);
            use crate::hamiltonian::HamiltonianKind as HK;
            let (change, mono) = match g.kind(i) {
                HK::Abs => sweep_edge(|p: f64| p.abs(), coeffs, junction, vals, fv),
                HK::Quadratic => sweep_edge(|p: f64| p * p, coeffs, junction, vals, fv),
                HK::ShiftedQuadratic(a) => {
                    let a = *a;
                    sweep_edge(|p: f64| (p - a) * (p - a), coeffs, junction, vals, fv)
                }
                kind @ HK::Poly(_) => sweep_edge(|p: f64| kind.eval(p), coeffs, junction, vals, fv),
            };
            max_change = max_change.max(change);
            monotone &= mono;
        }
        let mut sum1 = prob.b * dx;
        for i in 0..k {
            sum1 += u.value(i, 1);
        }
        let new_junction = sum1 / k as f64;
        let delta = new_junction - junction;
        max_change = max_change.max(delta.abs());
        match seed {
            SolveSeed::Lower if delta < -MONOTONE_SLACK => monotone = false,
            SolveSeed::Upper if delta > MONOTONE_SLACK => monotone = false,
            _ => {}
        }
        junction = new_junction;
        u.set_value(0, 0, junction);

        last_update = max_change;
        // geometric tail extrapolation; the conservative ratio floor keeps
        // the final update itself below the tolerance
        let ratio = if prev_change.is_finite() && prev_change > 0.0 {
            (max_change / prev_change).clamp(0.5, 0.999_999)
        } else {
            0.999_999
        };
        let remaining = max_change * ratio / (1.0 - ratio);
        prev_change = max_change;
        // once updates sit at the f64 resolution of the iterate the grid
        // function cannot move any closer to the fixed point
        let fp_floor = 1e-14 * (1.0 + prob.consts.m);
        if max_change <= fp_floor || (max_change < params.tol_solve && remaining < params.tol_solve)
        {
            return Ok((
                u,
                SolveStats {
                    sweeps: sweep,
                    final_update: max_change,
                    monotone,
                },
            ));
        }
    }
    Err(Error::NoConvergence {
        sweeps: params.max_sweeps,
        last_update,
    })
}

/// Far-end fallback for problems without a reference trace: pre-solve on
/// the doubled domain with zero far data and sample the solution at −ℓ.
/// The extra length keeps the pre-solve's own boundary layer away from the
/// sampled trace.
pub fn far_end_fallback(
    spec: &HamiltonianSpec,
    consts: &SchemeConstants,
    edge_length: f64,
    dx: f64,
) -> Result<Vec<f64>> {
    let pre = StationaryProblem::new(
        spec.clone(),
        *consts,
        2.0 * edge_length,
        0.0,
        vec![0.0; spec.edges()],
    )?;
    let params = SchemeParams::new(dx, 2.0 * consts.l1 * dx, consts);
    let (u, _) = solve_stationary(&pre, &params, SolveSeed::Lower)?;
    let m_star = (edge_length / dx).round() as usize;
    Ok((0..spec.edges()).map(|i| u.value(i, m_star)).collect())
}

/// Discrete Lipschitz seminorm: the largest |U(m+1) − U(m)| over all
/// consecutive node pairs, junction-to-1_i pairs included.
pub fn discrete_lipschitz(u: &GridFunction) -> f64 {
    let grid = u.grid();
    let mut lip: f64 = 0.0;
    for i in 0..grid.edges() {
        for m in 0..grid.nodes_per_edge() {
            lip = lip.max((u.value(i, m + 1) - u.value(i, m)).abs());
        }
    }
    lip
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{HamiltonianKind, SourceTerm};
    use crate::rng::SplitMix64;

    fn abs_problem_f1(k: usize, ell: f64) -> StationaryProblem {
        let spec =
            HamiltonianSpec::uniform(k, HamiltonianKind::Abs, SourceTerm::Constant(1.0)).unwrap();
        let consts = SchemeConstants::derive(&spec, ell, 0.0, 400).unwrap();
        let far_end = vec![1.0; k];
        StationaryProblem::new(spec, consts, ell, 0.0, far_end).unwrap()
    }

    fn zero_problem(k: usize, ell: f64) -> StationaryProblem {
        let spec = HamiltonianSpec::uniform(k, HamiltonianKind::Abs, SourceTerm::Zero).unwrap();
        let consts = SchemeConstants::derive(&spec, ell, 0.0, 400).unwrap();
        StationaryProblem::new(spec, consts, ell, 0.0, vec![0.0; k]).unwrap()
    }

    #[test]
    fn cfl_window_accepts_boundary_and_names_failures() {
        let mut consts = SchemeConstants {
            m: 1.0,
            sup_source: 1.0,
            cap: 3.0,
            slope_radius: 4.0,
            l1: 1.0,
            l2: 1.0,
        };
        let params = SchemeParams::new(0.1, 0.2, &consts);
        assert!(check_cfl_stationary(&params, &consts).is_ok());

        let params = SchemeParams::new(0.1, 0.1, &consts);
        match check_cfl_stationary(&params, &consts) {
            Err(Error::CflViolation { inequality, .. }) => {
                assert!(inequality.contains("2·L1·Δx"))
            }
            other => panic!("expected lower-bound violation, got {other:?}"),
        }

        consts.l2 = 1.0;
        let params = SchemeParams::new(0.1, 2.0, &consts);
        match check_cfl_stationary(&params, &consts) {
            Err(Error::CflViolation { inequality, .. }) => assert!(inequality.contains("L2")),
            other => panic!("expected upper-bound violation, got {other:?}"),
        }
    }

    #[test]
    fn constant_solutions_have_zero_residual() {
        let prob = abs_problem_f1(3, 2.0);
        let params = SchemeParams::new(0.1, 2.0 * prob.consts.l1 * 0.1, &prob.consts);
        let grid = prob.grid(params.dx).unwrap();
        let ones = GridFunction::constant(grid, 1.0);
        let res = stationary_residual(&ones, &prob, &params).unwrap();
        assert!(res.sup_abs() < 1e-14);

        let prob0 = zero_problem(3, 2.0);
        let grid = prob0.grid(params.dx).unwrap();
        let zeros = GridFunction::constant(grid, 0.0);
        let res = stationary_residual(&zeros, &prob0, &params).unwrap();
        assert!(res.sup_abs() < 1e-14);
    }

    #[test]
    fn node_update_fixes_exact_solutions() {
        let prob = abs_problem_f1(2, 2.0);
        let params = SchemeParams::new(0.1, 2.0 * prob.consts.l1 * 0.1, &prob.consts);
        let grid = prob.grid(params.dx).unwrap();

        let ones = GridFunction::constant(grid, 1.0);
        let v = node_update(&ones, 0, 3, &prob, &params).unwrap();
        assert!((v - 1.0).abs() < 1e-12);

        let prob0 = zero_problem(2, 2.0);
        let zeros = GridFunction::constant(grid, 0.0);
        let v = node_update(&zeros, 1, 5, &prob0, &params).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn node_update_matches_grid_scan_oracle_and_closed_form() {
        // oracle: scan the scalar map on a 1e6-point grid over the bracket
        let spec =
            HamiltonianSpec::uniform(2, HamiltonianKind::Quadratic, SourceTerm::Constant(0.4))
                .unwrap();
        let consts = SchemeConstants::derive(&spec, 2.0, 0.0, 200).unwrap();
        let prob = StationaryProblem::new(spec, consts, 2.0, 0.0, vec![0.0, 0.0]).unwrap();
        let params = SchemeParams::new(0.1, 2.0 * consts.l1 * 0.1, &consts);
        let grid = prob.grid(params.dx).unwrap();
        let g = make_numerical_hamiltonian(&prob.spec, &prob.consts).unwrap();
        let eta = params.eps / (params.dx * params.dx);

        let mut rng = SplitMix64::new(314159);
        for _ in 0..20 {
            let mut u = GridFunction::constant(grid, 0.0);
            for i in 0..2 {
                for m in 0..=grid.nodes_per_edge() {
                    u.set_value(i, m, rng.range(-1.0, 1.0));
                }
            }
            let m = 1 + rng.below(grid.nodes_per_edge() - 1);
            let root = node_update(&u, 0, m, &prob, &params).unwrap();

            let a = u.value(0, m - 1);
            let b = u.value(0, m + 1);
            let f = prob.spec.source(0, 0.0, grid.x(m));
            let phi = |v: f64| node_equation(&g, 0, params.eps, params.dx, a, b, f, v);
            // scan the bracket on a 1e6-point grid, then rescan the winning
            // cell so the oracle resolution beats the comparison tolerance
            let half = prob.consts.m + 1.0;
            let scan = |lo: f64, hi: f64, n: u64| {
                let mut best = f64::INFINITY;
                let mut best_v = lo;
                for kk in 0..=n {
                    let v = lo + (hi - lo) * kk as f64 / n as f64;
                    let r = phi(v).abs();
                    if r < best {
                        best = r;
                        best_v = v;
                    }
                }
                best_v
            };
            let coarse = scan(-half, half, 1_000_000);
            let cell = 2.0 * half / 1_000_000.0;
            let fine = scan(coarse - cell, coarse + cell, 10_000);
            assert!(
                (root - fine).abs() <= 1e-6,
                "bisection {root} vs scan {fine}"
            );

            let closed = node_root_closed_form(&g, 0, eta, 1.0 / (2.0 * params.dx), a, b, f);
            assert!(
                (root - closed).abs() <= 1e-12,
                "bisection {root} vs closed form {closed}"
            );
        }
    }

    #[test]
    fn node_update_rejects_boundary_nodes() {
        let prob = abs_problem_f1(2, 2.0);
        let params = SchemeParams::new(0.1, 2.0 * prob.consts.l1 * 0.1, &prob.consts);
        let grid = prob.grid(params.dx).unwrap();
        let u = GridFunction::constant(grid, 0.0);
        assert!(node_update(&u, 0, 0, &prob, &params).is_err());
        assert!(node_update(&u, 0, grid.nodes_per_edge(), &prob, &params).is_err());
    }

    #[test]
    fn solve_reproduces_constant_solutions_from_both_seeds() {
        let prob = abs_problem_f1(3, 2.0);
        let params = SchemeParams::new(0.1, 2.0 * prob.consts.l1 * 0.1, &prob.consts)
            .with_tolerance(1e-13 * (1.0 + prob.consts.m));
        let (lo, stats_lo) = solve_stationary(&prob, &params, SolveSeed::Lower).unwrap();
        let (hi, stats_hi) = solve_stationary(&prob, &params, SolveSeed::Upper).unwrap();
        assert!(stats_lo.monotone && stats_hi.monotone);
        let ones = GridFunction::constant(*lo.grid(), 1.0);
        assert!(lo.sup_diff(&ones).unwrap() <= 1e-10);
        assert!(hi.sup_diff(&ones).unwrap() <= 1e-10);
        assert!(lo.sup_diff(&hi).unwrap() <= 10.0 * params.tol_solve);
    }

    #[test]
    fn solve_zero_problem_is_zero() {
        let prob = zero_problem(2, 2.0);
        let params = SchemeParams::new(0.05, 2.0 * prob.consts.l1 * 0.05, &prob.consts)
            .with_tolerance(1e-13);
        let (u, _) = solve_stationary(&prob, &params, SolveSeed::Lower).unwrap();
        assert!(u.sup_abs() <= 1e-10);
    }

    #[test]
    fn converged_solution_satisfies_bound_junction_and_small_residual() {
        let spec = HamiltonianSpec::uniform(
            3,
            HamiltonianKind::Quadratic,
            SourceTerm::SinProfile(vec![0.8, -0.3, 0.5]),
        )
        .unwrap();
        let consts = SchemeConstants::derive(&spec, 3.0, 0.0, 400).unwrap();
        let prob = StationaryProblem::new(spec, consts, 3.0, 0.0, vec![0.0; 3]).unwrap();
        let params = SchemeParams::new(0.05, 2.0 * consts.l1 * 0.05, &consts);
        let (u, stats) = solve_stationary(&prob, &params, SolveSeed::Lower).unwrap();
        assert!(stats.monotone);

        // maximum principle
        assert!(u.sup_abs() <= consts.m + 10.0 * params.tol_solve);

        // junction identity: it is imposed as the last step of each sweep
        let mut sum1 = 0.0;
        for i in 0..3 {
            sum1 += u.value(i, 1);
        }
        assert!((u.junction() - sum1 / 3.0).abs() <= 1e-12);

        // interior residual at the scale of the termination tolerance,
        // amplified by the diffusion number of the node map
        let res = stationary_residual(&u, &prob, &params).unwrap();
        let eta = params.eps / (params.dx * params.dx);
        let mut interior_worst: f64 = 0.0;
        for i in 0..3 {
            for m in 1..u.grid().nodes_per_edge() {
                interior_worst = interior_worst.max(res.value(i, m).abs());
            }
        }
        assert!(interior_worst <= 100.0 * params.tol_solve * (1.0 + 2.0 * eta));

        // discrete Lipschitz bound at the slope radius
        let lip = discrete_lipschitz(&u);
        assert!(
            lip <= consts.slope_radius * params.dx + 10.0 * params.tol_solve,
            "Lip(U) = {lip} vs R dx = {}",
            consts.slope_radius * params.dx
        );
    }

    #[test]
    fn comparison_principle_on_ordered_sources() {
        let mut rng = SplitMix64::new(777);
        for trial in 0..5 {
            let base = rng.range(-0.5, 0.5);
            let bump = rng.range(0.1, 0.6);
            let mk = |c: f64| {
                let spec = HamiltonianSpec::uniform(
                    2,
                    HamiltonianKind::Quadratic,
                    SourceTerm::Constant(c),
                )
                .unwrap();
                let consts = SchemeConstants::derive(&spec, 2.0, 0.0, 200).unwrap();
                StationaryProblem::new(spec, consts, 2.0, 0.0, vec![0.0, 0.0]).unwrap()
            };
            let pv = mk(base);
            let pw = mk(base + bump);
            // shared constants so both solves use the same scheme
            let consts = if pv.consts.m > pw.consts.m {
                pv.consts
            } else {
                pw.consts
            };
            let pv = StationaryProblem { consts, ..pv };
            let pw = StationaryProblem { consts, ..pw };
            let params = SchemeParams::new(0.1, 2.0 * consts.l1 * 0.1, &consts);
            let (v, _) = solve_stationary(&pv, &params, SolveSeed::Lower).unwrap();
            let (w, _) = solve_stationary(&pw, &params, SolveSeed::Lower).unwrap();
            for i in 0..2 {
                for m in 0..=v.grid().nodes_per_edge() {
                    assert!(
                        v.value(i, m) <= w.value(i, m) + 10.0 * params.tol_solve,
                        "trial {trial}: comparison failed at ({i}, {m})"
                    );
                }
            }
        }
    }

    #[test]
    fn discrete_lipschitz_hand_examples() {
        let g = NetworkGrid::new(2, 1.5, 0.5).unwrap();
        let mut u = GridFunction::constant(g, 0.0);
        u.set_value(0, 1, 1.0);
        u.set_value(0, 2, 3.0);
        u.set_value(0, 3, 3.0);
        assert_eq!(discrete_lipschitz(&u), 2.0);
        assert_eq!(discrete_lipschitz(&GridFunction::constant(g, 4.0)), 0.0);
    }

    #[test]
    fn general_b_shifts_the_junction_rule() {
        let spec =
            HamiltonianSpec::uniform(3, HamiltonianKind::Quadratic, SourceTerm::Zero).unwrap();
        let consts = SchemeConstants::derive(&spec, 2.0, 0.0, 200).unwrap();
        let prob = StationaryProblem::new(spec, consts, 2.0, 1.5, vec![0.0; 3]).unwrap();
        let params = SchemeParams::new(0.1, 2.0 * consts.l1 * 0.1, &consts);
        let (u, _) = solve_stationary(&prob, &params, SolveSeed::Lower).unwrap();
        let mut sum1 = 1.5 * params.dx;
        for i in 0..3 {
            sum1 += u.value(i, 1);
        }
        assert!((u.junction() - sum1 / 3.0).abs() <= 1e-12);
    }
}

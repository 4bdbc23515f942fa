//! Checkable diagnostics: the reformulated Kirchhoff junction residuals,
//! sup/inf-convolutions in time with the discrete subsolution property,
//! and empirical monotonicity certification of both schemes.
//!
//! The junction verifier rests on the equivalent characterization of the
//! Kirchhoff condition: a continuous function solves the stationary
//! problem iff it solves the edge equations and
//!
//!   u(0) + min_i min_{θ∈[0,1]} H_i(ξ_i + θ(Σ_j ξ_j)⁻) − f_i(0) ≤ 0,
//!   u(0) + max_i max_{θ∈[0,1]} H_i(ξ_i − θ(Σ_j ξ_j)⁺) − f_i(0) ≥ 0,
//!
//! where ξ_i are the one-sided junction slopes.  θ is scanned on a uniform
//! grid because H is only Lipschitz; the scan error is explicit,
//! Lip(H)·|flux|/n_theta per refinement of the grid.

use crate::cauchy::{spacetime_lipschitz, CauchyParams, CauchyProblem, CauchyStepper};
use crate::error::{Error, Result};
use crate::hamiltonian::{make_numerical_hamiltonian, HamiltonianSpec};
use crate::netgrid::{GridFunction, SpaceTimeGridFunction};
use crate::par::Parallelism;
use crate::rng::SplitMix64;
use crate::stationary::{node_root_bisect, SchemeParams, StationaryProblem};

/// Default θ-scan resolution: 1001 uniform points on [0, 1].
pub const DEFAULT_THETA_POINTS: usize = 1000;

/// One-sided junction data of a grid function: the value at the junction,
/// the per-edge inward slopes ξ_i, and the total flux Σ ξ_i.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionState {
    pub u0: f64,
    pub xi: Vec<f64>,
    pub flux: f64,
}

impl JunctionState {
    pub fn new(u0: f64, xi: Vec<f64>) -> Self {
        let flux = xi.iter().sum();
        JunctionState { u0, xi, flux }
    }
}

/// Finite-difference order of the junction slope estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeOrder {
    /// ξ_i = (U(0) − U(1_i))/Δx, the scheme's own D⁺U(1_i).
    One,
    /// ξ_i = (3U(0) − 4U(1_i) + U(2_i))/(2Δx).
    Two,
}

/// Estimate the one-sided junction slopes of a grid function.
pub fn junction_slopes(u: &GridFunction, order: SlopeOrder) -> JunctionState {
    let grid = u.grid();
    let dx = grid.dx();
    let u0 = u.junction();
    let xi = (0..grid.edges())
        .map(|i| match order {
            SlopeOrder::One => (u0 - u.value(i, 1)) / dx,
            SlopeOrder::Two => (3.0 * u0 - 4.0 * u.value(i, 1) + u.value(i, 2)) / (2.0 * dx),
        })
        .collect();
    JunctionState::new(u0, xi)
}

/// Result of one θ-scan: the residual value and where it was attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaScan {
    pub value: f64,
    pub edge: usize,
    pub theta: f64,
}

/// Sub-solution residual u(0) + min_i min_θ [H_i(ξ_i + θ(Σξ)⁻) − f_i(0)].
/// For a solution this must be ≤ 0 up to the verification tolerance.
pub fn junction_sub_residual(
    state: &JunctionState,
    spec: &HamiltonianSpec,
    t: Option<f64>,
    n_theta: usize,
) -> ThetaScan {
    assert!(n_theta >= 2, "need at least a 3-point θ grid");
    let neg = (-state.flux).max(0.0);
    let time = t.unwrap_or(0.0);
    let mut best = ThetaScan {
        value: f64::INFINITY,
        edge: 0,
        theta: 0.0,
    };
    for (i, &xi) in state.xi.iter().enumerate() {
        let f0 = spec.source(i, time, 0.0);
        for k in 0..=n_theta {
            let theta = k as f64 / n_theta as f64;
            let v = spec.h(i, xi + theta * neg) - f0;
            if v < best.value {
                best = ThetaScan {
                    value: v,
                    edge: i,
                    theta,
                };
            }
        }
    }
    best.value += state.u0;
    best
}

/// Super-solution residual u(0) + max_i max_θ [H_i(ξ_i − θ(Σξ)⁺) − f_i(0)].
/// For a solution this must be ≥ 0 up to the verification tolerance.
pub fn junction_super_residual(
    state: &JunctionState,
    spec: &HamiltonianSpec,
    t: Option<f64>,
    n_theta: usize,
) -> ThetaScan {
    assert!(n_theta >= 2, "need at least a 3-point θ grid");
    let pos = state.flux.max(0.0);
    let time = t.unwrap_or(0.0);
    let mut best = ThetaScan {
        value: f64::NEG_INFINITY,
        edge: 0,
        theta: 0.0,
    };
    for (i, &xi) in state.xi.iter().enumerate() {
        let f0 = spec.source(i, time, 0.0);
        for k in 0..=n_theta {
            let theta = k as f64 / n_theta as f64;
            let v = spec.h(i, xi - theta * pos) - f0;
            if v > best.value {
                best = ThetaScan {
                    value: v,
                    edge: i,
                    theta,
                };
            }
        }
    }
    best.value += state.u0;
    best
}

/// Both junction residuals with their argmin/argmax metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionResidual {
    pub sub: ThetaScan,
    pub sup: ThetaScan,
}

pub fn junction_residuals(
    state: &JunctionState,
    spec: &HamiltonianSpec,
    t: Option<f64>,
    n_theta: usize,
) -> JunctionResidual {
    JunctionResidual {
        sub: junction_sub_residual(state, spec, t, n_theta),
        sup: junction_super_residual(state, spec, t, n_theta),
    }
}

/// Sup-convolution in time of a discrete space-time function:
/// U^θ(k, t) = max_s [ U(k, s) − (t − sΔt)²/(2θ) ], the maximum taken over
/// the finite set s ∈ {0, …, N}.
pub fn sup_convolution_time(
    u: &SpaceTimeGridFunction,
    theta: f64,
    edge: usize,
    m: usize,
    t: f64,
) -> f64 {
    sup_convolution_argmax(u, theta, edge, m, t).0
}

/// Sup-convolution together with the largest maximizing time index.
pub fn sup_convolution_argmax(
    u: &SpaceTimeGridFunction,
    theta: f64,
    edge: usize,
    m: usize,
    t: f64,
) -> (f64, usize) {
    assert!(theta > 0.0);
    let dt = u.dt();
    let mut best = f64::NEG_INFINITY;
    let mut best_s = 0;
    for s in 0..=u.steps() {
        let d = t - s as f64 * dt;
        let v = u.value(edge, m, s) - d * d / (2.0 * theta);
        if v >= best {
            best = v;
            best_s = s;
        }
    }
    (best, best_s)
}

/// Inf-convolution in time over a supplied finite lattice of
/// (time, value) samples: u_θ(t) = min_j [ u(s_j) + (t − s_j)²/(2θ) ].
pub fn inf_convolution_time(samples: &[(f64, f64)], theta: f64, t: f64) -> f64 {
    assert!(theta > 0.0);
    assert!(!samples.is_empty());
    samples
        .iter()
        .map(|&(s, v)| v + (t - s) * (t - s) / (2.0 * theta))
        .fold(f64::INFINITY, f64::min)
}

/// Outcome of the discrete subsolution check of the sup-convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct SupConvolutionReport {
    /// T_θ = 2·Lip·θ with Lip the space-time Lipschitz constant of U
    /// normalized by max(Δx, Δt).
    pub t_theta: f64,
    /// Lattice times t = rΔt with t ≥ 2T_θ − Δt and t + Δt ≤ NΔt.
    pub times_checked: usize,
    /// max over checked (k, t) of LHS − Δt·f; ≤ tolerance for a valid U.
    pub max_interior_excess: f64,
    /// max over checked t of U^θ(0, t+Δt) − (1/K)(Σ U^θ(1_i, t+Δt) + BΔx).
    pub max_junction_excess: f64,
}

/// Check the one-step subsolution inequality of the sup-convolution of a
/// Cauchy solution:
///
///   U^θ(k, t+Δt) − U^θ(k, t) + Δt·F(D⁺U^θ(k, t), D⁻U^θ(k, t)) ≤ Δt·f_i
///
/// on interior nodes, and the junction average inequality, at every lattice
/// time t ≥ 2T_θ − Δt.  The source is evaluated at the time level feeding
/// the maximizer of U^θ(k, t + Δt), which is the level the inequality
/// inherits the scheme from.  Requires T_θ − 2Δt > 0.
pub fn check_sup_convolution_subsolution(
    u: &SpaceTimeGridFunction,
    prob: &CauchyProblem,
    params: &CauchyParams,
    theta: f64,
) -> Result<SupConvolutionReport> {
    let g = make_numerical_hamiltonian(&prob.spec, &prob.consts)?;
    let grid = *u.grid();
    let dt = u.dt();
    let dx = grid.dx();
    let ne = grid.nodes_per_edge();
    let k = grid.edges();

    let lip = spacetime_lipschitz(u) / dx.max(dt);
    let t_theta = 2.0 * lip * theta;
    if !(t_theta - 2.0 * dt > 0.0) {
        return Err(Error::InvalidConstants(format!(
            "T_θ − 2Δt = {} must be positive; enlarge θ or refine Δt",
            t_theta - 2.0 * dt
        )));
    }

    let r_min = (((2.0 * t_theta - dt) / dt).ceil().max(0.0)) as usize;
    let n = u.steps();
    let mut report = SupConvolutionReport {
        t_theta,
        times_checked: 0,
        max_interior_excess: f64::NEG_INFINITY,
        max_junction_excess: f64::NEG_INFINITY,
    };

    let conv_level = |t: f64| -> (GridFunction, Vec<Vec<usize>>) {
        let mut level = GridFunction::constant(grid, 0.0);
        let mut arg = vec![vec![0usize; ne + 1]; k];
        let (v0, s0) = sup_convolution_argmax(u, theta, 0, 0, t);
        level.set_value(0, 0, v0);
        for i in 0..k {
            arg[i][0] = s0;
            for m in 1..=ne {
                let (v, s) = sup_convolution_argmax(u, theta, i, m, t);
                level.set_value(i, m, v);
                arg[i][m] = s;
            }
        }
        (level, arg)
    };

    for r in r_min..n {
        let t = r as f64 * dt;
        let t_next = t + dt;
        let (cur, _) = conv_level(t);
        let (next, arg_next) = conv_level(t_next);
        report.times_checked += 1;

        for i in 0..k {
            for m in 1..ne {
                let s_star = arg_next[i][m];
                if s_star == 0 {
                    // outside the window the transfer argument needs; the
                    // time restriction is supposed to prevent this
                    return Err(Error::InvalidConstants(format!(
                        "sup-convolution maximizer at level 0 for t = {t_next}"
                    )));
                }
                let dplus = (cur.value(i, m - 1) - cur.value(i, m)) / dx;
                let dminus = (cur.value(i, m) - cur.value(i, m + 1)) / dx;
                let lhs = next.value(i, m) - cur.value(i, m)
                    + dt * g.flux(i, params.eps, dx, dplus, dminus);
                let f = prob.spec.source(i, (s_star - 1) as f64 * dt, grid.x(m));
                report.max_interior_excess = report.max_interior_excess.max(lhs - dt * f);
            }
        }

        let mut avg = prob.b * dx;
        for i in 0..k {
            avg += next.value(i, 1);
        }
        avg /= k as f64;
        report.max_junction_excess = report.max_junction_excess.max(next.junction() - avg);
    }

    Ok(report)
}

/// Outcome of an empirical monotonicity certification.
#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneCertificate {
    Pass { checks: u64 },
    Counterexample(MonotoneCounterexample),
}

impl MonotoneCertificate {
    pub fn passed(&self) -> bool {
        matches!(self, MonotoneCertificate::Pass { .. })
    }
}

/// A found monotonicity violation: bumping `perturbed_node` up by `delta`
/// made `output_node` decrease by `decrease`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCounterexample {
    pub trial: usize,
    pub perturbed_node: (usize, usize),
    pub output_node: (usize, usize),
    pub delta: f64,
    pub decrease: f64,
}

/// Floating-point slack when comparing perturbed step outputs.
const MONOTONE_FP_SLACK: f64 = 1e-12;

/// Certify monotonicity of the explicit one-step map by exhaustive
/// single-node upward perturbations of `trials` random fields.  Every
/// output node must not decrease; the first violation is returned as a
/// counterexample.  Deliberately usable with CFL-violating parameters.
pub fn certify_monotone_cauchy(
    prob: &CauchyProblem,
    params: &CauchyParams,
    trials: usize,
    delta: f64,
    seed: u64,
) -> Result<MonotoneCertificate> {
    let stepper = CauchyStepper::new(prob, *params, Parallelism::Sequential)?;
    let grid = *stepper.grid();
    let ne = grid.nodes_per_edge();
    let mut rng = SplitMix64::new(seed);
    let mut checks = 0u64;

    for trial in 0..trials {
        let mut field = GridFunction::constant(grid, 0.0);
        field.set_value(0, 0, rng.range(-1.0, 1.0));
        for i in 0..grid.edges() {
            for m in 1..=ne {
                field.set_value(i, m, rng.range(-1.0, 1.0));
            }
        }
        let base = stepper.step(&field, 0);

        let mut nodes = vec![(0usize, 0usize)];
        for i in 0..grid.edges() {
            for m in 1..=ne {
                nodes.push((i, m));
            }
        }
        for &(pi, pm) in &nodes {
            let mut bumped = field.clone();
            bumped.set_value(pi, pm, bumped.value(pi, pm) + delta);
            let out = stepper.step(&bumped, 0);
            for &(oi, om) in &nodes {
                checks += 1;
                let decrease = base.value(oi, om) - out.value(oi, om);
                if decrease > MONOTONE_FP_SLACK {
                    return Ok(MonotoneCertificate::Counterexample(
                        MonotoneCounterexample {
                            trial,
                            perturbed_node: (pi, pm),
                            output_node: (oi, om),
                            delta,
                            decrease,
                        },
                    ));
                }
            }
        }
    }
    Ok(MonotoneCertificate::Pass { checks })
}

/// Certify per-argument monotonicity of the stationary flux operator on
/// sampled slope pairs and verify that the node update is nondecreasing in
/// each neighbor value.
pub fn certify_monotone_stationary(
    prob: &StationaryProblem,
    params: &SchemeParams,
    trials: usize,
    seed: u64,
) -> Result<MonotoneCertificate> {
    let g = make_numerical_hamiltonian(&prob.spec, &prob.consts)?;
    let mut rng = SplitMix64::new(seed);
    let mut checks = 0u64;
    let h = 1e-4;
    let r = prob.consts.slope_radius * 1.5;

    for trial in 0..trials {
        for edge in 0..prob.spec.edges() {
            let p1 = rng.range(-r, r);
            let p2 = rng.range(-r, r);
            let f = g.flux(edge, params.eps, params.dx, p1, p2);
            checks += 2;
            let up1 = g.flux(edge, params.eps, params.dx, p1 + h, p2);
            if up1 > f + MONOTONE_FP_SLACK {
                return Ok(MonotoneCertificate::Counterexample(
                    MonotoneCounterexample {
                        trial,
                        perturbed_node: (edge, 1),
                        output_node: (edge, 0),
                        delta: h,
                        decrease: up1 - f,
                    },
                ));
            }
            let up2 = g.flux(edge, params.eps, params.dx, p1, p2 + h);
            if up2 < f - MONOTONE_FP_SLACK {
                return Ok(MonotoneCertificate::Counterexample(
                    MonotoneCounterexample {
                        trial,
                        perturbed_node: (edge, 2),
                        output_node: (edge, 0),
                        delta: h,
                        decrease: f - up2,
                    },
                ));
            }

            // node update monotone in each neighbor, checked on the
            // bisection route
            let a = rng.range(-prob.consts.m, prob.consts.m);
            let b = rng.range(-prob.consts.m, prob.consts.m);
            let fv = rng.range(-prob.consts.sup_source, prob.consts.sup_source);
            let root =
                node_root_bisect(&g, edge, 1, params.eps, params.dx, a, b, fv, prob.consts.m)?;
            let bump = 1e-3;
            checks += 2;
            let root_a = node_root_bisect(
                &g,
                edge,
                1,
                params.eps,
                params.dx,
                a + bump,
                b,
                fv,
                prob.consts.m,
            )?;
            if root_a < root - 1e-10 {
                return Ok(MonotoneCertificate::Counterexample(
                    MonotoneCounterexample {
                        trial,
                        perturbed_node: (edge, 0),
                        output_node: (edge, 1),
                        delta: bump,
                        decrease: root - root_a,
                    },
                ));
            }
            let root_b = node_root_bisect(
                &g,
                edge,
                1,
                params.eps,
                params.dx,
                a,
                b + bump,
                fv,
                prob.consts.m,
            )?;
            if root_b < root - 1e-10 {
                return Ok(MonotoneCertificate::Counterexample(
                    MonotoneCounterexample {
                        trial,
                        perturbed_node: (edge, 2),
                        output_node: (edge, 1),
                        delta: bump,
                        decrease: root - root_b,
                    },
                ));
            }
        }
    }
    Ok(MonotoneCertificate::Pass { checks })
}

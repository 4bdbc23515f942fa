//! Continuous Hamiltonians in separated form H_i(x, p) = H_i(p) − f_i(x),
//! capped numerical Hamiltonians, the discrete flux operator, and the
//! constants the schemes need (sup bound M, cap Λ, slope radius R, flux
//! Lipschitz constant L₁).
//!
//! The numerical Hamiltonian is a central average with slope clamping,
//!
//!   G_i(p₁, p₂) = min( H_i( clamp((p₁+p₂)/2, −R, R) ), Λ ),
//!
//! which is consistent with the capped H_i on the diagonal for |p| ≤ R and
//! globally Lipschitz with per-argument constant L₁ = Lip(H_i on [−R,R])/2
//! even when H_i is only locally Lipschitz.  The clamp is harmless for the
//! schemes because converged discrete solutions keep their slopes inside
//! [−R, R].

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Search lattice step for the coercivity radius.
const COERCIVITY_STEP: f64 = 1e-3;
/// Give up on coercivity above this radius.
const COERCIVITY_MAX: f64 = 1e6;
/// Samples per edge and sign when verifying a coercivity candidate.
const COERCIVITY_PROBE: usize = 400;

/// Built-in Hamiltonian catalog.  Entries are addressable by name in CLI
/// config files ("abs", "quadratic", "poly", "shifted_quadratic").
#[derive(Debug, Clone, PartialEq)]
pub enum HamiltonianKind {
    /// H(p) = |p|
    Abs,
    /// H(p) = p²
    Quadratic,
    /// H(p) = (p − a)²
    ShiftedQuadratic(f64),
    /// H(p) = Σ_k c_k p^k, coefficients in ascending degree
    Poly(Vec<f64>),
}

impl HamiltonianKind {
    #[inline]
    pub fn eval(&self, p: f64) -> f64 {
        match self {
            HamiltonianKind::Abs => p.abs(),
            HamiltonianKind::Quadratic => p * p,
            HamiltonianKind::ShiftedQuadratic(a) => (p - a) * (p - a),
            HamiltonianKind::Poly(c) => {
                let mut acc = 0.0;
                for &ck in c.iter().rev() {
                    acc = acc * p + ck;
                }
                acc
            }
        }
    }

    /// Analytic Lipschitz constant of H on [−r, r].
    pub fn lipschitz_on(&self, r: f64) -> f64 {
        match self {
            HamiltonianKind::Abs => 1.0,
            HamiltonianKind::Quadratic => 2.0 * r,
            HamiltonianKind::ShiftedQuadratic(a) => 2.0 * (r + a.abs()),
            HamiltonianKind::Poly(c) => {
                // |H'(p)| <= sum k |c_k| r^(k-1)
                let mut bound = 0.0;
                for (k, &ck) in c.iter().enumerate().skip(1) {
                    bound += k as f64 * ck.abs() * r.powi(k as i32 - 1);
                }
                bound
            }
        }
    }
}

/// Built-in source-term catalog.  The manufactured variants carry the
/// closed-form sources obtained by substituting the reference solutions
/// c_i sin(x) and c_i sin(x) e^{−t} into the equations.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceTerm {
    Zero,
    Constant(f64),
    /// f_i(x) = c_i sin(x)
    SinProfile(Vec<f64>),
    /// Per-edge piecewise-linear table of (x, value) samples, x ascending.
    Table(Vec<Vec<(f64, f64)>>),
    /// f_i(x) = c_i sin(x) + H(c_i cos(x)); the source that makes
    /// v_i(x) = c_i sin(x) solve v + H(v_x) = f.
    StationaryManufactured {
        coeffs: Vec<f64>,
        hamiltonian: HamiltonianKind,
    },
    /// f_i(t, x) = −c_i sin(x) e^{−t} + H(c_i cos(x) e^{−t}); the source
    /// that makes v_i(x, t) = c_i sin(x) e^{−t} solve v_t + H(v_x) = f.
    CauchyManufactured {
        coeffs: Vec<f64>,
        hamiltonian: HamiltonianKind,
    },
}

impl SourceTerm {
    #[inline]
    pub fn eval(&self, edge: usize, t: f64, x: f64) -> f64 {
        match self {
            SourceTerm::Zero => 0.0,
            SourceTerm::Constant(v) => *v,
            SourceTerm::SinProfile(c) => c[edge] * x.sin(),
            SourceTerm::Table(tables) => {
                let tab = &tables[edge];
                piecewise_linear(tab, x)
            }
            SourceTerm::StationaryManufactured {
                coeffs,
                hamiltonian,
            } => {
                let c = coeffs[edge];
                c * x.sin() + hamiltonian.eval(c * x.cos())
            }
            SourceTerm::CauchyManufactured {
                coeffs,
                hamiltonian,
            } => {
                let c = coeffs[edge];
                let decay = (-t).exp();
                -c * x.sin() * decay + hamiltonian.eval(c * x.cos() * decay)
            }
        }
    }

    pub fn time_dependent(&self) -> bool {
        matches!(self, SourceTerm::CauchyManufactured { .. })
    }

    /// Analytic Lipschitz bound of f_i in (t, x) over x ∈ [−ℓ, 0].
    pub fn lipschitz_bound(&self) -> f64 {
        match self {
            SourceTerm::Zero | SourceTerm::Constant(_) => 0.0,
            SourceTerm::SinProfile(c) => c.iter().fold(0.0, |a: f64, &v| a.max(v.abs())),
            SourceTerm::Table(tables) => {
                let mut worst: f64 = 0.0;
                for tab in tables {
                    for w in tab.windows(2) {
                        let dxs = w[1].0 - w[0].0;
                        if dxs > 0.0 {
                            worst = worst.max(((w[1].1 - w[0].1) / dxs).abs());
                        }
                    }
                }
                worst
            }
            SourceTerm::StationaryManufactured {
                coeffs,
                hamiltonian,
            }
            | SourceTerm::CauchyManufactured {
                coeffs,
                hamiltonian,
            } => {
                // |f_x|, |f_t| <= |c| (1 + Lip(H on [-|c|, |c|]))
                let cmax = coeffs.iter().fold(0.0, |a: f64, &v| a.max(v.abs()));
                cmax * (1.0 + hamiltonian.lipschitz_on(cmax))
            }
        }
    }
}

fn piecewise_linear(tab: &[(f64, f64)], x: f64) -> f64 {
    match tab.len() {
        0 => 0.0,
        1 => tab[0].1,
        _ => {
            if x <= tab[0].0 {
                return tab[0].1;
            }
            if x >= tab[tab.len() - 1].0 {
                return tab[tab.len() - 1].1;
            }
            let k = tab.partition_point(|&(xs, _)| xs <= x).max(1) - 1;
            let (x0, y0) = tab[k];
            let (x1, y1) = tab[k + 1];
            if x1 == x0 {
                y0
            } else {
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

/// Per-edge continuous problem data: Hamiltonians H_i and source f_i.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    hamiltonians: Vec<HamiltonianKind>,
    source: SourceTerm,
}

impl HamiltonianSpec {
    pub fn new(hamiltonians: Vec<HamiltonianKind>, source: SourceTerm) -> Result<Self> {
        if hamiltonians.len() < 2 {
            return Err(Error::InvalidGeometry(format!(
                "need at least 2 edges, got {}",
                hamiltonians.len()
            )));
        }
        let edges = hamiltonians.len();
        let coeff_len = match &source {
            SourceTerm::SinProfile(c) => Some(c.len()),
            SourceTerm::Table(t) => Some(t.len()),
            SourceTerm::StationaryManufactured { coeffs, .. }
            | SourceTerm::CauchyManufactured { coeffs, .. } => Some(coeffs.len()),
            _ => None,
        };
        if let Some(n) = coeff_len {
            if n != edges {
                return Err(Error::InvalidCoefficients(format!(
                    "source carries {n} per-edge entries but the network has {edges} edges"
                )));
            }
        }
        Ok(HamiltonianSpec {
            hamiltonians,
            source,
        })
    }

    /// Same Hamiltonian on every edge.
    pub fn uniform(edges: usize, kind: HamiltonianKind, source: SourceTerm) -> Result<Self> {
        Self::new(vec![kind; edges], source)
    }

    pub fn edges(&self) -> usize {
        self.hamiltonians.len()
    }

    #[inline]
    pub fn h(&self, edge: usize, p: f64) -> f64 {
        self.hamiltonians[edge].eval(p)
    }

    pub fn hamiltonian(&self, edge: usize) -> &HamiltonianKind {
        &self.hamiltonians[edge]
    }

    #[inline]
    pub fn source(&self, edge: usize, t: f64, x: f64) -> f64 {
        self.source.eval(edge, t, x)
    }

    pub fn source_term(&self) -> &SourceTerm {
        &self.source
    }
}

/// Sampling lattice shared by the sup estimates: nodes plus midpoints in
/// space, a coarse lattice in time when the source is time-dependent.
fn sample_domain<F>(
    spec: &HamiltonianSpec,
    edge_length: f64,
    horizon: f64,
    density: usize,
    mut f: F,
) where
    F: FnMut(usize, f64, f64),
{
    let n = density.max(2);
    let t_samples = if spec.source.time_dependent() {
        n.min(200)
    } else {
        0
    };
    for i in 0..spec.edges() {
        for kt in 0..=t_samples {
            let t = if t_samples == 0 {
                0.0
            } else {
                horizon * kt as f64 / t_samples as f64
            };
            // nodes and midpoints: 2n + 1 points on [-l, 0]
            for k in 0..=(2 * n) {
                let x = -edge_length * k as f64 / (2 * n) as f64;
                f(i, t, x);
            }
        }
    }
}

/// M = sup |H_i(x, 0)| = sup |H_i(0) − f_i(t, x)|, sampled at grid nodes
/// and midpoints (`density` intervals per edge).
pub fn sup_zero_level(
    spec: &HamiltonianSpec,
    edge_length: f64,
    horizon: f64,
    density: usize,
) -> f64 {
    let mut m: f64 = 0.0;
    sample_domain(spec, edge_length, horizon, density, |i, t, x| {
        m = m.max((spec.h(i, 0.0) - spec.source(i, t, x)).abs());
    });
    m
}

/// sup_i sup |f_i| over the sampling lattice.
pub fn sup_source_abs(
    spec: &HamiltonianSpec,
    edge_length: f64,
    horizon: f64,
    density: usize,
) -> f64 {
    let mut s: f64 = 0.0;
    sample_domain(spec, edge_length, horizon, density, |i, t, x| {
        s = s.max(spec.source(i, t, x).abs());
    });
    s
}

/// Smallest lattice radius R* (step 1e−3) such that H_i(p) ≥ level for all
/// |p| ≥ R* and every edge, verified by sampling |p| ∈ [R*, 4R*].
pub fn coercivity_radius(spec: &HamiltonianSpec, level: f64) -> Result<f64> {
    let passes = |r: f64| -> bool {
        for i in 0..spec.edges() {
            for k in 0..=COERCIVITY_PROBE {
                let p = r * (1.0 + 3.0 * k as f64 / COERCIVITY_PROBE as f64);
                if spec.h(i, p) < level || spec.h(i, -p) < level {
                    return false;
                }
            }
        }
        true
    };

    // degenerate case: the level never exceeds H anywhere
    if (0..spec.edges()).all(|i| spec.h(i, 0.0) >= level) && passes(COERCIVITY_STEP) {
        return Ok(0.0);
    }

    // doubling outer scan for a passing radius
    let mut hi = COERCIVITY_STEP;
    while !passes(hi) {
        hi *= 2.0;
        if hi > COERCIVITY_MAX {
            return Err(Error::NotCoercive { level });
        }
    }

    // lattice bisection for the smallest passing multiple of the step
    let mut lo_idx: u64 = (hi / 2.0 / COERCIVITY_STEP).floor() as u64; // fails (or below scan start)
    let mut hi_idx: u64 = (hi / COERCIVITY_STEP).ceil() as u64; // passes
    if lo_idx == 0 {
        lo_idx = 0;
    }
    while hi_idx - lo_idx > 1 {
        let mid = lo_idx + (hi_idx - lo_idx) / 2;
        if passes(mid as f64 * COERCIVITY_STEP) {
            hi_idx = mid;
        } else {
            lo_idx = mid;
        }
    }
    Ok(hi_idx as f64 * COERCIVITY_STEP)
}

/// The constants shared by both schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConstants {
    /// M: sup bound on |H_i(x, 0)|; bounds the discrete solutions.
    pub m: f64,
    /// sup_i sup |f_i|.
    pub sup_source: f64,
    /// Cap Λ = M + sup|f| + 1 applied to the numerical Hamiltonians.
    pub cap: f64,
    /// Slope radius R: clamp radius, at least the coercivity radius at Λ.
    pub slope_radius: f64,
    /// Common per-argument Lipschitz constant of the numerical Hamiltonians.
    pub l1: f64,
    /// Upper CFL constant.
    pub l2: f64,
}

impl SchemeConstants {
    /// Derive all constants by sampling, with the default margins: cap
    /// Λ = M + sup|f| + 1, slope radius R = (coercivity radius at Λ) + 1,
    /// L₁ = Lip(H on [−R, R])/2, L₂ = 4L₁ + 1.
    pub fn derive(
        spec: &HamiltonianSpec,
        edge_length: f64,
        horizon: f64,
        density: usize,
    ) -> Result<Self> {
        let m = sup_zero_level(spec, edge_length, horizon, density);
        let sup_source = sup_source_abs(spec, edge_length, horizon, density);
        let cap = m + sup_source + 1.0;
        let slope_radius = coercivity_radius(spec, cap)? + 1.0;
        let l1 = 0.5
            * (0..spec.edges())
                .map(|i| spec.hamiltonian(i).lipschitz_on(slope_radius))
                .fold(0.0, f64::max);
        if !(l1 > 0.0) {
            return Err(Error::InvalidConstants(
                "numerical Hamiltonian has zero Lipschitz constant".into(),
            ));
        }
        Ok(SchemeConstants {
            m,
            sup_source,
            cap,
            slope_radius,
            l1,
            l2: 4.0 * l1 + 1.0,
        })
    }
}

/// Capped, slope-clamped numerical Hamiltonians G_i and the flux operator
/// F_i(p₁, p₂) = −(ε/Δx)(p₁ − p₂) + G_i(p₁, p₂).
#[derive(Debug, Clone, PartialEq)]
pub struct NumericalHamiltonian {
    hamiltonians: Vec<HamiltonianKind>,
    cap: f64,
    radius: f64,
}

impl NumericalHamiltonian {
    #[inline]
    pub fn g(&self, edge: usize, p1: f64, p2: f64) -> f64 {
        let p = (0.5 * (p1 + p2)).clamp(-self.radius, self.radius);
        self.hamiltonians[edge].eval(p).min(self.cap)
    }

    /// G on the diagonal evaluated directly from a single slope.
    #[inline]
    pub fn g_central(&self, edge: usize, p: f64) -> f64 {
        let p = p.clamp(-self.radius, self.radius);
        self.hamiltonians[edge].eval(p).min(self.cap)
    }

    #[inline]
    pub fn flux(&self, edge: usize, eps: f64, dx: f64, p1: f64, p2: f64) -> f64 {
        -(eps / dx) * (p1 - p2) + self.g(edge, p1, p2)
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn edges(&self) -> usize {
        self.hamiltonians.len()
    }

    pub fn kind(&self, edge: usize) -> &HamiltonianKind {
        &self.hamiltonians[edge]
    }
}

/// Build the numerical Hamiltonians, validating the constants against the
/// spec: Λ must exceed M and R must dominate the coercivity radius at Λ.
pub fn make_numerical_hamiltonian(
    spec: &HamiltonianSpec,
    consts: &SchemeConstants,
) -> Result<NumericalHamiltonian> {
    if !(consts.cap > consts.m) {
        return Err(Error::InvalidConstants(format!(
            "cap {} must exceed M = {}",
            consts.cap, consts.m
        )));
    }
    if !(consts.l1 > 0.0) {
        return Err(Error::InvalidConstants("L1 must be positive".into()));
    }
    let needed = coercivity_radius(spec, consts.cap)?;
    if consts.slope_radius < needed {
        return Err(Error::InvalidConstants(format!(
            "slope radius {} below coercivity radius {} at the cap",
            consts.slope_radius, needed
        )));
    }
    Ok(NumericalHamiltonian {
        hamiltonians: (0..spec.edges())
            .map(|i| spec.hamiltonian(i).clone())
            .collect(),
        cap: consts.cap,
        radius: consts.slope_radius,
    })
}

/// Flux operator F_i(p₁, p₂) = −(ε/Δx)(p₁ − p₂) + G_i(p₁, p₂).
#[inline]
pub fn flux_operator(
    g: &NumericalHamiltonian,
    eps: f64,
    dx: f64,
    p1: f64,
    p2: f64,
    edge: usize,
) -> f64 {
    g.flux(edge, eps, dx, p1, p2)
}

/// Sampled per-argument Lipschitz estimate of G, inflated by a 10% safety
/// factor.  Deterministic: the sampling seed is fixed.
pub fn estimate_lipschitz(g: &NumericalHamiltonian, box_radius: f64, samples: usize) -> f64 {
    assert!(samples >= 1_000, "need at least 1e3 samples");
    let mut rng = SplitMix64::new(0x5eed_11b5_c0ff_ee00);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let edge = rng.below(g.edges());
        let p1 = rng.range(-box_radius, box_radius);
        let p2 = rng.range(-box_radius, box_radius);
        let q = rng.range(-box_radius, box_radius);
        if (p1 - q).abs() > 1e-9 {
            let quot = (g.g(edge, p1, p2) - g.g(edge, q, p2)).abs() / (p1 - q).abs();
            worst = worst.max(quot);
        }
        if (p2 - q).abs() > 1e-9 {
            let quot = (g.g(edge, p1, p2) - g.g(edge, p1, q)).abs() / (p2 - q).abs();
            worst = worst.max(quot);
        }
    }
    worst * 1.1
}

//! Star-network geometry, grid discretization, grid functions, difference
//! quotients, and the network metric.
//!
//! A star network is K copies of a half-line glued at the origin (the
//! junction).  Each edge is truncated to a common length ℓ and discretized
//! with spacing Δx; node m on edge i sits at the spatial point −mΔx, so
//! m = 0 is the junction and m − 1 is always the junction-ward neighbor.
//! Grid functions store the junction value exactly once, which makes the
//! gluing constraint structural rather than something tests have to chase.

use crate::error::{Error, Result};

/// Relative slack used when ℓ/Δx lands a hair below an integer.
const NODE_COUNT_SLACK: f64 = 1e-9;

/// Tolerance for per-edge agreement at the junction when sampling.
pub const JUNCTION_TOL: f64 = 1e-12;

/// Discretized star network: K truncated edges sharing one junction node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkGrid {
    edges: usize,
    edge_length: f64,
    dx: f64,
    nodes_per_edge: usize,
}

impl NetworkGrid {
    /// Build a grid with `edges` edges of common length `edge_length` and
    /// spacing `dx`.  Requires `edges >= 2`, positive lengths, and at least
    /// three interior nodes per edge.
    pub fn new(edges: usize, edge_length: f64, dx: f64) -> Result<Self> {
        if edges < 2 {
            return Err(Error::InvalidGeometry(format!(
                "need at least 2 edges, got {edges}"
            )));
        }
        if !(edge_length > 0.0) || !edge_length.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "edge length must be positive, got {edge_length}"
            )));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "dx must be positive, got {dx}"
            )));
        }
        let ratio = edge_length / dx;
        // floor with slack: 5.0/0.1 evaluates to 49.999... in binary floats
        let nodes_per_edge = {
            let r = ratio.round();
            if (ratio - r).abs() <= NODE_COUNT_SLACK * (1.0 + ratio.abs()) {
                r as usize
            } else {
                ratio.floor() as usize
            }
        };
        if nodes_per_edge < 3 {
            return Err(Error::InvalidGeometry(format!(
                "floor(edge_length/dx) = {nodes_per_edge} < 3; refine dx or lengthen edges"
            )));
        }
        Ok(NetworkGrid {
            edges,
            edge_length,
            dx,
            nodes_per_edge,
        })
    }

    pub fn edges(&self) -> usize {
        self.edges
    }

    pub fn edge_length(&self) -> f64 {
        self.edge_length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// N_e: index of the far-end node; each edge carries nodes m = 0..=N_e.
    pub fn nodes_per_edge(&self) -> usize {
        self.nodes_per_edge
    }

    /// Total distinct nodes: K·N_e interior/far nodes plus the shared junction.
    pub fn node_count(&self) -> usize {
        self.edges * self.nodes_per_edge + 1
    }

    /// Spatial coordinate of node m: −mΔx.
    pub fn x(&self, m: usize) -> f64 {
        -(m as f64) * self.dx
    }

    /// The point represented by node (edge, m).
    pub fn point(&self, edge: usize, m: usize) -> NetworkPoint {
        debug_assert!(edge < self.edges && m <= self.nodes_per_edge);
        NetworkPoint { edge, x: self.x(m) }
    }

    /// All distinct node points (junction listed once, on edge 0).
    pub fn points(&self) -> Vec<NetworkPoint> {
        let mut pts = Vec::with_capacity(self.node_count());
        pts.push(NetworkPoint { edge: 0, x: 0.0 });
        for i in 0..self.edges {
            for m in 1..=self.nodes_per_edge {
                pts.push(self.point(i, m));
            }
        }
        pts
    }
}

/// A point on the network: an edge index (0-based) and a coordinate in
/// [−ℓ, 0].  Coordinate 0 is the junction regardless of the edge index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkPoint {
    pub edge: usize,
    pub x: f64,
}

/// The network metric: |x − y| along a shared edge, |x| + |y| through the
/// junction otherwise.
pub fn network_distance(p: NetworkPoint, q: NetworkPoint) -> f64 {
    if p.edge == q.edge {
        (p.x - q.x).abs()
    } else {
        p.x.abs() + q.x.abs()
    }
}

/// Real values on the nodes of a [`NetworkGrid`].
///
/// The junction value is stored once; reading node (i, 0) returns it for
/// every edge i.  Values are written during construction or by a solver
/// that owns the function; once published they are treated as immutable
/// snapshots and may be read concurrently.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: NetworkGrid,
    junction: f64,
    edge_values: Vec<Vec<f64>>,
}

impl GridFunction {
    /// Constant function c on the whole network.
    pub fn constant(grid: NetworkGrid, c: f64) -> Self {
        GridFunction {
            grid,
            junction: c,
            edge_values: vec![vec![c; grid.nodes_per_edge()]; grid.edges()],
        }
    }

    pub fn grid(&self) -> &NetworkGrid {
        &self.grid
    }

    /// Value at node (edge, m); m = 0 is the shared junction for every edge.
    #[inline]
    pub fn value(&self, edge: usize, m: usize) -> f64 {
        if m == 0 {
            self.junction
        } else {
            self.edge_values[edge][m - 1]
        }
    }

    #[inline]
    pub fn junction(&self) -> f64 {
        self.junction
    }

    /// Overwrite the value at node (edge, m).  Setting m = 0 changes the
    /// single shared junction datum.
    #[inline]
    pub fn set_value(&mut self, edge: usize, m: usize, v: f64) {
        if m == 0 {
            self.junction = v;
        } else {
            self.edge_values[edge][m - 1] = v;
        }
    }

    /// Values of one edge for m = 1..=N_e.
    pub fn edge_slice(&self, edge: usize) -> &[f64] {
        &self.edge_values[edge]
    }

    pub fn edge_slice_mut(&mut self, edge: usize) -> &mut [f64] {
        &mut self.edge_values[edge]
    }

    /// Maximum absolute value over all nodes.
    pub fn sup_abs(&self) -> f64 {
        let mut s = self.junction.abs();
        for vals in &self.edge_values {
            for &v in vals {
                s = s.max(v.abs());
            }
        }
        s
    }

    /// Maximum absolute nodewise difference against another function on the
    /// same grid.
    pub fn sup_diff(&self, other: &GridFunction) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch(
                "grid functions live on different grids".into(),
            ));
        }
        let mut s = (self.junction - other.junction).abs();
        for (a, b) in self.edge_values.iter().zip(&other.edge_values) {
            for (x, y) in a.iter().zip(b) {
                s = s.max((x - y).abs());
            }
        }
        Ok(s)
    }
}

/// Sample a per-edge function g(i, x) on the grid.
///
/// The per-edge values at x = 0 must agree to [`JUNCTION_TOL`]; otherwise
/// the sampled data would break the gluing invariant.
pub fn sample_function<F>(grid: &NetworkGrid, g: F) -> Result<GridFunction>
where
    F: Fn(usize, f64) -> f64,
{
    let base = g(0, 0.0);
    for i in 1..grid.edges() {
        let d = (g(i, 0.0) - base).abs();
        if d > JUNCTION_TOL {
            return Err(Error::JunctionMismatch {
                edge: i,
                difference: d,
            });
        }
    }
    let mut u = GridFunction::constant(*grid, base);
    for i in 0..grid.edges() {
        for m in 1..=grid.nodes_per_edge() {
            u.set_value(i, m, g(i, grid.x(m)));
        }
    }
    Ok(u)
}

/// Upwind difference quotient D⁺U(m) = (U(m−1) − U(m))/Δx.
///
/// Node m − 1 is the junction-ward neighbor, so D⁺ looks toward the
/// junction.  Undefined at the junction itself.
pub fn diff_plus(u: &GridFunction, edge: usize, m: usize) -> Result<f64> {
    let ne = u.grid().nodes_per_edge();
    if m == 0 {
        return Err(Error::IndexError(
            "D+ is undefined at the junction (m = 0)".into(),
        ));
    }
    if m > ne {
        return Err(Error::IndexError(format!("node {m} exceeds N_e = {ne}")));
    }
    Ok((u.value(edge, m - 1) - u.value(edge, m)) / u.grid().dx())
}

/// Downwind difference quotient D⁻U(m) = (U(m) − U(m+1))/Δx.
///
/// Undefined at the junction (K forward neighbors) and at the far-end node
/// (no node m + 1; the far end is closed by the solvers' Dirichlet pin).
pub fn diff_minus(u: &GridFunction, edge: usize, m: usize) -> Result<f64> {
    let ne = u.grid().nodes_per_edge();
    if m == 0 {
        return Err(Error::IndexError(
            "D- is undefined at the junction (m = 0)".into(),
        ));
    }
    if m >= ne {
        return Err(Error::IndexError(format!(
            "D- needs node m+1; m = {m} but N_e = {ne}"
        )));
    }
    Ok((u.value(edge, m) - u.value(edge, m + 1)) / u.grid().dx())
}

/// Grid functions stacked over time levels s = 0..=N with step Δt.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGridFunction {
    levels: Vec<GridFunction>,
    dt: f64,
}

impl SpaceTimeGridFunction {
    pub fn new(levels: Vec<GridFunction>, dt: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::ShapeMismatch("no time levels".into()));
        }
        let g = *levels[0].grid();
        if levels.iter().any(|l| *l.grid() != g) {
            return Err(Error::ShapeMismatch(
                "time levels live on different grids".into(),
            ));
        }
        if !(dt > 0.0) {
            return Err(Error::ShapeMismatch(format!("dt must be positive: {dt}")));
        }
        Ok(SpaceTimeGridFunction { levels, dt })
    }

    pub fn grid(&self) -> &NetworkGrid {
        self.levels[0].grid()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of time steps N; levels are indexed 0..=N.
    pub fn steps(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, s: usize) -> &GridFunction {
        &self.levels[s]
    }

    pub fn levels(&self) -> &[GridFunction] {
        &self.levels
    }

    #[inline]
    pub fn value(&self, edge: usize, m: usize, s: usize) -> f64 {
        self.levels[s].value(edge, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts_match_hand_examples() {
        let g = NetworkGrid::new(3, 5.0, 0.5).unwrap();
        assert_eq!(g.nodes_per_edge(), 10);
        assert_eq!(g.node_count(), 31);

        let g = NetworkGrid::new(2, 1.0, 0.25).unwrap();
        assert_eq!(g.nodes_per_edge(), 4);
        assert_eq!(g.node_count(), 9);
    }

    #[test]
    fn grid_rejects_bad_geometry() {
        assert!(matches!(
            NetworkGrid::new(1, 1.0, 0.1),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(NetworkGrid::new(2, 1.0, 0.0).is_err());
        assert!(NetworkGrid::new(2, -1.0, 0.1).is_err());
        // floor(1.0/0.4) = 2 < 3
        assert!(NetworkGrid::new(2, 1.0, 0.4).is_err());
    }

    #[test]
    fn node_count_survives_binary_rounding() {
        // 5.0/0.1 = 49.999... in f64; the slack must recover 50
        let g = NetworkGrid::new(3, 5.0, 0.1).unwrap();
        assert_eq!(g.nodes_per_edge(), 50);
        let g = NetworkGrid::new(3, 5.0, 0.0125).unwrap();
        assert_eq!(g.nodes_per_edge(), 400);
    }

    #[test]
    fn metric_matches_definition() {
        let p = NetworkPoint { edge: 0, x: -1.0 };
        let q = NetworkPoint { edge: 0, x: -3.0 };
        assert_eq!(network_distance(p, q), 2.0);

        let q2 = NetworkPoint { edge: 1, x: -2.0 };
        assert_eq!(network_distance(p, q2), 3.0);

        let j1 = NetworkPoint { edge: 0, x: 0.0 };
        let j2 = NetworkPoint { edge: 2, x: 0.0 };
        assert_eq!(network_distance(j1, j2), 0.0);
    }

    #[test]
    fn metric_axioms_exhaustive_on_small_grid() {
        // 3 edges * 5 nodes + junction = 16 points; check all triples
        let g = NetworkGrid::new(3, 1.0, 0.2).unwrap();
        let pts = g.points();
        assert!(pts.len() <= 50);
        for &p in &pts {
            for &q in &pts {
                let d = network_distance(p, q);
                assert_eq!(d, network_distance(q, p));
                let same_point = p.x == q.x && (p.edge == q.edge || p.x == 0.0);
                assert_eq!(d == 0.0, same_point, "{p:?} {q:?}");
                for &r in &pts {
                    assert!(
                        network_distance(p, r) <= d + network_distance(q, r) + 1e-15,
                        "triangle inequality failed for {p:?} {q:?} {r:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn junction_is_shared_storage() {
        let g = NetworkGrid::new(3, 1.0, 0.2).unwrap();
        let mut u = GridFunction::constant(g, 0.0);
        u.set_value(1, 0, 7.5);
        for i in 0..3 {
            assert_eq!(u.value(i, 0), 7.5);
        }
    }

    #[test]
    fn sampling_checks_junction_agreement() {
        let g = NetworkGrid::new(2, 1.0, 0.1).unwrap();

        let u = sample_function(&g, |_, _| 7.0).unwrap();
        assert_eq!(u.value(0, 5), 7.0);
        assert_eq!(u.junction(), 7.0);

        let c = [2.0, -1.0];
        let u = sample_function(&g, |i, x| c[i] * x.sin()).unwrap();
        assert_eq!(u.junction(), 0.0);
        assert!((u.value(1, 3) - (-1.0) * (-0.3f64).sin()).abs() < 1e-15);

        let bad = sample_function(&g, |i, _| i as f64);
        assert!(matches!(bad, Err(Error::JunctionMismatch { edge: 1, .. })));
    }

    #[test]
    fn difference_quotients_match_formulas() {
        let g = NetworkGrid::new(2, 1.5, 0.5).unwrap();
        // edge 0 values: U(0)=0, U(1)=1, U(2)=2
        let mut u = GridFunction::constant(g, 0.0);
        u.set_value(0, 1, 1.0);
        u.set_value(0, 2, 2.0);
        assert_eq!(diff_plus(&u, 0, 1).unwrap(), -2.0);
        assert_eq!(diff_minus(&u, 0, 1).unwrap(), -2.0);

        assert!(diff_plus(&u, 0, 0).is_err());
        assert!(diff_minus(&u, 0, 0).is_err());
        assert!(diff_minus(&u, 0, 3).is_err()); // far end has no m+1
    }

    #[test]
    fn difference_quotients_on_linear_and_constant_data() {
        let g = NetworkGrid::new(2, 2.0, 0.25).unwrap();
        let c = sample_function(&g, |_, _| 3.0).unwrap();
        let lin = sample_function(&g, |_, x| x).unwrap();
        for m in 1..g.nodes_per_edge() {
            assert!(diff_plus(&c, 0, m).unwrap().abs() < 1e-14);
            assert!(diff_minus(&c, 0, m).unwrap().abs() < 1e-14);
            assert!((diff_plus(&lin, 1, m).unwrap() - 1.0).abs() < 1e-12);
            assert!((diff_minus(&lin, 1, m).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn difference_quotients_first_order_on_smooth_data() {
        // halving dx must roughly halve the worst D+ error against u_x
        let err = |dx: f64| {
            let g = NetworkGrid::new(2, 2.0, dx).unwrap();
            let u = sample_function(&g, |_, x| (1.3 * x).cos() + x * x).unwrap();
            let ux = |x: f64| -1.3 * (1.3 * x).sin() + 2.0 * x;
            let mut worst: f64 = 0.0;
            for m in 1..=g.nodes_per_edge() {
                let d = diff_plus(&u, 0, m).unwrap();
                worst = worst.max((d - ux(g.x(m))).abs());
            }
            worst
        };
        let e1 = err(0.02);
        let e2 = err(0.01);
        assert!(e2 < 0.75 * e1, "no first-order decay: {e1} -> {e2}");
        assert!(e1 < 0.05);
    }

    #[test]
    fn spacetime_container_validates() {
        let g = NetworkGrid::new(2, 1.0, 0.2).unwrap();
        let l0 = GridFunction::constant(g, 0.0);
        let l1 = GridFunction::constant(g, 1.0);
        let st = SpaceTimeGridFunction::new(vec![l0.clone(), l1], 0.1).unwrap();
        assert_eq!(st.steps(), 1);
        assert_eq!(st.value(1, 0, 1), 1.0);

        let g2 = NetworkGrid::new(3, 1.0, 0.2).unwrap();
        let other = GridFunction::constant(g2, 0.0);
        assert!(SpaceTimeGridFunction::new(vec![l0, other], 0.1).is_err());
    }
}

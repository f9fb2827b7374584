//! Quadratic Wasserstein distance by three independent routes (quantile
//! integral, min-cost-flow LP, sorted assignment), the mobility-weighted
//! dual and primal norms on tangent vectors, and the Benamou-Brenier action.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measures::{Grid, GridDensity, GridMeasure, ParticleCloud, Topology};
use crate::numerics::{compensated_sum, golden_section_min, CompensatedSum};
use crate::path::MeasurePath;

/// Masses must agree to this absolute tolerance before transport.
pub const MASS_TOLERANCE: f64 = 1e-10;

/// `Σ s Δx` must vanish to this tolerance for `s` to count as a tangent vector.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-10;

/// Largest combined support (source plus target atoms) the LP oracle accepts.
pub const LP_ATOM_LIMIT: usize = 64;

/// How the mass of a cell is laid out when a grid measure is read as a
/// distribution on the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassModel {
    /// Mass spread uniformly over the cell (piecewise-linear CDF).
    #[default]
    CellUniform,
    /// Mass concentrated at the cell center, as in the LP and for empirical
    /// measures of particles sitting on grid points.
    Atomic,
}

/// One linear piece of a quantile function: `u` runs over `[u0, u1]` while
/// the position moves linearly from `x0` to `x1`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    u0: f64,
    u1: f64,
    x0: f64,
    x1: f64,
}

impl Segment {
    fn at(&self, u: f64) -> f64 {
        if self.u1 <= self.u0 {
            self.x0
        } else {
            self.x0 + (self.x1 - self.x0) * (u - self.u0) / (self.u1 - self.u0)
        }
    }
}

/// Quantile function of a grid measure: piecewise linear in the mass
/// coordinate `u ∈ [0, M]`, with jumps across empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearQuantile {
    segments: Vec<Segment>,
}

impl PiecewiseLinearQuantile {
    pub fn from_measure(rho: &GridMeasure, model: MassModel) -> Result<Self> {
        let grid = rho.grid();
        let mut acc = CompensatedSum::new();
        let mut segments = Vec::new();
        for (i, &w) in rho.weights().iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let u0 = acc.value();
            acc.add(w);
            let (x0, x1) = match model {
                MassModel::CellUniform => (grid.edge(i), grid.edge(i + 1)),
                MassModel::Atomic => (grid.center(i), grid.center(i)),
            };
            segments.push(Segment {
                u0,
                u1: acc.value(),
                x0,
                x1,
            });
        }
        if segments.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Ok(Self { segments })
    }

    pub fn mass(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.u1)
    }

    /// `Q(u)`, right-continuous at jumps.
    pub fn value_at(&self, u: f64) -> f64 {
        let k = self
            .segments
            .partition_point(|s| s.u1 <= u)
            .min(self.segments.len() - 1);
        self.segments[k].at(u)
    }

    /// Same shape with the mass coordinate stretched to total `mass`.
    fn rescaled(&self, mass: f64) -> Self {
        let f = mass / self.mass();
        let mut segments: Vec<Segment> = self
            .segments
            .iter()
            .map(|s| Segment {
                u0: s.u0 * f,
                u1: s.u1 * f,
                ..*s
            })
            .collect();
        if let Some(last) = segments.last_mut() {
            last.u1 = mass;
        }
        Self { segments }
    }

    /// Displacement interpolation `(1 - t) Q0 + t Q1`.
    pub fn interpolate(&self, other: &Self, t: f64) -> Self {
        let other = other.rescaled(self.mass());
        let mut segments = Vec::new();
        merge(&self.segments, &other.segments, |u0, u1, a, b| {
            segments.push(Segment {
                u0,
                u1,
                x0: (1.0 - t) * a.at(u0) + t * b.at(u0),
                x1: (1.0 - t) * a.at(u1) + t * b.at(u1),
            });
        });
        Self { segments }
    }

    /// Pushes the mass back onto `grid` (positions are clamped into `[0, L]`).
    pub fn to_measure(&self, grid: &Grid) -> Result<GridMeasure> {
        let n = grid.n_cells();
        let dx = grid.dx();
        let mut weights = vec![0.0; n];
        for s in &self.segments {
            let du = s.u1 - s.u0;
            if du <= 0.0 {
                continue;
            }
            let (lo, hi) = (
                s.x0.min(s.x1).clamp(0.0, grid.length()),
                s.x0.max(s.x1).clamp(0.0, grid.length()),
            );
            if hi - lo <= 1e-15 * grid.length() {
                let i = ((lo / dx) as usize).min(n - 1);
                weights[i] += du;
                continue;
            }
            let first = ((lo / dx) as usize).min(n - 1);
            let last = ((hi / dx) as usize).min(n - 1);
            for (i, w) in weights.iter_mut().enumerate().take(last + 1).skip(first) {
                let overlap = hi.min(grid.edge(i + 1)) - lo.max(grid.edge(i));
                if overlap > 0.0 {
                    *w += du * overlap / (hi - lo);
                }
            }
        }
        GridMeasure::new(*grid, weights)
    }
}

/// Walks two segment lists covering the same `u` range and calls `f` on every
/// common sub-interval together with the two active segments.
fn merge<F: FnMut(f64, f64, &Segment, &Segment)>(a: &[Segment], b: &[Segment], mut f: F) {
    let (mut i, mut j) = (0, 0);
    let mut u = 0.0;
    while i < a.len() && j < b.len() {
        let hi = a[i].u1.min(b[j].u1);
        if hi > u {
            f(u, hi, &a[i], &b[j]);
            u = hi;
        }
        if a[i].u1 <= hi {
            i += 1;
        }
        if j < b.len() && b[j].u1 <= hi {
            j += 1;
        }
    }
}

/// `∫ (Q_a(u) - Q_b(u))² du` for two piecewise-linear quantile functions.
fn quantile_cost(a: &[Segment], b: &[Segment]) -> f64 {
    let mut acc = CompensatedSum::new();
    merge(a, b, |u0, u1, sa, sb| {
        let d0 = sa.at(u0) - sb.at(u0);
        let d1 = sa.at(u1) - sb.at(u1);
        acc.add((u1 - u0) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0);
    });
    acc.value()
}

/// Periodic lift of a quantile function, restricted to `u ∈ [θ, θ + M]` and
/// re-based to start at `u = 0`. Each full turn in `u` adds `L` to position.
fn lifted_window(q: &PiecewiseLinearQuantile, length: f64, theta: f64) -> Vec<Segment> {
    let m = q.mass();
    let (lo, hi) = (theta, theta + m);
    let k0 = (lo / m).floor() as i64;
    let mut out = Vec::new();
    for k in k0..=k0 + 1 {
        let (du, dx) = (k as f64 * m, k as f64 * length);
        for s in &q.segments {
            let (u0, u1) = (s.u0 + du, s.u1 + du);
            let (a, b) = (u0.max(lo), u1.min(hi));
            if b <= a {
                continue;
            }
            let lifted = Segment {
                u0,
                u1,
                x0: s.x0 + dx,
                x1: s.x1 + dx,
            };
            out.push(Segment {
                u0: a - lo,
                u1: b - lo,
                x0: lifted.at(a),
                x1: lifted.at(b),
            });
        }
    }
    if let Some(last) = out.last_mut() {
        last.u1 = m;
    }
    out
}

fn check_pair(rho0: &GridMeasure, rho1: &GridMeasure) -> Result<()> {
    rho0.grid().ensure_same(rho1.grid())?;
    let (m0, m1) = (rho0.mass(), rho1.mass());
    if m0 <= 0.0 || m1 <= 0.0 {
        return Err(Error::EmptyMeasure);
    }
    if (m0 - m1).abs() > MASS_TOLERANCE {
        return Err(Error::Unbalanced(m0, m1));
    }
    Ok(())
}

/// Squared Wasserstein distance with cell-uniform mass (the continuum
/// reading of a cellwise-constant density).
pub fn wasserstein_quantile(rho0: &GridMeasure, rho1: &GridMeasure) -> Result<f64> {
    wasserstein_quantile_with(rho0, rho1, MassModel::CellUniform)
}

/// Squared Wasserstein distance by the quantile integral. On the torus the
/// target quantile is lifted periodically and the optimal rotation of the
/// mass coordinate is found by minimizing the (convex) shifted cost.
pub fn wasserstein_quantile_with(
    rho0: &GridMeasure,
    rho1: &GridMeasure,
    model: MassModel,
) -> Result<f64> {
    check_pair(rho0, rho1)?;
    let q0 = PiecewiseLinearQuantile::from_measure(rho0, model)?;
    let q1 = PiecewiseLinearQuantile::from_measure(rho1, model)?.rescaled(q0.mass());
    let grid = rho0.grid();
    let cost = match grid.topology() {
        Topology::Interval => quantile_cost(&q0.segments, &q1.segments),
        Topology::Torus => {
            let m = q0.mass();
            let eval =
                |theta: f64| quantile_cost(&q0.segments, &lifted_window(&q1, grid.length(), theta));
            let samples = 2 * grid.n_cells().max(8);
            let step = 2.0 * m / samples as f64;
            let (best_k, _) = (0..=samples).map(|k| (k, eval(-m + k as f64 * step))).fold(
                (0, f64::INFINITY),
                |acc, (k, c)| if c < acc.1 { (k, c) } else { acc },
            );
            let centre = -m + best_k as f64 * step;
            golden_section_min(eval, centre - step, centre + step, 1e-14 * m, 200).1
        }
    };
    Ok(cost.max(0.0))
}

/// Squared distance between cell centers, along the circle on the torus.
fn center_cost(grid: &Grid, i: usize, j: usize) -> f64 {
    let mut d = (grid.center(i) - grid.center(j)).abs();
    if grid.topology() == Topology::Torus {
        d = d.min(grid.length() - d);
    }
    d * d
}

/// Exact optimal-transport cost between the atomic readings of two small
/// measures, solved as a min-cost flow by successive shortest paths.
pub fn wasserstein_lp(rho0: &GridMeasure, rho1: &GridMeasure) -> Result<f64> {
    check_pair(rho0, rho1)?;
    let grid = *rho0.grid();
    let src = rho0.support();
    let dst = rho1.support();
    let atoms = src.len() + dst.len();
    if atoms > LP_ATOM_LIMIT {
        return Err(Error::SupportTooLarge {
            atoms,
            limit: LP_ATOM_LIMIT,
        });
    }
    let supply: Vec<f64> = src.iter().map(|&i| rho0.weights()[i]).collect();
    let demand: Vec<f64> = dst
        .iter()
        .map(|&j| rho1.weights()[j] * rho0.mass() / rho1.mass())
        .collect();
    let cost: Vec<Vec<f64>> = src
        .iter()
        .map(|&i| dst.iter().map(|&j| center_cost(&grid, i, j)).collect())
        .collect();
    Ok(min_cost_transport(&supply, &demand, &cost))
}

struct Edge {
    to: usize,
    cap: f64,
    cost: f64,
}

/// Min-cost flow on the bipartite transport network. Every augmentation
/// saturates a source or sink arc, so there are at most `p + q` rounds.
fn min_cost_transport(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (p, q) = (supply.len(), demand.len());
    let (source, sink) = (0, p + q + 1);
    let n_nodes = p + q + 2;
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    let mut add = |edges: &mut Vec<Edge>, from: usize, to: usize, cap: f64, c: f64| {
        adj[from].push(edges.len());
        edges.push(Edge { to, cap, cost: c });
        adj[to].push(edges.len());
        edges.push(Edge {
            to: from,
            cap: 0.0,
            cost: -c,
        });
    };
    let total: f64 = supply.iter().sum();
    for (i, &s) in supply.iter().enumerate() {
        add(&mut edges, source, 1 + i, s, 0.0);
    }
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            add(&mut edges, 1 + i, 1 + p + j, f64::INFINITY, c);
        }
    }
    for (j, &d) in demand.iter().enumerate() {
        add(&mut edges, 1 + p + j, sink, d, 0.0);
    }

    let eps = 1e-15 * total;
    let mut sent = 0.0;
    let mut acc = CompensatedSum::new();
    loop {
        // Bellman-Ford over the residual graph (no negative cycles by optimality).
        let mut dist = vec![f64::INFINITY; n_nodes];
        let mut via = vec![usize::MAX; n_nodes];
        dist[source] = 0.0;
        for _ in 0..n_nodes {
            let mut changed = false;
            for u in 0..n_nodes {
                if dist[u] == f64::INFINITY {
                    continue;
                }
                for &e in &adj[u] {
                    let edge = &edges[e];
                    if edge.cap > eps && dist[u] + edge.cost < dist[edge.to] - 1e-15 {
                        dist[edge.to] = dist[u] + edge.cost;
                        via[edge.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink] == f64::INFINITY {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = sink;
        while v != source {
            let e = via[v];
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let e = via[v];
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            acc.add(push * edges[e].cost);
            v = edges[e ^ 1].to;
        }
        sent += push;
        if total - sent <= eps {
            break;
        }
    }
    acc.value().max(0.0)
}

/// `(1/n) min_σ Σ |x_i - y_σ(i)|²`. Sorted matching is optimal on the line;
/// on the circle the best cyclic shift of the lifted sorted lists is used.
pub fn assignment_cost(x: &ParticleCloud, y: &ParticleCloud) -> Result<f64> {
    if x.len() != y.len() {
        return Err(invalid(format!(
            "particle counts differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::EmptyCloud);
    }
    x.domain().ensure_same(y.domain())?;
    let n = x.len();
    let mut a = x.positions().to_vec();
    let mut b = y.positions().to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let cost_for = |shift: i64| {
        let length = x.domain().length();
        compensated_sum((0..n).map(|i| {
            let k = i as i64 + shift;
            let turns = k.div_euclid(n as i64);
            let yb = b[k.rem_euclid(n as i64) as usize] + turns as f64 * length;
            (a[i] - yb).powi(2)
        })) / n as f64
    };
    Ok(match x.domain().topology() {
        Topology::Interval => cost_for(0),
        Topology::Torus => (-(n as i64)..=n as i64)
            .map(cost_for)
            .fold(f64::INFINITY, f64::min),
    })
}

/// How a face value is formed from its two neighbouring cell values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceMean {
    #[default]
    Arithmetic,
    /// `(a - b) / (ln a - ln b)`; with it `D_f ∇(ln ρ)_f = ∇ρ_f` holds exactly
    /// for `D = ρ`.
    Logarithmic,
}

impl FaceMean {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Self::Arithmetic => 0.5 * (a + b),
            Self::Logarithmic => {
                if a <= 0.0 || b <= 0.0 {
                    return 0.0;
                }
                let r = b / a;
                if (r - 1.0).abs() < 1e-6 {
                    // series of (r - 1) / ln r about r = 1
                    let e = r - 1.0;
                    a * (1.0 + e / 2.0 - e * e / 12.0 + e * e * e / 24.0)
                } else {
                    (b - a) / r.ln()
                }
            }
        }
    }
}

/// Mobility `D` evaluated at cell faces (face `f` sits between cells `f` and `f+1`).
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityField {
    grid: Grid,
    face_values: Vec<f64>,
}

impl MobilityField {
    pub fn new(grid: Grid, face_values: Vec<f64>) -> Result<Self> {
        if face_values.len() != grid.n_faces() {
            return Err(Error::GridMismatch);
        }
        if let Some(v) = face_values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!("mobility must be nonnegative, got {v}")));
        }
        Ok(Self { grid, face_values })
    }

    /// Face values as arithmetic means of neighbouring cell values.
    pub fn from_cell_values(grid: Grid, cells: &[f64]) -> Result<Self> {
        Self::from_cell_values_with(grid, cells, FaceMean::Arithmetic)
    }

    pub fn from_cell_values_with(grid: Grid, cells: &[f64], mean: FaceMean) -> Result<Self> {
        grid.ensure_len(cells)?;
        let faces = (0..grid.n_faces())
            .map(|f| mean.apply(cells[f], cells[grid.right_of_face(f)]))
            .collect();
        Self::new(grid, faces)
    }

    /// The Wasserstein mobility `D(ρ) = ρ`.
    pub fn from_density<S: GridDensity>(rho: &S) -> Result<Self> {
        Self::from_cell_values(*rho.grid(), &rho.density())
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.n_faces()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn face_values(&self) -> &[f64] {
        &self.face_values
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.grid, self.face_values.iter().map(|d| d * c).collect())
    }

    fn ensure_positive(&self) -> Result<()> {
        match self.face_values.iter().position(|&d| d <= 0.0) {
            Some(f) => Err(Error::MobilityVanishes(f)),
            None => Ok(()),
        }
    }
}

fn gradient(grid: &Grid, xi: &[f64]) -> Vec<f64> {
    let dx = grid.dx();
    (0..grid.n_faces())
        .map(|f| (xi[grid.right_of_face(f)] - xi[f]) / dx)
        .collect()
}

/// Face fluxes `J` with `(J_i - J_{i-1}) / Δx = s_i`: on the interval the
/// boundary fluxes vanish, on the torus the constant is fixed so that the
/// implied potential `p` (with `D ∇p = J`) is periodic.
fn flux_of(s: &[f64], d: &MobilityField) -> Result<Vec<f64>> {
    let grid = d.grid;
    grid.ensure_len(s)?;
    d.ensure_positive()?;
    let dx = grid.dx();
    let net = compensated_sum(s.iter().copied()) * dx;
    if net.abs() > COMPATIBILITY_TOLERANCE {
        return Err(Error::NotTangent(net));
    }
    // remove the admissible roundoff so the last boundary flux closes exactly
    let mean = net / grid.length();
    let mut partial = Vec::with_capacity(grid.n_faces());
    let mut acc = CompensatedSum::new();
    for &si in s.iter().take(grid.n_faces()) {
        acc.add((si - mean) * dx);
        partial.push(acc.value());
    }
    if grid.topology() == Topology::Torus {
        let inv: Vec<f64> = d.face_values.iter().map(|v| 1.0 / v).collect();
        let c = -compensated_sum(partial.iter().zip(&inv).map(|(p, i)| p * i))
            / compensated_sum(inv.iter().copied());
        for p in &mut partial {
            *p += c;
        }
    }
    Ok(partial)
}

/// `‖s‖²_{D,*}`: solve `div(D ∇p) = s` and return `Σ_f D_f (∇p)_f² Δx`.
pub fn dual_norm_sq(s: &[f64], d: &MobilityField) -> Result<f64> {
    let flux = flux_of(s, d)?;
    let dx = d.grid.dx();
    Ok(compensated_sum(flux.iter().zip(&d.face_values).map(|(j, dv)| j * j / dv)) * dx)
}

/// Inner product associated with [`dual_norm_sq`].
pub fn dual_inner(s1: &[f64], s2: &[f64], d: &MobilityField) -> Result<f64> {
    let (j1, j2) = (flux_of(s1, d)?, flux_of(s2, d)?);
    let dx = d.grid.dx();
    Ok(compensated_sum(
        j1.iter()
            .zip(&j2)
            .zip(&d.face_values)
            .map(|((a, b), dv)| a * b / dv),
    ) * dx)
}

/// Mean-zero solution `p` of `div(D ∇p) = s`.
pub fn potential_solve(s: &[f64], d: &MobilityField) -> Result<Vec<f64>> {
    let flux = flux_of(s, d)?;
    let grid = d.grid;
    let dx = grid.dx();
    let mut p = vec![0.0; grid.n_cells()];
    for i in 1..grid.n_cells() {
        p[i] = p[i - 1] + flux[i - 1] * dx / d.face_values[i - 1];
    }
    let mean = compensated_sum(p.iter().copied()) / p.len() as f64;
    Ok(p.into_iter().map(|v| v - mean).collect())
}

/// `div(D ∇ξ)` with the finite-volume stencil of [`dual_norm_sq`].
pub fn div_mobility_grad(xi: &[f64], d: &MobilityField) -> Result<Vec<f64>> {
    let grid = d.grid;
    grid.ensure_len(xi)?;
    let n = grid.n_cells();
    let dx = grid.dx();
    let flux: Vec<f64> = gradient(&grid, xi)
        .iter()
        .zip(&d.face_values)
        .map(|(g, dv)| g * dv)
        .collect();
    Ok((0..n)
        .map(|i| {
            let right = if i < flux.len() { flux[i] } else { 0.0 };
            let left = match (i, grid.topology()) {
                (0, Topology::Torus) => flux[n - 1],
                (0, Topology::Interval) => 0.0,
                _ => flux[i - 1],
            };
            (right - left) / dx
        })
        .collect())
}

/// `‖ξ‖²_D = Σ_f D_f (∇ξ)_f² Δx`.
pub fn primal_norm_sq(xi: &[f64], d: &MobilityField) -> Result<f64> {
    d.grid.ensure_len(xi)?;
    let dx = d.grid.dx();
    Ok(compensated_sum(
        gradient(&d.grid, xi)
            .iter()
            .zip(&d.face_values)
            .map(|(g, dv)| dv * g * g),
    ) * dx)
}

/// Discrete Benamou-Brenier action `Σ_k ‖∂_t ρ‖²_{ρ_{k+½},*} Δt`.
pub fn bb_action(path: &MeasurePath<GridMeasure>) -> Result<f64> {
    let grid = *path.grid();
    let dt = path.dt();
    let mut acc = CompensatedSum::new();
    for (v, mid) in path.velocities().iter().zip(path.midpoint_densities()) {
        let d = MobilityField::from_cell_values(grid, &mid)?;
        acc.add(dual_norm_sq(v, &d)? * dt);
    }
    Ok(acc.value())
}

/// Displacement interpolation between two measures on the interval,
/// sampled at `steps + 1` equally spaced times in `[0, 1]`.
pub fn quantile_geodesic(
    rho0: &GridMeasure,
    rho1: &GridMeasure,
    steps: usize,
) -> Result<MeasurePath<GridMeasure>> {
    check_pair(rho0, rho1)?;
    if rho0.grid().topology() != Topology::Interval {
        return Err(Error::Unsupported(
            "displacement interpolation on the torus".into(),
        ));
    }
    if steps == 0 {
        return Err(invalid("geodesic needs at least one step"));
    }
    let q0 = PiecewiseLinearQuantile::from_measure(rho0, MassModel::CellUniform)?;
    let q1 = PiecewiseLinearQuantile::from_measure(rho1, MassModel::CellUniform)?;
    let slices = (0..=steps)
        .map(|k| {
            q0.interpolate(&q1, k as f64 / steps as f64)
                .to_measure(rho0.grid())
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurePath::from_slices(0.0, 1.0 / steps as f64, slices)
}

//! Implicit finite-difference solution of `L u = f` in the cylinder with
//! prescribed values on the parabolic boundary.
//!
//! The theta-scheme advances level by level:
//!
//! ```text
//! sigma (u^k - u^{k-1}) / ht + theta A^k u^k + (1 - theta) A^{k-1} u^{k-1}
//!     = theta f^k + (1 - theta) f^{k-1}
//! ```
//!
//! where `A^k` is the spatial part with level-`k` coefficients. With
//! `theta = 1`, upwind drift and the positive mixed-term splitting every
//! step matrix is an M-matrix, so the scheme obeys a discrete maximum
//! principle.

mod banded;
mod iterative;

pub use banded::{BandLu, BandMatrix};
pub use iterative::{bicgstab, CsrMatrix, IterativeOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{parabolic_boundary, Cylinder, GridFunction};
use crate::operator::{
    spatial_row, DriftScheme, MixedScheme, OperatorCoefficients, StencilConfig,
};

/// Linear solver for each time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinearSolver {
    #[default]
    BandedDirect,
    Iterative { tol: f64, max_iter: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeConfig {
    pub theta: f64,
    pub drift: DriftScheme,
    pub mixed: MixedScheme,
    pub linear_solver: LinearSolver,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            theta: 1.0,
            drift: DriftScheme::Upwind,
            mixed: MixedScheme::PositiveSplitting,
            linear_solver: LinearSolver::BandedDirect,
        }
    }
}

impl SchemeConfig {
    pub fn stencil(&self) -> StencilConfig {
        StencilConfig {
            drift: self.drift,
            mixed: self.mixed,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_drift(mut self, drift: DriftScheme) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_linear_solver(mut self, s: LinearSolver) -> Self {
        self.linear_solver = s;
        self
    }
}

/// A discrete solution with solver diagnostics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: GridFunction,
    /// Max-norm of the scheme residual over interior and final-slice nodes.
    pub residual: f64,
    /// Every step matrix had nonpositive off-diagonals and was weakly
    /// diagonally dominant.
    pub m_matrix: bool,
    /// Rows whose spatial stencil had a positive off-diagonal weight.
    pub non_monotone_rows: usize,
    pub factorizations: usize,
    pub max_iterations: usize,
}

/// Serializable summary of a [`Solution`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSummary {
    pub grid: Cylinder,
    pub residual: f64,
    pub m_matrix: bool,
    pub non_monotone_rows: usize,
    pub factorizations: usize,
    pub max_iterations: usize,
    pub max_u: f64,
    pub min_u: f64,
}

impl Solution {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            grid: *self.u.grid(),
            residual: self.residual,
            m_matrix: self.m_matrix,
            non_monotone_rows: self.non_monotone_rows,
            factorizations: self.factorizations,
            max_iterations: self.max_iterations,
            max_u: self.u.max().unwrap_or(0.0),
            min_u: self.u.min().unwrap_or(0.0),
        }
    }
}

/// Interior spatial nodes and their unknown numbering.
struct Unknowns {
    nodes: Vec<usize>,
    index: Vec<Option<usize>>,
}

impl Unknowns {
    fn new(g: &Cylinder) -> Self {
        let mut nodes = Vec::new();
        let mut index = vec![None; g.n_space()];
        for s in 0..g.n_space() {
            if !g.is_lateral(s) {
                index[s] = Some(nodes.len());
                nodes.push(s);
            }
        }
        Unknowns { nodes, index }
    }
}

enum Factor {
    Band(BandLu),
    Csr(CsrMatrix),
}

fn check_preconditions(op: &OperatorCoefficients, cfg: &SchemeConfig) -> Result<()> {
    if !(0.0..=1.0).contains(&cfg.theta) {
        return Err(Error::Precondition(format!(
            "theta must lie in [0, 1], got {}",
            cfg.theta
        )));
    }
    op.validate()
        .map_err(|e| Error::Precondition(e.to_string()))?;
    let g = op.grid();
    let mask = parabolic_boundary(g);
    for node in mask.evaluation_nodes() {
        let s = op.sigma_at(node);
        if !(s > 0.0) {
            return Err(Error::Precondition(format!(
                "sigma = {s} at interior node {node}; the time direction must be nondegenerate"
            )));
        }
    }
    Ok(())
}

/// Solves `L u = f` with `u = 0` on the parabolic boundary.
pub fn solve_forward(
    op: &OperatorCoefficients,
    f: &GridFunction,
    cfg: &SchemeConfig,
) -> Result<Solution> {
    solve_with_boundary(op, f, &GridFunction::zeros(op.grid()), cfg)
}

/// Solves `L u = f` with `u = boundary` on the parabolic boundary. The
/// values of `boundary` elsewhere are ignored.
pub fn solve_with_boundary(
    op: &OperatorCoefficients,
    f: &GridFunction,
    boundary: &GridFunction,
    cfg: &SchemeConfig,
) -> Result<Solution> {
    let mut out = solve_many(op, std::slice::from_ref(f), boundary, cfg)?;
    Ok(out.pop().expect("one right-hand side"))
}

/// Solves `L u = f_i` for several right-hand sides sharing every step
/// factorization; zero boundary data.
pub fn solve_forward_many(
    op: &OperatorCoefficients,
    fs: &[GridFunction],
    cfg: &SchemeConfig,
) -> Result<Vec<Solution>> {
    solve_many(op, fs, &GridFunction::zeros(op.grid()), cfg)
}

/// Numerical barrier: solves `L B = rhs` with `B = 0` on the parabolic
/// boundary.
pub fn solve_barrier_problem(
    op: &OperatorCoefficients,
    rhs: &GridFunction,
    cfg: &SchemeConfig,
) -> Result<Solution> {
    solve_forward(op, rhs, cfg)
}

fn solve_many(
    op: &OperatorCoefficients,
    fs: &[GridFunction],
    boundary: &GridFunction,
    cfg: &SchemeConfig,
) -> Result<Vec<Solution>> {
    let g = *op.grid();
    for f in fs {
        g.check_same(f.grid(), "right-hand side")?;
    }
    g.check_same(boundary.grid(), "boundary data")?;
    check_preconditions(op, cfg)?;

    let unk = Unknowns::new(&g);
    let m = unk.nodes.len();
    let (ns, nt) = (g.n_space(), g.nt());
    let ht = g.ht();
    let theta = cfg.theta;
    let stencil = cfg.stencil();
    let reuse = op.is_time_independent();

    let mut us: Vec<Vec<f64>> = fs.iter().map(|_| vec![0.0; g.n_nodes()]).collect();
    for u in us.iter_mut() {
        for s in 0..ns {
            u[g.node(s, 0)] = boundary.value(g.node(s, 0));
        }
        for k in 1..nt {
            for s in 0..ns {
                if g.is_lateral(s) {
                    u[g.node(s, k)] = boundary.value(g.node(s, k));
                }
            }
        }
    }

    // Band width from the unknown numbering.
    let half_band = if g.dim() == 1 {
        1
    } else {
        unk.nodes
            .iter()
            .flat_map(|&s| {
                [(1isize, 1isize), (1, -1), (0, 1), (0, -1)]
                    .into_iter()
                    .filter_map(move |(di, dj)| g.shift(s, di, dj).map(|nb| (s, nb)))
            })
            .filter_map(|(s, nb)| Some(unk.index[nb]?.abs_diff(unk.index[s]?)))
            .max()
            .unwrap_or(1)
    };

    let mut factor: Option<Factor> = None;
    let mut m_matrix = true;
    let mut non_monotone_rows = 0usize;
    let mut factorizations = 0usize;
    let mut max_iterations = 0usize;
    let mut rhs = vec![vec![0.0; m]; fs.len()];

    for k in 1..nt {
        // Assemble the level-k step matrix and the boundary contributions.
        let need_matrix = factor.is_none() || !reuse;
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        if need_matrix {
            rows.reserve(m);
        }
        for (ui, &s) in unk.nodes.iter().enumerate() {
            let node = g.node(s, k);
            let coef = op.node_coefficients(node);
            let (row, monotone) = spatial_row(&g, &coef, &stencil);
            let diag_time = coef.sigma / ht;
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(9);
            for r in rhs.iter_mut() {
                r[ui] = 0.0;
            }
            for (nb, w) in row.entries(&g, s) {
                match unk.index[nb] {
                    Some(j) => entries.push((j, theta * w)),
                    None => {
                        for (r, u) in rhs.iter_mut().zip(&us) {
                            r[ui] -= theta * w * u[g.node(nb, k)];
                        }
                    }
                }
            }
            if let Some(e) = entries.iter_mut().find(|(j, _)| *j == ui) {
                e.1 += diag_time;
            } else {
                entries.push((ui, diag_time));
            }
            if need_matrix {
                if !monotone {
                    non_monotone_rows += 1;
                }
                let diag = entries.iter().find(|(j, _)| *j == ui).map_or(0.0, |e| e.1);
                let off: f64 = row
                    .entries(&g, s)
                    .filter(|&(nb, _)| nb != s)
                    .map(|(_, w)| theta * w)
                    .fold(0.0, |acc, w| acc + w.abs());
                let offdiag_ok = row
                    .entries(&g, s)
                    .all(|(nb, w)| nb == s || w <= 0.0);
                if !offdiag_ok || diag < off * (1.0 - 1e-12) {
                    m_matrix = false;
                }
                rows.push(entries);
            }

            // Explicit part and sources.
            let prev = g.node(s, k - 1);
            let theta_rest = 1.0 - theta;
            let explicit_row = if theta_rest > 0.0 {
                Some(spatial_row(&g, &op.node_coefficients(prev), &stencil).0)
            } else {
                None
            };
            for ((r, u), f) in rhs.iter_mut().zip(&us).zip(fs) {
                let mut acc = theta * f.value(node) + diag_time * u[prev];
                if let Some(er) = &explicit_row {
                    acc += theta_rest * f.value(prev);
                    for (nb, w) in er.entries(&g, s) {
                        acc -= theta_rest * w * u[g.node(nb, k - 1)];
                    }
                }
                r[ui] += acc;
            }
        }

        if need_matrix {
            factor = Some(match cfg.linear_solver {
                LinearSolver::BandedDirect => {
                    let mut band = BandMatrix::zeros(m, half_band, half_band);
                    for (i, r) in rows.iter().enumerate() {
                        for &(j, v) in r {
                            band.add(i, j, v);
                        }
                    }
                    factorizations += 1;
                    Factor::Band(
                        band.factorize()
                            .ok_or(Error::SingularMatrix { level: k })?,
                    )
                }
                LinearSolver::Iterative { .. } => Factor::Csr(CsrMatrix::from_rows(&rows)),
            });
        }

        for (r, u) in rhs.iter_mut().zip(us.iter_mut()) {
            let x = match factor.as_ref().expect("assembled") {
                Factor::Band(lu) => {
                    lu.solve(r);
                    r.clone()
                }
                Factor::Csr(a) => {
                    let LinearSolver::Iterative { tol, max_iter } = cfg.linear_solver else {
                        unreachable!("csr only for iterative solves")
                    };
                    let mut x: Vec<f64> =
                        unk.nodes.iter().map(|&s| u[g.node(s, k - 1)]).collect();
                    let out = bicgstab(a, r, &mut x, tol, max_iter);
                    max_iterations = max_iterations.max(out.iterations);
                    if !out.converged || out.residual.is_nan() {
                        return Err(Error::NoConvergence {
                            level: k,
                            residual: out.residual,
                            iterations: out.iterations,
                        });
                    }
                    x
                }
            };
            for (ui, &s) in unk.nodes.iter().enumerate() {
                if !x[ui].is_finite() {
                    return Err(Error::SingularMatrix { level: k });
                }
                u[g.node(s, k)] = x[ui];
            }
        }
    }

    us.into_iter()
        .zip(fs)
        .map(|(values, f)| {
            let u = GridFunction::new(g, values)?;
            let residual = scheme_residual(op, &u, f, cfg)?;
            Ok(Solution {
                u,
                residual,
                m_matrix,
                non_monotone_rows,
                factorizations,
                max_iterations,
            })
        })
        .collect()
}

/// Max-norm of the theta-scheme residual at interior and final-slice nodes.
pub fn scheme_residual(
    op: &OperatorCoefficients,
    u: &GridFunction,
    f: &GridFunction,
    cfg: &SchemeConfig,
) -> Result<f64> {
    let g = *op.grid();
    g.check_same(u.grid(), "solution")?;
    let stencil = cfg.stencil();
    let theta = cfg.theta;
    let mask = parabolic_boundary(&g);
    let mut worst = 0.0f64;
    for node in mask.evaluation_nodes() {
        let (s, k) = g.split(node);
        let prev = g.node(s, k - 1);
        let coef = op.node_coefficients(node);
        let (row, _) = spatial_row(&g, &coef, &stencil);
        let mut r = coef.sigma * (u.value(node) - u.value(prev)) / g.ht() - theta * f.value(node);
        for (nb, w) in row.entries(&g, s) {
            r += theta * w * u.value(g.node(nb, k));
        }
        if theta < 1.0 {
            let (er, _) = spatial_row(&g, &op.node_coefficients(prev), &stencil);
            r -= (1.0 - theta) * f.value(prev);
            for (nb, w) in er.entries(&g, s) {
                r += (1.0 - theta) * w * u.value(g.node(nb, k - 1));
            }
        }
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

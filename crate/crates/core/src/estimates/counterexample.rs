//! The singular-drift operator `D_t - Laplacian + (n+1) x_i/|x|^alpha D_i + 1`
//! on `C_{1,1}` and the test function `U = 2t - t^2 - |x|^2 - 1/2`.
//!
//! For `alpha = 2`, `L U = -t^2 - |x|^2 - 1/2 < 0` and `U <= 0` on the
//! parabolic boundary, yet `U(0, 1) = 1/2`: no bound of the form
//! `sup U <= C ||(L U)_+||` can hold, because `||h||_{n,inf}` diverges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{Exponent, ExponentPair};
use crate::grid::{parabolic_boundary, Cylinder, GridFunction, PositivitySet};
use crate::norm::NormDetail;
use crate::operator::{apply_operator, drift_weight, DriftComponent, Family};

/// `2t - t^2 - |x|^2 - 1/2`.
pub fn counterexample_function(grid: &Cylinder) -> GridFunction {
    GridFunction::from_fn(grid, |x, t| {
        2.0 * t - t * t - x.iter().map(|v| v * v).sum::<f64>() - 0.5
    })
    .expect("finite by construction")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub alpha: f64,
    pub grid: Cylinder,
    /// `U(0, T)`.
    pub u_at_origin_final: f64,
    /// Largest `U` on the parabolic boundary.
    pub boundary_max: f64,
    /// Largest grid `L U` over interior and final nodes with `|x| >= 2 hx`.
    pub lu_max_away: f64,
    /// Largest grid `L U` over all interior and final nodes.
    pub lu_max: f64,
    /// `L U < 0` at every node with `|x| >= 2 hx`.
    pub lu_negative_away: bool,
    /// `||h||_{n,inf}` over the closed cylinder.
    pub h_norm: NormDetail,
}

/// Evaluates `U`, `L U` and `||h||_{n,inf,(Q)}` on `grid`, which must be
/// `C_{1,1}`.
pub fn singular_counterexample(alpha: f64, grid: &Cylinder) -> Result<CounterexampleReport> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if grid.radius() != 1.0 || grid.final_time() != 1.0 {
        return Err(Error::InvalidGrid(format!(
            "the counterexample lives on C_(1,1), got {grid}"
        )));
    }
    let op = Family::SingularDrift {
        alpha,
        strength: None,
        c: 1.0,
        eps_factor: 0.5,
    }
    .build(grid)?;
    let u = counterexample_function(grid);
    let lu = apply_operator(&op, &u)?;
    let mask = parabolic_boundary(grid);
    let boundary_max = (0..grid.n_nodes())
        .filter(|&i| mask.is_boundary(i))
        .map(|i| u.value(i))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut lu_max = f64::NEG_INFINITY;
    let mut lu_max_away = f64::NEG_INFINITY;
    for node in mask.evaluation_nodes() {
        let v = lu.value(node);
        lu_max = lu_max.max(v);
        let (s, _) = grid.split(node);
        if grid.abs_x(s) >= 2.0 * grid.hx() * (1.0 - 1e-12) {
            lu_max_away = lu_max_away.max(v);
        }
    }
    let origin = grid
        .origin()
        .ok_or_else(|| Error::InvalidGrid("the origin must be a grid node (odd Nx)".into()))?;
    let h_norm = h_norm_closed_cylinder(alpha, grid)?;
    Ok(CounterexampleReport {
        alpha,
        grid: *grid,
        u_at_origin_final: u.at(origin, grid.nt() - 1),
        boundary_max,
        lu_max_away,
        lu_max,
        lu_negative_away: lu_max_away < 0.0,
        h_norm,
    })
}

fn h_norm_closed_cylinder(alpha: f64, grid: &Cylinder) -> Result<NormDetail> {
    let op = Family::SingularDrift {
        alpha,
        strength: None,
        c: 1.0,
        eps_factor: 0.5,
    }
    .build(grid)?;
    let e = ExponentPair::new(Exponent::integer(grid.dim() as i64)?, Exponent::Infinite);
    let h = drift_weight(&op, &e, DriftComponent::Total)?;
    h.norm(Some(&PositivitySet::closed_cylinder(grid)))
}

/// One grid of a refinement study of `||h||_{n,inf,(Q)}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RefinementStep {
    pub nx: usize,
    pub eps_sing: f64,
    pub norm: NormDetail,
    /// `||h||^n` increment over the previous step.
    pub increment: Option<f64>,
    /// Value ratio over the previous step.
    pub growth: Option<f64>,
}

/// `||h||_{n,inf,(Q)}` for the singular drift on `C_{1,1}` with two time
/// levels (the drift does not depend on time) and each `nx`.
pub fn drift_norm_refinement(alpha: f64, n: usize, nxs: &[usize]) -> Result<Vec<RefinementStep>> {
    let mut out: Vec<RefinementStep> = Vec::with_capacity(nxs.len());
    for &nx in nxs {
        let g = Cylinder::new(n, 1.0, 1.0, nx, 2)?;
        let norm = h_norm_closed_cylinder(alpha, &g)?;
        let prev = out.last();
        out.push(RefinementStep {
            nx,
            eps_sing: 0.5 * g.hx(),
            norm,
            increment: prev.map(|p| norm.value.powi(n as i32) - p.norm.value.powi(n as i32)),
            growth: prev.map(|p| norm.value / p.norm.value),
        });
    }
    Ok(out)
}

/// The increments of `||h||^n` per halving of `eps` do not decay: the
/// signature of a logarithmically divergent integral. Needs three or more
/// steps with halving mesh.
pub fn increments_persist(steps: &[RefinementStep], min_ratio: f64) -> bool {
    let inc: Vec<f64> = steps.iter().filter_map(|s| s.increment).collect();
    inc.len() >= 2 && inc.windows(2).all(|w| w[0] > 0.0 && w[1] >= min_ratio * w[0])
}

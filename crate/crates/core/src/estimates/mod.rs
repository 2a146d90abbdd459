//! Both sides of the maximum-principle bound
//!
//! ```text
//! sup u <= M * || (L u)_+ / (sigma^(1/q0) det(a)^(1/p0) c^(1 - n/p0 - 1/q0)) ||_{p0,q0,(Q_u)}
//! ```
//!
//! where `Q_u = {u > 0}` and `M` depends on the drift weights `||h_k||`.
//! The constant is never asserted; reports expose the observed ratio.

mod bony;
mod counterexample;

pub use bony::{bony_check, bony_check_with, BonyReport};
pub use counterexample::{
    counterexample_function, singular_counterexample, drift_norm_refinement, increments_persist,
    CounterexampleReport, RefinementStep,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentPair;
use crate::grid::{parabolic_boundary, Cylinder, GridFunction, PositivitySet};
use crate::norm::{mixed_norm, MixedNormSpec};
use crate::operator::{
    apply_operator_with, check_degeneracy_condition, drift_weight, exp_rescale, natural_weight,
    DegeneracyReport, DriftComponent, OperatorCoefficients, StencilConfig,
};
use crate::solver::{solve_forward, SchemeConfig};

/// Tolerance for `u <= 0` on the parabolic boundary.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Values at or below this are not counted as positive when forming `Q_u`.
pub const POSITIVITY_TOL: f64 = 1e-12;

/// `a / b` with `0 / 0 = 0`.
pub fn ratio_or_zero(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// The observed positivity set of `u`, relative to its magnitude.
pub fn observed_positivity_set(u: &GridFunction) -> PositivitySet {
    let scale = u.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    crate::grid::positivity_set_with_tol(u, POSITIVITY_TOL * scale)
}

fn check_boundary(u: &GridFunction) -> Result<f64> {
    let mask = parabolic_boundary(u.grid());
    let mut worst = f64::NEG_INFINITY;
    for node in 0..u.grid().n_nodes() {
        if mask.is_boundary(node) {
            let v = u.value(node);
            if v > BOUNDARY_TOL {
                return Err(Error::PositiveOnBoundary { node, value: v });
            }
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

/// Weighted norm of `(L u)_+` over `Q_u`, with the analysis stencil.
pub fn estimate_rhs(op: &OperatorCoefficients, u: &GridFunction, e: &ExponentPair) -> Result<f64> {
    estimate_rhs_with(op, u, e, &StencilConfig::analysis())
}

/// [`estimate_rhs`] with an explicit stencil for `L u`.
pub fn estimate_rhs_with(
    op: &OperatorCoefficients,
    u: &GridFunction,
    e: &ExponentPair,
    stencil: &StencilConfig,
) -> Result<f64> {
    estimate_rhs_outside(op, u, e, stencil, 0.0)
}

/// [`estimate_rhs_with`] over `Q_u` minus the ball `|x| < exclude_radius`,
/// for drifts regularized near the origin.
pub fn estimate_rhs_outside(
    op: &OperatorCoefficients,
    u: &GridFunction,
    e: &ExponentPair,
    stencil: &StencilConfig,
    exclude_radius: f64,
) -> Result<f64> {
    let g = *op.grid();
    e.check_admissible(g.dim())?;
    g.check_same(u.grid(), "operator and function")?;
    check_boundary(u)?;
    let qu = observed_positivity_set(u);
    if qu.is_empty() {
        return Ok(0.0);
    }
    let lu = apply_operator_with(op, u, stencil)?;
    let mut integrand = vec![0.0; g.n_nodes()];
    for node in 0..g.n_nodes() {
        if !qu.contains(node) || g.abs_x(g.split(node).0) < exclude_radius {
            continue;
        }
        let Some(v) = lu.get(node) else { continue };
        let v = v.max(0.0);
        if v == 0.0 {
            continue;
        }
        let w = natural_weight(op, node, e);
        if w > 0.0 {
            integrand[node] = v / w;
        } else {
            return Ok(f64::INFINITY);
        }
    }
    let f = GridFunction::new(g, integrand)?;
    mixed_norm(&f, &MixedNormSpec::new(*e).with_restriction(qu))
}

/// Norm of one drift weight over `Q_u`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftNorm {
    pub label: String,
    pub part: Option<usize>,
    pub exponents: ExponentPair,
    pub value: f64,
    pub corrected: bool,
    pub divergent: bool,
    pub infinite_nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub grid: Cylinder,
    pub exponents: ExponentPair,
    /// `max(sup u, 0)` of the original solution.
    pub lhs_sup: f64,
    /// `max(sup v, 0)` for `v = exp(-kappa t) u`; equals `lhs_sup` when `kappa = 0`.
    pub lhs_sup_rescaled: f64,
    /// Weighted norm of `(L_kappa v)_+` over `Q_u`.
    pub rhs_norm: f64,
    pub kappa: f64,
    /// `exp(kappa T)`.
    pub rescale_factor: f64,
    /// `rescale_factor * rhs_norm`.
    pub bound_target: f64,
    /// `lhs_sup / bound_target`, with `0 / 0 = 0`.
    pub ratio: f64,
    /// `lhs_sup_rescaled / rhs_norm`, with `0 / 0 = 0`.
    pub ratio_rescaled: f64,
    pub drift_norms: Vec<DriftNorm>,
    pub degeneracy: DegeneracySummary,
    /// The degeneracy condition holds and every drift norm is finite.
    pub hypotheses_valid: bool,
    pub positive_nodes: usize,
    pub solver_residual: Option<f64>,
    pub m_matrix: Option<bool>,
}

/// [`DegeneracyReport`] without the node list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegeneracySummary {
    pub branch: crate::operator::DegeneracyBranch,
    pub condition: String,
    pub passed: bool,
    pub violating_nodes: usize,
}

impl From<&DegeneracyReport> for DegeneracySummary {
    fn from(r: &DegeneracyReport) -> Self {
        DegeneracySummary {
            branch: r.branch,
            condition: r.condition.clone(),
            passed: r.passed,
            violating_nodes: r.violating_nodes.len(),
        }
    }
}

/// Resolves the drift-weight requests: one pair per part, a single pair for
/// the total drift, or (empty list) each part's declared exponents.
fn drift_requests(
    op: &OperatorCoefficients,
    e1: &[ExponentPair],
) -> Result<Vec<(DriftComponent, ExponentPair)>> {
    let parts = op.parts.len();
    if e1.is_empty() {
        return Ok(op
            .parts
            .iter()
            .enumerate()
            .filter_map(|(k, p)| p.exponents.map(|e| (DriftComponent::Part(k), e)))
            .collect());
    }
    if e1.len() == parts {
        return Ok(e1
            .iter()
            .enumerate()
            .map(|(k, e)| (DriftComponent::Part(k), *e))
            .collect());
    }
    if e1.len() == 1 {
        return Ok(vec![(DriftComponent::Total, e1[0])]);
    }
    Err(Error::InvalidParameter(format!(
        "{} drift exponent pairs given for {parts} drift parts",
        e1.len()
    )))
}

/// Assembles the report for a given `u` (with `u <= 0` on the parabolic
/// boundary). `stencil` is the one used to evaluate `L u`.
pub fn estimate_report(
    op: &OperatorCoefficients,
    u: &GridFunction,
    e0: &ExponentPair,
    e1: &[ExponentPair],
    stencil: &StencilConfig,
) -> Result<EstimateReport> {
    estimate_report_outside(op, u, e0, e1, stencil, 0.0)
}

/// [`estimate_report`] with the right-hand side taken outside `|x| < exclude_radius`.
pub fn estimate_report_outside(
    op: &OperatorCoefficients,
    u: &GridFunction,
    e0: &ExponentPair,
    e1: &[ExponentPair],
    stencil: &StencilConfig,
    exclude_radius: f64,
) -> Result<EstimateReport> {
    let g = *op.grid();
    e0.check_admissible(g.dim())?;
    for e in e1 {
        e.check_admissible(g.dim())?;
    }
    let degeneracy = check_degeneracy_condition(op, e0)?;
    let (lk, v) = exp_rescale(op, u)?;
    let rhs_norm = estimate_rhs_outside(&lk, &v, e0, stencil, exclude_radius)?;
    let qu = observed_positivity_set(u);
    let mut drift_norms = Vec::new();
    for (component, e) in drift_requests(op, e1)? {
        let h = drift_weight(&lk, &e, component)?;
        let detail = h.norm(Some(&qu))?;
        let (label, part) = match component {
            DriftComponent::Total => ("total".to_string(), None),
            DriftComponent::Part(k) => (op.parts[k].name.clone(), Some(k)),
        };
        drift_norms.push(DriftNorm {
            label,
            part,
            exponents: e,
            value: detail.value,
            corrected: detail.corrected,
            divergent: detail.divergent,
            infinite_nodes: h.infinite_nodes.len(),
        });
    }
    let sup = |w: &GridFunction| {
        let m = w.max().unwrap_or(0.0);
        if qu.is_empty() {
            0.0
        } else {
            m.max(0.0)
        }
    };
    let lhs_sup = sup(u);
    let lhs_sup_rescaled = sup(&v);
    let rescale_factor = (op.kappa * g.final_time()).exp();
    let bound_target = rescale_factor * rhs_norm;
    let hypotheses_valid = degeneracy.passed
        && drift_norms
            .iter()
            .all(|d| d.value.is_finite() && !d.divergent);
    Ok(EstimateReport {
        grid: g,
        exponents: *e0,
        lhs_sup,
        lhs_sup_rescaled,
        rhs_norm,
        kappa: op.kappa,
        rescale_factor,
        bound_target,
        ratio: ratio_or_zero(lhs_sup, bound_target),
        ratio_rescaled: ratio_or_zero(lhs_sup_rescaled, rhs_norm),
        drift_norms,
        degeneracy: (&degeneracy).into(),
        hypotheses_valid,
        positive_nodes: qu.count(),
        solver_residual: None,
        m_matrix: None,
    })
}

/// Solves `L u = f` with zero parabolic-boundary data and reports both sides
/// of the bound. With `kappa > 0` the right-hand side is that of the
/// rescaled problem and `exp(kappa T)` enters the bound target.
pub fn verify_bound(
    op: &OperatorCoefficients,
    f: &GridFunction,
    e0: &ExponentPair,
    e1: &[ExponentPair],
    cfg: &SchemeConfig,
) -> Result<EstimateReport> {
    e0.check_admissible(op.dim())?;
    let sol = solve_forward(op, f, cfg)?;
    let mut report = estimate_report(op, &sol.u, e0, e1, &cfg.stencil())?;
    report.solver_residual = Some(sol.residual);
    report.m_matrix = Some(sol.m_matrix);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{Family, Field};

    fn pair(s: &str) -> ExponentPair {
        ExponentPair::parse(s).unwrap()
    }

    #[test]
    fn nonpositive_function_has_zero_rhs() {
        let g = Cylinder::new(1, 1.0, 1.0, 11, 6).unwrap();
        let op = OperatorCoefficients::heat(&g);
        let u = GridFunction::from_fn(&g, |x, t| -(1.0 - x[0] * x[0]) * t).unwrap();
        assert_eq!(estimate_rhs(&op, &u, &pair("2,2")).unwrap(), 0.0);
    }

    #[test]
    fn positive_boundary_is_rejected() {
        let g = Cylinder::new(1, 1.0, 1.0, 11, 6).unwrap();
        let op = OperatorCoefficients::heat(&g);
        let u = GridFunction::constant(&g, 1.0).unwrap();
        assert!(matches!(
            estimate_rhs(&op, &u, &pair("2,2")),
            Err(Error::PositiveOnBoundary { .. })
        ));
    }

    #[test]
    fn nonpositive_forcing_gives_zero_ratio() {
        let g = Cylinder::new(1, 1.0, 1.0, 21, 11).unwrap();
        let op = Family::Heat { sigma: 1.0, c: 1.0 }.build(&g).unwrap();
        let f = GridFunction::constant(&g, -1.0).unwrap();
        let r = verify_bound(&op, &f, &pair("inf,inf"), &[], &SchemeConfig::default()).unwrap();
        assert_eq!(r.lhs_sup, 0.0);
        assert_eq!(r.ratio, 0.0);
        assert!(r.hypotheses_valid);
    }

    #[test]
    fn sup_bound_with_unit_zeroth_order_term() {
        let g = Cylinder::new(1, 1.0, 1.0, 41, 41).unwrap();
        let op = OperatorCoefficients::heat(&g).with_c(Field::Constant(1.0));
        let f = GridFunction::constant(&g, 1.0).unwrap();
        let r = verify_bound(&op, &f, &pair("inf,inf"), &[], &SchemeConfig::default()).unwrap();
        assert!((r.rhs_norm - 1.0).abs() < 1e-9, "{}", r.rhs_norm);
        assert!(r.ratio <= 1.0 && r.ratio > 0.1, "{}", r.ratio);
    }

    #[test]
    fn rescaled_problem_reports_exponential_factor() {
        let g = Cylinder::new(1, 1.0, 1.0, 21, 21).unwrap();
        let op = Family::Heat { sigma: 1.0, c: -1.0 }.build(&g).unwrap().with_kappa(2.0);
        let f = GridFunction::constant(&g, 1.0).unwrap();
        let r = verify_bound(&op, &f, &pair("inf,inf"), &[], &SchemeConfig::default()).unwrap();
        assert!((r.rescale_factor - 2f64.exp()).abs() < 1e-12);
        assert!(r.lhs_sup <= r.rescale_factor * r.lhs_sup_rescaled * (1.0 + 1e-12));
        assert!(r.degeneracy.passed);
    }
}

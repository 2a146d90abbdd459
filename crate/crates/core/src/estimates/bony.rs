use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{parabolic_boundary, GridFunction};
use crate::operator::{apply_operator_with, OperatorCoefficients, StencilConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BonyReport {
    /// `u` attains a nonnegative maximum at an interior or final-slice node.
    pub applicable: bool,
    pub max_node: Option<usize>,
    pub max_value: f64,
    /// `sup L u / (Sp(a) + sigma + c)` over interior and final-slice nodes.
    pub sup_ratio: f64,
    pub sup_node: Option<usize>,
    /// Value of the normalized `L u` at the maximizing node.
    pub ratio_at_max: Option<f64>,
    pub tolerance: f64,
    /// `sup_ratio >= -tolerance`; `true` when not applicable.
    pub passed: bool,
}

/// Checks `sup L u / (Sp(a) + sigma + c) >= -10 (hx + ht)` for `u` with an
/// interior nonnegative maximum, using the monotone stencil.
///
/// At a discrete maximum every term of the monotone stencil is nonnegative,
/// so the discrete statement holds exactly there.
pub fn bony_check(op: &OperatorCoefficients, u: &GridFunction) -> Result<BonyReport> {
    bony_check_with(op, u, &StencilConfig::monotone())
}

pub fn bony_check_with(
    op: &OperatorCoefficients,
    u: &GridFunction,
    stencil: &StencilConfig,
) -> Result<BonyReport> {
    let g = *op.grid();
    g.check_same(u.grid(), "operator and function")?;
    let tolerance = 10.0 * (g.hx() + g.ht());
    let mask = parabolic_boundary(&g);
    let global_max = u.max().unwrap_or(f64::NEG_INFINITY);
    let max_node = mask
        .evaluation_nodes()
        .find(|&i| u.value(i) == global_max);
    let applicable = global_max >= 0.0 && max_node.is_some();
    if !applicable {
        return Ok(BonyReport {
            applicable,
            max_node: None,
            max_value: global_max,
            sup_ratio: f64::NAN,
            sup_node: None,
            ratio_at_max: None,
            tolerance,
            passed: true,
        });
    }
    let lu = apply_operator_with(op, u, stencil)?;
    let normalized = |node: usize| -> f64 {
        let v = lu.value(node);
        let d = op.normalizer_at(node);
        if v == 0.0 {
            0.0
        } else {
            v / d
        }
    };
    let (sup_node, sup_ratio) = mask
        .evaluation_nodes()
        .map(|i| (i, normalized(i)))
        .fold((None, f64::NEG_INFINITY), |(bn, bv), (i, v)| {
            if v > bv {
                (Some(i), v)
            } else {
                (bn, bv)
            }
        });
    Ok(BonyReport {
        applicable,
        max_node,
        max_value: global_max,
        sup_ratio,
        sup_node,
        ratio_at_max: max_node.map(normalized),
        tolerance,
        passed: sup_ratio >= -tolerance,
    })
}

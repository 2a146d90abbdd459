//! The parabolic operator
//! `L u = sigma D_t u - a_ij D_i D_j u + b_i D_i u + c u`
//! with composite drift `b = sum_k b^(k)`.
//!
//! Coefficients are fields over a fixed cylinder grid, given as constants,
//! closed-form functions of `(x, t)`, or nodal samples.

mod degeneracy;
mod families;
mod stencil;
mod weight;

use std::fmt;
use std::sync::Arc;

pub use degeneracy::{
    check_degeneracy_condition, DegeneracyBranch, DegeneracyReport, NondegeneracyBounds,
};
pub use families::{builtin_coefficient_families, DriftPartSpec, Family};
pub use stencil::{DriftScheme, MixedScheme, StencilConfig};
pub use weight::{drift_weight, natural_weight, power_or_zero, DriftComponent, DriftWeight};

pub(crate) use stencil::{spatial_row, NodeCoefficients};

use crate::error::{Error, Result};
use crate::grid::{parabolic_boundary, Cylinder, GridFunction};
use crate::norm::PointSingularity;

/// Closed-form field `(x, t) -> T`; `x` always has two entries, the second
/// is zero in 1D.
pub type PointFn<T> = Arc<dyn Fn(&[f64; 2], f64) -> T + Send + Sync>;

/// A coefficient field on the operator's grid.
#[derive(Clone)]
pub enum Field<T> {
    Constant(T),
    Function(PointFn<T>),
    /// One value per space-time node.
    Sampled(Arc<Vec<T>>),
}

impl<T: Copy + Send + Sync + 'static> Field<T> {
    pub fn function(f: impl Fn(&[f64; 2], f64) -> T + Send + Sync + 'static) -> Self {
        Field::Function(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, grid: &Cylinder, node: usize) -> T {
        match self {
            Field::Constant(v) => *v,
            Field::Function(f) => {
                let (s, k) = grid.split(node);
                f(&grid.point(s), grid.time(k))
            }
            Field::Sampled(v) => v[node],
        }
    }

    /// True when the field does not depend on time.
    pub fn is_time_independent(&self) -> bool {
        matches!(self, Field::Constant(_))
    }
}

impl<T: fmt::Debug> fmt::Debug for Field<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Constant(v) => write!(f, "Constant({v:?})"),
            Field::Function(_) => write!(f, "Function(..)"),
            Field::Sampled(v) => write!(f, "Sampled({} nodes)", v.len()),
        }
    }
}

/// Symmetric 2x2 diffusion matrix; in 1D only `a11` is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 {
        a11: 1.0,
        a12: 0.0,
        a22: 1.0,
    };

    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    pub fn scalar(a: f64) -> Self {
        Sym2::new(a, 0.0, a)
    }

    pub fn trace(&self, n: usize) -> f64 {
        if n == 1 {
            self.a11
        } else {
            self.a11 + self.a22
        }
    }

    /// Determinant, clamped at 0 when roundoff makes it slightly negative.
    pub fn det(&self, n: usize) -> f64 {
        if n == 1 {
            return self.a11;
        }
        let d = self.a11 * self.a22 - self.a12 * self.a12;
        let scale = self.a11.abs().max(self.a22.abs()).max(self.a12.abs());
        if d < 0.0 && d >= -1e-14 * scale * scale {
            0.0
        } else {
            d
        }
    }

    /// Eigenvalues `(min, max)`.
    pub fn eigenvalues(&self, n: usize) -> (f64, f64) {
        if n == 1 {
            return (self.a11, self.a11);
        }
        let m = 0.5 * (self.a11 + self.a22);
        let r = (0.25 * (self.a11 - self.a22).powi(2) + self.a12 * self.a12).sqrt();
        (m - r, m + r)
    }

    pub fn is_psd(&self, n: usize) -> bool {
        if n == 1 {
            return self.a11 >= 0.0;
        }
        self.a11 >= 0.0 && self.a22 >= 0.0 && self.det(2) >= 0.0
    }

    fn scaled(&self, f: f64) -> Sym2 {
        Sym2::new(f * self.a11, f * self.a12, f * self.a22)
    }
}

/// One summand `b^(k)` of a composite drift.
#[derive(Debug, Clone)]
pub struct DriftPart {
    pub name: String,
    pub field: Field<[f64; 2]>,
    /// Integrability exponents `(p_k, q_k)` declared for this part.
    pub exponents: Option<crate::exponent::ExponentPair>,
    /// Known point singularity of `|b^(k)|`.
    pub singularity: Option<PointSingularity>,
}

impl DriftPart {
    pub fn new(name: impl Into<String>, field: Field<[f64; 2]>) -> Self {
        DriftPart {
            name: name.into(),
            field,
            exponents: None,
            singularity: None,
        }
    }
}

/// Coefficient fields of the operator on a fixed grid.
#[derive(Debug, Clone)]
pub struct OperatorCoefficients {
    grid: Cylinder,
    pub label: String,
    pub sigma: Field<f64>,
    pub a: Field<Sym2>,
    pub parts: Vec<DriftPart>,
    pub c: Field<f64>,
    /// Rescaling constant; hypotheses are checked with `c + kappa sigma`.
    pub kappa: f64,
}

impl OperatorCoefficients {
    /// Heat operator `D_t - Laplacian` on `grid`.
    pub fn heat(grid: &Cylinder) -> Self {
        OperatorCoefficients {
            grid: *grid,
            label: "heat".into(),
            sigma: Field::Constant(1.0),
            a: Field::Constant(Sym2::IDENTITY),
            parts: Vec::new(),
            c: Field::Constant(0.0),
            kappa: 0.0,
        }
    }

    pub fn grid(&self) -> &Cylinder {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn with_sigma(mut self, sigma: Field<f64>) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_a(mut self, a: Field<Sym2>) -> Self {
        self.a = a;
        self
    }

    pub fn with_c(mut self, c: Field<f64>) -> Self {
        self.c = c;
        self
    }

    pub fn with_part(mut self, part: DriftPart) -> Self {
        self.parts.push(part);
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    #[inline]
    pub fn sigma_at(&self, node: usize) -> f64 {
        self.sigma.eval(&self.grid, node)
    }

    #[inline]
    pub fn a_at(&self, node: usize) -> Sym2 {
        self.a.eval(&self.grid, node)
    }

    #[inline]
    pub fn c_at(&self, node: usize) -> f64 {
        self.c.eval(&self.grid, node)
    }

    /// `c + kappa sigma`.
    #[inline]
    pub fn c_eff_at(&self, node: usize) -> f64 {
        let c = self.c_at(node);
        if self.kappa == 0.0 {
            c
        } else {
            c + self.kappa * self.sigma_at(node)
        }
    }

    #[inline]
    pub fn part_at(&self, k: usize, node: usize) -> [f64; 2] {
        self.parts[k].field.eval(&self.grid, node)
    }

    /// Total drift `b = sum_k b^(k)`.
    #[inline]
    pub fn b_at(&self, node: usize) -> [f64; 2] {
        let mut b = [0.0; 2];
        for part in &self.parts {
            let v = part.field.eval(&self.grid, node);
            b[0] += v[0];
            b[1] += v[1];
        }
        if self.dim() == 1 {
            b[1] = 0.0;
        }
        b
    }

    pub(crate) fn node_coefficients(&self, node: usize) -> NodeCoefficients {
        NodeCoefficients {
            sigma: self.sigma_at(node),
            a: self.a_at(node),
            b: self.b_at(node),
            c: self.c_at(node),
        }
    }

    /// `Sp(a) + sigma + c`, with `c + kappa sigma` in place of `c`.
    pub fn normalizer_at(&self, node: usize) -> f64 {
        self.a_at(node).trace(self.dim()) + self.sigma_at(node) + self.c_eff_at(node)
    }

    /// True when no coefficient depends on time.
    pub fn is_time_independent(&self) -> bool {
        self.sigma.is_time_independent()
            && self.a.is_time_independent()
            && self.c.is_time_independent()
            && self.parts.iter().all(|p| p.field.is_time_independent())
    }

    /// Checks `sigma >= 0`, `a` positive semidefinite and `c + kappa sigma >= 0`
    /// at every node.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be a finite nonnegative number, got {}",
                self.kappa
            )));
        }
        for node in 0..self.grid.n_nodes() {
            let s = self.sigma_at(node);
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "sigma = {s} at node {node}"
                )));
            }
            let a = self.a_at(node);
            if !a.is_psd(n) {
                return Err(Error::InvalidParameter(format!(
                    "diffusion matrix {a:?} is not positive semidefinite at node {node}"
                )));
            }
            let c = self.c_eff_at(node);
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "c + kappa sigma = {c} < 0 at node {node}"
                )));
            }
            let b = self.b_at(node);
            if !(b[0].is_finite() && b[1].is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "drift is not finite at node {node}"
                )));
            }
        }
        Ok(())
    }

    /// Multiplies every coefficient by the positive field `phi`.
    pub fn scaled_by(&self, phi: Field<f64>) -> Self {
        let g = self.grid;
        let mul_scalar = |f: &Field<f64>| -> Field<f64> {
            let f = f.clone();
            let phi = phi.clone();
            Field::Sampled(Arc::new(
                (0..g.n_nodes())
                    .map(|i| phi.eval(&g, i) * f.eval(&g, i))
                    .collect(),
            ))
        };
        let a = Field::Sampled(Arc::new(
            (0..g.n_nodes())
                .map(|i| self.a.eval(&g, i).scaled(phi.eval(&g, i)))
                .collect(),
        ));
        let parts = self
            .parts
            .iter()
            .map(|p| {
                let field = Field::Sampled(Arc::new(
                    (0..g.n_nodes())
                        .map(|i| {
                            let v = p.field.eval(&g, i);
                            let f = phi.eval(&g, i);
                            [f * v[0], f * v[1]]
                        })
                        .collect(),
                ));
                DriftPart {
                    field,
                    ..p.clone()
                }
            })
            .collect();
        OperatorCoefficients {
            grid: g,
            label: format!("{} (scaled)", self.label),
            sigma: mul_scalar(&self.sigma),
            a,
            parts,
            c: mul_scalar(&self.c),
            kappa: self.kappa,
        }
    }
}

/// Evaluates `L u` at every interior and final-slice node with the analysis
/// stencil (central drift, four-point cross stencil for mixed derivatives).
///
/// Parabolic boundary nodes have no full stencil; they are left outside the
/// support of the result.
pub fn apply_operator(op: &OperatorCoefficients, u: &GridFunction) -> Result<GridFunction> {
    apply_operator_with(op, u, &StencilConfig::analysis())
}

/// [`apply_operator`] with an explicit stencil choice.
pub fn apply_operator_with(
    op: &OperatorCoefficients,
    u: &GridFunction,
    cfg: &StencilConfig,
) -> Result<GridFunction> {
    let g = *op.grid();
    g.check_same(u.grid(), "operator and function")?;
    let mask = parabolic_boundary(&g);
    let ht = g.ht();
    let mut values = vec![0.0; g.n_nodes()];
    let mut defined = vec![false; g.n_nodes()];
    for node in mask.evaluation_nodes() {
        let (s, k) = g.split(node);
        let coef = op.node_coefficients(node);
        let (row, _) = spatial_row(&g, &coef, cfg);
        let mut acc = coef.sigma * (u.value(node) - u.value(g.node(s, k - 1))) / ht;
        for (nb, w) in row.entries(&g, s) {
            acc += w * u.value(g.node(nb, k));
        }
        values[node] = acc;
        defined[node] = true;
    }
    GridFunction::new(g, values)?.with_support(defined)
}

/// Multiplies `u` by `exp(-kappa t)`. Negative `kappa` undoes the map.
pub fn rescale_function(u: &GridFunction, kappa: f64) -> Result<GridFunction> {
    let g = *u.grid();
    let values = (0..g.n_nodes())
        .map(|node| {
            let (_, k) = g.split(node);
            (-kappa * g.time(k)).exp() * u.value(node)
        })
        .collect();
    let v = GridFunction::new(g, values)?;
    match u.support() {
        Some(s) => v.with_support(s.to_vec()),
        None => Ok(v),
    }
}

/// Exponential time rescaling: returns `L_kappa` (with `c` replaced by
/// `c + kappa sigma` and `kappa` reset to 0) and `v = exp(-kappa t) u`, so
/// that `L_kappa v = exp(-kappa t) L u`.
pub fn exp_rescale(
    op: &OperatorCoefficients,
    u: &GridFunction,
) -> Result<(OperatorCoefficients, GridFunction)> {
    let kappa = op.kappa;
    if !(kappa >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa must be nonnegative, got {kappa}"
        )));
    }
    if kappa == 0.0 {
        return Ok((op.clone(), u.clone()));
    }
    let g = *op.grid();
    let c = match (&op.c, &op.sigma) {
        (Field::Constant(c), Field::Constant(s)) => Field::Constant(c + kappa * s),
        _ => Field::Sampled(Arc::new(
            (0..g.n_nodes()).map(|i| op.c_eff_at(i)).collect(),
        )),
    };
    let rescaled = OperatorCoefficients {
        c,
        kappa: 0.0,
        label: format!("{} (rescaled, kappa = {kappa})", op.label),
        ..op.clone()
    };
    Ok((rescaled, rescale_function(u, kappa)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &GridFunction, b: &GridFunction) -> f64 {
        (0..a.grid().n_nodes())
            .filter(|&i| a.in_support(i))
            .map(|i| (a.value(i) - b.value(i)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn quadratic_is_differentiated_exactly() {
        for n in [1, 2] {
            let g = Cylinder::new(n, 1.0, 1.0, 9, 5).unwrap();
            let op = OperatorCoefficients::heat(&g).with_c(Field::Constant(1.0));
            let u = GridFunction::from_fn(&g, |x, t| {
                1.0 - x.iter().map(|v| v * v).sum::<f64>() - t
            })
            .unwrap();
            let lu = apply_operator(&op, &u).unwrap();
            let expected = GridFunction::from_fn(&g, |x, t| {
                -1.0 + 2.0 * n as f64 + 1.0 - x.iter().map(|v| v * v).sum::<f64>() - t
            })
            .unwrap();
            assert!(max_abs_diff(&lu, &expected) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn zero_maps_to_zero_and_boundary_is_undefined() {
        let g = Cylinder::new(2, 1.0, 1.0, 7, 4).unwrap();
        let op = OperatorCoefficients::heat(&g).with_part(DriftPart::new(
            "b",
            Field::Constant([3.0, -1.0]),
        ));
        let lu = apply_operator(&op, &GridFunction::zeros(&g)).unwrap();
        assert!(lu.values().iter().all(|&v| v == 0.0));
        assert_eq!(lu.get(g.node(0, 2)), None);
        assert_eq!(lu.get(g.node(g.origin().unwrap(), 0)), None);
        assert_eq!(lu.get(g.node(g.origin().unwrap(), 3)), Some(0.0));
    }

    #[test]
    fn mixed_derivative_cross_stencil_exact_on_xy() {
        let g = Cylinder::new(2, 1.0, 1.0, 9, 3).unwrap();
        let op = OperatorCoefficients::heat(&g)
            .with_sigma(Field::Constant(0.0))
            .with_a(Field::Constant(Sym2::new(1.0, 0.4, 2.0)));
        let u = GridFunction::from_fn(&g, |x, _| x[0] * x[1]).unwrap();
        for cfg in [StencilConfig::analysis(), StencilConfig::monotone()] {
            let lu = apply_operator_with(&op, &u, &cfg).unwrap();
            for node in 0..g.n_nodes() {
                if let Some(v) = lu.get(node) {
                    assert!((v + 0.8).abs() < 1e-12, "{v}");
                }
            }
        }
    }

    #[test]
    fn rescale_identity_and_cancellation() {
        let g = Cylinder::new(1, 1.0, 1.0, 5, 11).unwrap();
        let u = GridFunction::from_fn(&g, |_, t| t.exp()).unwrap();
        let op = OperatorCoefficients::heat(&g);
        let (same_op, same_u) = exp_rescale(&op, &u).unwrap();
        assert_eq!(same_u, u);
        assert_eq!(same_op.kappa, 0.0);
        let (_, v) = exp_rescale(&op.clone().with_kappa(1.0), &u).unwrap();
        for &x in v.values() {
            assert!((x - 1.0).abs() < 1e-15);
        }
        let neg = OperatorCoefficients::heat(&g)
            .with_c(Field::Constant(-1.0))
            .with_kappa(2.0);
        let (lk, _) = exp_rescale(&neg, &u).unwrap();
        assert_eq!(lk.c_at(3), 1.0);
        assert!(lk.validate().is_ok());
    }

    #[test]
    fn validation_catches_bad_fields() {
        let g = Cylinder::new(2, 1.0, 1.0, 5, 3).unwrap();
        let bad_a = OperatorCoefficients::heat(&g).with_a(Field::Constant(Sym2::new(1.0, 2.0, 1.0)));
        assert!(bad_a.validate().is_err());
        let bad_c = OperatorCoefficients::heat(&g).with_c(Field::Constant(-0.5));
        assert!(bad_c.validate().is_err());
        assert!(bad_c.with_kappa(0.5).validate().is_ok());
    }
}

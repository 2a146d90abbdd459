use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::OperatorCoefficients;
use crate::error::{Error, Result};
use crate::exponent::ExponentPair;
use crate::grid::{Cylinder, GridFunction, PositivitySet};
use crate::norm::{mixed_norm_detailed, MixedNormSpec, NormDetail, PointSingularity};

/// `base^e` for `base >= 0`, `e >= 0`, with `0^0 = 1`.
pub fn power_or_zero(base: f64, e: Ratio<i64>) -> f64 {
    if *e.numer() == 0 {
        return 1.0;
    }
    let base = base.max(0.0);
    if base == 0.0 {
        return 0.0;
    }
    base.powf(*e.numer() as f64 / *e.denom() as f64)
}

/// `sigma^(1/q) det(a)^(1/p) c^(1 - n/p - 1/q)` at one node, with `c`
/// replaced by `c + kappa sigma`. The drift weight is `|b|` divided by this.
pub fn natural_weight(op: &OperatorCoefficients, node: usize, e: &ExponentPair) -> f64 {
    let n = op.dim();
    let gamma = Ratio::from_integer(1) - e.scaling_sum(n);
    power_or_zero(op.sigma_at(node), e.q.reciprocal())
        * power_or_zero(op.a_at(node).det(n), e.p.reciprocal())
        * power_or_zero(op.c_eff_at(node), gamma)
}

/// Which drift enters the weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftComponent {
    Total,
    Part(usize),
}

/// Nodal drift weight. Nodes where the weight denominator vanishes under a
/// nonzero drift hold `+inf` and are listed in `infinite_nodes`.
#[derive(Debug, Clone)]
pub struct DriftWeight {
    pub values: Vec<f64>,
    pub infinite_nodes: Vec<usize>,
    pub exponents: ExponentPair,
    pub singularity: Option<PointSingularity>,
    grid: Cylinder,
}

impl DriftWeight {
    pub fn grid(&self) -> &Cylinder {
        &self.grid
    }

    pub fn has_infinite(&self) -> bool {
        !self.infinite_nodes.is_empty()
    }

    /// Finite part as a grid function; flagged nodes become 0.
    pub fn finite_part(&self) -> GridFunction {
        let v = self
            .values
            .iter()
            .map(|&x| if x.is_finite() { x } else { 0.0 })
            .collect();
        GridFunction::new(self.grid, v).expect("finite by construction")
    }

    /// `||h||_{p,q}` over `restriction` (whole grid if `None`). A flagged
    /// node inside the restriction makes the norm `+inf`.
    pub fn norm(&self, restriction: Option<&PositivitySet>) -> Result<NormDetail> {
        let flagged_inside = self
            .infinite_nodes
            .iter()
            .any(|&i| restriction.is_none_or(|r| r.contains(i)));
        if flagged_inside {
            return Ok(NormDetail::infinite());
        }
        let mut spec = MixedNormSpec::new(self.exponents);
        if let Some(r) = restriction {
            spec = spec.with_restriction(r.clone());
        }
        if let Some(s) = self.singularity {
            spec = spec.with_singularity(s);
        }
        mixed_norm_detailed(&self.finite_part(), &spec)
    }
}

/// `h = |b| / (sigma^(1/q) det(a)^(1/p) c^(1 - n/p - 1/q))` per node, for the
/// total drift or a single part, using `0^0 = 1` and `0/0 = 0`.
pub fn drift_weight(
    op: &OperatorCoefficients,
    e: &ExponentPair,
    component: DriftComponent,
) -> Result<DriftWeight> {
    let g = *op.grid();
    e.check_admissible(g.dim())?;
    if let DriftComponent::Part(k) = component {
        if k >= op.parts.len() {
            return Err(Error::InvalidParameter(format!(
                "drift part {k} requested, operator has {}",
                op.parts.len()
            )));
        }
    }
    let mut values = Vec::with_capacity(g.n_nodes());
    let mut infinite_nodes = Vec::new();
    for node in 0..g.n_nodes() {
        let b = match component {
            DriftComponent::Total => op.b_at(node),
            DriftComponent::Part(k) => op.part_at(k, node),
        };
        let nb = if g.dim() == 1 { b[0].abs() } else { b[0].hypot(b[1]) };
        let v = if nb == 0.0 {
            0.0
        } else {
            let w = natural_weight(op, node, e);
            if w > 0.0 {
                nb / w
            } else {
                infinite_nodes.push(node);
                f64::INFINITY
            }
        };
        values.push(v);
    }
    let singularity = match component {
        DriftComponent::Part(k) => op.parts[k].singularity,
        DriftComponent::Total => {
            let mut it = op.parts.iter().filter_map(|p| p.singularity);
            match (it.next(), it.next()) {
                (Some(s), None) => Some(s),
                _ => None,
            }
        }
    };
    Ok(DriftWeight {
        values,
        infinite_nodes,
        exponents: *e,
        singularity,
        grid: g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{DriftPart, Field, Sym2};

    fn pair(s: &str) -> ExponentPair {
        ExponentPair::parse(s).unwrap()
    }

    #[test]
    fn unit_coefficients_give_abs_b() {
        let g = Cylinder::new(2, 1.0, 1.0, 5, 3).unwrap();
        let op = OperatorCoefficients::heat(&g)
            .with_c(Field::Constant(1.0))
            .with_part(DriftPart::new("b", Field::Constant([3.0, 0.0])));
        for e in ["2,inf", "3,3", "inf,inf", "inf,1", "4,2"] {
            let h = drift_weight(&op, &pair(e), DriftComponent::Total).unwrap();
            assert!(h.values.iter().all(|&v| v == 3.0), "{e}");
            assert!(!h.has_infinite());
        }
    }

    #[test]
    fn zero_drift_is_zero_despite_degeneracy() {
        let g = Cylinder::new(1, 1.0, 1.0, 5, 3).unwrap();
        let op = OperatorCoefficients::heat(&g)
            .with_sigma(Field::Constant(0.0))
            .with_a(Field::Constant(Sym2::scalar(0.0)));
        let h = drift_weight(&op, &pair("2,2"), DriftComponent::Total).unwrap();
        assert!(h.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vanishing_denominator_is_flagged() {
        let g = Cylinder::new(1, 1.0, 1.0, 5, 3).unwrap();
        let op = OperatorCoefficients::heat(&g)
            .with_part(DriftPart::new("b", Field::Constant([1.0, 0.0])));
        // c = 0 with 1 - n/p - 1/q = 1/2 > 0.
        let h = drift_weight(&op, &pair("4,4"), DriftComponent::Total).unwrap();
        assert_eq!(h.infinite_nodes.len(), g.n_nodes());
        assert!(h.norm(None).unwrap().value.is_infinite());
        // Critical pair: the c factor is c^0 = 1.
        let h = drift_weight(&op, &pair("2,2"), DriftComponent::Total).unwrap();
        assert!(h.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn inadmissible_pair_is_rejected() {
        let g = Cylinder::new(2, 1.0, 1.0, 5, 3).unwrap();
        let op = OperatorCoefficients::heat(&g);
        assert!(drift_weight(&op, &pair("2,1"), DriftComponent::Total).is_err());
        assert!(drift_weight(&op, &pair("inf,inf"), DriftComponent::Part(0)).is_err());
    }
}

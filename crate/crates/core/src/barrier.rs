//! Radial Monge-Ampere barriers and their verification on the grid.
//!
//! A radial convex `v` with `det(D^2 v) = (2/n)^n f^n (1 + |Dv|^2)^(n/2)`
//! satisfies `a_ij D_i D_j v >= 2 det(a)^(1/n) f (1 + |Dv|^2)^(1/2)`, so
//! `B = -v` obeys `L B >= |b|` wherever `f >= |b| / det(a)^(1/n)`.
//!
//! For radial `v`, `det(D^2 v) = v'' (v'/r)^(n-1)`; with `psi = (v')^n` the
//! equation becomes the first-order ODE
//! `psi' = n r^(n-1) (2/n)^n f^n (1 + psi^(2/n))^(n/2)`, `psi(0) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{Exponent, ExponentPair};
use crate::grid::{parabolic_boundary, Cylinder, GridFunction};
use crate::operator::{
    apply_operator_with, drift_weight, DriftComponent, OperatorCoefficients, StencilConfig,
};
use crate::solver::{solve_barrier_problem, SchemeConfig};

/// Default relative margin of the radial majorant.
pub const MAJORANT_MARGIN: f64 = 0.01;

/// Default outer radius extension, relative to `R`.
pub const EPS_EXTENSION: f64 = 0.1;

/// Radial source `f(r) >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialSource {
    Constant { value: f64 },
    /// Samples at `r_j = j dr`, linearly interpolated, zero beyond the last.
    Samples { dr: f64, values: Vec<f64> },
}

impl RadialSource {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialSource::Constant { value } => *value,
            RadialSource::Samples { dr, values } => {
                let x = r / dr;
                let j = x.floor() as usize;
                if j + 1 >= values.len() {
                    return if j + 1 == values.len() { values[j] } else { 0.0 };
                }
                let t = x - j as f64;
                (1.0 - t) * values[j] + t * values[j + 1]
            }
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |r: f64, value: f64| Err(Error::NegativeSource { r, value });
        match self {
            RadialSource::Constant { value } if !(*value >= 0.0) => bad(0.0, *value),
            RadialSource::Samples { dr, values } => {
                for (j, &v) in values.iter().enumerate() {
                    if !(v >= 0.0) {
                        return bad(j as f64 * dr, v);
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Sampled radial profile on `[0, r_outer]`: `v <= 0`, `v' >= 0`, `v(r_outer) = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialBarrier {
    pub n: usize,
    pub r_outer: f64,
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
    pub source: Vec<f64>,
}

impl RadialBarrier {
    /// `||B|| = |v(0)|`.
    pub fn norm(&self) -> f64 {
        -self.v[0]
    }

    /// `max |v'|`, attained at `r_outer`.
    pub fn max_slope(&self) -> f64 {
        self.dv.iter().cloned().fold(0.0, f64::max)
    }

    /// `v'` nondecreasing up to `tol`.
    pub fn is_convex(&self, tol: f64) -> bool {
        self.dv.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    /// `B(r) = -v(r)` by cubic Hermite interpolation; zero for `r >= r_outer`.
    pub fn barrier_at(&self, r: f64) -> f64 {
        let m = self.r.len() - 1;
        if r >= self.r_outer {
            return 0.0;
        }
        let dr = self.r_outer / m as f64;
        let j = ((r / dr).floor() as usize).min(m - 1);
        let t = (r - self.r[j]) / dr;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t),
            t * (1.0 - t) * (1.0 - t),
            t * t * (3.0 - 2.0 * t),
            t * t * (t - 1.0),
        );
        let v = h00 * self.v[j] + h10 * dr * self.dv[j] + h01 * self.v[j + 1] + h11 * dr * self.dv[j + 1];
        -v
    }

    /// `B(x, t) = -v(|x|)` on the grid.
    pub fn sample(&self, grid: &Cylinder) -> Result<GridFunction> {
        if grid.dim() != self.n {
            return Err(Error::GridMismatch(format!(
                "barrier in dimension {}, grid in dimension {}",
                self.n,
                grid.dim()
            )));
        }
        GridFunction::from_fn(grid, |x, _| {
            self.barrier_at(x.iter().map(|v| v * v).sum::<f64>().sqrt())
        })
    }
}

/// Integrates the radial equation outward with classical Runge-Kutta on
/// `steps` uniform steps, then `v(r) = -int_r^{r_outer} psi^(1/n)` by the
/// trapezoid rule.
pub fn solve_radial_monge_ampere(
    source: &RadialSource,
    n: usize,
    r_outer: f64,
    steps: usize,
) -> Result<RadialBarrier> {
    if n != 1 && n != 2 {
        return Err(Error::InvalidParameter(format!("dimension {n} not supported")));
    }
    if !(r_outer > 0.0) || steps < 2 {
        return Err(Error::InvalidParameter(format!(
            "need r_outer > 0 and at least 2 steps, got {r_outer} and {steps}"
        )));
    }
    source.check()?;
    let nf = n as f64;
    let c = nf * (2.0 / nf).powi(n as i32);
    let rhs = |r: f64, psi: f64| -> f64 {
        let f = source.eval(r);
        if f == 0.0 {
            return 0.0;
        }
        let psi = psi.max(0.0);
        let growth = if n == 1 {
            (1.0 + psi * psi).sqrt()
        } else {
            1.0 + psi
        };
        c * r.powi(n as i32 - 1) * f.powi(n as i32) * growth
    };
    let dr = r_outer / steps as f64;
    let r: Vec<f64> = (0..=steps).map(|j| j as f64 * dr).collect();
    let mut psi = vec![0.0; steps + 1];
    for j in 0..steps {
        let (x, y) = (r[j], psi[j]);
        let k1 = rhs(x, y);
        let k2 = rhs(x + 0.5 * dr, y + 0.5 * dr * k1);
        let k3 = rhs(x + 0.5 * dr, y + 0.5 * dr * k2);
        let k4 = rhs(x + dr, y + dr * k3);
        let next = y + dr / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() {
            return Err(Error::StepCollapse { r: r[j + 1] });
        }
        psi[j + 1] = next;
    }
    let dv: Vec<f64> = psi.iter().map(|&p| p.max(0.0).powf(1.0 / nf)).collect();
    let mut v = vec![0.0; steps + 1];
    for j in (0..steps).rev() {
        v[j] = v[j + 1] - 0.5 * dr * (dv[j] + dv[j + 1]);
    }
    Ok(RadialBarrier {
        n,
        r_outer,
        source: r.iter().map(|&x| source.eval(x)).collect(),
        r,
        v,
        dv,
    })
}

/// Radial majorant of a nonnegative grid function: at each radius the
/// maximum over nodes within one mesh width (and over time), times
/// `1 + margin`. Zero beyond `R + hx`.
pub fn radial_majorant(h: &GridFunction, r_outer: f64, steps: usize, margin: f64) -> Result<RadialSource> {
    let g = *h.grid();
    let ns = g.n_space();
    let mut sup_t = vec![0.0f64; ns];
    for node in 0..g.n_nodes() {
        let (s, _) = g.split(node);
        let v = h.value(node);
        if !v.is_finite() {
            return Err(Error::NonFinite { node, value: v });
        }
        sup_t[s] = sup_t[s].max(v);
    }
    let dr = r_outer / steps as f64;
    let window = g.hx() + dr;
    let limit = g.radius() + g.hx();
    let radii: Vec<f64> = (0..ns).map(|s| g.abs_x(s)).collect();
    let values = (0..=steps)
        .map(|j| {
            let rj = j as f64 * dr;
            if rj > limit {
                return 0.0;
            }
            let m = (0..ns)
                .filter(|&s| (radii[s] - rj).abs() <= window)
                .map(|s| sup_t[s])
                .fold(0.0, f64::max);
            (1.0 + margin) * m
        })
        .collect();
    Ok(RadialSource::Samples { dr, values })
}

/// Which inequality a barrier must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierTarget {
    /// `L A >= Sp(a)`.
    TraceA,
    /// `L B >= |b|`.
    AbsDrift,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierVerdict {
    pub target: BarrierTarget,
    /// `min (L B - target)` over interior and final-slice nodes.
    pub min_margin: f64,
    pub worst_node: Option<usize>,
    pub tolerance: f64,
    pub passed: bool,
}

/// `|b|`, or the magnitude of the drift with part `exclude` removed.
pub fn drift_magnitude(op: &OperatorCoefficients, exclude: Option<usize>) -> Result<GridFunction> {
    let g = *op.grid();
    let values = (0..g.n_nodes())
        .map(|node| {
            let mut b = op.b_at(node);
            if let Some(k) = exclude {
                let p = op.part_at(k, node);
                b[0] -= p[0];
                b[1] -= p[1];
            }
            if g.dim() == 1 {
                b[0].abs()
            } else {
                b[0].hypot(b[1])
            }
        })
        .collect();
    GridFunction::new(g, values)
}

/// Checks `L B >= target - 10 (hx + ht)` at interior and final-slice nodes.
pub fn verify_barrier_inequality(
    op: &OperatorCoefficients,
    b: &GridFunction,
    target: BarrierTarget,
    stencil: &StencilConfig,
) -> Result<BarrierVerdict> {
    let g = *op.grid();
    let lb = apply_operator_with(op, b, stencil)?;
    let abs_b = drift_magnitude(op, None)?;
    let mask = parabolic_boundary(&g);
    let mut min_margin = f64::INFINITY;
    let mut worst_node = None;
    for node in mask.evaluation_nodes() {
        let t = match target {
            BarrierTarget::TraceA => op.a_at(node).trace(g.dim()),
            BarrierTarget::AbsDrift => abs_b.value(node),
        };
        let m = lb.value(node) - t;
        if m < min_margin {
            min_margin = m;
            worst_node = Some(node);
        }
    }
    let tolerance = 10.0 * (g.hx() + g.ht());
    Ok(BarrierVerdict {
        target,
        min_margin,
        worst_node,
        tolerance,
        passed: min_margin >= -tolerance,
    })
}

/// `B_1 + B_tail (1 + max |v'|)` sampled on the tail's grid.
pub fn compose_barriers(b1: &RadialBarrier, tail: &GridFunction) -> Result<GridFunction> {
    let g = *tail.grid();
    if b1.r_outer < g.radius() {
        return Err(Error::RadiusMismatch(format!(
            "radial barrier covers r <= {}, the grid needs {}",
            b1.r_outer,
            g.radius()
        )));
    }
    let floor = -1e-10 * tail.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if let Some(node) = (0..g.n_nodes()).find(|&i| tail.value(i) < floor) {
        return Err(Error::InvalidParameter(format!(
            "tail barrier is negative ({}) at node {node}",
            tail.value(node)
        )));
    }
    let factor = 1.0 + b1.max_slope();
    b1.sample(&g)?.axpby(1.0, tail, factor)
}

/// A composite barrier for a drift whose part `singular` has finite
/// `||h||_{n,inf}` and whose other parts are bounded.
#[derive(Debug, Clone)]
pub struct CompositeBarrier {
    pub radial: RadialBarrier,
    pub tail: GridFunction,
    pub combined: GridFunction,
    pub verdict: BarrierVerdict,
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierOptions {
    pub margin: f64,
    pub extension: f64,
    pub ode_steps: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            margin: MAJORANT_MARGIN,
            extension: EPS_EXTENSION,
            ode_steps: 4000,
        }
    }
}

/// Builds `B = B_1 + B_tail (1 + max |v'|)`: `B_1` is the radial barrier for
/// the majorant of `h_singular` with exponents `(n, inf)`, `B_tail` solves
/// `L B_tail = |b - b_singular|`. Verifies `L B >= |b|` with the solver
/// stencil.
pub fn build_composite_barrier(
    op: &OperatorCoefficients,
    singular: usize,
    cfg: &SchemeConfig,
    opts: &BarrierOptions,
) -> Result<CompositeBarrier> {
    let g = *op.grid();
    let e = ExponentPair::new(Exponent::integer(g.dim() as i64)?, Exponent::Infinite);
    let h = drift_weight(op, &e, DriftComponent::Part(singular))?;
    if h.has_infinite() {
        return Err(Error::InvalidParameter(
            "the singular part's weight is infinite somewhere; det(a) must be positive".into(),
        ));
    }
    let r_outer = g.radius() * (1.0 + opts.extension);
    let f = radial_majorant(&h.finite_part(), r_outer, opts.ode_steps, opts.margin)?;
    let radial = solve_radial_monge_ampere(&f, g.dim(), r_outer, opts.ode_steps)?;
    let rest = drift_magnitude(op, Some(singular))?;
    let tail = solve_barrier_problem(op, &rest, cfg)?.u;
    let combined = compose_barriers(&radial, &tail)?;
    let verdict = verify_barrier_inequality(op, &combined, BarrierTarget::AbsDrift, &cfg.stencil())?;
    Ok(CompositeBarrier {
        radial,
        tail,
        combined,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Field;

    #[test]
    fn zero_source_gives_zero_barrier() {
        let b = solve_radial_monge_ampere(&RadialSource::Constant { value: 0.0 }, 2, 1.1, 100).unwrap();
        assert!(b.v.iter().all(|&v| v == 0.0));
        assert_eq!(b.norm(), 0.0);
    }

    #[test]
    fn two_dimensional_constant_source_closed_form() {
        // psi = exp(f^2 r^2) - 1.
        let f0 = 1.3;
        let b = solve_radial_monge_ampere(&RadialSource::Constant { value: f0 }, 2, 1.0, 2000).unwrap();
        for (r, dv) in b.r.iter().zip(&b.dv) {
            let exact = ((f0 * f0 * r * r).exp() - 1.0).sqrt();
            assert!((dv - exact).abs() <= 1e-8 * exact.max(1.0));
        }
        assert!(b.is_convex(1e-10));
    }

    #[test]
    fn negative_source_is_rejected() {
        let err = solve_radial_monge_ampere(&RadialSource::Constant { value: -1.0 }, 1, 1.0, 10);
        assert!(matches!(err, Err(Error::NegativeSource { .. })));
    }

    #[test]
    fn quadratic_barrier_meets_trace() {
        let g = Cylinder::new(2, 1.0, 1.0, 11, 5).unwrap();
        let op = OperatorCoefficients::heat(&g).with_c(Field::Constant(0.5));
        let a = GridFunction::from_fn(&g, |x, _| 0.5 * (1.0 - x[0] * x[0] - x[1] * x[1])).unwrap();
        let v = verify_barrier_inequality(&op, &a, BarrierTarget::TraceA, &StencilConfig::analysis()).unwrap();
        assert!(v.passed);
    }

    #[test]
    fn composition_trivial_cases() {
        let g = Cylinder::new(1, 1.0, 1.0, 11, 3).unwrap();
        let zero = solve_radial_monge_ampere(&RadialSource::Constant { value: 0.0 }, 1, 1.1, 100).unwrap();
        let tail = GridFunction::constant(&g, 2.0).unwrap();
        assert_eq!(compose_barriers(&zero, &tail).unwrap(), tail);
        let short = solve_radial_monge_ampere(&RadialSource::Constant { value: 1.0 }, 1, 0.5, 100).unwrap();
        assert!(matches!(
            compose_barriers(&short, &tail),
            Err(Error::RadiusMismatch(_))
        ));
    }
}

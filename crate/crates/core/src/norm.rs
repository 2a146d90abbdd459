//! Weighted mixed Lebesgue norms on the cylinder grid.
//!
//! `L_p^x L_q^t` integrates in time first and `L_q^t L_p^x` in space first.
//! Every integral is the trapezoid rule on nodal values; an infinite exponent
//! is a maximum over nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{Exponent, ExponentPair};
use crate::grid::{Cylinder, GridFunction, PositivitySet};
use crate::special::lattice_zeta;

/// Largest grid accepted by [`mixed_norm_oracle`].
pub const ORACLE_NODE_LIMIT: usize = 100_000;

/// Integration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormOrder {
    /// `L_p^x L_q^t`: time inside.
    SpaceOuter,
    /// `L_q^t L_p^x`: space inside.
    TimeOuter,
    /// The stronger of the two: space outer when `p <= q`.
    #[default]
    Auto,
}

impl NormOrder {
    pub fn resolve(self, e: &ExponentPair) -> NormOrder {
        match self {
            NormOrder::Auto if e.p <= e.q => NormOrder::SpaceOuter,
            NormOrder::Auto => NormOrder::TimeOuter,
            o => o,
        }
    }
}

/// A known point singularity `|f(x, t)| ~ g(t) |x - x0|^-order` of the
/// integrand, with `x0` a grid node.
///
/// The trapezoid rule on such an integrand converges only like
/// `h^(n - p order)`. With this hint the spatial sums are corrected by the
/// lattice-zeta term of the generalized Euler-Maclaurin expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSingularity {
    pub center: [f64; 2],
    pub order: f64,
}

impl PointSingularity {
    pub fn at_origin(order: f64) -> Self {
        PointSingularity {
            center: [0.0, 0.0],
            order,
        }
    }

    /// Spatial node at `center`, if the lattice contains it.
    fn node(&self, grid: &Cylinder) -> Option<usize> {
        let tol = 1e-9 * grid.hx();
        (0..grid.n_space()).find(|&s| {
            let x = grid.point(s);
            (x[0] - self.center[0]).abs() < tol && (x[1] - self.center[1]).abs() < tol
        })
    }
}

#[derive(Debug, Clone)]
pub struct MixedNormSpec {
    pub exponents: ExponentPair,
    pub order: NormOrder,
    pub weight: Option<GridFunction>,
    pub restriction: Option<PositivitySet>,
    pub singularity: Option<PointSingularity>,
}

impl MixedNormSpec {
    pub fn new(exponents: ExponentPair) -> Self {
        MixedNormSpec {
            exponents,
            order: NormOrder::Auto,
            weight: None,
            restriction: None,
            singularity: None,
        }
    }

    pub fn with_order(mut self, order: NormOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_weight(mut self, w: GridFunction) -> Self {
        self.weight = Some(w);
        self
    }

    pub fn with_restriction(mut self, set: PositivitySet) -> Self {
        self.restriction = Some(set);
        self
    }

    pub fn with_singularity(mut self, s: PointSingularity) -> Self {
        self.singularity = Some(s);
        self
    }
}

/// A norm value with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormDetail {
    pub value: f64,
    pub order: NormOrder,
    /// Plain trapezoid value, before any singularity correction.
    pub trapezoid: f64,
    /// The singularity correction was applied.
    pub corrected: bool,
    /// The integrand is not integrable at the declared singularity, or a
    /// node carried an infinite value.
    pub divergent: bool,
}

impl NormDetail {
    pub fn infinite() -> Self {
        NormDetail {
            value: f64::INFINITY,
            order: NormOrder::Auto,
            trapezoid: f64::INFINITY,
            corrected: false,
            divergent: true,
        }
    }
}

/// `|w u|` with zero extension outside the restriction and the support.
fn integrand(u: &GridFunction, spec: &MixedNormSpec) -> Result<Vec<f64>> {
    let g = u.grid();
    if let Some(w) = &spec.weight {
        g.check_same(w.grid(), "weight")?;
    }
    if let Some(r) = &spec.restriction {
        g.check_same(r.grid(), "restriction")?;
    }
    let mut out = Vec::with_capacity(g.n_nodes());
    for node in 0..g.n_nodes() {
        let inside = spec.restriction.as_ref().is_none_or(|r| r.contains(node));
        if !inside {
            out.push(0.0);
            continue;
        }
        let w = match &spec.weight {
            Some(w) => {
                let v = w.value(node);
                if !(v > 0.0) {
                    return Err(Error::NonpositiveWeight { node, value: v });
                }
                v
            }
            None => 1.0,
        };
        out.push((w * u.value(node)).abs());
    }
    Ok(out)
}

/// `(sum_i w_i |v_i|^p)^(1/p)` or `max |v_i|`.
struct Lp {
    p: Exponent,
    pf: f64,
}

impl Lp {
    fn new(p: Exponent) -> Self {
        Lp { p, pf: p.to_f64() }
    }

    #[inline]
    fn pow(&self, v: f64) -> f64 {
        if v == 0.0 {
            0.0
        } else {
            v.powf(self.pf)
        }
    }

    #[inline]
    fn root(&self, s: f64) -> f64 {
        s.max(0.0).powf(1.0 / self.pf)
    }

    /// `(sum w |v|^p)^(1/p)` for `v >= 0`, scaled by its own maximum so
    /// large `p` does not underflow.
    fn norm(&self, wv: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
        let m = wv.clone().map(|(_, v)| v).fold(0.0, f64::max);
        if self.p.is_infinite() || m == 0.0 {
            return m;
        }
        m * self.root(wv.map(|(w, v)| w * self.pow(v / m)).sum())
    }
}

/// Zeta correction for a spatial sum whose integrand `G(x) ~ g0 |x - x0|^-s`.
struct SpatialCorrection {
    node: usize,
    neighbours: Vec<usize>,
    s: f64,
    coefficient: f64,
}

impl SpatialCorrection {
    /// `None` when the plain rule is to be used; `Err(())` when the integrand
    /// is not integrable.
    fn build(
        grid: &Cylinder,
        sing: &PointSingularity,
        p: &Exponent,
        spec: &MixedNormSpec,
    ) -> std::result::Result<Option<Self>, ()> {
        if !(sing.order >= 0.0) {
            return Ok(None);
        }
        let node = match sing.node(grid) {
            Some(s) if !grid.is_lateral(s) => s,
            _ => return Ok(None),
        };
        if p.is_infinite() {
            return Err(());
        }
        let n = grid.dim();
        let s = p.to_f64() * sing.order;
        if s >= n as f64 {
            return Err(());
        }
        let mut neighbours = Vec::new();
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)].into_iter().take(2 * n) {
            match grid.shift(node, di, dj) {
                Some(nb) if !grid.is_lateral(nb) => neighbours.push(nb),
                _ => return Ok(None),
            }
        }
        if let Some(r) = &spec.restriction {
            for k in 0..grid.nt() {
                let inside = r.contains(grid.node(node, k));
                if neighbours.iter().any(|&nb| r.contains(grid.node(nb, k)) != inside) {
                    return Ok(None);
                }
            }
        }
        let h = grid.hx();
        let coefficient = lattice_zeta(n, s) * h.powf(n as f64 - s);
        Ok(Some(SpatialCorrection {
            node,
            neighbours,
            s,
            coefficient,
        }))
    }

    /// Corrected `sum_x w_x G(x)` given the spatial values `g`.
    fn apply(&self, grid: &Cylinder, g: &[f64], plain: f64) -> f64 {
        let h = grid.hx();
        let g0 = self.neighbours.iter().map(|&nb| g[nb]).sum::<f64>()
            / self.neighbours.len() as f64
            * h.powf(self.s);
        let without_center = plain - grid.space_weight(self.node) * g[self.node];
        (without_center - self.coefficient * g0).max(0.0)
    }
}

/// Mixed norm `||u||_{p,q}` under `spec`, by the trapezoid rule.
pub fn mixed_norm(u: &GridFunction, spec: &MixedNormSpec) -> Result<f64> {
    Ok(mixed_norm_detailed(u, spec)?.value)
}

/// [`mixed_norm`] with the resolved order and singularity bookkeeping.
pub fn mixed_norm_detailed(u: &GridFunction, spec: &MixedNormSpec) -> Result<NormDetail> {
    let g = *u.grid();
    let order = spec.order.resolve(&spec.exponents);
    let mut v = integrand(u, spec)?;
    let scale = v.iter().cloned().fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(NormDetail {
            value: 0.0,
            order,
            trapezoid: 0.0,
            corrected: false,
            divergent: false,
        });
    }
    v.iter_mut().for_each(|x| *x /= scale);

    let (lp, lq) = (Lp::new(spec.exponents.p), Lp::new(spec.exponents.q));
    let correction = match &spec.singularity {
        None => Ok(None),
        Some(s) => SpatialCorrection::build(&g, s, &spec.exponents.p, spec),
    };
    let divergent = correction.is_err();
    let correction = correction.ok().flatten();
    let (ns, nt) = (g.n_space(), g.nt());

    let (plain, corrected) = match order {
        NormOrder::SpaceOuter => {
            // inner[s] = ||v(s, .)||_q
            let inner: Vec<f64> = (0..ns)
                .map(|s| lq.norm((0..nt).map(|k| (g.time_weight(k), v[g.node(s, k)]))))
                .collect();
            if lp.p.is_infinite() {
                (lp.norm(inner.iter().map(|&x| (1.0, x))), None)
            } else {
                let m = inner.iter().cloned().fold(0.0, f64::max);
                let gp: Vec<f64> = inner.iter().map(|&x| lp.pow(x / m)).collect();
                let sum: f64 = (0..ns).map(|s| g.space_weight(s) * gp[s]).sum();
                let corr = correction.as_ref().map(|c| m * lp.root(c.apply(&g, &gp, sum)));
                (m * lp.root(sum), corr)
            }
        }
        _ => {
            let mut gp = vec![0.0; ns];
            let mut plain_levels = Vec::with_capacity(nt);
            let mut corr_levels = Vec::with_capacity(nt);
            for k in 0..nt {
                let m = (0..ns).map(|s| v[g.node(s, k)]).fold(0.0, f64::max);
                if lp.p.is_infinite() || m == 0.0 {
                    plain_levels.push(m);
                    corr_levels.push(m);
                    continue;
                }
                for s in 0..ns {
                    gp[s] = lp.pow(v[g.node(s, k)] / m);
                }
                let sum: f64 = (0..ns).map(|s| g.space_weight(s) * gp[s]).sum();
                plain_levels.push(m * lp.root(sum));
                if let Some(c) = &correction {
                    corr_levels.push(m * lp.root(c.apply(&g, &gp, sum)));
                }
            }
            let outer = |levels: &[f64]| lq.norm((0..nt).map(|k| (g.time_weight(k), levels[k])));
            let corr = correction.as_ref().map(|_| outer(&corr_levels));
            (outer(&plain_levels), corr)
        }
    };
    Ok(NormDetail {
        value: scale * corrected.unwrap_or(plain),
        order,
        trapezoid: scale * plain,
        corrected: corrected.is_some(),
        divergent,
    })
}

/// Brute-force evaluation of the plain trapezoid mixed norm straight from
/// the iterated-integral definition. Ignores any singularity hint.
pub fn mixed_norm_oracle(u: &GridFunction, spec: &MixedNormSpec) -> Result<f64> {
    let g = *u.grid();
    if g.n_nodes() > ORACLE_NODE_LIMIT {
        return Err(Error::OracleTooLarge {
            nodes: g.n_nodes(),
            limit: ORACLE_NODE_LIMIT,
        });
    }
    let order = spec.order.resolve(&spec.exponents);
    let v = integrand(u, spec)?;
    let scale = v.iter().cloned().fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let p = spec.exponents.p.to_f64();
    let q = spec.exponents.q.to_f64();
    let (m, nt) = (g.nx(), g.nt());
    let my = if g.dim() == 2 { m } else { 1 };
    let hx = 2.0 * g.radius() / (m - 1) as f64;
    let ht = g.final_time() / (nt - 1) as f64;
    let wx = |i: usize| if i == 0 || i == m - 1 { hx / 2.0 } else { hx };
    let wy = |j: usize| {
        if g.dim() == 1 {
            1.0
        } else if j == 0 || j == m - 1 {
            hx / 2.0
        } else {
            hx
        }
    };
    let wt = |k: usize| if k == 0 || k == nt - 1 { ht / 2.0 } else { ht };
    let val = |i: usize, j: usize, k: usize| v[(k * my + j) * m + i] / scale;

    // Power mean of (weight, value) pairs, each sum scaled by its own max.
    let power_mean = |pairs: &[(f64, f64)], r: f64| -> f64 {
        let top = pairs.iter().map(|&(_, x)| x).fold(0.0, f64::max);
        if r.is_infinite() || top == 0.0 {
            return top;
        }
        let mut acc = 0.0;
        for &(w, x) in pairs {
            if x != 0.0 {
                acc += w * (x / top).powf(r);
            }
        }
        top * acc.powf(1.0 / r)
    };

    let result = if order == NormOrder::SpaceOuter {
        let mut outer = Vec::with_capacity(m * my);
        for j in 0..my {
            for i in 0..m {
                let inner: Vec<(f64, f64)> = (0..nt).map(|k| (wt(k), val(i, j, k))).collect();
                outer.push((wx(i) * wy(j), power_mean(&inner, q)));
            }
        }
        power_mean(&outer, p)
    } else {
        let mut outer = Vec::with_capacity(nt);
        for k in 0..nt {
            let mut inner = Vec::with_capacity(m * my);
            for j in 0..my {
                for i in 0..m {
                    inner.push((wx(i) * wy(j), val(i, j, k)));
                }
            }
            outer.push((wt(k), power_mean(&inner, p)));
        }
        power_mean(&outer, q)
    };
    Ok(scale * result)
}

/// Both iterated norms of `u` for finite `p < q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCheck {
    /// `||u||_{L_p^x L_q^t}`, the stronger norm.
    pub space_outer: f64,
    /// `||u||_{L_q^t L_p^x}`.
    pub time_outer: f64,
    /// `time_outer <= space_outer` up to roundoff.
    pub ordered: bool,
}

pub fn embedding_check(u: &GridFunction, p: Exponent, q: Exponent) -> Result<EmbeddingCheck> {
    if p.is_infinite() || q.is_infinite() || p >= q {
        return Err(Error::EmbeddingOrder {
            p: p.to_string(),
            q: q.to_string(),
        });
    }
    let e = ExponentPair::new(p, q);
    let space_outer = mixed_norm(u, &MixedNormSpec::new(e).with_order(NormOrder::SpaceOuter))?;
    let time_outer = mixed_norm(u, &MixedNormSpec::new(e).with_order(NormOrder::TimeOuter))?;
    Ok(EmbeddingCheck {
        space_outer,
        time_outer,
        ordered: time_outer <= space_outer * (1.0 + 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(s: &str) -> ExponentPair {
        ExponentPair::parse(s).unwrap()
    }

    #[test]
    fn constant_on_interval() {
        let g = Cylinder::new(1, 1.0, 1.0, 21, 11).unwrap();
        let u = GridFunction::constant(&g, 1.0).unwrap();
        let v = mixed_norm(&u, &MixedNormSpec::new(pair("2,inf"))).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-14);
        let empty = MixedNormSpec::new(pair("2,inf")).with_restriction(PositivitySet::empty(&g));
        assert_eq!(mixed_norm(&u, &empty).unwrap(), 0.0);
    }

    #[test]
    fn separable_slab() {
        // x t on [0,1] x [0,1]: restrict to x >= 0.
        let g = Cylinder::new(1, 1.0, 1.0, 801, 801).unwrap();
        let u = GridFunction::from_fn(&g, |x, t| x[0] * t).unwrap();
        let half = PositivitySet::from_membership(
            &g,
            (0..g.n_nodes()).map(|i| g.point(g.split(i).0)[0] >= 0.0).collect(),
        )
        .unwrap();
        let spec = MixedNormSpec::new(pair("2,4")).with_restriction(half);
        let v = mixed_norm(&u, &spec).unwrap();
        let exact = 3f64.powf(-0.5) * 5f64.powf(-0.25);
        assert!((v - exact).abs() < 1e-5, "{v} vs {exact}");
    }

    #[test]
    fn corrected_singular_integral_1d() {
        // |x|^-1/2 on [-1, 1] in L_1: exact 4.
        let g = Cylinder::new(1, 1.0, 1.0, 81, 2).unwrap();
        let u = GridFunction::from_fn(&g, |x, _| {
            let r = x[0].abs();
            if r == 0.0 { 0.0 } else { r.powf(-0.5) }
        })
        .unwrap();
        let e = pair("1,inf");
        let plain = mixed_norm(&u, &MixedNormSpec::new(e)).unwrap();
        let d = mixed_norm_detailed(
            &u,
            &MixedNormSpec::new(e).with_singularity(PointSingularity::at_origin(0.5)),
        )
        .unwrap();
        assert!(d.corrected && !d.divergent);
        assert!((plain - 4.0).abs() > 0.1);
        assert!((d.value - 4.0).abs() < 1e-3, "{}", d.value);
    }

    #[test]
    fn non_integrable_singularity_is_flagged() {
        let g = Cylinder::new(2, 1.0, 1.0, 21, 2).unwrap();
        let u = GridFunction::constant(&g, 1.0).unwrap();
        let d = mixed_norm_detailed(
            &u,
            &MixedNormSpec::new(pair("2,inf")).with_singularity(PointSingularity::at_origin(1.0)),
        )
        .unwrap();
        assert!(d.divergent && !d.corrected);
        assert_eq!(d.value, d.trapezoid);
    }

    #[test]
    fn weight_must_be_positive() {
        let g = Cylinder::new(1, 1.0, 1.0, 5, 3).unwrap();
        let u = GridFunction::constant(&g, 1.0).unwrap();
        let w = GridFunction::constant(&g, 0.0).unwrap();
        let spec = MixedNormSpec::new(pair("2,2")).with_weight(w);
        assert!(matches!(
            mixed_norm(&u, &spec),
            Err(Error::NonpositiveWeight { .. })
        ));
    }

    #[test]
    fn embedding_requires_p_below_q() {
        let g = Cylinder::new(1, 1.0, 1.0, 5, 3).unwrap();
        let u = GridFunction::constant(&g, 2.0).unwrap();
        let e = |s: &str| s.parse::<Exponent>().unwrap();
        let c = embedding_check(&u, e("2"), e("6")).unwrap();
        assert!(c.ordered);
        assert!((c.space_outer - c.time_outer).abs() < 1e-12 * c.space_outer);
        assert!(embedding_check(&u, e("3"), e("2")).is_err());
        assert!(embedding_check(&u, e("2"), e("inf")).is_err());
    }
}

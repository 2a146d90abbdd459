use serde::{Deserialize, Serialize};

use super::Sym2;
use crate::grid::Cylinder;

/// Difference scheme for the drift term `b_i D_i u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriftScheme {
    /// Second-order central differences.
    Central,
    /// First-order one-sided differences chosen by the sign of `b_i`.
    #[default]
    Upwind,
}

/// Difference scheme for the mixed derivative `a_12 D_1 D_2 u` (2D only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MixedScheme {
    /// Four-point cross stencil on the diagonal neighbours.
    Cross,
    /// Seven-point positive splitting when `|a_12| <= min(a_11, a_22)`,
    /// cross stencil otherwise.
    #[default]
    PositiveSplitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StencilConfig {
    pub drift: DriftScheme,
    pub mixed: MixedScheme,
}

impl StencilConfig {
    /// Central drift and cross stencil: second-order consistent.
    pub fn analysis() -> Self {
        StencilConfig {
            drift: DriftScheme::Central,
            mixed: MixedScheme::Cross,
        }
    }

    /// Upwind drift and positive splitting: monotone where possible.
    pub fn monotone() -> Self {
        StencilConfig {
            drift: DriftScheme::Upwind,
            mixed: MixedScheme::PositiveSplitting,
        }
    }
}

impl Default for StencilConfig {
    fn default() -> Self {
        StencilConfig::monotone()
    }
}

/// Coefficients sampled at one node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeCoefficients {
    pub sigma: f64,
    pub a: Sym2,
    pub b: [f64; 2],
    pub c: f64,
}

/// Weights of the spatial part `-a:D^2 + b.D + c` on the 3x3 neighbourhood,
/// indexed by `(di + 1) + 3 (dj + 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Row {
    pub w: [f64; 9],
}

impl Row {
    pub const CENTER: usize = 4;

    #[inline]
    fn add(&mut self, di: isize, dj: isize, v: f64) {
        self.w[((di + 1) + 3 * (dj + 1)) as usize] += v;
    }

    /// Non-zero entries as `(spatial neighbour, weight)`. The caller ensures
    /// `s` is strictly inside the box.
    pub fn entries<'a>(
        &'a self,
        grid: &'a Cylinder,
        s: usize,
    ) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.w.iter().enumerate().filter_map(move |(idx, &w)| {
            if w == 0.0 {
                return None;
            }
            let di = (idx % 3) as isize - 1;
            let dj = (idx / 3) as isize - 1;
            grid.shift(s, di, dj).map(|nb| (nb, w))
        })
    }

    /// All off-diagonal weights are nonpositive.
    pub fn is_monotone(&self) -> bool {
        self.w
            .iter()
            .enumerate()
            .all(|(i, &w)| i == Row::CENTER || w <= 0.0)
    }
}

/// Assembles the spatial row at one node. The flag reports whether the row
/// has nonpositive off-diagonal weights.
pub(crate) fn spatial_row(grid: &Cylinder, k: &NodeCoefficients, cfg: &StencilConfig) -> (Row, bool) {
    let h = grid.hx();
    let h2 = h * h;
    let n = grid.dim();
    let mut row = Row::default();
    row.add(0, 0, k.c);

    let axes: &[(isize, isize, f64, f64)] = if n == 1 {
        &[(1, 0, k.a.a11, k.b[0])]
    } else {
        &[(1, 0, k.a.a11, k.b[0]), (0, 1, k.a.a22, k.b[1])]
    };
    for &(di, dj, aii, bi) in axes {
        row.add(di, dj, -aii / h2);
        row.add(-di, -dj, -aii / h2);
        row.add(0, 0, 2.0 * aii / h2);
        match cfg.drift {
            DriftScheme::Central => {
                row.add(di, dj, bi / (2.0 * h));
                row.add(-di, -dj, -bi / (2.0 * h));
            }
            DriftScheme::Upwind if bi > 0.0 => {
                row.add(0, 0, bi / h);
                row.add(-di, -dj, -bi / h);
            }
            DriftScheme::Upwind => {
                row.add(di, dj, bi / h);
                row.add(0, 0, -bi / h);
            }
        }
    }

    if n == 2 && k.a.a12 != 0.0 {
        let a12 = k.a.a12;
        let split = cfg.mixed == MixedScheme::PositiveSplitting
            && a12.abs() <= k.a.a11.min(k.a.a22);
        if split {
            // 2 a12 u_xy ~ s/h^2 [u_d1 + u_d2 - u_E - u_W - u_N - u_S + 2u] sign(a12),
            // with (d1, d2) the diagonal pair aligned with sign(a12).
            let s = a12.abs();
            let dj = if a12 > 0.0 { 1 } else { -1 };
            row.add(1, dj, -s / h2);
            row.add(-1, -dj, -s / h2);
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                row.add(di, dj, s / h2);
            }
            row.add(0, 0, -2.0 * s / h2);
        } else {
            let w = 2.0 * a12 / (4.0 * h2);
            row.add(1, 1, -w);
            row.add(-1, -1, -w);
            row.add(1, -1, w);
            row.add(-1, 1, w);
        }
    }
    let monotone = row.is_monotone();
    (row, monotone)
}

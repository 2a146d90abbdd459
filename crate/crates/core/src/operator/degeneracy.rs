use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::OperatorCoefficients;
use crate::error::Result;
use crate::exponent::{Exponent, ExponentPair};

/// The nondegeneracy requirement selected by `(p0, q0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneracyBranch {
    /// `p0 = n`: `Sp(a) > 0`.
    Trace,
    /// `q0 = 1`: `sigma > 0`.
    Sigma,
    /// `p0 = q0 = inf`: `c > 0`.
    C,
    /// `p0 = inf`, `1 < q0 < inf`: `c + sigma > 0`.
    CPlusSigma,
    /// `q0 = inf`, `n < p0 < inf`: `Sp(a) + c > 0`.
    TracePlusC,
    /// `n/p0 + 1/q0 = 1` with both finite: `Sp(a) + sigma > 0`.
    TracePlusSigma,
    /// Every other admissible pair: `Sp(a) + sigma + c > 0`.
    All,
}

impl DegeneracyBranch {
    pub const ALL: [DegeneracyBranch; 7] = [
        DegeneracyBranch::Trace,
        DegeneracyBranch::Sigma,
        DegeneracyBranch::C,
        DegeneracyBranch::CPlusSigma,
        DegeneracyBranch::TracePlusC,
        DegeneracyBranch::TracePlusSigma,
        DegeneracyBranch::All,
    ];

    /// Selects the branch for an admissible pair in dimension `n`.
    pub fn select(e: &ExponentPair, n: usize) -> DegeneracyBranch {
        let n_exp = Exponent::Finite(Ratio::from_integer(n as i64));
        let one = Exponent::Finite(Ratio::from_integer(1));
        if e.p == n_exp {
            DegeneracyBranch::Trace
        } else if e.q == one {
            DegeneracyBranch::Sigma
        } else if e.p.is_infinite() && e.q.is_infinite() {
            DegeneracyBranch::C
        } else if e.p.is_infinite() {
            DegeneracyBranch::CPlusSigma
        } else if e.q.is_infinite() {
            DegeneracyBranch::TracePlusC
        } else if e.is_critical(n) {
            DegeneracyBranch::TracePlusSigma
        } else {
            DegeneracyBranch::All
        }
    }

    pub fn condition(&self) -> &'static str {
        match self {
            DegeneracyBranch::Trace => "Sp(a) > 0",
            DegeneracyBranch::Sigma => "sigma > 0",
            DegeneracyBranch::C => "c > 0",
            DegeneracyBranch::CPlusSigma => "c + sigma > 0",
            DegeneracyBranch::TracePlusC => "Sp(a) + c > 0",
            DegeneracyBranch::TracePlusSigma => "Sp(a) + sigma > 0",
            DegeneracyBranch::All => "Sp(a) + sigma + c > 0",
        }
    }

    /// The quantity required to be positive; `c` is `c + kappa sigma`.
    pub fn quantity(&self, trace: f64, sigma: f64, c: f64) -> f64 {
        match self {
            DegeneracyBranch::Trace => trace,
            DegeneracyBranch::Sigma => sigma,
            DegeneracyBranch::C => c,
            DegeneracyBranch::CPlusSigma => c + sigma,
            DegeneracyBranch::TracePlusC => trace + c,
            DegeneracyBranch::TracePlusSigma => trace + sigma,
            DegeneracyBranch::All => trace + sigma + c,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub exponents: ExponentPair,
    pub branch: DegeneracyBranch,
    pub condition: String,
    pub passed: bool,
    pub checked_nodes: usize,
    pub violating_nodes: Vec<usize>,
}

/// Evaluates the branch selected by `e` at every node.
pub fn check_degeneracy_condition(
    op: &OperatorCoefficients,
    e: &ExponentPair,
) -> Result<DegeneracyReport> {
    let n = op.dim();
    e.check_admissible(n)?;
    let branch = DegeneracyBranch::select(e, n);
    let g = op.grid();
    let violating_nodes: Vec<usize> = (0..g.n_nodes())
        .filter(|&node| {
            let q = branch.quantity(
                op.a_at(node).trace(n),
                op.sigma_at(node),
                op.c_eff_at(node),
            );
            !(q > 0.0)
        })
        .collect();
    Ok(DegeneracyReport {
        exponents: *e,
        branch,
        condition: branch.condition().to_string(),
        passed: violating_nodes.is_empty(),
        checked_nodes: g.n_nodes(),
        violating_nodes,
    })
}

/// Uniform bounds `delta <= sigma, c <= 1/delta`, `|b| <= 1/delta` and
/// `delta <= eig(a) <= 1/delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyBounds {
    pub delta: f64,
}

impl NondegeneracyBounds {
    /// Largest `delta` satisfied at every node, or `None` if no positive
    /// `delta` works. `c` is taken as `c + kappa sigma`.
    pub fn certify(op: &OperatorCoefficients) -> Option<NondegeneracyBounds> {
        let n = op.dim();
        let mut delta = 1.0f64;
        for node in 0..op.grid().n_nodes() {
            let s = op.sigma_at(node);
            let c = op.c_eff_at(node);
            let b = op.b_at(node);
            let (lo, hi) = op.a_at(node).eigenvalues(n);
            let nb = b[0].hypot(b[1]);
            delta = delta
                .min(s)
                .min(1.0 / s)
                .min(c)
                .min(1.0 / c)
                .min(lo)
                .min(1.0 / hi)
                .min(if nb > 0.0 { 1.0 / nb } else { f64::INFINITY });
            if !(delta > 0.0) {
                return None;
            }
        }
        Some(NondegeneracyBounds { delta })
    }

    /// True when the bounds hold at every node of `op`.
    pub fn holds_for(&self, op: &OperatorCoefficients) -> bool {
        NondegeneracyBounds::certify(op).is_some_and(|b| b.delta >= self.delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cylinder;
    use crate::operator::Field;

    fn pair(s: &str) -> ExponentPair {
        ExponentPair::parse(s).unwrap()
    }

    #[test]
    fn branch_selection_table() {
        let cases = [
            (1, "1,inf", DegeneracyBranch::Trace),
            (2, "2,inf", DegeneracyBranch::Trace),
            (2, "inf,1", DegeneracyBranch::Sigma),
            (2, "inf,inf", DegeneracyBranch::C),
            (2, "inf,3", DegeneracyBranch::CPlusSigma),
            (2, "5,inf", DegeneracyBranch::TracePlusC),
            (2, "3,3", DegeneracyBranch::TracePlusSigma),
            (2, "4,2", DegeneracyBranch::TracePlusSigma),
            (2, "5,5", DegeneracyBranch::All),
            (1, "2,2", DegeneracyBranch::TracePlusSigma),
            (1, "3,3", DegeneracyBranch::All),
        ];
        for (n, e, b) in cases {
            assert_eq!(DegeneracyBranch::select(&pair(e), n), b, "n={n} e={e}");
        }
    }

    #[test]
    fn heat_passes_and_degenerate_sigma_fails() {
        let g = Cylinder::new(2, 1.0, 1.0, 5, 3).unwrap();
        let heat = OperatorCoefficients::heat(&g);
        let r = check_degeneracy_condition(&heat, &pair("3,3")).unwrap();
        assert!(r.passed);
        let flat = heat.with_sigma(Field::Constant(0.0));
        let r = check_degeneracy_condition(&flat, &pair("inf,1")).unwrap();
        assert!(!r.passed);
        assert_eq!(r.violating_nodes.len(), g.n_nodes());
        let err = check_degeneracy_condition(&flat, &pair("2,1")).unwrap_err();
        assert!(err.to_string().contains("n/p + 1/q = 2 > 1"));
    }

    #[test]
    fn certification() {
        let g = Cylinder::new(1, 1.0, 1.0, 5, 3).unwrap();
        assert!(NondegeneracyBounds::certify(&OperatorCoefficients::heat(&g)).is_none());
        let op = OperatorCoefficients::heat(&g).with_c(Field::Constant(0.5));
        let b = NondegeneracyBounds::certify(&op).unwrap();
        assert_eq!(b.delta, 0.5);
        assert!(b.holds_for(&op));
    }
}

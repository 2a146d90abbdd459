//! Scenario files, the check pipeline and report emission.
//!
//! Reports are deterministic: identical scenarios give byte-identical JSON.
//! Wall-clock data goes to `metadata.json` only.

mod bundled;
mod config;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use bundled::{bundled, bundled_names};
pub use config::{
    BarrierSpec, Check, CounterexampleSpec, EstimateSpec, ExponentSpec, ForcingSpec, GridSpec,
    OutputSpec, Scenario,
};

use crate::barrier::{
    build_composite_barrier, drift_magnitude, verify_barrier_inequality, BarrierOptions,
    BarrierTarget,
};
use crate::error::{Error, Result};
use crate::estimates::{
    bony_check_with, drift_norm_refinement, estimate_report_outside, increments_persist,
    singular_counterexample, DegeneracySummary, EstimateReport,
};
use crate::grid::{GridFunction, PositivitySet};
use crate::norm::{embedding_check, mixed_norm_detailed, MixedNormSpec};
use crate::operator::{
    check_degeneracy_condition, drift_weight, DriftComponent, OperatorCoefficients,
};
use crate::solver::{solve_barrier_problem, solve_forward, Solution};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "MAXPRIN_OUTPUT_DIR";

/// Result of one check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: Check,
    pub passed: bool,
    /// The check's hypotheses hold; only applicable checks decide the exit
    /// status.
    pub applicable: bool,
    pub report: Value,
}

/// One CSV row per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub family: String,
    pub dim: usize,
    pub nx: usize,
    pub nt: usize,
    pub checks: String,
    pub failed: String,
    pub passed: bool,
    pub lhs_sup: Option<f64>,
    pub rhs_norm: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub scenario: Scenario,
    pub checks: Vec<CheckOutcome>,
    pub solution: Option<GridFunction>,
    /// `(name, csv text)` side files.
    pub attachments: Vec<(String, String)>,
}

impl ScenarioOutcome {
    /// No applicable check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.applicable)
    }

    pub fn check(&self, check: Check) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.check == check)
    }

    pub fn summary(&self) -> SummaryRow {
        let s = &self.scenario;
        let mut checks: Vec<Check> = self.checks.iter().map(|c| c.check).collect();
        checks.sort();
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| c.applicable && !c.passed)
            .map(|c| c.check.name())
            .collect();
        let est = self
            .check(Check::VerifyBound)
            .and_then(|c| serde_json::from_value::<EstimateReport>(c.report.clone()).ok());
        SummaryRow {
            scenario: s.name.clone(),
            family: s.operator.name().to_string(),
            dim: s.grid.dim,
            nx: s.grid.nx,
            nt: s.grid.nt,
            checks: checks.iter().map(|c| c.name()).collect::<Vec<_>>().join(";"),
            failed: failed.join(";"),
            passed: self.passed(),
            lhs_sup: est.as_ref().map(|e| e.lhs_sup),
            rhs_norm: est.as_ref().map(|e| e.rhs_norm),
            ratio: est.as_ref().map(|e| e.ratio),
        }
    }

    /// `{schema_version, scenario, check, passed, applicable, report}`.
    pub fn report_json(&self, c: &CheckOutcome) -> Result<String> {
        let v = json!({
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario.name,
            "check": c.check.name(),
            "passed": c.passed,
            "applicable": c.applicable,
            "report": c.report,
        });
        Ok(serde_json::to_string_pretty(&v)? + "\n")
    }

    /// Writes `<base>/<name>/`: one JSON report per check, `summary.csv`,
    /// `metadata.json` and side files. Everything is rendered before the
    /// first file is created.
    pub fn write(&self, base: &Path) -> Result<Vec<PathBuf>> {
        let dir = self
            .scenario
            .output
            .dir
            .as_ref()
            .map(PathBuf::from)
            .unwrap_or_else(|| base.to_path_buf())
            .join(&self.scenario.name);
        let mut files: Vec<(String, String)> = Vec::new();
        for c in &self.checks {
            files.push((format!("{}.json", c.check.name()), self.report_json(c)?));
        }
        files.push(("summary.csv".into(), summary_csv(&[self.summary()])?));
        files.push(("metadata.json".into(), metadata_json(&self.scenario.name)?));
        files.extend(self.attachments.iter().cloned());
        let mut solution_csv = None;
        if let (true, Some(u)) = (self.scenario.output.solution, &self.solution) {
            let mut buf = Vec::new();
            u.write_csv(&mut buf)?;
            solution_csv = Some(buf);
        }
        std::fs::create_dir_all(&dir)?;
        let mut written = Vec::new();
        for (name, text) in files {
            let p = dir.join(name);
            std::fs::write(&p, text)?;
            written.push(p);
        }
        if let Some(buf) = solution_csv {
            let p = dir.join("solution.csv");
            std::fs::write(&p, buf)?;
            written.push(p);
        }
        Ok(written)
    }
}

/// CSV with a header and one row per scenario.
pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn metadata_json(name: &str) -> Result<String> {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let v = json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": name,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "created_unix": now,
    });
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// Builds the operator of a scenario, including `kappa`.
pub fn scenario_operator(s: &Scenario) -> Result<OperatorCoefficients> {
    let grid = s.build_grid()?;
    Ok(s.operator
        .build(&grid)?
        .with_kappa(s.estimate.kappa)
        .with_label(s.name.clone()))
}

/// Runs the requested checks in dependency order: degeneracy, forward
/// solve, norms, bound, Bony, counterexample, barrier.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioOutcome> {
    s.validate()?;
    let context = |check: &str, e: Error| Error::InvalidParameter(format!("{check}: {e}"));
    let op = scenario_operator(s)?;
    let mut checks: Vec<Check> = s.checks.clone();
    checks.sort();
    checks.dedup();
    let solution = if checks.iter().any(Check::needs_solution) {
        let f = s.forcing.build(op.grid()).map_err(|e| context("forcing", e))?;
        Some(solve_forward(&op, &f, &s.scheme).map_err(|e| context("solve", e))?)
    } else {
        None
    };
    let mut out = Vec::new();
    let mut attachments = Vec::new();
    for check in checks {
        let c = match check {
            Check::Degeneracy => run_degeneracy(s, &op),
            Check::Norms => run_norms(s, &op, solution.as_ref().expect("solved")),
            Check::VerifyBound => run_verify_bound(s, &op, solution.as_ref().expect("solved")),
            Check::Bony => run_bony(s, &op, solution.as_ref().expect("solved")),
            Check::Counterexample => run_counterexample(s),
            Check::Barrier => run_barrier(s, &op, &mut attachments),
        }
        .map_err(|e| context(check.name(), e))?;
        out.push(c);
    }
    Ok(ScenarioOutcome {
        scenario: s.clone(),
        checks: out,
        solution: solution.map(|sol| sol.u),
        attachments,
    })
}

/// Runs scenarios concurrently; results keep the input order.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<ScenarioOutcome>> {
    scenarios.par_iter().map(run_scenario).collect()
}

fn outcome(check: Check, passed: bool, applicable: bool, report: impl Serialize) -> Result<CheckOutcome> {
    Ok(CheckOutcome {
        check,
        passed,
        applicable,
        report: serde_json::to_value(report)?,
    })
}

fn run_degeneracy(s: &Scenario, op: &OperatorCoefficients) -> Result<CheckOutcome> {
    let r = check_degeneracy_condition(op, &s.exponents.p0)?;
    let summary = DegeneracySummary::from(&r);
    let report = json!({
        "exponents": r.exponents,
        "summary": summary,
        "checked_nodes": r.checked_nodes,
    });
    outcome(Check::Degeneracy, r.passed, true, report)
}

fn run_norms(s: &Scenario, op: &OperatorCoefficients, sol: &Solution) -> Result<CheckOutcome> {
    let g = *op.grid();
    let e0 = s.exponents.p0;
    let u_plus = sol.u.map(|v| v.max(0.0))?;
    let solution_norm = mixed_norm_detailed(&u_plus, &MixedNormSpec::new(e0))?;
    let closed = PositivitySet::closed_cylinder(&g);
    let mut drift = Vec::new();
    let requests: Vec<(DriftComponent, crate::exponent::ExponentPair)> =
        if s.exponents.drift.len() == 1 {
            vec![(DriftComponent::Total, s.exponents.drift[0])]
        } else {
            op.parts
                .iter()
                .enumerate()
                .filter_map(|(k, p)| {
                    let e = s.exponents.drift.get(k).copied().or(p.exponents)?;
                    Some((DriftComponent::Part(k), e))
                })
                .collect()
        };
    let mut finite = solution_norm.value.is_finite();
    let mut divergent = false;
    for (component, e) in requests {
        let h = drift_weight(op, &e, component)?;
        let d = h.norm(Some(&closed))?;
        finite &= d.value.is_finite();
        divergent |= d.divergent || h.has_infinite();
        let label = match component {
            DriftComponent::Total => "total".to_string(),
            DriftComponent::Part(k) => op.parts[k].name.clone(),
        };
        drift.push(json!({ "label": label, "exponents": e, "norm": d }));
    }
    let embedding = match (e0.p, e0.q) {
        (p, q) if p < q && !q.is_infinite() => Some(embedding_check(&u_plus, p, q)?),
        _ => None,
    };
    let report = json!({
        "solution_norm": solution_norm,
        "drift_norms": drift,
        "embedding": embedding,
    });
    outcome(Check::Norms, finite && !divergent, !divergent, report)
}

fn run_verify_bound(s: &Scenario, op: &OperatorCoefficients, sol: &Solution) -> Result<CheckOutcome> {
    let mut r = estimate_report_outside(
        op,
        &sol.u,
        &s.exponents.p0,
        &s.exponents.drift,
        &s.scheme.stencil(),
        s.estimate.exclude_radius,
    )?;
    r.solver_residual = Some(sol.residual);
    r.m_matrix = Some(sol.m_matrix);
    let within = s.estimate.max_ratio.is_none_or(|m| r.ratio <= m);
    let passed = r.ratio.is_finite() && within;
    let applicable = r.hypotheses_valid;
    outcome(Check::VerifyBound, passed, applicable, r)
}

fn run_bony(s: &Scenario, op: &OperatorCoefficients, sol: &Solution) -> Result<CheckOutcome> {
    let r = bony_check_with(op, &sol.u, &s.scheme.stencil())?;
    outcome(Check::Bony, r.passed, r.applicable, r)
}

fn run_counterexample(s: &Scenario) -> Result<CheckOutcome> {
    let grid = s.build_grid()?;
    let alpha = s.counterexample.alpha;
    let r = singular_counterexample(alpha, &grid)?;
    let steps = drift_norm_refinement(alpha, grid.dim(), &s.counterexample.refinements)?;
    let expect_divergent = alpha >= 2.0;
    let persist = increments_persist(&steps, 0.9);
    let shape = r.u_at_origin_final == 0.5 && r.boundary_max <= 1e-12;
    let passed = if expect_divergent {
        shape && r.lu_max_away <= -0.4 && r.h_norm.divergent && persist
    } else {
        shape && !r.h_norm.divergent && r.h_norm.value.is_finite()
    };
    let report = json!({
        "counterexample": r,
        "refinement": steps,
        "increments_persist": persist,
        "expect_divergent": expect_divergent,
    });
    outcome(Check::Counterexample, passed, true, report)
}

fn run_barrier(
    s: &Scenario,
    op: &OperatorCoefficients,
    attachments: &mut Vec<(String, String)>,
) -> Result<CheckOutcome> {
    let g = *op.grid();
    let stencil = s.scheme.stencil();
    let abs_b = drift_magnitude(op, None)?;
    let b = solve_barrier_problem(op, &abs_b, &s.scheme)?;
    let drift_verdict = verify_barrier_inequality(op, &b.u, BarrierTarget::AbsDrift, &stencil)?;
    let trace = GridFunction::new(g, (0..g.n_nodes()).map(|i| op.a_at(i).trace(g.dim())).collect())?;
    let a = solve_barrier_problem(op, &trace, &s.scheme)?;
    let trace_verdict = verify_barrier_inequality(op, &a.u, BarrierTarget::TraceA, &stencil)?;
    let singular = s
        .barrier
        .singular_part
        .or_else(|| op.parts.iter().position(|p| p.singularity.is_some()));
    let mut passed = drift_verdict.passed && trace_verdict.passed;
    let composite = match singular {
        Some(k) if k < op.parts.len() => {
            let opts = BarrierOptions {
                margin: s.barrier.margin,
                extension: s.barrier.extension,
                ode_steps: s.barrier.ode_steps,
            };
            let cb = build_composite_barrier(op, k, &s.scheme, &opts)?;
            passed &= cb.verdict.passed;
            attachments.push(("barrier_profile.csv".into(), profile_csv(&cb.radial)?));
            Some(json!({
                "singular_part": k,
                "r_outer": cb.radial.r_outer,
                "norm": cb.radial.norm(),
                "max_slope": cb.radial.max_slope(),
                "convex": cb.radial.is_convex(1e-10),
                "tail_max": cb.tail.max(),
                "verdict": cb.verdict,
            }))
        }
        Some(k) => {
            return Err(Error::config(
                "barrier.singular_part",
                format!("part {k} does not exist ({} parts)", op.parts.len()),
            ))
        }
        None => None,
    };
    let report = json!({
        "solver_drift_barrier": { "residual": b.residual, "verdict": drift_verdict },
        "solver_trace_barrier": { "residual": a.residual, "verdict": trace_verdict },
        "composite": composite,
    });
    outcome(Check::Barrier, passed, true, report)
}

fn profile_csv(b: &crate::barrier::RadialBarrier) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["r", "v", "dv", "source"])?;
    for j in 0..b.r.len() {
        w.write_record(&[
            b.r[j].to_string(),
            b.v[j].to_string(),
            b.dv[j].to_string(),
            b.source[j].to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_baseline_has_zero_lhs() {
        let s = bundled("heat_baseline").unwrap();
        let o = run_scenario(&s).unwrap();
        assert!(o.passed());
        let row = o.summary();
        assert_eq!(row.lhs_sup, Some(0.0));
    }

    #[test]
    fn reports_are_deterministic() {
        let s = bundled("heat_baseline").unwrap();
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        for (x, y) in a.checks.iter().zip(&b.checks) {
            assert_eq!(a.report_json(x).unwrap(), b.report_json(y).unwrap());
        }
    }
}

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exponent::ExponentPair;
use crate::grid::{Cylinder, GridFunction};
use crate::operator::Family;
use crate::solver::SchemeConfig;

/// Checks a scenario may request, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Degeneracy,
    Norms,
    VerifyBound,
    Bony,
    Counterexample,
    Barrier,
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::Degeneracy => "degeneracy",
            Check::Norms => "norms",
            Check::VerifyBound => "verify_bound",
            Check::Bony => "bony",
            Check::Counterexample => "counterexample",
            Check::Barrier => "barrier",
        }
    }

    /// Needs the forward solution.
    pub fn needs_solution(&self) -> bool {
        matches!(self, Check::Norms | Check::VerifyBound | Check::Bony)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "one")]
    pub final_time: f64,
    pub nx: usize,
    pub nt: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Cylinder> {
        Cylinder::new(self.dim, self.radius, self.final_time, self.nx, self.nt)
    }
}

/// Right-hand side `f` of `L u = f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    Constant {
        value: f64,
    },
    /// `amplitude exp(-(|x - center|^2 + (t - time)^2) / width^2)`.
    Bump {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "half")]
        time: f64,
        #[serde(default = "quarter")]
        width: f64,
    },
    /// `amplitude sin(pi t / T) cos(pi |x| / (2 R))`, positive inside.
    Separable {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude cos(k1 pi x_1 / R) cos(k2 pi x_2 / R) (1 + t)`.
    Oscillating {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        k1: f64,
        #[serde(default = "one")]
        k2: f64,
    },
    Csv {
        path: String,
    },
}

impl Default for ForcingSpec {
    fn default() -> Self {
        ForcingSpec::Bump {
            amplitude: 1.0,
            center: [0.0, 0.0],
            time: 0.5,
            width: 0.25,
        }
    }
}

impl ForcingSpec {
    pub fn build(&self, grid: &Cylinder) -> Result<GridFunction> {
        use std::f64::consts::PI;
        let (r, t_end) = (grid.radius(), grid.final_time());
        match self {
            ForcingSpec::Constant { value } => GridFunction::constant(grid, *value),
            ForcingSpec::Bump {
                amplitude,
                center,
                time,
                width,
            } => GridFunction::from_fn(grid, |x, t| {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                amplitude * (-(d2 + (t - time) * (t - time)) / (width * width)).exp()
            }),
            ForcingSpec::Separable { amplitude } => GridFunction::from_fn(grid, |x, t| {
                let rx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                amplitude * (PI * t / t_end).sin() * (0.5 * PI * rx / r).cos()
            }),
            ForcingSpec::Oscillating { amplitude, k1, k2 } => GridFunction::from_fn(grid, |x, t| {
                let y = x.get(1).copied().unwrap_or(0.0);
                amplitude * (k1 * PI * x[0] / r).cos() * (k2 * PI * y / r).cos() * (1.0 + t)
            }),
            ForcingSpec::Csv { path } => GridFunction::read_csv_file(path, Some(*grid)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpec {
    /// `(p0, q0)` for the bound, written `"p,q"`.
    #[serde(with = "pair_text", default = "sup_pair")]
    pub p0: ExponentPair,
    /// Drift pairs: one per part, one for the total drift, or none for the
    /// parts' declared pairs.
    #[serde(with = "pair_list_text", default)]
    pub drift: Vec<ExponentPair>,
}

impl Default for ExponentSpec {
    fn default() -> Self {
        ExponentSpec {
            p0: sup_pair(),
            drift: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    /// Rescaling `u = exp(kappa t) v`.
    #[serde(default)]
    pub kappa: f64,
    /// `verify_bound` fails when the observed ratio exceeds this.
    #[serde(default)]
    pub max_ratio: Option<f64>,
    /// Leave `|x| < exclude_radius` out of the right-hand side.
    #[serde(default)]
    pub exclude_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSpec {
    #[serde(default = "two")]
    pub alpha: f64,
    /// Mesh sizes of the drift-norm refinement study.
    #[serde(default = "default_refinements")]
    pub refinements: Vec<usize>,
}

impl Default for CounterexampleSpec {
    fn default() -> Self {
        CounterexampleSpec {
            alpha: 2.0,
            refinements: default_refinements(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    /// Part handled by the radial barrier; defaults to the first part with
    /// a point singularity.
    #[serde(default)]
    pub singular_part: Option<usize>,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_extension")]
    pub extension: f64,
    #[serde(default = "default_ode_steps")]
    pub ode_steps: usize,
}

impl Default for BarrierSpec {
    fn default() -> Self {
        BarrierSpec {
            singular_part: None,
            margin: default_margin(),
            extension: default_extension(),
            ode_steps: default_ode_steps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Overrides the output directory given on the command line.
    #[serde(default)]
    pub dir: Option<String>,
    /// Also write the solution as a grid-function CSV.
    #[serde(default)]
    pub solution: bool,
}

/// One experiment: operator, grid, forcing and the checks to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub checks: Vec<Check>,
    pub grid: GridSpec,
    pub operator: Family,
    #[serde(default)]
    pub exponents: ExponentSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub estimate: EstimateSpec,
    #[serde(default)]
    pub counterexample: CounterexampleSpec,
    #[serde(default)]
    pub barrier: BarrierSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Scenario {
    /// Parses and validates a TOML scenario.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
        if let Family::Random { seed } = &mut s.operator {
            seed.get_or_insert(s.seed);
        }
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Scenario::from_toml_str(&text).map_err(|e| match e {
            Error::Config { key, message } => Error::Config {
                key,
                message: format!("{message} (in {})", path.display()),
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("scenario", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, e: Error| Error::config(key, e.to_string());
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::config(
                "name",
                "expected a non-empty identifier of letters, digits, `_` or `-`",
            ));
        }
        if self.checks.is_empty() {
            return Err(Error::config("checks", "at least one check is required"));
        }
        let grid = self.grid.build().map_err(|e| bad("grid", e))?;
        let n = grid.dim();
        self.exponents
            .p0
            .check_admissible(n)
            .map_err(|e| bad("exponents.p0", e))?;
        for e in &self.exponents.drift {
            e.check_admissible(n).map_err(|e| bad("exponents.drift", e))?;
        }
        if !(0.0..=1.0).contains(&self.scheme.theta) {
            return Err(Error::config("scheme.theta", "expected a value in [0, 1]"));
        }
        if !self.estimate.kappa.is_finite() || self.estimate.kappa < 0.0 {
            return Err(Error::config("estimate.kappa", "expected a finite value >= 0"));
        }
        if !(self.estimate.exclude_radius >= 0.0) {
            return Err(Error::config("estimate.exclude_radius", "expected a value >= 0"));
        }
        if self.checks.contains(&Check::Counterexample) {
            let c = &self.counterexample;
            if !(c.alpha > 0.0 && c.alpha <= 2.0) {
                return Err(Error::config("counterexample.alpha", "expected a value in (0, 2]"));
            }
            if c.refinements.iter().any(|&m| m < 3 || m % 2 == 0) {
                return Err(Error::config(
                    "counterexample.refinements",
                    "expected odd mesh sizes >= 3",
                ));
            }
        }
        let b = &self.barrier;
        if !(b.margin >= 0.0) || !(b.extension > 0.0) || b.ode_steps < 2 {
            return Err(Error::config(
                "barrier",
                "expected margin >= 0, extension > 0 and ode_steps >= 2",
            ));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Cylinder> {
        self.grid.build()
    }
}

/// Maps a TOML error to the dotted key it concerns.
fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let message = e.message().trim().to_string();
    let key = e
        .span()
        .map(|span| key_at(text, span.start))
        .filter(|k| !k.is_empty())
        .or_else(|| backticked(&message))
        .unwrap_or_else(|| "scenario".to_string());
    Error::Config { key, message }
}

/// Dotted key of the line containing byte `pos`, qualified by the enclosing
/// table header.
fn key_at(text: &str, pos: usize) -> String {
    let pos = pos.min(text.len());
    let line_start = text[..pos].rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("").trim();
    let table = text[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('[') && !l.starts_with("[["))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    if line.starts_with('[') {
        return line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
    }
    let key = line.split('=').next().unwrap_or("").trim().trim_matches('"');
    match (table, key.is_empty()) {
        (_, true) => String::new(),
        (Some(t), false) => format!("{t}.{key}"),
        (None, false) => key.to_string(),
    }
}

fn backticked(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn half() -> f64 {
    0.5
}

fn quarter() -> f64 {
    0.25
}

fn sup_pair() -> ExponentPair {
    ExponentPair::parse("inf,inf").expect("valid pair")
}

fn default_refinements() -> Vec<usize> {
    vec![41, 81, 161, 321]
}

fn default_margin() -> f64 {
    crate::barrier::MAJORANT_MARGIN
}

fn default_extension() -> f64 {
    crate::barrier::EPS_EXTENSION
}

fn default_ode_steps() -> usize {
    4000
}

fn pair_to_text(e: &ExponentPair) -> String {
    format!("{},{}", e.p, e.q)
}

mod pair_text {
    use super::*;

    pub fn serialize<S: Serializer>(e: &ExponentPair, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&pair_to_text(e))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ExponentPair, D::Error> {
        let text = String::deserialize(d)?;
        ExponentPair::parse(&text).map_err(serde::de::Error::custom)
    }
}

mod pair_list_text {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[ExponentPair], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(pair_to_text))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<ExponentPair>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| ExponentPair::parse(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
checks = ["verify_bound"]

[grid]
dim = 1
nx = 11
nt = 6

[operator]
family = "heat"
"#;

    #[test]
    fn minimal_scenario_defaults() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.exponents.p0, sup_pair());
        assert_eq!(s.forcing, ForcingSpec::default());
        assert_eq!(s.scheme, SchemeConfig::default());
    }

    #[test]
    fn round_trip() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        let again = Scenario::from_toml_str(&s.to_toml_string().unwrap()).unwrap();
        assert_eq!(s, again);
    }

    fn key_of(text: &str) -> String {
        match Scenario::from_toml_str(text) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of(&MINIMAL.replace("nt = 6", "nt = \"six\"")), "grid.nt");
        assert_eq!(key_of(&MINIMAL.replace("nt = 6", "nt = 6\nnz = 3")), "grid.nz");
        assert_eq!(
            key_of(&format!("{MINIMAL}\n[exponents]\np0 = \"1,1\"\n")),
            "exponents.p0"
        );
        assert_eq!(key_of(&MINIMAL.replace("\"heat\"", "\"warm\"")), "operator.family");
        assert_eq!(key_of(&MINIMAL.replace("name = \"t\"", "name = \"a b\"")), "name");
    }

    #[test]
    fn random_family_takes_scenario_seed() {
        let text = MINIMAL
            .replace("family = \"heat\"", "family = \"random\"")
            .replace("name = \"t\"", "name = \"t\"\nseed = 7");
        let s = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(s.operator, Family::Random { seed: Some(7) });
    }
}

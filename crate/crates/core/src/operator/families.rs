//! Named coefficient families, as declared in scenario files.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DriftPart, Field, OperatorCoefficients, Sym2};
use crate::error::{Error, Result};
use crate::exponent::{Exponent, ExponentPair};
use crate::grid::{Cylinder, GridFunction};
use crate::norm::PointSingularity;

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

/// A coefficient family with its parameters. In configuration files the
/// variant is chosen by the `family` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `sigma D_t - Laplacian + c`.
    Heat {
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        c: f64,
    },
    /// Constant coefficients.
    Constant {
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default = "one")]
        a11: f64,
        #[serde(default)]
        a12: f64,
        #[serde(default = "one")]
        a22: f64,
        #[serde(default)]
        b1: f64,
        #[serde(default)]
        b2: f64,
        #[serde(default)]
        c: f64,
    },
    /// `D_t - Laplacian + strength x_i / |x|^alpha D_i + c`, with `|x|`
    /// regularized as `max(|x|, eps_factor hx)`.
    SingularDrift {
        alpha: f64,
        /// Defaults to `n + 1`.
        #[serde(default)]
        strength: Option<f64>,
        #[serde(default = "one")]
        c: f64,
        #[serde(default = "half")]
        eps_factor: f64,
    },
    /// Constant anisotropic diffusion modulated by `1 + variation sin(pi x_1 / R) cos(pi t / T)`.
    Anisotropic {
        a11: f64,
        #[serde(default)]
        a12: f64,
        #[serde(default = "one")]
        a22: f64,
        #[serde(default)]
        variation: f64,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        b1: f64,
        #[serde(default)]
        b2: f64,
        #[serde(default)]
        c: f64,
    },
    /// Smooth space-time dependent `sigma`, `a`, `b` and `c`.
    Variable {
        #[serde(default = "half")]
        amplitude: f64,
        #[serde(default = "one")]
        drift: f64,
        #[serde(default = "half")]
        c: f64,
    },
    /// Sum of drift parts on top of `sigma D_t - Laplacian + c`.
    Composite {
        parts: Vec<DriftPartSpec>,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default = "one")]
        c: f64,
    },
    /// Smooth random coefficients with `delta >= 0.1` nondegeneracy. In a
    /// scenario a missing seed is the scenario seed.
    Random {
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Nodal coefficients from grid-function CSV files; missing fields take
    /// the heat-operator values.
    Custom {
        #[serde(default)]
        sigma: Option<String>,
        #[serde(default)]
        a11: Option<String>,
        #[serde(default)]
        a12: Option<String>,
        #[serde(default)]
        a22: Option<String>,
        #[serde(default)]
        b1: Option<String>,
        #[serde(default)]
        b2: Option<String>,
        #[serde(default)]
        c: Option<String>,
    },
}

/// One drift summand of a composite family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftPartSpec {
    Singular {
        alpha: f64,
        #[serde(default)]
        strength: Option<f64>,
        #[serde(default = "half")]
        eps_factor: f64,
        #[serde(default)]
        p: Option<Exponent>,
        #[serde(default)]
        q: Option<Exponent>,
    },
    Constant {
        #[serde(default)]
        b1: f64,
        #[serde(default)]
        b2: f64,
        #[serde(default)]
        p: Option<Exponent>,
        #[serde(default)]
        q: Option<Exponent>,
    },
    /// `amplitude (sin(f pi x_2 + t), cos(f pi x_1 - t))`; in 1D the first
    /// component uses `x_1`.
    Oscillating {
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        p: Option<Exponent>,
        #[serde(default)]
        q: Option<Exponent>,
    },
}

pub(crate) const FAMILY_NAMES: [&str; 8] = [
    "heat",
    "constant",
    "singular_drift",
    "anisotropic",
    "variable",
    "composite",
    "random",
    "custom",
];

/// Builds the family `name` with parameters from a JSON object.
pub fn builtin_coefficient_families(
    name: &str,
    params: &serde_json::Value,
    grid: &Cylinder,
) -> Result<OperatorCoefficients> {
    if !FAMILY_NAMES.contains(&name) {
        return Err(Error::UnknownFamily(name.to_string()));
    }
    let mut obj = match params {
        serde_json::Value::Object(m) => m.clone(),
        serde_json::Value::Null => serde_json::Map::new(),
        other => {
            return Err(Error::config(
                name,
                format!("parameters must be a table, got {other}"),
            ))
        }
    };
    obj.insert("family".into(), serde_json::Value::String(name.into()));
    let family: Family = serde_json::from_value(serde_json::Value::Object(obj))
        .map_err(|e| Error::config(name, e.to_string()))?;
    family.build(grid)
}

fn singular_field(n: usize, alpha: f64, strength: f64, eps: f64) -> Field<[f64; 2]> {
    Field::function(move |x, _| {
        let r = if n == 1 { x[0].abs() } else { x[0].hypot(x[1]) };
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let f = strength / r.max(eps).powf(alpha);
        [f * x[0], f * x[1]]
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

fn part_exponents(
    p: Option<Exponent>,
    q: Option<Exponent>,
    n: usize,
    default: ExponentPair,
) -> Result<ExponentPair> {
    let e = ExponentPair::new(p.unwrap_or(default.p), q.unwrap_or(default.q));
    e.check_admissible(n)?;
    Ok(e)
}

impl DriftPartSpec {
    fn build(&self, grid: &Cylinder, index: usize) -> Result<DriftPart> {
        let n = grid.dim();
        let n_exp = Exponent::integer(n as i64)?;
        match *self {
            DriftPartSpec::Singular {
                alpha,
                strength,
                eps_factor,
                p,
                q,
            } => {
                check_alpha(alpha)?;
                let strength = strength.unwrap_or(n as f64 + 1.0);
                let e = part_exponents(p, q, n, ExponentPair::new(n_exp, Exponent::Infinite))?;
                Ok(DriftPart {
                    name: format!("singular_{index}"),
                    field: singular_field(n, alpha, strength, eps_factor * grid.hx()),
                    exponents: Some(e),
                    singularity: (alpha >= 1.0).then(|| PointSingularity::at_origin(alpha - 1.0)),
                })
            }
            DriftPartSpec::Constant { b1, b2, p, q } => {
                let e = part_exponents(p, q, n, ExponentPair::new(Exponent::Infinite, Exponent::Infinite))?;
                let b = if n == 1 { [b1, 0.0] } else { [b1, b2] };
                Ok(DriftPart {
                    name: format!("constant_{index}"),
                    field: Field::Constant(b),
                    exponents: Some(e),
                    singularity: None,
                })
            }
            DriftPartSpec::Oscillating {
                amplitude,
                frequency,
                p,
                q,
            } => {
                let e = part_exponents(p, q, n, ExponentPair::new(Exponent::Infinite, Exponent::Infinite))?;
                let field = Field::function(move |x, t| {
                    if n == 1 {
                        [amplitude * (frequency * PI * x[0] + t).sin(), 0.0]
                    } else {
                        [
                            amplitude * (frequency * PI * x[1] + t).sin(),
                            amplitude * (frequency * PI * x[0] - t).cos(),
                        ]
                    }
                });
                Ok(DriftPart {
                    name: format!("oscillating_{index}"),
                    field,
                    exponents: Some(e),
                    singularity: None,
                })
            }
        }
    }
}

fn load_field(path: &Option<String>, grid: &Cylinder, default: f64) -> Result<Field<f64>> {
    match path {
        None => Ok(Field::Constant(default)),
        Some(p) => {
            let u = GridFunction::read_csv_file(p, Some(*grid))?;
            Ok(Field::Sampled(Arc::new(u.into_values())))
        }
    }
}

/// `sin` of a random plane wave in `(x, t)`.
fn random_wave(rng: &mut ChaCha8Rng) -> impl Fn(&[f64; 2], f64) -> f64 + Send + Sync + Clone {
    let k1 = rng.gen_range(0.0..3.0);
    let k2 = rng.gen_range(0.0..3.0);
    let w = rng.gen_range(0.0..3.0);
    let phase = rng.gen_range(0.0..2.0 * PI);
    move |x: &[f64; 2], t: f64| (k1 * x[0] + k2 * x[1] + w * t + phase).sin()
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Heat { .. } => "heat",
            Family::Constant { .. } => "constant",
            Family::SingularDrift { .. } => "singular_drift",
            Family::Anisotropic { .. } => "anisotropic",
            Family::Variable { .. } => "variable",
            Family::Composite { .. } => "composite",
            Family::Random { .. } => "random",
            Family::Custom { .. } => "custom",
        }
    }

    /// The exact singular-drift operator with `alpha = 2` on the grid.
    pub fn counterexample() -> Family {
        Family::SingularDrift {
            alpha: 2.0,
            strength: None,
            c: 1.0,
            eps_factor: 0.5,
        }
    }

    /// Instantiates the coefficient fields on `grid`.
    pub fn build(&self, grid: &Cylinder) -> Result<OperatorCoefficients> {
        let n = grid.dim();
        let base = OperatorCoefficients::heat(grid).with_label(self.name());
        let op = match self {
            Family::Heat { sigma, c } => base
                .with_sigma(Field::Constant(*sigma))
                .with_c(Field::Constant(*c)),
            Family::Constant {
                sigma,
                a11,
                a12,
                a22,
                b1,
                b2,
                c,
            } => {
                let b = if n == 1 { [*b1, 0.0] } else { [*b1, *b2] };
                let mut op = base
                    .with_sigma(Field::Constant(*sigma))
                    .with_a(Field::Constant(Sym2::new(*a11, *a12, *a22)))
                    .with_c(Field::Constant(*c));
                if b != [0.0, 0.0] {
                    op = op.with_part(DriftPart::new("b", Field::Constant(b)));
                }
                op
            }
            Family::SingularDrift {
                alpha,
                strength,
                c,
                eps_factor,
            } => {
                let part = DriftPartSpec::Singular {
                    alpha: *alpha,
                    strength: *strength,
                    eps_factor: *eps_factor,
                    p: None,
                    q: None,
                }
                .build(grid, 0)?;
                base.with_c(Field::Constant(*c)).with_part(DriftPart {
                    name: "singular".into(),
                    ..part
                })
            }
            Family::Anisotropic {
                a11,
                a12,
                a22,
                variation,
                sigma,
                b1,
                b2,
                c,
            } => {
                if variation.abs() >= 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "anisotropic variation must lie in (-1, 1), got {variation}"
                    )));
                }
                let (a0, v, r, t_end) = (
                    Sym2::new(*a11, *a12, *a22),
                    *variation,
                    grid.radius(),
                    grid.final_time(),
                );
                let a = if v == 0.0 {
                    Field::Constant(a0)
                } else {
                    Field::function(move |x, t| {
                        let f = 1.0 + v * (PI * x[0] / r).sin() * (PI * t / t_end).cos();
                        Sym2::new(f * a0.a11, f * a0.a12, f * a0.a22)
                    })
                };
                let b = if n == 1 { [*b1, 0.0] } else { [*b1, *b2] };
                let mut op = base
                    .with_sigma(Field::Constant(*sigma))
                    .with_a(a)
                    .with_c(Field::Constant(*c));
                if b != [0.0, 0.0] {
                    op = op.with_part(DriftPart::new("b", Field::Constant(b)));
                }
                op
            }
            Family::Variable {
                amplitude,
                drift,
                c,
            } => {
                let (m, d, c0) = (*amplitude, *drift, *c);
                if !(0.0..1.0).contains(&m) {
                    return Err(Error::InvalidParameter(format!(
                        "variable amplitude must lie in [0, 1), got {m}"
                    )));
                }
                base.with_sigma(Field::function(move |x, t| {
                    1.0 + m * (PI * t).sin() * (0.5 * PI * x[0]).cos()
                }))
                .with_a(Field::function(move |x, t| {
                    Sym2::new(
                        1.0 + m * x[0] * x[0],
                        0.25 * m * (x[0] * x[1]).tanh(),
                        1.0 + m * (x[1] + t).cos().powi(2),
                    )
                }))
                .with_c(Field::function(move |x, t| c0 * (1.0 + m * (PI * t + x[0]).cos())))
                .with_part(DriftPart::new(
                    "b",
                    Field::function(move |x, t| {
                        [d * (PI * x[1] + t).cos(), d * (PI * x[0]).sin()]
                    }),
                ))
            }
            Family::Composite { parts, sigma, c } => {
                let mut op = base
                    .with_sigma(Field::Constant(*sigma))
                    .with_c(Field::Constant(*c));
                for (i, p) in parts.iter().enumerate() {
                    op = op.with_part(p.build(grid, i)?);
                }
                op
            }
            Family::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
                let s0 = rng.gen_range(0.5..2.0);
                let ws = random_wave(&mut rng);
                let a1 = rng.gen_range(0.75..3.0);
                let w1 = random_wave(&mut rng);
                let a2 = rng.gen_range(0.75..3.0);
                let w2 = random_wave(&mut rng);
                let rho = if n == 2 { rng.gen_range(-0.8..0.8) } else { 0.0 };
                let c0 = rng.gen_range(0.3..2.0);
                let wc = random_wave(&mut rng);
                let bb = [rng.gen_range(-3.5..3.5), rng.gen_range(-3.5..3.5)];
                let wb1 = random_wave(&mut rng);
                let wb2 = random_wave(&mut rng);
                base.with_label(format!("random_{}", seed.unwrap_or(0)))
                    .with_sigma(Field::function(move |x, t| s0 * (1.0 + 0.3 * ws(x, t))))
                    .with_a(Field::function(move |x, t| {
                        let d1 = a1 * (1.0 + 0.3 * w1(x, t));
                        let d2 = a2 * (1.0 + 0.3 * w2(x, t));
                        Sym2::new(d1, rho * d1.min(d2), d2)
                    }))
                    .with_c(Field::function(move |x, t| c0 * (1.0 + 0.3 * wc(x, t))))
                    .with_part(DriftPart::new(
                        "b",
                        Field::function(move |x, t| {
                            [bb[0] * wb1(x, t), if n == 2 { bb[1] * wb2(x, t) } else { 0.0 }]
                        }),
                    ))
            }
            Family::Custom {
                sigma,
                a11,
                a12,
                a22,
                b1,
                b2,
                c,
            } => {
                let sample = |f: &Field<f64>, i: usize| f.eval(grid, i);
                let (f11, f12, f22) = (
                    load_field(a11, grid, 1.0)?,
                    load_field(a12, grid, 0.0)?,
                    load_field(a22, grid, 1.0)?,
                );
                let a = Field::Sampled(Arc::new(
                    (0..grid.n_nodes())
                        .map(|i| Sym2::new(sample(&f11, i), sample(&f12, i), sample(&f22, i)))
                        .collect(),
                ));
                let (g1, g2) = (load_field(b1, grid, 0.0)?, load_field(b2, grid, 0.0)?);
                let b = Field::Sampled(Arc::new(
                    (0..grid.n_nodes())
                        .map(|i| [sample(&g1, i), if n == 2 { sample(&g2, i) } else { 0.0 }])
                        .collect(),
                ));
                base.with_sigma(load_field(sigma, grid, 1.0)?)
                    .with_a(a)
                    .with_c(load_field(c, grid, 0.0)?)
                    .with_part(DriftPart::new("b", b))
            }
        };
        op.validate_shape()?;
        Ok(op)
    }
}

impl OperatorCoefficients {
    /// Structural checks that do not depend on the rescaling constant.
    fn validate_shape(&self) -> Result<()> {
        let n = self.dim();
        for node in 0..self.grid().n_nodes() {
            let s = self.sigma_at(node);
            if !(s >= 0.0) {
                return Err(Error::InvalidParameter(format!("sigma = {s} at node {node}")));
            }
            let a = self.a_at(node);
            if !a.is_psd(n) {
                return Err(Error::InvalidParameter(format!(
                    "diffusion matrix {a:?} is not positive semidefinite at node {node}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::NondegeneracyBounds;
    use serde_json::json;

    #[test]
    fn counterexample_family_matches_formula() {
        for n in [1, 2] {
            let g = Cylinder::new(n, 1.0, 1.0, 9, 3).unwrap();
            let op = Family::counterexample().build(&g).unwrap();
            let s = g.space_index(7, if n == 2 { 5 } else { 0 });
            let x = g.point(s);
            let r2 = x[0] * x[0] + x[1] * x[1];
            let b = op.b_at(g.node(s, 1));
            let expect = (n as f64 + 1.0) * x[0] / r2;
            assert!((b[0] - expect).abs() < 1e-14);
            assert_eq!(op.c_at(0), 1.0);
            assert_eq!(op.b_at(g.node(g.origin().unwrap(), 1)), [0.0, 0.0]);
        }
    }

    #[test]
    fn named_construction() {
        let g = Cylinder::new(2, 1.0, 1.0, 5, 3).unwrap();
        let heat = builtin_coefficient_families("heat", &json!({}), &g).unwrap();
        assert_eq!(heat.sigma_at(0), 1.0);
        assert!(heat.parts.is_empty());
        let comp = builtin_coefficient_families(
            "composite",
            &json!({"parts": [
                {"kind": "singular", "alpha": 1.5, "p": "2", "q": "inf"},
                {"kind": "constant", "b1": 1.0, "p": "inf", "q": "inf"}
            ]}),
            &g,
        )
        .unwrap();
        assert_eq!(comp.parts.len(), 2);
        assert!(matches!(
            builtin_coefficient_families("nope", &json!({}), &g),
            Err(Error::UnknownFamily(_))
        ));
        assert!(builtin_coefficient_families("singular_drift", &json!({"alpha": 3.0}), &g).is_err());
    }

    #[test]
    fn random_family_is_certified() {
        for n in [1, 2] {
            let g = Cylinder::new(n, 1.0, 1.0, 9, 5).unwrap();
            for seed in 0..20 {
                let op = Family::Random { seed: Some(seed) }.build(&g).unwrap();
                let b = NondegeneracyBounds::certify(&op).unwrap();
                assert!(b.delta >= 0.1, "seed {seed}: {}", b.delta);
            }
        }
    }
}

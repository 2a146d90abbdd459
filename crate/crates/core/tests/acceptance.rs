//! Acceptance run: one line per criterion, then a nonzero exit if any
//! criterion failed other than those known to be unattainable as stated.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use maxprin::barrier::drift_magnitude;
use maxprin::estimates::{drift_norm_refinement, estimate_report, increments_persist};
use maxprin::operator::DriftPartSpec;
use maxprin::scenario::bundled;
use maxprin::{
    bony_check, build_composite_barrier, check_degeneracy_condition, mixed_norm, mixed_norm_oracle,
    singular_counterexample, solve_barrier_problem, solve_forward, solve_forward_many,
    solve_radial_monge_ampere, verify_barrier_inequality, BarrierOptions, BarrierTarget, Cylinder,
    DegeneracyBranch, Exponent, ExponentPair, Family, Field, GridFunction, MixedNormSpec,
    NondegeneracyBounds, NormOrder, OperatorCoefficients, PositivitySet, RadialSource, SchemeConfig,
    Sym2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    passed: bool,
    detail: String,
    /// Failure explained by a sub-check that cannot hold as worded.
    known_unattainable: bool,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Outcome {
            passed,
            detail,
            known_unattainable: false,
        }
    }
}

struct Criterion {
    id: u8,
    name: &'static str,
    /// Runtime budget in seconds, when the criterion states one.
    budget: Option<f64>,
    run: fn() -> Outcome,
}

fn pair(s: &str) -> ExponentPair {
    ExponentPair::parse(s).unwrap()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/")
}

fn counterexample() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut growth_ok = true;
    for n in [1usize, 2] {
        let s = bundled("remark41_alpha2").unwrap();
        let g = Cylinder::new(n, s.grid.radius, s.grid.final_time, 81, 81).unwrap();
        let r = singular_counterexample(s.counterexample.alpha, &g).unwrap();
        let steps = drift_norm_refinement(2.0, n, &[41, 81, 161, 321]).unwrap();
        let growth: Vec<f64> = steps.iter().filter_map(|s| s.growth).collect();
        let shape = r.u_at_origin_final == 0.5
            && r.boundary_max <= 1e-12
            && r.lu_max_away <= -0.4
            && r.h_norm.divergent
            && steps.iter().all(|s| s.norm.divergent)
            && increments_persist(&steps, 0.9);
        let literal = growth.len() == 3 && growth.iter().all(|&x| x >= 1.5);
        ok &= shape;
        growth_ok &= literal;
        notes.push(format!(
            "n={n}: U(0,1)={} bdry_max={:.1e} LU_away<={:.3} divergent={} growth={}",
            r.u_at_origin_final,
            r.boundary_max,
            r.lu_max_away,
            r.h_norm.divergent,
            fmt_list(&growth)
        ));
    }
    if !growth_ok {
        notes.push("growth >= 1.5x per halving unattainable: ||h||^n diverges like ln(1/eps)".into());
    }
    Outcome {
        passed: ok && growth_ok,
        detail: notes.join("; "),
        known_unattainable: ok && !growth_ok,
    }
}

/// `||h||_{n,inf}` for `b = (n + 1) x / |x|^alpha` over the unit ball:
/// `((n + 1)^n |S^{n-1}| / (n (2 - alpha)))^(1/n)`.
fn alpha_norm_oracle(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    let sphere = if n == 1 { 2.0 } else { 2.0 * PI };
    ((nf + 1.0).powi(n as i32) * sphere / (nf * (2.0 - alpha))).powf(1.0 / nf)
}

fn sharpness() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [1usize, 2] {
        let steps = drift_norm_refinement(1.5, n, &[41, 81, 161]).unwrap();
        let vals: Vec<f64> = steps.iter().map(|s| s.norm.value).collect();
        let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        let spread = hi / lo - 1.0;
        let exact = alpha_norm_oracle(n, 1.5);
        let err = vals.iter().map(|v| (v / exact - 1.0).abs()).fold(0.0, f64::max);
        ok &= spread < 0.02 && err < 0.01 && steps.iter().all(|s| !s.norm.divergent);
        notes.push(format!(
            "n={n}: ||h||={} oracle={exact:.4} spread={:.2}% err={:.2}%",
            fmt_list(&vals),
            100.0 * spread,
            100.0 * err
        ));
    }
    Outcome::new(ok, notes.join("; "))
}

fn random_forcing(g: &Cylinder, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> GridFunction {
    GridFunction::new(*g, (0..g.n_nodes()).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

fn maximum_principle() -> Outcome {
    let results: Vec<(bool, f64, f64, f64)> = (0..50u64)
        .into_par_iter()
        .map(|k| {
            let n = 1 + (k % 2) as usize;
            let g = Cylinder::new(n, 1.0, 1.0, 41, 41).unwrap();
            let op = Family::Random { seed: Some(1000 + k) }.build(&g).unwrap();
            let delta = NondegeneracyBounds::certify(&op).map_or(0.0, |b| b.delta);
            let mut rng = ChaCha8Rng::seed_from_u64(k);
            let f_neg = random_forcing(&g, &mut rng, -1.0, 0.0);
            let f1 = random_forcing(&g, &mut rng, -1.0, 1.0);
            let f2 = f1.axpby(1.0, &random_forcing(&g, &mut rng, 0.0, 1.0), 1.0).unwrap();
            let sols = solve_forward_many(&op, &[f_neg, f1, f2], &SchemeConfig::default()).unwrap();
            let max_neg = sols[0].u.max().unwrap();
            let worst_cmp = (0..g.n_nodes())
                .map(|i| sols[1].u.value(i) - sols[2].u.value(i))
                .fold(f64::NEG_INFINITY, f64::max);
            let ok = delta >= 0.1 && max_neg <= 1e-12 && worst_cmp <= 1e-12;
            (ok, delta, max_neg, worst_cmp)
        })
        .collect();
    let passed = results.iter().filter(|r| r.0).count();
    let min_delta = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let max_neg = results.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    let cmp = results.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max);
    Outcome::new(
        passed == results.len(),
        format!(
            "{passed}/{} operators; min delta={min_delta:.3} max u(f<=0)={max_neg:.1e} max(u1-u2)={cmp:.1e}",
            results.len()
        ),
    )
}

fn random_exponent(rng: &mut ChaCha8Rng) -> Exponent {
    match rng.gen_range(0..6) {
        0 => Exponent::Infinite,
        1 | 2 => {
            let b = rng.gen_range(2..=3);
            Exponent::finite(rng.gen_range(b..=17), b).unwrap()
        }
        _ => Exponent::integer(rng.gen_range(1..=8)).unwrap(),
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

fn norm_case(seed: u64) -> (bool, bool, bool, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=2);
    let nx = rng.gen_range(3..=16);
    let nt = rng.gen_range(2..=16);
    let g = Cylinder::new(n, rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), nx, nt).unwrap();
    let u = random_forcing(&g, &mut rng, -2.0, 2.0);
    let (p, q) = (random_exponent(&mut rng), random_exponent(&mut rng));
    let order = [NormOrder::Auto, NormOrder::SpaceOuter, NormOrder::TimeOuter][rng.gen_range(0..3)];
    let mut spec = MixedNormSpec::new(ExponentPair::new(p, q)).with_order(order);
    if rng.gen_bool(0.5) {
        spec = spec.with_weight(random_forcing(&g, &mut rng, 0.1, 3.0));
    }
    if rng.gen_bool(0.5) {
        let m = (0..g.n_nodes()).map(|_| rng.gen_bool(0.6)).collect();
        spec = spec.with_restriction(PositivitySet::from_membership(&g, m).unwrap());
    }
    let oracle = close(mixed_norm(&u, &spec).unwrap(), mixed_norm_oracle(&u, &spec).unwrap(), 1e-12);

    let e = ExponentPair::new(p, q);
    let minkowski_case = matches!((p, q), (Exponent::Finite(a), Exponent::Finite(b)) if a < b)
        || (!p.is_infinite() && q.is_infinite());
    let minkowski = !minkowski_case || {
        let so = mixed_norm(&u, &MixedNormSpec::new(e).with_order(NormOrder::SpaceOuter)).unwrap();
        let to = mixed_norm(&u, &MixedNormSpec::new(e).with_order(NormOrder::TimeOuter)).unwrap();
        to <= so * (1.0 + 1e-12)
    };

    let fx: Vec<f64> = (0..g.n_space()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let gt: Vec<f64> = (0..g.nt()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let prod = GridFunction::new(g, (0..g.n_nodes()).map(|i| fx[g.split(i).0] * gt[g.split(i).1]).collect()).unwrap();
    let space = GridFunction::new(g, (0..g.n_nodes()).map(|i| fx[g.split(i).0]).collect()).unwrap();
    let time = GridFunction::new(g, (0..g.n_nodes()).map(|i| gt[g.split(i).1]).collect()).unwrap();
    let nf = mixed_norm(&space, &MixedNormSpec::new(ExponentPair::new(p, Exponent::Infinite))).unwrap();
    let ng = mixed_norm(&time, &MixedNormSpec::new(ExponentPair::new(Exponent::Infinite, q))).unwrap();
    let separable = close(mixed_norm(&prod, &MixedNormSpec::new(e).with_order(order)).unwrap(), nf * ng, 1e-10);
    (oracle, minkowski, minkowski_case, separable)
}

fn mixed_norms() -> Outcome {
    let cases: Vec<_> = (0..200u64).into_par_iter().map(norm_case).collect();
    let oracle = cases.iter().filter(|c| c.0).count();
    let mink = cases.iter().filter(|c| c.2).count();
    let mink_ok = cases.iter().filter(|c| c.2 && c.1).count();
    let sep = cases.iter().filter(|c| c.3).count();
    Outcome::new(
        oracle == 200 && mink_ok == mink && sep == 200,
        format!("oracle {oracle}/200, Minkowski {mink_ok}/{mink} (p<q cases), separable {sep}/200"),
    )
}

/// Ten 1D families satisfying every branch used below (sigma, c > 0).
fn ratio_families() -> Vec<(&'static str, Family)> {
    let constant = |a11: f64, b1: f64, c: f64| Family::Constant {
        sigma: 1.0,
        a11,
        a12: 0.0,
        a22: 1.0,
        b1,
        b2: 0.0,
        c,
    };
    let singular = |alpha: f64| Family::SingularDrift {
        alpha,
        strength: Some(1.0),
        c: 1.0,
        eps_factor: 0.5,
    };
    vec![
        ("heat", Family::Heat { sigma: 1.0, c: 1.0 }),
        ("constant_diffusive", constant(2.0, 0.0, 1.0)),
        ("constant_drift", constant(0.5, -2.0, 2.0)),
        ("singular_0.5", singular(0.5)),
        ("singular_1.0", singular(1.0)),
        ("singular_1.5", singular(1.5)),
        (
            "anisotropic",
            Family::Anisotropic {
                a11: 1.5,
                a12: 0.0,
                a22: 1.0,
                variation: 0.3,
                sigma: 1.0,
                b1: 0.5,
                b2: 0.0,
                c: 1.0,
            },
        ),
        (
            "variable",
            Family::Variable {
                amplitude: 0.5,
                drift: 1.0,
                c: 0.5,
            },
        ),
        (
            "composite",
            Family::Composite {
                parts: vec![
                    DriftPartSpec::Singular {
                        alpha: 1.5,
                        strength: Some(1.0),
                        eps_factor: 0.5,
                        p: None,
                        q: None,
                    },
                    DriftPartSpec::Oscillating {
                        amplitude: 1.0,
                        frequency: 1.0,
                        p: None,
                        q: None,
                    },
                ],
                sigma: 1.0,
                c: 1.0,
            },
        ),
        ("random", Family::Random { seed: Some(7) }),
    ]
}

/// Per family: ratios `[pair][mesh]` and `||h||_{1,inf}` at the finest mesh.
fn family_ratios(family: &Family, pairs: &[ExponentPair], meshes: &[usize]) -> (Vec<Vec<f64>>, f64, bool) {
    let mut ratios = vec![Vec::new(); pairs.len()];
    let mut h = 0.0;
    let mut valid = true;
    let e1 = pair("1,inf");
    for &nx in meshes {
        let g = Cylinder::new(1, 1.0, 1.0, nx, nx).unwrap();
        let op = family.build(&g).unwrap();
        let f = GridFunction::from_fn(&g, |x, t| 1.0 + 0.5 * (PI * x[0]).cos() * (2.0 * t).sin()).unwrap();
        let cfg = SchemeConfig::default();
        let u = solve_forward(&op, &f, &cfg).unwrap().u;
        for (k, e) in pairs.iter().enumerate() {
            let r = estimate_report(&op, &u, e, &[e1], &cfg.stencil()).unwrap();
            valid &= r.hypotheses_valid;
            ratios[k].push(r.ratio);
            h = r.drift_norms[0].value;
        }
    }
    (ratios, h, valid)
}

fn ratio_stability() -> Outcome {
    let pairs = ["2,2", "1,inf", "inf,1", "inf,inf"].map(pair);
    let meshes = [41, 81, 161];
    let fams = ratio_families();
    let rows: Vec<_> = fams
        .par_iter()
        .map(|(_, f)| family_ratios(f, &pairs, &meshes))
        .collect();
    let mut ok = true;
    let mut worst = (1.0f64, String::new());
    for ((name, _), (ratios, _, valid)) in fams.iter().zip(&rows) {
        ok &= *valid;
        for (e, r) in pairs.iter().zip(ratios) {
            let finite = r.iter().all(|x| x.is_finite() && *x > 0.0);
            let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
            ok &= finite && hi / lo < 2.0;
            if hi / lo > worst.0 {
                worst = (hi / lo, format!("{name} {e}"));
            }
        }
    }
    let mut shared = 0;
    let mut shared_ok = 0;
    let mut worst_shared = 1.0f64;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (hi_, hj) = (rows[i].1, rows[j].1);
            let near = (hi_ == 0.0 && hj == 0.0) || (hi_ - hj).abs() <= 0.1 * hi_.max(hj);
            if !near {
                continue;
            }
            shared += 1;
            let spread = (0..pairs.len())
                .map(|k| {
                    let (a, b) = (rows[i].0[k][2], rows[j].0[k][2]);
                    a.max(b) / a.min(b)
                })
                .fold(1.0f64, f64::max);
            worst_shared = worst_shared.max(spread);
            if spread < 10.0 {
                shared_ok += 1;
            }
        }
    }
    ok &= shared_ok == shared;
    Outcome::new(
        ok,
        format!(
            "{} families x {} pairs; max ratio variation {:.3}x ({}); {shared_ok}/{shared} pairs of families with ||h|| within 10% agree to {:.2}x",
            fams.len(),
            pairs.len(),
            worst.0,
            worst.1,
            worst_shared
        ),
    )
}

type Forcing = fn(&[f64], f64) -> f64;

fn rescaling() -> Outcome {
    let kappa = 2.0;
    let forcings: [(&str, Forcing); 5] = [
        ("constant", |_, _| 1.0),
        ("bump", |x, t| (-(x[0] * x[0]) / 0.125 - (t - 0.5).powi(2) / 0.125).exp()),
        ("separable", |x, t| (1.0 - x[0] * x[0]) * (1.0 + t)),
        ("oscillating", |x, t| 0.5 + (3.0 * x[0]).sin() * (2.0 * t).cos()),
        ("late", |x, t| t * t * (PI * x[0] / 2.0).cos()),
    ];
    let op_on = |nx: usize| -> (Cylinder, OperatorCoefficients) {
        let g = Cylinder::new(1, 1.0, 1.0, nx, nx).unwrap();
        let op = Family::Constant {
            sigma: 1.0,
            a11: 1.0,
            a12: 0.0,
            a22: 1.0,
            b1: 0.5,
            b2: 0.0,
            c: -1.0,
        }
        .build(&g)
        .unwrap()
        .with_kappa(kappa);
        (g, op)
    };
    let e0 = pair("2,2");
    let cfg = SchemeConfig::default();
    let results: Vec<(bool, f64)> = forcings
        .par_iter()
        .map(|(_, f)| {
            let reports: Vec<_> = [41, 81, 161]
                .iter()
                .map(|&nx| {
                    let (g, op) = op_on(nx);
                    let f = GridFunction::from_fn(&g, f).unwrap();
                    maxprin::verify_bound(&op, &f, &e0, &[], &cfg).unwrap()
                })
                .collect();
            let ratios: Vec<f64> = reports.iter().map(|r| r.ratio_rescaled).collect();
            let c_obs = ratios.iter().copied().fold(0.0, f64::max);
            let c_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let stable = c_obs.is_finite() && c_obs < 2.0 * c_min;
            let mut ok = stable;
            let mut worst = 0.0f64;
            for r in &reports {
                let bound = (kappa * 1.0f64).exp() * r.rhs_norm * c_obs;
                ok &= r.hypotheses_valid && r.lhs_sup <= bound;
                worst = worst.max(r.lhs_sup / bound);
            }
            (ok, worst)
        })
        .collect();
    let passed = results.iter().filter(|r| r.0).count();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Outcome::new(
        passed == forcings.len(),
        format!("{passed}/5 forcings; max sup u / (exp(kappa T) rhs C_obs) = {worst:.4}"),
    )
}

fn bony() -> Outcome {
    let results: Vec<(bool, f64)> = (0..20u64)
        .into_par_iter()
        .map(|k| {
            let n = 1 + (k % 2) as usize;
            let nx = if n == 1 { 81 } else { 41 };
            let g = Cylinder::new(n, 1.0, 1.0, nx, 41).unwrap();
            let op = Family::Random { seed: Some(2000 + k) }.build(&g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(k);
            // Peak at a random interior node.
            let snap = |v: f64, h: f64| (v / h).round() * h;
            let x0 = [snap(rng.gen_range(-0.4..0.4), g.hx()), snap(rng.gen_range(-0.4..0.4), g.hx())];
            let t0 = snap(rng.gen_range(0.3..0.9), g.ht());
            let (m, a, b) = (rng.gen_range(0.0..1.0), rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0));
            let wiggle = rng.gen_range(0.0..0.2);
            let u = GridFunction::from_fn(&g, move |x, t| {
                let d2: f64 = x.iter().zip(&x0).map(|(xi, ci)| (xi - ci).powi(2)).sum();
                m - a * d2 - b * (t - t0).powi(2) - wiggle * d2 * (3.0 * t).cos().powi(2)
            })
            .unwrap();
            let r = bony_check(&op, &u).unwrap();
            (r.applicable && r.passed, r.ratio_at_max.unwrap_or(f64::NAN) + r.tolerance)
        })
        .collect();
    let passed = results.iter().filter(|r| r.0).count();
    let margin = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Outcome::new(
        passed == 20,
        format!("{passed}/20 applicable and passing; min (ratio at max + tol) = {margin:.3}"),
    )
}

fn barrier() -> Outcome {
    let mut notes = Vec::new();
    let (c0, r_outer) = (1.3, 1.1);
    let profile = |steps: usize| {
        solve_radial_monge_ampere(&RadialSource::Constant { value: c0 }, 1, r_outer, steps).unwrap()
    };
    let b = profile(1000);
    let rel = b
        .r
        .iter()
        .zip(&b.dv)
        .skip(1)
        .map(|(&r, &dv)| (dv / (2.0 * c0 * r).sinh() - 1.0).abs())
        .fold(0.0, f64::max);
    let err = |steps: usize| {
        let b = profile(steps);
        b.r.iter()
            .zip(&b.dv)
            .map(|(&r, &dv)| (dv - (2.0 * c0 * r).sinh()).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2, e3) = (err(25), err(50), err(100));
    let orders = [(e1 / e2).log2(), (e2 / e3).log2()];
    let mut ok = rel <= 1e-6 && orders.iter().all(|o| (o - 4.0).abs() <= 0.5);
    notes.push(format!("sinh rel err {rel:.1e}, order {}", fmt_list(&orders)));

    for n in [1usize, 2] {
        let nx = if n == 1 { 81 } else { 41 };
        let g = Cylinder::new(n, 1.0, 1.0, nx, 41).unwrap();
        let cfg = SchemeConfig::default();
        let op = Family::Composite {
            parts: vec![
                DriftPartSpec::Singular {
                    alpha: 1.5,
                    strength: Some(1.0),
                    eps_factor: 0.5,
                    p: None,
                    q: None,
                },
                DriftPartSpec::Oscillating {
                    amplitude: 2.0,
                    frequency: 1.0,
                    p: None,
                    q: None,
                },
            ],
            sigma: 1.0,
            c: 1.0,
        }
        .build(&g)
        .unwrap();
        let declared: Vec<String> = op.parts.iter().map(|p| p.exponents.unwrap().to_string()).collect();
        let abs_b = drift_magnitude(&op, None).unwrap();
        let solved = solve_barrier_problem(&op, &abs_b, &cfg).unwrap().u;
        let direct = verify_barrier_inequality(&op, &solved, BarrierTarget::AbsDrift, &cfg.stencil()).unwrap();
        let composite = build_composite_barrier(&op, 0, &cfg, &BarrierOptions::default()).unwrap();
        ok &= direct.passed && composite.verdict.passed;
        notes.push(format!(
            "n={n} parts {}: solver B margin {:.1e}, composite B margin {:.3} (tol {:.2})",
            declared.join("+"),
            direct.min_margin,
            composite.verdict.min_margin,
            composite.verdict.tolerance
        ));
    }
    Outcome::new(ok, notes.join("; "))
}

/// Coefficients vanishing at the node `x = 0, t = 0`, per requested term.
fn degenerate_operator(g: &Cylinder, trace: bool, sigma: bool, c: bool) -> OperatorCoefficients {
    let mut op = OperatorCoefficients::heat(g).with_c(Field::Constant(1.0));
    if trace {
        op = op.with_a(Field::function(|x, _| Sym2::scalar(x[0] * x[0])));
    }
    if sigma {
        op = op.with_sigma(Field::function(|_, t| t));
    }
    if c {
        op = op.with_c(Field::Constant(0.0));
    }
    op
}

fn degeneracy_branches() -> Outcome {
    let mut ok = true;
    let mut covered = 0;
    for n in [1usize, 2] {
        let g = Cylinder::new(n, 1.0, 1.0, 9, 5).unwrap();
        let pairs: [&str; 7] = if n == 1 {
            ["1,inf", "inf,1", "inf,inf", "inf,2", "2,inf", "2,2", "3,3"]
        } else {
            ["2,inf", "inf,1", "inf,inf", "inf,2", "3,inf", "4,2", "6,3"]
        };
        let good = Family::Heat { sigma: 1.0, c: 1.0 }.build(&g).unwrap();
        for (p, branch) in pairs.iter().zip(DegeneracyBranch::ALL) {
            let (t, s, c) = match branch {
                DegeneracyBranch::Trace => (true, false, false),
                DegeneracyBranch::Sigma => (false, true, false),
                DegeneracyBranch::C => (false, false, true),
                DegeneracyBranch::CPlusSigma => (false, true, true),
                DegeneracyBranch::TracePlusC => (true, false, true),
                DegeneracyBranch::TracePlusSigma => (true, true, false),
                DegeneracyBranch::All => (true, true, true),
            };
            let bad = degenerate_operator(&g, t, s, c);
            let e = pair(p);
            let pass = check_degeneracy_condition(&good, &e).unwrap();
            let fail = check_degeneracy_condition(&bad, &e).unwrap();
            let row = pass.branch == branch && fail.branch == branch && pass.passed && !fail.passed;
            ok &= row && bad.validate().is_ok();
            covered += row as usize;
        }
    }
    Outcome::new(ok, format!("{covered}/14 branch rows (7 branches x n in {{1,2}}) pass once and fail once"))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "counterexample reproduction", budget: Some(10.0), run: counterexample },
        Criterion { id: 2, name: "hypothesis-side sharpness", budget: Some(30.0), run: sharpness },
        Criterion { id: 3, name: "discrete maximum principle", budget: Some(60.0), run: maximum_principle },
        Criterion { id: 4, name: "mixed-norm oracle equivalence", budget: None, run: mixed_norms },
        Criterion { id: 5, name: "bound-ratio stability", budget: None, run: ratio_stability },
        Criterion { id: 6, name: "exponential rescaling", budget: Some(30.0), run: rescaling },
        Criterion { id: 7, name: "Bony check", budget: None, run: bony },
        Criterion { id: 8, name: "barrier ODE and verification", budget: None, run: barrier },
        Criterion { id: 9, name: "degeneracy-branch coverage", budget: None, run: degeneracy_branches },
    ];
    let start = Instant::now();
    let mut hard_failures = 0;
    for c in &criteria {
        let t = Instant::now();
        let mut o = (c.run)();
        let secs = t.elapsed().as_secs_f64();
        if let Some(b) = c.budget {
            if secs >= b {
                o.passed = false;
                o.known_unattainable = false;
                o.detail.push_str(&format!("; over budget {b} s"));
            }
        }
        let status = match (o.passed, o.known_unattainable) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known unattainable)",
            (false, false) => "FAIL",
        };
        if !o.passed && !o.known_unattainable {
            hard_failures += 1;
        }
        println!("criterion {} [{}] {status} in {secs:.2} s: {}", c.id, c.name, o.detail);
    }
    println!("acceptance finished in {:.2} s", start.elapsed().as_secs_f64());
    if hard_failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use std::f64::consts::PI;

use clap::ValueEnum;
use pureconn::connection::{classify_definite, curvature_forms, definiteness_sampled, Classification, LeviCivitaField};
use pureconn::curvature::{chiral_decompose, riemann, ChiralDecomp, Orientation};
use pureconn::exterior::{sd_frame, sd_split, Sym3};
use pureconn::gauge::{
    coulomb_equivalence_check, field_perturbation, gauge_operator_apply, hessian_gauge_fixed_integrand,
    hessian_plebanski_integrand, hessian_pre_gauge_integrand, hodge_identity_residual, p_map, projection_pi,
    projection_pi_closed, q_map, quaternion_residual, random_gauge_fixed_jet, symbol_check, symbol_gap, symbol_matrix,
    AlgebraOneForm, Background, FrozenBackground, GaugeContext, GaugeTolerance, ModelBackground,
};
use pureconn::models::{ModelKind, ModelMetric, Point4, Scheme};
use pureconn::plebanski::{
    action_density, lc_pure_data, plebanski_residuals, theta_point, theta_star, torsion_residual, Tangent,
};
use pureconn::quadrature::{
    hessian_quadratic_form, horizontal_bump_jet, integrate_s4, l2_norm_sq, pure_gauge_jet, BumpField, QuadratureRule,
    SphereRule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::report::CheckRecord;
use crate::settings::Settings;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Definiteness,
    Reconstruction,
    Plebanski,
    Hessian,
    Gauge,
    Symbol,
    Action,
}

pub fn run(suite: Suite, s: &Settings) -> Vec<CheckRecord> {
    match suite {
        Suite::Identities => per_model(s, &all_models(), identities),
        Suite::Definiteness => {
            let mut models = all_models();
            models.push(ModelMetric::new(ModelKind::Cp2).reversed());
            per_model(s, &models, definiteness)
        }
        Suite::Reconstruction => per_model(s, &round_models(), reconstruction),
        Suite::Plebanski => per_model(s, &round_models(), plebanski),
        Suite::Hessian => per_model(s, &round_models(), hessian),
        Suite::Gauge => per_model(s, &definite_models(), gauge),
        Suite::Symbol => symbol(s),
        Suite::Action => action(s),
    }
}

fn all_models() -> Vec<ModelMetric> {
    ModelKind::ALL.iter().map(|k| ModelMetric::new(*k)).collect()
}

fn round_models() -> Vec<ModelMetric> {
    vec![
        ModelMetric::new(ModelKind::Sphere4),
        ModelMetric::new(ModelKind::Hyperbolic4),
    ]
}

fn definite_models() -> Vec<ModelMetric> {
    let mut m = round_models();
    m.push(ModelMetric::new(ModelKind::Cp2).reversed());
    m
}

type ModelSuite = fn(&Settings, &ModelMetric) -> Vec<CheckRecord>;

fn per_model(s: &Settings, defaults: &[ModelMetric], f: ModelSuite) -> Vec<CheckRecord> {
    s.models(defaults).par_iter().flat_map_iter(|m| f(s, m)).collect()
}

/// Independent stream per check name, so results do not depend on scheduling.
fn rng_for(s: &Settings, name: &str) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(s.seed);
    let h = Sha256::digest(name.as_bytes());
    r.set_stream(u64::from_le_bytes(h[..8].try_into().expect("8 bytes")));
    r
}

fn inputs(s: &Settings, m: Option<&ModelMetric>, extra: Value) -> Value {
    let mut v = json!({
        "seed": s.seed,
        "points": s.points,
        "h": s.h,
        "scheme": s.scheme,
        "lambda": s.lambda,
    });
    if let Some(m) = m {
        v["model"] = json!(m.name());
    }
    if let (Value::Object(a), Value::Object(b)) = (&mut v, extra) {
        a.extend(b);
    }
    v
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

fn random_form<R: Rng>(rng: &mut R) -> AlgebraOneForm {
    std::array::from_fn(|_| std::array::from_fn(|_| normal(rng)))
}

fn max_abs(a: &AlgebraOneForm) -> f64 {
    a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn max_diff(a: &AlgebraOneForm, b: &AlgebraOneForm) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Runs `body` over `n` seeded points, keeping the worst value; any error fails the check.
fn worst_over<F>(name: &str, s: &Settings, m: &ModelMetric, tol: f64, body: F) -> CheckRecord
where
    F: Fn(&mut ChaCha8Rng, Point4) -> pureconn::Result<f64>,
{
    let inp = inputs(s, Some(m), Value::Null);
    let mut rng = rng_for(s, name);
    let mut worst = 0.0f64;
    for _ in 0..s.points {
        let p = m.sample_point(&mut rng);
        match body(&mut rng, p) {
            Ok(v) => worst = if v.is_nan() { f64::NAN } else { worst.max(v) },
            Err(e) => return CheckRecord::failed(name, inp, format!("at {p:?}: {e}")),
        }
    }
    CheckRecord::bounded(name, inp, worst, tol, json!({ "points": s.points }))
}

pub fn rows(s: &Sym3) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| s.get(i, j)))
}

pub fn decomposition(m: &ModelMetric, p: &Point4, scheme: Scheme) -> pureconn::Result<ChiralDecomp> {
    chiral_decompose(&riemann(&m.metric_jet(p, scheme)?)?, Orientation::Positive)
}

pub fn decomposition_values(d: &ChiralDecomp) -> Value {
    json!({
        "rplus": rows(&d.rplus),
        "rminus": rows(&d.rminus),
        "c": d.c,
        "scalar": d.scalar,
        "rplus_spectrum": d.rplus.eigenvalues(),
        "rminus_spectrum": d.rminus.eigenvalues(),
    })
}

fn identities(s: &Settings, m: &ModelMetric) -> Vec<CheckRecord> {
    let scheme = match s.scheme() {
        Ok(sc) => sc,
        Err(e) => return vec![CheckRecord::failed("identities", Value::Null, e)],
    };
    let n = m.name();
    let trace = |plus: bool| {
        move |_: &mut ChaCha8Rng, p: Point4| -> pureconn::Result<f64> {
            let d = decomposition(m, &p, scheme)?;
            let t = if plus { d.rplus.trace() } else { d.rminus.trace() };
            Ok((d.scalar - 4.0 * t).abs())
        }
    };
    let tol_id = s.tol(if scheme == Scheme::Analytic { 1e-6 } else { 1e-3 });
    vec![
        worst_over(
            &format!("identities/{n}/scalar_vs_trace_plus"),
            s,
            m,
            tol_id,
            trace(true),
        ),
        worst_over(
            &format!("identities/{n}/scalar_vs_trace_minus"),
            s,
            m,
            tol_id,
            trace(false),
        ),
        worst_over(
            &format!("identities/{n}/jet_fd_vs_analytic"),
            s,
            m,
            s.tol(1e-6),
            |_, p| {
                let a = m.metric_jet(&p, Scheme::Analytic)?;
                let f = m.metric_jet(&p, Scheme::FiniteDifference(s.h))?;
                Ok(f.relative_difference(&a))
            },
        ),
        worst_over(
            &format!("identities/{n}/riemann_symmetry"),
            s,
            m,
            s.tol(1e-8),
            |_, p| Ok(riemann(&m.metric_jet(&p, scheme)?)?.symmetry_defect()),
        ),
    ]
}

fn expected_class(m: &ModelMetric) -> Option<Classification> {
    if m.bump.is_some() {
        return None;
    }
    Some(match (m.kind, m.reversed) {
        (ModelKind::Sphere4, false) => Classification::Positive,
        (ModelKind::Hyperbolic4, false) => Classification::Negative,
        (ModelKind::Cp2, true) => Classification::Positive,
        (ModelKind::Sphere4 | ModelKind::Hyperbolic4, true) => return None,
        _ => Classification::Indefinite,
    })
}

fn definiteness(s: &Settings, m: &ModelMetric) -> Vec<CheckRecord> {
    let n = m.name();
    let inp = inputs(s, Some(m), Value::Null);
    let field = LeviCivitaField { model: *m };
    let mut rng = rng_for(s, &format!("definiteness/{n}"));
    let tol = s.tol(1e-8);
    let (mut counts, mut mismatches) = ([0usize; 3], 0usize);
    for _ in 0..s.points {
        let p = m.sample_point(&mut rng);
        let jet = match curvature_forms(&field, &p, Scheme::Analytic) {
            Ok(j) => j,
            Err(e) => return vec![CheckRecord::failed(format!("definiteness/{n}/classification"), inp, e)],
        };
        let c = classify_definite(&jet, tol).classification;
        counts[c as usize] += 1;
        if (c != Classification::Indefinite) != definiteness_sampled(&jet, 500, 1e-6, &mut rng) {
            mismatches += 1;
        }
    }
    let expected = expected_class(m);
    let agree = match expected {
        Some(e) => counts[e as usize] == s.points,
        None => counts.contains(&s.points),
    };
    let cls = CheckRecord {
        name: format!("definiteness/{n}/classification"),
        inputs_digest: crate::report::digest(&inp),
        values: json!({
            "positive": counts[0],
            "negative": counts[1],
            "indefinite": counts[2],
            "expected": expected.map(|e| format!("{e:?}").to_lowercase()),
        }),
        tolerance: Some(tol),
        pass: agree,
        error: None,
    };
    let oracle = CheckRecord::bounded(
        format!("definiteness/{n}/sampled_oracle_mismatches"),
        inp,
        mismatches as f64,
        0.0,
        json!({ "points": s.points }),
    );
    vec![cls, oracle]
}

fn lambda_for(s: &Settings, m: &ModelMetric) -> f64 {
    s.lambda.unwrap_or_else(|| m.lambda())
}

fn reconstruction(s: &Settings, m: &ModelMetric) -> Vec<CheckRecord> {
    let n = m.name();
    let lambda = lambda_for(s, m);
    let field = LeviCivitaField { model: *m };
    vec![
        worst_over(
            &format!("reconstruction/{n}/metric_relative_error"),
            s,
            m,
            s.tol(1e-4),
            |_, p| {
                let (_, d) = lc_pure_data(m, &p, lambda)?;
                let g = m.metric(&p);
                let num: f64 = (0..16).map(|k| (d.g[k / 4][k % 4] - g[k / 4][k % 4]).powi(2)).sum();
                let den: f64 = g.iter().flatten().map(|v| v * v).sum();
                Ok((num / den).sqrt())
            },
        ),
        worst_over(
            &format!("reconstruction/{n}/anti_self_dual_fraction"),
            s,
            m,
            s.tol(1e-5),
            |_, p| {
                let jet = curvature_forms(&field, &p, Scheme::FiniteDifference(s.h))?;
                let g = m.metric(&p);
                let (mut minus, mut total) = (0.0, 0.0);
                for f in &jet.f {
                    let (_, fm) = sd_split(&g, f)?;
                    minus += fm.iter().map(|v| v * v).sum::<f64>();
                    total += f.iter().map(|v| v * v).sum::<f64>();
                }
                Ok((minus / total).sqrt())
            },
        ),
    ]
}

fn plebanski(s: &Settings, m: &ModelMetric) -> Vec<CheckRecord> {
    let n = m.name();
    let lambda = lambda_for(s, m);
    let field = LeviCivitaField { model: *m };
    let tol = s.tol(1e-5);
    let residual = |k: usize| {
        let field = &field;
        move |_: &mut ChaCha8Rng, p: Point4| -> pureconn::Result<f64> {
            let (pp, _) = theta_point(field, &p, lambda, s.h)?;
            Ok(plebanski_residuals(&pp).norms()[k])
        }
    };
    let sigma = |x: &Point4| sd_frame(&m.metric(x)).map(|f| f.sigma);
    vec![
        worst_over(&format!("plebanski/{n}/connection_residual"), s, m, tol, residual(0)),
        worst_over(&format!("plebanski/{n}/psi_residual"), s, m, tol, residual(1)),
        worst_over(&format!("plebanski/{n}/sigma_residual"), s, m, tol, residual(2)),
        worst_over(&format!("plebanski/{n}/torsion"), s, m, tol, |_, p| {
            let r = torsion_residual(&field, &sigma, &p, s.h)?;
            Ok(r.iter().flatten().map(|v| v * v).sum::<f64>().sqrt())
        }),
    ]
}

fn hessian(s: &Settings, m: &ModelMetric) -> Vec<CheckRecord> {
    let n = m.name();
    let lambda = lambda_for(s, m);
    let bg = ModelBackground { model: *m, lambda };
    let field = LeviCivitaField { model: *m };
    let mut out = vec![
        worst_over(
            &format!("hessian/{n}/plebanski_vs_pre_gauge"),
            s,
            m,
            s.tol(1e-8),
            |rng, p| {
                let (pp, d) = theta_point(&field, &p, lambda, s.h)?;
                let ctx = GaugeContext::from_pure(&d)?;
                let (c0, c1) = (random_form(rng), random_form(rng));
                let b = move |x: &Point4| -> pureconn::Result<AlgebraOneForm> {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    Ok(std::array::from_fn(|i| {
                        std::array::from_fn(|k| c0[i][k] + c1[i][k] * (x[k] + r2))
                    }))
                };
                let pj = field_perturbation(&bg.coeffs(&p)?, &b, &p, s.h)?;
                let (sigma, phi) = theta_star(&d.f, &pj.d_a, lambda, s.h)?;
                let lhs = hessian_plebanski_integrand(&pp, &Tangent { a: pj, sigma, phi });
                let rhs = hessian_pre_gauge_integrand(&ctx, &pj)?;
                Ok((lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE))
            },
        ),
        worst_over(
            &format!("hessian/{n}/pre_gauge_vs_gauge_fixed"),
            s,
            m,
            s.tol(1e-8),
            |rng, p| {
                let ctx = bg.context(&p)?;
                let pj = random_gauge_fixed_jet(&ctx, rng)?;
                let fixed = hessian_gauge_fixed_integrand(&ctx, &pj, GaugeTolerance::default())?;
                let pre = hessian_pre_gauge_integrand(&ctx, &pj)? / ctx.mu;
                Ok((fixed - pre).abs() / fixed.abs().max(f64::MIN_POSITIVE))
            },
        ),
    ];
    if lambda < 0.0 {
        out.push(worst_over(
            &format!("hessian/{n}/positivity_violations"),
            s,
            m,
            0.0,
            |rng, p| {
                let ctx = bg.context(&p)?;
                let pj = random_gauge_fixed_jet(&ctx, rng)?;
                let v = hessian_gauge_fixed_integrand(&ctx, &pj, GaugeTolerance::default())?;
                Ok(if v >= ctx.norm_sq(&pj.a) { 0.0 } else { 1.0 })
            },
        ));
        out.push(gauge_degeneracy(s, &bg));
    }
    out
}

fn gauge_degeneracy(s: &Settings, bg: &ModelBackground) -> CheckRecord {
    let name = format!("hessian/{}/gauge_degeneracy", bg.model.name());
    let bump = BumpField {
        center: [0.1, 0.0, -0.1, 0.05],
        radius: 0.3,
    };
    let inp = inputs(s, Some(&bg.model), json!({ "bump": bump }));
    let mut rng = rng_for(s, &name);
    let xi0: [f64; 3] = std::array::from_fn(|_| normal(&mut rng));
    let v0: [f64; 4] = std::array::from_fn(|_| normal(&mut rng));
    let b0 = random_form(&mut rng);
    let run = || -> pureconn::Result<(f64, f64, f64, f64)> {
        let rule = QuadratureRule::ball(bump.center, bump.radius, 4, SphereRule::default())?;
        let support = (bump.center, bump.radius);
        let gauge = |x: &Point4| pure_gauge_jet(&bg.model, &bump, &xi0, &v0, x, s.h);
        let generic = |x: &Point4| horizontal_bump_jet(bg, &bump, &b0, x, s.h);
        Ok((
            hessian_quadratic_form(bg, &gauge, support, &rule)?,
            l2_norm_sq(bg, &gauge, &rule)?,
            hessian_quadratic_form(bg, &generic, support, &rule)?,
            l2_norm_sq(bg, &generic, &rule)?,
        ))
    };
    match run() {
        Ok((hg, ng, hn, nn)) => {
            let ratio = (hg / ng).abs() / (hn / nn);
            let mut r = CheckRecord::bounded(
                name,
                inp,
                ratio,
                s.tol(1e-3),
                json!({ "pure_gauge": hg / ng, "generic": hn / nn }),
            );
            r.pass &= hn > 0.0;
            r
        }
        Err(e) => CheckRecord::failed(name, inp, e),
    }
}

fn gauge(s: &Settings, m: &ModelMetric) -> Vec<CheckRecord> {
    let n = m.name();
    let lambda = lambda_for(s, m);
    let bg = ModelBackground { model: *m, lambda };
    let alg = s.tol(1e-10);
    let with_ctx = |f: fn(&GaugeContext, &mut ChaCha8Rng) -> pureconn::Result<f64>| {
        let bg = &bg;
        move |rng: &mut ChaCha8Rng, p: Point4| -> pureconn::Result<f64> { f(&bg.context(&p)?, rng) }
    };
    let mut out = vec![
        worst_over(
            &format!("gauge/{n}/quaternion"),
            s,
            m,
            s.tol(1e-8),
            with_ctx(|c, _| Ok(quaternion_residual(&c.j))),
        ),
        worst_over(
            &format!("gauge/{n}/p_after_q"),
            s,
            m,
            alg,
            with_ctx(|c, rng| {
                let v: [f64; 4] = std::array::from_fn(|_| normal(rng));
                let pq = p_map(c, &q_map(c, &v));
                let fl = c.md.flat(&v);
                Ok((0..4).map(|k| (pq[k] + c.lambda * fl[k]).abs()).fold(0.0, f64::max))
            }),
        ),
        worst_over(
            &format!("gauge/{n}/projection_routes"),
            s,
            m,
            alg,
            with_ctx(|c, rng| {
                let a = random_form(rng);
                Ok(max_diff(&projection_pi(c, &a)?, &projection_pi_closed(c, &a)) / (1.0 + max_abs(&a)))
            }),
        ),
        worst_over(
            &format!("gauge/{n}/projection_idempotent"),
            s,
            m,
            alg,
            with_ctx(|c, rng| {
                let a = random_form(rng);
                let pa = projection_pi(c, &a)?;
                let p_pa = p_map(c, &pa).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                Ok(max_diff(&projection_pi(c, &pa)?, &pa).max(p_pa) / (1.0 + max_abs(&a)))
            }),
        ),
        worst_over(
            &format!("gauge/{n}/projection_kills_image"),
            s,
            m,
            alg,
            with_ctx(|c, rng| {
                let v: [f64; 4] = std::array::from_fn(|_| normal(rng));
                let q = q_map(c, &v);
                Ok(max_abs(&projection_pi(c, &q)?) / (1.0 + max_abs(&q)))
            }),
        ),
        worst_over(
            &format!("gauge/{n}/horizontal_identities"),
            s,
            m,
            alg,
            with_ctx(|c, rng| {
                let a = projection_pi(c, &random_form(rng))?;
                Ok(hodge_identity_residual(c, &a) / (1.0 + max_abs(&a) * c.mu))
            }),
        ),
    ];
    let name = format!("gauge/{n}/coulomb");
    let inp = inputs(s, Some(m), Value::Null);
    let mut rng = rng_for(s, &name);
    let b0 = random_form(&mut rng);
    let p = [0.2, 0.1, -0.05, 0.0];
    let bump = BumpField {
        center: [0.1, 0.0, 0.0, -0.1],
        radius: 0.4,
    };
    let field = |x: &Point4| -> pureconn::Result<AlgebraOneForm> {
        let beta = bump.value(x);
        projection_pi(&bg.context(x)?, &b0.map(|r| r.map(|v| v * beta)))
    };
    out.push(match coulomb_equivalence_check(&bg, &field, &p, s.h, 1e-8) {
        Ok(c) => CheckRecord::bounded(
            name,
            inp,
            c.relative_gap(),
            s.tol(1e-4),
            json!({ "lhs": c.lhs, "rhs": c.rhs }),
        ),
        Err(e) => CheckRecord::failed(name, inp, e),
    });
    out
}

/// Random `Y` with trace `lambda` and the sign of `lambda`.
fn random_y<R: Rng>(rng: &mut R, lambda: f64) -> Sym3 {
    let b = nalgebra::Matrix3::from_fn(|_, _| normal(rng));
    let m = Sym3::from_matrix(&(b * b.transpose() + nalgebra::Matrix3::identity() * 0.1));
    m.scaled(lambda / m.trace())
}

fn symbol(s: &Settings) -> Vec<CheckRecord> {
    let lambda = s.lambda.unwrap_or(-3.0);
    let width = s.points.to_string().len();
    let mut out: Vec<CheckRecord> = (0..s.points)
        .into_par_iter()
        .map(|k| {
            let name = format!("symbol/instance_{k:0width$}");
            let inp = inputs(s, None, json!({ "instance": k }));
            let mut rng = rng_for(s, &name);
            let ctx = match GaugeContext::flat(random_y(&mut rng, lambda)) {
                Ok(c) => c,
                Err(e) => return CheckRecord::failed(name, inp, e),
            };
            let alpha: [f64; 4] = std::array::from_fn(|_| normal(&mut rng));
            let xi: [f64; 3] = std::array::from_fn(|_| normal(&mut rng));
            let run = || -> pureconn::Result<(pureconn::gauge::SymbolCheck, f64)> {
                Ok((
                    symbol_check(&ctx, &alpha, &xi)?,
                    symbol_matrix(&ctx, &alpha)?.singular_values().min(),
                ))
            };
            match run() {
                Ok((c, sv)) => {
                    let scale = 1.0 + c.formula.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    let gap = (0..3).map(|i| (c.direct[i] - c.formula[i]).abs()).fold(0.0, f64::max) / scale;
                    let mut r = CheckRecord::bounded(
                        name,
                        inp,
                        gap,
                        s.tol(1e-10),
                        json!({
                            "direct": c.direct,
                            "formula": c.formula,
                            "predicted_gap": symbol_gap(&ctx),
                            "min_singular_value": sv,
                            "elliptic": c.elliptic,
                        }),
                    );
                    r.pass &= sv >= c.gap * (1.0 - 1e-10) && c.elliptic;
                    r
                }
                Err(e) => CheckRecord::failed(name, inp, e),
            }
        })
        .collect();
    out.push(plane_wave(s));
    out
}

/// `d*Πd` on a plane wave over the frozen flat background with `Y = −Id`.
fn plane_wave(s: &Settings) -> CheckRecord {
    let name = "symbol/plane_wave".to_string();
    let omega = 64.0;
    let inp = inputs(s, None, json!({ "omega": omega }));
    let run = || -> pureconn::Result<[f64; 3]> {
        let bg = FrozenBackground {
            ctx: GaugeContext::flat(Sym3::identity().scaled(-1.0))?,
            a: [[0.0; 4]; 3],
        };
        let wave = move |x: &Point4| {
            let ph: f64 = x.iter().map(|c| 0.5 * omega * c).sum();
            (
                [ph.cos(), 0.0, 0.0],
                std::array::from_fn(|i| if i == 0 { [-0.5 * omega * ph.sin(); 4] } else { [0.0; 4] }),
            )
        };
        gauge_operator_apply(&bg, &wave, &[0.0; 4], 1e-3 / omega)
    };
    match run() {
        Ok(r) => {
            let want = 2.0 / 3.0 * omega * omega;
            let err = ((r[0] - want).powi(2) + r[1].powi(2) + r[2].powi(2)).sqrt() / want;
            CheckRecord::bounded(
                name,
                inp,
                err,
                s.tol(1e-6),
                json!({ "applied": r, "symbol": [want, 0.0, 0.0] }),
            )
        }
        Err(e) => CheckRecord::failed(name, inp, e),
    }
}

fn action(s: &Settings) -> Vec<CheckRecord> {
    let m = ModelMetric::new(ModelKind::Sphere4);
    let lambda = s.lambda.unwrap_or(3.0);
    let settings = s.s4();
    let inp = inputs(s, Some(&m), json!({ "radial": s.radial, "angular": s.angular }));
    let tol = s.tol(5e-3);
    let volume_want = 8.0 * PI * PI / 3.0 * 9.0 / (lambda * lambda);
    let action_want = lambda / 2.0 * volume_want;
    let vol = integrate_s4(&|x| lc_pure_data(&m, x, lambda).map(|(_, d)| d.mu), &settings);
    let act = integrate_s4(
        &|x| lc_pure_data(&m, x, lambda).map(|(_, d)| action_density(&d)),
        &settings,
    );
    let record = |name: &str, r: pureconn::Result<pureconn::quadrature::S4Integral>, want: f64| match r {
        Ok(v) => CheckRecord::bounded(
            name,
            inp.clone(),
            (v.value - want).abs() / want.abs(),
            tol,
            json!({ "integral": v.value, "expected": want, "node_halving_change": v.relative_change }),
        ),
        Err(e) => CheckRecord::failed(name, inp.clone(), e),
    };
    vec![
        record("action/sphere4/volume", vol, volume_want),
        record("action/sphere4/action", act, action_want),
    ]
}

/// Returns an error message if the selected model cannot run `suite`.
pub fn validate(suite: Suite, s: &Settings) -> Option<String> {
    let m = s
        .model
        .as_deref()
        .map(|name| crate::settings::parse_model(name).expect("validated"));
    match (suite, m) {
        (Suite::Action, Some(m)) if m.kind != ModelKind::Sphere4 || m.reversed => {
            Some("the action suite integrates over the round four-sphere only".into())
        }
        (Suite::Reconstruction | Suite::Plebanski | Suite::Hessian | Suite::Gauge, Some(m))
            if expected_class(&m).is_none_or(|c| c == Classification::Indefinite) =>
        {
            Some(format!(
                "model `{}` has no definite Levi-Civita connection on Λ⁺",
                m.name()
            ))
        }
        _ => None,
    }
}

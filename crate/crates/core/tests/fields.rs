//! Checks that need whole fields rather than single jets: integrated Hessians,
//! the Coulomb identity and the gauge-fixing operator.

use pureconn::gauge::{coulomb_equivalence_check, gauge_operator_apply, AlgebraOneForm, Background, ModelBackground};
use pureconn::models::{ModelKind, ModelMetric};
use pureconn::quadrature::{
    hessian_quadratic_form, horizontal_bump_jet, l2_norm_sq, pure_gauge_jet, BumpField, QuadratureRule, SphereRule,
};
use pureconn::Error;

const B0: AlgebraOneForm = [[0.7, -0.2, 0.4, 0.1], [0.3, 0.5, -0.6, 0.2], [-0.1, 0.2, 0.3, 0.8]];

fn hyperbolic() -> ModelBackground {
    ModelBackground::new(ModelMetric::new(ModelKind::Hyperbolic4))
}

#[test]
fn pure_gauge_bumps_are_null_directions() {
    let bg = hyperbolic();
    let bump = BumpField {
        center: [0.1, 0.0, -0.1, 0.05],
        radius: 0.3,
    };
    let rule = QuadratureRule::ball(
        bump.center,
        bump.radius,
        8,
        SphereRule {
            n_chi: 8,
            n_theta: 8,
            n_phi: 16,
        },
    )
    .unwrap();
    let support = (bump.center, bump.radius);
    let h = 1e-3;

    let gauge = |x: &[f64; 4]| pure_gauge_jet(&bg.model, &bump, &[0.4, -0.3, 0.8], &[0.2, 0.5, -0.1, 0.3], x, h);
    let generic = |x: &[f64; 4]| horizontal_bump_jet(&bg, &bump, &B0, x, h);

    let hg = hessian_quadratic_form(&bg, &gauge, support, &rule).unwrap();
    let ng = l2_norm_sq(&bg, &gauge, &rule).unwrap();
    let hn = hessian_quadratic_form(&bg, &generic, support, &rule).unwrap();
    let nn = l2_norm_sq(&bg, &generic, &rule).unwrap();
    assert!(hn > 0.0, "generic horizontal bump gives {hn}");
    let ratio = (hg / ng).abs() / (hn / nn);
    assert!(ratio <= 1e-3, "gauge {hg}/{ng}, generic {hn}/{nn}, ratio {ratio:.3e}");
}

#[test]
fn support_outside_the_rule_is_rejected() {
    let bg = hyperbolic();
    let rule = QuadratureRule::ball([0.0; 4], 0.2, 2, SphereRule::default()).unwrap();
    let zero = |_: &[f64; 4]| Ok(pureconn::gauge::PerturbationJet::zero());
    let err = hessian_quadratic_form(&bg, &zero, ([0.0; 4], 0.3), &rule);
    assert!(matches!(err, Err(Error::Support)));
}

fn coulomb_gap(kind: ModelKind, center: [f64; 4], p: [f64; 4]) -> f64 {
    let bg = ModelBackground::new(ModelMetric::new(kind));
    let bump = BumpField { center, radius: 0.4 };
    let field = |x: &[f64; 4]| -> pureconn::Result<AlgebraOneForm> {
        let beta = bump.value(x);
        pureconn::gauge::projection_pi(&bg.context(x)?, &B0.map(|r| r.map(|v| v * beta)))
    };
    let check = coulomb_equivalence_check(&bg, &field, &p, 1e-3, 1e-8).unwrap();
    assert!(check.lhs.iter().any(|v| v.abs() > 1e-3), "{check:?}");
    check.relative_gap()
}

#[test]
fn coulomb_identity_on_hyperbolic_space() {
    let gap = coulomb_gap(ModelKind::Hyperbolic4, [0.1, 0.0, 0.0, -0.1], [0.2, 0.1, -0.05, 0.0]);
    assert!(gap <= 1e-4, "{gap:.3e}");
}

#[test]
fn coulomb_identity_on_the_sphere() {
    let gap = coulomb_gap(ModelKind::Sphere4, [0.3, -0.2, 0.1, 0.0], [0.4, -0.1, 0.0, 0.15]);
    assert!(gap <= 1e-4, "{gap:.3e}");
}

#[test]
fn coulomb_needs_a_horizontal_field() {
    let bg = hyperbolic();
    let field = |_: &[f64; 4]| Ok(B0);
    let err = coulomb_equivalence_check(&bg, &field, &[0.1, 0.0, 0.0, 0.0], 1e-3, 1e-8);
    assert!(matches!(err, Err(Error::Precondition(_))));
    let zero = |_: &[f64; 4]| Ok([[0.0; 4]; 3]);
    let check = coulomb_equivalence_check(&bg, &zero, &[0.1, 0.0, 0.0, 0.0], 1e-3, 1e-8).unwrap();
    assert_eq!(check.lhs, [0.0; 3]);
    assert_eq!(check.rhs, [0.0; 3]);
}

#[test]
fn gauge_operator_converges_at_fourth_order() {
    let bg = hyperbolic();
    let bump = BumpField {
        center: [0.0, 0.1, 0.0, 0.0],
        radius: 0.6,
    };
    let xi0 = [0.5, -1.0, 0.3];
    let xi = |x: &[f64; 4]| {
        let s = bump.section(x, &xi0);
        (s.xi, s.dxi)
    };
    let p = [0.05, 0.0, 0.1, -0.05];
    let hs = [0.04, 0.02, 0.01];
    let v: Vec<[f64; 3]> = hs
        .iter()
        .map(|&h| gauge_operator_apply(&bg, &xi, &p, h).unwrap())
        .collect();
    assert!(v[2].iter().all(|c| c.is_finite()));
    let d = |a: &[f64; 3], b: &[f64; 3]| (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt();
    let ratio = d(&v[0], &v[1]) / d(&v[1], &v[2]);
    assert!((ratio - 16.0).abs() < 2.0, "Richardson ratio {ratio}, values {v:?}");
}

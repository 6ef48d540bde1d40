//! Catalog of closed-form metrics on single coordinate charts, with exact (forward-mode)
//! and finite-difference jets.

use std::fmt;
use std::str::FromStr;

use num_dual::HyperDual64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::reflect_metric;
use crate::fd;
use crate::scalar::{c, Mat4, Scalar};

pub type Point4 = [f64; 4];

/// How derivatives are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Scheme {
    /// Forward-mode automatic differentiation of the closed-form evaluators.
    Analytic,
    /// Fourth-order central differences with the given step.
    FiniteDifference(f64),
}

impl Scheme {
    pub const DEFAULT_STEP: f64 = 1e-3;

    pub fn default_fd() -> Self {
        Scheme::FiniteDifference(Self::DEFAULT_STEP)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Box { lo: Point4, hi: Point4 },
    Ball { center: Point4, radius: f64 },
}

impl Domain {
    /// Distance from `x` to the boundary; negative outside.
    pub fn clearance(&self, x: &Point4) -> f64 {
        match self {
            Domain::Box { lo, hi } => (0..4)
                .map(|i| (x[i] - lo[i]).min(hi[i] - x[i]))
                .fold(f64::INFINITY, f64::min),
            Domain::Ball { center, radius } => {
                let r2: f64 = (0..4).map(|i| (x[i] - center[i]).powi(2)).sum();
                radius - r2.sqrt()
            }
        }
    }

    pub fn contains(&self, x: &Point4) -> bool {
        self.clearance(x) > 0.0
    }
}

/// A coordinate chart. The coordinate four-form `dx¹∧dx²∧dx³∧dx⁴` is positive when
/// `orientation == 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub name: String,
    pub domain: Domain,
    pub orientation: i8,
}

impl ChartSpec {
    pub fn check(&self, x: &Point4) -> Result<()> {
        if self.domain.contains(x) && x.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Domain {
                chart: self.name.clone(),
                point: *x,
            })
        }
    }

    pub fn check_margin(&self, x: &Point4, margin: f64) -> Result<()> {
        self.check(x)?;
        if self.domain.clearance(x) < margin {
            return Err(Error::Margin {
                chart: self.name.clone(),
                point: *x,
                margin,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Flat,
    Sphere4,
    Hyperbolic4,
    Cp2,
    S2xS2,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Flat,
        ModelKind::Sphere4,
        ModelKind::Hyperbolic4,
        ModelKind::Cp2,
        ModelKind::S2xS2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Flat => "flat",
            ModelKind::Sphere4 => "sphere4",
            ModelKind::Hyperbolic4 => "hyperbolic4",
            ModelKind::Cp2 => "cp2-fubini-study",
            ModelKind::S2xS2 => "s2xs2",
        }
    }

    /// Einstein constant at unit scale.
    pub fn unit_lambda(self) -> f64 {
        match self {
            ModelKind::Flat => 0.0,
            ModelKind::Sphere4 => 3.0,
            ModelKind::Hyperbolic4 => -3.0,
            ModelKind::Cp2 => 6.0,
            ModelKind::S2xS2 => 1.0,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(ModelKind::Flat),
            "sphere4" | "sphere" => Ok(ModelKind::Sphere4),
            "hyperbolic4" | "hyperbolic" => Ok(ModelKind::Hyperbolic4),
            "cp2-fubini-study" | "cp2" => Ok(ModelKind::Cp2),
            "s2xs2" => Ok(ModelKind::S2xS2),
            other => Err(Error::Argument(format!("unknown model `{other}`"))),
        }
    }
}

/// Multiplies a metric by `1 + amplitude·exp(−|x − center|²/width²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalBump {
    pub center: Point4,
    pub width: f64,
    pub amplitude: f64,
}

impl ConformalBump {
    fn factor<D: Scalar>(&self, x: &[D; 4]) -> D {
        let mut r2 = D::zero();
        for i in 0..4 {
            let d = x[i] - self.center[i];
            r2 += d * d;
        }
        D::one() + (-r2 / (self.width * self.width)).exp() * self.amplitude
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetric {
    pub kind: ModelKind,
    /// Length scale `L`; the metric is `L²` times the unit model.
    pub scale: f64,
    /// Pulled back by `x¹ ↦ −x¹`, i.e. the same manifold with the opposite orientation.
    pub reversed: bool,
    pub bump: Option<ConformalBump>,
}

impl ModelMetric {
    pub fn new(kind: ModelKind) -> Self {
        ModelMetric {
            kind,
            scale: 1.0,
            reversed: false,
            bump: None,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn reversed(mut self) -> Self {
        self.reversed = !self.reversed;
        self
    }

    pub fn with_bump(mut self, bump: ConformalBump) -> Self {
        self.bump = Some(bump);
        self
    }

    pub fn name(&self) -> String {
        let mut s = self.kind.name().to_string();
        if self.reversed {
            s.push_str("-reversed");
        }
        if self.bump.is_some() {
            s.push_str("-bumped");
        }
        s
    }

    /// Einstein constant `Λ` (meaningless once a bump is applied).
    pub fn lambda(&self) -> f64 {
        self.kind.unit_lambda() / (self.scale * self.scale)
    }

    pub fn is_einstein(&self) -> bool {
        self.bump.is_none()
    }

    pub fn chart(&self) -> ChartSpec {
        let domain = match self.kind {
            ModelKind::Flat => Domain::Box {
                lo: [-1e3; 4],
                hi: [1e3; 4],
            },
            ModelKind::Hyperbolic4 => Domain::Ball {
                center: [0.0; 4],
                radius: 1.0,
            },
            _ => Domain::Ball {
                center: [0.0; 4],
                radius: 1e5,
            },
        };
        ChartSpec {
            name: self.name(),
            domain,
            orientation: 1,
        }
    }

    /// Radius of the ball that random test points are drawn from.
    pub fn sample_radius(&self) -> f64 {
        match self.kind {
            ModelKind::Hyperbolic4 => 0.8,
            _ => 1.5,
        }
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point4 {
        sample_ball(rng, self.sample_radius())
    }

    /// The metric at `x` with no domain check; generic so that it can be differentiated.
    pub fn metric<D: Scalar>(&self, x: &[D; 4]) -> Mat4<D> {
        let y = if self.reversed { [-x[0], x[1], x[2], x[3]] } else { *x };
        let mut g = unit_metric(self.kind, &y);
        if self.reversed {
            g = reflect_metric(&g);
        }
        let mut s: D = c(self.scale * self.scale);
        if let Some(b) = &self.bump {
            s *= b.factor(x);
        }
        g.map(|row| row.map(|v| v * s))
    }

    pub fn evaluate_metric(&self, p: &Point4) -> Result<Mat4> {
        self.chart().check(p)?;
        let g = self.metric(p);
        crate::error::finite_or(g.iter().flatten().all(|v| v.is_finite()), g, "metric")
    }

    pub fn metric_jet(&self, p: &Point4, scheme: Scheme) -> Result<MetricJet> {
        let chart = self.chart();
        let jet = match scheme {
            Scheme::Analytic => {
                chart.check(p)?;
                analytic_jet(self, p)
            }
            Scheme::FiniteDifference(h) => {
                chart.check_margin(p, fd::REACH * h)?;
                let f = |x: [f64; 4]| self.metric(&x);
                MetricJet {
                    g: f(*p),
                    dg: fd::gradient(&f, *p, h),
                    ddg: fd::hessian(&f, *p, h),
                    point: *p,
                }
            }
        };
        if !jet.is_finite() {
            return Err(Error::Numeric(format!("non-finite metric jet at {p:?}")));
        }
        Ok(jet)
    }
}

fn analytic_jet(model: &ModelMetric, p: &Point4) -> MetricJet {
    let mut jet = MetricJet {
        g: model.metric(p),
        dg: [[[0.0; 4]; 4]; 4],
        ddg: [[[[0.0; 4]; 4]; 4]; 4],
        point: *p,
    };
    for k in 0..4 {
        for l in k..4 {
            let x: [HyperDual64; 4] = std::array::from_fn(|i| {
                HyperDual64::new(
                    p[i],
                    if i == k { 1.0 } else { 0.0 },
                    if i == l { 1.0 } else { 0.0 },
                    0.0,
                )
            });
            let g = model.metric(&x);
            for i in 0..4 {
                for j in 0..4 {
                    if l == k {
                        jet.dg[k][i][j] = g[i][j].eps1;
                    }
                    jet.ddg[l][k][i][j] = g[i][j].eps1eps2;
                    jet.ddg[k][l][i][j] = g[i][j].eps1eps2;
                }
            }
        }
    }
    jet
}

fn conformal<D: Scalar>(f: D) -> Mat4<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { f } else { D::zero() }))
}

fn unit_metric<D: Scalar>(kind: ModelKind, x: &[D; 4]) -> Mat4<D> {
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
    match kind {
        ModelKind::Flat => conformal(D::one()),
        ModelKind::Sphere4 => {
            let d = D::one() + r2;
            conformal(c::<D>(4.0) / (d * d))
        }
        ModelKind::Hyperbolic4 => {
            let d = D::one() - r2;
            conformal(c::<D>(4.0) / (d * d))
        }
        ModelKind::S2xS2 => {
            let a = D::one() + x[0] * x[0] + x[1] * x[1];
            let b = D::one() + x[2] * x[2] + x[3] * x[3];
            let fa = c::<D>(4.0) / (a * a);
            let fb = c::<D>(4.0) / (b * b);
            let mut g = conformal(fa);
            g[2][2] = fb;
            g[3][3] = fb;
            g
        }
        ModelKind::Cp2 => fubini_study(x),
    }
}

/// Real part of `h_{ab̄} = δ_ab/(1+|z|²) − z̄_a z_b/(1+|z|²)²` with `z_a = x_{2a−1} + i x_{2a}`.
fn fubini_study<D: Scalar>(x: &[D; 4]) -> Mat4<D> {
    let p = [x[0], x[2]];
    let q = [x[1], x[3]];
    let s = D::one() + p[0] * p[0] + q[0] * q[0] + p[1] * p[1] + q[1] * q[1];
    let s2 = s * s;
    let mut g = zeros();
    for a in 0..2 {
        for b in 0..2 {
            let delta = if a == b { s.recip() } else { D::zero() };
            let re = delta - (p[a] * p[b] + q[a] * q[b]) / s2;
            let im = -(p[a] * q[b] - q[a] * p[b]) / s2;
            let (xa, ya, xb, yb) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
            g[xa][xb] = re;
            g[ya][yb] = re;
            g[xa][yb] = im;
            g[ya][xb] = -im;
        }
    }
    g
}

fn zeros<D: Scalar>() -> Mat4<D> {
    [[D::zero(); 4]; 4]
}

/// Uniform sample from the ball of the given radius.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Point4 {
    loop {
        let x: Point4 = std::array::from_fn(|_| rng.random_range(-radius..radius));
        if x.iter().map(|v| v * v).sum::<f64>() < radius * radius {
            return x;
        }
    }
}

/// Metric components with first and second partials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricJet {
    pub g: Mat4,
    /// `dg[k][i][j] = ∂_k g_ij`.
    pub dg: [Mat4; 4],
    /// `ddg[l][k][i][j] = ∂_l ∂_k g_ij`.
    pub ddg: [[Mat4; 4]; 4],
    pub point: Point4,
}

impl MetricJet {
    pub fn is_finite(&self) -> bool {
        self.g.iter().flatten().all(|v| v.is_finite())
            && self.dg.iter().flatten().flatten().all(|v| v.is_finite())
            && self.ddg.iter().flatten().flatten().flatten().all(|v| v.is_finite())
    }

    /// Largest componentwise difference relative to the largest component of `other`.
    pub fn relative_difference(&self, other: &MetricJet) -> f64 {
        fn rel(a: &[f64], b: &[f64]) -> f64 {
            let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
        }
        let flat = |j: &MetricJet| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
            (
                j.g.iter().flatten().copied().collect(),
                j.dg.iter().flatten().flatten().copied().collect(),
                j.ddg.iter().flatten().flatten().flatten().copied().collect(),
            )
        };
        let (a0, a1, a2) = flat(self);
        let (b0, b1, b2) = flat(other);
        let d1 = if b1.iter().all(|v| v.abs() < 1e-300) {
            0.0
        } else {
            rel(&a1, &b1)
        };
        let d2 = if b2.iter().all(|v| v.abs() < 1e-300) {
            0.0
        } else {
            rel(&a2, &b2)
        };
        rel(&a0, &b0).max(d1).max(d2)
    }
}

/// Model selection as read from a key-value configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub model: String,
    pub scale: f64,
    pub reversed: bool,
    pub margin: f64,
    pub h: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            model: "sphere4".into(),
            scale: 1.0,
            reversed: false,
            margin: 0.05,
            h: Scheme::DEFAULT_STEP,
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelMetric> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Argument(format!("scale must be positive, got {}", self.scale)));
        }
        if !(self.h > 0.0) {
            return Err(Error::Argument(format!("step must be positive, got {}", self.h)));
        }
        let mut m = ModelMetric::new(self.model.parse()?).with_scale(self.scale);
        m.reversed = self.reversed;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix4, SymmetricEigen};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn eye(s: f64) -> Mat4 {
        std::array::from_fn(|i| std::array::from_fn(|j| if i == j { s } else { 0.0 }))
    }

    #[test]
    fn origin_values() {
        let o = [0.0; 4];
        assert_eq!(
            ModelMetric::new(ModelKind::Sphere4).evaluate_metric(&o).unwrap(),
            eye(4.0)
        );
        assert_eq!(
            ModelMetric::new(ModelKind::Hyperbolic4).evaluate_metric(&o).unwrap(),
            eye(4.0)
        );
        assert_eq!(
            ModelMetric::new(ModelKind::Flat)
                .evaluate_metric(&[0.3, -2.0, 5.0, 1.0])
                .unwrap(),
            eye(1.0)
        );
        assert_eq!(ModelMetric::new(ModelKind::Cp2).evaluate_metric(&o).unwrap(), eye(1.0));
        assert_eq!(
            ModelMetric::new(ModelKind::Sphere4)
                .with_scale(2.0)
                .evaluate_metric(&o)
                .unwrap(),
            eye(16.0)
        );
    }

    #[test]
    fn domain_errors() {
        let h = ModelMetric::new(ModelKind::Hyperbolic4);
        assert!(matches!(
            h.evaluate_metric(&[1.2, 0.0, 0.0, 0.0]),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            h.metric_jet(&[0.9995, 0.0, 0.0, 0.0], Scheme::FiniteDifference(1e-3)),
            Err(Error::Margin { .. })
        ));
        assert!(h.metric_jet(&[0.9995, 0.0, 0.0, 0.0], Scheme::Analytic).is_ok());
    }

    #[test]
    fn flat_and_origin_jets() {
        let j = ModelMetric::new(ModelKind::Flat)
            .metric_jet(&[0.5, 1.0, -1.0, 2.0], Scheme::Analytic)
            .unwrap();
        assert!(j.dg.iter().flatten().flatten().all(|v| *v == 0.0));
        assert!(j.ddg.iter().flatten().flatten().flatten().all(|v| *v == 0.0));
        let j = ModelMetric::new(ModelKind::Sphere4)
            .metric_jet(&[0.0; 4], Scheme::Analytic)
            .unwrap();
        assert!(j.dg.iter().flatten().flatten().all(|v| *v == 0.0));
    }

    /// Closed-form derivatives of `f(r²) = 4/(1+r²)²` as the oracle.
    #[test]
    fn sphere_jet_matches_conformal_factor_derivatives() {
        let p = [0.3, 0.0, 0.0, 0.0];
        let m = ModelMetric::new(ModelKind::Sphere4);
        let f = |x: f64| 4.0 / (1.0 + x * x).powi(2);
        let fp = |x: f64| -16.0 * x / (1.0 + x * x).powi(3);
        let fpp = |x: f64| -16.0 / (1.0 + x * x).powi(3) + 96.0 * x * x / (1.0 + x * x).powi(4);
        // along the x¹ axis only the first coordinate carries a gradient
        let exact = m.metric_jet(&p, Scheme::Analytic).unwrap();
        let fdj = m.metric_jet(&p, Scheme::FiniteDifference(1e-3)).unwrap();
        for j in [exact, fdj] {
            assert!((j.g[0][0] - f(0.3)).abs() < 1e-14);
            assert!((j.dg[0][1][1] - fp(0.3)).abs() < 1e-8 * fp(0.3).abs());
            assert!((j.ddg[0][0][2][2] - fpp(0.3)).abs() < 1e-8 * fpp(0.3).abs());
            assert!(j.dg[1][0][0].abs() < 1e-9);
            // transverse second derivative: ∂₂∂₂ f = 2 f'(r²) = −16/(1+r²)³
            let want = -16.0 / (1.0f64 + 0.09).powi(3);
            assert!((j.ddg[1][1][0][0] - want).abs() < 1e-8 * want.abs());
        }
        assert!(fdj.relative_difference(&exact) < 1e-8);
    }

    #[test]
    fn fd_and_analytic_jets_agree_on_all_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in ModelKind::ALL {
            for model in [ModelMetric::new(kind), ModelMetric::new(kind).reversed()] {
                for _ in 0..100 {
                    let p = model.sample_point(&mut rng);
                    let a = model.metric_jet(&p, Scheme::Analytic).unwrap();
                    let f = model.metric_jet(&p, Scheme::default_fd()).unwrap();
                    let d = f.relative_difference(&a);
                    assert!(d < 1e-6, "{kind} at {p:?}: {d}");
                }
            }
        }
    }

    #[test]
    fn metrics_are_positive_and_s2xs2_is_block_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in ModelKind::ALL {
            let m = ModelMetric::new(kind);
            for _ in 0..100 {
                let p = m.sample_point(&mut rng);
                let g = m.evaluate_metric(&p).unwrap();
                let e = SymmetricEigen::new(Matrix4::from_fn(|i, j| g[i][j])).eigenvalues;
                assert!(e.iter().all(|&l| l > 0.0));
                for i in 0..4 {
                    for j in 0..4 {
                        assert_eq!(g[i][j], g[j][i]);
                        if kind == ModelKind::S2xS2 && (i < 2) != (j < 2) {
                            assert_eq!(g[i][j], 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn jets_have_index_symmetries() {
        let m = ModelMetric::new(ModelKind::Cp2);
        let j = m.metric_jet(&[0.2, -0.4, 0.7, 0.1], Scheme::Analytic).unwrap();
        for k in 0..4 {
            for l in 0..4 {
                for a in 0..4 {
                    for b in 0..4 {
                        assert_eq!(j.dg[k][a][b], j.dg[k][b][a]);
                        assert_eq!(j.ddg[k][l][a][b], j.ddg[l][k][a][b]);
                        assert_eq!(j.ddg[k][l][a][b], j.ddg[k][l][b][a]);
                    }
                }
            }
        }
    }

    #[test]
    fn config_builds_models() {
        let cfg = ModelConfig {
            model: "cp2".into(),
            reversed: true,
            ..Default::default()
        };
        let m = cfg.build().unwrap();
        assert_eq!(m.kind, ModelKind::Cp2);
        assert!(m.reversed);
        assert!(ModelConfig {
            model: "torus".into(),
            ..Default::default()
        }
        .build()
        .is_err());
        assert!(ModelConfig {
            scale: -1.0,
            ..Default::default()
        }
        .build()
        .is_err());
    }
}
